#include <iostream>

#include "CLI11.hpp"
#include "synthaction/cli/commands.hpp"

using namespace synthaction;

int main(int argc, char** argv) {
    CLI::App app{"Synthetic pose-clip generation and action-recognition experiments", "synthaction"};
    app.set_version_flag("--version", std::string(kToolVersion));
    app.set_config("--config", "", "flat key=value file; subcommand keys take a '<subcommand>.' prefix");
    app.allow_config_extras(false);
    app.require_subcommand(1);
    app.fallthrough();

    std::string root_flag;
    std::string out_flag;
    cli::CommonOptions common;
    common.jobs = default_jobs();
    app.add_option("--root", root_flag, "dataset root (default $SYNTHACTION_ROOT, else ./data)");
    app.add_option("--out", out_flag, "output directory (default <root>/results)");
    app.add_option("--seed", common.seed, "master seed")->capture_default_str();
    app.add_option("--jobs", common.jobs, "worker threads; outputs do not depend on it")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.add_flag("--replay", common.replay, "render clips in memory instead of reading frames from disk");

    cli::GenOptions gen;
    auto* gen_cmd = app.add_subcommand("gen", "render a difficulty level and write its manifest");
    gen_cmd->add_option("--level", gen.level, "profile name")->capture_default_str();
    gen_cmd->add_option("--styles", gen.styles, "avatar styles per label")->capture_default_str();
    gen_cmd->add_option("--cameras", gen.cameras, "cameras per style")->capture_default_str();
    gen_cmd->add_option("--frames", gen.frames, "frames per clip")->capture_default_str();
    gen_cmd->add_option("--size", gen.size, "frame width and height")->capture_default_str();
    gen_cmd->add_option("--profiles", gen.profiles, "profile definitions file")->check(CLI::ExistingFile);
    gen_cmd->add_flag("--overwrite", gen.overwrite, "replace an existing dataset");
    gen_cmd->add_flag("--dry-run", gen.dry_run, "write the manifest without rendering frames");

    cli::RunOptions run;
    auto* run_cmd = app.add_subcommand("run", "extract features, train and evaluate");
    run_cmd->add_option("--matrix", run.matrix, "baseline | table2-classic")
        ->check(CLI::IsMember(eval::matrix_names()));
    run_cmd->add_option("--level", run.level, "level of a single experiment")->capture_default_str();
    run_cmd->add_option("--filter", run.filter, "feature chain of a single experiment")->capture_default_str();
    run_cmd->add_option("--model", run.model, "svm | logistic | gbt")->capture_default_str();
    run_cmd->add_option("--label-mode", run.label_mode, "action | action_plus_type (default both)");
    run_cmd->add_flag("!--no-features", run.save_features, "skip writing feature matrices");
    run_cmd->add_flag("!--no-models", run.save_models, "skip writing model files");

    cli::SearchOptions search;
    auto* search_cmd = app.add_subcommand("search", "grid-search hyper-parameters on the validation split");
    search_cmd->add_option("--model", search.model, "svm | logistic | gbt")->capture_default_str();
    search_cmd->add_option("--level", search.level, "level")->capture_default_str();
    search_cmd->add_option("--filter", search.filter, "feature chain")->capture_default_str();

    cli::TsneOptions tsne;
    auto* tsne_cmd = app.add_subcommand("tsne", "embed chain features in 2-D and plot them by action");
    tsne_cmd->add_option("--level", tsne.level, "level")->capture_default_str();
    tsne_cmd->add_option("--filter", tsne.filter, "feature chain")->capture_default_str();
    tsne_cmd->add_option("--perplexity", tsne.perplexity, "t-SNE perplexity")->capture_default_str();
    tsne_cmd->add_option("--iterations", tsne.iterations, "gradient steps")->capture_default_str();
    tsne_cmd->add_option("--max-points", tsne.max_points, "label-stratified subsample size")->capture_default_str();

    auto* report_cmd = app.add_subcommand("report", "print the results table from <out>/results.csv");

    cli::InspectOptions inspect;
    auto* inspect_cmd = app.add_subcommand("inspect", "print a clip's manifest entry and dump its stage images");
    inspect_cmd->add_option("clip_id", inspect.clip_id, "clip identifier")->required();
    inspect_cmd->add_option("--level", inspect.level, "restrict the search to one level");

    CLI11_PARSE(app, argc, argv);

    common.root = cli::resolve_root(root_flag);
    common.out = out_flag;
    try {
        if (*gen_cmd) return cli::cmd_gen(common, gen, std::cout, std::cerr);
        if (*run_cmd) return cli::cmd_run(common, run, std::cout, std::cerr);
        if (*search_cmd) return cli::cmd_search(common, search, std::cout, std::cerr);
        if (*tsne_cmd) return cli::cmd_tsne(common, tsne, std::cout, std::cerr);
        if (*report_cmd) return cli::cmd_report(common, std::cout, std::cerr);
        if (*inspect_cmd) return cli::cmd_inspect(common, inspect, std::cout, std::cerr);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
