#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>
#include <sys/wait.h>

#include "synthaction/cli/commands.hpp"
#include "test_support.hpp"

using namespace synthaction;
using namespace synthaction::cli;
namespace fs = std::filesystem;

namespace {

int shell(const std::string& cmd) {
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string tool() { return SYNTHACTION_CLI_PATH; }

std::size_t line_count(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

// Manifest-only easy level, 5 clips per label (3/1/1 split), read back by replay.
class ReplayRoot : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        tmp_ = new test::TempDir;
        CommonOptions c = common();
        GenOptions g;
        g.styles = 1;
        g.dry_run = true;
        std::ostringstream out, err;
        ASSERT_EQ(cmd_gen(c, g, out, err), 0);
    }
    static void TearDownTestSuite() {
        delete tmp_;
        tmp_ = nullptr;
    }
    static CommonOptions common(const std::string& out_name = "results", unsigned jobs = 1) {
        CommonOptions c;
        c.root = tmp_->path() / "data";
        c.out = tmp_->path() / out_name;
        c.replay = true;
        c.jobs = jobs;
        return c;
    }
    static test::TempDir* tmp_;
};

test::TempDir* ReplayRoot::tmp_ = nullptr;

}  // namespace

TEST(Gen, DryRunCountsAtDeskAndFullScale) {
    test::TempDir tmp;
    CommonOptions c;
    c.root = tmp.path();
    GenOptions g;
    g.dry_run = true;
    std::ostringstream out, err;
    ASSERT_EQ(cmd_gen(c, g, out, err), 0);
    EXPECT_NE(out.str().find("level=easy clips=2000 labels=40 clips_per_label=50 clips_per_action=200 frames_written=0"),
              std::string::npos)
        << out.str();
    g.level = "hard";
    g.styles = 25;
    g.cameras = 20;
    std::ostringstream out2;
    ASSERT_EQ(cmd_gen(c, g, out2, err), 0);
    EXPECT_NE(out2.str().find("clips=20000 labels=40 clips_per_label=500 clips_per_action=2000"), std::string::npos);
    EXPECT_FALSE(fs::exists(tmp.path() / "hard" / scene::clip_id_for(0, 0, 0, 0)));
}

TEST(Gen, WritesFramesAndRefusesToOverwrite) {
    test::TempDir tmp;
    CommonOptions c;
    c.root = tmp.path();
    GenOptions g;
    g.styles = 1;
    g.cameras = 1;
    g.frames = 6;
    g.size = 64;
    std::ostringstream out, err;
    ASSERT_EQ(cmd_gen(c, g, out, err), 0);
    EXPECT_NE(out.str().find("clips=40 labels=40 clips_per_label=1 clips_per_action=4 frames_written=240"),
              std::string::npos);
    EXPECT_NE(err.str().find("rendered 40/40 clips"), std::string::npos);
    // manifest.jsonl, profile.cfg and the frames
    EXPECT_EQ(test::tree_file_count(tmp.path() / "easy"), 2u + 240u);
    EXPECT_ANY_THROW(cmd_gen(c, g, out, err));
    g.overwrite = true;
    EXPECT_EQ(cmd_gen(c, g, out, err), 0);
    g.styles = 0;
    EXPECT_THROW(cmd_gen(c, g, out, err), InvalidArgument);
}

TEST(Gen, ProfilesFileOverridesBuiltins) {
    test::TempDir tmp;
    auto profiles = scene::builtin_profiles();
    profiles[0].name = "custom";
    write_file_bytes(tmp.path() / "profiles.cfg", scene::format_profiles(profiles));
    CommonOptions c;
    c.root = tmp.path();
    GenOptions g;
    g.level = "custom";
    g.profiles = tmp.path() / "profiles.cfg";
    g.dry_run = true;
    std::ostringstream out, err;
    ASSERT_EQ(cmd_gen(c, g, out, err), 0);
    EXPECT_TRUE(fs::exists(scene::manifest_path(tmp.path(), "custom")));
    g.level = "nope";
    EXPECT_THROW(cmd_gen(c, g, out, err), InvalidArgument);
}

TEST(Root, FlagThenEnvironmentThenDefault) {
    ::unsetenv(kRootEnv);
    EXPECT_EQ(resolve_root(""), fs::path("data"));
    ::setenv(kRootEnv, "/tmp/from_env", 1);
    EXPECT_EQ(resolve_root(""), fs::path("/tmp/from_env"));
    EXPECT_EQ(resolve_root("given"), fs::path("given"));
    ::unsetenv(kRootEnv);
}

TEST(Run, MissingDatasetIsNamed) {
    test::TempDir tmp;
    CommonOptions c;
    c.root = tmp.path();
    std::ostringstream out, err;
    try {
        cmd_run(c, RunOptions{}, out, err);
        FAIL() << "expected an error";
    } catch (const IoError& e) {
        EXPECT_NE(std::string(e.what()).find("manifest"), std::string::npos) << e.what();
    }
}

TEST(Report, EmptyTableWithoutRuns) {
    test::TempDir tmp;
    CommonOptions c;
    c.root = tmp.path();
    std::ostringstream out, err;
    EXPECT_EQ(cmd_report(c, out, err), 0);
    EXPECT_EQ(line_count(out.str()), 2u);
    EXPECT_NE(out.str().find("Model"), std::string::npos);
    EXPECT_FALSE(fs::exists(c.out_dir()));
}

TEST_F(ReplayRoot, BaselineWritesArtifactsAndIsRepeatable) {
    RunOptions r;
    r.matrix = "baseline";
    std::ostringstream out, err;
    ASSERT_EQ(cmd_run(common("run_a"), r, out, err), 0);
    const fs::path a = tmp_->path() / "run_a";
    const auto rows = eval::parse_results_csv(read_file_bytes(a / "results.csv"));
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].n_train + rows[0].n_val + rows[0].n_test, 200u);
    EXPECT_EQ(rows[0].n_test, 40u);
    // one table line for (SVM, Downsize)
    EXPECT_EQ(line_count(out.str()), 3u);
    EXPECT_NE(out.str().find("SVM       Downsize"), std::string::npos);
    EXPECT_EQ(read_file_bytes(a / "table.txt"), out.str());
    for (const char* f : {"results.csv", "table.txt", "confusion_easy_downsize_svm_action.csv",
                          "f1_easy_downsize_svm_at.csv", "predictions_easy_downsize_svm_action.csv",
                          "models/easy_downsize_svm_action.mdl", "features/easy_downsize.fmx",
                          "features/easy_downsize.labels.csv"}) {
        EXPECT_TRUE(fs::exists(a / f)) << f;
        const std::string prov = read_file_bytes(a / (std::string(f) + ".prov"));
        EXPECT_NE(prov.find("seed=7"), std::string::npos) << f;
        EXPECT_NE(prov.find("config="), std::string::npos) << f;
    }
    EXPECT_TRUE(fs::exists(a / "timings.csv"));
    EXPECT_FALSE(fs::exists(a / "timings.csv.prov"));
    const auto model = classify::read_model(a / "models/easy_downsize_svm_at.mdl");
    EXPECT_EQ(model.vocab.size(), 40u);
    const auto fmx = features::read_fmx(a / "features/easy_downsize.fmx");
    EXPECT_EQ(fmx.rows, 200u);
    EXPECT_EQ(fmx.cols, 31u * 31u);

    std::ostringstream out2, err2;
    ASSERT_EQ(cmd_run(common("run_b", 3), r, out2, err2), 0);
    EXPECT_EQ(test::tree_digest(a, "timings.csv"), test::tree_digest(tmp_->path() / "run_b", "timings.csv"));

    std::ostringstream rep, rep_err;
    auto c = common("run_a");
    EXPECT_EQ(cmd_report(c, rep, rep_err), 0);
    EXPECT_EQ(rep.str(), out.str());
}

TEST_F(ReplayRoot, SingleExperimentHonorsLabelMode) {
    RunOptions r;
    r.model = "gbt";
    r.label_mode = "action";
    r.save_features = false;
    r.save_models = false;
    std::ostringstream out, err;
    ASSERT_EQ(cmd_run(common("single"), r, out, err), 0);
    const fs::path d = tmp_->path() / "single";
    const auto rows = eval::parse_results_csv(read_file_bytes(d / "results.csv"));
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0].label_mode, eval::LabelMode::Action);
    EXPECT_EQ(rows[0].params, "learning_rate=0.1 max_depth=3 n_estimators=100");
    EXPECT_FALSE(fs::exists(d / "models"));
    EXPECT_FALSE(fs::exists(d / "features"));
    r.label_mode = "both";
    EXPECT_THROW(cmd_run(common("single"), r, out, err), InvalidArgument);
}

TEST_F(ReplayRoot, SearchPrintsSelectedParamsRow) {
    SearchOptions s;
    s.level = "easy";
    s.filter = "downsize";
    std::ostringstream out, err;
    ASSERT_EQ(cmd_search(common("search"), s, out, err), 0);
    const fs::path d = tmp_->path() / "search";
    const std::string csv = read_file_bytes(d / "search_easy_downsize_svm.csv");
    EXPECT_EQ(line_count(csv), 21u);
    std::size_t selected = 0;
    std::istringstream in(csv);
    std::string line;
    while (std::getline(in, line)) selected += line.size() > 2 && line.substr(line.size() - 2) == ",1";
    EXPECT_EQ(selected, 1u);
    EXPECT_NE(csv.find("C=1 gamma=0.01 kernel=rbf max_iter=50,"), std::string::npos);
    const std::string txt = out.str();
    EXPECT_EQ(txt.rfind("Model     Filter            Action  A+T     Parameters\nSVM       Downsize", 0), 0u) << txt;
    EXPECT_NE(txt.find("kernel=rbf"), std::string::npos);
    EXPECT_NE(txt.find("default parameters: action "), std::string::npos);
    EXPECT_EQ(read_file_bytes(d / "search_easy_downsize_svm.txt"), txt);
}

TEST_F(ReplayRoot, TsneWritesPlotAndCoordinates) {
    TsneOptions t;
    t.filter = "downsize";
    t.perplexity = 10;
    t.iterations = 300;
    std::ostringstream out, err;
    ASSERT_EQ(cmd_tsne(common("tsne"), t, out, err), 0);
    const fs::path d = tmp_->path() / "tsne";
    const auto img = read_ppm(d / "tsne_easy.ppm");
    EXPECT_EQ(img.height, 600);
    EXPECT_TRUE(fs::exists(d / "tsne_easy.ppm.prov"));
    const std::string csv = read_file_bytes(d / "tsne_easy.csv");
    EXPECT_EQ(line_count(csv), 201u);
    EXPECT_EQ(csv.rfind("clip_id,action,x,y\n", 0), 0u);
    EXPECT_NE(out.str().find("level=easy points=200 silhouette="), std::string::npos) << out.str();
}

TEST(Inspect, WritesStageImagesAndReportsMissingClips) {
    test::TempDir tmp;
    CommonOptions c;
    c.root = tmp.path();
    GenOptions g;
    g.styles = 1;
    g.cameras = 1;
    g.frames = 6;
    g.size = 96;
    std::ostringstream out, err;
    ASSERT_EQ(cmd_gen(c, g, out, err), 0);
    const auto m = scene::load_dataset_manifest(tmp.path(), "easy");
    InspectOptions io;
    io.clip_id = m.entries[5].clip_id;
    std::ostringstream info;
    ASSERT_EQ(cmd_inspect(c, io, info, err), 0);
    const std::string first = info.str().substr(0, info.str().find('\n'));
    const auto j = nlohmann::json::parse(first);
    EXPECT_EQ(j.at("clip_id"), io.clip_id);
    EXPECT_NE(info.str().find("level=easy mid_frame=3 hog_length=86436"), std::string::npos) << info.str();
    for (const char* f : {"mid_frame.ppm", "crop.pgm", "downsize.pgm", "skeleton.pgm", "bgsub.pgm", "hog.pgm"})
        EXPECT_TRUE(fs::exists(c.out_dir() / "inspect" / io.clip_id / f)) << f;
    EXPECT_EQ(read_pgm(c.out_dir() / "inspect" / io.clip_id / "crop.pgm").width, 156);
    io.clip_id = "no_such_clip";
    std::ostringstream none, none_err;
    EXPECT_EQ(cmd_inspect(c, io, none, none_err), 2);
    EXPECT_NE(none_err.str().find("no_such_clip"), std::string::npos);
}

TEST(Binary, HelpVersionAndUnknownFlags) {
    test::TempDir tmp;
    const std::string quiet = " >/dev/null 2>&1";
    EXPECT_EQ(shell(tool() + " --help" + quiet), 0);
    EXPECT_EQ(shell(tool() + " gen --help" + quiet), 0);
    EXPECT_EQ(shell(tool() + " --version" + quiet), 0);
    const std::string root = (tmp.path() / "r").string();
    EXPECT_NE(shell(tool() + " --root " + root + " gen --dry-run --bogus" + quiet), 0);
    EXPECT_FALSE(fs::exists(root));
    EXPECT_NE(shell(tool() + quiet), 0);
    EXPECT_NE(shell(tool() + " --root " + root + " run --matrix nope" + quiet), 0);
    EXPECT_FALSE(fs::exists(root));
}

TEST(Binary, ConfigFileWithFlagPrecedence) {
    test::TempDir tmp;
    const fs::path cfg = tmp.path() / "run.cfg";
    write_file_bytes(cfg, "root=" + (tmp.path() / "cfgroot").string() + "\nseed=11\ngen.level=medium\ngen.dry-run=true\n"
                          "gen.styles=2\n");
    const fs::path out = tmp.path() / "out.txt";
    ASSERT_EQ(shell(tool() + " --config " + cfg.string() + " gen > " + out.string() + " 2>/dev/null"), 0);
    EXPECT_NE(read_file_bytes(out).find("level=medium clips=400"), std::string::npos) << read_file_bytes(out);
    EXPECT_EQ(scene::load_dataset_manifest(tmp.path() / "cfgroot", "medium").seed, 11u);
    ASSERT_EQ(shell(tool() + " --config " + cfg.string() + " --seed 12 gen --level hard --styles 1 > " +
                    out.string() + " 2>/dev/null"),
              0);
    EXPECT_NE(read_file_bytes(out).find("level=hard clips=200"), std::string::npos);
    EXPECT_EQ(scene::load_dataset_manifest(tmp.path() / "cfgroot", "hard").seed, 12u);
    write_file_bytes(cfg, "no_such_key=1\n");
    EXPECT_NE(shell(tool() + " --config " + cfg.string() + " report >/dev/null 2>&1"), 0);
}

TEST(Binary, EnvironmentRootAndReportExitZero) {
    test::TempDir tmp;
    const fs::path out = tmp.path() / "out.txt";
    ASSERT_EQ(shell("SYNTHACTION_ROOT=" + tmp.path().string() + " " + tool() + " gen --dry-run --styles 1 --cameras 1 > " +
                    out.string() + " 2>/dev/null"),
              0);
    EXPECT_TRUE(fs::exists(scene::manifest_path(tmp.path(), "easy")));
    EXPECT_EQ(shell("SYNTHACTION_ROOT=" + tmp.path().string() + " " + tool() + " report > " + out.string() +
                    " 2>/dev/null"),
              0);
    EXPECT_EQ(line_count(read_file_bytes(out)), 2u);
}
