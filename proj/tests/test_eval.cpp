#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "synthaction/eval/analysis.hpp"
#include "synthaction/eval/matrix.hpp"
#include "synthaction/eval/report.hpp"
#include "synthaction/eval/search.hpp"
#include "synthaction/rng.hpp"

using namespace synthaction;
using namespace synthaction::eval;
using features::FeatureMatrix;

namespace {

std::map<int, std::array<int, 3>> per_label_counts(const std::vector<scene::ManifestEntry>& entries,
                                                   const SplitAssignment& s) {
    std::map<int, std::array<int, 3>> out;
    for (std::size_t i = 0; i < entries.size(); ++i) ++out[entries[i].label()][static_cast<int>(s.part[i])];
    return out;
}

FeatureMatrix gaussian(std::size_t rows, std::size_t cols, std::uint64_t seed, double shift = 0) {
    Rng rng(seed, {});
    FeatureMatrix m(rows, cols);
    for (auto& v : m.data) v = static_cast<float>(rng.normal() + shift);
    return m;
}

// Mean silhouette by brute force over Euclidean distances.
double silhouette_oracle(const std::vector<std::array<double, 2>>& p, const std::vector<int>& lab) {
    const std::size_t n = p.size();
    double total = 0;
    for (std::size_t i = 0; i < n; ++i) {
        std::map<int, std::pair<double, int>> by;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            auto& b = by[lab[j]];
            b.first += std::hypot(p[i][0] - p[j][0], p[i][1] - p[j][1]);
            ++b.second;
        }
        if (by[lab[i]].second == 0) continue;
        const double a = by[lab[i]].first / by[lab[i]].second;
        double b = 1e300;
        for (const auto& [l, s] : by)
            if (l != lab[i] && s.second > 0) b = std::min(b, s.first / s.second);
        total += (b - a) / std::max(a, b);
    }
    return total / static_cast<double>(n);
}

class SmallLevel : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        wb_ = new Workbench(WorkbenchOptions{});
        // 10 clips per label: 8/1/1 per label, 320/40/40 overall
        wb_->add_level("easy", scene::plan_dataset(scene::easy_profile(), 2, 5, 7),
                       std::make_shared<scene::RenderClipSource>());
    }
    static void TearDownTestSuite() {
        delete wb_;
        wb_ = nullptr;
    }
    static Workbench* wb_;
};

Workbench* SmallLevel::wb_ = nullptr;

}  // namespace

TEST(Split, FiveHundredPerLabelIs400_50_50) {
    const auto m = scene::plan_dataset(scene::easy_profile(), 25, 20, 7);
    const auto s = split(m.entries, 7);
    const auto counts = per_label_counts(m.entries, s);
    ASSERT_EQ(counts.size(), 40u);
    for (const auto& [label, c] : counts) EXPECT_EQ(c, (std::array<int, 3>{400, 50, 50})) << label;
}

TEST(Split, TwentyPerLabelIs16_2_2AndDeterministic) {
    const auto m = scene::plan_dataset(scene::medium_profile(), 4, 5, 7);
    const auto s = split(m.entries, 3);
    for (const auto& [label, c] : per_label_counts(m.entries, s)) EXPECT_EQ(c, (std::array<int, 3>{16, 2, 2}));
    EXPECT_EQ(split(m.entries, 3).part, s.part);
    EXPECT_NE(split(m.entries, 4).part, s.part);
    EXPECT_EQ(s.count(Part::Train) + s.count(Part::Val) + s.count(Part::Test), m.entries.size());
    EXPECT_THROW(split({}, 1), InvalidArgument);
}

TEST(Split, RoundingKeepsRatioWithinOneClip) {
    for (int n = 1; n <= 60; ++n) {
        const int h = holdout_size(n);
        EXPECT_LE(std::abs(h - n / 10.0), 0.5 + 1e-12) << n;
        EXPECT_GE(n - 2 * h, 0);
    }
}

TEST(Metrics, HandComputedExample) {
    const auto m = compute_metrics({0, 0, 1, 1, 2}, {0, 1, 1, 1, 0}, {0, 1, 2});
    EXPECT_EQ(m.confusion, (std::vector<std::vector<long>>{{1, 1, 0}, {0, 2, 0}, {1, 0, 0}}));
    EXPECT_DOUBLE_EQ(m.accuracy, 0.6);
    EXPECT_DOUBLE_EQ(m.per_class[0].precision, 0.5);
    EXPECT_DOUBLE_EQ(m.per_class[0].recall, 0.5);
    EXPECT_DOUBLE_EQ(m.per_class[1].precision, 2.0 / 3);
    EXPECT_DOUBLE_EQ(m.per_class[1].recall, 1.0);
    EXPECT_DOUBLE_EQ(m.per_class[1].f1, 0.8);
    EXPECT_EQ(m.per_class[2].f1, 0.0);
    EXPECT_DOUBLE_EQ(m.macro_f1, (0.5 + 0.8 + 0) / 3);
    EXPECT_DOUBLE_EQ(m.weighted_f1, (2 * 0.5 + 2 * 0.8) / 5);
    EXPECT_THROW(compute_metrics({0}, {5}, {0, 1}), InvalidArgument);
    EXPECT_THROW(compute_metrics({0}, {}, {0, 1}), InvalidArgument);
}

TEST(Metrics, ConfusionInvariants) {
    Rng rng(1, {});
    std::vector<int> classes(40);
    std::iota(classes.begin(), classes.end(), 0);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<int> t, p;
        for (int i = 0; i < 300; ++i) {
            t.push_back(static_cast<int>(rng.below(40)));
            p.push_back(rng.uniform() < 0.4 ? t.back() : static_cast<int>(rng.below(40)));
        }
        const auto m = compute_metrics(t, p, classes);
        long total = 0, trace = 0;
        double mean_f1 = 0;
        for (std::size_t c = 0; c < 40; ++c) {
            const long row = std::accumulate(m.confusion[c].begin(), m.confusion[c].end(), 0L);
            EXPECT_EQ(row, m.per_class[c].support);
            EXPECT_EQ(row, std::count(t.begin(), t.end(), static_cast<int>(c)));
            total += row;
            trace += m.confusion[c][c];
            mean_f1 += m.per_class[c].f1;
        }
        EXPECT_EQ(total, 300);
        EXPECT_DOUBLE_EQ(m.accuracy, static_cast<double>(trace) / 300);
        EXPECT_NEAR(m.macro_f1, mean_f1 / 40, 1e-12);
    }
}

TEST(Metrics, CoarseAccuracyDominatesFine) {
    Rng rng(2, {});
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<int> t, p, ta, pa;
        for (int i = 0; i < 50; ++i) {
            t.push_back(static_cast<int>(rng.below(40)));
            p.push_back(rng.uniform() < 0.3 ? t.back() : static_cast<int>(rng.below(40)));
            ta.push_back(action_of_label(t.back()));
            pa.push_back(action_of_label(p.back()));
        }
        ASSERT_GE(accuracy(ta, pa), accuracy(t, p));
    }
    EXPECT_EQ(action_of_label(39), 9);
    EXPECT_EQ(action_of_label(4), 1);
}

TEST(Search, GridsCoverReportedWinners) {
    const auto svm = default_grid(ModelKind::Svm);
    EXPECT_EQ(svm.size(), 20u);
    EXPECT_EQ(std::count(svm.begin(), svm.end(), ModelParams{classify::SvmParams{1.0, 0.01}}), 1);
    const auto lg = default_grid(ModelKind::Logistic);
    EXPECT_EQ(lg.size(), 5u);
    EXPECT_EQ(std::count(lg.begin(), lg.end(), ModelParams{classify::LogisticParams{0.03}}), 1);
    const auto gb = default_grid(ModelKind::Gbt);
    EXPECT_EQ(gb.size(), 8u);
    EXPECT_EQ(std::count(gb.begin(), gb.end(), ModelParams{classify::GbtParams{50, 2, 0.1, 0}}), 1);
}

TEST(Search, SelectsOracleAndBreaksTiesByOrder) {
    auto grid = default_grid(ModelKind::Svm);
    const ModelParams oracle = grid[13];
    // the oracle memorizes validation labels; everything else is near chance
    const Evaluator eval = [&](const ModelParams& p) {
        if (p == oracle) return 1.0;
        const auto& s = std::get<classify::SvmParams>(p);
        return 0.02 + 0.01 * s.c;
    };
    const auto table = score_grid(grid, eval);
    EXPECT_EQ(table[select_best(table)].params, oracle);
    Rng rng(3, {});
    for (int t = 0; t < 10; ++t) {
        rng.shuffle(grid);
        const auto shuffled = score_grid(grid, eval);
        EXPECT_EQ(shuffled[select_best(shuffled)].params, oracle);
    }
    const auto tied = score_grid(default_grid(ModelKind::Logistic), [](const ModelParams&) { return 0.5; });
    EXPECT_EQ(select_best(tied), 0u);
    EXPECT_THROW(score_grid({}, eval), InvalidArgument);
}

TEST(Tsne, SeparatedClustersStaySeparated) {
    FeatureMatrix x(60, 10);
    Rng rng(4, {});
    std::vector<int> labels;
    for (std::size_t r = 0; r < 60; ++r) {
        labels.push_back(r < 30 ? 0 : 1);
        for (std::size_t c = 0; c < 10; ++c) x.at(r, c) = static_cast<float>(rng.normal() + (r < 30 ? 0 : 50));
    }
    TsneParams p;
    p.perplexity = 10;
    const auto res = tsne_embed(x, p);
    std::array<std::array<double, 2>, 2> centroid{};
    for (std::size_t i = 0; i < 60; ++i)
        for (int d = 0; d < 2; ++d) centroid[static_cast<std::size_t>(labels[i])][static_cast<std::size_t>(d)] += res.points[i][static_cast<std::size_t>(d)] / 30;
    double spread = 0;
    for (std::size_t i = 0; i < 60; ++i) {
        const auto& c = centroid[static_cast<std::size_t>(labels[i])];
        spread += std::hypot(res.points[i][0] - c[0], res.points[i][1] - c[1]) / 60;
    }
    const double gap = std::hypot(centroid[0][0] - centroid[1][0], centroid[0][1] - centroid[1][1]);
    EXPECT_GT(gap, 5 * spread);
    EXPECT_LT(res.final_kl, res.initial_kl);
    EXPECT_GT(silhouette(res.points, labels), 0.5);
}

TEST(Tsne, DuplicateRowsCoincide) {
    auto x = gaussian(45, 6, 5);
    std::copy(x.row(3), x.row(3) + 6, x.row(17));
    TsneParams p;
    p.perplexity = 10;
    const auto res = tsne_embed(x, p);
    EXPECT_LT(std::hypot(res.points[3][0] - res.points[17][0], res.points[3][1] - res.points[17][1]), 1e-3);
    const auto again = tsne_embed(x, p);
    EXPECT_EQ(again.points, res.points);
}

TEST(Tsne, RejectsTooFewRows) {
    TsneParams p;
    EXPECT_THROW(tsne_embed(gaussian(89, 3, 6), p), InvalidArgument);
    EXPECT_NO_THROW(tsne_embed(gaussian(87, 3, 6), TsneParams{29, 20}));
}

TEST(Tsne, SilhouetteMatchesBruteForce) {
    Rng rng(7, {});
    std::vector<std::array<double, 2>> pts;
    std::vector<int> labels;
    for (int i = 0; i < 90; ++i) {
        labels.push_back(i % 3);
        pts.push_back({rng.normal() + 2 * (i % 3), rng.normal()});
    }
    EXPECT_NEAR(silhouette(pts, labels), silhouette_oracle(pts, labels), 1e-12);
}

TEST(Tsne, ScatterPlotColorsPoints) {
    const auto img = scatter_plot({{0, 0}, {1, 1}, {0.5, 0.2}}, {0, 1, 9}, 128);
    EXPECT_EQ(img.height, 128);
    EXPECT_GT(img.width, 128);
    std::set<std::array<std::uint8_t, 3>> colors;
    for (std::size_t i = 0; i < img.data.size(); i += 3) colors.insert({img.data[i], img.data[i + 1], img.data[i + 2]});
    for (int l : {0, 1, 9}) EXPECT_TRUE(colors.count(kPalette[static_cast<std::size_t>(l)])) << l;
    EXPECT_THROW(scatter_plot({{0, 0}}, {0, 1}), InvalidArgument);
}

TEST(EigenImages, IsotropicDataRendersNearEqualSpectrum) {
    const auto x = gaussian(4000, 16, 8);
    const auto pca = features::pca_fit(x, 16);
    EXPECT_LT(pca.eigenvalues.front() / pca.eigenvalues.back(), 1.6);
    for (double v : pca.eigenvalues) EXPECT_NEAR(v, 1.0, 0.25);
    const auto sheet = eigen_images(pca, 4, 4);
    EXPECT_EQ(sheet.width, 4 * 4 + 3 * 2);
    EXPECT_EQ(sheet.height, 4 * 4 + 3 * 2);
    EXPECT_THROW(eigen_images(pca, 4, 5), InvalidArgument);
}

TEST(EigenImages, ComponentTilesAreDistinct) {
    const auto x = gaussian(300, 12 * 12, 9);
    const auto pca = features::pca_fit(x, 16);
    const auto sheet = eigen_images(pca, 12, 12);
    std::vector<std::vector<float>> tiles;
    for (int i = 0; i < 16; ++i) {
        std::vector<float> t;
        const int ox = (i % 4) * 14, oy = (i / 4) * 14;
        for (int y = 0; y < 12; ++y)
            for (int xx = 0; xx < 12; ++xx) t.push_back(sheet.at(ox + xx, oy + y));
        const auto [lo, hi] = std::minmax_element(t.begin(), t.end());
        EXPECT_EQ(*lo, 0.f);
        EXPECT_EQ(*hi, 1.f);
        tiles.push_back(std::move(t));
    }
    for (std::size_t a = 0; a < 16; ++a)
        for (std::size_t b = a + 1; b < 16; ++b) {
            float diff = 0;
            for (std::size_t i = 0; i < tiles[a].size(); ++i) diff = std::max(diff, std::abs(tiles[a][i] - tiles[b][i]));
            EXPECT_GT(diff, 0.f) << a << "," << b;
        }
}

TEST(EigenImages, HogSheetNeedsHogVectors) {
    const auto x = gaussian(40, 36, 10);
    EXPECT_THROW(hog_eigen_images(features::pca_fit(x, 4)), InvalidArgument);
}

TEST(Leakage, FittedStateIgnoresTestRows) {
    ExtractedSet dense;
    dense.chain = Chain::Pca;
    dense.dense = gaussian(60, 40, 11);
    std::vector<std::size_t> train;
    for (std::size_t i = 0; i < 60; ++i)
        if (i % 5 != 0) train.push_back(i);
    const auto a = fit_chain(dense, train, 7);
    auto changed = dense;
    for (std::size_t i = 0; i < 60; i += 5)
        for (std::size_t c = 0; c < 40; ++c) changed.dense.at(i, c) += 100.f;
    const auto b = fit_chain(changed, train, 7);
    EXPECT_EQ(a.state_checksum(), b.state_checksum());
    EXPECT_NE(features::checksum(a.features), features::checksum(b.features));
    EXPECT_EQ(a.pca->k(), 40);

    ExtractedSet sift;
    sift.chain = Chain::SiftKmean;
    for (std::size_t i = 0; i < 60; ++i) sift.descriptors.push_back(gaussian(5 + i % 3, 128, 100 + i));
    const auto c = fit_chain(sift, train, 7, 16);
    for (std::size_t i = 0; i < 60; i += 5) sift.descriptors[i] = gaussian(9, 128, 500 + i, 3.0);
    const auto d = fit_chain(sift, train, 7, 16);
    EXPECT_EQ(c.state_checksum(), d.state_checksum());
    EXPECT_EQ(c.features.cols, 16u);
    for (std::size_t i = 0; i < 60; ++i)
        EXPECT_EQ(std::accumulate(c.features.row(i), c.features.row(i) + 16, 0.0), 5.0 + i % 3);
}

TEST(Leakage, PcaComponentCountFollowsTrainSize) {
    EXPECT_EQ(pca_components(1600, 6084), 256);
    EXPECT_EQ(pca_components(100, 6084), 100);
    EXPECT_EQ(pca_components(1600, 30), 30);
}

TEST(Analysis, StratifiedSubsetTakesEqualQuotas) {
    const auto m = scene::plan_dataset(scene::hard_profile(), 10, 5, 7);
    const auto rows = stratified_subset(m.entries, 1000);
    ASSERT_EQ(rows.size(), 1000u);
    std::map<int, int> per;
    for (auto i : rows) ++per[m.entries[i].label()];
    for (const auto& [l, n] : per) EXPECT_EQ(n, 25);
    EXPECT_TRUE(std::is_sorted(rows.begin(), rows.end()));
    EXPECT_EQ(stratified_subset(m.entries, 5000).size(), 2000u);
}

TEST(Report, CsvRoundTripAndSingleRowTable) {
    ResultRow r;
    r.level = "medium";
    r.chain = Chain::BgsubDownsize;
    r.model = ModelKind::Gbt;
    r.label_mode = LabelMode::ActionPlusType;
    r.n_train = 1600;
    r.n_val = r.n_test = 200;
    r.accuracy = 0.3125;
    r.action_accuracy = 0.5;
    r.params = classify::describe(classify::GbtParams{});
    r.feature_checksum = r.state_checksum = r.model_checksum = "00000000deadbeef";
    r.seed = 7;
    const auto csv = format_results_csv({r});
    const auto back = parse_results_csv(csv);
    ASSERT_EQ(back.size(), 1u);
    EXPECT_EQ(format_results_csv(back), csv);
    EXPECT_EQ(back[0].params, "learning_rate=0.1 max_depth=3 n_estimators=100");
    const auto table = format_table(back);
    EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 3);
    EXPECT_NE(table.find("GBT       BGSub|Downsize"), std::string::npos);
    EXPECT_NE(table.find("31.2%"), std::string::npos);
    EXPECT_THROW(parse_results_csv("bad,header\n"), IoError);
    EXPECT_TRUE(parse_results_csv("").empty());
    EXPECT_EQ(format_table({}).find("SVM"), std::string::npos);
}

TEST(Report, ProvenanceHashDependsOnKey) {
    EXPECT_EQ(config_hash("a=1\n", "x"), config_hash("a=1\n", "x"));
    EXPECT_NE(config_hash("a=1\n", "x"), config_hash("a=1\n", "y"));
    EXPECT_NE(config_hash("a=1\n", "x"), config_hash("a=2\n", "x"));
}

TEST(Matrix, BaselineAndClassicTable) {
    const auto base = matrix_specs("baseline", 7);
    ASSERT_EQ(base.size(), 2u);
    EXPECT_EQ(spec_key(base[0]), "easy_downsize_svm_action");
    EXPECT_EQ(spec_key(base[1]), "easy_downsize_svm_at");
    const auto full = matrix_specs("table2-classic", 7);
    std::set<std::string> keys;
    for (const auto& s : full) keys.insert(spec_key(s));
    EXPECT_EQ(keys.size(), full.size());
    EXPECT_TRUE(keys.count("medium_bgsub-downsize_gbt_action"));
    EXPECT_TRUE(keys.count("hard_sift-kmean_logistic_at"));
    EXPECT_THROW(matrix_specs("nope", 7), InvalidArgument);
}

TEST_F(SmallLevel, BaselineRunReportsOnTestSplit) {
    ExperimentSpec s;
    const auto r = wb_->run(s);
    EXPECT_EQ(r.n_train, 320u);
    EXPECT_EQ(r.n_val, 40u);
    EXPECT_EQ(r.n_test, 40u);
    EXPECT_EQ(r.metrics.total, 40);
    for (const auto& c : r.metrics.per_class) EXPECT_EQ(c.support, 4);
    EXPECT_EQ(r.metrics.classes.size(), 10u);
    EXPECT_EQ(r.state_checksum, 0u);
    const auto again = wb_->run(s);
    EXPECT_EQ(again.model_checksum, r.model_checksum);
    EXPECT_EQ(again.test_pred, r.test_pred);
    EXPECT_EQ(format_results_csv({to_row(r)}), format_results_csv({to_row(again)}));
}

TEST_F(SmallLevel, ActionPlusTypeAggregatesToActions) {
    ExperimentSpec s;
    s.model = ModelKind::Logistic;
    s.label_mode = LabelMode::ActionPlusType;
    const auto r = wb_->run(s);
    EXPECT_EQ(r.metrics.classes.size(), 40u);
    std::vector<int> ta, pa;
    for (int v : r.test_truth) ta.push_back(action_of_label(v));
    for (int v : r.test_pred) pa.push_back(action_of_label(v));
    EXPECT_EQ(r.action_accuracy, accuracy(ta, pa));
    EXPECT_GE(r.action_accuracy, r.metrics.accuracy);
}

TEST_F(SmallLevel, GridSearchRetrainsStubWinnerOnTest) {
    ExperimentSpec s;
    s.model = ModelKind::Logistic;
    const auto grid = default_grid(ModelKind::Logistic);
    const auto res = grid_search(*wb_, s, grid, [&](const ModelParams& p) { return p == grid[3] ? 0.9 : 0.1; });
    EXPECT_EQ(res.best, 3u);
    EXPECT_EQ(res.best_test.params, grid[3]);
    EXPECT_EQ(res.default_test.params, ModelParams{classify::LogisticParams{}});
    const auto one = grid_search(*wb_, s, {grid[1]});
    ASSERT_EQ(one.table.size(), 1u);
    EXPECT_EQ(one.table[0].score, wb_->validation_accuracy(s, grid[1]));
    EXPECT_THROW(grid_search(*wb_, s, {ModelParams{classify::SvmParams{}}}), InvalidArgument);
    EXPECT_THROW(grid_search(*wb_, s, {}), InvalidArgument);
}
