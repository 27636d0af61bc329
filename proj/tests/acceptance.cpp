// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <unordered_set>

#include <fmt/format.h>

#include "oracles.hpp"
#include "spraydot/spraydot.hpp"

namespace fs = std::filesystem;
using namespace spraydot;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
    bool pass;
    std::string detail;
};

// 1. Prim MST total weight against exhaustive spanning-tree enumeration.
Outcome mst_oracle() {
    const auto t0 = Clock::now();
    std::mt19937_64 gen(1001);
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t cols = 3 + gen() % 10;
        const std::size_t rows = 3 + gen() % 10;
        const std::size_t n = 2 + gen() % 6;
        Rng rng(gen());
        const auto cells = rng.sample_without_replacement(rows * cols, n);
        std::vector<std::pair<double, double>> pts;
        for (const auto c : cells) pts.emplace_back(static_cast<double>(c / cols), static_cast<double>(c % cols));
        worst = std::max(worst, std::abs(build_mst(cells, cols).total_weight - oracle::spanning_tree_min_weight(pts)));
    }
    const double secs = seconds_since(t0);
    return {worst <= 1e-9 && secs < 30.0, fmt::format("200 instances, max |diff| = {:.3g}, {:.2f} s", worst, secs)};
}

// 2. Welzl circle against the pair/triple circle oracle.
Outcome mec_oracle() {
    std::mt19937_64 gen(2002);
    double worst = 0.0, worst_outside = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 1 + gen() % 50;
        std::vector<Point2d> pts;
        std::vector<std::pair<double, double>> raw;
        for (std::size_t i = 0; i < n; ++i) {
            const bool lattice = trial % 2 == 0;
            const double x = lattice ? static_cast<double>(gen() % 12) : std::generate_canonical<double, 64>(gen) * 100;
            const double y = lattice ? static_cast<double>(gen() % 12) : std::generate_canonical<double, 64>(gen) * 100;
            pts.push_back({x, y});
            raw.emplace_back(x, y);
        }
        const Circle c = min_enclosing_circle(pts);
        worst = std::max(worst, std::abs(c.radius - oracle::enclosing_circle_bruteforce(raw).r));
        for (const auto& p : pts)
            worst_outside = std::max(worst_outside, std::hypot(p.x - c.center.x, p.y - c.center.y) - c.radius);
    }
    return {worst <= 1e-9 && worst_outside <= 1e-9,
            fmt::format("100 sets, max |r - oracle| = {:.3g}, max overshoot = {:.3g}", worst, worst_outside)};
}

// 3. AUC against pairwise enumeration, exact equality.
Outcome auc_oracle() {
    std::mt19937_64 gen(3003);
    int mismatches = 0;
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> x(1 + gen() % 60), y(1 + gen() % 60);
        const int levels = 2 + static_cast<int>(gen() % 20);
        for (auto& v : x) v = static_cast<double>(gen() % levels) * 0.25;
        for (auto& v : y) v = static_cast<double>(gen() % levels) * 0.25;
        if (auc(x, y) != oracle::pairwise_auc(x, y)) ++mismatches;
    }
    return {mismatches == 0, fmt::format("200 pairs, {} mismatches", mismatches)};
}

CellGrid grid_with(std::size_t rows, std::size_t cols, const std::vector<std::size_t>& r1) {
    CellGrid grid(rows, cols);
    for (const auto id : r1) grid.counts(id) = {0, 0, 1};
    categorize_cells(grid);
    return grid;
}

// 4. Null calibration: observed cells drawn uniformly.
Outcome null_calibration() {
    const auto t0 = Clock::now();
    int rejections = 0;
    for (std::uint64_t r = 0; r < 100; ++r) {
        Rng rng(child_seed(4004, r));
        const auto cells = rng.sample_without_replacement(400, 25);
        const CellGrid grid = grid_with(20, 20, cells);
        const auto report = test_uniformness(grid, cells, "R1", {200, child_seed(4005, r)});
        if (report.tree.p_value < 0.05) ++rejections;
    }
    const double rate = rejections / 100.0;
    const double secs = seconds_since(t0);
    return {rate >= 0.0 && rate <= 0.15 && secs < 600.0,
            fmt::format("N=400 k=25 B=200, rejection rate at 5% = {:.2f} over 100 repeats, {:.1f} s", rate, secs)};
}

// 5. Contiguous 5 x 5 block in a 20 x 20 grid.
Outcome clustered_power() {
    const auto t0 = Clock::now();
    std::vector<std::size_t> block;
    for (std::size_t r = 7; r < 12; ++r)
        for (std::size_t c = 7; c < 12; ++c) block.push_back(r * 20 + c);
    const CellGrid grid = grid_with(20, 20, block);
    const auto report = test_uniformness(grid, block, "R1", {500, 2024});
    const double secs = seconds_since(t0);
    return {report.tree.p_value <= 0.01 && report.tree.po < 1.0 && secs < 120.0,
            fmt::format("B=500, PO = {:.4g}, p = {:.4g}, mean AUC = {:.3f}, {:.2f} s", report.tree.po,
                        report.tree.p_value, report.auc_mean, secs)};
}

// 6. Complexity ratio is exact.
Outcome complexity_exactness() {
    std::mt19937_64 gen(6006);
    std::vector<std::uint64_t> keys;
    for (std::uint64_t k = 0; k < 17576; ++k) keys.push_back(k);
    std::shuffle(keys.begin(), keys.end(), gen);
    const std::size_t g = 880;
    std::vector<Rgb> px;
    for (std::size_t i = 0; i < g; ++i) {
        const auto k = keys[i];
        // a random color inside cube (k / 676, k / 26 % 26, k % 26), twice
        for (int rep = 0; rep < 2; ++rep) {
            auto coord = [&](std::uint64_t c) {
                const std::uint64_t hi = std::min<std::uint64_t>(c * 10 + 10, 256);
                return static_cast<std::uint8_t>(c * 10 + gen() % (hi - c * 10));
            };
            px.push_back({coord(k / 676), coord(k / 26 % 26), coord(k % 26)});
        }
    }
    const PixelGrid cubes(static_cast<int>(px.size()), 1, px);
    const auto c10 = color_complexity(build_index(cubes, ColorSpace::rgb, 10));
    const bool exact10 = c10.occupied == g && c10.ratio == static_cast<double>(g) / 17576.0;

    std::vector<Rgb> random_px(200 * 200);
    for (auto& p : random_px) {
        const auto v = gen();
        p = {static_cast<std::uint8_t>(v), static_cast<std::uint8_t>(v >> 8), static_cast<std::uint8_t>(v >> 16)};
    }
    std::unordered_set<std::uint32_t> distinct;
    for (const auto& p : random_px) distinct.insert((std::uint32_t{p.r} << 16) | (std::uint32_t{p.g} << 8) | p.b);
    const PixelGrid random_grid(200, 200, random_px);
    const auto c1 = color_complexity(build_index(random_grid, ColorSpace::rgb, 1));
    const bool exact1 = c1.occupied == distinct.size();
    return {exact10 && exact1, fmt::format("n=10: {} of 17576 cubes, ratio {} (want {}); n=1: {} occupied, {} distinct",
                                           c10.occupied, c10.ratio, static_cast<double>(g) / 17576.0, c1.occupied,
                                           distinct.size())};
}

// 7. End-to-end identification on a rendered spray paper.
Outcome synthetic_identification() {
    synthetic::SprayPaperSpec spec;  // 2000 x 1000, 300 ellipses, areas 3..3000, +-30% ramp
    const auto paper = synthetic::render(spec);
    const auto t0 = Clock::now();
    RegionSpec region;
    region.paper_rect = paper.paper;
    region.focal_rect = {paper.paper.x + 500, paper.paper.y, 1000, 1000};
    region.rows = 5;
    region.squares_per_row = 5;
    const PixelGrid grid = crop_raster(paper.image, region.paper_rect);
    const auto result = classify_image(grid, region, ClassifyOptions{});
    const auto dots = extract_dots(result.mask);
    const double secs = seconds_since(t0);

    std::size_t tp = 0, fp = 0, pos = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const bool truth = paper.truth[i] >= 0;
        pos += truth;
        tp += truth && result.mask.purple(i);
        fp += !truth && result.mask.purple(i);
    }
    // an ellipse is found when one extracted dot holds at least half of it
    std::vector<std::size_t> size(paper.ellipses.size(), 0);
    for (const auto t : paper.truth)
        if (t >= 0) ++size[static_cast<std::size_t>(t)];
    std::vector<bool> found(paper.ellipses.size(), false);
    for (const auto& d : dots) {
        std::map<std::int32_t, std::size_t> overlap;
        for (const auto& p : d.pixels) {
            const auto t = paper.truth[grid.index(p.x, p.y)];
            if (t >= 0) ++overlap[t];
        }
        for (const auto& [t, n] : overlap)
            if (2 * n >= size[static_cast<std::size_t>(t)]) found[static_cast<std::size_t>(t)] = true;
    }
    const double recall = static_cast<double>(tp) / static_cast<double>(pos);
    const double fpr = static_cast<double>(fp) / static_cast<double>(grid.size() - pos);
    const double dot_recall =
        static_cast<double>(std::count(found.begin(), found.end(), true)) / static_cast<double>(found.size());
    return {recall >= 0.99 && dot_recall >= 0.98 && fpr <= 0.005 && secs < 60.0,
            fmt::format("{} ellipses, pixel recall {:.4f}, dot recall {:.4f} ({} dots extracted), false-purple rate "
                        "{:.5f}, {:.1f} s",
                        paper.ellipses.size(), recall, dot_recall, dots.size(), fpr, secs)};
}

// 8. Estimators and the KS bootstrap under the null.
Outcome estimator_checks() {
    const double lambda = poisson_mle(oracle::poisson_draws(3.0, 10000, 8008));
    const double rate = exponential_mle(oracle::exponential_draws(2.0, 10000, 8009));
    int rejections = 0;
    for (std::uint64_t t = 0; t < 200; ++t) {
        const auto sample = oracle::exponential_draws(0.7, 100, 9000 + t);
        if (ks_test_exponential(sample, 200, child_seed(8010, t)).p_value < 0.05) ++rejections;
    }
    const double reject = rejections / 200.0;
    const bool ok = std::abs(lambda - 3.0) <= 0.1 && std::abs(rate - 2.0) <= 0.07 && reject >= 0.01 && reject <= 0.12;
    return {ok, fmt::format("Poisson(3) MLE {:.4f}, Exp(2) MLE {:.4f}, KS null rejection {:.3f} over 200 trials",
                            lambda, rate, reject)};
}

std::map<std::string, std::string> artifacts(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        const auto ext = e.path().extension();
        if (ext != ".json" && ext != ".csv") continue;
        std::ifstream in(e.path(), std::ios::binary);
        std::ostringstream s;
        s << in.rdbuf();
        out[e.path().filename().string()] = s.str();
    }
    return out;
}

// 9. Two full runs with the same seed.
Outcome determinism() {
    const auto base = fs::temp_directory_path() / "spraydot-acceptance";
    std::vector<std::map<std::string, std::string>> runs;
    for (const char* name : {"a", "b"}) {
        const auto dir = base / name;
        fs::remove_all(dir);
        PipelineConfig cfg = load_config(fs::path(SPRAYDOT_DATA_DIR) / "fixture.json");
        cfg.output_dir = dir.string();
        if (run_pipeline(cfg).exit_code != 0) return {false, "pipeline run failed"};
        runs.push_back(artifacts(dir));
    }
    std::size_t differing = 0;
    for (const auto& [name, content] : runs[0]) {
        const auto it = runs[1].find(name);
        if (it == runs[1].end() || it->second != content) ++differing;
    }
    const bool ok = differing == 0 && runs[0].size() == runs[1].size();
    return {ok, fmt::format("{} JSON/CSV files compared, {} differ", runs[0].size(), differing)};
}

// 10. Category rules over every count triple in 0..3.
Outcome category_table() {
    int mismatches = 0;
    for (std::size_t s = 0; s <= 3; ++s)
        for (std::size_t m = 0; m <= 3; ++m)
            for (std::size_t l = 0; l <= 3; ++l) {
                CellCategory want = CellCategory::R4;
                if (l >= 1 || m >= 2) want = CellCategory::R1;
                else if (m == 1) want = CellCategory::R2;
                else if (s >= 2) want = CellCategory::R3;
                CellGrid grid(2, 2);
                grid.counts(0) = {s, m, l};
                categorize_cells(grid);
                if (grid.category(0) != want || categorize_cell({s, m, l}) != want) ++mismatches;
            }
    return {mismatches == 0, fmt::format("64 triples, {} mismatches", mismatches)};
}

}  // namespace

int main() {
    const std::pair<const char*, std::function<Outcome()>> criteria[] = {
        {"MST oracle equivalence", mst_oracle},
        {"minimal enclosing circle oracle", mec_oracle},
        {"AUC oracle", auc_oracle},
        {"null calibration of the tree p-value", null_calibration},
        {"clustered block power", clustered_power},
        {"color-complexity exactness", complexity_exactness},
        {"synthetic end-to-end identification", synthetic_identification},
        {"estimator checks", estimator_checks},
        {"pipeline determinism", determinism},
        {"cell category rule table", category_table},
    };
    int failed = 0;
    int id = 1;
    for (const auto& [name, check] : criteria) {
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += o.pass ? 0 : 1;
        fmt::print("criterion {:>2}: {} {}: {}\n", id++, o.pass ? "PASS" : "FAIL", name, o.detail);
        std::fflush(stdout);
    }
    fmt::print("{} of 10 criteria passed\n", 10 - failed);
    return failed == 0 ? 0 : 1;
}
