#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include <gtest/gtest.h>

#include "spraydot/spraydot.hpp"

namespace fs = std::filesystem;
using namespace spraydot;

namespace {

const fs::path kData = SPRAYDOT_DATA_DIR;
const std::string kCli = SPRAYDOT_CLI;

fs::path fresh_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "spraydot-pipeline" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::map<std::string, std::string> tree_contents(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file()) out[e.path().filename().string()] = slurp(e.path());
    return out;
}

struct CliResult {
    int code;
    std::string out;
    std::string err;
};

CliResult cli(const std::string& args, const std::string& env = "") {
    const auto dir = fs::temp_directory_path() / "spraydot-pipeline";
    fs::create_directories(dir);
    const auto out = dir / "cli.out", err = dir / "cli.err";
    const std::string cmd = env + " '" + kCli + "' " + args + " >'" + out.string() + "' 2>'" + err.string() + "'";
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

Json fixture_json() { return read_json(kData / "fixture.json"); }

PipelineConfig fixture_config(const fs::path& out) {
    PipelineConfig cfg = load_config(kData / "fixture.json");
    cfg.output_dir = out.string();
    cfg.replicates = 100;
    cfg.bootstrap = 200;
    return cfg;
}

}  // namespace

TEST(Config, FixtureParsesWithDefaults) {
    const PipelineConfig cfg = load_config(kData / "fixture.json");
    EXPECT_EQ(cfg.input_path(), kData / "fixture.png");
    EXPECT_EQ(cfg.classification.passes.size(), 2u);
    EXPECT_EQ(cfg.grid_rows, 20u);
    EXPECT_EQ(cfg.replicates, 500u);
    EXPECT_EQ(cfg.threshold_mode, ThresholdMode::quantile);
    EXPECT_EQ(cfg.scales, (std::vector<std::string>{"R1", "R1+R2", "R1+R2+R3"}));
}

TEST(Config, EchoRoundTrips) {
    Json j = fixture_json();
    j["uniformness"] = {{"B", 77}, {"scales", {"R1+R2"}}, {"binning", "equal_frequency"}};
    j["dots"] = {{"connectivity", 4}, {"size_thresholds", {{"mode", "configured"}, {"t1", 5}, {"t2", 9}}}};
    const PipelineConfig cfg = parse_config(j, kData);
    const Json echo = to_json(cfg);
    EXPECT_FALSE(echo.contains("output_dir"));
    EXPECT_EQ(to_json(parse_config(echo, kData)), echo);
    EXPECT_EQ(echo["uniformness"]["B"], 77);
    EXPECT_EQ(echo["dots"]["connectivity"], 4);
}

TEST(Config, RejectsBadInput) {
    auto expect_invalid = [](const Json& j) { EXPECT_THROW(parse_config(j, kData), ValidationError) << j.dump(); };
    Json j = fixture_json();
    j["colour"] = 1;
    expect_invalid(j);

    j = fixture_json();
    j.erase("region");
    expect_invalid(j);

    j = fixture_json();
    j.erase("schema_version");
    expect_invalid(j);

    j = fixture_json();
    j["schema_version"] = 2;
    expect_invalid(j);

    j = fixture_json();
    j["region"]["focal_rect"]["extra"] = 3;
    expect_invalid(j);

    j = fixture_json();
    j["dots"] = {{"connectivity", 6}};
    expect_invalid(j);

    j = fixture_json();
    j["classification"] = {{"fusion", "intersection"}};
    expect_invalid(j);

    j = fixture_json();
    j["uniformness"] = {{"linkage", "centroid"}};
    expect_invalid(j);

    j = fixture_json();
    j["fit"] = {{"bootstrap_B", 10}};
    expect_invalid(j);

    j = fixture_json();
    j["seed"] = "one";
    expect_invalid(j);

    j = fixture_json();
    j["dots"] = {{"size_thresholds", {{"mode", "configured"}, {"t1", 9}, {"t2", 9}}}};
    expect_invalid(j);

    // geometry problems surface as geometry errors
    j = fixture_json();
    j["region"]["focal_rect"]["x"] = 10000;
    EXPECT_THROW(parse_config(j, kData), GeometryError);
}

TEST(Artifacts, MaskJsonRoundTrip) {
    LabelMask m(7, 3);
    for (const std::size_t i : {0u, 1u, 5u, 6u, 7u, 20u}) m.set(i, PixelClass::purple, Provenance::focal_split);
    const Json j = mask_to_json(m);
    EXPECT_EQ(j["runs"].front(), 0);
    EXPECT_EQ(j["purple_pixels"], 6);
    const LabelMask back = mask_from_json(j);
    for (std::size_t i = 0; i < m.size(); ++i) EXPECT_EQ(back.purple(i), m.purple(i));

    Json bad = j;
    bad["runs"].push_back(5);
    EXPECT_THROW(mask_from_json(bad), DataError);
}

TEST(Artifacts, DotsCsvRoundTripIsExact) {
    std::vector<Dot> dots(3);
    dots[0].pixel_count = 1;
    dots[1].pixel_count = 17;
    dots[1].radius = 2.23606797749979;
    dots[1].centroid = {1.0 / 3.0, 1e-7};
    dots[1].category = SizeCategory::medium;
    dots[2].pixel_count = 900;
    dots[2].radius = 16.9;
    dots[2].centroid = {1234.5678901234567, 0.1 + 0.2};
    dots[2].category = SizeCategory::large;
    const auto path = fresh_dir("csv") / "dots.csv";
    write_file(path, dots_csv(dots));
    const auto back = read_dots_csv(path);
    ASSERT_EQ(back.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(back[i].id, i);
        EXPECT_EQ(back[i].pixel_count, dots[i].pixel_count);
        EXPECT_EQ(back[i].radius, dots[i].radius);
        EXPECT_EQ(back[i].centroid_x, dots[i].centroid.x);
        EXPECT_EQ(back[i].centroid_y, dots[i].centroid.y);
        EXPECT_EQ(back[i].category, dots[i].category);
    }
    write_file(path, "id,pixel_count\n");
    EXPECT_THROW(read_dots_csv(path), DataError);
}

TEST(Pipeline, FixtureRunWritesEveryArtifact) {
    const auto out = fresh_dir("smoke");
    const auto result = run_pipeline(fixture_config(out));
    ASSERT_EQ(result.exit_code, 0) << result.summary.dump(2);
    for (const char* f : {"summary.json", "complexity.json", "classify.json", "mask.png", "mask.json", "dots.csv",
                          "dots.json", "fit.json", "fit_counts.svg", "fit_radius.svg", "fit_qq.svg", "grid.csv",
                          "grid.svg", "uniformness.json", "uniformness_R1.json", "uniformness_R1+R2.json",
                          "uniformness_R1+R2+R3.json"})
        EXPECT_TRUE(fs::is_regular_file(out / f)) << f;
    const Json summary = read_json(out / "summary.json");
    EXPECT_EQ(summary["status"], "ok");
    EXPECT_EQ(summary["version"], std::string(kVersion));
    for (const auto& [name, block] : summary["stages"].items()) EXPECT_EQ(block["status"], "ok") << name;

    const Json fit = read_json(out / "fit.json");
    EXPECT_GT(fit["lambda_p"].get<double>(), 0.0);
    EXPECT_GT(fit["lambda_e"].get<double>(), 0.0);
    const auto records = read_dots_csv(out / "dots.csv");
    EXPECT_EQ(fit["n_dots"], records.size());
    EXPECT_EQ(read_json(out / "mask.json")["width"], 600);

    const Json r1 = read_json(out / "uniformness_R1.json");
    if (!r1["skipped"].get<bool>()) {
        EXPECT_EQ(r1["auc_values"].size(), 100u);
        EXPECT_EQ(r1["mst"]["edges"].size(), r1["k"].get<std::size_t>() - 1);
    }
}

TEST(Pipeline, RerunsAreByteIdentical) {
    const auto a = fresh_dir("rerun-a"), b = fresh_dir("rerun-b");
    ASSERT_EQ(run_pipeline(fixture_config(a)).exit_code, 0);
    ASSERT_EQ(run_pipeline(fixture_config(b)).exit_code, 0);
    const auto x = tree_contents(a), y = tree_contents(b);
    ASSERT_EQ(x.size(), y.size());
    for (const auto& [name, content] : x) EXPECT_TRUE(y.at(name) == content) << name;
}

TEST(Pipeline, SeedChangesOnlySeededOutputs) {
    const auto a = fresh_dir("seed-a"), b = fresh_dir("seed-b");
    auto cfg = fixture_config(a);
    ASSERT_EQ(run_pipeline(cfg).exit_code, 0);
    cfg.output_dir = b.string();
    cfg.seed += 1;
    ASSERT_EQ(run_pipeline(cfg).exit_code, 0);
    EXPECT_EQ(slurp(a / "dots.csv"), slurp(b / "dots.csv"));
    EXPECT_EQ(slurp(a / "mask.json"), slurp(b / "mask.json"));
    EXPECT_NE(slurp(a / "fit.json"), slurp(b / "fit.json"));
}

TEST(Pipeline, SingleDotPaperSkipsScales) {
    const auto dir = fresh_dir("single");
    std::vector<Rgb> px(120 * 60, Rgb{235, 205, 60});
    for (int y = 5; y < 10; ++y)
        for (int x = 40; x < 45; ++x) px[static_cast<std::size_t>(y) * 120 + x] = {140, 60, 160};
    write_png((dir / "single.png").string(), 120, 60, px);
    Json j{{"schema_version", 1},
           {"input", "single.png"},
           {"region",
            {{"paper_rect", {{"x", 0}, {"y", 0}, {"width", 120}, {"height", 60}}},
             {"focal_rect", {{"x", 0}, {"y", 0}, {"width", 120}, {"height", 60}}},
             {"rows", 2},
             {"squares_per_row", 2}}},
           {"fit", {{"bootstrap_B", 100}}},
           {"uniformness", {{"B", 20}}}};
    PipelineConfig cfg = parse_config(j, dir);
    cfg.output_dir = (dir / "out").string();
    const auto result = run_pipeline(cfg);
    ASSERT_EQ(result.exit_code, 0) << result.summary.dump(2);
    const Json dots = read_json(dir / "out" / "dots.json");
    EXPECT_EQ(dots["n_dots"], 1);
    const Json r1 = read_json(dir / "out" / "uniformness_R1.json");
    EXPECT_TRUE(r1["skipped"].get<bool>());
    EXPECT_FALSE(result.summary["stages"]["uniformness"]["notices"].empty());
}

TEST(Pipeline, FailingStageStopsTheRun) {
    const auto dir = fresh_dir("failing");
    PipelineConfig cfg = fixture_config(dir / "out");
    cfg.input = (dir / "missing.png").string();
    const auto result = run_pipeline(cfg);
    EXPECT_EQ(result.exit_code, 1);
    EXPECT_EQ(result.summary["status"], "error");
    EXPECT_EQ(result.summary["error"]["stage"], "complexity");
    EXPECT_EQ(result.summary["error"]["type"], "decode_error");
    EXPECT_EQ(result.summary["stages"]["uniformness"]["status"], "not_run");
    EXPECT_TRUE(fs::is_regular_file(dir / "out" / "summary.json"));
}

TEST(Pipeline, MissingUpstreamArtifactIsNamed) {
    const auto dir = fresh_dir("dependency");
    const PipelineConfig cfg = fixture_config(dir);
    try {
        stage_dots(cfg, dir);
        FAIL() << "expected a dependency error";
    } catch (const DependencyError& e) {
        EXPECT_NE(std::string(e.what()).find("mask.json"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("classify"), std::string::npos);
    }
    EXPECT_THROW(stage_fit(cfg, dir), DependencyError);
    EXPECT_THROW(stage_uniformness(cfg, dir), DependencyError);
}

TEST(Threads, EnvironmentFallback) {
    set_thread_count(0);
    ::setenv("SPRAYDOT_THREADS", "3", 1);
    EXPECT_EQ(thread_count(), 3u);
    set_thread_count(2);
    EXPECT_EQ(thread_count(), 2u);
    set_thread_count(0);
    ::setenv("SPRAYDOT_THREADS", "zero", 1);
    EXPECT_GE(thread_count(), 1u);
    ::unsetenv("SPRAYDOT_THREADS");
}

TEST(Cli, VersionAndHelp) {
    const auto v = cli("--version");
    EXPECT_EQ(v.code, 0);
    EXPECT_NE(v.out.find("spraydot " + std::string(kVersion)), std::string::npos);
    const auto h = cli("--help");
    EXPECT_EQ(h.code, 0);
    for (const char* sub : {"run", "complexity", "classify", "dots", "fit", "uniformness"})
        EXPECT_NE(h.out.find(sub), std::string::npos) << sub;
}

TEST(Cli, ExitCodes) {
    const auto dir = fresh_dir("cli-codes");
    const std::string config = (kData / "fixture.json").string();
    const auto dep = cli("dots --config '" + config + "' --out '" + dir.string() + "'");
    EXPECT_EQ(dep.code, 3);
    EXPECT_NE(dep.err.find("mask.json"), std::string::npos) << dep.err;

    Json bad = fixture_json();
    bad["input"] = (kData / "fixture.png").string();
    bad["surprise"] = true;
    write_json(dir / "bad.json", bad);
    EXPECT_EQ(cli("run --config '" + (dir / "bad.json").string() + "'").code, 2);
    EXPECT_NE(cli("run").code, 0);
}

TEST(Cli, ChainedStagesEqualOneRun) {
    const auto chained = fresh_dir("cli-chained"), whole = fresh_dir("cli-whole"), single = fresh_dir("cli-single");
    const std::string config = (kData / "fixture.json").string();
    auto args = [&](const char* sub, const fs::path& out) {
        return std::string(sub) + " --config '" + config + "' --out '" + out.string() + "' --b 40";
    };
    for (const char* sub : {"complexity", "classify", "dots", "fit", "uniformness"}) {
        const auto r = cli(std::string(sub) == "uniformness" ? args(sub, chained)
                                                             : std::string(sub) + " --config '" + config +
                                                                   "' --out '" + chained.string() + "'");
        ASSERT_EQ(r.code, 0) << sub << ": " << r.err;
    }
    ASSERT_EQ(cli(args("run", whole) + " --threads 3").code, 0);
    ASSERT_EQ(cli(args("run", single), "SPRAYDOT_THREADS=1").code, 0);

    auto x = tree_contents(chained), y = tree_contents(whole), z = tree_contents(single);
    EXPECT_EQ(y.erase("summary.json"), 1u);
    EXPECT_EQ(z.erase("summary.json"), 1u);
    ASSERT_EQ(x.size(), y.size());
    for (const auto& [name, content] : x) {
        EXPECT_TRUE(y.at(name) == content) << name;
        EXPECT_TRUE(z.at(name) == content) << name;
    }
    // --b reaches the report and the config default stays untouched otherwise
    EXPECT_EQ(read_json(chained / "uniformness_R1.json")["B"], 40);
    EXPECT_EQ(read_json(whole / "summary.json")["config"]["uniformness"]["B"], 40);
}

TEST(Cli, SeedFlagOverridesConfig) {
    const auto out = fresh_dir("cli-seed");
    const std::string config = (kData / "fixture.json").string();
    ASSERT_EQ(cli("run --config '" + config + "' --out '" + out.string() + "' --seed 99 --b 10").code, 0);
    const Json summary = read_json(out / "summary.json");
    EXPECT_EQ(summary["config"]["seed"], 99);
    EXPECT_EQ(read_json(out / "uniformness.json")["seed"], 99);
}
