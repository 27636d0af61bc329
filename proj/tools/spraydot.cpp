#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "spraydot/spraydot.hpp"

namespace fs = std::filesystem;
using namespace spraydot;

namespace {

struct CommonFlags {
    std::string config;
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::optional<std::size_t> b;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool with_b) {
    cmd->add_option("--config", f.config, "Pipeline configuration (JSON)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", f.out, "Output directory (overrides output_dir)");
    cmd->add_option("--seed", f.seed, "Master seed (overrides seed)");
    cmd->add_option("--threads", f.threads, "Worker threads (default: SPRAYDOT_THREADS, then all cores)")
        ->check(CLI::PositiveNumber);
    if (with_b) cmd->add_option("--b", f.b, "Uniformness replicates B (overrides uniformness.B)")->check(CLI::PositiveNumber);
}

PipelineConfig resolve(const CommonFlags& f) {
    PipelineConfig cfg = load_config(f.config);
    if (f.out) cfg.output_dir = *f.out;
    if (f.seed) cfg.seed = *f.seed;
    if (f.b) cfg.replicates = *f.b;
    if (f.threads) set_thread_count(*f.threads);
    cfg.validate();
    return cfg;
}

void print_warnings(std::string_view stage, const Json& block) {
    if (block.contains("warnings"))
        for (const auto& w : block.at("warnings")) fmt::print(stderr, "spraydot: {}: warning: {}\n", stage, w.get<std::string>());
    if (block.contains("notices"))
        for (const auto& n : block.at("notices")) fmt::print(stderr, "spraydot: {}: {}\n", stage, n.get<std::string>());
}

int run_stage(const CommonFlags& f, std::string_view name) {
    const PipelineConfig cfg = resolve(f);
    const fs::path out(cfg.output_dir);
    fs::create_directories(out);
    for (const auto& stage : kStages) {
        if (stage.name != name) continue;
        const Json block = stage.run(cfg, out);
        print_warnings(name, block);
        std::cout << block.dump(2) << '\n';
        return 0;
    }
    throw Error(fmt::format("unknown stage '{}'", name));
}

struct SynthFlags {
    std::string image;
    std::optional<std::string> config;
    synthetic::SprayPaperSpec spec;
};

int run_synth(const SynthFlags& f) {
    const auto paper = synthetic::render(f.spec);
    write_png(f.image, paper.image.width, paper.image.height, paper.image.pixels);
    if (f.config) {
        const fs::path cfg_path(*f.config);
        const fs::path image_path = fs::absolute(f.image);
        const fs::path cfg_dir = fs::absolute(cfg_path).parent_path();
        const Rect p = paper.paper;
        const Rect focal{p.x + p.width / 4, p.y, p.width / 2, p.height};
        Json cfg{
            {"schema_version", kConfigSchemaVersion},
            {"input", image_path.lexically_relative(cfg_dir).generic_string()},
            {"output_dir", "spraydot-out"},
            {"seed", f.spec.seed},
            {"region",
             {{"paper_rect", detail::rect_json(p)}, {"focal_rect", detail::rect_json(focal)}, {"rows", 5},
              {"squares_per_row", 5}}},
        };
        write_json(cfg_path, cfg);
    }
    fmt::print(stderr, "spraydot: wrote {} ({} dots, {} purple pixels)\n", f.image, paper.ellipses.size(),
               paper.true_purple_pixels());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"spraydot: spray-droplet detection and spatial uniformness testing on water-sensitive paper scans"};
    app.set_version_flag("--version", std::string("spraydot ") + std::string(kVersion));
    app.require_subcommand(1);

    CommonFlags run_flags;
    auto* run = app.add_subcommand("run", "Run every stage and write summary.json");
    add_common(run, run_flags, true);

    CommonFlags complexity_flags;
    std::optional<std::string> space;
    std::optional<int> n;
    auto* complexity = app.add_subcommand("complexity", "Color complexity of the paper area");
    add_common(complexity, complexity_flags, false);
    complexity->add_option("--space", space, "rgb, hsv or rgb+hsv (with --n: print one entry only)");
    complexity->add_option("--n", n, "Cube edge")->check(CLI::Range(1, 255));

    CommonFlags classify_flags, dots_flags, fit_flags, uniformness_flags;
    auto* classify = app.add_subcommand("classify", "Label purple/yellow pixels; writes mask.png and mask.json");
    add_common(classify, classify_flags, false);
    auto* dots = app.add_subcommand("dots", "Extract and size dots from mask.json; writes dots.csv");
    add_common(dots, dots_flags, false);
    auto* fit = app.add_subcommand("fit", "Poisson/Exponential fits and KS bootstrap from dots.csv");
    add_common(fit, fit_flags, false);
    auto* uniformness = app.add_subcommand("uniformness", "Cell grid, MSTs and uniformness tests from dots.csv");
    add_common(uniformness, uniformness_flags, true);

    SynthFlags synth_flags;
    auto* synth = app.add_subcommand("synth", "Render a synthetic spray paper with a matching config");
    synth->add_option("--image", synth_flags.image, "Output PNG")->required();
    synth->add_option("--config-out", synth_flags.config, "Also write a pipeline config for the image");
    synth->add_option("--seed", synth_flags.spec.seed, "Generator seed");
    synth->add_option("--width", synth_flags.spec.paper_width, "Paper width")->check(CLI::Range(16, 20000));
    synth->add_option("--height", synth_flags.spec.paper_height, "Paper height")->check(CLI::Range(16, 20000));
    synth->add_option("--border", synth_flags.spec.border, "Background frame width")->check(CLI::Range(0, 1000));
    synth->add_option("--dots", synth_flags.spec.dots, "Number of dots");
    synth->add_option("--min-area", synth_flags.spec.min_area, "Smallest dot area")->check(CLI::PositiveNumber);
    synth->add_option("--max-area", synth_flags.spec.max_area, "Largest dot area")->check(CLI::PositiveNumber);
    synth->add_option("--gradient", synth_flags.spec.gradient, "Brightness ramp amplitude")->check(CLI::Range(0.0, 0.9));

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            const PipelineConfig cfg = resolve(run_flags);
            const auto result = run_pipeline(cfg, [](std::string_view stage, std::string_view status) {
                fmt::print(stderr, "spraydot: {}: {}\n", stage, status);
            });
            for (const auto& [name, block] : result.summary.at("stages").items()) print_warnings(name, block);
            fmt::print(stderr, "spraydot: summary written to {}\n", (fs::path(cfg.output_dir) / "summary.json").string());
            return result.exit_code;
        }
        if (*complexity) {
            if (space || n) {
                const PipelineConfig cfg = resolve(complexity_flags);
                const ColorSpace s = parse_color_space(space.value_or("rgb"));
                const PixelGrid grid = load_paper(cfg);
                const auto c = color_complexity(build_index(grid, s, n.value_or(1)));
                std::cout << complexity_json(c).dump(2) << '\n';
                return 0;
            }
            return run_stage(complexity_flags, "complexity");
        }
        if (*classify) return run_stage(classify_flags, "classify");
        if (*dots) return run_stage(dots_flags, "dots");
        if (*fit) return run_stage(fit_flags, "fit");
        if (*uniformness) return run_stage(uniformness_flags, "uniformness");
        if (*synth) return run_synth(synth_flags);
    } catch (const DependencyError& e) {
        fmt::print(stderr, "spraydot: {}\n", e.what());
        return 3;
    } catch (const ValidationError& e) {
        fmt::print(stderr, "spraydot: invalid configuration: {}\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        fmt::print(stderr, "spraydot: {}: {}\n", error_kind(e), e.what());
        return 1;
    }
    return 0;
}
