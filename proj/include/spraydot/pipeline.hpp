#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "spraydot/classify.hpp"
#include "spraydot/color_quant.hpp"
#include "spraydot/dots.hpp"
#include "spraydot/error.hpp"
#include "spraydot/image_io.hpp"
#include "spraydot/plots.hpp"
#include "spraydot/random.hpp"
#include "spraydot/size_stats.hpp"
#include "spraydot/spatial.hpp"
#include "spraydot/uniformness.hpp"

#ifndef SPRAYDOT_VERSION
#define SPRAYDOT_VERSION "1.0.0"
#endif

namespace spraydot {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

inline constexpr int kConfigSchemaVersion = 1;
inline constexpr std::string_view kVersion = SPRAYDOT_VERSION;

/// Seed stream of the KS bootstrap; uniformness replicates use indices below it.
inline constexpr std::uint64_t kFitSeedStream = 1ULL << 32;

enum class ThresholdMode { quantile, configured };

inline ThresholdMode parse_threshold_mode(std::string_view s) {
    if (s == "quantile") return ThresholdMode::quantile;
    if (s == "configured") return ThresholdMode::configured;
    throw ValidationError("unknown size threshold mode '" + std::string(s) + "'");
}

inline std::string_view to_string(ThresholdMode m) noexcept {
    return m == ThresholdMode::configured ? "configured" : "quantile";
}

struct PipelineConfig {
    int schema_version = kConfigSchemaVersion;
    std::string input;
    fs::path base_dir;  // relative input paths resolve against this
    std::string output_dir = "spraydot-out";
    std::uint64_t seed = 1;

    RegionSpec region;
    ClassifyOptions classification;

    Connectivity connectivity = Connectivity::eight;
    ThresholdMode threshold_mode = ThresholdMode::quantile;
    SizeThresholds thresholds;  // configured values, also the quantile fallback

    std::size_t grid_rows = 20;
    std::size_t grid_cols = 20;
    WeightsMode weights_mode = WeightsMode::mean_size;

    std::size_t bootstrap = 1000;  // KS bootstrap replicates

    std::vector<std::string> scales{"R1", "R1+R2", "R1+R2+R3"};
    std::size_t replicates = 500;
    Linkage tree_linkage = Linkage::complete;
    Sampling sampling = Sampling::without_replacement;
    Binning binning = Binning::equal_width;
    bool emit_auc_values = true;

    [[nodiscard]] fs::path input_path() const {
        const fs::path p(input);
        return p.is_absolute() ? p : base_dir / p;
    }

    [[nodiscard]] UniformnessOptions uniformness_options() const {
        return {replicates, seed, tree_linkage, sampling, binning};
    }

    void validate() const {
        if (schema_version != kConfigSchemaVersion)
            throw ValidationError(fmt::format("unsupported schema_version {} (expected {})", schema_version,
                                              kConfigSchemaVersion));
        if (input.empty()) throw ValidationError("config needs an input image path");
        region.validate();
        if (classification.passes.empty()) throw ValidationError("classification needs at least one pass");
        for (const auto& p : classification.passes) {
            if (p.n < 1 || p.n > 255) throw ValidationError("pass cube edge n must lie in 1..255");
            if (p.split_n < 1 || p.split_n > 255) throw ValidationError("pass split_n must lie in 1..255");
        }
        const auto& v = classification.validation;
        if (!(v.auc_min >= 0.0 && v.auc_min <= 1.0)) throw ValidationError("validation.auc_min must lie in [0, 1]");
        if (!(v.frac_max > 0.0 && v.frac_max <= 1.0)) throw ValidationError("validation.frac_max must lie in (0, 1]");
        thresholds.validate();
        if (grid_rows < 2 || grid_cols < 2) throw ValidationError("grid needs at least 2 rows and 2 columns");
        if (bootstrap < 100) throw ValidationError("fit.bootstrap_B must be at least 100");
        if (replicates < 1) throw ValidationError("uniformness.B must be at least 1");
        if (scales.empty()) throw ValidationError("uniformness needs at least one scale");
        for (const auto& s : scales) (void)parse_scale(s);
    }
};

// ---------------------------------------------------------------------------
// Config parsing

namespace detail {

inline void expect_object(const Json& j, std::string_view where, std::initializer_list<std::string_view> keys) {
    if (!j.is_object()) throw ValidationError(fmt::format("{} must be an object", where));
    for (auto it = j.begin(); it != j.end(); ++it)
        if (std::find(keys.begin(), keys.end(), it.key()) == keys.end())
            throw ValidationError(fmt::format("unknown key '{}' in {}", it.key(), where));
}

inline std::string key_path(std::string_view where, std::string_view key) {
    return where == "config" ? std::string(key) : fmt::format("{}.{}", where, key);
}

inline std::uint64_t get_unsigned(const Json& j, std::string_view where, const char* key, std::uint64_t fallback) {
    if (!j.contains(key)) return fallback;
    const Json& v = j.at(key);
    if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0))
        throw ValidationError(key_path(where, key) + " must be a non-negative integer");
    return v.get<std::uint64_t>();
}

inline int get_int(const Json& j, std::string_view where, const char* key, std::optional<int> fallback) {
    if (!j.contains(key)) {
        if (!fallback) throw ValidationError(key_path(where, key) + " is required");
        return *fallback;
    }
    const Json& v = j.at(key);
    if (!v.is_number_integer()) throw ValidationError(key_path(where, key) + " must be an integer");
    return v.get<int>();
}

inline double get_double(const Json& j, std::string_view where, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    const Json& v = j.at(key);
    if (!v.is_number()) throw ValidationError(key_path(where, key) + " must be a number");
    return v.get<double>();
}

inline std::string get_string(const Json& j, std::string_view where, const char* key,
                              std::optional<std::string> fallback) {
    if (!j.contains(key)) {
        if (!fallback) throw ValidationError(key_path(where, key) + " is required");
        return *fallback;
    }
    const Json& v = j.at(key);
    if (!v.is_string()) throw ValidationError(key_path(where, key) + " must be a string");
    return v.get<std::string>();
}

inline bool get_bool(const Json& j, std::string_view where, const char* key, bool fallback) {
    if (!j.contains(key)) return fallback;
    const Json& v = j.at(key);
    if (!v.is_boolean()) throw ValidationError(key_path(where, key) + " must be true or false");
    return v.get<bool>();
}

inline const Json& section(const Json& j, const char* key) {
    static const Json empty = Json::object();
    return j.contains(key) ? j.at(key) : empty;
}

inline Rect parse_rect(const Json& j, const std::string& where) {
    expect_object(j, where, {"x", "y", "width", "height"});
    return {get_int(j, where, "x", std::nullopt), get_int(j, where, "y", std::nullopt),
            get_int(j, where, "width", std::nullopt), get_int(j, where, "height", std::nullopt)};
}

inline Json rect_json(const Rect& r) { return Json{{"x", r.x}, {"y", r.y}, {"width", r.width}, {"height", r.height}}; }

}  // namespace detail

/// Parses and validates a configuration document. Unknown keys are errors so
/// typos never silently fall back to defaults.
inline PipelineConfig parse_config(const Json& j, const fs::path& base_dir = {}) {
    using namespace detail;
    expect_object(j, "config",
                  {"schema_version", "input", "output_dir", "seed", "region", "classification", "dots", "grid", "fit",
                   "uniformness"});
    PipelineConfig c;
    c.base_dir = base_dir;
    c.schema_version = get_int(j, "config", "schema_version", std::nullopt);
    c.input = get_string(j, "config", "input", std::nullopt);
    c.output_dir = get_string(j, "config", "output_dir", c.output_dir);
    c.seed = get_unsigned(j, "config", "seed", c.seed);

    if (!j.contains("region")) throw ValidationError("region is required");
    const Json& region = j.at("region");
    expect_object(region, "region", {"paper_rect", "focal_rect", "rows", "squares_per_row"});
    if (!region.contains("paper_rect") || !region.contains("focal_rect"))
        throw ValidationError("region needs paper_rect and focal_rect");
    c.region.paper_rect = parse_rect(region.at("paper_rect"), "region.paper_rect");
    c.region.focal_rect = parse_rect(region.at("focal_rect"), "region.focal_rect");
    c.region.rows = get_int(region, "region", "rows", c.region.rows);
    c.region.squares_per_row = get_int(region, "region", "squares_per_row", c.region.squares_per_row);

    const Json& cls = section(j, "classification");
    expect_object(cls, "classification", {"passes", "fusion", "linkage", "validation"});
    if (cls.contains("passes")) {
        const Json& passes = cls.at("passes");
        if (!passes.is_array()) throw ValidationError("classification.passes must be an array");
        c.classification.passes.clear();
        for (std::size_t i = 0; i < passes.size(); ++i) {
            const std::string where = fmt::format("classification.passes[{}]", i);
            expect_object(passes[i], where, {"space", "n", "split_n"});
            ClassPass p;
            p.space = parse_color_space(get_string(passes[i], where, "space", std::nullopt));
            p.n = get_int(passes[i], where, "n", std::nullopt);
            p.split_n = get_int(passes[i], where, "split_n", p.split_n);
            c.classification.passes.push_back(p);
        }
    }
    if (get_string(cls, "classification", "fusion", "union") != "union")
        throw ValidationError("classification.fusion supports only 'union'");
    c.classification.linkage =
        parse_linkage(get_string(cls, "classification", "linkage", std::string(to_string(c.classification.linkage))));
    const Json& val = section(cls, "validation");
    expect_object(val, "classification.validation", {"auc_min", "frac_max"});
    c.classification.validation.auc_min =
        get_double(val, "classification.validation", "auc_min", c.classification.validation.auc_min);
    c.classification.validation.frac_max =
        get_double(val, "classification.validation", "frac_max", c.classification.validation.frac_max);

    const Json& dots = section(j, "dots");
    expect_object(dots, "dots", {"connectivity", "size_thresholds"});
    const int conn = get_int(dots, "dots", "connectivity", 8);
    if (conn != 4 && conn != 8) throw ValidationError("dots.connectivity must be 4 or 8");
    c.connectivity = conn == 4 ? Connectivity::four : Connectivity::eight;
    const Json& st = section(dots, "size_thresholds");
    expect_object(st, "dots.size_thresholds", {"mode", "t1", "t2"});
    c.threshold_mode = parse_threshold_mode(get_string(st, "dots.size_thresholds", "mode", "quantile"));
    c.thresholds.t1 = get_unsigned(st, "dots.size_thresholds", "t1", c.thresholds.t1);
    c.thresholds.t2 = get_unsigned(st, "dots.size_thresholds", "t2", c.thresholds.t2);

    const Json& grid = section(j, "grid");
    expect_object(grid, "grid", {"rows", "cols", "weights_mode"});
    c.grid_rows = get_unsigned(grid, "grid", "rows", c.grid_rows);
    c.grid_cols = get_unsigned(grid, "grid", "cols", c.grid_cols);
    c.weights_mode = parse_weights_mode(get_string(grid, "grid", "weights_mode", "mean_size"));

    const Json& fit = section(j, "fit");
    expect_object(fit, "fit", {"bootstrap_B"});
    c.bootstrap = get_unsigned(fit, "fit", "bootstrap_B", c.bootstrap);

    const Json& uni = section(j, "uniformness");
    expect_object(uni, "uniformness", {"scales", "B", "linkage", "sampling", "binning", "emit_auc_values"});
    if (uni.contains("scales")) {
        const Json& scales = uni.at("scales");
        if (!scales.is_array()) throw ValidationError("uniformness.scales must be an array of strings");
        c.scales.clear();
        for (const auto& s : scales) {
            if (!s.is_string()) throw ValidationError("uniformness.scales must be an array of strings");
            c.scales.push_back(s.get<std::string>());
        }
    }
    c.replicates = get_unsigned(uni, "uniformness", "B", c.replicates);
    c.tree_linkage = parse_linkage(get_string(uni, "uniformness", "linkage", "complete"));
    c.sampling = parse_sampling(get_string(uni, "uniformness", "sampling", "without_replacement"));
    c.binning = parse_binning(get_string(uni, "uniformness", "binning", "equal_width"));
    c.emit_auc_values = get_bool(uni, "uniformness", "emit_auc_values", c.emit_auc_values);

    c.validate();
    return c;
}

inline PipelineConfig load_config(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot read config '" + path.string() + "'");
    Json j;
    try {
        j = Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError("config '" + path.string() + "' is not valid JSON: " + e.what());
    }
    return parse_config(j, path.parent_path());
}

/// Every field with its effective value. The output directory is left out: it
/// is where the echo is written and would make identical runs differ.
inline Json to_json(const PipelineConfig& c) {
    using detail::rect_json;
    Json passes = Json::array();
    for (const auto& p : c.classification.passes)
        passes.push_back({{"space", to_string(p.space)}, {"n", p.n}, {"split_n", p.split_n}});
    return Json{
        {"schema_version", c.schema_version},
        {"input", c.input},
        {"seed", c.seed},
        {"region",
         {{"paper_rect", rect_json(c.region.paper_rect)},
          {"focal_rect", rect_json(c.region.focal_rect)},
          {"rows", c.region.rows},
          {"squares_per_row", c.region.squares_per_row}}},
        {"classification",
         {{"passes", passes},
          {"fusion", "union"},
          {"linkage", to_string(c.classification.linkage)},
          {"validation",
           {{"auc_min", c.classification.validation.auc_min}, {"frac_max", c.classification.validation.frac_max}}}}},
        {"dots",
         {{"connectivity", static_cast<int>(c.connectivity)},
          {"size_thresholds", {{"mode", to_string(c.threshold_mode)}, {"t1", c.thresholds.t1}, {"t2", c.thresholds.t2}}}}},
        {"grid", {{"rows", c.grid_rows}, {"cols", c.grid_cols}, {"weights_mode", to_string(c.weights_mode)}}},
        {"fit", {{"bootstrap_B", c.bootstrap}}},
        {"uniformness",
         {{"scales", c.scales},
          {"B", c.replicates},
          {"linkage", to_string(c.tree_linkage)},
          {"sampling", to_string(c.sampling)},
          {"binning", to_string(c.binning)},
          {"emit_auc_values", c.emit_auc_values}}},
    };
}

// ---------------------------------------------------------------------------
// Artifact I/O

inline void write_file(const fs::path& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("failed writing '" + path.string() + "'");
}

inline void write_json(const fs::path& path, const Json& j) { write_file(path, j.dump(2) + "\n"); }

/// Upstream artifact check. The message names the missing file and the stage
/// that produces it.
inline fs::path require_artifact(const fs::path& dir, std::string_view file, std::string_view producer) {
    const fs::path p = dir / file;
    if (!fs::is_regular_file(p))
        throw DependencyError(
            fmt::format("missing upstream artifact '{}' in '{}': run the '{}' stage first", file, dir.string(), producer));
    return p;
}

inline Json read_json(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DependencyError("cannot read '" + path.string() + "'");
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError("'" + path.string() + "' is not valid JSON: " + e.what());
    }
}

/// Row-major run lengths alternating yellow, purple, ..., starting with yellow.
inline Json mask_to_json(const LabelMask& mask) {
    Json runs = Json::array();
    PixelClass current = PixelClass::yellow;
    std::size_t run = 0;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (mask.label(i) == current) {
            ++run;
            continue;
        }
        runs.push_back(run);
        current = mask.label(i);
        run = 1;
    }
    runs.push_back(run);
    return Json{{"width", mask.width()},         {"height", mask.height()},
                {"order", "row-major"},          {"first", "yellow"},
                {"purple_pixels", mask.purple_count()}, {"runs", std::move(runs)}};
}

inline LabelMask mask_from_json(const Json& j) {
    try {
        const int w = j.at("width").get<int>();
        const int h = j.at("height").get<int>();
        if (w <= 0 || h <= 0) throw DataError("mask dimensions must be positive");
        LabelMask mask(w, h);
        std::size_t pos = 0;
        PixelClass cls = PixelClass::yellow;
        for (const auto& r : j.at("runs")) {
            const auto len = r.get<std::size_t>();
            if (pos + len > mask.size()) throw DataError("mask runs exceed the mask size");
            if (cls == PixelClass::purple)
                for (std::size_t i = pos; i < pos + len; ++i) mask.set(i, cls, Provenance::focal_split);
            pos += len;
            cls = cls == PixelClass::yellow ? PixelClass::purple : PixelClass::yellow;
        }
        if (pos != mask.size()) throw DataError("mask runs do not cover the mask");
        return mask;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed mask: ") + e.what());
    }
}

inline Rgb overlay_color(Provenance p) noexcept {
    switch (p) {
        case Provenance::focal_split: return {30, 90, 230};
        case Provenance::fused: return {135, 206, 250};  // found by several passes
        case Provenance::recovered_rgb: return {220, 30, 30};
        case Provenance::recovered_hsv: return {30, 170, 60};
        case Provenance::recovered_6d: return {255, 140, 0};
        case Provenance::cleaned: return {0, 0, 0};
    }
    return {0, 0, 0};
}

/// Source pixels with every purple pixel recoloured by how it was found.
inline std::vector<Rgb> overlay(const PixelGrid& grid, const LabelMask& mask) {
    std::vector<Rgb> out = grid.rgb();
    for (std::size_t i = 0; i < out.size(); ++i)
        if (mask.purple(i)) out[i] = overlay_color(mask.provenance(i));
    return out;
}

struct DotRecord {
    std::size_t id = 0;
    std::size_t pixel_count = 0;
    double radius = 0.0;
    double centroid_x = 0.0;
    double centroid_y = 0.0;
    SizeCategory category = SizeCategory::small;
};

inline constexpr std::string_view kDotsHeader = "id,pixel_count,radius,centroid_x,centroid_y,category";

inline std::string dots_csv(const std::vector<Dot>& dots) {
    std::string out(kDotsHeader);
    out += '\n';
    for (std::size_t i = 0; i < dots.size(); ++i) {
        const Dot& d = dots[i];
        out += fmt::format("{},{},{},{},{},{}\n", i, d.pixel_count, d.radius, d.centroid.x, d.centroid.y,
                           to_string(d.category));
    }
    return out;
}

namespace detail {

template <typename T>
T parse_number(std::string_view s, std::size_t line) {
    T v{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw DataError(fmt::format("dots.csv line {}: '{}' is not a number", line, s));
    return v;
}

}  // namespace detail

inline std::vector<DotRecord> read_dots_csv(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DependencyError("cannot read '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line) || line != kDotsHeader)
        throw DataError("'" + path.string() + "' does not start with the dots header");
    std::vector<DotRecord> out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string_view> f;
        std::string_view rest(line);
        for (std::size_t pos; (pos = rest.find(',')) != std::string_view::npos; rest.remove_prefix(pos + 1))
            f.push_back(rest.substr(0, pos));
        f.push_back(rest);
        if (f.size() != 6) throw DataError(fmt::format("dots.csv line {}: expected 6 fields", lineno));
        DotRecord r;
        r.id = detail::parse_number<std::size_t>(f[0], lineno);
        r.pixel_count = detail::parse_number<std::size_t>(f[1], lineno);
        r.radius = detail::parse_number<double>(f[2], lineno);
        r.centroid_x = detail::parse_number<double>(f[3], lineno);
        r.centroid_y = detail::parse_number<double>(f[4], lineno);
        r.category = parse_size_category(f[5]);
        out.push_back(r);
    }
    return out;
}

inline std::string error_kind(const std::exception& e) {
    if (dynamic_cast<const DecodeError*>(&e)) return "decode_error";
    if (dynamic_cast<const GeometryError*>(&e)) return "geometry_error";
    if (dynamic_cast<const ValidationError*>(&e)) return "validation_error";
    if (dynamic_cast<const DataError*>(&e)) return "data_error";
    if (dynamic_cast<const ParameterError*>(&e)) return "parameter_error";
    if (dynamic_cast<const LookupError*>(&e)) return "lookup_error";
    if (dynamic_cast<const DependencyError*>(&e)) return "dependency_error";
    if (dynamic_cast<const Error*>(&e)) return "error";
    return "internal_error";
}

// ---------------------------------------------------------------------------
// Stages. Each reads its inputs (the image or upstream artifacts in `out`),
// writes its artifacts to `out`, and returns its summary block.

inline Json complexity_json(const ColorComplexity& c) {
    return Json{{"space", to_string(c.space)}, {"n", c.n}, {"occupied", c.occupied}, {"total", c.total},
                {"ratio", c.ratio}};
}

inline PixelGrid load_paper(const PipelineConfig& cfg) { return load_image(cfg.input_path().string(), cfg.region); }

/// Color complexity of the paper area for every classification pass.
inline Json stage_complexity(const PipelineConfig& cfg, const fs::path& out) {
    const PixelGrid grid = load_paper(cfg);
    Json entries = Json::array();
    for (const auto& pass : cfg.classification.passes)
        entries.push_back(complexity_json(color_complexity(build_index(grid, pass.space, pass.n))));
    Json block{{"paper", {{"width", grid.width()}, {"height", grid.height()}}}, {"entries", entries}};
    write_json(out / "complexity.json", block);
    return block;
}

inline Json stage_classify(const PipelineConfig& cfg, const fs::path& out) {
    const PixelGrid grid = load_paper(cfg);
    const Classification cls = classify_image(grid, cfg.region, cfg.classification);

    write_png((out / "mask.png").string(), grid.width(), grid.height(), overlay(grid, cls.mask));
    write_json(out / "mask.json", mask_to_json(cls.mask));

    Json passes = Json::array();
    for (const auto& p : cls.passes) {
        Json flagged = Json::array();
        for (const auto& s : p.squares)
            if (s.flagged)
                flagged.push_back({{"row", s.row}, {"col", s.col}, {"purple", s.purple}, {"yellow", s.yellow},
                                   {"auc", s.auc}});
        passes.push_back({{"space", to_string(p.pass.space)},
                          {"n", p.pass.n},
                          {"split_n", p.pass.split_n},
                          {"flagged_squares", flagged},
                          {"palette_purple", p.palette_purple},
                          {"palette_yellow", p.palette_yellow},
                          {"focal_purple", p.focal_purple},
                          {"purple_pixels", p.mask.purple_count()}});
    }
    std::map<std::string, std::size_t> by_provenance;
    for (std::size_t i = 0; i < cls.mask.size(); ++i)
        if (cls.mask.purple(i)) ++by_provenance[std::string(to_string(cls.mask.provenance(i)))];
    const std::size_t purple = cls.mask.purple_count();
    Json block{
        {"paper", {{"width", grid.width()}, {"height", grid.height()}}},
        {"layout",
         {{"focal", detail::rect_json(cls.layout.focal)},
          {"rows", cls.layout.rows.size()},
          {"squares_per_row", cls.layout.cols.size()}}},
        {"passes", passes},
        {"fusion", "union"},
        {"purple_pixels", purple},
        {"purple_fraction", static_cast<double>(purple) / static_cast<double>(cls.mask.size())},
        {"purple_by_provenance", by_provenance},
        {"artifacts", {"mask.png", "mask.json"}},
    };
    write_json(out / "classify.json", block);
    return block;
}

inline Json stage_dots(const PipelineConfig& cfg, const fs::path& out) {
    const LabelMask mask = mask_from_json(read_json(require_artifact(out, "mask.json", "classify")));
    std::vector<Dot> dots = extract_dots(mask, cfg.connectivity);
    Json warnings = Json::array();
    SizeThresholds t = cfg.thresholds;
    if (cfg.threshold_mode == ThresholdMode::quantile) {
        std::vector<std::size_t> counts;
        counts.reserve(dots.size());
        for (const auto& d : dots) counts.push_back(d.pixel_count);
        const ThresholdChoice choice = quantile_thresholds(std::move(counts), cfg.thresholds);
        t = choice.thresholds;
        if (choice.warning) warnings.push_back(*choice.warning);
    }
    categorize(dots, t);
    write_file(out / "dots.csv", dots_csv(dots));

    std::array<std::size_t, 3> per{};
    for (const auto& d : dots) ++per[static_cast<std::size_t>(d.category)];
    Json block{
        {"paper", {{"width", mask.width()}, {"height", mask.height()}}},
        {"connectivity", static_cast<int>(cfg.connectivity)},
        {"n_dots", dots.size()},
        {"thresholds",
         {{"t1", t.t1},
          {"t2", t.t2},
          {"provenance", t.provenance == ThresholdProvenance::configured ? "configured" : "quantile-derived"}}},
        {"categories", {{"small", per[0]}, {"medium", per[1]}, {"large", per[2]}}},
        {"warnings", warnings},
        {"artifacts", {"dots.csv"}},
    };
    write_json(out / "dots.json", block);
    return block;
}

inline Json stage_fit(const PipelineConfig& cfg, const fs::path& out) {
    const auto records = read_dots_csv(require_artifact(out, "dots.csv", "dots"));
    if (records.empty()) throw DataError("no dots to fit");
    std::vector<double> counts, radii;
    std::size_t max_count = 0;
    for (const auto& r : records) {
        counts.push_back(static_cast<double>(r.pixel_count));
        max_count = std::max(max_count, r.pixel_count);
        if (r.radius > 0.0) radii.push_back(r.radius);
    }
    FitReport report;
    report.n_dots = records.size();
    report.n_radii = radii.size();
    report.bootstrap = cfg.bootstrap;
    report.lambda_p = poisson_mle(counts);
    const std::uint64_t fit_seed = child_seed(cfg.seed, kFitSeedStream);

    const auto pmf = poisson_pmf_series(report.lambda_p, max_count);
    std::vector<std::size_t> freq(pmf.size(), 0);
    for (const auto& r : records) ++freq[r.pixel_count];
    std::string counts_csv = "pixel_count,observed,frequency,poisson_pmf\n";
    for (std::size_t k = 0; k < pmf.size(); ++k)
        counts_csv += fmt::format("{},{},{},{}\n", k, freq[k],
                                  static_cast<double>(freq[k]) / static_cast<double>(records.size()), pmf[k]);
    write_file(out / "fit_counts.csv", counts_csv);
    plots::count_fit(counts, report.lambda_p, pmf).save((out / "fit_counts.svg").string());

    Json warnings = Json::array();
    Json artifacts = {"fit_counts.csv", "fit_counts.svg"};
    const std::size_t zero_radius = records.size() - radii.size();
    if (zero_radius > 0)
        warnings.push_back(fmt::format("{} single-pixel dot(s) have radius 0 and are left out of the Exponential fit",
                                       zero_radius));
    Json lambda_e = nullptr, ks_stat = nullptr, ks_p = nullptr, bandwidth = nullptr;
    if (radii.empty()) {
        warnings.push_back("no dot has a positive radius: Exponential fit skipped");
    } else {
        const KsResult ks = ks_test_exponential(radii, cfg.bootstrap, fit_seed);
        report.lambda_e = ks.rate;
        report.ks_stat = ks.statistic;
        report.ks_pvalue = ks.p_value;
        lambda_e = ks.rate;
        ks_stat = ks.statistic;
        ks_p = ks.p_value;
        const double bw = silverman_bandwidth(radii);
        bandwidth = bw;

        const double hi = *std::max_element(radii.begin(), radii.end());
        const Histogram h = histogram(radii, 30, 0.0, hi);
        const double width = h.edges[1] - h.edges[0];
        std::string radius_csv = "bin_lo,bin_hi,count,density,exponential_density,kde\n";
        for (std::size_t b = 0; b < h.counts.size(); ++b) {
            const double mid = 0.5 * (h.edges[b] + h.edges[b + 1]);
            radius_csv += fmt::format("{},{},{},{},{},{}\n", h.edges[b], h.edges[b + 1], h.counts[b],
                                      static_cast<double>(h.counts[b]) / (static_cast<double>(radii.size()) * width),
                                      exponential_density(mid, ks.rate), gaussian_kde(radii, bw, mid));
        }
        write_file(out / "fit_radius.csv", radius_csv);
        const auto qq = exponential_qq(radii, ks.rate);
        std::string qq_csv = "i,theoretical,empirical\n";
        for (std::size_t i = 0; i < qq.size(); ++i)
            qq_csv += fmt::format("{},{},{}\n", i + 1, qq[i].theoretical, qq[i].empirical);
        write_file(out / "fit_qq.csv", qq_csv);
        plots::radius_fit(radii, ks.rate).save((out / "fit_radius.svg").string());
        plots::qq(qq).save((out / "fit_qq.svg").string());
        for (const char* a : {"fit_radius.csv", "fit_radius.svg", "fit_qq.csv", "fit_qq.svg"}) artifacts.push_back(a);
    }
    Json block{
        {"lambda_p", report.lambda_p},
        {"lambda_e", lambda_e},
        {"ks_stat", ks_stat},
        {"ks_pvalue", ks_p},
        {"n_dots", report.n_dots},
        {"n_radii", report.n_radii},
        {"n_zero_radius", zero_radius},
        {"bootstrap_B", report.bootstrap},
        {"bootstrap_seed", fit_seed},
        {"kde_bandwidth", bandwidth},
        {"warnings", warnings},
        {"artifacts", artifacts},
    };
    write_json(out / "fit.json", block);
    return block;
}

inline std::string grid_csv(const CellGrid& grid) {
    std::string out = "cell_id,row,col,n_small,n_medium,n_large,category\n";
    for (std::size_t id = 0; id < grid.size(); ++id) {
        const auto& c = grid.counts(id);
        out += fmt::format("{},{},{},{},{},{},{}\n", id, id / grid.cols(), id % grid.cols(), c[0], c[1], c[2],
                           to_string(grid.category(id)));
    }
    return out;
}

inline Json mst_json(const Mst& mst) {
    Json edges = Json::array();
    for (const auto& e : mst.edges) edges.push_back({{"u", e.u}, {"v", e.v}, {"length", e.length}});
    return Json{{"nodes", mst.nodes}, {"total_weight", mst.total_weight}, {"edges", edges}};
}

inline Json uniformness_json(const UniformnessReport& r, bool emit_auc_values) {
    Json j{{"scale", r.scale}, {"k", r.k}, {"B", r.options.replicates}, {"seed", r.options.seed}};
    if (r.skipped) {
        j["skipped"] = true;
        j["notice"] = r.notice;
        j["cells"] = r.cells;
        return j;
    }
    j["skipped"] = false;
    j["linkage"] = to_string(r.options.linkage);
    j["sampling"] = to_string(r.options.sampling);
    j["binning"] = to_string(r.options.binning);
    j["auc_mean"] = r.auc_mean;
    j["auc_frac_above_0.75"] = r.auc_frac_above_075;
    if (emit_auc_values) j["auc_values"] = r.auc_values;
    j["po"] = r.tree.po;
    j["p_value"] = r.tree.p_value;
    j["observed_code"] = {{"codes", r.tree.observed_code.codes},
                          {"branch_sizes", r.tree.observed_code.branch_sizes}};
    j["bin_edges"] = r.matrix.edges;
    j["observed_row"] = r.matrix.rows.front();
    if (r.matrix.warning) j["histogram_warning"] = *r.matrix.warning;
    j["cells"] = r.cells;
    j["mst"] = mst_json(r.observed);
    return j;
}

inline Json stage_uniformness(const PipelineConfig& cfg, const fs::path& out) {
    const Json dots_meta = read_json(require_artifact(out, "dots.json", "dots"));
    const auto records = read_dots_csv(require_artifact(out, "dots.csv", "dots"));
    int width = 0, height = 0;
    try {
        width = dots_meta.at("paper").at("width").get<int>();
        height = dots_meta.at("paper").at("height").get<int>();
    } catch (const nlohmann::json::exception&) {
        throw DataError("dots.json lacks the paper dimensions");
    }
    std::vector<Dot> dots(records.size());
    std::vector<std::pair<double, double>> centroids;
    std::vector<double> radii;
    for (std::size_t i = 0; i < records.size(); ++i) {
        dots[i].pixel_count = records[i].pixel_count;
        dots[i].radius = records[i].radius;
        dots[i].centroid = {records[i].centroid_x, records[i].centroid_y};
        dots[i].category = records[i].category;
        centroids.emplace_back(records[i].centroid_x, records[i].centroid_y);
        radii.push_back(records[i].radius);
    }
    const CellGrid grid = build_grid(dots, width, height, cfg.grid_rows, cfg.grid_cols, cfg.weights_mode);
    write_file(out / "grid.csv", grid_csv(grid));
    plots::grid_overlay(grid, width, height, centroids, radii).save((out / "grid.svg").string());

    std::vector<Scale> scales;
    for (const auto& s : cfg.scales) scales.push_back(parse_scale(s));
    const auto reports = run_scales(grid, scales, cfg.uniformness_options());

    std::array<std::size_t, 4> per{};
    for (std::size_t id = 0; id < grid.size(); ++id) ++per[static_cast<std::size_t>(grid.category(id)) - 1];
    Json scale_blocks = Json::array();
    Json notices = Json::array();
    for (const auto& r : reports) {
        const std::string file = "uniformness_" + r.scale + ".json";
        write_json(out / file, uniformness_json(r, cfg.emit_auc_values));
        Json b{{"scale", r.scale}, {"k", r.k}, {"skipped", r.skipped}};
        if (r.skipped) {
            b["notice"] = r.notice;
            notices.push_back(r.notice);
        } else {
            b["auc_mean"] = r.auc_mean;
            b["po"] = r.tree.po;
            b["p_value"] = r.tree.p_value;
            plots::grid_overlay(grid, width, height, centroids, radii, &r.observed, "MST over scale " + r.scale)
                .save((out / ("mst_" + r.scale + ".svg")).string());
            plots::auc_histogram(r.auc_values, r.scale).save((out / ("auc_" + r.scale + ".svg")).string());
            plots::heatmap(r.matrix, r.tree.tree, r.scale).save((out / ("heatmap_" + r.scale + ".svg")).string());
        }
        b["report"] = file;
        scale_blocks.push_back(std::move(b));
    }
    Json block{
        {"grid",
         {{"rows", grid.rows()},
          {"cols", grid.cols()},
          {"weights_mode", to_string(cfg.weights_mode)},
          {"weights", grid.weights()},
          {"categories", {{"R1", per[0]}, {"R2", per[1]}, {"R3", per[2]}, {"R4", per[3]}}}}},
        {"B", cfg.replicates},
        {"seed", cfg.seed},
        {"linkage", to_string(cfg.tree_linkage)},
        {"sampling", to_string(cfg.sampling)},
        {"scales", scale_blocks},
        {"notices", notices},
    };
    write_json(out / "uniformness.json", block);
    return block;
}

// ---------------------------------------------------------------------------
// Whole run

struct StageEntry {
    std::string_view name;
    Json (*run)(const PipelineConfig&, const fs::path&);
};

inline constexpr std::array<StageEntry, 5> kStages{{
    {"complexity", &stage_complexity},
    {"classify", &stage_classify},
    {"dots", &stage_dots},
    {"fit", &stage_fit},
    {"uniformness", &stage_uniformness},
}};

struct RunResult {
    int exit_code = 0;
    Json summary;
};

/// Runs every stage in order into cfg.output_dir and writes summary.json. A
/// failing stage is recorded, later stages are marked not_run, artifacts
/// already written stay in place.
template <typename Log>
RunResult run_pipeline(const PipelineConfig& cfg, Log&& log) {
    const fs::path out(cfg.output_dir);
    fs::create_directories(out);
    RunResult result;
    Json stages = Json::object();
    bool failed = false;
    Json error = nullptr;
    for (const auto& stage : kStages) {
        if (failed) {
            stages[std::string(stage.name)] = {{"status", "not_run"}};
            continue;
        }
        try {
            Json block = stage.run(cfg, out);
            Json entry{{"status", "ok"}};
            entry.update(block);
            stages[std::string(stage.name)] = std::move(entry);
            log(stage.name, std::string_view("ok"));
        } catch (const std::exception& e) {
            failed = true;
            error = {{"stage", stage.name}, {"type", error_kind(e)}, {"message", e.what()}};
            stages[std::string(stage.name)] = {{"status", "error"}, {"type", error_kind(e)}, {"message", e.what()}};
            log(stage.name, std::string_view(e.what()));
        }
    }
    result.summary = Json{{"tool", "spraydot"},          {"version", kVersion},
                          {"status", failed ? "error" : "ok"}, {"config", to_json(cfg)},
                          {"stages", std::move(stages)}};
    if (failed) result.summary["error"] = std::move(error);
    write_json(out / "summary.json", result.summary);
    result.exit_code = failed ? 1 : 0;
    return result;
}

inline RunResult run_pipeline(const PipelineConfig& cfg) {
    return run_pipeline(cfg, [](std::string_view, std::string_view) {});
}

}  // namespace spraydot
