#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qdiff/distortion.hpp"

namespace qdiff::cli {

// Flat INI: `[section]` headers, `key = value` lines, `#` or `;` comments.
// Keys outside any section land in "run".
class Ini {
public:
    struct Entry {
        std::string value;
        std::string origin;  // "file:line" or "flag --name"
    };

    [[nodiscard]] static Ini parse(const std::string& text, const std::string& source);
    [[nodiscard]] static Ini load(const std::string& path);

    void set(const std::string& section, const std::string& key, std::string value, std::string origin);
    [[nodiscard]] const Entry* find(const std::string& section, const std::string& key) const;
    [[nodiscard]] const std::map<std::string, Entry>& entries() const { return entries_; }

private:
    std::map<std::string, Entry> entries_;  // "section.key"
};

struct ExperimentConfig {
    // [driver]
    DriverKind driver = DriverKind::BmDrift;
    double mu = 0.0;
    double sigma = 1.0;
    double theta = 1.0;
    double y0 = 0.0;
    // [map]
    TukeyFamily family = TukeyFamily::G;
    double A = 0.0;
    double B = 1.0;
    double g = 0.5;
    double h = 0.0;
    LawTag law = LawTag::TrueLaw;
    double false_mean = 0.0;  // false law N(false_mean, false_sd^2)
    double false_sd = 1.0;
    // [grid]
    double t0 = 0.01;
    double T = 1.0;
    double dt = 1e-3;
    // [run]
    std::size_t paths = 1000;
    std::optional<std::uint64_t> seed;
    std::string out = "out";
    std::size_t record_points = 11;  // evenly spaced recorded times, ends included
    unsigned threads = 0;
    // [price]
    double risk_theta = 2000.0;
    double risk_alpha = 1.2;
    std::vector<std::string> operators = {"ph", "wang", "tukey_g"};
    double ph_r = 0.9245;
    double wang_lambda = 0.1;
    double tukey_g = 0.08;
    double tukey_B = 0.01;
    double tukey_gamma = -10.25;
    double price_T = 1.0;
    double driver_unit = 1000.0;
    std::string match_layer;  // "(lo,hi]=premium" in display units
    // [validate]
    std::string only;
    double tolerance_scale = 1.0;
    std::size_t validate_paths = 20000;
    // [figures]
    double figure_t = 0.5;
    std::size_t figure_points = 199;
    // [coeffs]
    std::vector<double> coeff_times = {0.1, 0.5, 1.0};
    std::size_t coeff_points = 19;

    [[nodiscard]] std::uint64_t require_seed() const;
};

// Throws ConfigError naming the origin (file:line or flag) of the bad entry.
[[nodiscard]] ExperimentConfig config_from_ini(const Ini& ini);

// Stable text form of every field; the manifest hash is taken over it.
[[nodiscard]] std::string canonical_dump(const ExperimentConfig& cfg);
[[nodiscard]] std::uint64_t fnv1a(std::string_view data);
[[nodiscard]] std::string hex64(std::uint64_t v);

[[nodiscard]] DiffusionSpec build_driver(const ExperimentConfig& cfg);
[[nodiscard]] CompositeMap build_map(const ExperimentConfig& cfg);

struct LayerMatch {
    Layer layer;  // in monetary units
    double premium;
};
// "(200,300]=414.2" with bounds in display units.
[[nodiscard]] LayerMatch parse_match_layer(const std::string& spec, double display_unit);

}  // namespace qdiff::cli
