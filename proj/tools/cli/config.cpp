#include "cli/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <regex>
#include <sstream>

#include "qdiff/errors.hpp"

namespace qdiff::cli {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

[[noreturn]] void fail(const Ini::Entry& e, const std::string& key, const std::string& msg) {
    throw ConfigError(e.origin + ": " + key + ": " + msg);
}

double to_double(const Ini::Entry& e, const std::string& key) {
    const std::string& v = e.value;
    double out = 0.0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(out))
        fail(e, key, "expected a finite number, got '" + v + "'");
    return out;
}

std::uint64_t to_uint(const Ini::Entry& e, const std::string& key) {
    const std::string& v = e.value;
    std::uint64_t out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size() || v.empty())
        fail(e, key, "expected a non-negative integer, got '" + v + "'");
    return out;
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

}  // namespace

Ini Ini::parse(const std::string& text, const std::string& source) {
    Ini ini;
    std::istringstream in(text);
    std::string raw, section = "run";
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const std::string origin = source + ":" + std::to_string(line);
        std::string s = trim(raw);
        if (s.empty() || s[0] == '#' || s[0] == ';') continue;
        if (s.front() == '[') {
            if (s.back() != ']') throw ConfigError(origin + ": unterminated section header");
            section = lower(trim(std::string_view(s).substr(1, s.size() - 2)));
            if (section.empty()) throw ConfigError(origin + ": empty section name");
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError(origin + ": expected 'key = value'");
        const std::string key = lower(trim(std::string_view(s).substr(0, eq)));
        std::string value = trim(std::string_view(s).substr(eq + 1));
        // Inline comments need surrounding whitespace so that values keep '#'.
        for (const char* mark : {" #", " ;"})
            if (const auto c = value.find(mark); c != std::string::npos) value = trim(value.substr(0, c));
        if (key.empty()) throw ConfigError(origin + ": empty key");
        if (ini.find(section, key)) throw ConfigError(origin + ": duplicate key " + section + "." + key);
        ini.set(section, key, value, origin);
    }
    return ini;
}

Ini Ini::load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError(path + ": cannot open config file");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse(ss.str(), path);
}

void Ini::set(const std::string& section, const std::string& key, std::string value, std::string origin) {
    entries_[section + "." + key] = Entry{std::move(value), std::move(origin)};
}

const Ini::Entry* Ini::find(const std::string& section, const std::string& key) const {
    const auto it = entries_.find(section + "." + key);
    return it == entries_.end() ? nullptr : &it->second;
}

std::uint64_t ExperimentConfig::require_seed() const {
    if (!seed) throw ConfigError("run.seed: a seed is required (config [run] seed = N or --seed N)");
    return *seed;
}

ExperimentConfig config_from_ini(const Ini& ini) {
    ExperimentConfig c;
    using Setter = std::function<void(const Ini::Entry&, const std::string&)>;
    const auto num = [](double& dst) -> Setter {
        return [&dst](const Ini::Entry& e, const std::string& k) { dst = to_double(e, k); };
    };
    const auto pos = [](double& dst) -> Setter {
        return [&dst](const Ini::Entry& e, const std::string& k) {
            dst = to_double(e, k);
            if (!(dst > 0.0)) fail(e, k, "must be positive");
        };
    };
    const auto count = [](std::size_t& dst) -> Setter {
        return [&dst](const Ini::Entry& e, const std::string& k) {
            dst = static_cast<std::size_t>(to_uint(e, k));
            if (dst == 0) fail(e, k, "must be at least 1");
        };
    };
    const std::map<std::string, Setter> fields = {
        {"driver.kind",
         [&](const Ini::Entry& e, const std::string& k) {
             try {
                 c.driver = driver_kind_from_string(lower(e.value));
             } catch (const Error&) {
                 fail(e, k, "unknown driver '" + e.value + "' (bm, gbm, ou)");
             }
             if (c.driver == DriverKind::Custom) fail(e, k, "custom drivers are not configurable");
         }},
        {"driver.mu", num(c.mu)},
        {"driver.sigma", pos(c.sigma)},
        {"driver.theta", pos(c.theta)},
        {"driver.y0", num(c.y0)},
        {"map.family",
         [&](const Ini::Entry& e, const std::string& k) {
             try {
                 c.family = tukey_family_from_string(lower(e.value));
             } catch (const Error&) {
                 fail(e, k, "unknown family '" + e.value + "' (g, h, gh)");
             }
         }},
        {"map.a", num(c.A)},
        {"map.b", pos(c.B)},
        {"map.g", num(c.g)},
        {"map.h", num(c.h)},
        {"map.law",
         [&](const Ini::Entry& e, const std::string& k) {
             const std::string v = lower(e.value);
             if (v == "true") c.law = LawTag::TrueLaw;
             else if (v == "false") c.law = LawTag::FalseLaw;
             else fail(e, k, "expected 'true' or 'false'");
         }},
        {"map.false_mean", num(c.false_mean)},
        {"map.false_sd", pos(c.false_sd)},
        {"grid.t0", pos(c.t0)},
        {"grid.t", pos(c.T)},
        {"grid.dt", pos(c.dt)},
        {"run.paths", count(c.paths)},
        {"run.seed", [&](const Ini::Entry& e, const std::string& k) { c.seed = to_uint(e, k); }},
        {"run.out",
         [&](const Ini::Entry& e, const std::string& k) {
             if (e.value.empty()) fail(e, k, "empty output directory");
             c.out = e.value;
         }},
        {"run.record_points",
         [&](const Ini::Entry& e, const std::string& k) {
             c.record_points = static_cast<std::size_t>(to_uint(e, k));
             if (c.record_points < 2) fail(e, k, "must be at least 2");
         }},
        {"run.threads",
         [&](const Ini::Entry& e, const std::string& k) { c.threads = static_cast<unsigned>(to_uint(e, k)); }},
        {"price.risk_theta", pos(c.risk_theta)},
        {"price.risk_alpha", pos(c.risk_alpha)},
        {"price.operators",
         [&](const Ini::Entry& e, const std::string& k) {
             c.operators = split_list(lower(e.value));
             if (c.operators.empty()) fail(e, k, "empty operator list");
             for (const auto& op : c.operators)
                 if (op != "identity" && op != "ph" && op != "wang" && op != "tukey_g")
                     fail(e, k, "unknown operator '" + op + "' (identity, ph, wang, tukey_g)");
         }},
        {"price.ph_r", pos(c.ph_r)},
        {"price.wang_lambda", num(c.wang_lambda)},
        {"price.tukey_g", pos(c.tukey_g)},
        {"price.tukey_b", pos(c.tukey_B)},
        {"price.tukey_gamma", num(c.tukey_gamma)},
        {"price.t", pos(c.price_T)},
        {"price.driver_unit", pos(c.driver_unit)},
        {"price.match_layer", [&](const Ini::Entry& e, const std::string&) { c.match_layer = e.value; }},
        {"validate.only", [&](const Ini::Entry& e, const std::string&) { c.only = lower(e.value); }},
        {"validate.tolerance_scale",
         [&](const Ini::Entry& e, const std::string& k) {
             c.tolerance_scale = to_double(e, k);
             if (c.tolerance_scale < 0.0) fail(e, k, "must be non-negative");
         }},
        {"validate.paths", count(c.validate_paths)},
        {"figures.t", pos(c.figure_t)},
        {"figures.points", count(c.figure_points)},
        {"coeffs.times",
         [&](const Ini::Entry& e, const std::string& k) {
             c.coeff_times.clear();
             for (const auto& item : split_list(e.value)) {
                 const Ini::Entry sub{item, e.origin};
                 c.coeff_times.push_back(to_double(sub, k));
                 if (!(c.coeff_times.back() > 0.0)) fail(e, k, "times must be positive");
             }
             if (c.coeff_times.empty()) fail(e, k, "empty time list");
         }},
        {"coeffs.points", count(c.coeff_points)},
    };
    for (const auto& [name, entry] : ini.entries()) {
        const auto it = fields.find(name);
        if (it == fields.end()) throw ConfigError(entry.origin + ": unknown key " + name);
        it->second(entry, name);
    }

    // Cross-field checks, reported against the entry that can fix them.
    const auto origin_of = [&](const char* key) {
        const auto it = ini.entries().find(key);
        return it == ini.entries().end() ? std::string("defaults") : it->second.origin;
    };
    if (!(c.t0 < c.T)) throw ConfigError(origin_of("grid.t0") + ": grid.t0: must be below grid.T");
    if (!(c.dt < c.T - c.t0)) throw ConfigError(origin_of("grid.dt") + ": grid.dt: larger than the horizon");
    if (c.h < 0.0) throw ConfigError(origin_of("map.h") + ": map.h: must be non-negative");
    if (c.family == TukeyFamily::G && std::fabs(c.g) < kSmallG)
        throw ConfigError(origin_of("map.g") + ": map.g: the g family needs g != 0");
    if (c.driver == DriverKind::Gbm && !(c.y0 > 0.0))
        throw ConfigError(origin_of("driver.y0") + ": driver.y0: GBM needs y0 > 0");
    return c;
}

std::string canonical_dump(const ExperimentConfig& c) {
    std::ostringstream o;
    o.precision(17);
    o << "driver=" << to_string(c.driver) << ";mu=" << c.mu << ";sigma=" << c.sigma << ";theta=" << c.theta
      << ";y0=" << c.y0 << ";family=" << to_string(c.family) << ";A=" << c.A << ";B=" << c.B << ";g=" << c.g
      << ";h=" << c.h << ";law=" << to_string(c.law) << ";false_mean=" << c.false_mean
      << ";false_sd=" << c.false_sd << ";t0=" << c.t0 << ";T=" << c.T << ";dt=" << c.dt
      << ";paths=" << c.paths << ";seed=" << (c.seed ? std::to_string(*c.seed) : "none")
      << ";record_points=" << c.record_points << ";risk_theta=" << c.risk_theta
      << ";risk_alpha=" << c.risk_alpha << ";operators=";
    for (const auto& op : c.operators) o << op << ",";
    o << ";ph_r=" << c.ph_r << ";wang_lambda=" << c.wang_lambda << ";tukey_g=" << c.tukey_g
      << ";tukey_B=" << c.tukey_B << ";tukey_gamma=" << c.tukey_gamma << ";price_T=" << c.price_T
      << ";driver_unit=" << c.driver_unit << ";match_layer=" << c.match_layer << ";only=" << c.only
      << ";tolerance_scale=" << c.tolerance_scale << ";validate_paths=" << c.validate_paths
      << ";figure_t=" << c.figure_t << ";figure_points=" << c.figure_points << ";coeff_times=";
    for (double t : c.coeff_times) o << t << ",";
    o << ";coeff_points=" << c.coeff_points;
    return o.str();
}

std::uint64_t fnv1a(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : data) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

DiffusionSpec build_driver(const ExperimentConfig& c) {
    switch (c.driver) {
        case DriverKind::BmDrift: return DiffusionSpec::bm(c.mu, c.sigma, c.y0);
        case DriverKind::Gbm: return DiffusionSpec::gbm(c.mu, c.sigma, c.y0);
        case DriverKind::Ou: return DiffusionSpec::ou(c.theta, c.mu, c.sigma, c.y0);
        case DriverKind::Custom: break;
    }
    throw ConfigError("driver.kind: custom drivers are not configurable");
}

CompositeMap build_map(const ExperimentConfig& c) {
    const DiffusionSpec d = build_driver(c);
    const TukeyParams p{c.A, c.B, c.g, c.h};
    p.validate();
    const MarginalPtr target = tukey_target(c.family, p);
    if (c.law == LawTag::TrueLaw) return true_law_map(d, target, c.t0);
    return false_law_map(d, make_static(std::make_shared<NormalLaw>(c.false_mean, c.false_sd)), target, c.t0);
}

LayerMatch parse_match_layer(const std::string& spec, double display_unit) {
    static const std::regex re(R"(^\s*\(\s*([-+0-9.eE]+)\s*,\s*([-+0-9.eE]+)\s*\]\s*=\s*([-+0-9.eE]+)\s*$)");
    std::smatch m;
    if (!std::regex_match(spec, m, re))
        throw ConfigError("match-layer: expected '(lo,hi]=premium', got '" + spec + "'");
    const auto parse = [&](const std::string& s) {
        const Ini::Entry e{s, "flag --match-layer"};
        return to_double(e, "match-layer");
    };
    LayerMatch out{{parse(m[1]) * display_unit, parse(m[2]) * display_unit}, parse(m[3])};
    if (!(out.layer.lo >= 0.0 && out.layer.lo < out.layer.hi))
        throw ConfigError("match-layer: need 0 <= lo < hi");
    if (!(out.premium > 0.0)) throw ConfigError("match-layer: premium must be positive");
    return out;
}

}  // namespace qdiff::cli
