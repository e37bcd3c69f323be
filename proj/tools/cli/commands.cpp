#include "cli/commands.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cli/figures.hpp"
#include "qdiff/errors.hpp"
#include "qdiff/mc_engine.hpp"
#include "qdiff/quadrature.hpp"
#include "qdiff/special.hpp"

namespace qdiff::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string num(double v) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

fs::path prepare_out(const ExperimentConfig& cfg) {
    const fs::path dir(cfg.out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("run.out: cannot create '" + cfg.out + "': " + ec.message());
    return dir;
}

json manifest_base(const std::string& command, const ExperimentConfig& cfg) {
    json m;
    m["tool"] = "qdiff";
    m["version"] = kVersion;
    m["command"] = command;
    m["seed"] = cfg.seed ? json(*cfg.seed) : json(nullptr);
    m["spec_hash"] = hex64(fnv1a(canonical_dump(cfg)));
    m["config"] = canonical_dump(cfg);
    return m;
}

double seconds_since(std::chrono::steady_clock::time_point t) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

// Curves of one group share the x grid; written side by side.
std::string curves_csv(const std::vector<const Curve*>& curves, const std::string& x_name) {
    std::ostringstream o;
    o << x_name;
    for (const Curve* c : curves) o << ',' << c->label;
    o << '\n';
    const auto& x = curves.front()->x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        o << num(x[i]);
        for (const Curve* c : curves) o << ',' << num(c->y[i]);
        o << '\n';
    }
    return o.str();
}

}  // namespace

void write_atomic(const fs::path& path, const std::string& content) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw Error("cannot write " + tmp.string());
        f.write(content.data(), static_cast<std::streamsize>(content.size()));
        f.flush();
        if (!f) throw Error("write failed for " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw Error("cannot rename onto " + path.string());
    }
}

// ---------------------------------------------------------------------------
// simulate

int cmd_simulate(const ExperimentConfig& cfg, std::ostream& log) {
    const auto start = std::chrono::steady_clock::now();
    const std::uint64_t seed = cfg.require_seed();
    const CompositeMap map = build_map(cfg);
    const TimeGrid grid = TimeGrid::with_dt(cfg.t0, cfg.T, cfg.dt);
    SimOptions opt;
    opt.threads = cfg.threads;
    for (std::size_t k = 0; k < cfg.record_points; ++k) {
        const auto idx = static_cast<std::size_t>(std::llround(static_cast<double>(k) * static_cast<double>(grid.steps) /
                                                               static_cast<double>(cfg.record_points - 1)));
        opt.record_times.push_back(grid.time(idx));
    }
    // Independent streams for the two batches so the KS comparison is two-sample.
    const std::uint64_t sde_seed = seed ^ 0x9E3779B97F4A7C15ull;
    const PathBatch tr = simulate_transform_paths(map, grid, cfg.paths, seed, opt);
    const PathBatch sde = simulate_sde_paths(map, grid, cfg.paths, sde_seed, opt);

    const fs::path dir = prepare_out(cfg);
    std::ostringstream a, b;
    write_csv(tr, a);
    write_csv(sde, b);
    write_atomic(dir / "transform_paths.csv", a.str());
    write_atomic(dir / "sde_paths.csv", b.str());

    const KsResult ks = ks_two_sample(sde.column(sde.times.size() - 1), tr.column(tr.times.size() - 1));
    json m = manifest_base("simulate", cfg);
    m["sde_seed"] = sde_seed;
    m["paths"] = cfg.paths;
    m["steps"] = grid.steps;
    m["recorded_times"] = tr.times;
    m["outputs"] = {"transform_paths.csv", "sde_paths.csv"};
    m["validation"] = {{"test", "two-sample KS at final time"},
                       {"statistic", ks.statistic},
                       {"critical_1pct", ks.critical_1},
                       {"verdict", ks.pass_1 ? "pass" : "fail"}};
    m["wall_time_s"] = seconds_since(start);
    write_atomic(dir / "manifest.json", m.dump(2) + "\n");
    log << "simulate: " << cfg.paths << " paths x " << tr.times.size() << " times -> " << dir.string()
        << " (KS " << (ks.pass_1 ? "pass" : "fail") << ", D=" << ks.statistic << ")\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// figures

int cmd_figures(const ExperimentConfig& cfg, std::ostream& log) {
    const auto start = std::chrono::steady_clock::now();
    const fs::path dir = prepare_out(cfg);
    std::map<std::string, std::vector<Curve>> groups;
    for (auto& c : tukey_quantile_curves(cfg.figure_points)) groups[c.group].push_back(std::move(c));
    for (auto& c : distortion_curves(cfg.figure_t, cfg.figure_points)) groups[c.group].push_back(std::move(c));
    json m = manifest_base("figures", cfg);
    for (const auto& [group, curves] : groups) {
        std::vector<const Curve*> ptrs;
        for (const auto& c : curves) ptrs.push_back(&c);
        const bool quantile = group.find("quantiles") != std::string::npos;
        const std::string file = group + ".csv";
        write_atomic(dir / file, curves_csv(ptrs, quantile ? "u" : "F_P"));
        m["outputs"].push_back(file);
    }
    m["wall_time_s"] = seconds_since(start);
    write_atomic(dir / "manifest.json", m.dump(2) + "\n");
    log << "figures: " << groups.size() << " files -> " << dir.string() << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// price

int cmd_price(const ExperimentConfig& cfg, std::ostream& log) {
    const auto start = std::chrono::steady_clock::now();
    const LawPtr risk = std::make_shared<ParetoLaw>(cfg.risk_theta, cfg.risk_alpha);
    const LayerSchedule sched = LayerSchedule::reinsurance_default();
    double gamma = cfg.tukey_gamma;
    json m = manifest_base("price", cfg);
    if (!cfg.match_layer.empty()) {
        const LayerMatch lm = parse_match_layer(cfg.match_layer, sched.display_unit);
        try {
            const CalibrationResult cal = calibrate_gamma(lm.premium, lm.layer, cfg.tukey_g, cfg.tukey_B, cfg.price_T,
                                                          risk, cfg.driver_unit);
            gamma = cal.gamma;
            m["calibration"] = {{"layer_lo", lm.layer.lo / sched.display_unit},
                                {"layer_hi", lm.layer.hi / sched.display_unit},
                                {"target_premium", lm.premium},
                                {"g", cfg.tukey_g},
                                {"B", cfg.tukey_B},
                                {"gamma", cal.gamma},
                                {"premium", cal.premium},
                                {"bracket", {cal.bracket_lo, cal.bracket_hi}},
                                {"iterations", cal.iterations}};
            log << "price: calibrated gamma = " << num(cal.gamma) << "\n";
        } catch (const CalibrationError& e) {
            log << "price: calibration failed: " << e.what() << "\n";
            return kExitValidation;
        }
    }
    std::vector<PricingOperator> ops;
    for (const auto& name : cfg.operators) {
        PricingOperator op{name};
        op.r = cfg.ph_r;
        op.lambda = cfg.wang_lambda;
        op.g = cfg.tukey_g;
        op.B = cfg.tukey_B;
        op.gamma = gamma;
        op.T = cfg.price_T;
        ops.push_back(op);
    }
    const auto rows = price_table(risk, sched, ops, cfg.driver_unit);

    std::ostringstream csv;
    csv << "layer_lo,layer_hi,operator,premium\n";
    json jrows = json::array();
    for (const auto& r : rows) {
        const double lo = r.layer.lo / sched.display_unit, hi = r.layer.hi / sched.display_unit;
        csv << num(lo) << ',' << num(hi) << ',' << r.op << ',' << num(r.premium) << '\n';
        jrows.push_back({{"layer_lo", lo}, {"layer_hi", hi}, {"operator", r.op}, {"premium", r.premium}});
    }
    const fs::path dir = prepare_out(cfg);
    m["risk"] = {{"law", "pareto"}, {"theta", cfg.risk_theta}, {"alpha", cfg.risk_alpha}};
    m["layer_unit"] = sched.display_unit;
    json jops = json::array();
    for (const auto& op : ops)
        jops.push_back({{"name", op.name}, {"r", op.r}, {"lambda", op.lambda}, {"g", op.g}, {"B", op.B},
                        {"gamma", op.gamma}, {"T", op.T}});
    m["operators"] = jops;
    m["rows"] = jrows;
    m["outputs"] = {"price_table.csv", "price_table.json"};
    m["wall_time_s"] = seconds_since(start);
    write_atomic(dir / "price_table.csv", csv.str());
    write_atomic(dir / "price_table.json", m.dump(2) + "\n");
    log << "price: " << rows.size() << " cells -> " << (dir / "price_table.csv").string() << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// validate

const std::vector<std::string>& validation_suites() {
    static const std::vector<std::string> names = {"roundtrip", "density", "coeffs", "sde",
                                                   "bahadur",   "wang",    "premium", "lipschitz"};
    return names;
}

namespace {

using Checks = std::vector<CheckResult>;

struct TukeyCase {
    TukeyFamily family;
    TukeyParams p;
};

std::vector<TukeyCase> tukey_lattice() {
    std::vector<TukeyCase> out;
    const std::vector<double> gs = {-2, -0.8, -0.1, 0.1, 0.8, 2};
    const std::vector<double> hs = {0, 0.05, 0.1, 0.5};
    for (double g : gs) out.push_back({TukeyFamily::G, {0, 1, g, 0}});
    for (double h : hs) out.push_back({TukeyFamily::H, {0, 1, 0, h}});
    for (double g : gs)
        for (double h : hs) out.push_back({TukeyFamily::GH, {0, 1, g, h}});
    return out;
}

void add(Checks& out, const std::string& suite, const std::string& check, double value, double tol) {
    out.push_back({suite, check, value, tol, value <= tol});
}

void suite_roundtrip(Checks& out, double scale) {
    for (const auto& c : tukey_lattice()) {
        double worst = 0.0;
        for (int i = 1; i <= 99; ++i) {
            const double u = i / 100.0;
            worst = std::max(worst, std::fabs(tukey_cdf(c.family, tukey_quantile(c.family, u, c.p), c.p) - u));
        }
        add(out, "roundtrip", to_string(c.family) + "(g=" + num(c.p.g) + ",h=" + num(c.p.h) + ")", worst,
            1e-10 * scale);
    }
}

void suite_density(Checks& out, double scale) {
    for (const auto& c : tukey_lattice()) {
        const Interval sup = tukey_support(c.family, c.p);
        std::vector<double> bps;
        for (double u : {1e-8, 1e-4, 0.01, 0.25, 0.5, 0.75, 0.99, 1 - 1e-4, 1 - 1e-8})
            bps.push_back(tukey_quantile(c.family, u, c.p));
        const double mass =
            integrate_pieces([&](double z) { return tukey_density(c.family, z, c.p); }, sup.lo, sup.hi, bps, 1e-12)
                .value;
        add(out, "density", to_string(c.family) + "(g=" + num(c.p.g) + ",h=" + num(c.p.h) + ")",
            std::fabs(mass - 1.0), 1e-8 * scale);
    }
}

double coeff_gap(const CoefficientPair& a, const CoefficientPair& b) {
    const auto r = [](double x, double y) {
        const double d = std::max(std::fabs(x), std::fabs(y));
        return d == 0.0 ? 0.0 : std::fabs(x - y) / d;
    };
    return std::max(r(a.alpha, b.alpha), r(a.sigma_tilde, b.sigma_tilde));
}

void suite_coeffs(Checks& out, double scale) {
    const double g = 0.5, h = 0.1, theta = 1.5;
    const auto gt = tukey_target(TukeyFamily::G, {0, 1, g, 0});
    const auto ht = tukey_target(TukeyFamily::H, {0, 1, 0, h});
    const DiffusionSpec bm = DiffusionSpec::bm(0.3, 0.7), gbm = DiffusionSpec::gbm(0.05, 0.3),
                        ou = DiffusionSpec::ou(theta, 0.5, 0.8, 0.2);
    const CompositeMap bm_g = true_law_map(bm, gt), gbm_g = true_law_map(gbm, gt), ou_g = true_law_map(ou, gt),
                       bm_h = true_law_map(bm, ht);
    PhiloxEngine eng(5, 0);
    double w[5] = {0, 0, 0, 0, 0};
    for (int i = 0; i < 20; ++i) {
        const double t = 0.05 + 1.95 * eng.uniform();
        const double u = 0.01 + 0.98 * eng.uniform();
        const double zg = tukey_g_quantile(u, {0, 1, g, 0}), zh = tukey_h_quantile(u, {0, 1, 0, h});
        w[0] = std::max(w[0], coeff_gap(gbm_g_coefficients(g, t, zg), sde_coefficients_general(gbm_g, t, zg)));
        w[1] = std::max(w[1], coeff_gap(ou_g_coefficients(g, theta, t, zg), sde_coefficients_general(ou_g, t, zg)));
        w[2] = std::max(w[2], coeff_gap(unified_g_coefficients(g, driver_variance(bm, 0, t), bm.sigma, zg),
                                        sde_coefficients_general(bm_g, t, zg)));
        w[3] = std::max(w[3], coeff_gap(g_sde_coefficients(bm_g, t, zg), sde_coefficients_general(bm_g, t, zg)));
        w[4] = std::max(w[4], coeff_gap(h_sde_coefficients(bm_h, t, zh), sde_coefficients_general(bm_h, t, zh)));
    }
    const char* names[5] = {"gbm_g", "ou_g", "unified_g", "g_sde", "h_sde"};
    for (int k = 0; k < 5; ++k) add(out, "coeffs", names[k], w[k], 1e-10 * scale);
}

void suite_sde(Checks& out, const ExperimentConfig& cfg, double scale) {
    const CompositeMap map = build_map(cfg);
    const TimeGrid grid = TimeGrid::with_dt(cfg.t0, cfg.T, cfg.dt);
    SimOptions opt;
    opt.threads = cfg.threads;
    opt.record_times = {0.5 * (cfg.t0 + cfg.T), cfg.T};
    const std::uint64_t seed = cfg.seed.value_or(1);
    const PathBatch tr = simulate_transform_paths(map, grid, cfg.validate_paths, seed, opt);
    const PathBatch sde = simulate_sde_paths(map, grid, cfg.validate_paths, seed ^ 0x9E3779B97F4A7C15ull, opt);
    for (std::size_t j = 0; j < tr.times.size(); ++j) {
        const KsResult ks = ks_two_sample(sde.column(j), tr.column(j));
        add(out, "sde", "KS D at t=" + num(tr.times[j]), ks.statistic, ks.critical_1 * scale);
    }
}

void suite_bahadur(Checks& out, double scale) {
    const std::vector<std::pair<std::string, LawPtr>> laws = {{"uniform", std::make_shared<UniformLaw>()},
                                                              {"normal", std::make_shared<NormalLaw>()}};
    for (const auto& [name, law] : laws) {
        std::vector<double> s5, s9;
        for (int s = 0; s < 20; ++s) {
            const auto seq = iid_sample(*law, std::size_t{1} << 20, 7000 + s);
            s5.push_back(bahadur_remainder(seq, 0.5, *law).slope);
            s9.push_back(bahadur_remainder(seq, 0.9, *law).slope);
        }
        for (auto* v : {&s5, &s9}) {
            std::sort(v->begin(), v->end());
            const double med = 0.5 * ((*v)[9] + (*v)[10]);
            // Accepted band [-0.9, -0.6] written as a distance from its centre.
            out.push_back({"bahadur", name + " u=" + (v == &s5 ? "0.5" : "0.9") + " median slope", med, 0.15 * scale,
                           std::fabs(med + 0.75) <= 0.15 * scale});
        }
    }
}

void suite_wang(Checks& out, double scale) {
    const DiffusionSpec ou = DiffusionSpec::ou(1.0, 0.0, std::sqrt(2.0), 0.0);
    const std::vector<std::pair<std::string, LawPtr>> targets = {
        {"normal", std::make_shared<NormalLaw>()},
        {"g(0.8)", std::make_shared<TukeyLaw>(TukeyFamily::G, TukeyParams{0, 1, 0.8, 0})},
        {"h(0.1)", std::make_shared<TukeyLaw>(TukeyFamily::H, TukeyParams{0, 1, 0, 0.1})}};
    for (const auto& [name, zeta] : targets) {
        for (double lambda : {-0.5, 0.1, 0.5}) {
            CompositeMap m;
            m.driver = ou;
            m.driver_law = make_static(std::make_shared<NormalLaw>());
            m.law = make_static(std::make_shared<NormalLaw>(lambda, 1.0));
            m.target = make_static(zeta);
            m.tag = LawTag::FalseLaw;
            double worst = 0.0;
            for (int i = 1; i <= 99; ++i) {
                const double z = zeta->quantile(i / 100.0);
                worst = std::max(worst, std::fabs(induced_marginal_cdf(m, 1.0, z) - wang1(zeta->cdf(z), lambda)));
            }
            add(out, "wang", name + " lambda=" + num(lambda), worst, 1e-12 * scale);
        }
    }
}

void suite_premium(Checks& out, const ExperimentConfig& cfg, double scale) {
    const LawPtr risk = std::make_shared<ParetoLaw>(cfg.risk_theta, cfg.risk_alpha);
    const std::vector<PricingOperator> ops = {{"identity"},
                                              {"ph", cfg.ph_r},
                                              {"wang", 1.0, cfg.wang_lambda},
                                              {"tukey_g", 1.0, 0.0, cfg.tukey_g, cfg.tukey_B, cfg.tukey_gamma,
                                               cfg.price_T}};
    for (const auto& op : ops) {
        const auto S = distorted_survival(op, risk, cfg.driver_unit);
        const auto bp = survival_breakpoints(op, cfg.driver_unit);
        double worst = 0.0;
        for (const auto& [a, b, c] : {std::tuple{0.0, 50e3, 100e3}, {200e3, 250e3, 300e3}, {1e6, 3e6, 1e7}}) {
            const double whole = layer_premium(S, a, c, bp);
            const double parts = layer_premium(S, a, b, bp) + layer_premium(S, b, c, bp);
            worst = std::max(worst, std::fabs(whole - parts) / whole);
        }
        add(out, "premium", "additivity " + op.name, worst, 1e-8 * scale);
    }
    // Printed layer table, PH and Wang columns.
    const std::vector<double> ph = {5487, 910, 857, 475, 325, 246, 728, 675, 819, 567};
    const std::vector<double> wang = {5487.0, 845.0, 769.9, 414.2, 278.4, 207.3, 598.0, 533.2, 616.6, 405.7};
    const auto rows = price_table(std::make_shared<ParetoLaw>(2000.0, 1.2), LayerSchedule::reinsurance_default(),
                                  {{"ph", 0.9245}, {"wang", 1.0, 0.1}});
    double worst = 0.0;
    for (std::size_t i = 0; i < ph.size(); ++i) {
        worst = std::max(worst, std::fabs(rows[2 * i].premium / ph[i] - 1.0));
        worst = std::max(worst, std::fabs(rows[2 * i + 1].premium / wang[i] - 1.0));
    }
    add(out, "premium", "layer table PH/Wang max rel dev", worst, 0.01 * scale);
}

std::vector<LipschitzReport> lipschitz_reports() {
    const DiffusionSpec bm = DiffusionSpec::bm(0.0, 1.0);
    return {lipschitz_diagnostics(true_law_map(bm, tukey_target(TukeyFamily::G, {0, 1, 0.5, 0})), TukeyFamily::G),
            lipschitz_diagnostics(true_law_map(bm, tukey_target(TukeyFamily::H, {0, 1, 0, 0.1})), TukeyFamily::H)};
}

// Diagnostic only: the verdict is reported, not enforced.
void suite_lipschitz(Checks& out) {
    for (const auto& rep : lipschitz_reports())
        for (const auto& s : rep.conditions)
            out.push_back({"lipschitz", to_string(rep.family) + " " + s.name + " " + s.boundary,
                           s.bounded ? 1.0 : 0.0, std::nan(""), true});
}

}  // namespace

std::vector<CheckResult> run_validation(const ExperimentConfig& cfg, const std::string& only) {
    const auto& names = validation_suites();
    if (!only.empty() && std::find(names.begin(), names.end(), only) == names.end())
        throw ConfigError("validate.only: unknown suite '" + only + "'");
    const auto want = [&](const std::string& s) { return only.empty() ? s != "lipschitz" : s == only; };
    const double scale = cfg.tolerance_scale;
    Checks out;
    if (want("roundtrip")) suite_roundtrip(out, scale);
    if (want("density")) suite_density(out, scale);
    if (want("coeffs")) suite_coeffs(out, scale);
    if (want("sde")) suite_sde(out, cfg, scale);
    if (want("bahadur")) suite_bahadur(out, scale);
    if (want("wang")) suite_wang(out, scale);
    if (want("premium")) suite_premium(out, cfg, scale);
    if (want("lipschitz")) suite_lipschitz(out);
    return out;
}

int cmd_validate(const ExperimentConfig& cfg, std::ostream& log) {
    const auto start = std::chrono::steady_clock::now();
    const Checks checks = run_validation(cfg, cfg.only);
    const fs::path dir = prepare_out(cfg);
    json m = manifest_base("validate", cfg);
    json jc = json::array();
    std::size_t failed = 0;
    for (const auto& c : checks) {
        failed += c.pass ? 0 : 1;
        jc.push_back({{"suite", c.suite},
                      {"check", c.check},
                      {"value", c.value},
                      {"tolerance", std::isnan(c.tolerance) ? json(nullptr) : json(c.tolerance)},
                      {"pass", c.pass}});
        log << (c.pass ? "pass " : "FAIL ") << c.suite << ": " << c.check << " = " << num(c.value);
        if (!std::isnan(c.tolerance)) log << " (tol " << num(c.tolerance) << ")";
        log << "\n";
    }
    if (cfg.only == "lipschitz") {
        for (const auto& rep : lipschitz_reports()) {
            std::ostringstream csv;
            csv << "condition,boundary,level,z,value,bounded\n";
            for (const auto& s : rep.conditions)
                for (std::size_t i = 0; i < s.levels.size(); ++i)
                    csv << s.name << ',' << s.boundary << ',' << num(s.levels[i]) << ',' << num(s.z[i]) << ','
                        << num(s.values[i]) << ',' << (s.bounded ? 1 : 0) << '\n';
            const std::string file = "lipschitz_" + to_string(rep.family) + ".csv";
            write_atomic(dir / file, csv.str());
            m["outputs"].push_back(file);
        }
    }
    m["checks"] = jc;
    m["failed"] = failed;
    m["wall_time_s"] = seconds_since(start);
    write_atomic(dir / "validate_report.json", m.dump(2) + "\n");
    log << "validate: " << checks.size() - failed << "/" << checks.size() << " checks passed\n";
    return failed == 0 ? kExitOk : kExitValidation;
}

// ---------------------------------------------------------------------------
// coeffs

int cmd_coeffs(const ExperimentConfig& cfg, std::ostream& log) {
    const CompositeMap map = build_map(cfg);
    std::ostringstream csv;
    csv << "t,u,z,alpha,sigma_tilde\n";
    for (double t : cfg.coeff_times) {
        if (!(t >= map.t0)) throw ConfigError("coeffs.times: " + num(t) + " is below grid.t0");
        for (std::size_t i = 1; i <= cfg.coeff_points; ++i) {
            const double u = static_cast<double>(i) / static_cast<double>(cfg.coeff_points + 1);
            const double z = map.target->quantile(t, u);
            const CoefficientPair c = sde_coefficients_general(map, t, z);
            csv << num(t) << ',' << num(u) << ',' << num(z) << ',' << num(c.alpha) << ',' << num(c.sigma_tilde)
                << '\n';
        }
    }
    const fs::path dir = prepare_out(cfg);
    write_atomic(dir / "coeffs.csv", csv.str());
    json m = manifest_base("coeffs", cfg);
    m["outputs"] = {"coeffs.csv"};
    write_atomic(dir / "manifest.json", m.dump(2) + "\n");
    log << "coeffs: " << cfg.coeff_times.size() * cfg.coeff_points << " rows -> " << (dir / "coeffs.csv").string()
        << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// entry point

constexpr double kHeavyH = 0.1;

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Quantile diffusion experiments: simulation, figure data, layer pricing, validation."};
    app.require_subcommand(1, 1);
    app.fallthrough();

    std::string config_path, seed, paths, dt, outdir, family, law, operators, match_layer, only;
    app.add_option("--config", config_path, "INI experiment configuration");
    app.add_option("--seed", seed, "random seed");
    app.add_option("--paths", paths, "number of paths");
    app.add_option("--dt", dt, "Euler step");
    app.add_option("--out", outdir, "output directory");
    app.add_option("--family", family, "Tukey family: g, h or gh");
    app.add_option("--law", law, "law in the map: true or false");
    app.add_option("--operator", operators, "pricing operators, comma separated");
    app.add_option("--match-layer", match_layer, "calibrate gamma, e.g. '(200,300]=414.2'");
    app.add_option("--only", only, "run a single validation suite");

    const std::map<std::string, std::function<int(const ExperimentConfig&, std::ostream&)>> commands = {
        {"simulate", cmd_simulate}, {"figures", cmd_figures}, {"price", cmd_price},
        {"validate", cmd_validate}, {"coeffs", cmd_coeffs}};
    app.add_subcommand("simulate", "simulate transform and SDE path batches");
    app.add_subcommand("figures", "emit quantile and distortion curve data");
    app.add_subcommand("price", "layer premium table, optional gamma calibration");
    app.add_subcommand("validate", "run the validation suites");
    app.add_subcommand("coeffs", "dump drift and volatility on a (t, z) grid");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }
    const std::string name = app.get_subcommands().front()->get_name();
    try {
        Ini ini = config_path.empty() ? Ini{} : Ini::load(config_path);
        const auto flag = [&](const std::string& v, const char* section, const char* key, const char* fname) {
            if (!v.empty()) ini.set(section, key, v, std::string("flag --") + fname);
        };
        flag(seed, "run", "seed", "seed");
        flag(paths, "run", "paths", "paths");
        flag(dt, "grid", "dt", "dt");
        flag(outdir, "run", "out", "out");
        flag(family, "map", "family", "family");
        flag(law, "map", "law", "law");
        flag(operators, "price", "operators", "operator");
        flag(match_layer, "price", "match_layer", "match-layer");
        flag(only, "validate", "only", "only");
        const ExperimentConfig cfg = config_from_ini(ini);
        // Heavy h is allowed, only flagged.
        if (cfg.family != TukeyFamily::G && cfg.h > kHeavyH)
            err << "warning: map.h = " << cfg.h << " exceeds " << kHeavyH << "; the tails become very pronounced\n";
        return commands.at(name)(cfg, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        err << name << " failed: " << e.what() << "\n";
        return kExitValidation;
    }
}

}  // namespace qdiff::cli
