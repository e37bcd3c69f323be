#include "cli/figures.hpp"

#include <cstdio>

#include "qdiff/distortion.hpp"
#include "qdiff/special.hpp"

namespace qdiff::cli {

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

std::vector<double> interior_grid(std::size_t n) {
    std::vector<double> u(n);
    for (std::size_t i = 0; i < n; ++i) u[i] = static_cast<double>(i + 1) / static_cast<double>(n + 1);
    return u;
}

Curve quantile_curve(std::string group, std::string label, const TukeyParams& p, std::size_t n) {
    Curve c{std::move(group), std::move(label), interior_grid(n), {}};
    // Plain transform of the normal quantile: negative h is drawn as well,
    // where Q is no longer monotone.
    for (double u : c.x) c.y.push_back(tukey_transform_value(norm_quantile(u), p));
    return c;
}

Curve normal_curve(std::string group, std::size_t n) {
    Curve c{std::move(group), "normal", interior_grid(n), {}};
    for (double u : c.x) c.y.push_back(norm_quantile(u));
    return c;
}

Curve distortion_curve(std::string group, std::string label, const CompositeMap& map, double t,
                       std::size_t n) {
    const DistortionOperator nu = make_quantile_induced(map, t);
    Curve c{std::move(group), std::move(label), {}, {}};
    for (std::size_t i = 0; i <= n + 1; ++i) {
        const double u = static_cast<double>(i) / static_cast<double>(n + 1);
        c.x.push_back(u);
        c.y.push_back(nu(u));
    }
    return c;
}

}  // namespace

std::vector<Curve> tukey_quantile_curves(std::size_t n) {
    std::vector<Curve> out;
    out.push_back(normal_curve("tukey_g_quantiles", n));
    for (double g : {-3.0, -1.5, -0.8, -0.3, 0.3, 0.8, 1.5, 3.0})
        out.push_back(quantile_curve("tukey_g_quantiles", "g=" + num(g), {0, 1, g, 0}, n));
    out.push_back(normal_curve("tukey_h_quantiles", n));
    for (double h : {-0.1, -0.05, 0.05, 0.1, 0.6, 1.0})
        out.push_back(quantile_curve("tukey_h_quantiles", "h=" + num(h), {0, 1, 0, h}, n));
    return out;
}

std::vector<Curve> distortion_curves(double t, std::size_t n) {
    struct GH {
        double g, h;
    };
    const std::vector<GH> sweep = {{0.3, 0.0}, {0.8, 0.0}, {-0.8, 0.0}, {0.0, 0.1}, {0.0, 0.6},
                                   {0.8, 0.1}, {0.5, 0.5}, {-0.5, 0.1}};
    const auto target_of = [](const GH& p) {
        const TukeyFamily fam = p.h == 0.0 ? TukeyFamily::G : (p.g == 0.0 ? TukeyFamily::H : TukeyFamily::GH);
        return tukey_target(fam, {0, 1, p.g, p.h});
    };
    std::vector<Curve> out;
    for (double mu : {0.0, 0.8}) {
        const std::string group = "distortion_mu" + num(mu);
        const DiffusionSpec bm = DiffusionSpec::bm(mu, 1.0, 0.0);
        // Target equal to the driver marginal: the diagonal.
        out.push_back(distortion_curve(group, "identity", true_law_map(bm, marginal_law(bm)), t, n));
        for (const auto& p : sweep)
            out.push_back(distortion_curve(group, "g=" + num(p.g) + " h=" + num(p.h),
                                           true_law_map(bm, target_of(p)), t, n));
    }
    const DiffusionSpec bm = DiffusionSpec::bm(0.0, 1.0, 0.0);
    for (const GH& p : std::vector<GH>{{0.8, 0.1}, {0.0, 0.1}, {0.5, 0.0}}) {
        for (double lambda : {-1.0, -0.5, 0.5, 1.0}) {
            // F(x) = Phi(x + lambda) is the N(-lambda, 1) law.
            const auto law = make_static(std::make_shared<NormalLaw>(-lambda, 1.0));
            out.push_back(distortion_curve("distortion_false",
                                           "g=" + num(p.g) + " h=" + num(p.h) + " lambda=" + num(lambda),
                                           false_law_map(bm, law, target_of(p)), t, n));
        }
    }
    return out;
}

}  // namespace qdiff::cli
