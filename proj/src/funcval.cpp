#include "qdiff/funcval.hpp"

#include <cmath>

#include "qdiff/errors.hpp"
#include "qdiff/special.hpp"

namespace qdiff {

namespace {

void check_unit(double u) {
    if (!(u >= 0.0 && u <= 1.0)) throw DomainError("function-valued quantile: u outside [0,1]");
}

// k(g, x) = (e^{gx} - 1)/g and its first two g-derivatives.
struct KG {
    double k, kg, kgg;
};

KG k_partials(double g, double x) {
    if (std::fabs(g * x) < 0.5) {
        // k = sum_n g^n x^{n+1}/(n+1)!
        KG r{0.0, 0.0, 0.0};
        double c = x;                          // x^{n+1}/(n+1)!
        double gn = 1.0, gn1 = 0.0, gn2 = 0.0;  // g^n, g^{n-1}, g^{n-2}
        for (int n = 0; n < 40; ++n) {
            r.k += c * gn;
            r.kg += n * c * gn1;
            r.kgg += n * (n - 1) * c * gn2;
            gn2 = gn1;
            gn1 = gn;
            gn *= g;
            c *= x / (n + 2);
        }
        return r;
    }
    const double e = std::exp(g * x);
    const double k = std::expm1(g * x) / g;
    const double kg = (x * e - k) / g;
    return {k, kg, (x * x * e - 2.0 * kg) / g};
}

}  // namespace

Vec QuantileFamily::gradient(const Vec& xi, double u) const {
    Vec gr(xi.size());
    for (Eigen::Index i = 0; i < xi.size(); ++i) {
        const double d = 1e-6 * std::max(1.0, std::fabs(xi[i]));
        Vec p = xi, m = xi;
        p[i] += d;
        m[i] -= d;
        gr[i] = (value(p, u) - value(m, u)) / (2.0 * d);
    }
    return gr;
}

Mat QuantileFamily::hessian(const Vec& xi, double u) const {
    const Eigen::Index n = xi.size();
    Mat H(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double d = 1e-5 * std::max(1.0, std::fabs(xi[i]));
        Vec p = xi, m = xi;
        p[i] += d;
        m[i] -= d;
        H.row(i) = ((gradient(p, u) - gradient(m, u)) / (2.0 * d)).transpose();
    }
    return 0.5 * (H + H.transpose());
}

Vec UniformScaleFamily::gradient(const Vec&, double u) const { return Vec::Constant(1, u); }
Mat UniformScaleFamily::hessian(const Vec&, double) const { return Mat::Zero(1, 1); }
Vec UniformScaleFamily::project(const Vec& xi) const {
    Vec r = xi;
    r[0] = std::max(r[0], kParamFloor);
    return r;
}

double LocationScaleFamily::value(const Vec& xi, double u) const {
    return xi[0] + xi[1] * base_->quantile(u);
}
Vec LocationScaleFamily::gradient(const Vec&, double u) const {
    Vec g(2);
    g << 1.0, base_->quantile(u);
    return g;
}
Mat LocationScaleFamily::hessian(const Vec&, double) const { return Mat::Zero(2, 2); }
Vec LocationScaleFamily::project(const Vec& xi) const {
    Vec r = xi;
    r[1] = std::max(r[1], kParamFloor);
    return r;
}

double TukeyGHFamily::value(const Vec& xi, double u) const {
    check_unit(u);
    return tukey_transform_value(norm_quantile(u), TukeyParams{xi[0], xi[1], xi[2], xi[3]});
}

Vec TukeyGHFamily::gradient(const Vec& xi, double u) const {
    const double B = xi[1], g = xi[2], h = xi[3];
    const double x = norm_quantile(u);
    const KG kp = k_partials(g, x);
    const double E = std::exp(0.5 * h * x * x);
    Vec gr(4);
    gr << 1.0, kp.k * E, B * E * kp.kg, 0.5 * B * kp.k * E * x * x;
    return gr;
}

Mat TukeyGHFamily::hessian(const Vec& xi, double u) const {
    const double B = xi[1], g = xi[2], h = xi[3];
    const double x = norm_quantile(u);
    const double x2 = x * x;
    const KG kp = k_partials(g, x);
    const double E = std::exp(0.5 * h * x2);
    Mat H = Mat::Zero(4, 4);
    H(1, 2) = H(2, 1) = E * kp.kg;
    H(1, 3) = H(3, 1) = 0.5 * kp.k * E * x2;
    H(2, 2) = B * E * kp.kgg;
    H(2, 3) = H(3, 2) = 0.5 * B * kp.kg * E * x2;
    H(3, 3) = 0.25 * B * kp.k * E * x2 * x2;
    return H;
}

bool TukeyGHFamily::admissible(const Vec& xi) const {
    return xi.size() == 4 && xi.allFinite() && xi[1] > 0.0 && xi[3] >= 0.0;
}

Vec TukeyGHFamily::project(const Vec& xi) const {
    Vec r = xi;
    r[1] = std::max(r[1], kParamFloor);
    r[3] = std::max(r[3], kParamFloor);
    return r;
}

double CoordinateDynamics::drift(double x) const {
    switch (kind) {
        case Kind::Constant: return 0.0;
        case Kind::Bm: return mu;
        case Kind::Gbm: return mu * x;
        case Kind::Ou: return theta * (mu - x);
    }
    return 0.0;
}

double CoordinateDynamics::vol(double x) const {
    switch (kind) {
        case Kind::Constant: return 0.0;
        case Kind::Bm:
        case Kind::Ou: return sigma;
        case Kind::Gbm: return sigma * x;
    }
    return 0.0;
}

ParameterProcess ParameterProcess::from_coordinates(const std::vector<CoordinateDynamics>& c,
                                                    const Vec& xi0, const Mat& rho) {
    ParameterProcess p;
    p.xi0 = xi0;
    p.rho = rho;
    p.drift = [c](double, const Vec& xi) {
        Vec a(xi.size());
        for (Eigen::Index i = 0; i < xi.size(); ++i) a[i] = c[static_cast<std::size_t>(i)].drift(xi[i]);
        return a;
    };
    p.vol = [c](double, const Vec& xi) {
        Vec b(xi.size());
        for (Eigen::Index i = 0; i < xi.size(); ++i) b[i] = c[static_cast<std::size_t>(i)].vol(xi[i]);
        return b;
    };
    if (c.size() != p.dim()) throw DomainError("ParameterProcess: coordinate count mismatch");
    p.validate();
    return p;
}

void ParameterProcess::validate() const {
    const auto n = xi0.size();
    if (!drift || !vol) throw DomainError("ParameterProcess: missing coefficients");
    if (rho.rows() != n || rho.cols() != n) throw DomainError("ParameterProcess: rho has wrong shape");
    for (Eigen::Index i = 0; i < n; ++i) {
        if (std::fabs(rho(i, i) - 1.0) > 1e-12) throw DomainError("ParameterProcess: rho diagonal must be 1");
        for (Eigen::Index j = 0; j < n; ++j) {
            if (std::fabs(rho(i, j)) > 1.0) throw DomainError("ParameterProcess: rho entry outside [-1,1]");
            if (std::fabs(rho(i, j) - rho(j, i)) > 1e-12) throw DomainError("ParameterProcess: rho not symmetric");
        }
    }
    const Eigen::SelfAdjointEigenSolver<Mat> es(rho);
    if (es.eigenvalues().minCoeff() < -1e-10) throw DomainError("ParameterProcess: rho not positive semidefinite");
}

Mat ParameterProcess::loading() const {
    const auto n = rho.rows();
    Mat L = Mat::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        double s = rho(j, j);
        for (Eigen::Index k = 0; k < j; ++k) s -= L(j, k) * L(j, k);
        L(j, j) = s > 1e-14 ? std::sqrt(s) : 0.0;
        for (Eigen::Index i = j + 1; i < n; ++i) {
            double v = rho(i, j);
            for (Eigen::Index k = 0; k < j; ++k) v -= L(i, k) * L(j, k);
            L(i, j) = L(j, j) > 0.0 ? v / L(j, j) : 0.0;
        }
    }
    return L;
}

double function_valued_value(const QuantileFamily& family, const Vec& xi, double u) {
    check_unit(u);
    if (!family.admissible(xi)) throw DomainError("function_valued_value: inadmissible parameters");
    return family.value(xi, u);
}

FunctionValuedCoefficients function_valued_sde_coefficients(const QuantileFamily& family,
                                                            const Vec& xi, double u,
                                                            const ParameterProcess& process,
                                                            double t) {
    check_unit(u);
    if (!family.admissible(xi)) throw DomainError("function_valued_sde_coefficients: inadmissible parameters");
    const Vec grad = family.gradient(xi, u);
    const Mat H = family.hessian(xi, u);
    const Vec a = process.drift(t, xi);
    const Vec b = process.vol(t, xi);
    double drift = grad.dot(a);
    for (Eigen::Index i = 0; i < xi.size(); ++i)
        for (Eigen::Index j = 0; j < xi.size(); ++j) drift += 0.5 * H(i, j) * b[i] * b[j] * process.rho(i, j);
    return {drift, grad.cwiseProduct(b)};
}

Vec ParameterBatch::at(std::size_t path, std::size_t j) const {
    Vec v(static_cast<Eigen::Index>(dim));
    const std::size_t base = (path * times.size() + j) * dim;
    for (std::size_t i = 0; i < dim; ++i) v[static_cast<Eigen::Index>(i)] = values[base + i];
    return v;
}

namespace {

// Shared Euler loop for xi and, optionally, the fixed-level Z.
void run_paths(const ParameterProcess& process, const QuantileFamily& family, const TimeGrid& grid,
               std::size_t n_paths, std::uint64_t seed, const SimOptions& opt, ParameterBatch& xb,
               const FixedLevelProcess* fixed, PathBatch* euler, PathBatch* direct) {
    grid.validate();
    process.validate();
    if (n_paths == 0) throw DomainError("simulate_parameter_paths: need at least one path");
    const auto slots = detail::record_slots(grid, opt.record_times, xb.times);
    const std::size_t nt = xb.times.size(), d = process.dim();
    xb.n_paths = n_paths;
    xb.dim = d;
    xb.values.assign(n_paths * nt * d, 0.0);
    for (PathBatch* pb : {euler, direct}) {
        if (!pb) continue;
        pb->grid = grid;
        pb->times = xb.times;
        pb->n_paths = n_paths;
        pb->seed = seed;
        pb->values.assign(n_paths * nt, 0.0);
    }
    if (euler) euler->label = PathLabel::Sde;
    if (direct) direct->label = PathLabel::Transform;
    const Mat L = process.loading();
    const double dt = grid.dt(), sq = std::sqrt(dt);

    detail::parallel_for(n_paths, opt.threads, [&](std::size_t begin, std::size_t end) {
        Vec nrm(static_cast<Eigen::Index>(d));
        for (std::size_t p = begin; p < end; ++p) {
            PhiloxEngine eng(seed, p);
            NormalDist nd;
            Vec xi = family.project(process.xi0);
            double z = fixed ? fixed->value(xi) : 0.0;
            const auto store = [&](std::size_t slot) {
                for (std::size_t i = 0; i < d; ++i)
                    xb.values[(p * nt + slot) * d + i] = xi[static_cast<Eigen::Index>(i)];
                if (euler) euler->values[p * nt + slot] = z;
                if (direct) direct->values[p * nt + slot] = fixed->value(xi);
            };
            if (slots[0] >= 0) store(static_cast<std::size_t>(slots[0]));
            for (std::size_t k = 0; k < grid.steps; ++k) {
                const double t = grid.time(k);
                for (auto& v : nrm) v = nd(eng);
                const Vec dW = L * nrm * sq;
                if (fixed) {
                    const FunctionValuedCoefficients c = fixed->coefficients(t, xi);
                    z += c.drift * dt + c.loading.dot(dW);
                }
                xi += process.drift(t, xi) * dt + process.vol(t, xi).cwiseProduct(dW);
                xi = family.project(xi);
                if (slots[k + 1] >= 0) store(static_cast<std::size_t>(slots[k + 1]));
            }
        }
    });
}

}  // namespace

ParameterBatch simulate_parameter_paths(const ParameterProcess& process, const QuantileFamily& family,
                                        const TimeGrid& grid, std::size_t n_paths, std::uint64_t seed,
                                        const SimOptions& opt) {
    ParameterBatch xb;
    run_paths(process, family, grid, n_paths, seed, opt, xb, nullptr, nullptr, nullptr);
    return xb;
}

FixedLevelProcess::FixedLevelProcess(FamilyPtr family, ParameterProcess process, double u_bar)
    : family_(std::move(family)), process_(std::move(process)), u_(u_bar) {
    check_unit(u_bar);
    process_.validate();
    if (!family_ || family_->dim() != process_.dim())
        throw DomainError("fixed_level_process: family and parameter process dimensions differ");
}

double FixedLevelProcess::value(const Vec& xi) const { return function_valued_value(*family_, xi, u_); }

FunctionValuedCoefficients FixedLevelProcess::coefficients(double t, const Vec& xi) const {
    return function_valued_sde_coefficients(*family_, xi, u_, process_, t);
}

FixedLevelPaths FixedLevelProcess::simulate(const TimeGrid& grid, std::size_t n_paths,
                                            std::uint64_t seed, const SimOptions& opt) const {
    FixedLevelPaths out;
    run_paths(process_, *family_, grid, n_paths, seed, opt, out.xi, this, &out.euler, &out.direct);
    return out;
}

FixedLevelProcess fixed_level_process(FamilyPtr family, ParameterProcess process, double u_bar) {
    return FixedLevelProcess(std::move(family), std::move(process), u_bar);
}

}  // namespace qdiff
