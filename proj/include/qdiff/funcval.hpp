#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qdiff/mc_engine.hpp"
#include "qdiff/quantile_core.hpp"

namespace qdiff {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Parametric quantile family u -> Q(u; xi).
class QuantileFamily {
public:
    virtual ~QuantileFamily() = default;
    [[nodiscard]] virtual std::size_t dim() const = 0;
    [[nodiscard]] virtual double value(const Vec& xi, double u) const = 0;
    // Defaults are central differences.
    [[nodiscard]] virtual Vec gradient(const Vec& xi, double u) const;
    [[nodiscard]] virtual Mat hessian(const Vec& xi, double u) const;
    [[nodiscard]] virtual bool admissible(const Vec& xi) const = 0;
    [[nodiscard]] virtual Vec project(const Vec& xi) const = 0;
    [[nodiscard]] virtual std::string name() const = 0;
};

using FamilyPtr = std::shared_ptr<const QuantileFamily>;

inline constexpr double kParamFloor = 1e-8;

// Q(u; b) = u b, b > 0.
class UniformScaleFamily final : public QuantileFamily {
public:
    std::size_t dim() const override { return 1; }
    double value(const Vec& xi, double u) const override { return u * xi[0]; }
    Vec gradient(const Vec& xi, double u) const override;
    Mat hessian(const Vec& xi, double u) const override;
    bool admissible(const Vec& xi) const override { return xi.size() == 1 && xi[0] > 0.0; }
    Vec project(const Vec& xi) const override;
    std::string name() const override { return "uniform"; }
};

// Q(u; A, B) = A + B Q_X(u), B > 0.
class LocationScaleFamily final : public QuantileFamily {
public:
    explicit LocationScaleFamily(LawPtr base) : base_(std::move(base)) {}
    std::size_t dim() const override { return 2; }
    double value(const Vec& xi, double u) const override;
    Vec gradient(const Vec& xi, double u) const override;
    Mat hessian(const Vec& xi, double u) const override;
    bool admissible(const Vec& xi) const override { return xi.size() == 2 && xi[1] > 0.0; }
    Vec project(const Vec& xi) const override;
    std::string name() const override { return "location_scale"; }
    [[nodiscard]] const LawPtr& base() const { return base_; }

private:
    LawPtr base_;
};

// Tukey g-h quantile with xi = (A, B, g, h); analytic first and second partials.
class TukeyGHFamily final : public QuantileFamily {
public:
    std::size_t dim() const override { return 4; }
    double value(const Vec& xi, double u) const override;
    Vec gradient(const Vec& xi, double u) const override;
    Mat hessian(const Vec& xi, double u) const override;
    bool admissible(const Vec& xi) const override;
    Vec project(const Vec& xi) const override;
    std::string name() const override { return "tukey_gh"; }
};

// One coordinate of a parameter diffusion.
struct CoordinateDynamics {
    enum class Kind { Constant, Bm, Gbm, Ou } kind = Kind::Constant;
    double mu = 0.0;
    double sigma = 0.0;
    double theta = 0.0;

    [[nodiscard]] double drift(double x) const;
    [[nodiscard]] double vol(double x) const;
};

// d xi_i = a_i(t, xi) dt + b_i(t, xi) dW^(i), dW^(i) dW^(j) = rho_ij dt.
struct ParameterProcess {
    std::function<Vec(double, const Vec&)> drift;
    std::function<Vec(double, const Vec&)> vol;
    Mat rho;
    Vec xi0;

    [[nodiscard]] static ParameterProcess from_coordinates(const std::vector<CoordinateDynamics>& c,
                                                           const Vec& xi0, const Mat& rho);
    [[nodiscard]] std::size_t dim() const { return static_cast<std::size_t>(xi0.size()); }
    // Symmetric, unit diagonal, entries in [-1, 1], positive semidefinite.
    void validate() const;
    // Lower-triangular L with L L^T = rho; zero pivots leave a zero column.
    [[nodiscard]] Mat loading() const;
};

[[nodiscard]] double function_valued_value(const QuantileFamily& family, const Vec& xi, double u);

struct FunctionValuedCoefficients {
    double drift;
    Vec loading;  // coefficient of dW^(i)
};

[[nodiscard]] FunctionValuedCoefficients function_valued_sde_coefficients(
    const QuantileFamily& family, const Vec& xi, double u, const ParameterProcess& process, double t);

// xi paths: values[(p * times + j) * dim + i].
struct ParameterBatch {
    std::vector<double> times;
    std::size_t n_paths = 0;
    std::size_t dim = 0;
    std::vector<double> values;

    [[nodiscard]] Vec at(std::size_t path, std::size_t j) const;
};

// Euler paths of xi with projection onto the admissible set after every step.
[[nodiscard]] ParameterBatch simulate_parameter_paths(const ParameterProcess& process,
                                                      const QuantileFamily& family,
                                                      const TimeGrid& grid, std::size_t n_paths,
                                                      std::uint64_t seed, const SimOptions& opt = {});

struct FixedLevelPaths {
    ParameterBatch xi;
    PathBatch euler;   // Euler-Maruyama on the fixed-level SDE
    PathBatch direct;  // Q(u_bar; xi_t) along the same xi path
};

// Scalar diffusion Z_t = Q(u_bar; xi_t).
class FixedLevelProcess {
public:
    FixedLevelProcess(FamilyPtr family, ParameterProcess process, double u_bar);
    [[nodiscard]] double u_bar() const { return u_; }
    [[nodiscard]] double value(const Vec& xi) const;
    [[nodiscard]] FunctionValuedCoefficients coefficients(double t, const Vec& xi) const;
    [[nodiscard]] FixedLevelPaths simulate(const TimeGrid& grid, std::size_t n_paths,
                                           std::uint64_t seed, const SimOptions& opt = {}) const;

private:
    FamilyPtr family_;
    ParameterProcess process_;
    double u_;
};

[[nodiscard]] FixedLevelProcess fixed_level_process(FamilyPtr family, ParameterProcess process,
                                                    double u_bar);

}  // namespace qdiff
