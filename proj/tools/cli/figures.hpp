#pragma once

#include <string>
#include <vector>

namespace qdiff::cli {

struct Curve {
    std::string group;  // file the curve belongs to
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

// (u, Q(u)) for the g and h sweeps plus the normal reference, on u = i/(n+1).
[[nodiscard]] std::vector<Curve> tukey_quantile_curves(std::size_t n = 199);

// (F^P(y), F^{P^Z}(y)) at time t over a drifted BM: true-law g-h sweeps for
// mu in {0, 0.8} and the false law Phi(x + lambda) with a lambda sweep.
// Endpoints 0 and 1 are included.
[[nodiscard]] std::vector<Curve> distortion_curves(double t = 0.5, std::size_t n = 199);

}  // namespace qdiff::cli
