#pragma once

#include <functional>
#include <vector>

namespace qdiff {

struct QuadResult {
    double value;
    double error;
};

// Adaptive 61-point Gauss-Kronrod on [a, b]; either end may be infinite.
[[nodiscard]] QuadResult integrate(const std::function<double(double)>& f, double a, double b,
                                   double rel_tol = 1e-12, unsigned max_depth = 18);

// Same, split at the interior breakpoints (kinks of the integrand).
[[nodiscard]] QuadResult integrate_pieces(const std::function<double(double)>& f, double a, double b,
                                          std::vector<double> breakpoints, double rel_tol = 1e-12);

}  // namespace qdiff
