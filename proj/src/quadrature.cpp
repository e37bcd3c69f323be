#include "qdiff/quadrature.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "qdiff/errors.hpp"

namespace qdiff {

QuadResult integrate(const std::function<double(double)>& f, double a, double b, double rel_tol,
                     unsigned max_depth) {
    if (a == b) return {0.0, 0.0};
    if (a > b) {
        const QuadResult r = integrate(f, b, a, rel_tol, max_depth);
        return {-r.value, r.error};
    }
    double err = 0.0;
    const double v = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, max_depth,
                                                                                   rel_tol, &err);
    return {v, err};
}

QuadResult integrate_pieces(const std::function<double(double)>& f, double a, double b,
                            std::vector<double> breakpoints, double rel_tol) {
    std::sort(breakpoints.begin(), breakpoints.end());
    std::vector<std::pair<double, double>> pieces;
    double lo = a;
    for (double c : breakpoints) {
        if (!(c > lo && c < b)) continue;
        pieces.emplace_back(lo, c);
        lo = c;
    }
    pieces.emplace_back(lo, b);

    // A coarse pass fixes the scale of the whole integral; each piece is then
    // refined to rel_tol of that scale rather than of its own (possibly tiny) value.
    std::vector<double> coarse(pieces.size());
    double scale = 0.0;
    for (std::size_t i = 0; i < pieces.size(); ++i) {
        coarse[i] = std::fabs(integrate(f, pieces[i].first, pieces[i].second, 1e-3, 3).value);
        scale += coarse[i];
    }
    QuadResult total{0.0, 0.0};
    for (std::size_t i = 0; i < pieces.size(); ++i) {
        double tol = rel_tol;
        if (coarse[i] > 0.0 && scale > coarse[i]) tol = std::min(1e-3, rel_tol * scale / coarse[i]);
        if (coarse[i] == 0.0 && scale > 0.0) tol = 1e-3;
        const QuadResult r = integrate(f, pieces[i].first, pieces[i].second, tol);
        total.value += r.value;
        total.error += r.error;
    }
    return total;
}

}  // namespace qdiff
