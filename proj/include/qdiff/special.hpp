#pragma once

namespace qdiff {

inline constexpr double kSqrt2 = 1.41421356237309504880;
inline constexpr double kSqrt2Pi = 2.50662827463100050242;
inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;
inline constexpr double kPi = 3.14159265358979323846;

[[nodiscard]] double norm_pdf(double x) noexcept;
[[nodiscard]] double norm_cdf(double x) noexcept;

// Standard normal quantile x_u = sqrt(2) erfinv(2u - 1).
// Rational initial guess followed by one Halley step; +-inf at u = 0, 1.
// Throws DomainError outside [0, 1].
[[nodiscard]] double norm_quantile(double u);

// erfinv(y) for y in [-1, 1].
[[nodiscard]] double erf_inv(double y);

// Principal branch W0 on [-1/e, inf), Halley iteration.
[[nodiscard]] double lambert_w0(double x);

// CDF of Student's t with k degrees of freedom.
[[nodiscard]] double student_t_cdf(double x, double k);

}  // namespace qdiff
