#pragma once

#include <span>
#include <vector>

namespace gammalab {

// Gauss-Hermite rule for the standard Gaussian weight: sum w_i g(y_i)
// approximates E[g(Y)], Y ~ N(0,1). Nodes/weights via Golub-Welsch on the
// probabilists' Hermite recurrence.
struct GaussHermiteRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};
GaussHermiteRule gauss_hermite_gamma(int points);

// int_a^b v(t) dt for curves sampled as v(t_i), computed as a trapezoid in
// u = e^{-2t} on K(u) = e^{2t} v(t). Exact whenever K is affine in u, in
// particular for v = c e^{-2t} and v = c e^{-4t}; that is the shape decay
// curves take, so this is the workhorse for every time integral here.
// a and b must lie in [t.front(), t.back()] (values interpolated in u).
double integrate_decay(std::span<const double> t, std::span<const double> v,
                       double a, double b);

// Plain trapezoid in t over [a, b] on the same sampled data.
double integrate_trapezoid(std::span<const double> t, std::span<const double> v,
                           double a, double b);

} // namespace gammalab
