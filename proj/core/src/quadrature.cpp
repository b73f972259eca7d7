#include "gammalab/quadrature.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace gammalab {

GaussHermiteRule gauss_hermite_gamma(int points) {
    if (points < 1) throw std::invalid_argument("gauss_hermite_gamma: points must be >= 1");
    // Jacobi matrix of the probabilists' Hermite polynomials: zero diagonal,
    // off-diagonal sqrt(k).
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(points, points);
    for (int k = 1; k < points; ++k) {
        const double c = std::sqrt(static_cast<double>(k));
        jacobi(k, k - 1) = c;
        jacobi(k - 1, k) = c;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
    if (eig.info() != Eigen::Success)
        throw std::runtime_error("gauss_hermite_gamma: eigensolver failed");

    GaussHermiteRule rule;
    rule.nodes.resize(static_cast<size_t>(points));
    rule.weights.resize(static_cast<size_t>(points));
    for (int i = 0; i < points; ++i) {
        rule.nodes[static_cast<size_t>(i)] = eig.eigenvalues()[i];
        const double v0 = eig.eigenvectors()(0, i);
        rule.weights[static_cast<size_t>(i)] = v0 * v0; // total mass 1
    }
    return rule;
}

namespace {

void check_grid(std::span<const double> t, std::span<const double> v, double a, double b) {
    if (t.size() != v.size() || t.size() < 2)
        throw std::invalid_argument("integrate: need matching grids with >= 2 points");
    if (!(a <= b)) throw std::invalid_argument("integrate: need a <= b");
    if (a < t.front() - 1e-12 || b > t.back() + 1e-12)
        throw std::invalid_argument("integrate: [a,b] outside the sampled range");
}

double interp_linear(std::span<const double> xs, std::span<const double> ys, double x) {
    size_t hi = 1;
    while (hi + 1 < xs.size() && xs[hi] < x) ++hi;
    const size_t lo = hi - 1;
    const double w = (x - xs[lo]) / (xs[hi] - xs[lo]);
    return ys[lo] + w * (ys[hi] - ys[lo]);
}

} // namespace

double integrate_decay(std::span<const double> t, std::span<const double> v,
                       double a, double b) {
    check_grid(t, v, a, b);
    // Work on u = e^{-2t} (decreasing in t) with K = v e^{2t} = v / u:
    // int v dt = (1/2) int K du.
    std::vector<double> u(t.size()), k(t.size());
    for (size_t i = 0; i < t.size(); ++i) {
        u[i] = std::exp(-2.0 * t[i]);
        k[i] = v[i] / u[i];
    }
    const double ua = std::exp(-2.0 * a);
    const double ub = std::exp(-2.0 * b);
    // u is decreasing; flip so interpolation sees an increasing axis.
    std::vector<double> ur(u.rbegin(), u.rend()), kr(k.rbegin(), k.rend());
    const double ka = interp_linear(ur, kr, ua);
    const double kb = interp_linear(ur, kr, ub);

    double total = 0.0;
    double u_prev = ua, k_prev = ka;
    for (size_t i = 0; i < t.size(); ++i) {
        if (u[i] >= u_prev || u[i] <= ub) continue; // outside (ub, ua)
        total += 0.5 * (u_prev - u[i]) * (k_prev + k[i]);
        u_prev = u[i];
        k_prev = k[i];
    }
    total += 0.5 * (u_prev - ub) * (k_prev + kb);
    return 0.5 * total;
}

double integrate_trapezoid(std::span<const double> t, std::span<const double> v,
                           double a, double b) {
    check_grid(t, v, a, b);
    const double va = interp_linear(t, v, a);
    const double vb = interp_linear(t, v, b);
    double total = 0.0;
    double t_prev = a, v_prev = va;
    for (size_t i = 0; i < t.size(); ++i) {
        if (t[i] <= t_prev || t[i] >= b) continue;
        total += 0.5 * (t[i] - t_prev) * (v_prev + v[i]);
        t_prev = t[i];
        v_prev = v[i];
    }
    total += 0.5 * (b - t_prev) * (v_prev + vb);
    return total;
}

} // namespace gammalab
