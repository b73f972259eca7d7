#include "gammalab/softmax.hpp"

#include <cmath>
#include <stdexcept>

namespace gammalab {

namespace {

void require_nonempty(const Eigen::VectorXd& x, const char* who) {
    if (x.size() == 0) throw std::invalid_argument(std::string(who) + ": empty vector");
}

void require_beta(double beta, const char* who) {
    if (!(beta > 0.0) || !std::isfinite(beta))
        throw std::domain_error(std::string(who) + ": beta must be positive and finite");
}

} // namespace

double log_sum_exp(const Eigen::VectorXd& x) {
    require_nonempty(x, "log_sum_exp");
    const double m = x.maxCoeff();
    if (!std::isfinite(m)) throw std::invalid_argument("log_sum_exp: non-finite entry");
    double s = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) s += std::exp(x[i] - m);
    return m + std::log(s);
}

double free_energy(const Eigen::VectorXd& x, double beta) {
    require_nonempty(x, "free_energy");
    require_beta(beta, "free_energy");
    const double m = x.maxCoeff();
    if (!std::isfinite(m)) throw std::invalid_argument("free_energy: non-finite entry");
    double s = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) s += std::exp(beta * (x[i] - m));
    return m + std::log(s) / beta;
}

SoftmaxState gradient_f_beta(const Eigen::VectorXd& x, double beta) {
    require_nonempty(x, "gradient_f_beta");
    require_beta(beta, "gradient_f_beta");
    SoftmaxState state;
    state.logits = beta * x;
    state.weights.resize(x.size());
    const double m = state.logits.maxCoeff();
    if (!std::isfinite(m)) throw std::invalid_argument("gradient_f_beta: non-finite entry");
    double s = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double e = std::exp(state.logits[i] - m);
        state.weights[i] = e;
        s += e;
    }
    state.weights /= s;
    state.log_z = m + std::log(s);
    return state;
}

void softmax_weights(const Eigen::VectorXd& x, double beta, Eigen::VectorXd& weights) {
    weights.resize(x.size());
    double m = x[0];
    for (Eigen::Index i = 1; i < x.size(); ++i) m = std::max(m, x[i]);
    double s = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double e = std::exp(beta * (x[i] - m));
        weights[i] = e;
        s += e;
    }
    weights /= s;
}

Eigen::MatrixXd softmax_hessian_dense(const Eigen::VectorXd& weights, double beta) {
    if (weights.size() > kDenseHessianCap)
        throw std::length_error("softmax_hessian_dense: n exceeds the dense cap, use the factored form");
    Eigen::MatrixXd h = -beta * (weights * weights.transpose());
    h.diagonal() += beta * weights;
    return h;
}

Eigen::MatrixXd hessian_f_beta(const SoftmaxState& state, double beta) {
    require_beta(beta, "hessian_f_beta");
    return softmax_hessian_dense(state.weights, beta);
}

double softmax_hessian_frob_sq(const Eigen::VectorXd& w, double beta) {
    double s2 = 0.0, s3 = 0.0;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        const double sq = w[i] * w[i];
        s2 += sq;
        s3 += sq * w[i];
    }
    return beta * beta * (s2 - 2.0 * s3 + s2 * s2);
}

double softmax_hessian_inner(const Eigen::VectorXd& w, const Eigen::VectorXd& v, double beta) {
    double d = 0.0, a = 0.0, b = 0.0;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        const double wi = w[i], vi = v[i];
        d += wi * vi;
        a += wi * wi * vi;
        b += wi * vi * vi;
    }
    return beta * beta * (d - a - b + d * d);
}

double gamma_op(const Eigen::VectorXd& grad) { return grad.squaredNorm(); }

double gamma2_op(const Eigen::VectorXd& grad, const Eigen::MatrixXd& hess) {
    if (hess.rows() != grad.size() || hess.cols() != grad.size())
        throw std::invalid_argument("gamma2_op: shape mismatch");
    return hess.squaredNorm() + grad.squaredNorm();
}

double ou_generator_f_beta(const Eigen::VectorXd& x, const Eigen::VectorXd& w, double beta) {
    return beta * (1.0 - w.squaredNorm()) - x.dot(w);
}

} // namespace gammalab
