#pragma once

#include <Eigen/Dense>

namespace gammalab {

// log sum_i e^{x_i}, max-shifted so any finite input is safe.
double log_sum_exp(const Eigen::VectorXd& x);

// f_beta(x) = (1/beta) log sum_i e^{beta x_i}. Computed as
// max(x) + (1/beta) log sum e^{beta(x_i - max)}, so beta*x never overflows
// and max(x) <= f_beta(x) <= max(x) + log(n)/beta holds by construction.
double free_energy(const Eigen::VectorXd& x, double beta);

struct SoftmaxState {
    Eigen::VectorXd logits;  // beta * x
    Eigen::VectorXd weights; // w_i = e^{beta x_i} / sum_k e^{beta x_k}
    double log_z = 0.0;      // log sum_k e^{beta x_k}
};

// Gradient of f_beta: the softmax weights of beta*x.
SoftmaxState gradient_f_beta(const Eigen::VectorXd& x, double beta);

// Weight vector only, writing into a caller buffer (hot path).
void softmax_weights(const Eigen::VectorXd& x, double beta, Eigen::VectorXd& weights);

// Hess f_beta = beta (diag(w) - w w^T). Dense form is refused above this
// cap; everything size-sensitive works off the weights directly.
inline constexpr int kDenseHessianCap = 512;
Eigen::MatrixXd hessian_f_beta(const SoftmaxState& state, double beta);
Eigen::MatrixXd softmax_hessian_dense(const Eigen::VectorXd& weights, double beta);

// ||Hess f_beta||_F^2 from the weights alone:
//   beta^2 (S2 - 2 S3 + S2^2),  S_k = sum_i w_i^k.
double softmax_hessian_frob_sq(const Eigen::VectorXd& weights, double beta);

// Frobenius inner product of two softmax Hessians with the same beta:
//   beta^2 (d - a - b + d^2)
// with d = sum w_i v_i, a = sum w_i^2 v_i, b = sum w_i v_i^2.
double softmax_hessian_inner(const Eigen::VectorXd& w, const Eigen::VectorXd& v, double beta);

// Carre du champ of the Ornstein-Uhlenbeck generator and its iterate:
//   gamma = |grad|^2,   gamma2 = ||hess||_F^2 + |grad|^2.
double gamma_op(const Eigen::VectorXd& grad);
double gamma2_op(const Eigen::VectorXd& grad, const Eigen::MatrixXd& hess);

// L f_beta = beta (1 - sum w_i^2) - x . w  for  L = Laplacian - x . grad.
double ou_generator_f_beta(const Eigen::VectorXd& x, const Eigen::VectorXd& weights, double beta);

} // namespace gammalab
