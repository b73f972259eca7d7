#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>

#include "gammalab/curves.hpp"
#include "gammalab/gaussian.hpp"
#include "gammalab/stats.hpp"
#include "gammalab/test_functions.hpp"

namespace gammalab {

// Sampling plan for the Mehler integral P_t f(x) = E_y f(x e^{-t} + s_t y),
// s_t = sqrt(1-e^{-2t}). inner counts raw y draws per evaluation point
// (antithetic draws come in +-y pairs, and a pair counts as one independent
// draw everywhere a variance or a bias correction is computed). outer is the
// number of x draws per curve point; it doubles until every point meets
// target_rel_ci or max_outer is reached.
struct MehlerConfig {
    std::int64_t outer = 4096;
    int inner = 256;
    bool antithetic = true;
    int batches = 32;
    double target_rel_ci = 0.05;
    std::int64_t max_outer = 1 << 16;

    MehlerConfig sized(std::int64_t outer_, int inner_) const {
        MehlerConfig c = *this;
        c.outer = outer_;
        c.inner = inner_;
        if (c.max_outer < outer_) c.max_outer = outer_;
        return c;
    }
};

// Monte Carlo value of P_t f(x) with its standard error. t = 0 bypasses
// sampling and returns f(x) exactly.
EstimateWithCI mehler_apply(const std::function<double(const Eigen::VectorXd&)>& f, double t,
                            const Eigen::VectorXd& x, const GaussianMeasure& mu,
                            const MehlerConfig& cfg, RngStream rng);
EstimateWithCI mehler_apply(const TestFunction& f, double t, const Eigen::VectorXd& x,
                            const GaussianMeasure& mu, const MehlerConfig& cfg, RngStream rng);

struct VectorEstimate {
    Eigen::VectorXd value;
    Eigen::VectorXd std_error;
    std::int64_t n_draws = 0;
};

// grad P_t f(x) = e^{-t} P_t(grad f)(x), estimated by the inner average of
// grad f at the Mehler points. Exact (no sampling) at t = 0.
VectorEstimate pt_gradient(const TestFunction& f, double t, const Eigen::VectorXd& x,
                           const GaussianMeasure& mu, const MehlerConfig& cfg, RngStream rng);

// Hess P_t f(x) = e^{-2t} P_t(Hess f)(x); dense output.
Eigen::MatrixXd pt_hessian(const TestFunction& f, double t, const Eigen::VectorXd& x,
                           const GaussianMeasure& mu, const MehlerConfig& cfg, RngStream rng);

// Which integrated quantities a curve run should produce.
struct CurveRequest {
    bool gamma = true;   // int Gamma(P_t f) dmu                  (kind I)
    bool gamma2 = false; // int Gamma_2(P_t f) dmu
    bool hessian = false;// int ||Hess P_t f||_F^2 dmu  (the Gamma_2 - Gamma part)
};

struct CurveBundle {
    DecayCurve gamma;
    DecayCurve gamma2;
    DecayCurve hessian;
};

// Nested-MC decay curves. Per outer sample the squared inner mean is biased
// upward by (inner spread)/K; every squared quantity below is therefore the
// exact U-statistic (sum over distinct inner pairs), and the uncorrected
// value is kept alongside in DecayCurve::raw. All Gamma_2 work runs off the
// factored softmax Hessian; the Frobenius term uses the dense O(K n^2)
// accumulation when n <= inner and the O(K^2 n) pairwise form otherwise.
CurveBundle decay_curves(const TestFunction& f, const GaussianMeasure& mu, const TimeGrid& grid,
                         const MehlerConfig& cfg, RngStream rng, const CurveRequest& request);

DecayCurve i_curve(const TestFunction& f, const GaussianMeasure& mu, const TimeGrid& grid,
                   const MehlerConfig& cfg, RngStream rng);

DecayCurve gamma2_integral_curve(const TestFunction& f, const GaussianMeasure& mu,
                                 const TimeGrid& grid, const MehlerConfig& cfg, RngStream rng);

// I_r(t) conventions. `gamma` is int Gamma_r(P_t f) dmu =
// e^{-2t} E <P_t grad f, M^{(r)} P_t grad f> with M^{(r)} the entrywise power;
// it satisfies Var = 2 int I_1 exactly. `paper` is the literal display
// 2 e^{-2t} E <grad f, M^{(r)} P_t grad f>, which doubles the t = 0 value.
enum class IrNormalization { gamma, paper };

DecayCurve i_r_curve(const TestFunction& f, const GaussianMeasure& mu, int r,
                     const TimeGrid& grid, const MehlerConfig& cfg, RngStream rng,
                     IrNormalization normalization = IrNormalization::gamma);

// int (P_t f)^2 dmu, inner-bias corrected (for the L^p contraction checks).
EstimateWithCI pt_l2_norm_sq(const TestFunction& f, double t, const GaussianMeasure& mu,
                             const MehlerConfig& cfg, RngStream rng);

struct DynamicalVariance {
    EstimateWithCI total;    // 2 int_0^grid I + tail
    double quadrature = 0.0; // the grid part
    double tail = 0.0;       // e^{-2 tail_T} times the direct variance estimate
    bool tail_ok = true;     // false when the tail exceeds 10% of the total
    EstimateWithCI direct;   // direct MC variance (also the tail input)
    DecayCurve curve;
};

// Var(f) = 2 int_0^inf I(s) ds, evaluated by quadrature over the grid with
// a semigroup-decay tail correction e^{-2 tail_T} Var_hat.
DynamicalVariance variance_dynamical(const TestFunction& f, const GaussianMeasure& mu,
                                     const TimeGrid& grid, const MehlerConfig& cfg,
                                     const EstimatorConfig& direct_cfg, RngStream rng);

namespace detail {

enum class HessRoute { dense, pairwise };

// ||E Hess||_F^2 U-statistic from raw softmax weight columns (n x K). With
// antithetic = true consecutive columns are +-y pairs and count as one draw.
// raw_out, when given, receives the uncorrected squared norm of the mean.
// Both routes compute the same estimator; they must agree to roundoff.
double softmax_mean_hessian_frob_sq(const Eigen::MatrixXd& weight_columns, double beta,
                                    bool antithetic, HessRoute route,
                                    double* raw_out = nullptr);

} // namespace detail

} // namespace gammalab
