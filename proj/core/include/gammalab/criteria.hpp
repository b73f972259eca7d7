#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gammalab/curves.hpp"
#include "gammalab/rng.hpp"

namespace gammalab {

// Estimates are noisy while the inequalities are exact, so verdicts are
// CI-aware: `holds` on the point estimates, `violated` only when the
// 3-sigma bands separate, `holds_within_ci` in between.
enum class Verdict { holds, holds_within_ci, violated };

std::string verdict_name(Verdict v);

// Decision rule for the claim lhs >= rhs.
Verdict compare_with_ci(const EstimateWithCI& lhs, const EstimateWithCI& rhs);

struct InequalityPoint {
    double t = 0.0;
    EstimateWithCI lhs, rhs; // claim: lhs >= rhs
    Verdict verdict = Verdict::holds;
    double margin = 0.0; // rhs - lhs
};

struct InequalityReport {
    std::string name;
    std::vector<InequalityPoint> points;
    bool inconclusive = false;

    Verdict overall() const;
    bool passed() const { return overall() != Verdict::violated; }
    // Fixed columns: name,t,lhs,lhs_se,rhs,rhs_se,verdict
    void write_csv(std::ostream& os) const;
};

// The criterion function psi. Closed forms cover the two built-in families
// (c e^{-rate t}, and the self-consistent decay envelope
// 2 b^2 G e^{-4t} exp(2 b^2 e^{-2t}) that the free-energy criterion closes
// on); sampled psi is coefficient * e^{-2t} * curve(t) backed by a decay
// curve, extended past the grid with the semigroup decay shape.
class PsiFunction {
  public:
    static PsiFunction zero();
    static PsiFunction exp_family(double coefficient, double rate);
    static PsiFunction decay_envelope(double beta, double mean_grad_norm_sq);
    static PsiFunction from_curve(DecayCurve curve, double coefficient);

    double operator()(double t) const;
    double std_error_at(double t) const; // nonzero only for sampled psi

    // Condition for the variance theorem:
    // int_0^inf e^{-2t} int_t^inf e^{2s} psi(s) ds dt < inf.
    bool integrable() const;
    // The full 4 * (double integral) term when a closed form exists.
    std::optional<double> closed_form_double_integral() const;
    bool is_sampled() const { return kind_ == Kind::sampled; }
    const DecayCurve& curve() const;

  private:
    enum class Kind { zero, exp_family, envelope, sampled };
    Kind kind_ = Kind::zero;
    double coefficient_ = 0.0;
    double rate_ = 0.0;
    double beta_ = 0.0;
    double mean_grad_norm_sq_ = 0.0;
    DecayCurve curve_;
};

// Var(f) <= |int grad f|^2 + 4 int_0^inf e^{-2t} int_t^inf e^{2s} psi(s) ds dt.
// Closed forms are used when available; otherwise nested quadrature on
// [0, tail_T] with geometric tail extrapolation. Throws std::domain_error
// when psi fails the integrability condition.
double theorem_variance_bound(double mean_grad_norm_sq, const PsiFunction& psi, double tail_T);
// Quadrature route regardless of closed forms (cross-validation hook).
double theorem_variance_bound_quadrature(double mean_grad_norm_sq, const PsiFunction& psi,
                                         double tail_T);

// Var(f) <= 2/(1-e^{-2T}) int_0^T I(t) dt   (Cordero-Erausquin/Ledoux).
double cel_bound(const DecayCurve& curve_i, double T);

// I(s) <= I(0)^{1-s/T} I(T)^{s/T} on [0, T] (Baudoin/Wang log-convexity).
// Reports `inconclusive` when the I(T) estimate is not positive.
InequalityReport baudoin_wang_check(const DecayCurve& curve_i, double T);

// Var(f) <= (2 T I(0)/(1-e^{-2T})) * (1 - 1/a)/log a,  a = I(0)/I(T) >= 1.
// The bracket is (1-e^{-x})/x at x = log a, extended continuously by its
// limit 1 at a = 1. Exactly I(0) when I decays as I(0) e^{-2t}.
double partial_curvature_bound(double i0, double iT, double T);

// int Gamma_2(P_t f) >= int Gamma(P_t f) per grid point (integrated CD).
InequalityReport check_integrated_cd(const DecayCurve& gamma2_curve,
                                     const DecayCurve& gamma_curve);

// int Gamma_2(P_t f) <= int Gamma(P_t f) + psi(t) per grid point.
InequalityReport check_ic(const DecayCurve& gamma2_curve, const DecayCurve& gamma_curve,
                          const PsiFunction& psi);

// Randomized audit of the sub-simplex smoothing inequality
//   sum_j (int u_j v dmu)^2 <= (int v dmu)^2
// for 0 <= u_j <= 1, sum_j u_j <= 1, v >= 0, over discrete random measures.
// Exact arithmetic up to 1e-12 relative slack.
InequalityReport simplex_smoothing_check(RngStream rng, int trials);

} // namespace gammalab
