#include "gammalab/criteria.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "gammalab/quadrature.hpp"

namespace gammalab {

std::string verdict_name(Verdict v) {
    switch (v) {
        case Verdict::holds: return "holds";
        case Verdict::holds_within_ci: return "holds_within_CI";
        case Verdict::violated: return "violated";
    }
    return "?";
}

Verdict compare_with_ci(const EstimateWithCI& lhs, const EstimateWithCI& rhs) {
    if (lhs.value >= rhs.value) return Verdict::holds;
    if (lhs.value + 3.0 * lhs.std_error < rhs.value - 3.0 * rhs.std_error)
        return Verdict::violated;
    return Verdict::holds_within_ci;
}

Verdict InequalityReport::overall() const {
    Verdict worst = Verdict::holds;
    for (const auto& p : points) {
        if (p.verdict == Verdict::violated) return Verdict::violated;
        if (p.verdict == Verdict::holds_within_ci) worst = Verdict::holds_within_ci;
    }
    return worst;
}

void InequalityReport::write_csv(std::ostream& os) const {
    os << "name,t,lhs,lhs_se,rhs,rhs_se,verdict\n";
    char buf[160];
    for (const auto& p : points) {
        std::snprintf(buf, sizeof buf, ",%.17g,%.17g,%.17g,%.17g,%.17g,", p.t, p.lhs.value,
                      p.lhs.std_error, p.rhs.value, p.rhs.std_error);
        os << name << buf << verdict_name(p.verdict) << '\n';
    }
}

// ---------------------------------------------------------------- psi

PsiFunction PsiFunction::zero() { return PsiFunction(); }

PsiFunction PsiFunction::exp_family(double coefficient, double rate) {
    PsiFunction p;
    p.kind_ = Kind::exp_family;
    p.coefficient_ = coefficient;
    p.rate_ = rate;
    return p;
}

PsiFunction PsiFunction::decay_envelope(double beta, double mean_grad_norm_sq) {
    if (!(beta > 0.0)) throw std::domain_error("decay_envelope: beta must be positive");
    PsiFunction p;
    p.kind_ = Kind::envelope;
    p.beta_ = beta;
    p.mean_grad_norm_sq_ = mean_grad_norm_sq;
    return p;
}

PsiFunction PsiFunction::from_curve(DecayCurve curve, double coefficient) {
    if (curve.size() < 2) throw std::invalid_argument("PsiFunction: curve too short");
    PsiFunction p;
    p.kind_ = Kind::sampled;
    p.curve_ = std::move(curve);
    p.coefficient_ = coefficient;
    return p;
}

const DecayCurve& PsiFunction::curve() const {
    if (kind_ != Kind::sampled) throw std::logic_error("PsiFunction: not sampled");
    return curve_;
}

namespace {

// Curve value at arbitrary t: K = e^{2t} I interpolated linearly in
// u = e^{-2t} inside the grid; past the last point the decay shape
// I(t) = I(back) e^{-2(t-back)} (K frozen) extends it.
double curve_value_at(const DecayCurve& c, double t, bool std_error) {
    const auto& ts = c.grid.points;
    auto field = [&](size_t i) {
        return std_error ? c.values[i].std_error : c.values[i].value;
    };
    const double tb = ts.back();
    if (t >= tb) return field(ts.size() - 1) * std::exp(-2.0 * (t - tb));
    size_t hi = 1;
    while (hi + 1 < ts.size() && ts[hi] < t) ++hi;
    const size_t lo = hi - 1;
    const double u = std::exp(-2.0 * t);
    const double u0 = std::exp(-2.0 * ts[lo]), u1 = std::exp(-2.0 * ts[hi]);
    const double k0 = field(lo) / u0, k1 = field(hi) / u1;
    const double w = (u0 - u) / (u0 - u1);
    return (k0 + w * (k1 - k0)) * u;
}

} // namespace

double PsiFunction::operator()(double t) const {
    switch (kind_) {
        case Kind::zero: return 0.0;
        case Kind::exp_family: return coefficient_ * std::exp(-rate_ * t);
        case Kind::envelope: {
            const double u = std::exp(-2.0 * t);
            return 2.0 * beta_ * beta_ * mean_grad_norm_sq_ * u * u *
                   std::exp(2.0 * beta_ * beta_ * u);
        }
        case Kind::sampled:
            return coefficient_ * std::exp(-2.0 * t) * curve_value_at(curve_, t, false);
    }
    return 0.0;
}

double PsiFunction::std_error_at(double t) const {
    if (kind_ != Kind::sampled) return 0.0;
    return std::abs(coefficient_) * std::exp(-2.0 * t) * curve_value_at(curve_, t, true);
}

bool PsiFunction::integrable() const {
    switch (kind_) {
        case Kind::zero: return true;
        case Kind::exp_family: return coefficient_ == 0.0 || rate_ > 2.0;
        case Kind::envelope: return true; // bounded by const * e^{-4t}
        case Kind::sampled: return true;  // e^{-2t} * decay curve decays like e^{-4t}
    }
    return false;
}

std::optional<double> PsiFunction::closed_form_double_integral() const {
    switch (kind_) {
        case Kind::zero: return 0.0;
        case Kind::exp_family:
            if (coefficient_ == 0.0) return 0.0;
            if (rate_ <= 2.0) return std::nullopt;
            // 4 int e^{-2t} int_t e^{2s} c e^{-rate s} = 4c/((rate-2) rate)
            return 4.0 * coefficient_ / ((rate_ - 2.0) * rate_);
        case Kind::envelope: {
            // G [(e^{2 b^2} - 1)/(2 b^2) - 1]
            const double b2 = beta_ * beta_;
            return mean_grad_norm_sq_ * ((std::expm1(2.0 * b2)) / (2.0 * b2) - 1.0);
        }
        case Kind::sampled: return std::nullopt;
    }
    return std::nullopt;
}

// ------------------------------------------- variance theorem bound

namespace {

double nested_double_integral(const PsiFunction& psi, double tail_T) {
    // Work on PSI(s) = e^{2s} psi(s). The inner integral int_t^T PSI plus a
    // geometric tail, then the outer 4 int e^{-2t} (...) dt, refined until
    // stable.
    double prev = 0.0;
    for (int n = 1 << 9; n <= (1 << 16); n *= 2) {
        const double h = tail_T / n;
        std::vector<double> big(static_cast<size_t>(n) + 1);
        for (int i = 0; i <= n; ++i)
            big[static_cast<size_t>(i)] = std::exp(2.0 * i * h) * psi(i * h);

        // geometric tail of PSI past tail_T
        double tail = 0.0;
        const double p0 = big[static_cast<size_t>(n - 1)], p1 = big[static_cast<size_t>(n)];
        if (p1 > 0.0 && p0 > 0.0 && p1 < p0) {
            const double ratio = p1 / p0;
            tail = p1 * h * ratio / (1.0 - ratio);
        } else if (p1 > 1e-300 && p1 >= p0) {
            throw std::domain_error(
                "theorem_variance_bound: psi fails the integrability condition: "
                "e^{2s} psi(s) does not decay at the tail horizon");
        }

        // inner(t_i) = int_{t_i}^{T} PSI + tail, cumulative from the right
        std::vector<double> inner(static_cast<size_t>(n) + 1, tail);
        for (int i = n - 1; i >= 0; --i)
            inner[static_cast<size_t>(i)] =
                inner[static_cast<size_t>(i) + 1] +
                0.5 * h * (big[static_cast<size_t>(i)] + big[static_cast<size_t>(i) + 1]);

        double outer = 0.0;
        for (int i = 0; i < n; ++i) {
            const double f0 = std::exp(-2.0 * i * h) * inner[static_cast<size_t>(i)];
            const double f1 = std::exp(-2.0 * (i + 1) * h) * inner[static_cast<size_t>(i) + 1];
            outer += 0.5 * h * (f0 + f1);
        }
        // outer tail: inner(t) ~ inner(T) e^{... beyond T both factors decay
        // at least like e^{-4t}; bound the remainder with the last value.
        const double outer_tail = std::exp(-2.0 * tail_T) * inner[static_cast<size_t>(n)] / 4.0;
        const double value = 4.0 * (outer + outer_tail);
        if (n > (1 << 9) && std::abs(value - prev) <= 1e-9 * std::max(1.0, std::abs(value)))
            return value;
        prev = value;
    }
    return prev;
}

} // namespace

double theorem_variance_bound_quadrature(double mean_grad_norm_sq, const PsiFunction& psi,
                                         double tail_T) {
    if (!(tail_T > 0.0)) throw std::invalid_argument("theorem_variance_bound: tail_T must be > 0");
    if (!psi.integrable())
        throw std::domain_error(
            "theorem_variance_bound: psi fails the integrability condition: "
            "int_0^inf e^{-2t} int_t^inf e^{2s} psi(s) ds dt diverges");
    return mean_grad_norm_sq + nested_double_integral(psi, tail_T);
}

double theorem_variance_bound(double mean_grad_norm_sq, const PsiFunction& psi, double tail_T) {
    if (!psi.integrable())
        throw std::domain_error(
            "theorem_variance_bound: psi fails the integrability condition: "
            "int_0^inf e^{-2t} int_t^inf e^{2s} psi(s) ds dt diverges");
    if (auto closed = psi.closed_form_double_integral())
        return mean_grad_norm_sq + *closed;
    return theorem_variance_bound_quadrature(mean_grad_norm_sq, psi, tail_T);
}

// ------------------------------------------------------- CEL / BW / partial

double cel_bound(const DecayCurve& curve_i, double T) {
    if (!(T > 0.0)) throw std::invalid_argument("cel_bound: T must be positive");
    const double integral = curve_i.integrate(0.0, T);
    return 2.0 / (-std::expm1(-2.0 * T)) * integral;
}

InequalityReport baudoin_wang_check(const DecayCurve& curve_i, double T) {
    if (!(T > 0.0)) throw std::invalid_argument("baudoin_wang_check: T must be positive");
    if (curve_i.grid.points.front() != 0.0)
        throw std::invalid_argument("baudoin_wang_check: curve must start at t = 0");
    if (T > curve_i.grid.points.back() + 1e-12)
        throw std::invalid_argument("baudoin_wang_check: T outside the curve grid");

    InequalityReport rep;
    rep.name = "baudoin_wang";
    const EstimateWithCI i0 = curve_i.values.front();
    EstimateWithCI iT;
    iT.value = curve_value_at(curve_i, T, false);
    iT.std_error = curve_value_at(curve_i, T, true);
    if (!(iT.value > 0.0) || !(i0.value > 0.0)) {
        rep.inconclusive = true;
        return rep;
    }

    for (int k = 0; k < curve_i.size(); ++k) {
        const double s = curve_i.t(k);
        if (s <= 0.0 || s > T + 1e-12) continue;
        const double theta = s / T;
        InequalityPoint pt;
        pt.t = s;
        pt.rhs = curve_i.at(k); // the curve value I(s)
        pt.lhs.value = std::pow(i0.value, 1.0 - theta) * std::pow(iT.value, theta);
        // delta method on log lhs = (1-theta) log I0 + theta log IT
        const double rel0 = i0.std_error / i0.value;
        const double relT = iT.std_error / iT.value;
        pt.lhs.std_error = pt.lhs.value * std::sqrt((1.0 - theta) * (1.0 - theta) * rel0 * rel0 +
                                                    theta * theta * relT * relT);
        pt.verdict = compare_with_ci(pt.lhs, pt.rhs);
        pt.margin = pt.rhs.value - pt.lhs.value;
        rep.points.push_back(pt);
    }
    return rep;
}

double partial_curvature_bound(double i0, double iT, double T) {
    if (!(T > 0.0)) throw std::invalid_argument("partial_curvature_bound: T must be positive");
    if (!(i0 > 0.0) || !(iT > 0.0))
        throw std::domain_error("partial_curvature_bound: I(0) and I(T) must be positive");
    const double a = i0 / iT;
    if (a < 1.0 - 1e-12)
        throw std::domain_error("partial_curvature_bound: needs a = I(0)/I(T) >= 1");
    const double x = std::max(0.0, std::log(a));
    // bracket = (1 - e^{-x})/x, continuous value 1 at x = 0
    double bracket;
    if (x < 1e-5)
        bracket = 1.0 - x / 2.0 + x * x / 6.0 - x * x * x / 24.0;
    else
        bracket = -std::expm1(-x) / x;
    return 2.0 * T * i0 / (-std::expm1(-2.0 * T)) * bracket;
}

// ------------------------------------------------------------ checkers

namespace {

void require_same_grid(const DecayCurve& a, const DecayCurve& b) {
    if (a.size() != b.size()) throw std::invalid_argument("checker: grid mismatch");
    for (int i = 0; i < a.size(); ++i)
        if (std::abs(a.t(i) - b.t(i)) > 1e-12)
            throw std::invalid_argument("checker: grid mismatch");
}

} // namespace

InequalityReport check_integrated_cd(const DecayCurve& gamma2_curve,
                                     const DecayCurve& gamma_curve) {
    require_same_grid(gamma2_curve, gamma_curve);
    InequalityReport rep;
    rep.name = "integrated_cd";
    for (int i = 0; i < gamma_curve.size(); ++i) {
        InequalityPoint pt;
        pt.t = gamma_curve.t(i);
        pt.lhs = gamma2_curve.at(i);
        pt.rhs = gamma_curve.at(i);
        pt.verdict = compare_with_ci(pt.lhs, pt.rhs);
        pt.margin = pt.rhs.value - pt.lhs.value;
        rep.points.push_back(pt);
    }
    return rep;
}

InequalityReport check_ic(const DecayCurve& gamma2_curve, const DecayCurve& gamma_curve,
                          const PsiFunction& psi) {
    require_same_grid(gamma2_curve, gamma_curve);
    InequalityReport rep;
    rep.name = "ic_criterion";
    for (int i = 0; i < gamma_curve.size(); ++i) {
        const double t = gamma_curve.t(i);
        InequalityPoint pt;
        pt.t = t;
        pt.lhs = gamma_curve.at(i);
        pt.lhs.value += psi(t);
        const double pse = psi.std_error_at(t);
        pt.lhs.std_error = std::sqrt(pt.lhs.std_error * pt.lhs.std_error + pse * pse);
        pt.rhs = gamma2_curve.at(i);
        pt.verdict = compare_with_ci(pt.lhs, pt.rhs);
        pt.margin = pt.rhs.value - pt.lhs.value;
        rep.points.push_back(pt);
    }
    return rep;
}

InequalityReport simplex_smoothing_check(RngStream rng, int trials) {
    if (trials < 1) throw std::invalid_argument("simplex_smoothing_check: trials must be >= 1");
    InequalityReport rep;
    rep.name = "simplex_smoothing";
    rep.points.reserve(static_cast<size_t>(trials));
    for (int trial = 0; trial < trials; ++trial) {
        RngStream s = rng.derive(static_cast<std::uint64_t>(trial));
        const int support = 2 + static_cast<int>(s.next_u64() % 49); // <= 50 atoms
        const int n_fn = 1 + static_cast<int>(s.next_u64() % 20);    // <= 20 functions

        // Random probability measure on the atoms.
        std::vector<double> mu(static_cast<size_t>(support));
        double mass = 0.0;
        for (auto& m : mu) {
            m = -std::log(s.next_uniform());
            mass += m;
        }
        for (auto& m : mu) m /= mass;

        // Per atom: u in the sub-simplex {u >= 0, sum u <= 1} (uniform via a
        // Dirichlet(1,..,1) with one dropped coordinate), v >= 0.
        std::vector<double> lhs_terms(static_cast<size_t>(n_fn), 0.0);
        double v_int = 0.0;
        std::vector<double> e(static_cast<size_t>(n_fn) + 1);
        for (int a = 0; a < support; ++a) {
            double tot = 0.0;
            for (auto& x : e) {
                x = -std::log(s.next_uniform());
                tot += x;
            }
            const double v = -std::log(s.next_uniform()) * 2.0;
            v_int += mu[static_cast<size_t>(a)] * v;
            for (int j = 0; j < n_fn; ++j)
                lhs_terms[static_cast<size_t>(j)] +=
                    mu[static_cast<size_t>(a)] * (e[static_cast<size_t>(j)] / tot) * v;
        }
        double lhs_sum = 0.0;
        for (double term : lhs_terms) lhs_sum += term * term;
        const double rhs_sq = v_int * v_int;

        InequalityPoint pt;
        pt.t = static_cast<double>(trial);
        pt.lhs.value = rhs_sq;   // claim: (int v)^2 >= sum_j (int u_j v)^2
        pt.rhs.value = lhs_sum;
        pt.margin = pt.rhs.value - pt.lhs.value;
        const double tol = 1e-12 * std::max(1.0, rhs_sq);
        pt.verdict = pt.lhs.value >= pt.rhs.value - tol ? Verdict::holds : Verdict::violated;
        rep.points.push_back(pt);
    }
    return rep;
}

} // namespace gammalab
