#include <doctest.h>

#include <cmath>
#include <sstream>

#include "gammalab/criteria.hpp"
#include "gammalab/quadrature.hpp"
#include "oracles.hpp"

using namespace gammalab;

namespace {

EstimateWithCI exact(double v) {
    EstimateWithCI e;
    e.value = v;
    return e;
}

// Deterministic curve c * e^{-2t} on a grid (the linear-f shape).
DecayCurve exponential_curve(double c, const TimeGrid& grid) {
    DecayCurve curve;
    curve.grid = grid;
    for (double t : grid.points) curve.values.push_back(exact(c * std::exp(-2.0 * t)));
    return curve;
}

// Gauss-Hermite-backed curves for f_beta on R^2 (no Monte Carlo error).
struct GhCurves {
    DecayCurve gamma, gamma2, hess;
};
GhCurves gh_curves(double beta, const TimeGrid& grid, int points = 40) {
    oracles::GhSemigroupOracle oracle{beta, points, points};
    GhCurves out;
    out.gamma.grid = out.gamma2.grid = out.hess.grid = grid;
    for (double t : grid.points) {
        double g, h;
        oracle.eval(t, g, h);
        out.gamma.values.push_back(exact(g));
        out.gamma2.values.push_back(exact(g + h));
        out.hess.values.push_back(exact(h));
    }
    out.gamma2.kind = CurveKind::Gamma2;
    out.hess.kind = CurveKind::HessSq;
    return out;
}

} // namespace

TEST_CASE("verdict rule: holds / overlap / separated bands") {
    EstimateWithCI lhs = exact(1.0), rhs = exact(0.9);
    CHECK(compare_with_ci(lhs, rhs) == Verdict::holds);

    lhs.value = 0.95;
    lhs.std_error = 0.05;
    rhs.value = 1.0;
    rhs.std_error = 0.05;
    CHECK(compare_with_ci(lhs, rhs) == Verdict::holds_within_ci);

    lhs.std_error = 0.001;
    rhs.std_error = 0.001;
    CHECK(compare_with_ci(lhs, rhs) == Verdict::violated);
}

TEST_CASE("integrated CD: equality for linear f, detector self-test") {
    auto grid = TimeGrid::geometric(10, 0.05, 2.0);
    auto gamma = exponential_curve(1.7, grid);
    auto rep = check_integrated_cd(gamma, gamma); // Gamma_2 = Gamma for linear f
    CHECK(rep.overall() == Verdict::holds);

    // scale the Gamma_2 side by 0.999 with zero stderr: must be caught
    DecayCurve scaled = gamma;
    for (auto& v : scaled.values) v.value *= 0.999;
    auto bad = check_integrated_cd(scaled, gamma);
    CHECK(bad.overall() == Verdict::violated);

    TimeGrid other = TimeGrid::geometric(9, 0.05, 2.0);
    auto mismatched = exponential_curve(1.0, other);
    CHECK_THROWS_AS(check_integrated_cd(mismatched, gamma), std::invalid_argument);
}

TEST_CASE("integrated CD holds on the exact f_beta curves (n=2)") {
    TimeGrid grid;
    grid.points = {0.0, 0.1, 0.3, 0.6, 1.0, 1.5, 2.0};
    grid.tail_T = 2.0;
    for (double beta : {0.5, 1.0}) {
        auto c = gh_curves(beta, grid);
        CHECK(check_integrated_cd(c.gamma2, c.gamma).overall() == Verdict::holds);
    }
}

TEST_CASE("IC criterion on exact curves: psi from the criterion holds, psi = 0 fails") {
    TimeGrid grid;
    grid.points = {0.0, 0.1, 0.3, 0.6, 1.0, 1.5, 2.0};
    grid.tail_T = 2.0;
    const double beta = 1.0;
    auto c = gh_curves(beta, grid);

    // psi(t) = 2 b^2 e^{-2t} I(t)
    auto psi = PsiFunction::from_curve(c.gamma, 2.0 * beta * beta);
    auto rep = check_ic(c.gamma2, c.gamma, psi);
    CHECK(rep.overall() == Verdict::holds);

    // psi = 0 makes IC the reverse of CD; the Hessian term defeats it at t=0
    auto rep0 = check_ic(c.gamma2, c.gamma, PsiFunction::zero());
    CHECK(rep0.points.front().verdict == Verdict::violated);

    // linear f with psi = 0: equality
    auto lin = exponential_curve(0.8, grid);
    CHECK(check_ic(lin, lin, PsiFunction::zero()).overall() == Verdict::holds);
}

TEST_CASE("gh curves are stable under node doubling (1e-6)") {
    TimeGrid grid;
    grid.points = {0.0, 0.5, 1.5};
    grid.tail_T = 1.5;
    auto a = gh_curves(1.0, grid, 32);
    auto b = gh_curves(1.0, grid, 48);
    for (int i = 0; i < 3; ++i) {
        CHECK(a.gamma.at(i).value == doctest::Approx(b.gamma.at(i).value).epsilon(1e-6));
        CHECK(a.hess.at(i).value == doctest::Approx(b.hess.at(i).value).epsilon(1e-6));
    }
}

TEST_CASE("theorem bound: psi = 0 is tight for linear f") {
    const double a_sq = 2.3;
    CHECK(theorem_variance_bound(a_sq, PsiFunction::zero(), 8.0) == doctest::Approx(a_sq));
}

TEST_CASE("theorem bound: e^{-4s} family, closed form vs quadrature") {
    // 4 int_0^inf e^{-2t} int_t^inf e^{2s} e^{-4s} ds dt = 1/2
    auto psi = PsiFunction::exp_family(1.0, 4.0);
    const double closed = theorem_variance_bound(0.0, psi, 10.0);
    CHECK(closed == doctest::Approx(0.5).epsilon(1e-12));
    const double quad = theorem_variance_bound_quadrature(0.0, psi, 10.0);
    CHECK(quad == doctest::Approx(closed).epsilon(1e-8));

    // scaling in the coefficient
    auto psi3 = PsiFunction::exp_family(3.0, 4.0);
    CHECK(theorem_variance_bound(0.0, psi3, 10.0) == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("theorem bound: the e^{-2s} family fails integrability") {
    auto psi = PsiFunction::exp_family(1.0, 2.0);
    CHECK(!psi.integrable());
    CHECK_THROWS_AS(theorem_variance_bound(1.0, psi, 8.0), std::domain_error);
    CHECK_THROWS_AS(theorem_variance_bound_quadrature(1.0, psi, 8.0), std::domain_error);
}

TEST_CASE("theorem bound: decay envelope closed form and quadrature agree") {
    for (double beta : {0.3, 0.5}) {
        const double g = 1.0 / 16.0;
        auto psi = PsiFunction::decay_envelope(beta, g);
        const double closed = theorem_variance_bound(g, psi, 12.0);
        // G (e^{2 b^2} - 1)/(2 b^2)
        const double b2 = beta * beta;
        CHECK(closed == doctest::Approx(g * std::expm1(2.0 * b2) / (2.0 * b2)).epsilon(1e-12));
        const double quad = theorem_variance_bound_quadrature(g, psi, 12.0);
        CHECK(quad == doctest::Approx(closed).epsilon(1e-8));
    }
}

TEST_CASE("cel bound: tight for linear f, consistent as T grows") {
    auto grid = TimeGrid::geometric(400, 1e-3, 8.0);
    const double var = 2.2;
    auto curve = exponential_curve(var, grid);
    for (double t_cap : {0.5, 1.0, 2.0})
        CHECK(cel_bound(curve, t_cap) == doctest::Approx(var).epsilon(1e-9));
    // T -> infinity: bound -> 2 int_0^inf I = Var
    CHECK(cel_bound(curve, 8.0) == doctest::Approx(var).epsilon(1e-6));
}

TEST_CASE("baudoin-wang: equality for exponential curves, synthetic violation") {
    auto grid = TimeGrid::geometric(14, 0.05, 2.0);
    auto curve = exponential_curve(1.0, grid);
    auto rep = baudoin_wang_check(curve, 2.0);
    CHECK(!rep.inconclusive);
    CHECK(rep.overall() == Verdict::holds);
    for (const auto& p : rep.points) CHECK(std::abs(p.margin) < 1e-9);

    // log-concave-ish curve: I(s) = e^{-2s}(2 - s) on [0, 1.8] violates the
    // chord inequality in log space
    DecayCurve bad;
    bad.grid = grid;
    for (double t : grid.points) bad.values.push_back(exact(std::exp(-2.0 * t) * (2.0 - t)));
    auto rep_bad = baudoin_wang_check(bad, 1.8);
    CHECK(rep_bad.overall() == Verdict::violated);

    // nonpositive I(T) -> inconclusive
    DecayCurve neg = curve;
    neg.values.back().value = -1e-9;
    auto rep_neg = baudoin_wang_check(neg, 2.0);
    CHECK(rep_neg.inconclusive);
}

TEST_CASE("partial curvature bound: exponential decay returns I(0) exactly") {
    for (double t_cap : {0.5, 1.0, 2.0}) {
        const double i0 = 1.7;
        const double iT = i0 * std::exp(-2.0 * t_cap);
        CHECK(partial_curvature_bound(i0, iT, t_cap) == doctest::Approx(i0).epsilon(1e-10));
    }
}

TEST_CASE("partial curvature bound: bracket series at a -> 1") {
    // (1 - e^{-x})/x -> 1; the bound tends to 2 T I0/(1 - e^{-2T})
    const double T = 0.7, i0 = 3.0;
    const double at_one = partial_curvature_bound(i0, i0, T);
    CHECK(at_one == doctest::Approx(2.0 * T * i0 / (1.0 - std::exp(-2.0 * T))).epsilon(1e-12));
    // continuity from above
    const double near = partial_curvature_bound(i0, i0 * (1.0 - 1e-9), T);
    CHECK(near == doctest::Approx(at_one).epsilon(1e-7));
    // series matches the closed form on small x
    for (double x : {1e-6, 1e-5, 1e-4}) {
        const double lhs = partial_curvature_bound(i0, i0 * std::exp(-x), T);
        const double bracket = (1.0 - std::exp(-x)) / x;
        CHECK(lhs == doctest::Approx(2.0 * T * i0 / (1.0 - std::exp(-2.0 * T)) * bracket)
                         .epsilon(1e-9));
    }
}

TEST_CASE("partial curvature bound: scale equivariance and preconditions") {
    const double i0 = 2.0, iT = 0.5, T = 1.2;
    const double base = partial_curvature_bound(i0, iT, T);
    for (double lambda : {0.1, 3.0, 42.0})
        CHECK(partial_curvature_bound(lambda * i0, lambda * iT, T) ==
              doctest::Approx(lambda * base).epsilon(1e-13));
    CHECK_THROWS_AS(partial_curvature_bound(1.0, 2.0, T), std::domain_error);
    CHECK_THROWS_AS(partial_curvature_bound(-1.0, 2.0, T), std::domain_error);
    CHECK_THROWS_AS(partial_curvature_bound(1.0, 0.5, 0.0), std::invalid_argument);
}

TEST_CASE("simplex smoothing: 1000 randomized trials, zero violations") {
    auto rep = simplex_smoothing_check(RngStream(2718, 0), 1000);
    CHECK(rep.points.size() == 1000);
    CHECK(rep.overall() != Verdict::violated);
}

TEST_CASE("simplex smoothing: constant u = 1/n and the single-u equality") {
    // Three-atom measure, explicit v; u_j = 1/n gives LHS = (int v)^2/n,
    // a single u = 1 gives equality.
    const std::vector<double> mu = {0.2, 0.5, 0.3};
    const std::vector<double> v = {1.0, 4.0, 0.5};
    double v_int = 0.0;
    for (size_t i = 0; i < mu.size(); ++i) v_int += mu[i] * v[i];

    const int n = 5;
    double lhs_const = 0.0;
    for (int j = 0; j < n; ++j) {
        double term = 0.0;
        for (size_t i = 0; i < mu.size(); ++i) term += mu[i] * (1.0 / n) * v[i];
        lhs_const += term * term;
    }
    CHECK(lhs_const == doctest::Approx(v_int * v_int / n).epsilon(1e-14));
    CHECK(lhs_const <= v_int * v_int);

    double lhs_single = 0.0;
    for (size_t i = 0; i < mu.size(); ++i) lhs_single += mu[i] * 1.0 * v[i];
    CHECK(lhs_single * lhs_single == doctest::Approx(v_int * v_int).epsilon(1e-14));
}

TEST_CASE("report CSV has the fixed columns") {
    auto grid = TimeGrid::geometric(4, 0.1, 1.0);
    auto curve = exponential_curve(1.0, grid);
    auto rep = check_integrated_cd(curve, curve);
    std::ostringstream os;
    rep.write_csv(os);
    const std::string text = os.str();
    CHECK(text.rfind("name,t,lhs,lhs_se,rhs,rhs_se,verdict\n", 0) == 0);
    CHECK(text.find("integrated_cd") != std::string::npos);
    CHECK(text.find("holds") != std::string::npos);
}
