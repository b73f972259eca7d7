#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "gammalab/stats.hpp"

namespace gammalab {

// Interpolation times for semigroup quantities. points are the t values a
// curve is sampled at; tail_T is the horizon used when an infinite time
// integral has to be truncated.
struct TimeGrid {
    std::vector<double> points;
    double tail_T = 6.0;

    // 0 followed by geometrically spaced points on [t_min, t_max]; dense
    // near 0 where the e^{-2t} factors move fastest.
    static TimeGrid geometric(int count, double t_min, double t_max);
    static TimeGrid default_grid() { return geometric(48, 5e-3, 6.0); }
    // A short grid ending exactly at T (for checks on [0, T]).
    static TimeGrid up_to(double T, int count);

    void validate() const;
    int size() const { return static_cast<int>(points.size()); }
};

enum class CurveKind { I, Ir, Jr, K, Gamma2, HessSq };

std::string curve_kind_name(CurveKind k);

// A sampled decay curve t -> estimate with per-point Monte Carlo CIs.
struct DecayCurve {
    TimeGrid grid;
    std::vector<EstimateWithCI> values;
    // Uncorrected companions of `values` where an inner-bias correction was
    // applied (empty otherwise).
    std::vector<double> raw;
    CurveKind kind = CurveKind::I;
    int r = 0; // covariance power for the I_r / J_r families

    int size() const { return static_cast<int>(values.size()); }
    double t(int i) const { return grid.points[static_cast<size_t>(i)]; }
    const EstimateWithCI& at(int i) const { return values[static_cast<size_t>(i)]; }

    std::vector<double> times() const { return grid.points; }
    std::vector<double> point_values() const;

    // e^{2t}-scaled companion: I -> K, I_r -> J_r. Exact by construction
    // (each point and its stderr are scaled by e^{2t}).
    DecayCurve exp_scaled() const;

    // int_a^b of the curve as a function of t (u-substituted trapezoid).
    double integrate(double a, double b) const;
    // Same propagated to the 1-sigma level, treating points as independent.
    double integrate_std_error(double a, double b) const;

    // CSV with the fixed columns t,estimate,stderr,kind,r.
    void write_csv(std::ostream& os) const;
};

} // namespace gammalab
