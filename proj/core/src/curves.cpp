#include "gammalab/curves.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "gammalab/quadrature.hpp"

namespace gammalab {

TimeGrid TimeGrid::geometric(int count, double t_min, double t_max) {
    if (count < 3) throw std::invalid_argument("TimeGrid: need at least 3 points");
    if (!(0.0 < t_min && t_min < t_max)) throw std::invalid_argument("TimeGrid: bad range");
    TimeGrid g;
    g.points.reserve(static_cast<size_t>(count));
    g.points.push_back(0.0);
    const double ratio = std::pow(t_max / t_min, 1.0 / (count - 2));
    double t = t_min;
    for (int i = 1; i < count; ++i) {
        g.points.push_back(t);
        t *= ratio;
    }
    g.points.back() = t_max;
    g.tail_T = t_max;
    return g;
}

TimeGrid TimeGrid::up_to(double T, int count) {
    if (!(T > 0.0)) throw std::invalid_argument("TimeGrid: T must be positive");
    TimeGrid g = geometric(count, T / 100.0, T);
    return g;
}

void TimeGrid::validate() const {
    if (points.empty()) throw std::invalid_argument("TimeGrid: empty");
    if (points.front() < 0.0) throw std::invalid_argument("TimeGrid: points must be >= 0");
    for (size_t i = 1; i < points.size(); ++i)
        if (points[i] <= points[i - 1])
            throw std::invalid_argument("TimeGrid: points must be strictly increasing");
    if (tail_T < points.back())
        throw std::invalid_argument("TimeGrid: tail_T must cover the last point");
}

std::string curve_kind_name(CurveKind k) {
    switch (k) {
        case CurveKind::I: return "I";
        case CurveKind::Ir: return "I_r";
        case CurveKind::Jr: return "J_r";
        case CurveKind::K: return "K";
        case CurveKind::Gamma2: return "Gamma2";
        case CurveKind::HessSq: return "HessSq";
    }
    return "?";
}

std::vector<double> DecayCurve::point_values() const {
    std::vector<double> v(values.size());
    for (size_t i = 0; i < values.size(); ++i) v[i] = values[i].value;
    return v;
}

DecayCurve DecayCurve::exp_scaled() const {
    DecayCurve out = *this;
    for (int i = 0; i < size(); ++i) {
        const double s = std::exp(2.0 * t(i));
        out.values[static_cast<size_t>(i)].value *= s;
        out.values[static_cast<size_t>(i)].std_error *= s;
    }
    out.kind = (kind == CurveKind::Ir) ? CurveKind::Jr : CurveKind::K;
    return out;
}

double DecayCurve::integrate(double a, double b) const {
    return integrate_decay(grid.points, point_values(), a, b);
}

double DecayCurve::integrate_std_error(double a, double b) const {
    // The quadrature is linear in the point values; extract its weights by
    // integrating unit vectors and propagate the per-point errors.
    std::vector<double> unit(values.size(), 0.0);
    double ss = 0.0;
    for (size_t i = 0; i < values.size(); ++i) {
        unit[i] = 1.0;
        const double w = integrate_decay(grid.points, unit, a, b);
        unit[i] = 0.0;
        ss += w * w * values[i].std_error * values[i].std_error;
    }
    return std::sqrt(ss);
}

void DecayCurve::write_csv(std::ostream& os) const {
    os << "t,estimate,stderr,kind,r\n";
    char buf[96];
    for (int i = 0; i < size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,", t(i), at(i).value, at(i).std_error);
        os << buf << curve_kind_name(kind) << ',' << r << '\n';
    }
}

} // namespace gammalab
