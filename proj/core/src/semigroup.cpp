#include "gammalab/semigroup.hpp"

#include <cmath>
#include <stdexcept>

#include "gammalab/parallel.hpp"
#include "gammalab/quadrature.hpp"

namespace gammalab {

namespace {

struct Welford {
    std::int64_t count = 0;
    double mean = 0.0;
    double m2 = 0.0;
    void add(double x) {
        ++count;
        const double d = x - mean;
        mean += d / static_cast<double>(count);
        m2 += d * (x - mean);
    }
};

// Quadratic form <a, A b> with A either scale*Identity or a dense matrix.
struct QuadSpec {
    double scale = 1.0;
    const Eigen::MatrixXd* weight = nullptr;
};

struct EngineOpts {
    QuadSpec quad;
    bool want_gamma = true;
    bool want_hess = false;  // int ||Hess P_t f||_F^2, isotropic measures only
    double hess_scale = 1.0; // variance^2 of the isotropic measure
    IrNormalization norm = IrNormalization::gamma;
    double gamma_factor = 1.0; // leading 2 of the paper-literal I_r display
};

struct OuterEval {
    double gamma = 0.0, gamma_raw = 0.0;
    double hess = 0.0, hess_raw = 0.0;
};

// Scratch owned by one batch task; reused across its outer samples.
struct Work {
    Eigen::VectorXd x, g0, s, as, col;
    Eigen::MatrixXd y, z, grads, eff, ag;
};

int effective_inner(const MehlerConfig& cfg) {
    int k = std::max(2, cfg.inner);
    if (cfg.antithetic && (k & 1)) ++k;
    return cfg.antithetic ? k / 2 : k;
}

// Mehler points for one outer sample: z_a = x e^{-t} + s_t y_a, with the
// antithetic layout [z(y_1), z(-y_1), z(y_2), ...].
void fill_mehler_points(const GaussianMeasure& mu, const Eigen::VectorXd& x, double t,
                        bool antithetic, RngStream& rng, Work& w, int raw_count) {
    const double et = std::exp(-t);
    const double st = std::sqrt(std::max(0.0, 1.0 - et * et));
    const int half = antithetic ? raw_count / 2 : raw_count;
    w.y.resize(x.size(), half);
    mu.sample_columns(rng, w.y);
    w.z.resize(x.size(), raw_count);
    for (int k = 0; k < half; ++k) {
        if (antithetic) {
            w.z.col(2 * k) = et * x + st * w.y.col(k);
            w.z.col(2 * k + 1) = et * x - st * w.y.col(k);
        } else {
            w.z.col(k) = et * x + st * w.y.col(k);
        }
    }
}

double quad_form(const QuadSpec& q, const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                 Work& w) {
    if (q.weight) {
        w.as.noalias() = (*q.weight) * b;
        return a.dot(w.as);
    }
    return q.scale * a.dot(b);
}

// Analytic ||Hess f(x)||_F^2 (t = 0 path).
double hessian_frob_sq_at(const TestFunction& f, const Eigen::VectorXd& x, Work& w) {
    switch (f.hessian_kind()) {
        case HessianKind::zero: return 0.0;
        case HessianKind::constant: return f.constant_hessian().squaredNorm();
        case HessianKind::softmax:
            f.softmax(x, w.col);
            return softmax_hessian_frob_sq(w.col, f.beta());
    }
    return 0.0;
}

// Sum over effective draws of ||mean-of-pair Hessian||_F^2 from raw softmax
// weight columns.
long double sum_pair_hessian_norms(const Eigen::MatrixXd& cols, double beta, bool antithetic) {
    long double total = 0.0;
    if (antithetic) {
        for (int k = 0; k + 1 < cols.cols(); k += 2) {
            const auto wp = cols.col(k);
            const auto wm = cols.col(k + 1);
            total += 0.25L * (softmax_hessian_frob_sq(wp, beta) +
                              2.0 * softmax_hessian_inner(wp, wm, beta) +
                              softmax_hessian_frob_sq(wm, beta));
        }
    } else {
        for (int k = 0; k < cols.cols(); ++k)
            total += softmax_hessian_frob_sq(cols.col(k), beta);
    }
    return total;
}

} // namespace

namespace detail {

double softmax_mean_hessian_frob_sq(const Eigen::MatrixXd& cols, double beta, bool antithetic,
                                    HessRoute route, double* raw_out) {
    const int raw_n = static_cast<int>(cols.cols());
    if (raw_n < (antithetic ? 4 : 2) || (antithetic && (raw_n & 1)))
        throw std::invalid_argument("softmax_mean_hessian_frob_sq: too few inner draws");
    const int kp = antithetic ? raw_n / 2 : raw_n;
    const long double diag = sum_pair_hessian_norms(cols, beta, antithetic);

    long double mean_sq = 0.0;
    if (route == HessRoute::dense) {
        // H_mean = beta (diag(w_bar) - (1/K) W W^T), valid for the
        // pair-averaged Hessians as well: the overall mean is the raw mean.
        const Eigen::VectorXd wbar = cols.rowwise().mean();
        Eigen::MatrixXd m = cols * cols.transpose();
        m /= static_cast<double>(raw_n);
        m *= -beta;
        m.diagonal() += beta * wbar;
        mean_sq = m.squaredNorm();
    } else {
        // Pairwise: sum_{k != l} <H_k, H_l> over effective draws, each inner
        // product expanded over the raw columns of the two pairs.
        long double cross = 0.0;
        auto pair_inner = [&](int k, int l) -> long double {
            if (!antithetic) return softmax_hessian_inner(cols.col(k), cols.col(l), beta);
            long double s = 0.0;
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b)
                    s += softmax_hessian_inner(cols.col(2 * k + a), cols.col(2 * l + b), beta);
            return 0.25L * s;
        };
        for (int k = 0; k < kp; ++k)
            for (int l = k + 1; l < kp; ++l) cross += pair_inner(k, l);
        cross *= 2.0L;
        mean_sq = (cross + diag) / (static_cast<long double>(kp) * kp);
    }

    if (raw_out) *raw_out = static_cast<double>(mean_sq);
    const long double kp_ld = static_cast<long double>(kp);
    return static_cast<double>((kp_ld * kp_ld * mean_sq - diag) / (kp_ld * (kp_ld - 1.0L)));
}

} // namespace detail

namespace {

OuterEval eval_outer(const TestFunction& f, const GaussianMeasure& mu, double t,
                     const EngineOpts& o, const MehlerConfig& cfg, RngStream& rng, Work& w) {
    OuterEval out;
    mu.sample(rng, w.x);

    if (t == 0.0) {
        f.gradient(w.x, w.g0);
        if (o.want_gamma) {
            out.gamma = o.gamma_factor * quad_form(o.quad, w.g0, w.g0, w);
            out.gamma_raw = out.gamma;
        }
        if (o.want_hess) {
            out.hess = o.hess_scale * hessian_frob_sq_at(f, w.x, w);
            out.hess_raw = out.hess;
        }
        return out;
    }

    const double e2t = std::exp(-2.0 * t);
    int raw_n = std::max(2, cfg.inner);
    if (cfg.antithetic && (raw_n & 1)) ++raw_n;
    const int kp = cfg.antithetic ? raw_n / 2 : raw_n;

    fill_mehler_points(mu, w.x, t, cfg.antithetic, rng, w, raw_n);
    w.grads.resize(f.dim(), raw_n);
    for (int a = 0; a < raw_n; ++a) {
        Eigen::VectorXd col = w.grads.col(a); // proxy-safe write
        f.gradient(w.z.col(a), col);
        w.grads.col(a) = col;
    }

    if (o.want_gamma) {
        // Effective (pair-averaged) draws for the U-statistic.
        if (cfg.antithetic) {
            w.eff.resize(f.dim(), kp);
            for (int k = 0; k < kp; ++k)
                w.eff.col(k) = 0.5 * (w.grads.col(2 * k) + w.grads.col(2 * k + 1));
        } else {
            w.eff = w.grads;
        }
        w.s = w.eff.rowwise().sum();

        double sas, diag = 0.0;
        if (o.quad.weight) {
            w.ag.noalias() = (*o.quad.weight) * w.eff;
            for (int k = 0; k < kp; ++k) diag += w.eff.col(k).dot(w.ag.col(k));
            sas = w.s.dot(w.ag.rowwise().sum());
        } else {
            for (int k = 0; k < kp; ++k) diag += w.eff.col(k).squaredNorm();
            diag *= o.quad.scale;
            sas = o.quad.scale * w.s.squaredNorm();
        }

        if (o.norm == IrNormalization::paper) {
            // 2 e^{-2t} <grad f(x), A P_t grad f(x)>: linear in the inner
            // mean, no bias to correct.
            f.gradient(w.x, w.g0);
            const double v =
                o.gamma_factor * e2t * quad_form(o.quad, w.g0, w.s, w) / static_cast<double>(kp);
            out.gamma = v;
            out.gamma_raw = v;
        } else {
            const double kd = static_cast<double>(kp);
            out.gamma = o.gamma_factor * e2t * (sas - diag) / (kd * (kd - 1.0));
            out.gamma_raw = o.gamma_factor * e2t * sas / (kd * kd);
        }
    }

    if (o.want_hess) {
        const double scale = o.hess_scale * e2t * e2t;
        switch (f.hessian_kind()) {
            case HessianKind::zero:
                break;
            case HessianKind::constant: {
                const double v = scale * f.constant_hessian().squaredNorm();
                out.hess = v;
                out.hess_raw = v;
                break;
            }
            case HessianKind::softmax: {
                // Gradient columns of f_beta are its softmax weights.
                const auto route = (f.dim() <= kDenseHessianCap && f.dim() <= raw_n)
                                       ? detail::HessRoute::dense
                                       : detail::HessRoute::pairwise;
                double raw = 0.0;
                const double u = detail::softmax_mean_hessian_frob_sq(w.grads, f.beta(),
                                                                      cfg.antithetic, route, &raw);
                out.hess = scale * u;
                out.hess_raw = scale * raw;
                break;
            }
        }
    }
    return out;
}

struct PointEstimates {
    EstimateWithCI gamma, gamma2, hess;
    double gamma_raw = 0.0, gamma2_raw = 0.0, hess_raw = 0.0;
};

struct BatchState {
    RngStream stream;
    Welford gamma, gamma_raw, hess, hess_raw, g2, g2_raw;
};

EstimateWithCI summarize(const std::vector<BatchState>& batches, Welford BatchState::*field,
                         std::int64_t n_samples, std::uint64_t fingerprint) {
    const int b = static_cast<int>(batches.size());
    double mean = 0.0;
    for (const auto& bs : batches) mean += (bs.*field).mean;
    mean /= b;
    double ss = 0.0;
    for (const auto& bs : batches) {
        const double d = (bs.*field).mean - mean;
        ss += d * d;
    }
    EstimateWithCI e;
    e.value = mean;
    e.std_error = std::sqrt(ss / (static_cast<double>(b) * (b - 1)));
    e.n_samples = n_samples;
    e.n_batches = b;
    e.seed_fingerprint = fingerprint;
    return e;
}

// One grid point: batch-means over outer draws, doubling outer until the
// requested components meet the CI target (relative to their value, with an
// absolute floor taken from the curve's t=0 scale).
PointEstimates run_point(const TestFunction& f, const GaussianMeasure& mu, double t,
                         const EngineOpts& o, const MehlerConfig& cfg, RngStream base,
                         double gamma_floor, double hess_floor) {
    const int nb = std::max(2, cfg.batches);
    std::vector<BatchState> batches(static_cast<size_t>(nb));
    for (int i = 0; i < nb; ++i)
        batches[static_cast<size_t>(i)].stream = base.derive(static_cast<std::uint64_t>(i));

    std::int64_t outer = std::max<std::int64_t>(cfg.outer, 2 * nb);
    PointEstimates pe;
    for (;;) {
        const std::int64_t per = (outer + nb - 1) / nb;
        parallel_for(nb, [&](int i) {
            auto& bs = batches[static_cast<size_t>(i)];
            Work w;
            while (bs.gamma.count < per) {
                const OuterEval ev = eval_outer(f, mu, t, o, cfg, bs.stream, w);
                bs.gamma.add(ev.gamma);
                bs.gamma_raw.add(ev.gamma_raw);
                bs.hess.add(ev.hess);
                bs.hess_raw.add(ev.hess_raw);
                bs.g2.add(ev.gamma + ev.hess);
                bs.g2_raw.add(ev.gamma_raw + ev.hess_raw);
            }
        });
        const std::int64_t n = per * nb;
        const auto fp = base.fingerprint();
        pe.gamma = summarize(batches, &BatchState::gamma, n, fp);
        pe.hess = summarize(batches, &BatchState::hess, n, fp);
        pe.gamma2 = summarize(batches, &BatchState::g2, n, fp);
        pe.gamma_raw = summarize(batches, &BatchState::gamma_raw, n, fp).value;
        pe.hess_raw = summarize(batches, &BatchState::hess_raw, n, fp).value;
        pe.gamma2_raw = summarize(batches, &BatchState::g2_raw, n, fp).value;

        auto ok = [&](const EstimateWithCI& e, double floor) {
            return e.std_error <= cfg.target_rel_ci * std::max(std::abs(e.value), floor);
        };
        bool converged = true;
        if (o.want_gamma) converged = converged && ok(pe.gamma, gamma_floor);
        if (o.want_hess) converged = converged && ok(pe.hess, hess_floor);
        if (converged) return pe;
        if (2 * outer > cfg.max_outer) {
            pe.gamma.low_precision = o.want_gamma && !ok(pe.gamma, gamma_floor);
            pe.hess.low_precision = o.want_hess && !ok(pe.hess, hess_floor);
            pe.gamma2.low_precision = pe.gamma.low_precision || pe.hess.low_precision;
            return pe;
        }
        outer *= 2;
    }
}

CurveBundle run_curves(const TestFunction& f, const GaussianMeasure& mu, const TimeGrid& grid,
                       const MehlerConfig& cfg, RngStream rng, const EngineOpts& opts,
                       const CurveRequest& request) {
    grid.validate();
    if (f.dim() != mu.dim())
        throw std::invalid_argument("decay_curves: function and measure dimensions differ");
    if ((request.gamma2 || request.hessian) && !mu.is_isotropic())
        throw std::invalid_argument(
            "decay_curves: Gamma_2 components are only defined here for isotropic measures");

    EngineOpts o = opts;
    o.want_gamma = true; // gamma is needed for gamma2 anyway and is cheap
    o.want_hess = request.gamma2 || request.hessian;

    const int np = grid.size();
    std::vector<PointEstimates> pts(static_cast<size_t>(np));

    // The first point fixes the absolute CI floors for the rest of the
    // curve, so tail points with near-zero values cannot force doubling
    // to the cap.
    pts[0] = run_point(f, mu, grid.points[0], o, cfg, rng.derive(0), 0.0, 0.0);
    const double gf = 0.01 * std::abs(pts[0].gamma.value);
    const double hf = 0.01 * std::abs(pts[0].hess.value);
    for (int i = 1; i < np; ++i)
        pts[static_cast<size_t>(i)] =
            run_point(f, mu, grid.points[static_cast<size_t>(i)], o, cfg,
                      rng.derive(static_cast<std::uint64_t>(i)), gf, hf);

    auto build = [&](CurveKind kind, EstimateWithCI PointEstimates::*est,
                     double PointEstimates::*raw) {
        DecayCurve c;
        c.grid = grid;
        c.kind = kind;
        c.values.reserve(static_cast<size_t>(np));
        c.raw.reserve(static_cast<size_t>(np));
        for (const auto& p : pts) {
            c.values.push_back(p.*est);
            c.raw.push_back(p.*raw);
        }
        return c;
    };

    CurveBundle out;
    if (request.gamma)
        out.gamma = build(opts.gamma_factor == 1.0 && !opts.quad.weight && opts.quad.scale == 1.0
                              ? CurveKind::I
                              : CurveKind::Ir,
                          &PointEstimates::gamma, &PointEstimates::gamma_raw);
    if (request.gamma2)
        out.gamma2 = build(CurveKind::Gamma2, &PointEstimates::gamma2, &PointEstimates::gamma2_raw);
    if (request.hessian)
        out.hessian = build(CurveKind::HessSq, &PointEstimates::hess, &PointEstimates::hess_raw);
    return out;
}

EngineOpts gamma_opts_for(const GaussianMeasure& mu) {
    EngineOpts o;
    if (mu.is_isotropic()) {
        o.quad.scale = mu.scale();
    } else {
        o.quad.weight = &mu.covariance();
    }
    o.hess_scale = mu.is_isotropic() ? mu.scale() * mu.scale() : 1.0;
    return o;
}

} // namespace

CurveBundle decay_curves(const TestFunction& f, const GaussianMeasure& mu, const TimeGrid& grid,
                         const MehlerConfig& cfg, RngStream rng, const CurveRequest& request) {
    return run_curves(f, mu, grid, cfg, rng, gamma_opts_for(mu), request);
}

DecayCurve i_curve(const TestFunction& f, const GaussianMeasure& mu, const TimeGrid& grid,
                   const MehlerConfig& cfg, RngStream rng) {
    CurveRequest req;
    req.gamma = true;
    auto bundle = run_curves(f, mu, grid, cfg, rng, gamma_opts_for(mu), req);
    bundle.gamma.kind = CurveKind::I;
    return bundle.gamma;
}

DecayCurve gamma2_integral_curve(const TestFunction& f, const GaussianMeasure& mu,
                                 const TimeGrid& grid, const MehlerConfig& cfg, RngStream rng) {
    CurveRequest req;
    req.gamma = false;
    req.gamma2 = true;
    return run_curves(f, mu, grid, cfg, rng, gamma_opts_for(mu), req).gamma2;
}

DecayCurve i_r_curve(const TestFunction& f, const GaussianMeasure& mu, int r,
                     const TimeGrid& grid, const MehlerConfig& cfg, RngStream rng,
                     IrNormalization normalization) {
    if (r < 1) throw std::invalid_argument("i_r_curve: r must be a positive integer");
    EngineOpts o;
    o.norm = normalization;
    o.gamma_factor = normalization == IrNormalization::paper ? 2.0 : 1.0;

    Eigen::MatrixXd powered;
    if (mu.is_isotropic()) {
        o.quad.scale = std::pow(mu.scale(), r);
    } else {
        const Eigen::MatrixXd& m = mu.covariance();
        if (m.minCoeff() < 0.0)
            throw std::invalid_argument("i_r_curve: covariance entries must be nonnegative");
        powered = m.array().pow(static_cast<double>(r)).matrix();
        o.quad.weight = &powered;
    }

    CurveRequest req;
    req.gamma = true;
    auto bundle = run_curves(f, mu, grid, cfg, rng, o, req);
    bundle.gamma.kind = CurveKind::Ir;
    bundle.gamma.r = r;
    return bundle.gamma;
}

EstimateWithCI mehler_apply(const std::function<double(const Eigen::VectorXd&)>& f, double t,
                            const Eigen::VectorXd& x, const GaussianMeasure& mu,
                            const MehlerConfig& cfg, RngStream rng) {
    if (t < 0.0) throw std::invalid_argument("mehler_apply: t must be >= 0");
    EstimateWithCI e;
    e.seed_fingerprint = rng.fingerprint();
    if (t == 0.0) {
        e.value = f(x);
        e.n_samples = 1;
        e.n_batches = 1;
        return e;
    }
    int raw_n = std::max(2, cfg.inner);
    if (cfg.antithetic && (raw_n & 1)) ++raw_n;
    const int kp = cfg.antithetic ? raw_n / 2 : raw_n;

    Work w;
    fill_mehler_points(mu, x, t, cfg.antithetic, rng, w, raw_n);
    Welford acc;
    for (int k = 0; k < kp; ++k) {
        double v;
        if (cfg.antithetic)
            v = 0.5 * (f(w.z.col(2 * k)) + f(w.z.col(2 * k + 1)));
        else
            v = f(w.z.col(k));
        acc.add(v);
    }
    e.value = acc.mean;
    e.std_error = std::sqrt(acc.m2 / (static_cast<double>(kp) * (kp - 1)));
    e.n_samples = kp;
    e.n_batches = 1;
    return e;
}

EstimateWithCI mehler_apply(const TestFunction& f, double t, const Eigen::VectorXd& x,
                            const GaussianMeasure& mu, const MehlerConfig& cfg, RngStream rng) {
    return mehler_apply([&f](const Eigen::VectorXd& z) { return f.value(z); }, t, x, mu, cfg,
                        rng);
}

VectorEstimate pt_gradient(const TestFunction& f, double t, const Eigen::VectorXd& x,
                           const GaussianMeasure& mu, const MehlerConfig& cfg, RngStream rng) {
    if (t < 0.0) throw std::invalid_argument("pt_gradient: t must be >= 0");
    VectorEstimate ve;
    if (t == 0.0) {
        ve.value.resize(f.dim());
        f.gradient(x, ve.value);
        ve.std_error = Eigen::VectorXd::Zero(f.dim());
        ve.n_draws = 1;
        return ve;
    }
    int raw_n = std::max(2, cfg.inner);
    if (cfg.antithetic && (raw_n & 1)) ++raw_n;
    const int kp = cfg.antithetic ? raw_n / 2 : raw_n;

    Work w;
    fill_mehler_points(mu, x, t, cfg.antithetic, rng, w, raw_n);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(f.dim());
    Eigen::VectorXd m2 = Eigen::VectorXd::Zero(f.dim());
    Eigen::VectorXd g(f.dim()), gm(f.dim());
    for (int k = 0; k < kp; ++k) {
        if (cfg.antithetic) {
            f.gradient(w.z.col(2 * k), g);
            f.gradient(w.z.col(2 * k + 1), gm);
            g = 0.5 * (g + gm);
        } else {
            f.gradient(w.z.col(k), g);
        }
        const Eigen::VectorXd d = g - mean;
        mean += d / static_cast<double>(k + 1);
        m2.array() += d.array() * (g - mean).array();
    }
    const double et = std::exp(-t);
    ve.value = et * mean;
    ve.std_error = et * (m2 / (static_cast<double>(kp) * (kp - 1))).cwiseSqrt();
    ve.n_draws = kp;
    return ve;
}

Eigen::MatrixXd pt_hessian(const TestFunction& f, double t, const Eigen::VectorXd& x,
                           const GaussianMeasure& mu, const MehlerConfig& cfg, RngStream rng) {
    if (t < 0.0) throw std::invalid_argument("pt_hessian: t must be >= 0");
    if (t == 0.0) return f.dense_hessian(x);
    switch (f.hessian_kind()) {
        case HessianKind::zero: return Eigen::MatrixXd::Zero(f.dim(), f.dim());
        case HessianKind::constant: return std::exp(-2.0 * t) * f.constant_hessian();
        case HessianKind::softmax: break;
    }
    int raw_n = std::max(2, cfg.inner);
    if (cfg.antithetic && (raw_n & 1)) ++raw_n;

    Work w;
    fill_mehler_points(mu, x, t, cfg.antithetic, rng, w, raw_n);
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(f.dim(), f.dim());
    Eigen::VectorXd weights(f.dim());
    for (int a = 0; a < raw_n; ++a) {
        f.softmax(w.z.col(a), weights);
        sum.noalias() -= f.beta() * (weights * weights.transpose());
        sum.diagonal() += f.beta() * weights;
    }
    return std::exp(-2.0 * t) * sum / static_cast<double>(raw_n);
}

EstimateWithCI pt_l2_norm_sq(const TestFunction& f, double t, const GaussianMeasure& mu,
                             const MehlerConfig& cfg, RngStream rng) {
    if (t < 0.0) throw std::invalid_argument("pt_l2_norm_sq: t must be >= 0");
    const int nb = std::max(2, cfg.batches);
    int raw_n = std::max(2, cfg.inner);
    if (cfg.antithetic && (raw_n & 1)) ++raw_n;
    const int kp = cfg.antithetic ? raw_n / 2 : raw_n;

    std::vector<Welford> acc(static_cast<size_t>(nb));
    std::vector<RngStream> streams;
    streams.reserve(static_cast<size_t>(nb));
    for (int i = 0; i < nb; ++i) streams.push_back(rng.derive(static_cast<std::uint64_t>(i)));

    const std::int64_t per = (std::max<std::int64_t>(cfg.outer, 2 * nb) + nb - 1) / nb;
    parallel_for(nb, [&](int i) {
        Work w;
        auto& st = streams[static_cast<size_t>(i)];
        for (std::int64_t s = 0; s < per; ++s) {
            mu.sample(st, w.x);
            if (t == 0.0) {
                const double v = f.value(w.x);
                acc[static_cast<size_t>(i)].add(v * v);
                continue;
            }
            fill_mehler_points(mu, w.x, t, cfg.antithetic, st, w, raw_n);
            long double total = 0.0, sq = 0.0;
            for (int k = 0; k < kp; ++k) {
                double v;
                if (cfg.antithetic)
                    v = 0.5 * (f.value(w.z.col(2 * k)) + f.value(w.z.col(2 * k + 1)));
                else
                    v = f.value(w.z.col(k));
                total += v;
                sq += static_cast<long double>(v) * v;
            }
            const long double kd = kp;
            acc[static_cast<size_t>(i)].add(
                static_cast<double>((total * total - sq) / (kd * (kd - 1.0L))));
        }
    });

    double mean = 0.0;
    for (const auto& a : acc) mean += a.mean;
    mean /= nb;
    double ss = 0.0;
    for (const auto& a : acc) ss += (a.mean - mean) * (a.mean - mean);
    EstimateWithCI e;
    e.value = mean;
    e.std_error = std::sqrt(ss / (static_cast<double>(nb) * (nb - 1)));
    e.n_samples = per * nb;
    e.n_batches = nb;
    e.seed_fingerprint = rng.fingerprint();
    return e;
}

DynamicalVariance variance_dynamical(const TestFunction& f, const GaussianMeasure& mu,
                                     const TimeGrid& grid, const MehlerConfig& cfg,
                                     const EstimatorConfig& direct_cfg, RngStream rng) {
    grid.validate();
    DynamicalVariance dv;
    dv.curve = i_curve(f, mu, grid, cfg, rng.derive(1));
    dv.direct = mc_variance(
        [&](RngStream& s) {
            Eigen::VectorXd x;
            mu.sample(s, x);
            return f.value(x);
        },
        direct_cfg, rng.derive(2));

    const double t_back = grid.points.back();
    const double quad = 2.0 * dv.curve.integrate(0.0, t_back);
    const double quad_se = 2.0 * dv.curve.integrate_std_error(0.0, t_back);

    // Between the last grid point and tail_T, extend with the semigroup
    // decay shape I(t) ~ K(t_back) e^{-2t} (K is nonincreasing, so this is
    // an upper-biased but vanishing sliver).
    double gap = 0.0;
    if (grid.tail_T > t_back) {
        const double k_last = dv.curve.values.back().value * std::exp(2.0 * t_back);
        gap = k_last * (std::exp(-2.0 * t_back) - std::exp(-2.0 * grid.tail_T));
    }
    dv.tail = std::exp(-2.0 * grid.tail_T) * dv.direct.value;
    const double tail_se = std::exp(-2.0 * grid.tail_T) * dv.direct.std_error;

    dv.quadrature = quad + gap;
    dv.total.value = dv.quadrature + dv.tail;
    dv.total.std_error = std::sqrt(quad_se * quad_se + tail_se * tail_se);
    dv.total.n_samples = dv.direct.n_samples;
    dv.total.n_batches = cfg.batches;
    dv.total.seed_fingerprint = rng.fingerprint();
    dv.tail_ok = std::abs(dv.tail) <= 0.1 * std::abs(dv.total.value);
    if (!dv.tail_ok) dv.total.low_precision = true;
    return dv;
}

} // namespace gammalab
