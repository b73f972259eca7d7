#include "gammalab/stats.hpp"

#include <cmath>
#include <stdexcept>

#include "gammalab/parallel.hpp"

namespace gammalab {

namespace {

// Per-batch running moments (Welford). Each batch owns a derived stream and
// keeps drawing from it across doubling rounds, so the totals are invariant
// under thread scheduling.
struct BatchMoments {
    RngStream stream;
    std::int64_t count = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        ++count;
        const double d = x - mean;
        mean += d / static_cast<double>(count);
        m2 += d * (x - mean);
    }
    double variance_unbiased() const {
        return count > 1 ? m2 / static_cast<double>(count - 1) : 0.0;
    }
};

struct BatchSummary {
    double value = 0.0;
    double std_error = 0.0;
    std::int64_t n_samples = 0;
};

// Combines one statistic per batch into (mean, spread/sqrt(B)).
BatchSummary combine(const std::vector<double>& stats, std::int64_t n_samples) {
    const int b = static_cast<int>(stats.size());
    double mean = 0.0;
    for (double v : stats) mean += v;
    mean /= b;
    double ss = 0.0;
    for (double v : stats) ss += (v - mean) * (v - mean);
    BatchSummary out;
    out.value = mean;
    out.std_error = std::sqrt(ss / (b * static_cast<double>(b - 1)));
    out.n_samples = n_samples;
    return out;
}

void check_cfg(const EstimatorConfig& cfg) {
    if (cfg.batches < 2) throw std::invalid_argument("EstimatorConfig: batches must be >= 2");
    if (cfg.samples < cfg.batches)
        throw std::invalid_argument("EstimatorConfig: samples must be >= batches");
}

// Generic doubling driver: per_batch_stat extracts the statistic each batch
// contributes (its mean, its unbiased variance, ...).
template <typename StatFn>
EstimateWithCI run_batches(const Sampler& sampler, const EstimatorConfig& cfg, RngStream rng,
                           StatFn per_batch_stat) {
    check_cfg(cfg);
    const int b = cfg.batches;
    std::vector<BatchMoments> batches(static_cast<size_t>(b));
    for (int i = 0; i < b; ++i) batches[static_cast<size_t>(i)].stream = rng.derive(static_cast<std::uint64_t>(i));

    std::int64_t total = std::max<std::int64_t>(cfg.samples, b);
    std::int64_t drawn = 0;
    EstimateWithCI est;
    est.seed_fingerprint = rng.fingerprint();

    for (;;) {
        const std::int64_t per = (total + b - 1) / b;
        parallel_for(b, [&](int i) {
            auto& bm = batches[static_cast<size_t>(i)];
            while (bm.count < per) bm.add(sampler(bm.stream));
        });
        drawn = per * b;

        std::vector<double> stats(static_cast<size_t>(b));
        for (int i = 0; i < b; ++i) stats[static_cast<size_t>(i)] = per_batch_stat(batches[static_cast<size_t>(i)]);
        const BatchSummary s = combine(stats, drawn);
        est.value = s.value;
        est.std_error = s.std_error;
        est.n_samples = s.n_samples;
        est.n_batches = b;

        const bool converged =
            est.std_error <= cfg.target_rel_ci * std::abs(est.value) || est.std_error == 0.0;
        if (converged) {
            est.low_precision = false;
            return est;
        }
        if (2 * total > cfg.max_samples) {
            est.low_precision = true;
            return est;
        }
        total *= 2;
    }
}

} // namespace

EstimateWithCI mc_mean(const Sampler& sampler, const EstimatorConfig& cfg, RngStream rng) {
    return run_batches(sampler, cfg, rng, [](const BatchMoments& bm) { return bm.mean; });
}

EstimateWithCI mc_variance(const Sampler& sampler, const EstimatorConfig& cfg, RngStream rng) {
    return run_batches(sampler, cfg, rng,
                       [](const BatchMoments& bm) { return bm.variance_unbiased(); });
}

EstimateWithCI lp_norm(const Sampler& sampler, double p, const EstimatorConfig& cfg,
                       RngStream rng) {
    if (!(p >= 1.0)) throw std::invalid_argument("lp_norm: p must be >= 1");
    auto powered = [&](RngStream& s) {
        const double x = sampler(s);
        if (x < 0.0) throw std::domain_error("lp_norm: sampler produced a negative value");
        return std::pow(x, p);
    };
    EstimateWithCI moment = run_batches(powered, cfg, rng,
                                        [](const BatchMoments& bm) { return bm.mean; });
    EstimateWithCI out = moment;
    if (moment.value <= 0.0) {
        out.value = 0.0;
        out.std_error = 0.0;
        out.low_precision = true; // all-zero samples: zero norm, flagged
        return out;
    }
    out.value = std::pow(moment.value, 1.0 / p);
    // delta method: d/dm m^{1/p} = (1/p) m^{1/p - 1}
    out.std_error = moment.std_error * out.value / (p * moment.value);
    return out;
}

double hypercontractive_integral(std::span<const double> s_grid,
                                 std::span<const double> norm_values) {
    if (s_grid.size() != norm_values.size() || s_grid.size() < 2)
        throw std::invalid_argument("hypercontractive_integral: need matching grids, size >= 2");
    auto integrand = [&](size_t i) {
        const double e = std::exp(-2.0 * s_grid[i]);
        return e * (1.0 - e) * norm_values[i] * norm_values[i];
    };
    double total = 0.0;
    for (size_t i = 0; i + 1 < s_grid.size(); ++i) {
        const double h = s_grid[i + 1] - s_grid[i];
        if (h <= 0.0) throw std::invalid_argument("hypercontractive_integral: grid must increase");
        total += 0.5 * h * (integrand(i) + integrand(i + 1));
    }
    return total;
}

double hypercontractive_comparator(double norm2, double norm1, double c) {
    if (!(norm1 > 0.0)) throw std::domain_error("hypercontractive_comparator: ||g||_1 is zero");
    const double ratio = norm2 / norm1;
    const double denom = 1.0 + std::log(ratio);
    return c * norm2 * norm2 / (denom * denom);
}

} // namespace gammalab
