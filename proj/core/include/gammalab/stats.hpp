#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "gammalab/rng.hpp"

namespace gammalab {

// The universal return of every Monte Carlo operation here.
struct EstimateWithCI {
    double value = 0.0;
    double std_error = 0.0;
    std::int64_t n_samples = 0;
    int n_batches = 0;
    std::uint64_t seed_fingerprint = 0;
    // Set when the sample cap was hit before the relative-CI target;
    // such an estimate is reported, never silently treated as converged.
    bool low_precision = false;

    double half_width_95() const { return 1.96 * std_error; }
};

// Batch-means configuration shared by every estimator, so convergence
// semantics are identical across modules. Sampling doubles until the
// relative CI target is met or max_samples is reached.
struct EstimatorConfig {
    std::int64_t samples = 1 << 15;
    int batches = 32;
    double target_rel_ci = 0.05;
    std::int64_t max_samples = 1 << 22;

    EstimatorConfig with_samples(std::int64_t s) const {
        EstimatorConfig c = *this;
        c.samples = s;
        if (c.max_samples < s) c.max_samples = s;
        return c;
    }
};

using Sampler = std::function<double(RngStream&)>;

// Mean of the sampler output; stderr via batch means.
EstimateWithCI mc_mean(const Sampler& sampler, const EstimatorConfig& cfg, RngStream rng);

// Unbiased sample variance of the sampler output. Each batch owns a derived
// stream and contributes its own unbiased variance; the estimate is the
// batch average and the stderr the batch spread.
EstimateWithCI mc_variance(const Sampler& sampler, const EstimatorConfig& cfg, RngStream rng);

// (E[X^p])^{1/p} for a nonnegative sampler, stderr by the delta method.
EstimateWithCI lp_norm(const Sampler& sampler, double p, const EstimatorConfig& cfg, RngStream rng);

// Trapezoid value of  int e^{-2s}(1-e^{-2s}) ||g||^2_{1+e^{-2s}} ds  over the
// given s grid, with norm_values[i] = ||g||_{1+e^{-2 s[i]}}.
double hypercontractive_integral(std::span<const double> s_grid,
                                 std::span<const double> norm_values);

// The closed-form comparator  C ||g||_2^2 / (1 + log(||g||_2/||g||_1))^2.
// Throws if norm1 is zero (undefined ratio).
double hypercontractive_comparator(double norm2, double norm1, double c = 1.0);

} // namespace gammalab
