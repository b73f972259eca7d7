#pragma once

#include <Eigen/Dense>
#include <optional>

#include "gammalab/rng.hpp"

namespace gammalab {

// Centered Gaussian measure on R^dim. Three backings:
//   - identity covariance (the standard Gaussian),
//   - isotropic  variance*I,
//   - a general covariance M held together with a factor F, F F^T = M,
//     used for sampling. F may be rectangular (dim x m): any wide factor
//     of a PSD covariance is accepted, which keeps rank-deficient
//     covariances cheap to sample from.
class GaussianMeasure {
  public:
    static constexpr double kPsdTolerance = 1e-10;
    static constexpr double kFactorTolerance = 1e-8;

    explicit GaussianMeasure(int dim);
    static GaussianMeasure isotropic(int dim, double variance);
    // Validates symmetry/PSD within kPsdTolerance, factors via pivoted LDL^T
    // (negative pivots within tolerance are clamped to zero) and verifies
    // F F^T = M entrywise within kFactorTolerance.
    static GaussianMeasure with_covariance(Eigen::MatrixXd covariance);
    // Covariance implied as F F^T; no factorization performed.
    static GaussianMeasure from_factor(Eigen::MatrixXd factor);

    int dim() const { return dim_; }
    bool is_identity() const { return kind_ == Kind::identity; }
    bool is_isotropic() const { return kind_ != Kind::dense; }
    // Per-coordinate variance for the isotropic kinds.
    double scale() const { return variance_; }

    // Materialized covariance (computed once for factor-backed measures).
    const Eigen::MatrixXd& covariance() const;
    const Eigen::MatrixXd& factor() const;
    double covariance_entry(int i, int j) const;

    void sample(RngStream& rng, Eigen::VectorXd& out) const;
    Eigen::VectorXd sample(RngStream& rng) const;
    // Fills a dim x count matrix, one draw per column. For dense measures
    // this runs as a single matrix product.
    void sample_columns(RngStream& rng, Eigen::MatrixXd& out) const;

  private:
    enum class Kind { identity, isotropic, dense };

    GaussianMeasure() = default;

    Kind kind_ = Kind::identity;
    int dim_ = 0;
    double variance_ = 1.0;
    Eigen::MatrixXd factor_;                          // dim x m
    mutable std::optional<Eigen::MatrixXd> covariance_;
};

} // namespace gammalab
