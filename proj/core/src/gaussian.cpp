#include "gammalab/gaussian.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace gammalab {

GaussianMeasure::GaussianMeasure(int dim) {
    if (dim <= 0) throw std::invalid_argument("GaussianMeasure: dim must be positive");
    kind_ = Kind::identity;
    dim_ = dim;
    variance_ = 1.0;
}

GaussianMeasure GaussianMeasure::isotropic(int dim, double variance) {
    if (dim <= 0) throw std::invalid_argument("GaussianMeasure: dim must be positive");
    if (!(variance >= 0.0) || !std::isfinite(variance))
        throw std::invalid_argument("GaussianMeasure: variance must be finite and >= 0");
    GaussianMeasure m;
    m.kind_ = variance == 1.0 ? Kind::identity : Kind::isotropic;
    m.dim_ = dim;
    m.variance_ = variance;
    return m;
}

GaussianMeasure GaussianMeasure::with_covariance(Eigen::MatrixXd covariance) {
    const auto n = covariance.rows();
    if (n == 0 || covariance.cols() != n)
        throw std::invalid_argument("GaussianMeasure: covariance must be square and nonempty");
    const double scale = std::max(1.0, covariance.cwiseAbs().maxCoeff());
    if ((covariance - covariance.transpose()).cwiseAbs().maxCoeff() > kPsdTolerance * scale)
        throw std::invalid_argument("GaussianMeasure: covariance is not symmetric");

    // Pivoted LDL^T tolerates semidefinite input; tiny negative pivots are
    // rank-deficiency noise and get clamped, anything worse is rejected.
    Eigen::LDLT<Eigen::MatrixXd> ldlt(covariance);
    if (ldlt.info() != Eigen::Success)
        throw std::runtime_error("GaussianMeasure: LDL^T factorization failed");
    Eigen::VectorXd d = ldlt.vectorD();
    for (Eigen::Index i = 0; i < d.size(); ++i) {
        if (d[i] < -kPsdTolerance * scale)
            throw std::runtime_error(
                "GaussianMeasure: covariance is not PSD (pivot " + std::to_string(d[i]) + ")");
        d[i] = std::max(d[i], 0.0);
    }
    Eigen::MatrixXd lower = ldlt.matrixL();
    Eigen::MatrixXd factor = ldlt.transpositionsP().transpose() *
                             (lower * d.cwiseSqrt().asDiagonal());

    const double err = (factor * factor.transpose() - covariance).cwiseAbs().maxCoeff();
    if (err > kFactorTolerance * scale)
        throw std::runtime_error("GaussianMeasure: factor check failed, |FF^T - M| = " +
                                 std::to_string(err));

    GaussianMeasure m;
    m.kind_ = Kind::dense;
    m.dim_ = static_cast<int>(n);
    m.factor_ = std::move(factor);
    m.covariance_ = std::move(covariance);
    return m;
}

GaussianMeasure GaussianMeasure::from_factor(Eigen::MatrixXd factor) {
    if (factor.rows() == 0 || factor.cols() == 0)
        throw std::invalid_argument("GaussianMeasure: factor must be nonempty");
    GaussianMeasure m;
    m.kind_ = Kind::dense;
    m.dim_ = static_cast<int>(factor.rows());
    m.factor_ = std::move(factor);
    return m;
}

const Eigen::MatrixXd& GaussianMeasure::covariance() const {
    if (!covariance_) {
        if (kind_ == Kind::dense) {
            covariance_ = factor_ * factor_.transpose();
        } else {
            covariance_ = Eigen::MatrixXd::Identity(dim_, dim_) * variance_;
        }
    }
    return *covariance_;
}

const Eigen::MatrixXd& GaussianMeasure::factor() const {
    if (kind_ != Kind::dense)
        throw std::logic_error("GaussianMeasure: no explicit factor for isotropic measures");
    return factor_;
}

double GaussianMeasure::covariance_entry(int i, int j) const {
    if (kind_ == Kind::dense) return covariance()(i, j);
    return i == j ? variance_ : 0.0;
}

void GaussianMeasure::sample(RngStream& rng, Eigen::VectorXd& out) const {
    if (kind_ == Kind::dense) {
        Eigen::VectorXd z(factor_.cols());
        for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.next_normal();
        out.noalias() = factor_ * z;
        return;
    }
    out.resize(dim_);
    const double s = std::sqrt(variance_);
    for (int i = 0; i < dim_; ++i) out[i] = s * rng.next_normal();
}

Eigen::VectorXd GaussianMeasure::sample(RngStream& rng) const {
    Eigen::VectorXd out;
    sample(rng, out);
    return out;
}

void GaussianMeasure::sample_columns(RngStream& rng, Eigen::MatrixXd& out) const {
    if (out.rows() != dim_)
        throw std::invalid_argument("sample_columns: row count must equal dim");
    if (kind_ == Kind::dense) {
        Eigen::MatrixXd z(factor_.cols(), out.cols());
        for (Eigen::Index c = 0; c < z.cols(); ++c)
            for (Eigen::Index r = 0; r < z.rows(); ++r) z(r, c) = rng.next_normal();
        out.noalias() = factor_ * z;
        return;
    }
    const double s = std::sqrt(variance_);
    for (Eigen::Index c = 0; c < out.cols(); ++c)
        for (Eigen::Index r = 0; r < out.rows(); ++r) out(r, c) = s * rng.next_normal();
}

} // namespace gammalab
