#include "gammalab/models.hpp"

#include <bit>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "gammalab/parallel.hpp"
#include "gammalab/softmax.hpp"

namespace gammalab {

namespace {

constexpr double kHighTempEdge = 0.58870501125773733; // sqrt(ln 2 / 2)

void require_sites(int n, int cap, const char* who) {
    if (n < 1) throw std::invalid_argument(std::string(who) + ": n_sites must be >= 1");
    if (n > cap)
        throw std::length_error(std::string(who) + ": n_sites " + std::to_string(n) +
                                " exceeds the exact-sum cap " + std::to_string(cap));
}

} // namespace

// ------------------------------------------------------------------ REM

REMInstance REMInstance::draw(int n_sites, double beta, RemNormalization normalization,
                              RngStream rng) {
    if (!(beta > 0.0)) throw std::domain_error("REMInstance: beta must be positive");
    REMInstance inst;
    inst.n_sites = n_sites;
    inst.beta = beta;
    inst.normalization = normalization;
    if (normalization == RemNormalization::rem_2n_scaled) {
        require_sites(n_sites, kExactSumCap, "REMInstance");
        inst.energies.resize(static_cast<size_t>(1) << n_sites);
    } else {
        if (n_sites < 1) throw std::invalid_argument("REMInstance: n_sites must be >= 1");
        inst.energies.resize(static_cast<size_t>(n_sites));
    }
    for (auto& e : inst.energies) e = rng.next_normal();
    return inst;
}

double gibbs_free_energy(const REMInstance& inst) {
    if (inst.energies.empty()) throw std::invalid_argument("gibbs_free_energy: empty instance");
    const double scale =
        inst.normalization == RemNormalization::rem_2n_scaled ? std::sqrt(inst.n_sites) : 1.0;
    double m = inst.energies[0];
    for (double e : inst.energies) m = std::max(m, e);
    m *= scale;
    double s = 0.0;
    for (double e : inst.energies) s += std::exp(inst.beta * (scale * e - m));
    return m + std::log(s) / inst.beta;
}

double rem_high_temp_bound(int n, double beta) {
    if (n < 1) throw std::invalid_argument("rem_high_temp_bound: n must be >= 1");
    if (!(beta > 0.0) || beta >= kHighTempEdge)
        throw std::domain_error("rem_high_temp_bound: requires 0 < beta < sqrt(ln 2 / 2) ~ " +
                                std::to_string(kHighTempEdge));
    const double b2 = beta * beta;
    return (1.0 - b2) / (1.0 - 2.0 * b2) / n;
}

RemLowTempBound rem_low_temp_bound_estimate(int n, double beta, const EstimatorConfig& cfg,
                                            RngStream rng, double c) {
    if (n < 3) throw std::invalid_argument("rem_low_temp_bound_estimate: n must be >= 3");
    if (!(beta > 0.0)) throw std::domain_error("rem_low_temp_bound_estimate: beta must be > 0");

    // E[sum_i w_i^2] over x ~ gamma_n; by symmetry ||d1 f||_2^2 is this / n.
    auto sampler = [n, beta](RngStream& s) {
        Eigen::VectorXd x(n), w(n);
        for (int i = 0; i < n; ++i) x[i] = s.next_normal();
        softmax_weights(x, beta, w);
        return w.squaredNorm();
    };
    RemLowTempBound out;
    out.power_sum = mc_mean(sampler, cfg, rng);

    const double s2 = out.power_sum.value;
    out.norm1 = 1.0 / n;
    out.norm2 = std::sqrt(s2 / n);
    const double ratio_sq = n * s2; // (norm2/norm1)^2
    if (!(ratio_sq > 1.0 + 1e-9)) {
        out.inconclusive = true;
        out.log_ratio = 0.0;
    } else {
        out.log_ratio = 0.5 * std::log(ratio_sq);
    }

    const double denom = 1.0 + out.log_ratio;
    out.bound.value = 1.0 / n + 4.0 * beta * beta * c * s2 / (denom * denom);
    // delta method through s2 -> s2/(1 + (1/2) log(n s2))^2
    const double dds2 = 1.0 / (denom * denom) - 1.0 / (denom * denom * denom);
    out.bound.std_error = 4.0 * beta * beta * c * std::abs(dds2) * out.power_sum.std_error;
    out.bound.n_samples = out.power_sum.n_samples;
    out.bound.n_batches = out.power_sum.n_batches;
    out.bound.seed_fingerprint = out.power_sum.seed_fingerprint;
    out.bound.low_precision = out.power_sum.low_precision;
    return out;
}

// ------------------------------------------------------------------- SK

SKInstance SKInstance::draw(int n_sites, double beta, RngStream rng) {
    if (n_sites < 1) throw std::invalid_argument("SKInstance: n_sites must be >= 1");
    if (!(beta > 0.0)) throw std::domain_error("SKInstance: beta must be positive");
    SKInstance inst;
    inst.n_sites = n_sites;
    inst.beta = beta;
    inst.couplings.resize(n_sites, n_sites);
    for (int i = 0; i < n_sites; ++i)
        for (int j = 0; j < n_sites; ++j) inst.couplings(i, j) = rng.next_normal();
    return inst;
}

double SKInstance::hamiltonian(std::span<const std::int8_t> spins) const {
    if (static_cast<int>(spins.size()) != n_sites)
        throw std::invalid_argument("SKInstance: spin count mismatch");
    double e = 0.0;
    for (int i = 0; i < n_sites; ++i) {
        double row = 0.0;
        for (int j = 0; j < n_sites; ++j) row += couplings(i, j) * spins[static_cast<size_t>(j)];
        e += spins[static_cast<size_t>(i)] * row;
    }
    return -e / std::sqrt(static_cast<double>(n_sites));
}

double sk_covariance(std::span<const std::int8_t> s1, std::span<const std::int8_t> s2) {
    if (s1.size() != s2.size()) throw std::invalid_argument("sk_covariance: length mismatch");
    if (s1.empty()) throw std::invalid_argument("sk_covariance: empty configuration");
    double overlap = 0.0;
    for (size_t i = 0; i < s1.size(); ++i)
        overlap += static_cast<double>(s1[i]) * static_cast<double>(s2[i]);
    return overlap * overlap / static_cast<double>(s1.size());
}

GibbsSummary gibbs_scan(const SKInstance& inst) {
    const int n = inst.n_sites;
    require_sites(n, kExactSumCap, "gibbs_scan");
    const double root_n = std::sqrt(static_cast<double>(n));
    const auto& x = inst.couplings;

    std::vector<std::int8_t> sigma(static_cast<size_t>(n), 1);
    // u = X sigma, v = X^T sigma; a spin flip updates both in O(n).
    Eigen::VectorXd u = x.rowwise().sum();
    Eigen::VectorXd v = x.colwise().sum();
    double e = 0.0; // sigma^T X sigma
    for (int i = 0; i < n; ++i) e += u[i];

    // Streaming log-sum-exp of beta*H over the Gray-code walk.
    double h = -e / root_n;
    double running_max = h;
    double sum_exp = 1.0; // e^{beta(h - running_max)}
    double max_h = h;

    const std::uint64_t total = static_cast<std::uint64_t>(1) << n;
    for (std::uint64_t step = 1; step < total; ++step) {
        const int k = std::countr_zero(step); // Gray code: flip bit k
        const double sk = static_cast<double>(sigma[static_cast<size_t>(k)]);
        e += -2.0 * sk * (u[k] + v[k] - 2.0 * x(k, k) * sk);
        for (int i = 0; i < n; ++i) {
            u[i] -= 2.0 * x(i, k) * sk;
            v[i] -= 2.0 * x(k, i) * sk;
        }
        sigma[static_cast<size_t>(k)] = static_cast<std::int8_t>(-sigma[static_cast<size_t>(k)]);

        h = -e / root_n;
        max_h = std::max(max_h, h);
        if (h > running_max) {
            sum_exp = sum_exp * std::exp(inst.beta * (running_max - h)) + 1.0;
            running_max = h;
        } else {
            sum_exp += std::exp(inst.beta * (h - running_max));
        }
    }

    GibbsSummary out;
    out.max_h = max_h;
    out.free_energy = running_max + std::log(sum_exp) / inst.beta;
    return out;
}

double gibbs_free_energy(const SKInstance& inst) { return gibbs_scan(inst).free_energy; }

// --------------------------------------------------------------- overlap

namespace {

// binom(n, k) for n <= 64 in unsigned 128-bit (largest value ~1.8e18, the
// row sum 2^64 still fits).
std::vector<unsigned __int128> binomial_row(int n) {
    std::vector<unsigned __int128> row(static_cast<size_t>(n) + 1, 0);
    row[0] = 1;
    for (int i = 1; i <= n; ++i)
        for (int k = i; k >= 1; --k) row[static_cast<size_t>(k)] += row[static_cast<size_t>(k) - 1];
    return row;
}

} // namespace

OverlapDistribution::OverlapDistribution(int n_sites) : n_(n_sites) {
    if (n_sites < 1 || n_sites > 64)
        throw std::invalid_argument("OverlapDistribution: need 1 <= n <= 64");
    const auto row = binomial_row(n_sites);
    unsigned __int128 total = 0;
    for (const auto& b : row) total += b;
    exact_ = total == (static_cast<unsigned __int128>(1) << n_sites);

    probs_.resize(static_cast<size_t>(n_sites) + 1);
    const double denom = std::ldexp(1.0, n_sites); // 2^n
    for (int k = 0; k <= n_sites; ++k)
        probs_[static_cast<size_t>(k)] = static_cast<double>(row[static_cast<size_t>(k)]) / denom;
}

double OverlapDistribution::probability(int overlap) const {
    if ((overlap + n_) % 2 != 0 || overlap < -n_ || overlap > n_) return 0.0;
    return probs_[static_cast<size_t>((overlap + n_) / 2)];
}

double OverlapDistribution::expectation(const std::function<double(int)>& f) const {
    double total = 0.0;
    for (int k = 0; k <= n_; ++k) total += probs_[static_cast<size_t>(k)] * f(2 * k - n_);
    return total;
}

bool OverlapDistribution::exact_sum_is_one() const { return exact_; }

double sk_cbeta_exact(int n, double beta) {
    if (!(beta > 0.0)) throw std::domain_error("sk_cbeta_exact: beta must be positive");
    const OverlapDistribution law(n);
    const double c = 2.0 * beta * beta / n;
    return law.expectation([c](int s) { return std::exp(c * static_cast<double>(s) * s); });
}

double sk_variance_bound(int n, double beta) {
    if (!(beta > 0.0 && beta < 0.5))
        throw std::domain_error("sk_variance_bound: requires 0 < beta < 1/2");
    return sk_cbeta_exact(n, beta) / (2.0 * beta * beta);
}

// ------------------------------------------------------------ Chatterjee

double chatterjee_ir_bound(const Eigen::MatrixXd& m, const Eigen::VectorXd& nu, double beta,
                           int r, double t) {
    if (r < 1) throw std::invalid_argument("chatterjee_ir_bound: r must be >= 1");
    if (t < 0.0) throw std::invalid_argument("chatterjee_ir_bound: t must be >= 0");
    if (m.rows() != m.cols() || m.rows() != nu.size())
        throw std::invalid_argument("chatterjee_ir_bound: shape mismatch");
    if (m.minCoeff() < 0.0 || nu.minCoeff() < 0.0)
        throw std::invalid_argument("chatterjee_ir_bound: entries must be nonnegative");
    const double e2t = std::exp(-2.0 * t);
    const double c = 2.0 * beta * beta * e2t;
    double total = 0.0;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            total += std::pow(m(i, j), r) * std::exp(c * m(i, j)) * nu[i] * nu[j];
    return e2t * total;
}

double chatterjee_ir_bound_sk(int n, double beta, int r, double t) {
    if (r < 1) throw std::invalid_argument("chatterjee_ir_bound_sk: r must be >= 1");
    if (t < 0.0) throw std::invalid_argument("chatterjee_ir_bound_sk: t must be >= 0");
    const OverlapDistribution law(n);
    const double e2t = std::exp(-2.0 * t);
    const double c = 2.0 * beta * beta * e2t;
    const double inv_n = 1.0 / n;
    return e2t * law.expectation([&](int s) {
        const double m = static_cast<double>(s) * s * inv_n;
        return std::pow(m, r) * std::exp(c * m);
    });
}

double chatterjee_ir_bound_rem(int n, double beta, int r, double t) {
    if (r < 1) throw std::invalid_argument("chatterjee_ir_bound_rem: r must be >= 1");
    if (t < 0.0) throw std::invalid_argument("chatterjee_ir_bound_rem: t must be >= 0");
    const double e2t = std::exp(-2.0 * t);
    return e2t * std::pow(static_cast<double>(n), r) *
           std::exp(2.0 * beta * beta * e2t * n - n * std::numbers::ln2);
}

// ------------------------------------------------- interpolation bounds

InterpolationBound sk_logn_bound(int n, double beta, double gamma_const) {
    if (n < 3) throw std::invalid_argument("sk_logn_bound: n must be >= 3");
    if (!(beta > 0.0)) throw std::domain_error("sk_logn_bound: beta must be positive");
    if (!(gamma_const > 0.0 && gamma_const < 0.5))
        throw std::domain_error(
            "sk_logn_bound: gamma_const must lie in (0, 1/2) for an n-uniform envelope");
    InterpolationBound out;
    out.T = 0.5 * std::log(2.0 * beta * beta / gamma_const);
    if (!(out.T > 0.0))
        throw std::domain_error("sk_logn_bound: interpolation time T must be positive "
                                "(beta too small for this gamma_const)");
    out.i0 = static_cast<double>(n); // Gamma_M(f) <= max M = n
    out.iT_envelope = chatterjee_ir_bound_sk(n, beta, 1, out.T);
    out.iT = std::min(out.iT_envelope, out.i0);
    out.value = partial_curvature_bound(out.i0, out.iT, out.T);
    return out;
}

InterpolationBound rem_chatterjee_low_temp_bound(int n, double beta, double gamma_const) {
    if (n < 1) throw std::invalid_argument("rem_chatterjee_low_temp_bound: n must be >= 1");
    const double edge = 2.0 * std::sqrt(std::numbers::ln2);
    if (!(beta > edge))
        throw std::domain_error("rem_chatterjee_low_temp_bound: requires beta > 2 sqrt(log 2) ~ " +
                                std::to_string(edge));
    if (!(gamma_const > 0.0))
        throw std::domain_error("rem_chatterjee_low_temp_bound: gamma_const must be positive");
    InterpolationBound out;
    out.T = 0.5 * std::log(2.0 * beta * beta / gamma_const);
    // 2 b^2 e^{-2T} = gamma: (n/2^n) e^{-2T} e^{gamma n}
    out.i0 = static_cast<double>(n); // sqrt(n)-scaled field: |grad F|^2 = n sum w^2 <= n
    out.iT_envelope = chatterjee_ir_bound_rem(n, beta, 1, out.T);
    out.iT = std::min(out.iT_envelope, out.i0);
    out.value = partial_curvature_bound(out.i0, out.iT, out.T);
    return out;
}

// ------------------------------------------------------------ ground state

GroundStateReport ground_state_relation(int n, double beta, std::int64_t draws, RngStream rng) {
    require_sites(n, 20, "ground_state_relation");
    if (!(beta > 0.0)) throw std::domain_error("ground_state_relation: beta must be positive");
    if (draws < 4) throw std::invalid_argument("ground_state_relation: need at least 4 draws");

    GroundStateReport rep;
    rep.n_sites = n;
    rep.beta = beta;
    rep.draws = draws;
    rep.sandwich_bound = n * std::numbers::ln2 / beta;
    rep.literal_log_n_constant = std::log(static_cast<double>(n)) / beta;

    const int nb = 16;
    struct Acc {
        std::int64_t c = 0;
        double mean_f = 0, m2_f = 0, mean_m = 0, m2_m = 0, worst = -1e300;
        void add(double f, double m) {
            ++c;
            double d = f - mean_f;
            mean_f += d / c;
            m2_f += d * (f - mean_f);
            d = m - mean_m;
            mean_m += d / c;
            m2_m += d * (m - mean_m);
        }
    };
    std::vector<Acc> acc(nb);
    const std::int64_t per = (draws + nb - 1) / nb;
    parallel_for(nb, [&](int b) {
        RngStream s = rng.derive(static_cast<std::uint64_t>(b));
        auto& a = acc[static_cast<size_t>(b)];
        for (std::int64_t i = 0; i < per; ++i) {
            const SKInstance inst = SKInstance::draw(n, beta, s.derive(static_cast<std::uint64_t>(i)));
            const GibbsSummary g = gibbs_scan(inst);
            a.add(g.free_energy, g.max_h);
            a.worst = std::max(a.worst, std::abs(g.free_energy - g.max_h) - rep.sandwich_bound);
        }
    });

    auto combine = [&](double Acc::*mean, double Acc::*m2) {
        EstimateWithCI e;
        std::vector<double> vars(nb);
        for (int b = 0; b < nb; ++b) {
            const auto& a = acc[static_cast<size_t>(b)];
            vars[static_cast<size_t>(b)] = (a.*m2) / static_cast<double>(a.c - 1);
        }
        double m = 0;
        for (double v : vars) m += v;
        m /= nb;
        double ss = 0;
        for (double v : vars) ss += (v - m) * (v - m);
        e.value = m;
        e.std_error = std::sqrt(ss / (static_cast<double>(nb) * (nb - 1)));
        e.n_samples = per * nb;
        e.n_batches = nb;
        e.seed_fingerprint = rng.fingerprint();
        return e;
    };
    rep.var_free_energy = combine(&Acc::mean_f, &Acc::m2_f);
    rep.var_max = combine(&Acc::mean_m, &Acc::m2_m);

    rep.worst_sandwich_gap = -1e300;
    for (const auto& a : acc) rep.worst_sandwich_gap = std::max(rep.worst_sandwich_gap, a.worst);
    rep.sandwich_ok = rep.worst_sandwich_gap <= 1e-9;

    rep.rhs.value = 3.0 * rep.var_free_energy.value +
                    6.0 * rep.sandwich_bound * rep.sandwich_bound;
    rep.rhs.std_error = 3.0 * rep.var_free_energy.std_error;
    rep.rhs.n_samples = rep.var_free_energy.n_samples;
    rep.rhs.n_batches = nb;
    rep.lhs = rep.var_max;
    rep.verdict = compare_with_ci(rep.rhs, rep.lhs); // claim rhs >= lhs
    return rep;
}

} // namespace gammalab
