#pragma once

// Latent-state generators: stationary Gaussian processes on the integer time
// grid, Markov switching chains, the renewal changepoint construction behind
// the lower-bound environment, and the article-pool refresh process.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include "nsbandit/gaussian.hpp"
#include "nsbandit/rng.hpp"

namespace nsbandit {

struct SEKernel {
    double variance = 1.0;   // sigma_X^2
    double timescale = 1.0;  // tau_X, in periods

    void validate() const {
        if (!(variance > 0.0) || !std::isfinite(variance) || !(timescale > 0.0) || !std::isfinite(timescale))
            throw std::invalid_argument("SEKernel: variance and timescale must be positive and finite");
    }
};

inline double se_cov(std::int64_t s, std::int64_t t, const SEKernel& kern) {
    const double r = static_cast<double>(s - t) / kern.timescale;
    return kern.variance * std::exp(-0.5 * r * r);
}

// A stationary covariance on the integer grid, written as a sum of terms.
// Exponential terms are the AR(1) autocovariance var * alpha^|lag|.
enum class KernelKind { squared_exponential, exponential, constant };

struct KernelTerm {
    KernelKind kind = KernelKind::squared_exponential;
    double variance = 1.0;
    double param = 1.0;  // timescale for squared_exponential, alpha for exponential
};

struct StationaryKernel {
    std::vector<KernelTerm> terms;

    static StationaryKernel zero() { return {}; }
    static StationaryKernel se(double variance, double timescale) {
        return {{{KernelKind::squared_exponential, variance, timescale}}};
    }
    static StationaryKernel ar1(double alpha, double sigma_xi_sq) {
        return {{{KernelKind::exponential, sigma_xi_sq / (1.0 - alpha * alpha), alpha}}};
    }
    static StationaryKernel constant(double variance) { return {{{KernelKind::constant, variance, 0.0}}}; }

    StationaryKernel operator+(const StationaryKernel& o) const {
        StationaryKernel r = *this;
        r.terms.insert(r.terms.end(), o.terms.begin(), o.terms.end());
        return r;
    }

    bool is_zero() const {
        for (const auto& t : terms)
            if (t.variance != 0.0) return false;
        return true;
    }

    double operator()(std::int64_t lag) const {
        const double l = std::abs(static_cast<double>(lag));
        double v = 0.0;
        for (const auto& t : terms) {
            switch (t.kind) {
                case KernelKind::squared_exponential: {
                    const double r = l / t.param;
                    v += t.variance * std::exp(-0.5 * r * r);
                    break;
                }
                case KernelKind::exponential:
                    v += t.variance * std::pow(t.param, l);
                    break;
                case KernelKind::constant:
                    v += t.variance;
                    break;
            }
        }
        return v;
    }

    /// k(0), k(1), ..., k(n-1).
    std::vector<double> lag_table(std::size_t n) const {
        std::vector<double> out(n);
        for (std::size_t i = 0; i < n; ++i) out[i] = (*this)(static_cast<std::int64_t>(i));
        return out;
    }

    Matrix gram(std::size_t n) const {
        const auto tab = lag_table(n);
        Matrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) m(i, j) = tab[i > j ? i - j : j - i];
        return m;
    }
};

inline constexpr double kGpJitter = 1e-10;

/// Zero-mean path sampler over periods 1..T. The T x T factor is computed once
/// and reused for every draw.
class GpSampler {
public:
    GpSampler(const StationaryKernel& kern, std::size_t T) : T_(T) {
        if (T == 0) throw std::invalid_argument("GpSampler: horizon must be >= 1");
        const Matrix k = kern.gram(T);
        const double scale = std::max(1.0, k.diagonal().maxCoeff());
        factor_ = cholesky(k, kGpJitter * scale);
    }

    GpSampler(const SEKernel& kern, std::size_t T)
        : GpSampler((kern.validate(), StationaryKernel::se(kern.variance, kern.timescale)), T) {}

    std::size_t horizon() const { return T_; }
    const CholeskyFactor& factor() const { return factor_; }

    Vector sample(Rng& rng) const {
        return mvn_sample(Vector::Zero(static_cast<Eigen::Index>(T_)), factor_.lower, rng);
    }

    /// First n coordinates only; the leading block of a Cholesky factor is the
    /// factor of the leading block, so this is an exact draw of the prefix.
    Vector sample_prefix(std::size_t n, Rng& rng) const {
        Vector z(static_cast<Eigen::Index>(n));
        for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = std_normal(rng);
        const auto ni = static_cast<Eigen::Index>(n);
        return factor_.lower.topLeftCorner(ni, ni).triangularView<Eigen::Lower>() * z;
    }

private:
    std::size_t T_;
    CholeskyFactor factor_;
};

inline Vector sample_gp_path(const SEKernel& kern, std::size_t T, Rng& rng) {
    return GpSampler(kern, T).sample(rng);
}

struct MarkovSwitchSpec {
    std::size_t k = 2;
    double delta = 0.1;

    void validate() const {
        if (k < 2) throw std::invalid_argument("MarkovSwitchSpec: k must be >= 2");
        if (!(delta >= 0.0 && delta <= 1.0)) throw std::invalid_argument("MarkovSwitchSpec: delta must lie in [0,1]");
    }
};

inline std::vector<std::size_t> sample_markov_switch_path(const MarkovSwitchSpec& spec, std::size_t T, Rng& rng) {
    spec.validate();
    if (T == 0) throw std::invalid_argument("sample_markov_switch_path: horizon must be >= 1");
    std::vector<std::size_t> seq(T);
    seq[0] = uniform_index(rng, spec.k);
    for (std::size_t t = 1; t < T; ++t) {
        if (bernoulli(rng, spec.delta)) {
            // uniform over the k-1 other arms
            std::size_t j = uniform_index(rng, spec.k - 1);
            seq[t] = j >= seq[t - 1] ? j + 1 : j;
        } else {
            seq[t] = seq[t - 1];
        }
    }
    return seq;
}

struct RenewalSpec {
    std::size_t k = 2;
    double tau_eff = 4.0;

    // mean inter-renewal time, (k-1)/k * tau_eff
    double tau_tilde() const { return (static_cast<double>(k) - 1.0) / static_cast<double>(k) * tau_eff; }
    std::size_t n() const { return static_cast<std::size_t>(std::floor(tau_tilde())); }
    double p() const { return tau_tilde() - static_cast<double>(n()); }
    double epsilon() const {
        return (1.0 - 1.0 / static_cast<double>(k)) * std::sqrt(static_cast<double>(k) / static_cast<double>(n()));
    }

    void validate() const {
        if (k < 2) throw std::invalid_argument("RenewalSpec: k must be >= 2");
        if (!(tau_eff >= static_cast<double>(k)) || !std::isfinite(tau_eff))
            throw std::invalid_argument("RenewalSpec: tau_eff must be finite and >= k");
        if (n() < 1) throw std::invalid_argument("RenewalSpec: derived block length must be >= 1");
    }
};

struct RenewalPath {
    std::vector<std::size_t> renewals;     // renewal periods T_1 < T_2 < ... <= T (1-based)
    std::vector<std::size_t> block_starts;  // 1 followed by the renewals after period 1
    std::vector<std::size_t> block_arms;    // best arm (0-based) on [start_j, start_{j+1})
};

/// Gaps are n with probability 1-p and n+1 with probability p (mean tau_tilde).
/// The first renewal follows the equilibrium excess-life law, which makes the
/// renewal indicator stationary with rate 1/tau_tilde. The block in progress at
/// period 1 gets its own uniformly drawn arm.
inline RenewalPath sample_renewal_changepoints(const RenewalSpec& spec, std::size_t T, Rng& rng) {
    spec.validate();
    if (T == 0) throw std::invalid_argument("sample_renewal_changepoints: horizon must be >= 1");
    const double tt = spec.tau_tilde();
    const std::size_t n = spec.n();
    const double p = spec.p();

    // P(T1 = x) = 1/tt for x <= n, p/tt for x = n+1
    std::size_t t1 = n + 1;
    {
        const double u = uniform01(rng) * tt;
        const auto x = static_cast<std::size_t>(std::floor(u));
        if (x < n) t1 = x + 1;
    }

    RenewalPath out;
    out.block_starts.push_back(1);
    out.block_arms.push_back(uniform_index(rng, spec.k));
    for (std::size_t r = t1; r <= T;) {
        out.renewals.push_back(r);
        if (r == 1) {
            out.block_arms.front() = uniform_index(rng, spec.k);
        } else {
            out.block_starts.push_back(r);
            out.block_arms.push_back(uniform_index(rng, spec.k));
        }
        r += bernoulli(rng, p) ? n + 1 : n;
    }
    return out;
}

struct CtrPrior {
    enum class Kind { beta, point } kind = Kind::beta;
    double a = 1.0;  // beta shape alpha, or the point-mass location
    double b = 1.0;  // beta shape beta

    static CtrPrior uniform() { return {}; }
    static CtrPrior beta(double a, double b) { return {Kind::beta, a, b}; }
    static CtrPrior point(double v) { return {Kind::point, v, 0.0}; }

    void validate() const {
        if (kind == Kind::beta && !(a > 0.0 && b > 0.0))
            throw std::invalid_argument("CtrPrior: beta shapes must be positive");
        if (kind == Kind::point && !(a >= 0.0 && a <= 1.0))
            throw std::invalid_argument("CtrPrior: point mass must lie in [0,1]");
    }

    double sample(Rng& rng) const {
        if (kind == Kind::point) return a;
        std::gamma_distribution<double> ga(a, 1.0), gb(b, 1.0);
        const double x = ga(rng);
        const double y = gb(rng);
        return x + y > 0.0 ? x / (x + y) : 0.5;
    }
};

struct ArticlePoolSpec {
    std::size_t k = 25;
    double tau = 100.0;  // mean article lifetime; +inf disables refreshes
    CtrPrior ctr_prior;

    double refresh_prob() const { return std::isinf(tau) ? 0.0 : 1.0 / tau; }

    void validate() const {
        if (k < 2) throw std::invalid_argument("ArticlePoolSpec: k must be >= 2");
        if (!(tau >= 1.0)) throw std::invalid_argument("ArticlePoolSpec: tau must be >= 1");
        ctr_prior.validate();
    }
};

struct ArticlePoolPath {
    Matrix ctr;                           // T x k click-through rates
    std::vector<std::vector<char>> refresh;  // refresh[t][a]: slot a refreshed between t and t+1
};

inline ArticlePoolPath sample_article_pool(const ArticlePoolSpec& spec, std::size_t T, Rng& rng) {
    spec.validate();
    if (T == 0) throw std::invalid_argument("sample_article_pool: horizon must be >= 1");
    const auto Ti = static_cast<Eigen::Index>(T);
    const auto ki = static_cast<Eigen::Index>(spec.k);
    ArticlePoolPath out;
    out.ctr.resize(Ti, ki);
    out.refresh.assign(T, std::vector<char>(spec.k, 0));
    const double q = spec.refresh_prob();
    for (Eigen::Index a = 0; a < ki; ++a) out.ctr(0, a) = spec.ctr_prior.sample(rng);
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t a = 0; a < spec.k; ++a) {
            const bool chi = bernoulli(rng, q);
            out.refresh[t][a] = chi ? 1 : 0;
            if (t + 1 < T) {
                const auto ti = static_cast<Eigen::Index>(t);
                const auto ai = static_cast<Eigen::Index>(a);
                out.ctr(ti + 1, ai) = chi ? spec.ctr_prior.sample(rng) : out.ctr(ti, ai);
            }
        }
    }
    return out;
}

}  // namespace nsbandit
