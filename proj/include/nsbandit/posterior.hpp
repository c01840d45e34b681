#pragma once

// Exact Gaussian posterior over latent arm states given a bandit history.
//
// Observation model (one record per period i, arm A_i):
//   R_i = c_i + f_{i, A_i} + eps_i,
// with c a common zero-mean stationary process shared by all arms, f_{., a}
// independent per-arm stationary processes and eps white noise. The joint
// covariance of the rewards is
//   K_ij = common(i-j) + [A_i == A_j] idio(i-j) + [i == j] noise_var.
// The Cholesky factor of K is extended by one row per observation, so the
// posterior at period t costs one forward solve against a t x t factor.

#include <cmath>
#include <cstddef>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include "nsbandit/gaussian.hpp"
#include "nsbandit/latent.hpp"
#include "nsbandit/rng.hpp"

namespace nsbandit {

struct GaussianBanditModel {
    std::size_t k = 2;
    StationaryKernel common;
    StationaryKernel idio;
    double noise_var = 1.0;
};

struct HistoryRecord {
    std::size_t t = 0;  // 0-based period
    std::size_t arm = 0;
    double reward = 0.0;
};

using History = std::vector<HistoryRecord>;

/// Which latent quantity the posterior is reported for. `idiosyncratic` is
/// f_{t,a} itself; a custom target kernel g describes any per-arm component
/// whose covariance with f_{i,a} is g(t-i) and with itself is g(0) (for example
/// the time-invariant part of f when idio = constant + SE).
struct PosteriorTarget {
    std::optional<StationaryKernel> kernel;  // empty: the idiosyncratic process itself
};

class HistoryPosterior {
public:
    HistoryPosterior(GaussianBanditModel model, std::size_t capacity, PosteriorTarget target = {})
        : model_(std::move(model)), capacity_(capacity), target_is_idio_(!target.kernel) {
        if (model_.k < 1) throw std::invalid_argument("HistoryPosterior: k must be >= 1");
        if (!(model_.noise_var > 0.0)) throw std::invalid_argument("HistoryPosterior: noise_var must be > 0");
        if (capacity_ == 0) throw std::invalid_argument("HistoryPosterior: capacity must be >= 1");
        common_lag_ = model_.common.lag_table(capacity_ + 1);
        idio_lag_ = model_.idio.lag_table(capacity_ + 1);
        target_lag_ = target_is_idio_ ? idio_lag_ : target.kernel->lag_table(capacity_ + 1);
        const auto c = static_cast<Eigen::Index>(capacity_);
        L_ = Matrix::Zero(c, c);
        z_ = Vector::Zero(c);
    }

    const GaussianBanditModel& model() const { return model_; }
    std::size_t size() const { return arms_.size(); }
    std::size_t capacity() const { return capacity_; }
    const std::vector<std::size_t>& arms() const { return arms_; }
    const std::vector<double>& rewards() const { return rewards_; }

    /// Posterior of the target at period n = size(), for all arms jointly.
    ConditionalGaussian current() {
        ensure_solved();
        const std::size_t n = size();
        const auto k = static_cast<Eigen::Index>(model_.k);
        ConditionalGaussian out;
        out.mean = Vector::Zero(k);
        out.cov = Matrix::Identity(k, k) * target_lag_[0];
        if (n == 0) return out;
        const auto ni = static_cast<Eigen::Index>(n);
        const auto W = solved_.rightCols(k);
        out.mean.noalias() = W.transpose() * z_.head(ni);
        out.cov.noalias() -= W.transpose() * W;
        out.cov = 0.5 * (out.cov + out.cov.transpose());
        return out;
    }

    /// Append the observation for period size().
    void append(std::size_t arm, double reward) {
        if (arm >= model_.k) throw std::out_of_range("HistoryPosterior: arm out of range");
        const std::size_t n = size();
        if (n >= capacity_) throw std::length_error("HistoryPosterior: capacity exceeded");
        const auto ni = static_cast<Eigen::Index>(n);

        Vector row(ni);
        if (n > 0) {
            if (target_is_idio_) {
                ensure_solved();
                row = solved_.col(0) + solved_.col(1 + static_cast<Eigen::Index>(arm));
            } else {
                for (std::size_t i = 0; i < n; ++i) {
                    double v = common_lag_[n - i];
                    if (arms_[i] == arm) v += idio_lag_[n - i];
                    row[static_cast<Eigen::Index>(i)] = v;
                }
                L_.topLeftCorner(ni, ni).triangularView<Eigen::Lower>().solveInPlace(row);
            }
        }
        const double diag = common_lag_[0] + idio_lag_[0] + model_.noise_var;
        const double pivot = diag - (n > 0 ? row.squaredNorm() : 0.0);
        if (!(pivot > 0.0)) throw NotPositiveDefinite("HistoryPosterior: non-positive pivot while appending");
        const double lnn = std::sqrt(pivot);
        if (n > 0) L_.block(ni, 0, 1, ni) = row.transpose();
        L_(ni, ni) = lnn;
        z_[ni] = (reward - (n > 0 ? row.dot(z_.head(ni)) : 0.0)) / lnn;

        arms_.push_back(arm);
        rewards_.push_back(reward);
        solved_for_ = npos;
    }

    /// K^{-1} (y - y_alt) for an alternative observation vector (Matheron update).
    Vector solve_k(const Vector& rhs) const {
        const auto ni = static_cast<Eigen::Index>(size());
        Vector v = rhs;
        const auto Lb = L_.topLeftCorner(ni, ni);
        Lb.triangularView<Eigen::Lower>().solveInPlace(v);
        Lb.transpose().triangularView<Eigen::Upper>().solveInPlace(v);
        return v;
    }

    double common_cov(std::size_t lag) const { return common_lag_[lag]; }
    double idio_cov(std::size_t lag) const { return idio_lag_[lag]; }
    const Matrix& factor() const { return L_; }

private:
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    // Columns: L^{-1} common_n, then L^{-1} c_a for each arm a, where
    // c_a(i) = [A_i == a] target(n - i) and n = size().
    void ensure_solved() {
        const std::size_t n = size();
        if (solved_for_ == n) return;
        const auto ni = static_cast<Eigen::Index>(n);
        const auto k = static_cast<Eigen::Index>(model_.k);
        solved_.setZero(ni, k + 1);
        for (std::size_t i = 0; i < n; ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            solved_(ii, 0) = common_lag_[n - i];
            solved_(ii, 1 + static_cast<Eigen::Index>(arms_[i])) = target_lag_[n - i];
        }
        if (n > 0) L_.topLeftCorner(ni, ni).triangularView<Eigen::Lower>().solveInPlace(solved_);
        solved_for_ = n;
    }

    GaussianBanditModel model_;
    std::size_t capacity_;
    bool target_is_idio_;
    std::vector<double> common_lag_, idio_lag_, target_lag_;
    Matrix L_;
    Vector z_;
    std::vector<std::size_t> arms_;
    std::vector<double> rewards_;
    Matrix solved_;
    std::size_t solved_for_ = npos;
};

/// Prior samplers for joint posterior path draws. Built once per (model,
/// horizon) and shared read-only between policy instances.
struct PathPriors {
    std::shared_ptr<const GpSampler> common;  // null when the common kernel is zero
    std::shared_ptr<const GpSampler> idio;

    static std::shared_ptr<const PathPriors> make(const GaussianBanditModel& m, std::size_t horizon) {
        auto p = std::make_shared<PathPriors>();
        if (!m.common.is_zero()) p->common = std::make_shared<const GpSampler>(m.common, horizon);
        p->idio = std::make_shared<const GpSampler>(m.idio, horizon);
        return p;
    }
};

/// One exact joint draw of the idiosyncratic paths f_{s,a}, s < H, from the
/// posterior given the history held by `post`, by pathwise conditioning:
/// draw (f, y) from the prior, then shift f by Cov(f, y) K^{-1} (y_obs - y).
/// Returns an H x k matrix.
inline Matrix sample_idio_paths(const HistoryPosterior& post, const PathPriors& priors, std::size_t H, Rng& rng) {
    const auto& m = post.model();
    const std::size_t n = post.size();
    const std::size_t len = std::max(H, n);
    if (len > priors.idio->horizon()) throw std::length_error("sample_idio_paths: horizon exceeds prior capacity");
    const auto k = static_cast<Eigen::Index>(m.k);
    const auto Hi = static_cast<Eigen::Index>(H);

    Matrix f(static_cast<Eigen::Index>(len), k);
    for (Eigen::Index a = 0; a < k; ++a) f.col(a) = priors.idio->sample_prefix(len, rng);
    if (n == 0) return f.topRows(Hi);

    const auto ni = static_cast<Eigen::Index>(n);
    Vector c = Vector::Zero(ni);
    if (priors.common) c = priors.common->sample_prefix(n, rng);
    const double sd = std::sqrt(m.noise_var);
    Vector resid(ni);
    for (std::size_t i = 0; i < n; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        const double y_prior = c[ii] + f(ii, static_cast<Eigen::Index>(post.arms()[i])) + sd * std_normal(rng);
        resid[ii] = post.rewards()[i] - y_prior;
    }
    const Vector v = post.solve_k(resid);

    Matrix out = f.topRows(Hi);
    for (std::size_t i = 0; i < n; ++i) {
        const auto a = static_cast<Eigen::Index>(post.arms()[i]);
        const double vi = v[static_cast<Eigen::Index>(i)];
        for (std::size_t s = 0; s < H; ++s) {
            const std::size_t lag = s > i ? s - i : i - s;
            out(static_cast<Eigen::Index>(s), a) += post.idio_cov(lag) * vi;
        }
    }
    return out;
}

/// Draw from N(mean, cov). Falls back to a small jitter when the covariance is
/// numerically singular; a zero covariance returns the mean.
inline Vector sample_gaussian(const ConditionalGaussian& g, Rng& rng) {
    if (g.cov.isZero(0.0)) {
        for (Eigen::Index i = 0; i < g.mean.size(); ++i) (void)std_normal(rng);
        return g.mean;
    }
    CholeskyFactor f;
    try {
        f = cholesky(g.cov, 0.0);
    } catch (const NotPositiveDefinite&) {
        const double scale = std::max(1e-300, g.cov.diagonal().cwiseAbs().maxCoeff());
        f = cholesky(g.cov, kGpJitter * scale);
    }
    return mvn_sample(g.mean, f.lower, rng);
}

/// Posterior over the idiosyncratic states at the period after the last
/// history record.
inline ConditionalGaussian ts_exact_gp_posterior(const GaussianBanditModel& model, const History& history) {
    HistoryPosterior post(model, history.size() + 1);
    for (std::size_t i = 0; i < history.size(); ++i) {
        if (history[i].t != i) throw std::invalid_argument("ts_exact_gp_posterior: history must cover periods 0,1,2,...");
        post.append(history[i].arm, history[i].reward);
    }
    return post.current();
}

}  // namespace nsbandit
