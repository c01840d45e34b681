#pragma once

// Dense Gaussian numerics: Cholesky with a jitter ladder, multivariate normal
// sampling, Schur-complement conditioning and the scalar Kalman steps used by
// the AR(1) Thompson sampler.

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nsbandit/rng.hpp"

namespace nsbandit {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

class NotPositiveDefinite : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionMismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct GaussianBelief {
    double mean = 0.0;
    double variance = 0.0;
};

struct ConditionalGaussian {
    Vector mean;
    Matrix cov;
};

struct CholeskyFactor {
    Matrix lower;
    double jitter = 0.0;  // the jitter actually added to the diagonal
    int retries = 0;      // escalations needed (0 = first attempt succeeded)
};

inline constexpr int kJitterRetries = 3;
inline constexpr double kJitterGrowth = 10.0;

inline bool is_symmetric(const Matrix& m, double rel_tol = 1e-12) {
    if (m.rows() != m.cols()) return false;
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < i; ++j)
            if (std::abs(m(i, j) - m(j, i)) > rel_tol * scale) return false;
    return true;
}

/// Lower Cholesky factor of m + jitter*I. On failure the jitter is multiplied
/// by 10 and the factorization retried, at most three times. A zero starting
/// jitter therefore means "exact or nothing".
inline CholeskyFactor cholesky(const Matrix& m, double jitter = 0.0) {
    if (m.rows() == 0 || m.rows() != m.cols())
        throw DimensionMismatch("cholesky: matrix must be square with dimension >= 1");
    if (!(jitter >= 0.0)) throw std::invalid_argument("cholesky: jitter must be >= 0");
    if (!is_symmetric(m)) throw std::invalid_argument("cholesky: matrix is not symmetric");

    double j = jitter;
    for (int attempt = 0; attempt <= kJitterRetries; ++attempt) {
        Matrix a = m;
        a.diagonal().array() += j;
        Eigen::LLT<Matrix> llt(a);
        if (llt.info() == Eigen::Success && llt.matrixL().toDenseMatrix().allFinite()) {
            return {llt.matrixL(), j, attempt};
        }
        j *= kJitterGrowth;
    }
    throw NotPositiveDefinite("cholesky: factorization failed after jitter escalation (last jitter " +
                              std::to_string(j / kJitterGrowth) + ")");
}

inline Vector mvn_sample(const Vector& mean, const Matrix& chol, Rng& rng) {
    if (chol.rows() != mean.size() || chol.cols() != mean.size())
        throw DimensionMismatch("mvn_sample: mean and factor dimensions differ");
    Vector z(mean.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = std_normal(rng);
    return mean + chol.triangularView<Eigen::Lower>() * z;
}

/// Distribution of the unobserved coordinates given the observed ones.
/// Coordinates of the result follow the increasing index order of the
/// unobserved set.
inline ConditionalGaussian condition(const Vector& joint_mean, const Matrix& joint_cov,
                                     std::span<const std::size_t> observed_idx,
                                     std::span<const double> observed_vals, double jitter = 0.0) {
    const auto n = static_cast<std::size_t>(joint_mean.size());
    if (joint_cov.rows() != joint_mean.size() || joint_cov.cols() != joint_mean.size())
        throw DimensionMismatch("condition: mean/covariance dimensions differ");
    if (observed_idx.size() != observed_vals.size())
        throw DimensionMismatch("condition: observed index and value counts differ");

    std::vector<char> is_obs(n, 0);
    for (auto i : observed_idx) {
        if (i >= n) throw std::out_of_range("condition: observed index out of range");
        if (is_obs[i]) throw std::invalid_argument("condition: duplicate observed index");
        is_obs[i] = 1;
    }
    std::vector<std::size_t> free_idx;
    for (std::size_t i = 0; i < n; ++i)
        if (!is_obs[i]) free_idx.push_back(i);

    const auto no = static_cast<Eigen::Index>(observed_idx.size());
    const auto nf = static_cast<Eigen::Index>(free_idx.size());

    ConditionalGaussian out;
    out.mean.resize(nf);
    out.cov.resize(nf, nf);
    for (Eigen::Index a = 0; a < nf; ++a) {
        out.mean[a] = joint_mean[static_cast<Eigen::Index>(free_idx[a])];
        for (Eigen::Index b = 0; b < nf; ++b)
            out.cov(a, b) = joint_cov(static_cast<Eigen::Index>(free_idx[a]),
                                      static_cast<Eigen::Index>(free_idx[b]));
    }
    if (no == 0) return out;

    Matrix s_oo(no, no);
    Matrix s_of(no, nf);
    Vector resid(no);
    for (Eigen::Index a = 0; a < no; ++a) {
        const auto ia = static_cast<Eigen::Index>(observed_idx[a]);
        resid[a] = observed_vals[a] - joint_mean[ia];
        for (Eigen::Index b = 0; b < no; ++b)
            s_oo(a, b) = joint_cov(ia, static_cast<Eigen::Index>(observed_idx[b]));
        for (Eigen::Index b = 0; b < nf; ++b)
            s_of(a, b) = joint_cov(ia, static_cast<Eigen::Index>(free_idx[b]));
    }

    const CholeskyFactor f = cholesky(s_oo, jitter);
    const auto lower = f.lower.triangularView<Eigen::Lower>();
    lower.solveInPlace(s_of);   // L^{-1} Sigma_of
    lower.solveInPlace(resid);  // L^{-1} (x_o - mu_o)

    out.mean.noalias() += s_of.transpose() * resid;
    out.cov.noalias() -= s_of.transpose() * s_of;
    out.cov = 0.5 * (out.cov + out.cov.transpose());
    return out;
}

inline GaussianBelief kalman_diffuse(GaussianBelief b, double alpha, double sigma_xi_sq) {
    if (!(sigma_xi_sq >= 0.0)) throw std::invalid_argument("kalman_diffuse: sigma_xi_sq must be >= 0");
    return {alpha * b.mean, alpha * alpha * b.variance + sigma_xi_sq};
}

/// Precision-weighted update. A zero-variance belief is already certain and is
/// returned unchanged.
inline GaussianBelief kalman_update(GaussianBelief b, double reward, double sigma_w_sq) {
    if (!(sigma_w_sq > 0.0)) throw std::invalid_argument("kalman_update: sigma_w_sq must be > 0");
    if (!(b.variance >= 0.0)) throw std::invalid_argument("kalman_update: negative prior variance");
    if (b.variance == 0.0) return b;
    const double prior_prec = 1.0 / b.variance;
    const double obs_prec = 1.0 / sigma_w_sq;
    const double post_prec = prior_prec + obs_prec;
    return {(prior_prec * b.mean + obs_prec * reward) / post_prec, 1.0 / post_prec};
}

}  // namespace nsbandit
