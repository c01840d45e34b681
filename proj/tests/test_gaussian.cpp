#include <gtest/gtest.h>

#include <vector>

#include "nsbandit/gaussian.hpp"
#include "nsbandit/latent.hpp"

using namespace nsbandit;

TEST(Cholesky, FactorReproducesMatrix) {
    Matrix m(3, 3);
    m << 4, 2, 0.4, 2, 5, 1, 0.4, 1, 3;
    const auto f = cholesky(m);
    EXPECT_EQ(f.jitter, 0.0);
    EXPECT_EQ(f.retries, 0);
    EXPECT_LT((f.lower * f.lower.transpose() - m).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Cholesky, ZeroJitterDoesNotEscalate) {
    Matrix m = Matrix::Ones(2, 2);
    m(1, 1) = 0.5;  // indefinite
    EXPECT_THROW(cholesky(m, 0.0), NotPositiveDefinite);
}

TEST(Cholesky, JitterLadderRescuesSingularMatrix) {
    Matrix m = Matrix::Ones(3, 3);  // rank one
    const auto f = cholesky(m, 1e-12);
    EXPECT_GE(f.jitter, 1e-12);
    EXPECT_LT((f.lower * f.lower.transpose() - m).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Cholesky, RejectsAsymmetricAndEmpty) {
    Matrix m(2, 2);
    m << 1, 0.5, 0.4, 1;
    EXPECT_THROW(cholesky(m), std::invalid_argument);
    EXPECT_THROW(cholesky(Matrix(0, 0)), DimensionMismatch);
    EXPECT_THROW(cholesky(Matrix::Identity(2, 3)), DimensionMismatch);
}

TEST(Condition, MatchesDenseInverseFormula) {
    Rng rng(11);
    const int n = 6;
    Matrix A(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) A(i, j) = std_normal(rng);
    Matrix S = A * A.transpose() + Matrix::Identity(n, n);
    Vector mu(n);
    for (int i = 0; i < n; ++i) mu[i] = std_normal(rng);
    std::vector<std::size_t> obs{1, 4, 5};
    std::vector<double> vals{0.3, -1.2, 2.0};
    const auto post = condition(mu, S, obs, vals);

    std::vector<int> f{0, 2, 3};
    Matrix Soo(3, 3), Sfo(3, 3), Sff(3, 3);
    Vector r(3), mf(3);
    for (int a = 0; a < 3; ++a) {
        r[a] = vals[a] - mu[Eigen::Index(obs[a])];
        mf[a] = mu[f[a]];
        for (int b = 0; b < 3; ++b) {
            Soo(a, b) = S(Eigen::Index(obs[a]), Eigen::Index(obs[b]));
            Sfo(a, b) = S(f[a], Eigen::Index(obs[b]));
            Sff(a, b) = S(f[a], f[b]);
        }
    }
    const Matrix inv = Soo.inverse();
    EXPECT_LT((post.mean - (mf + Sfo * inv * r)).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((post.cov - (Sff - Sfo * inv * Sfo.transpose())).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Condition, NoObservationsReturnsPrior) {
    Matrix S = Matrix::Identity(2, 2) * 2.0;
    Vector mu(2);
    mu << 1, -1;
    const auto post = condition(mu, S, std::vector<std::size_t>{}, std::vector<double>{});
    EXPECT_EQ(post.mean, mu);
    EXPECT_EQ(post.cov, S);
}

TEST(Condition, Errors) {
    Matrix S = Matrix::Identity(2, 2);
    Vector mu = Vector::Zero(2);
    EXPECT_THROW(condition(mu, S, std::vector<std::size_t>{3}, std::vector<double>{0.0}), std::out_of_range);
    EXPECT_THROW(condition(mu, S, std::vector<std::size_t>{0}, std::vector<double>{}), DimensionMismatch);
    EXPECT_THROW(condition(Vector::Zero(3), S, std::vector<std::size_t>{}, std::vector<double>{}), DimensionMismatch);
}

TEST(Kalman, UpdateIsPrecisionWeighted) {
    const auto b = kalman_update({0.0, 1.0}, 2.0, 1.0);
    EXPECT_DOUBLE_EQ(b.mean, 1.0);
    EXPECT_DOUBLE_EQ(b.variance, 0.5);
    const auto certain = kalman_update({0.7, 0.0}, 5.0, 1.0);
    EXPECT_EQ(certain.mean, 0.7);
    EXPECT_EQ(certain.variance, 0.0);
    EXPECT_THROW(kalman_update({0, 1}, 0, 0.0), std::invalid_argument);
}

TEST(Kalman, DiffuseKeepsStationaryLaw) {
    const double alpha = 0.9, sxi = 0.19;
    const GaussianBelief stat{0.0, sxi / (1 - alpha * alpha)};
    const auto d = kalman_diffuse(stat, alpha, sxi);
    EXPECT_NEAR(d.variance, stat.variance, 1e-14);
    const auto e = kalman_diffuse({2.0, 0.0}, alpha, sxi);
    EXPECT_DOUBLE_EQ(e.mean, 1.8);
    EXPECT_DOUBLE_EQ(e.variance, sxi);
}

TEST(Mvn, EmpiricalCovarianceMatches) {
    Matrix S(2, 2);
    S << 1.0, 0.6, 0.6, 2.0;
    const auto f = cholesky(S);
    Rng rng(5);
    const int N = 100000;
    Matrix acc = Matrix::Zero(2, 2);
    Vector mean = Vector::Zero(2);
    for (int i = 0; i < N; ++i) {
        const Vector x = mvn_sample(Vector::Zero(2), f.lower, rng);
        acc += x * x.transpose();
        mean += x;
    }
    acc /= N;
    mean /= N;
    EXPECT_LT((acc - S).cwiseAbs().maxCoeff(), 0.03);
    EXPECT_LT(mean.cwiseAbs().maxCoeff(), 0.015);
}
