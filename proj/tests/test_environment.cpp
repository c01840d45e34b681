#include <gtest/gtest.h>

#include <sstream>

#include "nsbandit/environment.hpp"
#include "oracles.hpp"

using namespace nsbandit;

TEST(Argmax, LowestIndexWinsTies) {
    Vector r(3);
    r << 1.0, 2.0, 2.0;
    EXPECT_EQ(argmax_row(r), 1u);
    r << 0.0, 0.0, 0.0;
    EXPECT_EQ(argmax_row(r), 0u);
}

TEST(Regret, SequenceAndSatisficing) {
    Matrix mu(2, 2);
    mu << 1.0, 0.0, 0.0, 3.0;
    const auto p = make_path(mu);
    EXPECT_EQ(p.opt, (ActionSeq{0, 1}));
    EXPECT_DOUBLE_EQ(regret_of_sequence(p, {0, 1}), 0.0);
    EXPECT_DOUBLE_EQ(regret_of_sequence(p, {1, 0}), 2.0);
    EXPECT_DOUBLE_EQ(satisficing_regret_of_sequence(p, {0, 0}, {1, 1}), 1.0);
    EXPECT_THROW(regret_of_sequence(p, {0}), DimensionMismatch);
    EXPECT_DOUBLE_EQ(instant_regret(p, 1, 0), 3.0);
}

TEST(GPTwoType, OptDependsOnlyOnIdiosyncratic) {
    Rng rng(1);
    const auto p = realize(env::GPTwoType{}, 300, rng);
    ASSERT_TRUE(p.meta.idiosyncratic && p.meta.common);
    for (std::size_t t = 0; t < p.T; ++t) EXPECT_EQ(p.opt[t], argmax_row(p.meta.idiosyncratic->row(Eigen::Index(t))));
    EXPECT_LT((p.mu - (p.meta.idiosyncratic->colwise() + *p.meta.common)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(GPTwoType, UniformRegretOracle) {
    // E[mu* - mu_U] per period equals 1/sqrt(pi) for unit idiosyncratic variance.
    const EnvironmentSampler s(env::GPTwoType{}, 200);
    Rng rng(2);
    double acc = 0.0;
    const int N = 2000;
    for (int i = 0; i < N; ++i) {
        const auto p = s.realize(rng);
        for (std::size_t t = 0; t < p.T; ++t)
            acc += p.mu(Eigen::Index(t), Eigen::Index(p.opt[t])) - 0.5 * (p.mu(Eigen::Index(t), 0) + p.mu(Eigen::Index(t), 1));
    }
    EXPECT_NEAR(acc / (N * 200.0), oracle::uniform_two_arm_regret(), 0.02);
}

TEST(MarkovSwitchEnv, RewardsAreGapOnOptimalArm) {
    env::MarkovSwitch e;
    e.spec = {3, 0.2};
    e.gap = 0.5;
    Rng rng(3);
    const auto p = realize(e, 100, rng);
    for (std::size_t t = 0; t < p.T; ++t) {
        EXPECT_DOUBLE_EQ(p.mu(Eigen::Index(t), Eigen::Index(p.opt[t])), 0.5);
        EXPECT_DOUBLE_EQ(p.mu.row(Eigen::Index(t)).sum(), 0.5);
    }
}

TEST(RenewalEnv, BlockConstantEpsilonGap) {
    env::RenewalLB e;
    e.spec = {2, 8.0};
    Rng rng(4);
    const auto p = realize(e, 1000, rng);
    ASSERT_TRUE(p.meta.changepoints.has_value());
    EXPECT_NEAR(p.mu.maxCoeff(), e.spec.epsilon(), 1e-15);
    EXPECT_GE(p.mu.minCoeff(), 0.0);
}

TEST(ArticlePoolEnv, BernoulliRewards) {
    env::ArticlePool e;
    e.spec.k = 4;
    Rng rng(5);
    const auto p = realize(e, 50, rng);
    const auto model = reward_model_for(e);
    EXPECT_TRUE(std::holds_alternative<BernoulliReward>(model));
    EXPECT_DOUBLE_EQ(variance_proxy(model), 0.25);
    for (std::size_t t = 0; t < 50; ++t) {
        const double r = draw_reward(p, model, t, 0, rng);
        EXPECT_TRUE(r == 0.0 || r == 1.0);
    }
}

TEST(Validation, RejectsBadSpecs) {
    EXPECT_THROW(validate(env::GPTwoType{1}), std::invalid_argument);
    env::AR1 ar;
    ar.alpha = 1.0;
    EXPECT_THROW(validate(ar), std::invalid_argument);
    env::GPTwoType g;
    g.tau_id = -1;
    EXPECT_THROW(validate(g), std::invalid_argument);
    EXPECT_THROW(EnvironmentSampler(env::GPTwoType{}, 0), std::invalid_argument);
}

TEST(Rewards, GaussianNoiseMoments) {
    Matrix mu = Matrix::Constant(1, 2, 0.7);
    const auto p = make_path(mu);
    Rng rng(6);
    double s = 0, ss = 0;
    const int N = 100000;
    for (int i = 0; i < N; ++i) {
        const double r = draw_reward(p, GaussianNoise{4.0}, 0, 1, rng);
        s += r;
        ss += r * r;
    }
    EXPECT_NEAR(s / N, 0.7, 0.02);
    EXPECT_NEAR(ss / N - (s / N) * (s / N), 4.0, 0.06);
    EXPECT_THROW(draw_reward(p, GaussianNoise{1.0}, 1, 0, rng), std::out_of_range);
}

TEST(PathCsv, RoundTrip) {
    Rng rng(7);
    const auto p = realize(env::GPTwoType{}, 40, rng);
    std::istringstream in(path_to_csv(p));
    const auto q = path_from_csv(in);
    EXPECT_EQ(q.mu, p.mu);
    EXPECT_EQ(q.opt, p.opt);
}

TEST(PathCsv, RejectsInconsistentOpt) {
    std::istringstream in("t,mu_1,mu_2,opt\n1,0.5,0.1,2\n");
    EXPECT_THROW(path_from_csv(in), std::invalid_argument);
    std::istringstream bad("t,a,b,opt\n");
    EXPECT_THROW(path_from_csv(bad), std::invalid_argument);
}
