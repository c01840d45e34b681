#include <gtest/gtest.h>

#include <array>
#include <deque>

#include "nsbandit/policies.hpp"
#include "oracles.hpp"

using namespace nsbandit;

TEST(PolicyIds, Stable) {
    EXPECT_EQ(policy_id(policy::TSExactGP{}), "ts_exact");
    EXPECT_EQ(policy_id(policy::SWTS{}), "sw_ts_L50");
    EXPECT_EQ(policy_id(policy::SWUCB{}), "sw_ucb_L50_b2");
    EXPECT_EQ(policy_id(policy::STSDistortion{}), "sts_D0.5");
    EXPECT_EQ(policy_id(policy::STSSwitchDP{}), "sts_m5");
    EXPECT_EQ(policy_id(policy::Uniform{}), "uniform");
}

TEST(ResolvePolicy, FillsModelFromEnvironment) {
    const auto p = std::get<policy::TSExactGP>(resolve_policy(policy::TSExactGP{}, env::GPTwoType{}, 100));
    ASSERT_TRUE(p.model.has_value());
    EXPECT_DOUBLE_EQ(p.model->idio(50), std::exp(-0.5));
    EXPECT_DOUBLE_EQ(p.model->common(10), std::exp(-0.5));
    env::MarkovSwitch ms;
    EXPECT_THROW(resolve_policy(policy::TSExactGP{}, ms, 100), std::invalid_argument);
    EXPECT_THROW(resolve_policy(policy::TSKalman{}, env::GPTwoType{}, 100), std::invalid_argument);
    const auto k = std::get<policy::TSKalman>(resolve_policy(policy::TSKalman{}, env::AR1{}, 100));
    EXPECT_EQ(*k.alpha, 0.9);
    EXPECT_THROW(resolve_policy(policy::SWTS{0}, env::GPTwoType{}, 10), std::invalid_argument);
}

TEST(PolicyProtocol, PeriodsMustBeSequential) {
    UniformPolicy p(2);
    Rng rng(1);
    EXPECT_THROW(p.observe(0, 0, 0.0), std::logic_error);
    const auto a = p.act(0, rng);
    EXPECT_THROW(p.act(1, rng), std::logic_error);
    EXPECT_THROW(p.observe(0, 7, 0.0), std::out_of_range);
    p.observe(0, a, 1.0);
    EXPECT_EQ(p.period(), 1u);
}

TEST(SlidingWindow, BeliefAndIndexFormulas) {
    std::deque<WindowObs> w{{0, 1.0}, {1, 4.0}, {0, 2.0}};
    const auto b = sw_ts_belief(w, 0);
    EXPECT_DOUBLE_EQ(b.mean, 3.0 / 3.0);
    EXPECT_DOUBLE_EQ(b.variance, 1.0 / 3.0);
    const auto e = sw_ts_belief(w, 2);
    EXPECT_DOUBLE_EQ(e.mean, 0.0);
    EXPECT_DOUBLE_EQ(e.variance, 1.0);
    EXPECT_DOUBLE_EQ(sw_ucb_index(w, 0, 2.0), 1.5 + 2.0 / std::sqrt(2.0));
    EXPECT_TRUE(std::isinf(sw_ucb_index(w, 2, 2.0)));
}

TEST(SlidingWindow, WindowDropsOldObservations) {
    SWUCBPolicy p(2, 2, 0.0);
    Rng rng(2);
    // untried arms first, lowest index on ties
    EXPECT_EQ(p.act(0, rng), 0u);
    p.observe(0, 0, 10.0);
    EXPECT_EQ(p.act(1, rng), 1u);
    p.observe(1, 1, 0.0);
    EXPECT_EQ(p.act(2, rng), 0u);
    p.observe(2, 1, 1.0);  // window now holds (1,0), (1,1): arm 0 forgotten
    EXPECT_EQ(p.act(3, rng), 0u);
}

TEST(TSKalman, MatchesBatchConditioning) {
    Rng rng(3);
    const std::size_t k = 3;
    const double alpha = 0.8, sxi = 0.3, sw = 0.6;
    TSKalmanPolicy pol(k, alpha, sxi, sw);
    std::vector<std::size_t> arms;
    std::vector<double> y;
    for (std::size_t t = 0; t < 60; ++t) {
        const auto pred = pol.predictive();
        const auto batch = oracle::ar1_batch(k, alpha, sxi, sw, arms, y);
        for (std::size_t a = 0; a < k; ++a) {
            EXPECT_NEAR(pred[a].mean, batch.mean[Eigen::Index(a)], 1e-9);
            EXPECT_NEAR(pred[a].variance, batch.cov(Eigen::Index(a), Eigen::Index(a)), 1e-9);
        }
        const auto a = pol.act(t, rng);
        const double r = std_normal(rng);
        pol.observe(t, a, r);
        arms.push_back(a);
        y.push_back(r);
    }
}

TEST(TSExactGP, ProbabilityMatching) {
    // Empirical choice frequency equals P(arm is argmax) under the posterior.
    GaussianBanditModel m{2, StationaryKernel::se(1.0, 10.0), StationaryKernel::se(1.0, 20.0), 1.0};
    TSExactGPPolicy pol(m, 10);
    Rng rng(4);
    const std::array<std::size_t, 4> arms{0, 1, 0, 0};
    const std::array<double, 4> ys{0.8, -0.3, 1.1, 0.4};
    for (std::size_t t = 0; t < 4; ++t) {
        (void)pol.act(t, rng);
        pol.observe(t, arms[t], ys[t]);
    }
    const auto g = pol.posterior();
    const double md = g.mean[0] - g.mean[1];
    const double vd = g.cov(0, 0) + g.cov(1, 1) - 2 * g.cov(0, 1);
    const double p0 = 0.5 * std::erfc(-md / std::sqrt(2.0 * vd));

    const int N = 100000;
    int zero = 0;
    Rng draw(5);
    for (int i = 0; i < N; ++i) zero += argmax_row(sample_gaussian(g, draw)) == 0;
    EXPECT_LT(std::abs(double(zero) / N - p0), 0.02);
}

TEST(Factory, BuildsEveryPolicy) {
    const env::GPTwoType e;
    std::vector<PolicySpec> specs{policy::TSExactGP{}, policy::SWTS{}, policy::SWUCB{}, policy::Uniform{},
                                  policy::STSDistortion{}, policy::STSSwitchDP{}};
    Rng rng(6);
    const EnvironmentSampler s(e, 30);
    const auto path = s.realize(rng);
    for (const auto& spec : specs) {
        PolicyFactory f(spec, e, 30);
        auto p = f.make();
        for (std::size_t t = 0; t < 30; ++t) {
            const auto a = p->act(t, rng);
            ASSERT_LT(a, 2u);
            p->observe(t, a, draw_reward(path, GaussianNoise{1.0}, t, a, rng));
        }
    }
    env::FixedPlusGP fx;
    PolicyFactory ff(policy::STSFixedMean{}, fx, 10);
    EXPECT_EQ(ff.id(), "sts_fixed");
    EXPECT_NE(ff.make(), nullptr);
}

TEST(STSFixedMean, TargetsTimeInvariantComponent) {
    // Posterior over the fixed component matches the direct oracle.
    const double v = 2.0, tau = 5.0, nv = 0.5;
    GaussianBanditModel m{2, StationaryKernel::zero(), StationaryKernel::constant(v) + StationaryKernel::se(1.0, tau), nv};
    STSFixedMeanPolicy pol(2, v, tau, nv, 20);
    Rng rng(7);
    std::vector<std::size_t> arms;
    std::vector<double> y;
    for (std::size_t t = 0; t < 15; ++t) {
        const auto a = pol.act(t, rng);
        const double r = 1.5 * (a == 1) + std_normal(rng);
        pol.observe(t, a, r);
        arms.push_back(a);
        y.push_back(r);
    }
    const auto fast = pol.posterior();
    const auto slow = oracle::direct_posterior(m, arms, y, StationaryKernel::constant(v));
    EXPECT_LT((fast.mean - slow.mean).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LT((fast.cov - slow.cov).cwiseAbs().maxCoeff(), 1e-8);
}
