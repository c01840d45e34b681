#include <gtest/gtest.h>

#include <sstream>

#include "nsbandit/harness.hpp"

using namespace nsbandit;

namespace {

// Plays the true optimal arm. Only possible with access to the path.
class OraclePolicy : public Policy {
public:
    explicit OraclePolicy(const LatentPath& p) : Policy(p.k), opt_(p.opt) {}

protected:
    std::size_t do_act(std::size_t t, Rng&) override { return opt_[t]; }
    void do_observe(std::size_t, std::size_t, double) override {}

private:
    ActionSeq opt_;
};

// Fails numerically on every replication whose path starts with arm 1.
class FlakyPolicy : public Policy {
public:
    explicit FlakyPolicy(const LatentPath& p) : Policy(p.k), bad_(p.opt[0] == 1) {}

protected:
    std::size_t do_act(std::size_t, Rng&) override {
        if (bad_) throw NumericFailure("flaky");
        return 0;
    }
    void do_observe(std::size_t, std::size_t, double) override {}

private:
    bool bad_;
};

ExperimentConfig small_gp(std::size_t T, std::size_t S) {
    ExperimentConfig c;
    env::GPTwoType g;
    g.tau_cm = 10;
    g.tau_id = 10;
    c.env = g;
    c.policies = {policy::TSExactGP{}, policy::SWTS{20}, policy::SWUCB{20, 2.0}, policy::Uniform{}};
    c.T = T;
    c.S = S;
    c.master_seed = 99;
    return c;
}

}  // namespace

TEST(Harness, RequiresSeedAndPolicies) {
    auto c = small_gp(10, 2);
    c.master_seed.reset();
    EXPECT_THROW(run_experiment(c), ConfigError);
    auto d = small_gp(10, 2);
    d.policies.clear();
    EXPECT_THROW(run_experiment(d), ConfigError);
}

TEST(Harness, ThreadCountDoesNotChangeResults) {
    const auto c = small_gp(60, 19);
    RunOptions one, four;
    one.threads = 1;
    four.threads = 4;
    const auto a = run_experiment(c, one);
    const auto b = run_experiment(c, four);
    EXPECT_EQ(regret_csv(a), regret_csv(b));
    for (std::size_t p = 0; p < a.estimates.size(); ++p) EXPECT_EQ(a.estimates[p].mean, b.estimates[p].mean);
}

TEST(Harness, OraclePolicyHasZeroRegret) {
    auto c = small_gp(80, 10);
    c.policies = {policy::Uniform{}};
    RunOptions o;
    o.extra_policies.push_back({"oracle", [](const LatentPath& p) { return std::make_unique<OraclePolicy>(p); }});
    const auto r = run_experiment(c, o);
    ASSERT_EQ(r.estimates.size(), 2u);
    EXPECT_EQ(r.estimates[1].policy, "oracle");
    EXPECT_EQ(r.estimates[1].mean, 0.0);
    EXPECT_EQ(r.estimates[1].stderr_, 0.0);
    EXPECT_GT(r.estimates[0].mean, 0.0);
}

TEST(Harness, AddingAPolicyLeavesOthersUnchanged) {
    // per-policy streams: the uniform estimate is the same with or without ts_exact alongside
    auto c = small_gp(50, 8);
    c.policies = {policy::Uniform{}};
    const auto alone = run_experiment(c);
    c.policies = {policy::TSExactGP{}, policy::Uniform{}};
    const auto both = run_experiment(c);
    EXPECT_EQ(alone.estimates[0].mean, both.estimates[1].mean);
}

TEST(Harness, ExcludesFailedReplicationsAndEnforcesCap) {
    auto c = small_gp(20, 40);
    c.policies = {policy::Uniform{}};
    RunOptions o;
    o.extra_policies.push_back({"flaky", [](const LatentPath& p) { return std::make_unique<FlakyPolicy>(p); }});
    EXPECT_THROW(run_experiment(c, o), NumericFailure);
    o.max_excluded_fraction = 1.0;
    const auto r = run_experiment(c, o);
    EXPECT_FALSE(r.excluded.empty());
    EXPECT_LT(r.excluded.size(), 40u);
    EXPECT_EQ(r.estimates[0].n, 40u - r.excluded.size());
}

TEST(Harness, TraceAveragesToMeanRegret) {
    auto c = small_gp(40, 9);
    c.trace = true;
    const auto r = run_experiment(c);
    for (const auto& e : r.estimates) {
        ASSERT_EQ(e.trace.size(), 40u);
        double s = 0;
        for (double v : e.trace) s += v;
        EXPECT_NEAR(s / 40.0, e.mean, 1e-12);
    }
    const auto csv = trace_csv(r);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,policy,instantaneous_regret");
    EXPECT_NE(csv.find("\n1,ts_exact,"), std::string::npos);
}

TEST(Harness, CommonRandomNumbersAcrossCommonTimescale) {
    // The optimal-arm sequence depends only on the idiosyncratic draws, which are
    // shared across tau_cm for a fixed seed.
    auto c = small_gp(100, 4);
    c.policies = {policy::Uniform{}};
    const auto a = with_value(c, "env.tau_cm", 10);
    const auto b = with_value(c, "env.tau_cm", 100);
    for (std::size_t s = 0; s < 4; ++s) {
        Rng ra(derive_seed(99, s)), rb(derive_seed(99, s));
        const auto pa = realize(a.env, 100, ra);
        const auto pb = realize(b.env, 100, rb);
        EXPECT_EQ(pa.opt, pb.opt);
        EXPECT_EQ(*pa.meta.idiosyncratic, *pb.meta.idiosyncratic);
    }
    // uniform regret is a function of opt and the idiosyncratic gap only
    EXPECT_NEAR(run_experiment(a).estimates[0].mean, run_experiment(b).estimates[0].mean, 1e-12);
}

TEST(Sweep, SingleValueMatchesRun) {
    const auto c = small_gp(40, 8);
    const auto sw = sweep(c, "env.tau_id", {10});
    const auto r = run_experiment(c);
    ASSERT_EQ(sw.rows.size(), r.estimates.size());
    for (std::size_t i = 0; i < sw.rows.size(); ++i) EXPECT_EQ(sw.rows[i].estimate.mean, r.estimates[i].mean);
    const auto csv = sweep_csv(sw);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "axis,value,policy,mean_regret,stderr,n");
    EXPECT_THROW(sweep(c, "env.nope", {1}), ConfigError);
    EXPECT_THROW(sweep(c, "env.tau_id", {}), ConfigError);
}

TEST(TauEff, CensoredWhenNoSwitches) {
    env::MarkovSwitch e;
    e.spec = {3, 0.0};
    Rng rng(1);
    const auto est = estimate_tau_eff(e, 50, 5, rng);
    EXPECT_TRUE(est.censored);
    EXPECT_EQ(est.value, 50.0);
    EXPECT_EQ(est.switches, 0u);
}

TEST(TauEff, MarkovSwitchIsInverseDelta) {
    env::MarkovSwitch e;
    e.spec = {4, 0.1};
    Rng rng(2);
    const auto est = estimate_tau_eff(e, 20000, 5, rng);
    EXPECT_FALSE(est.censored);
    EXPECT_NEAR(est.value, 10.0, 0.3);
    EXPECT_THROW(estimate_tau_eff(e, 1, 5, rng), std::invalid_argument);
}

TEST(Figures, SchemasAtSmallScale) {
    auto c = small_gp(30, 2);
    c.policies = {policy::SWTS{10}, policy::Uniform{}};
    auto header = [](const std::string& s) { return s.substr(0, s.find('\n')); };
    const auto left = emit_figure_data(c, "fig2_left");
    EXPECT_EQ(header(left.csv), "tau_id,series,value,stderr,n");
    EXPECT_EQ(left.meta["figure"], "fig2_left");
    const auto c5 = emit_figure_data(c, "figC5");
    EXPECT_NE(c5.csv.find("\n50,bound,"), std::string::npos);
    EXPECT_EQ(header(emit_figure_data(c, "fig2_right").csv), "tau_cm,series,value,stderr,n");
    const auto c1 = emit_figure_data(c, "figC1");
    EXPECT_EQ(header(c1.csv), "t,arm,theta_cm,theta_id,mu,is_opt");
    EXPECT_EQ(std::count(c1.csv.begin(), c1.csv.end(), '\n'), 1 + 30 * 2);
    EXPECT_EQ(header(emit_figure_data(c, "figC2").csv), "tau_id,tau_eff_hat,tau_eff_rice,censored");
    EXPECT_EQ(header(emit_figure_data(c, "figC4").csv), "t,policy,instantaneous_regret");
    EXPECT_THROW(emit_figure_data(c, "fig99"), ConfigError);
    auto m = c;
    m.env = env::MarkovSwitch{};
    EXPECT_THROW(emit_figure_data(m, "fig2_left"), ConfigError);
}

TEST(Figures, TwoArmBoundUsesRiceHorizon) {
    const double te = rice_effective_horizon(50);
    EXPECT_DOUBLE_EQ(two_arm_ts_bound(50, 1, 1000), std::sqrt(4 * ((1 + std::log(te)) / te + std::log(2.0) / 1000)));
}
