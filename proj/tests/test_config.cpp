#include <gtest/gtest.h>

#include <fstream>

#include "nsbandit/config.hpp"

using namespace nsbandit;

namespace {

Json two_arm_json() {
    return Json::parse(R"({
        "env": {"type": "gp_two_type", "tau_cm": 10, "tau_id": 50},
        "policies": [{"type": "ts_exact"}, {"type": "sw_ts", "L": 50}, {"type": "sw_ucb", "L": 50, "beta": 2},
                     {"type": "uniform"}],
        "T": 200, "S": 20, "seed": 11
    })");
}

}  // namespace

TEST(Config, ParsesAndDefaults) {
    const auto c = config_from_json(two_arm_json());
    EXPECT_EQ(c.T, 200u);
    EXPECT_EQ(c.S, 20u);
    EXPECT_EQ(*c.master_seed, 11u);
    EXPECT_EQ(c.policies.size(), 4u);
    const auto& g = std::get<env::GPTwoType>(c.env);
    EXPECT_EQ(g.tau_id, 50.0);
    EXPECT_EQ(g.k, 2u);
    const auto d = config_from_json(Json::object());
    EXPECT_EQ(d.T, 1000u);
    EXPECT_FALSE(d.master_seed.has_value());
}

TEST(Config, ResolvedRoundTripIsIdempotent) {
    const auto r = resolve_config(config_from_json(two_arm_json()));
    const Json once = config_to_json(r);
    const Json twice = config_to_json(resolve_config(config_from_json(once)));
    EXPECT_EQ(once, twice);
    ASSERT_TRUE(once["policies"][0].contains("model"));
    EXPECT_EQ(once["policies"][0]["model"]["idiosyncratic"][0]["timescale"], 50.0);
}

TEST(Config, EveryEnvironmentRoundTrips) {
    const char* envs[] = {
        R"({"type":"ar1","k":3,"alpha":0.8,"sigma_xi_sq":0.5,"sigma_w_sq":1})",
        R"({"type":"markov_switch","k":10,"delta":0.1,"gap":1,"noise_var":1})",
        R"({"type":"renewal_lb","k":2,"tau_eff":4,"noise_var":1})",
        R"({"type":"article_pool","k":5,"tau":"inf","ctr_prior":{"kind":"point","value":0.1}})",
        R"({"type":"article_pool","k":5,"tau":50,"ctr_prior":{"kind":"beta","a":2,"b":3}})",
        R"({"type":"fixed_plus_gp","k":2,"v_sq":1,"tau":20,"noise_var":1})",
    };
    for (const char* s : envs) {
        const auto e = env_from_json(Json::parse(s));
        EXPECT_EQ(env_to_json(env_from_json(env_to_json(e))), env_to_json(e)) << s;
    }
    const auto ap = std::get<env::ArticlePool>(env_from_json(Json::parse(envs[3])));
    EXPECT_TRUE(std::isinf(ap.spec.tau));
}

TEST(Config, EveryPolicyRoundTrips) {
    const char* ps[] = {
        R"({"type":"ts_kalman","alpha":0.9,"sigma_xi_sq":1,"sigma_w_sq":1})",
        R"({"type":"sts_distortion","D":0.2})",
        R"({"type":"sts_switch_dp","m":3,"horizon":40})",
        R"({"type":"sts_fixed","v_sq":1,"tau":10,"noise_var":0.5})",
        R"({"type":"sw_ucb","L":10,"beta":0.5})",
    };
    for (const char* s : ps) {
        const auto p = policy_from_json(Json::parse(s), "p");
        EXPECT_EQ(policy_to_json(policy_from_json(policy_to_json(p), "p")), policy_to_json(p)) << s;
    }
}

TEST(Config, RejectsUnknownKeysAndBadTypes) {
    auto j = two_arm_json();
    j["bogus"] = 1;
    EXPECT_THROW(config_from_json(j), ConfigError);
    j = two_arm_json();
    j["env"]["tau_idd"] = 3;
    EXPECT_THROW(config_from_json(j), ConfigError);
    j = two_arm_json();
    j["T"] = "many";
    EXPECT_THROW(config_from_json(j), ConfigError);
    j = two_arm_json();
    j["T"] = 10.5;
    EXPECT_THROW(config_from_json(j), ConfigError);
    j = two_arm_json();
    j["seed"] = -3;
    EXPECT_THROW(config_from_json(j), ConfigError);
    j = two_arm_json();
    j["env"]["type"] = "nope";
    EXPECT_THROW(config_from_json(j), ConfigError);
    j = two_arm_json();
    j["policies"].push_back({{"type", "sw_ts"}, {"window", 3}});
    EXPECT_THROW(config_from_json(j), ConfigError);
    j = two_arm_json();
    j["env"]["tau_id"] = -1;
    EXPECT_THROW(config_from_json(j), ConfigError);
    j = two_arm_json();
    j["policies"] = Json::object();
    EXPECT_THROW(config_from_json(j), ConfigError);
}

TEST(Config, ResolveRejectsMismatchedPolicy) {
    auto j = two_arm_json();
    j["policies"] = Json::parse(R"([{"type":"ts_kalman"}])");
    const auto c = config_from_json(j);
    EXPECT_THROW(resolve_config(c), ConfigError);
}

TEST(WithValue, SetsRawAndResolvedFields) {
    const auto base = config_from_json(two_arm_json());
    const auto c = with_value(base, "env.tau_id", 25);
    EXPECT_EQ(std::get<env::GPTwoType>(c.env).tau_id, 25.0);
    EXPECT_EQ(std::get<env::GPTwoType>(base.env).tau_id, 50.0);
    const auto l = with_value(base, "policies.1.L", 7);
    EXPECT_EQ(std::get<policy::SWTS>(l.policies[1]).L, 7u);
    EXPECT_EQ(with_value(base, "S", 3).S, 3u);

    auto ar = Json::parse(R"({"env":{"type":"ar1"},"policies":[{"type":"ts_kalman"}],"seed":1})");
    const auto k = with_value(config_from_json(ar), "policies.0.alpha", 0.5);
    EXPECT_EQ(*std::get<policy::TSKalman>(k.policies[0]).alpha, 0.5);
}

TEST(WithValue, RejectsUnknownOrNonNumericAxes) {
    const auto base = config_from_json(two_arm_json());
    EXPECT_THROW(with_value(base, "env.tau_xx", 1), ConfigError);
    EXPECT_THROW(with_value(base, "policies.9.L", 1), ConfigError);
    EXPECT_THROW(with_value(base, "env.type", 1), ConfigError);
    EXPECT_THROW(with_value(base, "policies.1.L", 2.5), ConfigError);
    EXPECT_THROW(with_value(base, "", 1), ConfigError);
}

TEST(Config, ShippedConfigsParse) {
    for (const char* name : {"two_arm.json", "markov.json", "ar1.json"}) {
        std::ifstream in(std::string(NSBANDIT_SOURCE_DIR) + "/configs/" + name);
        ASSERT_TRUE(in) << name;
        const auto c = resolve_config(config_from_json(Json::parse(in)));
        EXPECT_TRUE(c.master_seed.has_value()) << name;
        EXPECT_FALSE(c.policies.empty()) << name;
    }
}
