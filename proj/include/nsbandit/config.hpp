#pragma once

// JSON experiment configuration. Environments and policies are tagged by a
// "type" key; every numeric field is addressable by a dotted path such as
// "env.tau_id" or "policies.1.L" for sweeps.

#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "nsbandit/environment.hpp"
#include "nsbandit/policies.hpp"

namespace nsbandit {

using Json = nlohmann::json;

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct ExperimentConfig {
    EnvSpec env = env::GPTwoType{};
    std::vector<PolicySpec> policies;
    std::size_t T = 1000;
    std::size_t S = 1000;
    std::optional<std::uint64_t> master_seed;
    bool trace = false;

    void validate() const {
        if (T < 1) throw ConfigError("config: T must be >= 1");
        if (S < 1) throw ConfigError("config: S must be >= 1");
        nsbandit::validate(env);
    }
};

namespace detail {

inline void check_keys(const Json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& [key, _] : j.items())
        if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
}

template <class T>
void read(const Json& j, const char* key, T& out, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        if constexpr (std::is_same_v<T, std::size_t>) {
            const auto& v = j.at(key);
            if (v.is_number_float()) {
                const double d = v.get<double>();
                if (d < 0.0 || d != std::floor(d)) throw ConfigError(where + "." + key + ": expected a non-negative integer");
                out = static_cast<std::size_t>(d);
            } else if (v.is_number_integer()) {
                if (v.get<long long>() < 0) throw ConfigError(where + "." + key + ": expected a non-negative integer");
                out = v.get<std::size_t>();
            } else {
                throw ConfigError(where + "." + key + ": expected a non-negative integer");
            }
        } else if constexpr (std::is_same_v<T, double>) {
            const auto& v = j.at(key);
            if (v.is_string()) {
                const auto s = v.get<std::string>();
                if (s == "inf" || s == "Infinity") out = std::numeric_limits<double>::infinity();
                else throw ConfigError(where + "." + key + ": expected a number");
            } else {
                if (!v.is_number()) throw ConfigError(where + "." + key + ": expected a number");
                out = v.get<double>();
            }
        } else {
            out = j.at(key).get<T>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(where + "." + key + ": " + e.what());
    }
}

template <class T>
void read_opt(const Json& j, const char* key, std::optional<T>& out, const std::string& where) {
    if (!j.contains(key) || j.at(key).is_null()) return;
    T v{};
    read(j, key, v, where);
    out = v;
}

inline Json number(double v) {
    if (std::isinf(v)) {
        if (v < 0) throw ConfigError("negative infinity is not representable");
        return "inf";
    }
    return v;
}

}  // namespace detail

// ---- kernels and models ----

inline Json kernel_to_json(const StationaryKernel& k) {
    Json arr = Json::array();
    for (const auto& t : k.terms) {
        switch (t.kind) {
            case KernelKind::squared_exponential:
                arr.push_back({{"kind", "se"}, {"variance", t.variance}, {"timescale", t.param}});
                break;
            case KernelKind::exponential:
                arr.push_back({{"kind", "exponential"}, {"variance", t.variance}, {"alpha", t.param}});
                break;
            case KernelKind::constant:
                arr.push_back({{"kind", "constant"}, {"variance", t.variance}});
                break;
        }
    }
    return arr;
}

inline StationaryKernel kernel_from_json(const Json& j, const std::string& where) {
    if (!j.is_array()) throw ConfigError(where + ": expected an array of kernel terms");
    StationaryKernel k;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const auto& t = j[i];
        const std::string w = where + "." + std::to_string(i);
        if (!t.is_object() || !t.contains("kind")) throw ConfigError(w + ": kernel term needs 'kind'");
        const auto kind = t.at("kind").get<std::string>();
        KernelTerm term;
        if (kind == "se") {
            detail::check_keys(t, {"kind", "variance", "timescale"}, w);
            term.kind = KernelKind::squared_exponential;
            detail::read(t, "timescale", term.param, w);
            if (!(term.param > 0.0)) throw ConfigError(w + ".timescale must be > 0");
        } else if (kind == "exponential") {
            detail::check_keys(t, {"kind", "variance", "alpha"}, w);
            term.kind = KernelKind::exponential;
            detail::read(t, "alpha", term.param, w);
            if (!(std::abs(term.param) < 1.0)) throw ConfigError(w + ".alpha must satisfy |alpha| < 1");
        } else if (kind == "constant") {
            detail::check_keys(t, {"kind", "variance"}, w);
            term.kind = KernelKind::constant;
        } else {
            throw ConfigError(w + ": unknown kernel kind '" + kind + "'");
        }
        detail::read(t, "variance", term.variance, w);
        if (!(term.variance >= 0.0)) throw ConfigError(w + ".variance must be >= 0");
        k.terms.push_back(term);
    }
    return k;
}

inline Json model_to_json(const GaussianBanditModel& m) {
    return {{"k", m.k}, {"common", kernel_to_json(m.common)}, {"idiosyncratic", kernel_to_json(m.idio)},
            {"noise_var", m.noise_var}};
}

inline GaussianBanditModel model_from_json(const Json& j, const std::string& where) {
    detail::check_keys(j, {"k", "common", "idiosyncratic", "noise_var"}, where);
    GaussianBanditModel m;
    detail::read(j, "k", m.k, where);
    if (j.contains("common")) m.common = kernel_from_json(j.at("common"), where + ".common");
    if (!j.contains("idiosyncratic")) throw ConfigError(where + ": 'idiosyncratic' kernel is required");
    m.idio = kernel_from_json(j.at("idiosyncratic"), where + ".idiosyncratic");
    detail::read(j, "noise_var", m.noise_var, where);
    if (!(m.noise_var > 0.0)) throw ConfigError(where + ".noise_var must be > 0");
    return m;
}

// ---- environments ----

inline Json env_to_json(const EnvSpec& spec) {
    return std::visit(
        [](const auto& e) -> Json {
            using E = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<E, env::GPTwoType>)
                return {{"type", "gp_two_type"}, {"k", e.k},           {"tau_cm", e.tau_cm}, {"tau_id", e.tau_id},
                        {"noise_var", e.noise_var}, {"cm_var", e.cm_var}, {"id_var", e.id_var}};
            else if constexpr (std::is_same_v<E, env::AR1>)
                return {{"type", "ar1"},
                        {"k", e.k},
                        {"alpha", e.alpha},
                        {"sigma_xi_sq", e.sigma_xi_sq},
                        {"sigma_w_sq", e.sigma_w_sq}};
            else if constexpr (std::is_same_v<E, env::MarkovSwitch>)
                return {{"type", "markov_switch"}, {"k", e.spec.k}, {"delta", e.spec.delta}, {"gap", e.gap},
                        {"noise_var", e.noise_var}};
            else if constexpr (std::is_same_v<E, env::RenewalLB>)
                return {{"type", "renewal_lb"}, {"k", e.spec.k}, {"tau_eff", e.spec.tau_eff}, {"noise_var", e.noise_var}};
            else if constexpr (std::is_same_v<E, env::ArticlePool>) {
                Json prior = e.spec.ctr_prior.kind == CtrPrior::Kind::beta
                                 ? Json{{"kind", "beta"}, {"a", e.spec.ctr_prior.a}, {"b", e.spec.ctr_prior.b}}
                                 : Json{{"kind", "point"}, {"value", e.spec.ctr_prior.a}};
                return {{"type", "article_pool"}, {"k", e.spec.k}, {"tau", detail::number(e.spec.tau)}, {"ctr_prior", prior}};
            } else
                return {{"type", "fixed_plus_gp"}, {"k", e.k}, {"v_sq", e.v_sq}, {"tau", e.tau}, {"noise_var", e.noise_var}};
        },
        spec);
}

inline EnvSpec env_from_json(const Json& j, const std::string& where = "env") {
    if (!j.is_object() || !j.contains("type")) throw ConfigError(where + ": needs a 'type'");
    const auto type = j.at("type").get<std::string>();
    EnvSpec out;
    if (type == "gp_two_type") {
        detail::check_keys(j, {"type", "k", "tau_cm", "tau_id", "noise_var", "cm_var", "id_var"}, where);
        env::GPTwoType e;
        detail::read(j, "k", e.k, where);
        detail::read(j, "tau_cm", e.tau_cm, where);
        detail::read(j, "tau_id", e.tau_id, where);
        detail::read(j, "noise_var", e.noise_var, where);
        detail::read(j, "cm_var", e.cm_var, where);
        detail::read(j, "id_var", e.id_var, where);
        out = e;
    } else if (type == "ar1") {
        detail::check_keys(j, {"type", "k", "alpha", "sigma_xi_sq", "sigma_w_sq"}, where);
        env::AR1 e;
        detail::read(j, "k", e.k, where);
        detail::read(j, "alpha", e.alpha, where);
        detail::read(j, "sigma_xi_sq", e.sigma_xi_sq, where);
        detail::read(j, "sigma_w_sq", e.sigma_w_sq, where);
        out = e;
    } else if (type == "markov_switch") {
        detail::check_keys(j, {"type", "k", "delta", "gap", "noise_var"}, where);
        env::MarkovSwitch e;
        detail::read(j, "k", e.spec.k, where);
        detail::read(j, "delta", e.spec.delta, where);
        detail::read(j, "gap", e.gap, where);
        detail::read(j, "noise_var", e.noise_var, where);
        out = e;
    } else if (type == "renewal_lb") {
        detail::check_keys(j, {"type", "k", "tau_eff", "noise_var"}, where);
        env::RenewalLB e;
        detail::read(j, "k", e.spec.k, where);
        detail::read(j, "tau_eff", e.spec.tau_eff, where);
        detail::read(j, "noise_var", e.noise_var, where);
        out = e;
    } else if (type == "article_pool") {
        detail::check_keys(j, {"type", "k", "tau", "ctr_prior"}, where);
        env::ArticlePool e;
        detail::read(j, "k", e.spec.k, where);
        detail::read(j, "tau", e.spec.tau, where);
        if (j.contains("ctr_prior")) {
            const auto& p = j.at("ctr_prior");
            const std::string w = where + ".ctr_prior";
            if (!p.is_object() || !p.contains("kind")) throw ConfigError(w + ": needs 'kind'");
            const auto kind = p.at("kind").get<std::string>();
            if (kind == "beta") {
                detail::check_keys(p, {"kind", "a", "b"}, w);
                e.spec.ctr_prior = CtrPrior::uniform();
                detail::read(p, "a", e.spec.ctr_prior.a, w);
                detail::read(p, "b", e.spec.ctr_prior.b, w);
            } else if (kind == "point") {
                detail::check_keys(p, {"kind", "value"}, w);
                double v = 0.5;
                detail::read(p, "value", v, w);
                e.spec.ctr_prior = CtrPrior::point(v);
            } else {
                throw ConfigError(w + ": unknown prior kind '" + kind + "'");
            }
        }
        out = e;
    } else if (type == "fixed_plus_gp") {
        detail::check_keys(j, {"type", "k", "v_sq", "tau", "noise_var"}, where);
        env::FixedPlusGP e;
        detail::read(j, "k", e.k, where);
        detail::read(j, "v_sq", e.v_sq, where);
        detail::read(j, "tau", e.tau, where);
        detail::read(j, "noise_var", e.noise_var, where);
        out = e;
    } else {
        throw ConfigError(where + ": unknown environment type '" + type + "'");
    }
    try {
        validate(out);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(where + ": " + e.what());
    }
    return out;
}

// ---- policies ----

inline Json policy_to_json(const PolicySpec& spec) {
    return std::visit(
        [](const auto& p) -> Json {
            using P = std::decay_t<decltype(p)>;
            Json j;
            auto put = [&](const char* key, const auto& opt) {
                if (opt) j[key] = *opt;
            };
            if constexpr (std::is_same_v<P, policy::TSExactGP>) {
                j["type"] = "ts_exact";
                if (p.model) j["model"] = model_to_json(*p.model);
            } else if constexpr (std::is_same_v<P, policy::TSKalman>) {
                j["type"] = "ts_kalman";
                put("alpha", p.alpha);
                put("sigma_xi_sq", p.sigma_xi_sq);
                put("sigma_w_sq", p.sigma_w_sq);
            } else if constexpr (std::is_same_v<P, policy::SWTS>) {
                j = {{"type", "sw_ts"}, {"L", p.L}};
            } else if constexpr (std::is_same_v<P, policy::SWUCB>) {
                j = {{"type", "sw_ucb"}, {"L", p.L}, {"beta", p.beta}};
            } else if constexpr (std::is_same_v<P, policy::Uniform>) {
                j["type"] = "uniform";
            } else if constexpr (std::is_same_v<P, policy::STSDistortion>) {
                j = {{"type", "sts_distortion"}, {"D", p.D}};
                if (p.model) j["model"] = model_to_json(*p.model);
            } else if constexpr (std::is_same_v<P, policy::STSSwitchDP>) {
                j = {{"type", "sts_switch_dp"}, {"m", p.m}};
                put("horizon", p.horizon);
                if (p.model) j["model"] = model_to_json(*p.model);
            } else {
                j["type"] = "sts_fixed";
                put("v_sq", p.v_sq);
                put("tau", p.tau);
                put("noise_var", p.noise_var);
            }
            return j;
        },
        spec);
}

inline PolicySpec policy_from_json(const Json& j, const std::string& where) {
    if (!j.is_object() || !j.contains("type")) throw ConfigError(where + ": needs a 'type'");
    const auto type = j.at("type").get<std::string>();
    auto model = [&](std::optional<GaussianBanditModel>& m) {
        if (j.contains("model")) m = model_from_json(j.at("model"), where + ".model");
    };
    if (type == "ts_exact") {
        detail::check_keys(j, {"type", "model"}, where);
        policy::TSExactGP p;
        model(p.model);
        return p;
    }
    if (type == "ts_kalman") {
        detail::check_keys(j, {"type", "alpha", "sigma_xi_sq", "sigma_w_sq"}, where);
        policy::TSKalman p;
        detail::read_opt(j, "alpha", p.alpha, where);
        detail::read_opt(j, "sigma_xi_sq", p.sigma_xi_sq, where);
        detail::read_opt(j, "sigma_w_sq", p.sigma_w_sq, where);
        return p;
    }
    if (type == "sw_ts") {
        detail::check_keys(j, {"type", "L"}, where);
        policy::SWTS p;
        detail::read(j, "L", p.L, where);
        return p;
    }
    if (type == "sw_ucb") {
        detail::check_keys(j, {"type", "L", "beta"}, where);
        policy::SWUCB p;
        detail::read(j, "L", p.L, where);
        detail::read(j, "beta", p.beta, where);
        return p;
    }
    if (type == "uniform") {
        detail::check_keys(j, {"type"}, where);
        return policy::Uniform{};
    }
    if (type == "sts_distortion") {
        detail::check_keys(j, {"type", "D", "model"}, where);
        policy::STSDistortion p;
        detail::read(j, "D", p.D, where);
        model(p.model);
        return p;
    }
    if (type == "sts_switch_dp") {
        detail::check_keys(j, {"type", "m", "horizon", "model"}, where);
        policy::STSSwitchDP p;
        detail::read(j, "m", p.m, where);
        detail::read_opt(j, "horizon", p.horizon, where);
        model(p.model);
        return p;
    }
    if (type == "sts_fixed") {
        detail::check_keys(j, {"type", "v_sq", "tau", "noise_var"}, where);
        policy::STSFixedMean p;
        detail::read_opt(j, "v_sq", p.v_sq, where);
        detail::read_opt(j, "tau", p.tau, where);
        detail::read_opt(j, "noise_var", p.noise_var, where);
        return p;
    }
    throw ConfigError(where + ": unknown policy type '" + type + "'");
}

// ---- experiment ----

inline Json config_to_json(const ExperimentConfig& c) {
    Json j;
    j["env"] = env_to_json(c.env);
    j["policies"] = Json::array();
    for (const auto& p : c.policies) j["policies"].push_back(policy_to_json(p));
    j["T"] = c.T;
    j["S"] = c.S;
    if (c.master_seed) j["seed"] = *c.master_seed;
    j["trace"] = c.trace;
    return j;
}

inline ExperimentConfig config_from_json(const Json& j) {
    detail::check_keys(j, {"env", "policies", "T", "S", "seed", "trace"}, "config");
    ExperimentConfig c;
    if (j.contains("env")) c.env = env_from_json(j.at("env"));
    if (j.contains("policies")) {
        const auto& arr = j.at("policies");
        if (!arr.is_array()) throw ConfigError("config.policies: expected an array");
        for (std::size_t i = 0; i < arr.size(); ++i)
            c.policies.push_back(policy_from_json(arr[i], "policies." + std::to_string(i)));
    }
    detail::read(j, "T", c.T, "config");
    detail::read(j, "S", c.S, "config");
    if (j.contains("seed")) {
        const auto& s = j.at("seed");
        if (!s.is_number_integer() || (s.is_number_integer() && !s.is_number_unsigned() && s.get<long long>() < 0))
            throw ConfigError("config.seed: expected a non-negative integer");
        c.master_seed = s.get<std::uint64_t>();
    }
    detail::read(j, "trace", c.trace, "config");
    c.validate();
    return c;
}

/// Every policy with its knowledge fields filled in from the environment.
inline ExperimentConfig resolve_config(ExperimentConfig c) {
    c.validate();
    for (auto& p : c.policies) {
        try {
            p = resolve_policy(p, c.env, c.T);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }
    return c;
}

inline Json* json_at_path(Json& root, const std::string& path) {
    Json* cur = &root;
    std::size_t start = 0;
    while (start <= path.size()) {
        const auto dot = path.find('.', start);
        const std::string part = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) return nullptr;
        if (cur->is_object()) {
            if (!cur->contains(part)) return nullptr;
            cur = &(*cur)[part];
        } else if (cur->is_array()) {
            std::size_t idx = 0;
            try {
                std::size_t used = 0;
                idx = std::stoul(part, &used);
                if (used != part.size()) return nullptr;
            } catch (const std::exception&) {
                return nullptr;
            }
            if (idx >= cur->size()) return nullptr;
            cur = &(*cur)[idx];
        } else {
            return nullptr;
        }
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    return cur;
}

/// Sets a numeric field addressed by a dotted path. Fields that only appear
/// after resolution (for example a Kalman policy's alpha) are accepted too.
inline ExperimentConfig with_value(const ExperimentConfig& base, const std::string& path, double value) {
    Json raw = config_to_json(base);
    Json resolved = config_to_json(resolve_config(base));
    Json* target = json_at_path(raw, path);
    if (!target) {
        const Json* r = json_at_path(resolved, path);
        if (!r || !r->is_number()) throw ConfigError("sweep: unknown axis '" + path + "'");
        const auto dot = path.rfind('.');
        if (dot == std::string::npos) throw ConfigError("sweep: unknown axis '" + path + "'");
        Json* parent = json_at_path(raw, path.substr(0, dot));
        if (!parent || !parent->is_object()) throw ConfigError("sweep: unknown axis '" + path + "'");
        target = &(*parent)[path.substr(dot + 1)];
        *target = *r;
    }
    if (!target->is_number()) throw ConfigError("sweep: axis '" + path + "' is not numeric");
    if (target->is_number_integer()) {
        if (value < 0.0 || value != std::floor(value)) throw ConfigError("sweep: axis '" + path + "' takes integers");
        *target = static_cast<std::uint64_t>(value);
    } else {
        *target = value;
    }
    return config_from_json(raw);
}

}  // namespace nsbandit
