#pragma once

// Decision algorithms behind one sequential act/observe interface. Policies
// only ever see their own history; the latent path stays with the harness.

#include <cmath>
#include <cstddef>
#include <deque>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "nsbandit/csv.hpp"
#include "nsbandit/environment.hpp"
#include "nsbandit/gaussian.hpp"
#include "nsbandit/posterior.hpp"
#include "nsbandit/rng.hpp"
#include "nsbandit/satisficing.hpp"

namespace nsbandit {

namespace policy {

/// Exact-posterior TS; the model is filled from the environment when absent.
struct TSExactGP {
    std::optional<GaussianBanditModel> model;
};

/// TS with per-arm scalar Kalman filters for AR(1) arms.
struct TSKalman {
    std::optional<double> alpha;
    std::optional<double> sigma_xi_sq;
    std::optional<double> sigma_w_sq;
};

struct SWTS {
    std::size_t L = 50;
};

struct SWUCB {
    std::size_t L = 50;
    double beta = 2.0;
};

struct Uniform {};

/// Satisficing TS that ignores suboptimality up to D.
struct STSDistortion {
    double D = 0.5;
    std::optional<GaussianBanditModel> model;
};

/// Satisficing TS targeting the best sequence with at most m switches over a
/// fixed lookahead horizon (defaults to the experiment horizon).
struct STSSwitchDP {
    std::size_t m = 5;
    std::optional<std::size_t> horizon;
    std::optional<GaussianBanditModel> model;
};

/// Satisficing TS that targets argmax of the time-invariant arm means.
struct STSFixedMean {
    std::optional<double> v_sq;
    std::optional<double> tau;
    std::optional<double> noise_var;
};

}  // namespace policy

using PolicySpec = std::variant<policy::TSExactGP, policy::TSKalman, policy::SWTS, policy::SWUCB, policy::Uniform,
                                policy::STSDistortion, policy::STSSwitchDP, policy::STSFixedMean>;

/// Stable identifier used in output column values.
inline std::string policy_id(const PolicySpec& spec) {
    return std::visit(
        [](const auto& p) -> std::string {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, policy::TSExactGP>) return "ts_exact";
            else if constexpr (std::is_same_v<P, policy::TSKalman>) return "ts_kalman";
            else if constexpr (std::is_same_v<P, policy::SWTS>) return "sw_ts_L" + std::to_string(p.L);
            else if constexpr (std::is_same_v<P, policy::SWUCB>)
                return "sw_ucb_L" + std::to_string(p.L) + "_b" + csv::fmt(p.beta);
            else if constexpr (std::is_same_v<P, policy::Uniform>) return "uniform";
            else if constexpr (std::is_same_v<P, policy::STSDistortion>) return "sts_D" + csv::fmt(p.D);
            else if constexpr (std::is_same_v<P, policy::STSSwitchDP>) return "sts_m" + std::to_string(p.m);
            else return "sts_fixed";
        },
        spec);
}

/// Prior model a Bayesian policy would hold with no misspecification, or
/// nullopt for environments that are not Gaussian-process driven.
inline std::optional<GaussianBanditModel> matched_model(const EnvSpec& spec) {
    if (const auto* g = std::get_if<env::GPTwoType>(&spec)) {
        GaussianBanditModel m{g->k, StationaryKernel::zero(), StationaryKernel::se(g->id_var, g->tau_id), g->noise_var};
        if (g->cm_var > 0.0) m.common = StationaryKernel::se(g->cm_var, g->tau_cm);
        return m;
    }
    if (const auto* a = std::get_if<env::AR1>(&spec))
        return GaussianBanditModel{a->k, StationaryKernel::zero(), StationaryKernel::ar1(a->alpha, a->sigma_xi_sq),
                                   a->sigma_w_sq};
    if (const auto* f = std::get_if<env::FixedPlusGP>(&spec))
        return GaussianBanditModel{f->k, StationaryKernel::zero(),
                                   StationaryKernel::constant(f->v_sq) + StationaryKernel::se(1.0, f->tau),
                                   f->noise_var};
    return std::nullopt;
}

/// Fills every optional knowledge field from the environment and the horizon.
/// Throws std::invalid_argument when a field cannot be inferred.
inline PolicySpec resolve_policy(PolicySpec spec, const EnvSpec& env_spec, std::size_t T) {
    auto need_model = [&](std::optional<GaussianBanditModel>& m, const char* who) {
        if (!m) m = matched_model(env_spec);
        if (!m) throw std::invalid_argument(std::string(who) + ": environment has no Gaussian-process model; supply one");
        if (m->k != num_arms(env_spec)) throw std::invalid_argument(std::string(who) + ": model arm count differs from environment");
    };
    std::visit(
        [&](auto& p) {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, policy::TSExactGP>) {
                need_model(p.model, "ts_exact");
            } else if constexpr (std::is_same_v<P, policy::STSDistortion>) {
                if (!(p.D >= 0.0)) throw std::invalid_argument("sts distortion: D must be >= 0");
                need_model(p.model, "sts_distortion");
            } else if constexpr (std::is_same_v<P, policy::STSSwitchDP>) {
                if (p.m < 1) throw std::invalid_argument("sts switch budget: m must be >= 1");
                if (!p.horizon) p.horizon = T;
                if (*p.horizon < T) throw std::invalid_argument("sts switch budget: lookahead horizon shorter than experiment");
                need_model(p.model, "sts_switch_dp");
            } else if constexpr (std::is_same_v<P, policy::TSKalman>) {
                if (const auto* a = std::get_if<env::AR1>(&env_spec)) {
                    if (!p.alpha) p.alpha = a->alpha;
                    if (!p.sigma_xi_sq) p.sigma_xi_sq = a->sigma_xi_sq;
                    if (!p.sigma_w_sq) p.sigma_w_sq = a->sigma_w_sq;
                }
                if (!p.alpha || !p.sigma_xi_sq || !p.sigma_w_sq)
                    throw std::invalid_argument("ts_kalman: alpha, sigma_xi_sq and sigma_w_sq are required");
                if (!(std::abs(*p.alpha) < 1.0)) throw std::invalid_argument("ts_kalman: |alpha| must be < 1");
                if (!(*p.sigma_xi_sq >= 0.0) || !(*p.sigma_w_sq > 0.0))
                    throw std::invalid_argument("ts_kalman: variances out of range");
            } else if constexpr (std::is_same_v<P, policy::STSFixedMean>) {
                if (const auto* f = std::get_if<env::FixedPlusGP>(&env_spec)) {
                    if (!p.v_sq) p.v_sq = f->v_sq;
                    if (!p.tau) p.tau = f->tau;
                    if (!p.noise_var) p.noise_var = f->noise_var;
                }
                if (!p.v_sq || !p.tau || !p.noise_var)
                    throw std::invalid_argument("sts_fixed: v_sq, tau and noise_var are required");
            } else if constexpr (std::is_same_v<P, policy::SWTS>) {
                if (p.L < 1) throw std::invalid_argument("sw_ts: L must be >= 1");
            } else if constexpr (std::is_same_v<P, policy::SWUCB>) {
                if (p.L < 1) throw std::invalid_argument("sw_ucb: L must be >= 1");
                if (!(p.beta >= 0.0)) throw std::invalid_argument("sw_ucb: beta must be >= 0");
            }
        },
        spec);
    return spec;
}

/// Sequential decision maker. Periods are 0-based and must be visited in
/// order: act(t) then observe(t, ...).
class Policy {
public:
    explicit Policy(std::size_t k) : k_(k) {}
    virtual ~Policy() = default;

    std::size_t arms() const { return k_; }
    std::size_t period() const { return next_; }

    std::size_t act(std::size_t t, Rng& rng) {
        if (t != next_) throw std::logic_error("Policy::act: expected period " + std::to_string(next_));
        const std::size_t a = do_act(t, rng);
        acted_ = true;
        return a;
    }

    void observe(std::size_t t, std::size_t arm, double reward) {
        if (t != next_ || !acted_) throw std::logic_error("Policy::observe: out-of-order period");
        if (arm >= k_) throw std::out_of_range("Policy::observe: arm out of range");
        do_observe(t, arm, reward);
        acted_ = false;
        ++next_;
    }

protected:
    virtual std::size_t do_act(std::size_t t, Rng& rng) = 0;
    virtual void do_observe(std::size_t t, std::size_t arm, double reward) = 0;

private:
    std::size_t k_;
    std::size_t next_ = 0;
    bool acted_ = false;
};

class UniformPolicy final : public Policy {
public:
    using Policy::Policy;

protected:
    std::size_t do_act(std::size_t, Rng& rng) override { return uniform_index(rng, arms()); }
    void do_observe(std::size_t, std::size_t, double) override {}
};

class TSExactGPPolicy final : public Policy {
public:
    TSExactGPPolicy(const GaussianBanditModel& model, std::size_t horizon)
        : Policy(model.k), post_(model, horizon) {}

    ConditionalGaussian posterior() { return post_.current(); }

protected:
    std::size_t do_act(std::size_t, Rng& rng) override {
        return argmax_row(sample_gaussian(post_.current(), rng));
    }
    void do_observe(std::size_t, std::size_t arm, double reward) override { post_.append(arm, reward); }

private:
    HistoryPosterior post_;
};

class TSKalmanPolicy final : public Policy {
public:
    TSKalmanPolicy(std::size_t k, double alpha, double sigma_xi_sq, double sigma_w_sq)
        : Policy(k), alpha_(alpha), sigma_xi_sq_(sigma_xi_sq), sigma_w_sq_(sigma_w_sq),
          beliefs_(k, GaussianBelief{0.0, sigma_xi_sq / (1.0 - alpha * alpha)}) {
        if (!(std::abs(alpha) < 1.0)) throw std::invalid_argument("TSKalmanPolicy: |alpha| must be < 1");
    }

    /// Beliefs about theta at the upcoming period (after the diffusion step).
    std::vector<GaussianBelief> predictive() const {
        std::vector<GaussianBelief> out;
        out.reserve(beliefs_.size());
        for (const auto& b : beliefs_) out.push_back(kalman_diffuse(b, alpha_, sigma_xi_sq_));
        return out;
    }

protected:
    std::size_t do_act(std::size_t, Rng& rng) override {
        const auto pred = predictive();
        Vector sample(static_cast<Eigen::Index>(pred.size()));
        for (std::size_t a = 0; a < pred.size(); ++a)
            sample[static_cast<Eigen::Index>(a)] = pred[a].mean + std::sqrt(pred[a].variance) * std_normal(rng);
        return argmax_row(sample);
    }

    void do_observe(std::size_t, std::size_t arm, double reward) override {
        beliefs_ = predictive();
        beliefs_[arm] = kalman_update(beliefs_[arm], reward, sigma_w_sq_);
    }

private:
    double alpha_, sigma_xi_sq_, sigma_w_sq_;
    std::vector<GaussianBelief> beliefs_;  // posterior of theta at the last completed period
};

struct WindowObs {
    std::size_t arm;
    double reward;
};

/// Sliding-window Gaussian belief with one prior pseudo-observation at 0.
inline GaussianBelief sw_ts_belief(const std::deque<WindowObs>& window, std::size_t arm) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& o : window)
        if (o.arm == arm) {
            sum += o.reward;
            ++n;
        }
    const double denom = 1.0 + static_cast<double>(n);
    return {sum / denom, 1.0 / denom};
}

/// Windowed UCB index; +inf for arms absent from the window.
inline double sw_ucb_index(const std::deque<WindowObs>& window, std::size_t arm, double beta) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& o : window)
        if (o.arm == arm) {
            sum += o.reward;
            ++n;
        }
    if (n == 0) return std::numeric_limits<double>::infinity();
    const double nn = static_cast<double>(n);
    return sum / nn + beta / std::sqrt(nn);
}

class SlidingWindowPolicy : public Policy {
public:
    SlidingWindowPolicy(std::size_t k, std::size_t L) : Policy(k), L_(L) {
        if (L < 1) throw std::invalid_argument("sliding window: L must be >= 1");
    }
    const std::deque<WindowObs>& window() const { return window_; }

protected:
    void do_observe(std::size_t, std::size_t arm, double reward) override {
        window_.push_back({arm, reward});
        if (window_.size() > L_) window_.pop_front();
    }

private:
    std::size_t L_;
    std::deque<WindowObs> window_;
};

class SWTSPolicy final : public SlidingWindowPolicy {
public:
    using SlidingWindowPolicy::SlidingWindowPolicy;

protected:
    std::size_t do_act(std::size_t, Rng& rng) override {
        Vector sample(static_cast<Eigen::Index>(arms()));
        for (std::size_t a = 0; a < arms(); ++a) {
            const auto b = sw_ts_belief(window(), a);
            sample[static_cast<Eigen::Index>(a)] = b.mean + std::sqrt(b.variance) * std_normal(rng);
        }
        return argmax_row(sample);
    }
};

class SWUCBPolicy final : public SlidingWindowPolicy {
public:
    SWUCBPolicy(std::size_t k, std::size_t L, double beta) : SlidingWindowPolicy(k, L), beta_(beta) {}

protected:
    std::size_t do_act(std::size_t, Rng&) override {
        Vector idx(static_cast<Eigen::Index>(arms()));
        for (std::size_t a = 0; a < arms(); ++a) idx[static_cast<Eigen::Index>(a)] = sw_ucb_index(window(), a, beta_);
        return argmax_row(idx);
    }

private:
    double beta_;
};

/// Probability matching on the distortion-D satisficing sequence: draw the
/// latent prefix up to the current period jointly from the posterior and play
/// the last entry of the satisficing sequence computed on the draw.
class STSDistortionPolicy final : public Policy {
public:
    STSDistortionPolicy(const GaussianBanditModel& model, std::size_t horizon, double D,
                        std::shared_ptr<const PathPriors> priors)
        : Policy(model.k), post_(model, horizon), D_(D), priors_(std::move(priors)) {}

protected:
    std::size_t do_act(std::size_t t, Rng& rng) override {
        const Matrix draw = sample_idio_paths(post_, *priors_, t + 1, rng);
        return sts_distortion_target(draw, D_).back();
    }
    void do_observe(std::size_t, std::size_t arm, double reward) override { post_.append(arm, reward); }

private:
    HistoryPosterior post_;
    double D_;
    std::shared_ptr<const PathPriors> priors_;
};

/// Probability matching on the best sequence with at most m switches over the
/// full lookahead horizon.
class STSSwitchDPPolicy final : public Policy {
public:
    STSSwitchDPPolicy(const GaussianBanditModel& model, std::size_t horizon, std::size_t m,
                      std::shared_ptr<const PathPriors> priors)
        : Policy(model.k), post_(model, horizon), horizon_(horizon), m_(m), priors_(std::move(priors)) {}

protected:
    std::size_t do_act(std::size_t t, Rng& rng) override {
        const Matrix draw = sample_idio_paths(post_, *priors_, horizon_, rng);
        return dp_best_sequence(draw, m_)[t];
    }
    void do_observe(std::size_t, std::size_t arm, double reward) override { post_.append(arm, reward); }

private:
    HistoryPosterior post_;
    std::size_t horizon_;
    std::size_t m_;
    std::shared_ptr<const PathPriors> priors_;
};

/// Samples each arm's time-invariant mean from its posterior and plays the argmax.
class STSFixedMeanPolicy final : public Policy {
public:
    STSFixedMeanPolicy(std::size_t k, double v_sq, double tau, double noise_var, std::size_t horizon)
        : Policy(k),
          post_(GaussianBanditModel{k, StationaryKernel::zero(),
                                    StationaryKernel::constant(v_sq) + StationaryKernel::se(1.0, tau), noise_var},
                horizon, PosteriorTarget{StationaryKernel::constant(v_sq)}) {}

    ConditionalGaussian posterior() { return post_.current(); }

protected:
    std::size_t do_act(std::size_t, Rng& rng) override { return argmax_row(sample_gaussian(post_.current(), rng)); }
    void do_observe(std::size_t, std::size_t arm, double reward) override { post_.append(arm, reward); }

private:
    HistoryPosterior post_;
};

/// Builds policy instances for one (environment, horizon). Expensive shared
/// state (prior path factors) is computed once and reused by every instance.
class PolicyFactory {
public:
    PolicyFactory(PolicySpec spec, const EnvSpec& env_spec, std::size_t T)
        : spec_(resolve_policy(std::move(spec), env_spec, T)), k_(num_arms(env_spec)), T_(T) {
        if (const auto* p = std::get_if<policy::STSDistortion>(&spec_)) priors_ = PathPriors::make(*p->model, T_);
        if (const auto* p = std::get_if<policy::STSSwitchDP>(&spec_)) priors_ = PathPriors::make(*p->model, *p->horizon);
    }

    const PolicySpec& spec() const { return spec_; }
    std::string id() const { return policy_id(spec_); }

    std::unique_ptr<Policy> make() const {
        return std::visit(
            [&](const auto& p) -> std::unique_ptr<Policy> {
                using P = std::decay_t<decltype(p)>;
                if constexpr (std::is_same_v<P, policy::TSExactGP>)
                    return std::make_unique<TSExactGPPolicy>(*p.model, T_);
                else if constexpr (std::is_same_v<P, policy::TSKalman>)
                    return std::make_unique<TSKalmanPolicy>(k_, *p.alpha, *p.sigma_xi_sq, *p.sigma_w_sq);
                else if constexpr (std::is_same_v<P, policy::SWTS>)
                    return std::make_unique<SWTSPolicy>(k_, p.L);
                else if constexpr (std::is_same_v<P, policy::SWUCB>)
                    return std::make_unique<SWUCBPolicy>(k_, p.L, p.beta);
                else if constexpr (std::is_same_v<P, policy::Uniform>)
                    return std::make_unique<UniformPolicy>(k_);
                else if constexpr (std::is_same_v<P, policy::STSDistortion>)
                    return std::make_unique<STSDistortionPolicy>(*p.model, T_, p.D, priors_);
                else if constexpr (std::is_same_v<P, policy::STSSwitchDP>)
                    return std::make_unique<STSSwitchDPPolicy>(*p.model, *p.horizon, p.m, priors_);
                else
                    return std::make_unique<STSFixedMeanPolicy>(k_, *p.v_sq, *p.tau, *p.noise_var, T_);
            },
            spec_);
    }

private:
    PolicySpec spec_;
    std::size_t k_;
    std::size_t T_;
    std::shared_ptr<const PathPriors> priors_;
};

}  // namespace nsbandit
