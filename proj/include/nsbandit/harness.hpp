#pragma once

// Monte Carlo experiment runner. Replication s realizes one latent path from
// derive_seed(master, s); every policy plays that same path with its own
// reward-noise and sampling streams. Work is split into fixed blocks of
// replications and reduced in block order, so output does not depend on the
// number of threads.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "nsbandit/config.hpp"
#include "nsbandit/csv.hpp"
#include "nsbandit/environment.hpp"
#include "nsbandit/info_metrics.hpp"
#include "nsbandit/policies.hpp"
#include "nsbandit/rng.hpp"

namespace nsbandit {

inline constexpr const char* kVersion = "0.1.0";

class NumericFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A named policy constructor. The path argument lets test-only policies
/// (for example an oracle) peek at the truth; regular policies ignore it.
struct PolicyEntry {
    std::string id;
    std::function<std::unique_ptr<Policy>(const LatentPath&)> make;
};

struct RunOptions {
    std::size_t threads = 0;  // 0: hardware concurrency
    std::vector<PolicyEntry> extra_policies;
    double max_excluded_fraction = 0.01;
};

struct RegretEstimate {
    std::string policy;
    double mean = 0.0;
    double stderr_ = 0.0;
    std::size_t n = 0;
    std::vector<double> trace;  // mean instantaneous regret per period, when requested
};

struct ExperimentResult {
    std::vector<RegretEstimate> estimates;
    std::size_t S = 0;
    std::vector<std::size_t> excluded;  // replication indices dropped for numeric failure
    double jitter = 0.0;
    std::uint64_t master_seed = 0;
};

inline std::size_t resolve_threads(std::size_t requested) {
    if (requested > 0) return requested;
    const auto hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

/// Runs f(i) for i in [0, n) on up to `threads` workers. The first exception
/// (lowest index) is rethrown after all workers stop.
template <class F>
void parallel_for(std::size_t n, std::size_t threads, F&& f) {
    threads = std::max<std::size_t>(1, std::min(threads, n));
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < n;) {
            try {
                f(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (std::size_t w = 0; w < threads; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

inline std::vector<PolicyEntry> policy_entries(const ExperimentConfig& cfg) {
    std::vector<PolicyEntry> out;
    for (const auto& spec : cfg.policies) {
        auto factory = std::make_shared<PolicyFactory>(spec, cfg.env, cfg.T);
        out.push_back({factory->id(), [factory](const LatentPath&) { return factory->make(); }});
    }
    return out;
}

struct ReplicationOutcome {
    std::vector<double> regret;                // per policy
    std::vector<std::vector<double>> instant;  // per policy, per period (trace only)
};

/// Plays every policy along one path. Reward and policy randomness for
/// policy p in replication s come from derive_seed(master, s, hash(id), 0|1).
inline ReplicationOutcome play_replication(const LatentPath& path, const RewardModel& model,
                                           const std::vector<PolicyEntry>& entries, std::uint64_t master,
                                           std::size_t s, bool trace) {
    ReplicationOutcome out;
    out.regret.resize(entries.size());
    if (trace) out.instant.resize(entries.size());
    for (std::size_t p = 0; p < entries.size(); ++p) {
        const auto h = hash_id(entries[p].id);
        Rng reward_rng(derive_seed(master, s, h, 0));
        Rng policy_rng(derive_seed(master, s, h, 1));
        auto pol = entries[p].make(path);
        ActionSeq actions(path.T);
        if (trace) out.instant[p].resize(path.T);
        for (std::size_t t = 0; t < path.T; ++t) {
            const std::size_t a = pol->act(t, policy_rng);
            const double r = draw_reward(path, model, t, a, reward_rng);
            pol->observe(t, a, r);
            actions[t] = a;
            if (trace) out.instant[p][t] = instant_regret(path, t, a);
        }
        out.regret[p] = regret_of_sequence(path, actions);
        if (!std::isfinite(out.regret[p])) throw NumericFailure("non-finite regret");
    }
    return out;
}

inline ExperimentResult run_experiment(const ExperimentConfig& cfg_in, const RunOptions& opts = {}) {
    const ExperimentConfig cfg = resolve_config(cfg_in);
    if (!cfg.master_seed) throw ConfigError("run_experiment: a master seed is required");
    const std::uint64_t master = *cfg.master_seed;

    auto entries = policy_entries(cfg);
    for (const auto& e : opts.extra_policies) entries.push_back(e);
    if (entries.empty()) throw ConfigError("run_experiment: no policies");

    const EnvironmentSampler sampler(cfg.env, cfg.T);
    const RewardModel model = reward_model_for(cfg.env);
    const std::size_t S = cfg.S, T = cfg.T, P = entries.size();

    constexpr std::size_t kBlock = 8;
    const std::size_t nblocks = (S + kBlock - 1) / kBlock;
    std::vector<double> regret(S * P, 0.0);
    std::vector<char> ok(S, 0);
    std::vector<double> jitter(S, 0.0);
    std::vector<std::vector<double>> block_trace(cfg.trace ? nblocks : 0);

    parallel_for(nblocks, resolve_threads(opts.threads), [&](std::size_t b) {
        if (cfg.trace) block_trace[b].assign(P * T, 0.0);
        for (std::size_t s = b * kBlock; s < std::min(S, (b + 1) * kBlock); ++s) {
            Rng path_rng(derive_seed(master, s));
            ReplicationOutcome res;
            try {
                const LatentPath path = sampler.realize(path_rng);
                jitter[s] = path.meta.jitter;
                res = play_replication(path, model, entries, master, s, cfg.trace);
            } catch (const NotPositiveDefinite&) {
                continue;
            } catch (const NumericFailure&) {
                continue;
            }
            ok[s] = 1;
            for (std::size_t p = 0; p < P; ++p) {
                regret[s * P + p] = res.regret[p];
                if (cfg.trace)
                    for (std::size_t t = 0; t < T; ++t) block_trace[b][p * T + t] += res.instant[p][t];
            }
        }
    });

    ExperimentResult result;
    result.S = S;
    result.master_seed = master;
    for (std::size_t s = 0; s < S; ++s) {
        if (!ok[s]) result.excluded.push_back(s);
        result.jitter = std::max(result.jitter, jitter[s]);
    }
    const std::size_t n = S - result.excluded.size();
    if (n == 0 || static_cast<double>(result.excluded.size()) > opts.max_excluded_fraction * static_cast<double>(S))
        throw NumericFailure("run_experiment: " + std::to_string(result.excluded.size()) + " of " + std::to_string(S) +
                             " replications failed numerically");

    for (std::size_t p = 0; p < P; ++p) {
        RegretEstimate est;
        est.policy = entries[p].id;
        est.n = n;
        double sum = 0.0;
        for (std::size_t s = 0; s < S; ++s)
            if (ok[s]) sum += regret[s * P + p];
        est.mean = sum / static_cast<double>(n);
        double ss = 0.0;
        for (std::size_t s = 0; s < S; ++s)
            if (ok[s]) ss += (regret[s * P + p] - est.mean) * (regret[s * P + p] - est.mean);
        est.stderr_ = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0;
        if (cfg.trace) {
            est.trace.assign(T, 0.0);
            for (std::size_t b = 0; b < nblocks; ++b)
                for (std::size_t t = 0; t < T; ++t) est.trace[t] += block_trace[b][p * T + t];
            for (auto& v : est.trace) v /= static_cast<double>(n);
        }
        result.estimates.push_back(std::move(est));
    }
    return result;
}

inline std::string regret_csv(const ExperimentResult& r) {
    csv::Writer w({"policy", "mean_regret", "stderr", "n"});
    for (const auto& e : r.estimates) w.row({e.policy, csv::fmt(e.mean), csv::fmt(e.stderr_), std::to_string(e.n)});
    return w.str();
}

inline std::string trace_csv(const ExperimentResult& r) {
    csv::Writer w({"t", "policy", "instantaneous_regret"});
    for (const auto& e : r.estimates)
        for (std::size_t t = 0; t < e.trace.size(); ++t) w.row({std::to_string(t + 1), e.policy, csv::fmt(e.trace[t])});
    return w.str();
}

inline Json result_metadata(const ExperimentResult& r) {
    return {{"version", kVersion},
            {"master_seed", r.master_seed},
            {"replications", r.S},
            {"excluded", r.excluded.size()},
            {"excluded_replications", r.excluded},
            {"cholesky_jitter", r.jitter}};
}

struct SweepRow {
    double value = 0.0;
    RegretEstimate estimate;
};

struct SweepResult {
    std::string axis;
    std::vector<SweepRow> rows;
    std::vector<ExperimentResult> runs;
};

/// One experiment per axis value, all with the base master seed (common
/// random numbers across the sweep).
inline SweepResult sweep(const ExperimentConfig& base, const std::string& axis, const std::vector<double>& values,
                         const RunOptions& opts = {}) {
    if (values.empty()) throw ConfigError("sweep: no values");
    SweepResult out;
    out.axis = axis;
    for (double v : values) {
        auto res = run_experiment(with_value(base, axis, v), opts);
        for (const auto& e : res.estimates) out.rows.push_back({v, e});
        out.runs.push_back(std::move(res));
    }
    return out;
}

inline std::string sweep_csv(const SweepResult& r) {
    csv::Writer w({"axis", "value", "policy", "mean_regret", "stderr", "n"});
    for (const auto& row : r.rows)
        w.row({r.axis, csv::fmt(row.value), row.estimate.policy, csv::fmt(row.estimate.mean),
               csv::fmt(row.estimate.stderr_), std::to_string(row.estimate.n)});
    return w.str();
}

struct TauEffEstimate {
    double value = 0.0;
    std::size_t switches = 0;  // total A*_t != A*_{t-1} events
    std::size_t paths = 0;
    bool censored = false;     // no switch observed; value reported as T
};

/// Effective horizon as (T-1) S / (observed switches), the inverse of the
/// empirical per-period switch frequency.
inline TauEffEstimate estimate_tau_eff(const EnvSpec& env, std::size_t T, std::size_t S, Rng& rng) {
    if (T < 2 || S < 1) throw std::invalid_argument("estimate_tau_eff: need T >= 2 and S >= 1");
    const EnvironmentSampler sampler(env, T);
    TauEffEstimate out;
    out.paths = S;
    for (std::size_t s = 0; s < S; ++s) {
        const auto path = sampler.realize(rng);
        out.switches += switch_count(path.opt) - 1;
    }
    if (out.switches == 0) {
        out.censored = true;
        out.value = static_cast<double>(T);
    } else {
        out.value = static_cast<double>((T - 1) * S) / static_cast<double>(out.switches);
    }
    return out;
}

// ---- figure data ----

struct FigureData {
    std::string csv;
    Json meta;
};

inline const std::vector<double>& figure_tau_grid() {
    static const std::vector<double> g{10, 25, 50, 75, 100};
    return g;
}

inline std::vector<PolicySpec> default_figure_policies() {
    return {policy::TSExactGP{}, policy::SWTS{}, policy::SWUCB{}, policy::Uniform{}};
}

/// Upper bound on TS regret for the two-armed GP environment: the k-armed
/// regret bound with the entropy rate bounded through the Rice horizon.
inline double two_arm_ts_bound(double tau_id, double sigma, double T) {
    const double tau_eff = rice_effective_horizon(tau_id);
    const double h = effective_horizon_bound(tau_eff, 0.0, std::log(2.0), T);
    return regret_bound_karmed(sigma, 2, h);
}

inline FigureData emit_figure_data(const ExperimentConfig& cfg_in, const std::string& id, const RunOptions& opts = {}) {
    ExperimentConfig cfg = cfg_in;
    if (!std::holds_alternative<env::GPTwoType>(cfg.env))
        throw ConfigError("figure: figure data is defined for the gp_two_type environment");
    if (!cfg.master_seed) throw ConfigError("figure: a master seed is required");
    if (cfg.policies.empty()) cfg.policies = default_figure_policies();
    auto& gp = std::get<env::GPTwoType>(cfg.env);

    FigureData out;
    out.meta = {{"version", kVersion}, {"figure", id}, {"master_seed", *cfg.master_seed}, {"T", cfg.T}, {"S", cfg.S}};

    auto regret_panel = [&](const char* axis_col, const std::string& axis, double fixed_tau_cm_or_id, bool with_bound) {
        if (axis == "env.tau_id") gp.tau_cm = fixed_tau_cm_or_id;
        else gp.tau_id = fixed_tau_cm_or_id;
        const auto sw = sweep(cfg, axis, figure_tau_grid(), opts);
        csv::Writer w({axis_col, "series", "value", "stderr", "n"});
        for (const auto& row : sw.rows)
            w.row({csv::fmt(row.value), row.estimate.policy, csv::fmt(row.estimate.mean), csv::fmt(row.estimate.stderr_),
                   std::to_string(row.estimate.n)});
        if (with_bound)
            for (double v : figure_tau_grid())
                w.row({csv::fmt(v), "bound", csv::fmt(two_arm_ts_bound(v, std::sqrt(gp.noise_var), static_cast<double>(cfg.T))),
                       "0", "0"});
        Json runs = Json::array();
        for (const auto& r : sw.runs) runs.push_back(result_metadata(r));
        out.meta["runs"] = runs;
        out.meta["grid_note"] = "tau grid {10,25,50,75,100} is a reconstruction";
        out.csv = w.str();
    };

    if (id == "fig2_left" || id == "figC5") {
        regret_panel("tau_id", "env.tau_id", 10.0, id == "figC5");
    } else if (id == "fig2_right") {
        regret_panel("tau_cm", "env.tau_cm", 50.0, false);
    } else if (id == "figC1") {
        gp.tau_cm = 10.0;
        gp.tau_id = 10.0;
        Rng rng(derive_seed(*cfg.master_seed, 0));
        const auto path = realize(cfg.env, cfg.T, rng);
        csv::Writer w({"t", "arm", "theta_cm", "theta_id", "mu", "is_opt"});
        for (std::size_t t = 0; t < path.T; ++t) {
            const auto ti = static_cast<Eigen::Index>(t);
            for (std::size_t a = 0; a < path.k; ++a) {
                const auto ai = static_cast<Eigen::Index>(a);
                const double cm = path.meta.common ? (*path.meta.common)[ti] : 0.0;
                w.row({std::to_string(t + 1), std::to_string(a + 1), csv::fmt(cm),
                       csv::fmt((*path.meta.idiosyncratic)(ti, ai)), csv::fmt(path.mu(ti, ai)),
                       path.opt[t] == a ? "1" : "0"});
            }
        }
        out.meta["jitter"] = path.meta.jitter;
        out.csv = w.str();
    } else if (id == "figC2") {
        static const std::vector<double> grid{1, 5, 10, 15, 20, 25, 30, 35, 40, 45, 50, 55, 60, 65, 70, 75, 80, 85, 90, 95, 100};
        csv::Writer w({"tau_id", "tau_eff_hat", "tau_eff_rice", "censored"});
        for (std::size_t i = 0; i < grid.size(); ++i) {
            gp.tau_id = grid[i];
            Rng rng(derive_seed(*cfg.master_seed, i));
            const auto est = estimate_tau_eff(cfg.env, cfg.T, cfg.S, rng);
            w.row({csv::fmt(grid[i]), csv::fmt(est.value), csv::fmt(rice_effective_horizon(grid[i])),
                   est.censored ? "1" : "0"});
        }
        out.csv = w.str();
    } else if (id == "figC4") {
        gp.tau_cm = 50.0;
        gp.tau_id = 50.0;
        cfg.trace = true;
        const auto res = run_experiment(cfg, opts);
        out.csv = trace_csv(res);
        out.meta["runs"] = Json::array({result_metadata(res)});
        Json means = Json::object();
        for (const auto& e : res.estimates) means[e.policy] = {{"mean", e.mean}, {"stderr", e.stderr_}};
        out.meta["per_period_regret"] = means;
    } else {
        throw ConfigError("figure: unknown figure id '" + id + "'");
    }
    return out;
}

}  // namespace nsbandit
