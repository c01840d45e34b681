#pragma once

// Information-theoretic quantities and closed-form bounds: switch rates,
// entropy rates (closed form, plug-in, exhaustive), effective horizons,
// regret bounds, the variation budget and rate-distortion upper bounds.
// Entropies are in nats.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "nsbandit/environment.hpp"
#include "nsbandit/rng.hpp"
#include "nsbandit/satisficing.hpp"

namespace nsbandit {

// x log(1/x) with 0 log 0 := 0
inline double xlog1x(double x) { return x > 0.0 ? -x * std::log(x) : 0.0; }

inline double switch_rate(const ActionSeq& seq) {
    return static_cast<double>(switch_count(seq)) / static_cast<double>(seq.size());
}

inline double entropy_rate_markov_switch(std::size_t k, double delta) {
    if (k < 2) throw std::invalid_argument("entropy_rate_markov_switch: k must be >= 2");
    if (!(delta >= 0.0 && delta <= 1.0)) throw std::invalid_argument("entropy_rate_markov_switch: delta must lie in [0,1]");
    const double other = delta > 0.0 ? delta * std::log((static_cast<double>(k) - 1.0) / delta) : 0.0;
    return xlog1x(1.0 - delta) + other;
}

enum class EntropyMethod { closed_form, plugin_markov, brute_force };

struct EntropyEstimate {
    double value = 0.0;
    EntropyMethod method = EntropyMethod::closed_form;
    std::size_t order = 0;
    double stderr_ = 0.0;
    bool low_data = false;  // fewer than 10 transitions per observed context on average
};

namespace detail {

struct ContextCounts {
    std::map<std::uint64_t, std::vector<std::uint64_t>> counts;
    std::uint64_t total = 0;
};

inline void accumulate_counts(const ActionSeq& path, std::size_t order, std::size_t k, ContextCounts& cc) {
    for (std::size_t t = order; t < path.size(); ++t) {
        std::uint64_t key = 0;
        for (std::size_t j = t - order; j < t; ++j) key = key * k + path[j];
        auto& row = cc.counts[key];
        if (row.empty()) row.assign(k, 0);
        ++row[path[t]];
        ++cc.total;
    }
}

inline double conditional_entropy(const ContextCounts& cc) {
    if (cc.total == 0) return 0.0;
    double h = 0.0;
    const double N = static_cast<double>(cc.total);
    for (const auto& [key, row] : cc.counts) {
        std::uint64_t n = 0;
        for (auto c : row) n += c;
        const double nc = static_cast<double>(n);
        double hc = 0.0;
        for (auto c : row) hc += xlog1x(static_cast<double>(c) / nc);
        h += nc / N * hc;
    }
    return h;
}

}  // namespace detail

/// Plug-in estimate of H(X_t | X_{t-1}, ..., X_{t-order}) from transition
/// counts pooled over all paths. The standard error is a path bootstrap with a
/// fixed internal seed, so results are reproducible.
inline EntropyEstimate entropy_rate_plugin(const std::vector<ActionSeq>& paths, std::size_t order, std::size_t k = 0,
                                           std::size_t bootstrap = 100) {
    if (paths.empty()) throw std::invalid_argument("entropy_rate_plugin: need at least one path");
    const std::size_t len = paths.front().size();
    for (const auto& p : paths)
        if (p.size() != len) throw std::invalid_argument("entropy_rate_plugin: paths must have equal length");
    if (k == 0)
        for (const auto& p : paths)
            for (auto a : p) k = std::max(k, a + 1);
    k = std::max<std::size_t>(k, 2);
    if (order > 0 && std::pow(static_cast<double>(k), static_cast<double>(order)) > 1e18)
        throw std::invalid_argument("entropy_rate_plugin: order too large for alphabet");

    std::vector<detail::ContextCounts> per_path(paths.size());
    detail::ContextCounts pooled;
    for (std::size_t s = 0; s < paths.size(); ++s) {
        detail::accumulate_counts(paths[s], order, k, per_path[s]);
        detail::accumulate_counts(paths[s], order, k, pooled);
    }

    EntropyEstimate est;
    est.method = EntropyMethod::plugin_markov;
    est.order = order;
    est.value = std::clamp(detail::conditional_entropy(pooled), 0.0, std::log(static_cast<double>(k)));
    est.low_data = pooled.counts.empty() ||
                   static_cast<double>(pooled.total) / static_cast<double>(pooled.counts.size()) < 10.0;

    if (paths.size() > 1 && bootstrap > 0) {
        Rng rng(0x5eed5eedULL);
        double sum = 0.0, sumsq = 0.0;
        for (std::size_t b = 0; b < bootstrap; ++b) {
            detail::ContextCounts cc;
            for (std::size_t s = 0; s < paths.size(); ++s) {
                const auto& src = per_path[uniform_index(rng, paths.size())];
                for (const auto& [key, row] : src.counts) {
                    auto& dst = cc.counts[key];
                    if (dst.empty()) dst.assign(k, 0);
                    for (std::size_t a = 0; a < k; ++a) dst[a] += row[a];
                }
                cc.total += src.total;
            }
            const double h = detail::conditional_entropy(cc);
            sum += h;
            sumsq += h * h;
        }
        const double B = static_cast<double>(bootstrap);
        const double mean = sum / B;
        est.stderr_ = std::sqrt(std::max(0.0, sumsq / B - mean * mean) * B / (B - 1.0));
    }
    return est;
}

/// H(X_1..X_T)/T from the explicit law of the sequence (any enumeration order).
inline double entropy_rate_bruteforce(const std::vector<double>& probs, std::size_t T) {
    if (T == 0) throw std::invalid_argument("entropy_rate_bruteforce: T must be >= 1");
    double total = 0.0, h = 0.0;
    for (double p : probs) {
        if (!(p >= 0.0)) throw std::invalid_argument("entropy_rate_bruteforce: negative probability");
        total += p;
        h += xlog1x(p);
    }
    if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("entropy_rate_bruteforce: probabilities do not sum to 1");
    return h / static_cast<double>(T);
}

/// Decodes index i in [0, k^T) into the sequence with a_1 most significant.
inline ActionSeq decode_sequence(std::uint64_t i, std::size_t k, std::size_t T) {
    ActionSeq seq(T);
    for (std::size_t t = T; t-- > 0;) {
        seq[t] = static_cast<std::size_t>(i % k);
        i /= k;
    }
    return seq;
}

inline std::uint64_t count_sequences(std::size_t k, std::size_t T) {
    std::uint64_t n = 1;
    for (std::size_t t = 0; t < T; ++t) {
        if (n > (std::uint64_t{1} << 40) / k) throw std::invalid_argument("too many sequences to enumerate");
        n *= k;
    }
    return n;
}

/// Law of (X_1..X_T) for a finite Markov chain, indexed as in decode_sequence.
inline std::vector<double> markov_chain_path_law(const std::vector<double>& initial,
                                                 const std::vector<std::vector<double>>& transition, std::size_t T) {
    const std::size_t k = initial.size();
    const std::uint64_t n = count_sequences(k, T);
    std::vector<double> probs(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        const auto seq = decode_sequence(i, k, T);
        double p = initial[seq[0]];
        for (std::size_t t = 1; t < T && p > 0.0; ++t) p *= transition[seq[t - 1]][seq[t]];
        probs[i] = p;
    }
    return probs;
}

inline std::vector<double> markov_switch_path_law(std::size_t k, double delta, std::size_t T) {
    std::vector<double> init(k, 1.0 / static_cast<double>(k));
    std::vector<std::vector<double>> P(k, std::vector<double>(k, delta / (static_cast<double>(k) - 1.0)));
    for (std::size_t a = 0; a < k; ++a) P[a][a] = 1.0 - delta;
    return markov_chain_path_law(init, P, T);
}

/// E[switch_count] / T under an explicit sequence law.
inline double expected_switch_rate(const std::vector<double>& probs, std::size_t k, std::size_t T) {
    double s = 0.0;
    for (std::uint64_t i = 0; i < probs.size(); ++i)
        if (probs[i] > 0.0) s += probs[i] * static_cast<double>(switch_count(decode_sequence(i, k, T)));
    // summation rounding can push an always-switching law just past 1
    return std::min(s / static_cast<double>(T), 1.0);
}

/// Almost-sure switch-count bound: S/T (1 + log(1 + T/S) + log k).
inline double switch_count_entropy_bound(double S, double T, std::size_t k) {
    if (!(S >= 1.0 && S <= T)) throw std::invalid_argument("switch_count_entropy_bound: need 1 <= S <= T");
    return S / T * (1.0 + std::log(1.0 + T / S) + std::log(static_cast<double>(k)));
}

/// Expected switch-rate bound s(1 + log(1 + 1/s) + log k) + log(T)/T.
inline double combinatorial_entropy_bound(double s_bar, double T, std::size_t k) {
    if (!(s_bar > 0.0 && s_bar <= 1.0)) throw std::invalid_argument("combinatorial_entropy_bound: s_bar must lie in (0,1]");
    if (!(T >= 1.0)) throw std::invalid_argument("combinatorial_entropy_bound: T must be >= 1");
    return s_bar * (1.0 + std::log(1.0 + 1.0 / s_bar) + std::log(static_cast<double>(k))) + std::log(T) / T;
}

/// (1 + log tau_eff + h_cond)/tau_eff + h_first/T. T = +inf drops the last term.
inline double effective_horizon_bound(double tau_eff, double h_cond, double h_first, double T) {
    if (!(tau_eff >= 1.0)) throw std::invalid_argument("effective_horizon_bound: tau_eff must be >= 1");
    if (!(h_cond >= 0.0 && h_first >= 0.0)) throw std::invalid_argument("effective_horizon_bound: entropies must be >= 0");
    if (!(T > 0.0)) throw std::invalid_argument("effective_horizon_bound: T must be positive");
    const double tail = std::isinf(T) ? 0.0 : h_first / T;
    if (std::isinf(tau_eff)) return tail;
    return (1.0 + std::log(tau_eff) + h_cond) / tau_eff + tail;
}

/// Zero-crossing effective horizon of the difference of two unit SE processes.
inline double rice_effective_horizon(double tau_id) {
    if (!(tau_id > 0.0)) throw std::invalid_argument("rice_effective_horizon: tau_id must be > 0");
    return std::numbers::pi / std::acos(std::exp(-1.0 / (2.0 * tau_id * tau_id)));
}

inline double news_effective_horizon(std::size_t k, double tau) {
    if (k < 2 || !(tau >= 1.0)) throw std::invalid_argument("news_effective_horizon: need k >= 2 and tau >= 1");
    const double kk = static_cast<double>(k);
    return (kk + 1.0) / (2.0 * (kk - 1.0)) * tau;
}

inline double regret_bound_karmed(double sigma, std::size_t k, double h_rate) {
    if (!(sigma >= 0.0 && h_rate >= 0.0)) throw std::invalid_argument("regret_bound_karmed: inputs must be >= 0");
    return sigma * std::sqrt(2.0 * static_cast<double>(k) * h_rate);
}

inline double regret_bound_fullinfo(double sigma, double h_rate) {
    if (!(sigma >= 0.0 && h_rate >= 0.0)) throw std::invalid_argument("regret_bound_fullinfo: inputs must be >= 0");
    return sigma * std::sqrt(2.0 * h_rate);
}

/// Pathwise (1/T) sum_{t>=2} max_a |gap_t(a) - gap_{t-1}(a)|, gap_t(a) = mu*_t - mu_{t,a}.
inline double variation_budget(const LatentPath& path) {
    if (path.T < 2) throw std::invalid_argument("variation_budget: T must be >= 2");
    double total = 0.0;
    for (std::size_t t = 1; t < path.T; ++t) {
        const auto ti = static_cast<Eigen::Index>(t);
        const double best_now = path.mu(ti, static_cast<Eigen::Index>(path.opt[t]));
        const double best_prev = path.mu(ti - 1, static_cast<Eigen::Index>(path.opt[t - 1]));
        double m = 0.0;
        for (Eigen::Index a = 0; a < path.mu.cols(); ++a) {
            const double g_now = best_now - path.mu(ti, a);
            const double g_prev = best_prev - path.mu(ti - 1, a);
            m = std::max(m, std::abs(g_now - g_prev));
        }
        total += m;
    }
    return total / static_cast<double>(path.T);
}

/// Rate-distortion upper bound for the distortion-D satisficing sequence.
inline double rate_distortion_bound(double v_bar, double D, double T, std::size_t k) {
    if (!(D > 0.0)) throw std::invalid_argument("rate_distortion_bound: D must be > 0");
    if (!(v_bar >= 0.0)) throw std::invalid_argument("rate_distortion_bound: v_bar must be >= 0");
    if (k < 2 || !(T >= 2.0)) throw std::invalid_argument("rate_distortion_bound: need k >= 2 and T >= 2");
    const double tail = 3.0 * std::log(static_cast<double>(k) * T) / T;
    if (v_bar == 0.0) return tail;
    const double ratio = 2.0 * v_bar / D;
    return ratio * (1.0 + std::log(1.0 + std::min(T, D / (2.0 * v_bar))) + std::log(static_cast<double>(k))) + tail;
}

/// Regret bound in terms of the variation budget and a uniform information-ratio bound.
inline double regret_bound_variation(double gamma_u, double v_bar, std::size_t k, double T) {
    if (k < 2 || !(T >= 2.0)) throw std::invalid_argument("regret_bound_variation: need k >= 2 and T >= 2");
    if (!(gamma_u > 0.0) || !(v_bar >= 0.0)) throw std::invalid_argument("regret_bound_variation: need gamma_u > 0, v_bar >= 0");
    const double logk = std::log(static_cast<double>(k));
    const double tail = std::sqrt(3.0 * gamma_u * std::log(static_cast<double>(k) * T) / T);
    if (v_bar == 0.0) return tail;
    const double inner = std::min(T, std::cbrt(gamma_u * logk) / std::pow(v_bar, 2.0 / 3.0));
    return 5.0 * std::cbrt(gamma_u * logk * v_bar) * std::sqrt(std::log(1.0 + inner)) + tail;
}

inline double regret_bound_sts(double gamma, double mi_rate) {
    if (!(gamma >= 0.0 && mi_rate >= 0.0)) throw std::invalid_argument("regret_bound_sts: inputs must be >= 0");
    return std::sqrt(gamma * mi_rate);
}

// Known upper bounds on the information ratio of (satisficing) Thompson sampling.
struct InfoRatioBound {
    const char* name;
    const char* setting;
};

inline constexpr InfoRatioBound kInfoRatioKArmed{"2*sigma^2*k", "finite-action bandit feedback"};
inline constexpr InfoRatioBound kInfoRatioFullInfo{"2*sigma^2", "full-information feedback"};
inline constexpr InfoRatioBound kInfoRatioLinear{"2*sigma^2*d", "linear bandit, dimension d"};
inline constexpr InfoRatioBound kInfoRatioCombinatorial{"2*sigma^2*d/k^2", "combinatorial semi-bandit, d items, k chosen"};

inline double gamma_karmed(double sigma_sq, std::size_t k) { return 2.0 * sigma_sq * static_cast<double>(k); }
inline double gamma_fullinfo(double sigma_sq) { return 2.0 * sigma_sq; }
inline double gamma_linear(double sigma_sq, std::size_t d) { return 2.0 * sigma_sq * static_cast<double>(d); }
inline double gamma_combinatorial(double sigma_sq, std::size_t d, std::size_t k) {
    return 2.0 * sigma_sq * static_cast<double>(d) / static_cast<double>(k * k);
}

struct BoundReport {
    std::string name;
    double value = 0.0;
    std::vector<std::pair<std::string, double>> inputs;
};

}  // namespace nsbandit
