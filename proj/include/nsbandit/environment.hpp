#pragma once

// Playable environments: realize a latent path (mean rewards and optimal
// actions), draw noisy rewards on demand, and score action sequences.

#include <cmath>
#include <cstddef>
#include <istream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "nsbandit/csv.hpp"
#include "nsbandit/gaussian.hpp"
#include "nsbandit/latent.hpp"
#include "nsbandit/rng.hpp"

namespace nsbandit {

using ActionSeq = std::vector<std::size_t>;

namespace env {

/// mu[t][a] = theta_cm[t] + theta_id[t][a], all components zero-mean SE processes.
struct GPTwoType {
    std::size_t k = 2;
    double tau_cm = 10.0;
    double tau_id = 50.0;
    double noise_var = 1.0;
    double cm_var = 1.0;
    double id_var = 1.0;
};

/// theta[t][a] = alpha * theta[t-1][a] + xi, started from the stationary law.
struct AR1 {
    std::size_t k = 2;
    double alpha = 0.9;
    double sigma_xi_sq = 0.19;
    double sigma_w_sq = 1.0;
};

/// The optimal arm follows a Markov switching chain; it earns `gap`, others 0.
struct MarkovSwitch {
    MarkovSwitchSpec spec;
    double gap = 1.0;
    double noise_var = 1.0;
};

/// Block-constant rewards: epsilon on the block's best arm, 0 elsewhere.
struct RenewalLB {
    RenewalSpec spec;
    double noise_var = 1.0;
};

/// Click-through rates of k article slots with geometric lifetimes; Bernoulli rewards.
struct ArticlePool {
    ArticlePoolSpec spec;
};

/// theta[t][a] = fixed[a] + unit-variance SE process, fixed[a] ~ N(0, v_sq).
struct FixedPlusGP {
    std::size_t k = 2;
    double v_sq = 1.0;
    double tau = 10.0;
    double noise_var = 1.0;
};

}  // namespace env

using EnvSpec = std::variant<env::GPTwoType, env::AR1, env::MarkovSwitch, env::RenewalLB, env::ArticlePool,
                             env::FixedPlusGP>;

inline std::size_t num_arms(const EnvSpec& spec) {
    return std::visit(
        [](const auto& e) -> std::size_t {
            using E = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<E, env::MarkovSwitch> || std::is_same_v<E, env::RenewalLB> ||
                          std::is_same_v<E, env::ArticlePool>)
                return e.spec.k;
            else
                return e.k;
        },
        spec);
}

inline void validate(const EnvSpec& spec) {
    auto positive = [](double v, const char* what) {
        if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string(what) + " must be positive and finite");
    };
    std::visit(
        [&](const auto& e) {
            using E = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<E, env::GPTwoType>) {
                if (e.k < 2) throw std::invalid_argument("gp_two_type: k must be >= 2");
                positive(e.tau_cm, "gp_two_type.tau_cm");
                positive(e.tau_id, "gp_two_type.tau_id");
                positive(e.noise_var, "gp_two_type.noise_var");
                positive(e.id_var, "gp_two_type.id_var");
                if (!(e.cm_var >= 0.0)) throw std::invalid_argument("gp_two_type.cm_var must be >= 0");
            } else if constexpr (std::is_same_v<E, env::AR1>) {
                if (e.k < 2) throw std::invalid_argument("ar1: k must be >= 2");
                if (!(std::abs(e.alpha) < 1.0)) throw std::invalid_argument("ar1: |alpha| must be < 1");
                positive(e.sigma_xi_sq, "ar1.sigma_xi_sq");
                positive(e.sigma_w_sq, "ar1.sigma_w_sq");
            } else if constexpr (std::is_same_v<E, env::MarkovSwitch>) {
                e.spec.validate();
                positive(e.gap, "markov_switch.gap");
                positive(e.noise_var, "markov_switch.noise_var");
            } else if constexpr (std::is_same_v<E, env::RenewalLB>) {
                e.spec.validate();
                positive(e.noise_var, "renewal_lb.noise_var");
            } else if constexpr (std::is_same_v<E, env::ArticlePool>) {
                e.spec.validate();
            } else if constexpr (std::is_same_v<E, env::FixedPlusGP>) {
                if (e.k < 2) throw std::invalid_argument("fixed_plus_gp: k must be >= 2");
                positive(e.v_sq, "fixed_plus_gp.v_sq");
                positive(e.tau, "fixed_plus_gp.tau");
                positive(e.noise_var, "fixed_plus_gp.noise_var");
            }
        },
        spec);
}

struct GaussianNoise {
    double sigma_sq = 1.0;
};
struct BernoulliReward {};
using RewardModel = std::variant<GaussianNoise, BernoulliReward>;

inline RewardModel reward_model_for(const EnvSpec& spec) {
    return std::visit(
        [](const auto& e) -> RewardModel {
            using E = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<E, env::ArticlePool>)
                return BernoulliReward{};
            else if constexpr (std::is_same_v<E, env::AR1>)
                return GaussianNoise{e.sigma_w_sq};
            else
                return GaussianNoise{e.noise_var};
        },
        spec);
}

/// Sub-Gaussian variance proxy used by the regret bounds (1/4 for [0,1] rewards).
inline double variance_proxy(const RewardModel& m) {
    if (const auto* g = std::get_if<GaussianNoise>(&m)) return g->sigma_sq;
    return 0.25;
}

struct PathMeta {
    std::optional<Vector> common;            // GPTwoType: theta_cm
    std::optional<Matrix> idiosyncratic;     // GPTwoType / AR1 / FixedPlusGP: per-arm latent part
    std::optional<Vector> fixed_means;       // FixedPlusGP: mu_a^fixed
    std::optional<RenewalPath> changepoints; // RenewalLB
    std::optional<std::vector<std::vector<char>>> refresh;  // ArticlePool chi matrix
    double jitter = 0.0;                     // largest Cholesky jitter used while sampling
};

struct LatentPath {
    std::size_t T = 0;
    std::size_t k = 0;
    Matrix mu;      // T x k conditional mean rewards
    ActionSeq opt;  // 0-based optimal arm per period
    PathMeta meta;
};

/// Lowest index wins ties.
template <class Row>
inline std::size_t argmax_row(const Row& row) {
    std::size_t best = 0;
    for (Eigen::Index a = 1; a < row.size(); ++a)
        if (row[a] > row[static_cast<Eigen::Index>(best)]) best = static_cast<std::size_t>(a);
    return best;
}

inline ActionSeq pointwise_argmax(const Matrix& mu) {
    ActionSeq out(static_cast<std::size_t>(mu.rows()));
    for (Eigen::Index t = 0; t < mu.rows(); ++t) out[static_cast<std::size_t>(t)] = argmax_row(mu.row(t));
    return out;
}

inline LatentPath make_path(Matrix mu, PathMeta meta = {}) {
    LatentPath p;
    p.T = static_cast<std::size_t>(mu.rows());
    p.k = static_cast<std::size_t>(mu.cols());
    p.opt = pointwise_argmax(mu);
    p.mu = std::move(mu);
    p.meta = std::move(meta);
    return p;
}

/// Realizes latent paths for one (EnvSpec, T). Gaussian-process factors are
/// computed at construction and shared by all draws, so one instance can serve
/// many replications (const methods are thread-safe given distinct rngs).
class EnvironmentSampler {
public:
    EnvironmentSampler(EnvSpec spec, std::size_t T) : spec_(std::move(spec)), T_(T) {
        if (T == 0) throw std::invalid_argument("realize: horizon must be >= 1");
        validate(spec_);
        if (const auto* g = std::get_if<env::GPTwoType>(&spec_)) {
            if (g->cm_var > 0.0) cm_.emplace(SEKernel{g->cm_var, g->tau_cm}, T);
            id_.emplace(SEKernel{g->id_var, g->tau_id}, T);
        } else if (const auto* f = std::get_if<env::FixedPlusGP>(&spec_)) {
            id_.emplace(SEKernel{1.0, f->tau}, T);
        }
    }

    const EnvSpec& spec() const { return spec_; }
    std::size_t horizon() const { return T_; }
    std::size_t arms() const { return num_arms(spec_); }

    LatentPath realize(Rng& rng) const {
        return std::visit([&](const auto& e) { return realize_impl(e, rng); }, spec_);
    }

private:
    LatentPath realize_impl(const env::GPTwoType& e, Rng& rng) const {
        const auto T = static_cast<Eigen::Index>(T_);
        const auto k = static_cast<Eigen::Index>(e.k);
        PathMeta meta;
        Vector cm = Vector::Zero(T);
        if (cm_) {
            cm = cm_->sample(rng);
            meta.jitter = cm_->factor().jitter;
        }
        Matrix id(T, k);
        for (Eigen::Index a = 0; a < k; ++a) id.col(a) = id_->sample(rng);
        meta.jitter = std::max(meta.jitter, id_->factor().jitter);
        Matrix mu = id.colwise() + cm;
        meta.common = std::move(cm);
        meta.idiosyncratic = std::move(id);
        return make_path(std::move(mu), std::move(meta));
    }

    LatentPath realize_impl(const env::AR1& e, Rng& rng) const {
        const auto T = static_cast<Eigen::Index>(T_);
        const auto k = static_cast<Eigen::Index>(e.k);
        Matrix th(T, k);
        const double sd0 = std::sqrt(e.sigma_xi_sq / (1.0 - e.alpha * e.alpha));
        const double sdx = std::sqrt(e.sigma_xi_sq);
        for (Eigen::Index a = 0; a < k; ++a) th(0, a) = sd0 * std_normal(rng);
        for (Eigen::Index t = 1; t < T; ++t)
            for (Eigen::Index a = 0; a < k; ++a) th(t, a) = e.alpha * th(t - 1, a) + sdx * std_normal(rng);
        PathMeta meta;
        meta.idiosyncratic = th;
        return make_path(std::move(th), std::move(meta));
    }

    LatentPath realize_impl(const env::MarkovSwitch& e, Rng& rng) const {
        const auto seq = sample_markov_switch_path(e.spec, T_, rng);
        Matrix mu = Matrix::Zero(static_cast<Eigen::Index>(T_), static_cast<Eigen::Index>(e.spec.k));
        for (std::size_t t = 0; t < T_; ++t) mu(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(seq[t])) = e.gap;
        return make_path(std::move(mu));
    }

    LatentPath realize_impl(const env::RenewalLB& e, Rng& rng) const {
        auto cps = sample_renewal_changepoints(e.spec, T_, rng);
        const double eps = e.spec.epsilon();
        Matrix mu = Matrix::Zero(static_cast<Eigen::Index>(T_), static_cast<Eigen::Index>(e.spec.k));
        for (std::size_t j = 0; j < cps.block_starts.size(); ++j) {
            const std::size_t begin = cps.block_starts[j] - 1;
            const std::size_t end = j + 1 < cps.block_starts.size() ? cps.block_starts[j + 1] - 1 : T_;
            for (std::size_t t = begin; t < end; ++t)
                mu(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(cps.block_arms[j])) = eps;
        }
        PathMeta meta;
        meta.changepoints = std::move(cps);
        return make_path(std::move(mu), std::move(meta));
    }

    LatentPath realize_impl(const env::ArticlePool& e, Rng& rng) const {
        auto pool = sample_article_pool(e.spec, T_, rng);
        PathMeta meta;
        meta.refresh = std::move(pool.refresh);
        return make_path(std::move(pool.ctr), std::move(meta));
    }

    LatentPath realize_impl(const env::FixedPlusGP& e, Rng& rng) const {
        const auto T = static_cast<Eigen::Index>(T_);
        const auto k = static_cast<Eigen::Index>(e.k);
        Vector fixed(k);
        const double v = std::sqrt(e.v_sq);
        for (Eigen::Index a = 0; a < k; ++a) fixed[a] = v * std_normal(rng);
        Matrix gp(T, k);
        for (Eigen::Index a = 0; a < k; ++a) gp.col(a) = id_->sample(rng);
        Matrix mu = gp.rowwise() + fixed.transpose();
        PathMeta meta;
        meta.fixed_means = std::move(fixed);
        meta.idiosyncratic = std::move(gp);
        meta.jitter = id_->factor().jitter;
        return make_path(std::move(mu), std::move(meta));
    }

    EnvSpec spec_;
    std::size_t T_;
    std::optional<GpSampler> cm_;
    std::optional<GpSampler> id_;
};

inline LatentPath realize(const EnvSpec& spec, std::size_t T, Rng& rng) {
    return EnvironmentSampler(spec, T).realize(rng);
}

/// t is the 0-based period index.
inline double draw_reward(const LatentPath& path, const RewardModel& model, std::size_t t, std::size_t a, Rng& rng) {
    if (t >= path.T || a >= path.k) throw std::out_of_range("draw_reward: period or arm out of range");
    const double m = path.mu(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(a));
    if (const auto* g = std::get_if<GaussianNoise>(&model)) return m + std::sqrt(g->sigma_sq) * std_normal(rng);
    if (!(m >= 0.0 && m <= 1.0)) throw std::domain_error("draw_reward: Bernoulli mean outside [0,1]");
    return bernoulli(rng, m) ? 1.0 : 0.0;
}

/// Per-period regret of `actions` against `benchmark` (may be negative).
inline double satisficing_regret_of_sequence(const LatentPath& path, const ActionSeq& actions,
                                             const ActionSeq& benchmark) {
    if (actions.size() != path.T || benchmark.size() != path.T)
        throw DimensionMismatch("satisficing_regret_of_sequence: sequence length differs from horizon");
    double total = 0.0;
    for (std::size_t t = 0; t < path.T; ++t) {
        const auto ti = static_cast<Eigen::Index>(t);
        total += path.mu(ti, static_cast<Eigen::Index>(benchmark[t])) - path.mu(ti, static_cast<Eigen::Index>(actions[t]));
    }
    return total / static_cast<double>(path.T);
}

/// Pathwise Cesaro-average regret against the optimal action sequence.
inline double regret_of_sequence(const LatentPath& path, const ActionSeq& actions) {
    return satisficing_regret_of_sequence(path, actions, path.opt);
}

/// Instantaneous regret mu*_t - mu_{t, a}.
inline double instant_regret(const LatentPath& path, std::size_t t, std::size_t a) {
    const auto ti = static_cast<Eigen::Index>(t);
    return path.mu(ti, static_cast<Eigen::Index>(path.opt[t])) - path.mu(ti, static_cast<Eigen::Index>(a));
}

// CSV: header t,mu_1..mu_k,opt with 1-based periods and arms.
inline std::string path_to_csv(const LatentPath& path) {
    std::vector<std::string> header{"t"};
    for (std::size_t a = 0; a < path.k; ++a) header.push_back("mu_" + std::to_string(a + 1));
    header.push_back("opt");
    csv::Writer w(header);
    for (std::size_t t = 0; t < path.T; ++t) {
        std::vector<std::string> row{std::to_string(t + 1)};
        for (std::size_t a = 0; a < path.k; ++a)
            row.push_back(csv::fmt(path.mu(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(a))));
        row.push_back(std::to_string(path.opt[t] + 1));
        w.row(row);
    }
    return w.str();
}

/// Parses the format written by path_to_csv. The opt column must agree with
/// the argmax of each row.
inline LatentPath path_from_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("path csv: empty input");
    const auto header = csv::split(line);
    if (header.size() < 4 || header.front() != "t" || header.back() != "opt")
        throw std::invalid_argument("path csv: header must be t,mu_1..mu_k,opt with k >= 2");
    const std::size_t k = header.size() - 2;
    for (std::size_t a = 0; a < k; ++a)
        if (header[a + 1] != "mu_" + std::to_string(a + 1)) throw std::invalid_argument("path csv: bad column " + header[a + 1]);

    std::vector<std::vector<double>> rows;
    ActionSeq opt;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        const auto cells = csv::split(line);
        if (cells.size() != k + 2) throw std::invalid_argument("path csv: ragged row");
        if (static_cast<std::size_t>(csv::parse_double(cells[0])) != rows.size() + 1)
            throw std::invalid_argument("path csv: periods must be 1,2,...");
        std::vector<double> r(k);
        for (std::size_t a = 0; a < k; ++a) r[a] = csv::parse_double(cells[a + 1]);
        rows.push_back(std::move(r));
        const double o = csv::parse_double(cells.back());
        if (!(o >= 1.0 && o <= static_cast<double>(k))) throw std::invalid_argument("path csv: opt out of range");
        opt.push_back(static_cast<std::size_t>(o) - 1);
    }
    if (rows.empty()) throw std::invalid_argument("path csv: no rows");
    Matrix mu(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(k));
    for (std::size_t t = 0; t < rows.size(); ++t)
        for (std::size_t a = 0; a < k; ++a) mu(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(a)) = rows[t][a];
    LatentPath p = make_path(std::move(mu));
    for (std::size_t t = 0; t < p.T; ++t) {
        const auto ti = static_cast<Eigen::Index>(t);
        if (p.mu(ti, static_cast<Eigen::Index>(opt[t])) != p.mu(ti, static_cast<Eigen::Index>(p.opt[t])))
            throw std::invalid_argument("path csv: opt is not an argmax at period " + std::to_string(t + 1));
    }
    p.opt = std::move(opt);
    return p;
}

}  // namespace nsbandit
