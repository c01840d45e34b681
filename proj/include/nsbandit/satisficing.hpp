#pragma once

// Satisficing action sequences computed from a (sampled or true) mean-reward
// matrix: the best sequence under a switch budget, and the "ignore small
// suboptimality" sequence driven by a distortion level.

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "nsbandit/environment.hpp"
#include "nsbandit/gaussian.hpp"

namespace nsbandit {

/// 1 + number of t with seq[t] != seq[t-1].
inline std::size_t switch_count(const ActionSeq& seq) {
    if (seq.empty()) throw std::invalid_argument("switch_count: empty sequence");
    std::size_t s = 1;
    for (std::size_t t = 1; t < seq.size(); ++t) s += seq[t] != seq[t - 1] ? 1 : 0;
    return s;
}

/// argmax over sequences with switch_count <= m of sum_t mu(t, a_t).
/// Ties: fewer switches first, then the lexicographically smallest sequence.
inline ActionSeq dp_best_sequence(const Matrix& mu, std::size_t m) {
    if (m < 1) throw std::invalid_argument("dp_best_sequence: switch budget must be >= 1");
    const auto T = static_cast<std::size_t>(mu.rows());
    const auto k = static_cast<std::size_t>(mu.cols());
    if (T == 0) return {};
    if (k == 0) throw std::invalid_argument("dp_best_sequence: no arms");
    const std::size_t R = std::min(m - 1, T - 1) + 1;  // remaining-switch allowance 0..R-1

    struct Cell {
        double value;
        std::size_t switches;
    };
    auto better = [](const Cell& x, const Cell& y) {
        return x.value > y.value || (x.value == y.value && x.switches < y.switches);
    };
    auto same = [](const Cell& x, const Cell& y) { return x.value == y.value && x.switches == y.switches; };

    // best[t][a][r]: best suffix from period t when a_t = a with r switches left
    std::vector<Cell> best(T * k * R);
    auto at = [&](std::size_t t, std::size_t a, std::size_t r) -> Cell& { return best[(t * k + a) * R + r]; };
    auto mu_at = [&](std::size_t t, std::size_t a) {
        return mu(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(a));
    };

    auto continuation = [&](std::size_t t, std::size_t a, std::size_t r, std::size_t b) -> std::optional<Cell> {
        if (b == a) {
            const Cell& n = at(t + 1, b, r);
            return Cell{mu_at(t, a) + n.value, n.switches};
        }
        if (r == 0) return std::nullopt;
        const Cell& n = at(t + 1, b, r - 1);
        return Cell{mu_at(t, a) + n.value, n.switches + 1};
    };

    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t r = 0; r < R; ++r) at(T - 1, a, r) = {mu_at(T - 1, a), 0};
    for (std::size_t t = T - 1; t-- > 0;) {
        for (std::size_t a = 0; a < k; ++a) {
            for (std::size_t r = 0; r < R; ++r) {
                Cell c{-std::numeric_limits<double>::infinity(), 0};
                bool first = true;
                for (std::size_t b = 0; b < k; ++b) {
                    auto cand = continuation(t, a, r, b);
                    if (cand && (first || better(*cand, c))) {
                        c = *cand;
                        first = false;
                    }
                }
                at(t, a, r) = c;
            }
        }
    }

    ActionSeq seq(T);
    const std::size_t r0 = R - 1;
    std::size_t a = 0;
    for (std::size_t b = 1; b < k; ++b)
        if (better(at(0, b, r0), at(0, a, r0))) a = b;
    seq[0] = a;
    std::size_t r = r0;
    for (std::size_t t = 0; t + 1 < T; ++t) {
        const Cell target = at(t, a, r);
        std::size_t next = k;
        for (std::size_t b = 0; b < k; ++b) {
            auto cand = continuation(t, a, r, b);
            if (cand && same(*cand, target)) {
                next = b;
                break;
            }
        }
        if (next == k) throw std::logic_error("dp_best_sequence: reconstruction failed");
        if (next != a) --r;
        a = next;
        seq[t + 1] = a;
    }
    return seq;
}

/// Keeps the incumbent while its suboptimality is at most D, otherwise moves
/// to the row argmax. Equality keeps the incumbent.
inline ActionSeq sts_distortion_target(const Matrix& mu, double D) {
    if (!(D >= 0.0)) throw std::invalid_argument("sts_distortion_target: D must be >= 0");
    const auto T = static_cast<std::size_t>(mu.rows());
    ActionSeq seq(T);
    if (T == 0) return seq;
    seq[0] = argmax_row(mu.row(0));
    for (std::size_t s = 1; s < T; ++s) {
        const auto row = mu.row(static_cast<Eigen::Index>(s));
        const std::size_t best = argmax_row(row);
        const std::size_t prev = seq[s - 1];
        seq[s] = row[static_cast<Eigen::Index>(prev)] >= row[static_cast<Eigen::Index>(best)] - D ? prev : best;
    }
    return seq;
}

}  // namespace nsbandit
