#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <queue>
#include <vector>

#include "scrip/distribution.hpp"
#include "scrip/error.hpp"
#include "scrip/params.hpp"
#include "scrip/rational.hpp"

namespace scrip {

// Small-instance chain over full holdings assignments, built from the two
// elementary moves with exact rational probabilities:
//
//   posting transfer  i -> j, one token:   1 / (n * m)
//       m = agents other than i with room to receive
//   violation payment y -> w, the reward:  b / (m * m')
//       m  = agents other than y below the volunteering threshold
//       m' = agents other than w holding at least the reward
//
// Raw elementary weights can sum past 1 in token-rich states, so every edge
// carries a single chain-wide lazy factor c = min(1, 1/max row sum); the
// remainder of each row is a self-loop. A constant factor preserves the
// pairwise symmetry the reversibility argument needs and leaves the
// stationary distribution untouched.
//
// In the strategic setting both move families pick up the monitored-round
// factor 1 - 1/kappa (kappa must be rational for the arithmetic to stay
// exact).
struct MarkovChain {
    int n = 0;
    long long unit = 1;
    long long cap_units = 0;
    long long k_units = 0;
    long long reward_units = 0;
    Rational lazy_factor{1};

    std::vector<std::vector<long long>> states;  // holdings assignments, base units
    // Per state: (target state index, probability), self-loop excluded.
    std::vector<std::vector<std::pair<int32_t, Rational>>> edges;
    std::vector<Rational> self_loop;
    int32_t start_index = 0;

    size_t state_count() const { return states.size(); }

    std::optional<Rational> edge_prob(int32_t from, int32_t to) const {
        for (const auto& [t, p] : edges[from])
            if (t == to) return p;
        return std::nullopt;
    }
};

namespace detail {

inline bool chain_recipient_ok(long long holdings, long long unit, long long cap) {
    return holdings + unit < cap;
}

}  // namespace detail

// Builds the reachable closure from `start_units` under all-agents-threshold-k
// play. Guarded at 1e6 states.
inline MarkovChain enumerate_chain(const std::vector<long long>& start_units, const GameParams& params,
                                   std::optional<Rational> strategic_kappa = std::nullopt,
                                   size_t max_states = 1000000) {
    MarkovChain chain;
    chain.n = static_cast<int>(start_units.size());
    chain.unit = params.unit();
    chain.cap_units = params.cap_units();
    chain.k_units = params.k_units();
    chain.reward_units = params.reward_units();

    Rational scale{1};
    if (params.strategic()) {
        if (!strategic_kappa) throw RangeError("strategic chain needs kappa as an exact rational");
        scale = Rational(1) - strategic_kappa->reciprocal();
    }

    const int n = chain.n;
    const long long unit = chain.unit;
    const long long cap = chain.cap_units;
    const long long k_units = chain.k_units;
    const long long reward = chain.reward_units;
    const Rational bad = params.violation_prob();

    std::map<std::vector<long long>, int32_t> index;
    auto intern = [&](const std::vector<long long>& s) {
        auto it = index.find(s);
        if (it != index.end()) return it->second;
        if (chain.states.size() >= max_states)
            throw StateSpaceTooLarge("reachable state space exceeds " + std::to_string(max_states));
        int32_t id = static_cast<int32_t>(chain.states.size());
        index.emplace(s, id);
        chain.states.push_back(s);
        return id;
    };
    chain.start_index = intern(start_units);

    // Each elementary move from the state at `head`: (from, to, amount, prob).
    // Copies the state: visitors may grow chain.states and invalidate references.
    auto for_each_move = [&](size_t head, auto&& visit) {
        const std::vector<long long> s = chain.states[head];
        for (int i = 0; i < n; ++i) {
            if (s[i] < unit) continue;
            int m = 0;
            for (int a = 0; a < n; ++a)
                if (a != i && detail::chain_recipient_ok(s[a], unit, cap)) ++m;
            if (m == 0) continue;
            Rational p = scale * Rational(1, static_cast<long long>(n) * m);
            for (int j = 0; j < n; ++j)
                if (j != i && detail::chain_recipient_ok(s[j], unit, cap)) visit(i, j, unit, p);
        }
        for (int y = 0; y < n; ++y) {
            if (s[y] < reward) continue;
            long long vol = 0;
            for (int a = 0; a < n; ++a)
                if (a != y && s[a] < k_units) ++vol;
            if (vol == 0) continue;
            for (int w = 0; w < n; ++w) {
                if (w == y || s[w] >= k_units) continue;
                long long payers = 0;
                for (int a = 0; a < n; ++a)
                    if (a != w && s[a] >= reward) ++payers;
                visit(y, w, reward, scale * bad / Rational(vol * payers));
            }
        }
    };

    // Pass 1: reachability closure.
    for (size_t head = 0; head < chain.states.size(); ++head) {
        std::vector<long long> scratch = chain.states[head];
        for_each_move(head, [&](int from, int to, long long amount, const Rational&) {
            scratch[from] -= amount;
            scratch[to] += amount;
            intern(scratch);
            scratch[from] += amount;
            scratch[to] -= amount;
        });
    }

    // Pass 2: raw elementary weights (scaled below).
    chain.edges.assign(chain.states.size(), {});
    std::vector<Rational> row_sums(chain.states.size(), Rational(0));
    for (size_t head = 0; head < chain.states.size(); ++head) {
        std::vector<long long> scratch = chain.states[head];
        for_each_move(head, [&](int from, int to, long long amount, const Rational& prob) {
            scratch[from] -= amount;
            scratch[to] += amount;
            int32_t target = index.at(scratch);
            scratch[from] += amount;
            scratch[to] -= amount;
            auto& row = chain.edges[head];
            row_sums[head] += prob;
            for (auto& [t, p] : row)
                if (t == target) {
                    p += prob;
                    return;
                }
            row.emplace_back(target, prob);
        });
    }

    Rational max_sum{0};
    for (const auto& rs : row_sums)
        if (rs > max_sum) max_sum = rs;
    chain.lazy_factor = max_sum > Rational(1) ? max_sum.reciprocal() : Rational(1);

    chain.self_loop.resize(chain.states.size());
    for (size_t i = 0; i < chain.states.size(); ++i) {
        Rational total{0};
        for (auto& [t, p] : chain.edges[i]) {
            p *= chain.lazy_factor;
            total += p;
        }
        chain.self_loop[i] = Rational(1) - total;
        if (chain.self_loop[i] < Rational(0)) throw Error("chain row exceeds 1 after scaling");
    }
    return chain;
}

// Convenience overload: n_small agents, total tokens spread as evenly as the
// integers allow (agent 0 gets the remainder first).
inline MarkovChain enumerate_chain(int n_small, long long total_tokens, const GameParams& params,
                                   std::optional<Rational> strategic_kappa = std::nullopt,
                                   size_t max_states = 1000000) {
    std::vector<long long> start(static_cast<size_t>(n_small), 0);
    long long units = total_tokens * params.unit();
    long long base = units / n_small, rem = units % n_small;
    for (int i = 0; i < n_small; ++i) start[static_cast<size_t>(i)] = base + (i < rem ? 1 : 0);
    return enumerate_chain(start, params, strategic_kappa, max_states);
}

struct ReversibilityReport {
    Rational max_asymmetry{0};
    int32_t worst_from = -1;
    int32_t worst_to = -1;
    bool exact() const { return max_asymmetry.is_zero(); }
};

// Maximum |P(s -> s') - P(s' -> s)| over distinct state pairs, in exact
// arithmetic. Zero certifies reversibility (and with it, the uniform
// stationary distribution).
inline ReversibilityReport check_reversibility(const MarkovChain& chain) {
    ReversibilityReport rep;
    for (int32_t s = 0; s < static_cast<int32_t>(chain.state_count()); ++s) {
        for (const auto& [t, p] : chain.edges[s]) {
            Rational back = chain.edge_prob(t, s).value_or(Rational(0));
            Rational diff = p - back;
            if (diff < Rational(0)) diff = -diff;
            if (diff > rep.max_asymmetry) {
                rep.max_asymmetry = diff;
                rep.worst_from = s;
                rep.worst_to = t;
            }
        }
    }
    return rep;
}

struct StationaryResult {
    std::vector<double> pi;                // per state
    double max_uniform_deviation = 0.0;    // max |pi - 1/N|
    DistributionVector holdings;           // per-agent token-bucket marginal
    int64_t iterations = 0;
};

namespace detail {

inline void require_irreducible_aperiodic(const MarkovChain& chain) {
    const size_t N = chain.state_count();
    // Forward reachability holds by construction; check return paths.
    std::vector<std::vector<int32_t>> rev(N);
    for (int32_t s = 0; s < static_cast<int32_t>(N); ++s)
        for (const auto& [t, p] : chain.edges[s]) rev[static_cast<size_t>(t)].push_back(s);
    std::vector<char> seen(N, 0);
    std::queue<int32_t> q;
    q.push(chain.start_index);
    seen[static_cast<size_t>(chain.start_index)] = 1;
    size_t count = 1;
    while (!q.empty()) {
        int32_t s = q.front();
        q.pop();
        for (int32_t p : rev[static_cast<size_t>(s)])
            if (!seen[static_cast<size_t>(p)]) {
                seen[static_cast<size_t>(p)] = 1;
                ++count;
                q.push(p);
            }
    }
    if (count != N) throw NotIrreducible("some state cannot return to the start state");

    // Period = gcd over edges of d(u) + 1 - d(v) on a BFS tree (self-loops
    // contribute 1 and settle it immediately).
    std::vector<int64_t> depth(N, -1);
    std::queue<int32_t> bfs;
    bfs.push(chain.start_index);
    depth[static_cast<size_t>(chain.start_index)] = 0;
    while (!bfs.empty()) {
        int32_t s = bfs.front();
        bfs.pop();
        for (const auto& [t, p] : chain.edges[s])
            if (depth[static_cast<size_t>(t)] < 0) {
                depth[static_cast<size_t>(t)] = depth[static_cast<size_t>(s)] + 1;
                bfs.push(t);
            }
    }
    int64_t g = 0;
    for (int32_t s = 0; s < static_cast<int32_t>(N); ++s) {
        if (!chain.self_loop[static_cast<size_t>(s)].is_zero()) g = std::gcd(g, int64_t{1});
        for (const auto& [t, p] : chain.edges[s])
            g = std::gcd(g, depth[static_cast<size_t>(s)] + 1 - depth[static_cast<size_t>(t)]);
    }
    if (g != 1) throw Periodic("chain period " + std::to_string(g));
}

}  // namespace detail

// Solves pi P = pi by power iteration from a point mass on the start state
// (so uniformity is a finding, not an input), then aggregates the per-agent
// holdings marginal.
inline StationaryResult stationary_distribution(const MarkovChain& chain, double tol = 1e-14,
                                                int64_t max_iter = 2000000) {
    detail::require_irreducible_aperiodic(chain);
    const size_t N = chain.state_count();
    StationaryResult res;
    std::vector<double> pi(N, 0.0), next(N, 0.0);
    pi[static_cast<size_t>(chain.start_index)] = 1.0;

    std::vector<double> self(N);
    for (size_t i = 0; i < N; ++i) self[i] = chain.self_loop[i].to_double();
    std::vector<std::vector<std::pair<int32_t, double>>> ed(N);
    for (size_t i = 0; i < N; ++i) {
        ed[i].reserve(chain.edges[i].size());
        for (const auto& [t, p] : chain.edges[i]) ed[i].emplace_back(t, p.to_double());
    }

    for (res.iterations = 0; res.iterations < max_iter; ++res.iterations) {
        std::fill(next.begin(), next.end(), 0.0);
        for (size_t s = 0; s < N; ++s) {
            double mass = pi[s];
            if (mass == 0.0) continue;
            next[s] += mass * self[s];
            for (const auto& [t, p] : ed[s]) next[static_cast<size_t>(t)] += mass * p;
        }
        double delta = 0.0;
        for (size_t s = 0; s < N; ++s) delta = std::max(delta, std::abs(next[s] - pi[s]));
        pi.swap(next);
        if (delta < tol) break;
    }

    const double uniform = 1.0 / static_cast<double>(N);
    for (double x : pi) res.max_uniform_deviation = std::max(res.max_uniform_deviation, std::abs(x - uniform));

    size_t buckets = static_cast<size_t>(chain.cap_units / chain.unit) + 1;
    res.holdings = DistributionVector(buckets);
    for (size_t s = 0; s < N; ++s)
        for (long long h : chain.states[s])
            res.holdings.p[static_cast<size_t>(h / chain.unit)] += pi[s] / chain.n;
    res.pi = std::move(pi);
    return res;
}

}  // namespace scrip
