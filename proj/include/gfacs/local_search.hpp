#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "gfacs/construct.hpp"
#include "gfacs/parallel.hpp"
#include "gfacs/problems.hpp"
#include "gfacs/rng.hpp"

namespace gfacs {

struct LsConfig {
    int max_iters = 1000;     // improving moves applied before giving up
    int n_perturb = 5;        // kick+reoptimize cycles in refine_iterated
    int n_destroy = 0;        // 0 -> ceil(n/4)
    int rounds = 10;          // destroy-and-repair rounds
    int top_k = 1;            // survivors kept between rounds
    int batch_width = 10;     // candidates spawned per survivor per round
    double delta_max = 5.0;   // final repair sharpening exponent
};

/// First-improvement 2-opt on a tour: scans exchanges in row-major (i, j)
/// order, applies the first one that shortens the tour, and rescans, until no
/// exchange improves or max_iters moves were applied.
inline Solution two_opt(const ProblemInstance& inst, const Solution& tour, int max_iters = 1000) {
    require_valid(inst, tour);
    const auto& t = inst.tsp();
    int n = t.n();
    std::vector<int> seq = tour.seq;
    if (n >= 4) {
        int moves = 0;
        bool improved = true;
        while (improved && moves < max_iters) {
            improved = false;
            for (int i = 0; i < n - 1 && !improved; ++i) {
                for (int j = i + 1; j < n && !improved; ++j) {
                    if (i == 0 && j == n - 1) continue;  // same edge pair
                    int a = seq[static_cast<std::size_t>(i)];
                    int b = seq[static_cast<std::size_t>(i + 1)];
                    int c = seq[static_cast<std::size_t>(j)];
                    int d = seq[static_cast<std::size_t>((j + 1) % n)];
                    double delta = t.distance(a, c) + t.distance(b, d) -
                                   t.distance(a, b) - t.distance(c, d);
                    if (delta < -1e-12) {
                        std::reverse(seq.begin() + i + 1, seq.begin() + j + 1);
                        ++moves;
                        improved = true;
                    }
                }
            }
        }
    }
    return solution_from_seq(inst, seq);
}

/// Double-bridge kick: cuts the tour into four segments and reorders them so
/// that exactly four edges change. Identity for n < 8.
inline Solution perturb(const ProblemInstance& inst, const Solution& tour, RngStream& rng) {
    require_valid(inst, tour);
    int n = inst.n_elements();
    if (n < 8) return tour;
    int p, q, r;
    do {
        p = rng.uniform_int(1, n - 3);
        q = rng.uniform_int(p + 1, n - 2);
        r = rng.uniform_int(q + 1, n - 1);
        // these cut patterns re-create a removed edge, shrinking the 4-edge diff
    } while ((p == 1 && r == n - 1) || (q == n - 2 && r == n - 1) ||
             (q == p + 1 && r == q + 1) || (p == 1 && q == 2));
    const std::vector<int>& s = tour.seq;
    std::vector<int> seq;
    seq.reserve(static_cast<std::size_t>(n));
    seq.insert(seq.end(), s.begin(), s.begin() + p);
    seq.insert(seq.end(), s.begin() + r, s.end());
    seq.insert(seq.end(), s.begin() + q, s.begin() + r);
    seq.insert(seq.end(), s.begin() + p, s.begin() + q);
    return solution_from_seq(inst, seq);
}

namespace detail {

inline double route_leg(const CvrpInstance& c, const std::vector<int>& route, int pos) {
    // distance of the leg entering position pos (depot at the ends)
    int from = pos == 0 ? 0 : route[static_cast<std::size_t>(pos - 1)];
    int to = pos == static_cast<int>(route.size()) ? 0 : route[static_cast<std::size_t>(pos)];
    return c.distance(from, to);
}

}  // namespace detail

/// First-improvement scan over intra-route 2-opt, inter-route relocate and
/// inter-route swap, in that fixed order, until no move improves or max_iters
/// moves were applied. Capacity is respected throughout.
inline Solution cvrp_local_search(const ProblemInstance& inst, const Solution& sol,
                                  int max_iters = 1000) {
    require_valid(inst, sol);
    const auto& c = inst.cvrp();
    auto routes = detail::split_routes(sol.seq);
    std::vector<int> loads(routes.size(), 0);
    for (std::size_t r = 0; r < routes.size(); ++r)
        for (int id : routes[r]) loads[r] += c.demand_of(id);

    int moves = 0;
    bool improved = true;
    while (improved && moves < max_iters) {
        improved = false;

        // intra-route 2-opt (reverse a customer segment; depot legs fixed)
        for (std::size_t r = 0; r < routes.size() && !improved; ++r) {
            auto& route = routes[r];
            int len = static_cast<int>(route.size());
            for (int i = 0; i < len - 1 && !improved; ++i) {
                for (int j = i + 1; j < len && !improved; ++j) {
                    int before = i == 0 ? 0 : route[static_cast<std::size_t>(i - 1)];
                    int after = j == len - 1 ? 0 : route[static_cast<std::size_t>(j + 1)];
                    int ci = route[static_cast<std::size_t>(i)];
                    int cj = route[static_cast<std::size_t>(j)];
                    double delta = c.distance(before, cj) + c.distance(ci, after) -
                                   c.distance(before, ci) - c.distance(cj, after);
                    if (delta < -1e-12) {
                        std::reverse(route.begin() + i, route.begin() + j + 1);
                        ++moves;
                        improved = true;
                    }
                }
            }
        }

        // relocate one customer into another route
        for (std::size_t r1 = 0; r1 < routes.size() && !improved; ++r1) {
            for (int i = 0; i < static_cast<int>(routes[r1].size()) && !improved; ++i) {
                int cust = routes[r1][static_cast<std::size_t>(i)];
                int dem = c.demand_of(cust);
                double remove_gain = detail::route_leg(c, routes[r1], i) +
                                     detail::route_leg(c, routes[r1], i + 1);
                int before = i == 0 ? 0 : routes[r1][static_cast<std::size_t>(i - 1)];
                int after = i == static_cast<int>(routes[r1].size()) - 1
                                ? 0
                                : routes[r1][static_cast<std::size_t>(i + 1)];
                double bridge = c.distance(before, after);
                for (std::size_t r2 = 0; r2 < routes.size() && !improved; ++r2) {
                    if (r2 == r1 || loads[r2] + dem > c.capacity) continue;
                    for (int p = 0; p <= static_cast<int>(routes[r2].size()) && !improved; ++p) {
                        int x = p == 0 ? 0 : routes[r2][static_cast<std::size_t>(p - 1)];
                        int y = p == static_cast<int>(routes[r2].size())
                                    ? 0
                                    : routes[r2][static_cast<std::size_t>(p)];
                        double delta = bridge - remove_gain + c.distance(x, cust) +
                                       c.distance(cust, y) - c.distance(x, y);
                        if (delta < -1e-12) {
                            routes[r1].erase(routes[r1].begin() + i);
                            routes[r2].insert(routes[r2].begin() + p, cust);
                            loads[r1] -= dem;
                            loads[r2] += dem;
                            ++moves;
                            improved = true;
                        }
                    }
                }
            }
        }

        // swap customers between two routes
        for (std::size_t r1 = 0; r1 + 1 < routes.size() && !improved; ++r1) {
            for (std::size_t r2 = r1 + 1; r2 < routes.size() && !improved; ++r2) {
                for (int i = 0; i < static_cast<int>(routes[r1].size()) && !improved; ++i) {
                    for (int j = 0; j < static_cast<int>(routes[r2].size()) && !improved; ++j) {
                        int c1 = routes[r1][static_cast<std::size_t>(i)];
                        int c2 = routes[r2][static_cast<std::size_t>(j)];
                        int d1 = c.demand_of(c1), d2 = c.demand_of(c2);
                        if (loads[r1] - d1 + d2 > c.capacity ||
                            loads[r2] - d2 + d1 > c.capacity)
                            continue;
                        auto around = [&](const std::vector<int>& route, int pos, int cust) {
                            int before = pos == 0 ? 0 : route[static_cast<std::size_t>(pos - 1)];
                            int after = pos == static_cast<int>(route.size()) - 1
                                            ? 0
                                            : route[static_cast<std::size_t>(pos + 1)];
                            return c.distance(before, cust) + c.distance(cust, after);
                        };
                        double delta = around(routes[r1], i, c2) + around(routes[r2], j, c1) -
                                       around(routes[r1], i, c1) - around(routes[r2], j, c2);
                        if (delta < -1e-12) {
                            std::swap(routes[r1][static_cast<std::size_t>(i)],
                                      routes[r2][static_cast<std::size_t>(j)]);
                            loads[r1] += d2 - d1;
                            loads[r2] += d1 - d2;
                            ++moves;
                            improved = true;
                        }
                    }
                }
            }
        }
    }

    std::vector<int> seq;
    for (const auto& route : routes) {
        if (route.empty()) continue;
        if (!seq.empty()) seq.push_back(0);
        seq.insert(seq.end(), route.begin(), route.end());
    }
    return solution_from_seq(inst, seq);
}

/// Truncates a uniformly chosen symmetric reading of `sol` by its last
/// n_destroy actions and replays the surviving prefix. n_destroy must leave
/// at least one action; 0 reproduces the complete state.
inline PartialState destroy(const ProblemInstance& inst, const Solution& sol, int n_destroy,
                            RngStream& rng) {
    Trajectory reading = sample_backward_trajectory(inst, sol, rng);
    int len = static_cast<int>(reading.actions.size());
    if (n_destroy < 0 || n_destroy >= len)
        throw ConfigError("destroy: n_destroy must lie in [0, trajectory length)");
    PartialState st = PartialState::initial(inst);
    for (int t = 0; t < len - n_destroy; ++t)
        st.apply(reading.actions[static_cast<std::size_t>(t)]);
    return st;
}

/// Completes a partial state by sampling the remaining moves from
/// (rho * eta)^sharpen. sharpen == 1 is exactly the construction law.
inline Solution repair(const ProblemInstance& inst, const PartialState& partial,
                       const Heatmap& eta, const Pheromone& rho, double sharpen,
                       RngStream& rng) {
    detail::check_edge_shapes(inst, eta, rho);
    if (sharpen <= 0.0) throw ConfigError("repair: sharpening exponent must be positive");
    PartialState st = partial;
    detail::sample_from_state(st, eta, rho, sharpen, rng);
    return solution_from_seq(inst, st.actions);
}

/// Population destroy-and-repair: every surviving solution spawns batch_width
/// rebuilt candidates per round (sharpening ramps from 1 to delta_max);
/// parents compete with children and the top_k lowest energies survive.
/// Returns the final survivors, best first. best_trace (optional) records the
/// best energy after each round and is non-increasing.
inline std::vector<Solution> destroy_and_repair(const ProblemInstance& inst,
                                                const std::vector<Solution>& sols,
                                                const Heatmap& eta, const Pheromone& rho,
                                                const LsConfig& cfg, RngStream& rng,
                                                std::vector<double>* best_trace = nullptr) {
    detail::check_edge_shapes(inst, eta, rho);
    if (sols.empty()) throw ConfigError("destroy_and_repair: need at least one solution");
    if (cfg.top_k < 1 || cfg.batch_width < 1) throw ConfigError("destroy_and_repair: bad config");

    struct Ranked {
        Solution sol;
        double e;
    };
    std::vector<Ranked> pool;
    pool.reserve(sols.size());
    for (const auto& s : sols) pool.push_back({s, energy(inst, s)});
    auto rank = [](std::vector<Ranked>& v) {
        std::stable_sort(v.begin(), v.end(),
                         [](const Ranked& a, const Ranked& b) { return a.e < b.e; });
    };
    rank(pool);

    int n_destroy = cfg.n_destroy > 0 ? cfg.n_destroy : (inst.n_elements() + 3) / 4;
    for (int r = 1; r <= cfg.rounds; ++r) {
        double sharpen = cfg.rounds > 1
                             ? 1.0 + (cfg.delta_max - 1.0) * (r - 1) / (cfg.rounds - 1)
                             : 1.0;
        int parents = std::min<int>(cfg.top_k, static_cast<int>(pool.size()));
        int width = cfg.batch_width;
        std::vector<Ranked> children(static_cast<std::size_t>(parents * width));
        std::uint64_t round_seed = rng.next();
        parallel_for(parents * width, [&](int slot) {
            int parent = slot / width;
            RngStream local(derive_seed(round_seed, "repair", static_cast<std::uint64_t>(slot)));
            const Solution& base = pool[static_cast<std::size_t>(parent)].sol;
            int len = static_cast<int>(base.seq.size());  // == trajectory length
            int nd = std::min(n_destroy, len - 1);
            PartialState st = destroy(inst, base, nd, local);
            Solution rebuilt = repair(inst, st, eta, rho, sharpen, local);
            double e = energy(inst, rebuilt);
            children[static_cast<std::size_t>(slot)] = {std::move(rebuilt), e};
        });
        pool.resize(static_cast<std::size_t>(parents));
        pool.insert(pool.end(), std::make_move_iterator(children.begin()),
                    std::make_move_iterator(children.end()));
        rank(pool);
        if (static_cast<int>(pool.size()) > cfg.top_k)
            pool.resize(static_cast<std::size_t>(cfg.top_k));
        if (best_trace) best_trace->push_back(pool.front().e);
    }

    std::vector<Solution> out;
    out.reserve(pool.size());
    for (auto& p : pool) out.push_back(std::move(p.sol));
    return out;
}

/// Problem-appropriate refinement handle used by training and by the colony.
struct LocalSearch {
    enum class Kind { Identity, TwoOpt, CvrpMoves, DestroyRepair };
    Kind kind = Kind::Identity;
    LsConfig cfg{};

    static LocalSearch identity() { return {}; }
    static LocalSearch for_problem(ProblemKind pk, LsConfig cfg = {}) {
        LocalSearch ls;
        ls.cfg = cfg;
        switch (pk) {
            case ProblemKind::Tsp: ls.kind = Kind::TwoOpt; break;
            case ProblemKind::Cvrp: ls.kind = Kind::CvrpMoves; break;
            default: ls.kind = Kind::DestroyRepair; break;
        }
        return ls;
    }

    /// Single refinement pass (used on every training sample).
    Solution refine(const ProblemInstance& inst, const Solution& sol, const Heatmap& eta,
                    const Pheromone& rho, RngStream& rng) const {
        switch (kind) {
            case Kind::Identity:
                return sol;
            case Kind::TwoOpt:
                return two_opt(inst, sol, cfg.max_iters);
            case Kind::CvrpMoves:
                return cvrp_local_search(inst, sol, cfg.max_iters);
            case Kind::DestroyRepair: {
                auto out = destroy_and_repair(inst, {sol}, eta, rho, cfg, rng);
                return out.front();
            }
        }
        return sol;
    }

    /// Heavier refinement for the search phase: adds n_perturb
    /// kick-and-reoptimize cycles on tours, keeping the best.
    Solution refine_iterated(const ProblemInstance& inst, const Solution& sol,
                             const Heatmap& eta, const Pheromone& rho, RngStream& rng) const {
        if (kind != Kind::TwoOpt) return refine(inst, sol, eta, rho, rng);
        Solution best = two_opt(inst, sol, cfg.max_iters);
        double best_e = energy(inst, best);
        for (int it = 0; it < cfg.n_perturb; ++it) {
            Solution kicked = two_opt(inst, perturb(inst, best, rng), cfg.max_iters);
            double e = energy(inst, kicked);
            if (e < best_e) {
                best = std::move(kicked);
                best_e = e;
            }
        }
        return best;
    }
};

}  // namespace gfacs
