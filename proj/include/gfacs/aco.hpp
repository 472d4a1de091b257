#pragma once

#include <chrono>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gfacs/construct.hpp"
#include "gfacs/gfn_train.hpp"
#include "gfacs/local_search.hpp"
#include "gfacs/metrics.hpp"
#include "gfacs/parallel.hpp"
#include "gfacs/problems.hpp"
#include "gfacs/rng.hpp"

namespace gfacs {

enum class DepositRule { AntSystem, Elitist, MaxMin };

inline DepositRule deposit_rule_from_string(const std::string& s) {
    if (s == "as") return DepositRule::AntSystem;
    if (s == "elitist") return DepositRule::Elitist;
    if (s == "maxmin") return DepositRule::MaxMin;
    throw ConfigError("unknown deposit rule '" + s + "'");
}

struct AcoConfig {
    int n_ants = 100;
    int n_rounds = 100;
    double evaporation = 0.1;               // trail fraction lost per round
    double deposit_scale = 1.0;             // C in C / f(solution)
    DepositRule rule = DepositRule::AntSystem;
    std::optional<double> elite_weight;     // Elitist bonus; default n_ants / 10
    double tau_min = 0.0;                   // MAX-MIN clamp; 0 -> adaptive
    double tau_max = 0.0;
    bool use_ls = false;
    bool ls_all_ants = false;               // refine whole batch, not just the best
    std::uint64_t seed = 0;

    void validate() const {
        if (n_ants < 1) throw ConfigError("aco: n_ants must be >= 1");
        if (n_rounds < 0) throw ConfigError("aco: n_rounds must be >= 0");
        if (evaporation <= 0.0 || evaporation >= 1.0)
            throw ConfigError("aco: evaporation must lie in (0, 1)");
        if (deposit_scale <= 0.0) throw ConfigError("aco: deposit_scale must be positive");
        if ((tau_min != 0.0 || tau_max != 0.0) && tau_min >= tau_max)
            throw ConfigError("aco: tau_min must be below tau_max");
    }
};

inline Pheromone init_pheromone(int n) {
    if (n < 2) throw ConfigError("init_pheromone: need n >= 2");
    return Pheromone(n, 1.0);
}

namespace detail {

/// Division guard: a zero-cost solution (possible for tardiness objectives)
/// deposits a large finite amount instead of infinity.
inline constexpr double kMinDepositCost = 1e-9;

/// Directed transitions of a complete solution, including the closing TSP
/// edge, CVRP depot legs and the virtual-start move of order problems.
inline std::vector<std::pair<int, int>> solution_transitions(const ProblemInstance& inst,
                                                             const Solution& sol) {
    std::vector<std::pair<int, int>> edges;
    switch (inst.kind()) {
        case ProblemKind::Tsp: {
            int n = static_cast<int>(sol.seq.size());
            for (int i = 0; i < n; ++i)
                edges.emplace_back(sol.seq[static_cast<std::size_t>(i)],
                                   sol.seq[static_cast<std::size_t>((i + 1) % n)]);
            break;
        }
        case ProblemKind::Cvrp: {
            for (const auto& route : split_routes(sol.seq)) {
                int prev = 0;
                for (int id : route) {
                    edges.emplace_back(prev, id);
                    prev = id;
                }
                edges.emplace_back(prev, 0);
            }
            break;
        }
        default: {
            int prev = 0;
            for (int id : sol.seq) {
                edges.emplace_back(prev, id);
                prev = id;
            }
            break;
        }
    }
    return edges;
}

inline bool undirected_edges(ProblemKind k) {
    return k == ProblemKind::Tsp || k == ProblemKind::Cvrp;
}

inline void deposit_on(Pheromone& rho, const ProblemInstance& inst, const Solution& sol,
                       double amount) {
    bool sym = undirected_edges(inst.kind());
    for (auto [i, j] : solution_transitions(inst, sol)) {
        rho(i, j) += amount;
        if (sym) rho(j, i) += amount;
    }
}

inline void evaporate(Pheromone& rho, double evaporation) {
    for (double& v : rho.values()) v *= 1.0 - evaporation;
}

}  // namespace detail

/// Classic update: uniform evaporation, then every ant deposits C / f(sol)
/// on the transitions it used (both orientations for symmetric problems).
inline void deposit_ant_system(Pheromone& rho, const ProblemInstance& inst,
                               const std::vector<Solution>& sols,
                               const std::vector<double>& energies, double evaporation,
                               double deposit_scale) {
    if (sols.size() != energies.size())
        throw ConfigError("deposit_ant_system: solution/energy size mismatch");
    detail::evaporate(rho, evaporation);
    for (std::size_t k = 0; k < sols.size(); ++k) {
        double amount = deposit_scale / std::max(energies[k], detail::kMinDepositCost);
        detail::deposit_on(rho, inst, sols[k], amount);
    }
}

/// Ant System plus a weighted bonus on the best-so-far solution.
inline void deposit_elitist(Pheromone& rho, const ProblemInstance& inst,
                            const std::vector<Solution>& sols,
                            const std::vector<double>& energies, const Solution& best_so_far,
                            double best_energy, double evaporation, double deposit_scale,
                            double elite_weight) {
    deposit_ant_system(rho, inst, sols, energies, evaporation, deposit_scale);
    double amount = elite_weight * deposit_scale /
                    std::max(best_energy, detail::kMinDepositCost);
    detail::deposit_on(rho, inst, best_so_far, amount);
}

/// MAX-MIN update: only the chosen solution (iteration best, or best-so-far
/// when use_global) deposits, then every trail is clamped to [tau_min, tau_max].
inline void deposit_maxmin(Pheromone& rho, const ProblemInstance& inst,
                           const Solution& iteration_best, double iteration_energy,
                           const Solution& best_so_far, double best_energy, bool use_global,
                           double evaporation, double deposit_scale, double tau_min,
                           double tau_max) {
    if (tau_min >= tau_max) throw ConfigError("deposit_maxmin: tau_min must be below tau_max");
    detail::evaporate(rho, evaporation);
    const Solution& chosen = use_global ? best_so_far : iteration_best;
    double cost = use_global ? best_energy : iteration_energy;
    detail::deposit_on(rho, inst, chosen, deposit_scale / std::max(cost, detail::kMinDepositCost));
    for (double& v : rho.values()) {
        if (v < tau_min) v = tau_min;
        if (v > tau_max) v = tau_max;
    }
}

struct RoundTrace {
    int round = 0;
    double best_energy = 0.0;  // best-so-far, non-increasing across rounds
    double mean_energy = 0.0;  // mean of this round's batch
    double diversity = 0.0;    // mean pairwise Jaccard distance of the batch
    double wall_ms = 0.0;
};

struct SearchResult {
    Solution best_solution;
    double best_energy = 0.0;
    std::vector<RoundTrace> trace;
    double wall_ms = 0.0;
    int train_epochs = 0;      // filled by run_gfacs
    double train_wall_ms = 0.0;
};

/// Ant-colony search over a fixed prior. Per round: sample n_ants
/// trajectories from rho * eta, optionally refine (iteration best only unless
/// ls_all_ants), update bests, deposit. n_rounds == 0 still evaluates one
/// batch without depositing so the result is never empty.
inline SearchResult run_aco(const ProblemInstance& inst, const Heatmap& eta,
                            const AcoConfig& cfg, const LocalSearch& ls = {}) {
    cfg.validate();
    if (eta.dim() != inst.dim()) throw ConfigError("run_aco: heatmap dimension mismatch");
    auto t_start = std::chrono::steady_clock::now();

    Pheromone rho = init_pheromone(inst.dim());
    SearchResult result;
    result.best_energy = std::numeric_limits<double>::infinity();

    int rounds = std::max(cfg.n_rounds, 1);
    bool deposit = cfg.n_rounds >= 1;
    std::vector<Solution> sols(static_cast<std::size_t>(cfg.n_ants));
    std::vector<double> energies(static_cast<std::size_t>(cfg.n_ants));

    for (int round = 0; round < rounds; ++round) {
        auto t0 = std::chrono::steady_clock::now();
        parallel_for(cfg.n_ants, [&](int k) {
            RngStream ant(derive_seed(cfg.seed, "ant", static_cast<std::uint64_t>(round),
                                      static_cast<std::uint64_t>(k)));
            Trajectory traj = sample_trajectory(inst, eta, rho, ant);
            sols[static_cast<std::size_t>(k)] = solution_of(inst, traj);
            energies[static_cast<std::size_t>(k)] =
                energy(inst, sols[static_cast<std::size_t>(k)]);
        });

        if (cfg.use_ls) {
            RngStream ls_rng(derive_seed(cfg.seed, "ls", static_cast<std::uint64_t>(round)));
            if (cfg.ls_all_ants) {
                std::uint64_t ls_seed = ls_rng.next();
                parallel_for(cfg.n_ants, [&](int k) {
                    RngStream local(derive_seed(ls_seed, "ant-ls", static_cast<std::uint64_t>(k)));
                    auto& s = sols[static_cast<std::size_t>(k)];
                    s = ls.refine_iterated(inst, s, eta, rho, local);
                    energies[static_cast<std::size_t>(k)] = energy(inst, s);
                });
            } else {
                std::size_t best_k = 0;
                for (std::size_t k = 1; k < energies.size(); ++k)
                    if (energies[k] < energies[best_k]) best_k = k;
                sols[best_k] = ls.refine_iterated(inst, sols[best_k], eta, rho, ls_rng);
                energies[best_k] = energy(inst, sols[best_k]);
            }
        }

        std::size_t best_k = 0;
        for (std::size_t k = 1; k < energies.size(); ++k)
            if (energies[k] < energies[best_k]) best_k = k;
        if (energies[best_k] < result.best_energy) {
            result.best_energy = energies[best_k];
            result.best_solution = sols[best_k];
        }

        if (deposit) {
            switch (cfg.rule) {
                case DepositRule::AntSystem:
                    deposit_ant_system(rho, inst, sols, energies, cfg.evaporation,
                                       cfg.deposit_scale);
                    break;
                case DepositRule::Elitist: {
                    double w = cfg.elite_weight.value_or(static_cast<double>(cfg.n_ants) / 10.0);
                    deposit_elitist(rho, inst, sols, energies, result.best_solution,
                                    result.best_energy, cfg.evaporation, cfg.deposit_scale, w);
                    break;
                }
                case DepositRule::MaxMin: {
                    double tau_max = cfg.tau_max;
                    double tau_min = cfg.tau_min;
                    if (tau_max == 0.0) {
                        // adaptive bounds follow the incumbent, as in MMAS
                        tau_max = cfg.deposit_scale /
                                  (cfg.evaporation *
                                   std::max(result.best_energy, detail::kMinDepositCost));
                        tau_min = tau_max / (2.0 * inst.dim());
                    }
                    bool use_global = round % 10 == 9;
                    deposit_maxmin(rho, inst, sols[best_k], energies[best_k],
                                   result.best_solution, result.best_energy, use_global,
                                   cfg.evaporation, cfg.deposit_scale, tau_min, tau_max);
                    break;
                }
            }
        }

        RoundTrace tr;
        tr.round = round;
        tr.best_energy = result.best_energy;
        double mean = 0.0;
        for (double e : energies) mean += e;
        tr.mean_energy = mean / static_cast<double>(energies.size());
        tr.diversity = cfg.n_ants >= 2 ? diversity(inst, sols) : 0.0;
        tr.wall_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - t0)
                         .count();
        result.trace.push_back(tr);
    }

    result.wall_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - t_start)
                         .count();
    return result;
}

/// Full pipeline: train the per-instance prior, then search with it.
inline SearchResult run_gfacs(const ProblemInstance& inst, const TrainConfig& train_cfg,
                              const AcoConfig& aco_cfg, const LocalSearch& ls = {},
                              std::ostream* telemetry = nullptr) {
    auto t0 = std::chrono::steady_clock::now();
    RngStream train_rng(derive_seed(aco_cfg.seed, "train"));
    Heatmap eta = train_prior(inst, train_cfg, ls, train_rng, telemetry);
    double train_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    SearchResult result = run_aco(inst, eta, aco_cfg, ls);
    result.train_epochs = train_cfg.n_epoch;
    result.train_wall_ms = train_ms;
    result.wall_ms += train_ms;
    return result;
}

}  // namespace gfacs
