#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "gfacs/heatmap.hpp"
#include "gfacs/problems.hpp"
#include "gfacs/rng.hpp"

namespace gfacs {

/// Action sequence with the forward log-probability under the policy that
/// produced it. Backward-sampled trajectories leave log_pf unset (NaN) until
/// the caller scores them against a concrete heatmap.
struct Trajectory {
    std::vector<int> actions;
    double log_pf = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

inline void check_edge_shapes(const ProblemInstance& inst, const Matrix& eta,
                              const Matrix& rho) {
    if (eta.dim() != inst.dim() || rho.dim() != inst.dim())
        throw ConfigError("edge matrix dimension does not match instance");
}

/// Weights of the feasible moves out of `st`: (rho * eta)^sharpen over row
/// st.current. Returns the weight total.
inline double fill_support(const PartialState& st, const Matrix& eta, const Matrix& rho,
                           double sharpen, std::vector<int>& support,
                           std::vector<double>& weights) {
    feasible_actions_into(st, support);
    weights.resize(support.size());
    double total = 0.0;
    int row = st.current;
    for (std::size_t k = 0; k < support.size(); ++k) {
        double w = rho(row, support[k]) * eta(row, support[k]);
        if (sharpen != 1.0) w = std::pow(w, sharpen);
        weights[k] = w;
        total += w;
    }
    return total;
}

inline std::size_t categorical_draw(const std::vector<double>& weights, double total,
                                    RngStream& rng) {
    double u = rng.uniform01() * total;
    double cum = 0.0;
    for (std::size_t k = 0; k < weights.size(); ++k) {
        cum += weights[k];
        if (u < cum) return k;
    }
    return weights.size() - 1;
}

/// Continues construction from `st` until terminal, drawing moves from the
/// (rho * eta)^sharpen law. The TSP start (no current element yet) is a
/// uniform draw whose log(1/N) enters log_pf so that forward and backward
/// trajectory spaces coincide.
inline double sample_from_state(PartialState& st, const Matrix& eta, const Matrix& rho,
                                double sharpen, RngStream& rng) {
    double log_pf = 0.0;
    if (st.inst->kind() == ProblemKind::Tsp && st.current < 0) {
        int n = st.inst->n_elements();
        int start = rng.uniform_int(0, n - 1);
        log_pf -= std::log(static_cast<double>(n));
        st.apply(start);
    }
    std::vector<int> support;
    std::vector<double> weights;
    support.reserve(static_cast<std::size_t>(st.inst->dim()));
    weights.reserve(static_cast<std::size_t>(st.inst->dim()));
    while (!st.terminal()) {
        double total = fill_support(st, eta, rho, sharpen, support, weights);
        std::size_t pick = categorical_draw(weights, total, rng);
        log_pf += std::log(weights[pick] / total);
        st.apply(support[pick]);
    }
    return log_pf;
}

/// Replays `actions` against the masked-softmax policy, calling
/// fn(row, pick, support, weights, total) before each transition is applied.
/// Returns the forward log-probability. Throws if an action is infeasible.
template <typename StepFn>
double replay_trajectory(const ProblemInstance& inst, const Matrix& eta, const Matrix& rho,
                         const std::vector<int>& actions, StepFn&& fn) {
    check_edge_shapes(inst, eta, rho);
    PartialState st = PartialState::initial(inst);
    double log_pf = 0.0;
    std::size_t begin = 0;
    if (inst.kind() == ProblemKind::Tsp) {
        if (actions.empty()) throw ValidationError("empty trajectory");
        log_pf -= std::log(static_cast<double>(inst.n_elements()));
        st.apply(actions[0]);
        begin = 1;
    }
    std::vector<int> support;
    std::vector<double> weights;
    for (std::size_t t = begin; t < actions.size(); ++t) {
        double total = fill_support(st, eta, rho, 1.0, support, weights);
        std::size_t pick = support.size();
        for (std::size_t k = 0; k < support.size(); ++k) {
            if (support[k] == actions[t]) {
                pick = k;
                break;
            }
        }
        if (pick == support.size())
            throw ValidationError("trajectory action " + std::to_string(actions[t]) +
                                  " infeasible at step " + std::to_string(t));
        log_pf += std::log(weights[pick] / total);
        fn(st.current, pick, support, weights, total);
        st.apply(actions[t]);
    }
    return log_pf;
}

}  // namespace detail

/// Samples one complete trajectory from P(a | s) proportional to
/// rho(current, a) * eta(current, a) over the feasible moves.
inline Trajectory sample_trajectory(const ProblemInstance& inst, const Heatmap& eta,
                                    const Pheromone& rho, RngStream& rng) {
    detail::check_edge_shapes(inst, eta, rho);
    PartialState st = PartialState::initial(inst);
    Trajectory tr;
    tr.log_pf = detail::sample_from_state(st, eta, rho, 1.0, rng);
    tr.actions = std::move(st.actions);
    return tr;
}

/// Forward log-probability of an existing action sequence under (eta, rho).
inline double trajectory_logprob(const ProblemInstance& inst, const Heatmap& eta,
                                 const Pheromone& rho, const Trajectory& traj) {
    return detail::replay_trajectory(inst, eta, rho, traj.actions,
                                     [](int, std::size_t, const std::vector<int>&,
                                        const std::vector<double>&, double) {});
}

/// Canonical solution denoted by a complete trajectory.
inline Solution solution_of(const ProblemInstance& inst, const Trajectory& traj) {
    return solution_from_seq(inst, traj.actions);
}

/// Number of distinct trajectories that construct `sol`:
///   TSP   2N readings (N starts x 2 directions; 1 when N == 1)
///   CVRP  K! route orders x 2 per multi-customer route
///   else  1 (the sequence itself)
inline std::uint64_t count_symmetric(const ProblemInstance& inst, const Solution& sol) {
    require_valid(inst, sol);
    switch (inst.kind()) {
        case ProblemKind::Tsp: {
            int n = inst.n_elements();
            return n > 1 ? static_cast<std::uint64_t>(2 * n) : 1;
        }
        case ProblemKind::Cvrp: {
            auto routes = detail::split_routes(sol.seq);
            std::uint64_t k = routes.size();
            if (k > 20) throw ConfigError("count_symmetric: route count overflows; use log_count_symmetric");
            std::uint64_t h = 1;
            for (std::uint64_t i = 2; i <= k; ++i) h *= i;
            for (const auto& r : routes)
                if (r.size() >= 2) h *= 2;
            return h;
        }
        default:
            return 1;
    }
}

/// log of count_symmetric, safe for any route count.
inline double log_count_symmetric(const ProblemInstance& inst, const Solution& sol) {
    switch (inst.kind()) {
        case ProblemKind::Tsp: {
            int n = inst.n_elements();
            return n > 1 ? std::log(2.0 * n) : 0.0;
        }
        case ProblemKind::Cvrp: {
            auto routes = detail::split_routes(sol.seq);
            double lh = std::lgamma(static_cast<double>(routes.size()) + 1.0);
            for (const auto& r : routes)
                if (r.size() >= 2) lh += std::log(2.0);
            return lh;
        }
        default:
            return 0.0;
    }
}

/// Uniform draw from the symmetric trajectories of `sol` (log_pf left unset;
/// score it with trajectory_logprob against the heatmap in use).
inline Trajectory sample_backward_trajectory(const ProblemInstance& inst, const Solution& sol,
                                             RngStream& rng) {
    require_valid(inst, sol);
    Trajectory tr;
    switch (inst.kind()) {
        case ProblemKind::Tsp: {
            int n = inst.n_elements();
            int at = rng.uniform_int(0, n - 1);
            int dir = rng.uniform_int(0, 1) == 0 ? 1 : -1;
            tr.actions.resize(static_cast<std::size_t>(n));
            for (int t = 0; t < n; ++t)
                tr.actions[static_cast<std::size_t>(t)] =
                    sol.seq[static_cast<std::size_t>(((at + dir * t) % n + n) % n)];
            break;
        }
        case ProblemKind::Cvrp: {
            auto routes = detail::split_routes(sol.seq);
            int k = static_cast<int>(routes.size());
            std::vector<int> order(static_cast<std::size_t>(k));
            std::iota(order.begin(), order.end(), 0);
            for (int i = k - 1; i > 0; --i)
                std::swap(order[static_cast<std::size_t>(i)],
                          order[static_cast<std::size_t>(rng.uniform_int(0, i))]);
            for (int r = 0; r < k; ++r) {
                auto route = routes[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])];
                if (route.size() >= 2 && rng.uniform_int(0, 1) == 1)
                    std::reverse(route.begin(), route.end());
                if (r > 0) tr.actions.push_back(0);
                tr.actions.insert(tr.actions.end(), route.begin(), route.end());
            }
            break;
        }
        default:
            tr.actions = sol.seq;
            break;
    }
    return tr;
}

}  // namespace gfacs
