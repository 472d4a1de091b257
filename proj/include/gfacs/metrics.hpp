#pragma once

#include <cstdint>
#include <unordered_set>
#include <vector>

#include "gfacs/errors.hpp"
#include "gfacs/problems.hpp"

namespace gfacs {

/// Edges "composing" a solution, for structural comparison:
///   TSP    undirected cycle edges
///   CVRP   undirected route edges including both depot legs
///   SMTWTP directed consecutive-job pairs (order matters)
///   BPP    directed consecutive-item pairs of the packing order
/// Encoded as i * dim + j with (i, j) sorted for undirected kinds.
struct EdgeSet {
    bool directed = false;
    std::unordered_set<std::uint64_t> edges;
};

inline EdgeSet edge_set(const ProblemInstance& inst, const Solution& sol) {
    require_valid(inst, sol);
    EdgeSet es;
    auto d = static_cast<std::uint64_t>(inst.dim());
    auto put = [&](int a, int b) {
        if (!es.directed && a > b) std::swap(a, b);
        es.edges.insert(static_cast<std::uint64_t>(a) * d + static_cast<std::uint64_t>(b));
    };
    switch (inst.kind()) {
        case ProblemKind::Tsp: {
            int n = static_cast<int>(sol.seq.size());
            if (n < 2) break;
            for (int i = 0; i < n; ++i)
                put(sol.seq[static_cast<std::size_t>(i)],
                    sol.seq[static_cast<std::size_t>((i + 1) % n)]);
            break;
        }
        case ProblemKind::Cvrp: {
            for (const auto& route : detail::split_routes(sol.seq)) {
                int prev = 0;
                for (int id : route) {
                    put(prev, id);
                    prev = id;
                }
                put(prev, 0);
            }
            break;
        }
        case ProblemKind::Smtwtp:
        case ProblemKind::Bpp: {
            es.directed = true;
            for (std::size_t i = 0; i + 1 < sol.seq.size(); ++i)
                put(sol.seq[i], sol.seq[i + 1]);
            break;
        }
    }
    return es;
}

/// 1 - |intersection| / |union| over the solutions' edge sets. 0 for equal
/// solutions, 1 for disjoint ones. Degenerate empty sets compare as equal.
inline double jaccard_distance(const ProblemInstance& inst, const Solution& a,
                               const Solution& b) {
    if (a.kind != b.kind) throw ConfigError("jaccard_distance: mixed solution kinds");
    EdgeSet ea = edge_set(inst, a);
    EdgeSet eb = edge_set(inst, b);
    if (ea.edges.empty() && eb.edges.empty()) return 0.0;
    std::size_t common = 0;
    for (std::uint64_t e : ea.edges) common += eb.edges.count(e);
    std::size_t unioned = ea.edges.size() + eb.edges.size() - common;
    return 1.0 - static_cast<double>(common) / static_cast<double>(unioned);
}

/// Mean pairwise Jaccard distance over distinct pairs. Requires >= 2
/// solutions; order of the input does not matter.
inline double diversity(const ProblemInstance& inst, const std::vector<Solution>& sols) {
    if (sols.size() < 2) throw ConfigError("diversity: need at least two solutions");
    double total = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < sols.size(); ++i)
        for (std::size_t j = i + 1; j < sols.size(); ++j) {
            total += jaccard_distance(inst, sols[i], sols[j]);
            ++pairs;
        }
    return total / static_cast<double>(pairs);
}

/// Percent above a positive reference objective.
inline double optimality_gap(double objective, double reference) {
    if (reference <= 0.0) throw ConfigError("optimality_gap: reference must be positive");
    return 100.0 * (objective - reference) / reference;
}

}  // namespace gfacs
