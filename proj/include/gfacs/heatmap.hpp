#pragma once

#include <cmath>

#include "gfacs/errors.hpp"
#include "gfacs/matrix.hpp"
#include "gfacs/problems.hpp"

namespace gfacs {

/// Edge prior eta: strictly positive weights over element transitions.
using Heatmap = Matrix;
/// Trail weights rho maintained by the colony; same shape as the prior.
using Pheromone = Matrix;

/// Floor for reciprocal-distance heuristics (coincident points).
inline constexpr double kDistanceFloor = 1e-10;
/// Logits are clamped to +-kLogitClamp before exponentiation.
inline constexpr double kLogitClamp = 30.0;

/// All-ones prior: sampling reduces to uniform choice over feasible moves.
inline Heatmap uniform_prior(int n) {
    if (n < 2) throw ConfigError("uniform_prior: need n >= 2");
    return Heatmap(n, 1.0);
}

/// Greedy one-step heuristic prior. Rows are interchangeable except where
/// distance matters; unused entries (diagonal, transitions into row 0) are 1.
inline Heatmap heuristic_prior(const ProblemInstance& inst) {
    int d = inst.dim();
    Heatmap h(d, 1.0);
    switch (inst.kind()) {
        case ProblemKind::Tsp: {
            const auto& t = inst.tsp();
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j)
                    if (i != j) h(i, j) = 1.0 / std::max(t.distance(i, j), kDistanceFloor);
            break;
        }
        case ProblemKind::Cvrp: {
            const auto& c = inst.cvrp();
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j)
                    if (i != j) h(i, j) = 1.0 / std::max(c.distance(i, j), kDistanceFloor);
            break;
        }
        case ProblemKind::Smtwtp: {
            const auto& s = inst.smtwtp();
            for (int j = 1; j < d; ++j) {
                double w = 1.0 / std::max(kDistanceFloor, s.due[static_cast<std::size_t>(j - 1)]);
                for (int i = 0; i < d; ++i)
                    if (i != j) h(i, j) = w;
            }
            break;
        }
        case ProblemKind::Bpp: {
            const auto& b = inst.bpp();
            for (int j = 1; j < d; ++j) {
                double w = static_cast<double>(b.size_of(j));  // prefer large items early
                for (int i = 0; i < d; ++i)
                    if (i != j) h(i, j) = w;
            }
            break;
        }
    }
    return h;
}

enum class HeatmapInit { Uniform, FromHeuristic };

inline HeatmapInit heatmap_init_from_string(const std::string& s) {
    if (s == "uniform") return HeatmapInit::Uniform;
    if (s == "heuristic") return HeatmapInit::FromHeuristic;
    throw ConfigError("unknown heatmap init '" + s + "'");
}

/// Learnable per-instance parameters: edge logits plus the log-partition
/// estimate, with Adam moments for both.
struct TrainState {
    Matrix theta;
    double log_z = 0.0;
    Matrix moment1;
    Matrix moment2;
    double log_z_m1 = 0.0;
    double log_z_m2 = 0.0;
    long step = 0;
};

inline TrainState init_learnable(const ProblemInstance& inst,
                                 HeatmapInit init = HeatmapInit::Uniform) {
    int d = inst.dim();
    TrainState st;
    st.theta = Matrix(d, 0.0);
    st.moment1 = Matrix(d, 0.0);
    st.moment2 = Matrix(d, 0.0);
    if (init == HeatmapInit::FromHeuristic) {
        Heatmap h = heuristic_prior(inst);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) st.theta(i, j) = std::log(h(i, j));
    }
    return st;
}

/// exp(theta) with logits clamped to the safe range.
inline Heatmap to_heatmap(const TrainState& st) {
    int d = st.theta.dim();
    Heatmap h(d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            double v = st.theta(i, j);
            if (v > kLogitClamp) v = kLogitClamp;
            if (v < -kLogitClamp) v = -kLogitClamp;
            h(i, j) = std::exp(v);
        }
    return h;
}

}  // namespace gfacs
