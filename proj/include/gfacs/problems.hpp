#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "gfacs/errors.hpp"
#include "gfacs/rng.hpp"

namespace gfacs {

// Four sequencing problems share one MDP shape: a solution is built by
// appending one element at a time under a feasibility mask. Element ids are
// the row/column indices of the edge matrices:
//   TSP     nodes 0..N-1
//   CVRP    0 = depot, customers 1..N
//   SMTWTP  0 = virtual start, jobs 1..N (instance arrays are 0-based)
//   BPP     0 = virtual start, items 1..N (instance arrays are 0-based)
// The depot/virtual-start row makes the first transition part of the same
// edge parameterization as every later one.

struct Point {
    double x = 0.0;
    double y = 0.0;
};

inline double euclid(const Point& a, const Point& b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

enum class ProblemKind { Tsp, Cvrp, Smtwtp, Bpp };

inline const char* to_string(ProblemKind k) {
    switch (k) {
        case ProblemKind::Tsp: return "tsp";
        case ProblemKind::Cvrp: return "cvrp";
        case ProblemKind::Smtwtp: return "smtwtp";
        case ProblemKind::Bpp: return "bpp";
    }
    return "?";
}

inline ProblemKind problem_kind_from_string(const std::string& s) {
    if (s == "tsp") return ProblemKind::Tsp;
    if (s == "cvrp") return ProblemKind::Cvrp;
    if (s == "smtwtp") return ProblemKind::Smtwtp;
    if (s == "bpp") return ProblemKind::Bpp;
    throw ConfigError("unknown problem kind '" + s + "'");
}

struct TspInstance {
    std::vector<Point> coords;
    bool round_distances = false;  // TSPLIB EUC_2D nearest-integer convention

    int n() const { return static_cast<int>(coords.size()); }
    double distance(int i, int j) const {
        double d = euclid(coords[static_cast<std::size_t>(i)],
                          coords[static_cast<std::size_t>(j)]);
        return round_distances ? std::floor(d + 0.5) : d;
    }
};

struct CvrpInstance {
    Point depot;
    std::vector<Point> coords;  // customers, element id i -> coords[i-1]
    std::vector<int> demands;   // element id i -> demands[i-1]
    int capacity = 50;

    int n() const { return static_cast<int>(coords.size()); }
    const Point& node(int id) const {
        return id == 0 ? depot : coords[static_cast<std::size_t>(id - 1)];
    }
    double distance(int i, int j) const { return euclid(node(i), node(j)); }
    int demand_of(int id) const { return demands[static_cast<std::size_t>(id - 1)]; }
};

struct SmtwtpInstance {
    std::vector<double> due;
    std::vector<double> weight;
    std::vector<double> proc;

    int n() const { return static_cast<int>(due.size()); }
};

struct BppInstance {
    std::vector<int> sizes;
    int bin_capacity = 150;

    int n() const { return static_cast<int>(sizes.size()); }
    int size_of(int id) const { return sizes[static_cast<std::size_t>(id - 1)]; }
};

struct ProblemInstance {
    std::variant<TspInstance, CvrpInstance, SmtwtpInstance, BppInstance> payload;
    std::optional<std::uint64_t> seed;  // generator seed, kept for provenance

    ProblemKind kind() const {
        return static_cast<ProblemKind>(payload.index());
    }
    /// Number of real elements (nodes / customers / jobs / items).
    int n_elements() const {
        return std::visit([](const auto& p) { return p.n(); }, payload);
    }
    /// Edge-matrix dimension; one larger than n_elements when a depot or
    /// virtual start occupies row 0.
    int dim() const {
        return kind() == ProblemKind::Tsp ? n_elements() : n_elements() + 1;
    }

    const TspInstance& tsp() const { return std::get<TspInstance>(payload); }
    const CvrpInstance& cvrp() const { return std::get<CvrpInstance>(payload); }
    const SmtwtpInstance& smtwtp() const { return std::get<SmtwtpInstance>(payload); }
    const BppInstance& bpp() const { return std::get<BppInstance>(payload); }
};

// ===== instance generators =====

inline TspInstance gen_tsp(int n, RngStream& rng) {
    if (n < 2) throw ConfigError("tsp: need n >= 2");
    TspInstance inst;
    inst.coords.resize(static_cast<std::size_t>(n));
    for (auto& p : inst.coords) {
        p.x = rng.uniform01();
        p.y = rng.uniform01();
    }
    return inst;
}

inline CvrpInstance gen_cvrp(int n, RngStream& rng, int capacity = 50) {
    if (n < 1) throw ConfigError("cvrp: need n >= 1");
    if (capacity < 9) throw ConfigError("cvrp: capacity must cover the largest demand");
    CvrpInstance inst;
    inst.capacity = capacity;
    inst.depot.x = rng.uniform01();
    inst.depot.y = rng.uniform01();
    inst.coords.resize(static_cast<std::size_t>(n));
    for (auto& p : inst.coords) {
        p.x = rng.uniform01();
        p.y = rng.uniform01();
    }
    inst.demands.resize(static_cast<std::size_t>(n));
    for (auto& d : inst.demands) d = rng.uniform_int(1, 9);
    return inst;
}

inline SmtwtpInstance gen_smtwtp(int n, RngStream& rng) {
    if (n < 1) throw ConfigError("smtwtp: need n >= 1");
    SmtwtpInstance inst;
    inst.due.resize(static_cast<std::size_t>(n));
    inst.weight.resize(static_cast<std::size_t>(n));
    inst.proc.resize(static_cast<std::size_t>(n));
    for (auto& d : inst.due) d = rng.uniform01() * n;
    for (auto& w : inst.weight) w = rng.uniform01();
    for (auto& p : inst.proc) p = rng.uniform01() * 2.0;
    return inst;
}

inline BppInstance gen_bpp(int n, RngStream& rng, int bin_capacity = 150) {
    if (n < 1) throw ConfigError("bpp: need n >= 1");
    if (bin_capacity < 100) throw ConfigError("bpp: bin capacity must cover the largest item");
    BppInstance inst;
    inst.bin_capacity = bin_capacity;
    inst.sizes.resize(static_cast<std::size_t>(n));
    for (auto& s : inst.sizes) s = rng.uniform_int(20, 100);
    return inst;
}

inline ProblemInstance make_instance(ProblemKind kind, int n, RngStream& rng) {
    switch (kind) {
        case ProblemKind::Tsp: return {gen_tsp(n, rng), std::nullopt};
        case ProblemKind::Cvrp: return {gen_cvrp(n, rng), std::nullopt};
        case ProblemKind::Smtwtp: return {gen_smtwtp(n, rng), std::nullopt};
        case ProblemKind::Bpp: return {gen_bpp(n, rng), std::nullopt};
    }
    throw ConfigError("unknown problem kind");
}

// ===== solutions =====

/// Canonical complete solution. `seq` is the element sequence:
///   TSP     tour starting at node 0, lexicographically smaller direction
///   CVRP    routes joined by single 0 separators (no leading/trailing 0),
///           each route oriented front < back, routes sorted by front
///   SMTWTP  job order
///   BPP     item order (bins follow by next-fit)
/// Equality is canonical-sequence equality.
struct Solution {
    ProblemKind kind{};
    std::vector<int> seq;
    std::vector<std::vector<int>> routes;  // CVRP only
    std::vector<std::vector<int>> bins;    // BPP only

    bool operator==(const Solution& o) const { return kind == o.kind && seq == o.seq; }
    bool operator!=(const Solution& o) const { return !(*this == o); }
};

namespace detail {

inline std::vector<std::vector<int>> split_routes(const std::vector<int>& seq) {
    std::vector<std::vector<int>> routes;
    std::vector<int> cur;
    for (int v : seq) {
        if (v == 0) {
            routes.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(v);
        }
    }
    routes.push_back(cur);
    return routes;
}

inline std::vector<int> canonical_tour(const std::vector<int>& tour) {
    int n = static_cast<int>(tour.size());
    auto it = std::find(tour.begin(), tour.end(), 0);
    int at = static_cast<int>(it - tour.begin());
    std::vector<int> fwd(static_cast<std::size_t>(n)), rev(static_cast<std::size_t>(n));
    for (int t = 0; t < n; ++t) {
        fwd[static_cast<std::size_t>(t)] = tour[static_cast<std::size_t>((at + t) % n)];
        rev[static_cast<std::size_t>(t)] = tour[static_cast<std::size_t>((at - t + n) % n)];
    }
    return std::min(fwd, rev);
}

}  // namespace detail

/// Next-fit packing of a BPP item order: every item goes into the current
/// bin if it fits, else opens a new one.
inline std::vector<std::vector<int>> bins_from_order(const BppInstance& inst,
                                                     const std::vector<int>& order) {
    std::vector<std::vector<int>> bins;
    int load = inst.bin_capacity + 1;  // force a bin on the first item
    for (int id : order) {
        int sz = inst.size_of(id);
        if (load + sz <= inst.bin_capacity) {
            bins.back().push_back(id);
            load += sz;
        } else {
            bins.push_back({id});
            load = sz;
        }
    }
    return bins;
}

/// Builds the canonical Solution for a raw element sequence. Throws
/// ValidationError when the sequence is not a complete feasible solution.
Solution solution_from_seq(const ProblemInstance& inst, const std::vector<int>& seq);

/// Structural checks; returns human-readable violations (empty == valid).
inline std::vector<std::string> validate(const ProblemInstance& inst, const Solution& sol) {
    std::vector<std::string> out;
    if (sol.kind != inst.kind()) {
        out.push_back("solution kind does not match instance");
        return out;
    }
    int n = inst.n_elements();
    bool tsp = inst.kind() == ProblemKind::Tsp;
    int lo = tsp ? 0 : 1;
    int hi = tsp ? n - 1 : n;

    std::vector<int> seen(static_cast<std::size_t>(n), 0);
    int depot_ok = inst.kind() == ProblemKind::Cvrp;
    int prev = 0;
    bool first = true;
    for (int v : sol.seq) {
        if (v == 0 && depot_ok) {
            if (first) out.push_back("route separator before any customer");
            else if (prev == 0) out.push_back("empty route (consecutive separators)");
        } else if (v < lo || v > hi) {
            out.push_back("element id " + std::to_string(v) + " out of range");
            return out;
        } else {
            int slot = tsp ? v : v - 1;
            if (++seen[static_cast<std::size_t>(slot)] > 1)
                out.push_back("element " + std::to_string(v) + " visited twice");
        }
        prev = v;
        first = false;
    }
    if (!sol.seq.empty() && prev == 0 && depot_ok)
        out.push_back("trailing route separator");
    for (int i = 0; i < n; ++i) {
        if (seen[static_cast<std::size_t>(i)] == 0)
            out.push_back("element " + std::to_string(tsp ? i : i + 1) + " missing");
    }
    if (!out.empty()) return out;

    if (inst.kind() == ProblemKind::Cvrp) {
        const auto& c = inst.cvrp();
        auto routes = detail::split_routes(sol.seq);
        for (std::size_t r = 0; r < routes.size(); ++r) {
            int load = 0;
            for (int id : routes[r]) load += c.demand_of(id);
            if (load > c.capacity)
                out.push_back("route " + std::to_string(r) + " load " + std::to_string(load) +
                              " exceeds capacity " + std::to_string(c.capacity));
        }
    }
    return out;
}

inline void require_valid(const ProblemInstance& inst, const Solution& sol) {
    auto violations = validate(inst, sol);
    if (violations.empty()) return;
    std::string msg = "invalid solution:";
    for (const auto& v : violations) msg += " " + v + ";";
    throw ValidationError(msg);
}

/// Objective value (to minimize). Validates the solution first.
inline double energy(const ProblemInstance& inst, const Solution& sol) {
    require_valid(inst, sol);
    switch (inst.kind()) {
        case ProblemKind::Tsp: {
            const auto& t = inst.tsp();
            int n = t.n();
            double total = 0.0;
            for (int i = 0; i < n; ++i)
                total += t.distance(sol.seq[static_cast<std::size_t>(i)],
                                    sol.seq[static_cast<std::size_t>((i + 1) % n)]);
            return total;
        }
        case ProblemKind::Cvrp: {
            const auto& c = inst.cvrp();
            double total = 0.0;
            for (const auto& route : detail::split_routes(sol.seq)) {
                int prev = 0;
                for (int id : route) {
                    total += c.distance(prev, id);
                    prev = id;
                }
                total += c.distance(prev, 0);
            }
            return total;
        }
        case ProblemKind::Smtwtp: {
            const auto& s = inst.smtwtp();
            double clock = 0.0, total = 0.0;
            for (int id : sol.seq) {
                std::size_t j = static_cast<std::size_t>(id - 1);
                clock += s.proc[j];
                total += s.weight[j] * std::max(0.0, clock - s.due[j]);
            }
            return total;
        }
        case ProblemKind::Bpp: {
            const auto& b = inst.bpp();
            double total = 0.0;
            for (const auto& bin : bins_from_order(b, sol.seq)) {
                int load = 0;
                for (int id : bin) load += b.size_of(id);
                total += static_cast<double>(b.bin_capacity) / static_cast<double>(load);
            }
            return total;
        }
    }
    throw ConfigError("unknown problem kind");
}

inline Solution solution_from_seq(const ProblemInstance& inst, const std::vector<int>& seq) {
    Solution sol;
    sol.kind = inst.kind();
    switch (inst.kind()) {
        case ProblemKind::Tsp:
            sol.seq = detail::canonical_tour(seq);
            break;
        case ProblemKind::Cvrp: {
            // catch empty routes before the canonical sort touches route.front()
            Solution raw;
            raw.kind = sol.kind;
            raw.seq = seq;
            require_valid(inst, raw);
            auto routes = detail::split_routes(seq);
            for (auto& route : routes) {
                if (route.size() >= 2 && route.front() > route.back())
                    std::reverse(route.begin(), route.end());
            }
            std::sort(routes.begin(), routes.end(),
                      [](const auto& a, const auto& b) { return a.front() < b.front(); });
            for (std::size_t r = 0; r < routes.size(); ++r) {
                if (r > 0) sol.seq.push_back(0);
                sol.seq.insert(sol.seq.end(), routes[r].begin(), routes[r].end());
            }
            sol.routes = std::move(routes);
            break;
        }
        case ProblemKind::Smtwtp:
            sol.seq = seq;
            break;
        case ProblemKind::Bpp:
            sol.seq = seq;
            sol.bins = bins_from_order(inst.bpp(), seq);
            break;
    }
    require_valid(inst, sol);
    return sol;
}

// ===== construction state =====

/// Partially built solution as seen by the sampling policy.
struct PartialState {
    const ProblemInstance* inst = nullptr;
    std::vector<int> actions;
    std::vector<char> visited;  // by element id
    int current = -1;           // -1 only for TSP before the first node
    int n_visited = 0;
    double open_load = 0.0;     // CVRP: demand on current route; BPP: open-bin load

    static PartialState initial(const ProblemInstance& pi) {
        PartialState st;
        st.inst = &pi;
        st.visited.assign(static_cast<std::size_t>(pi.dim()), 0);
        if (pi.kind() != ProblemKind::Tsp) {
            st.current = 0;
            st.visited[0] = 1;
        }
        return st;
    }

    bool terminal() const { return n_visited == inst->n_elements(); }
    int step_index() const { return static_cast<int>(actions.size()); }

    void apply(int a) {
        switch (inst->kind()) {
            case ProblemKind::Tsp:
            case ProblemKind::Smtwtp:
                visited[static_cast<std::size_t>(a)] = 1;
                ++n_visited;
                break;
            case ProblemKind::Cvrp:
                if (a == 0) {
                    open_load = 0.0;
                } else {
                    visited[static_cast<std::size_t>(a)] = 1;
                    ++n_visited;
                    open_load += inst->cvrp().demand_of(a);
                }
                break;
            case ProblemKind::Bpp: {
                int sz = inst->bpp().size_of(a);
                open_load = (open_load + sz <= inst->bpp().bin_capacity)
                                ? open_load + sz
                                : static_cast<double>(sz);
                visited[static_cast<std::size_t>(a)] = 1;
                ++n_visited;
                break;
            }
        }
        current = a;
        actions.push_back(a);
    }
};

/// Feasible next elements of a partial state, ascending by element id.
/// Empty exactly at terminal states.
inline void feasible_actions_into(const PartialState& st, std::vector<int>& out) {
    out.clear();
    const ProblemInstance& pi = *st.inst;
    if (st.terminal()) return;
    switch (pi.kind()) {
        case ProblemKind::Tsp: {
            int n = pi.n_elements();
            for (int v = 0; v < n; ++v)
                if (!st.visited[static_cast<std::size_t>(v)]) out.push_back(v);
            break;
        }
        case ProblemKind::Cvrp: {
            const auto& c = pi.cvrp();
            if (st.current != 0) out.push_back(0);
            double room = c.capacity - st.open_load;
            for (int v = 1; v <= c.n(); ++v)
                if (!st.visited[static_cast<std::size_t>(v)] && c.demand_of(v) <= room)
                    out.push_back(v);
            break;
        }
        case ProblemKind::Smtwtp:
        case ProblemKind::Bpp: {
            int n = pi.n_elements();
            for (int v = 1; v <= n; ++v)
                if (!st.visited[static_cast<std::size_t>(v)]) out.push_back(v);
            break;
        }
    }
}

inline std::vector<int> feasible_actions(const PartialState& st) {
    std::vector<int> out;
    feasible_actions_into(st, out);
    return out;
}

}  // namespace gfacs
