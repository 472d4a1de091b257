#pragma once

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gfacs/aco.hpp"
#include "gfacs/errors.hpp"
#include "gfacs/heatmap.hpp"
#include "gfacs/problems.hpp"

namespace gfacs {

using nlohmann::json;

// ===== instance JSON =====
// {"kind": "tsp|cvrp|smtwtp|bpp", ...fields per kind...}. Absent fields for
// other kinds are omitted; unknown keys are rejected so typos fail loudly.

namespace detail {

inline void check_keys(const json& j, const std::vector<std::string>& allowed,
                       const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const auto& k : allowed)
            if (it.key() == k) known = true;
        if (!known) throw SchemaError(where + ": unexpected field '" + it.key() + "'");
    }
}

inline json point_to_json(const Point& p) { return json::array({p.x, p.y}); }

inline Point point_from_json(const json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw SchemaError(path + ": expected [x, y]");
    return {j[0].get<double>(), j[1].get<double>()};
}

template <typename T>
T get_field(const json& j, const std::string& key) {
    if (!j.contains(key)) throw SchemaError("missing field '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw SchemaError("field '" + key + "' has the wrong type");
    }
}

}  // namespace detail

inline json instance_to_json(const ProblemInstance& inst) {
    json j;
    j["kind"] = to_string(inst.kind());
    switch (inst.kind()) {
        case ProblemKind::Tsp: {
            const auto& t = inst.tsp();
            json coords = json::array();
            for (const auto& p : t.coords) coords.push_back(detail::point_to_json(p));
            j["coords"] = std::move(coords);
            if (t.round_distances) j["round_distances"] = true;
            break;
        }
        case ProblemKind::Cvrp: {
            const auto& c = inst.cvrp();
            j["depot"] = detail::point_to_json(c.depot);
            json coords = json::array();
            for (const auto& p : c.coords) coords.push_back(detail::point_to_json(p));
            j["coords"] = std::move(coords);
            j["demands"] = c.demands;
            j["capacity"] = c.capacity;
            break;
        }
        case ProblemKind::Smtwtp: {
            const auto& s = inst.smtwtp();
            j["due"] = s.due;
            j["weight"] = s.weight;
            j["proc"] = s.proc;
            break;
        }
        case ProblemKind::Bpp: {
            const auto& b = inst.bpp();
            j["sizes"] = b.sizes;
            j["bin_capacity"] = b.bin_capacity;
            break;
        }
    }
    if (inst.seed) j["seed"] = *inst.seed;
    return j;
}

inline ProblemInstance instance_from_json(const json& j) {
    if (!j.is_object()) throw SchemaError("instance: expected an object");
    auto kind_str = detail::get_field<std::string>(j, "kind");
    ProblemInstance inst;
    if (kind_str == "tsp") {
        detail::check_keys(j, {"kind", "coords", "round_distances", "seed"}, "tsp instance");
        TspInstance t;
        const json& coords = j.contains("coords") ? j.at("coords") : json();
        if (!coords.is_array() || coords.size() < 2)
            throw SchemaError("coords: expected an array of at least 2 points");
        for (std::size_t i = 0; i < coords.size(); ++i)
            t.coords.push_back(
                detail::point_from_json(coords[i], "coords[" + std::to_string(i) + "]"));
        if (j.contains("round_distances"))
            t.round_distances = detail::get_field<bool>(j, "round_distances");
        inst.payload = std::move(t);
    } else if (kind_str == "cvrp") {
        detail::check_keys(j, {"kind", "depot", "coords", "demands", "capacity", "seed"},
                           "cvrp instance");
        CvrpInstance c;
        c.depot = detail::point_from_json(j.contains("depot") ? j.at("depot") : json(), "depot");
        const json& coords = j.contains("coords") ? j.at("coords") : json();
        if (!coords.is_array() || coords.empty())
            throw SchemaError("coords: expected a non-empty array of points");
        for (std::size_t i = 0; i < coords.size(); ++i)
            c.coords.push_back(
                detail::point_from_json(coords[i], "coords[" + std::to_string(i) + "]"));
        c.demands = detail::get_field<std::vector<int>>(j, "demands");
        c.capacity = detail::get_field<int>(j, "capacity");
        if (c.demands.size() != c.coords.size())
            throw SchemaError("demands: length must match coords");
        if (c.capacity <= 0) throw SchemaError("capacity: must be positive");
        for (std::size_t i = 0; i < c.demands.size(); ++i) {
            if (c.demands[i] <= 0)
                throw SchemaError("demands[" + std::to_string(i) + "]: must be positive");
            if (c.demands[i] > c.capacity)
                throw SchemaError("demands[" + std::to_string(i) + "]: exceeds capacity");
        }
        inst.payload = std::move(c);
    } else if (kind_str == "smtwtp") {
        detail::check_keys(j, {"kind", "due", "weight", "proc", "seed"}, "smtwtp instance");
        SmtwtpInstance s;
        s.due = detail::get_field<std::vector<double>>(j, "due");
        s.weight = detail::get_field<std::vector<double>>(j, "weight");
        s.proc = detail::get_field<std::vector<double>>(j, "proc");
        if (s.due.empty()) throw SchemaError("due: must not be empty");
        if (s.weight.size() != s.due.size() || s.proc.size() != s.due.size())
            throw SchemaError("weight/proc: lengths must match due");
        inst.payload = std::move(s);
    } else if (kind_str == "bpp") {
        detail::check_keys(j, {"kind", "sizes", "bin_capacity", "seed"}, "bpp instance");
        BppInstance b;
        b.sizes = detail::get_field<std::vector<int>>(j, "sizes");
        b.bin_capacity = detail::get_field<int>(j, "bin_capacity");
        if (b.sizes.empty()) throw SchemaError("sizes: must not be empty");
        if (b.bin_capacity <= 0) throw SchemaError("bin_capacity: must be positive");
        for (std::size_t i = 0; i < b.sizes.size(); ++i) {
            if (b.sizes[i] <= 0)
                throw SchemaError("sizes[" + std::to_string(i) + "]: must be positive");
            if (b.sizes[i] > b.bin_capacity)
                throw SchemaError("sizes[" + std::to_string(i) + "]: exceeds bin_capacity");
        }
        inst.payload = std::move(b);
    } else {
        throw SchemaError("kind: unknown problem kind '" + kind_str + "'");
    }
    if (j.contains("seed")) inst.seed = detail::get_field<std::uint64_t>(j, "seed");
    return inst;
}

inline void write_instance(const std::filesystem::path& path, const ProblemInstance& inst) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    out << instance_to_json(inst).dump(2) << '\n';
}

inline ProblemInstance read_instance(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path.string() + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw SchemaError("invalid JSON in '" + path.string() + "': " + e.what());
    }
    return instance_from_json(j);
}

// ===== heatmap JSON =====

inline json heatmap_to_json(const Heatmap& h) {
    return json{{"n", h.dim()}, {"w", h.values()}};
}

inline Heatmap heatmap_from_json(const json& j) {
    int n = detail::get_field<int>(j, "n");
    auto w = detail::get_field<std::vector<double>>(j, "w");
    if (n < 2 || w.size() != static_cast<std::size_t>(n) * static_cast<std::size_t>(n))
        throw SchemaError("w: expected n*n entries");
    Heatmap h(n);
    h.values() = std::move(w);
    return h;
}

// ===== solutions and search results =====

inline json solution_to_json(const Solution& sol) {
    json j;
    j["kind"] = to_string(sol.kind);
    j["seq"] = sol.seq;
    if (!sol.routes.empty()) j["routes"] = sol.routes;
    if (!sol.bins.empty()) j["bins"] = sol.bins;
    return j;
}

inline json search_result_to_json(const SearchResult& res) {
    json rounds = json::array();
    for (const auto& tr : res.trace)
        rounds.push_back(json{{"round", tr.round},
                              {"best_energy", tr.best_energy},
                              {"mean_energy", tr.mean_energy},
                              {"diversity", tr.diversity},
                              {"wall_ms", tr.wall_ms}});
    json j{{"best_energy", res.best_energy},
           {"best_solution", solution_to_json(res.best_solution)},
           {"rounds", std::move(rounds)},
           {"wall_ms", res.wall_ms}};
    if (res.train_epochs > 0) {
        j["train_epochs"] = res.train_epochs;
        j["train_wall_ms"] = res.train_wall_ms;
    }
    return j;
}

// ===== TSPLIB (EUC_2D) =====

/// Parses a TSPLIB file. Only EDGE_WEIGHT_TYPE EUC_2D is supported;
/// `rounded` selects the nearest-integer distance convention. Coordinates are
/// loaded verbatim (TSPLIB files are not unit-square).
inline TspInstance parse_tsplib(const std::string& text, bool rounded = false) {
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    int dimension = -1;
    std::string weight_type;
    bool in_coords = false;
    std::vector<Point> coords;
    std::vector<char> seen;

    while (std::getline(in, line)) {
        ++line_no;
        std::string trimmed = line;
        auto notspace = [](unsigned char c) { return !std::isspace(c); };
        trimmed.erase(trimmed.begin(),
                      std::find_if(trimmed.begin(), trimmed.end(), notspace));
        trimmed.erase(std::find_if(trimmed.rbegin(), trimmed.rend(), notspace).base(),
                      trimmed.end());
        if (trimmed.empty()) continue;
        if (trimmed == "EOF") break;

        if (in_coords) {
            std::istringstream row(trimmed);
            long id;
            double x, y;
            if (!(row >> id >> x >> y))
                throw ParseError("malformed node coordinate line", line_no);
            if (id < 1 || id > dimension)
                throw ParseError("node id out of range", line_no);
            if (seen[static_cast<std::size_t>(id - 1)])
                throw ParseError("duplicate node id", line_no);
            seen[static_cast<std::size_t>(id - 1)] = 1;
            coords[static_cast<std::size_t>(id - 1)] = {x, y};
            continue;
        }

        if (trimmed == "NODE_COORD_SECTION") {
            if (dimension < 0) throw ParseError("NODE_COORD_SECTION before DIMENSION", line_no);
            if (weight_type != "EUC_2D")
                throw UnsupportedFormatError("unsupported EDGE_WEIGHT_TYPE '" + weight_type +
                                             "' (only EUC_2D)");
            coords.assign(static_cast<std::size_t>(dimension), Point{});
            seen.assign(static_cast<std::size_t>(dimension), 0);
            in_coords = true;
            continue;
        }

        auto colon = trimmed.find(':');
        if (colon == std::string::npos)
            throw ParseError("expected 'KEY : VALUE' header", line_no);
        std::string key = trimmed.substr(0, colon);
        std::string value = trimmed.substr(colon + 1);
        auto strip = [&](std::string& s) {
            s.erase(s.begin(), std::find_if(s.begin(), s.end(), notspace));
            s.erase(std::find_if(s.rbegin(), s.rend(), notspace).base(), s.end());
        };
        strip(key);
        strip(value);
        if (key == "DIMENSION") {
            try {
                dimension = std::stoi(value);
            } catch (...) {
                throw ParseError("DIMENSION is not an integer", line_no);
            }
            if (dimension < 2) throw ParseError("DIMENSION must be >= 2", line_no);
        } else if (key == "EDGE_WEIGHT_TYPE") {
            weight_type = value;
        } else if (key == "TYPE") {
            if (value != "TSP")
                throw UnsupportedFormatError("unsupported TYPE '" + value + "' (only TSP)");
        }
        // NAME, COMMENT and other headers are ignored
    }
    if (!in_coords) throw ParseError("missing NODE_COORD_SECTION", line_no);
    for (std::size_t i = 0; i < seen.size(); ++i)
        if (!seen[i])
            throw ParseError("missing coordinates for node " + std::to_string(i + 1), line_no);

    TspInstance inst;
    inst.coords = std::move(coords);
    inst.round_distances = rounded;
    return inst;
}

inline std::string write_tsplib(const TspInstance& inst, const std::string& name = "instance") {
    std::ostringstream out;
    out << "NAME : " << name << "\n";
    out << "TYPE : TSP\n";
    out << "DIMENSION : " << inst.n() << "\n";
    out << "EDGE_WEIGHT_TYPE : EUC_2D\n";
    out << "NODE_COORD_SECTION\n";
    char buf[96];
    for (int i = 0; i < inst.n(); ++i) {
        const auto& p = inst.coords[static_cast<std::size_t>(i)];
        std::snprintf(buf, sizeof buf, "%d %.17g %.17g\n", i + 1, p.x, p.y);
        out << buf;
    }
    out << "EOF\n";
    return out.str();
}

// ===== CSV helpers =====

/// Fixed float formatting shared by every CSV writer; part of the
/// byte-determinism contract.
inline std::string csv_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    out << text;
}

}  // namespace gfacs
