#include <catch2/catch_amalgamated.hpp>

#include "gfacs/problems.hpp"
#include "gfacs/rng.hpp"

using namespace gfacs;

namespace {

ProblemInstance square_tsp(bool rounded = false, double scale = 1.0) {
    TspInstance t;
    t.coords = {{0, 0}, {0, scale}, {scale, scale}, {scale, 0}};
    t.round_distances = rounded;
    return {t, std::nullopt};
}

// depot at origin, two short-haul customers and one far one; capacity forces
// customer 3 onto its own route
ProblemInstance small_cvrp() {
    CvrpInstance c;
    c.depot = {0, 0};
    c.coords = {{1, 0}, {2, 0}, {0, 3}};
    c.demands = {2, 3, 4};
    c.capacity = 5;
    return {c, std::nullopt};
}

ProblemInstance small_smtwtp() {
    SmtwtpInstance s;
    s.due = {2.0, 1.0};
    s.weight = {1.0, 2.0};
    s.proc = {1.5, 1.0};
    return {s, std::nullopt};
}

ProblemInstance small_bpp() {
    BppInstance b;
    b.sizes = {100, 60, 80, 70};
    b.bin_capacity = 150;
    return {b, std::nullopt};
}

}  // namespace

TEST_CASE("euclidean distance", "[problems]") {
    CHECK(euclid({0, 0}, {3, 4}) == Catch::Approx(5.0));
    CHECK(euclid({1, 1}, {1, 1}) == 0.0);
}

TEST_CASE("problem kind round-trips through strings", "[problems]") {
    for (auto kind : {ProblemKind::Tsp, ProblemKind::Cvrp, ProblemKind::Smtwtp, ProblemKind::Bpp})
        CHECK(problem_kind_from_string(to_string(kind)) == kind);
    CHECK_THROWS_AS(problem_kind_from_string("knapsack"), ConfigError);
}

TEST_CASE("tsp tour energy on the unit square", "[problems]") {
    auto inst = square_tsp();
    CHECK(energy(inst, solution_from_seq(inst, {0, 1, 2, 3})) == Catch::Approx(4.0));
    // diagonal crossing tour
    CHECK(energy(inst, solution_from_seq(inst, {0, 2, 1, 3})) ==
          Catch::Approx(2.0 + 2.0 * std::sqrt(2.0)));
}

TEST_CASE("tsp rounded distances take the nearest integer", "[problems]") {
    auto inst = square_tsp(true, 10.0);
    CHECK(inst.tsp().distance(0, 2) == Catch::Approx(14.0));  // sqrt(200) = 14.142...
    CHECK(energy(inst, solution_from_seq(inst, {0, 1, 2, 3})) == Catch::Approx(40.0));
    CHECK(energy(inst, solution_from_seq(inst, {0, 2, 1, 3})) == Catch::Approx(48.0));
}

TEST_CASE("tsp canonical tour starts at 0 and picks the smaller direction", "[problems]") {
    auto inst = square_tsp();
    CHECK(solution_from_seq(inst, {2, 3, 0, 1}).seq == std::vector<int>{0, 1, 2, 3});
    CHECK(solution_from_seq(inst, {1, 0, 3, 2}).seq == std::vector<int>{0, 1, 2, 3});
    CHECK(solution_from_seq(inst, {3, 1, 0, 2}).seq == std::vector<int>{0, 1, 3, 2});

    // reversal and rotation never change the canonical form or the energy
    RngStream rng(11);
    auto big = make_instance(ProblemKind::Tsp, 9, rng);
    std::vector<int> tour{3, 1, 4, 0, 8, 6, 2, 7, 5};
    Solution canon = solution_from_seq(big, tour);
    CHECK(canon.seq[1] < canon.seq.back());
    std::vector<int> reversed(tour.rbegin(), tour.rend());
    CHECK(solution_from_seq(big, reversed) == canon);
    std::rotate(tour.begin(), tour.begin() + 4, tour.end());
    CHECK(solution_from_seq(big, tour) == canon);
    CHECK(energy(big, canon) == Catch::Approx(energy(big, solution_from_seq(big, reversed))));
}

TEST_CASE("cvrp energy sums the route loops", "[problems]") {
    auto inst = small_cvrp();
    Solution sol = solution_from_seq(inst, {1, 2, 0, 3});
    CHECK(energy(inst, sol) == Catch::Approx(10.0));
    REQUIRE(sol.routes.size() == 2);
    CHECK(sol.routes[0] == std::vector<int>{1, 2});
    CHECK(sol.routes[1] == std::vector<int>{3});
}

TEST_CASE("cvrp canonical form orients and sorts routes", "[problems]") {
    auto inst = small_cvrp();
    Solution canon = solution_from_seq(inst, {1, 2, 0, 3});
    CHECK(solution_from_seq(inst, {2, 1, 0, 3}) == canon);  // route reversal
    CHECK(solution_from_seq(inst, {3, 0, 2, 1}) == canon);  // route order
    CHECK(canon.seq == std::vector<int>{1, 2, 0, 3});
}

TEST_CASE("cvrp validation rejects malformed sequences", "[problems]") {
    auto inst = small_cvrp();
    CHECK_THROWS_AS(solution_from_seq(inst, {1, 2, 3}), ValidationError);     // load 9 > 5
    CHECK_THROWS_AS(solution_from_seq(inst, {0, 1, 2, 0, 3}), ValidationError);
    CHECK_THROWS_AS(solution_from_seq(inst, {1, 2, 0, 0, 3}), ValidationError);
    CHECK_THROWS_AS(solution_from_seq(inst, {1, 2, 0, 3, 0}), ValidationError);
    CHECK_THROWS_AS(solution_from_seq(inst, {1, 2, 0}), ValidationError);     // 3 missing

    Solution overload;
    overload.kind = ProblemKind::Cvrp;
    overload.seq = {1, 2, 3};
    auto msgs = validate(inst, overload);
    REQUIRE_FALSE(msgs.empty());
    CHECK(msgs.front().find("exceeds capacity") != std::string::npos);
}

TEST_CASE("tsp validation rejects range and coverage errors", "[problems]") {
    auto inst = square_tsp();
    CHECK_THROWS_AS(solution_from_seq(inst, {0, 1, 2, 5}), ValidationError);
    CHECK_THROWS_AS(solution_from_seq(inst, {0, 1, 2, 2}), ValidationError);
    CHECK_THROWS_AS(solution_from_seq(inst, {0, 1, 2}), ValidationError);
    CHECK_THROWS_AS(energy(inst, Solution{ProblemKind::Tsp, {0, 1, 1, 2}, {}, {}}),
                    ValidationError);
    Solution wrong_kind;
    wrong_kind.kind = ProblemKind::Smtwtp;
    wrong_kind.seq = {1, 2, 3, 4};
    CHECK_FALSE(validate(inst, wrong_kind).empty());
}

TEST_CASE("smtwtp energy is weighted tardiness", "[problems]") {
    auto inst = small_smtwtp();
    // order 1,2: job 1 finishes at 1.5 (due 2.0, on time), job 2 at 2.5 (due 1.0)
    CHECK(energy(inst, solution_from_seq(inst, {1, 2})) == Catch::Approx(3.0));
    // order 2,1: job 2 on time, job 1 late by 0.5
    CHECK(energy(inst, solution_from_seq(inst, {2, 1})) == Catch::Approx(0.5));
}

TEST_CASE("bpp next-fit packing and energy", "[problems]") {
    auto inst = small_bpp();
    auto bins = bins_from_order(inst.bpp(), {1, 2, 3, 4});
    REQUIRE(bins.size() == 3);
    CHECK(bins[0] == std::vector<int>{1});
    CHECK(bins[1] == std::vector<int>{2, 3});
    CHECK(bins[2] == std::vector<int>{4});
    CHECK(energy(inst, solution_from_seq(inst, {1, 2, 3, 4})) ==
          Catch::Approx(150.0 / 100 + 150.0 / 140 + 150.0 / 70));

    BppInstance exact;
    exact.sizes = {75, 75};
    exact.bin_capacity = 150;
    ProblemInstance pi{exact, std::nullopt};
    CHECK(energy(pi, solution_from_seq(pi, {1, 2})) == Catch::Approx(1.0));
}

TEST_CASE("generators respect their ranges and are seed-deterministic", "[problems]") {
    RngStream a(42), b(42);
    auto ta = gen_tsp(30, a);
    auto tb = gen_tsp(30, b);
    REQUIRE(ta.coords.size() == 30);
    for (std::size_t i = 0; i < ta.coords.size(); ++i) {
        CHECK(ta.coords[i].x >= 0.0);
        CHECK(ta.coords[i].x < 1.0);
        CHECK(ta.coords[i].y >= 0.0);
        CHECK(ta.coords[i].y < 1.0);
        CHECK(ta.coords[i].x == tb.coords[i].x);
        CHECK(ta.coords[i].y == tb.coords[i].y);
    }

    RngStream c(7);
    auto cv = gen_cvrp(25, c);
    REQUIRE(cv.demands.size() == 25);
    for (int d : cv.demands) {
        CHECK(d >= 1);
        CHECK(d <= 9);
    }
    CHECK(cv.capacity == 50);

    RngStream d(7);
    auto bp = gen_bpp(40, d);
    for (int s : bp.sizes) {
        CHECK(s >= 20);
        CHECK(s <= 100);
    }

    RngStream e(7);
    auto sm = gen_smtwtp(12, e);
    CHECK(sm.due.size() == 12);
    CHECK(sm.weight.size() == 12);
    CHECK(sm.proc.size() == 12);
    for (double v : sm.due) CHECK(v <= 12.0);
    for (double v : sm.proc) CHECK(v <= 2.0);

    CHECK_THROWS_AS(gen_tsp(1, a), ConfigError);
}

TEST_CASE("instance dimensions include the virtual start where needed", "[problems]") {
    RngStream rng(1);
    auto tsp = make_instance(ProblemKind::Tsp, 10, rng);
    CHECK(tsp.n_elements() == 10);
    CHECK(tsp.dim() == 10);
    auto cvrp = make_instance(ProblemKind::Cvrp, 10, rng);
    CHECK(cvrp.n_elements() == 10);
    CHECK(cvrp.dim() == 11);
    auto smtwtp = make_instance(ProblemKind::Smtwtp, 10, rng);
    CHECK(smtwtp.dim() == 11);
    auto bpp = make_instance(ProblemKind::Bpp, 10, rng);
    CHECK(bpp.dim() == 11);
}

TEST_CASE("cvrp feasible actions mask the depot and full customers", "[problems]") {
    auto inst = small_cvrp();
    PartialState st = PartialState::initial(inst);
    CHECK(st.current == 0);
    CHECK(feasible_actions(st) == std::vector<int>{1, 2, 3});  // no depot from depot

    st.apply(3);  // load 4 of 5: nothing else fits
    CHECK(feasible_actions(st) == std::vector<int>{0});

    st.apply(0);  // back at the depot, load resets
    CHECK(st.open_load == 0.0);
    CHECK(feasible_actions(st) == std::vector<int>{1, 2});

    st.apply(2);  // load 3: only customer 1 (demand 2) still fits
    CHECK(feasible_actions(st) == std::vector<int>{0, 1});

    st.apply(1);
    CHECK(st.terminal());
    CHECK(feasible_actions(st).empty());
}

TEST_CASE("bpp partial state tracks the open bin", "[problems]") {
    auto inst = small_bpp();
    PartialState st = PartialState::initial(inst);
    CHECK(st.current == 0);
    st.apply(1);
    CHECK(st.open_load == 100.0);
    st.apply(2);  // 100 + 60 > 150: new bin
    CHECK(st.open_load == 60.0);
    st.apply(3);
    CHECK(st.open_load == 140.0);
    st.apply(4);
    CHECK(st.open_load == 70.0);
    CHECK(st.terminal());
}

TEST_CASE("greedy rollout reaches a valid terminal state on every kind", "[problems]") {
    RngStream rng(99);
    for (auto kind :
         {ProblemKind::Tsp, ProblemKind::Cvrp, ProblemKind::Smtwtp, ProblemKind::Bpp}) {
        auto inst = make_instance(kind, 12, rng);
        PartialState st = PartialState::initial(inst);
        int guard = 0;
        while (!st.terminal()) {
            auto acts = feasible_actions(st);
            REQUIRE_FALSE(acts.empty());
            // ids come back sorted
            CHECK(std::is_sorted(acts.begin(), acts.end()));
            st.apply(acts.front());
            REQUIRE(++guard < 100);
        }
        CHECK(feasible_actions(st).empty());
        Solution sol = solution_from_seq(inst, st.actions);
        CHECK(energy(inst, sol) >= 0.0);
    }
}
