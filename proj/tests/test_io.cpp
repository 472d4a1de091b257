#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>

#include "gfacs/experiment.hpp"
#include "gfacs/io.hpp"

using namespace gfacs;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag)
        : path(fs::temp_directory_path() / ("gfacs_test_" + tag)) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

ExperimentConfig tiny_config(const fs::path& out) {
    ExperimentConfig cfg;
    cfg.kind = ProblemKind::Tsp;
    cfg.size = 6;
    cfg.n_instances = 2;
    cfg.arms = {"uniform", "heuristic"};
    cfg.train.n_epoch = 2;
    cfg.train.k_samples = 3;
    cfg.aco.n_ants = 3;
    cfg.aco.n_rounds = 2;
    cfg.out_dir = out;
    cfg.master_seed = 5;
    cfg.record_wall_time = false;
    return cfg;
}

bool same_coords(const std::vector<Point>& a, const std::vector<Point>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i].x != b[i].x || a[i].y != b[i].y) return false;
    return true;
}

int data_rows(const std::string& csv) {
    int rows = -2;  // discount the stamp and the column header
    for (char c : csv)
        if (c == '\n') ++rows;
    return rows;
}

}  // namespace

TEST_CASE("instances round-trip through json", "[io]") {
    RngStream rng(3);
    for (auto kind :
         {ProblemKind::Tsp, ProblemKind::Cvrp, ProblemKind::Smtwtp, ProblemKind::Bpp}) {
        ProblemInstance inst = make_instance(kind, 7, rng);
        inst.seed = 99;
        ProblemInstance back = instance_from_json(instance_to_json(inst));
        CHECK(back.kind() == kind);
        CHECK(back.dim() == inst.dim());
        REQUIRE(back.seed.has_value());
        CHECK(*back.seed == 99);

        RngStream walk(4);
        Trajectory t = sample_trajectory(inst, uniform_prior(inst.dim()),
                                         Pheromone(inst.dim(), 1.0), walk);
        Solution sol = solution_of(inst, t);
        CHECK(energy(back, sol) == Catch::Approx(energy(inst, sol)));
    }
}

TEST_CASE("rounded tsp instances keep their convention", "[io]") {
    TspInstance t;
    t.coords = {{0, 0}, {3, 0}, {3, 4}};
    t.round_distances = true;
    ProblemInstance inst{t, std::nullopt};
    ProblemInstance back = instance_from_json(instance_to_json(inst));
    CHECK(back.tsp().round_distances);
    CHECK(energy(back, solution_from_seq(back, {0, 1, 2})) == Catch::Approx(12.0));
}

TEST_CASE("instance schema errors name the offending field", "[io]") {
    json j{{"kind", "tsp"}};
    CHECK_THROWS_WITH(instance_from_json(j), Catch::Matchers::ContainsSubstring("coords"));

    j = json{{"kind", "tsp"}, {"coords", {{0, 0}, {1, 1}}}, {"bogus", 1}};
    CHECK_THROWS_WITH(instance_from_json(j),
                      Catch::Matchers::ContainsSubstring("unexpected field 'bogus'"));

    j = json{{"kind", "quadratic_assignment"}};
    CHECK_THROWS_AS(instance_from_json(j), SchemaError);

    j = json{{"kind", "bpp"}, {"sizes", {10, 200}}, {"bin_capacity", 150}};
    CHECK_THROWS_WITH(instance_from_json(j),
                      Catch::Matchers::ContainsSubstring("sizes[1]: exceeds bin_capacity"));

    j = json{{"kind", "cvrp"},
             {"depot", {0, 0}},
             {"coords", {{1, 1}}},
             {"demands", {2, 3}},
             {"capacity", 5}};
    CHECK_THROWS_WITH(instance_from_json(j),
                      Catch::Matchers::ContainsSubstring("demands: length must match coords"));

    j = json{{"kind", "smtwtp"}, {"due", {1.0}}, {"weight", {1.0}}, {"proc", "fast"}};
    CHECK_THROWS_WITH(instance_from_json(j),
                      Catch::Matchers::ContainsSubstring("field 'proc' has the wrong type"));

    CHECK_THROWS_AS(instance_from_json(json::array()), SchemaError);
}

TEST_CASE("instance files round-trip and reject invalid json", "[io]") {
    TempDir dir("inst");
    RngStream rng(8);
    ProblemInstance inst = make_instance(ProblemKind::Cvrp, 5, rng);
    fs::path p = dir.path / "a.json";
    write_instance(p, inst);
    ProblemInstance back = read_instance(p);
    CHECK(back.dim() == inst.dim());
    CHECK(back.cvrp().capacity == inst.cvrp().capacity);

    write_text_file(p, "{not json");
    CHECK_THROWS_AS(read_instance(p), SchemaError);
    CHECK_THROWS_AS(read_instance(dir.path / "missing.json"), Error);
}

TEST_CASE("heatmaps round-trip through json", "[io]") {
    Heatmap h(3, 1.0);
    h(0, 1) = 2.5;
    h(2, 0) = 0.125;
    Heatmap back = heatmap_from_json(heatmap_to_json(h));
    CHECK(back == h);

    json bad{{"n", 3}, {"w", {1.0, 2.0}}};
    CHECK_THROWS_WITH(heatmap_from_json(bad),
                      Catch::Matchers::ContainsSubstring("n*n entries"));
}

TEST_CASE("search results serialize their trace", "[io]") {
    RngStream rng(17);
    auto inst = make_instance(ProblemKind::Tsp, 5, rng);
    AcoConfig cfg;
    cfg.n_ants = 3;
    cfg.n_rounds = 2;
    SearchResult res = run_aco(inst, heuristic_prior(inst), cfg);
    json j = search_result_to_json(res);
    CHECK(j.at("rounds").size() == 2);
    CHECK(j.at("best_energy").get<double>() == res.best_energy);
    CHECK(j.at("best_solution").at("kind") == "tsp");
    CHECK_FALSE(j.contains("train_epochs"));

    res.train_epochs = 7;
    res.train_wall_ms = 1.5;
    j = search_result_to_json(res);
    CHECK(j.at("train_epochs") == 7);
}

TEST_CASE("tsplib files parse with verbatim coordinates", "[io]") {
    std::string text =
        "NAME : tiny\n"
        "COMMENT : three nodes\n"
        "TYPE : TSP\n"
        "DIMENSION : 3\n"
        "EDGE_WEIGHT_TYPE : EUC_2D\n"
        "NODE_COORD_SECTION\n"
        "1 0.0 0.0\n"
        "3 300.5 400.25\n"
        "2 150 0\n"
        "EOF\n";
    TspInstance t = parse_tsplib(text);
    REQUIRE(t.n() == 3);
    CHECK_FALSE(t.round_distances);
    CHECK(t.coords[1].x == 150.0);
    CHECK(t.coords[2].y == 400.25);

    TspInstance r = parse_tsplib(text, true);
    CHECK(r.round_distances);
}

TEST_CASE("tsplib parser reports line numbers", "[io]") {
    std::string good =
        "TYPE : TSP\nDIMENSION : 2\nEDGE_WEIGHT_TYPE : EUC_2D\n"
        "NODE_COORD_SECTION\n1 0 0\n2 1 1\nEOF\n";
    CHECK_NOTHROW(parse_tsplib(good));

    auto swap_line = [&](int line, const std::string& repl) {
        std::istringstream in(good);
        std::ostringstream out;
        std::string s;
        int no = 0;
        while (std::getline(in, s)) out << (++no == line ? repl : s) << '\n';
        return out.str();
    };

    try {
        parse_tsplib(swap_line(6, "2 1 oops"));
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line == 6);
        CHECK_THAT(e.what(), Catch::Matchers::ContainsSubstring("(line 6)"));
    }
    try {
        parse_tsplib(swap_line(6, "5 1 1"));
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line == 6);
        CHECK_THAT(e.what(), Catch::Matchers::ContainsSubstring("out of range"));
    }
    CHECK_THROWS_WITH(parse_tsplib(swap_line(6, "1 2 2")),
                      Catch::Matchers::ContainsSubstring("duplicate node id"));
    CHECK_THROWS_WITH(parse_tsplib(swap_line(6, "")),
                      Catch::Matchers::ContainsSubstring("missing coordinates for node 2"));
    CHECK_THROWS_AS(parse_tsplib(swap_line(1, "TYPE : ATSP")), UnsupportedFormatError);
    CHECK_THROWS_AS(parse_tsplib(swap_line(3, "EDGE_WEIGHT_TYPE : ATT")),
                    UnsupportedFormatError);
    CHECK_THROWS_AS(parse_tsplib("TYPE : TSP\nDIMENSION : 2\n"), ParseError);
    CHECK_THROWS_WITH(parse_tsplib(swap_line(2, "DIMENSION : many")),
                      Catch::Matchers::ContainsSubstring("not an integer"));
}

TEST_CASE("tsplib writing round-trips exactly", "[io]") {
    TspInstance t;
    t.coords = {{0.123456789012345, 9.87e-3}, {1e6, 2.0 / 3.0}, {-5.5, 42.0}};
    TspInstance back = parse_tsplib(write_tsplib(t, "rt"));
    REQUIRE(back.n() == 3);
    for (int i = 0; i < 3; ++i) {
        CHECK(back.coords[static_cast<std::size_t>(i)].x ==
              t.coords[static_cast<std::size_t>(i)].x);
        CHECK(back.coords[static_cast<std::size_t>(i)].y ==
              t.coords[static_cast<std::size_t>(i)].y);
    }
}

TEST_CASE("csv doubles use a pinned format", "[io]") {
    CHECK(csv_double(1.0) == "1");
    CHECK(csv_double(2.5) == "2.5");
    CHECK(csv_double(1.0 / 3.0) == "0.333333333");
    CHECK(csv_double(1e10) == "1e+10");
    CHECK(csv_double(123456789.123) == "123456789");
    CHECK(csv_double(std::numeric_limits<double>::quiet_NaN()) == "nan");
}

TEST_CASE("seed derivation is stable across releases", "[io]") {
    CHECK(derive_seed(0, "instance", 0) == 7328231112050315532ULL);
    CHECK(derive_seed(0, "instance", 1) == 2502495001487268390ULL);
    CHECK(derive_seed(7, "gfacs_tb", 2, 0) == 8461638697793852205ULL);
    CHECK(derive_seed(7, "train") == 756858235596081706ULL);
    CHECK(derive_seed(7, "ant", 3, 11) == 5981941695213997413ULL);

    CHECK(derive_seed(1, "instance", 0) != derive_seed(0, "instance", 0));
    CHECK(derive_seed(0, "instance", 0, 1) != derive_seed(0, "instance", 1, 0));
    CHECK(derive_seed(0, "ant", 0) != derive_seed(0, "ls", 0));
    CHECK(RngStream(0).next() == 2947667278772165694ULL);
}

TEST_CASE("train configs round-trip and inherit family defaults", "[io]") {
    TrainConfig c = default_train_config(ProblemKind::Cvrp);
    c.n_epoch = 42;
    c.loss_kind = LossKind::VarGrad;
    c.shared_norm = false;
    TrainConfig back = train_config_from_json(train_config_to_json(c), ProblemKind::Cvrp);
    CHECK(back.n_epoch == 42);
    CHECK(back.loss_kind == LossKind::VarGrad);
    CHECK_FALSE(back.shared_norm);
    CHECK(back.beta_min == c.beta_min);

    // an empty object means "family defaults"
    TrainConfig bpp = train_config_from_json(json::object(), ProblemKind::Bpp);
    CHECK(bpp.beta_min == 1000.0);
    CHECK(bpp.beta_max == 2000.0);

    CHECK_THROWS_WITH(train_config_from_json(json{{"epochs", 3}}, ProblemKind::Tsp),
                      Catch::Matchers::ContainsSubstring("unexpected field 'epochs'"));
    CHECK_THROWS_AS(train_config_from_json(json{{"k_samples", 1}}, ProblemKind::Tsp),
                    ConfigError);
}

TEST_CASE("aco and ls configs round-trip", "[io]") {
    AcoConfig a;
    a.n_ants = 17;
    a.rule = DepositRule::MaxMin;
    a.tau_min = 0.1;
    a.tau_max = 4.0;
    a.elite_weight = 2.5;
    AcoConfig back = aco_config_from_json(aco_config_to_json(a));
    CHECK(back.n_ants == 17);
    CHECK(back.rule == DepositRule::MaxMin);
    CHECK(back.tau_min == 0.1);
    REQUIRE(back.elite_weight.has_value());
    CHECK(*back.elite_weight == 2.5);

    AcoConfig plain = aco_config_from_json(json::object());
    CHECK_FALSE(plain.elite_weight.has_value());
    CHECK_THROWS_AS(aco_config_from_json(json{{"evaporation", 1.5}}), ConfigError);

    LsConfig l;
    l.n_destroy = 4;
    l.rounds = 3;
    LsConfig lback = ls_config_from_json(ls_config_to_json(l));
    CHECK(lback.n_destroy == 4);
    CHECK(lback.rounds == 3);
}

TEST_CASE("experiment configs round-trip with nested sections", "[io]") {
    TempDir dir("cfg");
    ExperimentConfig cfg = tiny_config(dir.path / "out");
    cfg.n_model_seeds = 3;
    json j = experiment_config_to_json(cfg);
    ExperimentConfig back = experiment_config_from_json(j);
    CHECK(back.kind == ProblemKind::Tsp);
    CHECK(back.size == 6);
    CHECK(back.n_model_seeds == 3);
    CHECK(back.arms == cfg.arms);
    CHECK(back.aco.n_ants == 3);
    CHECK_FALSE(back.record_wall_time);

    // problem choice drives nested training defaults
    ExperimentConfig bpp = experiment_config_from_json(json{{"problem", "bpp"}});
    CHECK(bpp.train.beta_max == 2000.0);

    CHECK_THROWS_WITH(experiment_config_from_json(json{{"problem", "tsp"}, {"ants", 3}}),
                      Catch::Matchers::ContainsSubstring("unexpected field 'ants'"));
    CHECK_THROWS_AS(experiment_config_from_json(json{{"size", 9}}), SchemaError);

    fs::path cfg_path = dir.path / "cfg.json";
    write_text_file(cfg_path, j.dump(2));
    ExperimentConfig from_file = read_experiment_config(cfg_path);
    CHECK(from_file.master_seed == cfg.master_seed);
    write_text_file(cfg_path, "[1, 2");
    CHECK_THROWS_AS(read_experiment_config(cfg_path), SchemaError);
}

TEST_CASE("generated experiment instances are seed-stable", "[io]") {
    TempDir dir("insts");
    ExperimentConfig cfg = tiny_config(dir.path / "out");
    auto a = experiment_instances(cfg);
    auto b = experiment_instances(cfg);
    REQUIRE(a.size() == 2);
    CHECK(same_coords(a[0].tsp().coords, b[0].tsp().coords));
    CHECK_FALSE(same_coords(a[0].tsp().coords, a[1].tsp().coords));
    REQUIRE(a[0].seed.has_value());
    CHECK(*a[0].seed == derive_seed(cfg.master_seed, "instance", 0));

    fs::path p = dir.path / "given.json";
    write_instance(p, a[1]);
    cfg.instance_files = {p};
    auto loaded = experiment_instances(cfg);
    REQUIRE(loaded.size() == 1);
    CHECK(same_coords(loaded[0].tsp().coords, a[1].tsp().coords));

    cfg.kind = ProblemKind::Bpp;
    cfg.train = default_train_config(ProblemKind::Bpp);
    CHECK_THROWS_WITH(experiment_instances(cfg),
                      Catch::Matchers::ContainsSubstring("not a bpp instance"));
}

TEST_CASE("the arm grid emits the pinned csv layout", "[io]") {
    TempDir dir("grid");
    ExperimentConfig cfg = tiny_config(dir.path / "out");
    cfg.n_instances = 10;
    ExperimentResult res = run_experiment(cfg);

    CHECK(res.n_failed == 0);
    CHECK(res.errors_log.empty());
    CHECK(res.results_csv.rfind("# gfacs results v1\ninstance_id,arm,best_energy,wall_ms,diversity\n", 0) == 0);
    CHECK(res.summary_csv.rfind("# gfacs summary v1\narm,n,mean_energy,min_energy,max_energy\n", 0) == 0);
    CHECK(data_rows(res.results_csv) == 20);  // two arms, ten instances
    CHECK(data_rows(res.summary_csv) == 2);

    CHECK(read_text_file(dir.path / "out" / "results.csv") == res.results_csv);
    CHECK(read_text_file(dir.path / "out" / "summary.csv") == res.summary_csv);
    CHECK(fs::exists(dir.path / "out" / "instances" / "instance_9.json"));
    CHECK_FALSE(fs::exists(dir.path / "out" / "errors.log"));

    // wall_ms column is zeroed when timing is off
    std::istringstream in(res.results_csv);
    std::string line;
    std::getline(in, line);
    std::getline(in, line);
    while (std::getline(in, line)) {
        auto c3 = line.find(',', line.find(',', line.find(',') + 1) + 1);
        CHECK(line.substr(c3 + 1, line.find(',', c3 + 1) - c3 - 1) == "0");
    }
}

TEST_CASE("model seeds repeat rows in order", "[io]") {
    TempDir dir("seeds");
    ExperimentConfig cfg = tiny_config(dir.path / "out");
    cfg.arms = {"uniform"};
    cfg.n_instances = 2;
    cfg.n_model_seeds = 3;
    ExperimentResult res = run_experiment(cfg);
    CHECK(data_rows(res.results_csv) == 6);

    std::istringstream in(res.results_csv);
    std::string line;
    std::getline(in, line);
    std::getline(in, line);
    std::vector<std::string> ids;
    while (std::getline(in, line)) ids.push_back(line.substr(0, line.find(',')));
    CHECK(ids == std::vector<std::string>{"0", "0", "0", "1", "1", "1"});
}

TEST_CASE("failing jobs land in the error log, not the csv", "[io]") {
    TempDir dir("fail");
    ExperimentConfig cfg = tiny_config(dir.path / "out");
    cfg.n_instances = 3;

    std::vector<ArmSpec> arms;
    arms.push_back(build_arm("uniform", cfg));
    arms.push_back({"boom", [](const ProblemInstance& inst, std::uint64_t seed) -> SearchResult {
                        if (seed % 2 == 0 || true) throw NumericError("synthetic failure");
                        AcoConfig a;
                        return run_aco(inst, uniform_prior(inst.dim()), a);
                    }});
    auto instances = experiment_instances(cfg);
    ExperimentResult res = run_arms(cfg, instances, arms);

    CHECK(res.n_failed == 3);
    CHECK(data_rows(res.results_csv) == 3);
    CHECK_THAT(res.errors_log,
               Catch::Matchers::ContainsSubstring("instance 1 arm boom model_seed 0: synthetic failure"));
    CHECK(fs::exists(dir.path / "out" / "errors.log"));
    CHECK(res.results_csv.find("boom") == std::string::npos);

    // summary still lists the dead arm, with n = 0 and nan aggregates
    CHECK_THAT(res.summary_csv, Catch::Matchers::ContainsSubstring("boom,0,nan,nan,nan"));
    CHECK_THAT(res.summary_csv, Catch::Matchers::ContainsSubstring("uniform,3,"));
}

TEST_CASE("experiment csv bytes ignore the worker count", "[io]") {
    TempDir dir("threads");
    ExperimentConfig cfg = tiny_config(dir.path / "a");
    cfg.arms = {"uniform", "gfacs_tb"};

    setenv("GFACS_THREADS", "1", 1);
    ExperimentResult serial = run_experiment(cfg);
    cfg.out_dir = dir.path / "b";
    setenv("GFACS_THREADS", "8", 1);
    ExperimentResult threaded = run_experiment(cfg);
    unsetenv("GFACS_THREADS");

    CHECK(serial.results_csv == threaded.results_csv);
    CHECK(serial.summary_csv == threaded.summary_csv);
    CHECK(read_text_file(dir.path / "a" / "results.csv") ==
          read_text_file(dir.path / "b" / "results.csv"));
}

TEST_CASE("ablation arms cover the component ladder", "[io]") {
    TempDir dir("abl");
    ExperimentConfig cfg = tiny_config(dir.path / "out");
    auto arms = ablation_arms(cfg);
    std::vector<std::string> names;
    for (const auto& a : arms) names.push_back(a.name);
    CHECK(names == std::vector<std::string>{"gfacs", "no_off_policy", "no_energy_reshaping",
                                            "no_shared_norm", "vargrad"});
    CHECK_THROWS_AS(build_arm("annealing", cfg), ConfigError);
}
