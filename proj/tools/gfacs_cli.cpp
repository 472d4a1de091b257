#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "gfacs/gfacs.hpp"

namespace {

struct TrainFlags {
    double beta_min = 0.0, beta_max = 0.0, lr = 0.0, alpha_start = 0.0, alpha_end = 0.0;
    int epochs = 0, n_flat = 0, k_samples = 0;
    std::string loss, init;
    CLI::Option *o_beta_min = nullptr, *o_beta_max = nullptr, *o_lr = nullptr,
                *o_alpha_start = nullptr, *o_alpha_end = nullptr, *o_epochs = nullptr,
                *o_n_flat = nullptr, *o_k = nullptr, *o_loss = nullptr, *o_init = nullptr;

    void add(CLI::App* cmd) {
        o_beta_min = cmd->add_option("--beta-min", beta_min, "Schedule start inverse temperature");
        o_beta_max = cmd->add_option("--beta-max", beta_max, "Schedule end inverse temperature");
        o_epochs = cmd->add_option("--epochs", epochs, "Training epochs");
        o_n_flat = cmd->add_option("--n-flat", n_flat, "Final epochs held at beta-max");
        o_k = cmd->add_option("--k-samples", k_samples, "Trajectories per batch");
        o_lr = cmd->add_option("--lr", lr, "Adam learning rate");
        o_alpha_start = cmd->add_option("--alpha-start", alpha_start, "Initial refined-energy weight");
        o_alpha_end = cmd->add_option("--alpha-end", alpha_end, "Final refined-energy weight");
        o_loss = cmd->add_option("--loss", loss, "Training loss")
                     ->check(CLI::IsMember({"tb", "vargrad"}));
        o_init = cmd->add_option("--init", init, "Heatmap initialisation")
                     ->check(CLI::IsMember({"uniform", "heuristic"}));
    }

    void apply(gfacs::TrainConfig& cfg) const {
        if (o_beta_min->count()) cfg.beta_min = beta_min;
        if (o_beta_max->count()) cfg.beta_max = beta_max;
        if (o_epochs->count()) cfg.n_epoch = epochs;
        if (o_n_flat->count()) cfg.n_flat = n_flat;
        if (o_k->count()) cfg.k_samples = k_samples;
        if (o_lr->count()) cfg.lr = lr;
        if (o_alpha_start->count()) cfg.alpha_start = alpha_start;
        if (o_alpha_end->count()) cfg.alpha_end = alpha_end;
        if (o_loss->count()) cfg.loss_kind = gfacs::loss_kind_from_string(loss);
        if (o_init->count()) cfg.init = gfacs::heatmap_init_from_string(init);
    }
};

struct AcoFlags {
    int ants = 0, rounds = 0;
    double evaporation = 0.0, elite_weight = 0.0;
    std::string rule;
    bool use_ls = false;
    CLI::Option *o_ants = nullptr, *o_rounds = nullptr, *o_evap = nullptr, *o_elite = nullptr,
                *o_rule = nullptr, *o_ls = nullptr;

    void add(CLI::App* cmd) {
        o_ants = cmd->add_option("--ants", ants, "Ants per round");
        o_rounds = cmd->add_option("--rounds", rounds, "Pheromone update rounds");
        o_evap = cmd->add_option("--evaporation", evaporation, "Trail fraction lost per round");
        o_rule = cmd->add_option("--rule", rule, "Pheromone deposit rule")
                     ->check(CLI::IsMember({"as", "elitist", "maxmin"}));
        o_elite = cmd->add_option("--elite-weight", elite_weight, "Elitist bonus weight");
        o_ls = cmd->add_flag("--ls,!--no-ls", use_ls, "Refine ants with local search");
    }

    void apply(gfacs::AcoConfig& cfg) const {
        if (o_ants->count()) cfg.n_ants = ants;
        if (o_rounds->count()) cfg.n_rounds = rounds;
        if (o_evap->count()) cfg.evaporation = evaporation;
        if (o_rule->count()) cfg.rule = gfacs::deposit_rule_from_string(rule);
        if (o_elite->count()) cfg.elite_weight = elite_weight;
        if (o_ls->count()) cfg.use_ls = use_ls;
    }
};

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty())
        std::cout << text << '\n';
    else
        gfacs::write_text_file(out_path, text + "\n");
}

void write_trace_csv(const gfacs::SearchResult& res, const std::string& path) {
    std::string csv = "# gfacs trace v1\nround,best_energy,mean_energy,diversity,wall_ms\n";
    for (const auto& t : res.trace)
        csv += std::to_string(t.round) + "," + gfacs::csv_double(t.best_energy) + "," +
               gfacs::csv_double(t.mean_energy) + "," + gfacs::csv_double(t.diversity) + "," +
               gfacs::csv_double(t.wall_ms) + "\n";
    gfacs::write_text_file(path, csv);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"GFACS: GFlowNet-trained heatmap priors refined by ant colony optimisation"};
    app.require_subcommand(1);

    // generate
    auto* gen = app.add_subcommand("generate", "Generate random problem instances");
    std::string gen_problem, gen_out;
    int gen_size = 0, gen_count = 1;
    std::uint64_t gen_seed = 0;
    gen->add_option("--problem", gen_problem, "Problem kind")
        ->required()
        ->check(CLI::IsMember({"tsp", "cvrp", "smtwtp", "bpp"}));
    gen->add_option("--size", gen_size, "Elements per instance")->required();
    gen->add_option("--seed", gen_seed, "Master seed");
    gen->add_option("--count", gen_count, "Number of instances");
    gen->add_option("--out", gen_out, "Output file (or directory with --count > 1)");

    // train-prior
    auto* train = app.add_subcommand("train-prior", "Train a heatmap prior for one instance");
    std::string train_instance, train_out, train_telemetry;
    std::uint64_t train_seed = 0;
    bool train_ls = true;
    TrainFlags train_flags;
    train->add_option("--instance", train_instance, "Instance JSON file")->required();
    train_flags.add(train);
    train->add_flag("--ls,!--no-ls", train_ls, "Refine sampled solutions during training");
    train->add_option("--seed", train_seed, "Master seed");
    train->add_option("--telemetry", train_telemetry, "Per-epoch CSV file");
    train->add_option("--out", train_out, "Heatmap JSON file (default: standard output)");

    // solve
    auto* solve = app.add_subcommand("solve", "Solve one instance");
    std::string solve_instance, solve_prior = "gfacs_tb", solve_out, solve_trace;
    std::uint64_t solve_seed = 0;
    TrainFlags solve_train_flags;
    AcoFlags solve_aco_flags;
    solve->add_option("--instance", solve_instance, "Instance JSON file")->required();
    solve->add_option("--prior", solve_prior, "Heatmap prior arm")
        ->check(CLI::IsMember({"uniform", "heuristic", "gfacs_tb", "gfacs_vargrad"}));
    solve_train_flags.add(solve);
    solve_aco_flags.add(solve);
    solve->add_option("--seed", solve_seed, "Master seed");
    solve->add_option("--trace", solve_trace, "Per-round CSV file");
    solve->add_option("--out", solve_out, "Result JSON file (default: standard output)");

    // bench / ablate
    auto add_experiment_cmd = [&](const char* name, const char* help) {
        auto* cmd = app.add_subcommand(name, help);
        return cmd;
    };
    auto* bench = add_experiment_cmd("bench", "Run a prior-comparison benchmark from a config");
    auto* ablate = add_experiment_cmd("ablate", "Run the training-component ablation ladder");
    struct ExpFlags {
        std::string config, problem, out;
        int size = 0;
        std::uint64_t seed = 0;
        TrainFlags train;
        AcoFlags aco;
        CLI::Option *o_problem = nullptr, *o_size = nullptr, *o_seed = nullptr, *o_out = nullptr;
    };
    ExpFlags bench_flags, ablate_flags;
    for (auto [cmd, fl] : {std::pair{bench, &bench_flags}, std::pair{ablate, &ablate_flags}}) {
        cmd->add_option("--config", fl->config, "Experiment config JSON file")->required();
        fl->o_problem = cmd->add_option("--problem", fl->problem, "Problem kind")
                            ->check(CLI::IsMember({"tsp", "cvrp", "smtwtp", "bpp"}));
        fl->o_size = cmd->add_option("--size", fl->size, "Elements per instance");
        fl->o_seed = cmd->add_option("--seed", fl->seed, "Master seed");
        fl->o_out = cmd->add_option("--out", fl->out, "Output directory");
        fl->train.add(cmd);
        fl->aco.add(cmd);
    }

    // parse-tsplib
    auto* tsplib = app.add_subcommand("parse-tsplib", "Convert a TSPLIB EUC_2D file to instance JSON");
    std::string tsplib_in, tsplib_out;
    bool tsplib_rounded = false;
    tsplib->add_option("--in", tsplib_in, "TSPLIB file")->required();
    tsplib->add_flag("--rounded", tsplib_rounded, "Use nearest-integer distances");
    tsplib->add_option("--out", tsplib_out, "Instance JSON file (default: standard output)");

    auto run_experiment_cmd = [](const ExpFlags& fl, bool ablation) {
        gfacs::ExperimentConfig cfg = gfacs::read_experiment_config(fl.config);
        if (fl.o_problem->count()) {
            cfg.kind = gfacs::problem_kind_from_string(fl.problem);
            cfg.train = gfacs::default_train_config(cfg.kind);
        }
        if (fl.o_size->count()) cfg.size = fl.size;
        if (fl.o_seed->count()) cfg.master_seed = fl.seed;
        if (fl.o_out->count()) cfg.out_dir = fl.out;
        fl.train.apply(cfg.train);
        fl.aco.apply(cfg.aco);
        cfg.validate();
        gfacs::ExperimentResult res =
            ablation ? gfacs::run_ablation(cfg) : gfacs::run_experiment(cfg);
        std::cout << "wrote " << (cfg.out_dir / "results.csv").string() << " and "
                  << (cfg.out_dir / "summary.csv").string() << '\n';
        if (res.n_failed > 0)
            std::cerr << res.n_failed << " job(s) failed; see "
                      << (cfg.out_dir / "errors.log").string() << '\n';
    };

    gen->callback([&] {
        if (gen_count < 1) throw gfacs::ConfigError("--count must be >= 1");
        if (gen_count > 1 && gen_out.empty())
            throw gfacs::ConfigError("--count > 1 needs --out to name a directory");
        gfacs::ProblemKind kind = gfacs::problem_kind_from_string(gen_problem);
        for (int i = 0; i < gen_count; ++i) {
            std::uint64_t seed =
                gfacs::derive_seed(gen_seed, "instance", static_cast<std::uint64_t>(i));
            gfacs::RngStream rng(seed);
            gfacs::ProblemInstance inst = gfacs::make_instance(kind, gen_size, rng);
            inst.seed = seed;
            if (gen_count == 1) {
                emit(gfacs::instance_to_json(inst).dump(2), gen_out);
            } else {
                std::filesystem::create_directories(gen_out);
                gfacs::write_instance(std::filesystem::path(gen_out) /
                                          ("instance_" + std::to_string(i) + ".json"),
                                      inst);
            }
        }
    });

    train->callback([&] {
        gfacs::ProblemInstance inst = gfacs::read_instance(train_instance);
        gfacs::TrainConfig cfg = gfacs::default_train_config(inst.kind());
        train_flags.apply(cfg);
        cfg.validate();
        gfacs::LocalSearch ls = train_ls ? gfacs::LocalSearch::for_problem(inst.kind())
                                         : gfacs::LocalSearch::identity();
        gfacs::RngStream rng(gfacs::derive_seed(train_seed, "train"));
        std::ofstream telemetry_file;
        std::ostream* telemetry = nullptr;
        if (!train_telemetry.empty()) {
            telemetry_file.open(train_telemetry);
            if (!telemetry_file)
                throw gfacs::Error("cannot open '" + train_telemetry + "' for writing");
            telemetry = &telemetry_file;
        }
        gfacs::Heatmap eta = gfacs::train_prior(inst, cfg, ls, rng, telemetry);
        emit(gfacs::heatmap_to_json(eta).dump(2), train_out);
    });

    solve->callback([&] {
        gfacs::ProblemInstance inst = gfacs::read_instance(solve_instance);
        gfacs::AcoConfig aco;
        solve_aco_flags.apply(aco);
        aco.seed = solve_seed;
        aco.validate();
        gfacs::LocalSearch ls = aco.use_ls ? gfacs::LocalSearch::for_problem(inst.kind())
                                           : gfacs::LocalSearch::identity();
        gfacs::SearchResult res;
        if (solve_prior == "uniform") {
            res = gfacs::run_aco(inst, gfacs::uniform_prior(inst.dim()), aco, ls);
        } else if (solve_prior == "heuristic") {
            res = gfacs::run_aco(inst, gfacs::heuristic_prior(inst), aco, ls);
        } else {
            gfacs::TrainConfig train_cfg = gfacs::default_train_config(inst.kind());
            solve_train_flags.apply(train_cfg);
            train_cfg.loss_kind =
                solve_prior == "gfacs_vargrad" ? gfacs::LossKind::VarGrad : gfacs::LossKind::Tb;
            train_cfg.validate();
            res = gfacs::run_gfacs(inst, train_cfg, aco, ls);
        }
        if (!solve_trace.empty()) write_trace_csv(res, solve_trace);
        emit(gfacs::search_result_to_json(res).dump(2), solve_out);
    });

    bench->callback([&] { run_experiment_cmd(bench_flags, false); });
    ablate->callback([&] { run_experiment_cmd(ablate_flags, true); });

    tsplib->callback([&] {
        gfacs::TspInstance tsp =
            gfacs::parse_tsplib(gfacs::read_text_file(tsplib_in), tsplib_rounded);
        gfacs::ProblemInstance inst;
        inst.payload = std::move(tsp);
        emit(gfacs::instance_to_json(inst).dump(2), tsplib_out);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const gfacs::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const gfacs::SchemaError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const gfacs::UnsupportedFormatError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const gfacs::ParseError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
