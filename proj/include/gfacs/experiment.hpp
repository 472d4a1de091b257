#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "gfacs/aco.hpp"
#include "gfacs/gfn_train.hpp"
#include "gfacs/io.hpp"
#include "gfacs/local_search.hpp"
#include "gfacs/parallel.hpp"

namespace gfacs {

// Benchmark harness: a shared instance set is run under several prior arms
// and the results land in results.csv / summary.csv. Every stream is derived
// from (master_seed, arm, instance, model_seed), so reruns are reproducible
// and arms stay paired per instance. With record_wall_time off the CSVs are
// byte-identical regardless of GFACS_THREADS.

inline const char* to_string(LossKind k) { return k == LossKind::Tb ? "tb" : "vargrad"; }
inline const char* to_string(HeatmapInit i) {
    return i == HeatmapInit::Uniform ? "uniform" : "heuristic";
}
inline const char* to_string(DepositRule r) {
    switch (r) {
        case DepositRule::AntSystem: return "as";
        case DepositRule::Elitist: return "elitist";
        case DepositRule::MaxMin: return "maxmin";
    }
    return "as";
}

struct ExperimentConfig {
    ProblemKind kind = ProblemKind::Tsp;
    int size = 50;
    int n_instances = 10;
    int n_model_seeds = 1;
    std::vector<std::string> arms{"heuristic", "gfacs_tb"};
    TrainConfig train = default_train_config(ProblemKind::Tsp);
    AcoConfig aco;
    LsConfig ls;
    std::filesystem::path out_dir = "results";
    std::uint64_t master_seed = 0;
    bool record_wall_time = true;
    std::vector<std::filesystem::path> instance_files;  // loaded instead of generated

    void validate() const {
        if (size < 2) throw ConfigError("experiment: size must be >= 2");
        if (n_instances < 1) throw ConfigError("experiment: n_instances must be >= 1");
        if (n_model_seeds < 1) throw ConfigError("experiment: n_model_seeds must be >= 1");
        if (arms.empty()) throw ConfigError("experiment: arms must be non-empty");
        if (out_dir.empty()) throw ConfigError("experiment: out_dir must be set");
        train.validate();
        aco.validate();
    }
};

// ===== config JSON =====

inline json train_config_to_json(const TrainConfig& c) {
    return json{{"beta_min", c.beta_min},
                {"beta_max", c.beta_max},
                {"n_epoch", c.n_epoch},
                {"n_flat", c.n_flat},
                {"k_samples", c.k_samples},
                {"alpha_start", c.alpha_start},
                {"alpha_end", c.alpha_end},
                {"lr", c.lr},
                {"loss", to_string(c.loss_kind)},
                {"init", to_string(c.init)},
                {"off_policy", c.off_policy},
                {"energy_reshaping", c.energy_reshaping},
                {"shared_norm", c.shared_norm}};
}

inline TrainConfig train_config_from_json(const json& j, ProblemKind kind) {
    if (!j.is_object()) throw SchemaError("train: expected an object");
    detail::check_keys(j,
                       {"beta_min", "beta_max", "n_epoch", "n_flat", "k_samples", "alpha_start",
                        "alpha_end", "lr", "adam_beta1", "adam_beta2", "adam_eps", "loss", "init",
                        "off_policy", "energy_reshaping", "shared_norm"},
                       "train");
    TrainConfig c = default_train_config(kind);
    if (j.contains("beta_min")) c.beta_min = detail::get_field<double>(j, "beta_min");
    if (j.contains("beta_max")) c.beta_max = detail::get_field<double>(j, "beta_max");
    if (j.contains("n_epoch")) c.n_epoch = detail::get_field<int>(j, "n_epoch");
    if (j.contains("n_flat")) c.n_flat = detail::get_field<int>(j, "n_flat");
    if (j.contains("k_samples")) c.k_samples = detail::get_field<int>(j, "k_samples");
    if (j.contains("alpha_start")) c.alpha_start = detail::get_field<double>(j, "alpha_start");
    if (j.contains("alpha_end")) c.alpha_end = detail::get_field<double>(j, "alpha_end");
    if (j.contains("lr")) c.lr = detail::get_field<double>(j, "lr");
    if (j.contains("adam_beta1")) c.adam_beta1 = detail::get_field<double>(j, "adam_beta1");
    if (j.contains("adam_beta2")) c.adam_beta2 = detail::get_field<double>(j, "adam_beta2");
    if (j.contains("adam_eps")) c.adam_eps = detail::get_field<double>(j, "adam_eps");
    if (j.contains("loss")) c.loss_kind = loss_kind_from_string(detail::get_field<std::string>(j, "loss"));
    if (j.contains("init")) c.init = heatmap_init_from_string(detail::get_field<std::string>(j, "init"));
    if (j.contains("off_policy")) c.off_policy = detail::get_field<bool>(j, "off_policy");
    if (j.contains("energy_reshaping"))
        c.energy_reshaping = detail::get_field<bool>(j, "energy_reshaping");
    if (j.contains("shared_norm")) c.shared_norm = detail::get_field<bool>(j, "shared_norm");
    c.validate();
    return c;
}

inline json aco_config_to_json(const AcoConfig& c) {
    json j{{"n_ants", c.n_ants},
           {"n_rounds", c.n_rounds},
           {"evaporation", c.evaporation},
           {"deposit_scale", c.deposit_scale},
           {"rule", to_string(c.rule)},
           {"use_ls", c.use_ls},
           {"ls_all_ants", c.ls_all_ants}};
    if (c.elite_weight) j["elite_weight"] = *c.elite_weight;
    if (c.tau_min != 0.0) j["tau_min"] = c.tau_min;
    if (c.tau_max != 0.0) j["tau_max"] = c.tau_max;
    return j;
}

inline AcoConfig aco_config_from_json(const json& j) {
    if (!j.is_object()) throw SchemaError("aco: expected an object");
    detail::check_keys(j,
                       {"n_ants", "n_rounds", "evaporation", "deposit_scale", "rule",
                        "elite_weight", "tau_min", "tau_max", "use_ls", "ls_all_ants"},
                       "aco");
    AcoConfig c;
    if (j.contains("n_ants")) c.n_ants = detail::get_field<int>(j, "n_ants");
    if (j.contains("n_rounds")) c.n_rounds = detail::get_field<int>(j, "n_rounds");
    if (j.contains("evaporation")) c.evaporation = detail::get_field<double>(j, "evaporation");
    if (j.contains("deposit_scale"))
        c.deposit_scale = detail::get_field<double>(j, "deposit_scale");
    if (j.contains("rule"))
        c.rule = deposit_rule_from_string(detail::get_field<std::string>(j, "rule"));
    if (j.contains("elite_weight")) c.elite_weight = detail::get_field<double>(j, "elite_weight");
    if (j.contains("tau_min")) c.tau_min = detail::get_field<double>(j, "tau_min");
    if (j.contains("tau_max")) c.tau_max = detail::get_field<double>(j, "tau_max");
    if (j.contains("use_ls")) c.use_ls = detail::get_field<bool>(j, "use_ls");
    if (j.contains("ls_all_ants")) c.ls_all_ants = detail::get_field<bool>(j, "ls_all_ants");
    c.validate();
    return c;
}

inline json ls_config_to_json(const LsConfig& c) {
    return json{{"max_iters", c.max_iters}, {"n_perturb", c.n_perturb},
                {"n_destroy", c.n_destroy}, {"rounds", c.rounds},
                {"top_k", c.top_k},         {"batch_width", c.batch_width},
                {"delta_max", c.delta_max}};
}

inline LsConfig ls_config_from_json(const json& j) {
    if (!j.is_object()) throw SchemaError("ls: expected an object");
    detail::check_keys(j,
                       {"max_iters", "n_perturb", "n_destroy", "rounds", "top_k", "batch_width",
                        "delta_max"},
                       "ls");
    LsConfig c;
    if (j.contains("max_iters")) c.max_iters = detail::get_field<int>(j, "max_iters");
    if (j.contains("n_perturb")) c.n_perturb = detail::get_field<int>(j, "n_perturb");
    if (j.contains("n_destroy")) c.n_destroy = detail::get_field<int>(j, "n_destroy");
    if (j.contains("rounds")) c.rounds = detail::get_field<int>(j, "rounds");
    if (j.contains("top_k")) c.top_k = detail::get_field<int>(j, "top_k");
    if (j.contains("batch_width")) c.batch_width = detail::get_field<int>(j, "batch_width");
    if (j.contains("delta_max")) c.delta_max = detail::get_field<double>(j, "delta_max");
    return c;
}

inline json experiment_config_to_json(const ExperimentConfig& c) {
    json j{{"problem", to_string(c.kind)},
           {"size", c.size},
           {"n_instances", c.n_instances},
           {"n_model_seeds", c.n_model_seeds},
           {"arms", c.arms},
           {"train", train_config_to_json(c.train)},
           {"aco", aco_config_to_json(c.aco)},
           {"ls", ls_config_to_json(c.ls)},
           {"out_dir", c.out_dir.string()},
           {"master_seed", c.master_seed},
           {"record_wall_time", c.record_wall_time}};
    if (!c.instance_files.empty()) {
        json files = json::array();
        for (const auto& p : c.instance_files) files.push_back(p.string());
        j["instance_files"] = std::move(files);
    }
    return j;
}

inline ExperimentConfig experiment_config_from_json(const json& j) {
    if (!j.is_object()) throw SchemaError("experiment: expected an object");
    detail::check_keys(j,
                       {"problem", "size", "n_instances", "n_model_seeds", "arms", "train", "aco",
                        "ls", "out_dir", "master_seed", "record_wall_time", "instance_files"},
                       "experiment");
    ExperimentConfig c;
    c.kind = problem_kind_from_string(detail::get_field<std::string>(j, "problem"));
    c.train = default_train_config(c.kind);
    if (j.contains("size")) c.size = detail::get_field<int>(j, "size");
    if (j.contains("n_instances")) c.n_instances = detail::get_field<int>(j, "n_instances");
    if (j.contains("n_model_seeds"))
        c.n_model_seeds = detail::get_field<int>(j, "n_model_seeds");
    if (j.contains("arms")) c.arms = detail::get_field<std::vector<std::string>>(j, "arms");
    if (j.contains("train")) c.train = train_config_from_json(j.at("train"), c.kind);
    if (j.contains("aco")) c.aco = aco_config_from_json(j.at("aco"));
    if (j.contains("ls")) c.ls = ls_config_from_json(j.at("ls"));
    if (j.contains("out_dir")) c.out_dir = detail::get_field<std::string>(j, "out_dir");
    if (j.contains("master_seed"))
        c.master_seed = detail::get_field<std::uint64_t>(j, "master_seed");
    if (j.contains("record_wall_time"))
        c.record_wall_time = detail::get_field<bool>(j, "record_wall_time");
    if (j.contains("instance_files"))
        for (const auto& s : detail::get_field<std::vector<std::string>>(j, "instance_files"))
            c.instance_files.emplace_back(s);
    c.validate();
    return c;
}

inline ExperimentConfig read_experiment_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path.string() + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw SchemaError("invalid JSON in '" + path.string() + "': " + e.what());
    }
    return experiment_config_from_json(j);
}

// ===== arms =====

struct ArmSpec {
    std::string name;
    std::function<SearchResult(const ProblemInstance&, std::uint64_t seed)> run;
};

inline LocalSearch arm_local_search(const ExperimentConfig& cfg) {
    return cfg.aco.use_ls ? LocalSearch::for_problem(cfg.kind, cfg.ls) : LocalSearch::identity();
}

inline ArmSpec build_arm(const std::string& name, const ExperimentConfig& cfg) {
    AcoConfig aco = cfg.aco;
    TrainConfig train = cfg.train;
    LocalSearch ls = arm_local_search(cfg);
    if (name == "uniform")
        return {name, [aco, ls](const ProblemInstance& inst, std::uint64_t seed) {
                    AcoConfig a = aco;
                    a.seed = seed;
                    return run_aco(inst, uniform_prior(inst.dim()), a, ls);
                }};
    if (name == "heuristic")
        return {name, [aco, ls](const ProblemInstance& inst, std::uint64_t seed) {
                    AcoConfig a = aco;
                    a.seed = seed;
                    return run_aco(inst, heuristic_prior(inst), a, ls);
                }};
    if (name == "gfacs_tb" || name == "gfacs_vargrad") {
        train.loss_kind = name == "gfacs_tb" ? LossKind::Tb : LossKind::VarGrad;
        return {name, [aco, train, ls](const ProblemInstance& inst, std::uint64_t seed) {
                    AcoConfig a = aco;
                    a.seed = seed;
                    return run_gfacs(inst, train, a, ls);
                }};
    }
    throw ConfigError("unknown arm '" + name + "'");
}

/// The ablation ladder: full method, then one component removed per arm. The
/// VarGrad arm also drops shared normalization, which its centring subsumes.
inline std::vector<ArmSpec> ablation_arms(const ExperimentConfig& cfg) {
    ExperimentConfig base = cfg;
    base.train.loss_kind = LossKind::Tb;
    base.train.off_policy = true;
    base.train.energy_reshaping = true;
    base.train.shared_norm = true;

    std::vector<ArmSpec> arms;
    auto add = [&](const std::string& name, auto tweak) {
        ExperimentConfig c = base;
        tweak(c.train);
        AcoConfig aco = c.aco;
        TrainConfig train = c.train;
        LocalSearch ls = arm_local_search(c);
        arms.push_back({name, [aco, train, ls](const ProblemInstance& inst, std::uint64_t seed) {
                            AcoConfig a = aco;
                            a.seed = seed;
                            return run_gfacs(inst, train, a, ls);
                        }});
    };
    add("gfacs", [](TrainConfig&) {});
    add("no_off_policy", [](TrainConfig& t) { t.off_policy = false; });
    add("no_energy_reshaping", [](TrainConfig& t) { t.energy_reshaping = false; });
    add("no_shared_norm", [](TrainConfig& t) { t.shared_norm = false; });
    add("vargrad", [](TrainConfig& t) {
        t.loss_kind = LossKind::VarGrad;
        t.shared_norm = false;
    });
    return arms;
}

// ===== runner =====

inline std::vector<ProblemInstance> experiment_instances(const ExperimentConfig& cfg) {
    std::vector<ProblemInstance> out;
    if (!cfg.instance_files.empty()) {
        for (const auto& path : cfg.instance_files) {
            ProblemInstance inst = read_instance(path);
            if (inst.kind() != cfg.kind)
                throw ConfigError("instance '" + path.string() + "' is not a " +
                                  std::string(to_string(cfg.kind)) + " instance");
            out.push_back(std::move(inst));
        }
        return out;
    }
    for (int i = 0; i < cfg.n_instances; ++i) {
        std::uint64_t seed = derive_seed(cfg.master_seed, "instance", static_cast<std::uint64_t>(i));
        RngStream gen(seed);
        ProblemInstance inst = make_instance(cfg.kind, cfg.size, gen);
        inst.seed = seed;
        out.push_back(std::move(inst));
    }
    return out;
}

struct ExperimentResult {
    std::string results_csv;
    std::string summary_csv;
    std::string errors_log;  // empty when every job succeeded
    int n_failed = 0;
};

/// Runs instances x arms x model seeds, each job on its own derived stream,
/// then reduces in fixed order so the CSV bytes never depend on scheduling.
/// A failing job is logged and skipped; the rest of the grid still runs.
inline ExperimentResult run_arms(const ExperimentConfig& cfg,
                                 const std::vector<ProblemInstance>& instances,
                                 const std::vector<ArmSpec>& arms) {
    if (arms.empty()) throw ConfigError("run_arms: arms must be non-empty");
    if (instances.empty()) throw ConfigError("run_arms: instances must be non-empty");

    const int n_inst = static_cast<int>(instances.size());
    const int n_arms = static_cast<int>(arms.size());
    const int n_seeds = cfg.n_model_seeds;
    const int n_jobs = n_inst * n_arms * n_seeds;

    struct Job {
        double best_energy = 0.0;
        double diversity = 0.0;
        double wall_ms = 0.0;
        bool ok = false;
        std::string error;
    };
    std::vector<Job> jobs(static_cast<std::size_t>(n_jobs));

    parallel_for(n_jobs, [&](int idx) {
        int seed_idx = idx % n_seeds;
        int arm_idx = (idx / n_seeds) % n_arms;
        int inst_idx = idx / (n_seeds * n_arms);
        const ArmSpec& arm = arms[static_cast<std::size_t>(arm_idx)];
        std::uint64_t job_seed =
            derive_seed(cfg.master_seed, arm.name, static_cast<std::uint64_t>(inst_idx),
                        static_cast<std::uint64_t>(seed_idx));
        Job& out = jobs[static_cast<std::size_t>(idx)];
        auto t0 = std::chrono::steady_clock::now();
        try {
            SearchResult res = arm.run(instances[static_cast<std::size_t>(inst_idx)], job_seed);
            out.best_energy = res.best_energy;
            out.diversity = res.trace.empty() ? 0.0 : res.trace.back().diversity;
            out.ok = true;
        } catch (const std::exception& e) {
            out.error = e.what();
        }
        out.wall_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
    });

    ExperimentResult result;
    std::string rows = "# gfacs results v1\ninstance_id,arm,best_energy,wall_ms,diversity\n";
    for (int i = 0; i < n_inst; ++i)
        for (int a = 0; a < n_arms; ++a)
            for (int s = 0; s < n_seeds; ++s) {
                int idx = (i * n_arms + a) * n_seeds + s;
                const Job& job = jobs[static_cast<std::size_t>(idx)];
                if (!job.ok) {
                    result.errors_log += "instance " + std::to_string(i) + " arm " +
                                         arms[static_cast<std::size_t>(a)].name + " model_seed " +
                                         std::to_string(s) + ": " + job.error + "\n";
                    ++result.n_failed;
                    continue;
                }
                double wall = cfg.record_wall_time ? job.wall_ms : 0.0;
                rows += std::to_string(i) + "," + arms[static_cast<std::size_t>(a)].name + "," +
                        csv_double(job.best_energy) + "," + csv_double(wall) + "," +
                        csv_double(job.diversity) + "\n";
            }
    result.results_csv = std::move(rows);

    std::string summary = "# gfacs summary v1\narm,n,mean_energy,min_energy,max_energy\n";
    for (int a = 0; a < n_arms; ++a) {
        double sum = 0.0;
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        int n = 0;
        for (int i = 0; i < n_inst; ++i)
            for (int s = 0; s < n_seeds; ++s) {
                const Job& job = jobs[static_cast<std::size_t>((i * n_arms + a) * n_seeds + s)];
                if (!job.ok) continue;
                sum += job.best_energy;
                lo = std::min(lo, job.best_energy);
                hi = std::max(hi, job.best_energy);
                ++n;
            }
        double mean = n > 0 ? sum / n : std::numeric_limits<double>::quiet_NaN();
        if (n == 0) lo = hi = std::numeric_limits<double>::quiet_NaN();
        summary += arms[static_cast<std::size_t>(a)].name + "," + std::to_string(n) + "," +
                   csv_double(mean) + "," + csv_double(lo) + "," + csv_double(hi) + "\n";
    }
    result.summary_csv = std::move(summary);

    std::filesystem::create_directories(cfg.out_dir);
    write_text_file(cfg.out_dir / "results.csv", result.results_csv);
    write_text_file(cfg.out_dir / "summary.csv", result.summary_csv);
    if (!result.errors_log.empty())
        write_text_file(cfg.out_dir / "errors.log", result.errors_log);
    return result;
}

inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    std::vector<ArmSpec> arms;
    for (const auto& name : cfg.arms) arms.push_back(build_arm(name, cfg));
    auto instances = experiment_instances(cfg);
    std::filesystem::create_directories(cfg.out_dir / "instances");
    for (std::size_t i = 0; i < instances.size(); ++i)
        write_instance(cfg.out_dir / "instances" / ("instance_" + std::to_string(i) + ".json"),
                       instances[i]);
    return run_arms(cfg, instances, arms);
}

inline ExperimentResult run_ablation(const ExperimentConfig& cfg) {
    cfg.validate();
    auto instances = experiment_instances(cfg);
    std::filesystem::create_directories(cfg.out_dir / "instances");
    for (std::size_t i = 0; i < instances.size(); ++i)
        write_instance(cfg.out_dir / "instances" / ("instance_" + std::to_string(i) + ".json"),
                       instances[i]);
    return run_arms(cfg, instances, ablation_arms(cfg));
}

}  // namespace gfacs
