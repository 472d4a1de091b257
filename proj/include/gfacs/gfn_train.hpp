#pragma once

#include <chrono>
#include <cmath>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gfacs/construct.hpp"
#include "gfacs/heatmap.hpp"
#include "gfacs/local_search.hpp"
#include "gfacs/parallel.hpp"
#include "gfacs/problems.hpp"
#include "gfacs/rng.hpp"

namespace gfacs {

// Trains the edge logits so that sampled solutions follow the Boltzmann-like
// target exp(-beta * energy), using the trajectory-balance residual
//   r = log P_F(tau) + log Z + log h(x) + beta * E~(x)
// where h(x) counts the symmetric trajectories of x and E~ is the energy
// after per-batch mean subtraction. Everything stays in log domain; the
// unnormalized target itself is never materialized, so large beta is safe.

enum class LossKind { Tb, VarGrad };

inline LossKind loss_kind_from_string(const std::string& s) {
    if (s == "tb") return LossKind::Tb;
    if (s == "vargrad") return LossKind::VarGrad;
    throw ConfigError("unknown loss '" + s + "'");
}

struct TrainConfig {
    double beta_min = 200.0;
    double beta_max = 1000.0;
    int n_epoch = 100;
    int n_flat = 0;            // final epochs held at beta_max
    int k_samples = 30;        // trajectories per batch
    double alpha_start = 0.5;  // refined-energy weight at epoch 1
    double alpha_end = 1.0;
    double lr = 0.01;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    LossKind loss_kind = LossKind::Tb;
    HeatmapInit init = HeatmapInit::FromHeuristic;
    bool off_policy = true;        // add the refined-and-resampled batch
    bool energy_reshaping = true;  // blend refined energy into explore targets
    bool shared_norm = true;       // per-batch mean subtraction

    void validate() const {
        if (n_epoch < 1) throw ConfigError("train: n_epoch must be >= 1");
        if (n_flat < 0 || n_flat >= n_epoch) throw ConfigError("train: n_flat out of range");
        if (k_samples < 2) throw ConfigError("train: k_samples must be >= 2");
        if (beta_min > beta_max) throw ConfigError("train: beta_min exceeds beta_max");
        if (lr <= 0.0) throw ConfigError("train: lr must be positive");
    }
};

/// Inverse-temperature tables by problem family.
inline TrainConfig default_train_config(ProblemKind kind) {
    TrainConfig cfg;
    switch (kind) {
        case ProblemKind::Tsp: cfg.beta_min = 200.0; cfg.beta_max = 1000.0; break;
        case ProblemKind::Cvrp: cfg.beta_min = 500.0; cfg.beta_max = 2000.0; break;
        case ProblemKind::Smtwtp: cfg.beta_min = 10.0; cfg.beta_max = 20.0; break;
        case ProblemKind::Bpp: cfg.beta_min = 1000.0; cfg.beta_max = 2000.0; break;
    }
    return cfg;
}

/// Logarithmic warmup from beta_min to beta_max, flat for the last n_flat
/// epochs: beta_min + (beta_max - beta_min) * min(log e / log(E - n_flat), 1).
inline double beta_schedule(int epoch, const TrainConfig& cfg) {
    if (epoch < 1 || epoch > cfg.n_epoch) throw ConfigError("beta_schedule: epoch out of range");
    double span = static_cast<double>(cfg.n_epoch - cfg.n_flat);
    double ratio = span > 1.0
                       ? std::min(std::log(static_cast<double>(epoch)) / std::log(span), 1.0)
                       : 1.0;
    return cfg.beta_min + (cfg.beta_max - cfg.beta_min) * ratio;
}

/// Linear ramp of the refined-energy weight across epochs.
inline double alpha_schedule(int epoch, const TrainConfig& cfg) {
    if (epoch < 1 || epoch > cfg.n_epoch) throw ConfigError("alpha_schedule: epoch out of range");
    if (cfg.n_epoch <= 1) return cfg.alpha_end;
    double t = static_cast<double>(epoch - 1) / static_cast<double>(cfg.n_epoch - 1);
    return cfg.alpha_start + (cfg.alpha_end - cfg.alpha_start) * t;
}

/// Convex blend of raw and locally refined energy.
inline double reshape_energy(double raw, double refined, double alpha) {
    return alpha * refined + (1.0 - alpha) * raw;
}

/// Subtracts the batch mean; the constant shift lands in log Z instead of
/// blowing up the residual scale.
inline std::vector<double> shared_energy_normalize(const std::vector<double>& energies) {
    if (energies.empty()) return {};
    double mean = 0.0;
    for (double e : energies) mean += e;
    mean /= static_cast<double>(energies.size());
    std::vector<double> out(energies.size());
    for (std::size_t i = 0; i < energies.size(); ++i) out[i] = energies[i] - mean;
    return out;
}

/// One trajectory with everything the loss needs.
struct Experience {
    Trajectory traj;
    double energy = 0.0;           // raw objective of the constructed solution
    double reshaped_energy = 0.0;  // loss target before normalization
    double log_h = 0.0;            // log symmetric-trajectory count
};

struct ExperienceBatches {
    std::vector<Experience> explore;  // sampled from the current policy
    std::vector<Experience> exploit;  // refined solutions, resampled backward
};

/// Draws K trajectories from the current policy, refines each once with `ls`,
/// and returns both the on-policy batch (energies blended by alpha) and the
/// off-policy batch built from uniformly resampled readings of the refined
/// solutions. Deterministic for a given rng regardless of thread count.
inline ExperienceBatches collect_experiences(const ProblemInstance& inst, const TrainState& state,
                                             int k, const LocalSearch& ls, double alpha,
                                             RngStream& rng) {
    if (k < 1) throw ConfigError("collect_experiences: k must be >= 1");
    Heatmap eta = to_heatmap(state);
    Pheromone flat(inst.dim(), 1.0);
    ExperienceBatches out;
    out.explore.resize(static_cast<std::size_t>(k));
    out.exploit.resize(static_cast<std::size_t>(k));
    std::uint64_t batch_seed = rng.next();
    parallel_for(k, [&](int i) {
        RngStream local(derive_seed(batch_seed, "experience", static_cast<std::uint64_t>(i)));
        Trajectory traj = sample_trajectory(inst, eta, flat, local);
        Solution x = solution_of(inst, traj);
        double raw = energy(inst, x);
        Solution refined = ls.refine(inst, x, eta, flat, local);
        double refined_e = energy(inst, refined);

        Experience ex;
        ex.log_h = log_count_symmetric(inst, x);
        ex.energy = raw;
        ex.reshaped_energy = reshape_energy(raw, refined_e, alpha);
        ex.traj = std::move(traj);
        out.explore[static_cast<std::size_t>(i)] = std::move(ex);

        Experience xp;
        xp.traj = sample_backward_trajectory(inst, refined, local);
        xp.traj.log_pf = trajectory_logprob(inst, eta, flat, xp.traj);
        xp.energy = refined_e;
        xp.reshaped_energy = refined_e;
        xp.log_h = log_count_symmetric(inst, refined);
        out.exploit[static_cast<std::size_t>(i)] = std::move(xp);
    });
    return out;
}

/// Gradient accumulator matching TrainState's learnable parameters.
struct ParamGrads {
    Matrix theta;
    double log_z = 0.0;
    explicit ParamGrads(int dim) : theta(dim, 0.0) {}
    void add_scaled(const ParamGrads& o, double s) {
        for (std::size_t i = 0; i < theta.values().size(); ++i)
            theta.values()[i] += s * o.theta.values()[i];
        log_z += s * o.log_z;
    }
};

/// One instance's batch as consumed by the losses. norm_energy must already
/// be shared-normalized (or deliberately raw for ablations).
struct LossBatch {
    const ProblemInstance* inst = nullptr;
    const TrainState* state = nullptr;
    const std::vector<Experience>* xs = nullptr;
    std::vector<double> norm_energy;
};

namespace detail {

/// Accumulates coeff * d log P_F(tau) / d theta into grad. Per step the
/// masked-softmax gradient is 1{j = a} - p_j on the support of the row.
inline double add_logprob_grad(const ProblemInstance& inst, const Heatmap& eta,
                               const Pheromone& rho, const std::vector<int>& actions,
                               double coeff, Matrix& grad) {
    return replay_trajectory(
        inst, eta, rho, actions,
        [&](int row, std::size_t pick, const std::vector<int>& support,
            const std::vector<double>& weights, double total) {
            grad(row, support[pick]) += coeff;
            for (std::size_t k = 0; k < support.size(); ++k)
                grad(row, support[k]) -= coeff * weights[k] / total;
        });
}

[[noreturn]] inline void throw_nonfinite(const char* what, int m, int k, double log_pf,
                                         double log_z, double log_h, double beta,
                                         double norm_e) {
    throw NumericError(std::string(what) + " is not finite (batch " + std::to_string(m) +
                       ", sample " + std::to_string(k) + ": log_pf=" + std::to_string(log_pf) +
                       " log_z=" + std::to_string(log_z) + " log_h=" + std::to_string(log_h) +
                       " beta=" + std::to_string(beta) + " norm_e=" + std::to_string(norm_e) + ")");
}

}  // namespace detail

struct LossResult {
    double loss = 0.0;
    std::vector<ParamGrads> grads;  // aligned with the input batches
};

/// Mean squared trajectory-balance residual over all batches (each batch owns
/// its log Z), with analytic gradients. Residuals are summed in fixed batch
/// and sample order so results do not depend on thread count.
inline LossResult tb_loss_and_grads(std::span<const LossBatch> batches, double beta) {
    if (batches.empty()) throw ConfigError("tb_loss_and_grads: no batches");
    std::size_t total_count = 0;
    for (const auto& b : batches) total_count += b.xs->size();
    if (total_count == 0) throw ConfigError("tb_loss_and_grads: empty batches");

    LossResult out;
    double scale = 1.0 / static_cast<double>(total_count);
    for (std::size_t m = 0; m < batches.size(); ++m) {
        const LossBatch& b = batches[m];
        if (b.norm_energy.size() != b.xs->size())
            throw ConfigError("tb_loss_and_grads: energy vector size mismatch");
        Heatmap eta = to_heatmap(*b.state);
        Pheromone flat(b.inst->dim(), 1.0);
        ParamGrads g(b.state->theta.dim());
        for (std::size_t k = 0; k < b.xs->size(); ++k) {
            const Experience& x = (*b.xs)[k];
            double log_pf = trajectory_logprob(*b.inst, eta, flat, x.traj);
            double r = log_pf + b.state->log_z + x.log_h + beta * b.norm_energy[k];
            if (!std::isfinite(r))
                detail::throw_nonfinite("tb residual", static_cast<int>(m), static_cast<int>(k),
                                        log_pf, b.state->log_z, x.log_h, beta, b.norm_energy[k]);
            out.loss += r * r * scale;
            double coeff = 2.0 * r * scale;
            detail::add_logprob_grad(*b.inst, eta, flat, x.traj.actions, coeff, g.theta);
            g.log_z += coeff;
        }
        out.grads.push_back(std::move(g));
    }
    return out;
}

/// Unbiased sample variance (divisor K-1) of the per-trajectory score
/// c_k = log P_F + log h + beta * E~, for a single instance batch. No log Z
/// parameter participates; its gradient slot stays zero.
inline LossResult vargrad_loss_and_grads(const LossBatch& batch, double beta) {
    std::size_t k_count = batch.xs->size();
    if (k_count < 2) throw ConfigError("vargrad_loss_and_grads: need k >= 2");
    if (batch.norm_energy.size() != k_count)
        throw ConfigError("vargrad_loss_and_grads: energy vector size mismatch");

    Heatmap eta = to_heatmap(*batch.state);
    Pheromone flat(batch.inst->dim(), 1.0);
    std::vector<double> c(k_count);
    double mean = 0.0;
    for (std::size_t k = 0; k < k_count; ++k) {
        const Experience& x = (*batch.xs)[k];
        double log_pf = trajectory_logprob(*batch.inst, eta, flat, x.traj);
        c[k] = log_pf + x.log_h + beta * batch.norm_energy[k];
        if (!std::isfinite(c[k]))
            detail::throw_nonfinite("vargrad score", 0, static_cast<int>(k), log_pf, 0.0,
                                    x.log_h, beta, batch.norm_energy[k]);
        mean += c[k];
    }
    mean /= static_cast<double>(k_count);

    LossResult out;
    ParamGrads g(batch.state->theta.dim());
    double denom = static_cast<double>(k_count - 1);
    for (std::size_t k = 0; k < k_count; ++k) {
        double centered = c[k] - mean;
        out.loss += centered * centered / denom;
        detail::add_logprob_grad(*batch.inst, eta, flat, (*batch.xs)[k].traj.actions,
                                 2.0 * centered / denom, g.theta);
    }
    out.grads.push_back(std::move(g));
    return out;
}

/// One Adam update on theta and log Z; logits are clamped afterwards.
inline void adam_step(TrainState& st, const ParamGrads& g, const TrainConfig& cfg) {
    ++st.step;
    double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(st.step));
    double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(st.step));
    auto update = [&](double& param, double& m1, double& m2, double grad) {
        m1 = cfg.adam_beta1 * m1 + (1.0 - cfg.adam_beta1) * grad;
        m2 = cfg.adam_beta2 * m2 + (1.0 - cfg.adam_beta2) * grad * grad;
        param -= cfg.lr * (m1 / bc1) / (std::sqrt(m2 / bc2) + cfg.adam_eps);
    };
    int d = st.theta.dim();
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            update(st.theta(i, j), st.moment1(i, j), st.moment2(i, j), g.theta(i, j));
            if (st.theta(i, j) > kLogitClamp) st.theta(i, j) = kLogitClamp;
            if (st.theta(i, j) < -kLogitClamp) st.theta(i, j) = -kLogitClamp;
        }
    update(st.log_z, st.log_z_m1, st.log_z_m2, g.log_z);
}

/// Full training loop. Each epoch collects fresh batches, normalizes their
/// energies, averages the explore and exploit losses (when off_policy), and
/// takes one Adam step. Telemetry rows (CSV: epoch, beta, alpha,
/// loss_explore, loss_exploit, best_energy, wall_ms) go to `telemetry` when
/// given. Returns the trained heatmap; `final_state` receives the raw
/// parameters when requested.
inline Heatmap train_prior(const ProblemInstance& inst, const TrainConfig& cfg,
                           const LocalSearch& ls, RngStream& rng,
                           std::ostream* telemetry = nullptr,
                           TrainState* final_state = nullptr) {
    cfg.validate();
    TrainState state = init_learnable(inst, cfg.init);
    double best_energy = std::numeric_limits<double>::infinity();
    if (telemetry)
        *telemetry << "# gfacs telemetry v1\n"
                      "epoch,beta,alpha,loss_explore,loss_exploit,best_energy,wall_ms\n";

    for (int epoch = 1; epoch <= cfg.n_epoch; ++epoch) {
        auto t0 = std::chrono::steady_clock::now();
        double beta = beta_schedule(epoch, cfg);
        double alpha = cfg.energy_reshaping ? alpha_schedule(epoch, cfg) : 0.0;

        ExperienceBatches batches =
            collect_experiences(inst, state, cfg.k_samples, ls, alpha, rng);
        for (const auto& x : batches.explore) best_energy = std::min(best_energy, x.energy);
        for (const auto& x : batches.exploit) best_energy = std::min(best_energy, x.energy);

        auto make_batch = [&](const std::vector<Experience>& xs) {
            LossBatch b;
            b.inst = &inst;
            b.state = &state;
            b.xs = &xs;
            std::vector<double> reshaped(xs.size());
            for (std::size_t i = 0; i < xs.size(); ++i) reshaped[i] = xs[i].reshaped_energy;
            b.norm_energy = cfg.shared_norm ? shared_energy_normalize(reshaped)
                                            : std::move(reshaped);
            return b;
        };

        LossBatch explore = make_batch(batches.explore);
        double loss_explore = 0.0, loss_exploit = 0.0;
        ParamGrads total(state.theta.dim());
        if (cfg.loss_kind == LossKind::Tb) {
            LossResult ex = tb_loss_and_grads(std::span<const LossBatch>(&explore, 1), beta);
            loss_explore = ex.loss;
            if (cfg.off_policy) {
                LossBatch exploit = make_batch(batches.exploit);
                LossResult xp =
                    tb_loss_and_grads(std::span<const LossBatch>(&exploit, 1), beta);
                loss_exploit = xp.loss;
                total.add_scaled(ex.grads[0], 0.5);
                total.add_scaled(xp.grads[0], 0.5);
            } else {
                total.add_scaled(ex.grads[0], 1.0);
            }
        } else {
            LossResult ex = vargrad_loss_and_grads(explore, beta);
            loss_explore = ex.loss;
            if (cfg.off_policy) {
                LossBatch exploit = make_batch(batches.exploit);
                LossResult xp = vargrad_loss_and_grads(exploit, beta);
                loss_exploit = xp.loss;
                total.add_scaled(ex.grads[0], 0.5);
                total.add_scaled(xp.grads[0], 0.5);
            } else {
                total.add_scaled(ex.grads[0], 1.0);
            }
        }
        adam_step(state, total, cfg);

        if (telemetry) {
            auto ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
            *telemetry << epoch << ',' << beta << ',' << alpha << ',' << loss_explore << ','
                       << loss_exploit << ',' << best_energy << ',' << ms << '\n';
        }
    }
    if (final_state) *final_state = state;
    return to_heatmap(state);
}

}  // namespace gfacs
