#pragma once

#include "tracknet/data.hpp"
#include "tracknet/logic.hpp"
#include "tracknet/net.hpp"

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace tracknet::train {

struct TrainError : std::runtime_error {
    explicit TrainError(const std::string& msg) : std::runtime_error("train: " + msg) {}
};

struct PgdConfig {
    double epsilon = 4.0 / 255.0;
    int steps = 10;
    double step_size = 0.0;  // <= 0 selects epsilon / 4
    bool random_start = true;
    double gamma = 0.0;  // <= 0 selects the active delta

    double effective_step() const { return step_size > 0.0 ? step_size : epsilon / 4.0; }
    double effective_gamma(double delta) const {
        if (gamma > 0.0) return gamma;
        return delta > 1e-6 ? delta : 1e-6;
    }
};

struct GradNormConfig {
    double alpha = 1.5;  // restoring-force asymmetry
    double lr = 0.025;   // task-weight learning rate
};

struct TrainConfig {
    int epochs = 100;
    int batch = 16;
    bool constrained = false;
    double delta = 0.1;
    PgdConfig pgd;                 // training-time attack (random start on)
    PgdConfig eval_pgd;            // evaluation attack (random start off)
    GradNormConfig gradnorm;
    OptimizerState::Rule rule = OptimizerState::Rule::Adam;
    float lr = 1e-3f;
    std::uint64_t seed = 0;

    TrainConfig() { eval_pgd.random_start = false; }
    void validate() const;
};

// Task weights for the combined loss w0 * L_mse + w1 * L_phi, kept positive
// and renormalized to w0 + w1 = 2 after every update. lambda() is the
// effective constraint weight relative to the data loss.
struct GradNormState {
    double w[2] = {1.0, 1.0};
    double initial_loss[2] = {-1.0, -1.0};
    std::int64_t step = 0;

    double lambda() const { return w[1] / w[0]; }
};

struct LossBreakdown {
    double prediction = 0.0;  // L_mse
    double constraint = 0.0;  // L_phi
    double combined = 0.0;    // w0 * L_mse + w1 * L_phi
};

struct EpochMetrics {
    int epoch = 0;
    double train_p_loss = 0.0;
    double train_c_loss = 0.0;
    double test_p_loss = 0.0;
    double test_c_acc = 0.0;
    double lambda = 1.0;
};

// mean over components of squared differences
double mse_loss(const Tensor& pred, const Tensor& label);

// Projected gradient ascent on the constraint loss over the box
// [max(x0-eps,0), min(x0+eps,1)]; returns the iterate with maximal loss.
// base_env must bind everything the body needs except `var`.
Tensor pgd_attack(const Network& net, const logic::FormulaPtr& body, const logic::Env& base_env,
                  const std::string& var, const Tensor& x0, const PgdConfig& cfg, double gamma,
                  std::uint64_t seed);

// box-constrained variant used by the verifier's input splitting
Tensor pgd_attack_box(const Network& net, const logic::FormulaPtr& body,
                      const logic::Env& base_env, const std::string& var, const Tensor& lo,
                      const Tensor& hi, const Tensor& start, const PgdConfig& cfg, double gamma,
                      std::uint64_t seed);

// number of pgd_attack invocations in this process; lets tests assert that
// vanilla training never attacks
std::int64_t pgd_call_count();

// One GradNorm update from measured per-task losses and per-task gradient
// norms at the shared layer (norms of grad L_i, before task weighting).
void gradnorm_step(GradNormState& state, const double losses[2], const double shared_norms[2],
                   const GradNormConfig& cfg);

// L2 norm of the final Linear layer's weight gradient (the designated
// GradNorm shared layer).
double shared_layer_grad_norm(const Network& net, const Gradients& grads);

using EpochHook = std::function<void(int epoch, const GradNormState&)>;

struct TrainResult {
    Network net;
    std::vector<EpochMetrics> metrics;
    std::int64_t training_attacks = 0;  // PGD calls made by the training path
};

// Minimizes L_mse (vanilla) or w0*L_mse + w1*L_phi with per-sample PGD
// counterexamples and GradNorm balancing (constrained). Deterministic for a
// given config and seed.
TrainResult train_epochs(const TrainConfig& cfg, const Dataset& train_set, const Dataset& test_set,
                         const logic::FormulaPtr& body_or_null = nullptr,
                         const EpochHook& hook = nullptr);

// Test-P-Loss and Test-C-Acc: mean MSE plus the fraction of samples whose
// constraint holds exactly at the PGD-found worst point.
std::pair<double, double> evaluate(const Network& net, const Dataset& ds,
                                   const logic::FormulaPtr& body, const PgdConfig& pgd,
                                   double delta, std::uint64_t seed);

std::string metrics_csv(const std::vector<EpochMetrics>& metrics);
void write_metrics_csv(const std::vector<EpochMetrics>& metrics, const std::string& path);

}  // namespace tracknet::train
