#include "tracknet/train.hpp"

#include "tracknet/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace tracknet::train {

namespace {
std::atomic<std::int64_t> g_pgd_calls{0};
}

std::int64_t pgd_call_count() { return g_pgd_calls.load(std::memory_order_relaxed); }

void TrainConfig::validate() const {
    if (epochs < 1) throw TrainError("epochs must be >= 1");
    if (batch < 1) throw TrainError("batch size must be >= 1");
    if (delta < 0.0) throw TrainError("delta must be >= 0");
    if (pgd.epsilon < 0.0 || eval_pgd.epsilon < 0.0) throw TrainError("PGD epsilon must be >= 0");
    if (pgd.steps < 0 || eval_pgd.steps < 0) throw TrainError("PGD steps must be >= 0");
    if (!(lr > 0.0f)) throw TrainError("learning rate must be positive");
    if (!(gradnorm.lr >= 0.0)) throw TrainError("GradNorm learning rate must be >= 0");
}

double mse_loss(const Tensor& pred, const Tensor& label) {
    if (!pred.same_shape(label))
        throw TrainError("prediction shape " + shape_str(pred.shape) + " != label shape " +
                         shape_str(label.shape));
    double acc = 0.0;
    for (std::int64_t i = 0; i < pred.size(); ++i) {
        const double d = static_cast<double>(pred[i]) - label[i];
        acc += d * d;
    }
    return acc / static_cast<double>(pred.size());
}

// ---------------------------------------------------------------------------
// PGD

Tensor pgd_attack_box(const Network& net, const logic::FormulaPtr& body,
                      const logic::Env& base_env, const std::string& var, const Tensor& lo,
                      const Tensor& hi, const Tensor& start, const PgdConfig& cfg, double gamma,
                      std::uint64_t seed) {
    if (!lo.same_shape(hi) || !lo.same_shape(start))
        throw TrainError("PGD box shapes are not congruent");
    for (std::int64_t i = 0; i < lo.size(); ++i)
        if (lo[i] > hi[i]) throw TrainError("PGD box has lower > upper");

    logic::Env env = base_env;

    Tensor x = start;
    if (cfg.random_start) {
        SplitMix64 rng(seed);
        for (std::int64_t i = 0; i < x.size(); ++i) x[i] = rng.uniformf(lo[i], hi[i]);
    }
    for (std::int64_t i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], lo[i], hi[i]);

    const float step = static_cast<float>(cfg.effective_step());
    Tensor best = x;
    double best_loss = -1.0;

    for (int k = 0; k <= cfg.steps; ++k) {
        env.images[var] = x;
        double loss = 0.0;
        if (k == cfg.steps) {
            loss = logic::constraint_loss(body, env, &net, gamma);
        } else {
            const Tensor grad = logic::constraint_loss_input_grad(body, env, net, gamma, var, &loss);
            Tensor next = x;
            for (std::int64_t i = 0; i < x.size(); ++i) {
                const float g = grad[i];
                const float dir = g > 0.0f ? 1.0f : (g < 0.0f ? -1.0f : 0.0f);
                next[i] = std::clamp(x[i] + step * dir, lo[i], hi[i]);
            }
            if (loss > best_loss) {
                best_loss = loss;
                best = x;
            }
            x = std::move(next);
            continue;
        }
        if (loss > best_loss) {
            best_loss = loss;
            best = x;
        }
    }
    return best;
}

Tensor pgd_attack(const Network& net, const logic::FormulaPtr& body, const logic::Env& base_env,
                  const std::string& var, const Tensor& x0, const PgdConfig& cfg, double gamma,
                  std::uint64_t seed) {
    g_pgd_calls.fetch_add(1, std::memory_order_relaxed);
    const float eps = static_cast<float>(cfg.epsilon);
    Tensor lo = x0, hi = x0;
    for (std::int64_t i = 0; i < x0.size(); ++i) {
        lo[i] = std::max(x0[i] - eps, 0.0f);
        hi[i] = std::min(x0[i] + eps, 1.0f);
        // keep the degenerate case exact: x0 itself stays feasible
        if (lo[i] > hi[i]) lo[i] = hi[i] = std::clamp(x0[i], 0.0f, 1.0f);
    }
    return pgd_attack_box(net, body, base_env, var, lo, hi, x0, cfg, gamma, seed);
}

// ---------------------------------------------------------------------------
// GradNorm

void gradnorm_step(GradNormState& state, const double losses[2], const double shared_norms[2],
                   const GradNormConfig& cfg) {
    if (!(losses[0] >= 0.0) || !(losses[1] >= 0.0) || !std::isfinite(losses[0]) ||
        !std::isfinite(losses[1]))
        throw TrainError("GradNorm losses must be finite and non-negative");

    if (state.initial_loss[0] < 0.0) {
        state.initial_loss[0] = std::max(losses[0], 1e-8);
        state.initial_loss[1] = std::max(losses[1], 1e-8);
    }

    const double g0 = state.w[0] * shared_norms[0];
    const double g1 = state.w[1] * shared_norms[1];
    const double gbar = 0.5 * (g0 + g1);

    const double lt0 = losses[0] / state.initial_loss[0];
    const double lt1 = losses[1] / state.initial_loss[1];
    const double lt_mean = 0.5 * (lt0 + lt1);
    const double r0 = lt_mean > 0.0 ? lt0 / lt_mean : 1.0;
    const double r1 = lt_mean > 0.0 ? lt1 / lt_mean : 1.0;

    // gradient of |G_i - Gbar * r_i^alpha| w.r.t. w_i, targets held constant
    const double target0 = gbar * std::pow(r0, cfg.alpha);
    const double target1 = gbar * std::pow(r1, cfg.alpha);
    const double sgn0 = g0 > target0 ? 1.0 : (g0 < target0 ? -1.0 : 0.0);
    const double sgn1 = g1 > target1 ? 1.0 : (g1 < target1 ? -1.0 : 0.0);
    state.w[0] -= cfg.lr * sgn0 * shared_norms[0];
    state.w[1] -= cfg.lr * sgn1 * shared_norms[1];

    state.w[0] = std::max(state.w[0], 1e-4);
    state.w[1] = std::max(state.w[1], 1e-4);
    const double scale = 2.0 / (state.w[0] + state.w[1]);
    state.w[0] *= scale;
    state.w[1] *= scale;
    state.step += 1;
}

double shared_layer_grad_norm(const Network& net, const Gradients& grads) {
    int shared = -1;
    for (std::size_t i = 0; i < net.layers.size(); ++i)
        if (net.layers[i].kind == LayerKind::Linear) shared = static_cast<int>(i);
    if (shared < 0) throw TrainError("network has no Linear layer to use as GradNorm shared layer");
    const Tensor& gw = grads.weight[static_cast<std::size_t>(shared)];
    double acc = 0.0;
    for (std::int64_t i = 0; i < gw.size(); ++i)
        acc += static_cast<double>(gw[i]) * gw[i];
    return std::sqrt(acc);
}

// ---------------------------------------------------------------------------
// Training loop

namespace {

Tensor label_tensor(const Sample& s, int side) {
    Tensor t({2});
    t[0] = s.norm_x(side);
    t[1] = s.norm_y(side);
    return t;
}

void shuffle_indices(std::vector<std::size_t>& order, std::uint64_t seed) {
    SplitMix64 rng(seed);
    for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[rng.next() % i]);
}

}  // namespace

TrainResult train_epochs(const TrainConfig& cfg, const Dataset& train_set, const Dataset& test_set,
                         const logic::FormulaPtr& body_or_null, const EpochHook& hook) {
    cfg.validate();
    if (train_set.samples.empty() || test_set.samples.empty())
        throw TrainError("training and test sets must be non-empty");

    const int side = train_set.side;
    const logic::FormulaPtr body =
        body_or_null ? body_or_null : logic::make_robustness_body("N", "x", "x0", cfg.delta);
    const double gamma = cfg.pgd.effective_gamma(cfg.delta);

    TrainResult result;
    result.net = make_track_network(side, mix_seed(cfg.seed, 1));
    OptimizerState opt = OptimizerState::init(result.net, cfg.rule, cfg.lr);
    GradNormState gn;

    const std::size_t n = train_set.samples.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        shuffle_indices(order, mix_seed(cfg.seed, 2, static_cast<std::uint64_t>(epoch)));

        double epoch_p = 0.0, epoch_c = 0.0;

        for (std::size_t begin = 0; begin < n; begin += static_cast<std::size_t>(cfg.batch)) {
            const std::size_t bsz = std::min(static_cast<std::size_t>(cfg.batch), n - begin);
            const float inv_b = 1.0f / static_cast<float>(bsz);

            std::vector<Gradients> g_mse(bsz);
            std::vector<Gradients> g_phi(cfg.constrained ? bsz : 0);
            std::vector<double> mse_s(bsz, 0.0), closs_s(bsz, 0.0);

#pragma omp parallel for schedule(dynamic, 1)
            for (std::size_t bi = 0; bi < bsz; ++bi) {
                const Sample& s = train_set.samples[order[begin + bi]];
                const Tensor label = label_tensor(s, side);
                const Tensor pred = forward(result.net, s.image);
                mse_s[bi] = mse_loss(pred, label);

                Tensor upstream({2});
                upstream[0] = pred[0] - label[0];
                upstream[1] = pred[1] - label[1];
                BackwardOptions param_only;
                param_only.want_input = false;
                g_mse[bi] = backward(result.net, s.image, upstream, param_only);

                if (cfg.constrained) {
                    logic::Env attack_env;
                    attack_env.images["x0"] = s.image;
                    attack_env.cached_outputs["x0"] = pred;  // constant during the attack
                    const std::uint64_t atk_seed =
                        mix_seed(cfg.seed, 3, static_cast<std::uint64_t>(epoch),
                                 static_cast<std::uint64_t>(begin + bi));
                    const Tensor xstar = pgd_attack(result.net, body, attack_env, "x", s.image,
                                                    cfg.pgd, gamma, atk_seed);
                    // parameter gradients flow through N(x*) and N(x0)
                    logic::Env grad_env;
                    grad_env.images["x0"] = s.image;
                    grad_env.images["x"] = xstar;
                    g_phi[bi] = logic::constraint_loss_param_grads(body, grad_env, result.net,
                                                                   gamma, &closs_s[bi]);
                } else {
                    // reported unweighted at the clean point; no attack runs
                    logic::Env clean_env;
                    clean_env.cached_outputs["x0"] = pred;
                    clean_env.cached_outputs["x"] = pred;
                    closs_s[bi] = logic::constraint_loss(body, clean_env, nullptr, gamma);
                }
            }

            // fixed-order reduction keeps runs bit-reproducible
            double batch_p = 0.0, batch_c = 0.0;
            Gradients total_mse = Gradients::zeros_like(result.net);
            Gradients total_phi = Gradients::zeros_like(result.net);
            for (std::size_t bi = 0; bi < bsz; ++bi) {
                batch_p += mse_s[bi];
                batch_c += closs_s[bi];
                total_mse.accumulate(g_mse[bi], inv_b);
                if (cfg.constrained) total_phi.accumulate(g_phi[bi], inv_b);
            }
            batch_p /= static_cast<double>(bsz);
            batch_c /= static_cast<double>(bsz);
            epoch_p += batch_p * static_cast<double>(bsz);
            epoch_c += batch_c * static_cast<double>(bsz);

            if (cfg.constrained) {
                const double losses[2] = {batch_p, batch_c};
                const double norms[2] = {shared_layer_grad_norm(result.net, total_mse),
                                         shared_layer_grad_norm(result.net, total_phi)};
                // combine with the current weights, then adapt them
                Gradients combined = Gradients::zeros_like(result.net);
                combined.accumulate(total_mse, static_cast<float>(gn.w[0]));
                combined.accumulate(total_phi, static_cast<float>(gn.w[1]));
                gradnorm_step(gn, losses, norms, cfg.gradnorm);
                optimizer_step(result.net, combined, opt);
                result.training_attacks += static_cast<std::int64_t>(bsz);
            } else {
                optimizer_step(result.net, total_mse, opt);
            }
            if (hook) hook(epoch, gn);
        }

        const auto [test_p, test_c] = evaluate(result.net, test_set, body, cfg.eval_pgd, cfg.delta,
                                               mix_seed(cfg.seed, 4, static_cast<std::uint64_t>(epoch)));
        EpochMetrics m;
        m.epoch = epoch;
        m.train_p_loss = epoch_p / static_cast<double>(n);
        m.train_c_loss = epoch_c / static_cast<double>(n);
        m.test_p_loss = test_p;
        m.test_c_acc = test_c;
        m.lambda = cfg.constrained ? gn.lambda() : 1.0;
        result.metrics.push_back(m);
    }
    return result;
}

std::pair<double, double> evaluate(const Network& net, const Dataset& ds,
                                   const logic::FormulaPtr& body, const PgdConfig& pgd,
                                   double delta, std::uint64_t seed) {
    if (ds.samples.empty()) throw TrainError("cannot evaluate on an empty dataset");
    const int side = ds.side;
    const double gamma = pgd.effective_gamma(delta);
    const std::size_t n = ds.samples.size();
    std::vector<double> p_loss(n, 0.0);
    std::vector<int> satisfied(n, 0);

#pragma omp parallel for schedule(dynamic, 1)
    for (std::size_t i = 0; i < n; ++i) {
        const Sample& s = ds.samples[i];
        const Tensor pred = forward(net, s.image);
        p_loss[i] = mse_loss(pred, label_tensor(s, side));

        logic::Env env;
        env.images["x0"] = s.image;
        env.cached_outputs["x0"] = pred;
        const Tensor xstar = pgd_attack(net, body, env, "x", s.image, pgd, gamma,
                                        mix_seed(seed, static_cast<std::uint64_t>(i)));
        env.images["x"] = xstar;
        satisfied[i] = logic::eval_exact(body, env, &net) ? 1 : 0;
    }

    double p_sum = 0.0;
    long sat = 0;
    for (std::size_t i = 0; i < n; ++i) {
        p_sum += p_loss[i];
        sat += satisfied[i];
    }
    return {p_sum / static_cast<double>(n), static_cast<double>(sat) / static_cast<double>(n)};
}

std::string metrics_csv(const std::vector<EpochMetrics>& metrics) {
    std::string out = "epoch,Train-P-Loss,Train-C-Loss,Test-P-Loss,Test-C-Acc,lambda\n";
    char buf[200];
    for (const auto& m : metrics) {
        std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%.9g,%.9g,%.9g\n", m.epoch, m.train_p_loss,
                      m.train_c_loss, m.test_p_loss, m.test_c_acc, m.lambda);
        out += buf;
    }
    return out;
}

void write_metrics_csv(const std::vector<EpochMetrics>& metrics, const std::string& path) {
    std::ofstream f(path, std::ios::trunc | std::ios::binary);
    if (!f) throw TrainError("cannot open '" + path + "' for writing");
    const std::string csv = metrics_csv(metrics);
    f.write(csv.data(), static_cast<std::streamsize>(csv.size()));
    if (!f) throw TrainError("write to '" + path + "' failed");
}

}  // namespace tracknet::train
