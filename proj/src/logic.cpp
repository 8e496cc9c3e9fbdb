#include "tracknet/logic.hpp"

#include <cmath>
#include <unordered_map>

namespace tracknet::logic {

ExprPtr make_const(double v) {
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::Const;
    e->value = v;
    return e;
}

ExprPtr make_var(std::string name) {
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::Var;
    e->name = std::move(name);
    return e;
}

ExprPtr make_bin(ExprKind op, ExprPtr l, ExprPtr r) {
    auto e = std::make_shared<Expr>();
    e->kind = op;
    e->lhs = std::move(l);
    e->rhs = std::move(r);
    return e;
}

ExprPtr make_abs(ExprPtr inner) {
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::Abs;
    e->lhs = std::move(inner);
    return e;
}

ExprPtr make_net_output(std::string net, std::string arg, int index) {
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::NetOutput;
    e->name = std::move(net);
    e->arg = std::move(arg);
    e->index = index;
    return e;
}

FormulaPtr make_cmp(CmpOp op, ExprPtr a, ExprPtr b) {
    auto f = std::make_shared<Formula>();
    f->kind = FormulaKind::Cmp;
    f->op = op;
    f->a = std::move(a);
    f->b = std::move(b);
    return f;
}

namespace {
FormulaPtr make_binary(FormulaKind k, FormulaPtr l, FormulaPtr r) {
    auto f = std::make_shared<Formula>();
    f->kind = k;
    f->l = std::move(l);
    f->r = std::move(r);
    return f;
}
}  // namespace

FormulaPtr make_and(FormulaPtr l, FormulaPtr r) { return make_binary(FormulaKind::And, std::move(l), std::move(r)); }
FormulaPtr make_or(FormulaPtr l, FormulaPtr r) { return make_binary(FormulaKind::Or, std::move(l), std::move(r)); }
FormulaPtr make_implies(FormulaPtr l, FormulaPtr r) { return make_binary(FormulaKind::Implies, std::move(l), std::move(r)); }

FormulaPtr make_not(FormulaPtr inner) {
    auto f = std::make_shared<Formula>();
    f->kind = FormulaKind::Not;
    f->l = std::move(inner);
    return f;
}

bool equal(const ExprPtr& a, const ExprPtr& b) {
    if (a == b) return true;
    if (!a || !b) return false;
    if (a->kind != b->kind) return false;
    switch (a->kind) {
        case ExprKind::Const: return a->value == b->value;
        case ExprKind::Var: return a->name == b->name;
        case ExprKind::Abs: return equal(a->lhs, b->lhs);
        case ExprKind::NetOutput:
            return a->name == b->name && a->arg == b->arg && a->index == b->index;
        default: return equal(a->lhs, b->lhs) && equal(a->rhs, b->rhs);
    }
}

bool equal(const FormulaPtr& a, const FormulaPtr& b) {
    if (a == b) return true;
    if (!a || !b) return false;
    if (a->kind != b->kind) return false;
    if (a->kind == FormulaKind::Cmp)
        return a->op == b->op && equal(a->a, b->a) && equal(a->b, b->b);
    if (a->kind == FormulaKind::Not) return equal(a->l, b->l);
    return equal(a->l, b->l) && equal(a->r, b->r);
}

FormulaPtr make_robustness_body(const std::string& net, const std::string& x,
                                const std::string& x0, double delta, int output_dim) {
    if (output_dim < 1) throw LogicError("robustness body needs at least one output");
    FormulaPtr body;
    for (int i = 0; i < output_dim; ++i) {
        auto atom = make_cmp(
            CmpOp::Le,
            make_abs(make_bin(ExprKind::Sub, make_net_output(net, x, i), make_net_output(net, x0, i))),
            make_const(delta));
        body = body ? make_and(std::move(body), std::move(atom)) : std::move(atom);
    }
    return body;
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

struct EvalContext {
    const Env* env;
    const Network* net;
    double gamma;
    // network outputs per argument variable
    std::map<std::string, Tensor> outputs;
    // accumulated d(root truth)/d(output component) per argument variable
    std::map<std::string, std::vector<double>> out_grads;
    // memoized values for the backward pass
    std::unordered_map<const Expr*, double> expr_values;
    std::unordered_map<const Formula*, double> truth_values;

    const Tensor& net_output(const Expr& e) {
        auto it = outputs.find(e.arg);
        if (it != outputs.end()) return it->second;
        auto cached = env->cached_outputs.find(e.arg);
        if (cached != env->cached_outputs.end())
            return outputs.emplace(e.arg, cached->second).first->second;
        if (net == nullptr) throw LogicError("no network bound for application " + e.name + "(" + e.arg + ")");
        auto img = env->images.find(e.arg);
        if (img == env->images.end()) throw LogicError("unbound variable '" + e.arg + "'");
        return outputs.emplace(e.arg, forward(*net, img->second)).first->second;
    }
};

double eval_expr(const ExprPtr& e, EvalContext& ctx) {
    double v = 0.0;
    switch (e->kind) {
        case ExprKind::Const: v = e->value; break;
        case ExprKind::Var: {
            auto it = ctx.env->scalars.find(e->name);
            if (it == ctx.env->scalars.end()) throw LogicError("unbound variable '" + e->name + "'");
            v = it->second;
            break;
        }
        case ExprKind::Add: v = eval_expr(e->lhs, ctx) + eval_expr(e->rhs, ctx); break;
        case ExprKind::Sub: v = eval_expr(e->lhs, ctx) - eval_expr(e->rhs, ctx); break;
        case ExprKind::Mul: v = eval_expr(e->lhs, ctx) * eval_expr(e->rhs, ctx); break;
        case ExprKind::Div: {
            const double num = eval_expr(e->lhs, ctx);
            const double den = eval_expr(e->rhs, ctx);
            if (den == 0.0) throw LogicError("division by zero");
            v = num / den;
            break;
        }
        case ExprKind::Abs: v = std::abs(eval_expr(e->lhs, ctx)); break;
        case ExprKind::NetOutput: {
            const Tensor& out = ctx.net_output(*e);
            if (e->index < 0 || e->index >= out.size())
                throw LogicError("output index " + std::to_string(e->index) + " out of range for " +
                                 e->name + "(" + e->arg + ")");
            v = out[e->index];
            break;
        }
    }
    if (!std::isfinite(v)) throw LogicError("expression evaluated to a non-finite value");
    ctx.expr_values[e.get()] = v;
    return v;
}

// fuzzified truth of one comparison; margin > 0 means violated
double cmp_truth(CmpOp op, double a, double b, double gamma) {
    const double margin = (op == CmpOp::Le || op == CmpOp::Lt) ? a - b : b - a;
    const double t = 1.0 - std::max(0.0, margin) / gamma;
    return std::clamp(t, 0.0, 1.0);
}

double eval_truth_rec(const FormulaPtr& f, EvalContext& ctx) {
    double t = 0.0;
    switch (f->kind) {
        case FormulaKind::Cmp:
            t = cmp_truth(f->op, eval_expr(f->a, ctx), eval_expr(f->b, ctx), ctx.gamma);
            break;
        case FormulaKind::And:
            t = std::min(eval_truth_rec(f->l, ctx), eval_truth_rec(f->r, ctx));
            break;
        case FormulaKind::Or:
            t = std::max(eval_truth_rec(f->l, ctx), eval_truth_rec(f->r, ctx));
            break;
        case FormulaKind::Implies: {
            const double x = eval_truth_rec(f->l, ctx);
            const double y = eval_truth_rec(f->r, ctx);
            t = x < y ? 1.0 : y;
            break;
        }
        case FormulaKind::Not:
            t = 1.0 - eval_truth_rec(f->l, ctx);
            break;
    }
    ctx.truth_values[f.get()] = t;
    return t;
}

void backprop_expr(const ExprPtr& e, double g, EvalContext& ctx) {
    switch (e->kind) {
        case ExprKind::Const:
        case ExprKind::Var:
            return;
        case ExprKind::Add:
            backprop_expr(e->lhs, g, ctx);
            backprop_expr(e->rhs, g, ctx);
            return;
        case ExprKind::Sub:
            backprop_expr(e->lhs, g, ctx);
            backprop_expr(e->rhs, -g, ctx);
            return;
        case ExprKind::Mul:
            backprop_expr(e->lhs, g * ctx.expr_values.at(e->rhs.get()), ctx);
            backprop_expr(e->rhs, g * ctx.expr_values.at(e->lhs.get()), ctx);
            return;
        case ExprKind::Div: {
            const double num = ctx.expr_values.at(e->lhs.get());
            const double den = ctx.expr_values.at(e->rhs.get());
            backprop_expr(e->lhs, g / den, ctx);
            backprop_expr(e->rhs, -g * num / (den * den), ctx);
            return;
        }
        case ExprKind::Abs: {
            const double v = ctx.expr_values.at(e->lhs.get());
            const double sign = v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
            backprop_expr(e->lhs, g * sign, ctx);
            return;
        }
        case ExprKind::NetOutput: {
            auto& grad = ctx.out_grads[e->arg];
            const Tensor& out = ctx.outputs.at(e->arg);
            if (grad.empty()) grad.assign(static_cast<std::size_t>(out.size()), 0.0);
            grad[static_cast<std::size_t>(e->index)] += g;
            return;
        }
    }
}

// routes d(root truth)/d(node); min/max ties route to the first argument
void backprop_formula(const FormulaPtr& f, double g, EvalContext& ctx) {
    if (g == 0.0) return;
    switch (f->kind) {
        case FormulaKind::Cmp: {
            const double a = ctx.expr_values.at(f->a.get());
            const double b = ctx.expr_values.at(f->b.get());
            const bool le_like = f->op == CmpOp::Le || f->op == CmpOp::Lt;
            const double margin = le_like ? a - b : b - a;
            if (margin <= 0.0 || margin >= ctx.gamma) return;  // clamp plateau
            const double dmargin = -g / ctx.gamma;
            backprop_expr(f->a, le_like ? dmargin : -dmargin, ctx);
            backprop_expr(f->b, le_like ? -dmargin : dmargin, ctx);
            return;
        }
        case FormulaKind::And: {
            const double lv = ctx.truth_values.at(f->l.get());
            const double rv = ctx.truth_values.at(f->r.get());
            backprop_formula(lv <= rv ? f->l : f->r, g, ctx);
            return;
        }
        case FormulaKind::Or: {
            const double lv = ctx.truth_values.at(f->l.get());
            const double rv = ctx.truth_values.at(f->r.get());
            backprop_formula(lv >= rv ? f->l : f->r, g, ctx);
            return;
        }
        case FormulaKind::Implies: {
            const double lv = ctx.truth_values.at(f->l.get());
            const double rv = ctx.truth_values.at(f->r.get());
            if (lv < rv) return;  // constant 1 branch
            backprop_formula(f->r, g, ctx);
            return;
        }
        case FormulaKind::Not:
            backprop_formula(f->l, -g, ctx);
            return;
    }
}

EvalContext run_with_grads(const FormulaPtr& f, const Env& env, const Network* net, double gamma,
                           double* loss_out) {
    if (!(gamma > 0.0)) throw LogicError("comparison sharpness gamma must be positive");
    EvalContext ctx{&env, net, gamma, {}, {}, {}};
    const double truth = eval_truth_rec(f, ctx);
    // d loss / d node = -d truth / d node
    backprop_formula(f, -1.0, ctx);
    if (loss_out != nullptr) *loss_out = 1.0 - truth;
    return ctx;
}

}  // namespace

double eval_truth(const FormulaPtr& f, const Env& env, const Network* net, double gamma) {
    if (!(gamma > 0.0)) throw LogicError("comparison sharpness gamma must be positive");
    if (!f) throw LogicError("empty formula");
    EvalContext ctx{&env, net, gamma, {}, {}, {}};
    return eval_truth_rec(f, ctx);
}

double constraint_loss(const FormulaPtr& f, const Env& env, const Network* net, double gamma) {
    return 1.0 - eval_truth(f, env, net, gamma);
}

double eval_scalar(const ExprPtr& e, const Env& env) {
    if (!e) throw LogicError("empty expression");
    EvalContext ctx{&env, nullptr, 1.0, {}, {}, {}, {}};
    return eval_expr(e, ctx);
}

bool eval_exact(const FormulaPtr& f, const Env& env, const Network* net) {
    if (!f) throw LogicError("empty formula");
    EvalContext ctx{&env, net, 1.0, {}, {}, {}};

    struct Rec {
        EvalContext& ctx;
        bool run(const FormulaPtr& f) {
            switch (f->kind) {
                case FormulaKind::Cmp: {
                    const double a = eval_expr(f->a, ctx);
                    const double b = eval_expr(f->b, ctx);
                    switch (f->op) {
                        case CmpOp::Le: return a <= b;
                        case CmpOp::Lt: return a < b;
                        case CmpOp::Ge: return a >= b;
                        case CmpOp::Gt: return a > b;
                    }
                    return false;
                }
                case FormulaKind::And: return run(f->l) && run(f->r);
                case FormulaKind::Or: return run(f->l) || run(f->r);
                case FormulaKind::Implies: return !run(f->l) || run(f->r);
                case FormulaKind::Not: return !run(f->l);
            }
            throw LogicError("unknown formula node");
        }
    } rec{ctx};
    return rec.run(f);
}

Tensor constraint_loss_input_grad(const FormulaPtr& f, const Env& env, const Network& net,
                                  double gamma, const std::string& var, double* loss_out) {
    EvalContext ctx = run_with_grads(f, env, &net, gamma, loss_out);
    auto img = env.images.find(var);
    if (img == env.images.end()) throw LogicError("unbound variable '" + var + "'");

    auto g = ctx.out_grads.find(var);
    if (g == ctx.out_grads.end()) {
        // formula does not touch N(var) at the current point
        return Tensor::zeros(img->second.shape);
    }
    Tensor upstream({static_cast<int>(g->second.size())});
    for (std::size_t i = 0; i < g->second.size(); ++i)
        upstream[static_cast<std::int64_t>(i)] = static_cast<float>(g->second[i]);
    BackwardOptions opts;
    opts.want_params = false;
    opts.want_input = true;
    return backward(net, img->second, upstream, opts).input;
}

Gradients constraint_loss_param_grads(const FormulaPtr& f, const Env& env, const Network& net,
                                      double gamma, double* loss_out) {
    EvalContext ctx = run_with_grads(f, env, &net, gamma, loss_out);
    Gradients total = Gradients::zeros_like(net);
    for (const auto& [var, grad] : ctx.out_grads) {
        if (env.cached_outputs.count(var) > 0) continue;  // constant w.r.t. theta
        auto img = env.images.find(var);
        if (img == env.images.end()) throw LogicError("unbound variable '" + var + "'");
        bool nonzero = false;
        for (double v : grad) nonzero = nonzero || v != 0.0;
        if (!nonzero) continue;
        Tensor upstream({static_cast<int>(grad.size())});
        for (std::size_t i = 0; i < grad.size(); ++i)
            upstream[static_cast<std::int64_t>(i)] = static_cast<float>(grad[i]);
        BackwardOptions opts;
        opts.want_params = true;
        opts.want_input = false;
        total.accumulate(backward(net, img->second, upstream, opts), 1.0f);
    }
    return total;
}

}  // namespace tracknet::logic
