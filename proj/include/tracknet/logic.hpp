#pragma once

#include "tracknet/net.hpp"
#include "tracknet/tensor.hpp"

#include <map>
#include <memory>
#include <stdexcept>
#include <string>

namespace tracknet::logic {

struct LogicError : std::runtime_error {
    explicit LogicError(const std::string& msg) : std::runtime_error("logic: " + msg) {}
};

// ---------------------------------------------------------------------------
// Constraint AST: comparisons over arithmetic expressions of constants, bound
// scalar variables and indexed network outputs, combined with and/or/=>/not.

enum class ExprKind { Const, Var, Add, Sub, Mul, Div, Abs, NetOutput };

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
    ExprKind kind = ExprKind::Const;
    double value = 0.0;  // Const
    std::string name;    // Var: variable name; NetOutput: network name
    std::string arg;     // NetOutput: argument variable
    int index = 0;       // NetOutput: output component
    ExprPtr lhs, rhs;    // binary ops; Abs uses lhs
};

ExprPtr make_const(double v);
ExprPtr make_var(std::string name);
ExprPtr make_bin(ExprKind op, ExprPtr l, ExprPtr r);
ExprPtr make_abs(ExprPtr e);
ExprPtr make_net_output(std::string net, std::string arg, int index);

enum class FormulaKind { Cmp, And, Or, Implies, Not };
enum class CmpOp { Le, Lt, Ge, Gt };

struct Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

struct Formula {
    FormulaKind kind = FormulaKind::Cmp;
    CmpOp op = CmpOp::Le;
    ExprPtr a, b;     // Cmp
    FormulaPtr l, r;  // And/Or/Implies; Not uses l
};

FormulaPtr make_cmp(CmpOp op, ExprPtr a, ExprPtr b);
FormulaPtr make_and(FormulaPtr l, FormulaPtr r);
FormulaPtr make_or(FormulaPtr l, FormulaPtr r);
FormulaPtr make_implies(FormulaPtr l, FormulaPtr r);
FormulaPtr make_not(FormulaPtr f);

bool equal(const ExprPtr& a, const ExprPtr& b);
bool equal(const FormulaPtr& a, const FormulaPtr& b);

// and_i |N(x)[i] - N(x0)[i]| <= delta
FormulaPtr make_robustness_body(const std::string& net, const std::string& x,
                                const std::string& x0, double delta, int output_dim = 2);

// ---------------------------------------------------------------------------
// Evaluation environment. Scalars bind parameter names, images bind network
// application arguments. cached_outputs short-circuits forward passes for
// variables whose network output is already known (e.g. a fixed anchor).

struct Env {
    std::map<std::string, double> scalars;
    std::map<std::string, Tensor> images;
    std::map<std::string, Tensor> cached_outputs;
};

// Goedel fuzzy value in [0,1]: and -> min, or -> max, x => y -> (1 if x < y
// else y), not x -> 1 - x. Comparisons fuzzify through the linear margin rule
// clamp(1 - max(0, violation)/gamma, 0, 1); gamma must be positive. Strict
// comparisons evaluate like their non-strict versions here.
double eval_truth(const FormulaPtr& f, const Env& env, const Network* net, double gamma);

// classical two-valued semantics with exact strict/non-strict comparisons
bool eval_exact(const FormulaPtr& f, const Env& env, const Network* net);

// evaluates a network-free expression over the environment's scalars
double eval_scalar(const ExprPtr& e, const Env& env);

// 1 - eval_truth; differentiable almost everywhere
double constraint_loss(const FormulaPtr& f, const Env& env, const Network* net, double gamma);

// d constraint_loss / d image bound to `var`; gradient flows only through
// N(var) applications. Returns the loss through *loss_out when non-null.
Tensor constraint_loss_input_grad(const FormulaPtr& f, const Env& env, const Network& net,
                                  double gamma, const std::string& var, double* loss_out = nullptr);

// d constraint_loss / d theta, flowing through every non-cached network
// application in the formula
Gradients constraint_loss_param_grads(const FormulaPtr& f, const Env& env, const Network& net,
                                      double gamma, double* loss_out = nullptr);

}  // namespace tracknet::logic
