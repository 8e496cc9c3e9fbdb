#include "tracknet/speclang.hpp"

#include "tracknet/data.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>

namespace tracknet::speclang {

using logic::CmpOp;
using logic::Expr;
using logic::ExprKind;
using logic::ExprPtr;
using logic::Formula;
using logic::FormulaKind;
using logic::FormulaPtr;

// ---------------------------------------------------------------------------
// Lexer

namespace {

enum class Tok {
    Ident, Number, String,
    KwParam, KwInput, KwNetwork, KwForall, KwIn, KwBall, KwAnd, KwOr, KwNot, KwAbs,
    Assign, LParen, RParen, LBracket, RBracket, Dot, Comma,
    Arrow, Le, Lt, Ge, Gt, Plus, Minus, Star, Slash,
    End,
};

const char* tok_name(Tok t) {
    switch (t) {
        case Tok::Ident: return "identifier";
        case Tok::Number: return "number";
        case Tok::String: return "string";
        case Tok::KwParam: return "'param'";
        case Tok::KwInput: return "'input'";
        case Tok::KwNetwork: return "'network'";
        case Tok::KwForall: return "'forall'";
        case Tok::KwIn: return "'in'";
        case Tok::KwBall: return "'ball'";
        case Tok::KwAnd: return "'and'";
        case Tok::KwOr: return "'or'";
        case Tok::KwNot: return "'not'";
        case Tok::KwAbs: return "'abs'";
        case Tok::Assign: return "'='";
        case Tok::LParen: return "'('";
        case Tok::RParen: return "')'";
        case Tok::LBracket: return "'['";
        case Tok::RBracket: return "']'";
        case Tok::Dot: return "'.'";
        case Tok::Comma: return "','";
        case Tok::Arrow: return "'=>'";
        case Tok::Le: return "'<='";
        case Tok::Lt: return "'<'";
        case Tok::Ge: return "'>='";
        case Tok::Gt: return "'>'";
        case Tok::Plus: return "'+'";
        case Tok::Minus: return "'-'";
        case Tok::Star: return "'*'";
        case Tok::Slash: return "'/'";
        case Tok::End: return "end of input";
    }
    return "?";
}

struct Token {
    Tok kind;
    std::string text;
    double number = 0.0;
    int line = 1;
    int col = 1;
};

std::vector<Token> lex(const std::string& text) {
    std::vector<Token> out;
    int line = 1, col = 1;
    std::size_t i = 0;

    auto advance = [&](std::size_t n) {
        for (std::size_t k = 0; k < n; ++k) {
            if (text[i + k] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        i += n;
    };

    static const std::map<std::string, Tok> keywords = {
        {"param", Tok::KwParam}, {"input", Tok::KwInput},   {"network", Tok::KwNetwork},
        {"forall", Tok::KwForall}, {"in", Tok::KwIn},       {"ball", Tok::KwBall},
        {"and", Tok::KwAnd},     {"or", Tok::KwOr},         {"not", Tok::KwNot},
        {"abs", Tok::KwAbs},
    };

    while (i < text.size()) {
        const char c = text[i];
        if (c == '#') {  // comment to end of line
            while (i < text.size() && text[i] != '\n') advance(1);
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(c))) {
            advance(1);
            continue;
        }
        const int tline = line, tcol = col;
        auto push = [&](Tok k, std::size_t n) {
            out.push_back({k, text.substr(i, n), 0.0, tline, tcol});
            advance(n);
        };
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t j = i;
            while (j < text.size() &&
                   (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '_'))
                ++j;
            const std::string word = text.substr(i, j - i);
            auto kw = keywords.find(word);
            push(kw != keywords.end() ? kw->second : Tok::Ident, j - i);
            continue;
        }
        const bool digit_start = std::isdigit(static_cast<unsigned char>(c));
        const bool dot_number = c == '.' && i + 1 < text.size() &&
                                std::isdigit(static_cast<unsigned char>(text[i + 1]));
        if (digit_start || dot_number) {
            std::size_t j = i;
            while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
            if (j < text.size() && text[j] == '.') {
                ++j;
                while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
            }
            if (j < text.size() && (text[j] == 'e' || text[j] == 'E')) {
                std::size_t k = j + 1;
                if (k < text.size() && (text[k] == '+' || text[k] == '-')) ++k;
                if (k < text.size() && std::isdigit(static_cast<unsigned char>(text[k]))) {
                    j = k;
                    while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
                }
            }
            Token t{Tok::Number, text.substr(i, j - i), 0.0, tline, tcol};
            t.number = std::strtod(t.text.c_str(), nullptr);
            if (!std::isfinite(t.number))
                throw SpecError(tline, tcol, "numeric literal out of range: " + t.text);
            out.push_back(std::move(t));
            advance(j - i);
            continue;
        }
        if (c == '"') {
            std::size_t j = i + 1;
            while (j < text.size() && text[j] != '"' && text[j] != '\n') ++j;
            if (j >= text.size() || text[j] != '"')
                throw SpecError(tline, tcol, "unterminated string literal");
            out.push_back({Tok::String, text.substr(i + 1, j - i - 1), 0.0, tline, tcol});
            advance(j + 1 - i);
            continue;
        }
        auto two = [&](char a, char b) {
            return c == a && i + 1 < text.size() && text[i + 1] == b;
        };
        if (two('=', '>')) { push(Tok::Arrow, 2); continue; }
        if (two('<', '=')) { push(Tok::Le, 2); continue; }
        if (two('>', '=')) { push(Tok::Ge, 2); continue; }
        switch (c) {
            case '=': push(Tok::Assign, 1); continue;
            case '(': push(Tok::LParen, 1); continue;
            case ')': push(Tok::RParen, 1); continue;
            case '[': push(Tok::LBracket, 1); continue;
            case ']': push(Tok::RBracket, 1); continue;
            case '.': push(Tok::Dot, 1); continue;
            case ',': push(Tok::Comma, 1); continue;
            case '<': push(Tok::Lt, 1); continue;
            case '>': push(Tok::Gt, 1); continue;
            case '+': push(Tok::Plus, 1); continue;
            case '-': push(Tok::Minus, 1); continue;
            case '*': push(Tok::Star, 1); continue;
            case '/': push(Tok::Slash, 1); continue;
            default:
                throw SpecError(tline, tcol, std::string("unexpected character '") + c + "'");
        }
    }
    out.push_back({Tok::End, "", 0.0, line, col});
    return out;
}

// ---------------------------------------------------------------------------
// Parser (recursive descent; `=>` right-associative and weakest, then `or`,
// then `and`, then `not`, then comparisons)

struct Parser {
    std::vector<Token> toks;
    std::size_t pos = 0;

    std::set<std::string> param_names;
    std::set<std::string> input_names;
    std::set<std::string> network_names;
    std::string bound_var;

    const Token& peek(int ahead = 0) const {
        const std::size_t p = pos + static_cast<std::size_t>(ahead);
        return p < toks.size() ? toks[p] : toks.back();
    }

    const Token& next() {
        const Token& t = peek();
        if (t.kind != Tok::End) ++pos;
        return t;
    }

    [[noreturn]] void fail(const Token& at, const std::string& msg) const {
        throw SpecError(at.line, at.col, msg);
    }

    const Token& expect(Tok k) {
        const Token& t = peek();
        if (t.kind != k)
            fail(t, std::string("expected ") + tok_name(k) + ", got " + tok_name(t.kind) +
                     (t.text.empty() ? "" : " '" + t.text + "'"));
        return next();
    }

    bool accept(Tok k) {
        if (peek().kind != k) return false;
        next();
        return true;
    }

    void declare(const std::string& name, const Token& at) {
        if (param_names.count(name) || input_names.count(name) || network_names.count(name) ||
            name == bound_var)
            fail(at, "duplicate declaration of '" + name + "'");
    }

    PropertySpec parse() {
        PropertySpec spec;
        for (;;) {
            const Token& t = peek();
            if (t.kind == Tok::KwParam) {
                next();
                const Token& name = expect(Tok::Ident);
                declare(name.text, name);
                expect(Tok::Assign);
                double sign = 1.0;
                if (accept(Tok::Minus)) sign = -1.0;
                const Token& num = expect(Tok::Number);
                param_names.insert(name.text);
                spec.params.emplace_back(name.text, sign * num.number);
            } else if (t.kind == Tok::KwInput) {
                next();
                const Token& name = expect(Tok::Ident);
                declare(name.text, name);
                expect(Tok::Assign);
                const Token& path = expect(Tok::String);
                input_names.insert(name.text);
                spec.inputs.emplace_back(name.text, path.text);
            } else if (t.kind == Tok::KwNetwork) {
                next();
                const Token& name = expect(Tok::Ident);
                declare(name.text, name);
                network_names.insert(name.text);
                spec.networks.push_back(name.text);
            } else {
                break;
            }
        }

        expect(Tok::KwForall);
        const Token& var = expect(Tok::Ident);
        declare(var.text, var);
        bound_var = var.text;
        spec.bound_var = var.text;
        expect(Tok::KwIn);
        expect(Tok::KwBall);
        expect(Tok::LParen);
        const Token& anchor = expect(Tok::Ident);
        if (!input_names.count(anchor.text))
            fail(anchor, "ball center '" + anchor.text + "' is not a declared input");
        spec.anchor_var = anchor.text;
        expect(Tok::Comma);
        spec.radius = parse_expr(/*allow_net=*/false);
        expect(Tok::RParen);
        expect(Tok::Dot);
        spec.body = parse_formula();
        const Token& end = peek();
        if (end.kind != Tok::End) fail(end, "unexpected trailing " + std::string(tok_name(end.kind)));
        return spec;
    }

    FormulaPtr parse_formula() { return parse_implied(); }

    FormulaPtr parse_implied() {
        FormulaPtr lhs = parse_clause();
        if (accept(Tok::Arrow)) return logic::make_implies(std::move(lhs), parse_implied());
        return lhs;
    }

    FormulaPtr parse_clause() {
        FormulaPtr f = parse_term();
        while (accept(Tok::KwOr)) f = logic::make_or(std::move(f), parse_term());
        return f;
    }

    FormulaPtr parse_term() {
        FormulaPtr f = parse_atomf();
        while (accept(Tok::KwAnd)) f = logic::make_and(std::move(f), parse_atomf());
        return f;
    }

    FormulaPtr parse_atomf() {
        const Token& t = peek();
        if (t.kind == Tok::KwNot) {
            next();
            return logic::make_not(parse_atomf());
        }
        if (t.kind == Tok::LParen) {
            // either a parenthesized formula or the start of an arithmetic atom
            const std::size_t save = pos;
            try {
                next();
                FormulaPtr f = parse_formula();
                expect(Tok::RParen);
                return f;
            } catch (const SpecError&) {
                pos = save;
                return parse_atom();
            }
        }
        return parse_atom();
    }

    FormulaPtr parse_atom() {
        ExprPtr a = parse_expr(true);
        const Token& t = peek();
        CmpOp op;
        switch (t.kind) {
            case Tok::Le: op = CmpOp::Le; break;
            case Tok::Lt: op = CmpOp::Lt; break;
            case Tok::Ge: op = CmpOp::Ge; break;
            case Tok::Gt: op = CmpOp::Gt; break;
            default:
                fail(t, std::string("expected comparison operator, got ") + tok_name(t.kind));
        }
        next();
        ExprPtr b = parse_expr(true);
        return logic::make_cmp(op, std::move(a), std::move(b));
    }

    ExprPtr parse_expr(bool allow_net) {
        ExprPtr e = parse_mult(allow_net);
        for (;;) {
            if (accept(Tok::Plus)) e = logic::make_bin(ExprKind::Add, std::move(e), parse_mult(allow_net));
            else if (accept(Tok::Minus)) e = logic::make_bin(ExprKind::Sub, std::move(e), parse_mult(allow_net));
            else return e;
        }
    }

    ExprPtr parse_mult(bool allow_net) {
        ExprPtr e = parse_unary(allow_net);
        for (;;) {
            if (accept(Tok::Star)) e = logic::make_bin(ExprKind::Mul, std::move(e), parse_unary(allow_net));
            else if (accept(Tok::Slash)) e = logic::make_bin(ExprKind::Div, std::move(e), parse_unary(allow_net));
            else return e;
        }
    }

    ExprPtr parse_unary(bool allow_net) {
        const Token& t = peek();
        if (t.kind == Tok::Number) {
            next();
            return logic::make_const(t.number);
        }
        if (t.kind == Tok::KwAbs) {
            next();
            expect(Tok::LParen);
            ExprPtr inner = parse_expr(allow_net);
            expect(Tok::RParen);
            return logic::make_abs(std::move(inner));
        }
        if (t.kind == Tok::LParen) {
            next();
            ExprPtr inner = parse_expr(allow_net);
            expect(Tok::RParen);
            return inner;
        }
        if (t.kind == Tok::Ident) {
            next();
            if (peek().kind == Tok::LParen) {
                // network application IDENT(IDENT)[INT]
                if (!allow_net) fail(t, "network application not allowed here");
                if (!network_names.count(t.text)) fail(t, "undeclared network '" + t.text + "'");
                next();
                const Token& arg = expect(Tok::Ident);
                if (arg.text != bound_var && !input_names.count(arg.text))
                    fail(arg, "undeclared identifier '" + arg.text + "'");
                expect(Tok::RParen);
                expect(Tok::LBracket);
                const Token& idx = expect(Tok::Number);
                if (idx.number != std::floor(idx.number) || idx.number < 0.0)
                    fail(idx, "output index must be a non-negative integer");
                expect(Tok::RBracket);
                return logic::make_net_output(t.text, arg.text, static_cast<int>(idx.number));
            }
            if (!param_names.count(t.text)) {
                if (t.text == bound_var || input_names.count(t.text))
                    fail(t, "'" + t.text + "' is an image variable and cannot be used as a scalar");
                if (network_names.count(t.text))
                    fail(t, "network '" + t.text + "' must be applied as " + t.text + "(var)[index]");
                fail(t, "undeclared identifier '" + t.text + "'");
            }
            return logic::make_var(t.text);
        }
        fail(t, std::string("expected expression, got ") + tok_name(t.kind));
    }
};

}  // namespace

PropertySpec parse_property(const std::string& text) {
    Parser p{lex(text)};
    return p.parse();
}

// ---------------------------------------------------------------------------
// Pretty printer

namespace {

std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    if (std::strtod(buf, nullptr) != v) std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

int expr_level(const Expr& e) {
    switch (e.kind) {
        case ExprKind::Add:
        case ExprKind::Sub: return 1;
        case ExprKind::Mul:
        case ExprKind::Div: return 2;
        default: return 3;
    }
}

void print_expr(std::ostream& os, const ExprPtr& e, int min_level) {
    const int level = expr_level(*e);
    const bool parens = level < min_level;
    if (parens) os << "(";
    switch (e->kind) {
        case ExprKind::Const: os << format_number(e->value); break;
        case ExprKind::Var: os << e->name; break;
        case ExprKind::Add:
            print_expr(os, e->lhs, 1);
            os << " + ";
            print_expr(os, e->rhs, 2);
            break;
        case ExprKind::Sub:
            print_expr(os, e->lhs, 1);
            os << " - ";
            print_expr(os, e->rhs, 2);  // a - (b - c) keeps its parens
            break;
        case ExprKind::Mul:
            print_expr(os, e->lhs, 2);
            os << " * ";
            print_expr(os, e->rhs, 3);
            break;
        case ExprKind::Div:
            print_expr(os, e->lhs, 2);
            os << " / ";
            print_expr(os, e->rhs, 3);
            break;
        case ExprKind::Abs:
            os << "abs(";
            print_expr(os, e->lhs, 1);
            os << ")";
            break;
        case ExprKind::NetOutput:
            os << e->name << "(" << e->arg << ")[" << e->index << "]";
            break;
    }
    if (parens) os << ")";
}

const char* cmp_text(CmpOp op) {
    switch (op) {
        case CmpOp::Le: return "<=";
        case CmpOp::Lt: return "<";
        case CmpOp::Ge: return ">=";
        case CmpOp::Gt: return ">";
    }
    return "?";
}

int formula_level(const Formula& f) {
    switch (f.kind) {
        case FormulaKind::Implies: return 1;
        case FormulaKind::Or: return 2;
        case FormulaKind::And: return 3;
        case FormulaKind::Not: return 4;
        case FormulaKind::Cmp: return 5;
    }
    return 5;
}

void print_formula(std::ostream& os, const FormulaPtr& f, int min_level) {
    const int level = formula_level(*f);
    const bool parens = level < min_level;
    if (parens) os << "(";
    switch (f->kind) {
        case FormulaKind::Cmp:
            print_expr(os, f->a, 1);
            os << " " << cmp_text(f->op) << " ";
            print_expr(os, f->b, 1);
            break;
        case FormulaKind::Implies:  // right-associative
            print_formula(os, f->l, 2);
            os << " => ";
            print_formula(os, f->r, 1);
            break;
        case FormulaKind::Or:  // left-associative chains stay flat
            print_formula(os, f->l, 2);
            os << " or ";
            print_formula(os, f->r, 3);
            break;
        case FormulaKind::And:
            print_formula(os, f->l, 3);
            os << " and ";
            print_formula(os, f->r, 4);
            break;
        case FormulaKind::Not:
            os << "not ";
            print_formula(os, f->l, 4);
            break;
    }
    if (parens) os << ")";
}

}  // namespace

std::string pretty_print(const PropertySpec& spec) {
    std::ostringstream os;
    for (const auto& [name, value] : spec.params)
        os << "param " << name << " = " << format_number(value) << "\n";
    for (const auto& [name, path] : spec.inputs) os << "input " << name << " = \"" << path << "\"\n";
    for (const auto& name : spec.networks) os << "network " << name << "\n";
    os << "forall " << spec.bound_var << " in ball(" << spec.anchor_var << ", ";
    print_expr(os, spec.radius, 1);
    os << ") .\n  ";
    print_formula(os, spec.body, 1);
    os << "\n";
    return os.str();
}

bool equal(const PropertySpec& a, const PropertySpec& b) {
    return a.params == b.params && a.inputs == b.inputs && a.networks == b.networks &&
           a.bound_var == b.bound_var && a.anchor_var == b.anchor_var &&
           logic::equal(a.radius, b.radius) && logic::equal(a.body, b.body);
}

// ---------------------------------------------------------------------------
// Instantiation

namespace {

// flattens an and-chain
void collect_conjuncts(const FormulaPtr& f, std::vector<FormulaPtr>& out) {
    if (f->kind == FormulaKind::And) {
        collect_conjuncts(f->l, out);
        collect_conjuncts(f->r, out);
    } else {
        out.push_back(f);
    }
}

// matches abs(N(x)[i] - N(x0)[i]) <= rhs and yields (i, rhs)
bool match_robustness_atom(const FormulaPtr& f, const std::string& bound_var,
                           const std::string& anchor_var, int* index, ExprPtr* rhs) {
    if (f->kind != FormulaKind::Cmp || f->op != CmpOp::Le) return false;
    const ExprPtr& lhs = f->a;
    if (lhs->kind != ExprKind::Abs || lhs->lhs->kind != ExprKind::Sub) return false;
    const ExprPtr& u = lhs->lhs->lhs;
    const ExprPtr& v = lhs->lhs->rhs;
    if (u->kind != ExprKind::NetOutput || v->kind != ExprKind::NetOutput) return false;
    if (u->index != v->index || u->name != v->name) return false;
    const bool forward_order = u->arg == bound_var && v->arg == anchor_var;
    const bool reverse_order = u->arg == anchor_var && v->arg == bound_var;
    if (!forward_order && !reverse_order) return false;
    *index = u->index;
    *rhs = f->b;
    return true;
}

}  // namespace

VerificationProblem instantiate(const PropertySpec& spec, const Network& net,
                                const std::string& base_dir) {
    namespace fs = std::filesystem;

    VerificationProblem prob;
    prob.bound_var = spec.bound_var;
    prob.anchor_var = spec.anchor_var;
    prob.body = spec.body;
    for (const auto& [name, value] : spec.params) prob.env.scalars[name] = value;

    prob.epsilon = logic::eval_scalar(spec.radius, prob.env);
    if (prob.epsilon < 0.0) throw SpecError(1, 1, "ball radius is negative");

    std::string anchor_path;
    for (const auto& [name, path] : spec.inputs)
        if (name == spec.anchor_var) anchor_path = path;
    fs::path p(anchor_path);
    if (p.is_relative()) p = fs::path(base_dir) / p;
    if (!fs::exists(p)) throw SpecError(1, 1, "anchor image '" + p.string() + "' does not exist");
    const RawImage raw = read_pnm(p.string());
    prob.anchor = preprocess_image(raw, net.input_side());
    prob.env.images[spec.anchor_var] = prob.anchor;

    // delta extraction for Eq-2-shaped bodies
    std::vector<FormulaPtr> atoms;
    collect_conjuncts(spec.body, atoms);
    if (atoms.size() == static_cast<std::size_t>(net.output_dim)) {
        std::set<int> seen;
        double delta = 0.0;
        bool ok = true;
        for (const auto& atom : atoms) {
            int index = -1;
            ExprPtr rhs;
            if (!match_robustness_atom(atom, spec.bound_var, spec.anchor_var, &index, &rhs)) {
                ok = false;
                break;
            }
            if (index >= net.output_dim || !seen.insert(index).second) {
                ok = false;
                break;
            }
            const double d = logic::eval_scalar(rhs, prob.env);
            if (seen.size() == 1) {
                delta = d;
            } else if (d != delta) {
                ok = false;
                break;
            }
        }
        if (ok && static_cast<int>(seen.size()) == net.output_dim) {
            prob.has_delta = true;
            prob.delta = delta;
        }
    }
    return prob;
}

}  // namespace tracknet::speclang
