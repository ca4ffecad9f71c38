#ifndef FEMOPT_EXPR_HPP
#define FEMOPT_EXPR_HPP

// Scalar arithmetic expressions in x and y: parsing, evaluation, symbolic
// differentiation and generation of manufactured right-hand sides.
//
// Grammar (precedence from low to high, binaries left-associative):
//   sum     := product (('+' | '-') product)*
//   product := unary (('*' | '/') unary)*
//   unary   := ('-' | '+') unary | power
//   power   := primary ('^' exponent)*
//   exponent:= ('-' | '+') exponent | primary
//   primary := number | 'x' | 'y' | ('exp' | 'log') '(' sum ')' | '(' sum ')'

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "femopt/error.hpp"
#include "femopt/point.hpp"

namespace femopt {

enum class Var { X, Y };

class Expr {
public:
    enum class Op { Const, X, Y, Neg, Add, Sub, Mul, Div, Pow, Exp, Log };

    struct Node {
        Op op;
        double value = 0.0;
        std::shared_ptr<const Node> lhs;
        std::shared_ptr<const Node> rhs;
    };

    /// Constant zero.
    Expr() : Expr(0.0) {}
    Expr(double c) : node_(make(Op::Const, c, nullptr, nullptr)) {}

    static Expr variable(Var v) { return Expr(make(v == Var::X ? Op::X : Op::Y, 0.0, nullptr, nullptr)); }

    /// Builds a node without constant folding (used by the parser so that the
    /// tree mirrors the source text).
    static Expr raw(Op op, const Expr& a, const Expr& b = Expr()) {
        const bool binary = op == Op::Add || op == Op::Sub || op == Op::Mul || op == Op::Div || op == Op::Pow;
        return Expr(make(op, 0.0, a.node_, binary ? b.node_ : nullptr));
    }

    Op op() const noexcept { return node_->op; }
    double value() const noexcept { return node_->value; }
    bool is_constant() const noexcept { return node_->op == Op::Const; }
    bool is_constant(double c) const noexcept { return is_constant() && node_->value == c; }
    Expr lhs() const { return Expr(node_->lhs); }
    Expr rhs() const { return Expr(node_->rhs); }

    double eval(const Point& p) const { return eval_node(*node_, p); }
    double eval(double x, double y = 0.0) const { return eval_node(*node_, Point{x, y}); }
    double operator()(const Point& p) const { return eval(p); }

    bool depends_on(Var v) const { return depends(*node_, v == Var::X ? Op::X : Op::Y); }

    friend bool structurally_equal(const Expr& a, const Expr& b) { return same(*a.node_, *b.node_); }

    // Folding constructors.
    friend Expr operator+(const Expr& a, const Expr& b) {
        if (a.is_constant() && b.is_constant()) return Expr(a.value() + b.value());
        if (a.is_constant(0.0)) return b;
        if (b.is_constant(0.0)) return a;
        return raw(Op::Add, a, b);
    }
    friend Expr operator-(const Expr& a, const Expr& b) {
        if (a.is_constant() && b.is_constant()) return Expr(a.value() - b.value());
        if (b.is_constant(0.0)) return a;
        if (a.is_constant(0.0)) return -b;
        return raw(Op::Sub, a, b);
    }
    friend Expr operator*(const Expr& a, const Expr& b) {
        if (a.is_constant() && b.is_constant()) return Expr(a.value() * b.value());
        if (a.is_constant(0.0) || b.is_constant(0.0)) return Expr(0.0);
        if (a.is_constant(1.0)) return b;
        if (b.is_constant(1.0)) return a;
        return raw(Op::Mul, a, b);
    }
    friend Expr operator/(const Expr& a, const Expr& b) {
        if (a.is_constant() && b.is_constant() && b.value() != 0.0) return Expr(a.value() / b.value());
        if (a.is_constant(0.0) && !(b.is_constant(0.0))) return Expr(0.0);
        if (b.is_constant(1.0)) return a;
        return raw(Op::Div, a, b);
    }
    friend Expr operator-(const Expr& a) {
        if (a.is_constant()) return Expr(-a.value());
        if (a.op() == Op::Neg) return a.lhs();
        return raw(Op::Neg, a);
    }
    friend Expr pow(const Expr& base, const Expr& exponent) {
        if (exponent.is_constant(0.0)) return Expr(1.0);
        if (exponent.is_constant(1.0)) return base;
        if (base.is_constant() && exponent.is_constant()) return Expr(power(base.value(), exponent.value()));
        return raw(Op::Pow, base, exponent);
    }
    friend Expr exp(const Expr& a) {
        if (a.is_constant()) return Expr(std::exp(a.value()));
        return raw(Op::Exp, a);
    }
    friend Expr log(const Expr& a) {
        if (a.is_constant() && a.value() > 0.0) return Expr(std::log(a.value()));
        return raw(Op::Log, a);
    }

    /// Integer exponents use repeated multiplication so that results are
    /// bit-stable; real exponents go through exp/log and need a base >= 0.
    static double power(double base, double exponent) {
        if (std::isfinite(exponent) && exponent == std::trunc(exponent) && std::fabs(exponent) <= 1024.0) {
            long n = static_cast<long>(exponent);
            const bool invert = n < 0;
            if (invert) n = -n;
            double r = 1.0;
            for (long i = 0; i < n; ++i) r *= base;
            if (invert) {
                if (r == 0.0) throw EvalError("division by zero in negative power");
                r = 1.0 / r;
            }
            return r;
        }
        if (base < 0.0) throw EvalError("non-integer power of negative base");
        if (base == 0.0) {
            if (exponent > 0.0) return 0.0;
            throw EvalError("division by zero in negative power");
        }
        return std::exp(exponent * std::log(base));
    }

private:
    explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

    static std::shared_ptr<const Node> make(Op op, double v, std::shared_ptr<const Node> a,
                                            std::shared_ptr<const Node> b) {
        return std::make_shared<const Node>(Node{op, v, std::move(a), std::move(b)});
    }

    static double eval_node(const Node& n, const Point& p) {
        switch (n.op) {
        case Op::Const: return n.value;
        case Op::X: return p.x;
        case Op::Y: return p.y;
        case Op::Neg: return -eval_node(*n.lhs, p);
        case Op::Add: return eval_node(*n.lhs, p) + eval_node(*n.rhs, p);
        case Op::Sub: return eval_node(*n.lhs, p) - eval_node(*n.rhs, p);
        case Op::Mul: return eval_node(*n.lhs, p) * eval_node(*n.rhs, p);
        case Op::Div: {
            const double d = eval_node(*n.rhs, p);
            if (d == 0.0) throw EvalError("division by zero");
            return eval_node(*n.lhs, p) / d;
        }
        case Op::Pow: return power(eval_node(*n.lhs, p), eval_node(*n.rhs, p));
        case Op::Exp: return std::exp(eval_node(*n.lhs, p));
        case Op::Log: {
            const double a = eval_node(*n.lhs, p);
            if (a <= 0.0) throw EvalError("logarithm of non-positive value");
            return std::log(a);
        }
        }
        return 0.0;
    }

    static bool depends(const Node& n, Op var) {
        if (n.op == var) return true;
        if (n.lhs && depends(*n.lhs, var)) return true;
        return n.rhs && depends(*n.rhs, var);
    }

    static bool same(const Node& a, const Node& b) {
        if (&a == &b) return true;
        if (a.op != b.op) return false;
        if (a.op == Op::Const) return a.value == b.value;
        if (static_cast<bool>(a.lhs) != static_cast<bool>(b.lhs)) return false;
        if (static_cast<bool>(a.rhs) != static_cast<bool>(b.rhs)) return false;
        if (a.lhs && !same(*a.lhs, *b.lhs)) return false;
        return !a.rhs || same(*a.rhs, *b.rhs);
    }

    std::shared_ptr<const Node> node_;
};

inline Expr operator+(const Expr& a, double b) { return a + Expr(b); }
inline Expr operator+(double a, const Expr& b) { return Expr(a) + b; }
inline Expr operator-(const Expr& a, double b) { return a - Expr(b); }
inline Expr operator-(double a, const Expr& b) { return Expr(a) - b; }
inline Expr operator*(const Expr& a, double b) { return a * Expr(b); }
inline Expr operator*(double a, const Expr& b) { return Expr(a) * b; }
inline Expr operator/(const Expr& a, double b) { return a / Expr(b); }
inline Expr operator/(double a, const Expr& b) { return Expr(a) / b; }

namespace detail {

class ExprParser {
public:
    explicit ExprParser(std::string_view src) : src_(src) {}

    Expr parse() {
        Expr e = sum();
        skip_ws();
        if (pos_ != src_.size()) fail("unexpected character '" + std::string(1, src_[pos_]) + "'");
        return e;
    }

private:
    using Op = Expr::Op;

    [[noreturn]] void fail(const std::string& msg) const { throw ParseError("syntax error: " + msg, pos_); }

    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(c)) {
            if (pos_ >= src_.size()) fail(std::string("expected '") + c + "' but reached end of input");
            fail(std::string("expected '") + c + "'");
        }
    }

    Expr sum() {
        Expr e = product();
        for (;;) {
            if (accept('+')) e = Expr::raw(Op::Add, e, product());
            else if (accept('-')) e = Expr::raw(Op::Sub, e, product());
            else return e;
        }
    }

    Expr product() {
        Expr e = unary();
        for (;;) {
            if (accept('*')) e = Expr::raw(Op::Mul, e, unary());
            else if (accept('/')) e = Expr::raw(Op::Div, e, unary());
            else return e;
        }
    }

    Expr unary() {
        if (accept('-')) return Expr::raw(Op::Neg, unary());
        if (accept('+')) return unary();
        return power();
    }

    Expr power() {
        Expr e = primary();
        while (accept('^')) e = Expr::raw(Op::Pow, e, exponent());
        return e;
    }

    Expr exponent() {
        if (accept('-')) return Expr::raw(Op::Neg, exponent());
        if (accept('+')) return exponent();
        return primary();
    }

    Expr primary() {
        skip_ws();
        if (pos_ >= src_.size()) fail("unexpected end of input");
        const char c = src_[pos_];
        if (c == '(') {
            ++pos_;
            Expr e = sum();
            expect(')');
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            const std::size_t start = pos_;
            while (pos_ < src_.size() &&
                   (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
                ++pos_;
            const std::string_view id = src_.substr(start, pos_ - start);
            if (id == "x") return Expr::variable(Var::X);
            if (id == "y") return Expr::variable(Var::Y);
            if (id == "exp" || id == "log") {
                expect('(');
                Expr arg = sum();
                expect(')');
                return Expr::raw(id == "exp" ? Op::Exp : Op::Log, arg);
            }
            pos_ = start;
            throw ParseError("unknown identifier '" + std::string(id) + "'", start);
        }
        fail("unexpected character '" + std::string(1, c) + "'");
    }

    Expr number() {
        const std::size_t start = pos_;
        while (pos_ < src_.size() && (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.'))
            ++pos_;
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            std::size_t q = pos_ + 1;
            if (q < src_.size() && (src_[q] == '+' || src_[q] == '-')) ++q;
            if (q < src_.size() && std::isdigit(static_cast<unsigned char>(src_[q]))) {
                pos_ = q;
                while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
            }
        }
        double v = 0.0;
        const char* first = src_.data() + start;
        const char* last = src_.data() + pos_;
        const auto [ptr, ec] = std::from_chars(first, last, v);
        if (ec != std::errc() || ptr != last || !std::isfinite(v)) {
            pos_ = start;
            fail("malformed number");
        }
        return Expr(v);
    }

    std::string_view src_;
    std::size_t pos_ = 0;
};

inline void print_node(const Expr& e, std::string& out) {
    using Op = Expr::Op;
    switch (e.op()) {
    case Op::Const: {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", std::fabs(e.value()));
        if (std::signbit(e.value())) {
            out += "(-";
            out += buf;
            out += ')';
        } else {
            out += buf;
        }
        return;
    }
    case Op::X: out += 'x'; return;
    case Op::Y: out += 'y'; return;
    case Op::Neg:
        out += "(-";
        print_node(e.lhs(), out);
        out += ')';
        return;
    case Op::Exp:
    case Op::Log:
        out += e.op() == Op::Exp ? "exp(" : "log(";
        print_node(e.lhs(), out);
        out += ')';
        return;
    default: break;
    }
    char sym = '+';
    switch (e.op()) {
    case Op::Sub: sym = '-'; break;
    case Op::Mul: sym = '*'; break;
    case Op::Div: sym = '/'; break;
    case Op::Pow: sym = '^'; break;
    default: break;
    }
    out += '(';
    print_node(e.lhs(), out);
    out += sym;
    print_node(e.rhs(), out);
    out += ')';
}

} // namespace detail

/// Throws ParseError carrying the byte offset of the failure.
inline Expr parse(std::string_view source) { return detail::ExprParser(source).parse(); }

/// Fully parenthesized text that parses back to the same tree.
inline std::string to_string(const Expr& e) {
    std::string out;
    detail::print_node(e, out);
    return out;
}

/// Exact derivative; only constant folding is applied to the result.
inline Expr differentiate(const Expr& e, Var v) {
    using Op = Expr::Op;
    switch (e.op()) {
    case Op::Const: return Expr(0.0);
    case Op::X: return Expr(v == Var::X ? 1.0 : 0.0);
    case Op::Y: return Expr(v == Var::Y ? 1.0 : 0.0);
    case Op::Neg: return -differentiate(e.lhs(), v);
    case Op::Add: return differentiate(e.lhs(), v) + differentiate(e.rhs(), v);
    case Op::Sub: return differentiate(e.lhs(), v) - differentiate(e.rhs(), v);
    case Op::Mul: {
        const Expr a = e.lhs(), b = e.rhs();
        return differentiate(a, v) * b + a * differentiate(b, v);
    }
    case Op::Div: {
        const Expr a = e.lhs(), b = e.rhs();
        return (differentiate(a, v) * b - a * differentiate(b, v)) / pow(b, Expr(2.0));
    }
    case Op::Pow: {
        const Expr a = e.lhs(), b = e.rhs();
        if (!b.depends_on(Var::X) && !b.depends_on(Var::Y)) {
            return b * pow(a, b - 1.0) * differentiate(a, v);
        }
        return e * (differentiate(b, v) * log(a) + b * differentiate(a, v) / a);
    }
    case Op::Exp: return e * differentiate(e.lhs(), v);
    case Op::Log: return differentiate(e.lhs(), v) / e.lhs();
    }
    return Expr(0.0);
}

/// Total polynomial degree, or nullopt when the expression is not a polynomial.
inline std::optional<int> polynomial_degree(const Expr& e) {
    using Op = Expr::Op;
    const bool constant = !e.depends_on(Var::X) && !e.depends_on(Var::Y);
    if (constant) return 0;
    switch (e.op()) {
    case Op::X:
    case Op::Y: return 1;
    case Op::Neg: return polynomial_degree(e.lhs());
    case Op::Add:
    case Op::Sub: {
        const auto a = polynomial_degree(e.lhs()), b = polynomial_degree(e.rhs());
        if (!a || !b) return std::nullopt;
        return std::max(*a, *b);
    }
    case Op::Mul: {
        const auto a = polynomial_degree(e.lhs()), b = polynomial_degree(e.rhs());
        if (!a || !b) return std::nullopt;
        return *a + *b;
    }
    case Op::Div: {
        if (e.rhs().depends_on(Var::X) || e.rhs().depends_on(Var::Y)) return std::nullopt;
        return polynomial_degree(e.lhs());
    }
    case Op::Pow: {
        const Expr b = e.rhs();
        if (b.depends_on(Var::X) || b.depends_on(Var::Y)) return std::nullopt;
        const double n = b.eval(0.0, 0.0);
        if (n < 0.0 || n != std::trunc(n)) return std::nullopt;
        const auto a = polynomial_degree(e.lhs());
        if (!a) return std::nullopt;
        return *a * static_cast<int>(n);
    }
    default: return std::nullopt;
    }
}

/// 2x2 coefficient matrix, row-major; only entry (0,0) is used in 1D.
struct ExprMatrix {
    std::array<Expr, 4> entries{Expr(1.0), Expr(0.0), Expr(0.0), Expr(1.0)};

    static ExprMatrix identity() { return {}; }
    static ExprMatrix scalar(const Expr& d) { return ExprMatrix{{d, Expr(0.0), Expr(0.0), d}}; }

    const Expr& operator()(int i, int j) const { return entries[static_cast<std::size_t>(2 * i + j)]; }
    Expr& operator()(int i, int j) { return entries[static_cast<std::size_t>(2 * i + j)]; }
};

/// f := -div(D grad u) + r u.
inline Expr manufacture_rhs(const Expr& u, const ExprMatrix& D, const Expr& r, int dim) {
    if (dim == 1) {
        const Expr flux = D(0, 0) * differentiate(u, Var::X);
        return -differentiate(flux, Var::X) + r * u;
    }
    const Expr ux = differentiate(u, Var::X);
    const Expr uy = differentiate(u, Var::Y);
    const Expr flux_x = D(0, 0) * ux + D(0, 1) * uy;
    const Expr flux_y = D(1, 0) * ux + D(1, 1) * uy;
    return -(differentiate(flux_x, Var::X) + differentiate(flux_y, Var::Y)) + r * u;
}

} // namespace femopt

#endif
