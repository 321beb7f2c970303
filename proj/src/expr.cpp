#include "setopt/expr.hpp"

#include <charconv>
#include <cctype>
#include <cmath>
#include <numbers>
#include <set>

namespace setopt::expr {

namespace {

struct FunctionInfo {
  std::string_view name;
  Function function;
  int arity;
};

constexpr FunctionInfo kFunctions[] = {
    {"sin", Function::Sin, 1},   {"cos", Function::Cos, 1},   {"tan", Function::Tan, 1},
    {"exp", Function::Exp, 1},   {"log", Function::Log, 1},   {"sqrt", Function::Sqrt, 1},
    {"abs", Function::Abs, 1},   {"pow", Function::Pow, 2},   {"floor", Function::Floor, 1},
};

std::string_view function_name(Function f) {
  for (const auto& info : kFunctions) {
    if (info.function == f) return info.name;
  }
  return "?";
}

enum class TokenKind { Number, Ident, Op, LParen, RParen, Comma, End };

struct Token {
  TokenKind kind = TokenKind::End;
  std::string_view text;
  double number = 0.0;
  SourcePos pos;
};

}  // namespace

class Parser {
 public:
  Parser(std::string_view src, int n, SourcePos origin) : src_(src), n_(n), origin_(origin) {
    advance();
  }

  Expr run() {
    Expr out;
    out.n_ = n_;
    nodes_ = &out.nodes_;
    out.root_ = parse_sum();
    if (tok_.kind != TokenKind::End) {
      throw Error(ErrorCode::ParseError,
                  "unexpected '" + std::string(tok_.text) + "', expected operator or end of input",
                  tok_.pos);
    }
    return out;
  }

 private:
  SourcePos at(std::size_t offset) const {
    return {origin_.line, origin_.column + static_cast<int>(offset)};
  }

  void advance() {
    while (cursor_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[cursor_]))) {
      ++cursor_;
    }
    Token t;
    t.pos = at(cursor_);
    if (cursor_ >= src_.size()) {
      t.kind = TokenKind::End;
      t.text = "end of input";
      tok_ = t;
      return;
    }
    const char c = src_[cursor_];
    const std::size_t start = cursor_;
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t end = cursor_;
      while (end < src_.size() &&
             (std::isdigit(static_cast<unsigned char>(src_[end])) || src_[end] == '.')) {
        ++end;
      }
      if (end < src_.size() && (src_[end] == 'e' || src_[end] == 'E')) {
        std::size_t exp = end + 1;
        if (exp < src_.size() && (src_[exp] == '+' || src_[exp] == '-')) ++exp;
        if (exp < src_.size() && std::isdigit(static_cast<unsigned char>(src_[exp]))) {
          end = exp;
          while (end < src_.size() && std::isdigit(static_cast<unsigned char>(src_[end]))) ++end;
        }
      }
      t.kind = TokenKind::Number;
      t.text = src_.substr(start, end - start);
      auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), t.number);
      if (ec != std::errc() || ptr != t.text.data() + t.text.size()) {
        throw Error(ErrorCode::LexError, "malformed number '" + std::string(t.text) + "'", t.pos);
      }
      cursor_ = end;
    } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t end = cursor_;
      while (end < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[end])) || src_[end] == '_')) {
        ++end;
      }
      t.kind = TokenKind::Ident;
      t.text = src_.substr(start, end - start);
      cursor_ = end;
    } else {
      t.text = src_.substr(start, 1);
      switch (c) {
        case '+': case '-': case '*': case '/': case '^': t.kind = TokenKind::Op; break;
        case '(': t.kind = TokenKind::LParen; break;
        case ')': t.kind = TokenKind::RParen; break;
        case ',': t.kind = TokenKind::Comma; break;
        default:
          throw Error(ErrorCode::LexError, std::string("unexpected character '") + c + "'", t.pos);
      }
      ++cursor_;
    }
    tok_ = t;
  }

  bool is_op(char c) const { return tok_.kind == TokenKind::Op && tok_.text[0] == c; }

  int add(Node node) {
    nodes_->push_back(std::move(node));
    return static_cast<int>(nodes_->size()) - 1;
  }

  int binary(NodeKind kind, int lhs, int rhs, SourcePos pos) {
    Node node;
    node.kind = kind;
    node.children = {lhs, rhs};
    node.pos = pos;
    return add(std::move(node));
  }

  int parse_sum() {
    int lhs = parse_product();
    while (is_op('+') || is_op('-')) {
      const NodeKind kind = is_op('+') ? NodeKind::Add : NodeKind::Sub;
      const SourcePos pos = tok_.pos;
      advance();
      lhs = binary(kind, lhs, parse_product(), pos);
    }
    return lhs;
  }

  int parse_product() {
    int lhs = parse_power();
    while (is_op('*') || is_op('/')) {
      const NodeKind kind = is_op('*') ? NodeKind::Mul : NodeKind::Div;
      const SourcePos pos = tok_.pos;
      advance();
      lhs = binary(kind, lhs, parse_power(), pos);
    }
    return lhs;
  }

  int parse_power() {
    const int base = parse_unary();
    if (is_op('^')) {
      const SourcePos pos = tok_.pos;
      advance();
      return binary(NodeKind::Pow, base, parse_power(), pos);
    }
    return base;
  }

  int parse_unary() {
    if (is_op('-')) {
      Node node;
      node.kind = NodeKind::Negate;
      node.pos = tok_.pos;
      advance();
      node.children = {parse_unary()};
      return add(std::move(node));
    }
    return parse_primary();
  }

  int parse_primary() {
    const Token t = tok_;
    switch (t.kind) {
      case TokenKind::Number: {
        advance();
        Node node;
        node.kind = NodeKind::Constant;
        node.value = t.number;
        node.pos = t.pos;
        return add(std::move(node));
      }
      case TokenKind::LParen: {
        advance();
        const int inner = parse_sum();
        expect(TokenKind::RParen, "')'");
        return inner;
      }
      case TokenKind::Ident:
        advance();
        return identifier(t);
      default:
        throw Error(ErrorCode::ParseError,
                    "unexpected '" + std::string(t.text) +
                        "', expected number, identifier, '-' or '('",
                    t.pos);
    }
  }

  void expect(TokenKind kind, const char* what) {
    if (tok_.kind != kind) {
      throw Error(ErrorCode::ParseError,
                  "unexpected '" + std::string(tok_.text) + "', expected " + what, tok_.pos);
    }
    advance();
  }

  int identifier(const Token& t) {
    const std::string_view name = t.text;
    Node node;
    node.pos = t.pos;
    if (tok_.kind == TokenKind::LParen) {
      const FunctionInfo* info = nullptr;
      for (const auto& f : kFunctions) {
        if (f.name == name) info = &f;
      }
      if (info == nullptr) {
        throw Error(ErrorCode::UnknownIdentifier, "unknown function '" + std::string(name) + "'",
                    t.pos);
      }
      advance();
      node.kind = NodeKind::Call;
      node.function = info->function;
      node.children.push_back(parse_sum());
      while (tok_.kind == TokenKind::Comma) {
        advance();
        node.children.push_back(parse_sum());
      }
      expect(TokenKind::RParen, "')' or ','");
      if (static_cast<int>(node.children.size()) != info->arity) {
        throw Error(ErrorCode::ParseError,
                    std::string(name) + " takes " + std::to_string(info->arity) +
                        " argument(s), got " + std::to_string(node.children.size()),
                    t.pos);
      }
      return add(std::move(node));
    }
    if (name == "i") {
      node.kind = NodeKind::Parameter;
      return add(std::move(node));
    }
    if (name == "pi") {
      node.kind = NodeKind::Constant;
      node.value = std::numbers::pi;
      return add(std::move(node));
    }
    if (name.size() >= 2 && name[0] == 'x') {
      int j = 0;
      auto [ptr, ec] = std::from_chars(name.data() + 1, name.data() + name.size(), j);
      if (ec == std::errc() && ptr == name.data() + name.size()) {
        if (j < 1 || j > n_) {
          throw Error(ErrorCode::VariableOutOfRange,
                      std::string(name) + " is outside x1..x" + std::to_string(n_), t.pos);
        }
        node.kind = NodeKind::Variable;
        node.variable = j - 1;
        return add(std::move(node));
      }
    }
    throw Error(ErrorCode::UnknownIdentifier, "unknown identifier '" + std::string(name) + "'",
                t.pos);
  }

  std::string_view src_;
  int n_;
  SourcePos origin_;
  std::size_t cursor_ = 0;
  Token tok_;
  std::vector<Node>* nodes_ = nullptr;
};

Expr Expr::parse(std::string_view source, int n, SourcePos origin) {
  return Parser(source, n, origin).run();
}

namespace {

[[noreturn]] void domain_error(const std::string& what, SourcePos pos) {
  throw Error(ErrorCode::DomainError, what, pos);
}

// Evaluation over plain doubles.
struct PlainOps {
  using T = double;
  const Vector& x;
  double index;

  T constant(double v) const { return v; }
  T variable(int j) const { return x(j); }
  T parameter() const { return index; }
  static double value(const T& v) { return v; }

  T neg(const T& a) const { return -a; }
  T add(const T& a, const T& b) const { return a + b; }
  T sub(const T& a, const T& b) const { return a - b; }
  T mul(const T& a, const T& b) const { return a * b; }
  T div(const T& a, const T& b, SourcePos pos) const {
    if (b == 0.0) domain_error("division by zero", pos);
    return a / b;
  }
  T pow(const T& a, const T& b, SourcePos pos) const {
    const double r = std::pow(a, b);
    if (!std::isfinite(r) && std::isfinite(a) && std::isfinite(b)) {
      domain_error("pow(" + std::to_string(a) + ", " + std::to_string(b) + ") is undefined", pos);
    }
    return r;
  }
  T call(Function f, const T& a, SourcePos pos) const {
    switch (f) {
      case Function::Sin: return std::sin(a);
      case Function::Cos: return std::cos(a);
      case Function::Tan: return std::tan(a);
      case Function::Exp: return std::exp(a);
      case Function::Log:
        if (!(a > 0.0)) domain_error("log of non-positive value " + std::to_string(a), pos);
        return std::log(a);
      case Function::Sqrt:
        if (a < 0.0) domain_error("sqrt of negative value " + std::to_string(a), pos);
        return std::sqrt(a);
      case Function::Abs: return std::abs(a);
      case Function::Floor: return std::floor(a);
      case Function::Pow: break;
    }
    domain_error("bad unary call", pos);
  }
};

// Evaluation over dual numbers; chain rule applied per node.
struct DualOps {
  using T = Dual;
  const Vector& x;
  double index;
  bool* nondifferentiable;

  T constant(double v) const { return {v, Vector::Zero(x.size())}; }
  T variable(int j) const {
    T out{x(j), Vector::Zero(x.size())};
    out.grad(j) = 1.0;
    return out;
  }
  T parameter() const { return constant(index); }
  static double value(const T& v) { return v.value; }

  T neg(const T& a) const { return {-a.value, -a.grad}; }
  T add(const T& a, const T& b) const { return {a.value + b.value, a.grad + b.grad}; }
  T sub(const T& a, const T& b) const { return {a.value - b.value, a.grad - b.grad}; }
  T mul(const T& a, const T& b) const {
    return {a.value * b.value, b.value * a.grad + a.value * b.grad};
  }
  T div(const T& a, const T& b, SourcePos pos) const {
    if (b.value == 0.0) domain_error("division by zero", pos);
    const double q = a.value / b.value;
    return {q, (a.grad - q * b.grad) / b.value};
  }
  T pow(const T& a, const T& b, SourcePos pos) const {
    const double r = std::pow(a.value, b.value);
    if (!std::isfinite(r) && std::isfinite(a.value) && std::isfinite(b.value)) {
      domain_error("pow(" + std::to_string(a.value) + ", " + std::to_string(b.value) +
                       ") is undefined",
                   pos);
    }
    Vector g = Vector::Zero(x.size());
    if (!a.grad.isZero(0.0)) {
      // d/da a^b = b a^(b-1); b = 0 contributes nothing even at a = 0.
      if (b.value != 0.0) g += b.value * std::pow(a.value, b.value - 1.0) * a.grad;
    }
    if (!b.grad.isZero(0.0)) {
      if (!(a.value > 0.0)) {
        domain_error("pow with variable exponent needs a positive base", pos);
      }
      g += r * std::log(a.value) * b.grad;
    }
    return {r, std::move(g)};
  }
  T call(Function f, const T& a, SourcePos pos) const {
    const double v = a.value;
    switch (f) {
      case Function::Sin: return {std::sin(v), std::cos(v) * a.grad};
      case Function::Cos: return {std::cos(v), -std::sin(v) * a.grad};
      case Function::Tan: {
        const double c = std::cos(v);
        return {std::tan(v), a.grad / (c * c)};
      }
      case Function::Exp: {
        const double ev = std::exp(v);
        return {ev, ev * a.grad};
      }
      case Function::Log:
        if (!(v > 0.0)) domain_error("log of non-positive value " + std::to_string(v), pos);
        return {std::log(v), a.grad / v};
      case Function::Sqrt: {
        if (v < 0.0) domain_error("sqrt of negative value " + std::to_string(v), pos);
        const double s = std::sqrt(v);
        if (s == 0.0) {
          if (!a.grad.isZero(0.0)) domain_error("sqrt is not differentiable at 0", pos);
          return {0.0, Vector::Zero(x.size())};
        }
        return {s, a.grad / (2.0 * s)};
      }
      case Function::Abs:
        if (v == 0.0) {
          if (!a.grad.isZero(0.0)) *nondifferentiable = true;
          return {0.0, Vector::Zero(x.size())};
        }
        return {std::abs(v), (v > 0.0 ? 1.0 : -1.0) * a.grad};
      case Function::Floor:
        // Piecewise constant; only meaningful on the parameter i.
        return {std::floor(v), Vector::Zero(x.size())};
      case Function::Pow: break;
    }
    domain_error("bad unary call", pos);
  }
};

template <typename Ops>
typename Ops::T eval_node(const std::vector<Node>& nodes, int id, const Ops& ops) {
  const Node& node = nodes[id];
  switch (node.kind) {
    case NodeKind::Constant: return ops.constant(node.value);
    case NodeKind::Variable: return ops.variable(node.variable);
    case NodeKind::Parameter: return ops.parameter();
    case NodeKind::Negate: return ops.neg(eval_node(nodes, node.children[0], ops));
    default: break;
  }
  if (node.kind == NodeKind::Call) {
    auto a = eval_node(nodes, node.children[0], ops);
    if (node.function == Function::Pow) {
      return ops.pow(a, eval_node(nodes, node.children[1], ops), node.pos);
    }
    return ops.call(node.function, a, node.pos);
  }
  auto a = eval_node(nodes, node.children[0], ops);
  auto b = eval_node(nodes, node.children[1], ops);
  switch (node.kind) {
    case NodeKind::Add: return ops.add(a, b);
    case NodeKind::Sub: return ops.sub(a, b);
    case NodeKind::Mul: return ops.mul(a, b);
    case NodeKind::Div: return ops.div(a, b, node.pos);
    case NodeKind::Pow: return ops.pow(a, b, node.pos);
    default: break;
  }
  domain_error("corrupt expression tree", node.pos);
}

void check_input(const Expr& e, const Vector& x) {
  if (x.size() != e.n()) {
    throw Error(ErrorCode::DimensionMismatch,
                "expression expects n=" + std::to_string(e.n()) + ", got " +
                    std::to_string(x.size()));
  }
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

void print_node(const std::vector<Node>& nodes, int id, std::string& out) {
  const Node& node = nodes[id];
  switch (node.kind) {
    case NodeKind::Constant: out += format_double(node.value); return;
    case NodeKind::Variable: out += "x" + std::to_string(node.variable + 1); return;
    case NodeKind::Parameter: out += "i"; return;
    case NodeKind::Negate:
      out += "(-";
      print_node(nodes, node.children[0], out);
      out += ")";
      return;
    case NodeKind::Call:
      out += function_name(node.function);
      out += "(";
      for (std::size_t k = 0; k < node.children.size(); ++k) {
        if (k > 0) out += ",";
        print_node(nodes, node.children[k], out);
      }
      out += ")";
      return;
    default: break;
  }
  const char* op = "?";
  switch (node.kind) {
    case NodeKind::Add: op = "+"; break;
    case NodeKind::Sub: op = "-"; break;
    case NodeKind::Mul: op = "*"; break;
    case NodeKind::Div: op = "/"; break;
    case NodeKind::Pow: op = "^"; break;
    default: break;
  }
  out += "(";
  print_node(nodes, node.children[0], out);
  out += op;
  print_node(nodes, node.children[1], out);
  out += ")";
}

bool equal_nodes(const Expr& a, int ia, const Expr& b, int ib) {
  const Node& na = a.nodes()[ia];
  const Node& nb = b.nodes()[ib];
  if (na.kind != nb.kind || na.children.size() != nb.children.size()) return false;
  switch (na.kind) {
    case NodeKind::Constant:
      if (na.value != nb.value) return false;
      break;
    case NodeKind::Variable:
      if (na.variable != nb.variable) return false;
      break;
    case NodeKind::Call:
      if (na.function != nb.function) return false;
      break;
    default: break;
  }
  for (std::size_t k = 0; k < na.children.size(); ++k) {
    if (!equal_nodes(a, na.children[k], b, nb.children[k])) return false;
  }
  return true;
}

}  // namespace

double Expr::eval(const Vector& x, double index) const {
  check_input(*this, x);
  return eval_node(nodes_, root_, PlainOps{x, index});
}

DualResult Expr::eval_dual(const Vector& x, double index) const {
  check_input(*this, x);
  DualResult out;
  Dual d = eval_node(nodes_, root_, DualOps{x, index, &out.nondifferentiable});
  out.value = d.value;
  out.gradient = std::move(d.grad);
  return out;
}

std::string Expr::print() const {
  std::string out;
  if (root_ >= 0) print_node(nodes_, root_, out);
  return out;
}

bool Expr::structurally_equal(const Expr& other) const {
  if (root_ < 0 || other.root_ < 0) return root_ == other.root_;
  return equal_nodes(*this, root_, other, other.root_);
}

std::vector<int> Expr::free_variables() const {
  std::set<int> vars;
  for (const auto& node : nodes_) {
    if (node.kind == NodeKind::Variable) vars.insert(node.variable);
  }
  return {vars.begin(), vars.end()};
}

bool Expr::uses_parameter() const {
  for (const auto& node : nodes_) {
    if (node.kind == NodeKind::Parameter) return true;
  }
  return false;
}

}  // namespace setopt::expr
