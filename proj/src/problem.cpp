#include "setopt/problem.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace setopt {

namespace {

Error with_function(const Error& err, int i) {
  const std::string& msg = err.message();
  return Error(err.code(), "f^" + std::to_string(i + 1) + ": " + msg, err.pos());
}

void check_x(const Problem& ps, const Vector& x) {
  if (x.size() != ps.n) {
    throw Error(ErrorCode::DimensionMismatch,
                "x has length " + std::to_string(x.size()) + ", problem has n=" +
                    std::to_string(ps.n));
  }
}

}  // namespace

Vector Problem::value(int i, const Vector& x) const {
  Vector v;
  try {
    functions->evaluate(i, x, &v, nullptr);
  } catch (const Error& err) {
    throw with_function(err, i);
  }
  if (!v.allFinite()) {
    throw Error(ErrorCode::DomainError, "f^" + std::to_string(i + 1) + " is not finite at x");
  }
  return v;
}

Matrix Problem::jacobian(int i, const Vector& x) const {
  Matrix j;
  try {
    functions->evaluate(i, x, nullptr, &j);
  } catch (const Error& err) {
    throw with_function(err, i);
  }
  return j;
}

std::vector<Vector> eval_F(const Problem& ps, const Vector& x) {
  check_x(ps, x);
  std::vector<Vector> out;
  out.reserve(ps.p);
  for (int i = 0; i < ps.p; ++i) out.push_back(ps.value(i, x));
  return out;
}

std::vector<Matrix> eval_jacobians(const Problem& ps, const Vector& x, std::span<const int> indices) {
  check_x(ps, x);
  std::vector<Matrix> out;
  out.reserve(indices.size());
  for (int i : indices) out.push_back(ps.jacobian(i, x));
  return out;
}

std::vector<Matrix> eval_jacobians(const Problem& ps, const Vector& x) {
  std::vector<int> all(ps.p);
  for (int i = 0; i < ps.p; ++i) all[i] = i;
  return eval_jacobians(ps, x, all);
}

void validate_problem(const Problem& ps) {
  if (ps.n < 1 || ps.m < 1 || ps.p < 1) {
    throw Error(ErrorCode::FormatError, "n, m and p must all be at least 1");
  }
  if (ps.cone.dim() != ps.m) {
    throw Error(ErrorCode::DimensionMismatch,
                "cone has m=" + std::to_string(ps.cone.dim()) + ", problem has m=" +
                    std::to_string(ps.m));
  }
  if (!ps.functions) throw Error(ErrorCode::FormatError, "problem has no functions");
  if (ps.box.lo.size() != ps.n || ps.box.hi.size() != ps.n) {
    throw Error(ErrorCode::DimensionMismatch, "sample box must have n intervals");
  }
  for (int j = 0; j < ps.n; ++j) {
    if (!(ps.box.lo(j) < ps.box.hi(j))) {
      throw Error(ErrorCode::FormatError,
                  "sample box interval " + std::to_string(j + 1) + " is empty");
    }
  }
  const Vector center = 0.5 * (ps.box.lo + ps.box.hi);
  for (int i = 0; i < ps.p; ++i) {
    Vector v;
    Matrix J;
    try {
      ps.functions->evaluate(i, center, &v, &J);
    } catch (const Error& err) {
      throw with_function(err, i);
    }
    if (v.size() != ps.m || J.rows() != ps.m || J.cols() != ps.n) {
      throw Error(ErrorCode::DimensionMismatch,
                  "f^" + std::to_string(i + 1) + " has wrong value or Jacobian shape");
    }
  }
}

void ExprFamily::evaluate(int i, const Vector& x, Vector* value, Matrix* jacobian) const {
  const double index = i + 1;
  const auto m = static_cast<Index>(components_.size());
  if (value) value->resize(m);
  if (jacobian) jacobian->resize(m, x.size());
  for (Index r = 0; r < m; ++r) {
    if (jacobian) {
      auto d = components_[r].eval_dual(x, index);
      if (value) (*value)(r) = d.value;
      jacobian->row(r) = d.gradient.transpose();
    } else if (value) {
      (*value)(r) = components_[r].eval(x, index);
    }
  }
}

namespace {

struct Line {
  int number;
  std::string text;
};

std::string strip(std::string_view s) {
  const auto hash = s.find('#');
  if (hash != std::string_view::npos) s = s.substr(0, hash);
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

[[noreturn]] void format_error(const std::string& section, int line, const std::string& what) {
  throw Error(ErrorCode::FormatError, "[" + section + "] " + what, {line, 1});
}

std::vector<double> parse_numbers(const std::string& text, const std::string& section, int line) {
  std::vector<double> out;
  std::istringstream in(text);
  std::string word;
  while (in >> word) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(word.data(), word.data() + word.size(), v);
    if (ec != std::errc() || ptr != word.data() + word.size()) {
      format_error(section, line, "'" + word + "' is not a number");
    }
    out.push_back(v);
  }
  return out;
}

int parse_int(const std::string& value, const std::string& key, int line) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    format_error("meta", line, key + "='" + value + "' is not an integer");
  }
  return v;
}

}  // namespace

Problem parse_problem(std::string_view text, const std::string& source_name) {
  std::map<std::string, std::vector<Line>> sections;
  std::map<std::string, int> section_line;
  std::string current;
  int number = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++number;
    std::string line = strip(text.substr(start, end - start));
    start = end + 1;
    if (line.empty()) continue;
    if (line.front() == '[') {
      const auto close = line.find(']');
      if (close == std::string::npos) format_error("?", number, "unterminated section header");
      current = line.substr(1, close - 1);
      if (current != "meta" && current != "cone" && current != "box" && current != "functions") {
        format_error(current, number, "unknown section");
      }
      if (section_line.count(current)) format_error(current, number, "duplicate section");
      section_line[current] = number;
      sections[current];
      std::string rest = strip(line.substr(close + 1));
      if (!rest.empty()) sections[current].push_back({number, rest});
      continue;
    }
    if (current.empty()) format_error("?", number, "content before the first section");
    sections[current].push_back({number, line});
  }

  if (!section_line.count("meta")) format_error("meta", 1, "missing [meta] section");
  std::map<std::string, std::string> meta;
  for (const auto& l : sections["meta"]) {
    std::istringstream in(l.text);
    std::string kv;
    while (in >> kv) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) format_error("meta", l.number, "expected key=value, got '" + kv + "'");
      meta[kv.substr(0, eq)] = kv.substr(eq + 1);
    }
  }
  const int meta_line = section_line["meta"];
  for (const char* key : {"n", "m", "p"}) {
    if (!meta.count(key)) format_error("meta", meta_line, std::string("missing ") + key + "=");
  }
  Problem ps;
  ps.name = meta.count("name") ? meta["name"] : source_name;
  ps.n = parse_int(meta["n"], "n", meta_line);
  ps.m = parse_int(meta["m"], "m", meta_line);
  ps.p = parse_int(meta["p"], "p", meta_line);
  if (ps.n < 1) format_error("meta", meta_line, "n must be at least 1");
  if (ps.m < 1) format_error("meta", meta_line, "m must be at least 1");
  if (ps.p < 1) format_error("meta", meta_line, "p must be at least 1");

  if (section_line.count("cone")) {
    const auto& lines = sections["cone"];
    const int header = section_line["cone"];
    if (lines.empty() || lines[0].text.rfind("rows=", 0) != 0) {
      format_error("cone", header, "expected rows=<Q>");
    }
    const int q = parse_int(lines[0].text.substr(5), "rows", lines[0].number);
    if (q < 1) format_error("cone", lines[0].number, "rows must be at least 1");
    if (static_cast<int>(lines.size()) != q + 2) {
      format_error("cone", header, "expected " + std::to_string(q) + " rows followed by e=");
    }
    Matrix A(q, ps.m);
    for (int r = 0; r < q; ++r) {
      const auto row = parse_numbers(lines[r + 1].text, "cone", lines[r + 1].number);
      if (static_cast<int>(row.size()) != ps.m) {
        format_error("cone", lines[r + 1].number, "row needs " + std::to_string(ps.m) + " entries");
      }
      for (int c = 0; c < ps.m; ++c) A(r, c) = row[c];
    }
    const auto& eline = lines[q + 1];
    if (eline.text.rfind("e=", 0) != 0) format_error("cone", eline.number, "expected e=");
    const auto ev = parse_numbers(eline.text.substr(2), "cone", eline.number);
    if (static_cast<int>(ev.size()) != ps.m) {
      format_error("cone", eline.number, "e needs " + std::to_string(ps.m) + " entries");
    }
    try {
      ps.cone = Cone::validate(A, Eigen::Map<const Vector>(ev.data(), ps.m));
    } catch (const Error& err) {
      throw Error(err.code(), "[cone] " + err.message(), {header, 1});
    }
  } else {
    ps.cone = Cone::orthant(ps.m);
  }

  if (!section_line.count("box")) format_error("box", 1, "missing [box] section");
  {
    const auto& lines = sections["box"];
    if (static_cast<int>(lines.size()) != ps.n) {
      format_error("box", section_line["box"], "expected " + std::to_string(ps.n) + " lines 'lo hi'");
    }
    ps.box.lo.resize(ps.n);
    ps.box.hi.resize(ps.n);
    for (int j = 0; j < ps.n; ++j) {
      const auto v = parse_numbers(lines[j].text, "box", lines[j].number);
      if (v.size() != 2 || !(v[0] < v[1])) format_error("box", lines[j].number, "expected 'lo hi' with lo < hi");
      ps.box.lo(j) = v[0];
      ps.box.hi(j) = v[1];
    }
  }

  if (!section_line.count("functions")) format_error("functions", 1, "missing [functions] section");
  {
    const auto& lines = sections["functions"];
    if (static_cast<int>(lines.size()) != ps.m) {
      format_error("functions", section_line["functions"],
                   "expected " + std::to_string(ps.m) + " expression lines");
    }
    std::vector<expr::Expr> comps;
    // Column offsets are relative to the stripped line; recover them from the raw text.
    for (const auto& l : lines) {
      int column = 1;
      std::size_t pos = 0, ln = 1;
      for (; pos < text.size() && ln < static_cast<std::size_t>(l.number); ++pos) {
        if (text[pos] == '\n') ++ln;
      }
      while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t')) {
        ++pos;
        ++column;
      }
      comps.push_back(expr::Expr::parse(l.text, ps.n, {l.number, column}));
    }
    ps.functions = std::make_shared<ExprFamily>(std::move(comps));
  }
  validate_problem(ps);
  return ps;
}

Problem load_problem(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_problem(buf.str(), std::filesystem::path(path).stem().string());
}

Problem resolve_problem(const std::string& name_or_path) {
  for (const auto& name : builtin_names()) {
    if (name == name_or_path) return builtin(name);
  }
  if (std::filesystem::exists(name_or_path)) return load_problem(name_or_path);
  throw Error(ErrorCode::UnknownProblem,
              "'" + name_or_path + "' is neither a built-in (ex1..ex7) nor a readable file");
}

}  // namespace setopt
