#include "setopt/bench.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

namespace setopt {

Vector sample_start(const SampleBox& box, std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  std::mt19937_64 gen(seq);
  Vector x(box.lo.size());
  for (Index d = 0; d < x.size(); ++d) {
    // 53 random bits mapped to [0, 1); std distributions differ between libraries.
    const double r = static_cast<double>(gen() >> 11) * 0x1.0p-53;
    x(d) = box.lo(d) + r * (box.hi(d) - box.lo(d));
  }
  return x;
}

std::vector<RunRecord> run_bench(const Problem& ps, const BenchConfig& cfg) {
  if (cfg.starts < 1) throw Error(ErrorCode::InvalidConfig, "--starts must be at least 1");
  if (cfg.methods.empty()) throw Error(ErrorCode::InvalidConfig, "no methods selected");
  if (cfg.jobs < 1) throw Error(ErrorCode::InvalidConfig, "--jobs must be at least 1");
  cfg.solver.validate();
  const SampleBox box = cfg.box.value_or(ps.box);
  if (box.lo.size() != ps.n || box.hi.size() != ps.n) {
    throw Error(ErrorCode::DimensionMismatch, "sample box dimension differs from n");
  }

  const std::size_t per_start = cfg.methods.size();
  const std::size_t total = static_cast<std::size_t>(cfg.starts) * per_start;
  std::vector<RunRecord> runs(total);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t slot = next++; slot < total; slot = next++) {
      RunRecord& r = runs[slot];
      r.start = static_cast<int>(slot / per_start);
      r.method = cfg.methods[slot % per_start];
      r.x0 = sample_start(box, cfg.seed, static_cast<std::uint64_t>(r.start));
      SolverConfig sc = cfg.solver;
      sc.method = r.method;
      sc.trace_images = false;
      const auto begin = std::chrono::steady_clock::now();
      const IterateTrace trace = run(ps, r.x0, sc);
      r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - begin).count();
      r.status = trace.status;
      r.iterations = trace.iterations();
      r.x_final = trace.x_final();
      r.phi = trace.records.back().phi;
      r.varsigma = trace.records.back().varsigma;
    }
  };
  const int threads = std::min<int>(cfg.jobs, static_cast<int>(total));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  return runs;
}

namespace {

double smallest_mode(std::vector<double> sorted) {
  double best = sorted.front();
  std::size_t best_count = 0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    if (j - i > best_count) {
      best_count = j - i;
      best = sorted[i];
    }
    i = j;
  }
  return best;
}

SummaryStats stats_with_mode(std::vector<double> values, std::vector<double> mode_values) {
  if (values.empty()) throw Error(ErrorCode::EmptyInput, "statistics of an empty sample");
  SummaryStats s;
  const std::size_t n = values.size();
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(n);
  double sq = 0.0;
  for (double v : values) sq += (v - s.mean) * (v - s.mean);
  s.sd = n > 1 ? std::sqrt(sq / static_cast<double>(n - 1)) : 0.0;
  std::sort(values.begin(), values.end());
  s.min = values.front();
  s.max = values.back();
  s.median = n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
  std::sort(mode_values.begin(), mode_values.end());
  s.mode = smallest_mode(std::move(mode_values));
  // Summation order can push the mean one ulp past the range of equal values.
  s.mean = std::clamp(s.mean, s.min, s.max);
  return s;
}

}  // namespace

SummaryStats summary_stats(std::vector<double> values) {
  std::vector<double> copy = values;
  return stats_with_mode(std::move(values), std::move(copy));
}

SummaryStats time_stats(std::vector<double> seconds) {
  std::vector<double> bins;
  bins.reserve(seconds.size());
  for (double s : seconds) bins.push_back(std::ceil(s));
  return stats_with_mode(std::move(seconds), std::move(bins));
}

BenchStats summarize(const Problem& ps, const BenchConfig& cfg, const std::vector<RunRecord>& runs) {
  BenchStats stats;
  stats.problem = ps.name;
  stats.starts = cfg.starts;
  stats.seed = cfg.seed;
  stats.box = cfg.box.value_or(ps.box);
  stats.solver = cfg.solver;
  for (Method method : cfg.methods) {
    MethodStats ms;
    ms.method = method;
    for (Status s : {Status::Converged, Status::MaxIterations, Status::LineSearchFailure,
                     Status::NumericalError}) {
      ms.status_counts[to_string(s)] = 0;
    }
    std::vector<double> iterations, seconds;
    for (const auto& r : runs) {
      if (r.method != method) continue;
      ++ms.status_counts[to_string(r.status)];
      if (r.status == Status::Converged || r.status == Status::MaxIterations) {
        iterations.push_back(r.iterations);
        seconds.push_back(r.seconds);
      }
    }
    ms.included = static_cast<int>(iterations.size());
    if (!iterations.empty()) {
      ms.iterations = summary_stats(std::move(iterations));
      ms.seconds = time_stats(std::move(seconds));
    }
    stats.methods.push_back(std::move(ms));
  }
  return stats;
}

namespace {

nlohmann::ordered_json to_json(const Vector& v) {
  auto arr = nlohmann::ordered_json::array();
  for (Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

nlohmann::ordered_json to_json(const std::optional<SummaryStats>& s) {
  if (!s) return nullptr;
  return {{"min", s->min}, {"max", s->max}, {"mean", s->mean},
          {"median", s->median}, {"mode", s->mode}, {"sd", s->sd}};
}

nlohmann::ordered_json config_json(const SolverConfig& c) {
  return {{"beta", c.beta},           {"nu", c.nu},
          {"eps", c.eps_stop},        {"max_iter", c.max_iter},
          {"max_backtracks", c.max_backtracks}, {"tol_sub", c.tol_sub},
          {"tol_group", c.tol_group}, {"tol_order", c.tol_order},
          {"c_curv", c.c_curv}};
}

nlohmann::ordered_json header_json(const BenchStats& stats, const char* kind) {
  return {{"format", kind},
          {"format_version", kFormatVersion},
          {"problem", stats.problem},
          {"starts", stats.starts},
          {"seed", stats.seed},
          {"box", {{"lo", to_json(stats.box.lo)}, {"hi", to_json(stats.box.hi)}}},
          {"config", config_json(stats.solver)}};
}

}  // namespace

nlohmann::ordered_json stats_json(const BenchStats& stats) {
  auto out = header_json(stats, "setopt-bench-stats");
  nlohmann::ordered_json methods = nlohmann::ordered_json::object();
  for (const auto& m : stats.methods) {
    nlohmann::ordered_json entry;
    entry["included_runs"] = m.included;
    entry["iterations"] = to_json(m.iterations);
    entry["median_iterations"] = m.iterations ? nlohmann::ordered_json(m.iterations->median) : nullptr;
    entry["status_counts"] = m.status_counts;
    methods[to_string(m.method)] = std::move(entry);
  }
  out["methods"] = std::move(methods);
  return out;
}

nlohmann::ordered_json timing_json(const BenchStats& stats) {
  auto out = header_json(stats, "setopt-bench-timing");
  nlohmann::ordered_json methods = nlohmann::ordered_json::object();
  for (const auto& m : stats.methods) {
    auto t = to_json(m.seconds);
    if (m.seconds) {
      t.erase("mode");
      t["ceil_mode"] = m.seconds->mode;
    }
    methods[to_string(m.method)] = {{"seconds", t}};
  }
  out["methods"] = std::move(methods);
  return out;
}

std::string format_table(const BenchStats& stats) {
  auto tuple = [](const std::optional<SummaryStats>& s, int precision) {
    if (!s) return std::string("(no runs)");
    std::ostringstream os;
    os << std::setprecision(precision) << "(" << s->min << ", " << s->max << ", " << std::fixed
       << s->mean << ", " << std::defaultfloat << s->median << ", " << s->mode << ", " << std::fixed
       << s->sd << ")";
    return os.str();
  };
  std::ostringstream out;
  out << "Performance on " << stats.problem << " (seed " << stats.seed << ")\n";
  out << std::left << std::setw(10) << "Starts" << std::setw(6) << "Alg"
      << std::setw(48) << "Iterations (Min, Max, Mean, Median, Mode, SD)"
      << "CPU time [s] (Min, Max, Mean, Median, ceil(Mode), SD)\n";
  bool first = true;
  for (const auto& m : stats.methods) {
    out << std::left << std::setw(10) << (first ? std::to_string(stats.starts) : "")
        << std::setw(6) << (m.method == Method::QuasiNewton ? "QNM" : "SD") << std::setw(48)
        << tuple(m.iterations, 4) << tuple(m.seconds, 4) << "\n";
    first = false;
  }
  for (const auto& m : stats.methods) {
    out << (m.method == Method::QuasiNewton ? "QNM" : "SD") << " status:";
    for (const auto& [name, count] : m.status_counts) out << " " << name << "=" << count;
    out << "\n";
  }
  return out.str();
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    // from_chars rejects inf/nan spellings it did not write in some libraries.
    if (text == "inf") return std::numeric_limits<double>::infinity();
    if (text == "-inf") return -std::numeric_limits<double>::infinity();
    if (text == "nan" || text == "-nan") return std::numeric_limits<double>::quiet_NaN();
    throw Error(ErrorCode::FormatError, "not a number: '" + std::string(text) + "'");
  }
  return v;
}

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

int parse_int(const std::string& text) {
  int v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw Error(ErrorCode::FormatError, "not an integer: '" + text + "'");
  }
  return v;
}

Status parse_status(const std::string& text) {
  for (Status s : {Status::Converged, Status::MaxIterations, Status::LineSearchFailure,
                   Status::NumericalError}) {
    if (text == to_string(s)) return s;
  }
  throw Error(ErrorCode::FormatError, "unknown status '" + text + "'");
}

/// Columns named prefix1..prefixN in the header.
int count_prefixed(const std::vector<std::string>& header, const std::string& prefix) {
  int count = 0;
  while (std::find(header.begin(), header.end(), prefix + std::to_string(count + 1)) != header.end()) ++count;
  return count;
}

Vector read_vector(const std::vector<std::string>& row, std::size_t first, int n) {
  Vector v(n);
  for (int j = 0; j < n; ++j) v(j) = parse_double(row.at(first + j));
  return v;
}

}  // namespace

void write_runs_csv(std::ostream& out, const std::vector<RunRecord>& runs) {
  const Index n = runs.empty() ? 0 : runs.front().x0.size();
  out << "start,method,status,iterations,seconds,phi,varsigma";
  for (Index j = 0; j < n; ++j) out << ",x0_" << j + 1;
  for (Index j = 0; j < n; ++j) out << ",x_" << j + 1;
  out << "\n";
  for (const auto& r : runs) {
    out << r.start << "," << to_string(r.method) << "," << to_string(r.status) << "," << r.iterations
        << "," << format_double(r.seconds) << "," << format_double(r.phi) << ","
        << format_double(r.varsigma);
    for (Index j = 0; j < n; ++j) out << "," << format_double(r.x0(j));
    for (Index j = 0; j < n; ++j) out << "," << format_double(r.x_final(j));
    out << "\n";
  }
}

std::vector<RunRecord> read_runs_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::FormatError, "runs CSV is empty");
  const auto header = split(line, ',');
  const int n = count_prefixed(header, "x0_");
  std::vector<RunRecord> runs;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto row = split(line, ',');
    if (row.size() != header.size()) throw Error(ErrorCode::FormatError, "runs CSV row has wrong width");
    RunRecord r;
    r.start = parse_int(row[0]);
    r.method = parse_method(row[1]);
    r.status = parse_status(row[2]);
    r.iterations = parse_int(row[3]);
    r.seconds = parse_double(row[4]);
    r.phi = parse_double(row[5]);
    r.varsigma = parse_double(row[6]);
    r.x0 = read_vector(row, 7, n);
    r.x_final = read_vector(row, 7 + n, n);
    runs.push_back(std::move(r));
  }
  return runs;
}

void write_trace_csv(std::ostream& out, const IterateTrace& trace) {
  const Index n = trace.records.empty() ? 0 : trace.records.front().x.size();
  out << "k";
  for (Index j = 0; j < n; ++j) out << ",x" << j + 1;
  out << ",u_norm,phi,t,q,varsigma,gap,skips,millis,w,a\n";
  for (const auto& r : trace.records) {
    out << r.k;
    for (Index j = 0; j < n; ++j) out << "," << format_double(r.x(j));
    out << "," << format_double(r.u_norm) << "," << format_double(r.phi) << "," << format_double(r.t)
        << "," << r.q << "," << format_double(r.varsigma) << "," << format_double(r.gap) << ","
        << r.skips << "," << format_double(r.millis) << "," << r.w << ",";
    for (std::size_t j = 0; j < r.a.indices.size(); ++j) out << (j ? ";" : "") << r.a.indices[j] + 1;
    out << "\n";
  }
}

std::vector<IterationRecord> read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::FormatError, "trace CSV is empty");
  const auto header = split(line, ',');
  const int n = count_prefixed(header, "x");
  if (header.size() != static_cast<std::size_t>(n) + 11) {
    throw Error(ErrorCode::FormatError, "unexpected trace CSV header");
  }
  std::vector<IterationRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto row = split(line, ',');
    if (row.size() != header.size()) throw Error(ErrorCode::FormatError, "trace CSV row has wrong width");
    IterationRecord r;
    std::size_t c = 0;
    r.k = parse_int(row[c++]);
    r.x = read_vector(row, c, n);
    c += n;
    r.u_norm = parse_double(row[c++]);
    r.phi = parse_double(row[c++]);
    r.t = parse_double(row[c++]);
    r.q = parse_int(row[c++]);
    r.varsigma = parse_double(row[c++]);
    r.gap = parse_double(row[c++]);
    r.skips = parse_int(row[c++]);
    r.millis = parse_double(row[c++]);
    r.w = parse_int(row[c++]);
    if (!row[c].empty()) {
      for (const auto& idx : split(row[c], ';')) r.a.indices.push_back(parse_int(idx) - 1);
    }
    records.push_back(std::move(r));
  }
  return records;
}

nlohmann::ordered_json summary_json(const Problem& ps, const IterateTrace& trace, const SolverConfig& cfg) {
  const auto& last = trace.records.back();
  const auto& d = trace.diagnostics;
  nlohmann::ordered_json out = {
      {"format", "setopt-solve-summary"},
      {"format_version", kFormatVersion},
      {"problem", ps.name},
      {"method", to_string(trace.method)},
      {"status", to_string(trace.status)},
      {"message", trace.message},
      {"iterations", trace.iterations()},
      {"x0", to_json(trace.records.front().x)},
      {"x_final", to_json(last.x)},
      {"phi", last.phi},
      {"u_norm", last.u_norm},
      {"varsigma", last.varsigma},
      {"config", config_json(cfg)},
      {"diagnostics",
       {{"descent_recursion", d.descent_recursion},
        {"armijo", d.armijo},
        {"set_descent", d.set_descent},
        {"spd", d.spd},
        {"max_secant_residual", d.max_secant_residual},
        {"max_u_norm", d.max_u_norm},
        {"u_bound", d.u_bound},
        {"bounded", d.bounded},
        {"warnings", d.warnings}}},
  };
  if (trace.violating_j) out["violating_j"] = *trace.violating_j + 1;
  return out;
}

void write_images_csv(std::ostream& out, const Problem& ps, const IterateTrace& trace) {
  out << "k,i";
  for (int c = 0; c < ps.m; ++c) out << ",f" << c + 1;
  out << "\n";
  for (const auto& r : trace.records) {
    for (std::size_t i = 0; i < r.images.size(); ++i) {
      out << r.k << "," << i + 1;
      for (int c = 0; c < ps.m; ++c) out << "," << format_double(r.images[i](c));
      out << "\n";
    }
  }
}

void write_iterates_csv(std::ostream& out, const IterateTrace& trace) {
  const Index n = trace.records.empty() ? 0 : trace.records.front().x.size();
  out << "k";
  for (Index j = 0; j < n; ++j) out << ",x" << j + 1;
  out << ",varsigma\n";
  for (const auto& r : trace.records) {
    out << r.k;
    for (Index j = 0; j < n; ++j) out << "," << format_double(r.x(j));
    out << "," << format_double(r.varsigma) << "\n";
  }
}

}  // namespace setopt
