#pragma once

#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "proxthresh/checks.hpp"
#include "proxthresh/numerics.hpp"
#include "proxthresh/parser.hpp"
#include "proxthresh/serialize.hpp"
#include "proxthresh/threshold.hpp"

namespace proxthresh {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int check_failed = 1;  // also internal errors
inline constexpr int bad_input = 2;      // DSL parse errors and invalid options
inline constexpr int not_prox_bounded = 3;
inline constexpr int unknown = 4;
}  // namespace exit_code

/// Row-major grid of values; `points[i]` has `dim` coordinates.
struct Grid {
  int dim = 1;
  std::vector<Point> points;
  std::vector<double> values;
};

inline std::string grid_csv(const Grid& g) {
  std::string s = g.dim == 1 ? "x,value\n" : "x,y,value\n";
  for (std::size_t i = 0; i < g.points.size(); ++i) {
    for (double c : g.points[i]) s += format_double(c) + ",";
    s += format_double(g.values[i]) + "\n";
  }
  return s;
}

inline Grid parse_grid_csv(std::string_view text) {
  Grid g;
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("csv: missing header");
  if (line == "x,value") g.dim = 1;
  else if (line == "x,y,value") g.dim = 2;
  else throw std::invalid_argument("csv: unexpected header '" + line + "'");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> cols;
    std::size_t start = 0;
    for (std::size_t pos; (pos = line.find(',', start)) != std::string::npos; start = pos + 1)
      cols.push_back(parse_double(std::string_view(line).substr(start, pos - start)));
    cols.push_back(parse_double(std::string_view(line).substr(start)));
    if (static_cast<int>(cols.size()) != g.dim + 1) throw std::invalid_argument("csv: wrong column count in '" + line + "'");
    g.values.push_back(cols.back());
    cols.pop_back();
    g.points.push_back(cols);
  }
  return g;
}

inline nlohmann::json grid_json(const Grid& g, const std::vector<std::string>& status = {}) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < g.points.size(); ++i) {
    nlohmann::json row = {{"x", g.points[i]}, {"value", number_json(g.values[i])}};
    if (!status.empty()) row["status"] = status[i];
    rows.push_back(row);
  }
  return rows;
}

namespace cli {

struct Interval1 {
  double lo, hi;
};

/// "a:b[,c:d]"
inline std::vector<Interval1> parse_range(const std::string& text) {
  std::vector<Interval1> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = std::min(text.find(',', start), text.size());
    const std::string part = text.substr(start, comma - start);
    const std::size_t colon = part.find(':');
    if (colon == std::string::npos) throw std::invalid_argument("--range expects a:b[,c:d], got '" + text + "'");
    Interval1 iv{parse_double(part.substr(0, colon)), parse_double(part.substr(colon + 1))};
    if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi) || !(iv.lo <= iv.hi))
      throw std::invalid_argument("--range bounds must be finite with a <= b");
    out.push_back(iv);
    start = comma + 1;
  }
  if (out.empty() || out.size() > 2) throw std::invalid_argument("--range expects one or two intervals");
  return out;
}

inline Point parse_point(const std::string& text) {
  Point p;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = std::min(text.find(',', start), text.size());
    p.push_back(parse_double(text.substr(start, comma - start)));
    start = comma + 1;
  }
  return p;
}

inline std::vector<Point> grid_points(const std::vector<Interval1>& range, int steps) {
  auto axis = [&](const Interval1& iv, int i) {
    return iv.lo == iv.hi ? iv.lo : iv.lo + (iv.hi - iv.lo) * i / (steps - 1);
  };
  std::vector<Point> pts;
  if (range.size() == 1) {
    for (int i = 0; i < steps; ++i) pts.push_back({axis(range[0], i)});
  } else {
    for (int i = 0; i < steps; ++i)
      for (int j = 0; j < steps; ++j) pts.push_back({axis(range[0], i), axis(range[1], j)});
  }
  return pts;
}

/// Expression text, or the contents of the file it names.
inline std::string expression_source(const std::string& arg) {
  std::error_code ec;
  if (std::filesystem::is_regular_file(arg, ec)) {
    std::ifstream in(arg);
    std::stringstream ss;
    ss << in.rdbuf();
    std::string s = ss.str();
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
    return s;
  }
  return arg;
}

/// Writes to `path` through a temporary sibling and a rename.
inline void write_atomically(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + tmp + " for writing");
    f << content;
    if (!f.flush()) throw std::runtime_error("write to " + tmp + " failed");
  }
  std::filesystem::rename(tmp, path);
}

inline int threshold_exit(ThresholdKind k) {
  switch (k) {
    case ThresholdKind::exact:
    case ThresholdKind::interval: return exit_code::ok;
    case ThresholdKind::not_prox_bounded: return exit_code::not_prox_bounded;
    case ThresholdKind::unknown: return exit_code::unknown;
  }
  return exit_code::unknown;
}

inline std::string trace_text(const std::vector<TraceEntry>& trace) {
  std::string s;
  for (const auto& t : trace) {
    s += "  " + t.node + "  " + t.paper_id + "  " + t.rule + " -> " + to_string(t.bound);
    if (!t.inputs.empty()) {
      s += "  [";
      for (std::size_t i = 0; i < t.inputs.size(); ++i) s += (i ? "; " : "") + t.inputs[i];
      s += "]";
    }
    s += "\n";
  }
  return s;
}

/// Options shared by every verb.
struct Options {
  std::string expr;
  std::optional<int> dim;
  std::optional<double> r;
  std::string x;
  std::string range;
  int steps = 101;
  std::string method = "both";
  std::string format;
  std::uint64_t seed = 42;
  std::optional<double> max_radius;
  std::optional<double> divergence_bound;
  std::string out;
  bool function_only = false;
  bool corpus = false;

  SolverConfig config() const {
    SolverConfig c;
    if (max_radius) c.max_radius = *max_radius;
    if (divergence_bound) c.divergence_bound = *divergence_bound;
    c.validate();
    return c;
  }
};

struct Output {
  std::string text;
  int code = exit_code::ok;
};

inline void require_format(const std::string& verb, const std::string& format, std::initializer_list<const char*> allowed) {
  for (const char* a : allowed)
    if (format == a) return;
  throw std::invalid_argument("--format " + format + " is not available for " + verb);
}

inline Expr load(const Options& o) {
  if (o.expr.empty()) throw std::invalid_argument("an expression is required");
  return parse_expr(expression_source(o.expr), o.dim);
}

inline Output cmd_threshold(const Options& o) {
  const std::string fmt = o.format.empty() ? "text" : o.format;
  require_format("threshold", fmt, {"text", "json"});
  const Expr f = load(o);
  const auto res = compute_threshold(f);
  Output out{"", threshold_exit(res.kind())};
  if (fmt == "json") {
    nlohmann::json j = {{"verb", "threshold"}, {"expr", serialize(f)}, {"dim", f.dim()}, {"result", to_json(res)}};
    out.text = j.dump(2) + "\n";
  } else {
    out.text = to_string(res.bound) + "\n" + trace_text(res.trace);
  }
  return out;
}

struct GridRun {
  Grid grid;
  std::vector<std::string> status;
};

inline std::vector<Interval1> checked_range(const Options& o, int dim) {
  if (o.range.empty()) throw std::invalid_argument("--range is required");
  if (o.steps < 2) throw std::invalid_argument("--steps must be at least 2");
  auto range = parse_range(o.range);
  if (static_cast<int>(range.size()) != dim)
    throw std::invalid_argument("--range has " + std::to_string(range.size()) + " intervals for a " + std::to_string(dim) +
                                "-dimensional expression");
  return range;
}

inline Output emit_grid(const std::string& verb, const Expr& f, const GridRun& run, const std::string& fmt,
                        nlohmann::json extra) {
  if (fmt == "csv") return {grid_csv(run.grid)};
  if (fmt == "json") {
    nlohmann::json j = {{"verb", verb}, {"expr", serialize(f)}, {"dim", f.dim()}};
    j.update(extra);
    j["rows"] = grid_json(run.grid, run.status);
    return {j.dump(2) + "\n"};
  }
  std::string s;
  for (std::size_t i = 0; i < run.grid.points.size(); ++i) {
    s += checks::point_text(run.grid.points[i]) + "\t" + format_double(run.grid.values[i]);
    if (!run.status.empty()) s += "\t" + run.status[i];
    s += "\n";
  }
  return {s};
}

inline Output cmd_envelope(const Options& o, std::ostream& err) {
  const std::string fmt = o.format.empty() ? "csv" : o.format;
  require_format("envelope", fmt, {"csv", "json", "text"});
  const Expr f = load(o);
  const auto range = checked_range(o, f.dim());
  GridRun run;
  run.grid.dim = f.dim();
  run.grid.points = grid_points(range, o.steps);
  if (o.function_only) {
    for (const auto& p : run.grid.points) run.grid.values.push_back(f(p) + 0.0);
    return emit_grid("envelope", f, run, fmt, {{"function_only", true}});
  }
  if (!o.r) throw std::invalid_argument("--r is required");
  const double r = *o.r;
  if (!(r >= 0.0)) throw std::invalid_argument("--r must be nonnegative");
  const SolverConfig cfg = o.config();
  const auto sym = compute_threshold(f);
  const bool at_threshold = sym.is_exact() && sym.value() == r;
  bool all_minus_inf = true;
  for (const auto& p : run.grid.points) {
    const auto e = moreau_envelope(f, r, p, cfg);
    run.grid.values.push_back(e.value + 0.0);
    run.status.push_back(at_threshold ? "inconclusive" : to_string(e.status));
    all_minus_inf = all_minus_inf && e.status == EnvelopeStatus::negative_infinity;
  }
  if (at_threshold) err << "warning: r equals the threshold; finiteness of the envelope there is inconclusive\n";
  if (all_minus_inf) {
    err << "r below threshold: envelope is -inf at every probed point\n";
    return {"", exit_code::not_prox_bounded};
  }
  return emit_grid("envelope", f, run, fmt, {{"r", r}});
}

inline Output cmd_prox(const Options& o, std::ostream& err) {
  const std::string fmt = o.format.empty() ? "text" : o.format;
  require_format("prox", fmt, {"text", "json", "csv"});
  const Expr f = load(o);
  if (!o.r) throw std::invalid_argument("--r is required");
  if (o.x.empty()) throw std::invalid_argument("--x is required");
  const Point x = parse_point(o.x);
  if (static_cast<int>(x.size()) != f.dim()) throw std::invalid_argument("--x has the wrong number of coordinates");
  const auto e = moreau_envelope(f, *o.r, x, o.config());
  if (e.status == EnvelopeStatus::negative_infinity) {
    err << "r below threshold: prox undefined, envelope is -inf\n";
    return {"", exit_code::not_prox_bounded};
  }
  if (fmt == "json") {
    nlohmann::json j = {{"verb", "prox"}, {"expr", serialize(f)}, {"dim", f.dim()}, {"r", *o.r}, {"x", x},
                        {"result", to_json(e)}};
    return {j.dump(2) + "\n"};
  }
  std::string s;
  if (fmt == "csv") s = f.dim() == 1 ? "x\n" : "x,y\n";
  for (const auto& p : e.minimizers) {
    for (std::size_t i = 0; i < p.size(); ++i) s += (i ? "," : "") + format_double(p[i]);
    s += "\n";
  }
  if (fmt == "text") s += "envelope " + format_double(e.value) + " (" + to_string(e.status) + ")\n";
  return {s};
}

inline Output cmd_conjugate(const Options& o) {
  const std::string fmt = o.format.empty() ? "csv" : o.format;
  require_format("conjugate", fmt, {"csv", "json", "text"});
  const Expr f = load(o);
  const SolverConfig cfg = o.config();
  GridRun run;
  run.grid.dim = f.dim();
  if (!o.x.empty()) {
    run.grid.points = {parse_point(o.x)};
    if (static_cast<int>(run.grid.points[0].size()) != f.dim())
      throw std::invalid_argument("--x has the wrong number of coordinates");
  } else {
    run.grid.points = grid_points(checked_range(o, f.dim()), o.steps);
  }
  for (const auto& p : run.grid.points) run.grid.values.push_back(fenchel_conjugate(f, p, cfg) + 0.0);
  return emit_grid("conjugate", f, run, fmt, nlohmann::json::object());
}

inline std::string estimate_label(const ThresholdResult& r) {
  if (r.kind() == ThresholdKind::not_prox_bounded) return "NotProxBounded (suspected)";
  std::string s = to_string(r.bound);
  if (r.estimate) s += ", estimate " + format_double(*r.estimate);
  return s;
}

inline Output cmd_estimate(const Options& o, std::ostream& err) {
  const std::string fmt = o.format.empty() ? "text" : o.format;
  require_format("estimate", fmt, {"text", "json"});
  if (o.method != "liminf" && o.method != "bisection" && o.method != "both")
    throw std::invalid_argument("--method must be liminf, bisection or both");
  const Expr f = load(o);
  const SolverConfig cfg = o.config();
  std::vector<std::pair<std::string, ThresholdResult>> results;
  if (o.method != "bisection") results.emplace_back("liminf", estimate_threshold_liminf(f, cfg));
  if (o.method != "liminf") results.emplace_back("bisection", estimate_threshold_bisection(f, cfg));

  int code = exit_code::ok;
  for (const auto& [name, r] : results) {
    const int c = threshold_exit(r.kind());
    if (c == exit_code::not_prox_bounded || (c == exit_code::unknown && code == exit_code::ok)) code = c;
  }
  std::optional<double> gap;
  if (results.size() == 2) {
    const auto& a = results[0].second;
    const auto& b = results[1].second;
    if (a.estimate && b.estimate) {
      gap = std::abs(*a.estimate - *b.estimate);
      if (*gap > 0.1) err << "warning: estimators disagree by " << format_double(*gap) << "\n";
    } else if (a.kind() != b.kind()) {
      err << "warning: estimators disagree on prox-boundedness\n";
    }
  }
  if (fmt == "json") {
    nlohmann::json j = {{"verb", "estimate"}, {"expr", serialize(f)}, {"dim", f.dim()}, {"method", o.method}};
    for (const auto& [name, r] : results) j[name] = to_json(r);
    j["disagreement"] = gap ? nlohmann::json(*gap) : nlohmann::json(nullptr);
    return {j.dump(2) + "\n", code};
  }
  std::string s;
  for (const auto& [name, r] : results) s += name + ": " + estimate_label(r) + "\n";
  return {s, code};
}

inline Output cmd_check(const Options& o) {
  const std::string fmt = o.format.empty() ? "text" : o.format;
  require_format("check", fmt, {"text", "json"});
  CheckOptions co;
  co.cfg = o.config();
  co.seed = o.seed;
  if (!o.corpus && o.expr.empty()) throw std::invalid_argument("check needs an expression or --corpus");
  CheckReport rep;
  if (o.corpus) rep.append(check_corpus(co));
  if (!o.expr.empty()) rep.append(check_expression(load(o), co));
  const int code = rep.all_passed() ? exit_code::ok : exit_code::check_failed;
  if (fmt == "json") {
    nlohmann::json j = to_json(rep);
    j["verb"] = "check";
    j["seed"] = o.seed;
    return {j.dump(2) + "\n", code};
  }
  std::string s;
  for (const auto& c : rep.outcomes) {
    s += std::string(c.passed ? "PASS " : "FAIL ") + c.suite + "  " + c.subject + "  metric=" + format_double(c.metric) +
         "  " + c.detail;
    if (!c.witness.empty()) s += "  witness: " + c.witness;
    s += "\n";
  }
  s += std::to_string(rep.outcomes.size() - rep.failures()) + "/" + std::to_string(rep.outcomes.size()) + " passed\n";
  return {s, code};
}

/// Expressions such as "-abs(x)" look like short options to the argument
/// parser; they are moved behind a "--" separator.
inline std::vector<std::string> protect_expressions(std::vector<std::string> args) {
  std::vector<std::string> keep, moved;
  bool after_separator = false;
  for (auto& a : args) {
    if (a == "--") after_separator = true;
    const bool looks_short = !after_separator && a.size() > 1 && a[0] == '-' && a[1] != '-' && a != "-h" &&
                             !std::isdigit(static_cast<unsigned char>(a[1])) && a[1] != '.';
    (looks_short ? moved : keep).push_back(std::move(a));
  }
  if (!moved.empty()) {
    if (!after_separator) keep.push_back("--");
    keep.insert(keep.end(), moved.begin(), moved.end());
  }
  return keep;
}

inline void show_parse_error(const ParseError& e, const std::string& source, std::ostream& err) {
  err << "error: " << e.what() << "\n";
  if (e.position() <= source.size()) err << "  " << source << "\n  " << std::string(e.position(), ' ') << "^\n";
}

}  // namespace cli

/// Runs one command; `args` excludes the program name. Returns the exit code.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  cli::Options o;
  CLI::App app{"Threshold of prox-boundedness: symbolic calculus and numeric estimates", "proxthresh"};
  app.require_subcommand(1);
  auto common = [&](CLI::App* sub, bool numeric) {
    sub->add_option("expr", o.expr, "DSL expression or a file containing one");
    sub->add_option("--dim", o.dim, "Ambient dimension (default: inferred from the variables used)")->check(CLI::Range(1, 64));
    sub->add_option("--format", o.format, "Output format: csv, json or text");
    if (numeric) {
      sub->add_option("--max-radius", o.max_radius, "Largest search radius");
      sub->add_option("--divergence-bound", o.divergence_bound, "Values below minus this bound certify -inf");
    }
    sub->add_option("--out", o.out, "Write output to this path (atomically) instead of stdout");
  };
  auto* threshold = app.add_subcommand("threshold", "Symbolic threshold with its derivation trace");
  common(threshold, false);
  auto* envelope = app.add_subcommand("envelope", "Moreau envelope on a grid");
  common(envelope, true);
  envelope->add_option("--r", o.r, "Envelope parameter");
  envelope->add_option("--range", o.range, "a:b[,c:d]");
  envelope->add_option("--steps", o.steps, "Grid points per axis");
  envelope->add_flag("--function-only", o.function_only, "Dump f itself instead of the envelope");
  auto* prox = app.add_subcommand("prox", "Proximal points at one x");
  common(prox, true);
  prox->add_option("--r", o.r, "Envelope parameter");
  prox->add_option("--x", o.x, "Point, comma separated");
  auto* conjugate = app.add_subcommand("conjugate", "Fenchel conjugate at a point or on a grid");
  common(conjugate, true);
  conjugate->add_option("--x", o.x, "Point, comma separated");
  conjugate->add_option("--range", o.range, "a:b[,c:d]");
  conjugate->add_option("--steps", o.steps, "Grid points per axis");
  auto* estimate = app.add_subcommand("estimate", "Numeric threshold estimates");
  common(estimate, true);
  estimate->add_option("--method", o.method, "liminf, bisection or both");
  auto* check = app.add_subcommand("check", "Property suites on an expression or the built-in corpus");
  common(check, true);
  check->add_flag("--corpus", o.corpus, "Run every suite over the built-in corpus");
  check->add_option("--seed", o.seed, "Seed for generated cases");

  std::vector<std::string> argv = cli::protect_expressions(args);
  std::reverse(argv.begin(), argv.end());
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return exit_code::ok;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return exit_code::ok;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << "run with --help for usage\n";
    return exit_code::bad_input;
  }

  cli::Output result;
  try {
    if (threshold->parsed()) result = cli::cmd_threshold(o);
    else if (envelope->parsed()) result = cli::cmd_envelope(o, err);
    else if (prox->parsed()) result = cli::cmd_prox(o, err);
    else if (conjugate->parsed()) result = cli::cmd_conjugate(o);
    else if (estimate->parsed()) result = cli::cmd_estimate(o, err);
    else result = cli::cmd_check(o);
  } catch (const ParseError& e) {
    cli::show_parse_error(e, cli::expression_source(o.expr), err);
    return exit_code::bad_input;
  } catch (const ExprError& e) {
    err << "error: " << e.what() << "\n";
    return exit_code::bad_input;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return exit_code::bad_input;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code::check_failed;
  }

  if (!result.text.empty()) {
    if (o.out.empty()) {
      out << result.text;
    } else {
      try {
        cli::write_atomically(o.out, result.text);
      } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_code::check_failed;
      }
    }
  }
  return result.code;
}

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  return run_cli(std::vector<std::string>(argv + 1, argv + argc), out, err);
}

}  // namespace proxthresh
