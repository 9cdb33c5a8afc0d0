#pragma once

// Command-line application: subcommand dispatch, config files, CSV/JSON output,
// parameter sweeps and gnuplot script emission.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <boost/rational.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "bateman/classical.hpp"
#include "bateman/closedform.hpp"
#include "bateman/dirac.hpp"
#include "bateman/error.hpp"
#include "bateman/fock.hpp"
#include "bateman/geometry.hpp"
#include "bateman/model.hpp"
#include "bateman/reduced.hpp"
#include "bateman/timeseries.hpp"

namespace bateman::app {

using json = nlohmann::json;
namespace fs = std::filesystem;

inline constexpr const char* kOutputDirEnv = "BATEMAN_OUTPUT_DIR";
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumerical = 3;

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"params", "dirac-check", "classical", "closed-form",
                                              "fock",   "reduced",     "spiral",    "koch",
                                              "fig3",   "fig4",        "sweep"};
  return names;
}

struct RunConfig {
  std::string command;
  ModelParams params;

  int cutoff = 40;
  double dt = 0.01;
  double ds = 0.02;
  double t_end = 10.0;

  // classical
  double y1 = 1.0, y1dot = 0.0, y2 = 1.0, y2dot = 0.0;
  // closed-form
  double na0 = 0.0, nb0 = 0.0;
  std::string energy_sign = "literal";
  // fock / reduced
  std::string initial = "vacuum";
  std::string mode = "exact";
  std::string free_term = "sum";
  // geometry
  double r0 = 1.0;
  int level = 3;
  std::string summary;
  double gamma_t = 1.25;
  int n = 9;
  double s_max = 2.0;
  double s_step = 0.1;
  // sweep
  std::vector<double> sweep_s{0.5, 1.0};
  std::vector<int> sweep_cutoff{10, 20};
  std::string sweep_command = "fock";
  int jobs = 0;

  // output
  std::string output;      // file path, "-" for stdout
  std::string output_dir;  // default directory for files
  std::string format = "csv";
  bool plot = false;
};

/// Result of one subcommand before serialization.
struct Dataset {
  json meta = json::object();
  std::optional<Table> table;
  json data;  // used when there is no table
};

// Parsing helpers

namespace detail {

inline FreeTerm parse_free_term(const std::string& s) {
  if (s == "sum") return FreeTerm::kSum;
  if (s == "difference") return FreeTerm::kDifference;
  throw Error(ErrorKind::kInvalidParams, "free term must be 'sum' or 'difference', got '" + s + "'");
}

inline closedform::EnergySign parse_energy_sign(const std::string& s) {
  if (s == "literal") return closedform::EnergySign::kLiteral;
  if (s == "casimir") return closedform::EnergySign::kCasimir;
  throw Error(ErrorKind::kInvalidParams, "energy sign must be 'literal' or 'casimir', got '" + s + "'");
}

inline std::vector<double> parse_numbers(const std::string& list, std::size_t expected,
                                         const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorKind::kInvalidParams, "bad number '" + item + "' in " + what);
    }
  }
  if (out.size() != expected) {
    throw Error(ErrorKind::kInvalidParams, what + " needs " + std::to_string(expected) + " values");
  }
  return out;
}

inline int as_occupation(double v, const std::string& what) {
  if (v < 0 || v != std::floor(v)) throw Error(ErrorKind::kInvalidParams, what + " must be a non-negative integer");
  return static_cast<int>(v);
}

/// vacuum | number:na,nb | squeezed:re,im
inline fock::State parse_initial(const fock::FockSpace& sp, const std::string& spec,
                                 fock::CutoffPolicy policy) {
  if (spec == "vacuum") return fock::State::vacuum(sp);
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const std::string rest = colon == std::string::npos ? "" : spec.substr(colon + 1);
  if (kind == "number") {
    const auto v = parse_numbers(rest, 2, "number state");
    const int na = as_occupation(v[0], "n_a"), nb = as_occupation(v[1], "n_b");
    if (na > sp.na_max() || nb > sp.nb_max()) {
      throw Error(ErrorKind::kInvalidParams, "number state lies outside the cutoff");
    }
    return fock::State::number(sp, na, nb);
  }
  if (kind == "squeezed") {
    const auto v = parse_numbers(rest, 2, "squeezing parameter");
    return fock::squeezed_vacuum(sp, Complex(v[0], v[1]), policy);
  }
  throw Error(ErrorKind::kInvalidParams, "unknown initial state '" + spec + "'");
}

inline std::vector<double> grid(double t_end, double dt) {
  if (!(dt > 0.0) || !(t_end >= 0.0) || !std::isfinite(t_end)) {
    throw Error(ErrorKind::kInvalidParams, "time grid needs dt > 0 and finite t_end >= 0");
  }
  const auto steps = static_cast<std::size_t>(std::ceil(t_end / dt - 1e-9));
  std::vector<double> t(steps + 1);
  for (std::size_t i = 0; i <= steps; ++i) {
    t[i] = steps == 0 ? 0.0 : t_end * static_cast<double>(i) / static_cast<double>(steps);
  }
  return t;
}

inline json params_json(const ModelParams& p) {
  return {{"m", p.m}, {"omega0", p.omega0}, {"s", p.s}, {"hbar", p.hbar}};
}

inline json derived_json(const DerivedParams& d) {
  return {{"theta", d.theta}, {"gamma", d.gamma}, {"Gamma", d.Gamma}, {"A", d.A},   {"Omega", d.Omega},
          {"d", d.d},         {"T", d.T},         {"tau", d.tau},     {"ell_d", d.ell_d}};
}

inline std::string rational_string(const boost::rational<long long>& r) {
  return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

/// Exact rational for a double when it is a ratio of small integers
/// (every double with denominator up to 2^20 that round-trips).
inline std::optional<boost::rational<long long>> exact_rational(double x) {
  if (!std::isfinite(x)) return std::nullopt;
  long long den = 1;
  for (int k = 0; k <= 40; ++k, den *= 2) {
    const double num = x * static_cast<double>(den);
    if (num == std::floor(num) && std::abs(num) < 9e15) {
      return boost::rational<long long>(static_cast<long long>(num), den);
    }
  }
  return std::nullopt;
}

}  // namespace detail

// Subcommands

inline Dataset cmd_params(const RunConfig& c) {
  const DerivedParams d = derive_params(c.params);
  Dataset out;
  out.data = {{"params", detail::params_json(c.params)}, {"derived", detail::derived_json(d)}};
  return out;
}

/// Bracket table for (m, s); uses exact rationals when both are dyadic.
inline Dataset cmd_dirac_check(const RunConfig& c, bool& all_pass) {
  validate(c.params);
  Dataset out;
  out.data = json::array();
  all_pass = true;
  const auto m_r = detail::exact_rational(c.params.m);
  const auto s_r = detail::exact_rational(c.params.s);
  Table table;
  std::vector<std::string> names;
  if (m_r && s_r) {
    out.meta["arithmetic"] = "rational";
    for (const auto& e : dirac::verify_bracket_table<boost::rational<long long>>(*m_r, *s_r)) {
      out.data.push_back({{"bracket", e.name},
                          {"expected", boost::rational_cast<double>(e.expected)},
                          {"computed", boost::rational_cast<double>(e.computed)},
                          {"residual", boost::rational_cast<double>(e.residual)},
                          {"expected_exact", detail::rational_string(e.expected)},
                          {"computed_exact", detail::rational_string(e.computed)},
                          {"pass", e.pass}});
      all_pass = all_pass && e.pass;
    }
  } else {
    out.meta["arithmetic"] = "double";
    for (const auto& e : dirac::verify_bracket_table(c.params)) {
      out.data.push_back({{"bracket", e.name},
                          {"expected", e.expected},
                          {"computed", e.computed},
                          {"residual", e.residual},
                          {"pass", e.pass}});
      all_pass = all_pass && e.pass;
    }
  }
  out.meta["all_pass"] = all_pass;
  return out;
}

inline Dataset cmd_classical(const RunConfig& c) {
  const classical::ClassicalState init(c.y1, c.y1dot, c.y2, c.y2dot);
  Dataset out;
  out.table = classical::integrate_bateman(c.params, init, c.t_end, c.dt).to_table();
  return out;
}

inline Dataset cmd_closed_form(const RunConfig& c) {
  const auto sign = detail::parse_energy_sign(c.energy_sign);
  const auto term = detail::parse_free_term(c.free_term);
  const auto t = detail::grid(c.t_end, c.dt);
  std::vector<double> na(t.size()), nb(t.size()), ea(t.size()), eb(t.size()), ure(t.size()),
      uim(t.size()), vre(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    const auto uv = closedform::bogoliubov(c.params, t[i], term);
    na[i] = closedform::occupation_a(c.params, c.na0, c.nb0, t[i], term);
    nb[i] = closedform::occupation_b(c.params, c.na0, c.nb0, t[i], term);
    ea[i] = c.params.hbar * c.params.omega0 * na[i];
    eb[i] = (sign == closedform::EnergySign::kCasimir ? -1.0 : 1.0) * c.params.hbar * c.params.omega0 * nb[i];
    ure[i] = uv.u.real();
    uim[i] = uv.u.imag();
    vre[i] = uv.v.real();
  }
  Dataset out;
  Table table;
  table.add("t", t);
  table.add("Na", std::move(na));
  table.add("Nb", std::move(nb));
  table.add("Ea", std::move(ea));
  table.add("Eb", std::move(eb));
  table.add("u_re", std::move(ure));
  table.add("u_im", std::move(uim));
  table.add("v_re", std::move(vre));
  out.table = std::move(table);
  out.meta["energy_sign"] = c.energy_sign;
  return out;
}

inline Dataset cmd_fock(const RunConfig& c) {
  const auto term = detail::parse_free_term(c.free_term);
  if (c.cutoff < 1) throw Error(ErrorKind::kInvalidParams, "cutoff must be >= 1");
  const auto sp = fock::FockSpace::symmetric(c.cutoff);
  const auto t = detail::grid(c.t_end, c.dt);
  const auto ham = fock::build_hamiltonian(sp, c.params, term);
  const fock::Propagator prop(ham.H, c.params.hbar);
  const fock::State psi0 = detail::parse_initial(sp, c.initial, fock::CutoffPolicy::kChecked);
  const auto Na = fock::number_a(sp), Nb = fock::number_b(sp);
  std::vector<double> na(t.size()), nb(t.size()), en(t.size()), pur(t.size()), ent(t.size()),
      ov(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    const fock::State psi = prop.apply(psi0, t[i]);
    fock::check_cutoff(psi, fock::CutoffPolicy::kChecked);
    const auto obs = fock::observables(fock::reduce_pure(psi));
    na[i] = fock::expectation(Na, psi).real();
    nb[i] = fock::expectation(Nb, psi).real();
    en[i] = fock::expectation(ham.H, psi).real();
    pur[i] = obs.purity;
    ent[i] = obs.entropy;
    ov[i] = std::abs(fock::overlap(psi0, psi));
  }
  Dataset out;
  Table table;
  table.add("t", t);
  table.add("Na", std::move(na));
  table.add("Nb", std::move(nb));
  table.add("energy", std::move(en));
  table.add("purity", std::move(pur));
  table.add("entropy", std::move(ent));
  table.add("overlap0", std::move(ov));
  out.table = std::move(table);
  out.meta["cutoff"] = c.cutoff;
  out.meta["initial"] = c.initial;
  return out;
}

inline Dataset cmd_reduced(const RunConfig& c) {
  const auto term = detail::parse_free_term(c.free_term);
  reduced::ReducedOptions opt;
  opt.term = term;
  if (c.mode == "exact") {
    opt.mode = reduced::ClosureMode::kExact;
  } else if (c.mode == "born") {
    opt.mode = reduced::ClosureMode::kBorn;
  } else {
    throw Error(ErrorKind::kInvalidParams, "mode must be 'exact' or 'born', got '" + c.mode + "'");
  }
  if (c.cutoff < 1) throw Error(ErrorKind::kInvalidParams, "cutoff must be >= 1");
  const auto sp = fock::FockSpace::symmetric(c.cutoff);
  int na = 0;
  if (c.initial != "vacuum") {
    const auto colon = c.initial.find(':');
    if (c.initial.substr(0, colon) != "number" || colon == std::string::npos) {
      throw Error(ErrorKind::kInvalidParams, "reduced supports --initial vacuum or number:na,0");
    }
    const auto v = detail::parse_numbers(c.initial.substr(colon + 1), 2, "number state");
    na = detail::as_occupation(v[0], "n_a");
    if (v[1] != 0.0) throw Error(ErrorKind::kInvalidParams, "reduced needs mode b in vacuum");
    if (na > sp.na_max()) throw Error(ErrorKind::kInvalidParams, "number state lies outside the cutoff");
  }
  fock::Matrix rho = fock::Matrix::Zero(sp.dim_a(), sp.dim_a());
  rho(na, na) = 1.0;
  const auto traj = reduced::evolve_reduced(sp, c.params, fock::DensityMatrix::single_mode(rho), c.t_end,
                                            c.ds, opt);
  const auto& ts = traj.series;
  Dataset out;
  Table table;
  table.add("t", ts.times());
  for (const char* name : {"Na_kernel", "Na_oracle", "abs_err", "purity", "entropy", "rate_kernel",
                           "rate_analytic"}) {
    table.add(name, ts.real(name));
  }
  out.table = std::move(table);
  out.meta["cutoff"] = c.cutoff;
  out.meta["mode"] = c.mode;
  out.meta["step"] = ts.dt();
  return out;
}

inline Dataset cmd_spiral(const RunConfig& c) {
  const auto t = detail::grid(c.t_end, c.dt);
  const double h = t.size() > 1 ? t[1] - t[0] : c.dt;
  const auto ts = geometry::spiral_from_dynamics(c.params, c.r0, 0.0, h, t.size());
  const auto& z1 = ts.complex("z1");
  const auto& z2 = ts.complex("z2");
  std::vector<double> x1(t.size()), y1(t.size()), x2(t.size()), y2(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    x1[i] = z1[i].real();
    y1[i] = z1[i].imag();
    x2[i] = z2[i].real();
    y2[i] = z2[i].imag();
  }
  Dataset out;
  Table table;
  table.add("t", ts.times());
  table.add("x1", std::move(x1));
  table.add("y1", std::move(y1));
  table.add("x2", std::move(x2));
  table.add("y2", std::move(y2));
  table.add("r1", ts.real("r1"));
  table.add("r2", ts.real("r2"));
  out.table = std::move(table);
  return out;
}

inline json koch_summary(const geometry::KochCurve& k) {
  const double dim = geometry::koch_dimension_estimate(k);
  json s = {{"level", k.level}, {"segments", k.segments()}, {"length", k.length()}};
  s["dimension_estimate"] = std::isfinite(dim) ? json(dim) : json(nullptr);
  s["dimension_exact"] = geometry::fractal_dimension(4.0, 3.0);
  return s;
}

inline Dataset cmd_koch(const RunConfig& c) {
  const auto curve = geometry::koch_generate(c.level);
  std::vector<double> x, y;
  x.reserve(curve.points.size());
  y.reserve(curve.points.size());
  for (const auto& p : curve.points) {
    x.push_back(p[0]);
    y.push_back(p[1]);
  }
  Dataset out;
  Table table;
  table.add("x", std::move(x));
  table.add("y", std::move(y));
  out.table = std::move(table);
  out.meta["summary"] = koch_summary(curve);
  return out;
}

inline Dataset cmd_fig3(const RunConfig& c) {
  if (c.n < 0) throw Error(ErrorKind::kInvalidParams, "n must be >= 0");
  const auto r = geometry::lattice_samples_gamma_t(c.gamma_t, c.r0, c.n);
  std::vector<double> idx(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) idx[i] = static_cast<double>(i);
  Dataset out;
  Table table;
  table.add("n", std::move(idx));
  table.add("r", r);
  out.table = std::move(table);
  out.meta["gammaT"] = c.gamma_t;
  return out;
}

inline Dataset cmd_fig4(const RunConfig& c) {
  if (!(c.s_step > 0.0) || !(c.s_max >= 0.0)) {
    throw Error(ErrorKind::kInvalidParams, "fig4 needs s-step > 0 and s-max >= 0");
  }
  const auto count = static_cast<std::size_t>(std::floor(c.s_max / c.s_step + 1e-9)) + 1;
  std::vector<double> s(count), ratio(count);
  for (std::size_t i = 0; i < count; ++i) {
    s[i] = static_cast<double>(i) * c.s_step;
    ratio[i] = geometry::scaling_ratio(s[i], -1);
  }
  Dataset out;
  Table table;
  table.add("s", std::move(s));
  table.add("ratio", std::move(ratio));
  out.table = std::move(table);
  return out;
}

// Output

inline json table_json(const Table& t) {
  json rows = json::array();
  for (std::size_t r = 0; r < t.rows(); ++r) {
    json row = json::array();
    for (const auto& col : t.columns) row.push_back(col[r]);
    rows.push_back(std::move(row));
  }
  return {{"columns", t.header}, {"rows", std::move(rows)}};
}

inline bool wants_json(const RunConfig& c) {
  if (c.format == "json") return true;
  if (c.format == "csv") return false;
  throw Error(ErrorKind::kInvalidParams, "format must be 'csv' or 'json', got '" + c.format + "'");
}

inline void write_dataset(const RunConfig& c, const Dataset& ds, std::ostream& os) {
  if (wants_json(c) || !ds.table) {
    json meta = ds.meta;
    meta["command"] = c.command;
    meta["params"] = detail::params_json(c.params);
    json doc = {{"meta", std::move(meta)}, {"data", ds.table ? table_json(*ds.table) : ds.data}};
    os << doc.dump() << '\n';
    return;
  }
  if (!ds.table) throw Error(ErrorKind::kInvalidParams, c.command + " has no CSV form");
  ds.table->write_csv(os);
}

inline std::string output_dir(const RunConfig& c) {
  if (!c.output_dir.empty()) return c.output_dir;
  if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
  return {};
}

/// Target file for a run, or empty for standard output.
inline std::string output_path(const RunConfig& c) {
  if (c.output == "-") return {};
  const std::string dir = output_dir(c);
  if (!c.output.empty()) {
    const fs::path p(c.output);
    return (p.is_absolute() || dir.empty()) ? p.string() : (fs::path(dir) / p).string();
  }
  if (dir.empty()) return {};
  const bool is_json = wants_json(c) || c.command == "params" || c.command == "dirac-check";
  return (fs::path(dir) / (c.command + (is_json ? ".json" : ".csv"))).string();
}

/// Gnuplot script for a CSV dataset; declarative, reads only the CSV.
inline std::string plot_script(const std::string& dataset, const std::string& figure) {
  const std::string file = fs::path(dataset).filename().string();
  std::ostringstream s;
  s << "set datafile separator ','\n"
    << "set key autotitle columnhead\n"
    << "set grid\n";
  if (figure == "fig3") {
    s << "set logscale y\nset xlabel 'n'\nset ylabel 'r(nT)'\n"
      << "plot '" << file << "' using 1:2 with linespoints pt 7\n";
  } else if (figure == "fig4") {
    s << "set xrange [0:2]\nset xlabel 's'\nset ylabel 'r(t+T)/r(t)'\n"
      << "plot '" << file << "' using 1:2 with lines lw 2\n";
  } else if (figure == "spiral") {
    s << "set size ratio -1\nset xlabel 'Re z'\nset ylabel 'Im z'\n"
      << "plot '" << file << "' using 2:3 with lines title 'z1', '' using 4:5 with lines title 'z2'\n";
  } else if (figure == "koch") {
    s << "set size ratio -1\nunset key\nplot '" << file << "' using 1:2 with lines\n";
  } else if (figure == "classical") {
    s << "set xlabel 't'\nplot '" << file << "' using 1:2 with lines, '' using 1:4 with lines\n";
  } else if (figure == "closed-form") {
    s << "set xlabel 't'\nplot '" << file << "' using 1:2 with lines, '' using 1:3 with lines\n";
  } else if (figure == "fock") {
    s << "set xlabel 't'\nplot '" << file << "' using 1:2 with lines, '' using 1:6 with lines\n";
  } else if (figure == "reduced") {
    s << "set xlabel 't'\nplot '" << file << "' using 1:2 with lines, '' using 1:3 with points\n";
  } else {
    throw Error(ErrorKind::kInvalidParams, "no plot script for '" + figure + "'");
  }
  return s.str();
}

/// Writes <dataset stem>.gp next to the dataset and returns its path.
inline std::string emit_plot_script(const std::string& dataset, const std::string& figure) {
  const std::string text = plot_script(dataset, figure);
  fs::path out = fs::path(dataset);
  out.replace_extension(".gp");
  std::ofstream f(out, std::ios::binary);
  if (!f) throw Error(ErrorKind::kInvalidParams, "cannot write " + out.string());
  f << text;
  return out.string();
}

inline int exit_code_for(ErrorKind k) { return is_validation_error(k) ? kExitValidation : kExitNumerical; }

inline std::string error_line(std::string_view kind, const std::string& message, int code) {
  return json{{"error", std::string(kind)}, {"message", message}, {"exit_code", code}}.dump();
}

inline Dataset run_dataset(const RunConfig& c, int& code) {
  code = kExitOk;
  const std::string& cmd = c.command;
  if (cmd == "params") return cmd_params(c);
  if (cmd == "dirac-check") {
    bool ok = true;
    Dataset d = cmd_dirac_check(c, ok);
    if (!ok) code = kExitNumerical;
    return d;
  }
  if (cmd == "classical") return cmd_classical(c);
  if (cmd == "closed-form") return cmd_closed_form(c);
  if (cmd == "fock") return cmd_fock(c);
  if (cmd == "reduced") return cmd_reduced(c);
  if (cmd == "spiral") return cmd_spiral(c);
  if (cmd == "koch") return cmd_koch(c);
  if (cmd == "fig3") return cmd_fig3(c);
  if (cmd == "fig4") return cmd_fig4(c);
  throw Error(ErrorKind::kInvalidParams, "unknown subcommand '" + cmd + "'");
}

/// Runs one non-sweep subcommand and writes its output. Throws on failure.
inline int run_single(const RunConfig& c, std::ostream& out) {
  int code = kExitOk;
  const Dataset ds = run_dataset(c, code);
  const std::string path = output_path(c);
  if (path.empty()) {
    write_dataset(c, ds, out);
  } else {
    if (const auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorKind::kInvalidParams, "cannot write " + path);
    write_dataset(c, ds, f);
    if (c.plot && ds.table && !wants_json(c)) emit_plot_script(path, c.command);
  }
  if (c.command == "koch" && !wants_json(c)) {
    // Summary goes beside the vertices.
    std::string summary = c.summary;
    if (summary.empty()) {
      const std::string dir = path.empty() ? output_dir(c) : fs::path(path).parent_path().string();
      summary = (fs::path(dir.empty() ? "." : dir) / "koch_summary.json").string();
    }
    std::ofstream f(summary, std::ios::binary);
    if (!f) throw Error(ErrorKind::kInvalidParams, "cannot write " + summary);
    f << ds.meta["summary"].dump() << '\n';
  }
  return code;
}

struct SweepPoint {
  double s = 0.0;
  int cutoff = 0;
  std::string file;
  int exit_code = 0;
  std::string error;
};

/// Cartesian product over s and cutoff; one file per point plus index.json.
/// Points run on a worker pool; the index is written once all are done.
inline int run_sweep(const RunConfig& c, std::ostream& err) {
  if (c.sweep_command == "sweep" ||
      std::find(subcommands().begin(), subcommands().end(), c.sweep_command) == subcommands().end()) {
    throw Error(ErrorKind::kInvalidParams, "cannot sweep subcommand '" + c.sweep_command + "'");
  }
  if (c.sweep_s.empty() || c.sweep_cutoff.empty()) {
    throw Error(ErrorKind::kInvalidParams, "sweep needs at least one s and one cutoff");
  }
  std::string dir = output_dir(c);
  if (!c.output.empty() && c.output != "-") dir = c.output;
  if (dir.empty()) dir = "sweep";
  fs::create_directories(dir);
  const bool is_json = wants_json(c);

  std::vector<SweepPoint> points;
  for (double s : c.sweep_s) {
    for (int cut : c.sweep_cutoff) {
      SweepPoint p;
      p.s = s;
      p.cutoff = cut;
      p.file = c.sweep_command + "_s" + format_double(s) + "_cutoff" + std::to_string(cut) +
               (is_json ? ".json" : ".csv");
      points.push_back(p);
    }
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < points.size(); i = next++) {
      SweepPoint& p = points[i];
      RunConfig pc = c;
      pc.command = c.sweep_command;
      pc.params.s = p.s;
      pc.cutoff = p.cutoff;
      pc.output = (fs::path(dir) / p.file).string();
      pc.output_dir.clear();
      pc.summary = (fs::path(dir) / (p.file + ".summary.json")).string();
      try {
        std::ostringstream sink;
        p.exit_code = run_single(pc, sink);
      } catch (const Error& e) {
        p.exit_code = exit_code_for(e.kind());
        p.error = error_line(to_string(e.kind()), e.what(), p.exit_code);
      } catch (const std::exception& e) {
        p.exit_code = kExitNumerical;
        p.error = error_line("InternalError", e.what(), p.exit_code);
      }
    }
  };
  unsigned jobs = c.jobs > 0 ? static_cast<unsigned>(c.jobs) : std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min<unsigned>(jobs, static_cast<unsigned>(points.size()));
  std::vector<std::thread> pool;
  for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  json index = {{"command", c.sweep_command}, {"params", detail::params_json(c.params)}, {"points", json::array()}};
  int code = kExitOk;
  for (const auto& p : points) {
    json entry = {{"s", p.s}, {"cutoff", p.cutoff}, {"file", p.file}, {"exit_code", p.exit_code}};
    if (!p.error.empty()) {
      entry["error"] = json::parse(p.error);
      err << p.error << '\n';
    }
    index["points"].push_back(std::move(entry));
    code = std::max(code, p.exit_code);
  }
  std::ofstream f(fs::path(dir) / "index.json", std::ios::binary);
  if (!f) throw Error(ErrorKind::kInvalidParams, "cannot write index.json in " + dir);
  f << index.dump(2) << '\n';
  return code;
}

/// Runs a configuration; errors become one JSON line on `err`.
inline int run(const RunConfig& c, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  try {
    if (c.command == "sweep") return run_sweep(c, err);
    return run_single(c, out);
  } catch (const Error& e) {
    const int code = exit_code_for(e.kind());
    err << error_line(to_string(e.kind()), e.what(), code) << '\n';
    return code;
  } catch (const json::exception& e) {
    err << error_line("InvalidParams", e.what(), kExitValidation) << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    err << error_line("InternalError", e.what(), kExitNumerical) << '\n';
    return kExitNumerical;
  }
}

// Command line

namespace detail {

/// A flag bound to a RunConfig field. Config-file values are applied first,
/// then any flag given explicitly on the command line.
struct Binding {
  std::string key;
  std::function<void(const json&)> from_json;
  std::function<void()> from_flag;
  CLI::Option* option = nullptr;
};

inline std::string normalize_key(std::string k) {
  std::replace(k.begin(), k.end(), '_', '-');
  return k;
}

template <class T>
void bind(CLI::App& app, std::vector<Binding>& bindings, std::shared_ptr<RunConfig> target,
          std::string key, T RunConfig::*field, std::string help) {
  auto holder = std::make_shared<T>();
  Binding b;
  b.key = key;
  b.option = app.add_option("--" + key, *holder, std::move(help));
  b.from_json = [target, field](const json& v) { (*target).*field = v.get<T>(); };
  b.from_flag = [target, field, holder] { (*target).*field = *holder; };
  bindings.push_back(std::move(b));
}

inline void bind_param(CLI::App& app, std::vector<Binding>& bindings, std::shared_ptr<RunConfig> target,
                std::string key, double ModelParams::*field) {
  auto holder = std::make_shared<double>();
  Binding b;
  b.key = key;
  b.option = app.add_option("--" + key, *holder, "model parameter " + key);
  b.from_json = [target, field](const json& v) { target->params.*field = v.get<double>(); };
  b.from_flag = [target, field, holder] { target->params.*field = *holder; };
  bindings.push_back(std::move(b));
}

}  // namespace detail

/// Parses argv into a RunConfig and runs it. Returns the process exit code.
inline int main(int argc, const char* const* argv, std::ostream& out = std::cout,
                std::ostream& err = std::cerr) {
  CLI::App app{"Bateman dual oscillator toolkit"};
  app.set_help_all_flag("--help-all");
  auto cfg = std::make_shared<RunConfig>();
  std::vector<detail::Binding> b;
  std::string config_path;

  std::string command;
  app.add_option("command", command, "subcommand")->required()->check(CLI::IsMember(subcommands()));
  app.add_option("--config", config_path, "JSON file with flag values (keys are flag names)");

  detail::bind_param(app, b, cfg, "m", &ModelParams::m);
  detail::bind_param(app, b, cfg, "omega0", &ModelParams::omega0);
  detail::bind_param(app, b, cfg, "s", &ModelParams::s);
  detail::bind_param(app, b, cfg, "hbar", &ModelParams::hbar);

  detail::bind(app, b, cfg, "cutoff", &RunConfig::cutoff, "Fock cutoff per mode");
  detail::bind(app, b, cfg, "dt", &RunConfig::dt, "output / integration step");
  detail::bind(app, b, cfg, "ds", &RunConfig::ds, "memory-kernel step");
  detail::bind(app, b, cfg, "t-end", &RunConfig::t_end, "final time");
  detail::bind(app, b, cfg, "y1", &RunConfig::y1, "initial y1");
  detail::bind(app, b, cfg, "y1dot", &RunConfig::y1dot, "initial dy1/dt");
  detail::bind(app, b, cfg, "y2", &RunConfig::y2, "initial y2");
  detail::bind(app, b, cfg, "y2dot", &RunConfig::y2dot, "initial dy2/dt");
  detail::bind(app, b, cfg, "na0", &RunConfig::na0, "initial <N_a>");
  detail::bind(app, b, cfg, "nb0", &RunConfig::nb0, "initial <N_b>");
  detail::bind(app, b, cfg, "energy-sign", &RunConfig::energy_sign, "literal | casimir");
  detail::bind(app, b, cfg, "initial", &RunConfig::initial, "vacuum | number:na,nb | squeezed:re,im");
  detail::bind(app, b, cfg, "mode", &RunConfig::mode, "exact | born");
  detail::bind(app, b, cfg, "free-term", &RunConfig::free_term, "sum | difference");
  detail::bind(app, b, cfg, "r0", &RunConfig::r0, "spiral / lattice initial radius");
  detail::bind(app, b, cfg, "level", &RunConfig::level, "Koch level");
  detail::bind(app, b, cfg, "summary", &RunConfig::summary, "Koch summary JSON path");
  detail::bind(app, b, cfg, "gammaT", &RunConfig::gamma_t, "Gamma T for fig3");
  detail::bind(app, b, cfg, "n", &RunConfig::n, "largest lattice index for fig3");
  detail::bind(app, b, cfg, "s-max", &RunConfig::s_max, "fig4 upper end");
  detail::bind(app, b, cfg, "s-step", &RunConfig::s_step, "fig4 spacing");
  detail::bind(app, b, cfg, "sweep-s", &RunConfig::sweep_s, "sweep values of s");
  detail::bind(app, b, cfg, "sweep-cutoff", &RunConfig::sweep_cutoff, "sweep values of cutoff");
  detail::bind(app, b, cfg, "sweep-command", &RunConfig::sweep_command, "subcommand run at each sweep point");
  detail::bind(app, b, cfg, "jobs", &RunConfig::jobs, "sweep worker threads (0 = all cores)");
  detail::bind(app, b, cfg, "output", &RunConfig::output, "output file, '-' for stdout");
  detail::bind(app, b, cfg, "output-dir", &RunConfig::output_dir,
               std::string("output directory (default from ") + kOutputDirEnv + ")");
  detail::bind(app, b, cfg, "format", &RunConfig::format, "csv | json");
  bool plot = false;
  app.add_flag("--plot", plot, "also write a gnuplot script next to the CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << error_line("InvalidArguments", e.what(), kExitValidation) << '\n';
    return kExitValidation;
  }

  try {
    if (!config_path.empty()) {
      std::ifstream f(config_path);
      if (!f) throw Error(ErrorKind::kInvalidParams, "cannot read config " + config_path);
      const json doc = json::parse(f);
      if (!doc.is_object()) throw Error(ErrorKind::kInvalidParams, "config must be a JSON object");
      for (const auto& [k, v] : doc.items()) {
        const std::string key = detail::normalize_key(k);
        if (key == "plot") {
          cfg->plot = v.get<bool>();
          continue;
        }
        auto it = std::find_if(b.begin(), b.end(), [&](const auto& x) { return x.key == key; });
        if (it == b.end()) throw Error(ErrorKind::kInvalidParams, "unknown config key '" + k + "'");
        it->from_json(v);
      }
    }
  } catch (const Error& e) {
    err << error_line(to_string(e.kind()), e.what(), kExitValidation) << '\n';
    return kExitValidation;
  } catch (const json::exception& e) {
    err << error_line("InvalidParams", std::string("config: ") + e.what(), kExitValidation) << '\n';
    return kExitValidation;
  }
  for (auto& x : b) {
    if (x.option->count() > 0) x.from_flag();
  }
  if (plot) cfg->plot = true;
  cfg->command = command;
  return run(*cfg, out, err);
}

}  // namespace bateman::app
