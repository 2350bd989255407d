#include "gapscan/runner.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include "gapscan/error.hpp"
#include "gapscan/imps.hpp"
#include "gapscan/ipeps.hpp"
#include "gapscan/models.hpp"
#include "gapscan/spectral_oracle.hpp"

namespace gapscan {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double parse_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    throw InputError("bad number for " + key + ": '" + v + "'");
  }
  if (used != v.size() || !std::isfinite(x)) throw InputError("bad number for " + key + ": '" + v + "'");
  return x;
}

std::uint64_t parse_unsigned(const std::string& key, const std::string& v) {
  std::uint64_t x = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw InputError("bad non-negative integer for " + key + ": '" + v + "'");
  }
  return x;
}

bool is_peps(const std::string& model) { return model == "tfim2d" || model == "tfim3d"; }
bool is_chain(const std::string& model) { return model == "haldane" || model == "tfim1d"; }

EstimatorOptions estimator_options(const RunConfig& c) {
  EstimatorOptions o;
  o.rel_tol = c.window_rel_tol;
  o.min_points = c.min_points;
  o.smoothing = c.smoothing.value_or(1);
  return o;
}

CMatrix random_hermitian(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> normal(0.0, 1.0);
  CMatrix a(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = Complex(normal(rng), normal(rng));
  return 0.5 * (a + a.adjoint());
}

RunResult execute_oracle(const RunConfig& c) {
  std::mt19937_64 rng(c.seed);
  const auto n = static_cast<Eigen::Index>(c.oracle_dim);
  const CMatrix h = random_hermitian(rng, n);
  const CMatrix op = random_hermitian(rng, n);
  std::normal_distribution<double> normal(0.0, 1.0);
  CVector phi(n);
  for (Eigen::Index i = 0; i < n; ++i) phi(i) = Complex(normal(rng), normal(rng));

  const SpectralDecomposition d = spectral_decompose(h);
  const OverlapClass cls = classify_overlap(d, op, phi);
  if (cls.kind == OverlapKind::Neither) throw NumericError("random observable has no gap signal");
  const double gap = cls.kind == OverlapKind::FirstGap ? d.energies[1] - d.energies[0]
                                                       : d.energies[2] - d.energies[0];
  RunResult r;
  r.config = c;
  r.reference_gap = gap;
  r.extra["overlap"] = to_string(cls.kind);
  const double tau_max = c.tau_max.value_or(30.0 / gap);
  const double dtau = c.dtau.value_or(tau_max / 400.0);
  r.config.tau_max = tau_max;
  r.config.dtau = dtau;
  r.trace.metadata.model = c.model;
  r.trace.metadata.scheme = "exact";
  r.trace.metadata.dtau = dtau;
  r.trace.metadata.seed = c.seed;
  const auto steps = static_cast<std::size_t>(std::floor(tau_max / dtau + 1e-9));
  for (std::size_t k = 0; k <= steps; k += c.measure_every) {
    const double tau = static_cast<double>(k) * dtau;
    r.trace.add(tau, log_abs_commutator_spectral(d, op, phi, tau));
  }
  return r;
}

std::string with_suffix(const std::string& path, std::size_t i) {
  if (path.empty()) return path;
  const auto dot = path.find_last_of('.');
  const auto slash = path.find_last_of('/');
  const std::string tag = "_" + std::to_string(i);
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return path + tag;
  return path.substr(0, dot) + tag + path.substr(dot);
}

template <class F>
void write_file(const std::string& path, F&& body) {
  if (path.empty()) return;
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot open " + path + " for writing");
  body(f);
  if (!f) throw NumericError("write to " + path + " failed");
}

}  // namespace

std::map<std::string, std::string> parse_key_values(std::istream& in) {
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InputError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw InputError("config line " + std::to_string(lineno) + ": empty key");
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InputError("cannot read config file " + path);
  return parse_key_values(f);
}

void apply_settings(RunConfig& c, const std::map<std::string, std::string>& settings) {
  for (const auto& [key, v] : settings) {
    if (key == "model") c.model = v;
    else if (key == "J") c.J = parse_double(key, v);
    else if (key == "g") c.g = parse_double(key, v);
    else if (key == "scheme") c.scheme = v;
    else if (key == "D") c.D = parse_unsigned(key, v);
    else if (key == "dtau") c.dtau = parse_double(key, v);
    else if (key == "tau_max") c.tau_max = parse_double(key, v);
    else if (key == "measure_every") c.measure_every = parse_unsigned(key, v);
    else if (key == "seed") c.seed = parse_unsigned(key, v);
    else if (key == "so_tol") c.so_tol = parse_double(key, v);
    else if (key == "so_max_iter") c.so_max_iter = parse_unsigned(key, v);
    else if (key == "so_every") c.so_every = parse_unsigned(key, v);
    else if (key == "window_rel_tol") c.window_rel_tol = parse_double(key, v);
    else if (key == "min_points") c.min_points = parse_unsigned(key, v);
    else if (key == "smoothing") c.smoothing = parse_unsigned(key, v);
    else if (key == "oracle_dim") c.oracle_dim = parse_unsigned(key, v);
    else if (key == "trace_csv") c.trace_csv = v;
    else if (key == "derivative_csv") c.derivative_csv = v;
    else if (key == "summary") c.summary = v;
    else throw InputError("unknown setting '" + key + "'");
  }
}

RunConfig resolve(const RunConfig& config) {
  RunConfig c = config;
  const std::string& m = c.model;
  if (is_peps(m)) {
    if (!c.scheme) c.scheme = "mpo";
    if (*c.scheme != "mpo" && *c.scheme != "gates") throw InputError("scheme must be gates or mpo");
    const bool gates = *c.scheme == "gates";
    if (!c.J) c.J = m == "tfim2d" ? 0.2 : 0.1;
    if (!c.g) c.g = 1.0;
    if (!c.D) c.D = (gates || m == "tfim3d") ? 3 : 8;
    if (!c.dtau) c.dtau = gates ? 0.05 : 0.2;
    if (!c.tau_max) c.tau_max = 40.0;
    if (!c.smoothing) c.smoothing = gates && c.so_every > 0 ? c.so_every : 1;
  } else if (is_chain(m)) {
    if (!c.scheme) c.scheme = "tebd";
    if (*c.scheme != "tebd") throw InputError("1D models use the tebd scheme");
    if (m == "tfim1d") {
      if (!c.J) c.J = 0.3;
      if (!c.g) c.g = 1.0;
      if (!c.D) c.D = 16;
      if (!c.tau_max) c.tau_max = 20.0;
    } else {
      if (!c.D) c.D = 32;
      if (!c.tau_max) c.tau_max = 70.0;
    }
    if (!c.dtau) c.dtau = 0.05;
    if (!c.smoothing) c.smoothing = 1;
  } else if (m == "oracle-random") {
    if (!c.scheme) c.scheme = "exact";
    if (*c.scheme != "exact") throw InputError("oracle-random uses the exact scheme");
    if (c.oracle_dim < 3 || c.oracle_dim > 512) throw InputError("oracle_dim must lie in [3, 512]");
    if (!c.smoothing) c.smoothing = 1;
  } else {
    throw InputError("unknown model '" + m + "' (tfim1d, tfim2d, tfim3d, haldane, oracle-random)");
  }
  if ((c.J && !std::isfinite(*c.J)) || (c.g && !std::isfinite(*c.g))) throw InputError("J and g must be finite");
  if (c.D && *c.D == 0) throw InputError("D must be positive");
  if (c.dtau && !(*c.dtau > 0.0)) throw InputError("dtau must be positive");
  if (c.tau_max && c.dtau && !(*c.tau_max >= *c.dtau)) throw InputError("tau_max must be at least dtau");
  if (c.measure_every == 0) throw InputError("measure_every must be positive");
  if (!(c.so_tol > 0.0)) throw InputError("so_tol must be positive");
  if (c.so_max_iter == 0) throw InputError("so_max_iter must be positive");
  if (!(c.window_rel_tol > 0.0)) throw InputError("window_rel_tol must be positive");
  if (c.min_points < 2) throw InputError("min_points must be at least 2");
  return c;
}

std::map<std::string, std::string> describe(const RunConfig& c) {
  std::map<std::string, std::string> out;
  out["model"] = c.model;
  if (c.J) out["J"] = fmt(*c.J);
  if (c.g) out["g"] = fmt(*c.g);
  if (c.scheme) out["scheme"] = *c.scheme;
  if (c.D) out["D"] = std::to_string(*c.D);
  if (c.dtau) out["dtau"] = fmt(*c.dtau);
  if (c.tau_max) out["tau_max"] = fmt(*c.tau_max);
  out["measure_every"] = std::to_string(c.measure_every);
  out["seed"] = std::to_string(c.seed);
  if (is_peps(c.model)) {
    out["so_tol"] = fmt(c.so_tol);
    out["so_max_iter"] = std::to_string(c.so_max_iter);
    out["so_every"] = std::to_string(c.so_every);
  }
  out["window_rel_tol"] = fmt(c.window_rel_tol);
  out["min_points"] = std::to_string(c.min_points);
  out["smoothing"] = std::to_string(c.smoothing.value_or(1));
  if (c.model == "oracle-random") out["oracle_dim"] = std::to_string(c.oracle_dim);
  out["trace_csv"] = c.trace_csv;
  out["derivative_csv"] = c.derivative_csv;
  out["summary"] = c.summary;
  return out;
}

RunResult execute(const RunConfig& config) {
  const RunConfig c = resolve(config);
  const auto start = std::chrono::steady_clock::now();
  RunResult r;
  if (c.model == "oracle-random") {
    r = execute_oracle(c);
  } else if (is_chain(c.model)) {
    const Model model = c.model == "haldane" ? make_haldane_model() : make_tfim_model(1, *c.J, *c.g);
    Schedule1D schedule;
    schedule.dtau = *c.dtau;
    schedule.tau_max = *c.tau_max;
    schedule.measure_every = c.measure_every;
    Evolution1D evo = run_evolution_1d(model, schedule, *c.D, c.seed);
    r.config = c;
    r.trace = std::move(evo.trace);
    r.extra["max_discarded_weight"] = fmt(evo.max_discarded_weight);
    r.extra["final_bond_dim"] = std::to_string(evo.final_state.bond_dimension());
    if (c.model == "tfim1d") r.reference_gap = 2.0 * std::abs(*c.g - *c.J);
    if (c.model == "haldane") r.reference_gap = ModelConstants::haldane_reference_gap;
  } else {
    const int dim = c.model == "tfim2d" ? 2 : 3;
    const Model model = make_tfim_model(dim, *c.J, *c.g);
    PepsSchedule schedule;
    schedule.dtau = *c.dtau;
    schedule.tau_max = *c.tau_max;
    schedule.measure_every = c.measure_every;
    schedule.scheme = *c.scheme == "gates" ? PepsScheme::Gates : PepsScheme::Mpo;
    schedule.seed = c.seed;
    schedule.so.tol = c.so_tol;
    schedule.so.max_iter = c.so_max_iter;
    schedule.so_every = c.so_every;
    EvolutionPeps evo = run_evolution_peps(model, schedule, *c.D);
    r.config = c;
    r.trace = std::move(evo.trace);
    r.extra["max_discarded_weight"] = fmt(evo.max_discarded_weight);
    r.extra["so_unconverged"] = std::to_string(evo.so_unconverged);
    r.extra["steps"] = std::to_string(evo.steps);
    if (*c.J == 0.0) r.reference_gap = 2.0 * std::abs(*c.g);
    if (*c.g == 0.0) r.reference_gap = 4.0 * dim * std::abs(*c.J);
  }
  r.estimate = estimate_gap(r.trace, estimator_options(r.config));
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

void write_trace_csv(const GapTrace& t, std::ostream& out) {
  out << "tau,C\n";
  for (const auto& s : t.samples) out << fmt(s.tau) << ',' << (std::isfinite(s.value) ? fmt(s.value) : "nan") << '\n';
}

void write_derivative_csv(const std::vector<DerivativeSample>& d, std::ostream& out) {
  out << "tau,dCdtau\n";
  for (const auto& s : d) out << fmt(s.tau) << ',' << fmt(s.value) << '\n';
}

void write_summary(const RunResult& r, std::ostream& out) {
  std::map<std::string, std::string> rec = describe(r.config);
  rec["gap"] = fmt(r.estimate.gap);
  rec["err"] = fmt(r.estimate.error);
  rec["intercept"] = fmt(r.estimate.intercept);
  rec["tau_lo"] = fmt(r.estimate.tau_lo);
  rec["tau_hi"] = fmt(r.estimate.tau_hi);
  rec["window_points"] = std::to_string(r.estimate.window_points);
  rec["derivative_std"] = fmt(r.estimate.derivative_std);
  rec["quality"] = to_string(r.estimate.quality);
  rec["wall_seconds"] = fmt(r.wall_seconds);
  rec["samples"] = std::to_string(r.trace.samples.size());
  rec["retained"] = std::to_string(r.trace.retained());
  if (r.reference_gap) rec["reference_gap"] = fmt(*r.reference_gap);
  for (const auto& [k, v] : r.trace.metadata.extra) rec["meta." + k] = v;
  for (const auto& [k, v] : r.extra) rec["run." + k] = v;
  for (const auto& [k, v] : rec) out << k << '=' << v << '\n';
}

namespace {

int exit_for(const GapEstimate& e) {
  return (e.quality == GapQuality::Clean || e.quality == GapQuality::Noisy) ? kExitOk : kExitNoWindow;
}

int run_into(const RunConfig& config, std::ostream& log, RunResult& r) {
  try {
    resolve(config);
  } catch (const InputError& e) {
    log << "usage error: " << e.what() << '\n';
    return kExitUsage;
  }
  try {
    r = execute(config);
    write_file(r.config.trace_csv, [&](std::ostream& f) { write_trace_csv(r.trace, f); });
    write_file(r.config.derivative_csv, [&](std::ostream& f) {
      write_derivative_csv(numerical_derivative(despike(r.trace)), f);
    });
    write_file(r.config.summary, [&](std::ostream& f) { write_summary(r, f); });
  } catch (const InputError& e) {
    log << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    log << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  }
  log << "gap=" << fmt(r.estimate.gap) << " err=" << fmt(r.estimate.error)
      << " quality=" << to_string(r.estimate.quality) << " window=[" << fmt(r.estimate.tau_lo) << ","
      << fmt(r.estimate.tau_hi) << "] wall_seconds=" << fmt(r.wall_seconds) << '\n';
  return exit_for(r.estimate);
}

}  // namespace

int run(const RunConfig& config, std::ostream& log) {
  RunResult r;
  return run_into(config, log, r);
}

int sweep(const RunConfig& config, const std::string& param, const std::vector<double>& values,
          const std::string& out_csv, std::ostream& log) {
  if (values.empty()) {
    log << "usage error: empty parameter grid\n";
    return kExitUsage;
  }
  static const char* allowed[] = {"J", "g", "D", "dtau", "seed", "tau_max"};
  if (std::find(std::begin(allowed), std::end(allowed), param) == std::end(allowed)) {
    log << "usage error: cannot sweep over '" << param << "'\n";
    return kExitUsage;
  }
  std::vector<RunConfig> points;
  try {
    for (std::size_t i = 0; i < values.size(); ++i) {
      RunConfig c = config;
      const bool integral = param == "D" || param == "seed";
      if (integral && (values[i] < 0.0 || values[i] != std::floor(values[i]))) {
        throw InputError(param + " needs non-negative integer values");
      }
      apply_settings(c, {{param, integral ? std::to_string(static_cast<std::uint64_t>(values[i]))
                                          : fmt(values[i])}});
      c.trace_csv = with_suffix(c.trace_csv, i);
      c.derivative_csv = with_suffix(c.derivative_csv, i);
      c.summary = with_suffix(c.summary, i);
      resolve(c);
      points.push_back(std::move(c));
    }
  } catch (const InputError& e) {
    log << "usage error: " << e.what() << '\n';
    return kExitUsage;
  }

  std::ostringstream csv;
  csv << "param,gap,err,quality\n";
  int status = kExitOk;
  for (std::size_t i = 0; i < points.size(); ++i) {
    log << param << '=' << fmt(values[i]) << ": ";
    RunResult r;
    const int code = run_into(points[i], log, r);
    if (code == kExitNumeric || code == kExitUsage) {
      csv << fmt(values[i]) << ",nan,nan,error\n";
      status = kExitNumeric;
      continue;
    }
    csv << fmt(values[i]) << ',' << fmt(r.estimate.gap) << ',' << fmt(r.estimate.error) << ','
        << to_string(r.estimate.quality) << '\n';
  }
  try {
    write_file(out_csv, [&](std::ostream& f) { f << csv.str(); });
  } catch (const Error& e) {
    log << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  }
  if (out_csv.empty()) log << csv.str();
  return status;
}

}  // namespace gapscan
