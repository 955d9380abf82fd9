#include "hyperlock/problem_io.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "hyperlock/expr.hpp"

namespace hyperlock {

namespace {

using json = nlohmann::json;

class Reader {
 public:
  explicit Reader(const std::string& text) : text_(text) {}

  int line_of(const std::string& key) const {
    const auto pos = text_.find("\"" + key + "\"");
    if (pos == std::string::npos) return 0;
    return 1 + static_cast<int>(std::count(text_.begin(), text_.begin() + pos, '\n'));
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    std::ostringstream os;
    const int line = line_of(key);
    if (line > 0) os << "line " << line << ": ";
    os << "'" << key << "': " << what;
    throw ProblemError(os.str());
  }

  const json& require(const json& obj, const std::string& key) const {
    if (!obj.contains(key)) fail(key, "missing");
    return obj.at(key);
  }

  double number(const json& obj, const std::string& key) const {
    const auto& v = require(obj, key);
    if (!v.is_number()) fail(key, "expected a number");
    return v.get<double>();
  }

  double number_or(const json& obj, const std::string& key, double fallback) const {
    return obj.contains(key) ? number(obj, key) : fallback;
  }

  std::array<double, 2> pair_or(const json& obj, const std::string& key,
                                std::array<double, 2> fallback) const {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
      fail(key, "expected two numbers");
    return {v[0].get<double>(), v[1].get<double>()};
  }

  Expr expr(const json& v, const std::string& key, const std::vector<std::string>& vars) const {
    if (v.is_number()) return Expr::constant(v.get<double>());
    if (!v.is_string()) fail(key, "expected an expression string");
    try {
      return Expr::parse(v.get<std::string>(), vars);
    } catch (const ExprError& e) {
      fail(key, e.what());
    }
  }

  std::vector<Expr> exprs(const json& obj, const std::string& key, size_t count,
                          const std::vector<std::string>& vars) const {
    const auto& v = require(obj, key);
    if (count == 1 && !v.is_array()) return {expr(v, key, vars)};
    if (!v.is_array() || v.size() != count)
      fail(key, "expected " + std::to_string(count) + " expressions");
    std::vector<Expr> out;
    for (const auto& e : v) out.push_back(expr(e, key, vars));
    return out;
  }

 private:
  const std::string& text_;
};

CoefficientFunction coefficient(const Expr& e) {
  const Expr d = e.derivative(0), dd = d.derivative(0);
  CoefficientFunction c;
  c.value = [e](double x) { return e(std::span<const double>(&x, 1)); };
  c.derivative = [d](double x) { return d(std::span<const double>(&x, 1)); };
  c.second = [dd](double x) { return dd(std::span<const double>(&x, 1)); };
  return c;
}

SystemNonlinearity system_nonlinearity(const std::vector<Expr>& b) {
  std::array<Expr, 4> jac;
  for (int j = 0; j < 2; ++j)
    for (int k = 0; k < 2; ++k) jac[2 * j + k] = b[j].derivative(1 + k);
  SystemNonlinearity out;
  out.value = [b](double x, const double* u, double* r) {
    const double args[3] = {x, u[0], u[1]};
    r[0] = b[0](args);
    r[1] = b[1](args);
  };
  out.jacobian = [jac](double x, const double* u, double* r) {
    const double args[3] = {x, u[0], u[1]};
    for (int i = 0; i < 4; ++i) r[i] = jac[i](args);
  };
  return out;
}

SecondOrderProblem::Nonlinearity second_order_nonlinearity(const Expr& b) {
  const std::array<Expr, 3> d{b.derivative(1), b.derivative(2), b.derivative(3)};
  SecondOrderProblem::Nonlinearity out;
  out.value = [b](double x, double u, double p, double q) {
    const double args[4] = {x, u, p, q};
    return b(args);
  };
  out.partials = [d](double x, double u, double p, double q, double* r) {
    const double args[4] = {x, u, p, q};
    for (int i = 0; i < 3; ++i) r[i] = d[i](args);
  };
  return out;
}

std::function<double(double, double)> field_fn(const Expr& e) {
  return [e](double t, double x) {
    const double args[2] = {t, x};
    return e(args);
  };
}

std::function<double(double)> signal_fn(const Expr& e) {
  return [e](double t) { return e(std::span<const double>(&t, 1)); };
}

const std::vector<std::string> kX{"x"};
const std::vector<std::string> kTX{"t", "x"};
const std::vector<std::string> kT{"t"};

bool all_zero(const std::vector<Expr>& es) {
  return std::all_of(es.begin(), es.end(), [](const Expr& e) { return e.is_zero(); });
}

void read_system_forcing(const Reader& rd, const json& doc, SystemProblem& p) {
  if (doc.contains("f")) {
    const auto f = rd.exprs(doc, "f", 2, kTX);
    if (!all_zero(f))
      p.f = [f](double t, double x, double* out) {
        const double args[2] = {t, x};
        out[0] = f[0](args);
        out[1] = f[1](args);
      };
  }
  if (doc.contains("g")) {
    const auto g = rd.exprs(doc, "g", 2, kT);
    if (!all_zero(g))
      p.g = [g](double t, double* out) {
        out[0] = g[0](std::span<const double>(&t, 1));
        out[1] = g[1](std::span<const double>(&t, 1));
      };
  }
}

void read_second_order_forcing(const Reader& rd, const json& doc, SecondOrderProblem& p) {
  if (doc.contains("f")) {
    const auto f = rd.exprs(doc, "f", 1, kTX)[0];
    if (!f.is_zero()) p.f = field_fn(f);
  }
  for (const char* key : {"g1", "g2"}) {
    if (!doc.contains(key)) continue;
    const auto g = rd.exprs(doc, key, 1, kT)[0];
    if (g.is_zero()) continue;
    (std::string(key) == "g1" ? p.g1 : p.g2) = signal_fn(g);
  }
}

std::vector<cplx> complex_list(const Reader& rd, const json& block, const std::string& key) {
  const auto& v = rd.require(block, key);
  if (!v.is_array() || v.empty()) rd.fail(key, "expected a non-empty list of [re, im] pairs");
  std::vector<cplx> out;
  for (const auto& c : v) {
    if (c.is_number()) out.emplace_back(c.get<double>(), 0.0);
    else if (c.is_array() && c.size() == 2 && c[0].is_number() && c[1].is_number())
      out.emplace_back(c[0].get<double>(), c[1].get<double>());
    else rd.fail(key, "expected [re, im] pairs");
  }
  return out;
}

std::vector<double> real_list(const Reader& rd, const json& block, const std::string& key) {
  const auto& v = rd.require(block, key);
  if (!v.is_array() || v.empty()) rd.fail(key, "expected a non-empty list of numbers");
  std::vector<double> out;
  for (const auto& c : v) {
    if (!c.is_number()) rd.fail(key, "expected numbers");
    out.push_back(c.get<double>());
  }
  return out;
}

void forbid_coefficients(const Reader& rd, const json& doc) {
  for (const char* key : {"a", "b", "r", "gamma"})
    if (doc.contains(key)) rd.fail(key, "coefficients come from the manufactured u0 block");
}

PeriodicField supplied_u0(const Reader& rd, const json& block, int components,
                          const Numerics& num, const std::string& base_dir) {
  auto grid = make_grid(num.xnodes);
  if (block.contains("expression")) {
    const auto es = rd.exprs(block, "expression", components, kTX);
    return PeriodicField::sample(components, num.modes, grid, [&es](double t, double x, double* out) {
      const double args[2] = {t, x};
      for (size_t j = 0; j < es.size(); ++j) out[j] = es[j](args);
    });
  }
  const auto& v = rd.require(block, "file");
  if (!v.is_string()) rd.fail("file", "expected a path");
  auto path = std::filesystem::path(v.get<std::string>());
  if (path.is_relative()) path = std::filesystem::path(base_dir) / path;
  std::ifstream in(path);
  if (!in) rd.fail("file", "cannot open " + path.string());
  PeriodicField u;
  try {
    u = read_csv(in);
  } catch (const std::exception& e) {
    rd.fail("file", e.what());
  }
  if (u.components() != components)
    rd.fail("file", "expected " + std::to_string(components) + " components");
  return resample(u, num.modes, grid);
}

}  // namespace

void Numerics::validate() const {
  if (modes < 1 || modes > 128) throw ProblemError("modes must lie in [1, 128]");
  if (xnodes < 9 || xnodes > 513) throw ProblemError("xnodes must lie in [9, 513]");
  if (!(tolerance > 0)) throw ProblemError("tolerance must be positive");
}

LoadedProblem parse_problem(const std::string& text, const std::string& base_dir,
                            const NumericsOverride& override) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto end = text.begin() + std::min<size_t>(e.byte, text.size());
    const int line = 1 + static_cast<int>(std::count(text.begin(), end, '\n'));
    throw ProblemError("line " + std::to_string(line) + ": malformed JSON");
  }
  if (!doc.is_object()) throw ProblemError("line 1: expected a JSON object");
  const Reader rd(text);

  LoadedProblem out;
  out.name = doc.value("name", std::string("unnamed"));
  if (doc.contains("kind")) {
    const auto kind = doc.at("kind").is_string() ? doc.at("kind").get<std::string>() : "";
    if (kind == "system") out.kind = ProblemKind::System;
    else if (kind == "second_order") out.kind = ProblemKind::SecondOrder;
    else rd.fail("kind", "expected \"system\" or \"second_order\"");
  }

  if (doc.contains("numerics")) {
    const auto& n = doc.at("numerics");
    if (!n.is_object()) rd.fail("numerics", "expected an object");
    out.numerics.modes = static_cast<int>(rd.number_or(n, "modes", out.numerics.modes));
    out.numerics.xnodes = static_cast<int>(rd.number_or(n, "xnodes", out.numerics.xnodes));
    out.numerics.tolerance = rd.number_or(n, "tolerance", out.numerics.tolerance);
  }
  if (override.modes) out.numerics.modes = *override.modes;
  if (override.xnodes) out.numerics.xnodes = *override.xnodes;
  if (override.tolerance) out.numerics.tolerance = *override.tolerance;
  out.numerics.validate();
  const int M = out.numerics.modes, N = out.numerics.xnodes;

  const auto& u0 = rd.require(doc, "u0");
  if (!u0.is_object()) rd.fail("u0", "expected an object");
  const bool system = out.kind == ProblemKind::System;

  if (u0.contains("manufactured")) {
    forbid_coefficients(rd, doc);
    const auto& which = u0.at("manufactured");
    const std::string kind = which.is_string() ? which.get<std::string>() : "";
    const bool wants_system = kind == "ellipse" || kind == "transport_counterexample";
    const bool wants_second = kind == "standing_wave" || kind == "wave_counterexample";
    if (!wants_system && !wants_second) rd.fail("manufactured", "unknown family '" + kind + "'");
    if (wants_system != system)
      rd.fail("manufactured", "family '" + kind + "' does not match the problem kind");
    if (kind == "ellipse") {
      EllipseSpec spec;
      spec.speeds = rd.pair_or(u0, "speeds", spec.speeds);
      spec.amplitude = rd.pair_or(u0, "amplitude", spec.amplitude);
      spec.amplitude_growth = rd.pair_or(u0, "amplitude_growth", spec.amplitude_growth);
      spec.phase = rd.number_or(u0, "phase", spec.phase);
      spec.coupling_mean = rd.number_or(u0, "coupling_mean", spec.coupling_mean);
      spec.coupling_swing = rd.number_or(u0, "coupling_swing", spec.coupling_swing);
      spec.stiffness = rd.number_or(u0, "stiffness", spec.stiffness);
      spec.order = M;
      spec.nodes = N;
      try {
        std::tie(out.system, out.solution) = manufacture_system(spec);
      } catch (const std::exception& e) {
        rd.fail("manufactured", e.what());
      }
    } else if (kind == "transport_counterexample") {
      const auto psi = complex_list(rd, u0, "psi");
      try {
        std::tie(out.system, out.solution) = counterexample_sys(psi, M, N);
      } catch (const std::exception& e) {
        rd.fail("psi", e.what());
      }
    } else if (kind == "standing_wave") {
      StandingWaveSpec spec;
      spec.speed = rd.number_or(u0, "speed", spec.speed);
      spec.wavenumber = rd.number_or(u0, "wavenumber", spec.wavenumber);
      spec.amplitude = rd.number_or(u0, "amplitude", spec.amplitude);
      spec.drift = rd.number_or(u0, "drift", spec.drift);
      spec.stiffness = rd.number_or(u0, "stiffness", spec.stiffness);
      spec.order = M;
      spec.nodes = N;
      try {
        auto inst = manufacture_second_order(spec);
        out.second = std::move(inst.problem);
        out.solution = std::move(inst.solution);
      } catch (const std::exception& e) {
        rd.fail("manufactured", e.what());
      }
    } else {
      const auto coeffs = real_list(rd, u0, "coefficients");
      try {
        auto inst = counterexample_eq(coeffs, M, N);
        out.second = std::move(inst.problem);
        out.solution = std::move(inst.solution);
      } catch (const std::exception& e) {
        rd.fail("coefficients", e.what());
      }
    }
  } else if (system) {
    const auto a = rd.exprs(doc, "a", 2, kX);
    const auto b = rd.exprs(doc, "b", 2, {"x", "u1", "u2"});
    out.system.a = {coefficient(a[0]), coefficient(a[1])};
    out.system.b = system_nonlinearity(b);
    out.system.r = rd.pair_or(doc, "r", {0.0, 0.0});
    if (!doc.contains("r")) rd.fail("r", "missing");
    out.solution.u0 = supplied_u0(rd, u0, 2, out.numerics, base_dir);
    out.solution.provenance = Provenance::Supplied;
    out.solution.residual = unforced_residual(out.system, out.solution.u0);
  } else {
    out.second.a = coefficient(rd.exprs(doc, "a", 1, kX)[0]);
    out.second.b = second_order_nonlinearity(rd.exprs(doc, "b", 1, {"x", "u", "p", "q"})[0]);
    out.second.gamma = rd.number_or(doc, "gamma", 0.0);
    out.solution.u0 = supplied_u0(rd, u0, 1, out.numerics, base_dir);
    out.solution.provenance = Provenance::Supplied;
    out.solution.residual = unforced_residual(out.second, out.solution.u0);
  }

  try {
    if (system) {
      read_system_forcing(rd, doc, out.system);
      out.system.name = out.name;
      out.system.validate();
    } else {
      read_second_order_forcing(rd, doc, out.second);
      out.second.name = out.name;
      out.second.validate();
    }
  } catch (const ProblemError&) {
    throw;
  } catch (const std::exception& e) {
    throw ProblemError(e.what());
  }
  return out;
}

LoadedProblem load_problem(const std::string& path, const NumericsOverride& override) {
  std::ifstream in(path);
  if (!in) throw ProblemError("cannot open problem file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_problem(ss.str(), std::filesystem::path(path).parent_path().string(), override);
}

}  // namespace hyperlock
