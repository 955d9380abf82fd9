#include "hyperlock/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "hyperlock/locking.hpp"
#include "hyperlock/secondorder.hpp"

namespace hyperlock::cli {

namespace {

// Raised when a mathematical hypothesis of the pipeline does not hold.
class AssumptionFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

constexpr int kCurveRows = 512;
constexpr double kU0ResidualLimit = 1e-6;

struct Session {
  const RunConfig& config;
  LoadedProblem problem;
  std::ostream& out;

  bool second_order() const { return problem.kind == ProblemKind::SecondOrder; }
  const PeriodicField& u0() const { return problem.solution.u0; }

  std::string numerics_line(const std::string& command) const {
    std::ostringstream os;
    os << std::setprecision(17) << "# command=" << command << " problem=" << problem.name
       << " kind=" << (second_order() ? "second_order" : "system")
       << " modes=" << problem.numerics.modes << " xnodes=" << problem.numerics.xnodes
       << " tolerance=" << problem.numerics.tolerance;
    return os.str();
  }

  std::ofstream open(const std::string& file) const {
    std::filesystem::create_directories(config.out_dir);
    const auto path = std::filesystem::path(config.out_dir) / file;
    std::ofstream os(path);
    if (!os) throw UsageError("cannot write " + path.string());
    os << std::setprecision(17);
    return os;
  }

  NonResonanceReport nonresonance() const {
    return second_order() ? check_nonres_eq(problem.second, u0())
                          : check_nonres_sys(problem.system, u0());
  }

  void require_hypotheses() const {
    if (problem.solution.residual > kU0ResidualLimit) {
      std::ostringstream os;
      os << "u0 does not solve the unforced problem (residual " << problem.solution.residual << ")";
      throw AssumptionFailure(os.str());
    }
    if (!nonresonance().any())
      throw AssumptionFailure("non-resonance: both conditions violated");
  }

  LockingContext context() const {
    return second_order() ? LockingContext::second_order(problem.second, u0())
                          : LockingContext::system(problem.system, u0());
  }
};

void report_nonresonance(std::ostream& out, const NonResonanceReport& r) {
  out << std::setprecision(6);
  for (int k = 0; k < 2; ++k)
    out << "condition " << k + 1 << " (loop closing at x = " << (k == 0 ? 1 : 0)
        << "): margin " << r.margin[k] << ", " << (r.satisfied[k] ? "satisfied" : "violated")
        << ", route " << to_string(r.route[k]) << "\n";
  out << "loop multiplier range [" << r.c_minus << ", " << r.c_plus << "]\n";
  if (!r.any()) out << "both conditions violated\n";
}

double pick_tau(const Session& s, const PhaseCurve& curve) {
  return s.config.tau0 ? *s.config.tau0 : curve.modes[0].real();
}

PhaseRoot pick_root(const PhaseCurve& curve, double tau) {
  for (const auto& r : find_locked_phases(curve, tau))
    if (r.nondegenerate) return r;
  std::ostringstream os;
  os << "phase equation Phi(phi) = " << tau << " has no nondegenerate root";
  throw AssumptionFailure(os.str());
}

double require_eps(const RunConfig& c) {
  if (!c.eps0) throw UsageError("--eps0 is required for " + c.command);
  if (!(*c.eps0 > 0)) throw UsageError("--eps0 must be positive");
  return *c.eps0;
}

void write_svg(std::ostream& os, const PhaseCurve& c, std::optional<double> tau) {
  const double w = 640, h = 400, left = 60, right = 20, top = 20, bottom = 40;
  double lo = *std::min_element(c.values.begin(), c.values.end());
  double hi = *std::max_element(c.values.begin(), c.values.end());
  if (tau) lo = std::min(lo, *tau), hi = std::max(hi, *tau);
  if (hi - lo < 1e-12) lo -= 0.5, hi += 0.5;
  const double pad = 0.05 * (hi - lo);
  lo -= pad, hi += pad;
  auto px = [&](double phi) { return left + phi * (w - left - right); };
  auto py = [&](double v) { return top + (hi - v) / (hi - lo) * (h - top - bottom); };
  os << std::setprecision(6);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << w - left - right
     << "\" height=\"" << h - top - bottom << "\" fill=\"none\" stroke=\"black\"/>\n";
  if (tau)
    os << "<line x1=\"" << px(0) << "\" x2=\"" << px(1) << "\" y1=\"" << py(*tau) << "\" y2=\""
       << py(*tau) << "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
  os << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" points=\"";
  for (size_t i = 0; i <= c.phi.size(); ++i) {
    const double phi = i < c.phi.size() ? c.phi[i] : 1.0;
    const double v = i < c.phi.size() ? c.values[i] : c.values[0];
    os << px(phi) << "," << py(v) << " ";
  }
  os << "\"/>\n";
  for (double phi : {0.0, 0.25, 0.5, 0.75, 1.0})
    os << "<text x=\"" << px(phi) << "\" y=\"" << h - bottom + 16 << "\" text-anchor=\"middle\">"
       << phi << "</text>\n";
  os << "<text x=\"" << left - 6 << "\" y=\"" << py(hi - pad) + 4 << "\" text-anchor=\"end\">"
     << hi - pad << "</text>\n";
  os << "<text x=\"" << left - 6 << "\" y=\"" << py(lo + pad) + 4 << "\" text-anchor=\"end\">"
     << lo + pad << "</text>\n";
  os << "<text x=\"" << (w + left - right) / 2 << "\" y=\"" << h - 6
     << "\" text-anchor=\"middle\">phase shift</text>\n";
  os << "</svg>\n";
}

int check_nonres(Session& s) {
  const auto r = s.nonresonance();
  report_nonresonance(s.out, r);
  {
    auto os = s.open("nonres.csv");
    os << s.numerics_line("check-nonres") << "\n";
    os << "condition,margin,satisfied,route\n";
    for (int k = 0; k < 2; ++k)
      os << k + 1 << "," << r.margin[k] << "," << int(r.satisfied[k]) << "," << to_string(r.route[k])
         << "\n";
  }
  return r.any() ? kSuccess : kAssumption;
}

int adjoint(Session& s) {
  s.require_hypotheses();
  if (s.second_order()) {
    const auto adj = solve_adjoint_eq(s.problem.second, s.u0());
    s.out << std::setprecision(6) << "kernel gap " << adj.first_order.kernel_gap
          << "\nfirst-order residual " << adj.first_order.residual << "\nidentity error "
          << adj.identity_error << "\npairing " << std::setprecision(12) << adj.pairing << "\n";
    auto a = s.open("u_star.csv");
    write_csv(a, adj.u_star);
    auto b = s.open("u_tilde.csv");
    write_csv(b, adj.u_tilde);
    auto c = s.open("v_star.csv");
    write_csv(c, adj.first_order.u_star);
  } else {
    const auto adj = solve_adjoint_sys(s.problem.system, s.u0());
    s.out << std::setprecision(6) << "kernel gap " << adj.kernel_gap << "\nresidual "
          << adj.residual << "\nnormalization " << adj.normalization_value << "\n";
    auto a = s.open("u_star.csv");
    write_csv(a, adj.u_star);
  }
  return kSuccess;
}

PhaseCurve curve_for(const Session& s) {
  if (s.second_order()) return phi_curve_eq(s.problem.second, solve_adjoint_eq(s.problem.second, s.u0()));
  return phi_curve_sys(s.problem.system, solve_adjoint_sys(s.problem.system, s.u0()));
}

int phase_curve(Session& s) {
  s.require_hypotheses();
  const auto curve = curve_for(s);
  {
    auto os = s.open("phase_curve.csv");
    os << s.numerics_line("phase-curve") << "\n";
    os << "phi,Phi,dPhi\n";
    for (int n = 0; n < kCurveRows; ++n) {
      const double phi = double(n) / kCurveRows;
      os << phi << "," << curve.value(phi) << "," << curve.slope(phi) << "\n";
    }
  }
  {
    auto os = s.open("phase_curve.svg");
    write_svg(os, curve, s.config.tau0);
  }
  const auto [lo, hi] = std::minmax_element(curve.values.begin(), curve.values.end());
  s.out << std::setprecision(10) << "Phi range [" << *lo << ", " << *hi << "]\n";
  if (s.config.tau0) {
    for (const auto& r : find_locked_phases(curve, *s.config.tau0))
      s.out << "root phi " << r.phi << " slope " << r.slope
            << (r.nondegenerate ? "" : " (degenerate)") << "\n";
  }
  return kSuccess;
}

void solution_row(std::ostream& os, const LockedSolution& sol) {
  os << sol.eps << "," << sol.tau << "," << sol.period << "," << sol.phi << "," << sup_norm(sol.w)
     << "," << sol.residual_pde << "," << sol.orbit_distance / sol.eps;
}

const char* kSolutionColumns = "eps,tau,T,phi,w_sup,residual,orbit_distance_over_eps";

int lock(Session& s) {
  s.require_hypotheses();
  const double eps = require_eps(s.config);
  const auto ctx = s.context();
  const double tau = pick_tau(s, ctx.curve());
  const auto root = pick_root(ctx.curve(), tau);
  const auto seed = seed_solution(ctx, tau, root.phi);
  const auto sol = solve_locked(ctx, eps, tau, root.phi, seed.w);
  s.out << std::setprecision(10) << "tau " << tau << "\nroot phi " << root.phi << " slope "
        << root.slope << "\nlocked phi " << sol.phi << " period " << sol.period
        << "\nnewton iterations " << sol.newton_iterations << "\nresidual " << sol.residual_pde
        << "\norbit distance / eps " << sol.orbit_distance / eps << "\n";
  auto os = s.open("lock.csv");
  os << s.numerics_line("lock") << "\n" << kSolutionColumns << "\n";
  solution_row(os, sol);
  os << "\n";
  auto field = s.open("locked_u.csv");
  write_csv(field, sol.u);
  return kSuccess;
}

int sweep_wedge(Session& s) {
  s.require_hypotheses();
  const double eps0 = require_eps(s.config);
  if (s.config.eps_steps < 1 || s.config.tau_steps < 1) throw UsageError("sweep steps must be positive");
  const auto ctx = s.context();
  const double tau0 = pick_tau(s, ctx.curve());
  const auto root = pick_root(ctx.curve(), tau0);
  const auto result = sweep(ctx, eps0, tau0, root.phi, s.config.eps_steps, s.config.tau_steps);
  auto os = s.open("sweep.csv");
  os << s.numerics_line("sweep") << " eps0=" << eps0 << " tau0=" << tau0 << "\n";
  os << kSolutionColumns << ",status\n";
  int failures = 0;
  for (const auto& pt : result.points) {
    if (pt.solution) {
      solution_row(os, *pt.solution);
      os << ",ok\n";
    } else {
      ++failures;
      os << pt.eps << "," << pt.tau << "," << 1 + pt.eps * pt.tau << ",nan,nan,nan,nan,\""
         << pt.failure << "\"\n";
    }
  }
  s.out << std::setprecision(6) << "tau0 " << tau0 << " phi0 " << root.phi << "\n"
        << result.points.size() - failures << " of " << result.points.size()
        << " wedge points solved, sup orbit distance / eps " << result.ratio_bound << "\n";
  return failures == 0 ? kSuccess : kAssumption;
}

int diagnose(Session& s) {
  s.require_hypotheses();
  const double eps0 = require_eps(s.config);
  const auto ctx = s.context();
  const double tau = pick_tau(s, ctx.curve());
  const auto root = pick_root(ctx.curve(), tau);
  const auto seed = seed_solution(ctx, tau, root.phi);
  std::vector<DiagnosticInput> seq;
  std::vector<LockedSolution> sols;
  for (int k = 0; k < 4; ++k) {
    const double eps = eps0 / double(1 << k);
    sols.push_back(solve_locked(ctx, eps, tau, root.phi, seed.w));
    seq.push_back({eps, sols.back().period, sols.back().u});
  }
  const auto diag = sys2_diagnostic(ctx, seq);
  auto os = s.open("diagnose.csv");
  os << s.numerics_line("diagnose") << " eps0=" << eps0 << " tau=" << tau << " phi0=" << root.phi
     << "\n";
  os << "eps,T,phi,phi_offset,diagnostic,residual,excluded,orbit_distance_over_eps\n";
  s.out << std::setprecision(6) << "tau " << tau << " phi0 " << root.phi << "\n";
  for (size_t k = 0; k < diag.size(); ++k) {
    const auto& d = diag[k];
    const double offset = std::remainder(sols[k].phi - root.phi, 1.0);
    os << d.eps << "," << d.period << "," << d.phi << "," << offset << "," << d.value << ","
       << d.residual << "," << int(d.excluded) << "," << sols[k].orbit_distance / d.eps << "\n";
    s.out << "eps " << d.eps << "  |phi - phi0| " << std::abs(offset) << "  diagnostic "
          << std::abs(d.value) << (d.excluded ? "  (excluded)" : "") << "\n";
  }
  return kSuccess;
}

}  // namespace

int run(const RunConfig& config, std::ostream& out, std::ostream& err) {
  try {
    Session s{config, load_problem(config.problem_path, config.numerics), out};
    if (config.second_order != s.second_order())
      throw UsageError(s.second_order() ? "problem is second-order; pass --second-order"
                                        : "--second-order given for a first-order system");
    if (config.command == "check-nonres") return check_nonres(s);
    if (config.command == "adjoint") return adjoint(s);
    if (config.command == "phase-curve") return phase_curve(s);
    if (config.command == "lock") return lock(s);
    if (config.command == "sweep") return sweep_wedge(s);
    if (config.command == "diagnose") return diagnose(s);
    throw UsageError("unknown command " + config.command);
  } catch (const ProblemError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const AssumptionFailure& e) {
    err << "assumption failed: " << e.what() << "\n";
    return kAssumption;
  } catch (const AdjointError& e) {
    err << "assumption failed: " << e.what() << "\n";
    return kAssumption;
  } catch (const PhaseError& e) {
    err << "assumption failed: " << e.what() << "\n";
    return kAssumption;
  } catch (const LockingError& e) {
    err << "assumption failed: " << e.what() << "\n";
    return kAssumption;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
}

int main(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Frequency locking for forced periodic hyperbolic problems"};
  app.require_subcommand(1);
  RunConfig config;
  int modes = 0, xnodes = 0;
  double tol = 0, eps0 = 0, tau0 = 0;

  const std::vector<std::pair<std::string, std::string>> commands{
      {"check-nonres", "Check the non-resonance conditions at u0"},
      {"adjoint", "Solve the adjoint problem and write u* as a field CSV"},
      {"phase-curve", "Tabulate the phase function on 512 shifts, with an SVG plot"},
      {"lock", "Solve for one locked solution at --eps0 and --tau0"},
      {"sweep", "Solve on a grid inside the locking wedge"},
      {"diagnose", "Phase diagnostic along the ladder eps0, eps0/2, eps0/4, eps0/8"}};
  std::vector<CLI::App*> subs;
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("problem", config.problem_path, "problem file (JSON)")->required();
    sub->add_option("--modes", modes, "temporal modes M (1..128)");
    sub->add_option("--xnodes", xnodes, "spatial nodes N_x (9..513)");
    sub->add_option("--tol", tol, "solver tolerance");
    sub->add_flag("--second-order", config.second_order, "use the second-order pipeline");
    sub->add_option("--eps0", eps0, "forcing amplitude (lock) or wedge size (sweep, diagnose)");
    sub->add_option("--tau0", tau0, "period detuning; defaults to the mean of the phase function");
    sub->add_option("--eps-steps", config.eps_steps, "sweep: eps grid size")->capture_default_str();
    sub->add_option("--tau-steps", config.tau_steps, "sweep: tau grid size")->capture_default_str();
    sub->add_option("--out", config.out_dir, "output directory")->capture_default_str();
    subs.push_back(sub);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kUsage;
  }
  for (auto* sub : subs) {
    if (!sub->parsed()) continue;
    config.command = sub->get_name();
    if (sub->count("--modes")) config.numerics.modes = modes;
    if (sub->count("--xnodes")) config.numerics.xnodes = xnodes;
    if (sub->count("--tol")) config.numerics.tolerance = tol;
    if (sub->count("--eps0")) config.eps0 = eps0;
    if (sub->count("--tau0")) config.tau0 = tau0;
  }
  return run(config, out, err);
}

}  // namespace hyperlock::cli
