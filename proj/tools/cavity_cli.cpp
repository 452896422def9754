#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cavity/io.hpp"
#include "cavity/params.hpp"
#include "cavity/phaseplane.hpp"
#include "cavity/reconstruct.hpp"
#include "cavity/trajectory.hpp"

namespace {

using cavity::io::json;

enum Exit : int { kOk = 0, kUsage = 1, kConditions = 2, kTrajectory = 3, kVerification = 4 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Config {
  std::string preset;
  std::string n, gamma, lambda, kappa;
  double tol_rel = 1e-10, tol_abs = 1e-12;
  double eps_p2 = 1e-6, eps_p6 = 1e-5, delta_p1 = 1e-6;
  std::string out;
  std::string format = "json";
  bool force = false;
  double sweep = 0.0;

  // portrait
  std::vector<double> v_range{-1.0, 0.6}, c_range{0.0, 1.0};
  std::vector<int> grid{33, 21};

  // reconstruct
  std::vector<double> times{-1.0, -0.5, -0.1};
  double r_max = 3.0;
  int nr = 64;
  double constant = 1.0;
};

cavity::Parameters resolve_parameters(const Config& c) {
  const bool explicit_any = !c.n.empty() || !c.gamma.empty() || !c.lambda.empty() || !c.kappa.empty();
  if (!c.preset.empty()) {
    if (explicit_any) throw UsageError("--preset cannot be combined with explicit parameters");
    auto p = cavity::find_preset(c.preset);
    if (!p) throw UsageError("unknown preset '" + c.preset + "' (case1 ... case6)");
    return *p;
  }
  if (c.n.empty() || c.gamma.empty() || c.lambda.empty() || c.kappa.empty())
    throw UsageError("give --preset or all of -n, --gamma, --lambda, --kappa");
  auto num = [](const std::string& s, const char* what) {
    auto v = cavity::parse_number(s);
    if (!v) throw UsageError(std::string("cannot parse ") + what + " '" + s + "'");
    return *v;
  };
  cavity::Parameters p;
  const double n = num(c.n, "n");
  if (n != 2.0 && n != 3.0) throw UsageError("n must be 2 or 3");
  p.gas.n = static_cast<int>(n);
  p.gas.gamma = num(c.gamma, "gamma");
  p.sim.lambda = num(c.lambda, "lambda");
  p.sim.kappa = num(c.kappa, "kappa");
  cavity::derive(p);  // validates
  return p;
}

cavity::BuildOptions build_options(const Config& c) {
  cavity::BuildOptions o;
  o.tol = {c.tol_rel, c.tol_abs};
  o.eps_p2 = c.eps_p2;
  o.eps6 = c.eps_p6;
  o.delta1 = c.delta_p1;
  return o;
}

void emit(const Config& c, const std::string& suffix, const std::string& text) {
  if (c.out.empty()) {
    std::cout << text;
    return;
  }
  const std::string path = c.out + suffix;
  std::ofstream f(path);
  if (!f) throw UsageError("cannot write " + path);
  f << text;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

void print_conditions_csv(std::ostream& os, const cavity::ConditionReport& r) {
  os << "id,pass,margin,description\n";
  for (const auto& c : r.conditions)
    os << c.id << ',' << (c.pass() ? "pass" : c.evaluable ? "fail" : "not evaluable") << ','
       << cavity::io::g17(c.margin()) << ",\"" << c.description << "\"\n";
}

int cmd_check(const Config& c) {
  const auto p = resolve_parameters(c);
  const auto rep = cavity::check_conditions(p);
  json out{{"parameters", cavity::io::to_json(p)}, {"report", cavity::io::to_json(rep)}};

  bool sweep_ok = true;
  if (c.sweep > 0.0) {
    json grid = json::array();
    for (int i = -1; i <= 1; ++i) {
      for (int k = -1; k <= 1; ++k) {
        auto q = p;
        q.sim.lambda += i * c.sweep;
        q.sim.kappa += k * c.sweep;
        bool ok = false;
        try {
          ok = cavity::check_conditions(q).all_pass();
        } catch (const cavity::Error&) {
        }
        sweep_ok = sweep_ok && ok;
        grid.push_back({{"lambda", q.lambda()}, {"kappa", q.kappa()}, {"all_pass", ok}});
      }
    }
    out["sweep"] = {{"delta", c.sweep}, {"grid", grid}, {"all_pass", sweep_ok}};
  }

  if (c.format == "csv") {
    std::ostringstream os;
    print_conditions_csv(os, rep);
    emit(c, ".csv", os.str());
  } else {
    emit(c, ".json", dump(out));
  }
  return rep.all_pass() && sweep_ok ? kOk : kConditions;
}

int cmd_points(const Config& c) {
  const auto p = resolve_parameters(c);
  if (c.format == "csv") {
    std::ostringstream os;
    os << "id,present,V,C,class,wronskian,discriminant,L1,L2\n";
    for (const auto& cp : cavity::critical_points(p, cavity::derive(p))) {
      using cavity::io::g17;
      os << cavity::to_string(cp.id) << ',' << (cp.present ? 1 : 0) << ',' << g17(cp.location.V) << ','
         << g17(cp.location.C) << ',' << cavity::to_string(cp.cls) << ',' << g17(cp.wronskian) << ','
         << g17(cp.discriminant) << ',' << g17(cp.L1) << ',' << g17(cp.L2) << '\n';
    }
    emit(c, ".csv", os.str());
  } else {
    emit(c, ".json", dump(cavity::io::points_report(p)));
  }
  return kOk;
}

// Builds Gamma after the condition gate. Returns nullopt with an exit code set.
std::optional<cavity::GammaResult> build(const Config& c, const cavity::Parameters& p, int& code) {
  if (!c.force) {
    const auto rep = cavity::check_conditions(p);
    if (!rep.all_pass()) {
      for (const auto& cr : rep.conditions)
        if (!cr.pass()) std::cerr << "condition " << cr.id << " fails: " << cr.description << "\n";
      code = kConditions;
      return std::nullopt;
    }
  }
  try {
    return cavity::build_gamma(p, build_options(c));
  } catch (const cavity::Error& e) {
    std::cerr << "trajectory: " << e.what() << "\n";
    code = kTrajectory;
    return std::nullopt;
  }
}

int cmd_solve(const Config& c) {
  const auto p = resolve_parameters(c);
  int code = kOk;
  auto g = build(c, p, code);
  if (!g) return code;
  cavity::density_from_adiabatic(*g);
  std::ostringstream csv;
  cavity::io::write_trajectory_csv(csv, *g);
  const std::string summary = dump(cavity::io::to_json(*g));
  if (c.out.empty()) {
    std::cout << (c.format == "csv" ? csv.str() : summary);
  } else {
    emit(c, ".csv", csv.str());
    emit(c, ".json", summary);
  }
  return kOk;
}

int cmd_portrait(const Config& c) {
  const auto p = resolve_parameters(c);
  if (c.v_range.size() != 2 || c.c_range.size() != 2 || c.grid.size() != 2)
    throw UsageError("--v-range, --c-range and --grid take two values each");
  cavity::io::PortraitGrid grid;
  grid.V_lo = c.v_range[0];
  grid.V_hi = c.v_range[1];
  grid.C_lo = c.c_range[0];
  grid.C_hi = c.c_range[1];
  grid.nV = c.grid[0];
  grid.nC = c.grid[1];
  if (grid.nV < 2 || grid.nC < 2 || !(grid.V_lo < grid.V_hi) || !(grid.C_lo < grid.C_hi))
    throw UsageError("bad portrait grid");

  std::optional<cavity::GammaResult> g;
  std::string gamma_note;
  try {
    if (cavity::check_conditions(p).all_pass() || c.force) g = cavity::build_gamma(p, build_options(c));
    else gamma_note = "conditions fail; trajectory omitted";
  } catch (const cavity::Error& e) {
    gamma_note = e.what();
  }
  auto bundle = cavity::io::portrait_bundle(p, g ? &*g : nullptr, grid);
  if (!gamma_note.empty()) bundle["gamma_note"] = gamma_note;
  emit(c, ".json", dump(bundle));
  return kOk;
}

int cmd_reconstruct(const Config& c) {
  const auto p = resolve_parameters(c);
  int code = kOk;
  auto g = build(c, p, code);
  if (!g) return code;
  if (!(c.constant > 0.0)) throw UsageError("--constant must be positive");
  if (c.nr < 2 || !(c.r_max > 0.0)) throw UsageError("bad radial grid");
  for (double t : c.times)
    if (!(t < 0.0)) throw UsageError("--times must be negative");
  cavity::density_from_adiabatic(*g, c.constant);

  cavity::FlowField field;
  field.adiabatic_constant = c.constant;
  for (double t : c.times) {
    const double r0 = cavity::interface_radius(*g, t);
    if (!(c.r_max > r0)) continue;
    for (int i = 0; i < c.nr; ++i) {
      // geometric spacing from just outside the interface to r_max
      const double r = r0 * std::pow(c.r_max / r0, (i + 1.0) / c.nr);
      field.points.push_back(cavity::flow_point(*g, t, r, c.constant));
    }
  }

  cavity::Verification v;
  try {
    v = cavity::verify(*g);
  } catch (const cavity::Error& e) {
    std::cerr << "verification: " << e.what() << "\n";
    return kVerification;
  }
  json checks = json::array();
  for (const auto& ch : v.checks)
    checks.push_back({{"name", ch.name}, {"value", cavity::io::number(ch.value)}, {"tolerance", ch.tolerance},
                      {"pass", ch.pass}});
  json report{{"header", cavity::io::field_header(*g, field)},
              {"summary", cavity::io::to_json(*g)},
              {"checks", checks},
              {"boundary", cavity::io::to_json(v.boundary)},
              {"integrability", cavity::io::to_json(v.integrability)},
              {"residuals", cavity::io::to_json(v.residuals)},
              {"all_pass", v.pass()}};
  std::ostringstream csv;
  cavity::io::write_field_csv(csv, field);
  if (c.out.empty()) {
    std::cout << (c.format == "csv" ? csv.str() : dump(report));
  } else {
    emit(c, ".csv", csv.str());
    emit(c, ".json", dump(report));
  }
  for (const auto& ch : v.checks)
    if (!ch.pass) std::cerr << "check failed: " << ch.name << " = " << ch.value << " (tol " << ch.tolerance << ")\n";
  return v.pass() ? kOk : kVerification;
}

void add_common(CLI::App* sub, Config& c) {
  sub->add_option("--preset", c.preset, "case1 ... case6");
  sub->add_option("-n", c.n, "spatial dimension (2 or 3)");
  sub->add_option("--gamma", c.gamma, "adiabatic index; decimal or a/b");
  sub->add_option("--lambda", c.lambda, "similarity exponent");
  sub->add_option("--kappa", c.kappa, "density exponent");
  sub->add_option("--out", c.out, "output path prefix; .json/.csv appended");
  sub->add_option("--format", c.format, "stdout format")->check(CLI::IsMember({"json", "csv"}));
}

void add_build(CLI::App* sub, Config& c) {
  sub->add_option("--tol-rel", c.tol_rel, "integrator relative tolerance")->check(CLI::PositiveNumber);
  sub->add_option("--tol-abs", c.tol_abs, "integrator absolute tolerance")->check(CLI::PositiveNumber);
  sub->add_option("--eps-p2", c.eps_p2, "start offset from P2")->check(CLI::PositiveNumber);
  sub->add_option("--eps-p6", c.eps_p6, "departure offset from P6")->check(CLI::PositiveNumber);
  sub->add_option("--delta-p1", c.delta_p1, "termination radius around P1")->check(CLI::PositiveNumber);
  sub->add_flag("--force", c.force, "skip the condition gate");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-similar cavity collapse: conditions, critical points, trajectory and fields"};
  app.require_subcommand(1);
  Config c;

  auto* check = app.add_subcommand("check", "evaluate conditions A-J");
  add_common(check, c);
  check->add_option("--sweep", c.sweep, "also check a 3x3 (lambda, kappa) grid with this spacing")
      ->check(CLI::NonNegativeNumber);

  auto* points = app.add_subcommand("points", "critical points and their classification");
  add_common(points, c);

  auto* solve = app.add_subcommand("solve", "construct the trajectory from P2 through P6 to P1");
  add_common(solve, c);
  add_build(solve, c);

  auto* portrait = app.add_subcommand("portrait", "phase-portrait data bundle (JSON)");
  add_common(portrait, c);
  add_build(portrait, c);
  portrait->add_option("--v-range", c.v_range, "V extent of the direction field")->expected(2);
  portrait->add_option("--c-range", c.c_range, "C extent of the direction field")->expected(2);
  portrait->add_option("--grid", c.grid, "direction field samples in V and C")->expected(2);

  auto* recon = app.add_subcommand("reconstruct", "physical fields and their verification");
  add_common(recon, c);
  add_build(recon, c);
  recon->add_option("--times", c.times, "negative times for the field grid");
  recon->add_option("--r-max", c.r_max, "outer radius of the field grid");
  recon->add_option("--nr", c.nr, "radial samples per time");
  recon->add_option("--constant", c.constant, "adiabatic constant");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*check) return cmd_check(c);
    if (*points) return cmd_points(c);
    if (*solve) return cmd_solve(c);
    if (*portrait) return cmd_portrait(c);
    if (*recon) return cmd_reconstruct(c);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const cavity::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == cavity::ErrorKind::InvalidParameters ? kUsage : kTrajectory;
  }
  return kUsage;
}
