#pragma once

// Command-line front end. Exit codes: 0 success, 1 input error,
// 2 infeasible synthesis, 3 verification failure.

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qgc/io.hpp"

namespace qgc {

enum ExitCode : int { kExitOk = 0, kExitInput = 1, kExitInfeasible = 2, kExitVerifyFailed = 3 };

namespace detail {

inline std::pair<double, double> parse_range(const std::string& s) {
  const auto comma = s.find(',');
  if (comma == std::string::npos) throw Error(ErrorCode::InvalidArgument, "range must be lo,hi: '" + s + "'");
  try {
    return {std::stod(s.substr(0, comma)), std::stod(s.substr(comma + 1))};
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidArgument, "range must be lo,hi: '" + s + "'");
  }
}

inline RiccatiMode parse_mode(const std::string& s, const UncertainSystem& sys, double horizon) {
  if (s == "steady") return RiccatiMode::SteadyState;
  if (s == "finite") return RiccatiMode::FiniteHorizon;
  if (s == "auto") return default_mode(sys, horizon);
  throw Error(ErrorCode::InvalidArgument, "mode must be steady, finite or auto");
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorCode::InvalidArgument, "cannot write '" + path + "'");
  f << text;
}

struct SynthArgs {
  std::string model;
  double tau = 0.0;
  std::string tau_range = "0.2,20";
  int grid = 64;
  double tf = -1.0;
  std::string mode = "auto";
  int steps = 10000;
  unsigned workers = 0;
  std::string out;
};

struct VerifyArgs {
  std::string model;
  std::string report;
  int samples = 50;
  int paths = 1000;
  std::uint64_t seed = 1;
  bool mc = false;
  double dt = 1e-3;
  double mc_tf = 0.0;
  int steps = 10000;
  unsigned workers = 0;
  std::string out;
};

struct CavityArgs {
  CavitySpec spec;
  std::string type = "kappa2";
  std::string form = "statespace";
  std::string out;
};

inline void add_synth_flags(CLI::App* cmd, SynthArgs& a, bool single_tau) {
  cmd->add_option("model", a.model, "Model JSON file")->required();
  auto* range = cmd->add_option("--tau-range", a.tau_range, "Search interval lo,hi")->capture_default_str();
  cmd->add_option("--grid", a.grid, "Number of log-spaced grid points")->capture_default_str();
  if (single_tau) cmd->add_option("--tau", a.tau, "Fixed multiplier tau")->excludes(range);
  cmd->add_option("--tf", a.tf, "Horizon (defaults to the model file's horizon)");
  cmd->add_option("--mode", a.mode, "Riccati mode")
      ->check(CLI::IsMember({"steady", "finite", "auto"}))
      ->capture_default_str();
  cmd->add_option("--steps", a.steps, "RK4 steps over the horizon")->capture_default_str();
  cmd->add_option("--workers", a.workers, "Worker threads (0 = all cores)");
  cmd->add_option("--out", a.out, "Output path (stdout if omitted)");
}

inline int run_synth(const SynthArgs& a, CLI::App* cmd, std::ostream& out) {
  const auto m = load_model(a.model);
  const double horizon = a.tf >= 0.0 ? a.tf : m.horizon;
  RiccatiOptions ro;
  ro.mode = parse_mode(a.mode, m.system, horizon);
  ro.steps = a.steps;
  SynthesisReport rep;
  if (cmd->count("--tau") > 0) {
    rep = synthesize(m.system, m.weights, a.tau, horizon, ro);
  } else {
    TauSearchOptions so;
    std::tie(so.tau_lo, so.tau_hi) = parse_range(a.tau_range);
    so.grid = a.grid;
    so.workers = a.workers;
    rep = minimize_tau(m.system, m.weights, horizon, so, ro);
  }
  const std::string text = to_json(rep).dump(2) + "\n";
  if (a.out.empty()) {
    out << text;
  } else {
    write_text(a.out, text);
    out << std::setprecision(6) << "tau = " << rep.tau << "  V_tau = " << rep.bound << "  mode = "
        << to_string(rep.riccati.mode) << "\n";
  }
  return kExitOk;
}

inline int run_sweep(const SynthArgs& a, std::ostream& out) {
  const auto m = load_model(a.model);
  const double horizon = a.tf >= 0.0 ? a.tf : m.horizon;
  RiccatiOptions ro;
  ro.mode = parse_mode(a.mode, m.system, horizon);
  ro.steps = a.steps;
  const auto [lo, hi] = parse_range(a.tau_range);
  if (!(lo > 0.0 && lo < hi) || a.grid < 2) {
    throw Error(ErrorCode::InvalidArgument, "tau range must satisfy 0 < lo < hi with grid >= 2");
  }
  const auto a1 = check_assumption1(m.system, m.weights);
  if (!a1.pass) throw Error(ErrorCode::InvalidSpec, "cost factorization check fails: " + a1.detail);
  const auto n = static_cast<std::size_t>(a.grid);
  std::vector<TauEvaluation> evals(n);
  parallel_for(
      n,
      [&](std::size_t i) {
        const double t = std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * static_cast<double>(i) /
                                                     static_cast<double>(n - 1));
        evals[i] = evaluate_tau(m.system, m.weights, t, horizon, ro);
      },
      a.workers);
  std::ostringstream csv;
  csv << std::setprecision(10) << "tau,feasible,V_tau,rho_max,min_eig_Y\n";
  auto field = [](double v) {
    std::ostringstream f;
    if (std::isfinite(v)) f << std::setprecision(10) << v;
    return f.str();
  };
  for (const auto& e : evals) {
    csv << e.tau << "," << (e.feasible ? 1 : 0) << "," << (e.feasible ? field(e.bound) : std::string()) << ","
        << field(e.rho_max) << "," << field(e.y_min_eig) << "\n";
  }
  if (a.out.empty()) {
    out << csv.str();
  } else {
    write_text(a.out, csv.str());
  }
  return kExitOk;
}

inline int run_verify(const VerifyArgs& a, std::ostream& out) {
  const auto m = load_model(a.model);
  const auto s = synthesis_from_json(parse_json_text(read_file(a.report), a.report));
  if (s.controller.B_K.rows() != s.controller.A_K.rows() || s.controller.B_K.cols() != m.system.ny() ||
      s.controller.C_K.rows() != m.system.nu()) {
    throw Error(ErrorCode::DimensionMismatch, "controller in report does not match the model");
  }
  SweepOptions so;
  so.steps = a.steps;
  so.workers = a.workers;
  if (a.mc) {
    so.mc_paths = a.paths;
    so.mc_dt = a.dt;
    so.mc_horizon = a.mc_tf;
  }
  const auto rep = sweep_bound(m.system, s.controller, s.bound, s.horizon, a.samples, a.seed, so);
  const std::string text = to_json(rep).dump(2) + "\n";
  if (a.out.empty()) {
    out << text;
  } else {
    write_text(a.out, text);
    out << std::setprecision(6) << "samples = " << rep.samples.size() << "  max J = " << rep.max_J_dre
        << "  V_tau = " << rep.bound << "  min margin = " << rep.min_margin
        << (rep.all_pass ? "  PASS" : "  FAIL") << "\n";
  }
  return rep.all_pass ? kExitOk : kExitVerifyFailed;
}

inline int run_make_cavity(CavityArgs a, std::ostream& out) {
  a.spec.uncertainty = a.type == "detuning" ? CavityUncertainty::Detuning : CavityUncertainty::Kappa2Perturbation;
  const auto form = a.form == "hamiltonian" ? CavityForm::Hamiltonian : CavityForm::StateSpace;
  const auto f = make_cavity(a.spec, form);
  if (a.out.empty()) {
    out << to_json(f).dump(2) << "\n";
  } else {
    save_model(f, a.out);
  }
  return kExitOk;
}

}  // namespace detail

inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Guaranteed-cost coherent/measurement feedback synthesis for uncertain linear quantum systems", "qgc"};
  app.require_subcommand(1);

  detail::SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth", "Synthesize a controller and its cost bound");
  detail::add_synth_flags(synth, synth_args, true);

  detail::SynthArgs sweep_args;
  auto* sweep = app.add_subcommand("sweep-tau", "Tabulate feasibility and V_tau over a tau grid (CSV)");
  detail::add_synth_flags(sweep, sweep_args, false);

  detail::VerifyArgs verify_args;
  auto* verify = app.add_subcommand("verify", "Check a synthesized controller against sampled uncertainty");
  verify->add_option("model", verify_args.model, "Model JSON file")->required();
  verify->add_option("report", verify_args.report, "Synthesis report JSON file")->required();
  verify->add_option("--samples", verify_args.samples, "Number of uncertainty samples")->capture_default_str();
  verify->add_option("--paths", verify_args.paths, "Monte Carlo paths per sample")->capture_default_str();
  verify->add_option("--seed", verify_args.seed, "Base RNG seed")->capture_default_str();
  verify->add_flag("--mc", verify_args.mc, "Add Monte Carlo estimates");
  verify->add_option("--dt", verify_args.dt, "Monte Carlo time step")->capture_default_str();
  verify->add_option("--mc-tf", verify_args.mc_tf, "Monte Carlo horizon (defaults to the report horizon)");
  verify->add_option("--steps", verify_args.steps, "RK4 steps for the moment equation")->capture_default_str();
  verify->add_option("--workers", verify_args.workers, "Worker threads (0 = all cores)");
  verify->add_option("--out", verify_args.out, "Output path (stdout if omitted)");

  detail::CavityArgs cav;
  auto* mk = app.add_subcommand("make-cavity", "Write the optical cavity example model");
  mk->add_option("--kappa1", cav.spec.kappa1)->capture_default_str();
  mk->add_option("--kappa2", cav.spec.kappa2)->capture_default_str();
  mk->add_option("--kappa3", cav.spec.kappa3)->capture_default_str();
  mk->add_option("--delta0", cav.spec.delta0)->capture_default_str();
  mk->add_option("--Omega0", cav.spec.Omega0)->capture_default_str();
  mk->add_option("--epsilon0", cav.spec.epsilon0)->capture_default_str();
  mk->add_option("--type", cav.type)->check(CLI::IsMember({"kappa2", "detuning"}))->capture_default_str();
  mk->add_option("--form", cav.form)->check(CLI::IsMember({"statespace", "hamiltonian"}))->capture_default_str();
  mk->add_option("--out", cav.out, "Output path (stdout if omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*synth) return detail::run_synth(synth_args, synth, out);
    if (*sweep) return detail::run_sweep(sweep_args, out);
    if (*verify) return detail::run_verify(verify_args, out);
    if (*mk) return detail::run_make_cavity(cav, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::NoFeasibleTau ? kExitInfeasible : kExitInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}

}  // namespace qgc
