// qkl: command-line driver with one subcommand per analysis.
// Every run writes report.json plus CSV tables.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "output.hpp"
#include "qkl/qkl.hpp"
#include "run_config.hpp"

namespace {

using namespace qkl;
using namespace qkl::cli;

enum ExitCode { kOk = 0, kInternal = 1, kInvalidConfig = 2, kInfeasible = 3, kTolerance = 4 };

struct Run {
  std::string subcommand;
  json config;  // effective config, out_dir removed
  RunConfig cfg;
  json diagnostics = json::object();
  json results = json::object();
  std::vector<std::pair<std::string, std::string>> csv;  // file name, content
  int exit_code = kOk;
  std::string status = "ok";
  json error;
};

/// JSON has no NaN or infinity; such values are emitted as null.
json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json vector_json(const RealVector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(num(v(i)));
  return out;
}

OqhoModel model_or_throw(const Run& run) {
  if (run.config.contains("model") == false) throw config_error("this subcommand needs a model");
  try {
    return build_config_model(run.cfg);
  } catch (const tolerance_error& e) {
    throw config_error(e.what());
  }
}

CovarianceKernel stable_kernel(const OqhoModel& model) {
  if (!model.hurwitz) throw config_error("model drift A is not Hurwitz; the invariant state does not exist");
  return steady_covariance(model);
}

RealMatrix weight_or_throw(const Run& run, Eigen::Index n) {
  if (!run.cfg.Pi) throw config_error("this subcommand needs the weight matrix Pi");
  const RealMatrix& pi = *run.cfg.Pi;
  if (pi.rows() != n || pi.cols() != n) throw config_error("Pi must be n x n with n = " + std::to_string(n));
  if ((pi - pi.transpose()).norm() > 1e-12 * std::max(1.0, pi.norm())) throw config_error("Pi must be symmetric");
  if (sym_eig(pi).first.minCoeff() < -1e-12 * std::max(1.0, pi.norm()))
    throw config_error("Pi must be positive semi-definite");
  return pi;
}

void check_model(Run& run) {
  const OqhoModel model = model_or_throw(run);
  const Eigen::VectorXcd ev = eigenvalues(model.A);
  json d;
  d["n"] = model.n;
  d["m"] = model.m;
  d["pr_residual"] = model.pr_residual();
  d["hurwitz"] = model.hurwitz;
  d["spectral_abscissa"] = ev.real().maxCoeff();
  d["A"] = matrix_json(model.A);
  d["B"] = matrix_json(model.B);
  Csv csv({"index", "real", "imag"});
  for (Eigen::Index i = 0; i < ev.size(); ++i) csv.row(static_cast<int>(i), ev(i).real(), ev(i).imag());
  run.csv.emplace_back("eigenvalues.csv", csv.str());
  if (model.hurwitz) {
    const RealMatrix theta = recover_theta(model.A, model.B, model.J);
    d["theta_roundtrip_error"] = (theta - model.Theta).norm();
    const CovarianceKernel k = steady_covariance(model);
    d["ale_residual"] = k.ale_residual();
    run.results["Sigma"] = matrix_json(k.Sigma);
    run.results["trace_Sigma"] = k.Sigma.trace();
  }
  run.diagnostics = d;
}

void wiener_kl(Run& run) {
  const SinBasis basis(run.cfg.T, run.cfg.basis_K);
  const int k_gram = std::min(basis.order(), 64);
  const SinBasis gram_basis(run.cfg.T, k_gram);
  const BasisGramians g = basis_gramians(gram_basis, gram_basis.quadrature());
  const RealMatrix id = RealMatrix::Identity(k_gram, k_gram);
  json d;
  d["gram_order"] = k_gram;
  d["f_orthonormality_error"] = (g.ff - id).cwiseAbs().maxCoeff();
  d["g_orthonormality_error"] = (g.gg - id).cwiseAbs().maxCoeff();
  d["lambda_partial_sum"] = basis.lambda_partial_sum();
  d["lambda_total"] = basis.lambda_total();
  d["lambda_tail"] = basis.lambda_total() - basis.lambda_partial_sum();
  d["lambda_tail_lower_bound"] = basis.lambda_tail_lower_bound();
  d["lambda_tail_upper_bound"] = basis.lambda_tail_upper_bound();
  const int top = std::min(basis.order() - 1, 5);
  json ccr = json::array();
  for (auto [j, k] : {std::pair{0, 0}, {top, top}, {0, std::min(1, top)}}) {
    const double v = ccr_double_integral(basis, j, k, 400);
    ccr.push_back({{"j", j}, {"k", k}, {"value", v}, {"error", std::abs(v - (j == k ? 1.0 : 0.0))}});
  }
  d["ccr_double_integral"] = ccr;
  run.diagnostics = d;

  Csv table({"k", "omega", "lambda", "cumulative_lambda", "remaining"});
  double acc = 0.0;
  for (int k = 0; k < basis.order(); ++k) {
    acc += basis.lambda(k);
    table.row(k, basis.omega(k), basis.lambda(k), acc, basis.lambda_total() - acc);
  }
  run.csv.emplace_back("wiener_kl.csv", table.str());

  std::mt19937_64 rng(static_cast<std::uint64_t>(run.cfg.seed));
  std::uniform_real_distribution<double> u(0.0, run.cfg.T);
  Csv mercer({"s", "t", "mercer", "exact", "abs_error"});
  double worst = 0.0;
  for (int i = 0; i < 16; ++i) {
    const double s = u(rng), t = u(rng);
    const double v = basis.mercer_min(s, t), exact = std::min(s, t);
    worst = std::max(worst, std::abs(v - exact));
    mercer.row(s, t, v, exact, std::abs(v - exact));
  }
  run.csv.emplace_back("mercer.csv", mercer.str());
  run.results["mercer_max_abs_error"] = worst;
}

std::vector<int> doubling_orders(int top, int start) {
  std::vector<int> out;
  for (int k = start; k < top; k *= 2) out.push_back(k);
  out.push_back(top);
  return out;
}

void expm_fourier_cmd(Run& run) {
  const OqhoModel model = model_or_throw(run);
  const CovarianceKernel kernel = stable_kernel(model);
  const double T = run.cfg.T;
  Csv table({"K", "l2_error", "parseval_tail", "xi_tail_bound", "covariance_error"});
  json rows = json::array();
  for (int K : doubling_orders(run.cfg.basis_K, 4)) {
    const SinBasis basis(T, K);
    const FourierTables t = fourier_tables(model, basis);
    const double l2 = expm_fourier_l2_error(model, t);
    const double tail = std::sqrt(fourier_tail_sq(model, T, K, K + 100000));
    const double xib = xi_tail_bound(model, T, K);
    const double cov = (representation_covariance(kernel, basis, 0.6 * T, 0.4 * T) - kernel_K(kernel, 0.2 * T)).norm();
    table.row(K, l2, tail, xib, cov);
    rows.push_back({{"K", K}, {"l2_error", l2}, {"parseval_tail", tail}, {"xi_tail_bound", xib},
                    {"covariance_error", cov}});
  }
  run.csv.emplace_back("expm_fourier.csv", table.str());
  run.results["table"] = rows;
  run.diagnostics["representation_points"] = {0.6 * T, 0.4 * T};
}

void kernel_eig_cmd(Run& run) {
  const OqhoModel model = model_or_throw(run);
  const CovarianceKernel kernel = stable_kernel(model);
  const KernelEigDecomposition d = nystrom_eig(kernel, run.cfg.T, run.cfg.grid);
  const double total = d.mu.sum();
  Csv spectrum({"index", "mu", "cumulative_fraction"});
  double acc = 0.0;
  for (int k = 0; k < d.modes(); ++k) {
    acc += d.mu(k);
    spectrum.row(k, d.mu(k), total > 0.0 ? acc / total : 0.0);
  }
  run.csv.emplace_back("spectrum.csv", spectrum.str());

  double mercer = 0.0;
  const std::size_t stride = std::max<std::size_t>(1, d.grid.size() / 10);
  for (std::size_t i = 0; i < d.grid.size(); i += stride)
    mercer = std::max(mercer, (mercer_K(d, i, i, d.modes()) - kernel.V).norm());

  std::mt19937_64 rng(static_cast<std::uint64_t>(run.cfg.seed));
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  const int few = std::min(d.modes(), 16);
  KernelEigDecomposition rotated = d;
  for (int k = 0; k < few; ++k) rotated.h.col(k) *= std::polar(1.0, phase(rng));
  const std::size_t last = d.grid.size() - 1;
  const ComplexMatrix before = mercer_K(d, std::size_t{0}, last / 3, few);
  const double phase_err = (mercer_K(rotated, std::size_t{0}, last / 3, few) - before).norm() /
                           std::max(before.norm(), 1e-300);

  json diag;
  diag["grid"] = d.grid.size();
  diag["trace_target"] = d.trace_target;
  diag["mu_sum"] = total;
  diag["trace_relative_gap"] = std::abs(total - d.trace_target) / d.trace_target;
  diag["trace_identity_ok"] = std::abs(total - d.trace_target) < 1e-3 * d.trace_target;
  diag["clipped_mass"] = d.clipped_mass;
  diag["hermitian_residual"] = d.hermitian_residual;
  diag["degenerate_clusters"] = d.clusters.size();
  diag["mercer_coincident_error"] = mercer;
  diag["phase_invariance_error"] = phase_err;
  run.diagnostics = diag;
  run.results["mu_leading"] = vector_json(d.mu.head(std::min(d.modes(), 10)));
  run.results["modes_for_999_mass"] = auto_modes(d);
}

json problem_json(const QefProblem& p) {
  json j;
  j["N"] = p.N;
  j["feasible"] = p.feasible;
  j["radius"] = num(p.radius);
  j["xi"] = num(p.xi);
  j["kept_modes"] = p.kept_modes.size();
  j["dropped_modes"] = p.dropped_modes;
  j["tail_mass"] = p.tail_mass;
  j["sigmas"] = vector_json(p.sigmas);
  if (!p.reason.empty()) j["reason"] = p.reason;
  return j;
}

void qef_cmd(Run& run) {
  const OqhoModel model = model_or_throw(run);
  const CovarianceKernel kernel = stable_kernel(model);
  const RealMatrix pi = weight_or_throw(run, model.n);
  const KernelEigDecomposition d = nystrom_eig(kernel, run.cfg.T, run.cfg.grid);
  const int N = run.cfg.N ? *run.cfg.N : auto_modes(d);
  if (N > d.modes()) throw config_error("N exceeds the number of computed modes (grid * n)");

  Csv table({"N", "xi", "log_xi", "feasible", "radius", "kept_modes", "tail_mass"});
  QefProblem final_problem;
  for (int n : doubling_orders(N, 1)) {
    const QefProblem p = qef_pipeline(kernel, d, pi, n);
    table.row(n, p.feasible ? csv_cell(p.xi) : std::string(), p.feasible ? csv_cell(std::log(p.xi)) : std::string(),
              p.feasible, p.radius, p.kept_modes.size(), p.tail_mass);
    if (n == N) final_problem = p;
  }
  run.csv.emplace_back("qef_convergence.csv", table.str());

  const double mq = mean_q(kernel, pi, run.cfg.T);
  run.diagnostics["grid"] = final_problem.grid_size;
  run.diagnostics["N_rule"] = run.cfg.N ? "fixed" : "auto";
  run.diagnostics["tail_mass"] = final_problem.tail_mass;
  run.diagnostics["trace_target"] = d.trace_target;
  run.results = problem_json(final_problem);
  run.results["mean_q"] = mq;
  if (final_problem.feasible) {
    run.results["log_xi"] = std::log(final_problem.xi);
    run.results["log_xi_over_mean_q"] = num(mq > 0.0 ? std::log(final_problem.xi) / mq : std::nan(""));
  } else {
    run.exit_code = kInfeasible;
    run.status = "infeasible";
    run.error = {{"category", "infeasible_qef"}, {"message", final_problem.reason}};
  }
}

void oracle_compare(Run& run) {
  RealMatrix h;
  int N = 0;
  if (run.cfg.H) {
    h = *run.cfg.H;
    if (h.rows() != h.cols() || h.rows() % 2 != 0) throw config_error("H must be square of even order");
    N = static_cast<int>(h.rows() / 2);
    if ((h - h.transpose()).norm() > 1e-12 * std::max(1.0, h.norm())) throw config_error("H must be symmetric");
    run.diagnostics["source"] = "H";
  } else {
    const OqhoModel model = model_or_throw(run);
    const CovarianceKernel kernel = stable_kernel(model);
    const RealMatrix pi = weight_or_throw(run, model.n);
    N = run.cfg.N ? *run.cfg.N : 2;
    if (N > kMaxOracleModes) throw config_error("oracle-compare supports N <= 3");
    const KernelEigDecomposition d = nystrom_eig(kernel, run.cfg.T, run.cfg.grid, N);
    h = assemble_H(d, pi, N);
    run.diagnostics["source"] = "pipeline";
    run.diagnostics["grid"] = d.grid.size();
    run.diagnostics["mu"] = vector_json(d.mu);
  }
  if (N < 1 || N > kMaxOracleModes) throw config_error("oracle-compare supports 1 <= N <= 3");
  const int fock_d = run.cfg.fock_d ? run.cfg.fock_d : default_fock_dim(N);
  run.results["N"] = N;
  run.results["fock_d"] = fock_d;
  run.results["H"] = matrix_json(h);

  const Feasibility f = qef_feasible(h);
  run.results["radius"] = num(f.radius);
  run.results["feasible"] = f.feasible;
  if (!f.williamson) throw not_positive_definite_error("H is not positive definite: " + f.reason);
  if (!f.feasible) {
    run.exit_code = kInfeasible;
    run.status = "infeasible";
    run.error = {{"category", "infeasible_qef"}, {"message", f.reason}};
    return;
  }
  const double formula = qef_value(h);
  const OracleResult oracle = oracle_qef(h, N, fock_d);
  run.results["formula"] = formula;
  run.results["oracle"] = oracle.xi;
  run.results["abs_delta"] = std::abs(formula - oracle.xi);
  run.results["rel_delta"] = std::abs(formula - oracle.xi) / oracle.xi;
  run.results["refinement_delta"] = oracle.refined_delta;
  run.results["sigmas"] = vector_json(f.williamson->sigmas);
  if (N == 1 && std::abs(h(0, 1)) == 0.0 && h(0, 0) == h(1, 1)) {
    const double closed = std::exp(2.0 * h(0, 0));
    run.results["closed_form"] = closed;
    run.results["closed_form_abs_delta"] = std::abs(oracle.xi - closed);
  }

  Csv table({"fock_d", "oracle", "formula", "abs_delta", "rel_delta"});
  for (int dd = std::max(kMinFockDim, fock_d - 16); dd <= fock_d; dd += 8) {
    const double v = dd == fock_d ? oracle.xi
                                  : oracle_qef(h, N, dd, std::numeric_limits<double>::infinity()).xi;
    table.row(dd, v, formula, std::abs(v - formula), std::abs(v - formula) / v);
  }
  run.csv.emplace_back("oracle_compare.csv", table.str());
}

void fail(Run& run, int code, const char* category, const std::string& message) {
  run.exit_code = code;
  run.status = "error";
  run.error = {{"category", category}, {"message", message}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum Karhunen-Loeve expansion and QEF toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path, out_dir;
  std::vector<std::string> overrides;
  std::int64_t seed = 0;
  app.add_option("--config", config_path, "JSON run configuration")->required();
  auto* out_opt = app.add_option("--out", out_dir, "output directory (overrides out_dir)");
  app.add_option("--set", overrides, "override a config key, key.sub=value (repeatable)")->take_all()->allow_extra_args(false);
  auto* seed_opt = app.add_option("--seed", seed, "seed for randomized checks (overrides seed)");
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"check-model", "physical realizability, stability and Theta round trip"},
      {"wiener-kl", "sinusoidal basis orthonormality, Mercer and commutator tables"},
      {"expm-fourier", "sine-expansion error of e^{tA} against K"},
      {"kernel-eig", "Nystrom spectrum of the invariant covariance kernel"},
      {"qef", "quadratic-exponential functional with convergence over N"},
      {"oracle-compare", "determinant formula against the truncated Fock-space oracle"}};
  for (const auto& [name, help] : commands) app.add_subcommand(name, help);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kInvalidConfig;
  }

  Run run;
  run.subcommand = app.get_subcommands().front()->get_name();
  const auto start = std::chrono::steady_clock::now();
  std::filesystem::path out_path = *out_opt ? out_dir : "out";
  try {
    try {
      json doc = load_json(config_path);
      for (const std::string& s : overrides) apply_override(doc, s);
      if (*seed_opt) doc["seed"] = seed;
      if (*out_opt) doc["out_dir"] = out_dir;
      run.cfg = parse_config(doc);
      out_path = run.cfg.out_dir;
      doc.erase("out_dir");
      run.config = doc;
    } catch (const config_error&) {
      throw;
    } catch (const std::exception& e) {
      throw config_error(e.what());
    }
    if (run.subcommand == "check-model") check_model(run);
    else if (run.subcommand == "wiener-kl") wiener_kl(run);
    else if (run.subcommand == "expm-fourier") expm_fourier_cmd(run);
    else if (run.subcommand == "kernel-eig") kernel_eig_cmd(run);
    else if (run.subcommand == "qef") qef_cmd(run);
    else oracle_compare(run);
  } catch (const config_error& e) {
    fail(run, kInvalidConfig, "invalid_config", e.what());
  } catch (const infeasible_error& e) {
    fail(run, kInfeasible, "infeasible_qef", e.what());
    run.status = "infeasible";
    run.results["radius"] = num(e.radius());
  } catch (const tolerance_error& e) {
    fail(run, kTolerance, "numerical_tolerance", e.what());
  } catch (const std::invalid_argument& e) {
    fail(run, kInvalidConfig, "invalid_config", e.what());
  } catch (const std::domain_error& e) {
    fail(run, kInvalidConfig, "invalid_config", e.what());
  } catch (const std::exception& e) {
    fail(run, kInternal, "internal", e.what());
  }
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  json report;
  report["subcommand"] = run.subcommand;
  report["status"] = run.status;
  report["exit_code"] = run.exit_code;
  report["config"] = run.config;
  report["config_hash"] = content_hash(run.config);
  report["diagnostics"] = run.diagnostics;
  report["results"] = run.results;
  json files = json::array();
  for (const auto& [name, _] : run.csv) files.push_back(name);
  report["files"] = files;
  if (!run.error.is_null()) report["error"] = run.error;
  report["timing"] = {{"elapsed_seconds", elapsed}};
  try {
    for (const auto& [name, content] : run.csv) write_atomic(out_path / name, content);
    write_atomic(out_path / "report.json", report.dump(2) + "\n");
  } catch (const std::exception& e) {
    std::cerr << json({{"error", {{"category", "io"}, {"message", e.what()}}}}).dump() << "\n";
    return kInternal;
  }
  if (!run.error.is_null()) std::cerr << json({{"error", run.error}, {"exit_code", run.exit_code}}).dump() << "\n";
  return run.exit_code;
}
