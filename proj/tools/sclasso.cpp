#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sclasso/bench.hpp"
#include "sclasso/estimators.hpp"
#include "sclasso/io.hpp"
#include "sclasso/solver.hpp"
#include "sclasso/synthetic.hpp"
#include "sclasso/version.hpp"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitInputError = 1;
constexpr int kExitDegenerate = 2;

double resolve_sigma0(const sclasso::Dataset& ds, double requested) {
  if (requested > 0.0) return requested;
  return ds.y_norm / std::sqrt(static_cast<double>(ds.n())) * 1e-2;
}

const std::map<std::string, sclasso::Screening> kScreeningNames{
    {"none", sclasso::Screening::None},
    {"gap", sclasso::Screening::GapSafe},
    {"bound", sclasso::Screening::BoundSafe},
    {"gap++", sclasso::Screening::GapSafePlusPlus}};

std::string screening_name(sclasso::Screening mode) {
  for (const auto& [name, value] : kScreeningNames)
    if (value == mode) return name;
  return "?";
}

json metadata_record(const std::string& command, json config) {
  config["type"] = "metadata";
  config["tool"] = "sclasso";
  config["version"] = sclasso::kVersion;
  config["command"] = command;
  return config;
}

json fit_record(const sclasso::FitResult& fr, double lambda, double wall_ms) {
  json nonzeros = json::array();
  for (int j = 0; j < static_cast<int>(fr.beta.size()); ++j)
    if (fr.beta[j] != 0.0) nonzeros.push_back({j, fr.beta[j]});
  json trace = json::array();
  for (const auto& [sweep, fraction] : fr.screened_fraction_trace)
    trace.push_back({sweep, fraction});
  return {{"type", "fit"},
          {"method", "SC"},
          {"lambda", lambda},
          {"sigma_hat", fr.sigma},
          {"support_size", static_cast<int>(nonzeros.size())},
          {"gap", fr.gap},
          {"converged", fr.converged},
          {"sweeps", fr.sweeps},
          {"gap_checks", fr.gap_checks},
          {"screened_fraction_trace", trace},
          {"wall_time_ms", wall_ms},
          {"beta_nonzero", nonzeros}};
}

struct GenOptions {
  sclasso::SyntheticSpec spec;
  std::string out;
};

int run_gen(const GenOptions& opt) {
  namespace fs = std::filesystem;
  const sclasso::SyntheticData inst = sclasso::generate(opt.spec);
  fs::create_directories(opt.out);
  sclasso::save_csv(inst.data, (fs::path(opt.out) / "data.csv").string());

  json truth = metadata_record("gen", {{"n", opt.spec.n},
                                       {"p", opt.spec.p},
                                       {"rho", opt.spec.rho},
                                       {"snr", opt.spec.snr},
                                       {"s", opt.spec.s},
                                       {"sigma_star", opt.spec.sigma_star},
                                       {"seed", opt.spec.seed}});
  truth["support"] = inst.support;
  json beta = json::array();
  for (int j : inst.support) beta.push_back({j, inst.beta_star[j]});
  truth["beta_star_nonzero"] = beta;
  sclasso::save_results_json({truth}, (fs::path(opt.out) / "truth.json").string());
  return kExitOk;
}

struct SolveOptions {
  std::string data;
  double lambda = 0.0;
  double sigma0 = -1.0;
  double eps = 1e-6;
  sclasso::Screening screening = sclasso::Screening::GapSafe;
  int max_sweeps = 5000;
  int gap_check_every = 10;
  std::string out;
};

int run_solve(const SolveOptions& opt) {
  const sclasso::Dataset ds = sclasso::load_csv(opt.data);
  sclasso::SolverConfig cfg;
  cfg.lambda = opt.lambda;
  cfg.sigma0 = resolve_sigma0(ds, opt.sigma0);
  cfg.eps = opt.eps;
  cfg.max_sweeps = opt.max_sweeps;
  cfg.gap_check_every = opt.gap_check_every;
  cfg.screening = opt.screening;

  const auto t0 = std::chrono::steady_clock::now();
  const sclasso::FitResult fr = sclasso::fit(ds, cfg);
  const double ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

  std::vector<json> records{
      metadata_record("solve", {{"data", opt.data},
                                {"lambda", cfg.lambda},
                                {"sigma0", cfg.sigma0},
                                {"eps", cfg.eps},
                                {"max_sweeps", cfg.max_sweeps},
                                {"gap_check_every", cfg.gap_check_every},
                                {"screening", screening_name(cfg.screening)}}),
      fit_record(fr, cfg.lambda, ms)};
  sclasso::save_results_json(records, opt.out);
  return kExitOk;
}

struct PathOptions {
  SolveOptions solve;
  int T = 100;
  double delta = 2.0;
};

int run_path(const PathOptions& opt) {
  const sclasso::Dataset ds = sclasso::load_csv(opt.solve.data);
  sclasso::SolverConfig cfg;
  cfg.sigma0 = resolve_sigma0(ds, opt.solve.sigma0);
  cfg.eps = opt.solve.eps;
  cfg.max_sweeps = opt.solve.max_sweeps;
  cfg.gap_check_every = opt.solve.gap_check_every;
  cfg.screening = opt.solve.screening;
  cfg.lambda = 1.0;  // per-step values come from the grid

  sclasso::PathSpec spec;
  spec.T = opt.T;
  spec.delta = opt.delta;

  const sclasso::PathResult path = sclasso::fit_path(ds, cfg, spec);

  std::vector<json> records{
      metadata_record("path", {{"data", opt.solve.data},
                               {"sigma0", cfg.sigma0},
                               {"eps", cfg.eps},
                               {"max_sweeps", cfg.max_sweeps},
                               {"gap_check_every", cfg.gap_check_every},
                               {"screening", screening_name(cfg.screening)},
                               {"T", opt.T},
                               {"delta", opt.delta},
                               {"lambda_grid", path.lambdas},
                               {"total_wall_ms", path.total_wall_ms}})};
  for (std::size_t t = 0; t < path.fits.size(); ++t) {
    json rec = fit_record(path.fits[t], path.lambdas[t], 0.0);
    rec.erase("wall_time_ms");
    rec["t"] = static_cast<int>(t);
    switch (path.warm_start[t]) {
      case sclasso::WarmStart::Cold: rec["warm_start"] = "cold"; break;
      case sclasso::WarmStart::PreviousBeta: rec["warm_start"] = "previous-beta"; break;
      case sclasso::WarmStart::ActiveSetPresolve: rec["warm_start"] = "active-set-presolve"; break;
    }
    records.push_back(std::move(rec));
  }
  sclasso::save_results_json(records, opt.solve.out);
  return kExitOk;
}

struct CvOptions {
  std::string data;
  std::string method = "sc";
  int folds = 5;
  int T = 100;
  double delta = 2.0;
  double eps = 1e-4;
  std::uint64_t seed = 0;
  std::string out;
};

int run_cv(const CvOptions& opt) {
  const sclasso::Dataset ds = sclasso::load_csv(opt.data);
  sclasso::CvConfig cfg;
  cfg.folds = opt.folds;
  cfg.grid.T = opt.T;
  cfg.grid.delta = opt.delta;
  cfg.seed = opt.seed;

  const sclasso::CvFamily family = opt.method == "lasso" ? sclasso::CvFamily::Lasso
                                                         : sclasso::CvFamily::SmoothedConcomitant;
  std::vector<json> records{metadata_record("cv", {{"data", opt.data},
                                                   {"method", opt.method},
                                                   {"folds", opt.folds},
                                                   {"T", opt.T},
                                                   {"delta", opt.delta},
                                                   {"eps", opt.eps},
                                                   {"seed", opt.seed}})};
  try {
    const auto t0 = std::chrono::steady_clock::now();
    const sclasso::CvSelection sel = sclasso::cv_select(ds, cfg, family, opt.eps);
    const double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    json scores = json::array();
    for (std::size_t t = 0; t < sel.lambdas.size(); ++t)
      scores.push_back({{"lambda", sel.lambdas[t]}, {"cv_score", sel.cv_score[t]}});
    records.push_back({{"type", "cv"},
                       {"method", method_code(sel.estimate.method)},
                       {"lambda_cv", sel.lambda_cv},
                       {"sigma_hat", sel.estimate.sigma},
                       {"support_size", sel.estimate.support_size},
                       {"gap", sel.final_gap},
                       {"converged", sel.final_converged},
                       {"wall_time_ms", ms},
                       {"scores", scores}});
  } catch (const sclasso::DegreesOfFreedomError& e) {
    records.push_back({{"type", "error"}, {"error", e.what()},
                       {"error_class", "degrees_of_freedom"}});
    sclasso::save_results_json(records, opt.out);
    return kExitDegenerate;
  }
  sclasso::save_results_json(records, opt.out);
  return kExitOk;
}

struct BenchOptions {
  sclasso::BenchConfig cfg;
  std::string methods;  // comma-separated codes; empty keeps every method
  std::string out;
};

int run_sigma_bench_cmd(BenchOptions opt) {
  if (!opt.methods.empty()) {
    for (const auto& code : [](const std::string& csv) {
           std::vector<std::string> parts;
           std::size_t start = 0;
           while (start <= csv.size()) {
             const auto comma = csv.find(',', start);
             if (comma == std::string::npos) {
               parts.push_back(csv.substr(start));
               break;
             }
             parts.push_back(csv.substr(start, comma - start));
             start = comma + 1;
           }
           return parts;
         }(opt.methods)) {
      const auto m = sclasso::method_from_code(code);
      if (!m) throw CLI::ValidationError("--methods", "unknown method code '" + code + "'");
      opt.cfg.methods.push_back(*m);
    }
  }
  const sclasso::BenchOutcome outcome = sclasso::run_sigma_bench(opt.cfg);
  std::vector<json> records{sclasso::bench_metadata(opt.cfg)};
  records.back()["jobs"] = opt.cfg.jobs;
  for (const auto& rec : outcome.records) records.push_back(rec);
  sclasso::save_results_json(records, opt.out);
  return outcome.degenerate ? kExitDegenerate : kExitOk;
}

struct ScreenBenchOptions {
  std::string data;
  std::vector<double> eps_list{1e-4, 1e-6, 1e-8};
  std::vector<std::string> modes{"none", "gap", "bound", "gap++"};
  int T = 100;
  double delta = 2.0;
  double sigma0 = -1.0;
  int max_sweeps = 5000;
  std::string out;
};

int run_screen_bench(const ScreenBenchOptions& opt) {
  const sclasso::Dataset ds = sclasso::load_csv(opt.data);
  const double sigma0 = resolve_sigma0(ds, opt.sigma0);

  std::vector<json> records{metadata_record("screen-bench", {{"data", opt.data},
                                                             {"sigma0", sigma0},
                                                             {"T", opt.T},
                                                             {"delta", opt.delta},
                                                             {"eps_list", opt.eps_list},
                                                             {"modes", opt.modes},
                                                             {"max_sweeps", opt.max_sweeps}})};
  for (const std::string& mode_name : opt.modes) {
    const auto it = kScreeningNames.find(mode_name);
    if (it == kScreeningNames.end())
      throw CLI::ValidationError("--modes", "unknown screening mode '" + mode_name + "'");
    for (double eps : opt.eps_list) {
      sclasso::SolverConfig cfg;
      cfg.sigma0 = sigma0;
      cfg.eps = eps;
      cfg.max_sweeps = opt.max_sweeps;
      cfg.screening = it->second;
      cfg.lambda = 1.0;
      sclasso::PathSpec spec;
      spec.T = opt.T;
      spec.delta = opt.delta;
      const sclasso::PathResult path = sclasso::fit_path(ds, cfg, spec);
      json per_lambda = json::array();
      for (std::size_t t = 0; t < path.fits.size(); ++t) {
        const auto& fr = path.fits[t];
        json trace = json::array();
        for (const auto& [sweep, fraction] : fr.screened_fraction_trace)
          trace.push_back({sweep, fraction});
        per_lambda.push_back({{"lambda", path.lambdas[t]},
                              {"sweeps", fr.sweeps},
                              {"gap_checks", fr.gap_checks},
                              {"gap", fr.gap},
                              {"converged", fr.converged},
                              {"screened_fraction_trace", trace}});
      }
      records.push_back({{"type", "screen-bench"},
                         {"mode", mode_name},
                         {"eps", eps},
                         {"total_wall_ms", path.total_wall_ms},
                         {"per_lambda", per_lambda}});
    }
  }
  sclasso::save_results_json(records, opt.out);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Smoothed concomitant lasso solver and benchmark harness"};
  app.require_subcommand(1);

  GenOptions gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic dataset (CSV + ground truth)");
  gen_cmd->add_option("--n", gen.spec.n, "Rows")->required();
  gen_cmd->add_option("--p", gen.spec.p, "Features")->required();
  gen_cmd->add_option("--rho", gen.spec.rho, "AR(1) correlation");
  gen_cmd->add_option("--snr", gen.spec.snr, "Signal-to-noise ratio");
  gen_cmd->add_option("--s", gen.spec.s, "Fraction of coefficients forced to zero");
  gen_cmd->add_option("--sigma-star", gen.spec.sigma_star, "True noise level");
  gen_cmd->add_option("--seed", gen.spec.seed, "Seed");
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();

  SolveOptions solve;
  auto* solve_cmd = app.add_subcommand("solve", "Single-lambda fit with a gap certificate");
  solve_cmd->add_option("--data", solve.data, "Input CSV (y first column)")->required();
  solve_cmd->add_option("--lambda", solve.lambda, "Regularization strength")->required();
  solve_cmd->add_option("--sigma0", solve.sigma0, "Noise floor (default ||y||/sqrt(n) * 1e-2)");
  solve_cmd->add_option("--eps", solve.eps, "Duality-gap tolerance");
  solve_cmd->add_option("--screening", solve.screening, "Screening rule")
      ->transform(CLI::CheckedTransformer(kScreeningNames, CLI::ignore_case));
  solve_cmd->add_option("--max-sweeps", solve.max_sweeps, "Sweep budget");
  solve_cmd->add_option("--gap-check-every", solve.gap_check_every, "Sweeps between gap checks");
  solve_cmd->add_option("--out", solve.out, "Output JSON-lines path")->required();

  PathOptions path;
  auto* path_cmd = app.add_subcommand("path", "Warm-started fit over a geometric lambda grid");
  path_cmd->add_option("--data", path.solve.data, "Input CSV")->required();
  path_cmd->add_option("--sigma0", path.solve.sigma0, "Noise floor");
  path_cmd->add_option("--eps", path.solve.eps, "Duality-gap tolerance");
  path_cmd->add_option("--screening", path.solve.screening, "Screening rule")
      ->transform(CLI::CheckedTransformer(kScreeningNames, CLI::ignore_case));
  path_cmd->add_option("--max-sweeps", path.solve.max_sweeps, "Sweep budget per lambda");
  path_cmd->add_option("--gap-check-every", path.solve.gap_check_every,
                       "Sweeps between gap checks");
  path_cmd->add_option("--T", path.T, "Grid length");
  path_cmd->add_option("--delta", path.delta, "Grid decades");
  path_cmd->add_option("--out", path.solve.out, "Output JSON-lines path")->required();

  CvOptions cv;
  auto* cv_cmd = app.add_subcommand("cv", "Cross-validated lambda selection and noise estimate");
  cv_cmd->add_option("--data", cv.data, "Input CSV")->required();
  cv_cmd->add_option("--method", cv.method, "Model family")
      ->check(CLI::IsMember({"sc", "lasso"}));
  cv_cmd->add_option("--folds", cv.folds, "Fold count");
  cv_cmd->add_option("--T", cv.T, "Grid length");
  cv_cmd->add_option("--delta", cv.delta, "Grid decades");
  cv_cmd->add_option("--eps", cv.eps, "Per-fit gap tolerance");
  cv_cmd->add_option("--seed", cv.seed, "Fold shuffle seed");
  cv_cmd->add_option("--out", cv.out, "Output JSON-lines path")->required();

  BenchOptions bench;
  auto* bench_cmd = app.add_subcommand("sigma-bench",
                                       "Replicated noise-estimator comparison on synthetic data");
  bench_cmd->add_option("--n", bench.cfg.base.n, "Rows")->required();
  bench_cmd->add_option("--p", bench.cfg.base.p, "Features")->required();
  bench_cmd->add_option("--rho", bench.cfg.base.rho, "AR(1) correlation");
  bench_cmd->add_option("--snr", bench.cfg.base.snr, "Signal-to-noise ratio");
  bench_cmd->add_option("--s", bench.cfg.base.s, "Fraction of coefficients forced to zero");
  bench_cmd->add_option("--sigma-star", bench.cfg.base.sigma_star, "True noise level");
  bench_cmd->add_option("--reps", bench.cfg.reps, "Replications");
  bench_cmd->add_option("--methods", bench.methods, "Comma list of method codes (default all)");
  bench_cmd->add_option("--seed", bench.cfg.base.seed, "Base seed");
  bench_cmd->add_option("--jobs", bench.cfg.jobs, "Concurrent replications (0 = processors)");
  bench_cmd->add_option("--T", bench.cfg.grid_T, "CV grid length");
  bench_cmd->add_option("--delta", bench.cfg.grid_delta, "CV grid decades");
  bench_cmd->add_option("--folds", bench.cfg.cv_folds, "CV folds");
  bench_cmd->add_option("--eps", bench.cfg.eps, "Per-fit gap tolerance");
  bench_cmd->add_option("--out", bench.out, "Output JSON-lines path")->required();

  ScreenBenchOptions sb;
  auto* sb_cmd = app.add_subcommand("screen-bench",
                                    "Path wall time per screening mode per gap tolerance");
  sb_cmd->add_option("--data", sb.data, "Input CSV")->required();
  sb_cmd->add_option("--eps-list", sb.eps_list, "Gap tolerances")->delimiter(',');
  sb_cmd->add_option("--modes", sb.modes, "Screening modes")->delimiter(',');
  sb_cmd->add_option("--T", sb.T, "Grid length");
  sb_cmd->add_option("--delta", sb.delta, "Grid decades");
  sb_cmd->add_option("--sigma0", sb.sigma0, "Noise floor");
  sb_cmd->add_option("--max-sweeps", sb.max_sweeps, "Sweep budget per lambda");
  sb_cmd->add_option("--out", sb.out, "Output JSON-lines path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInputError;
  }

  try {
    if (*gen_cmd) return run_gen(gen);
    if (*solve_cmd) return run_solve(solve);
    if (*path_cmd) return run_path(path);
    if (*cv_cmd) return run_cv(cv);
    if (*bench_cmd) return run_sigma_bench_cmd(bench);
    if (*sb_cmd) return run_screen_bench(sb);
  } catch (const sclasso::ParseError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const CLI::ValidationError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const sclasso::DegreesOfFreedomError& e) {
    std::cerr << "degenerate: " << e.what() << "\n";
    return kExitDegenerate;
  } catch (const sclasso::DegenerateDesignError& e) {
    std::cerr << "degenerate: " << e.what() << "\n";
    return kExitDegenerate;
  } catch (const std::invalid_argument& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInputError;
  }
  return kExitInputError;
}
