#pragma once

#include <atomic>
#include <chrono>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include <json.hpp>

#include "sclasso/estimators.hpp"
#include "sclasso/synthetic.hpp"
#include "sclasso/version.hpp"

namespace sclasso {

struct BenchConfig {
  SyntheticSpec base;             // base.seed anchors the per-replication seeds
  int reps = 50;
  std::vector<Method> methods;    // empty selects every method
  int jobs = 0;                   // 0 picks the hardware concurrency
  int grid_T = 100;
  double grid_delta = 2.0;
  int cv_folds = 5;
  double eps = 1e-4;              // gap tolerance for the per-grid-point fits

  void validate() const {
    base.validate();
    if (reps < 1) throw std::invalid_argument("bench: reps must be >= 1");
    if (grid_T < 1 || !(grid_delta > 0.0)) throw std::invalid_argument("bench: bad grid");
    if (cv_folds < 2) throw std::invalid_argument("bench: need at least 2 folds");
    if (!(eps > 0.0)) throw std::invalid_argument("bench: eps must be positive");
  }
};

struct BenchOutcome {
  std::vector<nlohmann::json> records;
  bool degenerate = false;  // at least one record carries an error
};

inline std::vector<Method> all_methods() {
  return {Method::Oracle, Method::ScCv,  Method::ScLs,   Method::LassoCv, Method::LassoLs,
          Method::LassoUniversal, Method::Rcv, Method::Dicker, Method::ScaledLasso};
}

inline nlohmann::json bench_metadata(const BenchConfig& cfg) {
  std::vector<std::string> codes;
  for (Method m : cfg.methods.empty() ? all_methods() : cfg.methods)
    codes.emplace_back(method_code(m));
  return {{"type", "metadata"},
          {"tool", "sclasso"},
          {"version", kVersion},
          {"command", "sigma-bench"},
          {"n", cfg.base.n},
          {"p", cfg.base.p},
          {"rho", cfg.base.rho},
          {"snr", cfg.base.snr},
          {"s", cfg.base.s},
          {"sigma_star", cfg.base.sigma_star},
          {"seed", cfg.base.seed},
          {"reps", cfg.reps},
          {"methods", codes},
          {"grid", {{"T", cfg.grid_T}, {"delta", cfg.grid_delta}}},
          {"cv_folds", cfg.cv_folds},
          {"eps", cfg.eps},
          {"sz_lambda", "cross-validated over the concomitant geometric grid"}};
}

namespace detail {

inline NoiseEstimate run_method(const SyntheticData& inst, Method m, const BenchConfig& cfg,
                                std::uint64_t rep_seed, double* gap, bool* converged) {
  CvConfig cv;
  cv.folds = cfg.cv_folds;
  cv.grid.T = cfg.grid_T;
  cv.grid.delta = cfg.grid_delta;
  cv.seed = mix_seed(rep_seed, 100 + static_cast<std::uint64_t>(m));
  switch (m) {
    case Method::Oracle:
      return oracle_sigma(inst.data, inst.support);
    case Method::ScCv: {
      const CvSelection sel = cv_select(inst.data, cv, CvFamily::SmoothedConcomitant, cfg.eps);
      *gap = sel.final_gap;
      *converged = sel.final_converged;
      return sel.estimate;
    }
    case Method::ScLs: {
      const CvSelection sel = cv_select(inst.data, cv, CvFamily::SmoothedConcomitant, cfg.eps);
      *gap = sel.final_gap;
      *converged = sel.final_converged;
      NoiseEstimate est = ls_refit_sigma(inst.data, sel.support, Method::ScLs);
      est.lambda_selected = sel.lambda_cv;
      return est;
    }
    case Method::LassoCv: {
      const CvSelection sel = cv_select(inst.data, cv, CvFamily::Lasso, cfg.eps);
      *gap = sel.final_gap;
      *converged = sel.final_converged;
      return sel.estimate;
    }
    case Method::LassoLs: {
      const CvSelection sel = cv_select(inst.data, cv, CvFamily::Lasso, cfg.eps);
      *gap = sel.final_gap;
      *converged = sel.final_converged;
      NoiseEstimate est = ls_refit_sigma(inst.data, sel.support, Method::LassoLs);
      est.lambda_selected = sel.lambda_cv;
      return est;
    }
    case Method::LassoUniversal:
      return universal_lasso_sigma(inst.data, cfg.eps);
    case Method::Rcv:
      return rcv_sigma(inst.data, cv, mix_seed(rep_seed, 200));
    case Method::Dicker:
      return dicker_sigma(inst.data);
    case Method::ScaledLasso: {
      const CvSelection sel = scaled_lasso_cv(inst.data, cv, -1.0, 1e-4, 100, cfg.eps);
      return sel.estimate;
    }
  }
  throw std::logic_error("bench: unknown method");
}

}  // namespace detail

/// Run the replication study. Replications execute concurrently up to `jobs`
/// workers; every record depends only on (seed, rep index), so the output is
/// identical for any job count apart from the wall_time_ms fields.
inline BenchOutcome run_sigma_bench(const BenchConfig& cfg) {
  cfg.validate();
  const std::vector<Method> methods = cfg.methods.empty() ? all_methods() : cfg.methods;
  const int jobs = std::max(1, cfg.jobs > 0 ? cfg.jobs
                                            : static_cast<int>(std::thread::hardware_concurrency()));

  std::vector<std::vector<nlohmann::json>> per_rep(static_cast<std::size_t>(cfg.reps));
  std::atomic<int> next_rep{0};
  std::atomic<bool> degenerate{false};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  const auto worker = [&]() {
    while (true) {
      const int rep = next_rep.fetch_add(1);
      if (rep >= cfg.reps) return;
      try {
        const std::uint64_t rep_seed = mix_seed(cfg.base.seed, static_cast<std::uint64_t>(rep));
        SyntheticSpec spec = cfg.base;
        spec.seed = rep_seed;
        const SyntheticData inst = generate(spec);
        for (Method m : methods) {
          nlohmann::json rec = {{"type", "estimate"},
                                {"method", method_code(m)},
                                {"rep", rep},
                                {"n", cfg.base.n},
                                {"p", cfg.base.p},
                                {"rho", cfg.base.rho},
                                {"snr", cfg.base.snr},
                                {"s", cfg.base.s},
                                {"seed", rep_seed},
                                {"sigma_star", cfg.base.sigma_star}};
          const auto t0 = std::chrono::steady_clock::now();
          try {
            double gap = 0.0;
            bool converged = true;
            const NoiseEstimate est = detail::run_method(inst, m, cfg, rep_seed, &gap, &converged);
            rec["sigma_hat"] = est.sigma;
            rec["support_size"] = est.support_size;
            if (est.lambda_selected)
              rec["lambda"] = *est.lambda_selected;
            else
              rec["lambda"] = nullptr;
            rec["converged"] = converged;
            rec["gap"] = gap;
            rec["clamped"] = est.clamped;
          } catch (const DegreesOfFreedomError& e) {
            rec["sigma_hat"] = nullptr;
            rec["error"] = e.what();
            rec["error_class"] = "degrees_of_freedom";
            degenerate = true;
          } catch (const DegenerateDesignError& e) {
            rec["sigma_hat"] = nullptr;
            rec["error"] = e.what();
            rec["error_class"] = "degenerate_design";
            degenerate = true;
          }
          rec["wall_time_ms"] = std::chrono::duration<double, std::milli>(
                                    std::chrono::steady_clock::now() - t0)
                                    .count();
          per_rep[static_cast<std::size_t>(rep)].push_back(std::move(rec));
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };

  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(jobs));
    for (int i = 0; i < jobs; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  BenchOutcome out;
  out.degenerate = degenerate.load();
  for (auto& recs : per_rep)
    for (auto& r : recs) out.records.push_back(std::move(r));
  return out;
}

}  // namespace sclasso
