#include "cbm/sweep.hpp"
#include "cbm/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <ostream>
#include <thread>

namespace cbm {

void validate(SweepSpec const &spec)
{
  if (spec.alphas.empty()) { throw std::invalid_argument("sweep: alpha grid is empty"); }
  if (spec.methods.empty()) { throw std::invalid_argument("sweep: no methods selected"); }
  if (spec.trials < 1) { throw std::invalid_argument("sweep: trials must be at least 1"); }
  if (spec.jobs < 1) { throw std::invalid_argument("sweep: jobs must be at least 1"); }
  for (double a : spec.alphas) { validate(CbmParams{spec.n, a, spec.epsilon, 0}); }
  bool const needs_bp = std::find(spec.methods.begin(), spec.methods.end(), Method::BP) != spec.methods.end();
  if (needs_bp && !(spec.epsilon > 0.0 && spec.epsilon < 0.5)) {
    throw std::invalid_argument("sweep: BP needs epsilon in (0, 0.5)");
  }
}

std::vector<double> alpha_grid(double min, double max, double step)
{
  if (!(step > 0.0) || !(max >= min)) { throw std::invalid_argument("alpha grid needs step > 0 and max >= min"); }
  std::vector<double> grid;
  for (std::int64_t k = 0;; ++k) {
    double const a = min + static_cast<double>(k) * step;
    if (a > max + step * 1e-6) { break; }
    grid.push_back(a);
  }
  return grid;
}

std::uint64_t trial_seed(std::uint64_t master, std::size_t alpha_index, int trial)
{
  return derive_seed(derive_seed(master, "sweep-alpha", alpha_index), "sweep-trial", static_cast<std::uint64_t>(trial));
}

std::vector<TrialResult> run_trials(SweepSpec const &spec)
{
  validate(spec);
  std::size_t const        total = spec.alphas.size() * static_cast<std::size_t>(spec.trials);
  std::vector<TrialResult> results(total);
  std::atomic<std::size_t> next{0};
  std::exception_ptr       failure;
  std::mutex               failure_mutex;

  auto worker = [&] {
    for (std::size_t job = next++; job < total; job = next++) {
      try {
        TrialResult &r = results[job];
        r.alpha_index = job / static_cast<std::size_t>(spec.trials);
        r.trial = static_cast<int>(job % static_cast<std::size_t>(spec.trials));
        r.seed = trial_seed(spec.seed, r.alpha_index, r.trial);
        auto const instance = generate(CbmParams{spec.n, spec.alphas[r.alpha_index], spec.epsilon, r.seed});

        DetectOptions options;
        options.solver = spec.solver;
        options.solver.seed = r.seed;
        options.bp.seed = r.seed;
        if (spec.epsilon > 0.0 && spec.epsilon < 0.5) { options.epsilon = spec.epsilon; }
        for (auto method : spec.methods) {
          auto outcome = detect(instance, method, options);
          outcome.labels.reset();
          r.outcomes.push_back(std::move(outcome));
        }
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) { failure = std::current_exception(); }
        next = total;
      }
    }
  };

  auto const workers = static_cast<std::size_t>(std::min<std::size_t>(static_cast<std::size_t>(spec.jobs), total));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) { pool.emplace_back(worker); }
  }
  if (failure) { std::rethrow_exception(failure); }
  return results;
}

std::vector<SweepRow> aggregate(SweepSpec const &spec, std::vector<TrialResult> const &trials)
{
  std::vector<SweepRow> rows;
  for (std::size_t a = 0; a < spec.alphas.size(); ++a) {
    for (std::size_t mi = 0; mi < spec.methods.size(); ++mi) {
      std::vector<double> values;
      int                 successes = 0;
      for (auto const &t : trials) {
        if (t.alpha_index != a) { continue; }
        auto const &o = t.outcomes[mi];
        values.push_back(o.success && o.overlap ? *o.overlap : 0.0);
        successes += o.success ? 1 : 0;
      }
      SweepRow row;
      row.alpha = spec.alphas[a];
      row.method = spec.methods[mi];
      row.trials = static_cast<int>(values.size());
      double sum = 0.0;
      for (double v : values) { sum += v; }
      row.mean_overlap = values.empty() ? 0.0 : sum / static_cast<double>(values.size());
      if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) { ss += (v - row.mean_overlap) * (v - row.mean_overlap); }
        double const var = ss / static_cast<double>(values.size() - 1);
        row.stderr_ = std::sqrt(var / static_cast<double>(values.size()));
      }
      row.success_rate = values.empty() ? 0.0 : static_cast<double>(successes) / static_cast<double>(values.size());
      rows.push_back(row);
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](SweepRow const &x, SweepRow const &y) {
    if (x.alpha != y.alpha) { return x.alpha < y.alpha; }
    return static_cast<int>(x.method) < static_cast<int>(y.method);
  });
  return rows;
}

std::vector<SweepRow> run_sweep(SweepSpec const &spec)
{
  return aggregate(spec, run_trials(spec));
}

void write_sweep_csv(std::vector<SweepRow> const &rows, std::ostream &out)
{
  out << "alpha,method,mean_overlap,stderr,success_rate,trials\n";
  for (auto const &r : rows) {
    out << format_double(r.alpha) << ',' << to_string(r.method) << ',' << format_double(r.mean_overlap) << ','
        << format_double(r.stderr_) << ',' << format_double(r.success_rate) << ',' << r.trials << '\n';
  }
}

} // namespace cbm
