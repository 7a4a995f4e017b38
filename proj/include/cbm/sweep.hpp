#pragma once

#include "cbm/inference.hpp"

#include <iosfwd>
#include <vector>

namespace cbm {

struct SweepSpec
{
  std::int64_t        n = 10000;
  double              epsilon = 0.25;
  std::vector<double> alphas;
  int                 trials = 20;
  std::vector<Method> methods;
  std::uint64_t       seed = 0;
  int                 jobs = 1;
  SolverConfig        solver;
};

void validate(SweepSpec const &spec);

/// Evenly spaced grid min, min + step, ... up to max (inclusive within step/1e6).
std::vector<double> alpha_grid(double min, double max, double step);

struct TrialResult
{
  std::size_t                   alpha_index = 0;
  int                           trial = 0;
  std::uint64_t                 seed = 0;
  std::vector<DetectionOutcome> outcomes; // one per spec.methods entry
};

struct SweepRow
{
  double alpha = 0.0;
  Method method = Method::NB;
  double mean_overlap = 0.0; // failed detections count as overlap 0
  double stderr_ = 0.0;
  double success_rate = 0.0;
  int    trials = 0;
};

/// Seed of trial t at grid point a: hash(master, a, t).
std::uint64_t trial_seed(std::uint64_t master, std::size_t alpha_index, int trial);

/// Runs every (alpha, trial) pair on a bounded worker pool. Results are
/// ordered by (alpha_index, trial) regardless of scheduling.
std::vector<TrialResult> run_trials(SweepSpec const &spec);

/// Rows sorted by (alpha, method).
std::vector<SweepRow> aggregate(SweepSpec const &spec, std::vector<TrialResult> const &trials);

std::vector<SweepRow> run_sweep(SweepSpec const &spec);

/// Header: alpha,method,mean_overlap,stderr,success_rate,trials
void write_sweep_csv(std::vector<SweepRow> const &rows, std::ostream &out);

} // namespace cbm
