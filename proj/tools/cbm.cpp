// Command-line front end: gen, detect, sweep, spectrum, popdyn.
//
// Exit codes: 0 success, 2 typed detection failure, 1 fault.

#include "cbm/eigensolvers.hpp"
#include "cbm/inference.hpp"
#include "cbm/model.hpp"
#include "cbm/operators.hpp"
#include "cbm/rng.hpp"
#include "cbm/sweep.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

namespace {

using namespace cbm;

constexpr int kExitOk = 0;
constexpr int kExitFault = 1;
constexpr int kExitNoDetection = 2;

int jobs_from(std::optional<int> const &flag)
{
  if (flag) { return *flag; }
  if (char const *env = std::getenv("CBM_JOBS")) {
    int const v = std::atoi(env);
    if (v >= 1) { return v; }
  }
  return 1;
}

std::vector<Method> parse_methods(std::vector<std::string> const &names)
{
  std::vector<Method> methods;
  for (auto const &name : names) {
    if (name.empty()) { continue; }
    auto m = parse_method(name);
    if (!m) { throw std::invalid_argument("unknown method '" + name + "' (expected NB, BH or BP)"); }
    methods.push_back(*m);
  }
  if (methods.empty()) { throw std::invalid_argument("no methods given"); }
  return methods;
}

SolverConfig solver_from(std::optional<std::int64_t> max_iter, std::optional<double> tol, std::uint64_t seed)
{
  SolverConfig cfg;
  cfg.seed = seed;
  if (max_iter) { cfg.max_iter = *max_iter; }
  if (tol) { cfg.tol = *tol; }
  return cfg;
}

std::ofstream open_out(std::string const &path)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) { throw std::runtime_error("cannot open " + path + " for writing"); }
  return out;
}

// --- gen -------------------------------------------------------------------

struct GenArgs
{
  std::int64_t  n = 0;
  double        alpha = 0.0;
  double        epsilon = 0.0;
  std::uint64_t seed = 0;
  std::string   out;
};

int cmd_gen(GenArgs const &a)
{
  auto const inst = generate(CbmParams{a.n, a.alpha, a.epsilon, a.seed});
  write_instance(inst, std::filesystem::path(a.out));
  std::cout << "n=" << inst.n() << " m=" << inst.m() << " alpha_empirical=" << format_double(empirical_alpha(inst))
            << '\n';
  return kExitOk;
}

// --- detect ----------------------------------------------------------------

struct DetectArgs
{
  std::string                 in;
  std::vector<std::string>    methods{"NB"};
  std::optional<double>       epsilon;
  std::uint64_t               seed = 0;
  std::optional<std::int64_t> max_iter;
  std::optional<double>       tol;
};

int cmd_detect(DetectArgs const &a)
{
  auto const methods = parse_methods(a.methods);
  for (auto m : methods) {
    if (m == Method::BP && !a.epsilon) { throw std::invalid_argument("BP requires --epsilon"); }
  }
  auto const    inst = read_instance(std::filesystem::path(a.in));
  DetectOptions options;
  options.solver = solver_from(a.max_iter, a.tol, a.seed);
  options.bp.seed = a.seed;
  options.epsilon = a.epsilon;

  int code = kExitOk;
  for (auto m : methods) {
    auto const outcome = detect(inst, m, options);
    std::cout << to_json_line(outcome) << '\n';
    if (!outcome.success) {
      std::cerr << to_string(m) << ": " << outcome.reason << '\n';
      code = kExitNoDetection;
    }
  }
  return code;
}

// --- sweep -----------------------------------------------------------------

struct SweepArgs
{
  std::int64_t                n = 10000;
  double                      epsilon = 0.25;
  std::vector<double>         alpha;
  std::optional<double>       alpha_min, alpha_max;
  double                      alpha_step = 0.5;
  int                         trials = 20;
  std::vector<std::string>    methods{"NB", "BH"};
  std::uint64_t               seed = 0;
  std::string                 out;
  std::optional<int>          jobs;
  std::optional<std::int64_t> max_iter;
  std::optional<double>       tol;
};

int cmd_sweep(SweepArgs const &a)
{
  SweepSpec spec;
  spec.n = a.n;
  spec.epsilon = a.epsilon;
  if (!a.alpha.empty()) {
    spec.alphas = a.alpha;
  } else if (a.alpha_min && a.alpha_max) {
    spec.alphas = alpha_grid(*a.alpha_min, *a.alpha_max, a.alpha_step);
  } else {
    throw std::invalid_argument("give --alpha or both --alpha-min and --alpha-max");
  }
  spec.trials = a.trials;
  spec.methods = parse_methods(a.methods);
  spec.seed = a.seed;
  spec.jobs = jobs_from(a.jobs);
  spec.solver = solver_from(a.max_iter, a.tol, a.seed);
  validate(spec);

  auto out = open_out(a.out);
  auto const rows = run_sweep(spec);
  write_sweep_csv(rows, out);
  if (!out) { throw std::runtime_error("error writing " + a.out); }
  write_sweep_csv(rows, std::cout);
  return kExitOk;
}

// --- spectrum --------------------------------------------------------------

struct SpectrumArgs
{
  std::optional<std::string>   in;
  std::optional<std::int64_t>  n;
  std::optional<double>        alpha;
  double                       epsilon = 0.25;
  std::uint64_t                seed = 0;
  std::string                  op = "nb";
  std::optional<std::string>   out;
  std::optional<std::string>   svg;
};

int cmd_spectrum(SpectrumArgs const &a)
{
  CbmInstance inst;
  if (a.in) {
    inst = read_instance(std::filesystem::path(*a.in));
  } else if (a.n && a.alpha) {
    inst = generate(CbmParams{*a.n, *a.alpha, a.epsilon, a.seed});
  } else {
    throw std::invalid_argument("give --in or both --n and --alpha");
  }

  double const   alpha_emp = empirical_alpha(inst);
  double const   radius = std::sqrt(alpha_emp);
  OperatorBundle ops(inst);
  Spectrum       spectrum;
  nlohmann::ordered_json summary;
  summary["operator"] = a.op;
  summary["n"] = inst.n();
  summary["m"] = inst.m();
  summary["alpha_empirical"] = alpha_emp;

  if (a.op == "nb") {
    if (2 * inst.n() > kDenseCap) {
      throw std::length_error("B' has dimension " + std::to_string(2 * inst.n()) + " > " + std::to_string(kDenseCap) +
                              "; use a smaller --n");
    }
    spectrum = dense_spectrum(build_bprime<double>(ops).toDense());
    auto const sorted = spectrum.by_modulus();
    constexpr double margin = 0.2;
    std::size_t      outside = 0;
    for (auto const &z : sorted) { outside += std::abs(z) > radius + margin; }
    summary["radius"] = radius;
    summary["max_modulus"] = sorted.empty() ? 0.0 : std::abs(sorted.front());
    summary["leading_re"] = sorted.empty() ? 0.0 : sorted.front().real();
    summary["leading_im"] = sorted.empty() ? 0.0 : sorted.front().imag();
    summary["count_outside_radius_plus_0.2"] = outside;
  } else if (a.op == "bethe") {
    if (inst.n() > kDenseCap) {
      throw std::length_error("H has dimension " + std::to_string(inst.n()) + " > " + std::to_string(kDenseCap) +
                              "; use a smaller --n");
    }
    auto const values = dense_symmetric_eigenvalues(build_bethe_hessian<double>(ops, radius).toDense());
    std::size_t negative = 0;
    for (Eigen::Index i = 0; i < values.size(); ++i) {
      spectrum.eigenvalues.emplace_back(values(i), 0.0);
      negative += values(i) < 0.0;
    }
    summary["x"] = radius;
    summary["min_eigenvalue"] = values.size() ? values(0) : 0.0;
    summary["negative_count"] = negative;
  } else {
    throw std::invalid_argument("--operator must be 'nb' or 'bethe'");
  }

  if (a.out) {
    auto out = open_out(*a.out);
    write_spectrum_csv(spectrum, out);
    std::cout << summary.dump() << '\n';
  } else {
    write_spectrum_csv(spectrum, std::cout);
    std::cerr << summary.dump() << '\n';
  }
  if (a.svg) {
    auto svg = open_out(*a.svg);
    write_spectrum_svg(spectrum, radius, svg);
  }
  return kExitOk;
}

// --- popdyn ----------------------------------------------------------------

struct PopDynArgs
{
  double             alpha = 0.0;
  double             epsilon = 0.0;
  int                pop_size = 10000;
  int                sweeps = 200;
  int                trials = 5;
  std::uint64_t      seed = 0;
  std::optional<int> jobs;
};

int cmd_popdyn(PopDynArgs const &a)
{
  if (a.trials < 1) { throw std::invalid_argument("--trials must be at least 1"); }
  std::vector<double> estimates(static_cast<std::size_t>(a.trials));
  std::vector<PopDynConfig> configs;
  for (int r = 0; r < a.trials; ++r) {
    PopDynConfig cfg;
    cfg.alpha = a.alpha;
    cfg.epsilon = a.epsilon;
    cfg.pop_size = a.pop_size;
    cfg.equilibration_sweeps = a.sweeps;
    cfg.measurement_sweeps = a.sweeps;
    cfg.seed = derive_seed(a.seed, "replica", static_cast<std::uint64_t>(r));
    validate(cfg);
    configs.push_back(cfg);
  }
  {
    int const                 workers = std::min(jobs_from(a.jobs), a.trials);
    std::atomic<int>          next{0};
    std::exception_ptr        failure;
    std::mutex                failure_mutex;
    auto worker = [&] {
      for (int r = next++; r < a.trials; r = next++) {
        try {
          estimates[static_cast<std::size_t>(r)] = population_dynamics(configs[static_cast<std::size_t>(r)]);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) { failure = std::current_exception(); }
        }
      }
    };
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) { pool.emplace_back(worker); }
    pool.clear();
    if (failure) { std::rethrow_exception(failure); }
  }

  double mean = 0.0;
  for (double e : estimates) { mean += e; }
  mean /= static_cast<double>(estimates.size());
  double se = 0.0;
  if (estimates.size() > 1) {
    double ss = 0.0;
    for (double e : estimates) { ss += (e - mean) * (e - mean); }
    se = std::sqrt(ss / static_cast<double>(estimates.size() - 1) / static_cast<double>(estimates.size()));
  }
  nlohmann::ordered_json j;
  j["estimate"] = mean;
  j["stderr"] = se;
  j["replicas"] = estimates;
  j["alpha"] = a.alpha;
  j["epsilon"] = a.epsilon;
  j["beta0"] = beta0(a.epsilon);
  j["pop_size"] = a.pop_size;
  j["sweeps"] = a.sweeps;
  j["seed"] = a.seed;
  std::cout << j.dump() << '\n';
  return kExitOk;
}

} // namespace

int main(int argc, char **argv)
{
  CLI::App app{"Spectral detection in the censored block model"};
  app.require_subcommand(1);

  GenArgs gen;
  auto   *gen_cmd = app.add_subcommand("gen", "Generate a censored block model instance");
  gen_cmd->add_option("--n", gen.n, "Number of nodes")->required();
  gen_cmd->add_option("--alpha", gen.alpha, "Average degree")->required();
  gen_cmd->add_option("--epsilon", gen.epsilon, "Edge-sign noise in [0, 0.5]")->required();
  gen_cmd->add_option("--seed", gen.seed, "Master seed");
  gen_cmd->add_option("--out", gen.out, "Instance file to write")->required();

  DetectArgs det;
  auto      *det_cmd = app.add_subcommand("detect", "Recover labels from an instance file");
  det_cmd->add_option("--in", det.in, "Instance file")->required();
  det_cmd->add_option("--methods", det.methods, "NB, BH and/or BP")->delimiter(',');
  det_cmd->add_option("--epsilon", det.epsilon, "Noise level assumed by BP");
  det_cmd->add_option("--seed", det.seed, "Solver / BP seed");
  det_cmd->add_option("--max-iter", det.max_iter, "Eigensolver iteration cap");
  det_cmd->add_option("--tol", det.tol, "Eigensolver relative residual tolerance");

  SweepArgs sw;
  auto     *sw_cmd = app.add_subcommand("sweep", "Mean overlap as a function of alpha");
  sw_cmd->add_option("--n", sw.n, "Number of nodes");
  sw_cmd->add_option("--epsilon", sw.epsilon, "Edge-sign noise");
  sw_cmd->add_option("--alpha", sw.alpha, "Explicit alpha list")->delimiter(',');
  sw_cmd->add_option("--alpha-min", sw.alpha_min, "Grid start");
  sw_cmd->add_option("--alpha-max", sw.alpha_max, "Grid end (inclusive)");
  sw_cmd->add_option("--alpha-step", sw.alpha_step, "Grid step");
  sw_cmd->add_option("--trials", sw.trials, "Instances per alpha");
  sw_cmd->add_option("--methods", sw.methods, "NB, BH and/or BP")->delimiter(',');
  sw_cmd->add_option("--seed", sw.seed, "Master seed");
  sw_cmd->add_option("--out", sw.out, "CSV output path")->required();
  sw_cmd->add_option("--jobs", sw.jobs, "Worker threads (default: $CBM_JOBS or 1)");
  sw_cmd->add_option("--max-iter", sw.max_iter, "Eigensolver iteration cap");
  sw_cmd->add_option("--tol", sw.tol, "Eigensolver relative residual tolerance");

  SpectrumArgs sp;
  auto        *sp_cmd = app.add_subcommand("spectrum", "Dense spectrum of B' or of the Bethe Hessian");
  sp_cmd->add_option("--in", sp.in, "Instance file");
  sp_cmd->add_option("--n", sp.n, "Generate: number of nodes");
  sp_cmd->add_option("--alpha", sp.alpha, "Generate: average degree");
  sp_cmd->add_option("--epsilon", sp.epsilon, "Generate: edge-sign noise");
  sp_cmd->add_option("--seed", sp.seed, "Generate: seed");
  sp_cmd->add_option("--operator", sp.op, "nb (B') or bethe (H at sqrt(alpha))");
  sp_cmd->add_option("--out", sp.out, "CSV output path (default: stdout)");
  sp_cmd->add_option("--svg", sp.svg, "SVG scatter output path");

  PopDynArgs pd;
  auto      *pd_cmd = app.add_subcommand("popdyn", "Asymptotic BP overlap by population dynamics");
  pd_cmd->add_option("--alpha", pd.alpha, "Average degree")->required();
  pd_cmd->add_option("--epsilon", pd.epsilon, "Edge-sign noise in (0, 0.5)")->required();
  pd_cmd->add_option("--pop-size", pd.pop_size, "Population size");
  pd_cmd->add_option("--sweeps", pd.sweeps, "Equilibration sweeps (measurement uses as many)");
  pd_cmd->add_option("--trials", pd.trials, "Independent replicas");
  pd_cmd->add_option("--seed", pd.seed, "Master seed");
  pd_cmd->add_option("--jobs", pd.jobs, "Worker threads (default: $CBM_JOBS or 1)");

  try {
    app.parse(argc, argv);
  } catch (CLI::CallForHelp const &e) {
    return app.exit(e);
  } catch (CLI::CallForAllHelp const &e) {
    return app.exit(e);
  } catch (CLI::ParseError const &e) {
    app.exit(e);
    return kExitFault;
  }

  try {
    if (gen_cmd->parsed()) { return cmd_gen(gen); }
    if (det_cmd->parsed()) { return cmd_detect(det); }
    if (sw_cmd->parsed()) { return cmd_sweep(sw); }
    if (sp_cmd->parsed()) { return cmd_spectrum(sp); }
    if (pd_cmd->parsed()) { return cmd_popdyn(pd); }
  } catch (std::exception const &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFault;
  }
  return kExitFault;
}
