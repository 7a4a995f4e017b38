#include "cbm/inference.hpp"
#include "cbm/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>

namespace cbm {

std::string_view to_string(Method method)
{
  switch (method) {
  case Method::NB: return "NB";
  case Method::BH: return "BH";
  case Method::BP: return "BP";
  }
  return "?";
}

std::optional<Method> parse_method(std::string_view name)
{
  std::string upper(name);
  std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
  if (upper == "NB") { return Method::NB; }
  if (upper == "BH") { return Method::BH; }
  if (upper == "BP") { return Method::BP; }
  return std::nullopt;
}

std::string to_json_line(DetectionOutcome const &outcome)
{
  auto opt = [](std::optional<double> const &x) { return x ? nlohmann::json(*x) : nlohmann::json(nullptr); };
  nlohmann::ordered_json j;
  j["method"] = std::string(to_string(outcome.method));
  j["success"] = outcome.success;
  j["lambda1"] = opt(outcome.lambda1);
  j["lambda_min_H"] = opt(outcome.lambda_min_H);
  j["overlap"] = opt(outcome.overlap);
  j["iterations"] = outcome.iterations;
  j["residual"] = opt(outcome.residual);
  j["seed"] = outcome.seed;
  return j.dump();
}

namespace {

constexpr double kClamp = 1.0 - 1e-12;

double clamped_atanh(double x) { return std::atanh(std::clamp(x, -kClamp, kClamp)); }

Labeling labels_from(Eigen::Ref<Eigen::VectorXd const> const &v)
{
  Labeling out;
  out.values.resize(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) { out.values[static_cast<std::size_t>(i)] = sign_label(v(i)); }
  return out;
}

} // namespace

// ---------------------------------------------------------------------------
// Spectral algorithms

DetectionOutcome algorithm1(CbmInstance const &instance, SolverConfig const &cfg)
{
  DetectionOutcome out;
  out.method = Method::NB;
  out.seed = cfg.seed;
  if (instance.m() == 0) {
    out.reason = "graph has no edges";
    return out;
  }
  OperatorBundle const ops(instance);
  auto const           Bp = build_bprime<double>(ops);
  auto const           result = power_leading(Bp, cfg);

  if (auto const *fail = std::get_if<NoRealLeader>(&result)) {
    out.iterations = fail->iterations;
    out.reason = "no real leading eigenvalue (modulus estimate " + format_double(fail->modulus_estimate) + ")";
    return out;
  }
  auto const &eig = std::get<EigenResult>(result);
  out.lambda1 = eig.value;
  out.iterations = eig.iterations;
  out.residual = eig.residual;
  out.converged = eig.converged;

  double const threshold = std::sqrt(empirical_alpha(instance));
  if (!(eig.value > threshold)) {
    out.reason = "leading eigenvalue " + format_double(eig.value) + " not above sqrt(alpha) = " +
                 format_double(threshold);
    return out;
  }
  out.success = true;
  out.labels = labels_from(eig.vector.tail(ops.n()));
  return out;
}

DetectionOutcome algorithm2(CbmInstance const &instance, SolverConfig const &cfg, std::optional<double> x)
{
  DetectionOutcome out;
  out.method = Method::BH;
  out.seed = cfg.seed;
  if (instance.m() == 0 && !x) {
    out.reason = "graph has no edges";
    return out;
  }
  OperatorBundle const ops(instance);
  auto const           H = build_bethe_hessian<double>(ops, x.value_or(std::sqrt(empirical_alpha(instance))));
  auto const           eig = smallest_symmetric(H, cfg);
  out.lambda_min_H = eig.value;
  out.iterations = eig.iterations;
  out.residual = eig.residual;
  out.converged = eig.converged;

  // The Rayleigh quotient bounds the minimum from above, so a negative value
  // certifies a negative eigenvalue even before the residual contract is met.
  // Values within tol of zero count as failure.
  if (!(eig.value < -cfg.tol)) {
    out.reason = "smallest eigenvalue of H is not negative";
    return out;
  }
  out.success = true;
  out.labels = labels_from(eig.vector);
  return out;
}

// ---------------------------------------------------------------------------
// Belief propagation

BeliefPropagation::BeliefPropagation(CbmInstance const &instance, double beta0)
  : ops_(instance), index_(ops_.J)
{
  state_.beta0 = beta0;
  coupling_.resize(static_cast<std::size_t>(index_.size()));
  for (int k = 0; k < index_.size(); ++k) {
    coupling_[static_cast<std::size_t>(k)] = std::tanh(beta0 * ops_.J.valuePtr()[k]);
  }
  state_.messages.assign(coupling_.size(), 0.0);
  scratch_.resize(coupling_.size());
}

void BeliefPropagation::init_uniform(std::uint64_t seed, double scale)
{
  CounterRng rng(derive_seed(seed, "bp-init"));
  for (auto &m : state_.messages) { m = scale * (2.0 * rng.uniform() - 1.0); }
  state_.iterations = 0;
}

void BeliefPropagation::set_messages(std::vector<double> messages)
{
  if (messages.size() != state_.messages.size()) { throw std::invalid_argument("message count mismatch"); }
  state_.messages = std::move(messages);
}

// cavity_terms[k] = atanh(tanh(beta0 J) m_{head(k) -> tail(k)}), i.e. the
// contribution flowing into tail(k) along edge k reversed; totals are per node sums.
void BeliefPropagation::fields(std::vector<double> &cavity_terms, Eigen::VectorXd &totals) const
{
  totals.setZero(ops_.n());
  for (int k = 0; k < index_.size(); ++k) {
    auto const   ku = static_cast<std::size_t>(k);
    double const t =
      clamped_atanh(coupling_[ku] * state_.messages[static_cast<std::size_t>(index_.reverse(k))]);
    cavity_terms[ku] = t;
    totals(index_.tail(k)) += t;
  }
}

double BeliefPropagation::sweep(double damping)
{
  Eigen::VectorXd totals;
  fields(scratch_, totals);
  double max_delta = 0.0;
  for (int k = 0; k < index_.size(); ++k) {
    auto const   ku = static_cast<std::size_t>(k);
    double const update = std::tanh(totals(index_.tail(k)) - scratch_[ku]);
    double const next = damping * state_.messages[ku] + (1.0 - damping) * update;
    max_delta = std::max(max_delta, std::abs(next - state_.messages[ku]));
    state_.messages[ku] = next;
  }
  ++state_.iterations;
  state_.max_delta = max_delta;
  return max_delta;
}

Eigen::VectorXd BeliefPropagation::marginals() const
{
  std::vector<double> terms(coupling_.size());
  Eigen::VectorXd     totals;
  fields(terms, totals);
  return totals.array().tanh().matrix();
}

DetectionOutcome bp_run(CbmInstance const &instance, double epsilon_assumed, BpConfig const &cfg)
{
  if (!(epsilon_assumed > 0.0 && epsilon_assumed < 0.5)) {
    throw std::invalid_argument("bp_run: epsilon must lie in (0, 0.5)");
  }
  BeliefPropagation bp(instance, beta0(epsilon_assumed));
  bp.init_uniform(cfg.seed, cfg.init_scale);

  DetectionOutcome out;
  out.method = Method::BP;
  out.seed = cfg.seed;
  for (int s = 0; s < cfg.max_sweeps; ++s) {
    if (bp.sweep(cfg.damping) < cfg.tol) {
      out.converged = true;
      break;
    }
  }
  out.iterations = bp.state().iterations;
  out.residual = bp.state().max_delta;
  out.success = true;
  out.labels = labels_from(bp.marginals());
  return out;
}

// ---------------------------------------------------------------------------
// Population dynamics

void validate(PopDynConfig const &cfg)
{
  if (!(cfg.alpha > 0.0)) { throw std::invalid_argument("popdyn: alpha must be positive"); }
  if (!cfg.beta0_override && !(cfg.epsilon > 0.0 && cfg.epsilon < 0.5)) {
    throw std::invalid_argument("popdyn: epsilon must lie in (0, 0.5)");
  }
  if (cfg.pop_size < 100) { throw std::invalid_argument("popdyn: pop_size must be at least 100"); }
  if (cfg.equilibration_sweeps < 1 || cfg.measurement_sweeps < 1) {
    throw std::invalid_argument("popdyn: sweep counts must be positive");
  }
}

double population_dynamics(PopDynConfig const &cfg)
{
  validate(cfg);
  double const b0 = cfg.beta0_override.value_or(cfg.epsilon > 0.0 ? beta0(cfg.epsilon) : 0.0);
  double const t_plus = std::tanh(b0);

  CounterRng                             rng(derive_seed(cfg.seed, "popdyn"));
  std::poisson_distribution<int>         degree(cfg.alpha);
  std::uniform_int_distribution<std::size_t> pick(0, static_cast<std::size_t>(cfg.pop_size) - 1);

  std::vector<double> pop(static_cast<std::size_t>(cfg.pop_size));
  for (auto &m : pop) { m = 0.1 * (2.0 * rng.uniform() - 1.0); }

  // Gauge sigma = +1: couplings are +1 with probability 1 - epsilon.
  auto field = [&](int d) {
    double h = 0.0;
    for (int k = 0; k < d; ++k) {
      double const coupling = rng.uniform() < cfg.epsilon ? -t_plus : t_plus;
      h += clamped_atanh(coupling * pop[pick(rng)]);
    }
    return h;
  };
  // Excess degree of an Erdos-Renyi graph is again Poisson(alpha).
  auto sweep = [&] {
    for (auto &slot : pop) { slot = std::tanh(field(degree(rng))); }
  };

  for (int s = 0; s < cfg.equilibration_sweeps; ++s) { sweep(); }

  double positive = 0.0;
  double total = 0.0;
  for (int s = 0; s < cfg.measurement_sweeps; ++s) {
    sweep();
    for (int r = 0; r < cfg.pop_size; ++r) {
      double const marginal = std::tanh(field(degree(rng))); // full degree, also Poisson(alpha)
      positive += marginal > 0.0 ? 1.0 : (marginal == 0.0 ? 0.5 : 0.0);
      total += 1.0;
    }
  }
  double const p = positive / total;
  return 2.0 * (std::max(p, 1.0 - p) - 0.5);
}

// ---------------------------------------------------------------------------

DetectionOutcome detect(CbmInstance const &instance, Method method, DetectOptions const &options)
{
  DetectionOutcome out;
  switch (method) {
  case Method::NB: out = algorithm1(instance, options.solver); break;
  case Method::BH: out = algorithm2(instance, options.solver, options.bethe_x); break;
  case Method::BP:
    if (!options.epsilon) { throw std::invalid_argument("BP requires the noise level epsilon"); }
    out = bp_run(instance, *options.epsilon, options.bp);
    break;
  }
  if (out.labels && instance.sigma.size() == out.labels->size()) {
    out.overlap = overlap(instance.truth(), *out.labels);
  }
  return out;
}

} // namespace cbm
