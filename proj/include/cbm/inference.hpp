#pragma once

#include "cbm/eigensolvers.hpp"
#include "cbm/model.hpp"
#include "cbm/operators.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace cbm {

enum class Method
{
  NB, // non-backtracking operator B'
  BH, // Bethe Hessian H(sqrt(alpha))
  BP  // belief propagation
};

std::string_view        to_string(Method method);
std::optional<Method>   parse_method(std::string_view name);

struct DetectionOutcome
{
  Method                  method = Method::NB;
  bool                    success = false;
  std::optional<Labeling> labels;
  std::optional<double>   lambda1;
  std::optional<double>   lambda_min_H;
  std::optional<double>   overlap;
  std::int64_t            iterations = 0;
  std::optional<double>   residual;
  bool                    converged = false;
  std::uint64_t           seed = 0;
  std::string             reason; // why success is false
};

/// Single-line JSON object with fields method, success, lambda1, lambda_min_H,
/// overlap, iterations, residual, seed. Absent values are null.
std::string to_json_line(DetectionOutcome const &outcome);

struct BpConfig
{
  double        damping = 0.5;
  int           max_sweeps = 500;
  double        tol = 1e-6;
  double        init_scale = 0.1;
  std::uint64_t seed = 0;
};

/// Messages m_{i->j} in [-1, 1], indexed by DirectedEdgeIndex ordinals.
struct BpState
{
  std::vector<double> messages;
  double              beta0 = 0.0;
  int                 iterations = 0;
  double              max_delta = 0.0;
};

/// Loopy BP for the posterior exp(beta0 sum J_ij s_i s_j) in magnetization form:
///   m_{i->j} = tanh( sum_{k in di \ j} atanh( tanh(beta0 J_ki) m_{k->i} ) ).
class BeliefPropagation
{
public:
  BeliefPropagation(CbmInstance const &instance, double beta0);

  void init_uniform(std::uint64_t seed, double scale);
  void set_messages(std::vector<double> messages);

  /// One synchronous damped sweep; returns the largest message change.
  double sweep(double damping);

  Eigen::VectorXd marginals() const;
  BpState const  &state() const { return state_; }

private:
  void fields(std::vector<double> &cavity_terms, Eigen::VectorXd &totals) const;

  OperatorBundle      ops_;
  DirectedEdgeIndex   index_;
  std::vector<double> coupling_; // tanh(beta0 J) per directed edge
  BpState             state_;
  std::vector<double> scratch_;
};

struct PopDynConfig
{
  double                alpha = 0.0;
  double                epsilon = 0.0;
  int                   pop_size = 10000;
  int                   equilibration_sweeps = 200;
  int                   measurement_sweeps = 100;
  std::uint64_t         seed = 0;
  std::optional<double> beta0_override; // replaces beta0(epsilon) when set
};

void validate(PopDynConfig const &cfg);

/// Asymptotic BP overlap on the Poisson(alpha) tree in the gauge sigma = +1.
double population_dynamics(PopDynConfig const &cfg);

struct DetectOptions
{
  SolverConfig          solver;
  BpConfig              bp;
  std::optional<double> epsilon;        // required by BP
  std::optional<double> bethe_x;        // overrides sqrt(2m/n) for BH
};

DetectionOutcome algorithm1(CbmInstance const &instance, SolverConfig const &cfg);
DetectionOutcome algorithm2(CbmInstance const &instance, SolverConfig const &cfg,
                            std::optional<double> x = std::nullopt);
DetectionOutcome bp_run(CbmInstance const &instance, double epsilon_assumed, BpConfig const &cfg);

/// Dispatches to the method and fills `overlap` against the planted labels.
DetectionOutcome detect(CbmInstance const &instance, Method method, DetectOptions const &options);

} // namespace cbm
