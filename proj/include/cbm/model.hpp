#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace cbm {

/// Raised when an instance file cannot be parsed or violates the model invariants.
class FormatError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

struct CbmParams
{
  std::int64_t  n = 0;
  double        alpha = 0.0;   // target average degree
  double        epsilon = 0.0; // edge-sign noise level
  std::uint64_t seed = 0;

  bool operator==(CbmParams const &) const = default;
};

/// Throws std::invalid_argument if the parameters do not describe a valid model.
void validate(CbmParams const &params);

struct Edge
{
  std::int32_t i = 0; // i < j
  std::int32_t j = 0;
  std::int8_t  w = 1; // +1 or -1

  bool operator==(Edge const &) const = default;
};

/// A vector of +1/-1 node labels.
struct Labeling
{
  std::vector<std::int8_t> values;

  std::size_t size() const { return values.size(); }
  bool        operator==(Labeling const &) const = default;
};

struct CbmInstance
{
  CbmParams         params;
  std::vector<std::int8_t> sigma; // planted labels
  std::vector<Edge> edges;

  std::int64_t n() const { return params.n; }
  std::int64_t m() const { return static_cast<std::int64_t>(edges.size()); }
  Labeling     truth() const { return Labeling{sigma}; }

  bool operator==(CbmInstance const &) const = default;
};

/// Checks labels, index ranges, i<j ordering and pair uniqueness.
void validate(CbmInstance const &instance);

/// Draws a censored block model instance: uniform labels, an Erdos-Renyi graph
/// G(n, alpha/n) sampled by geometric skipping over the linearized pair index,
/// and edge signs sigma_i sigma_j flipped independently with probability epsilon.
CbmInstance generate(CbmParams const &params);

/// Pair (i, j), i < j, at position k of the ordering k = j(j-1)/2 + i.
std::pair<std::int64_t, std::int64_t> pair_from_index(std::uint64_t k);

/// 2 [max(a, 1 - a) - 1/2] with a the fraction of agreeing labels.
double overlap(Labeling const &truth, Labeling const &guess);

double alpha_detect(double epsilon);
double alpha_exact(double epsilon, double n);
double beta0(double epsilon);
double empirical_alpha(CbmInstance const &instance);

/// Sign with the tie convention sign(0) = +1.
constexpr std::int8_t sign_label(double x) { return x < 0.0 ? std::int8_t{-1} : std::int8_t{1}; }

// Instance text format:
//   %cbm 1
//   n m epsilon seed
//   sigma
//   s_0 s_1 ... s_{n-1}
//   i j w          (m lines)
// Lines starting with '#' are comments. alpha is not stored; reading sets it
// to the empirical average degree 2m/n.
void        write_instance(CbmInstance const &instance, std::ostream &out);
void        write_instance(CbmInstance const &instance, std::filesystem::path const &path);
CbmInstance read_instance(std::istream &in);
CbmInstance read_instance(std::filesystem::path const &path);

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double x);

} // namespace cbm
