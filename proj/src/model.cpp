#include "cbm/model.hpp"
#include "cbm/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string_view>
#include <unordered_set>

namespace cbm {

void validate(CbmParams const &params)
{
  if (params.n < 1) { throw std::invalid_argument("n must be positive"); }
  if (params.n > std::numeric_limits<std::int32_t>::max()) {
    throw std::invalid_argument("n exceeds the 32-bit node index range");
  }
  if (!(params.alpha > 0.0) || !std::isfinite(params.alpha)) {
    throw std::invalid_argument("alpha must be positive and finite");
  }
  if (!(params.epsilon >= 0.0 && params.epsilon <= 0.5)) {
    throw std::invalid_argument("epsilon must lie in [0, 0.5]");
  }
  if (params.alpha / static_cast<double>(params.n) > 1.0) {
    throw std::invalid_argument("alpha/n exceeds 1: not a valid edge probability");
  }
}

void validate(CbmInstance const &instance)
{
  auto const n = instance.params.n;
  if (n < 1) { throw FormatError("instance must have at least one node"); }
  if (static_cast<std::int64_t>(instance.sigma.size()) != n) {
    throw FormatError("sigma length differs from n");
  }
  for (auto s : instance.sigma) {
    if (s != 1 && s != -1) { throw FormatError("sigma entries must be +1 or -1"); }
  }
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(instance.edges.size() * 2);
  for (auto const &e : instance.edges) {
    if (e.i < 0 || e.j < 0 || e.i >= n || e.j >= n) { throw FormatError("edge endpoint out of range"); }
    if (e.i >= e.j) { throw FormatError("edge endpoints must satisfy i < j"); }
    if (e.w != 1 && e.w != -1) { throw FormatError("edge weight must be +1 or -1"); }
    auto const key = (static_cast<std::uint64_t>(e.i) << 32) | static_cast<std::uint32_t>(e.j);
    if (!seen.insert(key).second) { throw FormatError("duplicate edge"); }
  }
}

std::pair<std::int64_t, std::int64_t> pair_from_index(std::uint64_t k)
{
  auto j = static_cast<std::uint64_t>((1.0 + std::sqrt(1.0 + 8.0 * static_cast<double>(k))) / 2.0);
  while (j > 1 && j * (j - 1) / 2 > k) { --j; }
  while ((j + 1) * j / 2 <= k) { ++j; }
  auto const i = k - j * (j - 1) / 2;
  return {static_cast<std::int64_t>(i), static_cast<std::int64_t>(j)};
}

CbmInstance generate(CbmParams const &params)
{
  validate(params);
  CbmInstance inst;
  inst.params = params;

  auto const n = params.n;
  CounterRng const sigma_rng(derive_seed(params.seed, "sigma"));
  inst.sigma.resize(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    inst.sigma[static_cast<std::size_t>(i)] = (sigma_rng.at(static_cast<std::uint64_t>(i)) >> 63) ? 1 : -1;
  }

  auto const pairs = static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(n - 1) / 2;
  double const p = params.alpha / static_cast<double>(n);
  CounterRng   edge_rng(derive_seed(params.seed, "edges"));
  CounterRng const noise_rng(derive_seed(params.seed, "noise"));

  auto emit = [&](std::uint64_t k) {
    auto [i, j] = pair_from_index(k);
    auto const planted = inst.sigma[static_cast<std::size_t>(i)] * inst.sigma[static_cast<std::size_t>(j)];
    bool const flip = noise_rng.uniform_at(k) < params.epsilon;
    inst.edges.push_back(Edge{static_cast<std::int32_t>(i), static_cast<std::int32_t>(j),
                              static_cast<std::int8_t>(flip ? -planted : planted)});
  };

  if (pairs == 0 || p <= 0.0) { return inst; }
  if (p >= 1.0) {
    inst.edges.reserve(pairs);
    for (std::uint64_t k = 0; k < pairs; ++k) { emit(k); }
    return inst;
  }

  inst.edges.reserve(static_cast<std::size_t>(static_cast<double>(pairs) * p * 1.05) + 16);
  double const log_q = std::log1p(-p);
  std::uint64_t pos = 0;
  while (pos < pairs) {
    double const skip = std::floor(std::log(edge_rng.uniform_open()) / log_q);
    if (!(skip < static_cast<double>(pairs - pos))) { break; }
    pos += static_cast<std::uint64_t>(skip);
    emit(pos);
    ++pos;
  }
  return inst;
}

double overlap(Labeling const &truth, Labeling const &guess)
{
  if (truth.size() != guess.size()) { throw std::invalid_argument("overlap: label vectors differ in length"); }
  if (truth.size() == 0) { throw std::invalid_argument("overlap: empty labeling"); }
  std::size_t agree = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) { agree += truth.values[i] == guess.values[i]; }
  // 2 (max(a, 1 - a) - 1/2) with a = agree / n, kept in integers so that
  // flipping either labeling gives a bit-identical result.
  std::size_t const n = truth.size();
  std::size_t const majority = std::max(agree, n - agree);
  return static_cast<double>(2 * majority - n) / static_cast<double>(n);
}

double alpha_detect(double epsilon)
{
  if (!(epsilon >= 0.0 && epsilon < 0.5)) {
    if (epsilon == 0.5) { throw std::domain_error("no finite detection threshold at epsilon = 0.5"); }
    throw std::invalid_argument("epsilon must lie in [0, 0.5)");
  }
  double const c = 1.0 - 2.0 * epsilon;
  return 1.0 / (c * c);
}

double alpha_exact(double epsilon, double n)
{
  if (!(n >= 2.0)) { throw std::invalid_argument("alpha_exact requires n >= 2"); }
  return 2.0 * std::log(n) * alpha_detect(epsilon);
}

double beta0(double epsilon)
{
  if (epsilon == 0.0 || epsilon == 1.0) { throw std::domain_error("infinite coupling at epsilon in {0, 1}"); }
  if (!(epsilon > 0.0 && epsilon < 1.0)) { throw std::invalid_argument("epsilon must lie in (0, 1)"); }
  return 0.5 * std::log((1.0 - epsilon) / epsilon);
}

double empirical_alpha(CbmInstance const &instance)
{
  return 2.0 * static_cast<double>(instance.edges.size()) / static_cast<double>(instance.params.n);
}

std::string format_double(double x)
{
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

// ---------------------------------------------------------------------------
// Instance file

void write_instance(CbmInstance const &instance, std::ostream &out)
{
  out << "%cbm 1\n";
  out << instance.params.n << ' ' << instance.edges.size() << ' ' << format_double(instance.params.epsilon) << ' '
      << instance.params.seed << '\n';
  out << "sigma\n";
  for (std::size_t i = 0; i < instance.sigma.size(); ++i) {
    if (i) { out << ' '; }
    out << static_cast<int>(instance.sigma[i]);
  }
  out << '\n';
  std::string line;
  for (auto const &e : instance.edges) {
    line.clear();
    line += std::to_string(e.i);
    line += ' ';
    line += std::to_string(e.j);
    line += ' ';
    line += std::to_string(static_cast<int>(e.w));
    line += '\n';
    out << line;
  }
}

void write_instance(CbmInstance const &instance, std::filesystem::path const &path)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) { throw std::runtime_error("cannot open " + path.string() + " for writing"); }
  write_instance(instance, out);
  if (!out) { throw std::runtime_error("error writing " + path.string()); }
}

namespace {

class Tokens
{
public:
  explicit Tokens(std::string_view line) : rest_(line) {}

  template <typename T>
  T next(char const *what)
  {
    skip_space();
    if (rest_.empty()) { throw FormatError(std::string("missing ") + what); }
    auto const end = rest_.find_first_of(" \t\r");
    auto const tok = rest_.substr(0, end);
    rest_.remove_prefix(tok.size());
    T    value{};
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
      throw FormatError(std::string("malformed ") + what + ": '" + std::string(tok) + "'");
    }
    return value;
  }

  bool done()
  {
    skip_space();
    return rest_.empty();
  }

private:
  void skip_space()
  {
    auto const p = rest_.find_first_not_of(" \t\r");
    rest_.remove_prefix(p == std::string_view::npos ? rest_.size() : p);
  }

  std::string_view rest_;
};

bool next_line(std::istream &in, std::string &line)
{
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') { line.pop_back(); }
    if (!line.empty() && line.front() == '#') { continue; }
    return true;
  }
  return false;
}

} // namespace

CbmInstance read_instance(std::istream &in)
{
  std::string line;
  if (!next_line(in, line) || line != "%cbm 1") { throw FormatError("missing '%cbm 1' header"); }

  if (!next_line(in, line)) { throw FormatError("missing size line"); }
  CbmInstance inst;
  std::int64_t m = 0;
  {
    Tokens t(line);
    inst.params.n = t.next<std::int64_t>("n");
    m = t.next<std::int64_t>("m");
    inst.params.epsilon = t.next<double>("epsilon");
    inst.params.seed = t.next<std::uint64_t>("seed");
    if (!t.done()) { throw FormatError("trailing tokens on size line"); }
  }
  if (inst.params.n < 1 || inst.params.n > std::numeric_limits<std::int32_t>::max()) {
    throw FormatError("n out of range");
  }
  if (m < 0) { throw FormatError("negative edge count"); }

  if (!next_line(in, line) || line != "sigma") { throw FormatError("missing 'sigma' line"); }
  if (!next_line(in, line)) { throw FormatError("missing sigma values"); }
  {
    Tokens t(line);
    inst.sigma.resize(static_cast<std::size_t>(inst.params.n));
    for (auto &s : inst.sigma) {
      auto const v = t.next<int>("sigma value");
      if (v != 1 && v != -1) { throw FormatError("sigma entries must be +1 or -1"); }
      s = static_cast<std::int8_t>(v);
    }
    if (!t.done()) { throw FormatError("more than n sigma values"); }
  }

  inst.edges.reserve(static_cast<std::size_t>(m));
  for (std::int64_t k = 0; k < m; ++k) {
    if (!next_line(in, line)) { throw FormatError("fewer edge lines than m"); }
    Tokens t(line);
    auto const i = t.next<std::int64_t>("edge endpoint");
    auto const j = t.next<std::int64_t>("edge endpoint");
    auto const w = t.next<int>("edge weight");
    if (!t.done()) { throw FormatError("trailing tokens on edge line"); }
    if (i < 0 || j < 0 || i >= inst.params.n || j >= inst.params.n) { throw FormatError("edge endpoint out of range"); }
    if (w != 1 && w != -1) { throw FormatError("edge weight must be +1 or -1"); }
    inst.edges.push_back(Edge{static_cast<std::int32_t>(i), static_cast<std::int32_t>(j), static_cast<std::int8_t>(w)});
  }
  while (next_line(in, line)) {
    if (!Tokens(line).done()) { throw FormatError("unexpected content after the last edge"); }
  }

  validate(inst);
  inst.params.alpha = empirical_alpha(inst);
  return inst;
}

CbmInstance read_instance(std::filesystem::path const &path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) { throw std::runtime_error("cannot open " + path.string()); }
  return read_instance(in);
}

} // namespace cbm
