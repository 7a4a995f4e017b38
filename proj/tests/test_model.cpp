#include "cbm/model.hpp"
#include "cbm/rng.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

using namespace cbm;

namespace {

std::string serialize(CbmInstance const &inst)
{
  std::ostringstream os;
  write_instance(inst, os);
  return os.str();
}

CbmInstance parse(std::string const &text)
{
  std::istringstream is(text);
  return read_instance(is);
}

double binomial_sd(std::int64_t n, double alpha)
{
  double const pairs = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
  double const p = alpha / static_cast<double>(n);
  return std::sqrt(pairs * p * (1.0 - p));
}

} // namespace

TEST_SUITE_BEGIN("model");

TEST_CASE("pair_from_index enumerates every pair once")
{
  for (std::int64_t n : {2, 3, 7, 40}) {
    std::uint64_t k = 0;
    for (std::int64_t j = 1; j < n; ++j) {
      for (std::int64_t i = 0; i < j; ++i, ++k) {
        auto const [pi, pj] = pair_from_index(k);
        REQUIRE(pi == i);
        REQUIRE(pj == j);
      }
    }
  }
  // Far into the range used at n = 1e5.
  std::uint64_t const j = 99999, i = 12345;
  auto const [pi, pj] = pair_from_index(j * (j - 1) / 2 + i);
  CHECK(pi == static_cast<std::int64_t>(i));
  CHECK(pj == static_cast<std::int64_t>(j));
}

TEST_CASE("generate: vanishing edge probability gives no edges")
{
  auto const inst = generate(CbmParams{4, 1e-300, 0.3, 11});
  CHECK(inst.edges.empty());
  CHECK(inst.sigma.size() == 4);
}

TEST_CASE("generate: probability one gives the complete graph")
{
  auto const inst = generate(CbmParams{6, 6.0, 0.0, 3});
  CHECK(inst.m() == 15);
  CHECK_NOTHROW(validate(inst));
}

TEST_CASE("generate: noiseless edges carry sigma_i sigma_j")
{
  auto const inst = generate(CbmParams{2000, 6.0, 0.0, 5});
  REQUIRE(inst.m() > 0);
  for (auto const &e : inst.edges) {
    REQUIRE(e.w == inst.sigma[static_cast<std::size_t>(e.i)] * inst.sigma[static_cast<std::size_t>(e.j)]);
  }
}

TEST_CASE("generate: structural invariants")
{
  CounterRng rng(derive_seed(99, "model-invariants"));
  for (int t = 0; t < 30; ++t) {
    auto const inst = oracle::random_small(rng, 2, 200);
    REQUIRE_NOTHROW(validate(inst));
    std::set<std::pair<int, int>> seen;
    for (auto const &e : inst.edges) {
      REQUIRE(e.i < e.j);
      REQUIRE(seen.emplace(e.i, e.j).second);
    }
  }
}

TEST_CASE("generate: deterministic in its parameters")
{
  CbmParams const p{1000, 8.0, 0.25, 42};
  auto const      a = generate(p);
  auto const      b = generate(p);
  CHECK(a == b);
  CHECK(serialize(a) == serialize(b));
  auto const c = generate(CbmParams{1000, 8.0, 0.25, 43});
  CHECK(serialize(a) != serialize(c));
}

TEST_CASE("generate: sub-streams are independent of epsilon")
{
  // Changing only the noise level leaves the labels and the graph unchanged.
  auto const a = generate(CbmParams{3000, 5.0, 0.1, 8});
  auto const b = generate(CbmParams{3000, 5.0, 0.4, 8});
  REQUIRE(a.m() == b.m());
  CHECK(a.sigma == b.sigma);
  for (std::size_t k = 0; k < a.edges.size(); ++k) {
    REQUIRE(a.edges[k].i == b.edges[k].i);
    REQUIRE(a.edges[k].j == b.edges[k].j);
  }
}

TEST_CASE("generate: rejects invalid parameters")
{
  CHECK_THROWS_AS(generate(CbmParams{10, 11.0, 0.1, 0}), std::invalid_argument);
  CHECK_THROWS_AS(generate(CbmParams{10, 2.0, 0.6, 0}), std::invalid_argument);
  CHECK_THROWS_AS(generate(CbmParams{10, 2.0, -0.1, 0}), std::invalid_argument);
  CHECK_THROWS_AS(generate(CbmParams{0, 2.0, 0.1, 0}), std::invalid_argument);
  CHECK_THROWS_AS(generate(CbmParams{10, 0.0, 0.1, 0}), std::invalid_argument);
}

TEST_CASE("generate: edge count at n = 1e5 within 3 sd of n alpha / 2")
{
  std::int64_t const n = 100000;
  double const       alpha = 8.0;
  double const       mean = static_cast<double>(n) * alpha / 2.0; // 4e5 up to the (1 - 1/n) factor
  double const       exact_mean = static_cast<double>(n - 1) * alpha / 2.0;
  double const       sd = binomial_sd(n, alpha);
  CHECK(std::abs(mean - exact_mean) < 0.01 * sd);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto const inst = generate(CbmParams{n, alpha, 0.25, seed});
    CHECK(std::abs(static_cast<double>(inst.m()) - exact_mean) < 3.0 * sd);
    CHECK(std::abs(empirical_alpha(inst) - alpha) < 0.01 * alpha);
  }
}

TEST_CASE("generate: edge-count mean and noise fraction over 100 seeds")
{
  std::int64_t const n = 10000;
  double const       alpha = 5.0;
  double const       epsilon = 0.3;
  double             total_edges = 0.0;
  double             flipped = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto const inst = generate(CbmParams{n, alpha, epsilon, 1000 + seed});
    total_edges += static_cast<double>(inst.m());
    for (auto const &e : inst.edges) {
      flipped += e.w != inst.sigma[static_cast<std::size_t>(e.i)] * inst.sigma[static_cast<std::size_t>(e.j)];
    }
  }
  double const expected = static_cast<double>(n - 1) * alpha / 2.0;
  double const se_mean = binomial_sd(n, alpha) / std::sqrt(100.0);
  CHECK(std::abs(total_edges / 100.0 - expected) < 4.0 * se_mean);

  double const frac = flipped / total_edges;
  double const se_frac = std::sqrt(epsilon * (1.0 - epsilon) / total_edges);
  CHECK(std::abs(frac - epsilon) < 4.0 * se_frac);
}

TEST_CASE("overlap: worked examples")
{
  Labeling const truth{{1, 1, -1, -1}};
  CHECK(overlap(truth, truth) == 1.0);
  CHECK(overlap(truth, Labeling{{-1, -1, 1, 1}}) == 1.0);
  CHECK(overlap(truth, Labeling{{1, -1, -1, -1}}) == 0.5);
  CHECK(overlap(truth, Labeling{{1, -1, 1, -1}}) == 0.0);
  CHECK_THROWS_AS(overlap(truth, Labeling{{1, 1}}), std::invalid_argument);
}

TEST_CASE("overlap: symmetric and flip invariant")
{
  CounterRng rng(derive_seed(7, "overlap-property"));
  for (int t = 0; t < 200; ++t) {
    std::size_t const n = 1 + rng() % 50;
    Labeling          a, b, neg_a;
    for (std::size_t i = 0; i < n; ++i) {
      a.values.push_back(rng() & 1 ? 1 : -1);
      b.values.push_back(rng() & 1 ? 1 : -1);
      neg_a.values.push_back(static_cast<std::int8_t>(-a.values.back()));
    }
    double const o = overlap(a, b);
    REQUIRE(o >= 0.0);
    REQUIRE(o <= 1.0);
    REQUIRE(o == overlap(b, a));
    REQUIRE(o == overlap(neg_a, b));
  }
}

TEST_CASE("overlap: independent random guess vanishes at n = 1e5")
{
  auto const truth = generate(CbmParams{100000, 1.0, 0.0, 17}).truth();
  CounterRng rng(derive_seed(17, "random-guess"));
  Labeling   guess;
  for (std::size_t i = 0; i < truth.size(); ++i) { guess.values.push_back(rng() & 1 ? 1 : -1); }
  CHECK(overlap(truth, guess) < 0.01);
}

TEST_CASE("sign convention maps zero to +1")
{
  CHECK(sign_label(0.0) == 1);
  CHECK(sign_label(-0.0) == 1);
  CHECK(sign_label(-1e-300) == -1);
  CHECK(sign_label(2.0) == 1);
}

TEST_CASE("thresholds")
{
  CHECK(alpha_detect(0.25) == 4.0);
  CHECK(alpha_detect(0.0) == 1.0);
  CHECK(alpha_detect(0.4) == doctest::Approx(25.0).epsilon(1e-14));
  CHECK_THROWS_AS(alpha_detect(0.5), std::domain_error);

  for (int k = 0; k < 64; ++k) {
    double const eps = k / 128.0;
    double const c = 1.0 - 2.0 * eps;
    CHECK(std::abs(alpha_detect(eps) * c * c - 1.0) <= 0x1.0p-52);
  }

  CHECK(alpha_exact(0.0, std::exp(2.0)) == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(alpha_exact(0.25, 1e5) == doctest::Approx(8.0 * std::log(1e5)).epsilon(1e-14));
  CHECK(alpha_exact(0.25, 1e5) == doctest::Approx(92.1034).epsilon(1e-6));
  CHECK_THROWS(alpha_exact(0.5, 100.0));

  CHECK(beta0(0.5) == 0.0);
  CHECK(beta0(0.25) == doctest::Approx(0.549306144334).epsilon(1e-11));
  CHECK(beta0(0.1) == doctest::Approx(1.098612288668).epsilon(1e-11));
  CHECK_THROWS_AS(beta0(0.0), std::domain_error);
  CHECK_THROWS_AS(beta0(1.0), std::domain_error);
}

TEST_CASE("empirical_alpha")
{
  CHECK(empirical_alpha(oracle::from_edges(5, {})) == 0.0);
  CHECK(empirical_alpha(oracle::triangle()) == 2.0);
}

TEST_CASE("instance file: round trips")
{
  SUBCASE("empty edge set")
  {
    auto inst = oracle::from_edges(5, {}, 0.125);
    inst.sigma = {1, -1, 1, 1, -1};
    auto const back = parse(serialize(inst));
    CHECK(back.sigma == inst.sigma);
    CHECK(back.edges.empty());
    CHECK(back.params.epsilon == 0.125);
    CHECK(serialize(back) == serialize(inst));
  }
  SUBCASE("triangle keeps sigma")
  {
    auto inst = oracle::triangle(-1);
    inst.sigma = {-1, 1, -1};
    auto const back = parse(serialize(inst));
    CHECK(back.sigma == inst.sigma);
    CHECK(back.edges == inst.edges);
  }
  SUBCASE("generated instance, bit exact")
  {
    auto const inst = generate(CbmParams{1000, 8.0, 0.1 + 1e-17, 77});
    auto const text = serialize(inst);
    auto const back = parse(text);
    CHECK(back.params.n == inst.params.n);
    CHECK(back.params.seed == inst.params.seed);
    CHECK(back.params.epsilon == inst.params.epsilon);
    CHECK(back.params.alpha == empirical_alpha(inst));
    CHECK(back.sigma == inst.sigma);
    CHECK(back.edges == inst.edges);
    CHECK(serialize(back) == text);
    CHECK(serialize(generate(inst.params)) == text);
  }
}

TEST_CASE("instance file: header layout")
{
  auto const text = serialize(oracle::triangle());
  CHECK(text.rfind("%cbm 1\n3 3 0 0\nsigma\n1 1 1\n", 0) == 0);
}

TEST_CASE("instance file: comments are ignored")
{
  auto const inst = parse("# leading comment\n%cbm 1\n3 1 0.25 9\n# mid\nsigma\n1 -1 1\n0 2 -1\n# trailing\n");
  CHECK(inst.n() == 3);
  CHECK(inst.m() == 1);
  CHECK(inst.params.seed == 9);
  CHECK(inst.edges[0] == Edge{0, 2, -1});
}

TEST_CASE("instance file: malformed inputs")
{
  std::string const ok_head = "%cbm 1\n3 1 0.25 9\nsigma\n1 -1 1\n";
  CHECK_NOTHROW(parse(ok_head + "0 1 1\n"));
  CHECK_THROWS_AS(parse("%cbm 2\n3 0 0.25 9\nsigma\n1 1 1\n"), FormatError);
  CHECK_THROWS_AS(parse("%cbm 1\n3 x 0.25 9\nsigma\n1 1 1\n"), FormatError);
  CHECK_THROWS_AS(parse("%cbm 1\n3 0 0.25 9\nsigma\n1 1\n"), FormatError);
  CHECK_THROWS_AS(parse("%cbm 1\n3 0 0.25 9\nsigma\n1 0 1\n"), FormatError);
  CHECK_THROWS_AS(parse(ok_head + "0 3 1\n"), FormatError);
  CHECK_THROWS_AS(parse(ok_head + "-1 2 1\n"), FormatError);
  CHECK_THROWS_AS(parse(ok_head + "0 1 2\n"), FormatError);
  CHECK_THROWS_AS(parse(ok_head + "1 1 1\n"), FormatError);
  CHECK_THROWS_AS(parse(ok_head + "1 0 1\n"), FormatError);
  CHECK_THROWS_AS(parse(ok_head), FormatError);
  CHECK_THROWS_AS(parse("%cbm 1\n3 2 0.25 9\nsigma\n1 -1 1\n0 1 1\n0 1 -1\n"), FormatError);
  CHECK_THROWS_AS(parse(ok_head + "0 1 1\n1 2 1\n"), FormatError);
}

TEST_SUITE_END();
