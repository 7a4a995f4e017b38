#include "cbm/eigensolvers.hpp"
#include "cbm/rng.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <ostream>
#include <stdexcept>

namespace cbm {

std::int64_t default_max_iter(Eigen::Index dim)
{
  constexpr double gap_floor = 0.01;
  double const     logdim = std::log(static_cast<double>(std::max<Eigen::Index>(dim, 2)));
  return std::max<std::int64_t>(2000, 10 * static_cast<std::int64_t>(std::ceil(logdim / gap_floor)));
}

namespace {

Eigen::VectorXd start_vector(Eigen::Index dim, std::uint64_t seed)
{
  CounterRng      rng(derive_seed(seed, "start-vector"));
  Eigen::VectorXd v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) { v(i) = 2.0 * rng.uniform() - 1.0; }
  double const norm = v.norm();
  if (norm == 0.0) {
    v.setOnes();
    return v / std::sqrt(static_cast<double>(dim));
  }
  return v / norm;
}

std::int64_t iteration_budget(SolverConfig const &cfg, Eigen::Index dim)
{
  if (cfg.tol <= 0.0) { throw std::invalid_argument("solver tolerance must be positive"); }
  if (cfg.max_iter < 0) { throw std::invalid_argument("max_iter must be positive"); }
  return cfg.max_iter > 0 ? cfg.max_iter : default_max_iter(dim);
}

} // namespace

PowerOutcome power_leading(SparseMatrix<double> const &M, SolverConfig const &cfg)
{
  if (M.rows() != M.cols()) { throw std::invalid_argument("power_leading: matrix must be square"); }
  if (M.rows() == 0) { throw std::invalid_argument("power_leading: empty matrix"); }
  auto const budget = iteration_budget(cfg, M.rows());
  auto const window = static_cast<std::int64_t>(std::max(cfg.stall_window, 1));

  Eigen::VectorXd v = start_vector(M.rows(), cfg.seed);
  Eigen::VectorXd w(M.rows());
  matvec<double>(M, v, w);

  double           best_angle = std::numeric_limits<double>::infinity();
  std::int64_t     last_improvement = 0;
  std::deque<double> log_growth;
  double           log_growth_sum = 0.0;

  for (std::int64_t it = 1; it <= budget; ++it) {
    double const lambda = v.dot(w);
    double const residual = (w - lambda * v).norm();
    if (residual <= cfg.tol * std::max(std::abs(lambda), 1.0)) {
      return EigenResult{lambda, v, residual, it, true};
    }

    double const growth = w.norm();
    if (growth == 0.0) { break; } // only reachable through the residual test above
    log_growth.push_back(std::log(growth));
    log_growth_sum += log_growth.back();
    if (static_cast<std::int64_t>(log_growth.size()) > window) {
      log_growth_sum -= log_growth.front();
      log_growth.pop_front();
    }

    double const cosine = std::clamp(lambda / growth, -1.0, 1.0);
    double const angle = std::sqrt(std::max(0.0, 1.0 - cosine * cosine));
    if (angle < 0.999 * best_angle) {
      best_angle = angle;
      last_improvement = it;
    } else if (it - last_improvement >= window && it >= 2 * window) {
      return NoRealLeader{std::exp(log_growth_sum / static_cast<double>(log_growth.size())), it};
    }

    v = w / growth;
    matvec<double>(M, v, w);
  }
  double const estimate =
    log_growth.empty() ? 0.0 : std::exp(log_growth_sum / static_cast<double>(log_growth.size()));
  return NoRealLeader{estimate, budget};
}

double gershgorin_upper(SparseMatrix<double> const &H)
{
  double bound = -std::numeric_limits<double>::infinity();
  for (Eigen::Index r = 0; r < H.outerSize(); ++r) {
    double row = 0.0;
    for (SparseMatrix<double>::InnerIterator it(H, r); it; ++it) {
      row += it.col() == r ? it.value() : std::abs(it.value());
    }
    bound = std::max(bound, row);
  }
  return bound;
}

bool is_symmetric(SparseMatrix<double> const &M)
{
  if (M.rows() != M.cols()) { return false; }
  SparseMatrix<double> const T = M.transpose();
  if (T.nonZeros() != M.nonZeros()) { return false; }
  return std::equal(M.outerIndexPtr(), M.outerIndexPtr() + M.rows() + 1, T.outerIndexPtr()) &&
         std::equal(M.innerIndexPtr(), M.innerIndexPtr() + M.nonZeros(), T.innerIndexPtr()) &&
         std::equal(M.valuePtr(), M.valuePtr() + M.nonZeros(), T.valuePtr());
}

EigenResult smallest_symmetric(SparseMatrix<double> const &H, SolverConfig const &cfg)
{
  if (H.rows() == 0) { throw std::invalid_argument("smallest_symmetric: empty matrix"); }
  if (!is_symmetric(H)) { throw std::invalid_argument("smallest_symmetric: matrix is not symmetric"); }
  auto const   budget = iteration_budget(cfg, H.rows());
  double const shift = gershgorin_upper(H);

  Eigen::VectorXd v = start_vector(H.rows(), cfg.seed);
  Eigen::VectorXd w(H.rows());
  EigenResult     out;
  for (std::int64_t it = 1; it <= budget; ++it) {
    matvec<double>(H, v, w);
    w = shift * v - w; // (c 1 - H) v
    double const mu = v.dot(w);
    double const lambda = shift - mu;
    double const residual = (w - mu * v).norm();
    out = EigenResult{lambda, v, residual, it, false};
    if (residual <= cfg.tol * std::max(std::abs(lambda), 1.0)) {
      out.converged = true;
      return out;
    }
    double const norm = w.norm();
    if (norm == 0.0) { break; }
    v = w / norm;
  }
  return out;
}

std::vector<std::complex<double>> Spectrum::by_modulus() const
{
  auto sorted = eigenvalues;
  std::sort(sorted.begin(), sorted.end(), [](auto const &a, auto const &b) {
    if (std::abs(a) != std::abs(b)) { return std::abs(a) > std::abs(b); }
    if (a.real() != b.real()) { return a.real() > b.real(); }
    return a.imag() > b.imag();
  });
  return sorted;
}

Spectrum dense_spectrum(Eigen::MatrixXd const &M, Eigen::Index cap)
{
  if (M.rows() != M.cols()) { throw std::invalid_argument("dense_spectrum: matrix must be square"); }
  if (M.rows() > cap) {
    throw std::length_error("dense_spectrum: dimension " + std::to_string(M.rows()) + " exceeds cap " +
                            std::to_string(cap));
  }
  auto const n = static_cast<lapack_int>(M.rows());
  Spectrum   out;
  if (n == 0) { return out; }
  Eigen::MatrixXd a = M; // dgeev overwrites its input
  Eigen::VectorXd wr(n), wi(n);
  lapack_int const info = LAPACKE_dgeev(LAPACK_COL_MAJOR, 'N', 'N', n, a.data(), n, wr.data(), wi.data(), nullptr,
                                        1, nullptr, 1);
  if (info != 0) { throw std::runtime_error("dgeev failed with info " + std::to_string(info)); }
  out.eigenvalues.reserve(static_cast<std::size_t>(n));
  for (lapack_int i = 0; i < n; ++i) { out.eigenvalues.emplace_back(wr(i), wi(i)); }
  return out;
}

Eigen::VectorXd dense_symmetric_eigenvalues(Eigen::MatrixXd const &M, Eigen::Index cap)
{
  if (M.rows() != M.cols()) { throw std::invalid_argument("dense_symmetric_eigenvalues: matrix must be square"); }
  if (M.rows() > cap) { throw std::length_error("dense_symmetric_eigenvalues: dimension exceeds cap"); }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(M, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) { throw std::runtime_error("symmetric eigensolver did not converge"); }
  return solver.eigenvalues();
}

double second_eigenvalue_bound(CbmInstance const &instance, Eigen::Index cap)
{
  if (2 * instance.n() > cap) { throw std::length_error("second_eigenvalue_bound: 2n exceeds dense cap"); }
  Eigen::MatrixXd const dense = build_bprime<double>(instance).toDense();
  auto const            sorted = dense_spectrum(dense, cap).by_modulus();
  if (sorted.size() < 2) { throw std::invalid_argument("second_eigenvalue_bound: fewer than two eigenvalues"); }
  return std::abs(sorted[1]);
}

void write_spectrum_csv(Spectrum const &spectrum, std::ostream &out)
{
  out << "re,im\n";
  for (auto const &z : spectrum.eigenvalues) { out << format_double(z.real()) << ',' << format_double(z.imag()) << '\n'; }
}

void write_spectrum_svg(Spectrum const &spectrum, double radius, std::ostream &out)
{
  double extent = radius;
  for (auto const &z : spectrum.eigenvalues) { extent = std::max({extent, std::abs(z.real()), std::abs(z.imag())}); }
  extent = extent * 1.1 + 1e-9;

  constexpr double size = 600.0;
  constexpr double margin = 30.0;
  double const     scale = (size / 2.0 - margin) / extent;
  auto const px = [&](double re) { return size / 2.0 + re * scale; };
  auto const py = [&](double im) { return size / 2.0 - im * scale; };

  char buf[256];
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"600\" height=\"600\" viewBox=\"0 0 600 600\">\n";
  out << "<rect width=\"600\" height=\"600\" fill=\"white\"/>\n";
  std::snprintf(buf, sizeof buf,
                "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"#999\" stroke-width=\"1\"/>\n",
                margin, size / 2.0, size - margin, size / 2.0);
  out << buf;
  std::snprintf(buf, sizeof buf,
                "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"#999\" stroke-width=\"1\"/>\n",
                size / 2.0, margin, size / 2.0, size - margin);
  out << buf;
  std::snprintf(buf, sizeof buf,
                "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"%.3f\" fill=\"none\" stroke=\"#d62728\" "
                "stroke-width=\"1.5\" stroke-dasharray=\"6,4\"/>\n",
                size / 2.0, size / 2.0, radius * scale);
  out << buf;
  for (auto const &z : spectrum.eigenvalues) {
    std::snprintf(buf, sizeof buf, "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"2\" fill=\"#1f77b4\"/>\n", px(z.real()),
                  py(z.imag()));
    out << buf;
  }
  std::snprintf(buf, sizeof buf,
                "<text x=\"%.1f\" y=\"20\" font-family=\"sans-serif\" font-size=\"13\">radius %.4f</text>\n",
                margin, radius);
  out << buf;
  out << "</svg>\n";
}

} // namespace cbm
