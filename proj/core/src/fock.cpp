#include "ikeda/fock.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ikeda {

FockCutoff::FockCutoff(int n_max) : n_max_(n_max) {
  if (n_max < 0) {
    throw std::invalid_argument("n_max must be non-negative");
  }
}

FockCutoff FockCutoff::for_amplitude(double abs_alpha) {
  const double need = abs_alpha * abs_alpha + 6.0 * abs_alpha;
  return FockCutoff(std::max(2, static_cast<int>(std::ceil(need))));
}

bool FockCutoff::adequate_for(double abs_alpha) const noexcept {
  return n_max_ >= abs_alpha * abs_alpha + 6.0 * abs_alpha;
}

bool ModeState::is_normalized() const {
  return std::abs(norm_squared() - 1.0) < tol::kNorm;
}

ModeState ModeState::normalized() const {
  const double n = amps.norm();
  if (n == 0.0) throw std::invalid_argument("cannot normalize a zero state");
  ModeState out = *this;
  out.amps /= n;
  return out;
}

bool TwoModeState::is_normalized() const {
  return std::abs(norm_squared() - 1.0) < tol::kNorm;
}

TwoModeState TwoModeState::normalized() const {
  const double n = amps.norm();
  if (n == 0.0) throw std::invalid_argument("cannot normalize a zero state");
  TwoModeState out = *this;
  out.amps /= n;
  return out;
}

int TwoModeState::mode_index(const std::string& label) const {
  if (label == labels[0]) return 0;
  if (label == labels[1]) return 1;
  throw UnknownMode(label);
}

double DensityOperator::purity() const {
  return (matrix * matrix).trace().real();
}

bool DensityOperator::is_hermitian(double tolerance) const {
  return (matrix - matrix.adjoint()).cwiseAbs().maxCoeff() <= tolerance;
}

double DensityOperator::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(matrix,
                                                     Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

Complex QGrid::point(int i, int j) const {
  const double dr = (window.re_max - window.re_min) / (n_re - 1);
  const double di = (window.im_max - window.im_min) / (n_im - 1);
  return {window.re_min + i * dr, window.im_min + j * di};
}

double QGrid::cell_area() const {
  return (window.re_max - window.re_min) / (n_re - 1) *
         (window.im_max - window.im_min) / (n_im - 1);
}

double log_factorial(int n) {
  if (n < 0) throw std::invalid_argument("log_factorial of negative");
  double acc = 0.0;
  for (int k = 2; k <= n; ++k) acc += std::log(static_cast<double>(k));
  return acc;
}

Eigen::VectorXcd coherent_amplitudes(Complex alpha, FockCutoff cutoff) {
  const int dim = cutoff.dim();
  Eigen::VectorXcd c = Eigen::VectorXcd::Zero(dim);
  const double r = std::abs(alpha);
  if (r == 0.0) {
    c(0) = 1.0;
    return c;
  }
  const double log_r = std::log(r);
  const double arg = std::arg(alpha);
  const double half_intensity = 0.5 * r * r;
  double log_fact = 0.0;
  for (int n = 0; n < dim; ++n) {
    if (n > 0) log_fact += std::log(static_cast<double>(n));
    const double mag = std::exp(-half_intensity + n * log_r - 0.5 * log_fact);
    c(n) = std::polar(mag, n * arg);
  }
  return c;
}

double coherent_tail(double abs_alpha, FockCutoff cutoff) {
  const double lambda = abs_alpha * abs_alpha;
  if (lambda == 0.0) return 0.0;
  const double log_lambda = std::log(lambda);
  const int first = cutoff.n_max() + 1;
  double log_fact = log_factorial(first);
  double sum = 0.0;
  for (int n = first;; ++n) {
    if (n > first) log_fact += std::log(static_cast<double>(n));
    const double term = std::exp(-lambda + n * log_lambda - log_fact);
    sum += term;
    if (n > lambda && term < 1e-18 * std::max(sum, 1e-300)) break;
    if (n > first + 100000) break;
  }
  return sum;
}

Complex coherent_inner(Complex x, Complex y) {
  return std::exp(-0.5 * std::norm(x) - 0.5 * std::norm(y) + std::conj(x) * y);
}

ModeState make_coherent(Complex alpha, FockCutoff cutoff, TailPolicy policy) {
  ModeState s;
  s.cutoff = cutoff;
  s.amps = coherent_amplitudes(alpha, cutoff);
  s.tail_population = coherent_tail(std::abs(alpha), cutoff);
  if (policy == TailPolicy::enforce && s.tail_population >= tol::kTailError) {
    throw TailTooHeavy(s.tail_population, cutoff.n_max());
  }
  s.amps /= s.amps.norm();
  return s;
}

ModeState fock_state(int n, FockCutoff cutoff) {
  if (n < 0 || n > cutoff.n_max()) {
    throw std::invalid_argument("Fock level outside cutoff");
  }
  ModeState s;
  s.cutoff = cutoff;
  s.amps = Eigen::VectorXcd::Zero(cutoff.dim());
  s.amps(n) = 1.0;
  return s;
}

ModeState vacuum(FockCutoff cutoff) { return fock_state(0, cutoff); }

TwoModeState tensor_product(const ModeState& u, const ModeState& v,
                            std::array<std::string, 2> labels) {
  if (!(u.cutoff == v.cutoff)) {
    throw CutoffMismatch(u.cutoff.n_max(), v.cutoff.n_max());
  }
  if (labels[0] == labels[1]) {
    throw std::invalid_argument("mode labels must differ");
  }
  TwoModeState s;
  s.cutoff = u.cutoff;
  s.labels = std::move(labels);
  s.amps = u.amps * v.amps.transpose();
  return s;
}

Complex overlap(const TwoModeState& s1, const TwoModeState& s2) {
  if (!(s1.cutoff == s2.cutoff)) {
    throw CutoffMismatch(s1.cutoff.n_max(), s2.cutoff.n_max());
  }
  return s1.amps.conjugate().cwiseProduct(s2.amps).sum();
}

Complex overlap(const ModeState& s1, const ModeState& s2) {
  if (!(s1.cutoff == s2.cutoff)) {
    throw CutoffMismatch(s1.cutoff.n_max(), s2.cutoff.n_max());
  }
  return s1.amps.dot(s2.amps);
}

DensityOperator reduce_mode(const TwoModeState& s, const std::string& keep) {
  DensityOperator rho;
  rho.cutoff = s.cutoff;
  if (s.mode_index(keep) == 0) {
    rho.matrix = s.amps * s.amps.adjoint();
  } else {
    rho.matrix = s.amps.transpose() * s.amps.conjugate();
  }
  return rho;
}

DensityOperator pure_density(const ModeState& s) {
  return {s.amps * s.amps.adjoint(), s.cutoff};
}

Complex mean_field(const TwoModeState& s, const std::string& mode) {
  const int idx = s.mode_index(mode);
  const int dim = s.cutoff.dim();
  Complex acc = 0.0;
  for (int k = 0; k + 1 < dim; ++k) {
    const double ladder = std::sqrt(static_cast<double>(k + 1));
    if (idx == 0) {
      acc += ladder * s.amps.row(k).transpose().dot(s.amps.row(k + 1).transpose());
    } else {
      acc += ladder * s.amps.col(k).dot(s.amps.col(k + 1));
    }
  }
  return acc;
}

Complex mean_field(const ModeState& s) {
  Complex acc = 0.0;
  for (int n = 0; n + 1 < s.cutoff.dim(); ++n) {
    acc += std::conj(s.amps(n)) * std::sqrt(static_cast<double>(n + 1)) *
           s.amps(n + 1);
  }
  return acc;
}

double mean_photon_number(const ModeState& s) {
  double acc = 0.0;
  for (int n = 0; n < s.cutoff.dim(); ++n) acc += n * std::norm(s.amps(n));
  return acc;
}

QGrid husimi_q(const DensityOperator& rho, const PhaseWindow& window, int n_re,
               int n_im) {
  if (n_re < 2 || n_im < 2) {
    throw std::invalid_argument("Q-function resolution must be at least 2x2");
  }
  if (!(window.re_max > window.re_min) || !(window.im_max > window.im_min)) {
    throw DegenerateWindow();
  }
  QGrid grid;
  grid.window = window;
  grid.n_re = n_re;
  grid.n_im = n_im;
  grid.values.resize(n_re, n_im);
  for (int i = 0; i < n_re; ++i) {
    for (int j = 0; j < n_im; ++j) {
      const Eigen::VectorXcd v = coherent_amplitudes(grid.point(i, j), rho.cutoff);
      const double q = v.dot(rho.matrix * v).real() / std::numbers::pi;
      // Rounding can leave -eps at points where a PSD rho has no support.
      grid.values(i, j) = std::max(0.0, q);
    }
  }
  return grid;
}

double leak_fraction(const TwoModeState& s) {
  const int dim = s.cutoff.dim();
  const int top = std::max(0, dim - 2);
  double leak = 0.0;
  for (int m = 0; m < dim; ++m) {
    for (int n = 0; n < dim; ++n) {
      if (m >= top || n >= top) leak += std::norm(s.amps(m, n));
    }
  }
  return leak;
}

double leak_fraction(const ModeState& s) {
  const int dim = s.cutoff.dim();
  double leak = 0.0;
  for (int n = std::max(0, dim - 2); n < dim; ++n) leak += std::norm(s.amps(n));
  return leak;
}

}  // namespace ikeda
