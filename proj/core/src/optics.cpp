#include "ikeda/optics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace ikeda {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr Complex kI{0.0, 1.0};

void check_leak(const TwoModeState& s, double threshold) {
  const double leak = leak_fraction(s);
  if (leak >= threshold) throw LeakExceeded(leak, threshold);
}

}  // namespace

SectorOperator::SectorOperator(FockCutoff cutoff) : cutoff_(cutoff) {
  blocks_.resize(sector_count());
  for (int N = 0; N < sector_count(); ++N) {
    blocks_[N] = Eigen::MatrixXcd::Identity(sector_size(N), sector_size(N));
  }
}

int SectorOperator::sector_low(int N) const noexcept {
  return std::max(0, N - cutoff_.n_max());
}

int SectorOperator::sector_size(int N) const noexcept {
  return std::min(N, cutoff_.n_max()) - sector_low(N) + 1;
}

TwoModeState SectorOperator::apply(const TwoModeState& s) const {
  if (!(s.cutoff == cutoff_)) {
    throw CutoffMismatch(s.cutoff.n_max(), cutoff_.n_max());
  }
  TwoModeState out = s;
  Eigen::VectorXcd v;
  for (int N = 0; N < sector_count(); ++N) {
    const int lo = sector_low(N);
    const int size = sector_size(N);
    v.resize(size);
    for (int k = 0; k < size; ++k) v(k) = s.amps(lo + k, N - lo - k);
    const Eigen::VectorXcd w = blocks_[N] * v;
    for (int k = 0; k < size; ++k) out.amps(lo + k, N - lo - k) = w(k);
  }
  return out;
}

SectorOperator SectorOperator::adjoint() const {
  SectorOperator out(cutoff_);
  for (int N = 0; N < sector_count(); ++N) out.blocks_[N] = blocks_[N].adjoint();
  return out;
}

double SectorOperator::unitarity_deviation() const {
  double dev = 0.0;
  for (const auto& b : blocks_) {
    const Eigen::MatrixXcd e =
        b.adjoint() * b - Eigen::MatrixXcd::Identity(b.rows(), b.cols());
    dev = std::max(dev, e.cwiseAbs().maxCoeff());
  }
  return dev;
}

Eigen::MatrixXcd SectorOperator::dense() const {
  const int dim = cutoff_.dim();
  Eigen::MatrixXcd full = Eigen::MatrixXcd::Zero(dim * dim, dim * dim);
  for (int N = 0; N < sector_count(); ++N) {
    const int lo = sector_low(N);
    for (int r = 0; r < sector_size(N); ++r) {
      for (int c = 0; c < sector_size(N); ++c) {
        const int mr = lo + r;
        const int mc = lo + c;
        full(mr * dim + (N - mr), mc * dim + (N - mc)) = blocks_[N](r, c);
      }
    }
  }
  return full;
}

SectorOperator splitter_unitary(FockCutoff cutoff, double angle, double phase) {
  SectorOperator op(cutoff);
  for (int N = 0; N < op.sector_count(); ++N) {
    const int lo = op.sector_low(N);
    const int size = op.sector_size(N);
    if (size == 1) continue;
    // The phase-free generator is real tridiagonal; the hopping phase is
    // restored by the diagonal similarity D = diag(e^{i k phase}).
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(size, size);
    for (int k = 0; k + 1 < size; ++k) {
      const int m = lo + k;
      const int n = N - m;
      g(k + 1, k) = g(k, k + 1) = std::sqrt(static_cast<double>(m + 1) * n);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
    Eigen::VectorXcd phases(size);
    for (int k = 0; k < size; ++k) {
      phases(k) = std::polar(1.0, angle * es.eigenvalues()(k));
    }
    const Eigen::MatrixXcd v = es.eigenvectors().cast<Complex>();
    Eigen::MatrixXcd u = v * phases.asDiagonal() * v.transpose();
    if (phase != 0.0) {
      Eigen::VectorXcd d(size);
      for (int k = 0; k < size; ++k) d(k) = std::polar(1.0, k * phase);
      u = d.asDiagonal() * u * d.conjugate().asDiagonal();
    }
    op.block(N) = std::move(u);
  }
  return op;
}

Eigen::Matrix2cd arm_matrix() {
  const double s = 1.0 / std::sqrt(2.0);
  Eigen::Matrix2cd w;
  w << s, kI * s, kI * s, s;
  return w;
}

SectorOperator arm_splitter(FockCutoff cutoff) {
  return splitter_unitary(cutoff, kPi / 4.0, 0.0);
}

static SectorOperator block_operator(const BlockParams& p,
                                     const SectorOperator& arms) {
  if (p.kappa < 0.0) throw std::invalid_argument("kappa must be >= 0");
  SectorOperator op(arms.cutoff());
  // In the arm picture the Kerr element sits on mode 2 for orientation I
  // and on mode 1 for orientation II.
  const bool kerr_on_first = p.orientation == Orientation::II;
  for (int N = 0; N < op.sector_count(); ++N) {
    const int lo = op.sector_low(N);
    const int size = op.sector_size(N);
    Eigen::VectorXcd diag(size);
    for (int k = 0; k < size; ++k) {
      const int m = lo + k;
      const double nk = kerr_on_first ? m : N - m;
      const double phase = 0.5 * kPi * N + p.phi * nk + p.kappa * nk * (nk - 1.0);
      diag(k) = std::polar(1.0, phase);
    }
    const Eigen::MatrixXcd& w = arms.block(N);
    op.block(N) = w.adjoint() * diag.asDiagonal() * w;
  }
  return op;
}

BlockUnitary::BlockUnitary(const BlockParams& p, FockCutoff cutoff)
    : BlockUnitary(p, arm_splitter(cutoff)) {}

BlockUnitary::BlockUnitary(const BlockParams& p, const SectorOperator& arms)
    : params_(p), op_(block_operator(p, arms)) {
  const double dev = op_.unitarity_deviation();
  if (!(dev < tol::kUnitarity)) throw NonUnitary(dev);
}

TwoModeState BlockUnitary::apply(const TwoModeState& s,
                                 double leak_threshold) const {
  check_leak(s, leak_threshold);
  TwoModeState out = op_.apply(s);
  check_leak(out, leak_threshold);
  return out;
}

TwoModeState apply_block(const TwoModeState& s, const BlockParams& p,
                         double leak_threshold) {
  return BlockUnitary(p, s.cutoff).apply(s, leak_threshold);
}

double block_generator_check(const BlockParams& p, FockCutoff cutoff) {
  return block_operator(p, arm_splitter(cutoff)).unitarity_deviation();
}

Eigen::Matrix2cd block_matrix(double theta, Orientation orientation) {
  const Eigen::Matrix2cd w = arm_matrix();
  Eigen::Matrix2cd e = Eigen::Matrix2cd::Zero();
  const Complex kerr = kI * std::polar(1.0, theta);
  if (orientation == Orientation::I) {
    e(0, 0) = kI;
    e(1, 1) = kerr;
  } else {
    e(0, 0) = kerr;
    e(1, 1) = kI;
  }
  return w.adjoint() * e * w;
}

double kerr_arm_intensity(Orientation orientation, Complex in1, Complex in2) {
  return orientation == Orientation::I ? std::norm(in2 + kI * in1)
                                       : std::norm(in1 + kI * in2);
}

Eigen::Vector2cd apply_block_classical(const BlockParams& p, Complex in1,
                                       Complex in2) {
  const double theta =
      p.phi + p.kappa * kerr_arm_intensity(p.orientation, in1, in2);
  return block_matrix(theta, p.orientation) * Eigen::Vector2cd(in1, in2);
}

StabilizedPair stabilization_offsets(const BlockParams& block_I, double delta) {
  if (!(delta > 0.0 && delta < kPi / 2.0)) throw DeltaOutOfRange(delta);
  StabilizedPair pair;
  pair.block_I = block_I;
  pair.block_I.orientation = Orientation::I;
  pair.block_II.phi = block_I.phi - kPi + 2.0 * delta;
  pair.block_II.kappa = block_I.kappa;
  pair.block_II.orientation = Orientation::II;
  pair.delta = delta;
  pair.feedback_R = std::sin(delta) / std::sqrt(2.0);
  return pair;
}

RevivalInfo revival_check(double kappa, double tolerance, int l_max) {
  if (!(tolerance > 0.0)) throw std::invalid_argument("tolerance must be > 0");
  RevivalInfo info;
  info.tolerance = tolerance;
  for (long l = 1; l <= l_max; ++l) {
    const long m = std::lround(kappa * l / kPi);
    if (std::abs(kappa - kPi * m / l) <= tolerance) {
      const long g = std::gcd(m, l);
      info.is_revival = true;
      info.m = m / g;
      info.l = l / g;
      return info;
    }
  }
  return info;
}

std::vector<Complex> revival_phase_table(double kappa, int count) {
  std::vector<Complex> table(count);
  for (int n = 0; n < count; ++n) {
    table[n] = std::polar(1.0, kappa * n * static_cast<double>(n));
  }
  return table;
}

std::vector<Kitten> kitten_decomposition(double kappa, double linear_phase,
                                         double tolerance, int l_max) {
  const RevivalInfo info = revival_check(kappa, tolerance, l_max);
  if (!info.is_revival) throw RevivalRequired(kappa);
  const long m = info.m;
  const long l = info.l;
  // e^{i pi m n(n-1)/l} is periodic in n with period l, or 2l when m is odd
  // and l even.
  const long period = (m % 2 == 0 || l % 2 == 1) ? l : 2 * l;
  std::vector<Complex> f(period);
  for (long n = 0; n < period; ++n) {
    long r = (m * n * (n - 1)) % (2 * l);
    if (r < 0) r += 2 * l;
    f[n] = std::polar(1.0, kPi * static_cast<double>(r) / l);
  }
  std::vector<Kitten> out;
  for (long k = 0; k < period; ++k) {
    Complex c = 0.0;
    for (long n = 0; n < period; ++n) {
      c += f[n] * std::polar(1.0, -2.0 * kPi * static_cast<double>(k * n % period) / period);
    }
    c /= static_cast<double>(period);
    if (std::abs(c) > 1e-12) {
      out.push_back({c, linear_phase + 2.0 * kPi * k / period});
    }
  }
  return out;
}

Complex mix_with_input(Complex alpha_fed, Complex alpha_in) {
  return (alpha_in + alpha_fed) / std::sqrt(2.0);
}

Complex mix_with_input_full(Complex alpha_fed, Complex alpha_in,
                            FockCutoff cutoff) {
  const TwoModeState in = tensor_product(make_coherent(alpha_fed, cutoff),
                                         make_coherent(alpha_in, cutoff),
                                         {"a", "b"});
  // Phase -pi/2 turns the arm splitter into the real 50-50 mixer
  // a -> (a + b)/sqrt2.
  const TwoModeState out = splitter_unitary(cutoff, kPi / 4.0, -kPi / 2.0).apply(in);
  return mean_field(out, "a");
}

}  // namespace ikeda
