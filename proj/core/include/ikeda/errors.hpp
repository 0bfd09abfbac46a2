#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ikeda {

// Base of all domain errors. Usage mistakes (bad arguments) are reported
// as std::invalid_argument instead.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TailTooHeavy : public Error {
 public:
  TailTooHeavy(double tail, int n_max)
      : Error("truncated tail population " + std::to_string(tail) +
              " too heavy for n_max=" + std::to_string(n_max)),
        tail_(tail) {}
  double tail() const noexcept { return tail_; }

 private:
  double tail_;
};

class CutoffMismatch : public Error {
 public:
  CutoffMismatch(int a, int b)
      : Error("cutoff mismatch: n_max " + std::to_string(a) + " vs " +
              std::to_string(b)) {}
};

class UnknownMode : public Error {
 public:
  explicit UnknownMode(const std::string& label)
      : Error("unknown mode label '" + label + "'") {}
};

class DegenerateWindow : public Error {
 public:
  DegenerateWindow() : Error("phase-plane window has zero area") {}
};

class LeakExceeded : public Error {
 public:
  LeakExceeded(double leak, double threshold)
      : Error("leak fraction " + std::to_string(leak) + " exceeds " +
              std::to_string(threshold) + "; increase n_max"),
        leak_(leak) {}
  double leak() const noexcept { return leak_; }

 private:
  double leak_;
};

class NonUnitary : public Error {
 public:
  explicit NonUnitary(double deviation)
      : Error("block unitary deviates from unitarity by " +
              std::to_string(deviation)) {}
};

class DeltaOutOfRange : public Error {
 public:
  explicit DeltaOutOfRange(double delta)
      : Error("delta=" + std::to_string(delta) + " outside (0, pi/2)") {}
};

class NonFinite : public Error {
 public:
  explicit NonFinite(std::size_t index)
      : Error("non-finite value at iteration " + std::to_string(index)),
        index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

class NoConvergence : public Error {
 public:
  NoConvergence(double best_residual, int steps)
      : Error("Newton iteration did not converge after " +
              std::to_string(steps) + " steps (best residual " +
              std::to_string(best_residual) + ")"),
        best_residual_(best_residual) {}
  double best_residual() const noexcept { return best_residual_; }

 private:
  double best_residual_;
};

class ZeroProbability : public Error {
 public:
  explicit ZeroProbability(double p)
      : Error("conditional measurement outcome has probability " +
              std::to_string(p)),
        p_(p) {}
  double probability() const noexcept { return p_; }

 private:
  double p_;
};

class RevivalRequired : public Error {
 public:
  explicit RevivalRequired(double kappa)
      : Error("kappa_I + kappa_II = " + std::to_string(kappa) +
              " is not a fractional revival pi*m/l") {}
};

}  // namespace ikeda
