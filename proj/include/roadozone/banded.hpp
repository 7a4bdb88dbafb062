#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace roadozone {

/// Square banded matrix with equal lower and upper bandwidth, factored in place by
/// Gaussian elimination without pivoting. Intended for diagonally dominant systems.
class BandedMatrix {
 public:
  BandedMatrix() = default;
  BandedMatrix(std::size_t n, std::size_t bandwidth);

  std::size_t size() const { return n_; }
  std::size_t bandwidth() const { return bw_; }

  /// Element access; (i, j) must lie inside the band.
  double& at(std::size_t i, std::size_t j);
  double get(std::size_t i, std::size_t j) const;
  bool in_band(std::size_t i, std::size_t j) const;

  /// y = A x. Only valid before factor().
  std::vector<double> multiply(std::span<const double> x) const;

  /// LU factorization. Throws NumericalError on a zero pivot.
  void factor();
  bool factored() const { return factored_; }

  /// Solves A x = b in place after factor().
  void solve(std::span<double> b) const;

 private:
  std::size_t n_ = 0;
  std::size_t bw_ = 0;
  std::size_t width_ = 1;
  std::vector<double> a_;
  bool factored_ = false;
};

}  // namespace roadozone
