#include "roadozone/banded.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "roadozone/error.hpp"

namespace roadozone {

BandedMatrix::BandedMatrix(std::size_t n, std::size_t bandwidth)
    : n_(n), bw_(bandwidth), width_(2 * bandwidth + 1), a_(n * (2 * bandwidth + 1), 0.0) {}

bool BandedMatrix::in_band(std::size_t i, std::size_t j) const {
  return i < n_ && j < n_ && (i > j ? i - j : j - i) <= bw_;
}

double& BandedMatrix::at(std::size_t i, std::size_t j) {
  if (!in_band(i, j)) throw DomainError("BandedMatrix: element outside band");
  return a_[i * width_ + (j + bw_ - i)];
}

double BandedMatrix::get(std::size_t i, std::size_t j) const {
  if (!in_band(i, j)) return 0.0;
  return a_[i * width_ + (j + bw_ - i)];
}

std::vector<double> BandedMatrix::multiply(std::span<const double> x) const {
  if (x.size() != n_) throw DomainError("BandedMatrix::multiply: size mismatch");
  std::vector<double> y(n_, 0.0);
  for (std::size_t i = 0; i < n_; ++i) {
    const std::size_t lo = i > bw_ ? i - bw_ : 0;
    const std::size_t hi = std::min(n_ - 1, i + bw_);
    const double* row = &a_[i * width_ + bw_ - i];
    double s = 0.0;
    for (std::size_t j = lo; j <= hi; ++j) s += row[j] * x[j];
    y[i] = s;
  }
  return y;
}

void BandedMatrix::factor() {
  for (std::size_t k = 0; k < n_; ++k) {
    const double pivot = a_[k * width_ + bw_];
    if (pivot == 0.0 || !std::isfinite(pivot)) {
      std::ostringstream os;
      os << "BandedMatrix::factor: zero pivot at row " << k;
      throw NumericalError(os.str());
    }
    const std::size_t hi = std::min(n_ - 1, k + bw_);
    const double* krow = &a_[k * width_ + bw_ - k];
    for (std::size_t i = k + 1; i <= hi; ++i) {
      double* irow = &a_[i * width_ + bw_ - i];
      const double m = irow[k] / pivot;
      irow[k] = m;
      if (m == 0.0) continue;
      for (std::size_t j = k + 1; j <= hi; ++j) irow[j] -= m * krow[j];
    }
  }
  factored_ = true;
}

void BandedMatrix::solve(std::span<double> b) const {
  if (!factored_) throw NumericalError("BandedMatrix::solve: matrix not factored");
  if (b.size() != n_) throw DomainError("BandedMatrix::solve: size mismatch");
  for (std::size_t i = 1; i < n_; ++i) {
    const std::size_t lo = i > bw_ ? i - bw_ : 0;
    const double* row = &a_[i * width_ + bw_ - i];
    double s = b[i];
    for (std::size_t k = lo; k < i; ++k) s -= row[k] * b[k];
    b[i] = s;
  }
  for (std::size_t i = n_; i-- > 0;) {
    const std::size_t hi = std::min(n_ - 1, i + bw_);
    const double* row = &a_[i * width_ + bw_ - i];
    double s = b[i];
    for (std::size_t j = i + 1; j <= hi; ++j) s -= row[j] * b[j];
    b[i] = s / row[i];
  }
}

}  // namespace roadozone
