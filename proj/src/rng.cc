#include "robustclone/rng.h"

#include <cmath>

#include "robustclone/errors.h"

namespace robustclone {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t Mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t Rng::NextU64() {
  ++counter_;
  return Mix64(key_ + counter_ * kGolden);
}

double Rng::Uniform() {
  return static_cast<double>(NextU64() >> 11) * 0x1.0p-53;
}

double Rng::Normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // u1 ∈ (0, 1] keeps the logarithm finite.
  const double u1 = static_cast<double>((NextU64() >> 11) + 1) * 0x1.0p-53;
  const double u2 = Uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * M_PI * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

std::uint64_t Rng::Below(std::uint64_t n) {
  if (n == 0) throw ValidationError("Rng::Below: n must be positive");
  // Rejection keeps the result unbiased.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = NextU64();
  } while (x >= limit);
  return x % n;
}

Matrix Rng::UniformMatrix(int rows, int cols, double lo, double hi) {
  Matrix m(rows, cols);
  // Row-major draw order so that generated matrices read naturally.
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = Uniform(lo, hi);
  }
  return m;
}

Vector Rng::NormalVector(int n) {
  Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = Normal();
  return v;
}

std::uint64_t DeriveSeed(std::uint64_t seed,
                         std::initializer_list<std::uint64_t> tags) {
  std::uint64_t h = Mix64(seed ^ 0x6A09E667F3BCC908ULL);
  for (std::uint64_t t : tags) h = Mix64(h ^ Mix64(t + kGolden));
  return h;
}

std::uint64_t HashTag(std::string_view tag) {
  // FNV-1a, then mixed.
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : tag) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return Mix64(h);
}

GaussianSampler::GaussianSampler(const SymMatrix& covariance) {
  const int n = covariance.dim();
  if (covariance.norm() == 0.0) {
    root_ = Matrix::Zero(n, n);
    zero_ = true;
    return;
  }
  const SymEig eig = sym_eig(covariance, "noise covariance");
  if (eig.values(0) < -1e-12 * covariance.norm()) {
    throw ValidationError("noise covariance must be positive semidefinite");
  }
  const Vector root = eig.values.cwiseMax(0.0).cwiseSqrt();
  root_ = eig.vectors * root.asDiagonal() * eig.vectors.transpose();
}

Vector GaussianSampler::Draw(Rng& rng) const {
  const Vector z = rng.NormalVector(dim());
  if (zero_) return Vector::Zero(dim());
  return root_ * z;
}

}  // namespace robustclone
