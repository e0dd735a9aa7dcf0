#pragma once

#include <cstdint>
#include <initializer_list>
#include <string_view>

#include "robustclone/matops.h"

namespace robustclone {

/// Counter-based generator: draw i of stream `key` is SplitMix64's finalizer
/// applied to key + (i + 1)·φ, where φ = 0x9E3779B97F4A7C15. Identical keys
/// give identical streams on every platform.
///
/// Gaussians come from the Box–Muller transform, consuming two uniforms per
/// pair and returning the sine branch on the following call.
class Rng {
 public:
  explicit Rng(std::uint64_t key) : key_(key) {}

  std::uint64_t key() const { return key_; }
  std::uint64_t NextU64();
  // Uniform on [0, 1) with 53 random bits.
  double Uniform();
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }
  double Normal();
  // Uniform integer in [0, n).
  std::uint64_t Below(std::uint64_t n);

  Matrix UniformMatrix(int rows, int cols, double lo, double hi);
  Vector NormalVector(int n);

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t Mix64(std::uint64_t x);

/// Seed for a sub-stream identified by an ordered list of tags.
std::uint64_t DeriveSeed(std::uint64_t seed,
                         std::initializer_list<std::uint64_t> tags);
std::uint64_t HashTag(std::string_view tag);

/// Draws N(0, Σ) vectors through a symmetric square root of Σ, which keeps
/// semidefinite (singular) covariances usable.
class GaussianSampler {
 public:
  explicit GaussianSampler(const SymMatrix& covariance);
  Vector Draw(Rng& rng) const;
  bool is_zero() const { return zero_; }
  int dim() const { return static_cast<int>(root_.rows()); }

 private:
  Matrix root_;
  bool zero_ = false;
};

}  // namespace robustclone
