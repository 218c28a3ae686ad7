#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "convnorm/geometry.hpp"

namespace convnorm {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Convolution kernel of shape d_out x d_in x k1 x k2 stored row-major,
/// bound to the geometry it is applied with.
///
/// Element access is 0-based: at(i, j, k, t) is the 1-based K[i+1, j+1, k+1, t+1].
class Kernel4D {
 public:
  /// Zero kernel.
  explicit Kernel4D(const ConvGeometry& geometry);

  /// Throws ShapeMismatch on wrong length and NonFiniteValue on NaN/Inf.
  Kernel4D(const ConvGeometry& geometry, std::vector<double> values);

  const ConvGeometry& geometry() const noexcept { return geometry_; }

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }

  std::size_t offset(std::size_t i, std::size_t j, std::size_t k, std::size_t t) const noexcept {
    return ((i * geometry_.d_in + j) * geometry_.k1 + k) * geometry_.k2 + t;
  }
  double at(std::size_t i, std::size_t j, std::size_t k, std::size_t t) const noexcept {
    return values_[offset(i, j, k, t)];
  }
  double& at(std::size_t i, std::size_t j, std::size_t k, std::size_t t) noexcept {
    return values_[offset(i, j, k, t)];
  }

  /// Same geometry, values multiplied by `alpha`.
  Kernel4D scaled(double alpha) const;

 private:
  ConvGeometry geometry_;
  std::vector<double> values_;
};

}  // namespace convnorm
