#include "convnorm/kernel.hpp"

#include <cmath>
#include <string>

#include "convnorm/error.hpp"

namespace convnorm {

Kernel4D::Kernel4D(const ConvGeometry& geometry)
    : geometry_(geometry), values_(geometry.kernel_size(), 0.0) {
  geometry_.validate();
}

Kernel4D::Kernel4D(const ConvGeometry& geometry, std::vector<double> values)
    : geometry_(geometry), values_(std::move(values)) {
  geometry_.validate();
  if (values_.size() != geometry_.kernel_size()) {
    throw Error(ErrorCode::ShapeMismatch, "kernel has " + std::to_string(values_.size()) +
                                              " values, geometry needs " +
                                              std::to_string(geometry_.kernel_size()));
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteValue, "kernel entry is NaN or Inf");
  }
}

Kernel4D Kernel4D::scaled(double alpha) const {
  std::vector<double> out(values_);
  for (double& v : out) v *= alpha;
  return Kernel4D(geometry_, std::move(out));
}

}  // namespace convnorm
