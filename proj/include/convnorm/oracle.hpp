#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "convnorm/kernel.hpp"

namespace convnorm {

// Brute-force ground truth. Nothing here depends on norms.hpp; the two are
// compared against each other in tests and in `convnorm verify`.

inline constexpr std::size_t kDefaultSizeCap = 100'000'000;

/// Entry cap for materialize(): CONVNORM_SIZE_CAP if set and parseable,
/// otherwise kDefaultSizeCap.
std::size_t default_size_cap();

/// Dense operator matrix M with rows = d_out*h_out*w_out and
/// cols = d_in*h_in*w_in. Inputs and outputs are vectorized channel-major,
/// then row-major over the spatial grid. Padding elements are not columns.
/// Throws SizeOverflow when rows*cols exceeds `size_cap`.
Matrix materialize(const Kernel4D& kernel, std::size_t size_cap = default_size_cap());

/// Cross-correlation with zero padding and strides, no bias. `input` has
/// d_in*h_in*w_in entries in the same order as the columns of M.
std::vector<double> conv_forward(const Kernel4D& kernel, std::span<const double> input);

/// Transpose of conv_forward: maps an output-shaped vector back to input shape.
std::vector<double> conv_adjoint(const Kernel4D& kernel, std::span<const double> output);

double matrix_l1(const Matrix& m);
double matrix_linf(const Matrix& m);
double matrix_frobenius(const Matrix& m);

/// Largest singular value from a dense SVD. Desk-scale only.
double dense_l2(const Matrix& m);

/// Matrix-free conv operator backed by an im2col buffer and a GEMM. Used for
/// power iteration where materializing M is out of the question.
class ConvOperator {
 public:
  explicit ConvOperator(const Kernel4D& kernel);

  std::size_t rows() const noexcept { return geometry_.output_size(); }
  std::size_t cols() const noexcept { return geometry_.input_size(); }

  void apply(std::span<const double> input, std::span<double> output);
  void apply_adjoint(std::span<const double> output, std::span<double> input);

 private:
  ConvGeometry geometry_;
  Matrix weights_;  // d_out x (d_in*k1*k2)
  Matrix patches_;  // (d_in*k1*k2) x (h_out*w_out)
};

struct PowerIterationResult {
  double sigma = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

struct PowerIterationOptions {
  std::size_t max_iters = 10'000;
  double tol = 1e-10;
  std::uint64_t seed = 42;
};

/// Estimates the largest singular value of the conv operator by alternating
/// forward and adjoint applications from a seeded random unit start vector.
/// Stops once successive estimates differ by less than `tol`; on hitting
/// `max_iters` the best estimate is returned with converged = false.
PowerIterationResult power_iteration_l2(const Kernel4D& kernel,
                                        const PowerIterationOptions& options = {});

/// Feedforward rectifier network with diagonal weights in which one pair of
/// consecutive layers has complementary zero patterns, so every input maps to 0
/// no matter how large the individual layer norms are.
struct ZeroLipschitzNet {
  std::vector<std::vector<double>> diagonals;
  std::size_t zero_pair = 0;  // layers zero_pair and zero_pair + 1 (0-based)

  std::size_t width() const noexcept { return diagonals.empty() ? 0 : diagonals.front().size(); }

  /// x <- max(x * d, 0) layer by layer.
  std::vector<double> forward(std::span<const double> input) const;

  /// Operator norm of layer i; identical for l1, l2 and linf on a diagonal map.
  double layer_norm(std::size_t i) const;
};

/// `layer_dims` lists the width of each layer (at least two, all equal, >= 2
/// so that both layers of the zero pair keep a large entry). Nonzero entries
/// have magnitude in [magnitude, 2*magnitude) and random sign.
ZeroLipschitzNet build_zero_lipschitz_net(std::span<const std::size_t> layer_dims,
                                          double magnitude, std::uint64_t seed);

}  // namespace convnorm
