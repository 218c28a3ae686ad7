#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "convnorm/kernel.hpp"

namespace convnorm {

enum class NormKind { L1, LINF };

std::string_view to_string(NormKind kind) noexcept;
NormKind parse_norm_kind(std::string_view text);  // "l1" | "linf"

/// Subgradient of l1_norm / linf_norm with respect to the kernel entries, in
/// the kernel's row-major layout. Entries are in {-1, 0, 1}; sign(0) = 0.
/// Ties in the arg-max go to the lowest channel index, then the smallest anchor.
std::vector<double> norm_subgradient(const Kernel4D& kernel, NormKind kind);

/// Same for a dense weight matrix: signs on the arg-max column (L1) or row (LINF).
Matrix dense_subgradient(const Matrix& w, NormKind kind);

/// A layer whose operator norm is regularized.
using Layer = std::variant<Kernel4D, Matrix>;

double layer_norm(const Layer& layer, NormKind kind);
std::size_t parameter_count(const Layer& layer);

struct DecayConfig {
  double gamma = 0.5;  // momentum of the norm-gradient moving average
  double beta = 1.0;   // regularization strength
  double step_size = 1e-2;
  double sgd_momentum = 0.0;  // heavy-ball momentum of the outer optimizer; 0 = plain GD
};

/// Mutable optimizer state. `h` holds the moving average of the norm
/// subgradients, one buffer per layer, initialized to zero.
class DecayState {
 public:
  DecayState(std::span<const Layer> layers, const DecayConfig& config);

  const DecayConfig& config() const noexcept { return config_; }
  std::size_t layer_count() const noexcept { return h_.size(); }
  std::span<const double> momentum(std::size_t layer) const { return h_.at(layer); }

  /// One iteration: p = norm subgradients at the current parameters,
  /// h <- gamma*h + (1-gamma)*p, g <- task_grad + (beta/N)*h, params <- SGD(params, g).
  /// `task_grad` may be empty (treated as zero); otherwise one buffer per layer.
  /// Throws ShapeMismatch.
  void step(std::span<Layer> params, std::span<const std::vector<double>> task_grad, NormKind kind);

 private:
  DecayConfig config_;
  std::vector<std::vector<double>> h_;
  std::vector<std::vector<double>> velocity_;
};

struct NormTrace {
  std::vector<std::string> layer_names;
  // norms[step][layer]; step 0 is the initial state, so steps + 1 rows.
  std::vector<std::vector<double>> norms;
};

struct DemoConfig {
  NormKind kind = NormKind::L1;
  DecayConfig decay;
  std::size_t steps = 200;
};

/// Runs DecayState::step with zero task gradient and records every layer's
/// norm after each step. `layers` is updated in place.
NormTrace run_decay_demo(std::vector<Layer>& layers, std::vector<std::string> names,
                         const DemoConfig& config);

}  // namespace convnorm
