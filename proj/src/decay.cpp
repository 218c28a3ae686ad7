#include "convnorm/decay.hpp"

#include <cmath>
#include <string>

#include "convnorm/error.hpp"
#include "convnorm/norms.hpp"
#include "norm_detail.hpp"

namespace convnorm {

namespace {

double sign(double v) { return v > 0.0 ? 1.0 : v < 0.0 ? -1.0 : 0.0; }

std::span<double> flat(Layer& layer) {
  if (auto* k = std::get_if<Kernel4D>(&layer)) return k->values();
  auto& m = std::get<Matrix>(layer);
  return {m.data(), static_cast<std::size_t>(m.size())};
}

std::vector<double> subgradient(const Layer& layer, NormKind kind) {
  if (const auto* k = std::get_if<Kernel4D>(&layer)) return norm_subgradient(*k, kind);
  const Matrix g = dense_subgradient(std::get<Matrix>(layer), kind);
  return {g.data(), g.data() + g.size()};
}

}  // namespace

std::string_view to_string(NormKind kind) noexcept {
  return kind == NormKind::L1 ? "l1" : "linf";
}

NormKind parse_norm_kind(std::string_view text) {
  if (text == "l1") return NormKind::L1;
  if (text == "linf") return NormKind::LINF;
  throw Error(ErrorCode::InvalidArgument, "unknown norm '" + std::string(text) + "'");
}

std::vector<double> norm_subgradient(const Kernel4D& kernel, NormKind kind) {
  const ConvGeometry& g = kernel.geometry();
  if (!check_assumption1(g)) {
    throw Error(ErrorCode::AssumptionViolated, "no closed-form subgradient for " + g.describe());
  }
  std::vector<double> grad(kernel.size(), 0.0);
  if (kind == NormKind::LINF) {
    const auto best = detail::linf_argmax(kernel);
    const std::size_t slice_len = g.d_in * g.k1 * g.k2;
    for (std::size_t n = best.channel * slice_len; n < (best.channel + 1) * slice_len; ++n) {
      grad[n] = sign(kernel.values()[n]);
    }
    return grad;
  }
  const auto best = detail::l1_argmax(kernel);
  for (std::size_t i = 0; i < g.d_out; ++i) {
    for (std::size_t k : best.cls.rows) {
      for (std::size_t t : best.cls.cols) {
        const std::size_t off = kernel.offset(i, best.channel, k - 1, t - 1);
        grad[off] = sign(kernel.values()[off]);
      }
    }
  }
  return grad;
}

Matrix dense_subgradient(const Matrix& w, NormKind kind) {
  Matrix grad = Matrix::Zero(w.rows(), w.cols());
  if (w.size() == 0) return grad;
  if (kind == NormKind::L1) {
    Eigen::Index best = 0;
    double best_sum = -1.0;
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
      const double sum = w.col(c).cwiseAbs().sum();
      if (sum > best_sum) {
        best_sum = sum;
        best = c;
      }
    }
    for (Eigen::Index r = 0; r < w.rows(); ++r) grad(r, best) = sign(w(r, best));
  } else {
    Eigen::Index best = 0;
    double best_sum = -1.0;
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      const double sum = w.row(r).cwiseAbs().sum();
      if (sum > best_sum) {
        best_sum = sum;
        best = r;
      }
    }
    for (Eigen::Index c = 0; c < w.cols(); ++c) grad(best, c) = sign(w(best, c));
  }
  return grad;
}

double layer_norm(const Layer& layer, NormKind kind) {
  if (const auto* k = std::get_if<Kernel4D>(&layer)) {
    return kind == NormKind::L1 ? l1_norm(*k) : linf_norm(*k);
  }
  const auto n = dense_norms(std::get<Matrix>(layer));
  return kind == NormKind::L1 ? n.l1 : n.linf;
}

std::size_t parameter_count(const Layer& layer) {
  if (const auto* k = std::get_if<Kernel4D>(&layer)) return k->size();
  return static_cast<std::size_t>(std::get<Matrix>(layer).size());
}

DecayState::DecayState(std::span<const Layer> layers, const DecayConfig& config)
    : config_(config) {
  if (layers.empty()) throw Error(ErrorCode::InvalidArgument, "no layers to regularize");
  if (!(config.gamma >= 0.0 && config.gamma < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "gamma must lie in [0, 1)");
  }
  if (!(config.beta >= 0.0)) throw Error(ErrorCode::InvalidArgument, "beta must be >= 0");
  if (!(config.step_size > 0.0)) throw Error(ErrorCode::InvalidArgument, "step size must be > 0");
  if (!(config.sgd_momentum >= 0.0 && config.sgd_momentum < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "optimizer momentum must lie in [0, 1)");
  }
  for (const Layer& layer : layers) {
    h_.emplace_back(parameter_count(layer), 0.0);
    velocity_.emplace_back(parameter_count(layer), 0.0);
  }
}

void DecayState::step(std::span<Layer> params, std::span<const std::vector<double>> task_grad,
                      NormKind kind) {
  if (params.size() != h_.size()) {
    throw Error(ErrorCode::ShapeMismatch, "expected " + std::to_string(h_.size()) + " layers, got " +
                                              std::to_string(params.size()));
  }
  if (!task_grad.empty() && task_grad.size() != h_.size()) {
    throw Error(ErrorCode::ShapeMismatch, "task gradient layer count does not match");
  }
  for (std::size_t l = 0; l < params.size(); ++l) {
    if (parameter_count(params[l]) != h_[l].size() ||
        (!task_grad.empty() && task_grad[l].size() != h_[l].size())) {
      throw Error(ErrorCode::ShapeMismatch, "layer " + std::to_string(l) + " changed shape");
    }
  }

  // All subgradients are taken at the pre-update parameters.
  std::vector<std::vector<double>> p;
  p.reserve(params.size());
  for (const Layer& layer : params) p.push_back(subgradient(layer, kind));

  const double gamma = config_.gamma;
  const double scale = config_.beta / static_cast<double>(h_.size());
  for (std::size_t l = 0; l < params.size(); ++l) {
    auto theta = flat(params[l]);
    auto& h = h_[l];
    auto& v = velocity_[l];
    for (std::size_t n = 0; n < theta.size(); ++n) {
      h[n] = gamma * h[n] + (1.0 - gamma) * p[l][n];
      const double g = (task_grad.empty() ? 0.0 : task_grad[l][n]) + scale * h[n];
      v[n] = config_.sgd_momentum * v[n] + g;
      theta[n] -= config_.step_size * v[n];
    }
  }
}

NormTrace run_decay_demo(std::vector<Layer>& layers, std::vector<std::string> names,
                         const DemoConfig& config) {
  if (names.size() != layers.size()) {
    throw Error(ErrorCode::ShapeMismatch, "one name per layer required");
  }
  DecayState state(layers, config.decay);
  NormTrace trace;
  trace.layer_names = std::move(names);
  auto record = [&] {
    std::vector<double> row;
    row.reserve(layers.size());
    for (const Layer& layer : layers) row.push_back(layer_norm(layer, config.kind));
    trace.norms.push_back(std::move(row));
  };
  record();
  for (std::size_t s = 0; s < config.steps; ++s) {
    state.step(layers, {}, config.kind);
    record();
  }
  return trace;
}

}  // namespace convnorm
