#include "convnorm/norms.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "convnorm/error.hpp"
#include "norm_detail.hpp"

namespace convnorm {

namespace {

// Fixed-order sums with an extended-precision accumulator.
using Acc = long double;

void require_assumption1(const ConvGeometry& g) {
  if (!check_assumption1(g)) {
    throw Error(ErrorCode::AssumptionViolated,
                "closed-form norms are only exact when the kernel fits inside the unpadded "
                "input; use the oracle for " +
                    g.describe());
  }
}

double sum_of_squares(std::span<const double> values) {
  Acc acc = 0;
  for (double v : values) acc += static_cast<Acc>(v) * v;
  return static_cast<double>(acc);
}

double bound_from_squares(const ConvGeometry& g, double squares) {
  return std::sqrt(static_cast<double>(g.h_out() * g.w_out()) * squares);
}

}  // namespace

namespace detail {

L1Argmax l1_argmax(const Kernel4D& kernel) {
  const ConvGeometry& g = kernel.geometry();

  // column_mass[j][k][t] = sum_i |K[i,j,k,t]|
  const std::size_t plane = g.k1 * g.k2;
  std::vector<Acc> column_mass(g.d_in * plane, 0);
  const auto values = kernel.values();
  for (std::size_t i = 0; i < g.d_out; ++i) {
    const double* slice = values.data() + i * g.d_in * plane;
    for (std::size_t n = 0; n < g.d_in * plane; ++n) column_mass[n] += std::fabs(slice[n]);
  }

  IndexClassFamily family = index_classes(g);
  Acc best = -1;
  std::size_t best_channel = 0;
  std::size_t best_class = 0;
  for (std::size_t j = 0; j < g.d_in; ++j) {
    const Acc* mass = column_mass.data() + j * plane;
    for (std::size_t c = 0; c < family.classes.size(); ++c) {
      const IndexClass& cls = family.classes[c];
      Acc sum = 0;
      for (std::size_t k : cls.rows) {
        for (std::size_t t : cls.cols) sum += mass[(k - 1) * g.k2 + (t - 1)];
      }
      if (sum > best) {
        best = sum;
        best_channel = j;
        best_class = c;
      }
    }
  }
  return {static_cast<double>(best), best_channel, std::move(family.classes[best_class])};
}

LinfArgmax linf_argmax(const Kernel4D& kernel) {
  const ConvGeometry& g = kernel.geometry();
  const std::size_t slice_len = g.d_in * g.k1 * g.k2;
  const auto values = kernel.values();
  Acc best = -1;
  std::size_t best_channel = 0;
  for (std::size_t i = 0; i < g.d_out; ++i) {
    Acc sum = 0;
    for (double v : values.subspan(i * slice_len, slice_len)) sum += std::fabs(v);
    if (sum > best) {
      best = sum;
      best_channel = i;
    }
  }
  return {static_cast<double>(best), best_channel};
}

}  // namespace detail

double l1_norm(const Kernel4D& kernel) {
  require_assumption1(kernel.geometry());
  return detail::l1_argmax(kernel).value;
}

double linf_norm(const Kernel4D& kernel) {
  require_assumption1(kernel.geometry());
  return detail::linf_argmax(kernel).value;
}

double l2_upper_bound(const Kernel4D& kernel) {
  require_assumption1(kernel.geometry());
  return bound_from_squares(kernel.geometry(), sum_of_squares(kernel.values()));
}

double frobenius_exact(const Kernel4D& kernel) {
  const ConvGeometry& g = kernel.geometry();
  if (g.p1 != 0 || g.p2 != 0) {
    throw Error(ErrorCode::PaddingPresent,
                "the closed-form Frobenius norm is exact only without padding");
  }
  require_assumption1(g);
  return bound_from_squares(g, sum_of_squares(kernel.values()));
}

DenseNorms dense_norms(const Matrix& w) {
  Acc best_col = 0;
  for (Eigen::Index c = 0; c < w.cols(); ++c) {
    Acc sum = 0;
    for (Eigen::Index r = 0; r < w.rows(); ++r) sum += std::fabs(w(r, c));
    best_col = std::max(best_col, sum);
  }
  Acc best_row = 0;
  for (Eigen::Index r = 0; r < w.rows(); ++r) {
    Acc sum = 0;
    for (Eigen::Index c = 0; c < w.cols(); ++c) sum += std::fabs(w(r, c));
    best_row = std::max(best_row, sum);
  }
  return {static_cast<double>(best_col), static_cast<double>(best_row)};
}

double bn_norm(std::span<const double> gamma, std::span<const double> sigma) {
  if (gamma.size() != sigma.size()) {
    throw Error(ErrorCode::ShapeMismatch, "gamma has " + std::to_string(gamma.size()) +
                                              " entries, sigma has " +
                                              std::to_string(sigma.size()));
  }
  double best = 0.0;
  for (std::size_t i = 0; i < gamma.size(); ++i) {
    if (!(sigma[i] > 0.0)) {
      throw Error(ErrorCode::NonPositiveSigma, "sigma[" + std::to_string(i) + "] must be > 0");
    }
    best = std::max(best, std::fabs(gamma[i]) / sigma[i]);
  }
  return best;
}

NormReport norm_report(const Kernel4D& kernel) {
  const ConvGeometry& g = kernel.geometry();
  NormReport report;
  report.assumption1_holds = check_assumption1(g);
  if (g.p1 == 0 && g.p2 == 0) {
    // Without padding every output row carries a full kernel slice, so this
    // is exact whether or not the kernel-fit condition holds.
    report.frobenius = bound_from_squares(g, sum_of_squares(kernel.values()));
  }
  if (!report.assumption1_holds) {
    report.oracle_fallback = true;
    return report;
  }
  report.l1 = l1_norm(kernel);
  report.linf = linf_norm(kernel);
  report.l2_upper = l2_upper_bound(kernel);
  return report;
}

}  // namespace convnorm
