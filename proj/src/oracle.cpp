#include "convnorm/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <random>
#include <string>

#include <Eigen/SVD>

#include "convnorm/error.hpp"

namespace convnorm {

namespace {

using Acc = long double;

void require_size(std::span<const double> v, std::size_t n, const char* what) {
  if (v.size() != n) {
    throw Error(ErrorCode::ShapeMismatch, std::string(what) + " has " + std::to_string(v.size()) +
                                              " entries, expected " + std::to_string(n));
  }
}

// Calls fn(row, col, kernel_offset) for every nonzero position of M, i.e. for
// every output element and kernel tap that lands on an unpadded input element.
template <typename Fn>
void for_each_tap(const Kernel4D& kernel, Fn&& fn) {
  const ConvGeometry& g = kernel.geometry();
  const std::size_t h_out = g.h_out();
  const std::size_t w_out = g.w_out();
  for (std::size_t i = 0; i < g.d_out; ++i) {
    for (std::size_t y = 0; y < h_out; ++y) {
      for (std::size_t x = 0; x < w_out; ++x) {
        const std::size_t row = (i * h_out + y) * w_out + x;
        for (std::size_t j = 0; j < g.d_in; ++j) {
          for (std::size_t k = 0; k < g.k1; ++k) {
            const std::size_t pr = y * g.s1 + k;  // row in padded coordinates
            if (pr < g.p1 || pr >= g.p1 + g.h_in) continue;
            for (std::size_t t = 0; t < g.k2; ++t) {
              const std::size_t pc = x * g.s2 + t;
              if (pc < g.p2 || pc >= g.p2 + g.w_in) continue;
              const std::size_t col = (j * g.h_in + (pr - g.p1)) * g.w_in + (pc - g.p2);
              fn(row, col, kernel.offset(i, j, k, t));
            }
          }
        }
      }
    }
  }
}

}  // namespace

std::size_t default_size_cap() {
  if (const char* env = std::getenv("CONVNORM_SIZE_CAP")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return kDefaultSizeCap;
}

Matrix materialize(const Kernel4D& kernel, std::size_t size_cap) {
  const ConvGeometry& g = kernel.geometry();
  const std::size_t rows = g.output_size();
  const std::size_t cols = g.input_size();
  if (cols != 0 && rows > size_cap / cols) {
    throw Error(ErrorCode::SizeOverflow, std::to_string(rows) + "x" + std::to_string(cols) +
                                             " operator exceeds the cap of " +
                                             std::to_string(size_cap) + " entries");
  }
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  const auto values = kernel.values();
  for_each_tap(kernel, [&](std::size_t r, std::size_t c, std::size_t off) {
    m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) += values[off];
  });
  return m;
}

std::vector<double> conv_forward(const Kernel4D& kernel, std::span<const double> input) {
  const ConvGeometry& g = kernel.geometry();
  require_size(input, g.input_size(), "conv input");
  const std::size_t h_out = g.h_out();
  const std::size_t w_out = g.w_out();
  std::vector<double> out(g.output_size(), 0.0);
  for (std::size_t i = 0; i < g.d_out; ++i) {
    for (std::size_t y = 0; y < h_out; ++y) {
      for (std::size_t x = 0; x < w_out; ++x) {
        Acc sum = 0;
        for (std::size_t j = 0; j < g.d_in; ++j) {
          for (std::size_t k = 0; k < g.k1; ++k) {
            const std::ptrdiff_t u = static_cast<std::ptrdiff_t>(y * g.s1 + k) -
                                     static_cast<std::ptrdiff_t>(g.p1);
            if (u < 0 || u >= static_cast<std::ptrdiff_t>(g.h_in)) continue;
            for (std::size_t t = 0; t < g.k2; ++t) {
              const std::ptrdiff_t v = static_cast<std::ptrdiff_t>(x * g.s2 + t) -
                                       static_cast<std::ptrdiff_t>(g.p2);
              if (v < 0 || v >= static_cast<std::ptrdiff_t>(g.w_in)) continue;
              sum += static_cast<Acc>(kernel.at(i, j, k, t)) *
                     input[(j * g.h_in + static_cast<std::size_t>(u)) * g.w_in +
                           static_cast<std::size_t>(v)];
            }
          }
        }
        out[(i * h_out + y) * w_out + x] = static_cast<double>(sum);
      }
    }
  }
  return out;
}

std::vector<double> conv_adjoint(const Kernel4D& kernel, std::span<const double> output) {
  const ConvGeometry& g = kernel.geometry();
  require_size(output, g.output_size(), "conv output");
  std::vector<double> in(g.input_size(), 0.0);
  const auto values = kernel.values();
  for_each_tap(kernel, [&](std::size_t r, std::size_t c, std::size_t off) {
    in[c] += values[off] * output[r];
  });
  return in;
}

double matrix_l1(const Matrix& m) {
  Acc best = 0;
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    Acc sum = 0;
    for (Eigen::Index r = 0; r < m.rows(); ++r) sum += std::fabs(m(r, c));
    best = std::max(best, sum);
  }
  return static_cast<double>(best);
}

double matrix_linf(const Matrix& m) {
  Acc best = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Acc sum = 0;
    for (Eigen::Index c = 0; c < m.cols(); ++c) sum += std::fabs(m(r, c));
    best = std::max(best, sum);
  }
  return static_cast<double>(best);
}

double matrix_frobenius(const Matrix& m) {
  Acc sum = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) sum += static_cast<Acc>(m(r, c)) * m(r, c);
  }
  return std::sqrt(static_cast<double>(sum));
}

double dense_l2(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  // JacobiSVD rather than BDCSVD: Eigen 3.4.0's BDCSVD overestimates the top
  // singular value on some conv matrices with paired singular values.
  Eigen::MatrixXd col_major = m;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(col_major);
  return svd.singularValues()(0);
}

// ---------------------------------------------------------------------------

ConvOperator::ConvOperator(const Kernel4D& kernel)
    : geometry_(kernel.geometry()),
      weights_(static_cast<Eigen::Index>(geometry_.d_out),
               static_cast<Eigen::Index>(geometry_.d_in * geometry_.k1 * geometry_.k2)),
      patches_(static_cast<Eigen::Index>(geometry_.d_in * geometry_.k1 * geometry_.k2),
               static_cast<Eigen::Index>(geometry_.h_out() * geometry_.w_out())) {
  std::copy(kernel.values().begin(), kernel.values().end(), weights_.data());
}

void ConvOperator::apply(std::span<const double> input, std::span<double> output) {
  const ConvGeometry& g = geometry_;
  require_size(input, cols(), "operator input");
  require_size(output, rows(), "operator output");
  const std::size_t h_out = g.h_out();
  const std::size_t w_out = g.w_out();

  // im2col: patch row (j,k,t), patch column (y,x)
  for (std::size_t j = 0; j < g.d_in; ++j) {
    for (std::size_t k = 0; k < g.k1; ++k) {
      for (std::size_t t = 0; t < g.k2; ++t) {
        double* dst = patches_.row(static_cast<Eigen::Index>((j * g.k1 + k) * g.k2 + t)).data();
        for (std::size_t y = 0; y < h_out; ++y) {
          const std::size_t pr = y * g.s1 + k;
          const bool row_inside = pr >= g.p1 && pr < g.p1 + g.h_in;
          for (std::size_t x = 0; x < w_out; ++x) {
            const std::size_t pc = x * g.s2 + t;
            double v = 0.0;
            if (row_inside && pc >= g.p2 && pc < g.p2 + g.w_in) {
              v = input[(j * g.h_in + (pr - g.p1)) * g.w_in + (pc - g.p2)];
            }
            dst[y * w_out + x] = v;
          }
        }
      }
    }
  }
  Eigen::Map<Matrix> out(output.data(), static_cast<Eigen::Index>(g.d_out),
                         static_cast<Eigen::Index>(h_out * w_out));
  out.noalias() = weights_ * patches_;
}

void ConvOperator::apply_adjoint(std::span<const double> output, std::span<double> input) {
  const ConvGeometry& g = geometry_;
  require_size(output, rows(), "operator output");
  require_size(input, cols(), "operator input");
  const std::size_t h_out = g.h_out();
  const std::size_t w_out = g.w_out();

  Eigen::Map<const Matrix> out(output.data(), static_cast<Eigen::Index>(g.d_out),
                               static_cast<Eigen::Index>(h_out * w_out));
  patches_.noalias() = weights_.transpose() * out;

  // col2im: scatter-add the patches back onto the unpadded input
  std::fill(input.begin(), input.end(), 0.0);
  for (std::size_t j = 0; j < g.d_in; ++j) {
    for (std::size_t k = 0; k < g.k1; ++k) {
      for (std::size_t t = 0; t < g.k2; ++t) {
        const double* src =
            patches_.row(static_cast<Eigen::Index>((j * g.k1 + k) * g.k2 + t)).data();
        for (std::size_t y = 0; y < h_out; ++y) {
          const std::size_t pr = y * g.s1 + k;
          if (pr < g.p1 || pr >= g.p1 + g.h_in) continue;
          for (std::size_t x = 0; x < w_out; ++x) {
            const std::size_t pc = x * g.s2 + t;
            if (pc < g.p2 || pc >= g.p2 + g.w_in) continue;
            input[(j * g.h_in + (pr - g.p1)) * g.w_in + (pc - g.p2)] += src[y * w_out + x];
          }
        }
      }
    }
  }
}

PowerIterationResult power_iteration_l2(const Kernel4D& kernel,
                                        const PowerIterationOptions& options) {
  ConvOperator op(kernel);
  std::vector<double> x(op.cols());
  std::vector<double> y(op.rows());

  std::mt19937_64 gen(options.seed);
  for (double& v : x) v = 2.0 * (static_cast<double>(gen() >> 11) * 0x1.0p-53) - 1.0;
  auto normalize = [](std::vector<double>& v) {
    const double n = Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())).norm();
    if (n > 0.0) {
      for (double& e : v) e /= n;
    }
    return n;
  };
  normalize(x);

  PowerIterationResult result;
  for (std::size_t it = 1; it <= options.max_iters; ++it) {
    result.iterations = it;
    op.apply(x, y);
    const double y_norm =
        Eigen::Map<const Vector>(y.data(), static_cast<Eigen::Index>(y.size())).norm();
    if (y_norm == 0.0) {
      result.sigma = 0.0;
      result.converged = true;
      return result;
    }
    op.apply_adjoint(y, x);
    // ||A^T A x|| / ||A x|| for unit x: a lower bound on sigma_max that
    // converges faster than ||A x|| alone.
    const double estimate = normalize(x) / y_norm;
    const double delta = std::fabs(estimate - result.sigma);
    result.sigma = std::max(result.sigma, estimate);
    if (delta < options.tol) {
      result.converged = true;
      return result;
    }
  }
  return result;
}

// ---------------------------------------------------------------------------

std::vector<double> ZeroLipschitzNet::forward(std::span<const double> input) const {
  if (input.size() != width()) {
    throw Error(ErrorCode::ShapeMismatch, "network input has " + std::to_string(input.size()) +
                                              " entries, expected " + std::to_string(width()));
  }
  std::vector<double> x(input.begin(), input.end());
  for (const auto& d : diagonals) {
    for (std::size_t n = 0; n < x.size(); ++n) x[n] = std::max(x[n] * d[n], 0.0);
  }
  return x;
}

double ZeroLipschitzNet::layer_norm(std::size_t i) const {
  double best = 0.0;
  for (double v : diagonals.at(i)) best = std::max(best, std::fabs(v));
  return best;
}

ZeroLipschitzNet build_zero_lipschitz_net(std::span<const std::size_t> layer_dims,
                                          double magnitude, std::uint64_t seed) {
  if (layer_dims.size() < 2) {
    throw Error(ErrorCode::InvalidArgument, "need at least two layers");
  }
  const std::size_t width = layer_dims.front();
  if (width < 2 || !std::all_of(layer_dims.begin(), layer_dims.end(),
                                [width](std::size_t d) { return d == width; })) {
    throw Error(ErrorCode::InvalidArgument,
                "diagonal layers need one common width of at least 2");
  }
  if (!(magnitude > 0.0) || !std::isfinite(magnitude)) {
    throw Error(ErrorCode::InvalidArgument, "magnitude must be positive and finite");
  }

  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto draw = [&] { return (gen() & 1 ? 1.0 : -1.0) * magnitude * (1.0 + unit(gen)); };

  ZeroLipschitzNet net;
  net.zero_pair = static_cast<std::size_t>(gen() % (layer_dims.size() - 1));
  net.diagonals.assign(layer_dims.size(), std::vector<double>(width));
  for (auto& d : net.diagonals) {
    for (double& v : d) v = draw();
  }
  auto& first = net.diagonals[net.zero_pair];
  auto& second = net.diagonals[net.zero_pair + 1];
  for (std::size_t n = 0; n < width; ++n) {
    // coordinates 0 and 1 pin one survivor in each layer of the pair
    const bool zero_first = n == 0 ? false : n == 1 ? true : (gen() & 1) != 0;
    (zero_first ? first : second)[n] = 0.0;
  }
  return net;
}

}  // namespace convnorm
