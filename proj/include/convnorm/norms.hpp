#pragma once

#include <optional>
#include <span>

#include "convnorm/kernel.hpp"

namespace convnorm {

// Closed-form operator norms of a convolution computed from its kernel alone.
// l1_norm, linf_norm and l2_upper_bound require check_assumption1 and throw
// Error(AssumptionViolated) otherwise; the brute-force routines in oracle.hpp
// remain available for such geometries.

/// Max over input channels j and index classes A of sum_{(k,t) in A} sum_i |K[i,j,k,t]|.
double l1_norm(const Kernel4D& kernel);

/// Max over output channels i of sum_{j,k,t} |K[i,j,k,t]|.
double linf_norm(const Kernel4D& kernel);

/// sqrt(h_out * w_out * sum K^2), an upper bound on the spectral norm.
double l2_upper_bound(const Kernel4D& kernel);

/// Frobenius norm of the operator matrix. Exact only without padding; throws
/// PaddingPresent when p1 or p2 is nonzero.
double frobenius_exact(const Kernel4D& kernel);

struct DenseNorms {
  double l1;
  double linf;
};

/// Max absolute column sum and max absolute row sum of a weight matrix that maps
/// R^cols -> R^rows.
DenseNorms dense_norms(const Matrix& w);

/// Operator norm of inference-time batch norm: max_i |gamma_i| / sigma_i.
/// Throws NonPositiveSigma or ShapeMismatch.
double bn_norm(std::span<const double> gamma, std::span<const double> sigma);

struct NormReport {
  std::optional<double> l1;
  std::optional<double> linf;
  std::optional<double> l2_upper;
  std::optional<double> frobenius;  // present iff p1 = p2 = 0
  bool assumption1_holds = false;
  bool oracle_fallback = false;  // formula values omitted; caller should use the oracle
};

NormReport norm_report(const Kernel4D& kernel);

}  // namespace convnorm
