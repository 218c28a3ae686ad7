#pragma once

#include <compare>
#include <cstddef>
#include <string>
#include <vector>

namespace convnorm {

/// Shape of a 2D multi-channel convolution: channels, unpadded input size,
/// kernel size, strides and symmetric zero padding.
///
/// Only plain convolutions are representable. Dilation, groups and
/// asymmetric padding are rejected by `make`.
struct ConvGeometry {
  std::size_t d_in = 1;
  std::size_t d_out = 1;
  std::size_t h_in = 1;
  std::size_t w_in = 1;
  std::size_t k1 = 1;
  std::size_t k2 = 1;
  std::size_t s1 = 1;
  std::size_t s2 = 1;
  std::size_t p1 = 0;
  std::size_t p2 = 0;

  /// Validated constructor. Throws Error(InvalidGeometry) when a size is zero
  /// or the kernel does not fit inside the padded input.
  static ConvGeometry make(std::size_t d_in, std::size_t d_out, std::size_t h_in,
                           std::size_t w_in, std::size_t k1, std::size_t k2,
                           std::size_t s1 = 1, std::size_t s2 = 1, std::size_t p1 = 0,
                           std::size_t p2 = 0);

  /// Re-checks the invariants of an aggregate-initialized value.
  void validate() const;

  std::size_t h_out() const noexcept { return (h_in + 2 * p1 - k1) / s1 + 1; }
  std::size_t w_out() const noexcept { return (w_in + 2 * p2 - k2) / s2 + 1; }

  std::size_t input_size() const noexcept { return d_in * h_in * w_in; }
  std::size_t output_size() const noexcept { return d_out * h_out() * w_out(); }
  std::size_t kernel_size() const noexcept { return d_out * d_in * k1 * k2; }

  bool operator==(const ConvGeometry&) const = default;

  std::string describe() const;
};

struct OutputDims {
  std::size_t h_out;
  std::size_t w_out;
  bool operator==(const OutputDims&) const = default;
};

OutputDims output_dims(const ConvGeometry& g);

/// True when the kernel can be placed entirely on unpadded input at the first
/// stride-aligned position past the padding. c = max(1, ceil(p / s)).
bool check_assumption1(const ConvGeometry& g);

/// Position in the last two kernel dimensions. 1-based: k in [1, k1], t in [1, k2].
struct KernelIndex {
  std::size_t k;
  std::size_t t;
  auto operator<=>(const KernelIndex&) const = default;
};

/// One equivalence class of kernel positions: every member is congruent to the
/// anchor modulo the strides and lies within the sliding range of the kernel.
/// The member set is the Cartesian product of `rows` and `cols`.
struct IndexClass {
  KernelIndex anchor;
  std::vector<std::size_t> rows;  // 1-based k values, ascending
  std::vector<std::size_t> cols;  // 1-based t values, ascending

  std::size_t size() const noexcept { return rows.size() * cols.size(); }
  bool contains(KernelIndex idx) const;
  std::vector<KernelIndex> members() const;
};

struct IndexClassFamily {
  std::vector<IndexClass> classes;

  /// First class (in anchor order) whose anchor equals `anchor`, or nullptr.
  /// After deduplication only the smallest anchor of a duplicate group is kept.
  const IndexClass* find(KernelIndex anchor) const;
};

/// Enumerates the index classes of the kernel. Classes with identical member
/// sets are collapsed onto the lexicographically smallest anchor unless
/// `deduplicate` is false.
IndexClassFamily index_classes(const ConvGeometry& g, bool deduplicate = true);

}  // namespace convnorm
