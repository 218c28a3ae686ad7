#include "convnorm/geometry.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <utility>

#include "convnorm/error.hpp"

namespace convnorm {

ConvGeometry ConvGeometry::make(std::size_t d_in, std::size_t d_out, std::size_t h_in,
                                std::size_t w_in, std::size_t k1, std::size_t k2,
                                std::size_t s1, std::size_t s2, std::size_t p1,
                                std::size_t p2) {
  ConvGeometry g{d_in, d_out, h_in, w_in, k1, k2, s1, s2, p1, p2};
  g.validate();
  return g;
}

void ConvGeometry::validate() const {
  if (d_in == 0 || d_out == 0 || h_in == 0 || w_in == 0 || k1 == 0 || k2 == 0 || s1 == 0 ||
      s2 == 0) {
    throw Error(ErrorCode::InvalidGeometry, "sizes and strides must be positive: " + describe());
  }
  if (k1 > h_in + 2 * p1 || k2 > w_in + 2 * p2) {
    throw Error(ErrorCode::InvalidGeometry,
                "kernel does not fit inside the padded input: " + describe());
  }
}

std::string ConvGeometry::describe() const {
  std::ostringstream os;
  os << "d_in=" << d_in << " d_out=" << d_out << " in=" << h_in << "x" << w_in
     << " k=" << k1 << "x" << k2 << " s=" << s1 << "," << s2 << " p=" << p1 << "," << p2;
  return os.str();
}

OutputDims output_dims(const ConvGeometry& g) { return {g.h_out(), g.w_out()}; }

namespace {

std::size_t smallest_positive_multiple_cover(std::size_t stride, std::size_t pad) {
  // smallest c >= 1 with c * stride >= pad
  return std::max<std::size_t>(1, (pad + stride - 1) / stride);
}

// Members along one axis for the class anchored at `anchor` (1-based).
std::vector<std::size_t> axis_members(std::size_t anchor, std::size_t kernel, std::size_t stride,
                                      std::size_t slack) {
  std::vector<std::size_t> out;
  for (std::size_t c = anchor; c <= kernel && c - anchor <= slack; c += stride) {
    out.push_back(c);
  }
  return out;
}

}  // namespace

bool check_assumption1(const ConvGeometry& g) {
  const std::size_t c1 = smallest_positive_multiple_cover(g.s1, g.p1);
  const std::size_t c2 = smallest_positive_multiple_cover(g.s2, g.p2);
  // k + c*s - p <= in, rearranged to stay unsigned
  return g.k1 + c1 * g.s1 <= g.h_in + g.p1 && g.k2 + c2 * g.s2 <= g.w_in + g.p2;
}

bool IndexClass::contains(KernelIndex idx) const {
  return std::binary_search(rows.begin(), rows.end(), idx.k) &&
         std::binary_search(cols.begin(), cols.end(), idx.t);
}

std::vector<KernelIndex> IndexClass::members() const {
  std::vector<KernelIndex> out;
  out.reserve(size());
  for (std::size_t k : rows) {
    for (std::size_t t : cols) out.push_back({k, t});
  }
  return out;
}

const IndexClass* IndexClassFamily::find(KernelIndex anchor) const {
  for (const auto& c : classes) {
    if (c.anchor == anchor) return &c;
  }
  return nullptr;
}

IndexClassFamily index_classes(const ConvGeometry& g, bool deduplicate) {
  g.validate();
  const std::size_t slack1 = g.h_in + 2 * g.p1 - g.k1;
  const std::size_t slack2 = g.w_in + 2 * g.p2 - g.k2;

  std::vector<std::vector<std::size_t>> row_sets(g.k1 + 1);
  std::vector<std::vector<std::size_t>> col_sets(g.k2 + 1);
  for (std::size_t a = 1; a <= g.k1; ++a) row_sets[a] = axis_members(a, g.k1, g.s1, slack1);
  for (std::size_t b = 1; b <= g.k2; ++b) col_sets[b] = axis_members(b, g.k2, g.s2, slack2);

  IndexClassFamily family;
  std::set<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> seen;
  for (std::size_t a = 1; a <= g.k1; ++a) {
    for (std::size_t b = 1; b <= g.k2; ++b) {
      if (deduplicate && !seen.emplace(row_sets[a], col_sets[b]).second) continue;
      family.classes.push_back({{a, b}, row_sets[a], col_sets[b]});
    }
  }
  return family;
}

}  // namespace convnorm
