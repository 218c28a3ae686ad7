#include <doctest.h>

#include <cmath>
#include <random>

#include "convnorm/error.hpp"
#include "convnorm/norms.hpp"
#include "convnorm/oracle.hpp"
#include "support.hpp"

using namespace convnorm;
using namespace convnorm::testing;

namespace {

ConvGeometry square(std::size_t d_out, std::size_t d_in, std::size_t k, std::size_t h,
                    std::size_t s = 1, std::size_t p = 0) {
  return ConvGeometry::make(d_in, d_out, h, h, k, k, s, s, p, p);
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::Io;
}

}  // namespace

TEST_CASE("Kernel4D rejects bad input") {
  const auto g = square(1, 1, 2, 3);
  CHECK(code_of([&] { Kernel4D(g, {1, 2, 3}); }) == ErrorCode::ShapeMismatch);
  CHECK(code_of([&] { Kernel4D(g, {1, 2, NAN, 4}); }) == ErrorCode::NonFiniteValue);
  CHECK(code_of([&] { Kernel4D(g, {1, 2, INFINITY, 4}); }) == ErrorCode::NonFiniteValue);
  const Kernel4D k(g, {1, 2, 3, 4});
  CHECK(k.at(0, 0, 1, 0) == 3);
}

TEST_CASE("zero kernel has zero norms") {
  const Kernel4D k(square(3, 2, 3, 6, 2, 1));
  CHECK(l1_norm(k) == 0.0);
  CHECK(linf_norm(k) == 0.0);
  CHECK(l2_upper_bound(k) == 0.0);
  const Kernel4D unpadded(square(3, 2, 3, 6));
  CHECK(frobenius_exact(unpadded) == 0.0);
}

TEST_CASE("l1 / linf worked examples") {
  SUBCASE("two output channels, 1x1 kernel") {
    const Kernel4D k(square(2, 1, 1, 3), {3, -4});
    CHECK(l1_norm(k) == doctest::Approx(7).epsilon(1e-12));
    CHECK(linf_norm(k) == doctest::Approx(4).epsilon(1e-12));
    const Matrix m = materialize(k);
    CHECK(matrix_l1(m) == doctest::Approx(7).epsilon(1e-12));
    CHECK(matrix_linf(m) == doctest::Approx(4).epsilon(1e-12));
  }
  SUBCASE("3x3 ones, stride 2: largest class has four members") {
    const Kernel4D k(square(1, 1, 3, 7, 2), std::vector<double>(9, 1.0));
    CHECK(l1_norm(k) == doctest::Approx(4).epsilon(1e-12));
    CHECK(matrix_l1(materialize(k)) == doctest::Approx(4).epsilon(1e-12));
  }
  SUBCASE("2x2 kernel") {
    const Kernel4D k(square(1, 1, 2, 3), {1, -2, 3, -4});
    CHECK(linf_norm(k) == doctest::Approx(10).epsilon(1e-12));
    CHECK(matrix_linf(materialize(k)) == doctest::Approx(10).epsilon(1e-12));
  }
}

TEST_CASE("l2 upper bound and Frobenius examples") {
  const Kernel4D two(square(1, 1, 1, 2), {2});
  CHECK(l2_upper_bound(two) == doctest::Approx(4));
  CHECK(frobenius_exact(two) == doctest::Approx(4));
  CHECK(dense_l2(materialize(two)) == doctest::Approx(2));

  const Kernel4D ones(square(1, 1, 3, 5), std::vector<double>(9, 1.0));
  CHECK(l2_upper_bound(ones) == doctest::Approx(9));
  CHECK(dense_l2(materialize(ones)) <= 9.0);

  std::mt19937_64 gen(3);
  const Kernel4D rnd = random_kernel(gen, square(2, 2, 3, 6));
  CHECK(rel_close(frobenius_exact(rnd), matrix_frobenius(materialize(rnd)), 1e-12));
}

TEST_CASE("error policy") {
  const Kernel4D bad(square(1, 1, 5, 5), std::vector<double>(25, 1.0));
  REQUIRE_FALSE(check_assumption1(bad.geometry()));
  CHECK(code_of([&] { l1_norm(bad); }) == ErrorCode::AssumptionViolated);
  CHECK(code_of([&] { linf_norm(bad); }) == ErrorCode::AssumptionViolated);
  CHECK(code_of([&] { l2_upper_bound(bad); }) == ErrorCode::AssumptionViolated);
  CHECK(code_of([&] { frobenius_exact(bad); }) == ErrorCode::AssumptionViolated);

  const Kernel4D padded(square(1, 1, 3, 8, 1, 1), std::vector<double>(9, 1.0));
  CHECK(code_of([&] { frobenius_exact(padded); }) == ErrorCode::PaddingPresent);

  const auto report = norm_report(bad);
  CHECK_FALSE(report.assumption1_holds);
  CHECK(report.oracle_fallback);
  CHECK_FALSE(report.l1);
  CHECK_FALSE(report.linf);
  CHECK_FALSE(report.l2_upper);
  REQUIRE(report.frobenius);
  CHECK(*report.frobenius == doctest::Approx(matrix_frobenius(materialize(bad))));
}

TEST_CASE("norm_report bundles the formulas") {
  std::mt19937_64 gen(5);
  const Kernel4D padded = random_kernel(gen, square(2, 3, 3, 8, 2, 1));
  const auto r = norm_report(padded);
  CHECK(r.assumption1_holds);
  CHECK_FALSE(r.oracle_fallback);
  CHECK(*r.l1 == l1_norm(padded));
  CHECK(*r.linf == linf_norm(padded));
  CHECK(*r.l2_upper == l2_upper_bound(padded));
  CHECK_FALSE(r.frobenius);

  const Kernel4D plain = random_kernel(gen, square(2, 3, 3, 8));
  CHECK(norm_report(plain).frobenius);
}

TEST_CASE("dense_norms") {
  CHECK(dense_norms(Matrix::Zero(3, 2)).l1 == 0.0);
  const auto id = dense_norms(Matrix::Identity(3, 3));
  CHECK(id.l1 == 1.0);
  CHECK(id.linf == 1.0);
  Matrix w(2, 2);
  w << 1, -2, 3, -4;
  const auto n = dense_norms(w);
  CHECK(n.l1 == 6.0);
  CHECK(n.linf == 7.0);
}

TEST_CASE("bn_norm") {
  const std::vector<double> same{0.5, 2.0, 3.0};
  CHECK(bn_norm(same, same) == 1.0);
  CHECK(bn_norm(std::vector<double>{1, 2}, std::vector<double>{1, 1}) == 2.0);
  CHECK(bn_norm(std::vector<double>{-3, 1}, std::vector<double>{1, 2}) == 3.0);
  CHECK(code_of([] { bn_norm(std::vector<double>{1}, std::vector<double>{0}); }) ==
        ErrorCode::NonPositiveSigma);
  CHECK(code_of([] { bn_norm(std::vector<double>{1, 2}, std::vector<double>{1}); }) ==
        ErrorCode::ShapeMismatch);

  // against the dense diagonal operator
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = -3.0;
  d(1, 1) = 0.5;
  CHECK(dense_norms(d).l1 == 3.0);
  CHECK(dense_l2(d) == doctest::Approx(3.0));
}

// ---------------------------------------------------------------------------
// properties

TEST_CASE("property: formulas equal the materialized operator norms") {
  std::mt19937_64 gen(101);
  for (int trial = 0; trial < 400; ++trial) {
    const ConvGeometry g = random_geometry(gen);
    const Kernel4D k = random_kernel(gen, g);
    const Matrix m = materialize(k);
    INFO(g.describe());
    CHECK(rel_close(l1_norm(k), matrix_l1(m), 1e-9));
    CHECK(rel_close(linf_norm(k), matrix_linf(m), 1e-9));
    CHECK(l2_upper_bound(k) >= dense_l2(m) - 1e-6);
  }
}

TEST_CASE("property: sparse and integer kernels") {
  // Many exact zeros make column supports shrink; the formula must still match.
  std::mt19937_64 gen(202);
  std::uniform_int_distribution<int> digit(-3, 3);
  std::bernoulli_distribution keep(0.3);
  for (int trial = 0; trial < 200; ++trial) {
    const ConvGeometry g = random_geometry(gen);
    std::vector<double> v(g.kernel_size());
    for (double& x : v) x = keep(gen) ? digit(gen) : 0.0;
    const Kernel4D k(g, v);
    const Matrix m = materialize(k);
    INFO(g.describe());
    CHECK(l1_norm(k) == matrix_l1(m));
    CHECK(linf_norm(k) == matrix_linf(m));
  }
}

TEST_CASE("property: homogeneity and subadditivity") {
  std::mt19937_64 gen(303);
  std::uniform_real_distribution<double> alpha_dist(-5.0, 5.0);
  for (int trial = 0; trial < 200; ++trial) {
    const ConvGeometry g = random_geometry(gen);
    const Kernel4D a = random_kernel(gen, g);
    const Kernel4D b = random_kernel(gen, g);
    const double alpha = alpha_dist(gen);
    const Kernel4D scaled = a.scaled(alpha);
    CHECK(rel_close(l1_norm(scaled), std::fabs(alpha) * l1_norm(a), 1e-12));
    CHECK(rel_close(linf_norm(scaled), std::fabs(alpha) * linf_norm(a), 1e-12));
    CHECK(rel_close(l2_upper_bound(scaled), std::fabs(alpha) * l2_upper_bound(a), 1e-12));
    if (g.p1 == 0 && g.p2 == 0) {
      CHECK(rel_close(frobenius_exact(scaled), std::fabs(alpha) * frobenius_exact(a), 1e-12));
    }

    std::vector<double> sum(g.kernel_size());
    for (std::size_t n = 0; n < sum.size(); ++n) sum[n] = a.values()[n] + b.values()[n];
    const Kernel4D ab(g, sum);
    CHECK(l1_norm(ab) <= l1_norm(a) + l1_norm(b) + 1e-9);
    CHECK(linf_norm(ab) <= linf_norm(a) + linf_norm(b) + 1e-9);
  }
}

TEST_CASE("property: norm equivalence against the spectral norm") {
  std::mt19937_64 gen(404);
  for (int trial = 0; trial < 150; ++trial) {
    const ConvGeometry g = random_geometry(gen, {3, 4, 3, 2, 8});
    const Kernel4D k = random_kernel(gen, g);
    const double l2 = dense_l2(materialize(k));
    const double rows = static_cast<double>(g.output_size());
    const double cols = static_cast<double>(g.input_size());
    const double l1 = l1_norm(k);
    const double linf = linf_norm(k);
    CHECK(l1 / std::sqrt(rows) <= l2 + 1e-6);
    CHECK(l2 <= std::sqrt(cols) * l1 + 1e-6);
    CHECK(linf / std::sqrt(cols) <= l2 + 1e-6);
    CHECK(l2 <= std::sqrt(rows) * linf + 1e-6);
  }
}

TEST_CASE("property: linf depends only on the kernel values") {
  std::mt19937_64 gen(505);
  for (int trial = 0; trial < 100; ++trial) {
    const ConvGeometry g = random_geometry(gen);
    const Kernel4D k = random_kernel(gen, g);
    const double reference = linf_norm(k);
    for (int other = 0; other < 5; ++other) {
      ConvGeometry h = random_geometry(gen);
      h.d_in = g.d_in;
      h.d_out = g.d_out;
      h.k1 = g.k1;
      h.k2 = g.k2;
      h.h_in = std::max(h.h_in, g.k1 + 2 * h.s1 + 1);
      h.w_in = std::max(h.w_in, g.k2 + 2 * h.s2 + 1);
      if (!check_assumption1(h)) continue;
      const Kernel4D moved(h, {k.values().begin(), k.values().end()});
      CHECK(linf_norm(moved) == reference);
    }
  }
}

TEST_CASE("property: stride-1 collapse of the l1 formula") {
  std::mt19937_64 gen(606);
  int exercised = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const ConvGeometry g = random_geometry(gen, {4, 4, 1, 2, 12});
    if (g.h_in + 2 * g.p1 - g.k1 < g.k1 - 1 || g.w_in + 2 * g.p2 - g.k2 < g.k2 - 1) continue;
    ++exercised;
    const Kernel4D k = random_kernel(gen, g);
    double best = 0.0;
    for (std::size_t j = 0; j < g.d_in; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < g.d_out; ++i) {
        for (std::size_t a = 0; a < g.k1; ++a) {
          for (std::size_t b = 0; b < g.k2; ++b) s += std::fabs(k.at(i, j, a, b));
        }
      }
      best = std::max(best, s);
    }
    CHECK(rel_close(l1_norm(k), best, 1e-12));
  }
  CHECK(exercised > 50);
}
