#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>

#include "imclab/cascade.hpp"
#include "imclab/errors.hpp"

using namespace imclab;

TEST_CASE("cascade structure") {
  CascadeRealization c(5, 1.0, 0.7, {10, 0});
  CHECK(c.cell_count() == 32);
  auto A = c.additive_field();
  auto M = c.cascade_values();
  REQUIRE(A.size() == 32);
  REQUIRE(M.size() == 32);
  for (std::int64_t i = 0; i < 32; ++i) {
    // Cell value is exactly the phase of the additive ancestor sum, with
    // unit modulus.
    CHECK(std::abs(M[i]) == doctest::Approx(1.0).epsilon(1e-12));
    const auto expected = std::exp(std::complex<double>(0.0, 0.7 * A[i]));
    CHECK(std::abs(M[i] - expected) <= 1e-12);
  }

  // Additive field is the ancestor sum of the per-interval weights.
  double s = c.weight(0, 0);
  for (int l = 1; l <= 5; ++l) s += c.weight(l, 13 >> (5 - l));
  CHECK(A[13] == doctest::Approx(s).epsilon(1e-13));

  // Zero levels: a single cell driven by the root weight alone.
  CascadeRealization root(0, 1.0, 0.7, {10, 0});
  CHECK(root.cell_count() == 1);
  CHECK(std::abs(root.cascade_values()[0] -
                 std::exp(std::complex<double>(0.0,
                                               0.7 * root.weight(0, 0)))) <=
        1e-15);
}

TEST_CASE("determinism") {
  CascadeRealization a(8, 1.0, 1.0, {5, 9});
  CascadeRealization b(8, 1.0, 1.0, {5, 9});
  CascadeRealization c(8, 1.0, 1.0, {5, 10});
  auto va = a.cascade_values(), vb = b.cascade_values(),
       vc = c.cascade_values();
  bool same = true, diff = false;
  for (size_t i = 0; i < va.size(); ++i) {
    same = same && va[i] == vb[i];
    diff = diff || va[i] != vc[i];
  }
  CHECK(same);
  CHECK(diff);
}

TEST_CASE("phase shift invariance at the full period") {
  const double beta = 0.8;
  CascadeRealization c(10, 1.0, beta, {77, 0});
  auto base = c.cascade_values();

  auto full = c.shifted(4, 9, 2.0 * M_PI / beta).cascade_values();
  double dev_full = 0.0;
  for (size_t i = 0; i < base.size(); ++i)
    dev_full = std::max(dev_full, std::abs(full[i] - base[i]));
  CHECK(dev_full <= 1e-12);

  // The additive field itself moves by exactly the shift on the subtree.
  auto a0 = c.additive_field();
  auto a1 = c.shifted(4, 9, 2.0 * M_PI / beta).additive_field();
  double max_move = 0.0;
  int moved = 0;
  for (size_t i = 0; i < a0.size(); ++i) {
    const double d = std::abs(a1[i] - a0[i]);
    max_move = std::max(max_move, d);
    if (d > 1e-9) ++moved;
  }
  CHECK(max_move == doctest::Approx(2.0 * M_PI / beta).epsilon(1e-12));
  CHECK(moved == 1 << (10 - 4));  // exactly the cells under the interval

  // Half period: the shifted subtree flips sign, |e^{i pi} - 1| = 2.
  auto half = c.shifted(4, 9, M_PI / beta).cascade_values();
  double dev_half = 0.0;
  for (size_t i = 0; i < base.size(); ++i)
    dev_half = std::max(dev_half, std::abs(half[i] - base[i]));
  CHECK(dev_half == doctest::Approx(2.0).epsilon(1e-12));

  // Zero shift: bitwise no-op on the weights.
  auto none = c.shifted(4, 9, 0.0).cascade_values();
  bool same = true;
  for (size_t i = 0; i < base.size(); ++i) same = same && none[i] == base[i];
  CHECK(same);
}

TEST_CASE("validation") {
  CHECK_THROWS_AS(CascadeRealization(25, 1.0, 1.0, {1, 0}), InvalidArgument);
  CHECK_THROWS_AS(CascadeRealization(-1, 1.0, 1.0, {1, 0}), InvalidArgument);
  CascadeRealization c(4, 1.0, 1.0, {1, 0});
  CHECK_THROWS_AS(c.shifted(5, 0, 1.0), InvalidArgument);
  CHECK_THROWS_AS(c.shifted(2, 4, 1.0), InvalidArgument);
  CHECK_THROWS_AS(c.weight(2, -1), InvalidArgument);
}
