#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "wassflow/domain1d.hpp"

using namespace wassflow;

TEST_CASE("construction and basic geometry") {
  const auto d = Domain1D::make(DomainKind::segment, 0.0, 1.0, 100);
  CHECK(d.h == doctest::Approx(0.01));
  CHECK(d.x[0] == doctest::Approx(0.005));
  CHECK(d.x[99] == doctest::Approx(0.995));
  CHECK(d.locate(0.5) == 50);
  CHECK(d.locate(-1.0) == 0);
  CHECK(d.locate(2.0) == 99);
  CHECK_THROWS_AS(Domain1D::make(DomainKind::segment, 1.0, 0.0, 100),
                  std::invalid_argument);
  CHECK_THROWS_AS(Domain1D::make(DomainKind::segment, 0.0, 1.0, 4),
                  std::invalid_argument);

  const auto c = Domain1D::make(DomainKind::circle, 0.0, 2.0, 100);
  CHECK(c.dist(0.1, 1.9) == doctest::Approx(0.2));
  CHECK(c.wrap(-1) == 99);
  CHECK(c.locate(2.31) == c.locate(0.31));
}

TEST_CASE("finite differences are second order") {
  const auto d = Domain1D::make(DomainKind::segment, -1.0, 1.0, 200);
  std::vector<double> f(d.size);
  for (int i = 0; i < d.size; ++i) f[i] = std::sin(d.x[i]);
  for (int i : {0, 1, 100, 198, 199}) {
    CHECK(d.deriv1(f, i) == doctest::Approx(std::cos(d.x[i])).epsilon(1e-3));
    CHECK(d.deriv2(f, i) == doctest::Approx(-std::sin(d.x[i])).epsilon(1e-2));
  }
}

TEST_CASE("weighted curvature") {
  const MParam p = MParam::make(0.5);  // N = 2, n = 1
  // flat weight: exactly zero everywhere
  const auto flat = Domain1D::make(DomainKind::segment, -3.0, 3.0, 300);
  for (int i = 0; i < flat.size; ++i) CHECK(ric_N(flat, p, i) == 0.0);

  const auto d = Domain1D::make(DomainKind::segment, -3.0, 3.0, 600,
                                [](double x) { return 0.5 * x * x; });
  // psi'' - psi'^2/(N-n) = 1 - x^2, evaluated at the nearest cell centers
  const int i0 = d.locate(0.0), i2 = d.locate(2.0);
  CHECK(ric_N(d, p, i0) ==
        doctest::Approx(1.0 - d.x[i0] * d.x[i0]).epsilon(1e-6));
  CHECK(ric_N(d, p, i2) ==
        doctest::Approx(1.0 - d.x[i2] * d.x[i2]).epsilon(1e-6));
  CHECK(ric_N(d, p, i2) == doctest::Approx(-3.0).epsilon(1e-2));

  // N = n convention: -inf unless psi' = 0
  const MParam pn = MParam{0.5, 1, 1.0};
  CHECK(ric_N(d, pn, d.locate(2.0)) == -kInf);
  CHECK(ric_N(flat, pn, 10) == 0.0);
}

TEST_CASE("convexity modulus") {
  const MParam p = MParam::make(0.5);
  const auto d = Domain1D::make(DomainKind::segment, -2.0, 2.0, 256);

  const auto flat = ReferencePotential::make(d, p, [](double) { return 0.7; });
  CHECK(flat.K_hat == doctest::Approx(0.0).epsilon(1e-12));

  const auto quad =
      ReferencePotential::make(d, p, [](double x) { return 0.5 * x * x; });
  CHECK(quad.K_hat == doctest::Approx(1.0).epsilon(1e-6));

  const MParam p2 = MParam::make(2.0);
  const auto neg =
      ReferencePotential::make(d, p2, [](double x) { return -0.5 * x * x; });
  CHECK(neg.K_hat == doctest::Approx(-1.0).epsilon(1e-6));
}

TEST_CASE("convexity modulus is affine invariant") {
  const MParam p = MParam::make(0.75);
  const auto d = Domain1D::make(DomainKind::segment, -2.0, 2.0, 128);
  const auto base =
      ReferencePotential::make(d, p, [](double x) { return 0.5 * x * x; });
  const auto shifted = ReferencePotential::make(
      d, p, [](double x) { return 0.5 * x * x + 0.3 * x - 1.1; });
  CHECK(std::abs(base.K_hat - shifted.K_hat) < 1e-10);
}

TEST_CASE("standing assumption and M0") {
  const MParam p = MParam::make(0.5);  // cutoff: Psi must stay > -2
  const auto d = Domain1D::make(DomainKind::segment, 0.0, 1.0, 64);
  CHECK_THROWS_AS(ReferencePotential::make(d, p, [](double) { return -3.0; }),
                  std::invalid_argument);

  // for m = 2 the admissible region is Psi < 1; make it empty
  const MParam p2 = MParam::make(2.0);
  CHECK_THROWS_AS(ReferencePotential::make(d, p2, [](double) { return 5.0; }),
                  std::invalid_argument);
  const auto ok =
      ReferencePotential::make(d, p2, [](double x) { return 4.0 * x - 1.0; });
  int inside = 0;
  for (int i = 0; i < d.size; ++i) {
    if (ok.m0_mask[i]) ++inside;
    if (!ok.m0_mask[i]) CHECK(ok.sigma[i] == 0.0);
  }
  CHECK(inside > 0);
  CHECK(inside < d.size);
}

TEST_CASE("renormalization") {
  const MParam p = MParam::make(2.0);
  const auto d = Domain1D::make(DomainKind::segment, 0.0, 2.0, 2000);
  // sigma = 1 on [0,2]: Psi = ln_m-style constant 0 gives exp_2(0) = 1
  const auto ref = ReferencePotential::make(d, p, [](double) { return 0.0; });
  CHECK(ref.mass(d) == doctest::Approx(2.0).epsilon(1e-9));
  const auto rn = renormalize_reference(ref, d, p);
  CHECK(rn.c == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(rn.ref.mass(d) == doctest::Approx(1.0).epsilon(1e-9));
  for (int i : {0, 1000, 1999})
    CHECK(rn.ref.sigma[i] == doctest::Approx(0.5).epsilon(1e-9));

  // identity on already-normalized input
  const auto rn2 = renormalize_reference(rn.ref, d, p);
  CHECK(rn2.c == doctest::Approx(1.0).epsilon(1e-9));
  for (int i : {0, 500}) CHECK(rn2.ref.Psi[i] ==
                               doctest::Approx(rn.ref.Psi[i]).epsilon(1e-9));
}

TEST_CASE("renormalization scales the convexity modulus by c^{m-1}") {
  const MParam p = MParam::make(0.5);
  const auto d = Domain1D::make(DomainKind::segment, -20.0, 20.0, 2048);
  const auto ref =
      ReferencePotential::make(d, p, [](double x) { return 0.5 * x * x; });
  const auto rn = renormalize_reference(ref, d, p);
  CHECK(rn.ref.K_hat ==
        doctest::Approx(std::pow(rn.c, p.m - 1.0) * ref.K_hat).epsilon(1e-6));
}

TEST_CASE("support radius bound") {
  const MParam p = MParam::make(2.0);
  const auto d = Domain1D::make(DomainKind::segment, -3.0, 3.0, 1024);
  const auto ref =
      ReferencePotential::make(d, p, [](double x) { return 0.5 * x * x; });
  CHECK(support_radius_bound(ref, d, p, 1.0) ==
        doctest::Approx(std::sqrt(2.0)).epsilon(1e-3));

  const MParam p15 = MParam::make(1.5);
  const auto ref2 =
      ReferencePotential::make(d, p15, [](double x) { return 2.0 * x * x; });
  CHECK(support_radius_bound(ref2, d, p15, 4.0) ==
        doctest::Approx(1.0).epsilon(1e-3));

  // every node carrying sigma > 0 lies within the bound of the minimizer
  const double R = support_radius_bound(ref, d, p, ref.K_hat);
  for (int i = 0; i < d.size; ++i)
    if (ref.sigma[i] > 0.0) CHECK(std::abs(d.x[i]) <= R + d.h);

  CHECK_THROWS_AS(support_radius_bound(ref, d, MParam::make(0.5), 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(support_radius_bound(ref, d, p, -1.0),
                  std::invalid_argument);
}

TEST_CASE("tail moments: finite below 1/(1-m), divergent above") {
  const MParam p = MParam::make(0.75);  // 1/(1-m) = 4
  auto moment = [&](double radius, double q) {
    const auto d = Domain1D::make(DomainKind::segment, -radius, radius,
                                  static_cast<int>(radius * 64));
    const auto ref =
        ReferencePotential::make(d, p, [](double x) { return 0.5 * x * x; });
    double s = 0.0;
    for (int i = 0; i < d.size; ++i)
      s += std::pow(std::abs(d.x[i]), q) * ref.sigma[i] * d.h;
    return s;
  };
  // p = 2 < 1/(1-m) = 4: stable under domain enlargement
  const double m2_small = moment(50.0, 2.0);
  const double m2_big = moment(200.0, 2.0);
  CHECK(std::abs(m2_big - m2_small) < 0.01 * m2_small);
  // the quadratic reference decays like |x|^{2/(m-1)} = |x|^{-8}, so the
  // sharp divergence threshold is 2/(1-m) - 1 = 7; p = 8 keeps growing
  const double m8_small = moment(50.0, 8.0);
  const double m8_big = moment(200.0, 8.0);
  CHECK(m8_big > 1.5 * m8_small);
}
