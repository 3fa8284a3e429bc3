#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>

#include "amrins/quadrature.hpp"
#include "amrins/stencil.hpp"
#include "test_util.hpp"

using namespace amrins;
using namespace amrins::testutil;

namespace {

HierarchyPtr grid(int n) {
  return makeHier(n, {false, false}, 2, {{IndexBox(0, 0, n - 1, n - 1)}});
}

double relErr(double got, double want, double scale) {
  return std::abs(got - want) / std::max(scale, 1e-30);
}

}  // namespace

TEST_CASE("G, D, L exact on low-degree monomials") {
  auto h = grid(12);
  LevelData q(h, 0, 1, 2), gq(h, 0, 2, 2), lq(h, 0, 1, 2);
  const double hh = q.spacing();
  for (int a = 0; a <= 3; ++a)
    for (int b = 0; a + b <= 3; ++b) {
      auto f = [&](double x, double y) {
        return std::pow(x, a) * std::pow(y, b);
      };
      fillAll(q, 0, f);
      gradient(q, gq);
      laplacian(q, lq);
      for (int j = 3; j <= 8; ++j)
        for (int i = 3; i <= 8; ++i) {
          const double x0 = i * hh, y0 = j * hh;
          const double gx =
              a == 0 ? 0.0 : a * avgPow(a - 1, x0, hh) * avgPow(b, y0, hh);
          const double gy =
              b == 0 ? 0.0 : b * avgPow(b - 1, y0, hh) * avgPow(a, x0, hh);
          const double lap =
              (a >= 2 ? a * (a - 1) * avgPow(a - 2, x0, hh) * avgPow(b, y0, hh)
                      : 0.0) +
              (b >= 2 ? b * (b - 1) * avgPow(b - 2, y0, hh) * avgPow(a, x0, hh)
                      : 0.0);
          CHECK(relErr(gq.at(0, 0, IntVec(i, j)), gx, 1.0) < 1e-12);
          CHECK(relErr(gq.at(0, 1, IntVec(i, j)), gy, 1.0) < 1e-12);
          CHECK(relErr(lq.at(0, 0, IntVec(i, j)), lap, 10.0) < 1e-12);
        }
    }
}

TEST_CASE("L exact on x^4; divergence exact on (x^2, 0)") {
  auto h = grid(12);
  LevelData q(h, 0, 1, 2), lq(h, 0, 1, 2);
  const double hh = q.spacing();
  fillAll(q, 0, [](double x, double) { return x * x * x * x; });
  laplacian(q, lq);
  for (int i = 2; i <= 9; ++i)
    CHECK(lq.at(0, 0, IntVec(i, 5)) ==
          doctest::Approx(12 * avgPow(2, i * hh, hh)).epsilon(1e-11));

  // cell averages of x^2 have value x_c^2 + h^2/12; L kills the offset
  fillAll(q, 0, [](double x, double) { return x * x; });
  laplacian(q, lq);
  for (int i = 2; i <= 9; ++i)
    CHECK(lq.at(0, 0, IntVec(i, 4)) == doctest::Approx(2.0).epsilon(1e-12));

  LevelData u(h, 0, 2, 2), du(h, 0, 1, 2);
  fillAll(u, 0, [](double x, double) { return x * x; });
  fillAll(u, 1, [](double, double) { return 0.0; });
  divergence(u, du);
  for (int i = 2; i <= 9; ++i)
    CHECK(du.at(0, 0, IntVec(i, 3)) ==
          doctest::Approx(2 * avgPow(1, i * hh, hh)).epsilon(1e-12));

  // divergence-free linear field
  fillAll(u, 0, [](double x, double) { return x; });
  fillAll(u, 1, [](double, double y) { return -y; });
  divergence(u, du);
  CHECK(maxAbsInterior(du, 0) < 1e-13);
}

TEST_CASE("convection trivial cases") {
  auto h = grid(16);
  LevelData u(h, 0, 2, 2), c(h, 0, 2, 2);

  fillAll(u, 0, [](double, double) { return 1.7; });
  fillAll(u, 1, [](double, double) { return -0.3; });
  convection(u, c);
  CHECK(maxAbsInterior(c, 0) < 1e-14);
  CHECK(maxAbsInterior(c, 1) < 1e-14);

  // u = (y, 0): all flux contributions cancel exactly
  fillAll(u, 0, [](double, double y) { return y; });
  fillAll(u, 1, [](double, double) { return 0.0; });
  convection(u, c);
  CHECK(maxAbsInterior(c, 0) < 1e-14);
  CHECK(maxAbsInterior(c, 1) < 1e-14);
}

TEST_CASE("convection fourth order on the viscous-box field") {
  auto ux = [](double x, double y) {
    const double s = std::sin(M_PI * x);
    return s * s * std::sin(2 * M_PI * y);
  };
  auto uy = [](double x, double y) {
    const double s = std::sin(M_PI * y);
    return -std::sin(2 * M_PI * x) * s * s;
  };
  auto errAt = [&](int n) {
    auto h = grid(n);
    LevelData u(h, 0, 2, 2), c(h, 0, 2, 2);
    fillAll(u, 0, ux);
    fillAll(u, 1, uy);
    convection(u, c);
    const double hh = 1.0 / n;
    double e = 0;
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const double x0 = i * hh, y0 = j * hh;
        for (int comp = 0; comp < 2; ++comp) {
          auto uc = comp == 0 ? ux : uy;
          // exact flux-form divergence of (u uc, v uc) over the cell
          auto fxl = lineAvgFine(
              [&](double y) { return ux(x0, y) * uc(x0, y); }, y0, hh);
          auto fxh = lineAvgFine(
              [&](double y) { return ux(x0 + hh, y) * uc(x0 + hh, y); }, y0, hh);
          auto fyl = lineAvgFine(
              [&](double x) { return uy(x, y0) * uc(x, y0); }, x0, hh);
          auto fyh = lineAvgFine(
              [&](double x) { return uy(x, y0 + hh) * uc(x, y0 + hh); }, x0, hh);
          const double want = (fxh - fxl) / hh + (fyh - fyl) / hh;
          e = std::max(e, std::abs(c.at(0, comp, IntVec(i, j)) - want));
        }
      }
    return e;
  };
  const double e64 = errAt(64), e128 = errAt(128);
  const double rate = std::log2(e64 / e128);
  CHECK(rate >= 3.7);
}

TEST_CASE("ghost fills exact on polynomials through degree 4") {
  auto h = grid(12);
  const double hh = 1.0 / 12;
  auto p = [](double x, double y) {
    return 1 + x - 2 * y + x * x * y - y * y * y + 0.5 * x * x * x * x +
           x * y * y * y - 2 * x * x * y * y;
  };

  SUBCASE("Dirichlet fill, all sides, corners included") {
    LevelData d(h, 0, 1, 2);
    d.fillCellAverages(0, p);
    PhysicalFill pf(1);
    for (int side = 0; side < 4; ++side) {
      SideFill sf;
      sf.kind = BcKind::dirichlet;
      sf.data.resize(12 + 4);
      for (int k = -2; k < 14; ++k) {
        const int axis = side / 2;
        const double wall = side % 2 ? 1.0 : 0.0;
        sf.data[k + 2] = axis == 0 ? faceAverage(p, 0, wall, k * hh, hh)
                                   : faceAverage(p, 1, k * hh, wall, hh);
      }
      pf[0][side] = sf;
    }
    fillPhysicalGhosts(d, 0, pf);
    double emax = 0;
    for (int j = -2; j <= 13; ++j)
      for (int i = -2; i <= 13; ++i) {
        if (i >= 0 && i < 12 && j >= 0 && j < 12) continue;
        const double want = cellAverage(p, i * hh, j * hh, hh);
        emax = std::max(emax, std::abs(d.at(0, 0, IntVec(i, j)) - want));
      }
    CHECK(emax < 1e-11);
  }

  SUBCASE("Neumann fill exact, constant and linear specials") {
    LevelData d(h, 0, 1, 2);
    d.fillCellAverages(0, p);
    PhysicalFill pf(1);
    // x-lo side: outward normal is -x
    SideFill sf;
    sf.kind = BcKind::neumann;
    sf.data.resize(16);
    auto px = [&](double x, double y) {
      return 1 + 2 * x * y + 2 * x * x * x + y * y * y - 4 * x * y * y;
    };
    for (int k = -2; k < 14; ++k)
      sf.data[k + 2] = -faceAverage(px, 0, 0.0, k * hh, hh);
    pf[0][0] = sf;
    fillPhysicalGhosts(d, 0, pf);
    double emax = 0;
    for (int j = 0; j < 12; ++j)
      for (int i = -2; i <= -1; ++i)
        emax = std::max(emax, std::abs(d.at(0, 0, IntVec(i, j)) -
                                       cellAverage(p, i * hh, j * hh, hh)));
    CHECK(emax < 1e-11);

    // linear in normal coordinate with slope s
    LevelData lin(h, 0, 1, 2);
    lin.fillCellAverages(0, [](double x, double y) { return 3 * x + y; });
    PhysicalFill pl(1);
    SideFill s2;
    s2.kind = BcKind::neumann;
    s2.data = Eigen::ArrayXd::Constant(16, -3.0);  // outward at x-lo
    pl[0][0] = s2;
    fillPhysicalGhosts(lin, 0, pl);
    for (int j = 0; j < 12; ++j)
      for (int i = -2; i <= -1; ++i)
        CHECK(lin.at(0, 0, IntVec(i, j)) ==
              doctest::Approx(3 * (i + 0.5) * hh + (j + 0.5) * hh).epsilon(1e-12));
  }

  SUBCASE("Dirichlet constant fills constant") {
    LevelData d(h, 0, 1, 2);
    d.fillCellAverages(0, [](double, double) { return 4.0; });
    PhysicalFill pf(1);
    for (int side = 0; side < 4; ++side) {
      SideFill sf;
      sf.kind = BcKind::dirichlet;
      sf.data = Eigen::ArrayXd::Constant(16, 4.0);
      pf[0][side] = sf;
    }
    fillPhysicalGhosts(d, 0, pf);
    for (int j = -2; j <= 13; ++j)
      for (int i = -2; i <= 13; ++i)
        CHECK(d.at(0, 0, IntVec(i, j)) == doctest::Approx(4.0).epsilon(1e-13));
  }
}

TEST_CASE("boundary normal derivative: constant, linear, cubic") {
  auto h = grid(12);
  const double hh = 1.0 / 12;
  LevelData d(h, 0, 1, 2);

  d.fillCellAverages(0, [](double, double) { return 2.5; });
  Eigen::ArrayXd dir = Eigen::ArrayXd::Constant(12, 2.5);
  auto g0 = boundaryNormalDerivative(d, 0, 0, 0, dir);
  CHECK(g0.abs().maxCoeff() < 1e-12);

  d.fillCellAverages(0, [](double x, double) { return x; });
  for (int k = 0; k < 12; ++k) dir[k] = 0.0;  // x = 0 on the x-lo wall
  auto g1 = boundaryNormalDerivative(d, 0, 0, 0, dir);
  // outward derivative at x-lo of f = x is -1
  for (int k = 0; k < 12; ++k) CHECK(g1[k] == doctest::Approx(-1.0).epsilon(1e-12));

  auto cub = [](double x, double y) { return x * x * x + x * y * y; };
  d.fillCellAverages(0, cub);
  for (int k = 0; k < 12; ++k)
    dir[k] = faceAverage(cub, 0, 1.0, k * hh, hh);
  auto g2 = boundaryNormalDerivative(d, 0, 0, 1, dir);  // x-hi, outward +x
  auto dpx = [](double x, double y) { return 3 * x * x + y * y; };
  for (int k = 0; k < 12; ++k)
    CHECK(g2[k] == doctest::Approx(faceAverage(dpx, 0, 1.0, k * hh, hh))
                       .epsilon(1e-10));
}

TEST_CASE("one-sided extrapolations") {
  auto h = grid(12);
  const double hh = 1.0 / 12;
  LevelData d(h, 0, 1, 2);
  auto cub = [](double x, double y) { return 1 + x - y + x * x * y + y * y * y; };
  d.fillCellAverages(0, cub);
  auto f = extrapolateToSideFaces(d, 0, 0, 0);  // x-lo faces
  for (int k = 0; k < 12; ++k)
    CHECK(f[k] == doctest::Approx(faceAverage(cub, 0, 0.0, k * hh, hh))
                      .epsilon(1e-11));

  auto quart = [](double x, double y) {
    return x * x * x * x - 2 * x * x * y + y * y;
  };
  d.fillCellAverages(0, quart);
  extrapolateGhosts(d, 0, 0, 0);
  for (int j = 0; j < 12; ++j)
    for (int i = -2; i <= -1; ++i)
      CHECK(d.at(0, 0, IntVec(i, j)) ==
            doctest::Approx(cellAverage(quart, i * hh, j * hh, hh))
                .epsilon(1e-10));
}

TEST_CASE("Dirichlet Laplacian spectrum has negative real parts") {
  const int n = 16;
  auto h = grid(n);
  LevelData d(h, 0, 1, 2), ld(h, 0, 1, 2);
  PhysicalFill pf(1);
  for (int side = 0; side < 4; ++side) {
    SideFill sf;
    sf.kind = BcKind::dirichlet;
    sf.data = Eigen::ArrayXd::Zero(n + 4);
    pf[0][side] = sf;
  }
  Eigen::MatrixXd A(n * n, n * n);
  for (int k = 0; k < n * n; ++k) {
    d.setZero();
    d.at(0, 0, IntVec(k % n, k / n)) = 1.0;
    fillPhysicalGhosts(d, 0, pf);
    laplacian(d, ld);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        A(i + n * j, k) = ld.at(0, 0, IntVec(i, j));
  }
  Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
  CHECK(es.eigenvalues().real().maxCoeff() < 0.0);
}
