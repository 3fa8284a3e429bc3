#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "amrins/level_data.hpp"
#include "amrins/quadrature.hpp"

using namespace amrins;

namespace {

HierarchyPtr makeHier(int base, std::array<bool, 2> periodic, int ratio,
                      std::vector<std::vector<IndexBox>> boxes) {
  return std::make_shared<Hierarchy>(1.0 / base,
                                     ProblemDomain{IntVec(base, base), periodic},
                                     ratio, std::move(boxes));
}

// Exact cell average of x^p over [a, a+h], independent oracle.
double avgPow(int p, double a, double h) {
  return (std::pow(a + h, p + 1) - std::pow(a, p + 1)) / ((p + 1) * h);
}

}  // namespace

TEST_CASE("Boole quadrature exact through degree 5") {
  auto f = [](double x, double y) { return std::pow(x, 5) + std::pow(y, 4) * x; };
  const double got = cellAverage(f, 0.2, 0.3, 0.1);
  const double want = avgPow(5, 0.2, 0.1) + avgPow(4, 0.3, 0.1) * avgPow(1, 0.2, 0.1);
  CHECK(got == doctest::Approx(want).epsilon(1e-14));
}

TEST_CASE("exchange fills abutting-box ghosts exactly") {
  auto h = makeHier(8, {false, false}, 2,
                    {{IndexBox(0, 0, 3, 7), IndexBox(4, 0, 7, 7)}});
  LevelData d(h, 0, 1, 2);
  auto f = [&](double x, double y) { return 3.0 * x - 2.0 * y + 0.5; };
  d.fillCellAverages(0, f);
  exchange(d);
  // ghosts of box 0 at x = 4,5 equal box 1 interior values
  for (int j = 0; j <= 7; ++j)
    for (int i = 4; i <= 5; ++i)
      CHECK(d.at(0, 0, IntVec(i, j)) ==
            doctest::Approx(d.at(1, 0, IntVec(i, j))).epsilon(1e-15));
}

TEST_CASE("exchange wraps periodic axes") {
  auto h = makeHier(8, {true, true}, 2, {{IndexBox(0, 0, 7, 7)}});
  LevelData d(h, 0, 1, 2);
  auto f = [](double x, double y) {
    return std::sin(2 * M_PI * x) * std::cos(2 * M_PI * y);
  };
  d.fillCellAverages(0, f);
  exchange(d);
  const double hh = d.spacing();
  // every ghost cell equals the cell average of the periodic extension
  for (int j = -2; j <= 9; ++j)
    for (int i = -2; i <= 9; ++i) {
      if (i >= 0 && i <= 7 && j >= 0 && j <= 7) continue;
      const double want = cellAverage(f, i * hh, j * hh, hh);
      CHECK(d.at(0, 0, IntVec(i, j)) == doctest::Approx(want).epsilon(1e-13));
    }
}

TEST_CASE("averageDown") {
  auto h = makeHier(4, {false, false}, 2,
                    {{IndexBox(0, 0, 3, 3)}, {IndexBox(0, 0, 7, 7)}});
  LevelData fine(h, 1, 1, 2), coarse(h, 0, 1, 2);

  SUBCASE("children {1,2,3,4} average to 2.5") {
    fine.setZero();
    fine.at(0, 0, IntVec(0, 0)) = 1;
    fine.at(0, 0, IntVec(1, 0)) = 2;
    fine.at(0, 0, IntVec(0, 1)) = 3;
    fine.at(0, 0, IntVec(1, 1)) = 4;
    coarse.setZero();
    averageDown(fine, coarse);
    CHECK(coarse.at(0, 0, IntVec(0, 0)) == doctest::Approx(2.5));
  }

  SUBCASE("exact for linear fields") {
    auto f = [](double x, double y) { return 2.0 * x + 3.0 * y - 1.0; };
    fine.fillCellAverages(0, f);
    coarse.setZero();
    averageDown(fine, coarse);
    const double hc = coarse.spacing();
    for (int j = 0; j <= 3; ++j)
      for (int i = 0; i <= 3; ++i)
        CHECK(coarse.at(0, 0, IntVec(i, j)) ==
              doctest::Approx(cellAverage(f, i * hc, j * hc, hc)).epsilon(1e-14));
  }

  SUBCASE("redundancy residual below 1e-14 for random data") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int j = 0; j <= 7; ++j)
      for (int i = 0; i <= 7; ++i) fine.at(0, 0, IntVec(i, j)) = u(rng);
    averageDown(fine, coarse);
    for (int j = 0; j <= 3; ++j)
      for (int i = 0; i <= 3; ++i) {
        double s = 0;
        for (int jj = 0; jj < 2; ++jj)
          for (int ii = 0; ii < 2; ++ii)
            s += fine.at(0, 0, IntVec(2 * i + ii, 2 * j + jj));
        CHECK(std::abs(coarse.at(0, 0, IntVec(i, j)) - s / 4) < 1e-14);
      }
  }
}

TEST_CASE("cellToFace and faceNormalDerivative exact on cubics") {
  auto h = makeHier(8, {false, false}, 2, {{IndexBox(0, 0, 7, 7)}});
  LevelData d(h, 0, 1, 2);
  const double hh = d.spacing();

  SUBCASE("constant") {
    for (auto& roww : {0}) {
      (void)roww;
      d.arr(0, 0).setConstant(4.2);
      FaceData f = cellToFace(d, 0, 0);
      CHECK(f.at(0, 0, IntVec(3, 3)) == doctest::Approx(4.2).epsilon(1e-15));
      FaceData g = faceNormalDerivative(d, 0, 0);
      CHECK(std::abs(g.at(0, 0, IntVec(3, 3))) < 1e-12);
    }
  }

  SUBCASE("x^3 face averages exact") {
    auto f3 = [](double x, double) { return x * x * x; };
    // fill including ghosts by direct evaluation
    for (int j = -2; j <= 9; ++j)
      for (int i = -2; i <= 9; ++i)
        d.at(0, 0, IntVec(i, j)) = avgPow(3, i * hh, hh);
    FaceData f = cellToFace(d, 0, 0);
    for (int i = 0; i <= 8; ++i) {
      const double x = i * hh;
      CHECK(f.at(0, 0, IntVec(i, 4)) == doctest::Approx(x * x * x).epsilon(1e-13));
    }
    FaceData g = faceNormalDerivative(d, 0, 0);
    for (int i = 0; i <= 8; ++i) {
      const double x = i * hh;
      CHECK(g.at(0, 0, IntVec(i, 4)) ==
            doctest::Approx(3 * x * x).epsilon(1e-12));
    }
    (void)f3;
  }

  SUBCASE("x exact: face value x_i + h/2") {
    for (int j = -2; j <= 9; ++j)
      for (int i = -2; i <= 9; ++i)
        d.at(0, 0, IntVec(i, j)) = (i + 0.5) * hh;  // cell average of x
    FaceData f = cellToFace(d, 0, 0);
    for (int i = 0; i <= 8; ++i)
      CHECK(f.at(0, 0, IntVec(i, 2)) == doctest::Approx(i * hh).epsilon(1e-13));
    FaceData g = faceNormalDerivative(d, 0, 0);
    for (int i = 0; i <= 8; ++i)
      CHECK(g.at(0, 0, IntVec(i, 2)) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("compositeNorm") {
  SUBCASE("hand case on a 2x2 grid") {
    auto h = makeHier(2, {false, false}, 2, {{IndexBox(0, 0, 1, 1)}});
    CompositeData c(h, 0, 1, 0);
    c.level(0).at(0, 0, IntVec(0, 0)) = 1;
    c.level(0).at(0, 0, IntVec(1, 0)) = -1;
    c.level(0).at(0, 0, IntVec(0, 1)) = 0;
    c.level(0).at(0, 0, IntVec(1, 1)) = 2;
    CHECK(compositeNorm(c, Norm::Linf) == doctest::Approx(2.0));
    CHECK(compositeNorm(c, Norm::L1) == doctest::Approx(1.0));
    CHECK(compositeNorm(c, Norm::L2) == doctest::Approx(std::sqrt(6.0 / 4.0)));
  }

  SUBCASE("constant 1 over any hierarchy: all norms 1") {
    auto h = makeHier(8, {false, false}, 2,
                      {{IndexBox(0, 0, 7, 7)}, {refineBox(IndexBox(2, 2, 5, 5), 2)}});
    CompositeData c(h, 0, 1, 0);
    for (int l = 0; l <= 1; ++l)
      for (int b = 0; b < c.level(l).numBoxes(); ++b)
        c.level(l).arr(b, 0).setConstant(1.0);
    CHECK(compositeNorm(c, Norm::Linf) == doctest::Approx(1.0));
    CHECK(compositeNorm(c, Norm::L1) == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(compositeNorm(c, Norm::L2) == doctest::Approx(1.0).epsilon(1e-13));
  }

  SUBCASE("invalid-region cells do not contribute") {
    auto h = makeHier(8, {false, false}, 2,
                      {{IndexBox(0, 0, 7, 7)}, {refineBox(IndexBox(2, 2, 5, 5), 2)}});
    CompositeData c(h, 0, 1, 0);
    for (int l = 0; l <= 1; ++l)
      for (int b = 0; b < c.level(l).numBoxes(); ++b)
        c.level(l).arr(b, 0).setConstant(1.0);
    const double before = compositeNorm(c, Norm::L2);
    for (int j = 2; j <= 5; ++j)
      for (int i = 2; i <= 5; ++i)
        c.level(0).at(0, 0, IntVec(i, j)) = 77.0;  // covered coarse cells
    CHECK(compositeNorm(c, Norm::L2) == doctest::Approx(before));
    CHECK(compositeNorm(c, Norm::Linf) == doctest::Approx(1.0));
  }
}
