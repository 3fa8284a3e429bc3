#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "amrins/composite.hpp"
#include "test_util.hpp"

using namespace amrins;
using namespace amrins::testutil;

TEST_CASE("CFI weight rows: constants and conservation") {
  for (int r : {2, 4}) {
    const CfiStencilTable tab(r);
    for (int sy = -2; sy <= 2; ++sy)
      for (int sx = -2; sx <= 2; ++sx) {
        Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(25);
        for (int fy = 0; fy < r; ++fy)
          for (int fx = 0; fx < r; ++fx) {
            const auto& w = tab.row(IntVec(sx, sy), IntVec(fx, fy));
            CHECK(std::abs(w.sum() - 1.0) < 1e-12);  // constants reproduced
            mean += w;
          }
        mean /= double(r * r);
        // conservation: the mean row selects the host cell exactly
        const int hostIdx = (2 - sy) * 5 + (2 - sx);
        for (int k = 0; k < 25; ++k)
          CHECK(std::abs(mean[k] - (k == hostIdx ? 1.0 : 0.0)) < 1e-13);
      }
  }
}

namespace {

// 2-level hierarchy, fine box over the middle half.
HierarchyPtr twoLevel(int base, int r, std::array<bool, 2> per = {false, false}) {
  const int q = base / 4;
  return makeHier(base, per, r,
                  {{IndexBox(0, 0, base - 1, base - 1)},
                   {refineBox(IndexBox(q, q, 3 * q - 1, 3 * q - 1), r)}});
}

}  // namespace

TEST_CASE("CFI reproduces degree-4 polynomials, including shifted stencils") {
  auto p = [](double x, double y) {
    return 0.3 + x - y + x * x * y - 2 * x * y * y * y + 0.7 * x * x * x * x +
           y * y * y * y - x * x * y * y;
  };
  for (int r : {2, 4}) {
    auto h = twoLevel(16, r);
    LevelData coarse(h, 0, 1, 2);
    coarse.fillCellAverages(0, p);
    LevelIndexMap srcMap(h->level(0));
    std::vector<IndexBox> targets = {h->level(1).boxes[0].grow(2)};
    double emax = 0;
    const double hf = h->spacing(1);
    cfiInterpolate(cfiTable(r), coarse, srcMap, targets,
                   [&](const IntVec& i, int, double v) {
                     const double want =
                         cellAverage(p, i[0] * hf, i[1] * hf, hf);
                     emax = std::max(emax, std::abs(v - want));
                   });
    CHECK(emax < 2e-11);
  }
  // near-boundary shifted footprints: fine box touching the wall
  auto h = makeHier(16, {false, false}, 2,
                    {{IndexBox(0, 0, 15, 15)}, {refineBox(IndexBox(0, 0, 3, 3), 2)}});
  LevelData coarse(h, 0, 1, 2);
  coarse.fillCellAverages(0, p);
  LevelIndexMap srcMap(h->level(0));
  const double hf = h->spacing(1);
  double emax = 0;
  cfiInterpolate(cfiTable(2), coarse, srcMap, {IndexBox(0, 0, 7, 7)},
                 [&](const IntVec& i, int, double v) {
                   const double want = cellAverage(p, i[0] * hf, i[1] * hf, hf);
                   emax = std::max(emax, std::abs(v - want));
                 });
  CHECK(emax < 2e-11);
}

TEST_CASE("CFI conservation on random data") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> un(-1, 1);
  for (int r : {2, 4}) {
    auto h = twoLevel(16, r);
    LevelData coarse(h, 0, 1, 2), fine(h, 1, 1, 2), down(h, 0, 1, 2);
    for (int j = 0; j < 16; ++j)
      for (int i = 0; i < 16; ++i)
        coarse.at(0, 0, IntVec(i, j)) = un(rng);
    LevelIndexMap srcMap(h->level(0));
    cfiFillBoxes(cfiTable(r), coarse, srcMap, fine, {fine.box(0)});
    down.copyFrom(coarse);
    averageDown(fine, down);
    const IndexBox cb = coarsenBox(fine.box(0), r);
    for (int j = cb.lo[1]; j <= cb.hi[1]; ++j)
      for (int i = cb.lo[0]; i <= cb.hi[0]; ++i)
        CHECK(std::abs(down.at(0, 0, IntVec(i, j)) -
                       coarse.at(0, 0, IntVec(i, j))) < 1e-14);
  }
}

TEST_CASE("interface ghost interpolation converges at fifth order") {
  auto f = [](double x, double y) {
    return std::sin(2 * M_PI * x) * std::cos(2 * M_PI * y);
  };
  auto ghostErr = [&](int base) {
    auto h = twoLevel(base, 2);
    LevelData coarse(h, 0, 1, 2), fine(h, 1, 1, 2);
    coarse.fillCellAverages(0, f);
    cfiFillInterfaceGhosts(cfiTable(2), coarse, fine);
    const double hf = h->spacing(1);
    double emax = 0;
    const auto regions = interfaceGhostRegions(*h, 1, 2);
    for (const IndexBox& bxr : regions[0])
      for (int j = bxr.lo[1]; j <= bxr.hi[1]; ++j)
        for (int i = bxr.lo[0]; i <= bxr.hi[0]; ++i)
          emax = std::max(emax, std::abs(fine.at(0, 0, IntVec(i, j)) -
                                         cellAverage(f, i * hf, j * hf, hf)));
    return emax;
  };
  const double e1 = ghostErr(16), e2 = ghostErr(32);
  CHECK(std::log2(e1 / e2) >= 4.7);
}

namespace {
double validWeightedSum(const HierarchyPtr& h, const CompositeData& out) {
  double total = 0;
  for (int l = 0; l <= h->maxLevel(); ++l) {
    const double w = h->spacing(l) * h->spacing(l);
    for (const IndexBox& v : h->validRegion(l))
      for (int b = 0; b < out.level(l).numBoxes(); ++b) {
        const IndexBox ov = v.intersect(out.level(l).box(b));
        if (ov.empty()) continue;
        for (int j = ov.lo[1]; j <= ov.hi[1]; ++j)
          for (int i = ov.lo[0]; i <= ov.hi[0]; ++i)
            total += w * out.level(l).at(b, 0, IntVec(i, j));
      }
  }
  return total;
}
}  // namespace

TEST_CASE("reflux: zero correction for matched fluxes, exact telescoping") {
  SUBCASE("constant field: corrections vanish") {
    auto h = twoLevel(16, 2);
    CompositeWorkspace ws(h);
    CompositeData u(h, 0, 2, 2), out(h, 0, 1, 2);
    for (int l = 0; l <= 1; ++l)
      for (int c = 0; c < 2; ++c)
        for (int b = 0; b < u.level(l).numBoxes(); ++b)
          u.level(l).arr(b, c).setConstant(c ? -2.0 : 3.0);
    compositeApply(ws, CompositeOp::divergence, u, out, {}, true, true);
    CHECK(compositeNorm(out, Norm::Linf) < 1e-12);
  }

  SUBCASE("weighted valid sum telescopes to the domain boundary flux") {
    auto hp = twoLevel(16, 2, {true, true});
    CompositeWorkspace wsp(hp);
    CompositeData u(hp, 0, 2, 2), out(hp, 0, 1, 2), out2(hp, 0, 1, 2);
    auto fx = [](double x, double y) {
      return std::sin(2 * M_PI * x) * std::cos(4 * M_PI * y) + 0.3;
    };
    auto fy = [](double x, double y) {
      return std::cos(2 * M_PI * x) * std::sin(2 * M_PI * y) - 0.1;
    };
    u.level(0).fillCellAverages(0, fx);
    u.level(0).fillCellAverages(1, fy);
    u.level(1).fillCellAverages(0, fx);
    u.level(1).fillCellAverages(1, fy);
    averageDownAll(u);
    compositeApply(wsp, CompositeOp::divergence, u, out, {}, true, true);
    CHECK(std::abs(validWeightedSum(hp, out)) < 1e-13);

    compositeApply(wsp, CompositeOp::divergence, u, out2, {}, true, false);
    CHECK(std::abs(validWeightedSum(hp, out2)) > 1e-10);
  }
}

TEST_CASE("composite operators match single-level operators on one level") {
  auto h = makeHier(16, {false, false}, 2, {{IndexBox(0, 0, 15, 15)}});
  CompositeWorkspace ws(h);
  CompositeData q(h, 0, 1, 2), out(h, 0, 2, 2);
  fillAll(q.level(0), 0, [](double x, double y) { return x * x * y + y; });
  LevelData ref(h, 0, 2, 2);
  gradient(q.level(0), ref);
  compositeApply(ws, CompositeOp::gradient, q, out, {}, true, true);
  for (int j = 2; j < 14; ++j)
    for (int i = 2; i < 14; ++i)
      for (int c = 0; c < 2; ++c)
        CHECK(out.level(0).at(0, c, IntVec(i, j)) ==
              doctest::Approx(ref.at(0, c, IntVec(i, j))).epsilon(1e-13));
}
