#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "amrins/benchmarks.hpp"
#include "test_util.hpp"

using namespace amrins;
using namespace amrins::testutil;

namespace {

SolverConfig viscousBoxCfg(double te) {
  SolverConfig c;
  c.benchmark = Benchmark::viscous_box;
  c.re = 100.0;
  c.cr = 0.5;
  c.te = te;
  c.mgTol = 1e-10;
  return c;
}

}  // namespace

TEST_CASE("clusterTags") {
  ProblemDomain dom{IntVec(32, 32), {false, false}};

  SUBCASE("single cell yields one small box") {
    TagSet t(dom);
    t.set(IntVec(5, 9));
    auto boxes = clusterTags(t);
    REQUIRE(boxes.size() == 1);
    CHECK(boxes[0].contains(IntVec(5, 9)));
  }

  SUBCASE("full rectangle: one box, fill ratio one") {
    TagSet t(dom);
    t.addBox(IndexBox(4, 6, 19, 13));
    auto boxes = clusterTags(t);
    REQUIRE(boxes.size() == 1);
    CHECK(boxes[0] == IndexBox(4, 6, 19, 13));
  }

  SUBCASE("two distant clusters split with good fill ratios") {
    TagSet t(dom);
    t.addBox(IndexBox(2, 2, 6, 6));
    t.addBox(IndexBox(20, 22, 27, 29));
    auto boxes = clusterTags(t);
    REQUIRE(boxes.size() == 2);
    for (const auto& b : boxes) {
      std::int64_t n = 0;
      for (int j = b.lo[1]; j <= b.hi[1]; ++j)
        for (int i = b.lo[0]; i <= b.hi[0]; ++i)
          if (t.get(IntVec(i, j))) ++n;
      CHECK(double(n) / b.numCells() >= 0.7);
    }
  }

  SUBCASE("random tags are always covered; boxes disjoint") {
    std::mt19937 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
      TagSet t(dom);
      std::uniform_int_distribution<int> d(0, 31);
      const int n = 1 + trial * 7;
      std::vector<IntVec> cells;
      for (int k = 0; k < n; ++k) {
        IntVec c(d(rng), d(rng));
        t.set(c);
        cells.push_back(c);
      }
      auto boxes = clusterTags(t);
      for (const auto& c : cells) {
        bool covered = false;
        for (const auto& b : boxes) covered |= b.contains(c);
        CHECK(covered);
      }
      for (std::size_t i = 0; i < boxes.size(); ++i)
        for (std::size_t j = i + 1; j < boxes.size(); ++j)
          CHECK(!boxes[i].intersects(boxes[j]));
    }
  }
}

TEST_CASE("buildHierarchy honors tags and validates") {
  auto base = makeHier(32, {false, false}, 2, {{IndexBox(0, 0, 31, 31)}});
  RegridPolicy pol;

  SUBCASE("no tags collapses to the base level") {
    auto h = buildHierarchy(*base, 2, [](int, TagSet&) {}, pol);
    CHECK(h->maxLevel() == 0);
  }

  SUBCASE("tag everything: level 1 covers the domain") {
    auto h = buildHierarchy(
        *base, 1,
        [](int l, TagSet& t) {
          if (l == 0) t.addBox(IndexBox(0, 0, 31, 31));
        },
        pol);
    REQUIRE(h->maxLevel() == 1);
    CHECK(totalCells(h->level(1).boxes) == 64 * 64);
  }

  SUBCASE("random tags produce valid hierarchies (three levels)") {
    std::mt19937 rng(11);
    std::uniform_int_distribution<int> d(4, 27);
    for (int trial = 0; trial < 10; ++trial) {
      const IntVec c(d(rng), d(rng));
      auto h = buildHierarchy(
          *base, 2,
          [&](int l, TagSet& t) {
            if (l == 0)
              t.addBox(IndexBox(c - 3, c + 3));
            else if (l == 1)
              t.addBox(IndexBox(c * 2 - 2, c * 2 + 2));
          },
          pol);
      CHECK(!h->validate().has_value());
      CHECK(h->maxLevel() == 2);
    }
  }
}

TEST_CASE("single-level driver matches direct stepping after jump start") {
  SolverConfig cfg = viscousBoxCfg(0.05);
  auto driver = makeDriver(cfg, 32);
  const double k0 = (cfg.te - cfg.t0) / driver->baseStepsTotal();
  // independent path: the level stepper directly
  auto h = driver->hierarchy();
  auto tab = std::make_shared<ButcherTableau>(loadTableau());
  GepupParams prm;
  prm.nu = 1.0 / cfg.re;
  prm.mg.tol = cfg.mgTol;
  Problem prob = problemFor(cfg.benchmark);
  GepupLevelStepper st(h, 0, prm, prob.bc, tab);
  LevelData w = driver->velocity().level(0).clone();
  StepTelemetry tel;
  for (int s = 0; s < 3; ++s) st.step(w, s * k0, k0, nullptr, nullptr, &tel);

  driver->jumpStart();
  double dmax = 0;
  const LevelData& wd = driver->velocity().level(0);
  for (int j = 0; j < 32; ++j)
    for (int i = 0; i < 32; ++i)
      for (int c = 0; c < 2; ++c)
        dmax = std::max(dmax, std::abs(wd.at(0, c, IntVec(i, j)) -
                                       w.at(0, c, IntVec(i, j))));
  // the two paths share the discretization; they differ only through the
  // iterative solvers, whose tolerance is relative to rhs scales that
  // include the absorbed boundary data
  MESSAGE("jump-start vs direct stepping difference ", dmax);
  CHECK(dmax < 2e-6);
}

TEST_CASE("two-level subcycled viscous box: stability and bookkeeping") {
  SolverConfig cfg = viscousBoxCfg(0.08);
  cfg.maxLevel = 1;
  cfg.staticBoxes = {{0.0, 0.0, 0.25, 0.25},
                     {0.75, 0.75, 1.0, 1.0}};
  auto driver = makeDriver(cfg, 32);
  REQUIRE(driver->hierarchy()->maxLevel() == 1);
  driver->run();
  const auto& recs = driver->records();
  REQUIRE(!recs.empty());
  double div0 = recs.front().divInf;
  for (const auto& r : recs) {
    CHECK(std::isfinite(r.divInf));
    CHECK(r.qCompat < 1e-12);
    CHECK(r.projCompat < 1e-12);
    CHECK(r.ifcBalance < 0.3);  // interface data balance before correction
    CHECK(r.divInf < 50 * div0 + 1e-6);
  }
  CHECK(driver->time() == doctest::Approx(cfg.te));
  // velocity stays sane
  CHECK(maxCompositeSpeed(driver->velocity()) < 2.0);
}

TEST_CASE("checkpoint round trip resumes identically") {
  SolverConfig cfg = viscousBoxCfg(0.06);
  cfg.maxLevel = 1;
  cfg.staticBoxes = {{0.25, 0.25, 0.75, 0.75}};
  auto d1 = makeDriver(cfg, 16);
  d1->jumpStart();
  d1->advanceOneBaseStep();
  std::stringstream ss;
  d1->writeCheckpoint(ss);

  auto d2 = makeDriver(cfg, 16);
  d2->readCheckpoint(ss);
  CHECK(d2->baseStepsTaken() == d1->baseStepsTaken());

  d1->advanceOneBaseStep();
  d2->advanceOneBaseStep();
  double dmax = 0;
  for (int l = 0; l <= 1; ++l) {
    const LevelData& a = d1->velocity().level(l);
    const LevelData& b = d2->velocity().level(l);
    for (int bb = 0; bb < a.numBoxes(); ++bb) {
      const IndexBox& bx = a.box(bb);
      for (int j = bx.lo[1]; j <= bx.hi[1]; ++j)
        for (int i = bx.lo[0]; i <= bx.hi[0]; ++i)
          for (int c = 0; c < 2; ++c)
            dmax = std::max(dmax, std::abs(a.at(bb, c, IntVec(i, j)) -
                                           b.at(bb, c, IntVec(i, j))));
    }
  }
  // warm starts are not checkpointed, so the restart re-converges within
  // solver tolerance rather than bitwise
  MESSAGE("post-restart divergence of trajectories ", dmax);
  CHECK(dmax < 1e-8);
}
