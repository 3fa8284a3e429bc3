#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "amrins/benchmarks.hpp"
#include "amrins/io.hpp"
#include "test_util.hpp"

using namespace amrins;
using namespace amrins::testutil;

TEST_CASE("config: defaults, errors, round trip") {
  SUBCASE("minimal config and defaults") {
    std::istringstream in(
        "benchmark = viscous_box\nre = 100\ncr = 0.5\nte = 0.5\n");
    SolverConfig c = parseConfig(in);
    CHECK(c.lambda == 1.0);
    CHECK(c.ratio == 2);
    CHECK(c.mgTol == 1e-10);
    CHECK(c.outputDir == "out");
  }

  SUBCASE("missing required key is named") {
    std::istringstream in("benchmark = viscous_box\ncr = 0.5\nte = 0.5\n");
    try {
      parseConfig(in);
      FAIL("expected an error");
    } catch (const std::exception& e) {
      CHECK(std::string(e.what()).find("re") != std::string::npos);
    }
  }

  SUBCASE("unknown keys are rejected") {
    std::istringstream in(
        "benchmark = viscous_box\nre = 100\ncr = 0.5\nte = 0.5\nbogus = 1\n");
    try {
      parseConfig(in);
      FAIL("expected an error");
    } catch (const std::exception& e) {
      CHECK(std::string(e.what()).find("bogus") != std::string::npos);
    }
  }

  SUBCASE("round trip is stable") {
    std::istringstream in(
        "benchmark = dipole\nre = 200000\ncr = 0.5\nte = 5\nmax_level = 2\n"
        "vorticity_tags = 0.05 0.2\nstatic_boxes = 0 0 0.25 0.25 ; 0.5 0.5 "
        "1 1\nregrid_interval = 4\n");
    SolverConfig c1 = parseConfig(in);
    std::stringstream mid;
    writeConfig(c1, mid);
    SolverConfig c2 = parseConfig(mid);
    CHECK(c1 == c2);
    std::stringstream mid2;
    writeConfig(c2, mid2);
    SolverConfig c3 = parseConfig(mid2);
    CHECK(c2 == c3);
  }
}

TEST_CASE("richardson rates on synthetic fields") {
  auto h32 = makeHier(32, {false, false}, 2, {{IndexBox(0, 0, 31, 31)}});
  auto h64 = makeHier(64, {false, false}, 2, {{IndexBox(0, 0, 63, 63)}});
  auto h128 = makeHier(128, {false, false}, 2, {{IndexBox(0, 0, 127, 127)}});
  auto fill = [](CompositeData& c, double amp) {
    c.level(0).fillCellAverages(0, [amp](double x, double y) {
      return amp * std::sin(2 * M_PI * x) * std::cos(2 * M_PI * y);
    });
    c.level(0).fillCellAverages(1, [amp](double x, double y) {
      return amp * std::cos(2 * M_PI * x) * std::sin(2 * M_PI * y);
    });
  };
  // u(h) = exact + C h^4: pairwise differences scale by 1/16 per refinement
  CompositeData u32(h32, 0, 2, 0), u64(h64, 0, 2, 0), u128(h128, 0, 2, 0);
  fill(u32, 1.0 + 1.0 / 1.0);  // exact + C with C ~ h^4 scaling below
  CompositeData e1(h32, 0, 2, 0), e2(h64, 0, 2, 0);
  // build solutions: exact=sin-field, error amplitude eps(h) = h^4
  auto mk = [&](CompositeData& c, int n) {
    const double eps = std::pow(1.0 / n, 4);
    c.level(0).fillCellAverages(0, [&](double x, double y) {
      return std::sin(2 * M_PI * x) + eps * std::cos(2 * M_PI * y);
    });
    c.level(0).fillCellAverages(1, [&](double x, double y) {
      return std::cos(2 * M_PI * y) + eps * std::sin(2 * M_PI * x);
    });
  };
  mk(u32, 32);
  mk(u64, 64);
  mk(u128, 128);
  CompositeData d1 = richardsonError(u32, u64);
  CompositeData d2 = richardsonError(u64, u128);
  const double n1 = compositeNorm(d1, Norm::L1), n2 = compositeNorm(d2, Norm::L1);
  const double rate = richardsonRate(n1, n2);
  CHECK(rate == doctest::Approx(4.0).epsilon(1e-3));
}

TEST_CASE("modified richardson rate recovers synthetic order") {
  // errors against a reference 2^a times finer: e = C(h^p - href^p)
  const double C = 3.0, p = 4.0;
  const int a = 2;  // coarse grid is 4x the reference spacing
  const double href = 1.0 / 512;
  const double e1 = C * (std::pow(4 * href, p) - std::pow(href, p));
  const double e2 = C * (std::pow(2 * href, p) - std::pow(href, p));
  CHECK(modifiedRichardsonRate(e1, e2, a) == doctest::Approx(4.0).epsilon(1e-9));
}

TEST_CASE("speedup arithmetic") {
  // 2 levels, r=2, N1 = Nunf/4, N0 = Nunf/4: S_idl = 8/3
  std::vector<StepRecord> amr(3), unf(6);
  for (int i = 0; i < 3; ++i) {
    amr[i].step = i;
    amr[i].t = 0.1 * i;
    amr[i].wallSeconds = 1.0;
    amr[i].sIdl = 1.0 / ((0.5 * 0.25) + 0.25);
  }
  for (int i = 0; i < 6; ++i) unf[i].wallSeconds = 1.0;
  SpeedupReport rep = speedupReport(amr, unf, 2);
  REQUIRE(rep.rows.size() == 3);
  CHECK(rep.rows[0].sIdl == doctest::Approx(8.0 / 3.0));
  CHECK(rep.rows[0].sAct == doctest::Approx(2.0));
  CHECK(rep.sActTotal == doctest::Approx(2.0));
}

TEST_CASE("initial fields match the reported scales") {
  SUBCASE("single vortex peak speed") {
    SolverConfig cfg;
    cfg.benchmark = Benchmark::single_vortex;
    cfg.re = 20000;
    cfg.cr = 0.5;
    cfg.te = 1.0;
    auto d = makeDriver(cfg, 64);
    const double umax = maxCompositeSpeed(d->velocity());
    MESSAGE("single-vortex peak speed ", umax);
    CHECK(umax == doctest::Approx(0.068).epsilon(0.05));
  }

  SUBCASE("vortex merge: divergence-free curl construction") {
    SolverConfig cfg;
    cfg.benchmark = Benchmark::vortex_merge;
    cfg.re = 1000;
    cfg.cr = 0.5;
    cfg.te = 1.0;
    auto d = makeDriver(cfg, 64);
    CHECK(d->compositeDivergenceInf() < 1e-7);
    CHECK(maxCompositeSpeed(d->velocity()) > 0.5);
  }

  SUBCASE("dipole peak speed near 0.21") {
    SolverConfig cfg;
    cfg.benchmark = Benchmark::dipole;
    cfg.re = 200000;  // nu = 5e-6
    cfg.cr = 0.5;
    cfg.te = 1.0;
    auto d = makeDriver(cfg, 64);
    const double umax = maxCompositeSpeed(d->velocity());
    MESSAGE("dipole peak speed ", umax);
    CHECK(umax == doctest::Approx(0.21).epsilon(0.12));
  }

  SUBCASE("viscous box symmetry of the cell averages") {
    SolverConfig cfg;
    cfg.benchmark = Benchmark::viscous_box;
    cfg.re = 100;
    cfg.cr = 0.5;
    cfg.te = 1.0;
    auto d = makeDriver(cfg, 32);
    const LevelData& w = d->velocity().level(0);
    // u(x, y) = -v(y, x)
    for (int j = 0; j < 32; ++j)
      for (int i = 0; i < 32; ++i)
        CHECK(w.at(0, 0, IntVec(i, j)) ==
              doctest::Approx(-w.at(0, 1, IntVec(j, i))).epsilon(1e-12));
  }
}

TEST_CASE("hierarchy text format drives a static setup") {
  auto h = makeHier(32, {false, false}, 2,
                    {{IndexBox(0, 0, 31, 31)}, {refineBox(IndexBox(8, 8, 23, 23), 2)}});
  std::stringstream ss;
  h->serialize(ss);
  auto h2 = Hierarchy::deserialize(ss, h->origin(), h->spacing(0), {false, false});
  CHECK(h2->level(1).boxes == h->level(1).boxes);
}
