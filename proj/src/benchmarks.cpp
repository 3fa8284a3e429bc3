#include "amrins/benchmarks.hpp"

#include <cmath>
#include <fstream>
#include <iostream>

#include "amrins/quadrature.hpp"

namespace amrins {

namespace {

Eigen::Vector2d viscousBoxVelocity(double x, double y) {
  const double sx = std::sin(M_PI * x), sy = std::sin(M_PI * y);
  return {sx * sx * std::sin(2 * M_PI * y), -std::sin(2 * M_PI * x) * sy * sy};
}

double vortexMergeOmega(double x, double y) {
  static const double gam[4] = {-150.0, 50.0, 50.0, 50.0};
  static const double cx[4] = {0.5, 0.59, 0.455, 0.455};
  static const double cy[4] = {0.5, 0.5, 0.5 + 0.045 * std::sqrt(3.0),
                               0.5 - 0.045 * std::sqrt(3.0)};
  double w = 0.0;
  for (int i = 0; i < 4; ++i) {
    const double r = std::sqrt((x - cx[i]) * (x - cx[i]) +
                               (y - cy[i]) * (y - cy[i]));
    w += 0.5 * gam[i] * (1.0 + std::tanh(3.0 - 100.0 * r));
  }
  return w;
}

Eigen::Vector2d singleVortexVelocity(double x, double y) {
  const double R = 0.2, G = 1.0;
  const double dx = x - 0.5, dy = y - 0.5;
  const double r = std::sqrt(dx * dx + dy * dy);
  double s;  // u_theta / r
  if (r < R)
    s = G * (0.5 - 4.0 * r * r);
  else
    s = G * R * (0.5 * R - 4.0 * R * R * R) / (r * r);
  return {-s * dy, s * dx};
}

double dipoleOmega(double x, double y) {
  const double we = 600.0, x0 = 1.0, y0 = 0.5, sigma = 0.0375;
  const double r2 = (x - x0) * (x - x0) + (y - y0) * (y - y0);
  return -we * (x - x0) * std::exp(-r2 / (sigma * sigma));
}

// Stream-function construction: solve L psi = -<omega> on the hierarchy and
// take the rotated composite gradient.
void initFromVorticity(AmrDriver& driver, const SolverConfig& cfg,
                       const std::function<double(double, double)>& omega,
                       bool wallsInY) {
  HierarchyPtr h = driver.hierarchy();
  auto ws = std::make_shared<CompositeWorkspace>(h);
  const int lm = h->maxLevel();
  CompositeData rhs(h, 0, 1, 2), psi(h, 0, 1, 2);
  for (int l = 0; l <= lm; ++l)
    rhs.level(l).fillCellAverages(0, [&](double x, double y) {
      return -omega(x, y);
    });
  averageDownAll(rhs);

  LinearSystemSpec spec;
  spec.kind = SystemKind::poisson_neumann;
  spec.bc = {BcKind::neumann, BcKind::neumann, BcKind::dirichlet,
             BcKind::dirichlet};
  if (!wallsInY)
    spec.bc = {BcKind::neumann, BcKind::neumann, BcKind::neumann,
               BcKind::neumann};
  MgConfig mg;
  mg.tol = cfg.mgTol;
  mg.maxCycles = cfg.mgMaxCycles;
  CompositeSolver solver(ws, 0, spec, mg);
  if (spec.nullspaced()) {
    // fully periodic: the vorticity must integrate to zero
    auto offs = solver.projectNullspaceComposite(rhs);
    for (double o : offs)
      if (std::abs(o) > 1e-10)
        std::cerr << "warning: demeaned vorticity by " << o
                  << " for stream-function solvability\n";
  }
  auto st = solver.solve(psi, rhs);
  if (st.diverged || !st.converged)
    throw std::runtime_error("stream-function solve failed");

  // u = (d psi / dy, -d psi / dx), composite gradient with Dirichlet-0
  // closures at the walls
  LevelFillHook hook = [&](LevelData& d, int l) {
    const Level& lev = h->level(l);
    PhysicalFill pf(d.numBoxes());
    bool any = false;
    for (int b = 0; b < d.numBoxes(); ++b)
      for (int side = 0; side < 4; ++side)
        if (isPhysicalSide(lev, d.box(b), side)) {
          SideFill sf;
          sf.kind = BcKind::dirichlet;
          sf.data = Eigen::ArrayXd::Zero(d.box(b).extent()[1 - side / 2] + 4);
          pf[b][side] = sf;
          any = true;
        }
    if (any) fillPhysicalGhosts(d, 0, pf);
  };
  CompositeData gpsi(h, 0, 2, 2);
  compositeApply(*ws, CompositeOp::gradient, psi, gpsi, wallsInY ? hook : LevelFillHook{},
                 true, false, 0);
  CompositeData& w = driver.velocity();
  for (int l = 0; l <= lm; ++l)
    for (int b = 0; b < w.level(l).numBoxes(); ++b) {
      w.level(l).arr(b, 0) = gpsi.level(l).arr(b, 1);
      w.level(l).arr(b, 1) = -gpsi.level(l).arr(b, 0);
    }
  averageDownAll(w);
}

}  // namespace

Problem problemFor(Benchmark b) {
  Problem p;
  p.bc.velocity = [](double, double, double) { return Eigen::Vector2d::Zero(); };
  p.bc.force = [](double, double, double) { return Eigen::Vector2d::Zero(); };
  p.bc.zeroVelocity = true;
  p.bc.zeroForce = true;
  switch (b) {
    case Benchmark::viscous_box:
    case Benchmark::single_vortex:
      p.periodic = {false, false};
      break;
    case Benchmark::vortex_merge:
      p.periodic = {true, true};
      break;
    case Benchmark::dipole:
      p.extent = RealVec(2.0, 1.0);
      p.periodic = {true, false};
      break;
  }
  return p;
}

IntVec baseCellsFor(const Problem& p, int cellsPerUnit) {
  return IntVec(int(std::lround(p.extent[0] * cellsPerUnit)),
                int(std::lround(p.extent[1] * cellsPerUnit)));
}

HierarchyPtr buildInitialHierarchy(const SolverConfig& cfg, int cellsPerUnit) {
  const Problem prob = problemFor(cfg.benchmark);
  const double h0 = 1.0 / cellsPerUnit;
  const IntVec nc = baseCellsFor(prob, cellsPerUnit);
  const ProblemDomain dom{nc, prob.periodic};

  if (!cfg.hierarchyFile.empty()) {
    std::ifstream in(cfg.hierarchyFile);
    if (!in) throw std::runtime_error("cannot open " + cfg.hierarchyFile);
    return Hierarchy::deserialize(in, prob.origin, h0, prob.periodic);
  }

  std::vector<std::vector<IndexBox>> boxes{{dom.box()}};
  if (!cfg.staticBoxes.empty() && cfg.maxLevel >= 1) {
    const int r = cfg.ratio;
    const double h1 = h0 / r;
    std::vector<IndexBox> l1;
    for (const auto& rect : cfg.staticBoxes) {
      IntVec lo(int(std::lround(rect[0] / h1)), int(std::lround(rect[1] / h1)));
      IntVec hi(int(std::lround(rect[2] / h1)) - 1,
                int(std::lround(rect[3] / h1)) - 1);
      // snap to the refinement alignment
      lo[0] -= ((lo[0] % r) + r) % r;
      lo[1] -= ((lo[1] % r) + r) % r;
      hi[0] += (r - 1 - (((hi[0] % r) + r) % r));
      hi[1] += (r - 1 - (((hi[1] % r) + r) % r));
      l1.push_back(IndexBox(lo, hi));
    }
    boxes.push_back(std::move(l1));
  }
  return std::make_shared<Hierarchy>(h0, dom, cfg.ratio, std::move(boxes),
                                     prob.origin);
}

double maxCompositeSpeed(const CompositeData& w) {
  double m = 0.0;
  const Hierarchy& h = *w.hierarchy();
  for (int l = w.baseLevel(); l <= w.maxLevel(); ++l) {
    const LevelData& d = w.level(l);
    for (const IndexBox& v : h.validRegion(l))
      for (int b = 0; b < d.numBoxes(); ++b) {
        const IndexBox ov = v.intersect(d.box(b));
        if (ov.empty()) continue;
        for (int j = ov.lo[1]; j <= ov.hi[1]; ++j)
          for (int i = ov.lo[0]; i <= ov.hi[0]; ++i) {
            const double ux = d.at(b, 0, IntVec(i, j));
            const double uy = d.at(b, 1, IntVec(i, j));
            m = std::max(m, std::sqrt(ux * ux + uy * uy));
          }
      }
  }
  return m;
}

void fillInitialVelocity(const SolverConfig& cfg, AmrDriver& driver) {
  switch (cfg.benchmark) {
    case Benchmark::viscous_box:
      driver.initialize([&](int, LevelData& d) {
        d.fillCellAverages(0, [](double x, double y) {
          return viscousBoxVelocity(x, y)[0];
        });
        d.fillCellAverages(1, [](double x, double y) {
          return viscousBoxVelocity(x, y)[1];
        });
      });
      break;
    case Benchmark::single_vortex:
      driver.initialize([&](int, LevelData& d) {
        d.fillCellAverages(0, [](double x, double y) {
          return singleVortexVelocity(x, y)[0];
        });
        d.fillCellAverages(1, [](double x, double y) {
          return singleVortexVelocity(x, y)[1];
        });
      });
      for (int k = 0; k < 10; ++k) driver.applyCompositeProjection(0);
      break;
    case Benchmark::vortex_merge:
      driver.initialize([](int, LevelData& d) { d.setZero(); });
      initFromVorticity(driver, cfg, vortexMergeOmega, false);
      break;
    case Benchmark::dipole:
      driver.initialize([](int, LevelData& d) { d.setZero(); });
      initFromVorticity(driver, cfg, dipoleOmega, true);
      break;
  }
}

std::unique_ptr<AmrDriver> makeDriver(const SolverConfig& cfg,
                                      int cellsPerUnit) {
  const Problem prob = problemFor(cfg.benchmark);
  DriverConfig dc;
  dc.gepup.nu = 1.0 / cfg.re;
  dc.gepup.lambda = cfg.lambda;
  dc.gepup.mg.tol = cfg.mgTol;
  dc.gepup.mg.maxCycles = cfg.mgMaxCycles;
  dc.bc = prob.bc;
  dc.t0 = cfg.t0;
  dc.te = cfg.te;
  dc.cop4AfterSync = cfg.cop4AfterSync;
  dc.maxLevel = cfg.staticBoxes.empty() && cfg.hierarchyFile.empty()
                    ? cfg.maxLevel
                    : 0;  // static setups never regrid
  dc.regridInterval = dc.maxLevel > 0 ? cfg.regridInterval : 0;
  dc.vorticityTags = cfg.vorticityTags;
  dc.regridPolicy.efficiency = cfg.regridEfficiency;
  dc.k0 = 1.0;  // provisional; fixed after the initial data is known

  auto tab = std::make_shared<ButcherTableau>(loadTableau());

  // dynamic runs: iterate the initial hierarchy against the tags
  HierarchyPtr hier = buildInitialHierarchy(cfg, cellsPerUnit);
  std::unique_ptr<AmrDriver> driver;
  const bool dynamic = dc.maxLevel > 0;
  for (int iter = 0;; ++iter) {
    driver = std::make_unique<AmrDriver>(hier, dc, tab);
    fillInitialVelocity(cfg, *driver);
    if (!dynamic || iter >= dc.maxLevel) break;
    RegridPolicy pol = dc.regridPolicy;
    HierarchyPtr nh = buildHierarchy(
        *hier, dc.maxLevel,
        [&](int l, TagSet& tg) { driver->tagCells(l, tg); }, pol);
    bool same = nh->numLevels() == hier->numLevels();
    if (same)
      for (int l = 0; l < nh->numLevels() && same; ++l)
        same = nh->level(l).boxes == hier->level(l).boxes;
    hier = nh;
    if (same) break;
  }

  // base step from the Courant number, snapped to land on te exactly
  double k0 = cfg.k0;
  if (k0 <= 0) {
    const double umax = std::max(maxCompositeSpeed(driver->velocity()), 1e-8);
    k0 = cfg.cr * (1.0 / cellsPerUnit) / umax;
  }
  const int nsteps = std::max(1, int(std::ceil((cfg.te - cfg.t0) / k0 - 1e-9)));
  driver->setBaseStep((cfg.te - cfg.t0) / nsteps);
  return driver;
}

RunResult runSimulation(const SolverConfig& cfg, int cellsPerUnit,
                        const std::function<void(const StepRecord&)>& onStep,
                        bool withPressure) {
  auto driver = makeDriver(cfg, cellsPerUnit);
  driver->run(onStep);
  RunResult out;
  out.hier = driver->hierarchy();
  out.w = driver->velocity().clone();
  if (withPressure) out.p = driver->recoverPressure();
  out.records = driver->records();
  out.k0 = (cfg.te - cfg.t0) / driver->baseStepsTotal();
  return out;
}

CompositeData richardsonError(const CompositeData& coarse,
                              const CompositeData& fine) {
  CompositeData err = coarse.clone();
  const Hierarchy& hc = *coarse.hierarchy();
  for (int l = coarse.baseLevel(); l <= coarse.maxLevel(); ++l) {
    const LevelData& fl = fine.level(l);
    LevelData& el = err.level(l);
    for (int b = 0; b < el.numBoxes(); ++b) {
      const IndexBox& cb = el.box(b);
      const IndexBox fb = fine.level(l).box(b);
      if (!(coarsenBox(fb, 2) == cb))
        throw std::runtime_error("mismatched subdomains in static Richardson");
      for (int c = 0; c < el.ncomp(); ++c)
        for (int j = cb.lo[1]; j <= cb.hi[1]; ++j)
          for (int i = cb.lo[0]; i <= cb.hi[0]; ++i) {
            double s = 0.0;
            for (int jj = 0; jj < 2; ++jj)
              for (int ii = 0; ii < 2; ++ii)
                s += fl.at(b, c, IntVec(2 * i + ii, 2 * j + jj));
            el.at(b, c, IntVec(i, j)) -= 0.25 * s;
          }
    }
  }
  (void)hc;
  return err;
}

double richardsonRate(double e1, double e2) {
  if (e1 <= 0 || e2 <= 0) return std::numeric_limits<double>::quiet_NaN();
  return std::log2(e1 / e2);
}

double modifiedRichardsonRate(double e1, double e2, int a) {
  // solve (2^{ap} - 1) / (2^{(a-1)p} - 1) = e1/e2 for p
  const double target = e1 / e2;
  double p = 4.0;
  for (int it = 0; it < 100; ++it) {
    const double num = std::pow(2.0, a * p) - 1.0;
    const double den = std::pow(2.0, (a - 1) * p) - 1.0;
    const double f = num / den - target;
    const double dnum = std::log(2.0) * a * std::pow(2.0, a * p);
    const double dden = std::log(2.0) * (a - 1) * std::pow(2.0, (a - 1) * p);
    const double df = (dnum * den - num * dden) / (den * den);
    const double step = f / df;
    p -= step;
    if (std::abs(step) < 1e-12) break;
  }
  return p;
}

SpeedupReport speedupReport(const std::vector<StepRecord>& amr,
                            const std::vector<StepRecord>& uniform,
                            int finePerBase) {
  SpeedupReport rep;
  double sumAmr = 0.0, sumUnf = 0.0;
  const std::size_t nbase = amr.size();
  if (uniform.size() < nbase * std::size_t(finePerBase))
    throw std::runtime_error("mismatched step counts in speedup report");
  for (std::size_t n = 0; n < nbase; ++n) {
    double tUnf = 0.0;
    for (int k = 0; k < finePerBase; ++k)
      tUnf += uniform[n * finePerBase + k].wallSeconds;
    SpeedupRow row;
    row.step = amr[n].step;
    row.t = amr[n].t;
    row.sIdl = amr[n].sIdl;
    row.sAct = tUnf / std::max(amr[n].wallSeconds, 1e-12);
    rep.rows.push_back(row);
    sumAmr += amr[n].wallSeconds;
    sumUnf += tUnf;
  }
  rep.sActTotal = sumUnf / std::max(sumAmr, 1e-12);
  return rep;
}

}  // namespace amrins
