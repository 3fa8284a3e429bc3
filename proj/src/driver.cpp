#include "amrins/driver.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>

#include "amrins/quadrature.hpp"

namespace amrins {

namespace {

void interiorSub(LevelData& y, const LevelData& x) {
  const int g = y.ghost();
  for (int b = 0; b < y.numBoxes(); ++b) {
    const IntVec e = y.box(b).extent();
    for (int c = 0; c < y.ncomp(); ++c)
      y.arr(b, c).block(g, g, e[0], e[1]) -=
          x.arr(b, c).block(g, g, e[0], e[1]);
  }
}

Eigen::ArrayXd extendEnds(const Eigen::ArrayXd& a) {
  Eigen::ArrayXd out(a.size() + 4);
  out.segment(2, a.size()) = a;
  out[0] = out[1] = a[0];
  out[a.size() + 2] = out[a.size() + 3] = a[a.size() - 1];
  return out;
}

}  // namespace

struct AmrDriver::Impl {
  DriverConfig cfg;
  std::shared_ptr<const ButcherTableau> tab;

  HierarchyPtr hier;
  std::shared_ptr<CompositeWorkspace> ws;
  CompositeData w;  // based at level 0
  std::vector<std::unique_ptr<GepupLevelStepper>> steppers;
  std::vector<std::unique_ptr<InterfaceConditions>> ifc;  // [l], l >= 1
  std::vector<TimeHistory> hist;                          // [l], l < lmax
  std::vector<std::vector<std::array<std::vector<std::uint8_t>, 4>>> masks;

  std::map<int, std::unique_ptr<CompositeSolver>> projSolver;
  std::map<int, CompositeData> psiWarm;
  std::unique_ptr<CompositeSolver> qCompSolver;
  std::unique_ptr<CompositeSolver> helmCompSolver[2];
  double helmCompBeta = 0.0;
  CompositeData qCompWarm;

  std::vector<long long> clock;  // in units of k^{lmax}
  long long unitsPerBase = 1;
  int stepsTaken = 0, stepsTotal = 0;
  bool jumped = false;
  int lastRegridStep = 0;

  StepTelemetry tel;
  std::vector<StepRecord> recs;

  int lmax() const { return hier->maxLevel(); }
  double kmin() const { return cfg.k0 / double(unitsPerBase); }
  long long kint(int l) const {
    long long u = unitsPerBase;
    for (int m = 0; m < l; ++m) u /= hier->ratio();
    return u;
  }
  double kOf(int l) const { return cfg.k0 * double(kint(l)) / unitsPerBase; }
  double timeOf(int l) const { return cfg.t0 + clock[l] * kmin(); }

  void rebuildMachinery();
  void resetClocks(long long baseUnits);
  void pushHistory(int l);
  void singleLevelAdvance(int l);
  void compositeProject(CompositeData& field, double t, int lbase);
  void syncCompositeStep(double t, double k);
  void jumpStart();
  void baseStep(const std::function<void(const StepRecord&)>& onStep);
  bool regridDue();
  void regridNow();
  void tagCells(int l, TagSet& tags);
  LevelFillHook hookVelocity(double t, bool evolved, int lbase,
                             const InterfaceStageData* st);
  double divergenceInf();
  CompositeData pressure(double t);
  double idealSpeedup() const;
};

AmrDriver::AmrDriver(HierarchyPtr h, DriverConfig cfg,
                     std::shared_ptr<const ButcherTableau> tab)
    : impl_(std::make_unique<Impl>()) {
  impl_->cfg = cfg;
  impl_->tab = std::move(tab);
  impl_->hier = std::move(h);
  if (auto v = impl_->hier->validate())
    throw std::runtime_error("invalid initial hierarchy: " + v->what + " (" +
                             v->detail + ")");
  if (cfg.k0 <= 0) throw std::invalid_argument("base step size must be set");
  impl_->rebuildMachinery();
  impl_->resetClocks(0);
  impl_->stepsTotal = std::max(1, int(std::llround((cfg.te - cfg.t0) / cfg.k0)));
}

AmrDriver::~AmrDriver() = default;

void AmrDriver::Impl::rebuildMachinery() {
  ws = std::make_shared<CompositeWorkspace>(hier);
  w = CompositeData(hier, 0, 2, 2);
  steppers.clear();
  ifc.clear();
  ifc.resize(hier->numLevels());
  masks.clear();
  for (int l = 0; l <= lmax(); ++l) {
    steppers.push_back(
        std::make_unique<GepupLevelStepper>(hier, l, cfg.gepup, cfg.bc, tab));
    masks.push_back(interfaceFaceMasks(*hier, l));
    if (l >= 1)
      ifc[l] =
          std::make_unique<InterfaceConditions>(hier, l, cfg.bc, cfg.gepup.nu);
  }
  hist.assign(std::max(0, lmax()), TimeHistory{});
  projSolver.clear();
  psiWarm.clear();
  qCompSolver.reset();
  helmCompSolver[0].reset();
  helmCompSolver[1].reset();
  qCompWarm = CompositeData();
}

void AmrDriver::Impl::resetClocks(long long baseUnits) {
  unitsPerBase = 1;
  for (int l = 0; l < lmax(); ++l) unitsPerBase *= hier->ratio();
  clock.assign(hier->numLevels(), baseUnits * unitsPerBase);
}

LevelFillHook AmrDriver::Impl::hookVelocity(double t, bool evolved, int lbase,
                                            const InterfaceStageData* st) {
  return [this, t, evolved, lbase, st](LevelData& d, int l) {
    if (l == lbase && lbase > 0 && st) {
      const auto& regions = ws->ghostRegions(l);
      for (int b = 0; b < d.numBoxes(); ++b) {
        const IndexBox& bx = d.box(b);
        for (const IndexBox& piece : regions[b])
          for (int c = 0; c < d.ncomp(); ++c)
            for (int j = piece.lo[1]; j <= piece.hi[1]; ++j)
              for (int i = piece.lo[0]; i <= piece.hi[0]; ++i)
                d.at(b, c, IntVec(i, j)) =
                    st->ghostBand[b][c](i - bx.lo[0] + 2, j - bx.lo[1] + 2);
      }
    }
    for (int c = 0; c < d.ncomp(); ++c) {
      PhysicalFill pf = evolved ? velocityFillW(d, cfg.bc, c, t)
                                : velocityFillU(d, cfg.bc, c, t);
      fillPhysicalGhosts(d, c, pf);
    }
  };
}

// ---------------------------------------------------------------------------
// Composite projection (the synchronization)
// ---------------------------------------------------------------------------

void AmrDriver::Impl::compositeProject(CompositeData& field, double t,
                                       int lbase) {
  const int lm = lmax();
  std::optional<InterfaceStageData> st;
  if (lbase > 0) st = ifc[lbase]->stage(hist[lbase - 1], t);
  LevelFillHook hookW = hookVelocity(t, true, lbase, st ? &*st : nullptr);

  CompositeData rhs(hier, lbase, 1, 2);
  compositeApply(*ws, CompositeOp::divergence, field, rhs, hookW, true, true,
                 lbase);

  std::vector<ScalarNeumannData> data(lm + 1);
  for (int l = lbase; l <= lm; ++l) {
    LevelData& wl = field.level(l);
    const Level& lev = hier->level(l);
    data[l].phys.assign(wl.numBoxes(), {});
    data[l].ifc.assign(wl.numBoxes(), {});
    for (int b = 0; b < wl.numBoxes(); ++b)
      for (int side = 0; side < 4; ++side) {
        if (isPhysicalSide(lev, wl.box(b), side)) {
          data[l].phys[b][side] = extendEnds(
              projectionNeumannPhysicalSide(wl, b, side, t, cfg.bc));
        } else if (l == lbase && st) {
          const auto& m = masks[l][b][side];
          bool any = false;
          for (auto v : m) any |= v;
          if (!any) continue;
          Eigen::ArrayXd comp = sideNormalFaceAverages(wl, b, side);
          Eigen::ArrayXd dd = Eigen::ArrayXd::Zero(comp.size());
          for (int tt = 0; tt < comp.size(); ++tt)
            if (m[tt]) dd[tt] = comp[tt] - st->sides[b][side].un[tt];
          data[l].ifc[b][side] = dd;
        }
      }
  }

  LevelFillHook hookData = [this, lbase, &data](LevelData& d, int l) {
    for (int b = 0; b < d.numBoxes(); ++b)
      for (int side = 0; side < 4; ++side)
        if (l == lbase && data[l].ifc[b][side].size())
          fillGhostLinesMasked(d, 0, b, side, masks[l][b][side],
                               BcKind::neumann, &data[l].ifc[b][side]);
    PhysicalFill pf(d.numBoxes());
    bool any = false;
    for (int b = 0; b < d.numBoxes(); ++b)
      for (int side = 0; side < 4; ++side)
        if (data[l].phys[b][side].size()) {
          SideFill sf;
          sf.kind = BcKind::neumann;
          sf.data = data[l].phys[b][side];
          pf[b][side] = sf;
          any = true;
        }
    if (any) fillPhysicalGhosts(d, 0, pf);
  };

  CompositeData z(hier, lbase, 1, 2), a0(hier, lbase, 1, 2);
  z.setZero();
  compositeApply(*ws, CompositeOp::laplacian, z, a0, hookData, true, true,
                 lbase);
  for (int l = lbase; l <= lm; ++l) interiorSub(rhs.level(l), a0.level(l));

  auto& solver = projSolver[lbase];
  if (!solver) {
    LinearSystemSpec spec;
    spec.kind = SystemKind::projection_poisson;
    spec.bc = {BcKind::neumann, BcKind::neumann, BcKind::neumann,
               BcKind::neumann};
    solver = std::make_unique<CompositeSolver>(ws, lbase, spec, cfg.gepup.mg);
  }
  solver->projectNullspaceComposite(rhs);
  auto warm = psiWarm.find(lbase);
  if (warm == psiWarm.end())
    warm = psiWarm.emplace(lbase, CompositeData(hier, lbase, 1, 2)).first;
  auto stz = solver->solve(warm->second, rhs);
  tel.mgCycles += stz.cycles;
  if (stz.diverged)
    throw std::runtime_error("composite projection diverged at slice base " +
                             std::to_string(lbase));

  CompositeData gpsi(hier, lbase, 2, 2);
  compositeApply(*ws, CompositeOp::gradient, warm->second, gpsi, hookData,
                 true, false, lbase);
  for (int l = lbase; l <= lm; ++l) interiorSub(field.level(l), gpsi.level(l));
  if (cfg.cop4AfterSync)
    for (int l = lm - 1; l >= lbase; --l)
      averageDown(field.level(l + 1), field.level(l));
}

// ---------------------------------------------------------------------------
// Synchronized composite IMEX step (jump start)
// ---------------------------------------------------------------------------

void AmrDriver::Impl::syncCompositeStep(double t, double k) {
  const ButcherTableau& tb = *tab;
  const int ns = tb.stages;
  const double nu = cfg.gepup.nu;
  const double kng = k * nu * tb.gamma;

  if (!helmCompSolver[0] || helmCompBeta != -kng) {
    for (int c = 0; c < 2; ++c) {
      LinearSystemSpec spec;
      spec.kind = SystemKind::helmholtz;
      spec.alpha = 1.0;
      spec.beta = -kng;
      for (int side = 0; side < 4; ++side)
        spec.bc[side] = (side / 2 == c) ? BcKind::neumann : BcKind::dirichlet;
      spec.interfaceFrozen = true;
      helmCompSolver[c] =
          std::make_unique<CompositeSolver>(ws, 0, spec, cfg.gepup.mg);
    }
    helmCompBeta = -kng;
  }
  if (!qCompSolver) {
    LinearSystemSpec spec;
    spec.kind = SystemKind::poisson_neumann;
    spec.bc = {BcKind::neumann, BcKind::neumann, BcKind::neumann,
               BcKind::neumann};
    qCompSolver = std::make_unique<CompositeSolver>(ws, 0, spec, cfg.gepup.mg);
    qCompWarm = CompositeData(hier, 0, 1, 2);
  }

  const int lm = lmax();
  CompositeData wn = w.clone();
  CompositeData u(hier, 0, 2, 2), q(hier, 0, 1, 2), gq(hier, 0, 2, 2);
  CompositeData conv(hier, 0, 2, 2), X(hier, 0, 2, 2), rhs1(hier, 0, 1, 2);
  CompositeData z1(hier, 0, 1, 2), a01(hier, 0, 1, 2);
  std::vector<CompositeData> XE, LW;
  for (int s = 0; s < ns; ++s) {
    XE.emplace_back(hier, 0, 2, 2);
    LW.emplace_back(hier, 0, 2, 2);
  }

  LevelFillHook hookX = [this](LevelData& d, int l) {
    const Level& lev = hier->level(l);
    for (int b = 0; b < d.numBoxes(); ++b)
      for (int side = 0; side < 4; ++side)
        if (isPhysicalSide(lev, d.box(b), side))
          for (int c = 0; c < d.ncomp(); ++c) extrapolateGhosts(d, c, b, side);
  };

  // q solve + explicit term at stage s (fields at ts), given LW[s]
  auto explicitRhs = [&](int s, double ts) {
    compositeApply(*ws, CompositeOp::convection, u, conv,
                   hookVelocity(ts, false, 0, nullptr), true, true, 0);
    for (int l = 0; l <= lm; ++l) {
      steppers[l]->forceCells(ts, X.level(l));
      X.level(l).axpy(-1.0, conv.level(l));
    }
    compositeApply(*ws, CompositeOp::divergence, X, rhs1, hookX, true, true, 0);
    // Neumann data per level's physical sides
    std::vector<ScalarNeumannData> data(lm + 1);
    for (int l = 0; l <= lm; ++l) {
      LevelData& wl = w.level(l);
      const Level& lev = hier->level(l);
      data[l].phys.assign(wl.numBoxes(), {});
      data[l].ifc.assign(wl.numBoxes(), {});
      for (int b = 0; b < wl.numBoxes(); ++b)
        for (int side = 0; side < 4; ++side)
          if (isPhysicalSide(lev, wl.box(b), side))
            data[l].phys[b][side] = extendEnds(scalarNeumannPhysicalSide(
                wl, LW[s].level(l), b, side, ts, cfg.bc, nu,
                cfg.gepup.lambda));
    }
    LevelFillHook hookQ = [this, &data](LevelData& d, int l) {
      PhysicalFill pf(d.numBoxes());
      bool any = false;
      for (int b = 0; b < d.numBoxes(); ++b)
        for (int side = 0; side < 4; ++side)
          if (data[l].phys[b][side].size()) {
            SideFill sf;
            sf.kind = BcKind::neumann;
            sf.data = data[l].phys[b][side];
            pf[b][side] = sf;
            any = true;
          }
      if (any) fillPhysicalGhosts(d, 0, pf);
    };
    z1.setZero();
    compositeApply(*ws, CompositeOp::laplacian, z1, a01, hookQ, true, true, 0);
    for (int l = 0; l <= lm; ++l) interiorSub(rhs1.level(l), a01.level(l));
    qCompSolver->projectNullspaceComposite(rhs1);
    auto stq = qCompSolver->solve(qCompWarm, rhs1);
    tel.mgCycles += stq.cycles;
    if (stq.diverged) throw std::runtime_error("composite q solver diverged");
    for (int l = 0; l <= lm; ++l) q.level(l).copyFrom(qCompWarm.level(l));
    compositeApply(*ws, CompositeOp::gradient, q, gq, hookQ, true, false, 0);
    for (int l = 0; l <= lm; ++l) {
      LevelData& xe = XE[s].level(l);
      steppers[l]->forceCells(ts, xe);
      xe.axpy(-1.0, conv.level(l));
      xe.axpy(-1.0, gq.level(l));
    }
  };

  // stage 1
  {
    const double t1 = t + tb.c(0) * k;
    compositeApply(*ws, CompositeOp::laplacian, w, LW[0],
                   hookVelocity(t1, true, 0, nullptr), true, true, 0);
    for (int l = 0; l <= lm; ++l) u.level(l).copyFrom(w.level(l));
    explicitRhs(0, t1);
  }

  CompositeData rhs(hier, 0, 2, 2), wc = w.clone();
  CompositeData z2(hier, 0, 2, 2), a02(hier, 0, 2, 2);
  CompositeData b1(hier, 0, 1, 2), x1(hier, 0, 1, 2);

  for (int s = 1; s < ns; ++s) {
    const double ts = t + tb.c(s) * k;
    for (int l = 0; l <= lm; ++l) {
      rhs.level(l).copyFrom(wn.level(l));
      for (int j = 0; j < s; ++j) {
        if (tb.aE(s, j) != 0.0)
          rhs.level(l).axpy(k * tb.aE(s, j), XE[j].level(l));
        if (tb.aI(s, j) != 0.0)
          rhs.level(l).axpy(k * nu * tb.aI(s, j), LW[j].level(l));
      }
    }
    z2.setZero();
    compositeHelmholtz(*ws, 1.0, -kng, z2, a02,
                       hookVelocity(ts, true, 0, nullptr), true, true, 0);
    for (int c = 0; c < 2; ++c) {
      for (int l = 0; l <= lm; ++l) {
        for (int b = 0; b < w.level(l).numBoxes(); ++b) {
          b1.level(l).arr(b, 0) = rhs.level(l).arr(b, c);
          b1.level(l).arr(b, 0) -= a02.level(l).arr(b, c);
          x1.level(l).arr(b, 0) = wc.level(l).arr(b, c);
        }
      }
      auto sth = helmCompSolver[c]->solve(x1, b1);
      tel.mgCycles += sth.cycles;
      if (sth.diverged)
        throw std::runtime_error("composite Helmholtz diverged");
      for (int l = 0; l <= lm; ++l)
        for (int b = 0; b < w.level(l).numBoxes(); ++b)
          wc.level(l).arr(b, c) = x1.level(l).arr(b, 0);
    }
    for (int l = 0; l <= lm; ++l)
      for (int b = 0; b < w.level(l).numBoxes(); ++b)
        for (int c = 0; c < 2; ++c)
          LW[s].level(l).arr(b, c) =
              (wc.level(l).arr(b, c) - rhs.level(l).arr(b, c)) / kng;
    for (int l = 0; l <= lm; ++l) u.level(l).copyFrom(wc.level(l));
    compositeProject(u, ts, 0);
    explicitRhs(s, ts);
  }

  for (int l = 0; l <= lm; ++l) {
    rhs.level(l).copyFrom(wc.level(l));
    for (int j = 0; j < ns; ++j) {
      const double cj = tb.b(j) - tb.aE(ns - 1, j);
      if (cj != 0.0) rhs.level(l).axpy(k * cj, XE[j].level(l));
    }
  }
  compositeProject(rhs, t + k, 0);
  for (int l = 0; l <= lm; ++l) w.level(l).copyFrom(rhs.level(l));
}

// ---------------------------------------------------------------------------
// Histories, advances, regridding
// ---------------------------------------------------------------------------

void AmrDriver::Impl::pushHistory(int l) {
  const double t = timeOf(l);
  std::optional<InterfaceStageData> st;
  if (l > 0) st = ifc[l]->stage(hist[l - 1], t);
  steppers[l]->fillVelocity(w.level(l), t, true, st ? &*st : nullptr);
  hist[l].push(w.level(l), t);
}

void AmrDriver::Impl::jumpStart() {
  const int lm = lmax();
  const double ks = cfg.k0 / double(unitsPerBase);
  // initial snapshots at t0 for every level that feeds a finer one
  for (int l = 0; l <= lm; ++l) {
    // fill ghosts level by level: coarse first, interpolating upward
    LevelData& lev = w.level(l);
    exchange(lev);
    if (l > 0) cfiFillInterfaceGhosts(ws->table(), w.level(l - 1), lev);
    hookVelocity(cfg.t0, true, 0, nullptr)(lev, l);
  }
  for (int l = 0; l < lm; ++l) hist[l].push(w.level(l), cfg.t0);

  const long long nsub = 3 * unitsPerBase;
  for (long long n = 1; n <= nsub; ++n) {
    syncCompositeStep(cfg.t0 + (n - 1) * ks, ks);
    for (int l = 0; l <= lm; ++l) clock[l] = n;
    // snapshot any level whose step size divides the elapsed time
    for (int l = 0; l < lm; ++l)
      if (n % kint(l) == 0) {
        LevelData& lev = w.level(l);
        exchange(lev);
        if (l > 0) cfiFillInterfaceGhosts(ws->table(), w.level(l - 1), lev);
        hookVelocity(cfg.t0 + n * ks, true, 0, nullptr)(lev, l);
        hist[l].push(w.level(l), cfg.t0 + n * ks);
      }
  }
  stepsTaken = 3;
  jumped = true;
}

void AmrDriver::Impl::singleLevelAdvance(int l) {
  steppers[l]->step(w.level(l), timeOf(l), kOf(l),
                    l > 0 ? ifc[l].get() : nullptr,
                    l > 0 ? &hist[l - 1] : nullptr, &tel);
  clock[l] += kint(l);
  if (l < lmax()) {
    pushHistory(l);
    while (clock[l + 1] < clock[l]) singleLevelAdvance(l + 1);
    compositeProject(w, timeOf(l), l);
  }
}

void AmrDriver::Impl::tagCells(int l, TagSet& tags) {
  if (l > lmax()) return;  // no data to tag from
  if (l >= int(cfg.vorticityTags.size())) return;
  const double thresh = cfg.vorticityTags[l];
  LevelData& wl = w.level(l);
  std::optional<InterfaceStageData> st;
  if (l > 0 && hist[l - 1].ready())
    st = ifc[l]->stage(hist[l - 1], timeOf(l));
  steppers[l]->fillVelocity(wl, timeOf(l), true, st ? &*st : nullptr);
  LevelData gx(hier, l, 2, 2), gy(hier, l, 2, 2);
  // curl = d(uy)/dx - d(ux)/dy from the componentwise gradients
  LevelData comp(hier, l, 1, 2);
  for (int b = 0; b < wl.numBoxes(); ++b) comp.arr(b, 0) = wl.arr(b, 1);
  gradient(comp, gx);
  for (int b = 0; b < wl.numBoxes(); ++b) comp.arr(b, 0) = wl.arr(b, 0);
  gradient(comp, gy);
  for (int b = 0; b < wl.numBoxes(); ++b) {
    const IndexBox& bx = wl.box(b);
    for (int j = bx.lo[1]; j <= bx.hi[1]; ++j)
      for (int i = bx.lo[0]; i <= bx.hi[0]; ++i) {
        const double curl = gx.at(b, 0, IntVec(i, j)) - gy.at(b, 1, IntVec(i, j));
        if (std::abs(curl) >= thresh) tags.set(IntVec(i, j));
      }
  }
}

bool AmrDriver::Impl::regridDue() {
  if (cfg.regridInterval <= 0 || cfg.maxLevel == 0) return false;
  if (stepsTaken - lastRegridStep >= cfg.regridInterval) return true;
  // forced regrid when tags escape the one-cell buffer of the fine region
  for (int l = 0; l < std::min(lmax() + 1, cfg.maxLevel); ++l) {
    TagSet tags(hier->level(l).domain);
    tagCells(l, tags);
    if (!tags.any()) continue;
    if (l + 1 > lmax()) return true;  // wants a level that does not exist
    std::vector<IndexBox> covered;
    for (const IndexBox& fb : hier->level(l + 1).boxes)
      covered.push_back(coarsenBox(fb, hier->ratio()).grow(1));
    const IndexBox dom = hier->level(l).domain.box();
    for (int j = dom.lo[1]; j <= dom.hi[1]; ++j)
      for (int i = dom.lo[0]; i <= dom.hi[0]; ++i) {
        if (!tags.get(IntVec(i, j))) continue;
        bool inside = false;
        for (const IndexBox& cb : covered)
          if (cb.contains(IntVec(i, j))) {
            inside = true;
            break;
          }
        if (!inside) return true;
      }
  }
  return false;
}

void AmrDriver::Impl::regridNow() {
  const double t = timeOf(0);
  HierarchyPtr nh = buildHierarchy(
      *hier, cfg.maxLevel, [this](int l, TagSet& tg) { tagCells(l, tg); },
      cfg.regridPolicy);

  // ---- migrate the velocity ----
  const HierarchyPtr oldH = hier;
  CompositeData oldW = w.clone();
  std::vector<TimeHistory> oldHist = std::move(hist);
  const int oldLmax = oldH->maxLevel();

  hier = nh;
  rebuildMachinery();
  resetClocks(clock[0] / ([&] {
    long long u = 1;
    for (int l = 0; l < oldLmax; ++l) u *= oldH->ratio();
    return u;
  }()));

  const int r = hier->ratio();
  // level 0 copies unchanged
  w.level(0).copyFrom(oldW.level(0));
  for (int l = 1; l <= lmax(); ++l) {
    LevelData& nw = w.level(l);
    LevelIndexMap srcMap(hier->level(l - 1));
    // copy where the old level overlaps, interpolate the rest from the
    // already-migrated coarser level
    std::vector<IndexBox> oldBoxes =
        l <= oldLmax ? oldH->level(l).boxes : std::vector<IndexBox>{};
    for (int b = 0; b < nw.numBoxes(); ++b) {
      for (const IndexBox& piece : subtractBoxes(nw.box(b), oldBoxes))
        cfiInterpolate(ws->table(), w.level(l - 1), srcMap, {piece},
                       [&](const IntVec& i, int c, double v) {
                         nw.at(b, c, i) = v;
                       });
      if (l <= oldLmax)
        for (int ob = 0; ob < int(oldBoxes.size()); ++ob) {
          const IndexBox ov = nw.box(b).intersect(oldBoxes[ob]);
          if (ov.empty()) continue;
          for (int c = 0; c < 2; ++c)
            for (int j = ov.lo[1]; j <= ov.hi[1]; ++j)
              for (int i = ov.lo[0]; i <= ov.hi[0]; ++i)
                nw.at(b, c, IntVec(i, j)) =
                    oldW.level(l).at(ob, c, IntVec(i, j));
        }
    }
  }

  // ---- migrate histories ----
  // level 0 geometry is unchanged; finer-level snapshots are copied on the
  // intersections and interpolated in space-time elsewhere.
  hist.assign(std::max(0, lmax()), TimeHistory{});
  if (lmax() > 0 && oldLmax >= 0) hist[0] = std::move(oldHist[0]);
  for (int l = 1; l < lmax(); ++l) {
    const double kl = kOf(l);
    for (int i = 3; i >= 0; --i) {
      const double tau = t - i * kl;
      LevelData snap(hier, l, 2, 2);
      // space: interpolate the coarser history blended to tau
      LevelData coarseAtTau(hier, l - 1, 2, 2);
      if (l - 1 < int(hist.size()) && hist[l - 1].ready())
        hist[l - 1].interpolateTo(tau, coarseAtTau);
      LevelIndexMap srcMap(hier->level(l - 1));
      for (int b = 0; b < snap.numBoxes(); ++b)
        cfiInterpolate(ws->table(), coarseAtTau, srcMap, {snap.box(b)},
                       [&](const IntVec& iv, int c, double v) {
                         snap.at(b, c, iv) = v;
                       });
      // copy matching old snapshots on intersections
      if (l < oldLmax)
        for (int s = 0; s < (l < int(oldHist.size()) ? oldHist[l].size() : 0);
             ++s) {
          if (std::abs(oldHist[l].snapshotTime(s) - tau) > 1e-12 * cfg.k0)
            continue;
          const LevelData& os = oldHist[l].snapshot(s);
          for (int b = 0; b < snap.numBoxes(); ++b)
            for (int ob = 0; ob < os.numBoxes(); ++ob) {
              const IndexBox ov = snap.box(b).intersect(os.box(ob));
              if (ov.empty()) continue;
              for (int c = 0; c < 2; ++c)
                for (int j = ov.lo[1]; j <= ov.hi[1]; ++j)
                  for (int i2 = ov.lo[0]; i2 <= ov.hi[0]; ++i2)
                    snap.at(b, c, IntVec(i2, j)) =
                        os.at(ob, c, IntVec(i2, j));
            }
        }
      // ghosts at the snapshot time
      exchange(snap);
      if (hist[l - 1].ready()) {
        InterfaceStageData st = ifc[l]->stage(hist[l - 1], tau);
        steppers[l]->fillVelocity(snap, tau, true, &st);
      } else {
        steppers[l]->fillVelocity(snap, tau, true, nullptr);
      }
      hist[l].push(snap, tau);
    }
  }
  lastRegridStep = stepsTaken;
}

double AmrDriver::Impl::divergenceInf() {
  CompositeData d(hier, 0, 1, 2);
  compositeApply(*ws, CompositeOp::divergence, w, d,
                 hookVelocity(timeOf(0), true, 0, nullptr), true, true, 0);
  return compositeNorm(d, Norm::Linf);
}

double AmrDriver::Impl::idealSpeedup() const {
  // 1 / sum_l (k^lmax / k^l) (N_l / N_unf)
  const Level& l0 = hier->level(0);
  double nUnf = double(l0.domain.ncells[0]) * l0.domain.ncells[1];
  for (int l = 0; l < lmax(); ++l) nUnf *= hier->ratio() * hier->ratio();
  double denom = 0;
  for (int l = 0; l <= lmax(); ++l) {
    const double ratioK = double(kint(l)) / double(kint(lmax()));
    denom += (1.0 / ratioK) * double(hier->level(l).numCells()) / nUnf;
  }
  return 1.0 / denom;
}

void AmrDriver::Impl::baseStep(
    const std::function<void(const StepRecord&)>& onStep) {
  tel = StepTelemetry{};
  StepRecord rec;
  rec.step = stepsTaken;
  const auto tic = std::chrono::steady_clock::now();
  if (regridDue()) {
    regridNow();
    rec.regridded = true;
  }
  singleLevelAdvance(0);
  ++stepsTaken;
  rec.t = timeOf(0);
  rec.wallSeconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - tic)
          .count();
  for (int l = 0; l <= lmax(); ++l)
    rec.levelCells.push_back(hier->level(l).numCells());
  rec.divInf = divergenceInf();
  rec.qCompat = tel.qCompat;
  rec.projCompat = tel.projCompat;
  rec.ifcBalance = tel.ifcBalance;
  rec.sIdl = idealSpeedup();
  recs.push_back(rec);
  if (onStep) onStep(rec);
}

CompositeData AmrDriver::Impl::pressure(double t) {
  const int lm = lmax();
  const double nu = cfg.gepup.nu;
  CompositeData conv(hier, 0, 2, 2), lap(hier, 0, 2, 2), X(hier, 0, 2, 2);
  LevelFillHook hookU = hookVelocity(t, false, 0, nullptr);
  compositeApply(*ws, CompositeOp::convection, w, conv, hookU, true, true, 0);
  compositeApply(*ws, CompositeOp::laplacian, w, lap, hookU, true, true, 0);
  for (int l = 0; l <= lm; ++l) {
    steppers[l]->forceCells(t, X.level(l));
    X.level(l).axpy(-1.0, conv.level(l));
    X.level(l).axpy(nu, lap.level(l));
  }
  LevelFillHook hookX = [this](LevelData& d, int l) {
    const Level& lev = hier->level(l);
    for (int b = 0; b < d.numBoxes(); ++b)
      for (int side = 0; side < 4; ++side)
        if (isPhysicalSide(lev, d.box(b), side))
          for (int c = 0; c < d.ncomp(); ++c) extrapolateGhosts(d, c, b, side);
  };
  CompositeData rhs(hier, 0, 1, 2);
  compositeApply(*ws, CompositeOp::divergence, X, rhs, hookX, true, true, 0);

  std::vector<ScalarNeumannData> data(lm + 1);
  for (int l = 0; l <= lm; ++l) {
    LevelData& wl = w.level(l);
    const Level& lev = hier->level(l);
    data[l].phys.assign(wl.numBoxes(), {});
    data[l].ifc.assign(wl.numBoxes(), {});
    for (int b = 0; b < wl.numBoxes(); ++b)
      for (int side = 0; side < 4; ++side) {
        if (!isPhysicalSide(lev, wl.box(b), side)) continue;
        const int axis = side / 2;
        const int ext = wl.box(b).extent()[1 - axis];
        Eigen::ArrayXd dd = Eigen::ArrayXd::Zero(ext);
        if (!cfg.bc.zeroForce) {
          Eigen::ArrayXd ga = sideFaceAverages(
              *hier, l, wl.box(b), side, t,
              [&](double x, double y, double tt) {
                return cfg.bc.force(x, y, tt)[axis];
              });
          dd += outwardSign(side) * ga.segment(2, ext);
        }
        dd += nu * outwardSign(side) *
              extrapolateToSideFaces(lap.level(l), axis, b, side);
        if (cfg.bc.velocityDt) {
          Eigen::ArrayXd ubt = sideFaceAverages(
              *hier, l, wl.box(b), side, t,
              [&](double x, double y, double tt) {
                return cfg.bc.velocityDt(x, y, tt)[axis];
              });
          dd -= outwardSign(side) * ubt.segment(2, ext);
        }
        data[l].phys[b][side] = extendEnds(dd);
      }
  }
  LevelFillHook hookP = [this, &data](LevelData& d, int l) {
    PhysicalFill pf(d.numBoxes());
    bool any = false;
    for (int b = 0; b < d.numBoxes(); ++b)
      for (int side = 0; side < 4; ++side)
        if (data[l].phys[b][side].size()) {
          SideFill sf;
          sf.kind = BcKind::neumann;
          sf.data = data[l].phys[b][side];
          pf[b][side] = sf;
          any = true;
        }
    if (any) fillPhysicalGhosts(d, 0, pf);
  };
  CompositeData z(hier, 0, 1, 2), a0(hier, 0, 1, 2);
  z.setZero();
  compositeApply(*ws, CompositeOp::laplacian, z, a0, hookP, true, true, 0);
  for (int l = 0; l <= lm; ++l) interiorSub(rhs.level(l), a0.level(l));

  LinearSystemSpec spec;
  spec.kind = SystemKind::poisson_neumann;
  spec.bc = {BcKind::neumann, BcKind::neumann, BcKind::neumann,
             BcKind::neumann};
  CompositeSolver ps(ws, 0, spec, cfg.gepup.mg);
  ps.projectNullspaceComposite(rhs);
  CompositeData p(hier, 0, 1, 2);
  auto stp = ps.solve(p, rhs);
  if (stp.diverged) throw std::runtime_error("pressure solver diverged");
  ps.projectNullspaceComposite(p);
  return p;
}

// ---------------------------------------------------------------------------
// public surface
// ---------------------------------------------------------------------------

void AmrDriver::initialize(const std::function<void(int, LevelData&)>& fill) {
  Impl& im = *impl_;
  for (int l = 0; l <= im.lmax(); ++l) fill(l, im.w.level(l));
  averageDownAll(im.w);
}

void AmrDriver::setBaseStep(double k0) {
  if (impl_->jumped || impl_->stepsTaken > 0)
    throw std::runtime_error("base step must be set before stepping");
  impl_->cfg.k0 = k0;
  impl_->stepsTotal = std::max(
      1, int(std::llround((impl_->cfg.te - impl_->cfg.t0) / k0)));
}

void AmrDriver::jumpStart() { impl_->jumpStart(); }

void AmrDriver::run(const std::function<void(const StepRecord&)>& onStep) {
  if (!impl_->jumped && impl_->stepsTotal > 0) impl_->jumpStart();
  while (impl_->stepsTaken < impl_->stepsTotal) impl_->baseStep(onStep);
}

void AmrDriver::advanceOneBaseStep() { impl_->baseStep({}); }

CompositeData& AmrDriver::velocity() { return impl_->w; }
const CompositeData& AmrDriver::velocity() const { return impl_->w; }
HierarchyPtr AmrDriver::hierarchy() const { return impl_->hier; }
double AmrDriver::time() const { return impl_->timeOf(0); }
int AmrDriver::baseStepsTotal() const { return impl_->stepsTotal; }
int AmrDriver::baseStepsTaken() const { return impl_->stepsTaken; }
double AmrDriver::compositeDivergenceInf() { return impl_->divergenceInf(); }
CompositeData AmrDriver::recoverPressure() {
  return impl_->pressure(impl_->timeOf(0));
}
void AmrDriver::applyCompositeProjection(int lbase) {
  impl_->compositeProject(impl_->w, impl_->timeOf(0), lbase);
}
const std::vector<StepRecord>& AmrDriver::records() const {
  return impl_->recs;
}
void AmrDriver::tagCells(int l, TagSet& tags) { impl_->tagCells(l, tags); }

void AmrDriver::writeCheckpoint(std::ostream& os) const {
  const Impl& im = *impl_;
  os << std::setprecision(17) << std::scientific;
  os << "amrins-checkpoint 1\n";
  im.hier->serialize(os);
  os << "steps " << im.stepsTaken << " jumped " << (im.jumped ? 1 : 0)
     << "\n";
  os << "k0 " << std::hexfloat << im.cfg.k0 << std::scientific << "\n";
  auto dumpLevelData = [&](const LevelData& d) {
    for (int b = 0; b < d.numBoxes(); ++b)
      for (int c = 0; c < d.ncomp(); ++c) {
        const Array& a = d.arr(b, c);
        os << std::hexfloat;
        for (Eigen::Index k = 0; k < a.size(); ++k)
          os << a.data()[k] << "\n";
        os << std::scientific;
      }
  };
  os << "velocity\n";
  for (int l = 0; l <= im.hier->maxLevel(); ++l) dumpLevelData(im.w.level(l));
  os << "histories " << im.hist.size() << "\n";
  for (const auto& hh : im.hist) {
    os << "history " << hh.size() << "\n";
    for (int s = 0; s < hh.size(); ++s) {
      os << std::hexfloat << hh.snapshotTime(s) << std::scientific << "\n";
      dumpLevelData(hh.snapshot(s));
    }
  }
}

void AmrDriver::readCheckpoint(std::istream& is) {
  Impl& im = *impl_;
  std::string tag;
  int version = 0;
  is >> tag >> version;
  if (tag != "amrins-checkpoint")
    throw std::runtime_error("not a checkpoint file");
  auto nh = Hierarchy::deserialize(is, im.hier->origin(), im.hier->spacing(0),
                                   im.hier->level(0).domain.periodic);
  im.hier = nh;
  im.rebuildMachinery();
  int jumpedI = 0;
  is >> tag >> im.stepsTaken >> tag >> jumpedI;
  im.jumped = jumpedI != 0;
  std::string k0s;
  is >> tag >> k0s;
  im.cfg.k0 = std::strtod(k0s.c_str(), nullptr);
  im.stepsTotal = std::max(
      1, int(std::llround((im.cfg.te - im.cfg.t0) / im.cfg.k0)));
  im.resetClocks(im.stepsTaken);
  auto loadLevelData = [&](LevelData& d) {
    for (int b = 0; b < d.numBoxes(); ++b)
      for (int c = 0; c < d.ncomp(); ++c) {
        Array& a = d.arr(b, c);
        for (Eigen::Index k = 0; k < a.size(); ++k) {
          std::string s;
          is >> s;
          a.data()[k] = std::strtod(s.c_str(), nullptr);
        }
      }
  };
  is >> tag;  // velocity
  for (int l = 0; l <= im.hier->maxLevel(); ++l) loadLevelData(im.w.level(l));
  std::size_t nh2 = 0;
  is >> tag >> nh2;
  im.hist.assign(nh2, TimeHistory{});
  for (std::size_t l = 0; l < nh2; ++l) {
    int ns = 0;
    is >> tag >> ns;
    std::vector<std::pair<double, LevelData>> snaps;
    for (int s = 0; s < ns; ++s) {
      std::string ts;
      is >> ts;
      LevelData d(im.hier, int(l), 2, 2);
      loadLevelData(d);
      snaps.emplace_back(std::strtod(ts.c_str(), nullptr), std::move(d));
    }
    for (auto it = snaps.rbegin(); it != snaps.rend(); ++it)
      im.hist[l].push(it->second, it->first);
  }
  if (!is) throw std::runtime_error("truncated checkpoint");
}

}  // namespace amrins
