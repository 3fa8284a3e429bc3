#include "amrins/gepup.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "amrins/quadrature.hpp"

namespace amrins {

namespace {

Eigen::ArrayXd extendEnds(const Eigen::ArrayXd& a) {
  Eigen::ArrayXd out(a.size() + 4);
  out.segment(2, a.size()) = a;
  out[0] = out[1] = a[0];
  out[a.size() + 2] = out[a.size() + 3] = a[a.size() - 1];
  return out;
}

}  // namespace

// Outward eq-4 face averages of the side-normal component from the current
// cell and ghost values.
Eigen::ArrayXd sideNormalFaceAverages(const LevelData& w, int b, int side) {
  const IndexBox& bx = w.box(b);
  const int axis = side / 2;
  const bool high = side % 2 == 1;
  const int ext = bx.extent()[1 - axis];
  Eigen::ArrayXd out(ext);
  for (int t = 0; t < ext; ++t) {
    IntVec c = bx.lo;
    c[1 - axis] += t;
    auto val = [&](int n) {
      IntVec i = c;
      i[axis] = n;
      return w.at(b, axis, i);
    };
    double v;
    if (high) {
      const int e = bx.hi[axis];
      v = (-val(e + 2) + 7 * val(e + 1) + 7 * val(e) - val(e - 1)) / 12.0;
    } else {
      const int s = bx.lo[axis];
      v = (-val(s - 2) + 7 * val(s - 1) + 7 * val(s) - val(s + 1)) / 12.0;
    }
    out[t] = outwardSign(side) * v;
  }
  return out;
}

namespace {
inline Eigen::ArrayXd computedNormalFlux(const LevelData& w, int b, int side) {
  return sideNormalFaceAverages(w, b, side);
}
}  // namespace

Eigen::ArrayXd projectionNeumannPhysicalSide(const LevelData& w, int b,
                                             int side, double t,
                                             const FlowBc& bc) {
  const Hierarchy& h = *w.hierarchy();
  const int axis = side / 2;
  Eigen::ArrayXd comp = sideNormalFaceAverages(w, b, side);
  if (!bc.zeroVelocity) {
    Eigen::ArrayXd ub = sideFaceAverages(
        h, w.levelIndex(), w.box(b), side, t,
        [&](double x, double y, double tt) { return bc.velocity(x, y, tt)[axis]; });
    comp -= outwardSign(side) * ub.segment(2, comp.size());
  }
  return comp;
}

Eigen::ArrayXd scalarNeumannPhysicalSide(const LevelData& w,
                                         const LevelData& lw, int b, int side,
                                         double t, const FlowBc& bc, double nu,
                                         double lambda) {
  const Hierarchy& h = *w.hierarchy();
  const int level = w.levelIndex();
  const Level& lev = h.level(level);
  const IndexBox& bx = w.box(b);
  const int axis = side / 2;
  const int ext = bx.extent()[1 - axis];
  Eigen::ArrayXd d = Eigen::ArrayXd::Zero(ext);
  if (!bc.zeroForce) {
    Eigen::ArrayXd ga = sideFaceAverages(
        h, level, bx, side, t,
        [&](double x, double y, double tt) { return bc.force(x, y, tt)[axis]; });
    d += outwardSign(side) * ga.segment(2, ext);
  }
  d += nu * outwardSign(side) * extrapolateToSideFaces(lw, axis, b, side);
  d += lambda * sideNormalFaceAverages(w, b, side);
  if (!bc.zeroVelocity) {
    Eigen::ArrayXd ub = sideFaceAverages(
        h, level, bx, side, t,
        [&](double x, double y, double tt) { return bc.velocity(x, y, tt)[axis]; });
    d -= lambda * outwardSign(side) * ub.segment(2, ext);
    Eigen::ArrayXd adv = sideFaceAverages(
        h, level, bx, side, t, [&](double x, double y, double tt) {
          const Eigen::Vector2d v = bc.velocity(x, y, tt);
          const double eps = 1e-6 * lev.spacing;
          Eigen::Vector2d vp, vm;
          if (axis == 0) {
            vp = bc.velocity(x, y + eps, tt);
            vm = bc.velocity(x, y - eps, tt);
          } else {
            vp = bc.velocity(x + eps, y, tt);
            vm = bc.velocity(x - eps, y, tt);
          }
          const double dtau_un = (vp[axis] - vm[axis]) / (2 * eps);
          const double dtau_ut = (vp[1 - axis] - vm[1 - axis]) / (2 * eps);
          return v[1 - axis] * dtau_un - v[axis] * dtau_ut;
        });
    d -= outwardSign(side) * adv.segment(2, ext);
  }
  if (bc.velocityDt) {
    Eigen::ArrayXd ubt = sideFaceAverages(
        h, level, bx, side, t, [&](double x, double y, double tt) {
          return bc.velocityDt(x, y, tt)[axis];
        });
    d -= outwardSign(side) * ubt.segment(2, ext);
  }
  return d;
}

struct GepupLevelStepper::Impl {
  HierarchyPtr hier;
  int level = 0;
  GepupParams prm;
  FlowBc bc;

  std::vector<std::vector<IndexBox>> outer;  // interface ghost regions
  std::vector<std::array<std::vector<std::uint8_t>, 4>> masks;
  std::vector<int> boxComp;
  int nComps = 1;
  std::vector<int> faceCount;

  std::unique_ptr<LevelPoissonSolver> qSolver, psiSolver;
  std::unique_ptr<LevelPoissonSolver> helmSolver[2];
  double helmBeta = 0.0;

  LevelData qPrev, psiPrev;

  void ensureScalarSolvers() {
    if (qSolver) return;
    LinearSystemSpec spec;
    spec.kind = SystemKind::poisson_neumann;
    spec.alpha = 0.0;
    spec.beta = 1.0;
    spec.bc = {BcKind::neumann, BcKind::neumann, BcKind::neumann,
               BcKind::neumann};
    spec.interfaceFrozen = false;
    qSolver = std::make_unique<LevelPoissonSolver>(hier, level, spec, prm.mg);
    spec.kind = SystemKind::projection_poisson;
    psiSolver = std::make_unique<LevelPoissonSolver>(hier, level, spec, prm.mg);
  }

  void ensureHelmSolvers(double beta) {
    if (helmSolver[0] && helmBeta == beta) return;
    for (int c = 0; c < 2; ++c) {
      LinearSystemSpec spec;
      spec.kind = SystemKind::helmholtz;
      spec.alpha = 1.0;
      spec.beta = beta;
      for (int side = 0; side < 4; ++side)
        spec.bc[side] = (side / 2 == c) ? BcKind::neumann : BcKind::dirichlet;
      spec.interfaceFrozen = true;
      helmSolver[c] =
          std::make_unique<LevelPoissonSolver>(hier, level, spec, prm.mg);
    }
    helmBeta = beta;
  }

  void writeBand(LevelData& v, const InterfaceStageData& st) const {
    for (int b = 0; b < v.numBoxes(); ++b) {
      const IndexBox& bx = v.box(b);
      for (const IndexBox& piece : outer[b])
        for (int c = 0; c < v.ncomp(); ++c)
          for (int j = piece.lo[1]; j <= piece.hi[1]; ++j)
            for (int i = piece.lo[0]; i <= piece.hi[0]; ++i)
              v.at(b, c, IntVec(i, j)) =
                  st.ghostBand[b][c](i - bx.lo[0] + 2, j - bx.lo[1] + 2);
    }
  }

  void fillScalarGhosts(LevelData& q, const ScalarNeumannData& data) const {
    exchange(q);
    for (int b = 0; b < q.numBoxes(); ++b)
      for (int side = 0; side < 4; ++side)
        if (data.ifc[b][side].size())
          fillGhostLinesMasked(q, 0, b, side, masks[b][side], BcKind::neumann,
                               &data.ifc[b][side]);
    PhysicalFill pf(q.numBoxes());
    bool any = false;
    for (int b = 0; b < q.numBoxes(); ++b)
      for (int side = 0; side < 4; ++side)
        if (data.phys[b][side].size()) {
          SideFill sf;
          sf.kind = BcKind::neumann;
          sf.data = data.phys[b][side];
          pf[b][side] = std::move(sf);
          any = true;
        }
    if (any) fillPhysicalGhosts(q, 0, pf);
  }

  void absorbScalarData(const ScalarNeumannData& data, LevelData& rhs,
                        LevelData& z, LevelData& tmp) const {
    z.setZero();
    fillScalarGhosts(z, data);
    applyHelmholtz(z, 0.0, 1.0, tmp);
    const int g = rhs.ghost();
    for (int b = 0; b < rhs.numBoxes(); ++b) {
      const IntVec e = rhs.box(b).extent();
      rhs.arr(b, 0).block(g, g, e[0], e[1]) -=
          tmp.arr(b, 0).block(g, g, e[0], e[1]);
    }
  }

  // Per-component integral balance between the cell field and the face
  // data; when correct=true the defect is spread over the interface faces.
  // gross, when given, receives a flux-magnitude scale for normalizing
  // roundoff-level residuals.
  double balance(LevelData& rhs, ScalarNeumannData& data, bool correct,
                 std::vector<double>* gross = nullptr) {
    const double h = hier->level(level).spacing;
    std::vector<double> cellSum(nComps, 0.0), faceSum(nComps, 0.0),
        scale(nComps, 1e-300);
    const int g = rhs.ghost();
    for (int b = 0; b < rhs.numBoxes(); ++b) {
      const int comp = boxComp[b];
      const IntVec e = rhs.box(b).extent();
      cellSum[comp] += rhs.arr(b, 0).block(g, g, e[0], e[1]).sum() * h * h;
      scale[comp] += rhs.arr(b, 0).block(g, g, e[0], e[1]).abs().sum() * h * h;
      for (int side = 0; side < 4; ++side) {
        if (data.phys[b][side].size()) {
          const int ext = rhs.box(b).extent()[1 - side / 2];
          faceSum[comp] += data.phys[b][side].segment(2, ext).sum() * h;
          scale[comp] += data.phys[b][side].segment(2, ext).abs().sum() * h;
        }
        if (data.ifc[b][side].size())
          for (int t = 0; t < int(masks[b][side].size()); ++t)
            if (masks[b][side][t]) {
              faceSum[comp] += data.ifc[b][side][t] * h;
              scale[comp] += std::abs(data.ifc[b][side][t]) * h;
            }
      }
    }
    if (correct)
      for (int b = 0; b < rhs.numBoxes(); ++b) {
        const int comp = boxComp[b];
        if (faceCount[comp] == 0) continue;
        const double delta =
            (cellSum[comp] - faceSum[comp]) / (h * faceCount[comp]);
        for (int side = 0; side < 4; ++side)
          if (data.ifc[b][side].size())
            for (int t = 0; t < int(masks[b][side].size()); ++t)
              if (masks[b][side][t]) data.ifc[b][side][t] += delta;
      }
    std::vector<double> f2(nComps, 0.0);
    double worst = 0.0;
    for (int b = 0; b < rhs.numBoxes(); ++b)
      for (int side = 0; side < 4; ++side) {
        if (data.phys[b][side].size()) {
          const int ext = rhs.box(b).extent()[1 - side / 2];
          f2[boxComp[b]] += data.phys[b][side].segment(2, ext).sum() * h;
        }
        if (data.ifc[b][side].size())
          for (int t = 0; t < int(masks[b][side].size()); ++t)
            if (masks[b][side][t]) f2[boxComp[b]] += data.ifc[b][side][t] * h;
      }
    if (gross) *gross = scale;
    for (int c = 0; c < nComps; ++c)
      worst = std::max(worst, std::abs(cellSum[c] - f2[c]) / scale[c]);
    return worst;
  }

  // Demean the absorbed right-hand side per connected component (the
  // solvability enforcement for the pure-Neumann systems) and report the
  // worst post-enforcement integral relative to the given scales.
  double demeanMeasure(LevelData& b, const std::vector<double>& scale) {
    const double h = hier->level(level).spacing;
    const int g = b.ghost();
    std::vector<double> sum(nComps, 0.0), mag(nComps, 0.0);
    std::vector<std::int64_t> cnt(nComps, 0);
    for (int bx = 0; bx < b.numBoxes(); ++bx) {
      const IntVec e = b.box(bx).extent();
      sum[boxComp[bx]] += b.arr(bx, 0).block(g, g, e[0], e[1]).sum();
      mag[boxComp[bx]] += b.arr(bx, 0).block(g, g, e[0], e[1]).abs().sum();
      cnt[boxComp[bx]] += b.box(bx).numCells();
    }
    for (int bx = 0; bx < b.numBoxes(); ++bx) {
      const int c = boxComp[bx];
      const IntVec e = b.box(bx).extent();
      if (cnt[c]) b.arr(bx, 0).block(g, g, e[0], e[1]) -= sum[c] / double(cnt[c]);
    }
    std::vector<double> post(nComps, 0.0);
    for (int bx = 0; bx < b.numBoxes(); ++bx) {
      const IntVec e = b.box(bx).extent();
      post[boxComp[bx]] += b.arr(bx, 0).block(g, g, e[0], e[1]).sum();
    }
    double worst = 0.0;
    for (int c = 0; c < nComps; ++c) {
      const double denom = (c < int(scale.size()) ? scale[c] : 0.0) +
                           mag[c] * h * h + 1e-300;
      worst = std::max(worst, std::abs(post[c]) * h * h / denom);
    }
    return worst;
  }

  // Gross flux magnitudes of a vector field over the level boundary, per
  // component, for normalizing balance residuals.
  std::vector<double> grossFlux(const LevelData& v) const {
    const Level& lev = hier->level(level);
    const double h = lev.spacing;
    std::vector<double> out(nComps, 1e-300);
    for (int b = 0; b < v.numBoxes(); ++b)
      for (int side = 0; side < 4; ++side) {
        const bool phys = isPhysicalSide(lev, v.box(b), side);
        bool anyIfc = false;
        for (auto m : masks[b][side]) anyIfc |= m;
        if (!phys && !anyIfc) continue;
        Eigen::ArrayXd f = computedNormalFlux(v, b, side);
        out[boxComp[b]] += f.abs().sum() * h;
      }
    return out;
  }

  SolveStatus runSolve(LevelPoissonSolver& s, LevelData& x, const LevelData& b,
                       StepTelemetry* tel, const char* what) {
    auto st = s.solve(x, b);
    if (tel) tel->mgCycles += st.cycles;
    if (st.diverged || (!st.converged && st.relResidual > 1e-6))
      throw std::runtime_error(std::string("solver failure in ") + what +
                               " at level " + std::to_string(level) +
                               " (rel residual " +
                               std::to_string(st.relResidual) + ")");
    return st;
  }
};

GepupLevelStepper::GepupLevelStepper(HierarchyPtr h, int level,
                                     GepupParams prm, FlowBc bc,
                                     std::shared_ptr<const ButcherTableau> tab)
    : impl_(std::make_unique<Impl>()), prm_(prm), bc_(bc), tab_(std::move(tab)) {
  impl_->hier = std::move(h);
  impl_->level = level;
  impl_->prm = prm;
  impl_->bc = bc_;
  const Hierarchy& hier = *impl_->hier;
  impl_->outer = interfaceGhostRegions(hier, level, 2);

  const Level& lev = hier.level(level);
  LevelIndexMap map(lev);
  const auto comps = hier.connectedComponents(level);
  impl_->nComps = int(comps.size());
  impl_->boxComp.assign(lev.boxes.size(), 0);
  for (std::size_t c = 0; c < comps.size(); ++c)
    for (int b : comps[c]) impl_->boxComp[b] = int(c);
  impl_->faceCount.assign(impl_->nComps, 0);
  impl_->masks.resize(lev.boxes.size());
  for (std::size_t b = 0; b < lev.boxes.size(); ++b) {
    const IndexBox& bx = lev.boxes[b];
    for (int side = 0; side < 4; ++side) {
      const int axis = side / 2;
      const bool high = side % 2 == 1;
      const int ext = bx.extent()[1 - axis];
      auto& m = impl_->masks[b][side];
      m.assign(ext, 0);
      if (isPhysicalSide(lev, bx, side)) continue;
      for (int t = 0; t < ext; ++t) {
        IntVec outside = bx.lo;
        outside[1 - axis] += t;
        outside[axis] = high ? bx.hi[axis] + 1 : bx.lo[axis] - 1;
        if (!map.covered(outside)) {
          m[t] = 1;
          ++impl_->faceCount[impl_->boxComp[b]];
        }
      }
    }
  }
}

GepupLevelStepper::~GepupLevelStepper() = default;

void GepupLevelStepper::forceCells(double t, LevelData& g) const {
  if (bc_.zeroForce) {
    g.setZero();
    return;
  }
  for (int c = 0; c < 2; ++c)
    g.fillCellAverages(
        c, [&](double x, double y) { return bc_.force(x, y, t)[c]; });
}

void GepupLevelStepper::fillVelocity(LevelData& v, double t, bool evolved,
                                     const InterfaceStageData* st) {
  exchange(v);
  if (st) impl_->writeBand(v, *st);
  for (int c = 0; c < v.ncomp(); ++c) {
    PhysicalFill pf =
        evolved ? velocityFillW(v, bc_, c, t) : velocityFillU(v, bc_, c, t);
    fillPhysicalGhosts(v, c, pf);
  }
}

void GepupLevelStepper::project(LevelData& w, double t,
                                const InterfaceStageData* st, LevelData& u,
                                StepTelemetry* tel) {
  Impl& im = *impl_;
  im.ensureScalarSolvers();
  const Hierarchy& h = *im.hier;
  const Level& lev = h.level(im.level);

  fillVelocity(w, t, true, st);
  LevelData rhs(im.hier, im.level, 1, 2);
  divergence(w, rhs);

  ScalarNeumannData data;
  data.phys.assign(w.numBoxes(), {});
  data.ifc.assign(w.numBoxes(), {});
  for (int b = 0; b < w.numBoxes(); ++b) {
    const IndexBox& bx = w.box(b);
    for (int side = 0; side < 4; ++side) {
      const int axis = side / 2;
      if (isPhysicalSide(lev, bx, side)) {
        Eigen::ArrayXd comp = computedNormalFlux(w, b, side);
        if (!bc_.zeroVelocity) {
          Eigen::ArrayXd ub = sideFaceAverages(
              h, im.level, bx, side, t, [&](double x, double y, double tt) {
                return bc_.velocity(x, y, tt)[axis];
              });
          comp -= outwardSign(side) * ub.segment(2, comp.size());
        }
        data.phys[b][side] = extendEnds(comp);
      } else if (st) {
        bool any = false;
        for (auto m : im.masks[b][side]) any |= m;
        if (!any) continue;
        Eigen::ArrayXd comp = computedNormalFlux(w, b, side);
        Eigen::ArrayXd d = Eigen::ArrayXd::Zero(comp.size());
        for (int tt = 0; tt < comp.size(); ++tt)
          if (im.masks[b][side][tt])
            d[tt] = comp[tt] - st->sides[b][side].un[tt];
        data.ifc[b][side] = d;
      }
    }
  }
  std::vector<double> gross = im.grossFlux(w);
  LevelData z(im.hier, im.level, 1, 2), tmp(im.hier, im.level, 1, 2);
  im.absorbScalarData(data, rhs, z, tmp);
  const double compat = im.demeanMeasure(rhs, gross);
  if (tel) tel->projCompat = std::max(tel->projCompat, compat);

  if (im.psiPrev.numBoxes() == 0)
    im.psiPrev = LevelData(im.hier, im.level, 1, 2);
  im.runSolve(*im.psiSolver, im.psiPrev, rhs, tel, "projection");

  im.fillScalarGhosts(im.psiPrev, data);
  LevelData gpsi(im.hier, im.level, 2, 2);
  gradient(im.psiPrev, gpsi);
  u.copyFrom(w);
  u.axpy(-1.0, gpsi);
}

void GepupLevelStepper::solveQ(const LevelData& u, LevelData& w,
                               const LevelData& lw, double t,
                               const InterfaceStageData* st, LevelData& q,
                               ScalarNeumannData& qdata, StepTelemetry* tel) {
  Impl& im = *impl_;
  im.ensureScalarSolvers();
  const Hierarchy& h = *im.hier;
  const Level& lev = h.level(im.level);
  const double nu = prm_.nu, lambda = prm_.lambda;

  // X = g - conv(u), extended into ghosts for the divergence.
  LevelData X(im.hier, im.level, 2, 2);
  convection(u, X);
  X.scale(-1.0);
  if (!bc_.zeroForce) {
    LevelData g(im.hier, im.level, 2, 2);
    forceCells(t, g);
    X.axpy(1.0, g);
  }
  exchange(X);
  if (st) {
    for (int b = 0; b < X.numBoxes(); ++b) {
      const IndexBox& bx = X.box(b);
      for (const IndexBox& piece : im.outer[b])
        for (int c = 0; c < 2; ++c)
          for (int j = piece.lo[1]; j <= piece.hi[1]; ++j)
            for (int i = piece.lo[0]; i <= piece.hi[0]; ++i) {
              double gg = 0.0;
              if (!bc_.zeroForce) {
                const RealVec lo = h.cellLo(im.level, IntVec(i, j));
                gg = cellAverage(
                    [&](double x, double y) { return bc_.force(x, y, t)[c]; },
                    lo[0], lo[1], lev.spacing);
              }
              X.at(b, c, IntVec(i, j)) =
                  gg - st->convBand[b][c](i - bx.lo[0] + 2, j - bx.lo[1] + 2);
            }
    }
  }
  for (int b = 0; b < X.numBoxes(); ++b)
    for (int side = 0; side < 4; ++side)
      if (isPhysicalSide(lev, X.box(b), side))
        for (int c = 0; c < 2; ++c) extrapolateGhosts(X, c, b, side);

  LevelData rhs(im.hier, im.level, 1, 2);
  divergence(X, rhs);

  qdata.phys.assign(w.numBoxes(), {});
  qdata.ifc.assign(w.numBoxes(), {});
  for (int b = 0; b < w.numBoxes(); ++b) {
    const IndexBox& bx = w.box(b);
    for (int side = 0; side < 4; ++side) {
      const int axis = side / 2;
      if (isPhysicalSide(lev, bx, side)) {
        qdata.phys[b][side] = extendEnds(
            scalarNeumannPhysicalSide(w, lw, b, side, t, bc_, nu, lambda));
      } else if (st) {
        bool any = false;
        for (auto m : im.masks[b][side]) any |= m;
        if (any) qdata.ifc[b][side] = st->sides[b][side].qdat;
      }
    }
  }

  std::vector<double> gross;
  im.balance(rhs, qdata, /*correct=*/im.level > 0, &gross);
  for (int c = 0; c < im.nComps; ++c) gross[c] += im.grossFlux(X)[c];
  LevelData z(im.hier, im.level, 1, 2), tmp(im.hier, im.level, 1, 2);
  im.absorbScalarData(qdata, rhs, z, tmp);
  const double compat = im.demeanMeasure(rhs, gross);
  if (tel) tel->qCompat = std::max(tel->qCompat, compat);

  if (im.qPrev.numBoxes() == 0) im.qPrev = LevelData(im.hier, im.level, 1, 2);
  im.runSolve(*im.qSolver, im.qPrev, rhs, tel, "auxiliary scalar");
  q.copyFrom(im.qPrev);
  im.fillScalarGhosts(q, qdata);
}

double GepupLevelStepper::divergenceInf(LevelData& w, double t,
                                        const InterfaceStageData* st) {
  fillVelocity(w, t, true, st);
  LevelData d(impl_->hier, impl_->level, 1, 2);
  divergence(w, d);
  double m = 0;
  for (int b = 0; b < d.numBoxes(); ++b) {
    const IntVec e = d.box(b).extent();
    m = std::max(m, d.arr(b, 0).block(2, 2, e[0], e[1]).abs().maxCoeff());
  }
  return m;
}

void GepupLevelStepper::step(LevelData& w, double t, double k,
                             InterfaceConditions* ifc,
                             const TimeHistory* coarse, StepTelemetry* tel) {
  const auto tic = std::chrono::steady_clock::now();
  Impl& im = *impl_;
  const ButcherTableau& tb = *tab_;
  const int ns = tb.stages;
  const double nu = prm_.nu;
  const double kng = k * nu * tb.gamma;
  im.ensureScalarSolvers();
  im.ensureHelmSolvers(-kng);

  std::vector<InterfaceStageData> stages;
  if (im.level > 0) {
    if (!ifc || !coarse)
      throw std::runtime_error("fine level needs interface machinery");
    stages.reserve(ns);
    for (int s = 0; s < ns; ++s) {
      stages.push_back(ifc->stage(*coarse, t + tb.c(s) * k));
      if (tel)
        tel->ifcBalance = std::max(tel->ifcBalance, ifc->lastBalanceResidual());
    }
  }
  auto stg = [&](int s) -> const InterfaceStageData* {
    return im.level > 0 ? &stages[s] : nullptr;
  };

  LevelData wn = w.clone();
  LevelData u(im.hier, im.level, 2, 2);
  LevelData q(im.hier, im.level, 1, 2);
  LevelData gq(im.hier, im.level, 2, 2);
  std::vector<LevelData> XE, LW;
  for (int s = 0; s < ns; ++s) {
    XE.emplace_back(im.hier, im.level, 2, 2);
    LW.emplace_back(im.hier, im.level, 2, 2);
  }
  ScalarNeumannData qdata;

  auto explicitRhs = [&](int s, LevelData& us, LevelData& ws,
                         const LevelData& lws, double ts) {
    solveQ(us, ws, lws, ts, stg(s), q, qdata, tel);
    gradient(q, gq);
    LevelData& xe = XE[s];
    fillVelocity(us, ts, false, stg(s));
    convection(us, xe);
    xe.scale(-1.0);
    xe.axpy(-1.0, gq);
    if (!bc_.zeroForce) {
      LevelData g(im.hier, im.level, 2, 2);
      forceCells(ts, g);
      xe.axpy(1.0, g);
    }
  };

  // first stage: the state itself
  {
    const double t1 = t + tb.c(0) * k;
    fillVelocity(w, t1, true, stg(0));
    laplacian(w, LW[0]);
    u.copyFrom(w);
    explicitRhs(0, u, w, LW[0], t1);
  }

  LevelData rhs(im.hier, im.level, 2, 2);
  LevelData wc = w.clone();
  LevelData b1(im.hier, im.level, 1, 2), x1(im.hier, im.level, 1, 2);
  LevelData z2(im.hier, im.level, 2, 2), a0(im.hier, im.level, 2, 2);

  for (int s = 1; s < ns; ++s) {
    const double ts = t + tb.c(s) * k;
    rhs.copyFrom(wn);
    for (int j = 0; j < s; ++j) {
      if (tb.aE(s, j) != 0.0) rhs.axpy(k * tb.aE(s, j), XE[j]);
      if (tb.aI(s, j) != 0.0) rhs.axpy(k * nu * tb.aI(s, j), LW[j]);
    }
    // Helmholtz solve per component with frozen interface ghosts
    z2.setZero();
    fillVelocity(z2, ts, true, stg(s));
    applyHelmholtz(z2, 1.0, -kng, a0);
    for (int c = 0; c < 2; ++c) {
      const int g = 2;
      for (int b = 0; b < w.numBoxes(); ++b) {
        const IntVec e = w.box(b).extent();
        b1.arr(b, 0).block(g, g, e[0], e[1]) =
            rhs.arr(b, c).block(g, g, e[0], e[1]) -
            a0.arr(b, c).block(g, g, e[0], e[1]);
        x1.arr(b, 0) = wc.arr(b, c);
      }
      im.runSolve(*im.helmSolver[c], x1, b1, tel, "velocity Helmholtz");
      for (int b = 0; b < w.numBoxes(); ++b) wc.arr(b, c) = x1.arr(b, 0);
    }
    for (int b = 0; b < w.numBoxes(); ++b)
      for (int c = 0; c < 2; ++c)
        LW[s].arr(b, c) = (wc.arr(b, c) - rhs.arr(b, c)) / kng;
    project(wc, ts, stg(s), u, tel);
    explicitRhs(s, u, wc, LW[s], ts);
  }

  rhs.copyFrom(wc);
  for (int j = 0; j < ns; ++j) {
    const double cj = tb.b(j) - tb.aE(ns - 1, j);
    if (cj != 0.0) rhs.axpy(k * cj, XE[j]);
  }
  project(rhs, t + k, stg(ns - 1), u, tel);
  w.copyFrom(u);
  if (tel)
    tel->wallSeconds +=
        std::chrono::duration<double>(std::chrono::steady_clock::now() - tic)
            .count();
}

LevelData GepupLevelStepper::recoverPressure(LevelData& u, double t,
                                             StepTelemetry* tel) {
  Impl& im = *impl_;
  im.ensureScalarSolvers();
  const Hierarchy& h = *im.hier;
  const Level& lev = h.level(im.level);
  if (im.level != 0)
    throw std::runtime_error("level pressure recovery is base-level only");
  const double nu = prm_.nu;

  fillVelocity(u, t, false, nullptr);
  LevelData lu(im.hier, im.level, 2, 2);
  laplacian(u, lu);
  LevelData X(im.hier, im.level, 2, 2);
  convection(u, X);
  X.scale(-1.0);
  X.axpy(nu, lu);
  if (!bc_.zeroForce) {
    LevelData g(im.hier, im.level, 2, 2);
    forceCells(t, g);
    X.axpy(1.0, g);
  }
  exchange(X);
  for (int b = 0; b < X.numBoxes(); ++b)
    for (int side = 0; side < 4; ++side)
      if (isPhysicalSide(lev, X.box(b), side))
        for (int c = 0; c < 2; ++c) extrapolateGhosts(X, c, b, side);

  LevelData rhs(im.hier, im.level, 1, 2);
  divergence(X, rhs);

  ScalarNeumannData data;
  data.phys.assign(u.numBoxes(), {});
  data.ifc.assign(u.numBoxes(), {});
  for (int b = 0; b < u.numBoxes(); ++b) {
    const IndexBox& bx = u.box(b);
    for (int side = 0; side < 4; ++side) {
      if (!isPhysicalSide(lev, bx, side)) continue;
      const int axis = side / 2;
      const int ext = bx.extent()[1 - axis];
      Eigen::ArrayXd d = Eigen::ArrayXd::Zero(ext);
      if (!bc_.zeroForce) {
        Eigen::ArrayXd ga = sideFaceAverages(
            h, im.level, bx, side, t, [&](double x, double y, double tt) {
              return bc_.force(x, y, tt)[axis];
            });
        d += outwardSign(side) * ga.segment(2, ext);
      }
      d += nu * outwardSign(side) * extrapolateToSideFaces(lu, axis, b, side);
      if (bc_.velocityDt) {
        Eigen::ArrayXd ubt = sideFaceAverages(
            h, im.level, bx, side, t, [&](double x, double y, double tt) {
              return bc_.velocityDt(x, y, tt)[axis];
            });
        d -= outwardSign(side) * ubt.segment(2, ext);
      }
      data.phys[b][side] = extendEnds(d);
    }
  }
  im.balance(rhs, data, false);
  LevelData z(im.hier, im.level, 1, 2), tmp(im.hier, im.level, 1, 2);
  im.absorbScalarData(data, rhs, z, tmp);
  LevelData p(im.hier, im.level, 1, 2);
  im.runSolve(*im.psiSolver, p, rhs, tel, "pressure recovery");
  return p;
}

}  // namespace amrins
