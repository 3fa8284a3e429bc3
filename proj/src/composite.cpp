#include "amrins/composite.hpp"

namespace amrins {

const CfiStencilTable& cfiTable(int r) {
  static const CfiStencilTable t2(2);
  static const CfiStencilTable t4(4);
  return r == 2 ? t2 : t4;
}

CompositeWorkspace::CompositeWorkspace(HierarchyPtr h) : hier_(std::move(h)) {
  table_ = &cfiTable(hier_->ratio());
  for (int l = 0; l <= hier_->maxLevel(); ++l) {
    maps_.emplace_back(hier_->level(l));
    ghostRegions_.push_back(interfaceGhostRegions(*hier_, l, 2));
  }
  for (int l = 0; l < hier_->maxLevel(); ++l)
    fluxRegs_.emplace_back(hier_, l);
}

void copFillLevel(CompositeWorkspace& ws, CompositeData& d, int l,
                  const LevelFillHook& extra, int lbase) {
  if (lbase < 0) lbase = d.baseLevel();
  LevelData& lev = d.level(l);
  exchange(lev);
  if (l > lbase) {
    const LevelData& coarse = d.level(l - 1);
    const auto& regions = ws.ghostRegions(l);
    for (int b = 0; b < lev.numBoxes(); ++b)
      cfiInterpolate(ws.table(), coarse, ws.map(l - 1), regions[b],
                     [&](const IntVec& i, int c, double v) {
                       lev.at(b, c, i) = v;
                     });
  }
  if (extra) extra(lev, l);
}

namespace {

bool divergenceForm(CompositeOp op) {
  return op == CompositeOp::divergence || op == CompositeOp::laplacian ||
         op == CompositeOp::convection;
}

void evalLevel(CompositeOp op, const LevelData& in, LevelData& out,
               std::array<FaceData, 2>& flux, bool wantFlux) {
  switch (op) {
    case CompositeOp::gradient:
      gradient(in, out);
      break;
    case CompositeOp::divergence:
      if (wantFlux)
        divergenceWithFluxes(in, out, flux);
      else
        divergence(in, out);
      break;
    case CompositeOp::laplacian:
      if (wantFlux)
        laplacianWithFluxes(in, out, flux);
      else
        laplacian(in, out);
      break;
    case CompositeOp::convection:
      if (wantFlux)
        convectionWithFluxes(in, out, flux);
      else
        convection(in, out);
      break;
  }
}

}  // namespace

void compositeApply(CompositeWorkspace& ws, CompositeOp op, CompositeData& in,
                    CompositeData& out, const LevelFillHook& extra, bool cop4,
                    bool withReflux, int lbase) {
  if (lbase < 0) lbase = in.baseLevel();
  const int lmax = in.maxLevel();
  const bool doReflux = withReflux && divergenceForm(op) && lmax > lbase;
  std::vector<std::array<FaceData, 2>> fluxes(lmax - lbase + 1);

  for (int l = lbase; l <= lmax; ++l) {
    copFillLevel(ws, in, l, extra, lbase);
    evalLevel(op, in.level(l), out.level(l), fluxes[l - lbase], doReflux);
  }
  if (doReflux) {
    const int ncomp = out.ncomp();
    for (int l = lmax - 1; l >= lbase; --l) {
      FluxRegister& reg = ws.fluxRegister(l);
      if (reg.empty()) continue;
      reg.setCoarseFlux(fluxes[l - lbase], ncomp);
      reg.addFineFlux(fluxes[l + 1 - lbase], ncomp);
      reg.apply(out.level(l));
    }
  }
  if (cop4)
    for (int l = lmax - 1; l >= lbase; --l)
      averageDown(out.level(l + 1), out.level(l));
}

void compositeHelmholtz(CompositeWorkspace& ws, double alpha, double beta,
                        CompositeData& in, CompositeData& out,
                        const LevelFillHook& extra, bool cop4,
                        bool withReflux, int lbase) {
  if (lbase < 0) lbase = in.baseLevel();
  compositeApply(ws, CompositeOp::laplacian, in, out, extra, cop4, withReflux,
                 lbase);
  for (int l = lbase; l <= in.maxLevel(); ++l) {
    LevelData& o = out.level(l);
    const LevelData& x = in.level(l);
    const int g = x.ghost(), go = o.ghost();
    for (int b = 0; b < x.numBoxes(); ++b) {
      const IntVec e = x.box(b).extent();
      for (int c = 0; c < x.ncomp(); ++c)
        o.arr(b, c).block(go, go, e[0], e[1]) =
            alpha * x.arr(b, c).block(g, g, e[0], e[1]) +
            beta * o.arr(b, c).block(go, go, e[0], e[1]);
    }
  }
}

void averageDownAll(CompositeData& d) {
  for (int l = d.maxLevel() - 1; l >= d.baseLevel(); --l)
    averageDown(d.level(l + 1), d.level(l));
}

double compositeMaxAbsValid(const CompositeData& d) {
  return compositeNorm(d, Norm::Linf);
}

}  // namespace amrins
