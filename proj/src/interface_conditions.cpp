#include "amrins/interface_conditions.hpp"

#include <cstring>
#include <stdexcept>

#include "amrins/quadrature.hpp"

namespace amrins {

TemporalWeights temporalWeights(double k, double eta) {
  if (k <= 0) throw std::invalid_argument("temporal weights need k > 0");
  const double tol = 1e-9 * k;
  if (eta < -2 * k - tol || eta > k + tol)
    throw std::runtime_error("temporal interpolation outside the history span");
  // nodes relative to t_{-1}, newest first
  const double tau[4] = {k, 0.0, -k, -2 * k};
  TemporalWeights w;
  for (int i = 0; i < 4; ++i) {
    double num = 1.0, den = 1.0, dsum = 0.0;
    for (int j = 0; j < 4; ++j) {
      if (j == i) continue;
      num *= (eta - tau[j]);
      den *= (tau[i] - tau[j]);
    }
    w.value[i] = num / den;
    for (int j = 0; j < 4; ++j) {
      if (j == i) continue;
      double p = 1.0;
      for (int m = 0; m < 4; ++m) {
        if (m == i || m == j) continue;
        p *= (eta - tau[m]);
      }
      dsum += p;
    }
    w.derivative[i] = dsum / den;
  }
  return w;
}

void TimeHistory::push(const LevelData& w, double time) {
  snaps_.push_front(Snap{w.clone(), time});
  while (snaps_.size() > 4) snaps_.pop_back();
}

double TimeHistory::spacing() const {
  if (snaps_.size() < 2) throw std::runtime_error("history too short");
  return snaps_[0].time - snaps_[1].time;
}

void TimeHistory::interpolateTo(double t, LevelData& out) const {
  if (!ready()) throw std::runtime_error("history not ready");
  const double k = spacing();
  const TemporalWeights w = temporalWeights(k, t - snaps_[1].time);
  for (int b = 0; b < out.numBoxes(); ++b)
    for (int c = 0; c < out.ncomp(); ++c) {
      out.arr(b, c) = w.value[0] * snaps_[0].w.arr(b, c);
      for (int i = 1; i < 4; ++i)
        out.arr(b, c) += w.value[i] * snaps_[i].w.arr(b, c);
    }
}

namespace {
inline double frameAt(const Array& a, const IndexBox& bx, const IntVec& i) {
  return a(i[0] - bx.lo[0] + 2, i[1] - bx.lo[1] + 2);
}

// Cells straddling a face of the given side at tangential offset t, ordered
// (outer2, outer1, inner1, inner2); returns the eq. cell-to-face average.
double faceAvgAcross(const Array& field, const IndexBox& bx, int side, int t) {
  const int axis = side / 2;
  const bool high = side % 2 == 1;
  IntVec c = bx.lo;
  c[1 - axis] += t;
  auto val = [&](int n) {
    IntVec i = c;
    i[axis] = n;
    return frameAt(field, bx, i);
  };
  if (high) {
    const int e = bx.hi[axis];
    return (-val(e + 2) + 7 * val(e + 1) + 7 * val(e) - val(e - 1)) / 12.0;
  }
  const int s = bx.lo[axis];
  return (-val(s - 2) + 7 * val(s - 1) + 7 * val(s) - val(s + 1)) / 12.0;
}
}  // namespace

InterfaceConditions::InterfaceConditions(HierarchyPtr h, int level, FlowBc bc,
                                         double nu)
    : hier_(std::move(h)), level_(level), bc_(std::move(bc)), nu_(nu) {
  const Level& lev = hier_->level(level_);
  LevelIndexMap map(lev);
  masks_.resize(lev.boxes.size());
  outer_ = interfaceGhostRegions(*hier_, level_, 2);
  band_.resize(lev.boxes.size());

  const auto comps = hier_->connectedComponents(level_);
  nComps_ = int(comps.size());
  boxComp_.assign(lev.boxes.size(), 0);
  for (std::size_t c = 0; c < comps.size(); ++c)
    for (int b : comps[c]) boxComp_[b] = int(c);
  faceCount_.assign(nComps_, 0);

  for (std::size_t b = 0; b < lev.boxes.size(); ++b) {
    const IndexBox& bx = lev.boxes[b];
    band_[b] = outer_[b];
    for (const IndexBox& piece : subtractBoxes(bx, {bx.grow(-2)}))
      band_[b].push_back(piece);
    for (int side = 0; side < 4; ++side) {
      const int axis = side / 2;
      const bool high = side % 2 == 1;
      const int ext = bx.extent()[1 - axis];
      auto& m = masks_[b][side];
      m.assign(ext, 0);
      if (isPhysicalSide(lev, bx, side)) continue;
      for (int t = 0; t < ext; ++t) {
        IntVec outside = bx.lo;
        outside[1 - axis] += t;
        outside[axis] = high ? bx.hi[axis] + 1 : bx.lo[axis] - 1;
        if (!map.covered(outside)) {
          m[t] = 1;
          ++faceCount_[boxComp_[b]];
        }
      }
    }
  }
}

long long InterfaceConditions::timeKey(double t) const {
  long long k;
  std::memcpy(&k, &t, sizeof k);
  return k;
}

InterfaceConditions::SnapshotDerived InterfaceConditions::build(
    const LevelData& wCoarse, double time) {
  SnapshotDerived d;
  d.time = time;
  const Level& lev = hier_->level(level_);
  const int nb = int(lev.boxes.size());

  LevelData conv(wCoarse.hierarchy(), level_ - 1, 2, 2);
  LevelData lap(wCoarse.hierarchy(), level_ - 1, 2, 2);
  convection(wCoarse, conv);
  laplacian(wCoarse, lap);

  LevelIndexMap srcMap(hier_->level(level_ - 1));
  const CfiStencilTable& tab = cfiTable(hier_->ratio());

  auto interpBand = [&](const LevelData& src,
                        std::vector<std::vector<Array>>& dst) {
    dst.resize(nb);
    for (int b = 0; b < nb; ++b) {
      const IntVec e = lev.boxes[b].extent();
      dst[b].assign(2, Array::Zero(e[0] + 4, e[1] + 4));
      cfiInterpolate(tab, src, srcMap, band_[b],
                     [&](const IntVec& i, int c, double v) {
                       dst[b][c](i[0] - lev.boxes[b].lo[0] + 2,
                                 i[1] - lev.boxes[b].lo[1] + 2) = v;
                     });
    }
  };
  interpBand(wCoarse, d.w);
  interpBand(conv, d.conv);
  std::vector<std::vector<Array>> lapBand;
  interpBand(lap, lapBand);

  d.faces.resize(nb);
  for (int b = 0; b < nb; ++b) {
    const IndexBox& bx = lev.boxes[b];
    for (int side = 0; side < 4; ++side) {
      const int axis = side / 2;
      const int ext = bx.extent()[1 - axis];
      auto& fa = d.faces[b][side];
      fa.wn = Eigen::ArrayXd::Zero(ext);
      fa.convn = Eigen::ArrayXd::Zero(ext);
      fa.lapn = Eigen::ArrayXd::Zero(ext);
      const auto& mask = masks_[b][side];
      const double sgn = outwardSign(side);
      for (int t = 0; t < ext; ++t) {
        if (!mask[t]) continue;
        fa.wn[t] = sgn * faceAvgAcross(d.w[b][axis], bx, side, t);
        fa.convn[t] = sgn * faceAvgAcross(d.conv[b][axis], bx, side, t);
        fa.lapn[t] = sgn * faceAvgAcross(lapBand[b][axis], bx, side, t);
      }
    }
  }
  return d;
}

const InterfaceConditions::SnapshotDerived& InterfaceConditions::derived(
    const TimeHistory& coarse, int i) {
  const double t = coarse.snapshotTime(i);
  const long long key = timeKey(t);
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;
  cache_.emplace(key, build(coarse.snapshot(i), t));
  for (auto jt = cache_.begin(); jt != cache_.end();) {
    bool keep = false;
    for (int s = 0; s < coarse.size(); ++s)
      if (jt->first == timeKey(coarse.snapshotTime(s))) keep = true;
    jt = keep ? std::next(jt) : cache_.erase(jt);
  }
  return cache_.at(key);
}

InterfaceStageData InterfaceConditions::stage(const TimeHistory& coarse,
                                              double t) {
  if (!coarse.ready()) throw std::runtime_error("coarse history not ready");
  const double k = coarse.spacing();
  const TemporalWeights tw = temporalWeights(k, t - coarse.snapshotTime(1));

  const SnapshotDerived* d[4];
  for (int i = 0; i < 4; ++i) d[i] = &derived(coarse, i);

  const Level& lev = hier_->level(level_);
  const int nb = int(lev.boxes.size());
  InterfaceStageData st;
  st.time = t;
  st.ghostBand.resize(nb);
  st.convBand.resize(nb);
  st.sides.resize(nb);

  for (int b = 0; b < nb; ++b) {
    const IntVec e = lev.boxes[b].extent();
    st.ghostBand[b].assign(2, Array::Zero(e[0] + 4, e[1] + 4));
    st.convBand[b].assign(2, Array::Zero(e[0] + 4, e[1] + 4));
    for (int c = 0; c < 2; ++c) {
      st.ghostBand[b][c] = tw.value[0] * d[0]->w[b][c];
      st.convBand[b][c] = tw.value[0] * d[0]->conv[b][c];
      for (int i = 1; i < 4; ++i) {
        st.ghostBand[b][c] += tw.value[i] * d[i]->w[b][c];
        st.convBand[b][c] += tw.value[i] * d[i]->conv[b][c];
      }
    }
    const IndexBox& bx = lev.boxes[b];
    for (int side = 0; side < 4; ++side) {
      const int axis = side / 2;
      const bool high = side % 2 == 1;
      const int ext = bx.extent()[1 - axis];
      auto& out = st.sides[b][side];
      out.wn = Eigen::ArrayXd::Zero(ext);
      out.un = Eigen::ArrayXd::Zero(ext);
      out.qdat = Eigen::ArrayXd::Zero(ext);
      if (ext == 0) continue;
      const auto& mask = masks_[b][side];
      Eigen::ArrayXd dwdt = Eigen::ArrayXd::Zero(ext);
      Eigen::ArrayXd convn = Eigen::ArrayXd::Zero(ext);
      Eigen::ArrayXd lapn = Eigen::ArrayXd::Zero(ext);
      for (int i = 0; i < 4; ++i) {
        out.wn += tw.value[i] * d[i]->faces[b][side].wn;
        dwdt += tw.derivative[i] * d[i]->faces[b][side].wn;
        convn += tw.value[i] * d[i]->faces[b][side].convn;
        lapn += tw.value[i] * d[i]->faces[b][side].lapn;
      }
      out.un = out.wn;
      for (int tt = 0; tt < ext; ++tt) {
        if (!mask[tt]) continue;
        double ng = 0.0;
        if (!bc_.zeroForce) {
          const double hh = lev.spacing;
          const double wall = hier_->origin()[axis] +
                              hh * (high ? bx.hi[axis] + 1 : bx.lo[axis]);
          const double s0 =
              hier_->origin()[1 - axis] + hh * (bx.lo[1 - axis] + tt);
          auto g1 = [&](double s) {
            const Eigen::Vector2d g =
                axis == 0 ? bc_.force(wall, s, t) : bc_.force(s, wall, t);
            return g[axis];
          };
          ng = outwardSign(side) * lineAverage(g1, s0, hh);
        }
        out.qdat[tt] = ng - convn[tt] + nu_ * lapn[tt] - dwdt[tt];
      }
    }
  }

  // Flux-balance corrections per connected component.
  st.deltaW.assign(nComps_, 0.0);
  st.deltaU.assign(nComps_, 0.0);
  std::vector<double> sumW(nComps_, 0.0), sumAbs(nComps_, 0.0);
  for (int b = 0; b < nb; ++b) {
    const int comp = boxComp_[b];
    for (int side = 0; side < 4; ++side) {
      const auto& mask = masks_[b][side];
      for (int tt = 0; tt < int(mask.size()); ++tt)
        if (mask[tt]) {
          sumW[comp] += st.sides[b][side].wn[tt];
          sumAbs[comp] += std::abs(st.sides[b][side].wn[tt]);
        }
      if (isPhysicalSide(lev, lev.boxes[b], side))
        sumW[comp] +=
            sideNormalFluxSum(*hier_, level_, lev.boxes[b], side, t, bc_);
    }
  }
  lastResidual_ = 0.0;
  for (int c = 0; c < nComps_; ++c) {
    if (faceCount_[c] == 0) continue;
    st.deltaW[c] = -sumW[c] / faceCount_[c];
    st.deltaU[c] = st.deltaW[c];
    lastResidual_ =
        std::max(lastResidual_, std::abs(sumW[c]) / (sumAbs[c] + 1e-300));
  }
  for (int b = 0; b < nb; ++b) {
    const int comp = boxComp_[b];
    for (int side = 0; side < 4; ++side) {
      const auto& mask = masks_[b][side];
      for (int tt = 0; tt < int(mask.size()); ++tt)
        if (mask[tt]) {
          st.sides[b][side].wn[tt] += st.deltaW[comp];
          st.sides[b][side].un[tt] += st.deltaU[comp];
        }
    }
  }
  return st;
}

}  // namespace amrins
