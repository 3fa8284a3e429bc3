#include "amrins/cf_interp.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <stdexcept>

namespace amrins {

namespace {

// 15 monomials x^p y^q with p+q <= 4, coordinates centered on the host cell.
struct Monomials {
  std::vector<std::pair<int, int>> pq;
  Monomials() {
    for (int tot = 0; tot <= 4; ++tot)
      for (int p = 0; p <= tot; ++p) pq.emplace_back(p, tot - p);
  }
};

double segmentMoment(int p, double a, double b) {  // integral of x^p / (b-a)
  return (std::pow(b, p + 1) - std::pow(a, p + 1)) / ((p + 1) * (b - a));
}

}  // namespace

CfiStencilTable::CfiStencilTable(int r, int maxShift)
    : r_(r), maxShift_(maxShift) {
  if (r != 2 && r != 4) throw std::invalid_argument("ratio must be 2 or 4");
  static const Monomials mono;
  const int nm = int(mono.pq.size());   // 15
  const int nw = 25;                    // 5x5 footprint

  const int ns = 2 * maxShift_ + 1;
  rows_.assign(ns * ns, std::vector<Eigen::RowVectorXd>(r_ * r_));

  for (int sy = -maxShift_; sy <= maxShift_; ++sy)
    for (int sx = -maxShift_; sx <= maxShift_; ++sx) {
      const IntVec s(sx, sy);
      // Coarse moment matrix over the shifted footprint.
      Eigen::MatrixXd A(nw, nm);
      int hostIdx = -1;
      for (int ky = -2; ky <= 2; ++ky)
        for (int kx = -2; kx <= 2; ++kx) {
          const int rowIdx = (ky + 2) * 5 + (kx + 2);
          const double ox = sx + kx, oy = sy + ky;
          if (kx == -sx && ky == -sy) hostIdx = rowIdx;
          for (int m = 0; m < nm; ++m)
            A(rowIdx, m) =
                segmentMoment(mono.pq[m].first, ox - 0.5, ox + 0.5) *
                segmentMoment(mono.pq[m].second, oy - 0.5, oy + 0.5);
        }
      // KKT system for min ||Ax-b|| s.t. (host row).x = b_host.
      Eigen::MatrixXd K = Eigen::MatrixXd::Zero(nm + 1, nm + 1);
      K.topLeftCorner(nm, nm) = 2.0 * A.transpose() * A;
      K.block(0, nm, nm, 1) = A.row(hostIdx).transpose();
      K.block(nm, 0, 1, nm) = A.row(hostIdx);
      Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
      if (!lu.isInvertible())
        throw std::runtime_error("singular interpolation fit");
      // x = X b: columns solved against unit data vectors.
      Eigen::MatrixXd X(nm, nw);
      for (int j = 0; j < nw; ++j) {
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nm + 1);
        rhs.head(nm) = 2.0 * A.transpose().col(j);
        if (j == hostIdx) rhs(nm) = 1.0;
        X.col(j) = lu.solve(rhs).head(nm);
      }
      // Fine-cell average moments and weight rows.
      auto& slot = rows_[shiftIndex(s)];
      Eigen::MatrixXd W(r_ * r_, nw);
      for (int fy = 0; fy < r_; ++fy)
        for (int fx = 0; fx < r_; ++fx) {
          Eigen::RowVectorXd fm(nm);
          const double ax = -0.5 + double(fx) / r_, bx = ax + 1.0 / r_;
          const double ay = -0.5 + double(fy) / r_, by = ay + 1.0 / r_;
          for (int m = 0; m < nm; ++m)
            fm(m) = segmentMoment(mono.pq[m].first, ax, bx) *
                    segmentMoment(mono.pq[m].second, ay, by);
          W.row(fy * r_ + fx) = fm * X;
        }
      // Exact conservation: distribute the host-cell defect equally.
      Eigen::RowVectorXd target = Eigen::RowVectorXd::Zero(nw);
      target(hostIdx) = 1.0;
      const Eigen::RowVectorXd defect = target - W.colwise().mean();
      for (int f = 0; f < r_ * r_; ++f) slot[f] = W.row(f) + defect;
    }

  for (int sy = -maxShift_; sy <= maxShift_; ++sy)
    for (int sx = -maxShift_; sx <= maxShift_; ++sx)
      shiftOrder_.push_back(IntVec(sx, sy));
  std::stable_sort(shiftOrder_.begin(), shiftOrder_.end(),
                   [](const IntVec& a, const IntVec& b) {
                     const int na = std::abs(a[0]) + std::abs(a[1]);
                     const int nb = std::abs(b[0]) + std::abs(b[1]);
                     if (na != nb) return na < nb;
                     if (a[1] != b[1]) return a[1] < b[1];
                     return a[0] < b[0];
                   });
}

const Eigen::RowVectorXd& CfiStencilTable::row(const IntVec& s,
                                               const IntVec& f) const {
  return rows_[shiftIndex(s)][f[1] * r_ + f[0]];
}

double LevelAccessor::operator()(const IntVec& i, int comp) const {
  const IntVec w = d_->level().domain.wrap(i);
  int b = map_->owner(w);
  if (b >= 0) return d_->at(b, comp, w);
  if (useGhosts_) {
    for (int k = 0; k < d_->numBoxes(); ++k)
      if (d_->box(k).grow(d_->ghost()).contains(w)) return d_->at(k, comp, w);
  }
  throw std::runtime_error("accessor: index outside the level region");
}

void cfiInterpolate(
    const CfiStencilTable& tab, const LevelData& coarse,
    const LevelIndexMap& sourceRegion, const std::vector<IndexBox>& fineTargets,
    const std::function<void(const IntVec&, int, double)>& sink) {
  const int r = tab.ratio();
  LevelAccessor fetch(coarse, sourceRegion, false);
  const int ncomp = coarse.ncomp();
  IntVec lastHost(INT32_MIN, INT32_MIN);
  IntVec lastShift(0, 0);
  for (const IndexBox& t : fineTargets)
    for (int j = t.lo[1]; j <= t.hi[1]; ++j)
      for (int i = t.lo[0]; i <= t.hi[0]; ++i) {
        const IntVec fi(i, j);
        const IntVec host = coarsenIndex(fi, r);
        IntVec shift;
        if ((host == lastHost).all()) {
          shift = lastShift;
        } else {
          bool found = false;
          for (const IntVec& s : tab.shiftOrder()) {
            const IndexBox fp(host + s - 2, host + s + 2);
            if (sourceRegion.rectangleCovered(fp)) {
              shift = s;
              found = true;
              break;
            }
          }
          if (!found)
            throw std::runtime_error(
                "coarse-fine interpolation footprint exits the source region");
          lastHost = host;
          lastShift = shift;
        }
        const IntVec f = fi - host * r;
        const Eigen::RowVectorXd& w = tab.row(shift, f);
        for (int c = 0; c < ncomp; ++c) {
          double v = 0.0;
          int idx = 0;
          for (int ky = -2; ky <= 2; ++ky)
            for (int kx = -2; kx <= 2; ++kx, ++idx)
              v += w(idx) * fetch(host + shift + IntVec(kx, ky), c);
          sink(fi, c, v);
        }
      }
}

void cfiFillBoxes(const CfiStencilTable& tab, const LevelData& coarse,
                  const LevelIndexMap& sourceRegion, LevelData& fine,
                  const std::vector<IndexBox>& targets) {
  LevelIndexMap fineMap(fine.level());
  cfiInterpolate(tab, coarse, sourceRegion, targets,
                 [&](const IntVec& i, int c, double v) {
                   const IntVec w = fine.level().domain.wrap(i);
                   const int b = fineMap.owner(w);
                   if (b >= 0) fine.at(b, c, w) = v;
                 });
}

std::vector<std::vector<IndexBox>> interfaceGhostRegions(const Hierarchy& h,
                                                         int l, int width) {
  const Level& lev = h.level(l);
  const ProblemDomain& dom = lev.domain;
  std::vector<std::vector<IndexBox>> out(lev.boxes.size());

  // Same-level boxes plus periodic images subtract from the ghost ring.
  std::vector<IndexBox> covers;
  for (const IndexBox& b : lev.boxes) covers.push_back(b);
  for (int d = 0; d < kDim; ++d)
    if (dom.periodic[d]) {
      const std::size_t n = covers.size();
      for (std::size_t k = 0; k < n; ++k) {
        IntVec p = IntVec::Zero(), m = IntVec::Zero();
        p[d] = dom.ncells[d];
        m[d] = -dom.ncells[d];
        covers.push_back(covers[k].shift(p));
        covers.push_back(covers[k].shift(m));
      }
    }

  for (std::size_t b = 0; b < lev.boxes.size(); ++b) {
    IndexBox ring = lev.boxes[b].grow(width);
    // Clip to the domain on non-periodic axes; ghosts beyond a physical
    // boundary belong to the physical fills.
    for (int d = 0; d < kDim; ++d)
      if (!dom.periodic[d]) {
        ring.lo[d] = std::max(ring.lo[d], 0);
        ring.hi[d] = std::min(ring.hi[d], dom.ncells[d] - 1);
      }
    out[b] = subtractBoxes(ring, covers);
  }
  return out;
}

std::vector<std::array<std::vector<std::uint8_t>, 4>> interfaceFaceMasks(
    const Hierarchy& h, int l) {
  const Level& lev = h.level(l);
  LevelIndexMap map(lev);
  std::vector<std::array<std::vector<std::uint8_t>, 4>> masks(lev.boxes.size());
  for (std::size_t b = 0; b < lev.boxes.size(); ++b) {
    const IndexBox& bx = lev.boxes[b];
    for (int side = 0; side < 4; ++side) {
      const int axis = side / 2;
      const bool high = side % 2 == 1;
      const int ext = bx.extent()[1 - axis];
      auto& m = masks[b][side];
      m.assign(ext, 0);
      const bool onEdge = high ? bx.hi[axis] == lev.domain.ncells[axis] - 1
                               : bx.lo[axis] == 0;
      if (onEdge && !lev.domain.periodic[axis]) continue;
      for (int t = 0; t < ext; ++t) {
        IntVec outside = bx.lo;
        outside[1 - axis] += t;
        outside[axis] = high ? bx.hi[axis] + 1 : bx.lo[axis] - 1;
        if (!map.covered(outside)) m[t] = 1;
      }
    }
  }
  return masks;
}

void cfiFillInterfaceGhosts(const CfiStencilTable& tab, const LevelData& coarse,
                            LevelData& fine) {
  const Hierarchy& h = *fine.hierarchy();
  const int l = fine.levelIndex();
  LevelIndexMap srcMap(coarse.level());
  const auto regions = interfaceGhostRegions(h, l, fine.ghost());
  for (int b = 0; b < fine.numBoxes(); ++b) {
    cfiInterpolate(tab, coarse, srcMap, regions[b],
                   [&](const IntVec& i, int c, double v) {
                     fine.at(b, c, i) = v;
                   });
  }
}

FluxRegister::FluxRegister(HierarchyPtr h, int lCoarse)
    : hier_(std::move(h)), lc_(lCoarse) {
  const Level& clev = hier_->level(lc_);
  const Level& flev = hier_->level(lc_ + 1);
  const int r = hier_->ratio();
  LevelIndexMap cmap(clev);
  // Coarsened fine region for interior-face detection.
  Level coarsenedFine;
  coarsenedFine.domain = clev.domain;
  for (const IndexBox& fb : flev.boxes)
    coarsenedFine.boxes.push_back(coarsenBox(fb, r));
  LevelIndexMap fmap(coarsenedFine);

  for (std::size_t fb = 0; fb < flev.boxes.size(); ++fb) {
    const IndexBox cb = coarsenBox(flev.boxes[fb], r);
    for (int side = 0; side < 4; ++side) {
      const int axis = side / 2;
      const bool high = side % 2 == 1;
      const IndexBox strip = cb.adjacentOutside(side);
      for (int j = strip.lo[1]; j <= strip.hi[1]; ++j)
        for (int i = strip.lo[0]; i <= strip.hi[0]; ++i) {
          const IntVec raw(i, j);
          const IntVec cell = clev.domain.wrap(raw);
          if (fmap.covered(cell)) continue;     // interior to the fine region
          const int cbox = cmap.owner(cell);
          if (cbox < 0) continue;               // beyond the coarse region
          Entry e;
          e.coarseBox = cbox;
          e.cell = cell;
          e.axis = axis;
          e.fineOnHigh = !high;  // fine region sits opposite the strip side
          e.coarseFace = cell;
          if (e.fineOnHigh) e.coarseFace[axis] += 1;
          // First of the r fine faces refined from this coarse face.
          IntVec ff;
          ff[axis] = (e.fineOnHigh ? raw[axis] + 1 : raw[axis]) * r;
          ff[1 - axis] = raw[1 - axis] * r;
          e.fineBox = int(fb);
          e.fineFace0 = ff;
          faces_.push_back(e);
        }
    }
  }
}

void FluxRegister::clear() {
  for (auto& e : faces_) {
    e.coarse.assign(ncomp_, 0.0);
    e.fineSum.assign(ncomp_, 0.0);
  }
}

void FluxRegister::setCoarseFlux(const std::array<FaceData, 2>& flux,
                                 int ncomp) {
  ncomp_ = ncomp;
  for (auto& e : faces_) {
    e.coarse.assign(ncomp_, 0.0);
    e.fineSum.assign(ncomp_, 0.0);
    for (int c = 0; c < ncomp_; ++c)
      e.coarse[c] = flux[e.axis].at(e.coarseBox, c, e.coarseFace);
  }
}

void FluxRegister::addFineFlux(const std::array<FaceData, 2>& flux, int ncomp) {
  const int r = hier_->ratio();
  for (auto& e : faces_) {
    for (int c = 0; c < ncomp; ++c) {
      double s = 0.0;
      for (int k = 0; k < r; ++k) {
        IntVec f = e.fineFace0;
        f[1 - e.axis] += k;
        s += flux[e.axis].at(e.fineBox, c, f);
      }
      e.fineSum[c] += s / r;
    }
  }
}

void FluxRegister::apply(LevelData& coarseData) const {
  const double h = hier_->level(lc_).spacing;
  for (const auto& e : faces_)
    for (int c = 0; c < ncomp_; ++c) {
      const double corr = (e.fineSum[c] - e.coarse[c]) / h;
      coarseData.at(e.coarseBox, c, e.cell) +=
          e.fineOnHigh ? corr : -corr;
    }
}

}  // namespace amrins
