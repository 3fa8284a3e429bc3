#include "amrins/level_data.hpp"

#include <cmath>
#include <stdexcept>

#include "amrins/quadrature.hpp"

namespace amrins {

LevelData::LevelData(HierarchyPtr h, int level, int ncomp, int ghost)
    : hier_(std::move(h)), level_(level), ncomp_(ncomp), ghost_(ghost) {
  const Level& lev = hier_->level(level_);
  arrays_.resize(lev.boxes.size());
  for (std::size_t b = 0; b < lev.boxes.size(); ++b) {
    const IntVec e = lev.boxes[b].extent();
    arrays_[b].assign(ncomp_, Array::Zero(e[0] + 2 * ghost_, e[1] + 2 * ghost_));
  }
}

void LevelData::setZero() {
  for (auto& bx : arrays_)
    for (auto& a : bx) a.setZero();
}

void LevelData::copyFrom(const LevelData& other) {
  for (int b = 0; b < numBoxes(); ++b)
    for (int c = 0; c < ncomp_; ++c) arrays_[b][c] = other.arrays_[b][c];
}

void LevelData::axpy(double a, const LevelData& x) {
  for (int b = 0; b < numBoxes(); ++b)
    for (int c = 0; c < ncomp_; ++c) arrays_[b][c] += a * x.arrays_[b][c];
}

void LevelData::scale(double a) {
  for (auto& bx : arrays_)
    for (auto& arr : bx) arr *= a;
}

LevelData LevelData::clone() const {
  LevelData out;
  out.hier_ = hier_;
  out.level_ = level_;
  out.ncomp_ = ncomp_;
  out.ghost_ = ghost_;
  out.arrays_ = arrays_;
  return out;
}

void LevelData::fillCellAverages(
    int comp, const std::function<double(double, double)>& f) {
  const Level& lev = level();
  const double h = lev.spacing;
  for (int b = 0; b < numBoxes(); ++b) {
    const IndexBox& bx = box(b);
    Array& a = arrays_[b][comp];
    for (int j = bx.lo[1]; j <= bx.hi[1]; ++j)
      for (int i = bx.lo[0]; i <= bx.hi[0]; ++i) {
        const RealVec lo = hier_->cellLo(level_, IntVec(i, j));
        a(i - bx.lo[0] + ghost_, j - bx.lo[1] + ghost_) =
            cellAverage(f, lo[0], lo[1], h);
      }
  }
}

FaceData::FaceData(HierarchyPtr h, int level, int axis, int ncomp, int tghost)
    : hier_(std::move(h)), level_(level), axis_(axis), ncomp_(ncomp),
      tghost_(tghost) {
  const Level& lev = hier_->level(level_);
  arrays_.resize(lev.boxes.size());
  for (std::size_t b = 0; b < lev.boxes.size(); ++b) {
    IntVec e = lev.boxes[b].extent();
    e[axis_] += 1;
    e[1 - axis_] += 2 * tghost_;
    arrays_[b].assign(ncomp_, Array::Zero(e[0], e[1]));
  }
}

CompositeData::CompositeData(HierarchyPtr h, int lbase, int ncomp, int ghost)
    : hier_(std::move(h)), lbase_(lbase), ncomp_(ncomp) {
  for (int l = lbase_; l <= hier_->maxLevel(); ++l)
    data_.emplace_back(hier_, l, ncomp, ghost);
}

void CompositeData::setZero() {
  for (auto& d : data_) d.setZero();
}

CompositeData CompositeData::clone() const {
  CompositeData out;
  out.hier_ = hier_;
  out.lbase_ = lbase_;
  out.ncomp_ = ncomp_;
  for (const auto& d : data_) out.data_.push_back(d.clone());
  return out;
}

void CompositeData::axpy(double a, const CompositeData& x) {
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i].axpy(a, x.data_[i]);
}

void exchange(LevelData& d) {
  const Level& lev = d.level();
  const ProblemDomain& dom = lev.domain;
  const int g = d.ghost();

  std::vector<IntVec> shifts{IntVec(0, 0)};
  for (int ax = 0; ax < kDim; ++ax)
    if (dom.periodic[ax]) {
      auto prev = shifts;
      for (auto s : prev) {
        IntVec p = s, m = s;
        p[ax] += dom.ncells[ax];
        m[ax] -= dom.ncells[ax];
        shifts.push_back(p);
        shifts.push_back(m);
      }
    }

  for (int b1 = 0; b1 < d.numBoxes(); ++b1) {
    const IndexBox dst = lev.boxes[b1].grow(g);
    for (int b2 = 0; b2 < d.numBoxes(); ++b2)
      for (const IntVec& s : shifts) {
        if (b1 == b2 && (s == 0).all()) continue;
        const IndexBox src = lev.boxes[b2].shift(s);
        IndexBox ov = dst.intersect(src);
        if (ov.empty()) continue;
        for (const IndexBox& piece : subtractBox(ov, lev.boxes[b1]))
          for (int c = 0; c < d.ncomp(); ++c)
            for (int j = piece.lo[1]; j <= piece.hi[1]; ++j)
              for (int i = piece.lo[0]; i <= piece.hi[0]; ++i)
                d.at(b1, c, IntVec(i, j)) =
                    d.at(b2, c, IntVec(i - s[0], j - s[1]));
      }
  }
}

void averageDown(const LevelData& fine, LevelData& coarse) {
  const Level& flev = fine.level();
  const Level& clev = coarse.level();
  const int r = fine.hierarchy()->ratio();
  const double w = 1.0 / (r * r);
  for (int bc = 0; bc < coarse.numBoxes(); ++bc) {
    const IndexBox& cb = clev.boxes[bc];
    for (int bf = 0; bf < fine.numBoxes(); ++bf) {
      const IndexBox ov = coarsenBox(flev.boxes[bf], r).intersect(cb);
      if (ov.empty()) continue;
      for (int c = 0; c < coarse.ncomp(); ++c)
        for (int j = ov.lo[1]; j <= ov.hi[1]; ++j)
          for (int i = ov.lo[0]; i <= ov.hi[0]; ++i) {
            double s = 0.0;
            for (int jj = 0; jj < r; ++jj)
              for (int ii = 0; ii < r; ++ii)
                s += fine.at(bf, c, IntVec(i * r + ii, j * r + jj));
            coarse.at(bc, c, IntVec(i, j)) = s * w;
          }
    }
  }
}

FaceData cellToFace(const LevelData& d, int comp, int axis, int tghost) {
  FaceData out(d.hierarchy(), d.levelIndex(), axis, 1, tghost);
  const int g = d.ghost();
  for (int b = 0; b < d.numBoxes(); ++b) {
    const Array& a = d.arr(b, comp);
    Array& f = out.arr(b, 0);
    const IntVec e = d.box(b).extent();
    if (axis == 0) {
      const int nyT = e[1] + 2 * tghost;
      const int c0 = g - tghost;
      f = (-a.block(g + 1, c0, e[0] + 1, nyT) + 7 * a.block(g, c0, e[0] + 1, nyT) +
           7 * a.block(g - 1, c0, e[0] + 1, nyT) -
           a.block(g - 2, c0, e[0] + 1, nyT)) /
          12.0;
    } else {
      const int nxT = e[0] + 2 * tghost;
      const int r0 = g - tghost;
      f = (-a.block(r0, g + 1, nxT, e[1] + 1) + 7 * a.block(r0, g, nxT, e[1] + 1) +
           7 * a.block(r0, g - 1, nxT, e[1] + 1) -
           a.block(r0, g - 2, nxT, e[1] + 1)) /
          12.0;
    }
  }
  return out;
}

FaceData faceNormalDerivative(const LevelData& d, int comp, int axis) {
  FaceData out(d.hierarchy(), d.levelIndex(), axis, 1, 0);
  const int g = d.ghost();
  const double s = 1.0 / (12.0 * d.spacing());
  for (int b = 0; b < d.numBoxes(); ++b) {
    const Array& a = d.arr(b, comp);
    Array& f = out.arr(b, 0);
    const IntVec e = d.box(b).extent();
    if (axis == 0) {
      f = s * (-a.block(g + 1, g, e[0] + 1, e[1]) +
               15 * a.block(g, g, e[0] + 1, e[1]) -
               15 * a.block(g - 1, g, e[0] + 1, e[1]) +
               a.block(g - 2, g, e[0] + 1, e[1]));
    } else {
      f = s * (-a.block(g, g + 1, e[0], e[1] + 1) +
               15 * a.block(g, g, e[0], e[1] + 1) -
               15 * a.block(g, g - 1, e[0], e[1] + 1) +
               a.block(g, g - 2, e[0], e[1] + 1));
    }
  }
  return out;
}

double levelValidNorm(const LevelData& d, const std::vector<IndexBox>& valid,
                      Norm p, int comp) {
  const double h = d.spacing();
  double acc = 0.0;
  for (int b = 0; b < d.numBoxes(); ++b) {
    const IndexBox& bx = d.box(b);
    for (const IndexBox& v : valid) {
      const IndexBox ov = v.intersect(bx);
      if (ov.empty()) continue;
      for (int j = ov.lo[1]; j <= ov.hi[1]; ++j)
        for (int i = ov.lo[0]; i <= ov.hi[0]; ++i) {
          const double x = std::abs(d.at(b, comp, IntVec(i, j)));
          if (p == Norm::Linf)
            acc = std::max(acc, x);
          else if (p == Norm::L1)
            acc += h * h * x;
          else
            acc += h * h * x * x;
        }
    }
  }
  return acc;
}

double compositeNorm(const CompositeData& c, Norm p, int comp) {
  const Hierarchy& h = *c.hierarchy();
  double acc = 0.0;
  for (int l = c.baseLevel(); l <= c.maxLevel(); ++l) {
    const auto valid = h.validRegion(l);
    const double v = levelValidNorm(c.level(l), valid, p, comp);
    acc = (p == Norm::Linf) ? std::max(acc, v) : acc + v;
  }
  return (p == Norm::L2) ? std::sqrt(acc) : acc;
}

double compositeNorm(const CompositeData& c, Norm p) {
  double acc = 0.0;
  for (int comp = 0; comp < c.ncomp(); ++comp) {
    double v = (p == Norm::L2) ? 0.0 : compositeNorm(c, p, comp);
    if (p == Norm::L2) {
      // accumulate squares across components
      const Hierarchy& h = *c.hierarchy();
      for (int l = c.baseLevel(); l <= c.maxLevel(); ++l)
        v += levelValidNorm(c.level(l), h.validRegion(l), Norm::L2, comp);
    }
    acc = (p == Norm::Linf) ? std::max(acc, v) : acc + v;
  }
  return (p == Norm::L2) ? std::sqrt(acc) : acc;
}

}  // namespace amrins
