#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <vector>

namespace amrins {

constexpr int kDim = 2;

using IntVec = Eigen::Array2i;
using RealVec = Eigen::Array2d;

/// Componentwise floor division, correct for negative indices.
inline int coarsenIndex1(int i, int r) {
  return (i >= 0) ? i / r : -((-i + r - 1) / r);
}

inline IntVec coarsenIndex(const IntVec& i, int r) {
  return IntVec(coarsenIndex1(i[0], r), coarsenIndex1(i[1], r));
}

/// Closed integer-lattice box [lo, hi]. Empty iff lo > hi in some axis.
struct IndexBox {
  IntVec lo{0, 0};
  IntVec hi{-1, -1};

  IndexBox() = default;
  IndexBox(const IntVec& l, const IntVec& h) : lo(l), hi(h) {}
  IndexBox(int x0, int y0, int x1, int y1) : lo(x0, y0), hi(x1, y1) {}

  bool empty() const { return (lo > hi).any(); }
  IntVec extent() const { return hi - lo + 1; }
  std::int64_t numCells() const {
    if (empty()) return 0;
    const IntVec e = extent();
    return std::int64_t(e[0]) * e[1];
  }
  bool contains(const IntVec& i) const {
    return (i >= lo).all() && (i <= hi).all();
  }
  bool contains(const IndexBox& b) const {
    return b.empty() || ((b.lo >= lo).all() && (b.hi <= hi).all());
  }
  bool operator==(const IndexBox& b) const {
    return (lo == b.lo).all() && (hi == b.hi).all();
  }

  IndexBox intersect(const IndexBox& b) const {
    return IndexBox(lo.max(b.lo), hi.min(b.hi));
  }
  bool intersects(const IndexBox& b) const { return !intersect(b).empty(); }

  IndexBox grow(int g) const { return IndexBox(lo - g, hi + g); }
  IndexBox grow(const IntVec& g) const { return IndexBox(lo - g, hi + g); }
  IndexBox shift(const IntVec& s) const { return IndexBox(lo + s, hi + s); }

  /// One layer of cells just outside the given side (0:x-lo, 1:x-hi, 2:y-lo, 3:y-hi).
  IndexBox adjacentOutside(int side, int width = 1) const {
    IndexBox b = *this;
    const int axis = side / 2;
    if (side % 2 == 0) {
      b.hi[axis] = lo[axis] - 1;
      b.lo[axis] = lo[axis] - width;
    } else {
      b.lo[axis] = hi[axis] + 1;
      b.hi[axis] = hi[axis] + width;
    }
    return b;
  }
};

inline IndexBox coarsenBox(const IndexBox& b, int r) {
  return IndexBox(coarsenIndex(b.lo, r), coarsenIndex(b.hi, r));
}

inline IndexBox refineBox(const IndexBox& b, int r) {
  return IndexBox(b.lo * r, (b.hi + 1) * r - 1);
}

/// A box is properly refined iff refining its coarsening reproduces it.
inline bool isProperlyRefined(const IndexBox& b, int r) {
  return refineBox(coarsenBox(b, r), r) == b;
}

/// a minus b, as up to four disjoint boxes.
std::vector<IndexBox> subtractBox(const IndexBox& a, const IndexBox& b);

/// a minus union(bs), as disjoint boxes.
std::vector<IndexBox> subtractBoxes(const IndexBox& a,
                                    const std::vector<IndexBox>& bs);

std::int64_t totalCells(const std::vector<IndexBox>& bs);

/// Index extent of one level's discretization of the rectangular domain,
/// cells [0, ncells-1] per axis, plus per-axis periodicity.
struct ProblemDomain {
  IntVec ncells{0, 0};
  std::array<bool, kDim> periodic{false, false};

  IndexBox box() const { return IndexBox(IntVec(0, 0), ncells - 1); }
  ProblemDomain refined(int r) const { return {ncells * r, periodic}; }
  ProblemDomain coarsened(int r) const {
    return {coarsenIndex(ncells, r), periodic};
  }
  /// Wrap an index on periodic axes; non-periodic axes pass through.
  IntVec wrap(const IntVec& i) const {
    IntVec w = i;
    for (int d = 0; d < kDim; ++d)
      if (periodic[d]) {
        w[d] %= ncells[d];
        if (w[d] < 0) w[d] += ncells[d];
      }
    return w;
  }
  bool insideOrWrapped(const IntVec& i) const { return box().contains(wrap(i)); }
};

}  // namespace amrins
