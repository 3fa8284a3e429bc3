#pragma once

#include <Eigen/Core>
#include <functional>
#include <vector>

#include "amrins/hierarchy.hpp"

namespace amrins {

using Array = Eigen::ArrayXXd;  // (x extent) rows by (y extent) cols

/// Cell-averaged data on one level: per box, per component, a dense array
/// including a ghost ring. Solver fields use ghost width 2; the fourth-order
/// stencils reach two cells out.
class LevelData {
 public:
  LevelData() = default;
  LevelData(HierarchyPtr h, int level, int ncomp, int ghost = 2);

  int levelIndex() const { return level_; }
  int ncomp() const { return ncomp_; }
  int ghost() const { return ghost_; }
  int numBoxes() const { return int(arrays_.size()); }
  const Level& level() const { return hier_->level(level_); }
  const HierarchyPtr& hierarchy() const { return hier_; }
  double spacing() const { return level().spacing; }
  const IndexBox& box(int b) const { return level().boxes[b]; }

  Array& arr(int b, int c = 0) { return arrays_[b][c]; }
  const Array& arr(int b, int c = 0) const { return arrays_[b][c]; }

  /// Array element for lattice index i (ghosts included).
  double& at(int b, int c, const IntVec& i) {
    const IndexBox& bx = box(b);
    return arrays_[b][c](i[0] - bx.lo[0] + ghost_, i[1] - bx.lo[1] + ghost_);
  }
  double at(int b, int c, const IntVec& i) const {
    const IndexBox& bx = box(b);
    return arrays_[b][c](i[0] - bx.lo[0] + ghost_, i[1] - bx.lo[1] + ghost_);
  }

  void setZero();
  void copyFrom(const LevelData& other);          // same layout
  void axpy(double a, const LevelData& x);        // this += a*x, interior only
  void scale(double a);

  /// Fill interior cells from a pointwise function of (x, y), averaged over
  /// each cell with the quadrature from quadrature.hpp.
  void fillCellAverages(int comp, const std::function<double(double, double)>& f);

  LevelData clone() const;

 private:
  HierarchyPtr hier_;
  int level_ = 0, ncomp_ = 0, ghost_ = 0;
  std::vector<std::vector<Array>> arrays_;
};

/// Face-averaged data normal to one axis; extent along the axis is the box
/// extent plus one, with optional transverse ghost faces.
class FaceData {
 public:
  FaceData() = default;
  FaceData(HierarchyPtr h, int level, int axis, int ncomp = 1, int tghost = 0);

  int axis() const { return axis_; }
  int ncomp() const { return ncomp_; }
  int tghost() const { return tghost_; }
  int numBoxes() const { return int(arrays_.size()); }
  const Level& level() const { return hier_->level(level_); }
  const IndexBox& box(int b) const { return level().boxes[b]; }

  Array& arr(int b, int c = 0) { return arrays_[b][c]; }
  const Array& arr(int b, int c = 0) const { return arrays_[b][c]; }

  /// Face (i, i+e^axis) is indexed by i along the axis; the low face of cell
  /// i has face index i, the high face i+1.
  double& at(int b, int c, const IntVec& faceIdx) {
    const IndexBox& bx = box(b);
    const int tr = 1 - axis_;
    IntVec o = faceIdx - bx.lo;
    o[tr] += tghost_;
    return arrays_[b][c](o[0], o[1]);
  }
  double at(int b, int c, const IntVec& faceIdx) const {
    const IndexBox& bx = box(b);
    const int tr = 1 - axis_;
    IntVec o = faceIdx - bx.lo;
    o[tr] += tghost_;
    return arrays_[b][c](o[0], o[1]);
  }

 private:
  HierarchyPtr hier_;
  int level_ = 0, axis_ = 0, ncomp_ = 0, tghost_ = 0;
  std::vector<std::vector<Array>> arrays_;
};

/// Composite data: one LevelData per level from some base level up.
class CompositeData {
 public:
  CompositeData() = default;
  CompositeData(HierarchyPtr h, int lbase, int ncomp, int ghost = 2);

  int baseLevel() const { return lbase_; }
  int maxLevel() const { return hier_->maxLevel(); }
  int ncomp() const { return ncomp_; }
  const HierarchyPtr& hierarchy() const { return hier_; }

  LevelData& level(int l) { return data_[l - lbase_]; }
  const LevelData& level(int l) const { return data_[l - lbase_]; }

  void setZero();
  CompositeData clone() const;
  void axpy(double a, const CompositeData& x);

 private:
  HierarchyPtr hier_;
  int lbase_ = 0, ncomp_ = 0;
  std::vector<LevelData> data_;
};

/// Copy ghost cells overlapping other boxes of the same level, wrapping on
/// periodic axes. Two-phase (interiors are read, ghosts written), so the
/// result is independent of box order.
void exchange(LevelData& d);

/// Replace each covered coarse cell by the mean of its r^D fine children.
void averageDown(const LevelData& fine, LevelData& coarse);

/// Fourth-order conversion of cell averages to face averages along an axis;
/// requires ghosts filled to width 2 along that axis (interior faces use
/// cells -1..+2 around the face).
FaceData cellToFace(const LevelData& d, int comp, int axis, int tghost = 0);

/// Fourth-order face-averaged normal derivative from cell averages.
FaceData faceNormalDerivative(const LevelData& d, int comp, int axis);

enum class Norm { Linf, L1, L2 };

/// Composite Lp norm over valid regions only, with (h^l)^D cell weights.
double compositeNorm(const CompositeData& c, Norm p);
double compositeNorm(const CompositeData& c, Norm p, int comp);

/// Same norms restricted to one level's valid region.
double levelValidNorm(const LevelData& d, const std::vector<IndexBox>& valid,
                      Norm p, int comp);

}  // namespace amrins
