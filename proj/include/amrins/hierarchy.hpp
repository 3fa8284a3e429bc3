#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "amrins/geometry.hpp"

namespace amrins {

/// One refinement level: pairwise-disjoint boxes on a shared lattice.
struct Level {
  int index = 0;
  double spacing = 1.0;
  ProblemDomain domain;
  std::vector<IndexBox> boxes;

  std::int64_t numCells() const { return totalCells(boxes); }
};

/// A face of a control volume: owning cell, axis, and side (low/high).
struct Face {
  IntVec cell{0, 0};
  int axis = 0;
  bool high = false;
};

using FaceSet = std::vector<Face>;

struct HierarchyViolation {
  std::string what;      // refinement | nesting | disjoint | embedding | cover
  int level = -1;
  int box = -1;
  std::string detail;
};

/// Immutable AMR hierarchy. Level 0 covers the whole base domain; spacings
/// shrink by the refinement ratio per level.
class Hierarchy {
 public:
  Hierarchy(double h0, const ProblemDomain& base, int ratio,
            std::vector<std::vector<IndexBox>> levelBoxes,
            const RealVec& origin = RealVec(0.0, 0.0));

  int maxLevel() const { return int(levels_.size()) - 1; }
  int ratio() const { return ratio_; }
  const Level& level(int l) const { return levels_[l]; }
  int numLevels() const { return int(levels_.size()); }
  const RealVec& origin() const { return origin_; }

  double spacing(int l) const { return levels_[l].spacing; }

  /// Physical coordinate of the low corner of cell i on level l.
  RealVec cellLo(int l, const IntVec& i) const {
    return origin_ + RealVec(i[0], i[1]) * levels_[l].spacing;
  }

  /// Level-l cells not covered by level l+1 (whole level for the finest).
  std::vector<IndexBox> validRegion(int l) const;

  /// Coarsened level-(l+1) boxes, i.e. the invalid region of level l.
  std::vector<IndexBox> invalidRegion(int l) const;

  /// Faces of the level-l subdomain boundary, split into coarse-fine
  /// interface faces and physical-boundary faces. Faces on periodic domain
  /// edges whose wrapped neighbor is outside the level count as interface.
  void classifyBoundaryFaces(int l, FaceSet& interface, FaceSet& physical) const;

  /// Face-adjacency connected components of the level-l boxes.
  std::vector<std::vector<int>> connectedComponents(int l) const;

  std::optional<HierarchyViolation> validate() const;

  void serialize(std::ostream& os) const;
  static std::shared_ptr<const Hierarchy> deserialize(std::istream& is,
                                                      const RealVec& origin,
                                                      double h0,
                                                      std::array<bool, 2> periodic);

 private:
  double h0_;
  int ratio_;
  RealVec origin_;
  std::vector<Level> levels_;
};

using HierarchyPtr = std::shared_ptr<const Hierarchy>;

/// Rasterized view of one level: per-cell box ownership over the bounding
/// box, plus a prefix-sum table for O(1) "is this rectangle fully covered"
/// queries. Periodic axes wrap.
class LevelIndexMap {
 public:
  LevelIndexMap() = default;
  LevelIndexMap(const Level& level);

  /// Box index owning cell i (wrapped on periodic axes), or -1.
  int owner(const IntVec& i) const;
  bool covered(const IntVec& i) const { return owner(i) >= 0; }

  /// True iff every cell of b (wrapped) lies in some box of the level.
  bool rectangleCovered(const IndexBox& b) const;

 private:
  std::int64_t coveredCount(const IndexBox& b) const;  // clipped, non-wrapped
  ProblemDomain domain_;
  IndexBox bounds_;
  std::vector<int> owner_;               // bounds_ raster
  std::vector<std::int64_t> prefix_;     // (nx+1)*(ny+1) inclusion sums
};

}  // namespace amrins
