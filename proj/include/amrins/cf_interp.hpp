#pragma once

#include <Eigen/Core>
#include <functional>
#include <map>
#include <vector>

#include "amrins/level_data.hpp"

namespace amrins {

/// Fifth-order conservative coarse-to-fine interpolation weights.
///
/// Each fine value is a fixed linear combination of a 5x5 neighborhood of
/// coarse cell averages. Weights come from fitting a total-degree-4
/// polynomial by least squares, constrained to reproduce the host coarse
/// cell's average exactly; the per-coarse-cell conservation defect is then
/// distributed equally among the r^D children so that averaging the fine
/// values back recovers the coarse data to roundoff. Footprints shift by up
/// to maxShift cells per axis where the centered neighborhood is not
/// available (physical boundaries, region edges).
class CfiStencilTable {
 public:
  CfiStencilTable() = default;
  explicit CfiStencilTable(int r, int maxShift = 2);

  int ratio() const { return r_; }
  int maxShift() const { return maxShift_; }

  /// Weight row over the footprint cells host+s+k, k in [-2,2]^2, ordered
  /// k-major (index (ky+2)*5 + (kx+2)), for the fine child at position
  /// f in [0,r)^2 of its host.
  const Eigen::RowVectorXd& row(const IntVec& s, const IntVec& f) const;

  /// Shift candidates in deterministic near-to-far order.
  const std::vector<IntVec>& shiftOrder() const { return shiftOrder_; }

 private:
  int r_ = 0, maxShift_ = 0;
  // [shift linear index][fine position linear index] -> 25 weights
  std::vector<std::vector<Eigen::RowVectorXd>> rows_;
  std::vector<IntVec> shiftOrder_;
  int shiftIndex(const IntVec& s) const {
    return (s[1] + maxShift_) * (2 * maxShift_ + 1) + (s[0] + maxShift_);
  }
};

/// Fetches level data by lattice index across box boundaries, wrapping on
/// periodic axes. Ghost cells of the union are reachable when `useGhosts`
/// and the index lies in some box's ghost ring.
class LevelAccessor {
 public:
  LevelAccessor(const LevelData& d, const LevelIndexMap& map, bool useGhosts)
      : d_(&d), map_(&map), useGhosts_(useGhosts) {}
  double operator()(const IntVec& i, int comp) const;

 private:
  const LevelData* d_;
  const LevelIndexMap* map_;
  bool useGhosts_;
};

/// Interpolate coarse data to the given fine cells, calling
/// sink(fineIndex, comp, value). Footprints are shifted to stay inside the
/// coarse source region; throws if no admissible shift exists.
void cfiInterpolate(
    const CfiStencilTable& tab, const LevelData& coarse,
    const LevelIndexMap& sourceRegion, const std::vector<IndexBox>& fineTargets,
    const std::function<void(const IntVec&, int, double)>& sink);

/// Fill the interior of `fine` on the given target boxes from `coarse`.
void cfiFillBoxes(const CfiStencilTable& tab, const LevelData& coarse,
                  const LevelIndexMap& sourceRegion, LevelData& fine,
                  const std::vector<IndexBox>& targets);

/// In-domain ghost cells of level-l boxes not covered by the same level;
/// these are the cells interpolated across the coarse-fine interface.
std::vector<std::vector<IndexBox>> interfaceGhostRegions(const Hierarchy& h,
                                                         int l, int width);

/// Per box side, 1 where the face lies on the level's coarse-fine interface
/// (not shared with a sibling box and not on a physical wall).
std::vector<std::array<std::vector<std::uint8_t>, 4>> interfaceFaceMasks(
    const Hierarchy& h, int l);

/// Fill the interface ghost cells of `fine` from `coarse` (COP-1 fill).
void cfiFillInterfaceGhosts(const CfiStencilTable& tab, const LevelData& coarse,
                            LevelData& fine);

/// Coarse-side flux correction at the coarse-fine interface: replaces the
/// coarse flux on each interface face by the area average of the overlying
/// fine fluxes inside a divergence-form operator result.
class FluxRegister {
 public:
  FluxRegister() = default;
  /// Geometry for the interface between lCoarse and lCoarse+1.
  FluxRegister(HierarchyPtr h, int lCoarse);

  void clear();
  /// Record coarse fluxes for the registered faces (call after evaluating
  /// the coarse-level operator).
  void setCoarseFlux(const std::array<FaceData, 2>& flux, int ncomp);
  /// Accumulate area-averaged fine fluxes over the registered faces.
  void addFineFlux(const std::array<FaceData, 2>& flux, int ncomp);
  /// Apply (avgFine - coarse)/h corrections to the adjacent coarse cells.
  void apply(LevelData& coarseData) const;

  bool empty() const { return faces_.empty(); }

 private:
  struct Entry {
    int coarseBox;     // box owning the adjacent valid coarse cell
    IntVec cell;       // that cell (lattice index, possibly wrapped)
    int axis;
    bool fineOnHigh;   // fine region beyond the cell's high face?
    IntVec coarseFace; // face index on the coarse box (low-face convention)
    int fineBox;
    IntVec fineFace0;  // first of r fine faces (low-face convention)
    std::vector<double> coarse, fineSum;  // per component
  };
  HierarchyPtr hier_;
  int lc_ = -1;
  std::vector<Entry> faces_;
  int ncomp_ = 0;
};

}  // namespace amrins
