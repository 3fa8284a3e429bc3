#pragma once

#include <functional>

#include "amrins/cf_interp.hpp"
#include "amrins/stencil.hpp"

namespace amrins {

/// Process-wide interpolation tables, one per refinement ratio.
const CfiStencilTable& cfiTable(int r);

/// Per-hierarchy geometry caches used by composite operators.
class CompositeWorkspace {
 public:
  explicit CompositeWorkspace(HierarchyPtr h);
  const HierarchyPtr& hierarchy() const { return hier_; }
  const LevelIndexMap& map(int l) const { return maps_[l]; }
  FluxRegister& fluxRegister(int lCoarse) { return fluxRegs_[lCoarse]; }
  const CfiStencilTable& table() const { return *table_; }
  const std::vector<std::vector<IndexBox>>& ghostRegions(int l) const {
    return ghostRegions_[l];
  }

 private:
  HierarchyPtr hier_;
  const CfiStencilTable* table_;
  std::vector<LevelIndexMap> maps_;
  std::vector<FluxRegister> fluxRegs_;
  std::vector<std::vector<std::vector<IndexBox>>> ghostRegions_;
};

enum class CompositeOp { gradient, divergence, laplacian, convection };

/// Fills physical ghosts (and, for a slice base above level 0, the interface
/// ghosts) of one level; composite operators call it after exchange and
/// coarse-fine interpolation.
using LevelFillHook = std::function<void(LevelData&, int)>;

/// COP-1 for one level: exchange, coarse-fine interpolation from the level
/// below (absent for the slice base), then the extra hook.
void copFillLevel(CompositeWorkspace& ws, CompositeData& d, int l,
                  const LevelFillHook& extra, int lbase = -1);

/// Composite operator on levels lbase..max (lbase < 0 uses the data's own
/// base): COP-1 fills, per-level evaluation, refluxing for divergence-form
/// operators, and optionally the trailing average-down.
void compositeApply(CompositeWorkspace& ws, CompositeOp op, CompositeData& in,
                    CompositeData& out, const LevelFillHook& extra, bool cop4,
                    bool withReflux = true, int lbase = -1);

/// alpha*I + beta*L as a composite operator (reflux applies to the L part).
void compositeHelmholtz(CompositeWorkspace& ws, double alpha, double beta,
                        CompositeData& in, CompositeData& out,
                        const LevelFillHook& extra, bool cop4,
                        bool withReflux = true, int lbase = -1);

/// Enforce the redundancy relation: average every level down onto the next
/// coarser one, finest first.
void averageDownAll(CompositeData& d);

/// Max |value| over valid cells of all levels and components.
double compositeMaxAbsValid(const CompositeData& d);

}  // namespace amrins
