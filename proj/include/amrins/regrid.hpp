#pragma once

#include <functional>

#include "amrins/hierarchy.hpp"

namespace amrins {

/// Cells flagged for refinement on one level, rasterized over the domain.
class TagSet {
 public:
  TagSet(const ProblemDomain& dom) : dom_(dom), bits_(std::size_t(dom.ncells[0]) * dom.ncells[1], 0) {}
  void set(const IntVec& i) {
    const IntVec w = dom_.wrap(i);
    if (dom_.box().contains(w)) bits_[idx(w)] = 1;
  }
  bool get(const IntVec& i) const {
    const IntVec w = dom_.wrap(i);
    return dom_.box().contains(w) && bits_[idx(w)];
  }
  bool any() const {
    for (auto b : bits_)
      if (b) return true;
    return false;
  }
  void addBox(const IndexBox& b) {
    for (int j = b.lo[1]; j <= b.hi[1]; ++j)
      for (int i = b.lo[0]; i <= b.hi[0]; ++i) set(IntVec(i, j));
  }
  const ProblemDomain& domain() const { return dom_; }

 private:
  std::size_t idx(const IntVec& w) const {
    return std::size_t(w[0]) + std::size_t(dom_.ncells[0]) * w[1];
  }
  ProblemDomain dom_;
  std::vector<std::uint8_t> bits_;
};

/// Signature-splitting clustering: disjoint boxes covering all tags with
/// fill ratio at or above the efficiency threshold where splitting allows.
std::vector<IndexBox> clusterTags(const TagSet& tags, double efficiency = 0.7,
                                  int minWidth = 2);

struct RegridPolicy {
  double efficiency = 0.7;
  int minWidth = 2;
  int nestingBuffer = 1;  // expansion of twice-coarsened boxes
};

/// Builds a new hierarchy from per-level tags (tagger(l) marks level-l cells
/// whose refinement is wanted). The level count never exceeds maxLevel+1;
/// levels whose tags are empty are dropped.
HierarchyPtr buildHierarchy(const Hierarchy& current, int maxLevel,
                            const std::function<void(int, TagSet&)>& tagger,
                            const RegridPolicy& policy);

}  // namespace amrins
