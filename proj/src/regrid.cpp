#include "amrins/regrid.hpp"

#include <algorithm>
#include <stdexcept>

namespace amrins {

namespace {

struct TagView {
  const TagSet* tags;
  IndexBox shrinkToTags(const IndexBox& b, std::int64_t* count) const {
    IntVec lo(INT32_MAX, INT32_MAX), hi(INT32_MIN, INT32_MIN);
    std::int64_t n = 0;
    for (int j = b.lo[1]; j <= b.hi[1]; ++j)
      for (int i = b.lo[0]; i <= b.hi[0]; ++i)
        if (tags->get(IntVec(i, j))) {
          ++n;
          lo = lo.min(IntVec(i, j));
          hi = hi.max(IntVec(i, j));
        }
    *count = n;
    return n ? IndexBox(lo, hi) : IndexBox();
  }

  void cluster(const IndexBox& scope, double eff, int minWidth,
               std::vector<IndexBox>& out, int depth) const {
    std::int64_t n = 0;
    const IndexBox b = shrinkToTags(scope, &n);
    if (n == 0) return;
    const double fill = double(n) / double(b.numCells());
    const IntVec e = b.extent();
    if (fill >= eff || (e <= minWidth).all() || depth > 64) {
      out.push_back(b);
      return;
    }
    std::array<std::vector<std::int64_t>, 2> sig;
    for (int d = 0; d < 2; ++d) sig[d].assign(e[d], 0);
    for (int j = b.lo[1]; j <= b.hi[1]; ++j)
      for (int i = b.lo[0]; i <= b.hi[0]; ++i)
        if (tags->get(IntVec(i, j))) {
          ++sig[0][i - b.lo[0]];
          ++sig[1][j - b.lo[1]];
        }
    // split at a zero-signature hole nearest the center if one exists
    int axis = -1, cut = 0;
    std::int64_t bestDist = INT64_MAX;
    for (int d = 0; d < 2; ++d)
      for (int k = minWidth; k + minWidth <= e[d]; ++k)
        if (sig[d][k] == 0) {
          const std::int64_t dist = std::abs(2 * k - e[d]);
          if (dist < bestDist) {
            bestDist = dist;
            axis = d;
            cut = k;
          }
        }
    if (axis < 0) {
      // otherwise at the steepest change of the signature curvature
      std::int64_t bestMag = -1;
      for (int d = 0; d < 2; ++d) {
        if (e[d] < 2 * minWidth + 2) continue;
        std::vector<std::int64_t> d2(e[d], 0);
        for (int k = 1; k + 1 < e[d]; ++k)
          d2[k] = sig[d][k + 1] - 2 * sig[d][k] + sig[d][k - 1];
        for (int k = minWidth; k + minWidth <= e[d] && k + 1 < e[d]; ++k) {
          const std::int64_t mag = std::abs(d2[k + 1] - d2[k]);
          if (mag > bestMag) {
            bestMag = mag;
            axis = d;
            cut = k + 1;
          }
        }
      }
    }
    if (axis < 0) {
      axis = e[0] >= e[1] ? 0 : 1;
      cut = e[axis] / 2;
      if (cut < minWidth || e[axis] - cut < minWidth) {
        out.push_back(b);
        return;
      }
    }
    IndexBox lo = b, hi = b;
    lo.hi[axis] = b.lo[axis] + cut - 1;
    hi.lo[axis] = b.lo[axis] + cut;
    cluster(lo, eff, minWidth, out, depth + 1);
    cluster(hi, eff, minWidth, out, depth + 1);
  }
};

}  // namespace

std::vector<IndexBox> clusterTags(const TagSet& tags, double efficiency,
                                  int minWidth) {
  std::vector<IndexBox> out;
  TagView v{&tags};
  v.cluster(tags.domain().box(), efficiency, minWidth, out, 0);
  return out;
}

HierarchyPtr buildHierarchy(const Hierarchy& current, int maxLevel,
                            const std::function<void(int, TagSet&)>& tagger,
                            const RegridPolicy& policy) {
  const int r = current.ratio();
  ProblemDomain dom0 = current.level(0).domain;
  auto domAt = [&](int l) {
    ProblemDomain d = dom0;
    for (int k = 0; k < l; ++k) d = d.refined(r);
    return d;
  };

  // build the finest level first, then move down adding nesting buffers
  std::vector<std::vector<IndexBox>> newBoxes(maxLevel + 1);
  for (int l = maxLevel - 1; l >= 0; --l) {
    TagSet tags(domAt(l));
    tagger(l, tags);
    if (l + 2 <= maxLevel)
      for (const IndexBox& b : newBoxes[l + 2]) {
        IndexBox cb =
            coarsenBox(coarsenBox(b, r), r).grow(policy.nestingBuffer);
        tags.addBox(cb);
      }
    if (!tags.any()) {
      newBoxes[l + 1].clear();
      continue;
    }
    auto boxes = clusterTags(tags, policy.efficiency, policy.minWidth);
    for (IndexBox& b : boxes) newBoxes[l + 1].push_back(refineBox(b, r));
  }

  int top = 0;
  for (int l = 1; l <= maxLevel; ++l)
    if (!newBoxes[l].empty()) top = l;
  std::vector<std::vector<IndexBox>> final(top + 1);
  final[0] = {dom0.box()};
  for (int l = 1; l <= top; ++l) {
    if (newBoxes[l].empty())
      throw std::runtime_error("regrid produced a hole in the level stack");
    final[l] = newBoxes[l];
  }
  auto h = std::make_shared<Hierarchy>(current.spacing(0), dom0, r,
                                       std::move(final), current.origin());
  if (auto v = h->validate())
    throw std::runtime_error("regrid produced an invalid hierarchy: " +
                             v->what + " at level " + std::to_string(v->level) +
                             " (" + v->detail + ")");
  return h;
}

}  // namespace amrins
