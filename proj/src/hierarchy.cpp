#include "amrins/hierarchy.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <queue>
#include <sstream>
#include <stdexcept>

namespace amrins {

Hierarchy::Hierarchy(double h0, const ProblemDomain& base, int ratio,
                     std::vector<std::vector<IndexBox>> levelBoxes,
                     const RealVec& origin)
    : h0_(h0), ratio_(ratio), origin_(origin) {
  if (levelBoxes.empty()) throw std::invalid_argument("hierarchy needs level 0");
  if (ratio != 2 && ratio != 4) throw std::invalid_argument("ratio must be 2 or 4");
  double h = h0;
  ProblemDomain dom = base;
  for (std::size_t l = 0; l < levelBoxes.size(); ++l) {
    Level lev;
    lev.index = int(l);
    lev.spacing = h;
    lev.domain = dom;
    lev.boxes = std::move(levelBoxes[l]);
    levels_.push_back(std::move(lev));
    h /= ratio;
    dom = dom.refined(ratio);
  }
}

std::vector<IndexBox> Hierarchy::invalidRegion(int l) const {
  std::vector<IndexBox> inv;
  if (l + 1 <= maxLevel())
    for (const IndexBox& fb : levels_[l + 1].boxes)
      inv.push_back(coarsenBox(fb, ratio_));
  return inv;
}

std::vector<IndexBox> Hierarchy::validRegion(int l) const {
  const auto inv = invalidRegion(l);
  std::vector<IndexBox> out;
  for (const IndexBox& b : levels_[l].boxes) {
    auto rem = subtractBoxes(b, inv);
    out.insert(out.end(), rem.begin(), rem.end());
  }
  return out;
}

void Hierarchy::classifyBoundaryFaces(int l, FaceSet& interface,
                                      FaceSet& physical) const {
  interface.clear();
  physical.clear();
  const Level& lev = levels_[l];
  LevelIndexMap map(lev);
  for (const IndexBox& b : lev.boxes) {
    for (int side = 0; side < 2 * kDim; ++side) {
      const int axis = side / 2;
      const bool high = side % 2 == 1;
      const IndexBox strip = b.adjacentOutside(side);
      const bool onDomainEdge =
          high ? (b.hi[axis] == lev.domain.ncells[axis] - 1) : (b.lo[axis] == 0);
      const bool phys = onDomainEdge && !lev.domain.periodic[axis];
      for (int j = strip.lo[1]; j <= strip.hi[1]; ++j)
        for (int i = strip.lo[0]; i <= strip.hi[0]; ++i) {
          const IntVec outside(i, j);
          if (!phys && map.covered(outside)) continue;  // interior face
          IntVec cell = outside;
          cell[axis] += high ? -1 : 1;  // owning cell inside the box
          Face f{cell, axis, high};
          (phys ? physical : interface).push_back(f);
        }
    }
  }
}

std::vector<std::vector<int>> Hierarchy::connectedComponents(int l) const {
  const auto& boxes = levels_[l].boxes;
  const ProblemDomain& dom = levels_[l].domain;
  const int n = int(boxes.size());
  std::vector<std::vector<int>> adj(n);

  std::vector<IntVec> shifts{IntVec(0, 0)};
  for (int d = 0; d < kDim; ++d)
    if (dom.periodic[d]) {
      auto prev = shifts;
      for (auto s : prev) {
        IntVec p = s, m = s;
        p[d] += dom.ncells[d];
        m[d] -= dom.ncells[d];
        shifts.push_back(p);
        shifts.push_back(m);
      }
    }

  auto faceAdjacent = [](const IndexBox& a, const IndexBox& b) {
    for (int d = 0; d < kDim; ++d) {
      const int t = 1 - d;
      const bool touch = (a.hi[d] + 1 == b.lo[d]) || (b.hi[d] + 1 == a.lo[d]);
      const bool overlap =
          std::min(a.hi[t], b.hi[t]) >= std::max(a.lo[t], b.lo[t]);
      if (touch && overlap) return true;
    }
    return false;
  };

  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      for (const IntVec& s : shifts)
        if (faceAdjacent(boxes[i], boxes[j].shift(s))) {
          adj[i].push_back(j);
          adj[j].push_back(i);
          break;
        }

  std::vector<int> comp(n, -1);
  std::vector<std::vector<int>> groups;
  for (int i = 0; i < n; ++i) {
    if (comp[i] >= 0) continue;
    const int c = int(groups.size());
    groups.emplace_back();
    std::queue<int> q;
    q.push(i);
    comp[i] = c;
    while (!q.empty()) {
      int v = q.front();
      q.pop();
      groups[c].push_back(v);
      for (int w : adj[v])
        if (comp[w] < 0) {
          comp[w] = c;
          q.push(w);
        }
    }
  }
  return groups;
}

namespace {
std::string boxStr(const IndexBox& b) {
  std::ostringstream os;
  os << "[" << b.lo[0] << "," << b.lo[1] << "]-[" << b.hi[0] << "," << b.hi[1]
     << "]";
  return os.str();
}

// Split a rectangle into in-domain pieces, wrapping periodic axes.
// Returns false if some cell can never be wrapped inside.
bool wrapPieces(const IndexBox& b, const ProblemDomain& dom,
                std::vector<IndexBox>& pieces) {
  pieces.assign(1, b);
  for (int d = 0; d < kDim; ++d) {
    std::vector<IndexBox> next;
    const int n = dom.ncells[d];
    for (IndexBox p : pieces) {
      if (!dom.periodic[d]) {
        if (p.lo[d] < 0 || p.hi[d] > n - 1) return false;
        next.push_back(p);
        continue;
      }
      if (p.extent()[d] >= n) {  // covers the whole axis
        p.lo[d] = 0;
        p.hi[d] = n - 1;
        next.push_back(p);
        continue;
      }
      int lo = p.lo[d] % n;
      if (lo < 0) lo += n;
      const int len = p.extent()[d];
      if (lo + len - 1 <= n - 1) {
        p.lo[d] = lo;
        p.hi[d] = lo + len - 1;
        next.push_back(p);
      } else {
        IndexBox a = p, c = p;
        a.lo[d] = lo;
        a.hi[d] = n - 1;
        c.lo[d] = 0;
        c.hi[d] = lo + len - 1 - n;
        next.push_back(a);
        next.push_back(c);
      }
    }
    pieces.swap(next);
  }
  return true;
}
}  // namespace

std::optional<HierarchyViolation> Hierarchy::validate() const {
  // Level 0 covers the base domain.
  {
    auto rem = subtractBoxes(levels_[0].domain.box(), levels_[0].boxes);
    if (!rem.empty())
      return HierarchyViolation{"cover", 0, -1,
                                "level 0 leaves " + boxStr(rem[0]) + " uncovered"};
  }
  for (int l = 0; l <= maxLevel(); ++l) {
    const Level& lev = levels_[l];
    for (std::size_t k = 0; k < lev.boxes.size(); ++k) {
      const IndexBox& b = lev.boxes[k];
      if (b.empty())
        return HierarchyViolation{"disjoint", l, int(k), "empty box"};
      if (!lev.domain.box().contains(b))
        return HierarchyViolation{"embedding", l, int(k),
                                  boxStr(b) + " exits the level domain"};
      if (l > 0 && !isProperlyRefined(b, ratio_))
        return HierarchyViolation{
            "refinement", l, int(k),
            boxStr(b) + " is not aligned to the refinement ratio"};
      for (std::size_t j = k + 1; j < lev.boxes.size(); ++j)
        if (b.intersects(lev.boxes[j]))
          return HierarchyViolation{"disjoint", l, int(k),
                                    boxStr(b) + " overlaps " +
                                        boxStr(lev.boxes[j])};
    }
  }
  // Embedding and one-cell nesting separation against the next coarser level.
  for (int l = 1; l <= maxLevel(); ++l) {
    LevelIndexMap coarse(levels_[l - 1]);
    for (std::size_t k = 0; k < levels_[l].boxes.size(); ++k) {
      const IndexBox cb = coarsenBox(levels_[l].boxes[k], ratio_);
      std::vector<IndexBox> pieces;
      if (!wrapPieces(cb, levels_[l - 1].domain, pieces))
        return HierarchyViolation{"embedding", l, int(k),
                                  "box exits the coarser subdomain"};
      for (const auto& p : pieces)
        if (!coarse.rectangleCovered(p))
          return HierarchyViolation{"embedding", l, int(k),
                                    "box not embedded in the coarser subdomain"};
      // One separating coarse cell along any direction, except where the
      // fine box meets the physical domain boundary.
      IndexBox grown = cb.grow(1);
      const ProblemDomain& cdom = levels_[l - 1].domain;
      for (int d = 0; d < kDim; ++d)
        if (!cdom.periodic[d]) {
          grown.lo[d] = std::max(grown.lo[d], 0);
          grown.hi[d] = std::min(grown.hi[d], cdom.ncells[d] - 1);
        }
      if (!wrapPieces(grown, cdom, pieces))
        return HierarchyViolation{"nesting", l, int(k),
                                  "separation region exits the domain"};
      for (const auto& p : pieces)
        if (!coarse.rectangleCovered(p))
          return HierarchyViolation{
              "nesting", l, int(k),
              boxStr(levels_[l].boxes[k]) + " lacks a separating coarse cell"};
    }
  }
  return std::nullopt;
}

void Hierarchy::serialize(std::ostream& os) const {
  os << "amr-hierarchy\n";
  os << "ratio " << ratio_ << "\n";
  os << "base " << levels_[0].domain.ncells[0] << " "
     << levels_[0].domain.ncells[1] << "\n";
  os << "levels " << numLevels() << "\n";
  for (const Level& lev : levels_) {
    os << "level " << lev.index << " boxes " << lev.boxes.size() << "\n";
    for (const IndexBox& b : lev.boxes)
      os << b.lo[0] << " " << b.lo[1] << " " << b.hi[0] << " " << b.hi[1]
         << "\n";
  }
}

std::shared_ptr<const Hierarchy> Hierarchy::deserialize(
    std::istream& is, const RealVec& origin, double h0,
    std::array<bool, 2> periodic) {
  std::string tag;
  is >> tag;
  if (tag != "amr-hierarchy") throw std::runtime_error("bad hierarchy header");
  int ratio = 0, nlev = 0;
  IntVec base;
  is >> tag >> ratio;          // ratio r
  is >> tag >> base[0] >> base[1];
  is >> tag >> nlev;
  std::vector<std::vector<IndexBox>> boxes(nlev);
  for (int l = 0; l < nlev; ++l) {
    int idx = 0;
    std::size_t nb = 0;
    is >> tag >> idx >> tag >> nb;
    boxes[l].resize(nb);
    for (auto& b : boxes[l])
      is >> b.lo[0] >> b.lo[1] >> b.hi[0] >> b.hi[1];
  }
  if (!is) throw std::runtime_error("truncated hierarchy file");
  return std::make_shared<Hierarchy>(h0, ProblemDomain{base, periodic}, ratio,
                                     std::move(boxes), origin);
}

LevelIndexMap::LevelIndexMap(const Level& level) : domain_(level.domain) {
  if (level.boxes.empty()) {
    bounds_ = IndexBox();
    return;
  }
  bounds_ = level.boxes[0];
  for (const auto& b : level.boxes) {
    bounds_.lo = bounds_.lo.min(b.lo);
    bounds_.hi = bounds_.hi.max(b.hi);
  }
  const IntVec e = bounds_.extent();
  owner_.assign(std::size_t(e[0]) * e[1], -1);
  for (std::size_t k = 0; k < level.boxes.size(); ++k) {
    const IndexBox& b = level.boxes[k];
    for (int j = b.lo[1]; j <= b.hi[1]; ++j)
      for (int i = b.lo[0]; i <= b.hi[0]; ++i)
        owner_[std::size_t(i - bounds_.lo[0]) +
               std::size_t(e[0]) * (j - bounds_.lo[1])] = int(k);
  }
  prefix_.assign(std::size_t(e[0] + 1) * (e[1] + 1), 0);
  for (int j = 0; j < e[1]; ++j)
    for (int i = 0; i < e[0]; ++i) {
      const std::int64_t c = owner_[std::size_t(i) + std::size_t(e[0]) * j] >= 0;
      prefix_[std::size_t(i + 1) + std::size_t(e[0] + 1) * (j + 1)] =
          c + prefix_[std::size_t(i) + std::size_t(e[0] + 1) * (j + 1)] +
          prefix_[std::size_t(i + 1) + std::size_t(e[0] + 1) * j] -
          prefix_[std::size_t(i) + std::size_t(e[0] + 1) * j];
    }
}

int LevelIndexMap::owner(const IntVec& i) const {
  if (owner_.empty()) return -1;
  const IntVec w = domain_.wrap(i);
  if (!bounds_.contains(w)) return -1;
  const IntVec e = bounds_.extent();
  return owner_[std::size_t(w[0] - bounds_.lo[0]) +
                std::size_t(e[0]) * (w[1] - bounds_.lo[1])];
}

std::int64_t LevelIndexMap::coveredCount(const IndexBox& q) const {
  const IndexBox c = q.intersect(bounds_);
  if (c.empty()) return 0;
  const IntVec e = bounds_.extent();
  auto P = [&](int i, int j) {
    return prefix_[std::size_t(i - bounds_.lo[0]) +
                   std::size_t(e[0] + 1) * (j - bounds_.lo[1])];
  };
  return P(c.hi[0] + 1, c.hi[1] + 1) - P(c.lo[0], c.hi[1] + 1) -
         P(c.hi[0] + 1, c.lo[1]) + P(c.lo[0], c.lo[1]);
}

bool LevelIndexMap::rectangleCovered(const IndexBox& b) const {
  if (b.empty()) return true;
  if (owner_.empty()) return false;
  std::vector<IndexBox> pieces;
  if (!wrapPieces(b, domain_, pieces)) return false;
  for (const auto& p : pieces)
    if (coveredCount(p) != p.numCells()) return false;
  return true;
}

}  // namespace amrins
