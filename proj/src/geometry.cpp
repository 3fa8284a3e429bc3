#include "amrins/geometry.hpp"

namespace amrins {

std::vector<IndexBox> subtractBox(const IndexBox& a, const IndexBox& b) {
  std::vector<IndexBox> out;
  const IndexBox c = a.intersect(b);
  if (c.empty()) {
    if (!a.empty()) out.push_back(a);
    return out;
  }
  // Slabs below/above along y, then left/right strips at c's y-range.
  if (a.lo[1] < c.lo[1])
    out.emplace_back(IntVec(a.lo[0], a.lo[1]), IntVec(a.hi[0], c.lo[1] - 1));
  if (c.hi[1] < a.hi[1])
    out.emplace_back(IntVec(a.lo[0], c.hi[1] + 1), IntVec(a.hi[0], a.hi[1]));
  if (a.lo[0] < c.lo[0])
    out.emplace_back(IntVec(a.lo[0], c.lo[1]), IntVec(c.lo[0] - 1, c.hi[1]));
  if (c.hi[0] < a.hi[0])
    out.emplace_back(IntVec(c.hi[0] + 1, c.lo[1]), IntVec(a.hi[0], c.hi[1]));
  return out;
}

std::vector<IndexBox> subtractBoxes(const IndexBox& a,
                                    const std::vector<IndexBox>& bs) {
  std::vector<IndexBox> cur{a};
  if (a.empty()) return {};
  for (const IndexBox& b : bs) {
    std::vector<IndexBox> next;
    for (const IndexBox& piece : cur) {
      auto rem = subtractBox(piece, b);
      next.insert(next.end(), rem.begin(), rem.end());
    }
    cur.swap(next);
    if (cur.empty()) break;
  }
  return cur;
}

std::int64_t totalCells(const std::vector<IndexBox>& bs) {
  std::int64_t n = 0;
  for (const auto& b : bs) n += b.numCells();
  return n;
}

}  // namespace amrins
