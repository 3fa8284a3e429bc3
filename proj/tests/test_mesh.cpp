#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <sstream>

#include "amrins/hierarchy.hpp"

using namespace amrins;

namespace {
HierarchyPtr makeHier(int base, std::array<bool, 2> periodic, int ratio,
                      std::vector<std::vector<IndexBox>> boxes) {
  return std::make_shared<Hierarchy>(1.0 / base,
                                     ProblemDomain{IntVec(base, base), periodic},
                                     ratio, std::move(boxes));
}
}  // namespace

TEST_CASE("coarsenIndex floors toward minus infinity") {
  CHECK(coarsenIndex(IntVec(5, 3), 2)[0] == 2);
  CHECK(coarsenIndex(IntVec(5, 3), 2)[1] == 1);
  CHECK((coarsenIndex(IntVec(0, 0), 4) == IntVec(0, 0)).all());
  CHECK(coarsenIndex(IntVec(-1, 7), 2)[0] == -1);
  CHECK(coarsenIndex(IntVec(-1, 7), 2)[1] == 3);
  CHECK(coarsenIndex1(-4, 4) == -1);
  CHECK(coarsenIndex1(-5, 4) == -2);
}

TEST_CASE("box coarsen/refine") {
  const IndexBox b(0, 0, 7, 7);
  CHECK(coarsenBox(b, 2) == IndexBox(0, 0, 3, 3));
  CHECK(refineBox(IndexBox(0, 0, 3, 3), 2) == IndexBox(0, 0, 7, 7));

  // [0,6]x[0,7] is not properly refined for r=2.
  const IndexBox c(0, 0, 6, 7);
  CHECK(refineBox(coarsenBox(c, 2), 2) == IndexBox(0, 0, 7, 7));
  CHECK(!isProperlyRefined(c, 2));
  CHECK(isProperlyRefined(b, 2));

  // coarsen(refine(b)) == b for arbitrary boxes, refine(coarsen(b)) == b for
  // properly refined ones.
  std::mt19937 rng(42);
  std::uniform_int_distribution<int> d(-20, 20);
  for (int t = 0; t < 200; ++t) {
    IntVec lo(d(rng), d(rng));
    IntVec hi = lo + IntVec(std::abs(d(rng)), std::abs(d(rng)));
    IndexBox rb(lo, hi);
    for (int r : {2, 4}) {
      CHECK(coarsenBox(refineBox(rb, r), r) == rb);
      CHECK(isProperlyRefined(refineBox(rb, r), r));
    }
  }
}

TEST_CASE("subtractBoxes partitions") {
  const IndexBox a(0, 0, 9, 9);
  auto rem = subtractBoxes(a, {IndexBox(2, 2, 5, 5), IndexBox(6, 2, 8, 4)});
  std::int64_t n = totalCells(rem);
  CHECK(n == 100 - 16 - 9);
  for (std::size_t i = 0; i < rem.size(); ++i)
    for (std::size_t j = i + 1; j < rem.size(); ++j)
      CHECK(!rem[i].intersects(rem[j]));
}

TEST_CASE("validate: single level ok, misaligned fine box flagged") {
  auto h0 = makeHier(16, {false, false}, 2, {{IndexBox(0, 0, 15, 15)}});
  CHECK(!h0->validate().has_value());

  // [0,4]x[0,7] has an incomplete sibling pair along x for r=2.
  auto h1 = makeHier(16, {false, false}, 2,
                     {{IndexBox(0, 0, 15, 15)}, {IndexBox(0, 0, 4, 7)}});
  auto v = h1->validate();
  REQUIRE(v.has_value());
  CHECK(v->what == "refinement");
  CHECK(v->level == 1);

  // [0,5]x[0,7] is aligned for r=2 but not for r=4.
  CHECK(isProperlyRefined(IndexBox(0, 0, 5, 7), 2));
  auto h4 = makeHier(16, {false, false}, 4,
                     {{IndexBox(0, 0, 15, 15)}, {IndexBox(0, 0, 5, 7)}});
  auto v4 = h4->validate();
  REQUIRE(v4.has_value());
  CHECK(v4->what == "refinement");
}

TEST_CASE("validate: nesting separation") {
  // Level 1 covers coarse [4,7]^2; a level-2 box flush against its low edge
  // has no separating level-1 cell.
  auto bad = makeHier(16, {false, false}, 2,
                      {{IndexBox(0, 0, 15, 15)},
                       {refineBox(IndexBox(4, 4, 7, 7), 2)},
                       {refineBox(IndexBox(8, 8, 9, 9), 2)}});
  auto v = bad->validate();
  REQUIRE(v.has_value());
  CHECK(v->what == "nesting");
  CHECK(v->level == 2);

  auto good = makeHier(16, {false, false}, 2,
                       {{IndexBox(0, 0, 15, 15)},
                        {refineBox(IndexBox(4, 4, 7, 7), 2)},
                        {refineBox(IndexBox(10, 10, 11, 11), 2)}});
  CHECK(!good->validate().has_value());

  // At a physical boundary no separation is required.
  auto corner = makeHier(16, {false, false}, 2,
                         {{IndexBox(0, 0, 15, 15)},
                          {refineBox(IndexBox(0, 0, 3, 3), 2)},
                          {refineBox(IndexBox(0, 0, 1, 1), 2)}});
  CHECK(!corner->validate().has_value());
}

TEST_CASE("validate: overlap and cover") {
  auto h = makeHier(8, {false, false}, 2,
                    {{IndexBox(0, 0, 7, 3), IndexBox(0, 2, 7, 7)}});
  auto v = h->validate();
  REQUIRE(v.has_value());
  CHECK(v->what == "disjoint");

  auto h2 = makeHier(8, {false, false}, 2, {{IndexBox(0, 0, 7, 3)}});
  auto v2 = h2->validate();
  REQUIRE(v2.has_value());
  CHECK(v2->what == "cover");
}

TEST_CASE("validRegion counts") {
  auto h = makeHier(64, {false, false}, 2,
                    {{IndexBox(0, 0, 63, 63)},
                     {refineBox(IndexBox(16, 16, 47, 47), 2)}});
  CHECK(totalCells(h->validRegion(0)) == 64 * 64 - 32 * 32);
  CHECK(totalCells(h->validRegion(1)) == 64 * 64);  // finest: all cells
  auto h1 = makeHier(64, {false, false}, 2, {{IndexBox(0, 0, 63, 63)}});
  CHECK(totalCells(h1->validRegion(0)) == 64 * 64);
}

TEST_CASE("classifyBoundaryFaces") {
  FaceSet ifc, phy;
  auto h = makeHier(16, {false, false}, 2,
                    {{IndexBox(0, 0, 15, 15)},
                     {refineBox(IndexBox(4, 4, 7, 7), 2),
                      refineBox(IndexBox(0, 6, 1, 9), 2)}});
  h->classifyBoundaryFaces(0, ifc, phy);
  CHECK(ifc.empty());
  CHECK(phy.size() == 4 * 16);

  h->classifyBoundaryFaces(1, ifc, phy);
  // interior 8x8 box: 32 interface faces; wall box 4x8: its x-lo side is
  // physical (8 faces), the rest interface.
  CHECK(phy.size() == 8);
  CHECK(ifc.size() == 32 + (8 + 4 + 4));
  for (const Face& f : phy) CHECK(f.axis == 0);
}

TEST_CASE("classifyBoundaryFaces periodic: no physical faces") {
  FaceSet ifc, phy;
  auto h = makeHier(16, {true, true}, 2,
                    {{IndexBox(0, 0, 15, 15)},
                     {refineBox(IndexBox(0, 0, 3, 3), 2)}});
  h->classifyBoundaryFaces(0, ifc, phy);
  CHECK(ifc.empty());
  CHECK(phy.empty());
  h->classifyBoundaryFaces(1, ifc, phy);
  CHECK(phy.empty());
  CHECK(ifc.size() == 32);
}

TEST_CASE("connectedComponents") {
  // Two boxes sharing only a corner: two components.
  auto h = makeHier(16, {false, false}, 2,
                    {{IndexBox(0, 0, 15, 15)},
                     {refineBox(IndexBox(2, 2, 3, 3), 2),
                      refineBox(IndexBox(4, 4, 5, 5), 2)}});
  CHECK(h->connectedComponents(1).size() == 2);
  CHECK(h->connectedComponents(0).size() == 1);

  // Face-adjacent boxes: one component.
  auto h2 = makeHier(16, {false, false}, 2,
                     {{IndexBox(0, 0, 15, 15)},
                      {refineBox(IndexBox(2, 2, 3, 3), 2),
                       refineBox(IndexBox(4, 2, 5, 3), 2)}});
  CHECK(h2->connectedComponents(1).size() == 1);

  // Wrap across a periodic seam joins components.
  auto h3 = makeHier(16, {true, false}, 2,
                     {{IndexBox(0, 0, 15, 15)},
                      {refineBox(IndexBox(0, 4, 1, 5), 2),
                       refineBox(IndexBox(14, 4, 15, 5), 2)}});
  CHECK(h3->connectedComponents(1).size() == 1);
}

TEST_CASE("serialization round trip") {
  auto h = makeHier(32, {true, false}, 4,
                    {{IndexBox(0, 0, 31, 31)},
                     {refineBox(IndexBox(3, 4, 10, 12), 4),
                      refineBox(IndexBox(20, 20, 23, 27), 4)}});
  std::stringstream ss;
  h->serialize(ss);
  auto h2 = Hierarchy::deserialize(ss, h->origin(), h->spacing(0), {true, false});
  CHECK(h2->ratio() == 4);
  CHECK(h2->maxLevel() == 1);
  REQUIRE(h2->level(1).boxes.size() == 2);
  CHECK(h2->level(1).boxes[1] == h->level(1).boxes[1]);
}

TEST_CASE("LevelIndexMap queries") {
  Level lev;
  lev.domain = ProblemDomain{IntVec(16, 16), {true, false}};
  lev.boxes = {IndexBox(0, 2, 3, 5), IndexBox(12, 2, 15, 5)};
  LevelIndexMap m(lev);
  CHECK(m.owner(IntVec(1, 3)) == 0);
  CHECK(m.owner(IntVec(-2, 3)) == 1);  // wraps to 14
  CHECK(m.owner(IntVec(5, 3)) == -1);
  CHECK(m.rectangleCovered(IndexBox(-2, 2, 1, 4)));   // spans the seam
  CHECK(!m.rectangleCovered(IndexBox(-2, 1, 1, 4)));  // y=1 uncovered
}
