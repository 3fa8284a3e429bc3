#include "amrins/multigrid.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <unsupported/Eigen/IterativeSolvers>

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace amrins {

SolveLog& SolveLog::instance() {
  static SolveLog log;
  return log;
}

namespace {
const char* kindName(SystemKind k) {
  switch (k) {
    case SystemKind::poisson_neumann: return "poisson_neumann";
    case SystemKind::helmholtz: return "helmholtz";
    case SystemKind::projection_poisson: return "projection_poisson";
  }
  return "unknown";
}
void logSolve(SystemKind k, int lo, int hi, const SolveStatus& st,
              double wall) {
  if (!SolveLog::instance().enabled()) return;
  SolveLogRow r;
  r.kind = kindName(k);
  r.levelLo = lo;
  r.levelHi = hi;
  r.cycles = st.cycles;
  r.relResidual = st.relResidual;
  r.wallSeconds = wall;
  SolveLog::instance().add(r);
}
}  // namespace

std::vector<double> projectNullspace(
    LevelData& rhs, const std::vector<std::vector<int>>& comps) {
  std::vector<double> offsets;
  for (const auto& comp : comps) {
    double sum = 0.0;
    std::int64_t n = 0;
    for (int b : comp) {
      const IndexBox& bx = rhs.box(b);
      const int g = rhs.ghost();
      const IntVec e = bx.extent();
      sum += rhs.arr(b, 0).block(g, g, e[0], e[1]).sum();
      n += bx.numCells();
    }
    const double mean = n ? sum / double(n) : 0.0;
    for (int b : comp) {
      const IndexBox& bx = rhs.box(b);
      const int g = rhs.ghost();
      const IntVec e = bx.extent();
      rhs.arr(b, 0).block(g, g, e[0], e[1]) -= mean;
    }
    offsets.push_back(mean);
  }
  return offsets;
}

Eigen::VectorXd gmresIluSolve(const Eigen::SparseMatrix<double>& A,
                              const Eigen::VectorXd& rhs, int m, double tol,
                              int* iters) {
  Eigen::GMRES<Eigen::SparseMatrix<double>, Eigen::IncompleteLUT<double>> gm;
  gm.set_restart(m);
  gm.setMaxIterations(m * 60);
  gm.setTolerance(tol);
  gm.compute(A);
  Eigen::VectorXd x = gm.solve(rhs);
  if (iters) *iters = int(gm.iterations());
  return x;
}

namespace {

double interiorL2(const LevelData& d) {
  double s = 0;
  const int g = d.ghost();
  for (int b = 0; b < d.numBoxes(); ++b) {
    const IntVec e = d.box(b).extent();
    for (int c = 0; c < d.ncomp(); ++c)
      s += d.arr(b, c).block(g, g, e[0], e[1]).square().sum();
  }
  return std::sqrt(s);
}

void interiorAxpy(LevelData& y, double a, const LevelData& x) {
  const int g = y.ghost();
  for (int b = 0; b < y.numBoxes(); ++b) {
    const IntVec e = y.box(b).extent();
    for (int c = 0; c < y.ncomp(); ++c)
      y.arr(b, c).block(g, g, e[0], e[1]) +=
          a * x.arr(b, c).block(g, g, e[0], e[1]);
  }
}

void interiorCopy(LevelData& y, const LevelData& x) {
  const int g = y.ghost();
  for (int b = 0; b < y.numBoxes(); ++b) {
    const IntVec e = y.box(b).extent();
    for (int c = 0; c < y.ncomp(); ++c)
      y.arr(b, c).block(g, g, e[0], e[1]) =
          x.arr(b, c).block(g, g, e[0], e[1]);
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// LevelPoissonSolver
// ---------------------------------------------------------------------------

struct LevelPoissonSolver::Impl {
  MgConfig cfg;
  LinearSystemSpec spec;

  struct Depth {
    HierarchyPtr hier;  // single-level hierarchy for this depth
    double h = 0;
    // per box, per side, per tangential face: 0 covered, 1 physical, 2 interface
    std::vector<std::array<std::vector<std::uint8_t>, 4>> cls;
    LevelData x, b, r, tmp, diag;
    std::vector<std::vector<int>> comps;
  };
  std::vector<Depth> depths;

  // bottom solver state
  bool bottomAssembled = false;
  Eigen::SparseMatrix<double> bottomA;
  std::vector<std::int64_t> boxOffset;  // cell indexing at the bottom
  std::vector<int> pinCells;

  void buildDepths(HierarchyPtr h, int level);
  void classify(Depth& d);
  void buildDiag(Depth& d);
  void fillBoundaryHom(const Depth& d, LevelData& v, bool preserveInterface);
  void fillHom(const Depth& d, LevelData& v, bool preserveInterface) {
    exchange(v);
    fillBoundaryHom(d, v, preserveInterface);
  }
  void apply(const Depth& d, LevelData& v, LevelData& out,
             bool preserveInterface) {
    fillHom(d, v, preserveInterface);
    applyHelmholtz(v, spec.alpha, spec.beta, out);
  }
  void smoothDepth(Depth& d, LevelData& x, const LevelData& b, int sweeps,
                   bool preserveInterface);
  void restrictTo(const LevelData& fineR, LevelData& coarseB);
  void prolongAdd(Depth& dc, LevelData& coarseX, LevelData& fineX);
  void vcycleDepth(std::size_t k);
  void bottomSolve(Depth& d);
  void assembleBottom(Depth& d);
  std::int64_t cellIndex(const Depth& d, int b, const IntVec& i) const;
};

void LevelPoissonSolver::Impl::buildDepths(HierarchyPtr h, int level) {
  const Level& lev = h->level(level);
  // Depth 0 mirrors the level inside a standalone single-level hierarchy.
  auto mk = [&](double hh, const ProblemDomain& dom,
                std::vector<IndexBox> boxes) {
    Depth d;
    d.hier = std::make_shared<Hierarchy>(hh, dom, 2,
                                         std::vector<std::vector<IndexBox>>{
                                             std::move(boxes)},
                                         h->origin());
    d.h = hh;
    d.x = LevelData(d.hier, 0, 1, 2);
    d.b = LevelData(d.hier, 0, 1, 2);
    d.r = LevelData(d.hier, 0, 1, 2);
    d.tmp = LevelData(d.hier, 0, 1, 2);
    classify(d);
    buildDiag(d);
    d.comps = d.hier->connectedComponents(0);
    return d;
  };
  depths.push_back(mk(lev.spacing, lev.domain, lev.boxes));

  while (true) {
    const Depth& cur = depths.back();
    const Level& cl = cur.hier->level(0);
    if (totalCells(cl.boxes) < cfg.bottomUnknowns) break;
    auto even = [](const IntVec& v) {
      return v[0] % 2 == 0 && v[1] % 2 == 0;
    };
    bool ok = even(cl.domain.ncells);
    std::vector<IndexBox> cb;
    for (const IndexBox& bx : cl.boxes) {
      if (!even(bx.lo) || !even(bx.extent())) ok = false;
      if (!ok) break;
      IndexBox c = coarsenBox(bx, 2);
      if ((c.extent() < cfg.minBoxDim).any()) ok = false;
      cb.push_back(c);
    }
    if (!ok) break;
    depths.push_back(mk(cur.h * 2, cl.domain.coarsened(2), std::move(cb)));
  }
}

void LevelPoissonSolver::Impl::classify(Depth& d) {
  const Level& lev = d.hier->level(0);
  LevelIndexMap map(lev);
  d.cls.resize(lev.boxes.size());
  for (std::size_t b = 0; b < lev.boxes.size(); ++b) {
    const IndexBox& bx = lev.boxes[b];
    for (int side = 0; side < 4; ++side) {
      const int axis = side / 2;
      const bool high = side % 2 == 1;
      const int tExtent = bx.extent()[1 - axis];
      auto& v = d.cls[b][side];
      v.assign(tExtent, 0);
      const bool onEdge = high ? bx.hi[axis] == lev.domain.ncells[axis] - 1
                               : bx.lo[axis] == 0;
      const bool phys = onEdge && !lev.domain.periodic[axis];
      for (int t = 0; t < tExtent; ++t) {
        if (phys) {
          v[t] = 1;
          continue;
        }
        IntVec outside = bx.lo;
        outside[1 - axis] += t;
        outside[axis] = high ? bx.hi[axis] + 1 : bx.lo[axis] - 1;
        v[t] = map.covered(outside) ? 0 : 2;
      }
    }
  }
}

void LevelPoissonSolver::Impl::buildDiag(Depth& d) {
  const Level& lev = d.hier->level(0);
  const double s = spec.beta / (12.0 * d.h * d.h);
  d.diag = LevelData(d.hier, 0, 1, 0);
  for (std::size_t b = 0; b < lev.boxes.size(); ++b) {
    d.diag.arr(int(b), 0).setConstant(spec.alpha - 60.0 * s);
    const IndexBox& bx = lev.boxes[b];
    for (int side = 0; side < 4; ++side) {
      const int axis = side / 2;
      const bool high = side % 2 == 1;
      const auto& v = d.cls[b][side];
      for (int t = 0; t < int(v.size()); ++t) {
        BcKind kind;
        if (v[t] == 1)
          kind = spec.bc[side];
        else if (v[t] == 2 && !spec.interfaceFrozen)
          kind = BcKind::neumann;
        else
          continue;  // covered or frozen: ghosts independent of this cell
        if (kind == BcKind::periodic) continue;
        double d1, d2;
        if (kind == BcKind::dirichlet) {
          d1 = -727.0 / 12.0 * s;
          d2 = -43.0 / 12.0 * s;
        } else {
          d1 = 31.0 / 2.0 * s;
          d2 = -9.0 / 10.0 * s;
        }
        IntVec c1 = bx.lo, c2 = bx.lo;
        c1[1 - axis] += t;
        c2[1 - axis] += t;
        c1[axis] = high ? bx.hi[axis] : bx.lo[axis];
        c2[axis] = high ? bx.hi[axis] - 1 : bx.lo[axis] + 1;
        d.diag.at(int(b), 0, c1) += d1;
        d.diag.at(int(b), 0, c2) += d2;
      }
    }
  }
}

void LevelPoissonSolver::Impl::fillBoundaryHom(const Depth& d, LevelData& v,
                                               bool preserveInterface) {
  for (int b = 0; b < v.numBoxes(); ++b)
    for (int side = 0; side < 4; ++side) {
      const auto& cls = d.cls[b][side];
      std::vector<std::uint8_t> m1(cls.size()), m2(cls.size());
      bool any1 = false, any2 = false;
      for (std::size_t t = 0; t < cls.size(); ++t) {
        m1[t] = cls[t] == 1;
        m2[t] = cls[t] == 2;
        any1 |= m1[t];
        any2 |= m2[t];
      }
      if (any1 && spec.bc[side] != BcKind::periodic)
        fillGhostLinesMasked(v, 0, b, side, m1, spec.bc[side], nullptr);
      if (any2 && !preserveInterface) {
        if (spec.interfaceFrozen)
          zeroGhostLinesMasked(v, 0, b, side, m2);
        else
          fillGhostLinesMasked(v, 0, b, side, m2, BcKind::neumann, nullptr);
      }
    }
}

void LevelPoissonSolver::Impl::smoothDepth(Depth& d, LevelData& x,
                                           const LevelData& b, int sweeps,
                                           bool preserveInterface) {
  for (int k = 0; k < sweeps; ++k) {
    apply(d, x, d.tmp, preserveInterface);
    const int g = x.ghost(), gt = d.tmp.ghost(), gb = b.ghost();
    for (int bx = 0; bx < x.numBoxes(); ++bx) {
      const IntVec e = x.box(bx).extent();
      x.arr(bx, 0).block(g, g, e[0], e[1]) +=
          cfg.omega *
          (b.arr(bx, 0).block(gb, gb, e[0], e[1]) -
           d.tmp.arr(bx, 0).block(gt, gt, e[0], e[1])) /
          d.diag.arr(bx, 0);
    }
  }
}

void LevelPoissonSolver::Impl::restrictTo(const LevelData& fineR,
                                          LevelData& coarseB) {
  for (int b = 0; b < coarseB.numBoxes(); ++b) {
    const IndexBox& cb = coarseB.box(b);
    for (int j = cb.lo[1]; j <= cb.hi[1]; ++j)
      for (int i = cb.lo[0]; i <= cb.hi[0]; ++i) {
        double s = 0;
        for (int jj = 0; jj < 2; ++jj)
          for (int ii = 0; ii < 2; ++ii)
            s += fineR.at(b, 0, IntVec(2 * i + ii, 2 * j + jj));
        coarseB.at(b, 0, IntVec(i, j)) = 0.25 * s;
      }
  }
}

void LevelPoissonSolver::Impl::prolongAdd(Depth& dc, LevelData& coarseX,
                                          LevelData& fineX) {
  fillHom(dc, coarseX, false);
  for (int b = 0; b < fineX.numBoxes(); ++b) {
    const IndexBox& fb = fineX.box(b);
    for (int j = fb.lo[1]; j <= fb.hi[1]; ++j)
      for (int i = fb.lo[0]; i <= fb.hi[0]; ++i) {
        const int ic = coarsenIndex1(i, 2), jc = coarsenIndex1(j, 2);
        const int sx = (i - 2 * ic) ? 1 : -1, sy = (j - 2 * jc) ? 1 : -1;
        const double v =
            (9 * coarseX.at(b, 0, IntVec(ic, jc)) +
             3 * coarseX.at(b, 0, IntVec(ic + sx, jc)) +
             3 * coarseX.at(b, 0, IntVec(ic, jc + sy)) +
             coarseX.at(b, 0, IntVec(ic + sx, jc + sy))) /
            16.0;
        fineX.at(b, 0, IntVec(i, j)) += v;
      }
  }
}

void LevelPoissonSolver::Impl::vcycleDepth(std::size_t k) {
  Depth& d = depths[k];
  if (k + 1 == depths.size()) {
    bottomSolve(d);
    return;
  }
  smoothDepth(d, d.x, d.b, cfg.preSmooth, false);
  apply(d, d.x, d.tmp, false);
  const int g = 2;
  for (int b = 0; b < d.r.numBoxes(); ++b) {
    const IntVec e = d.r.box(b).extent();
    d.r.arr(b, 0).block(g, g, e[0], e[1]) =
        d.b.arr(b, 0).block(g, g, e[0], e[1]) -
        d.tmp.arr(b, 0).block(g, g, e[0], e[1]);
  }
  Depth& dc = depths[k + 1];
  restrictTo(d.r, dc.b);
  dc.x.setZero();
  vcycleDepth(k + 1);
  prolongAdd(dc, dc.x, d.x);
  smoothDepth(d, d.x, d.b, cfg.postSmooth, false);
}

std::int64_t LevelPoissonSolver::Impl::cellIndex(const Depth& d, int b,
                                                 const IntVec& i) const {
  const IndexBox& bx = d.hier->level(0).boxes[b];
  const IntVec e = bx.extent();
  return boxOffset[b] + (i[0] - bx.lo[0]) +
         std::int64_t(e[0]) * (i[1] - bx.lo[1]);
}

void LevelPoissonSolver::Impl::assembleBottom(Depth& d) {
  const Level& lev = d.hier->level(0);
  boxOffset.assign(lev.boxes.size() + 1, 0);
  for (std::size_t b = 0; b < lev.boxes.size(); ++b)
    boxOffset[b + 1] = boxOffset[b] + lev.boxes[b].numCells();
  const std::int64_t n = boxOffset.back();

  pinCells.clear();
  if (spec.nullspaced())
    for (const auto& comp : d.comps)
      pinCells.push_back(int(cellIndex(d, comp[0], lev.boxes[comp[0]].lo)));

  std::vector<Eigen::Triplet<double>> trips;
  LevelData& e = d.x;
  LevelData& Ae = d.tmp;
  for (std::int64_t col = 0; col < n; ++col) {
    e.setZero();
    // locate the cell for this column
    int bcol = 0;
    while (boxOffset[bcol + 1] <= col) ++bcol;
    const IndexBox& bx = lev.boxes[bcol];
    const std::int64_t off = col - boxOffset[bcol];
    const IntVec cell(bx.lo[0] + int(off % bx.extent()[0]),
                      bx.lo[1] + int(off / bx.extent()[0]));
    e.at(bcol, 0, cell) = 1.0;
    apply(d, e, Ae, false);
    for (int b = 0; b < Ae.numBoxes(); ++b) {
      const IndexBox& rb = Ae.box(b);
      for (int j = rb.lo[1]; j <= rb.hi[1]; ++j)
        for (int i = rb.lo[0]; i <= rb.hi[0]; ++i) {
          const double v = Ae.at(b, 0, IntVec(i, j));
          if (v == 0.0) continue;
          const std::int64_t row = cellIndex(d, b, IntVec(i, j));
          if (std::find(pinCells.begin(), pinCells.end(), row) !=
              pinCells.end())
            continue;
          trips.emplace_back(int(row), int(col), v);
        }
    }
  }
  for (int p : pinCells) trips.emplace_back(p, p, 1.0);
  bottomA.resize(int(n), int(n));
  bottomA.setFromTriplets(trips.begin(), trips.end());
  bottomAssembled = true;
}

void LevelPoissonSolver::Impl::bottomSolve(Depth& d) {
  if (spec.kind == SystemKind::helmholtz) {
    // strict diagonal dominance: weighted Jacobi converges quickly
    const double b0 = interiorL2(d.b);
    if (b0 == 0) {
      d.x.setZero();
      return;
    }
    for (int it = 0; it < 200; ++it) {
      smoothDepth(d, d.x, d.b, 1, false);
      if (it % 8 == 7) {
        apply(d, d.x, d.tmp, false);
        double rn = 0;
        const int g = 2;
        for (int b = 0; b < d.r.numBoxes(); ++b) {
          const IntVec e = d.r.box(b).extent();
          rn += (d.b.arr(b, 0).block(g, g, e[0], e[1]) -
                 d.tmp.arr(b, 0).block(g, g, e[0], e[1]))
                    .square()
                    .sum();
        }
        if (std::sqrt(rn) <= cfg.bottomTol * b0) break;
      }
    }
    return;
  }
  if (!bottomAssembled) assembleBottom(d);
  const Level& lev = d.hier->level(0);
  const std::int64_t n = boxOffset.back();
  Eigen::VectorXd rhs(n);
  projectNullspace(d.b, d.comps);
  for (std::size_t b = 0; b < lev.boxes.size(); ++b) {
    const IndexBox& bx = lev.boxes[b];
    for (int j = bx.lo[1]; j <= bx.hi[1]; ++j)
      for (int i = bx.lo[0]; i <= bx.hi[0]; ++i)
        rhs[cellIndex(d, int(b), IntVec(i, j))] =
            d.b.at(int(b), 0, IntVec(i, j));
  }
  for (int p : pinCells) rhs[p] = 0.0;
  Eigen::VectorXd x = gmresIluSolve(bottomA, rhs, cfg.gmresRestart,
                                    cfg.bottomTol, nullptr);
  for (std::size_t b = 0; b < lev.boxes.size(); ++b) {
    const IndexBox& bx = lev.boxes[b];
    for (int j = bx.lo[1]; j <= bx.hi[1]; ++j)
      for (int i = bx.lo[0]; i <= bx.hi[0]; ++i)
        d.x.at(int(b), 0, IntVec(i, j)) = x[cellIndex(d, int(b), IntVec(i, j))];
  }
  projectNullspace(d.x, d.comps);
}

LevelPoissonSolver::LevelPoissonSolver(HierarchyPtr h, int level,
                                       LinearSystemSpec spec, MgConfig cfg)
    : impl_(std::make_unique<Impl>()), spec_(spec) {
  impl_->cfg = cfg;
  impl_->spec = spec;
  // periodic axes force periodic "bc" bookkeeping
  const ProblemDomain& dom = h->level(level).domain;
  for (int side = 0; side < 4; ++side)
    if (dom.periodic[side / 2]) impl_->spec.bc[side] = BcKind::periodic;
  spec_ = impl_->spec;
  impl_->buildDepths(std::move(h), level);
  // physical closures need four interior cells
  for (const auto& bx : impl_->depths[0].hier->level(0).boxes)
    if ((bx.extent() < 4).any())
      throw std::runtime_error("level box thinner than four cells");
}

LevelPoissonSolver::~LevelPoissonSolver() = default;

const std::vector<std::vector<int>>& LevelPoissonSolver::components() const {
  return impl_->depths[0].comps;
}

void LevelPoissonSolver::applyOp(LevelData& x, LevelData& out,
                                 bool preserveInterface) {
  impl_->apply(impl_->depths[0], x, out, preserveInterface);
}

void LevelPoissonSolver::smooth(LevelData& x, const LevelData& b, int sweeps,
                                bool preserveInterface) {
  impl_->smoothDepth(impl_->depths[0], x, b, sweeps, preserveInterface);
}

void LevelPoissonSolver::fillBoundaryHom(LevelData& v, bool preserveInterface) {
  impl_->fillBoundaryHom(impl_->depths[0], v, preserveInterface);
}

void LevelPoissonSolver::vcycle(LevelData& x, const LevelData& b) {
  Impl::Depth& d0 = impl_->depths[0];
  impl_->smoothDepth(d0, x, b, impl_->cfg.preSmooth, false);
  if (impl_->depths.size() > 1) {
    impl_->apply(d0, x, d0.tmp, false);
    const int g = 2;
    for (int bx = 0; bx < d0.r.numBoxes(); ++bx) {
      const IntVec e = d0.r.box(bx).extent();
      d0.r.arr(bx, 0).block(g, g, e[0], e[1]) =
          b.arr(bx, 0).block(b.ghost(), b.ghost(), e[0], e[1]) -
          d0.tmp.arr(bx, 0).block(g, g, e[0], e[1]);
    }
    Impl::Depth& d1 = impl_->depths[1];
    impl_->restrictTo(d0.r, d1.b);
    d1.x.setZero();
    impl_->vcycleDepth(1);
    impl_->prolongAdd(d1, d1.x, x);
  } else {
    impl_->bottomSolve(d0);  // degenerate: depth 0 is the bottom
  }
  impl_->smoothDepth(d0, x, b, impl_->cfg.postSmooth, false);
}

double LevelPoissonSolver::residualNorm(LevelData& x, const LevelData& b) {
  Impl::Depth& d0 = impl_->depths[0];
  impl_->apply(d0, x, d0.tmp, false);
  double s = 0;
  const int g = 2;
  for (int bx = 0; bx < x.numBoxes(); ++bx) {
    const IntVec e = x.box(bx).extent();
    s += (b.arr(bx, 0).block(b.ghost(), b.ghost(), e[0], e[1]) -
          d0.tmp.arr(bx, 0).block(g, g, e[0], e[1]))
             .square()
             .sum();
  }
  return std::sqrt(s);
}

SolveStatus LevelPoissonSolver::solve(LevelData& x, const LevelData& b) {
  const auto tic = std::chrono::steady_clock::now();
  const int lev = x.levelIndex();
  SolveStatus st;
  Impl::Depth& d0 = impl_->depths[0];

  LevelData bw = b.clone();
  if (spec_.nullspaced()) projectNullspace(bw, d0.comps);
  const double bnorm = interiorL2(bw);
  if (bnorm == 0.0) {
    x.setZero();
    st.converged = true;
    st.cycles = 1;
    st.relResidual = 0.0;
    st.history = {0.0};
    logSolve(spec_.kind, lev, lev, st,
             std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                           tic).count());
    return st;
  }
  double prev = residualNorm(x, bw);
  st.history.push_back(prev / bnorm);
  int grow = 0;
  // Special case: depth stack of size 1 means direct bottom solve of the
  // residual equation (x may carry a warm start).
  if (impl_->depths.size() == 1) {
    impl_->apply(d0, x, d0.tmp, false);
    interiorCopy(d0.b, bw);
    interiorAxpy(d0.b, -1.0, d0.tmp);
    d0.x.setZero();
    impl_->bottomSolve(d0);
    interiorAxpy(x, 1.0, d0.x);
    st.relResidual = residualNorm(x, bw) / bnorm;
    st.converged = st.relResidual <= impl_->cfg.tol * 10;
    st.cycles = 1;
    st.history.push_back(st.relResidual);
    logSolve(spec_.kind, lev, lev, st,
             std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                           tic).count());
    return st;
  }
  for (int cyc = 1; cyc <= impl_->cfg.maxCycles; ++cyc) {
    vcycle(x, bw);
    if (spec_.nullspaced()) projectNullspace(x, d0.comps);
    const double rn = residualNorm(x, bw);
    st.history.push_back(rn / bnorm);
    st.cycles = cyc;
    st.relResidual = rn / bnorm;
    if (rn <= impl_->cfg.tol * bnorm) {
      st.converged = true;
      break;
    }
    grow = rn > prev ? grow + 1 : 0;
    if (grow >= 3) {
      st.diverged = true;
      break;
    }
    prev = rn;
  }
  logSolve(spec_.kind, lev, lev, st,
           std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         tic).count());
  return st;
}

// ---------------------------------------------------------------------------
// CompositeSolver
// ---------------------------------------------------------------------------

struct CompositeSolver::Impl {
  std::shared_ptr<CompositeWorkspace> ws;
  int lbase = 0, lmax = 0;
  LinearSystemSpec spec;
  MgConfig cfg;
  std::vector<std::unique_ptr<LevelPoissonSolver>> levels;  // lbase..lmax
  CompositeData e, R, tmp, Ax;
  std::vector<int> boxComp;  // base-level box -> component id
  int nComps = 0;

  LevelPoissonSolver& lv(int l) { return *levels[l - lbase]; }

  LevelFillHook homHook() {
    return [this](LevelData& d, int l) {
      // Levels above the slice base had their interface ghosts interpolated
      // by the composite fill; keep those, close the rest homogeneously.
      lv(l).fillBoundaryHom(d, /*preserveInterface=*/l > lbase);
    };
  }

  void residual(CompositeData& x, const CompositeData& b, CompositeData& r) {
    compositeHelmholtz(*ws, spec.alpha, spec.beta, x, Ax, homHook(),
                       /*cop4=*/true, /*reflux=*/true, lbase);
    for (int l = lbase; l <= lmax; ++l) {
      interiorCopy(r.level(l), b.level(l));
      interiorAxpy(r.level(l), -1.0, Ax.level(l));
    }
  }

  double validL2(const CompositeData& d) const {
    double acc = 0;
    const Hierarchy& h = *ws->hierarchy();
    for (int l = lbase; l <= lmax; ++l)
      acc += levelValidNorm(d.level(l), h.validRegion(l), Norm::L2, 0);
    return std::sqrt(acc);
  }

  std::vector<double> demean(CompositeData& d) {
    // weighted mean over valid cells per base component, subtracted from
    // every cell of the component on all levels
    const Hierarchy& h = *ws->hierarchy();
    std::vector<double> num(nComps, 0.0), den(nComps, 0.0);
    for (int l = lbase; l <= lmax; ++l) {
      const auto valid = h.validRegion(l);
      const double w = h.spacing(l) * h.spacing(l);
      LevelData& ld = d.level(l);
      for (int b = 0; b < ld.numBoxes(); ++b) {
        const int comp = compOfBox(l, b);
        for (const IndexBox& v : valid) {
          const IndexBox ov = v.intersect(ld.box(b));
          if (ov.empty()) continue;
          for (int j = ov.lo[1]; j <= ov.hi[1]; ++j)
            for (int i = ov.lo[0]; i <= ov.hi[0]; ++i) {
              num[comp] += w * ld.at(b, 0, IntVec(i, j));
              den[comp] += w;
            }
        }
      }
    }
    std::vector<double> means(nComps, 0.0);
    for (int c = 0; c < nComps; ++c)
      means[c] = den[c] > 0 ? num[c] / den[c] : 0.0;
    for (int l = lbase; l <= lmax; ++l) {
      LevelData& ld = d.level(l);
      const int g = ld.ghost();
      for (int b = 0; b < ld.numBoxes(); ++b) {
        const IntVec ex = ld.box(b).extent();
        ld.arr(b, 0).block(g, g, ex[0], ex[1]) -= means[compOfBox(l, b)];
      }
    }
    return means;
  }

  int compOfBox(int l, int b) const {
    if (l == lbase) return boxComp[b];
    // coarsen the box's low corner down to the base level and find its owner
    const Hierarchy& h = *ws->hierarchy();
    IntVec i = h.level(l).boxes[b].lo;
    for (int k = l; k > lbase; --k) i = coarsenIndex(i, h.ratio());
    const IntVec w = h.level(lbase).domain.wrap(i);
    for (std::size_t k = 0; k < h.level(lbase).boxes.size(); ++k)
      if (h.level(lbase).boxes[k].contains(w)) return boxComp[int(k)];
    return 0;
  }

  void facVcycle(int l) {
    if (l == lbase) {
      LevelData& eb = e.level(lbase);
      LevelData& Rb = R.level(lbase);
      if (spec.nullspaced()) projectNullspace(Rb, lv(lbase).components());
      for (int k = 0; k < cfg.baseCycles; ++k) lv(lbase).vcycle(eb, Rb);
      return;
    }
    LevelData& el = e.level(l);
    // interface ghosts of the correction come from the coarser correction
    fillInterfaceFromCoarse(l);
    lv(l).smooth(el, R.level(l), cfg.facPreSmooth, true);
    lv(l).applyOp(el, tmp.level(l), true);
    interiorCopy(Ax.level(l), R.level(l));
    interiorAxpy(Ax.level(l), -1.0, tmp.level(l));  // level residual
    averageDown(Ax.level(l), R.level(l - 1));        // covered cells only
    facVcycle(l - 1);
    // prolong the coarse correction and post-smooth
    const auto& table = ws->table();
    LevelData& ec = e.level(l - 1);
    exchange(ec);
    LevelIndexMap srcMap(ec.level());
    std::vector<IndexBox> targets = el.level().boxes;
    cfiInterpolate(table, ec, srcMap, targets,
                   [&](const IntVec& i, int c, double v) {
                     const IntVec w = el.level().domain.wrap(i);
                     for (int b = 0; b < el.numBoxes(); ++b)
                       if (el.box(b).contains(w)) {
                         el.at(b, c, w) += v;
                         break;
                       }
                   });
    fillInterfaceFromCoarse(l);
    lv(l).smooth(el, R.level(l), cfg.facPostSmooth, true);
  }

  void fillInterfaceFromCoarse(int l) {
    LevelData& el = e.level(l);
    LevelData& ec = e.level(l - 1);
    const auto& regions = ws->ghostRegions(l);
    for (int b = 0; b < el.numBoxes(); ++b)
      cfiInterpolate(ws->table(), ec, ws->map(l - 1), regions[b],
                     [&](const IntVec& i, int c, double v) {
                       el.at(b, c, i) = v;
                     });
  }
};

CompositeSolver::CompositeSolver(std::shared_ptr<CompositeWorkspace> ws,
                                 int lbase, LinearSystemSpec spec, MgConfig cfg)
    : impl_(std::make_unique<Impl>()) {
  impl_->ws = std::move(ws);
  impl_->lbase = lbase;
  impl_->spec = spec;
  impl_->cfg = cfg;
  const HierarchyPtr& h = impl_->ws->hierarchy();
  impl_->lmax = h->maxLevel();
  for (int l = lbase; l <= impl_->lmax; ++l)
    impl_->levels.push_back(
        std::make_unique<LevelPoissonSolver>(h, l, spec, cfg));
  impl_->e = CompositeData(h, lbase, 1, 2);
  impl_->R = CompositeData(h, lbase, 1, 2);
  impl_->tmp = CompositeData(h, lbase, 1, 2);
  impl_->Ax = CompositeData(h, lbase, 1, 2);
  const auto comps = h->connectedComponents(lbase);
  impl_->nComps = int(comps.size());
  impl_->boxComp.assign(h->level(lbase).boxes.size(), 0);
  for (std::size_t c = 0; c < comps.size(); ++c)
    for (int b : comps[c]) impl_->boxComp[b] = int(c);
}

CompositeSolver::~CompositeSolver() = default;

void CompositeSolver::residual(CompositeData& x, const CompositeData& b,
                               CompositeData& r) {
  impl_->residual(x, b, r);
}

std::vector<double> CompositeSolver::projectNullspaceComposite(
    CompositeData& rhs) {
  return impl_->demean(rhs);
}

SolveStatus CompositeSolver::solve(CompositeData& x, const CompositeData& b) {
  const auto tic = std::chrono::steady_clock::now();
  SolveStatus st;
  Impl& im = *impl_;
  CompositeData bw = b.clone();
  if (im.spec.nullspaced()) im.demean(bw);
  const double bnorm = im.validL2(bw);
  if (bnorm == 0.0) {
    x.setZero();
    st.converged = true;
    st.cycles = 1;
    st.history = {0.0};
    return st;
  }
  for (int l = im.lmax - 1; l >= im.lbase; --l)
    averageDown(x.level(l + 1), x.level(l));
  CompositeData r = bw.clone();
  im.residual(x, bw, r);
  double prev = im.validL2(r);
  st.history.push_back(prev / bnorm);
  int grow = 0;
  for (int cyc = 1; cyc <= im.cfg.maxCycles; ++cyc) {
    im.e.setZero();
    for (int l = im.lbase; l <= im.lmax; ++l)
      interiorCopy(im.R.level(l), r.level(l));
    im.facVcycle(im.lmax);
    for (int l = im.lbase; l <= im.lmax; ++l)
      interiorAxpy(x.level(l), 1.0, im.e.level(l));
    for (int l = im.lmax - 1; l >= im.lbase; --l)
      averageDown(x.level(l + 1), x.level(l));
    if (im.spec.nullspaced()) im.demean(x);
    im.residual(x, bw, r);
    const double rn = im.validL2(r);
    st.history.push_back(rn / bnorm);
    st.cycles = cyc;
    st.relResidual = rn / bnorm;
    if (rn <= im.cfg.tol * bnorm) {
      st.converged = true;
      break;
    }
    grow = rn > prev ? grow + 1 : 0;
    if (grow >= 3) {
      st.diverged = true;
      break;
    }
    prev = rn;
  }
  logSolve(im.spec.kind, im.lbase, im.lmax, st,
           std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         tic).count());
  return st;
}

}  // namespace amrins
