#pragma once

#include <Eigen/Sparse>
#include <memory>
#include <string>
#include <vector>

#include "amrins/composite.hpp"

namespace amrins {

struct MgConfig {
  double omega = 2.0 / 3.0;  // weighted-Jacobi relaxation
  int preSmooth = 2, postSmooth = 2;
  int facPreSmooth = 3, facPostSmooth = 3;
  double tol = 1e-10;        // relative residual
  int maxCycles = 60;
  int minBoxDim = 4;         // stop coarsening below this box dimension
  int bottomUnknowns = 1024; // or below this many unknowns
  int gmresRestart = 30;
  double bottomTol = 1e-12;
  int baseCycles = 2;        // base-level V-cycles inside a composite cycle
};

enum class SystemKind { poisson_neumann, helmholtz, projection_poisson };

/// One scalar elliptic system alpha*I + beta*L on a level or hierarchy slice.
/// Interface faces (the subdomain boundary away from the physical walls) are
/// closed either by frozen ghost values (velocity systems, pure Dirichlet
/// data) or by homogeneous Neumann fills (potential systems).
struct LinearSystemSpec {
  SystemKind kind = SystemKind::poisson_neumann;
  double alpha = 0.0;
  double beta = 1.0;
  std::array<BcKind, 4> bc{BcKind::neumann, BcKind::neumann, BcKind::neumann,
                           BcKind::neumann};
  bool interfaceFrozen = false;

  /// Constants lie in the homogeneous kernel only when every closure is of
  /// Neumann or periodic type.
  bool nullspaced() const {
    if (kind == SystemKind::helmholtz) return false;
    for (BcKind k : bc)
      if (k == BcKind::dirichlet) return false;
    return !interfaceFrozen;
  }
};

struct SolveStatus {
  bool converged = false;
  bool diverged = false;
  int cycles = 0;
  double relResidual = 0.0;
  std::vector<double> history;  // L2 residual per cycle, history[0] = initial
};

/// Subtract the mean per connected component; returns the offsets removed.
std::vector<double> projectNullspace(LevelData& rhs,
                                     const std::vector<std::vector<int>>& comps);

/// Optional process-wide solve log consumed by the benchmark reports:
/// one row per solve with the system kind, level span, cycle count, final
/// relative residual, and wall time.
struct SolveLogRow {
  std::string kind;
  int levelLo = 0, levelHi = 0;
  int cycles = 0;
  double relResidual = 0.0;
  double wallSeconds = 0.0;
};
class SolveLog {
 public:
  static SolveLog& instance();
  void setEnabled(bool on) { enabled_ = on; }
  bool enabled() const { return enabled_; }
  void add(const SolveLogRow& r) {
    if (enabled_) rows_.push_back(r);
  }
  const std::vector<SolveLogRow>& rows() const { return rows_; }
  void clear() { rows_.clear(); }

 private:
  bool enabled_ = false;
  std::vector<SolveLogRow> rows_;
};

/// Restarted GMRES with an incomplete-LU preconditioner, used as the bottom
/// solver for the Poisson-type systems (assembled, pinned when singular).
Eigen::VectorXd gmresIluSolve(const Eigen::SparseMatrix<double>& A,
                              const Eigen::VectorXd& rhs, int m, double tol,
                              int* iters = nullptr);

/// Geometric multigrid on one level's box union: weighted-Jacobi smoothing,
/// child-average restriction, bilinear prolongation through ghost fills,
/// rediscretized coarse operators, and a bottom solver (weighted Jacobi for
/// the diagonally dominant systems, ILU-preconditioned restarted GMRES for
/// the Poisson families).
class LevelPoissonSolver {
 public:
  LevelPoissonSolver(HierarchyPtr h, int level, LinearSystemSpec spec,
                     MgConfig cfg);
  ~LevelPoissonSolver();

  /// Solve A x = b with homogeneous closures; x is the initial guess.
  SolveStatus solve(LevelData& x, const LevelData& b);

  /// One V-cycle from the finest depth (x updated in place).
  void vcycle(LevelData& x, const LevelData& b);

  /// Depth-0 homogeneous operator application. preserveInterface keeps the
  /// current interface ghost values (used by the composite solver, which
  /// fills them from the coarser level's correction).
  void applyOp(LevelData& x, LevelData& out, bool preserveInterface = false);

  /// Weighted-Jacobi sweeps at depth 0.
  void smooth(LevelData& x, const LevelData& b, int sweeps,
              bool preserveInterface = false);

  /// Homogeneous physical/interface closures at depth 0 (no exchange).
  void fillBoundaryHom(LevelData& v, bool preserveInterface = false);

  const std::vector<std::vector<int>>& components() const;
  const LinearSystemSpec& spec() const { return spec_; }

  double residualNorm(LevelData& x, const LevelData& b);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  LinearSystemSpec spec_;
};

/// Multigrid over a hierarchy slice: FAC-style V-cycles with level smoothing,
/// child-average residual restriction onto covered regions, interpolated
/// corrections, and a full level solve at the slice base. Residuals are the
/// composite operator's (refluxed, averaged down); iterates are kept
/// redundant across levels.
class CompositeSolver {
 public:
  CompositeSolver(std::shared_ptr<CompositeWorkspace> ws, int lbase,
                  LinearSystemSpec spec, MgConfig cfg);
  ~CompositeSolver();

  SolveStatus solve(CompositeData& x, const CompositeData& b);

  /// Composite residual b - A x on valid cells (also fills x's ghosts).
  void residual(CompositeData& x, const CompositeData& b, CompositeData& r);

  /// Weighted mean removal per connected component of the slice base.
  std::vector<double> projectNullspaceComposite(CompositeData& rhs);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace amrins
