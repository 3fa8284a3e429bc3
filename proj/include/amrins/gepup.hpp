#pragma once

#include <memory>
#include <string>

#include "amrins/interface_conditions.hpp"
#include "amrins/multigrid.hpp"
#include "amrins/tableau.hpp"

namespace amrins {

struct GepupParams {
  double nu = 0.01;     // 1/Re
  double lambda = 1.0;  // boundary penalty
  MgConfig mg;
};

/// Per-step diagnostics: worst compatibility residuals of the elliptic
/// solves (relative), the interface balance residual before correction, and
/// multigrid work.
struct StepTelemetry {
  double qCompat = 0.0;
  double projCompat = 0.0;
  double ifcBalance = 0.0;
  int mgCycles = 0;
  double wallSeconds = 0.0;
};

/// Outward fourth-order face averages of the side-normal velocity component
/// computed from current cell and ghost values.
Eigen::ArrayXd sideNormalFaceAverages(const LevelData& w, int b, int side);

/// Neumann datum of the auxiliary-scalar equation on one physical box side
/// (outward normal), assembled from the boundary data, the one-sided trace
/// of L w, and the computed wall-normal velocity.
Eigen::ArrayXd scalarNeumannPhysicalSide(const LevelData& w,
                                         const LevelData& lw, int b, int side,
                                         double t, const FlowBc& bc, double nu,
                                         double lambda);

/// Projection datum on one physical box side: computed normal flux of w
/// minus the prescribed normal boundary velocity.
Eigen::ArrayXd projectionNeumannPhysicalSide(const LevelData& w, int b,
                                             int side, double t,
                                             const FlowBc& bc);

/// Neumann data of a scalar solve, kept so the solved field's ghosts can be
/// refilled consistently for gradient evaluation.
struct ScalarNeumannData {
  // per box, per side: physical side data (sized extent+4) or empty
  std::vector<std::array<Eigen::ArrayXd, 4>> phys;
  // per box, per side: interface data on masked faces (sized extent) or empty
  std::vector<std::array<Eigen::ArrayXd, 4>> ifc;
};

/// Single-level GePUP-E semi-discretization: explicit right-hand sides, the
/// approximate projection, the auxiliary-scalar solve, and one IMEX step.
/// For levels above the base, interface conditions provide the subdomain
/// boundary data per stage.
class GepupLevelStepper {
 public:
  GepupLevelStepper(HierarchyPtr h, int level, GepupParams prm, FlowBc bc,
                    std::shared_ptr<const ButcherTableau> tab);
  ~GepupLevelStepper();

  /// Ghost fill for a velocity field: exchange, interface band (if given),
  /// then physical closures (evolved: tangential Dirichlet plus normal
  /// Neumann; projected: Dirichlet).
  void fillVelocity(LevelData& v, double t, bool evolved,
                    const InterfaceStageData* st);

  /// q from (u, w): Poisson solve with pure Neumann closures; q and its
  /// data come back for gradient fills. lw holds cell averages of L w.
  void solveQ(const LevelData& u, LevelData& w, const LevelData& lw, double t,
              const InterfaceStageData* st, LevelData& q,
              ScalarNeumannData& qdata, StepTelemetry* tel);

  /// Approximate projection: u = w - G psi with L psi = D w; the Neumann
  /// data ties the computed boundary flux of w to the target normal
  /// velocity so the discrete compatibility is exact.
  void project(LevelData& w, double t, const InterfaceStageData* st,
               LevelData& u, StepTelemetry* tel);

  /// One IMEX step from t to t+k. For level > 0 the interface machinery and
  /// the coarser level's history must be supplied.
  void step(LevelData& w, double t, double k, InterfaceConditions* ifc,
            const TimeHistory* coarse, StepTelemetry* tel);

  /// Max-norm of the discrete divergence of w (ghosts refilled at t).
  double divergenceInf(LevelData& w, double t, const InterfaceStageData* st);

  /// Pressure from the Eulerian accelerations (base level only): solves a
  /// Neumann Poisson problem for a zero-mean p.
  LevelData recoverPressure(LevelData& u, double t, StepTelemetry* tel);

  const GepupParams& params() const { return prm_; }
  const FlowBc& bc() const { return bc_; }
  const ButcherTableau& tableau() const { return *tab_; }

  /// Fill cell averages of the forcing at time t (zero fast path).
  void forceCells(double t, LevelData& g) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  GepupParams prm_;
  FlowBc bc_;
  std::shared_ptr<const ButcherTableau> tab_;
};

}  // namespace amrins
