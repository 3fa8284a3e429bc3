#pragma once

#include <functional>
#include <iosfwd>
#include <optional>

#include "amrins/gepup.hpp"
#include "amrins/regrid.hpp"

namespace amrins {

struct DriverConfig {
  GepupParams gepup;
  FlowBc bc;
  double t0 = 0.0;
  double te = 1.0;
  double k0 = 0.0;            // base-level step size (set by the caller)
  bool cop4AfterSync = false; // append the average-down to every sync
  int regridInterval = 0;     // base steps between regrids; 0 = static
  std::vector<double> vorticityTags;  // |curl| threshold when tagging level l
  RegridPolicy regridPolicy;
  int maxLevel = 0;           // target hierarchy depth when regridding
};

/// Telemetry of one base-level step.
struct StepRecord {
  int step = 0;
  double t = 0.0;
  std::vector<std::int64_t> levelCells;
  double divInf = 0.0;      // composite divergence after the step
  double wallSeconds = 0.0;
  double qCompat = 0.0, projCompat = 0.0, ifcBalance = 0.0;
  double sIdl = 1.0;        // ideal speedup against the uniform finest grid
  bool regridded = false;
};

/// The subcycled time-stepping driver: synchronized jump start, recursive
/// single-level advances with interface conditions, composite-projection
/// synchronization, and adaptive regridding with data migration.
class AmrDriver {
 public:
  AmrDriver(HierarchyPtr h, DriverConfig cfg,
            std::shared_ptr<const ButcherTableau> tab);
  ~AmrDriver();

  /// Fill the initial velocity per level (cell averages) and make it
  /// redundant across levels.
  void initialize(const std::function<void(int, LevelData&)>& fill);

  /// Three synchronized base steps building every level's time history.
  void jumpStart();

  /// The main loop: jump start (if not done), then base steps to te.
  void run(const std::function<void(const StepRecord&)>& onStep = {});

  void advanceOneBaseStep();

  /// Fix the base step before any stepping (the harness derives it from
  /// the Courant number and the measured initial speed).
  void setBaseStep(double k0);

  CompositeData& velocity();
  const CompositeData& velocity() const;
  HierarchyPtr hierarchy() const;
  double time() const;
  int baseStepsTotal() const;
  int baseStepsTaken() const;

  double compositeDivergenceInf();
  CompositeData recoverPressure();

  /// Apply the composite projection to levels lbase.. (the synchronization
  /// operation); exposed for experiments and tests.
  void applyCompositeProjection(int lbase);

  const std::vector<StepRecord>& records() const;

  void writeCheckpoint(std::ostream& os) const;
  void readCheckpoint(std::istream& is);

  /// Evaluate the refinement tags (vorticity thresholds) for level l.
  void tagCells(int l, TagSet& tags);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace amrins
