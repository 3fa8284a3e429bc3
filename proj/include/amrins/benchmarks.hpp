#pragma once

#include "amrins/config.hpp"
#include "amrins/driver.hpp"

namespace amrins {

/// Physical setup of one benchmark: boundary data, forcing, domain shape.
struct Problem {
  FlowBc bc;
  RealVec origin{0.0, 0.0};
  RealVec extent{1.0, 1.0};
  std::array<bool, 2> periodic{false, false};
};

Problem problemFor(Benchmark b);

/// Base-level cell counts for a given 1/h resolution.
IntVec baseCellsFor(const Problem& p, int cellsPerUnit);

/// The initial hierarchy: static subdomains from the config, an explicit
/// hierarchy file, or (dynamic runs) a tag-driven build iterated from the
/// analytic initial data.
HierarchyPtr buildInitialHierarchy(const SolverConfig& cfg, int cellsPerUnit);

/// Assembled driver with initial data, ready to run; k0 is derived from the
/// Courant number and the measured initial speed unless the config pins it.
std::unique_ptr<AmrDriver> makeDriver(const SolverConfig& cfg,
                                      int cellsPerUnit);

/// Fill the analytic initial velocity of the benchmark on a hierarchy.
void fillInitialVelocity(const SolverConfig& cfg, AmrDriver& driver);

double maxCompositeSpeed(const CompositeData& w);

// ---- convergence machinery ----

struct ConvergenceRow {
  std::string variable;  // "u" or "p"
  std::string norm;      // "Linf" | "L1" | "L2"
  std::string pair;      // e.g. "1/64-1/128"
  double error = 0.0;
  double rate = 0.0;     // rate against the next pair (0 when last)
};

struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;
};

/// Error data on the coarse hierarchy: coarse-run data minus the fine-run
/// data averaged down by the base-resolution factor (2). Hierarchies must
/// share the physical subdomain layout.
CompositeData richardsonError(const CompositeData& coarse,
                              const CompositeData& fine);

/// log_2 of the ratio of successive pair errors.
double richardsonRate(double e1, double e2);

/// Modified rate for dynamic-subdomain runs against a reference one base
/// refinement finer than the finest tested grid: solves
/// ratio = (2^{a p} - 1) / (2^{(a-1) p} - 1) for p, where the coarser grid
/// of the pair is 2^a times the reference spacing.
double modifiedRichardsonRate(double e1, double e2, int a);

struct RunResult {
  HierarchyPtr hier;
  CompositeData w;
  CompositeData p;
  std::vector<StepRecord> records;
  double k0 = 0.0;
};

RunResult runSimulation(const SolverConfig& cfg, int cellsPerUnit,
                        const std::function<void(const StepRecord&)>& onStep = {},
                        bool withPressure = true);

/// Speedup accounting between an AMR run and a uniform fine-grid run whose
/// step size matches the finest level (Eq.-style ideal and actual ratios).
struct SpeedupRow {
  int step;
  double t;
  double sIdl;
  double sAct;
};
struct SpeedupReport {
  std::vector<SpeedupRow> rows;
  double sActTotal = 0.0;
};

SpeedupReport speedupReport(const std::vector<StepRecord>& amr,
                            const std::vector<StepRecord>& uniform,
                            int finePerBase);

}  // namespace amrins
