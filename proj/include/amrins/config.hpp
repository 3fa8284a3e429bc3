#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

namespace amrins {

enum class Benchmark { viscous_box, vortex_merge, single_vortex, dipole };

std::string benchmarkName(Benchmark b);
Benchmark benchmarkFromName(const std::string& s);

/// Run configuration parsed from the key = value text format. Unknown keys
/// are rejected; missing required keys are reported by name.
struct SolverConfig {
  Benchmark benchmark = Benchmark::viscous_box;
  double re = 0.0;                 // required
  double lambda = 1.0;
  double cr = 0.0;                 // required
  double t0 = 0.0;
  double te = 0.0;                 // required
  double k0 = 0.0;                 // 0: derive from cr and the initial data
  int baseCells = 64;              // level-0 cells along x (y scales by aspect)
  int ratio = 2;
  int maxLevel = 0;
  std::vector<double> vorticityTags;
  int regridInterval = 4;
  double regridEfficiency = 0.7;
  // static level-1+ subdomains as physical rectangles x0 y0 x1 y1 per level
  std::vector<std::array<double, 4>> staticBoxes;
  std::string hierarchyFile;
  double mgTol = 1e-10;
  int mgMaxCycles = 60;
  bool cop4AfterSync = false;
  std::string outputDir = "out";
  int outputInterval = 0;          // base steps between snapshots; 0 = final
  std::string restart;

  bool operator==(const SolverConfig&) const = default;
};

SolverConfig parseConfig(std::istream& is);
SolverConfig parseConfigFile(const std::string& path);
void writeConfig(const SolverConfig& c, std::ostream& os);

}  // namespace amrins
