#include "amrins/io.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>

namespace amrins {

namespace fs = std::filesystem;

void writeFieldSnapshot(const std::string& dir, const CompositeData& w,
                        const CompositeData* p, double time, int index) {
  const Hierarchy& h = *w.hierarchy();
  fs::create_directories(fs::path(dir) / "fields");
  const fs::path manifestPath = fs::path(dir) / "fields" /
                                ("manifest_" + std::to_string(index) + ".csv");
  std::ofstream manifest(manifestPath);
  manifest << "level,box,lo_x,lo_y,hi_x,hi_y,h,time\n";
  for (int l = 0; l <= h.maxLevel(); ++l) {
    const LevelData& d = w.level(l);
    for (int b = 0; b < d.numBoxes(); ++b) {
      const IndexBox& bx = d.box(b);
      const double hh = h.spacing(l);
      manifest << l << "," << b << "," << bx.lo[0] << "," << bx.lo[1] << ","
               << bx.hi[0] << "," << bx.hi[1] << "," << std::setprecision(17)
               << hh << "," << time << "\n";
      std::ostringstream name;
      name << "snap" << index << "_l" << l << "_b" << b << ".vtk";
      std::ofstream vtk(fs::path(dir) / "fields" / name.str());
      const IntVec e = bx.extent();
      vtk << "# vtk DataFile Version 3.0\n";
      vtk << "field snapshot t=" << time << "\n";
      vtk << "ASCII\nDATASET STRUCTURED_POINTS\n";
      vtk << "DIMENSIONS " << e[0] + 1 << " " << e[1] + 1 << " 1\n";
      const RealVec lo = h.cellLo(l, bx.lo);
      vtk << "ORIGIN " << lo[0] << " " << lo[1] << " 0\n";
      vtk << "SPACING " << hh << " " << hh << " 1\n";
      vtk << "CELL_DATA " << bx.numCells() << "\n";
      vtk << std::setprecision(12);
      vtk << "VECTORS velocity double\n";
      for (int j = bx.lo[1]; j <= bx.hi[1]; ++j)
        for (int i = bx.lo[0]; i <= bx.hi[0]; ++i)
          vtk << d.at(b, 0, IntVec(i, j)) << " " << d.at(b, 1, IntVec(i, j))
              << " 0\n";
      if (p) {
        vtk << "SCALARS pressure double 1\nLOOKUP_TABLE default\n";
        for (int j = bx.lo[1]; j <= bx.hi[1]; ++j)
          for (int i = bx.lo[0]; i <= bx.hi[0]; ++i)
            vtk << p->level(l).at(b, 0, IntVec(i, j)) << "\n";
      }
    }
  }
}

void writeConvergenceCsv(const std::string& path, const ConvergenceReport& r) {
  fs::create_directories(fs::path(path).parent_path());
  std::ofstream os(path);
  os << "variable,norm,h_pair,error,rate\n";
  os << std::setprecision(12);
  for (const auto& row : r.rows)
    os << row.variable << "," << row.norm << "," << row.pair << "," << row.error
       << "," << row.rate << "\n";
}

void writeSpeedupCsv(const std::string& path, const SpeedupReport& r) {
  fs::create_directories(fs::path(path).parent_path());
  std::ofstream os(path);
  os << "step,t,S_idl,S_act\n";
  os << std::setprecision(12);
  for (const auto& row : r.rows)
    os << row.step << "," << row.t << "," << row.sIdl << "," << row.sAct
       << "\n";
}

void writeDivergenceCsv(const std::string& path,
                        const std::vector<StepRecord>& recs) {
  fs::create_directories(fs::path(path).parent_path());
  std::ofstream os(path);
  os << "step,t,div_inf,q_compat,proj_compat,ifc_balance\n";
  os << std::setprecision(12);
  for (const auto& r : recs)
    os << r.step << "," << r.t << "," << r.divInf << "," << r.qCompat << ","
       << r.projCompat << "," << r.ifcBalance << "\n";
}

void writeRunCsv(const std::string& path, const std::vector<StepRecord>& recs) {
  fs::create_directories(fs::path(path).parent_path());
  std::ofstream os(path);
  os << "step,t";
  std::size_t maxLevels = 0;
  for (const auto& r : recs) maxLevels = std::max(maxLevels, r.levelCells.size());
  for (std::size_t l = 0; l < maxLevels; ++l) os << ",N" << l;
  os << ",div_inf,wall_seconds,S_idl,regridded\n";
  os << std::setprecision(12);
  for (const auto& r : recs) {
    os << r.step << "," << r.t;
    for (std::size_t l = 0; l < maxLevels; ++l)
      os << "," << (l < r.levelCells.size() ? r.levelCells[l] : 0);
    os << "," << r.divInf << "," << r.wallSeconds << "," << r.sIdl << ","
       << (r.regridded ? 1 : 0) << "\n";
  }
}

}  // namespace amrins
