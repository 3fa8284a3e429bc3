#include "amrins/config.hpp"

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace amrins {

std::string benchmarkName(Benchmark b) {
  switch (b) {
    case Benchmark::viscous_box: return "viscous_box";
    case Benchmark::vortex_merge: return "vortex_merge";
    case Benchmark::single_vortex: return "single_vortex";
    case Benchmark::dipole: return "dipole";
  }
  return "viscous_box";
}

Benchmark benchmarkFromName(const std::string& s) {
  if (s == "viscous_box") return Benchmark::viscous_box;
  if (s == "vortex_merge") return Benchmark::vortex_merge;
  if (s == "single_vortex") return Benchmark::single_vortex;
  if (s == "dipole") return Benchmark::dipole;
  throw std::runtime_error("unknown benchmark '" + s + "'");
}

namespace {
std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}
}  // namespace

SolverConfig parseConfig(std::istream& is) {
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(is, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line without '=': " + line);
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }

  SolverConfig c;
  std::vector<std::string> unknown;
  std::vector<std::string> missing;
  auto take = [&](const char* key) -> std::string {
    auto it = kv.find(key);
    if (it == kv.end()) return "";
    std::string v = it->second;
    kv.erase(it);
    return v;
  };
  auto takeDouble = [&](const char* key, double& out) {
    const std::string v = take(key);
    if (!v.empty()) out = std::stod(v);
    return !v.empty();
  };
  auto takeInt = [&](const char* key, int& out) {
    const std::string v = take(key);
    if (!v.empty()) out = std::stoi(v);
    return !v.empty();
  };
  auto takeBool = [&](const char* key, bool& out) {
    const std::string v = take(key);
    if (v.empty()) return false;
    if (v == "true" || v == "1") out = true;
    else if (v == "false" || v == "0") out = false;
    else throw std::runtime_error(std::string("bad boolean for ") + key);
    return true;
  };

  if (std::string v = take("benchmark"); !v.empty())
    c.benchmark = benchmarkFromName(v);
  else
    missing.push_back("benchmark");
  if (!takeDouble("re", c.re)) missing.push_back("re");
  if (!takeDouble("cr", c.cr)) missing.push_back("cr");
  if (!takeDouble("te", c.te)) missing.push_back("te");
  takeDouble("lambda", c.lambda);
  takeDouble("t0", c.t0);
  takeDouble("k0", c.k0);
  takeInt("base_cells", c.baseCells);
  takeInt("ratio", c.ratio);
  takeInt("max_level", c.maxLevel);
  takeInt("regrid_interval", c.regridInterval);
  takeDouble("regrid_efficiency", c.regridEfficiency);
  takeDouble("mg_tol", c.mgTol);
  takeInt("mg_max_cycles", c.mgMaxCycles);
  takeBool("cop4_after_sync", c.cop4AfterSync);
  takeInt("output_interval", c.outputInterval);
  if (std::string v = take("output_dir"); !v.empty()) c.outputDir = v;
  if (std::string v = take("hierarchy_file"); !v.empty()) c.hierarchyFile = v;
  if (std::string v = take("restart"); !v.empty()) c.restart = v;
  if (std::string v = take("vorticity_tags"); !v.empty()) {
    std::istringstream ss(v);
    double x;
    while (ss >> x) c.vorticityTags.push_back(x);
  }
  if (std::string v = take("static_boxes"); !v.empty()) {
    std::istringstream ss(v);
    std::string group;
    while (std::getline(ss, group, ';')) {
      std::istringstream gg(group);
      std::array<double, 4> r{};
      if (gg >> r[0] >> r[1] >> r[2] >> r[3]) c.staticBoxes.push_back(r);
    }
  }

  for (const auto& [k, v] : kv) unknown.push_back(k);
  if (!missing.empty()) {
    std::string msg = "missing required config keys:";
    for (const auto& m : missing) msg += " " + m;
    throw std::runtime_error(msg);
  }
  if (!unknown.empty()) {
    std::string msg = "unknown config keys:";
    for (const auto& u : unknown) msg += " " + u;
    throw std::runtime_error(msg);
  }
  if (c.re <= 0) throw std::runtime_error("re must be positive");
  if (c.cr <= 0 && c.k0 <= 0)
    throw std::runtime_error("cr must be positive (or set k0)");
  if (c.ratio != 2 && c.ratio != 4)
    throw std::runtime_error("ratio must be 2 or 4");
  return c;
}

SolverConfig parseConfigFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  return parseConfig(in);
}

void writeConfig(const SolverConfig& c, std::ostream& os) {
  os.precision(17);
  os << "benchmark = " << benchmarkName(c.benchmark) << "\n";
  os << "re = " << c.re << "\n";
  os << "lambda = " << c.lambda << "\n";
  os << "cr = " << c.cr << "\n";
  os << "t0 = " << c.t0 << "\n";
  os << "te = " << c.te << "\n";
  os << "k0 = " << c.k0 << "\n";
  os << "base_cells = " << c.baseCells << "\n";
  os << "ratio = " << c.ratio << "\n";
  os << "max_level = " << c.maxLevel << "\n";
  if (!c.vorticityTags.empty()) {
    os << "vorticity_tags =";
    for (double v : c.vorticityTags) os << " " << v;
    os << "\n";
  }
  os << "regrid_interval = " << c.regridInterval << "\n";
  os << "regrid_efficiency = " << c.regridEfficiency << "\n";
  if (!c.staticBoxes.empty()) {
    os << "static_boxes = ";
    for (std::size_t i = 0; i < c.staticBoxes.size(); ++i) {
      const auto& r = c.staticBoxes[i];
      os << r[0] << " " << r[1] << " " << r[2] << " " << r[3];
      if (i + 1 < c.staticBoxes.size()) os << " ; ";
    }
    os << "\n";
  }
  if (!c.hierarchyFile.empty()) os << "hierarchy_file = " << c.hierarchyFile << "\n";
  os << "mg_tol = " << c.mgTol << "\n";
  os << "mg_max_cycles = " << c.mgMaxCycles << "\n";
  os << "cop4_after_sync = " << (c.cop4AfterSync ? "true" : "false") << "\n";
  os << "output_dir = " << c.outputDir << "\n";
  os << "output_interval = " << c.outputInterval << "\n";
  if (!c.restart.empty()) os << "restart = " << c.restart << "\n";
}

}  // namespace amrins
