#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <future>
#include <iostream>

#include "amrins/io.hpp"

using namespace amrins;
namespace fs = std::filesystem;

namespace {

void emitRunOutputs(const SolverConfig& cfg, const RunResult& res) {
  const std::string dir = cfg.outputDir;
  fs::create_directories(fs::path(dir) / "report");
  writeFieldSnapshot(dir, res.w, res.p.hierarchy() ? &res.p : nullptr,
                     cfg.te, int(res.records.size()));
  writeRunCsv((fs::path(dir) / "report" / "run.csv").string(), res.records);
  writeDivergenceCsv((fs::path(dir) / "report" / "divergence.csv").string(),
                     res.records);
}

int cmdRun(const std::string& cfgPath, int resolution) {
  SolverConfig cfg = parseConfigFile(cfgPath);
  const int n = resolution > 0 ? resolution : cfg.baseCells;
  std::cout << "running " << benchmarkName(cfg.benchmark) << " at 1/" << n
            << "\n";
  SolveLog::instance().setEnabled(true);
  auto onStep = [&](const StepRecord& r) {
    if (r.step % 10 == 0)
      std::cout << "  step " << r.step << "  t=" << r.t << "  |D w|=" << r.divInf
                << (r.regridded ? "  [regrid]" : "") << "\n";
  };
  auto driver = makeDriver(cfg, n);
  if (!cfg.restart.empty()) {
    std::ifstream in(cfg.restart);
    if (!in) throw std::runtime_error("cannot open restart " + cfg.restart);
    driver->readCheckpoint(in);
    std::cout << "restarted at step " << driver->baseStepsTaken() << "\n";
  }
  driver->run(onStep);
  RunResult res;
  res.hier = driver->hierarchy();
  res.w = driver->velocity().clone();
  res.p = driver->recoverPressure();
  res.records = driver->records();
  emitRunOutputs(cfg, res);
  {
    fs::create_directories(cfg.outputDir);
    std::ofstream ck(fs::path(cfg.outputDir) / "checkpoint.txt");
    driver->writeCheckpoint(ck);
  }
  {
    std::ofstream os(fs::path(cfg.outputDir) / "report" /
                     "solver_telemetry.csv");
    os << "kind,level_lo,level_hi,cycles,rel_residual,wall_seconds\n";
    os << std::setprecision(12);
    for (const auto& r : SolveLog::instance().rows())
      os << r.kind << "," << r.levelLo << "," << r.levelHi << "," << r.cycles
         << "," << r.relResidual << "," << r.wallSeconds << "\n";
  }
  std::cout << "done: " << res.records.size() << " base steps\n";
  return 0;
}

int cmdConverge(const std::string& cfgPath, const std::vector<int>& levels,
                int jobs) {
  SolverConfig cfg = parseConfigFile(cfgPath);
  if (levels.size() < 2) {
    std::cerr << "need at least two resolutions\n";
    return 1;
  }
  std::vector<RunResult> results(levels.size());
  auto work = [&](std::size_t i) { results[i] = runSimulation(cfg, levels[i]); };
  if (jobs > 1) {
    std::vector<std::future<void>> futs;
    for (std::size_t i = 0; i < levels.size(); ++i)
      futs.push_back(std::async(std::launch::async, work, i));
    for (auto& f : futs) f.get();
  } else {
    for (std::size_t i = 0; i < levels.size(); ++i) work(i);
  }

  ConvergenceReport rep;
  struct NormSet {
    double uLinf, uL1, uL2, pLinf, pL1, pL2;
  };
  std::vector<NormSet> errs;
  for (std::size_t i = 0; i + 1 < levels.size(); ++i) {
    CompositeData eu = richardsonError(results[i].w, results[i + 1].w);
    CompositeData ep = richardsonError(results[i].p, results[i + 1].p);
    NormSet ns;
    ns.uLinf = compositeNorm(eu, Norm::Linf);
    ns.uL1 = compositeNorm(eu, Norm::L1);
    ns.uL2 = compositeNorm(eu, Norm::L2);
    ns.pLinf = compositeNorm(ep, Norm::Linf);
    ns.pL1 = compositeNorm(ep, Norm::L1);
    ns.pL2 = compositeNorm(ep, Norm::L2);
    errs.push_back(ns);
  }
  auto addRows = [&](const std::string& var, auto member) {
    for (std::size_t i = 0; i < errs.size(); ++i) {
      ConvergenceRow row;
      row.variable = var.substr(0, 1);
      row.norm = var.substr(2);
      row.pair = "1/" + std::to_string(levels[i]) + "-1/" +
                 std::to_string(levels[i + 1]);
      row.error = errs[i].*member;
      row.rate = i + 1 < errs.size()
                     ? richardsonRate(errs[i].*member, errs[i + 1].*member)
                     : 0.0;
      rep.rows.push_back(row);
    }
  };
  addRows("u Linf", &NormSet::uLinf);
  addRows("u L1", &NormSet::uL1);
  addRows("u L2", &NormSet::uL2);
  addRows("p Linf", &NormSet::pLinf);
  addRows("p L1", &NormSet::pL1);
  addRows("p L2", &NormSet::pL2);
  const std::string path =
      (fs::path(cfg.outputDir) / "report" / "convergence.csv").string();
  writeConvergenceCsv(path, rep);
  for (const auto& row : rep.rows)
    std::cout << row.variable << " " << row.norm << " " << row.pair
              << "  err=" << row.error << "  rate=" << row.rate << "\n";
  std::cout << "wrote " << path << "\n";
  return 0;
}

int cmdSpeedup(const std::string& cfgPath, int resolution) {
  SolverConfig cfg = parseConfigFile(cfgPath);
  const int n = resolution > 0 ? resolution : cfg.baseCells;
  std::cout << "AMR run...\n";
  RunResult amr = runSimulation(cfg, n, {}, /*withPressure=*/false);
  int finePerBase = 1;
  for (int l = 0; l < amr.hier->maxLevel(); ++l) finePerBase *= cfg.ratio;

  std::cout << "uniform run at the finest spacing...\n";
  SolverConfig ucfg = cfg;
  ucfg.maxLevel = 0;
  ucfg.staticBoxes.clear();
  ucfg.hierarchyFile.clear();
  ucfg.k0 = amr.k0 / finePerBase;
  RunResult unf =
      runSimulation(ucfg, n * finePerBase, {}, /*withPressure=*/false);

  SpeedupReport rep = speedupReport(amr.records, unf.records, finePerBase);
  const std::string path =
      (fs::path(cfg.outputDir) / "report" / "speedup.csv").string();
  writeSpeedupCsv(path, rep);
  std::cout << "S_act(total) = " << rep.sActTotal << "\n";
  std::cout << "wrote " << path << "\n";
  return 0;
}

int cmdValidate();

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"block-structured AMR incompressible Navier-Stokes benchmark"};
  app.require_subcommand(1);

  std::string cfgPath;
  int resolution = 0;
  std::vector<int> levels;
  int jobs = 1;

  auto* run = app.add_subcommand("run", "run one simulation");
  run->add_option("config", cfgPath)->required();
  run->add_option("--resolution", resolution, "override base 1/h");

  auto* conv = app.add_subcommand("converge", "multi-resolution convergence");
  conv->add_option("config", cfgPath)->required();
  conv->add_option("--levels", levels, "base resolutions, e.g. 64 128 256")
      ->delimiter(',')
      ->required();
  conv->add_option("--jobs", jobs, "concurrent simulations");

  auto* spd = app.add_subcommand("speedup", "AMR vs uniform fine grid");
  spd->add_option("config", cfgPath)->required();
  spd->add_option("--resolution", resolution, "override base 1/h");

  app.add_subcommand("validate", "run the built-in property checks");

  CLI11_PARSE(app, argc, argv);
  try {
    if (run->parsed()) return cmdRun(cfgPath, resolution);
    if (conv->parsed()) return cmdConverge(cfgPath, levels, jobs);
    if (spd->parsed()) return cmdSpeedup(cfgPath, resolution);
    return cmdValidate();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

// ---------------------------------------------------------------------------
// validate: quick property checks over the solver components
// ---------------------------------------------------------------------------

namespace {

int checks = 0, failures = 0;
void check(const std::string& what, bool ok, double value = 0.0) {
  ++checks;
  if (!ok) ++failures;
  std::cout << (ok ? "[pass] " : "[FAIL] ") << what;
  if (value != 0.0) std::cout << "  (" << value << ")";
  std::cout << "\n";
}

int cmdValidate() {
  using namespace amrins;
  // tableau consistency
  try {
    loadTableau();
    check("time-integrator tableau order conditions", true);
  } catch (const std::exception& e) {
    check(std::string("tableau: ") + e.what(), false);
  }
  // interpolation conservation and exactness
  {
    const CfiStencilTable& tab = cfiTable(2);
    double worst = 0;
    for (int sy = -2; sy <= 2; ++sy)
      for (int sx = -2; sx <= 2; ++sx) {
        Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(25);
        for (int f = 0; f < 4; ++f)
          mean += tab.row(IntVec(sx, sy), IntVec(f % 2, f / 2));
        mean /= 4.0;
        const int hostIdx = (2 - sy) * 5 + (2 - sx);
        for (int k = 0; k < 25; ++k)
          worst = std::max(worst,
                           std::abs(mean[k] - (k == hostIdx ? 1.0 : 0.0)));
      }
    check("coarse-fine interpolation conservation", worst < 1e-13, worst);
  }
  // temporal weights
  {
    auto tw = temporalWeights(0.25, 0.1);
    const double s1 = tw.value.sum(), s2 = tw.derivative.sum();
    check("temporal value weights sum to one", std::abs(s1 - 1) < 1e-13, s1);
    check("temporal derivative weights sum to zero", std::abs(s2) < 1e-12, s2);
    auto tw0 = temporalWeights(0.25, 0.0);
    check("eta=0 selects the second-newest snapshot",
          std::abs(tw0.value[1] - 1) < 1e-13);
    auto twk = temporalWeights(0.25, 0.25);
    check("eta=k selects the newest snapshot",
          std::abs(twk.value[0] - 1) < 1e-13);
  }
  // stencil exactness spot checks
  {
    auto h = std::make_shared<Hierarchy>(
        1.0 / 12, ProblemDomain{IntVec(12, 12), {false, false}}, 2,
        std::vector<std::vector<IndexBox>>{{IndexBox(0, 0, 11, 11)}});
    LevelData q(h, 0, 1, 2), lq(h, 0, 1, 2);
    const double hh = 1.0 / 12;
    for (int j = -2; j <= 13; ++j)
      for (int i = -2; i <= 13; ++i) {
        const double x = i * hh;
        q.at(0, 0, IntVec(i, j)) =
            (std::pow(x + hh, 5) - std::pow(x, 5)) / (5 * hh);
      }
    laplacian(q, lq);
    double worst = 0;
    for (int i = 2; i < 10; ++i) {
      const double x = i * hh;
      const double want = (std::pow(x + hh, 3) - std::pow(x, 3)) / (3 * hh) * 12;
      worst = std::max(worst, std::abs(lq.at(0, 0, IntVec(i, 5)) - want));
    }
    check("laplacian exact on quartics", worst < 1e-9, worst);
  }
  // projection behavior at the implemented scale
  {
    auto h = std::make_shared<Hierarchy>(
        1.0 / 32, ProblemDomain{IntVec(32, 32), {true, true}}, 2,
        std::vector<std::vector<IndexBox>>{{IndexBox(0, 0, 31, 31)}});
    FlowBc bc;
    bc.velocity = [](double, double, double) { return Eigen::Vector2d::Zero(); };
    bc.force = [](double, double, double) { return Eigen::Vector2d::Zero(); };
    GepupParams prm;
    prm.nu = 0.01;
    auto tab = std::make_shared<ButcherTableau>(loadTableau());
    GepupLevelStepper st(h, 0, prm, bc, tab);
    LevelData phi(h, 0, 1, 2), w(h, 0, 2, 2), u(h, 0, 2, 2);
    phi.fillCellAverages(0, [](double x, double y) {
      return std::cos(2 * M_PI * x) * std::cos(2 * M_PI * y);
    });
    exchange(phi);
    gradient(phi, w);
    LevelData wc = w.clone();
    const double before = st.divergenceInf(wc, 0, nullptr);
    StepTelemetry tel;
    st.project(w, 0, nullptr, u, &tel);
    const double after = st.divergenceInf(u, 0, nullptr);
    check("projection removes smooth gradient content", after < 0.02 * before,
          after / before);
    check("projection compatibility at machine precision", tel.projCompat < 1e-12,
          tel.projCompat);
  }
  std::cout << checks - failures << "/" << checks << " checks passed\n";
  return failures == 0 ? 0 : 1;
}

}  // namespace
