#include "amrins/tableau.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace amrins {

namespace {

double parseRational(const std::string& s) {
  const auto slash = s.find('/');
  if (slash == std::string::npos) return std::stod(s);
  return std::stod(s.substr(0, slash)) / std::stod(s.substr(slash + 1));
}

void checkClose(double got, double want, double tol, const std::string& what) {
  if (std::abs(got - want) > tol)
    throw std::runtime_error("tableau self-test failed: " + what);
}

}  // namespace

void ButcherTableau::selfTest(double tol) const {
  if (stages < 2) throw std::runtime_error("tableau: too few stages");
  checkClose(aI(0, 0), 0.0, 0.0, "first implicit stage must be explicit");
  for (int s = 1; s < stages; ++s)
    checkClose(aI(s, s), gamma, tol, "implicit diagonal");
  for (int s = 0; s < stages; ++s) {
    checkClose(aE.row(s).sum(), c(s), tol, "explicit row sum");
    checkClose(aI.row(s).sum(), c(s), tol, "implicit row sum");
  }
  for (const Eigen::MatrixXd* A : {&aE, &aI}) {
    checkClose(b.sum(), 1.0, tol, "order 1");
    checkClose(b.dot(c), 0.5, tol, "order 2");
    checkClose(b.dot(c.cwiseProduct(c)), 1.0 / 3.0, tol, "order 3 (b.c^2)");
    checkClose(b.dot(*A * c), 1.0 / 6.0, tol, "order 3 (b.A.c)");
    checkClose(b.dot(c.cwiseProduct(c.cwiseProduct(c))), 0.25,
               tol, "order 4 (b.c^3)");
    checkClose(b.cwiseProduct(c).dot(*A * c), 1.0 / 8.0, tol,
               "order 4 (b.c.A.c)");
    checkClose(b.dot(*A * c.cwiseProduct(c)), 1.0 / 12.0, tol,
               "order 4 (b.A.c^2)");
    checkClose(b.dot(*A * (*A * c)), 1.0 / 24.0, tol, "order 4 (b.A.A.c)");
  }
  // additive coupling through order 4 with shared b, c
  checkClose(b.dot(aE * (aI * c)), 1.0 / 24.0, tol, "coupling (b.aE.aI.c)");
  checkClose(b.dot(aI * (aE * c)), 1.0 / 24.0, tol, "coupling (b.aI.aE.c)");
}

ButcherTableau loadTableau(const std::string& path) {
  std::string p = path;
  if (p.empty()) p = std::string(AMRINS_DATA_DIR) + "/ark436l2sa.txt";
  std::ifstream in(p);
  if (!in) throw std::runtime_error("cannot open tableau file " + p);

  ButcherTableau t;
  std::string line;
  enum { none, inAE, inAI } mode = none;
  int row = 0;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok)) continue;
    if (tok == "stages") {
      ls >> t.stages;
      t.aE = Eigen::MatrixXd::Zero(t.stages, t.stages);
      t.aI = Eigen::MatrixXd::Zero(t.stages, t.stages);
      t.b.resize(t.stages);
      t.c.resize(t.stages);
    } else if (tok == "gamma") {
      ls >> tok;
      t.gamma = parseRational(tok);
    } else if (tok == "c" || tok == "b") {
      Eigen::VectorXd& v = tok == "c" ? t.c : t.b;
      for (int i = 0; i < t.stages; ++i) {
        ls >> tok;
        v(i) = parseRational(tok);
      }
    } else if (tok == "aE") {
      mode = inAE;
      row = 1;
    } else if (tok == "aI") {
      mode = inAI;
      row = 1;
    } else if (mode != none) {
      Eigen::MatrixXd& A = mode == inAE ? t.aE : t.aI;
      int col = 0;
      A(row, col++) = parseRational(tok);
      while (ls >> tok) A(row, col++) = parseRational(tok);
      if (mode == inAI && col != row + 1)
        throw std::runtime_error("tableau: bad implicit row length");
      if (mode == inAE && col != row)
        throw std::runtime_error("tableau: bad explicit row length");
      ++row;
    }
  }
  if (t.stages == 0) throw std::runtime_error("tableau: missing stages");
  t.selfTest();
  return t;
}

}  // namespace amrins
