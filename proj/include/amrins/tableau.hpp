#pragma once

#include <Eigen/Core>
#include <string>

namespace amrins {

/// Coefficients of an additive (IMEX) Runge-Kutta pair: an explicit table
/// and a singly-diagonally-implicit one with a first explicit stage, sharing
/// the weights b and abscissae c.
struct ButcherTableau {
  int stages = 0;
  double gamma = 0.0;              // the repeated implicit diagonal
  Eigen::MatrixXd aE, aI;          // stages x stages, strictly/..lower
  Eigen::VectorXd b, c;

  /// Verifies structure and the classical order conditions through order 4
  /// for both parts (tolerance covers rational rounding only).
  void selfTest(double tol = 1e-12) const;
};

/// Load from the bundled data file (path overridable; "" uses the default).
ButcherTableau loadTableau(const std::string& path = "");

}  // namespace amrins
