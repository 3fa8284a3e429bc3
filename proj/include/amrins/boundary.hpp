#pragma once

#include <Eigen/Core>
#include <functional>

#include "amrins/stencil.hpp"

namespace amrins {

/// Analytic boundary data and forcing for one flow problem. Providers must
/// be evaluable slightly beyond the domain corners (two cells), which the
/// benchmark fields trivially are.
struct FlowBc {
  using VecFn = std::function<Eigen::Vector2d(double, double, double)>;
  VecFn velocity;    // u^b(x, y, t) on and near the walls
  VecFn velocityDt;  // time derivative of u^b (zero when null)
  VecFn force;       // g(x, y, t) over the domain (zero when null)
  bool zeroVelocity = true;
  bool zeroForce = true;
};

bool isPhysicalSide(const Level& lev, const IndexBox& box, int side);

/// Outward unit normal component sign: +1 on high sides, -1 on low sides.
inline double outwardSign(int side) { return side % 2 ? 1.0 : -1.0; }

/// Face averages of a scalar function over the faces of one box side at time
/// t, extended two faces past each end; entry k+2 is the face at tangential
/// index (side lo + k).
Eigen::ArrayXd sideFaceAverages(
    const Hierarchy& h, int level, const IndexBox& box, int side, double t,
    const std::function<double(double, double, double)>& f);

/// Physical fills for one component of the evolved velocity: tangential
/// components take Dirichlet wall data, the normal component the Neumann
/// closure whose datum is minus the tangential divergence of the wall data.
PhysicalFill velocityFillW(const LevelData& proto, const FlowBc& bc, int comp,
                           double t);

/// Physical fills for one component of the projected velocity: Dirichlet
/// wall data for every component.
PhysicalFill velocityFillU(const LevelData& proto, const FlowBc& bc, int comp,
                           double t);

/// Sum of outward face-averaged normal boundary velocity over a box side.
double sideNormalFluxSum(const Hierarchy& h, int level, const IndexBox& box,
                         int side, double t, const FlowBc& bc);

}  // namespace amrins
