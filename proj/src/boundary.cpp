#include "amrins/boundary.hpp"

#include "amrins/quadrature.hpp"

namespace amrins {

bool isPhysicalSide(const Level& lev, const IndexBox& box, int side) {
  const int axis = side / 2;
  if (lev.domain.periodic[axis]) return false;
  return side % 2 ? box.hi[axis] == lev.domain.ncells[axis] - 1
                  : box.lo[axis] == 0;
}

Eigen::ArrayXd sideFaceAverages(
    const Hierarchy& h, int level, const IndexBox& box, int side, double t,
    const std::function<double(double, double, double)>& f) {
  const int axis = side / 2;
  const double hh = h.spacing(level);
  const double wall =
      h.origin()[axis] +
      hh * (side % 2 ? box.hi[axis] + 1 : box.lo[axis]);
  const int ext = box.extent()[1 - axis];
  Eigen::ArrayXd out(ext + 4);
  for (int k = -2; k < ext + 2; ++k) {
    const double s0 = h.origin()[1 - axis] + hh * (box.lo[1 - axis] + k);
    auto g = [&](double s) {
      return axis == 0 ? f(wall, s, t) : f(s, wall, t);
    };
    out[k + 2] = lineAverage(g, s0, hh);
  }
  return out;
}

namespace {

Eigen::ArrayXd zeroData(const IndexBox& box, int side) {
  return Eigen::ArrayXd::Zero(box.extent()[1 - side / 2] + 4);
}

// Face averages of the tangential-divergence Neumann datum for the normal
// velocity component: the face average of d(u_tau)/dtau over one wall face
// is the difference of wall values at the face endpoints over h.
Eigen::ArrayXd normalVelNeumann(const Hierarchy& h, int level,
                                const IndexBox& box, int side, double t,
                                const FlowBc& bc) {
  const int axis = side / 2, tangential = 1 - axis;
  const double hh = h.spacing(level);
  const double wall =
      h.origin()[axis] + hh * (side % 2 ? box.hi[axis] + 1 : box.lo[axis]);
  const int ext = box.extent()[tangential];
  Eigen::ArrayXd out(ext + 4);
  for (int k = -2; k < ext + 2; ++k) {
    const double s0 = h.origin()[tangential] + hh * (box.lo[tangential] + k);
    auto ub = [&](double s) {
      const Eigen::Vector2d v =
          axis == 0 ? bc.velocity(wall, s, t) : bc.velocity(s, wall, t);
      return v[tangential];
    };
    const double dTan = (ub(s0 + hh) - ub(s0)) / hh;
    // d(w_n)/dn with n outward equals -d(u_tau)/dtau; the fill expects the
    // outward derivative of the component, which flips sign on low sides.
    out[k + 2] = -outwardSign(side) * dTan;
  }
  return out;
}

}  // namespace

PhysicalFill velocityFillW(const LevelData& proto, const FlowBc& bc, int comp,
                           double t) {
  const Hierarchy& h = *proto.hierarchy();
  const int level = proto.levelIndex();
  const Level& lev = h.level(level);
  PhysicalFill fill(proto.numBoxes());
  for (int b = 0; b < proto.numBoxes(); ++b) {
    const IndexBox& bx = proto.box(b);
    for (int side = 0; side < 4; ++side) {
      if (!isPhysicalSide(lev, bx, side)) continue;
      SideFill sf;
      if (comp == side / 2) {
        sf.kind = BcKind::neumann;
        sf.data = bc.zeroVelocity ? zeroData(bx, side)
                                  : normalVelNeumann(h, level, bx, side, t, bc);
      } else {
        sf.kind = BcKind::dirichlet;
        sf.data = bc.zeroVelocity
                      ? zeroData(bx, side)
                      : sideFaceAverages(h, level, bx, side, t,
                                         [&](double x, double y, double tt) {
                                           return bc.velocity(x, y, tt)[comp];
                                         });
      }
      fill[b][side] = std::move(sf);
    }
  }
  return fill;
}

PhysicalFill velocityFillU(const LevelData& proto, const FlowBc& bc, int comp,
                           double t) {
  const Hierarchy& h = *proto.hierarchy();
  const int level = proto.levelIndex();
  const Level& lev = h.level(level);
  PhysicalFill fill(proto.numBoxes());
  for (int b = 0; b < proto.numBoxes(); ++b) {
    const IndexBox& bx = proto.box(b);
    for (int side = 0; side < 4; ++side) {
      if (!isPhysicalSide(lev, bx, side)) continue;
      SideFill sf;
      sf.kind = BcKind::dirichlet;
      sf.data = bc.zeroVelocity
                    ? zeroData(bx, side)
                    : sideFaceAverages(h, level, bx, side, t,
                                       [&](double x, double y, double tt) {
                                         return bc.velocity(x, y, tt)[comp];
                                       });
      fill[b][side] = std::move(sf);
    }
  }
  return fill;
}

double sideNormalFluxSum(const Hierarchy& h, int level, const IndexBox& box,
                         int side, double t, const FlowBc& bc) {
  if (bc.zeroVelocity) return 0.0;
  const int axis = side / 2;
  Eigen::ArrayXd f = sideFaceAverages(h, level, box, side, t,
                                      [&](double x, double y, double tt) {
                                        return bc.velocity(x, y, tt)[axis];
                                      });
  const int ext = box.extent()[1 - axis];
  return outwardSign(side) * f.segment(2, ext).sum();
}

}  // namespace amrins
