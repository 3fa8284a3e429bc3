#include "amrins/stencil.hpp"

#include <cassert>
#include <stdexcept>

namespace amrins {

namespace {

struct SideFrame {
  int axis;      // normal axis
  bool high;
  int wall;      // box-relative index of the wall-adjacent cell along axis
  int inward;    // +1 on low sides, -1 on high sides
  int tExtent;   // side length in faces
};

SideFrame frame(const IndexBox& bx, int side) {
  SideFrame f;
  f.axis = side / 2;
  f.high = side % 2 == 1;
  const IntVec e = bx.extent();
  f.wall = f.high ? e[f.axis] - 1 : 0;
  f.inward = f.high ? -1 : +1;
  f.tExtent = e[1 - f.axis];
  return f;
}

// a(cell i along axis, t along transverse), box-relative, ghost offset g.
inline double& cellRef(Array& a, int g, int axis, int n, int t) {
  return axis == 0 ? a(n + g, t + g) : a(t + g, n + g);
}
inline double cellVal(const Array& a, int g, int axis, int n, int t) {
  return axis == 0 ? a(n + g, t + g) : a(t + g, n + g);
}

void fillLine(Array& a, int g, const SideFrame& f, int t, BcKind kind,
              double data, double h) {
  const double c0 = cellVal(a, g, f.axis, f.wall, t);
  const double c1 = cellVal(a, g, f.axis, f.wall + f.inward, t);
  const double c2 = cellVal(a, g, f.axis, f.wall + 2 * f.inward, t);
  const double c3 = cellVal(a, g, f.axis, f.wall + 3 * f.inward, t);
  double g1, g2;
  if (kind == BcKind::dirichlet) {
    g1 = (-77 * c0 + 43 * c1 - 17 * c2 + 3 * c3) / 12.0 + 5.0 * data;
    g2 = (-505 * c0 + 335 * c1 - 145 * c2 + 27 * c3) / 12.0 + 25.0 * data;
  } else {
    g1 = (5 * c0 + 9 * c1 - 5 * c2 + c3) / 10.0 + 1.2 * h * data;
    g2 = (-75 * c0 + 145 * c1 - 75 * c2 + 15 * c3) / 10.0 + 6.0 * h * data;
  }
  cellRef(a, g, f.axis, f.wall - f.inward, t) = g1;
  cellRef(a, g, f.axis, f.wall - 2 * f.inward, t) = g2;
}

}  // namespace

void fillPhysicalGhosts(LevelData& d, int comp, const PhysicalFill& fill) {
  const int g = d.ghost();
  const double h = d.spacing();
  assert(int(fill.size()) == d.numBoxes());
  for (int b = 0; b < d.numBoxes(); ++b) {
    const IndexBox& bx = d.box(b);
    Array& a = d.arr(b, comp);
    // normal fills over the interior tangential range
    for (int side = 0; side < 4; ++side) {
      if (!fill[b][side]) continue;
      const SideFrame f = frame(bx, side);
      const auto& sf = *fill[b][side];
      for (int t = 0; t < f.tExtent; ++t)
        fillLine(a, g, f, t, sf.kind, sf.data[t + 2], h);
    }
    // corner blocks: prefer the y-side formula, else the x-side
    const IntVec e = bx.extent();
    for (int cx = 0; cx < 2; ++cx)
      for (int cy = 0; cy < 2; ++cy) {
        const int sx = cx, sy = 2 + cy;
        const int ghostX0 = cx == 0 ? -2 : e[0];      // two ghost columns
        const int ghostY0 = cy == 0 ? -2 : e[1];      // two ghost rows
        if (fill[b][sy]) {
          const SideFrame f = frame(bx, sy);
          const auto& sf = *fill[b][sy];
          for (int t = ghostX0; t < ghostX0 + 2; ++t)
            fillLine(a, g, f, t, sf.kind, sf.data[t + 2], h);
        } else if (fill[b][sx]) {
          const SideFrame f = frame(bx, sx);
          const auto& sf = *fill[b][sx];
          for (int t = ghostY0; t < ghostY0 + 2; ++t)
            fillLine(a, g, f, t, sf.kind, sf.data[t + 2], h);
        }
      }
  }
}

void fillGhostLinesMasked(LevelData& d, int comp, int b, int side,
                          const std::vector<std::uint8_t>& mask, BcKind kind,
                          const Eigen::ArrayXd* data) {
  const IndexBox& bx = d.box(b);
  const SideFrame f = frame(bx, side);
  Array& a = d.arr(b, comp);
  const int g = d.ghost();
  const double h = d.spacing();
  const bool extended = data && data->size() == f.tExtent + 4;
  for (int t = 0; t < f.tExtent; ++t) {
    if (!mask[t]) continue;
    const double v = data ? (*data)[extended ? t + 2 : t] : 0.0;
    fillLine(a, g, f, t, kind, v, h);
  }
}

void zeroGhostLinesMasked(LevelData& d, int comp, int b, int side,
                          const std::vector<std::uint8_t>& mask) {
  const IndexBox& bx = d.box(b);
  const SideFrame f = frame(bx, side);
  Array& a = d.arr(b, comp);
  const int g = d.ghost();
  for (int t = 0; t < f.tExtent; ++t) {
    if (!mask[t]) continue;
    cellRef(a, g, f.axis, f.wall - f.inward, t) = 0.0;
    cellRef(a, g, f.axis, f.wall - 2 * f.inward, t) = 0.0;
  }
}

Eigen::ArrayXd boundaryNormalDerivative(const LevelData& d, int comp, int b,
                                        int side,
                                        const Eigen::ArrayXd& dirichlet) {
  const IndexBox& bx = d.box(b);
  const SideFrame f = frame(bx, side);
  const Array& a = d.arr(b, comp);
  const int g = d.ghost();
  const double h = d.spacing();
  Eigen::ArrayXd out(f.tExtent);
  for (int t = 0; t < f.tExtent; ++t) {
    const double c0 = cellVal(a, g, f.axis, f.wall, t);
    const double c1 = cellVal(a, g, f.axis, f.wall + f.inward, t);
    const double c2 = cellVal(a, g, f.axis, f.wall + 2 * f.inward, t);
    const double c3 = cellVal(a, g, f.axis, f.wall + 3 * f.inward, t);
    const double dv = dirichlet.size() == f.tExtent + 4 ? dirichlet[t + 2]
                                                        : dirichlet[t];
    out[t] = (-415 * c0 + 161 * c1 - 55 * c2 + 9 * c3) / (72.0 * h) +
             25.0 / (6.0 * h) * dv;
  }
  return out;
}

Eigen::ArrayXd extrapolateToSideFaces(const LevelData& d, int comp, int b,
                                      int side) {
  const IndexBox& bx = d.box(b);
  const SideFrame f = frame(bx, side);
  const Array& a = d.arr(b, comp);
  const int g = d.ghost();
  Eigen::ArrayXd out(f.tExtent);
  for (int t = 0; t < f.tExtent; ++t) {
    const double c0 = cellVal(a, g, f.axis, f.wall, t);
    const double c1 = cellVal(a, g, f.axis, f.wall + f.inward, t);
    const double c2 = cellVal(a, g, f.axis, f.wall + 2 * f.inward, t);
    const double c3 = cellVal(a, g, f.axis, f.wall + 3 * f.inward, t);
    out[t] = (25 * c0 - 23 * c1 + 13 * c2 - 3 * c3) / 12.0;
  }
  return out;
}

void extrapolateGhosts(LevelData& d, int comp, int b, int side) {
  const IndexBox& bx = d.box(b);
  const SideFrame f = frame(bx, side);
  Array& a = d.arr(b, comp);
  const int g = d.ghost();
  for (int t = 0; t < f.tExtent; ++t) {
    double c[5];
    for (int k = 0; k < 5; ++k)
      c[k] = cellVal(a, g, f.axis, f.wall + k * f.inward, t);
    const double g1 = 5 * c[0] - 10 * c[1] + 10 * c[2] - 5 * c[3] + c[4];
    const double g2 = 5 * g1 - 10 * c[0] + 10 * c[1] - 5 * c[2] + c[3];
    cellRef(a, g, f.axis, f.wall - f.inward, t) = g1;
    cellRef(a, g, f.axis, f.wall - 2 * f.inward, t) = g2;
  }
}

namespace {

// (-q(+2) + 8 q(+1) - 8 q(-1) + q(-2)) / 12h along axis, interior block.
inline Array axisGradient(const Array& a, int g, const IntVec& e, int axis,
                          double h) {
  if (axis == 0)
    return (-a.block(g + 2, g, e[0], e[1]) + 8 * a.block(g + 1, g, e[0], e[1]) -
            8 * a.block(g - 1, g, e[0], e[1]) + a.block(g - 2, g, e[0], e[1])) /
           (12.0 * h);
  return (-a.block(g, g + 2, e[0], e[1]) + 8 * a.block(g, g + 1, e[0], e[1]) -
          8 * a.block(g, g - 1, e[0], e[1]) + a.block(g, g - 2, e[0], e[1])) /
         (12.0 * h);
}

inline Array axisLaplacian(const Array& a, int g, const IntVec& e, int axis,
                           double h) {
  if (axis == 0)
    return (-a.block(g + 2, g, e[0], e[1]) + 16 * a.block(g + 1, g, e[0], e[1]) -
            30 * a.block(g, g, e[0], e[1]) + 16 * a.block(g - 1, g, e[0], e[1]) -
            a.block(g - 2, g, e[0], e[1])) /
           (12.0 * h * h);
  return (-a.block(g, g + 2, e[0], e[1]) + 16 * a.block(g, g + 1, e[0], e[1]) -
          30 * a.block(g, g, e[0], e[1]) + 16 * a.block(g, g - 1, e[0], e[1]) -
          a.block(g, g - 2, e[0], e[1])) /
         (12.0 * h * h);
}

}  // namespace

void gradient(const LevelData& q, LevelData& out) {
  const int g = q.ghost();
  const double h = q.spacing();
  for (int b = 0; b < q.numBoxes(); ++b) {
    const IntVec e = q.box(b).extent();
    const Array& a = q.arr(b, 0);
    const int go = out.ghost();
    for (int d = 0; d < kDim; ++d)
      out.arr(b, d).block(go, go, e[0], e[1]) = axisGradient(a, g, e, d, h);
  }
}

void divergence(const LevelData& u, LevelData& out) {
  const int g = u.ghost();
  const double h = u.spacing();
  for (int b = 0; b < u.numBoxes(); ++b) {
    const IntVec e = u.box(b).extent();
    const int go = out.ghost();
    out.arr(b, 0).block(go, go, e[0], e[1]) =
        axisGradient(u.arr(b, 0), g, e, 0, h) +
        axisGradient(u.arr(b, 1), g, e, 1, h);
  }
}

void laplacian(const LevelData& q, LevelData& out) {
  const int g = q.ghost();
  const double h = q.spacing();
  for (int b = 0; b < q.numBoxes(); ++b) {
    const IntVec e = q.box(b).extent();
    const int go = out.ghost();
    for (int c = 0; c < q.ncomp(); ++c)
      out.arr(b, c).block(go, go, e[0], e[1]) =
          axisLaplacian(q.arr(b, c), g, e, 0, h) +
          axisLaplacian(q.arr(b, c), g, e, 1, h);
  }
}

void applyHelmholtz(const LevelData& q, double alpha, double beta,
                    LevelData& out) {
  const int g = q.ghost();
  const double h = q.spacing();
  for (int b = 0; b < q.numBoxes(); ++b) {
    const IntVec e = q.box(b).extent();
    const int go = out.ghost();
    for (int c = 0; c < q.ncomp(); ++c)
      out.arr(b, c).block(go, go, e[0], e[1]) =
          alpha * q.arr(b, c).block(g, g, e[0], e[1]) +
          beta * (axisLaplacian(q.arr(b, c), g, e, 0, h) +
                  axisLaplacian(q.arr(b, c), g, e, 1, h));
  }
}

void convectionWithFluxes(const LevelData& u, LevelData& out,
                          std::array<FaceData, 2>& flux) {
  const double h = u.spacing();
  const int go = out.ghost();
  for (int d = 0; d < kDim; ++d)
    flux[d] = FaceData(u.hierarchy(), u.levelIndex(), d, kDim, 0);

  for (int b = 0; b < u.numBoxes(); ++b) {
    const IntVec e = u.box(b).extent();
    for (int c = 0; c < kDim; ++c)
      out.arr(b, c).block(go, go, e[0], e[1]).setZero();
  }

  for (int d = 0; d < kDim; ++d) {
    // Face averages of both components on d-faces, one transverse ghost so
    // the centered transverse gradient covers all interior faces.
    FaceData f0 = cellToFace(u, 0, d, 1);
    FaceData f1 = cellToFace(u, 1, d, 1);
    for (int b = 0; b < u.numBoxes(); ++b) {
      const IntVec e = u.box(b).extent();
      const int nf = e[d] + 1;   // faces along d
      const int nt = e[1 - d];   // transverse cells
      const Array& F0 = f0.arr(b);
      const Array& F1 = f1.arr(b);
      // Interior slices (drop the transverse ghost) and transverse gradients.
      Array a0, a1, g0, g1;
      if (d == 0) {
        a0 = F0.block(0, 1, nf, nt);
        a1 = F1.block(0, 1, nf, nt);
        g0 = (F0.block(0, 2, nf, nt) - F0.block(0, 0, nf, nt)) / (2.0 * h);
        g1 = (F1.block(0, 2, nf, nt) - F1.block(0, 0, nf, nt)) / (2.0 * h);
      } else {
        a0 = F0.block(1, 0, nt, nf);
        a1 = F1.block(1, 0, nt, nf);
        g0 = (F0.block(2, 0, nt, nf) - F0.block(0, 0, nt, nf)) / (2.0 * h);
        g1 = (F1.block(2, 0, nt, nf) - F1.block(0, 0, nt, nf)) / (2.0 * h);
      }
      const Array& adv = (d == 0) ? a0 : a1;   // normal velocity on d-faces
      const Array& gadv = (d == 0) ? g0 : g1;
      const double w = h * h / 12.0;
      Array fl0 = adv * a0 + w * gadv * g0;
      Array fl1 = adv * a1 + w * gadv * g1;
      flux[d].arr(b, 0) = fl0;
      flux[d].arr(b, 1) = fl1;
      if (d == 0) {
        out.arr(b, 0).block(go, go, e[0], e[1]) +=
            (fl0.block(1, 0, e[0], e[1]) - fl0.block(0, 0, e[0], e[1])) / h;
        out.arr(b, 1).block(go, go, e[0], e[1]) +=
            (fl1.block(1, 0, e[0], e[1]) - fl1.block(0, 0, e[0], e[1])) / h;
      } else {
        out.arr(b, 0).block(go, go, e[0], e[1]) +=
            (fl0.block(0, 1, e[0], e[1]) - fl0.block(0, 0, e[0], e[1])) / h;
        out.arr(b, 1).block(go, go, e[0], e[1]) +=
            (fl1.block(0, 1, e[0], e[1]) - fl1.block(0, 0, e[0], e[1])) / h;
      }
    }
  }
}

void convection(const LevelData& u, LevelData& out) {
  std::array<FaceData, 2> flux;
  convectionWithFluxes(u, out, flux);
}

void divergenceWithFluxes(const LevelData& u, LevelData& out,
                          std::array<FaceData, 2>& flux) {
  if (u.ncomp() != kDim)
    throw std::invalid_argument("divergence needs a D-component field");
  const double h = u.spacing();
  const int go = out.ghost();
  for (int d = 0; d < kDim; ++d) flux[d] = cellToFace(u, d, d, 0);
  for (int b = 0; b < u.numBoxes(); ++b) {
    const IntVec e = u.box(b).extent();
    const Array& fx = flux[0].arr(b);
    const Array& fy = flux[1].arr(b);
    out.arr(b, 0).block(go, go, e[0], e[1]) =
        (fx.block(1, 0, e[0], e[1]) - fx.block(0, 0, e[0], e[1])) / h +
        (fy.block(0, 1, e[0], e[1]) - fy.block(0, 0, e[0], e[1])) / h;
  }
}

void laplacianWithFluxes(const LevelData& q, LevelData& out,
                         std::array<FaceData, 2>& flux) {
  const double h = q.spacing();
  const int go = out.ghost();
  for (int d = 0; d < kDim; ++d)
    flux[d] = FaceData(q.hierarchy(), q.levelIndex(), d, q.ncomp(), 0);
  for (int c = 0; c < q.ncomp(); ++c) {
    for (int d = 0; d < kDim; ++d) {
      FaceData fd = faceNormalDerivative(q, c, d);
      for (int b = 0; b < q.numBoxes(); ++b) flux[d].arr(b, c) = fd.arr(b, 0);
    }
    for (int b = 0; b < q.numBoxes(); ++b) {
      const IntVec e = q.box(b).extent();
      const Array& fx = flux[0].arr(b, c);
      const Array& fy = flux[1].arr(b, c);
      out.arr(b, c).block(go, go, e[0], e[1]) =
          (fx.block(1, 0, e[0], e[1]) - fx.block(0, 0, e[0], e[1])) / h +
          (fy.block(0, 1, e[0], e[1]) - fy.block(0, 0, e[0], e[1])) / h;
    }
  }
}

}  // namespace amrins
