#pragma once

#include <Eigen/Core>
#include <array>
#include <optional>
#include <vector>

#include "amrins/level_data.hpp"

namespace amrins {

enum class BcKind { periodic, dirichlet, neumann };

/// Face-averaged boundary data along one box side, extended two faces past
/// each end so corner ghost fills can reuse the same formulas tangentially.
/// data[k + 2] is the face at tangential lattice index (side lo + k).
struct SideFill {
  BcKind kind = BcKind::dirichlet;
  Eigen::ArrayXd data;  // length = side extent + 4
};

/// Per box, per side, the physical fill (sides not on a physical boundary
/// carry nullopt and are expected to be filled by exchange or interface data).
using PhysicalFill = std::vector<std::array<std::optional<SideFill>, 4>>;

/// Two-layer ghost fill for one component from the printed fifth-order
/// closures. Normal fills first, then corner blocks tangentially (y-side
/// formula where the y-side is physical, else the x-side formula).
void fillPhysicalGhosts(LevelData& d, int comp, const PhysicalFill& fill);

/// Fill the two ghost cells behind individual faces of one box side, only at
/// tangential positions where mask[t] != 0. data is indexed like SideFill
/// (extended by two) when its length is extent+4, else plainly; null means
/// homogeneous. Used for jagged coarse-fine interface segments.
void fillGhostLinesMasked(LevelData& d, int comp, int b, int side,
                          const std::vector<std::uint8_t>& mask, BcKind kind,
                          const Eigen::ArrayXd* data);

/// Zero the two ghost cells behind masked faces (frozen-ghost closure).
void zeroGhostLinesMasked(LevelData& d, int comp, int b, int side,
                          const std::vector<std::uint8_t>& mask);

/// Fourth-order face average of the outward normal derivative on a physical
/// side with Dirichlet data, from four interior cells plus the face value.
/// Output indexed over the side's faces (no extension).
Eigen::ArrayXd boundaryNormalDerivative(const LevelData& d, int comp, int b,
                                        int side, const Eigen::ArrayXd& dirichlet);

/// Fourth-order one-sided extrapolation of cell-averaged data to the face
/// values on a physical side (no boundary data used).
Eigen::ArrayXd extrapolateToSideFaces(const LevelData& d, int comp, int b,
                                      int side);

/// Degree-4 one-sided extension of interior cell averages into two ghost
/// layers on a physical side, including the tangential ghost range where the
/// adjacent ghosts are already filled.
void extrapolateGhosts(LevelData& d, int comp, int b, int side);

// ---- single-level fourth-order operators (ghosts must be filled) ----

void gradient(const LevelData& q, LevelData& out);             // 1 -> D comps
void divergence(const LevelData& u, LevelData& out);           // D -> 1
void laplacian(const LevelData& q, LevelData& out);            // per comp
/// out = alpha*q + beta*L q, one pass (Helmholtz-type application).
void applyHelmholtz(const LevelData& q, double alpha, double beta,
                    LevelData& out);

/// Flux-form fourth-order convection D<uu> (see the face-product rule with
/// transverse gradients). Requires 2 ghost layers including corners.
void convection(const LevelData& u, LevelData& out);

/// Same as convection but also returns the raw face fluxes per axis
/// (flux[d] has D components: flux of u_c through faces normal to d).
void convectionWithFluxes(const LevelData& u, LevelData& out,
                          std::array<FaceData, 2>& flux);

/// Divergence as flux differences, exposing fluxes for refluxing:
/// out_c = sum_d (F_d[c](hi) - F_d[c](lo))/h with F = cellToFace(u_c, d)…
/// For the Laplacian, fluxes are faceNormalDerivative of each component.
void divergenceWithFluxes(const LevelData& u, LevelData& out,
                          std::array<FaceData, 2>& flux);
void laplacianWithFluxes(const LevelData& q, LevelData& out,
                         std::array<FaceData, 2>& flux);

}  // namespace amrins
