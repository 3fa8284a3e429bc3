#pragma once

#include <deque>
#include <map>
#include <memory>

#include "amrins/boundary.hpp"
#include "amrins/composite.hpp"

namespace amrins {

/// Cubic-Lagrange weights through four equispaced snapshots, newest first:
/// index i corresponds to time tNewest - i*k, and eta = t* - (tNewest - k).
/// Value weights sum to one, derivative weights (units 1/k) to zero.
struct TemporalWeights {
  Eigen::Array4d value;
  Eigen::Array4d derivative;
};

TemporalWeights temporalWeights(double k, double eta);

/// Rolling four-snapshot record of one level's evolved velocity, stored with
/// filled ghosts so spatial operators apply near the level boundary.
class TimeHistory {
 public:
  void push(const LevelData& w, double time);
  bool ready() const { return snaps_.size() >= 4; }
  int size() const { return int(snaps_.size()); }
  double newestTime() const { return snaps_.front().time; }
  double spacing() const;
  const LevelData& snapshot(int i) const { return snaps_[i].w; }  // 0 newest
  double snapshotTime(int i) const { return snaps_[i].time; }

  /// Temporal interpolation of the snapshots to time t (cell data, all
  /// cells including ghosts).
  void interpolateTo(double t, LevelData& out) const;

 private:
  struct Snap {
    LevelData w;
    double time;
  };
  std::deque<Snap> snaps_;  // front = newest
};

/// Face data of the localized boundary conditions on one level's coarse-fine
/// interface at one stage time, plus ghost-band values for operator fills.
struct InterfaceStageData {
  double time = 0.0;
  /// Per box: velocity values on the interface cell band (outer ghosts and
  /// the two inner layers), on a grow(box,2) frame.
  std::vector<std::vector<Array>> ghostBand;  // [box][comp]
  /// Convection values on the same band, for extending the auxiliary
  /// scalar equation's source across the interface.
  std::vector<std::vector<Array>> convBand;   // [box][comp]
  struct SideArrays {
    Eigen::ArrayXd wn;    // corrected outward normal evolved velocity
    Eigen::ArrayXd un;    // corrected outward normal projected velocity
    Eigen::ArrayXd qdat;  // Neumann datum for the auxiliary scalar
  };
  std::vector<std::array<SideArrays, 4>> sides;  // per box
  std::vector<double> deltaW, deltaU;            // per component corrections
};

/// Builds interface conditions for one level from the next coarser level's
/// time history: locates the two-layer cell bands around the interface,
/// interpolates the velocity and its derived fields (convection, Laplacian)
/// in space, converts to face averages, interpolates in time per stage, and
/// enforces the per-component flux balances.
class InterfaceConditions {
 public:
  InterfaceConditions(HierarchyPtr h, int level, FlowBc bc, double nu);

  /// Interface-face mask per box side (faces not shared with the level or a
  /// physical wall).
  const std::vector<std::array<std::vector<std::uint8_t>, 4>>& masks() const {
    return masks_;
  }
  int faceCount(int comp) const { return faceCount_[comp]; }
  const std::vector<int>& boxComponent() const { return boxComp_; }
  int numComponents() const { return nComps_; }

  /// Assemble stage data at time t from the coarse history. The balance
  /// residuals before correction are recorded for diagnostics.
  InterfaceStageData stage(const TimeHistory& coarse, double t);

  double lastBalanceResidual() const { return lastResidual_; }

 private:
  struct SnapshotFaces {
    Eigen::ArrayXd wn, convn, lapn;  // outward-normal face averages
  };
  struct SnapshotDerived {
    double time;
    // per box: values on grow(box,2) frames
    std::vector<std::vector<Array>> w, conv;
    std::vector<std::array<SnapshotFaces, 4>> faces;
  };
  const SnapshotDerived& derived(const TimeHistory& coarse, int i);
  SnapshotDerived build(const LevelData& wCoarse, double time);

  HierarchyPtr hier_;
  int level_;
  FlowBc bc_;
  double nu_;
  std::vector<std::array<std::vector<std::uint8_t>, 4>> masks_;
  std::vector<std::vector<IndexBox>> band_;  // outer+inner rim per box
  std::vector<std::vector<IndexBox>> outer_; // interface ghost cells per box
  std::vector<int> boxComp_;
  std::vector<int> faceCount_;
  int nComps_ = 0;
  double lastResidual_ = 0.0;
  std::map<long long, SnapshotDerived> cache_;  // keyed by quantized time
  long long timeKey(double t) const;
};

}  // namespace amrins
