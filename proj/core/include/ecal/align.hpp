#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ecal/grid.hpp"
#include "ecal/warping.hpp"

namespace ecal {

struct DpOptions {
  // Weight of the elastic penalty ||sqrt(gamma') - 1||^2.
  double lambda = 0.0;
  // Lattice steps are (p, r) with 1 <= p, r <= max_step and gcd(p, r) = 1.
  int max_step = 4;
  // Passes of [1/4, 1/2, 1/4] smoothing on the lattice path; each pass is
  // kept only when it does not raise the alignment energy.
  bool refine = true;
  int refine_passes = 1;
  double repair_eps = 1e-8;
};

/// (q o gamma) sqrt(gamma'), the norm-preserving action of a warp on an SRVF.
Srvf group_action(const Srvf& q, const WarpingFunction& gamma);

std::vector<std::pair<int, int>> dp_slope_set(int max_step);

// Cost of the straight lattice segment (k, l) -> (i, j): trapezoid over the
// reference grid points t_k..t_i of (q_ref - sqrt(m) q_mov(gamma))^2, plus
// lambda (sqrt(m) - 1)^2 (t_i - t_k), where m is the segment slope.
double dp_edge_cost(std::span<const double> t, std::span<const double> q_ref,
                    std::span<const double> q_mov, int k, int l, int i, int j, double lambda);

struct DpPath {
  std::vector<std::pair<int, int>> nodes;  // (reference index, warped index)
  double cost = 0.0;
};

DpPath dp_solve(const Srvf& q_ref, const Srvf& q_mov, const DpOptions& options = {});

// Warp sampled on the shared grid so that (q_mov o gamma) sqrt(gamma')
// matches q_ref; strictly increasing after repair.
WarpingFunction dp_align(const Srvf& q_ref, const Srvf& q_mov, const DpOptions& options = {});

// ||q_ref - (q_mov o gamma) sqrt(gamma')||^2 at the DP warp.
double amplitude_distance(const Srvf& q_ref, const Srvf& q_mov, const DpOptions& options = {});

// Alignment energy of a given warp, including the penalty term.
double alignment_energy(const Srvf& q_ref, const Srvf& q_mov, const WarpingFunction& gamma,
                        double lambda);

// f o gamma on f's own grid; gamma acts on the normalized time axis.
GridFunction warp_curve(const GridFunction& f, const WarpingFunction& gamma);

struct AlignmentResult {
  WarpingFunction gamma;
  GridFunction aligned;
  double amplitude_dist;
  double penalty_lambda;
};

AlignmentResult align_curve(const GridFunction& reference, const GridFunction& curve,
                            const DpOptions& options = {});

struct DecomposedEnsemble {
  std::string reference_id;
  GridFunction reference;
  std::vector<GridFunction> aligned_curves;
  std::vector<WarpingFunction> warps;
  std::vector<ShootingVector> shooting_vectors;
  std::vector<double> amplitude_distances;
  Eigen::MatrixXd inputs;
  double lambda = 0.0;

  std::size_t size() const noexcept { return aligned_curves.size(); }
};

// Aligns every curve to `reference` and maps each warp to its shooting vector.
// Curves are processed independently, so the result does not depend on the
// evaluation order.
DecomposedEnsemble decompose_ensemble(const GridFunction& reference,
                                      std::span<const GridFunction> curves,
                                      const Eigen::MatrixXd& inputs, const DpOptions& options = {},
                                      std::string reference_id = "reference");

}  // namespace ecal
