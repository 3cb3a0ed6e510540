#include "ecal/align.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <optional>

#include "ecal/error.hpp"
#include "ecal/interp.hpp"

namespace ecal {
namespace {

void require_shared(const Grid& a, const Grid& b, const char* where) {
  if (!a.matches(b)) {
    throw DataError(std::string(where) + ": inputs must share a grid");
  }
}

std::vector<double> path_to_warp(std::span<const double> t,
                                 const std::vector<std::pair<int, int>>& nodes) {
  std::vector<double> g(t.size(), 0.0);
  for (std::size_t a = 0; a + 1 < nodes.size(); ++a) {
    const auto [i0, j0] = nodes[a];
    const auto [i1, j1] = nodes[a + 1];
    g[static_cast<std::size_t>(i0)] = t[static_cast<std::size_t>(j0)];
    for (int n = i0 + 1; n < i1; ++n) {
      const double w = (t[static_cast<std::size_t>(n)] - t[static_cast<std::size_t>(i0)]) /
                       (t[static_cast<std::size_t>(i1)] - t[static_cast<std::size_t>(i0)]);
      g[static_cast<std::size_t>(n)] =
          t[static_cast<std::size_t>(j0)] +
          w * (t[static_cast<std::size_t>(j1)] - t[static_cast<std::size_t>(j0)]);
    }
  }
  g.back() = 1.0;
  return g;
}

}  // namespace

Srvf group_action(const Srvf& q, const WarpingFunction& gamma) {
  require_shared(q.grid(), gamma.grid(), "group_action");
  const std::vector<double> slope =
      difference(gamma.grid().points(), gamma.values(), DifferenceScheme::kCentral);
  MonotoneCubic interp(q.grid().points(), q.values());
  std::vector<double> out(q.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = interp(gamma[i]) * std::sqrt(std::max(0.0, slope[i]));
  }
  return Srvf(q.grid(), std::move(out), q.anchor(), q.source_grid());
}

std::vector<std::pair<int, int>> dp_slope_set(int max_step) {
  if (max_step < 1) {
    throw ConfigError("dp_slope_set: max_step must be >= 1");
  }
  std::vector<std::pair<int, int>> steps{{1, 1}};
  for (int p = 1; p <= max_step; ++p) {
    for (int r = 1; r <= max_step; ++r) {
      if ((p != 1 || r != 1) && std::gcd(p, r) == 1) {
        steps.emplace_back(p, r);
      }
    }
  }
  return steps;
}

double dp_edge_cost(std::span<const double> t, std::span<const double> q_ref,
                    std::span<const double> q_mov, int k, int l, int i, int j, double lambda) {
  const auto uk = static_cast<std::size_t>(k);
  const auto ul = static_cast<std::size_t>(l);
  const auto ui = static_cast<std::size_t>(i);
  const auto uj = static_cast<std::size_t>(j);
  const double dt = t[ui] - t[uk];
  const double m = (t[uj] - t[ul]) / dt;
  const double sm = std::sqrt(m);

  std::size_t cursor = ul;
  double prev = 0.0;
  double cost = 0.0;
  for (std::size_t n = uk; n <= ui; ++n) {
    const double g = n == ui ? t[uj] : t[ul] + m * (t[n] - t[uk]);
    while (cursor + 1 < uj && t[cursor + 1] <= g) {
      ++cursor;
    }
    double qv;
    if (g >= t[uj]) {
      qv = q_mov[uj];
    } else {
      const double w = (g - t[cursor]) / (t[cursor + 1] - t[cursor]);
      qv = (1.0 - w) * q_mov[cursor] + w * q_mov[cursor + 1];
    }
    const double d = q_ref[n] - sm * qv;
    const double d2 = d * d;
    if (n > uk) {
      cost += 0.5 * (t[n] - t[n - 1]) * (prev + d2);
    }
    prev = d2;
  }
  if (lambda > 0.0) {
    cost += lambda * (sm - 1.0) * (sm - 1.0) * dt;
  }
  return cost;
}

DpPath dp_solve(const Srvf& q_ref, const Srvf& q_mov, const DpOptions& options) {
  require_shared(q_ref.grid(), q_mov.grid(), "dp_align");
  if (options.lambda < 0.0 || !std::isfinite(options.lambda)) {
    throw ConfigError("dp_align: lambda must be a finite nonnegative number");
  }
  const auto steps = dp_slope_set(options.max_step);
  const auto t = q_ref.grid().points();
  const auto a = q_ref.values();
  const auto b = q_mov.values();
  const int n = static_cast<int>(t.size());
  const auto at = [n](int i, int j) { return static_cast<std::size_t>(i * n + j); };

  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> energy(static_cast<std::size_t>(n * n), kInf);
  std::vector<int> parent(static_cast<std::size_t>(n * n), -1);
  energy[0] = 0.0;

  for (int i = 1; i < n; ++i) {
    for (int j = 1; j < n; ++j) {
      double best = kInf;
      int best_parent = -1;
      for (const auto& [p, r] : steps) {
        const int k = i - p;
        const int l = j - r;
        if (k < 0 || l < 0) continue;
        const double base = energy[at(k, l)];
        if (base == kInf) continue;
        const double c = base + dp_edge_cost(t, a, b, k, l, i, j, options.lambda);
        if (c < best) {
          best = c;
          best_parent = k * n + l;
        }
      }
      energy[at(i, j)] = best;
      parent[at(i, j)] = best_parent;
    }
  }

  DpPath path;
  path.cost = energy[at(n - 1, n - 1)];
  if (path.cost == kInf) {
    throw NumericalError("dp_align: lattice corner unreachable with the configured slopes");
  }
  int node = (n - 1) * n + (n - 1);
  while (node >= 0) {
    path.nodes.emplace_back(node / n, node % n);
    if (node == 0) break;
    node = parent[static_cast<std::size_t>(node)];
  }
  std::reverse(path.nodes.begin(), path.nodes.end());
  return path;
}

double alignment_energy(const Srvf& q_ref, const Srvf& q_mov, const WarpingFunction& gamma,
                        double lambda) {
  double e = squared_distance(q_ref, group_action(q_mov, gamma));
  if (lambda > 0.0) {
    const std::vector<double> slope =
        difference(gamma.grid().points(), gamma.values(), DifferenceScheme::kCentral);
    std::vector<double> dev(slope.size());
    for (std::size_t i = 0; i < dev.size(); ++i) {
      dev[i] = std::sqrt(std::max(0.0, slope[i])) - 1.0;
    }
    e += lambda * trapezoid_product(gamma.grid().points(), dev, dev);
  }
  return e;
}

WarpingFunction dp_align(const Srvf& q_ref, const Srvf& q_mov, const DpOptions& options) {
  const DpPath path = dp_solve(q_ref, q_mov, options);
  const Grid& grid = q_ref.grid();
  std::vector<double> g = path_to_warp(grid.points(), path.nodes);
  WarpingFunction gamma = WarpingFunction::repaired(grid, g, options.repair_eps);

  if (options.refine) {
    double energy = alignment_energy(q_ref, q_mov, gamma, options.lambda);
    for (int pass = 0; pass < options.refine_passes; ++pass) {
      const auto cur = gamma.values();
      std::vector<double> smooth(cur.begin(), cur.end());
      for (std::size_t i = 1; i + 1 < cur.size(); ++i) {
        smooth[i] = 0.25 * cur[i - 1] + 0.5 * cur[i] + 0.25 * cur[i + 1];
      }
      WarpingFunction candidate = WarpingFunction::repaired(grid, smooth, options.repair_eps);
      const double e = alignment_energy(q_ref, q_mov, candidate, options.lambda);
      if (e > energy) break;
      energy = e;
      gamma = std::move(candidate);
    }
  }
  return gamma;
}

double amplitude_distance(const Srvf& q_ref, const Srvf& q_mov, const DpOptions& options) {
  const WarpingFunction gamma = dp_align(q_ref, q_mov, options);
  return squared_distance(q_ref, group_action(q_mov, gamma));
}

GridFunction warp_curve(const GridFunction& f, const WarpingFunction& gamma) {
  if (f.size() != gamma.size()) {
    throw DataError("warp_curve: warp and curve lengths differ");
  }
  const Grid& grid = f.grid();
  const double lo = grid.front();
  const double hi = grid.back();
  MonotoneCubic interp(grid.points(), f.values());
  std::vector<double> out(f.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double tau = std::clamp(lo + gamma[i] * (hi - lo), lo, hi);
    out[i] = interp(tau);
  }
  return GridFunction(grid, std::move(out));
}

AlignmentResult align_curve(const GridFunction& reference, const GridFunction& curve,
                            const DpOptions& options) {
  require_shared(reference.grid(), curve.grid(), "align_curve");
  const Srvf q_ref = to_srvf(reference);
  const Srvf q = to_srvf(curve);
  WarpingFunction gamma = dp_align(q_ref, q, options);
  GridFunction aligned = warp_curve(curve, gamma);
  const double dist = squared_distance(q_ref, group_action(q, gamma));
  return AlignmentResult{std::move(gamma), std::move(aligned), dist, options.lambda};
}

DecomposedEnsemble decompose_ensemble(const GridFunction& reference,
                                      std::span<const GridFunction> curves,
                                      const Eigen::MatrixXd& inputs, const DpOptions& options,
                                      std::string reference_id) {
  if (static_cast<std::size_t>(inputs.rows()) != curves.size()) {
    throw DataError("decompose_ensemble: design has " + std::to_string(inputs.rows()) +
                    " rows for " + std::to_string(curves.size()) + " curves");
  }
  for (const auto& c : curves) {
    require_shared(reference.grid(), c.grid(), "decompose_ensemble");
  }
  const Srvf q_ref = to_srvf(reference);
  const auto n = static_cast<std::ptrdiff_t>(curves.size());

  std::vector<std::optional<AlignmentResult>> results(curves.size());
  std::vector<std::optional<ShootingVector>> shooting(curves.size());
  std::vector<std::exception_ptr> failures(curves.size());

#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t c = 0; c < n; ++c) {
    const auto u = static_cast<std::size_t>(c);
    try {
      const Srvf q = to_srvf(curves[u]);
      WarpingFunction gamma = dp_align(q_ref, q, options);
      GridFunction aligned = warp_curve(curves[u], gamma);
      const double dist = squared_distance(q_ref, group_action(q, gamma));
      shooting[u].emplace(gamma_to_shooting(gamma));
      results[u].emplace(AlignmentResult{std::move(gamma), std::move(aligned), dist,
                                         options.lambda});
    } catch (...) {
      failures[u] = std::current_exception();
    }
  }
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }

  DecomposedEnsemble out{std::move(reference_id), reference, {}, {}, {}, {}, inputs,
                         options.lambda};
  for (std::size_t c = 0; c < curves.size(); ++c) {
    out.aligned_curves.push_back(std::move(results[c]->aligned));
    out.warps.push_back(std::move(results[c]->gamma));
    out.amplitude_distances.push_back(results[c]->amplitude_dist);
    out.shooting_vectors.push_back(std::move(*shooting[c]));
  }
  return out;
}

}  // namespace ecal
