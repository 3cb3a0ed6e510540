#include "ecal/summary.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>

#include "ecal/error.hpp"

namespace ecal {
namespace {

std::vector<double> sorted(std::span<const double> x) {
  std::vector<double> v(x.begin(), x.end());
  std::sort(v.begin(), v.end());
  return v;
}

double quantile_sorted(const std::vector<double>& v, double p) {
  const double h = p * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double mean_of(std::span<const double> x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double sd_of(std::span<const double> x) {
  const double m = mean_of(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return std::sqrt(s / static_cast<double>(x.size() - 1));
}

void require_draws(std::span<const double> x, std::size_t n, const char* what) {
  if (x.size() < n) {
    throw DataError(std::string(what) + ": not enough draws");
  }
}

}  // namespace

double quantile(std::span<const double> x, double p) {
  require_draws(x, 1, "quantile");
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ConfigError("quantile: p must lie in [0,1]");
  }
  return quantile_sorted(sorted(x), p);
}

Interval credible_interval(std::span<const double> x, double level) {
  require_draws(x, 1, "credible_interval");
  if (!(level > 0.0 && level < 1.0)) {
    throw ConfigError("credible_interval: level must lie in (0,1)");
  }
  const auto v = sorted(x);
  const double tail = 0.5 * (1.0 - level);
  return {quantile_sorted(v, tail), quantile_sorted(v, 1.0 - tail)};
}

Interval snap_to_support(Interval iv, double support_lo, double support_hi, double tol_fraction) {
  const double tol = tol_fraction * (support_hi - support_lo);
  if (!std::isfinite(tol)) return iv;
  if (std::isfinite(support_lo) && iv.lo - support_lo <= tol) iv.lo = support_lo;
  if (std::isfinite(support_hi) && support_hi - iv.hi <= tol) iv.hi = support_hi;
  return iv;
}

double ks_statistic_uniform(std::span<const double> x, double lo, double hi) {
  require_draws(x, 1, "ks_statistic_uniform");
  const auto v = sorted(x);
  const double n = static_cast<double>(v.size());
  double d = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double f = std::clamp((v[i] - lo) / (hi - lo), 0.0, 1.0);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

double effective_sample_size(std::span<const double> x) {
  require_draws(x, 4, "effective_sample_size");
  const std::size_t n = x.size();
  const double m = mean_of(x);
  std::vector<double> c(x.size());
  for (std::size_t i = 0; i < n; ++i) c[i] = x[i] - m;
  const auto autocov = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) s += c[i] * c[i + lag];
    return s / static_cast<double>(n);
  };
  const double c0 = autocov(0);
  if (!(c0 > 0.0)) return static_cast<double>(n);
  double sum = 0.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; 2 * k + 1 < n; ++k) {
    double pair = (autocov(2 * k) + autocov(2 * k + 1)) / c0;
    if (pair <= 0.0) break;
    pair = std::min(pair, prev_pair);
    prev_pair = pair;
    sum += pair;
  }
  const double tau = std::max(2.0 * sum - 1.0, 1e-12);
  return std::min(static_cast<double>(n) / tau, static_cast<double>(n));
}

double mcse_mean(std::span<const double> x) {
  return sd_of(x) / std::sqrt(effective_sample_size(x));
}

Density2d kde_2d(std::span<const double> x, std::span<const double> y, int nodes) {
  if (x.size() != y.size()) {
    throw DataError("kde_2d: coordinate lengths differ");
  }
  require_draws(x, 2, "kde_2d");
  if (nodes < 8) {
    throw ConfigError("kde_2d: at least 8 nodes per axis");
  }
  const auto n = static_cast<Eigen::Index>(x.size());
  const double factor = std::pow(static_cast<double>(n), -1.0 / 6.0);
  const auto axis = [&](std::span<const double> v, double& h) {
    const double sd = sd_of(v);
    const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
    h = sd > 0.0 ? sd * factor : std::max(1e-6, 1e-3 * std::abs(*mn));
    std::vector<double> g(static_cast<std::size_t>(nodes));
    const double lo = *mn - 3.0 * h;
    const double hi = *mx + 3.0 * h;
    for (int i = 0; i < nodes; ++i) g[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (nodes - 1);
    return g;
  };
  double hx = 0.0, hy = 0.0;
  Density2d d{axis(x, hx), axis(y, hy), {}};
  const auto kernel = [&](std::span<const double> v, const std::vector<double>& g, double h) {
    Eigen::MatrixXd k(n, nodes);
    const double norm = 1.0 / (h * std::sqrt(2.0 * std::numbers::pi));
    for (Eigen::Index i = 0; i < n; ++i) {
      for (int j = 0; j < nodes; ++j) {
        const double z = (g[static_cast<std::size_t>(j)] - v[static_cast<std::size_t>(i)]) / h;
        k(i, j) = norm * std::exp(-0.5 * z * z);
      }
    }
    return k;
  };
  const Eigen::MatrixXd kx = kernel(x, d.x, hx);
  const Eigen::MatrixXd ky = kernel(y, d.y, hy);
  d.value = kx.transpose() * ky / static_cast<double>(n);
  return d;
}

HpdRegion hpd_region(const Density2d& d, double mass) {
  if (!(mass > 0.0 && mass < 1.0)) {
    throw ConfigError("hpd_region: mass must lie in (0,1)");
  }
  const double cell = (d.x[1] - d.x[0]) * (d.y[1] - d.y[0]);
  std::vector<double> v(d.value.data(), d.value.data() + d.value.size());
  std::sort(v.begin(), v.end(), std::greater<>());
  const double total = std::accumulate(v.begin(), v.end(), 0.0);
  double acc = 0.0;
  std::size_t count = 0;
  while (count < v.size() && acc < mass * total) acc += v[count++];
  return {v[count - 1], static_cast<double>(count) * cell};
}

std::vector<Polyline> contour_lines(const Density2d& d, double level) {
  const auto nx = static_cast<int>(d.x.size());
  const auto ny = static_cast<int>(d.y.size());
  // Pad by one node of zeros on every side.
  const int px = nx + 2;
  const int py = ny + 2;
  const double dx = d.x[1] - d.x[0];
  const double dy = d.y[1] - d.y[0];
  const auto val = [&](int i, int j) {
    if (i <= 0 || j <= 0 || i > nx || j > ny) return 0.0;
    return d.value(i - 1, j - 1);
  };
  const auto xc = [&](int i) { return d.x[0] + (i - 1) * dx; };
  const auto yc = [&](int j) { return d.y[0] + (j - 1) * dy; };

  // Edge ids: horizontal edge (i,j)-(i+1,j) -> 2*(i*py+j); vertical (i,j)-(i,j+1) -> +1.
  const auto hedge = [&](int i, int j) { return 2L * (static_cast<long>(i) * py + j); };
  const auto vedge = [&](int i, int j) { return 2L * (static_cast<long>(i) * py + j) + 1; };
  const auto point_on = [&](long e) {
    const long base = e / 2;
    const int i = static_cast<int>(base / py);
    const int j = static_cast<int>(base % py);
    if (e % 2 == 0) {
      const double a = val(i, j), b = val(i + 1, j);
      const double w = (level - a) / (b - a);
      return std::make_pair(xc(i) + w * dx, yc(j));
    }
    const double a = val(i, j), b = val(i, j + 1);
    const double w = (level - a) / (b - a);
    return std::make_pair(xc(i), yc(j) + w * dy);
  };

  std::vector<std::pair<long, long>> segments;
  for (int i = 0; i + 1 < px; ++i) {
    for (int j = 0; j + 1 < py; ++j) {
      const bool b0 = val(i, j) > level;
      const bool b1 = val(i + 1, j) > level;
      const bool b2 = val(i + 1, j + 1) > level;
      const bool b3 = val(i, j + 1) > level;
      const long bottom = hedge(i, j), right = vedge(i + 1, j), top = hedge(i, j + 1),
                 left = vedge(i, j);
      const int code = (b0 ? 1 : 0) | (b1 ? 2 : 0) | (b2 ? 4 : 0) | (b3 ? 8 : 0);
      const double center = 0.25 * (val(i, j) + val(i + 1, j) + val(i + 1, j + 1) + val(i, j + 1));
      switch (code) {
        case 0:
        case 15:
          break;
        case 1: case 14: segments.emplace_back(left, bottom); break;
        case 2: case 13: segments.emplace_back(bottom, right); break;
        case 3: case 12: segments.emplace_back(left, right); break;
        case 4: case 11: segments.emplace_back(right, top); break;
        case 6: case 9: segments.emplace_back(bottom, top); break;
        case 7: case 8: segments.emplace_back(left, top); break;
        case 5:
          if (center > level) {
            segments.emplace_back(left, top);
            segments.emplace_back(bottom, right);
          } else {
            segments.emplace_back(left, bottom);
            segments.emplace_back(right, top);
          }
          break;
        case 10:
          if (center > level) {
            segments.emplace_back(left, bottom);
            segments.emplace_back(right, top);
          } else {
            segments.emplace_back(left, top);
            segments.emplace_back(bottom, right);
          }
          break;
      }
    }
  }

  std::map<long, std::vector<std::size_t>> by_edge;
  for (std::size_t s = 0; s < segments.size(); ++s) {
    by_edge[segments[s].first].push_back(s);
    by_edge[segments[s].second].push_back(s);
  }
  std::vector<bool> used(segments.size(), false);
  std::vector<Polyline> lines;
  for (std::size_t s0 = 0; s0 < segments.size(); ++s0) {
    if (used[s0]) continue;
    used[s0] = true;
    const long start = segments[s0].first;
    long cur = segments[s0].second;
    Polyline line{point_on(start), point_on(cur)};
    while (cur != start) {
      std::size_t next = segments.size();
      for (std::size_t s : by_edge[cur]) {
        if (!used[s]) {
          next = s;
          break;
        }
      }
      if (next == segments.size()) break;
      used[next] = true;
      cur = segments[next].first == cur ? segments[next].second : segments[next].first;
      line.push_back(point_on(cur));
    }
    if (cur == start) line.back() = line.front();
    lines.push_back(std::move(line));
  }
  return lines;
}

Band pointwise_band(std::span<const GridFunction> curves, double level) {
  if (curves.empty()) {
    throw DataError("pointwise_band: no curves");
  }
  const double tail = 0.5 * (1.0 - level);
  const std::size_t m = curves.front().size();
  Band b{std::vector<double>(m), std::vector<double>(m), std::vector<double>(m)};
  std::vector<double> col(curves.size());
  for (std::size_t t = 0; t < m; ++t) {
    for (std::size_t c = 0; c < curves.size(); ++c) col[c] = curves[c][t];
    std::sort(col.begin(), col.end());
    b.lower[t] = quantile_sorted(col, tail);
    b.median[t] = quantile_sorted(col, 0.5);
    b.upper[t] = quantile_sorted(col, 1.0 - tail);
  }
  return b;
}

double band_coverage(const Band& band, std::span<const double> obs) {
  if (obs.size() != band.lower.size()) {
    throw DataError("band_coverage: length mismatch");
  }
  std::size_t inside = 0;
  for (std::size_t t = 0; t < obs.size(); ++t) {
    if (obs[t] >= band.lower[t] && obs[t] <= band.upper[t]) ++inside;
  }
  return static_cast<double>(inside) / static_cast<double>(obs.size());
}

Histogram histogram(std::span<const double> x, int bins, double lo, double hi) {
  if (bins < 1 || !(hi > lo)) {
    throw ConfigError("histogram: need bins >= 1 and hi > lo");
  }
  Histogram h{std::vector<double>(static_cast<std::size_t>(bins) + 1),
              std::vector<double>(static_cast<std::size_t>(bins), 0.0)};
  const double w = (hi - lo) / bins;
  for (int b = 0; b <= bins; ++b) h.edges[static_cast<std::size_t>(b)] = lo + b * w;
  for (double v : x) {
    if (v < lo || v > hi) continue;
    const int b = std::min(bins - 1, static_cast<int>((v - lo) / w));
    h.density[static_cast<std::size_t>(b)] += 1.0;
  }
  for (double& v : h.density) v /= static_cast<double>(x.size()) * w;
  return h;
}

}  // namespace ecal
