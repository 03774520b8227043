#pragma once

// Independent brute-force oracles used by the unit and acceptance suites.
// Everything here recomputes results from first principles (pairwise scans,
// recursive flood fill) and must stay independent of the library's
// implementation paths.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "segprior/grid.hpp"
#include "segprior/rng.hpp"
#include "segprior/transforms.hpp"

namespace oracles {

using segprior::BinaryMask;
using segprior::Connectivity;
using segprior::GridDomain;
using segprior::Rng;
using segprior::ScalarGrid;

// O(n^2) squared Euclidean distance to the nearest source pixel.
inline std::vector<std::int64_t> edt_squared(const BinaryMask& src) {
  std::vector<std::pair<int, int>> sources;
  for (int r = 0; r < src.height(); ++r)
    for (int c = 0; c < src.width(); ++c)
      if (src.at(r, c)) sources.emplace_back(r, c);

  std::vector<std::int64_t> out(src.size(), 0);
  for (int r = 0; r < src.height(); ++r) {
    for (int c = 0; c < src.width(); ++c) {
      std::int64_t best = std::numeric_limits<std::int64_t>::max();
      for (const auto& [sr, sc] : sources) {
        const std::int64_t dr = r - sr;
        const std::int64_t dc = c - sc;
        best = std::min(best, dr * dr + dc * dc);
      }
      out[src.domain().index(r, c)] = best;
    }
  }
  return out;
}

// Recursive flood fill component count.
inline int flood_fill_count(const BinaryMask& mask, Connectivity conn) {
  std::vector<char> seen(mask.size(), 0);
  const int n_nbr = conn == Connectivity::four ? 4 : 8;
  static constexpr int dr8[8] = {-1, -1, -1, 0, 0, 1, 1, 1};
  static constexpr int dc8[8] = {-1, 0, 1, -1, 1, -1, 0, 1};
  static constexpr int dr4[4] = {-1, 0, 0, 1};
  static constexpr int dc4[4] = {0, -1, 1, 0};
  const int* dr = conn == Connectivity::four ? dr4 : dr8;
  const int* dc = conn == Connectivity::four ? dc4 : dc8;

  std::function<void(int, int)> visit = [&](int r, int c) {
    seen[mask.domain().index(r, c)] = 1;
    for (int k = 0; k < n_nbr; ++k) {
      const int nr = r + dr[k];
      const int nc = c + dc[k];
      if (mask.domain().contains(nr, nc) && mask.at(nr, nc) &&
          !seen[mask.domain().index(nr, nc)])
        visit(nr, nc);
    }
  };

  int count = 0;
  for (int r = 0; r < mask.height(); ++r)
    for (int c = 0; c < mask.width(); ++c)
      if (mask.at(r, c) && !seen[mask.domain().index(r, c)]) {
        ++count;
        visit(r, c);
      }
  return count;
}

// Neighbor-scan boundary: foreground with a background (or off-grid) neighbor.
inline BinaryMask boundary(const BinaryMask& mask, Connectivity conn) {
  const int n_nbr = conn == Connectivity::four ? 4 : 8;
  static constexpr int dr8[8] = {-1, -1, -1, 0, 0, 1, 1, 1};
  static constexpr int dc8[8] = {-1, 0, 1, -1, 1, -1, 0, 1};
  static constexpr int dr4[4] = {-1, 0, 0, 1};
  static constexpr int dc4[4] = {0, -1, 1, 0};
  const int* dr = conn == Connectivity::four ? dr4 : dr8;
  const int* dc = conn == Connectivity::four ? dc4 : dc8;

  BinaryMask out(mask.domain());
  for (int r = 0; r < mask.height(); ++r)
    for (int c = 0; c < mask.width(); ++c) {
      if (!mask.at(r, c)) continue;
      for (int k = 0; k < n_nbr; ++k) {
        const int nr = r + dr[k];
        const int nc = c + dc[k];
        if (!mask.domain().contains(nr, nc) || !mask.at(nr, nc)) {
          out.at(r, c) = 1;
          break;
        }
      }
    }
  return out;
}

// Pairwise boundary Hausdorff distance with nearest-rank percentiles.
inline std::optional<double> hausdorff(const BinaryMask& pred, const BinaryMask& gt,
                                       double percentile, Connectivity conn) {
  if (pred.foreground_count() == 0 || gt.foreground_count() == 0) return std::nullopt;
  auto pixels = [](const BinaryMask& m) {
    std::vector<std::pair<int, int>> pts;
    for (int r = 0; r < m.height(); ++r)
      for (int c = 0; c < m.width(); ++c)
        if (m.at(r, c)) pts.emplace_back(r, c);
    return pts;
  };
  const auto bp = pixels(boundary(pred, conn));
  const auto bg = pixels(boundary(gt, conn));

  auto directed_sq = [&](const std::vector<std::pair<int, int>>& from,
                         const std::vector<std::pair<int, int>>& to) {
    std::vector<std::int64_t> mins;
    for (const auto& [r, c] : from) {
      std::int64_t best = std::numeric_limits<std::int64_t>::max();
      for (const auto& [tr, tc] : to) {
        const std::int64_t dr = r - tr;
        const std::int64_t dc = c - tc;
        best = std::min(best, dr * dr + dc * dc);
      }
      mins.push_back(best);
    }
    std::sort(mins.begin(), mins.end());
    std::size_t rank =
        static_cast<std::size_t>(std::ceil(percentile / 100.0 * static_cast<double>(mins.size())));
    rank = std::clamp<std::size_t>(rank, 1, mins.size());
    return mins[rank - 1];
  };

  return std::sqrt(static_cast<double>(std::max(directed_sq(bp, bg), directed_sq(bg, bp))));
}

inline BinaryMask random_mask(Rng& rng, GridDomain dom, double density) {
  BinaryMask m(dom);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = rng.next_unit() < density ? 1 : 0;
  return m;
}

inline ScalarGrid random_unit_grid(Rng& rng, GridDomain dom, double lo = 0.0, double hi = 1.0) {
  ScalarGrid g(dom);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = rng.uniform(lo, hi);
  return g;
}

// Reference soft-skeleton recurrence, written with plain loops so the library
// implementation is checked against an independent evaluation.
inline ScalarGrid soft_skeleton_reference(const ScalarGrid& p, int iters) {
  const GridDomain dom = p.domain();
  auto erode = [&](const ScalarGrid& x) {
    ScalarGrid out(dom);
    for (int r = 0; r < dom.height; ++r)
      for (int c = 0; c < dom.width; ++c) {
        double m = std::numeric_limits<double>::infinity();
        for (int dr = -1; dr <= 1; ++dr)
          for (int dc = -1; dc <= 1; ++dc) {
            const double v = dom.contains(r + dr, c + dc) ? x.at(r + dr, c + dc) : 0.0;
            m = std::min(m, v);
          }
        out.at(r, c) = m;
      }
    return out;
  };
  auto dilate = [&](const ScalarGrid& x) {
    ScalarGrid out(dom);
    for (int r = 0; r < dom.height; ++r)
      for (int c = 0; c < dom.width; ++c) {
        double m = -std::numeric_limits<double>::infinity();
        for (int dr = -1; dr <= 1; ++dr)
          for (int dc = -1; dc <= 1; ++dc) {
            const int nr = std::clamp(r + dr, 0, dom.height - 1);
            const int nc = std::clamp(c + dc, 0, dom.width - 1);
            m = std::max(m, x.at(nr, nc));
          }
        out.at(r, c) = m;
      }
    return out;
  };

  ScalarGrid img = p;
  ScalarGrid skel(dom);
  auto residue = [&](const ScalarGrid& x) {
    const ScalarGrid open = dilate(erode(x));
    ScalarGrid out(dom);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(0.0, x[i] - open[i]);
    return out;
  };
  skel = residue(img);
  for (int j = 0; j < iters; ++j) {
    img = erode(img);
    const ScalarGrid delta = residue(img);
    for (std::size_t i = 0; i < skel.size(); ++i)
      skel[i] = skel[i] + std::max(0.0, delta[i] - skel[i] * delta[i]);
  }
  return skel;
}

}  // namespace oracles
