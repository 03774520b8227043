#include "segprior/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace segprior {

DistanceMap::DistanceMap(GridDomain dom, std::vector<std::int64_t> squared)
    : dom_(dom), sq_(std::move(squared)) {
  if (sq_.size() != dom_.size()) throw ValidationError("DistanceMap: value count does not match domain");
  dist_.resize(sq_.size());
  for (std::size_t i = 0; i < sq_.size(); ++i) {
    if (sq_[i] < 0) throw ValidationError("DistanceMap: negative squared distance");
    dist_[i] = std::sqrt(static_cast<double>(sq_[i]));
  }
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// 1-D lower envelope of parabolas q -> (x - q)^2 + f(q), skipping infinite
// costs. f holds squared inputs; d receives squared outputs. v (parabola
// apexes) has room for n entries, z (region boundaries) for n + 1.
void envelope_1d(const double* f, int n, double* d, int* v, double* z) {
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (f[q] == kInf) continue;
    double s = 0.0;
    while (k >= 0) {
      const double qd = static_cast<double>(q);
      const double vd = static_cast<double>(v[k]);
      s = ((f[q] + qd * qd) - (f[v[k]] + vd * vd)) / (2.0 * (qd - vd));
      if (s <= z[k])
        --k;
      else
        break;
    }
    ++k;
    v[k] = q;
    z[k] = (k == 0) ? -kInf : s;
    z[k + 1] = kInf;
  }
  if (k < 0) {
    for (int q = 0; q < n; ++q) d[q] = kInf;
    return;
  }
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[j + 1] < q) ++j;
    const double dq = static_cast<double>(q - v[j]);
    d[q] = dq * dq + f[v[j]];
  }
}

}  // namespace

DistanceMap edt(const BinaryMask& source) {
  if (source.foreground_count() == 0)
    throw EmptySourceError("edt: source mask has no foreground pixels");

  const int h = source.height();
  const int w = source.width();

  // Column pass: squared distance to the nearest source pixel in the same
  // column (infinite for source-free columns).
  std::vector<double> coldist(source.size(), kInf);
  for (int c = 0; c < w; ++c) {
    double d = kInf;
    for (int r = 0; r < h; ++r) {
      d = source.at(r, c) ? 0.0 : d + 1.0;
      coldist[source.domain().index(r, c)] = d;
    }
    d = kInf;
    for (int r = h - 1; r >= 0; --r) {
      d = source.at(r, c) ? 0.0 : d + 1.0;
      const std::size_t i = source.domain().index(r, c);
      coldist[i] = std::min(coldist[i], d);
    }
  }

  // Row pass over squared column distances.
  std::vector<double> f(static_cast<std::size_t>(w));
  std::vector<double> drow(static_cast<std::size_t>(w));
  std::vector<int> v(static_cast<std::size_t>(w));
  std::vector<double> z(static_cast<std::size_t>(w) + 1);
  std::vector<std::int64_t> sq(source.size());
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const double cd = coldist[source.domain().index(r, c)];
      f[static_cast<std::size_t>(c)] = cd == kInf ? kInf : cd * cd;
    }
    envelope_1d(f.data(), w, drow.data(), v.data(), z.data());
    for (int c = 0; c < w; ++c) {
      const double dv = drow[static_cast<std::size_t>(c)];
      sq[source.domain().index(r, c)] = static_cast<std::int64_t>(std::llround(dv));
    }
  }
  return DistanceMap(source.domain(), std::move(sq));
}

SignedDistanceMap signed_distance(const BinaryMask& mask) {
  SignedDistanceMap out;
  out.values = ScalarGrid(mask.domain());
  if (mask.uniform()) {
    out.degenerate = true;
    return out;
  }
  const DistanceMap to_fg = edt(mask);
  const DistanceMap to_bg = edt(mask.complement());
  for (std::size_t i = 0; i < mask.size(); ++i)
    out.values[i] = mask[i] ? -to_bg[i] : to_fg[i];
  return out;
}

ScalarGrid opposite_class_distance(const BinaryMask& mask) {
  SignedDistanceMap sdm = signed_distance(mask);
  for (std::size_t i = 0; i < sdm.values.size(); ++i) sdm.values[i] = std::abs(sdm.values[i]);
  return std::move(sdm.values);
}

ComponentLabeling connected_components(const BinaryMask& mask, Connectivity conn) {
  const int h = mask.height();
  const int w = mask.width();
  ComponentLabeling out{mask.domain(), std::vector<int>(mask.size(), 0), 0};

  static constexpr int dr8[8] = {-1, -1, -1, 0, 0, 1, 1, 1};
  static constexpr int dc8[8] = {-1, 0, 1, -1, 1, -1, 0, 1};
  static constexpr int dr4[4] = {-1, 0, 0, 1};
  static constexpr int dc4[4] = {0, -1, 1, 0};
  const int n_nbr = conn == Connectivity::four ? 4 : 8;
  const int* dr = conn == Connectivity::four ? dr4 : dr8;
  const int* dc = conn == Connectivity::four ? dc4 : dc8;

  std::vector<std::size_t> stack;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const std::size_t i = mask.domain().index(r, c);
      if (!mask[i] || out.labels[i] != 0) continue;
      const int label = ++out.count;
      out.labels[i] = label;
      stack.push_back(i);
      while (!stack.empty()) {
        const std::size_t cur = stack.back();
        stack.pop_back();
        const int cr = static_cast<int>(cur) / w;
        const int cc = static_cast<int>(cur) % w;
        for (int k = 0; k < n_nbr; ++k) {
          const int nr = cr + dr[k];
          const int nc = cc + dc[k];
          if (!mask.domain().contains(nr, nc)) continue;
          const std::size_t ni = mask.domain().index(nr, nc);
          if (mask[ni] && out.labels[ni] == 0) {
            out.labels[ni] = label;
            stack.push_back(ni);
          }
        }
      }
    }
  }
  return out;
}

BinaryMask boundary_pixels(const BinaryMask& mask, Connectivity conn) {
  static constexpr int dr8[8] = {-1, -1, -1, 0, 0, 1, 1, 1};
  static constexpr int dc8[8] = {-1, 0, 1, -1, 1, -1, 0, 1};
  static constexpr int dr4[4] = {-1, 0, 0, 1};
  static constexpr int dc4[4] = {0, -1, 1, 0};
  const int n_nbr = conn == Connectivity::four ? 4 : 8;
  const int* dr = conn == Connectivity::four ? dr4 : dr8;
  const int* dc = conn == Connectivity::four ? dc4 : dc8;

  BinaryMask out(mask.domain());
  for (int r = 0; r < mask.height(); ++r) {
    for (int c = 0; c < mask.width(); ++c) {
      if (!mask.at(r, c)) continue;
      bool is_boundary = false;
      for (int k = 0; k < n_nbr && !is_boundary; ++k) {
        const int nr = r + dr[k];
        const int nc = c + dc[k];
        // outside the grid counts as background
        if (!mask.domain().contains(nr, nc) || !mask.at(nr, nc)) is_boundary = true;
      }
      out.at(r, c) = is_boundary ? 1 : 0;
    }
  }
  return out;
}

ScalarGrid min_filter3(const ScalarGrid& g) {
  ScalarGrid out(g.domain());
  for (int r = 0; r < g.height(); ++r) {
    for (int c = 0; c < g.width(); ++c) {
      double m = std::numeric_limits<double>::infinity();
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          const int nr = r + dr;
          const int nc = c + dc;
          const double v = g.domain().contains(nr, nc) ? g.at(nr, nc) : 0.0;
          m = std::min(m, v);
        }
      }
      out.at(r, c) = m;
    }
  }
  return out;
}

ScalarGrid max_filter3(const ScalarGrid& g) {
  ScalarGrid out(g.domain());
  const int h = g.height();
  const int w = g.width();
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      double m = -std::numeric_limits<double>::infinity();
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          const int nr = std::clamp(r + dr, 0, h - 1);
          const int nc = std::clamp(c + dc, 0, w - 1);
          m = std::max(m, g.at(nr, nc));
        }
      }
      out.at(r, c) = m;
    }
  }
  return out;
}

ScalarGrid relu(const ScalarGrid& g) {
  ScalarGrid out(g.domain());
  for (std::size_t i = 0; i < g.size(); ++i) out[i] = g[i] > 0.0 ? g[i] : 0.0;
  return out;
}

ScalarGrid soft_skeleton(const ScalarGrid& p, int iterations) {
  if (iterations < 1) throw ValidationError("soft_skeleton: iteration count must be >= 1");
  for (std::size_t i = 0; i < p.size(); ++i)
    if (!(p[i] >= 0.0 && p[i] <= 1.0))
      throw ValidationError("soft_skeleton: value at pixel " + std::to_string(i) + " is outside [0,1]");

  auto open = [](const ScalarGrid& x) { return max_filter3(min_filter3(x)); };

  ScalarGrid img = p;
  ScalarGrid skel = relu(sub(img, open(img)));
  for (int j = 0; j < iterations; ++j) {
    img = min_filter3(img);
    const ScalarGrid delta = relu(sub(img, open(img)));
    // soft union: skel + relu(delta - skel*delta) == 1 - (1-skel)(1-delta)
    skel = add(skel, relu(sub(delta, mul(skel, delta))));
  }
  return skel;
}

}  // namespace segprior
