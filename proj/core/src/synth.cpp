#include "segprior/synth.hpp"

#include <algorithm>
#include <cmath>

#include "segprior/rng.hpp"
#include "segprior/transforms.hpp"

namespace segprior {

std::string family_name(Family f) {
  switch (f) {
    case Family::blob: return "blob";
    case Family::multi_lesion: return "multi_lesion";
    case Family::annulus: return "annulus";
    case Family::vessel: return "vessel";
    case Family::two_tissue: return "two_tissue";
  }
  throw ValidationError("family_name: unknown family");
}

Family family_from_name(const std::string& name) {
  if (name == "blob") return Family::blob;
  if (name == "multi_lesion") return Family::multi_lesion;
  if (name == "annulus") return Family::annulus;
  if (name == "vessel") return Family::vessel;
  if (name == "two_tissue") return Family::two_tissue;
  throw ValidationError("unknown synthetic family '" + name + "'");
}

void SyntheticSpec::validate() const {
  if (dims.height < 8 || dims.width < 8)
    throw ValidationError("SyntheticSpec: grid must be at least 8x8");
  if (instances_min < 0 || instances_min > instances_max)
    throw ValidationError("SyntheticSpec: need 0 <= instances_min <= instances_max");
  if (!(size_min_pct > 0.0 && size_max_pct < 100.0 && size_min_pct <= size_max_pct))
    throw ValidationError("SyntheticSpec: size range must satisfy 0 < min <= max < 100");
  if (noise < 0.0 || perturbation < 0.0)
    throw ValidationError("SyntheticSpec: noise and perturbation must be >= 0");
}

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kTrueLogit = 4.0;  // confidence on pixels the corruption left alone
constexpr double kErrLogit = 2.0;   // confidence on corrupted pixels

// 3x3 binary dilation (8-neighborhood, border stays background).
BinaryMask dilate3(const BinaryMask& m) {
  BinaryMask out(m.domain());
  for (int r = 0; r < m.height(); ++r)
    for (int c = 0; c < m.width(); ++c) {
      std::uint8_t v = 0;
      for (int dr = -1; dr <= 1 && !v; ++dr)
        for (int dc = -1; dc <= 1 && !v; ++dc)
          if (m.domain().contains(r + dr, c + dc) && m.at(r + dr, c + dc)) v = 1;
      out.at(r, c) = v;
    }
  return out;
}

BinaryMask dilate_n(BinaryMask m, int n) {
  for (int i = 0; i < n; ++i) m = dilate3(m);
  return m;
}

bool intersects(const BinaryMask& a, const BinaryMask& b) {
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] && b[i]) return true;
  return false;
}

void merge_into(BinaryMask& dst, const BinaryMask& src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] |= src[i];
}

struct EllipseShape {
  double cy, cx;      // center
  double aspect;      // minor/major axis ratio
  double angle;       // orientation
  double hole_ratio;  // inner/outer radius for rings, 0 for solid shapes
};

// Rasterizes the shape at major semi-axis `a`, requiring every pixel to stay
// at least one pixel away from the image border. Returns false on clipping.
bool rasterize(const EllipseShape& s, double a, GridDomain dom, BinaryMask& out) {
  out = BinaryMask(dom);
  const double b = a * s.aspect;
  const double cosang = std::cos(s.angle);
  const double sinang = std::sin(s.angle);
  const double reach = std::max(a, b) + 1.0;
  const int r0 = static_cast<int>(std::floor(s.cy - reach));
  const int r1 = static_cast<int>(std::ceil(s.cy + reach));
  const int c0 = static_cast<int>(std::floor(s.cx - reach));
  const int c1 = static_cast<int>(std::ceil(s.cx + reach));
  bool any = false;
  for (int r = r0; r <= r1; ++r) {
    for (int c = c0; c <= c1; ++c) {
      const double dy = static_cast<double>(r) - s.cy;
      const double dx = static_cast<double>(c) - s.cx;
      const double u = cosang * dx + sinang * dy;
      const double v = -sinang * dx + cosang * dy;
      const double q = (u * u) / (a * a) + (v * v) / (b * b);
      const bool inside = q <= 1.0 && (s.hole_ratio <= 0.0 || q >= s.hole_ratio * s.hole_ratio);
      if (!inside) continue;
      if (r < 1 || r >= dom.height - 1 || c < 1 || c >= dom.width - 1) return false;
      out.at(r, c) = 1;
      any = true;
    }
  }
  return any;
}

// Bisection on the major semi-axis so the rasterized pixel count lands as
// close as possible to `target_px`.
bool fit_shape(const EllipseShape& s, GridDomain dom, double target_px, BinaryMask& out) {
  double lo = 0.4;
  double hi = 1.0;
  BinaryMask probe(dom);
  for (int guard = 0; guard < 40; ++guard) {
    if (!rasterize(s, hi, dom, probe)) return false;
    if (static_cast<double>(probe.foreground_count()) >= target_px) break;
    lo = hi;
    hi *= 1.5;
    if (hi > dom.height + dom.width) return false;
  }
  for (int it = 0; it < 48; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (!rasterize(s, mid, dom, probe)) return false;
    if (static_cast<double>(probe.foreground_count()) < target_px)
      lo = mid;
    else
      hi = mid;
  }
  return rasterize(s, hi, dom, out) && out.foreground_count() > 0;
}

// Places `count` non-touching shapes totalling about `total_px`; returns false
// when placement keeps colliding.
bool place_shapes(Rng& rng, GridDomain dom, int count, double total_px, double aspect_min,
                  double hole_ratio, BinaryMask& mask) {
  mask = BinaryMask(dom);
  if (count == 0) return true;
  BinaryMask forbidden(dom);

  std::vector<double> weights;
  double wsum = 0.0;
  for (int i = 0; i < count; ++i) {
    const double w = rng.uniform(0.8, 1.2);
    weights.push_back(w);
    wsum += w;
  }

  for (int i = 0; i < count; ++i) {
    const double target = std::max(3.0, total_px * weights[static_cast<std::size_t>(i)] / wsum);
    bool placed = false;
    for (int attempt = 0; attempt < 120 && !placed; ++attempt) {
      EllipseShape s;
      s.cy = rng.uniform(2.0, dom.height - 3.0);
      s.cx = rng.uniform(2.0, dom.width - 3.0);
      s.aspect = rng.uniform(aspect_min, 1.0);
      s.angle = rng.uniform(0.0, kPi);
      s.hole_ratio = hole_ratio > 0.0 ? rng.uniform(hole_ratio * 0.9, hole_ratio * 1.1) : 0.0;
      BinaryMask shape(dom);
      if (!fit_shape(s, dom, target, shape)) continue;
      if (intersects(shape, forbidden)) continue;
      merge_into(mask, shape);
      forbidden = dilate_n(mask, 2);
      placed = true;
    }
    if (!placed) return false;
  }
  return true;
}

// Thin curve drawn as a unit-step random walk with heading momentum. Marks
// 8-connected pixels until `target_px` distinct pixels are set.
bool place_curve(Rng& rng, GridDomain dom, double target_px, const BinaryMask& forbidden,
                 BinaryMask& curve) {
  curve = BinaryMask(dom);
  double y = rng.uniform(4.0, dom.height - 5.0);
  double x = rng.uniform(4.0, dom.width - 5.0);
  double heading = rng.uniform(0.0, 2.0 * kPi);
  std::size_t marked = 0;
  const std::size_t want = static_cast<std::size_t>(std::max(6.0, target_px));

  for (int step = 0; step < 4000 && marked < want; ++step) {
    heading += 0.35 * rng.gaussian();
    double ny = y + std::sin(heading);
    double nx = x + std::cos(heading);
    // bounce softly off the border band
    if (ny < 2.0 || ny > dom.height - 3.0 || nx < 2.0 || nx > dom.width - 3.0) {
      heading += kPi / 2.0 + rng.uniform(0.0, kPi);
      continue;
    }
    const int pr = static_cast<int>(std::lround(ny));
    const int pc = static_cast<int>(std::lround(nx));
    if (forbidden.at(pr, pc)) {
      heading += kPi / 2.0 + rng.uniform(0.0, kPi);
      continue;
    }
    y = ny;
    x = nx;
    if (!curve.at(pr, pc)) {
      curve.at(pr, pc) = 1;
      ++marked;
    }
  }
  return marked >= want * 7 / 10;
}

bool place_curves(Rng& rng, GridDomain dom, int count, double total_px, BinaryMask& mask) {
  mask = BinaryMask(dom);
  if (count == 0) return true;
  BinaryMask forbidden(dom);
  for (int i = 0; i < count; ++i) {
    const double target = total_px / static_cast<double>(count);
    bool placed = false;
    for (int attempt = 0; attempt < 60 && !placed; ++attempt) {
      BinaryMask curve(dom);
      if (!place_curve(rng, dom, target, forbidden, curve)) continue;
      if (connected_components(curve, Connectivity::eight).count != 1) continue;
      merge_into(mask, curve);
      forbidden = dilate_n(mask, 2);
      placed = true;
    }
    if (!placed) return false;
  }
  return true;
}

// ---- Mask corruption ----------------------------------------------------

int perturb_count(Rng& rng, double strength) {
  const double base = std::floor(strength);
  const double frac = strength - base;
  return static_cast<int>(base) + (rng.next_unit() < frac ? 1 : 0);
}

void paint_disk(BinaryMask& m, int cy, int cx, int radius, std::uint8_t value) {
  for (int r = cy - radius; r <= cy + radius; ++r)
    for (int c = cx - radius; c <= cx + radius; ++c)
      if (m.domain().contains(r, c) &&
          (r - cy) * (r - cy) + (c - cx) * (c - cx) <= radius * radius)
        m.at(r, c) = value;
}

std::vector<std::size_t> pixels_of(const BinaryMask& m, std::uint8_t value) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m[i] == value) idx.push_back(i);
  return idx;
}

// Local dilations, local deletions, then detached spurious blobs.
BinaryMask corrupt_mask(Rng& rng, const BinaryMask& truth, double strength) {
  BinaryMask out = truth;
  const int w = out.width();

  const int n_dilate = perturb_count(rng, strength);
  for (int k = 0; k < n_dilate; ++k) {
    const auto fg = pixels_of(out, 1);
    if (fg.empty()) break;
    const std::size_t at = fg[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(fg.size()) - 1))];
    const int cy = static_cast<int>(at) / w;
    const int cx = static_cast<int>(at) % w;
    const BinaryMask grown = dilate3(out);
    const int radius = rng.uniform_int(2, 3);
    for (int r = cy - radius; r <= cy + radius; ++r)
      for (int c = cx - radius; c <= cx + radius; ++c)
        if (out.domain().contains(r, c) &&
            (r - cy) * (r - cy) + (c - cx) * (c - cx) <= radius * radius)
          out.at(r, c) |= grown.at(r, c);
  }

  const int n_delete = perturb_count(rng, strength);
  for (int k = 0; k < n_delete; ++k) {
    const auto fg = pixels_of(out, 1);
    if (fg.empty()) break;
    const std::size_t at = fg[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(fg.size()) - 1))];
    paint_disk(out, static_cast<int>(at) / w, static_cast<int>(at) % w, rng.uniform_int(1, 2), 0);
  }

  const int n_spurious = perturb_count(rng, strength);
  if (n_spurious > 0) {
    const BinaryMask keepout = dilate_n(out, 2);
    for (int k = 0; k < n_spurious; ++k) {
      for (int attempt = 0; attempt < 50; ++attempt) {
        const int cy = rng.uniform_int(1, out.height() - 2);
        const int cx = rng.uniform_int(1, out.width() - 2);
        const int radius = rng.uniform_int(1, 2);
        bool clear = true;
        for (int r = cy - radius; r <= cy + radius && clear; ++r)
          for (int c = cx - radius; c <= cx + radius && clear; ++c)
            if (!out.domain().contains(r, c) || keepout.at(r, c)) clear = false;
        if (!clear) continue;
        paint_disk(out, cy, cx, radius, 1);
        break;
      }
    }
  }
  return out;
}

// ---- Logit assembly ------------------------------------------------------

LogitField logits_single(Rng& rng, const BinaryMask& truth, const BinaryMask& corrupted,
                         double noise) {
  ScalarGrid z(truth.domain());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double mag = corrupted[i] == truth[i] ? kTrueLogit : kErrLogit;
    z[i] = corrupted[i] ? mag : -mag;
  }
  for (std::size_t i = 0; i < z.size(); ++i) z[i] += noise * rng.gaussian();
  return LogitField({std::move(z)});
}

LogitField logits_multi(Rng& rng, const std::vector<BinaryMask>& truth,
                        const std::vector<BinaryMask>& corrupted, GridDomain dom, double noise) {
  const int classes = static_cast<int>(truth.size()) + 1;
  // overlap after corruption resolves in favor of the lower class index
  std::vector<int> clean_label(dom.size(), 0), noisy_label(dom.size(), 0);
  for (std::size_t i = 0; i < dom.size(); ++i) {
    for (std::size_t c = 0; c < truth.size(); ++c)
      if (truth[c][i]) {
        clean_label[i] = static_cast<int>(c) + 1;
        break;
      }
    for (std::size_t c = 0; c < corrupted.size(); ++c)
      if (corrupted[c][i]) {
        noisy_label[i] = static_cast<int>(c) + 1;
        break;
      }
  }
  std::vector<ScalarGrid> layers(static_cast<std::size_t>(classes), ScalarGrid(dom));
  for (std::size_t i = 0; i < dom.size(); ++i) {
    const double mag = noisy_label[i] == clean_label[i] ? kTrueLogit : kErrLogit;
    layers[static_cast<std::size_t>(noisy_label[i])][i] = mag;
  }
  for (auto& layer : layers)
    for (std::size_t i = 0; i < layer.size(); ++i) layer[i] += noise * rng.gaussian();
  return LogitField(std::move(layers));
}

// ---- Per-family truth construction ---------------------------------------

std::vector<BinaryMask> build_truth(Rng& rng, const SyntheticSpec& spec) {
  const GridDomain dom = spec.dims;
  const double total = static_cast<double>(dom.size());

  auto draw_target_px = [&]() {
    const double margin = 0.15 * (spec.size_max_pct - spec.size_min_pct);
    const double pct = rng.uniform(spec.size_min_pct + margin, spec.size_max_pct - margin);
    return pct / 100.0 * total;
  };
  auto size_ok = [&](const BinaryMask& m) {
    const double pct = 100.0 * static_cast<double>(m.foreground_count()) / total;
    return pct >= spec.size_min_pct && pct <= spec.size_max_pct;
  };

  switch (spec.family) {
    case Family::blob:
    case Family::multi_lesion: {
      const int count = rng.uniform_int(spec.instances_min, spec.instances_max);
      BinaryMask mask(dom);
      if (count == 0) return {mask};  // lesion-free item
      const double aspect_min = spec.family == Family::blob ? 0.55 : 0.7;
      if (!place_shapes(rng, dom, count, draw_target_px(), aspect_min, 0.0, mask)) return {};
      if (!size_ok(mask)) return {};
      if (connected_components(mask, Connectivity::eight).count != count) return {};
      return {mask};
    }
    case Family::annulus: {
      BinaryMask mask(dom);
      if (!place_shapes(rng, dom, 1, draw_target_px(), 0.85, rng.uniform(0.45, 0.6), mask)) return {};
      if (!size_ok(mask)) return {};
      if (connected_components(mask, Connectivity::eight).count != 1) return {};
      return {mask};
    }
    case Family::vessel: {
      const int count = std::max(1, rng.uniform_int(spec.instances_min, spec.instances_max));
      BinaryMask mask(dom);
      if (!place_curves(rng, dom, count, draw_target_px(), mask)) return {};
      if (!size_ok(mask)) return {};
      if (connected_components(mask, Connectivity::eight).count != count) return {};
      return {mask};
    }
    case Family::two_tissue: {
      BinaryMask a(dom), b(dom);
      if (!place_shapes(rng, dom, 1, draw_target_px(), 0.6, 0.0, a)) return {};
      // the second tissue must clear the first by a 2-pixel gap
      const BinaryMask keepout = dilate_n(a, 2);
      bool placed = false;
      for (int attempt = 0; attempt < 120 && !placed; ++attempt) {
        BinaryMask probe(dom);
        if (!place_shapes(rng, dom, 1, draw_target_px(), 0.6, 0.0, probe)) continue;
        if (intersects(probe, keepout)) continue;
        b = probe;
        placed = true;
      }
      if (!placed) return {};
      if (!size_ok(a) || !size_ok(b)) return {};
      return {a, b};
    }
  }
  return {};
}

}  // namespace

std::vector<DatasetItem> generate(const SyntheticSpec& spec, int n) {
  spec.validate();
  if (n < 1) throw ValidationError("generate: item count must be >= 1");

  std::vector<DatasetItem> items;
  for (int id = 0; id < n; ++id) {
    Rng rng(Rng::derive(spec.seed, static_cast<std::uint64_t>(id)));

    std::vector<BinaryMask> truth;
    bool built = false;
    for (int attempt = 0; attempt < 80 && !built; ++attempt) {
      truth = build_truth(rng, spec);
      built = !truth.empty();
    }
    if (!built)
      throw GenerationError("generate: could not realize spec (family " + family_name(spec.family) +
                            ", item " + std::to_string(id) + ") after bounded retries");

    std::vector<BinaryMask> corrupted;
    for (const BinaryMask& t : truth) corrupted.push_back(corrupt_mask(rng, t, spec.perturbation));

    DatasetItem item;
    item.id = id;
    if (spec.classes() == 1) {
      item.gt = MaskStack::single(truth[0]);
      item.logits = logits_single(rng, truth[0], corrupted[0], spec.noise);
    } else {
      // stack layers: background plus one layer per tissue
      BinaryMask bg(spec.dims, 1);
      for (const BinaryMask& t : truth)
        for (std::size_t i = 0; i < bg.size(); ++i)
          if (t[i]) bg[i] = 0;
      std::vector<BinaryMask> layers;
      layers.push_back(std::move(bg));
      for (const BinaryMask& t : truth) layers.push_back(t);
      item.gt = MaskStack(std::move(layers));
      item.logits = logits_multi(rng, truth, corrupted, spec.dims, spec.noise);
    }
    for (const BinaryMask& t : truth)
      item.true_size_px.push_back(static_cast<double>(t.foreground_count()));
    item.bounds = per_item_bounds(item);
    items.push_back(std::move(item));
  }
  return items;
}

std::vector<SizeBounds> per_item_bounds(const DatasetItem& item, double slack) {
  if (!(slack >= 0.0 && slack < 1.0)) throw ValidationError("per_item_bounds: slack must lie in [0,1)");
  std::vector<SizeBounds> out;
  for (double a : item.true_size_px) out.emplace_back((1.0 - slack) * a, (1.0 + slack) * a);
  return out;
}

std::vector<SizeBounds> dataset_wide_bounds(const std::vector<DatasetItem>& items) {
  if (items.empty()) throw ValidationError("dataset_wide_bounds: at least one item required");
  const std::size_t classes = items[0].true_size_px.size();
  std::vector<SizeBounds> out;
  for (std::size_t c = 0; c < classes; ++c) {
    double lo = items[0].true_size_px[c];
    double hi = lo;
    for (const DatasetItem& it : items) {
      if (it.true_size_px.size() != classes)
        throw ValidationError("dataset_wide_bounds: inconsistent class counts");
      lo = std::min(lo, it.true_size_px[c]);
      hi = std::max(hi, it.true_size_px[c]);
    }
    out.emplace_back(lo, hi);
  }
  return out;
}

}  // namespace segprior
