#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>

#include "segprior/losses.hpp"
#include "segprior/rng.hpp"
#include "segprior/tape.hpp"
#include "segprior/transforms.hpp"
#include "support/fd.hpp"
#include "support/oracles.hpp"

using namespace segprior;

TEST_CASE("sum records the reduction value") {
  Tape tape;
  const auto x = tape.input(ScalarGrid(GridDomain(1, 3), {1.0, 2.0, 3.0}));
  const auto s = tape.sum(x);
  CHECK(tape.scalar_value(s) == 6.0);
}

TEST_CASE("min_pool3 sees the zero padding") {
  ScalarGrid g(GridDomain(3, 3), 1.0);
  g.at(1, 1) = 0.0;
  Tape tape;
  const auto x = tape.input(g);
  const auto pooled = tape.min_pool3(x);
  // every window contains either the center zero or an off-grid padding slot
  for (std::size_t i = 0; i < 9; ++i) CHECK(tape.grid_value(pooled)[i] == 0.0);
}

TEST_CASE("relu forward") {
  Tape tape;
  const auto x = tape.input(ScalarGrid(GridDomain(1, 3), {-1.0, 0.0, 2.0}));
  const auto r = tape.relu(x);
  CHECK(tape.grid_value(r)[0] == 0.0);
  CHECK(tape.grid_value(r)[1] == 0.0);
  CHECK(tape.grid_value(r)[2] == 2.0);
}

TEST_CASE("backward of sum(x*x) is 2x") {
  Rng rng(201);
  const ScalarGrid x = oracles::random_unit_grid(rng, GridDomain(4, 4), -2.0, 2.0);
  Tape tape;
  const auto xn = tape.input(x);
  tape.set_output(tape.sum(tape.mul(xn, xn)));
  tape.backward();
  const ScalarGrid& g = tape.gradient(xn);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(g[i] == doctest::Approx(2.0 * x[i]).epsilon(1e-12));
}

TEST_CASE("backward of sum(min_pool3(x)) counts the windows each pixel wins") {
  // distinct values so every window has a unique minimum
  ScalarGrid x(GridDomain(4, 4));
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = 1.0 + 0.01 * static_cast<double>(i * i % 29);
  Tape tape;
  const auto xn = tape.input(x);
  tape.set_output(tape.sum(tape.min_pool3(xn)));
  tape.backward();
  const ScalarGrid& g = tape.gradient(xn);

  // The values are all > 0, so border windows route to their padding slots and
  // each interior pixel receives one unit per window in which it is minimal.
  ScalarGrid expect(x.domain());
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) {
      double best = std::numeric_limits<double>::infinity();
      int br = -1, bc = -1;
      for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc) {
          const int nr = r + dr, nc = c + dc;
          const double v = x.domain().contains(nr, nc) ? x.at(nr, nc) : 0.0;
          if (v < best) {
            best = v;
            br = x.domain().contains(nr, nc) ? nr : -1;
            bc = x.domain().contains(nr, nc) ? nc : -1;
          }
        }
      if (br >= 0) expect.at(br, bc) += 1.0;
    }
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(g[i] == expect[i]);

  // and the same gradient agrees with central finite differences
  const ScalarGrid fd_grad = fd::central_diff(
      [](const ScalarGrid& probe) {
        Tape t;
        const auto n = t.input(probe);
        return t.scalar_value(t.sum(t.min_pool3(n)));
      },
      x, 1e-4);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(fd::rel_err(fd_grad[i], g[i]) < 1e-4);
}

TEST_CASE("gradient of an unused input is exactly zero") {
  Tape tape;
  const auto used = tape.input(ScalarGrid(GridDomain(2, 2), 1.5));
  const auto unused = tape.input(ScalarGrid(GridDomain(2, 2), 3.0));
  tape.set_output(tape.sum(used));
  tape.backward();
  const ScalarGrid& g = tape.gradient(unused);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(g[i] == 0.0);
}

TEST_CASE("backward is deterministic") {
  Rng rng(202);
  const ScalarGrid x = oracles::random_unit_grid(rng, GridDomain(6, 6));
  auto run = [&]() {
    Tape tape;
    const auto xn = tape.input(x);
    const auto sk = tape.max_pool3(tape.min_pool3(tape.relu(xn)));
    tape.set_output(tape.sum(tape.mul(sk, xn)));
    tape.backward();
    return tape.gradient(xn);
  };
  const ScalarGrid a = run();
  const ScalarGrid b = run();
  CHECK(std::memcmp(a.values().data(), b.values().data(), a.size() * sizeof(double)) == 0);
}

TEST_CASE("state and validation errors") {
  Tape tape;
  const auto x = tape.input(ScalarGrid(GridDomain(2, 2), 1.0));
  CHECK_THROWS_AS(tape.backward(), StateError);
  CHECK_THROWS_AS(tape.set_output(x), ValidationError);  // grid node cannot be the output
  const auto y = tape.input(ScalarGrid(GridDomain(3, 2), 1.0));
  CHECK_THROWS_AS(tape.add(x, y), ValidationError);  // domain mismatch
  CHECK_THROWS_AS(tape.gradient(x), StateError);
}

TEST_CASE("composite expressions match finite differences") {
  Rng rng(203);
  for (int trial = 0; trial < 4; ++trial) {
    const GridDomain dom(rng.uniform_int(3, 8), rng.uniform_int(3, 8));
    const ScalarGrid x = oracles::random_unit_grid(rng, dom, 0.05, 0.95);
    const ScalarGrid w = oracles::random_unit_grid(rng, dom, 0.5, 1.5);

    auto value = [&](const ScalarGrid& probe) {
      Tape t;
      const auto xn = t.input(probe);
      const auto wn = t.input(w);
      const auto pooled = t.max_pool3(xn);
      const auto mixed = t.div(t.mul(pooled, wn), t.scalar_mul(wn, 2.0));
      const auto a = t.affine(t.sum(mixed), 1.0, 1e-6);
      const auto b = t.affine(t.sum(t.mul(xn, xn)), 0.5, 1.0);
      return t.scalar_value(t.div(a, b));
    };

    Tape tape;
    const auto xn = tape.input(x);
    const auto wn = tape.input(w);
    const auto pooled = tape.max_pool3(xn);
    const auto mixed = tape.div(tape.mul(pooled, wn), tape.scalar_mul(wn, 2.0));
    const auto a = tape.affine(tape.sum(mixed), 1.0, 1e-6);
    const auto b = tape.affine(tape.sum(tape.mul(xn, xn)), 0.5, 1.0);
    tape.set_output(tape.div(a, b));
    const auto excluded = fd::exclusion_mask(tape, xn, 1e-3);
    tape.backward();
    const ScalarGrid& g = tape.gradient(xn);
    const ScalarGrid fd_grad = fd::central_diff(value, x, 1e-4);
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (excluded[i]) continue;
      CHECK(fd::rel_err(fd_grad[i], g[i]) < 1e-4);
    }
  }
}

TEST_CASE("skeleton pipeline gradient matches finite differences away from ties") {
  Rng rng(204);
  const GridDomain dom(7, 7);
  const ScalarGrid pred = oracles::random_unit_grid(rng, dom, 0.02, 0.98);
  BinaryMask gt(dom);
  for (int c = 1; c < 6; ++c) gt.at(3, c) = 1;
  const ScalarGrid gt_skel = soft_skeleton(gt.to_scalar(), 3);

  Tape tape;
  const auto graph = detail::build_cldice_graph(tape, pred, gt.to_scalar(), gt_skel, 3, 1e-6);
  const auto excluded = fd::exclusion_mask(tape, Tape::NodeRef{graph.pred_node}, 1e-3);
  tape.backward();
  const ScalarGrid& g = tape.gradient(Tape::NodeRef{graph.pred_node});

  auto value = [&](const ScalarGrid& probe) {
    Tape t;
    const auto gr = detail::build_cldice_graph(t, probe, gt.to_scalar(), gt_skel, 3, 1e-6);
    return t.scalar_value(Tape::NodeRef{gr.output_node});
  };
  const ScalarGrid fd_grad = fd::central_diff(value, pred, 1e-4);

  int checked = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (excluded[i]) continue;
    ++checked;
    CHECK(fd::rel_err(fd_grad[i], g[i]) < 1e-3);
  }
  CHECK(checked > 10);  // the exclusion must not swallow the whole grid
}
