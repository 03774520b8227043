#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "segprior/rng.hpp"
#include "segprior/transforms.hpp"
#include "support/oracles.hpp"

using namespace segprior;

TEST_CASE("edt on a 1x3 line") {
  BinaryMask src(GridDomain(1, 3), {0, 1, 0});
  const DistanceMap d = edt(src);
  CHECK(d[0] == 1.0);
  CHECK(d[1] == 0.0);
  CHECK(d[2] == 1.0);
}

TEST_CASE("edt of a full mask is zero") {
  const DistanceMap d = edt(BinaryMask(GridDomain(4, 5), 1));
  for (std::size_t i = 0; i < d.values().size(); ++i) CHECK(d[i] == 0.0);
}

TEST_CASE("edt rejects empty sources") {
  CHECK_THROWS_AS(edt(BinaryMask(GridDomain(4, 4))), EmptySourceError);
}

TEST_CASE("edt matches the brute-force oracle exactly on random masks") {
  Rng rng(101);
  for (int trial = 0; trial < 40; ++trial) {
    const GridDomain dom(rng.uniform_int(1, 32), rng.uniform_int(1, 32));
    BinaryMask m = oracles::random_mask(rng, dom, rng.uniform(0.02, 0.6));
    if (m.foreground_count() == 0) m[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(dom.size()) - 1))] = 1;
    const DistanceMap d = edt(m);
    const auto expect = oracles::edt_squared(m);
    for (std::size_t i = 0; i < expect.size(); ++i) CHECK(d.squared()[i] == expect[i]);
  }
}

TEST_CASE("edt is 1-Lipschitz in Chebyshev steps") {
  Rng rng(102);
  const BinaryMask m = oracles::random_mask(rng, GridDomain(16, 16), 0.1);
  if (m.foreground_count() == 0) return;
  const DistanceMap d = edt(m);
  const double limit = std::sqrt(2.0) + 1e-12;
  for (int r = 0; r + 1 < 16; ++r)
    for (int c = 0; c + 1 < 16; ++c) {
      CHECK(std::abs(d.at(r, c) - d.at(r + 1, c)) <= limit);
      CHECK(std::abs(d.at(r, c) - d.at(r, c + 1)) <= limit);
      CHECK(std::abs(d.at(r, c) - d.at(r + 1, c + 1)) <= limit);
    }
}

TEST_CASE("signed_distance on a 1x3 line") {
  BinaryMask m(GridDomain(1, 3), {0, 1, 0});
  const SignedDistanceMap s = signed_distance(m);
  CHECK_FALSE(s.degenerate);
  CHECK(s.values[0] == 1.0);
  CHECK(s.values[1] == -1.0);
  CHECK(s.values[2] == 1.0);
}

TEST_CASE("signed_distance of a uniform mask is the zero convention") {
  const SignedDistanceMap s0 = signed_distance(BinaryMask(GridDomain(3, 3)));
  CHECK(s0.degenerate);
  for (std::size_t i = 0; i < s0.values.size(); ++i) CHECK(s0.values[i] == 0.0);
  const SignedDistanceMap s1 = signed_distance(BinaryMask(GridDomain(3, 3), 1));
  CHECK(s1.degenerate);
  for (std::size_t i = 0; i < s1.values.size(); ++i) CHECK(s1.values[i] == 0.0);
}

TEST_CASE("signed_distance of a centered square, frozen from the pairwise oracle") {
  // 5x5 domain, 3x3 foreground block at rows/cols 1..3. Distances follow the
  // opposite-class convention: domain corners are sqrt(2) from the block
  // corner, the block center is 2 pixels from the nearest background.
  BinaryMask m(GridDomain(5, 5));
  for (int r = 1; r <= 3; ++r)
    for (int c = 1; c <= 3; ++c) m.at(r, c) = 1;
  const SignedDistanceMap s = signed_distance(m);
  CHECK(s.values.at(0, 0) == doctest::Approx(std::sqrt(2.0)));
  CHECK(s.values.at(0, 4) == doctest::Approx(std::sqrt(2.0)));
  CHECK(s.values.at(4, 4) == doctest::Approx(std::sqrt(2.0)));
  CHECK(s.values.at(2, 2) == doctest::Approx(-2.0));
  CHECK(s.values.at(1, 1) == doctest::Approx(-1.0));
  CHECK(s.values.at(0, 2) == doctest::Approx(1.0));
}

TEST_CASE("signed_distance sign rule matches the mask") {
  Rng rng(103);
  const BinaryMask m = oracles::random_mask(rng, GridDomain(12, 12), 0.4);
  if (m.uniform()) return;
  const SignedDistanceMap s = signed_distance(m);
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (s.values[i] < 0.0) CHECK(m[i] == 1);
    if (s.values[i] > 0.0) CHECK(m[i] == 0);
  }
}

TEST_CASE("connected_components on the diagonal pair") {
  BinaryMask m(GridDomain(2, 2), {1, 0, 0, 1});
  CHECK(connected_components(m, Connectivity::four).count == 2);
  CHECK(connected_components(m, Connectivity::eight).count == 1);
}

TEST_CASE("connected_components of the empty mask") {
  CHECK(connected_components(BinaryMask(GridDomain(4, 4))).count == 0);
}

TEST_CASE("connected_components labels are contiguous and ordered by first pixel") {
  BinaryMask m(GridDomain(3, 5), {1, 0, 1, 0, 1, 1, 0, 1, 0, 1, 0, 0, 0, 0, 0});
  const ComponentLabeling lab = connected_components(m, Connectivity::four);
  CHECK(lab.count == 3);
  CHECK(lab.labels[0] == 1);
  CHECK(lab.labels[2] == 2);
  CHECK(lab.labels[4] == 3);
  CHECK(lab.labels[5] == 1);
}

TEST_CASE("connected_components counts match the recursive flood-fill oracle") {
  Rng rng(104);
  for (int trial = 0; trial < 25; ++trial) {
    const BinaryMask m = oracles::random_mask(rng, GridDomain(16, 16), rng.uniform(0.2, 0.7));
    CHECK(connected_components(m, Connectivity::four).count ==
          oracles::flood_fill_count(m, Connectivity::four));
    CHECK(connected_components(m, Connectivity::eight).count ==
          oracles::flood_fill_count(m, Connectivity::eight));
  }
}

TEST_CASE("boundary_pixels of a full 3x3 mask") {
  const BinaryMask b = boundary_pixels(BinaryMask(GridDomain(3, 3), 1), Connectivity::four);
  // every border pixel touches the image edge; only the center is interior
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) CHECK(b.at(r, c) == ((r == 1 && c == 1) ? 0 : 1));
}

TEST_CASE("boundary_pixels trivia and containment") {
  BinaryMask single(GridDomain(3, 3));
  single.at(1, 1) = 1;
  CHECK(boundary_pixels(single).at(1, 1) == 1);
  CHECK(boundary_pixels(BinaryMask(GridDomain(3, 3))).foreground_count() == 0);

  Rng rng(105);
  const BinaryMask m = oracles::random_mask(rng, GridDomain(14, 14), 0.5);
  const BinaryMask b = boundary_pixels(m, Connectivity::eight);
  for (std::size_t i = 0; i < m.size(); ++i)
    if (b[i]) CHECK(m[i] == 1);
  const BinaryMask expect = oracles::boundary(m, Connectivity::eight);
  for (std::size_t i = 0; i < m.size(); ++i) CHECK(b[i] == expect[i]);
}

TEST_CASE("soft_skeleton keeps a single pixel") {
  ScalarGrid p(GridDomain(5, 5));
  p.at(2, 2) = 1.0;
  const ScalarGrid s = soft_skeleton(p, 3);
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(s[i] == p[i]);
}

TEST_CASE("soft_skeleton of a thin line is the line itself") {
  ScalarGrid p(GridDomain(5, 5));
  for (int c = 0; c < 5; ++c) p.at(2, c) = 1.0;
  const ScalarGrid s = soft_skeleton(p, 3);
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(s[i] == p[i]);
}

TEST_CASE("soft_skeleton of a solid square loses mass") {
  ScalarGrid p(GridDomain(5, 5), 1.0);
  const ScalarGrid s = soft_skeleton(p, 2);
  CHECK(s.sum() < p.sum());
  const ScalarGrid expect = oracles::soft_skeleton_reference(p, 2);
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(s[i] == expect[i]);
}

TEST_CASE("soft_skeleton matches the reference recurrence on soft inputs") {
  Rng rng(106);
  const ScalarGrid p = oracles::random_unit_grid(rng, GridDomain(9, 9));
  const ScalarGrid s = soft_skeleton(p, 4);
  const ScalarGrid expect = oracles::soft_skeleton_reference(p, 4);
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(s[i] == expect[i]);
}

TEST_CASE("soft_skeleton stays inside binary shapes and in [0,1]") {
  Rng rng(107);
  const BinaryMask m = oracles::random_mask(rng, GridDomain(11, 11), 0.45);
  const ScalarGrid s = soft_skeleton(m.to_scalar(), 5);
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(s[i] >= 0.0);
    CHECK(s[i] <= 1.0);
    CHECK(s[i] <= static_cast<double>(m[i]));
  }
  const ScalarGrid soft = oracles::random_unit_grid(rng, GridDomain(11, 11));
  const ScalarGrid s2 = soft_skeleton(soft, 5);
  for (std::size_t i = 0; i < s2.size(); ++i) {
    CHECK(s2[i] >= 0.0);
    CHECK(s2[i] <= 1.0);
  }
}

TEST_CASE("soft_skeleton validates its arguments") {
  CHECK_THROWS_AS(soft_skeleton(ScalarGrid(GridDomain(3, 3)), 0), ValidationError);
  ScalarGrid bad(GridDomain(1, 2), {0.5, 1.4});
  CHECK_THROWS_AS(soft_skeleton(bad, 2), ValidationError);
}
