#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "segprior/grid.hpp"

namespace segprior {

/// Minimal reverse-mode differentiation over grid expressions.
///
/// A tape records a forward computation as an append-only, topologically
/// ordered node list; each node caches its forward value (a whole grid or a
/// scalar). After a single scalar output node is designated, backward()
/// produces the gradient of that output with respect to every grid input.
///
/// Conventions baked into backward():
///  - relu passes gradient iff its forward input is strictly positive;
///  - min/max pooling routes each output's gradient to the first extremal
///    window slot in row-major window order (ties are broken
///    deterministically, a measure-zero deviation from the subgradient);
///  - min pooling windows include zero-valued padding slots outside the grid
///    (gradient routed to a padding slot is dropped), max pooling clamps
///    window coordinates to the grid, matching the forward kernels in
///    transforms.
///
/// A tape is confined to one thread from construction through backward.
class Tape {
 public:
  enum class OpKind : std::uint8_t {
    input,
    add,
    sub,
    mul,
    div,
    scalar_mul,
    affine,
    relu,
    min_pool3,
    max_pool3,
    sum,
  };

  struct NodeRef {
    std::uint32_t index = 0;
  };

  struct Node {
    OpKind kind = OpKind::input;
    bool is_scalar = false;
    NodeRef a{};  // first operand (unused for input)
    NodeRef b{};  // second operand (binary ops only)
    double c0 = 0.0, c1 = 0.0;  // constants for scalar_mul / affine
    ScalarGrid grid;            // forward value when !is_scalar
    double value = 0.0;         // forward value when is_scalar
  };

  NodeRef input(ScalarGrid v);

  NodeRef add(NodeRef a, NodeRef b);
  NodeRef sub(NodeRef a, NodeRef b);
  NodeRef mul(NodeRef a, NodeRef b);
  NodeRef div(NodeRef a, NodeRef b);

  /// c * x on a grid or scalar node.
  NodeRef scalar_mul(NodeRef a, double c);
  /// c0 * x + c1 on a scalar node (used for epsilon-smoothed sum ratios).
  NodeRef affine(NodeRef a, double c0, double c1);

  NodeRef relu(NodeRef a);
  NodeRef min_pool3(NodeRef a);
  NodeRef max_pool3(NodeRef a);
  NodeRef sum(NodeRef a);

  void set_output(NodeRef out);
  void backward();

  bool is_scalar(NodeRef n) const { return node(n).is_scalar; }
  const ScalarGrid& grid_value(NodeRef n) const;
  double scalar_value(NodeRef n) const;

  /// Gradient of the output with respect to a grid node; valid after backward.
  const ScalarGrid& gradient(NodeRef n) const;
  double scalar_gradient(NodeRef n) const;

  // Read-only structure access (finite-difference harnesses walk the graph).
  std::size_t node_count() const { return nodes_.size(); }
  const Node& node(NodeRef n) const { return nodes_[n.index]; }
  const Node& node(std::size_t i) const { return nodes_[i]; }

 private:
  NodeRef push(Node n);
  const Node& checked(NodeRef n, const char* what) const;
  void require_same_kind(const Node& a, const Node& b, const char* what) const;

  std::vector<Node> nodes_;
  std::vector<ScalarGrid> grid_adjoint_;
  std::vector<double> scalar_adjoint_;
  std::optional<NodeRef> output_;
  bool backward_done_ = false;
};

}  // namespace segprior
