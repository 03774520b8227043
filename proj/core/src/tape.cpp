#include "segprior/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "segprior/transforms.hpp"

namespace segprior {

Tape::NodeRef Tape::push(Node n) {
  if (backward_done_) throw StateError("tape: cannot record after backward");
  nodes_.push_back(std::move(n));
  return NodeRef{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

const Tape::Node& Tape::checked(NodeRef n, const char* what) const {
  if (n.index >= nodes_.size()) throw ValidationError(std::string(what) + ": dangling node reference");
  return nodes_[n.index];
}

void Tape::require_same_kind(const Node& a, const Node& b, const char* what) const {
  if (a.is_scalar != b.is_scalar)
    throw ValidationError(std::string(what) + ": cannot mix scalar and grid operands");
  if (!a.is_scalar) check_same_domain(a.grid.domain(), b.grid.domain(), what);
}

Tape::NodeRef Tape::input(ScalarGrid v) {
  Node n;
  n.kind = OpKind::input;
  n.grid = std::move(v);
  return push(std::move(n));
}

Tape::NodeRef Tape::add(NodeRef a, NodeRef b) {
  const Node& na = checked(a, "tape add");
  const Node& nb = checked(b, "tape add");
  require_same_kind(na, nb, "tape add");
  Node n;
  n.kind = OpKind::add;
  n.a = a;
  n.b = b;
  n.is_scalar = na.is_scalar;
  if (n.is_scalar)
    n.value = na.value + nb.value;
  else
    n.grid = segprior::add(na.grid, nb.grid);
  return push(std::move(n));
}

Tape::NodeRef Tape::sub(NodeRef a, NodeRef b) {
  const Node& na = checked(a, "tape sub");
  const Node& nb = checked(b, "tape sub");
  require_same_kind(na, nb, "tape sub");
  Node n;
  n.kind = OpKind::sub;
  n.a = a;
  n.b = b;
  n.is_scalar = na.is_scalar;
  if (n.is_scalar)
    n.value = na.value - nb.value;
  else
    n.grid = segprior::sub(na.grid, nb.grid);
  return push(std::move(n));
}

Tape::NodeRef Tape::mul(NodeRef a, NodeRef b) {
  const Node& na = checked(a, "tape mul");
  const Node& nb = checked(b, "tape mul");
  require_same_kind(na, nb, "tape mul");
  Node n;
  n.kind = OpKind::mul;
  n.a = a;
  n.b = b;
  n.is_scalar = na.is_scalar;
  if (n.is_scalar)
    n.value = na.value * nb.value;
  else
    n.grid = segprior::mul(na.grid, nb.grid);
  return push(std::move(n));
}

Tape::NodeRef Tape::div(NodeRef a, NodeRef b) {
  const Node& na = checked(a, "tape div");
  const Node& nb = checked(b, "tape div");
  require_same_kind(na, nb, "tape div");
  Node n;
  n.kind = OpKind::div;
  n.a = a;
  n.b = b;
  n.is_scalar = na.is_scalar;
  if (n.is_scalar) {
    n.value = na.value / nb.value;
  } else {
    n.grid = ScalarGrid(na.grid.domain());
    for (std::size_t i = 0; i < n.grid.size(); ++i) n.grid[i] = na.grid[i] / nb.grid[i];
  }
  return push(std::move(n));
}

Tape::NodeRef Tape::scalar_mul(NodeRef a, double c) {
  const Node& na = checked(a, "tape scalar_mul");
  Node n;
  n.kind = OpKind::scalar_mul;
  n.a = a;
  n.c0 = c;
  n.is_scalar = na.is_scalar;
  if (n.is_scalar)
    n.value = c * na.value;
  else
    n.grid = scale(na.grid, c);
  return push(std::move(n));
}

Tape::NodeRef Tape::affine(NodeRef a, double c0, double c1) {
  const Node& na = checked(a, "tape affine");
  if (!na.is_scalar) throw ValidationError("tape affine: operand must be a scalar node");
  Node n;
  n.kind = OpKind::affine;
  n.a = a;
  n.c0 = c0;
  n.c1 = c1;
  n.is_scalar = true;
  n.value = c0 * na.value + c1;
  return push(std::move(n));
}

Tape::NodeRef Tape::relu(NodeRef a) {
  const Node& na = checked(a, "tape relu");
  if (na.is_scalar) throw ValidationError("tape relu: operand must be a grid node");
  Node n;
  n.kind = OpKind::relu;
  n.a = a;
  n.grid = segprior::relu(na.grid);
  return push(std::move(n));
}

Tape::NodeRef Tape::min_pool3(NodeRef a) {
  const Node& na = checked(a, "tape min_pool3");
  if (na.is_scalar) throw ValidationError("tape min_pool3: operand must be a grid node");
  Node n;
  n.kind = OpKind::min_pool3;
  n.a = a;
  n.grid = min_filter3(na.grid);
  return push(std::move(n));
}

Tape::NodeRef Tape::max_pool3(NodeRef a) {
  const Node& na = checked(a, "tape max_pool3");
  if (na.is_scalar) throw ValidationError("tape max_pool3: operand must be a grid node");
  Node n;
  n.kind = OpKind::max_pool3;
  n.a = a;
  n.grid = max_filter3(na.grid);
  return push(std::move(n));
}

Tape::NodeRef Tape::sum(NodeRef a) {
  const Node& na = checked(a, "tape sum");
  if (na.is_scalar) throw ValidationError("tape sum: operand must be a grid node");
  Node n;
  n.kind = OpKind::sum;
  n.a = a;
  n.is_scalar = true;
  n.value = na.grid.sum();
  return push(std::move(n));
}

void Tape::set_output(NodeRef out) {
  const Node& n = checked(out, "tape set_output");
  if (!n.is_scalar) throw ValidationError("tape set_output: output must be a scalar node");
  output_ = out;
}

const ScalarGrid& Tape::grid_value(NodeRef n) const {
  const Node& node = checked(n, "tape grid_value");
  if (node.is_scalar) throw ValidationError("tape grid_value: node is scalar");
  return node.grid;
}

double Tape::scalar_value(NodeRef n) const {
  const Node& node = checked(n, "tape scalar_value");
  if (!node.is_scalar) throw ValidationError("tape scalar_value: node is a grid");
  return node.value;
}

const ScalarGrid& Tape::gradient(NodeRef n) const {
  if (!backward_done_) throw StateError("tape gradient: backward has not run");
  const Node& node = checked(n, "tape gradient");
  if (node.is_scalar) throw ValidationError("tape gradient: node is scalar");
  return grid_adjoint_[n.index];
}

double Tape::scalar_gradient(NodeRef n) const {
  if (!backward_done_) throw StateError("tape scalar_gradient: backward has not run");
  const Node& node = checked(n, "tape scalar_gradient");
  if (!node.is_scalar) throw ValidationError("tape scalar_gradient: node is a grid");
  return scalar_adjoint_[n.index];
}

namespace {

// Routes pooled gradients back to the first extremal slot per window, scanning
// the window in row-major order. Padding slots (min pooling only) absorb the
// gradient silently; max pooling clamps coordinates like its forward kernel.
void pool_backward(const ScalarGrid& in, const ScalarGrid& g_out, ScalarGrid& g_in, bool is_min) {
  const int h = in.height();
  const int w = in.width();
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const double g = g_out.at(r, c);
      if (g == 0.0) continue;
      double best = is_min ? std::numeric_limits<double>::infinity()
                           : -std::numeric_limits<double>::infinity();
      int best_r = -1, best_c = -1;
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          int nr = r + dr;
          int nc = c + dc;
          double v;
          if (is_min) {
            v = in.domain().contains(nr, nc) ? in.at(nr, nc) : 0.0;
            if (!in.domain().contains(nr, nc)) nr = nc = -1;  // padding slot
          } else {
            nr = std::clamp(nr, 0, h - 1);
            nc = std::clamp(nc, 0, w - 1);
            v = in.at(nr, nc);
          }
          const bool better = is_min ? v < best : v > best;
          if (better) {
            best = v;
            best_r = nr;
            best_c = nc;
          }
        }
      }
      if (best_r >= 0) g_in.at(best_r, best_c) += g;
    }
  }
}

}  // namespace

void Tape::backward() {
  if (!output_) throw StateError("tape backward: no scalar output designated");
  if (backward_done_) throw StateError("tape backward: already run");

  grid_adjoint_.assign(nodes_.size(), ScalarGrid());
  scalar_adjoint_.assign(nodes_.size(), 0.0);
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (!nodes_[i].is_scalar) grid_adjoint_[i] = ScalarGrid(nodes_[i].grid.domain());

  scalar_adjoint_[output_->index] = 1.0;

  for (std::size_t idx = nodes_.size(); idx-- > 0;) {
    const Node& n = nodes_[idx];
    switch (n.kind) {
      case OpKind::input:
        break;
      case OpKind::add: {
        if (n.is_scalar) {
          scalar_adjoint_[n.a.index] += scalar_adjoint_[idx];
          scalar_adjoint_[n.b.index] += scalar_adjoint_[idx];
        } else {
          const ScalarGrid& g = grid_adjoint_[idx];
          ScalarGrid& ga = grid_adjoint_[n.a.index];
          ScalarGrid& gb = grid_adjoint_[n.b.index];
          for (std::size_t i = 0; i < g.size(); ++i) {
            ga[i] += g[i];
            gb[i] += g[i];
          }
        }
        break;
      }
      case OpKind::sub: {
        if (n.is_scalar) {
          scalar_adjoint_[n.a.index] += scalar_adjoint_[idx];
          scalar_adjoint_[n.b.index] -= scalar_adjoint_[idx];
        } else {
          const ScalarGrid& g = grid_adjoint_[idx];
          ScalarGrid& ga = grid_adjoint_[n.a.index];
          ScalarGrid& gb = grid_adjoint_[n.b.index];
          for (std::size_t i = 0; i < g.size(); ++i) {
            ga[i] += g[i];
            gb[i] -= g[i];
          }
        }
        break;
      }
      case OpKind::mul: {
        if (n.is_scalar) {
          scalar_adjoint_[n.a.index] += scalar_adjoint_[idx] * nodes_[n.b.index].value;
          scalar_adjoint_[n.b.index] += scalar_adjoint_[idx] * nodes_[n.a.index].value;
        } else {
          const ScalarGrid& g = grid_adjoint_[idx];
          const ScalarGrid& va = nodes_[n.a.index].grid;
          const ScalarGrid& vb = nodes_[n.b.index].grid;
          ScalarGrid& ga = grid_adjoint_[n.a.index];
          ScalarGrid& gb = grid_adjoint_[n.b.index];
          for (std::size_t i = 0; i < g.size(); ++i) {
            ga[i] += g[i] * vb[i];
            gb[i] += g[i] * va[i];
          }
        }
        break;
      }
      case OpKind::div: {
        if (n.is_scalar) {
          const double va = nodes_[n.a.index].value;
          const double vb = nodes_[n.b.index].value;
          scalar_adjoint_[n.a.index] += scalar_adjoint_[idx] / vb;
          scalar_adjoint_[n.b.index] -= scalar_adjoint_[idx] * va / (vb * vb);
        } else {
          const ScalarGrid& g = grid_adjoint_[idx];
          const ScalarGrid& va = nodes_[n.a.index].grid;
          const ScalarGrid& vb = nodes_[n.b.index].grid;
          ScalarGrid& ga = grid_adjoint_[n.a.index];
          ScalarGrid& gb = grid_adjoint_[n.b.index];
          for (std::size_t i = 0; i < g.size(); ++i) {
            ga[i] += g[i] / vb[i];
            gb[i] -= g[i] * va[i] / (vb[i] * vb[i]);
          }
        }
        break;
      }
      case OpKind::scalar_mul: {
        if (n.is_scalar) {
          scalar_adjoint_[n.a.index] += scalar_adjoint_[idx] * n.c0;
        } else {
          const ScalarGrid& g = grid_adjoint_[idx];
          ScalarGrid& ga = grid_adjoint_[n.a.index];
          for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * n.c0;
        }
        break;
      }
      case OpKind::affine:
        scalar_adjoint_[n.a.index] += scalar_adjoint_[idx] * n.c0;
        break;
      case OpKind::relu: {
        const ScalarGrid& g = grid_adjoint_[idx];
        const ScalarGrid& va = nodes_[n.a.index].grid;
        ScalarGrid& ga = grid_adjoint_[n.a.index];
        for (std::size_t i = 0; i < g.size(); ++i)
          if (va[i] > 0.0) ga[i] += g[i];
        break;
      }
      case OpKind::min_pool3:
        pool_backward(nodes_[n.a.index].grid, grid_adjoint_[idx], grid_adjoint_[n.a.index], true);
        break;
      case OpKind::max_pool3:
        pool_backward(nodes_[n.a.index].grid, grid_adjoint_[idx], grid_adjoint_[n.a.index], false);
        break;
      case OpKind::sum: {
        const double g = scalar_adjoint_[idx];
        if (g != 0.0) {
          ScalarGrid& ga = grid_adjoint_[n.a.index];
          for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g;
        }
        break;
      }
    }
  }
  backward_done_ = true;
}

}  // namespace segprior
