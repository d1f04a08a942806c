#include "xmodel/tensor/ops.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Core>
#include <fmt/format.h>

#include "internal.hpp"
#include "xmodel/error.hpp"

namespace xmodel::tensor {

using detail::make_result;
using detail::Node;

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

const std::shared_ptr<Node>& node_of(const Tensor& t, OpKind op) {
  if (!t.defined()) throw Error(fmt::format("{}: undefined input tensor", op_name(op)));
  return t.node();
}

[[noreturn]] void shape_mismatch(OpKind op, const Shape& a, const Shape& b, std::string_view why = {}) {
  throw ShapeError(fmt::format("{}: incompatible shapes {} and {}{}{}", op_name(op), to_string(a), to_string(b),
                               why.empty() ? "" : ": ", why));
}

enum class Broadcast { kSame, kLastdim, kRow };

Broadcast classify(OpKind op, const Shape& a, const Shape& b, bool allow_row) {
  if (a == b) return Broadcast::kSame;
  if (!a.empty() && b.size() == 1 && b[0] == a.back()) return Broadcast::kLastdim;
  if (allow_row && !a.empty() && b.size() == a.size() && b.back() == 1 &&
      std::equal(a.begin(), a.end() - 1, b.begin())) {
    return Broadcast::kRow;
  }
  shape_mismatch(op, a, b, allow_row ? "expected equal shapes, a lastdim vector, or a per-row column"
                                     : "expected equal shapes or a lastdim bias vector");
}

// (outer, dim, inner) decomposition around axis `d`.
struct Axis {
  std::size_t outer = 1, size = 1, inner = 1;
};

Axis axis_of(const Shape& s, std::size_t d) {
  Axis ax;
  for (std::size_t i = 0; i < d; ++i) ax.outer *= s[i];
  ax.size = s[d];
  for (std::size_t i = d + 1; i < s.size(); ++i) ax.inner *= s[i];
  return ax;
}

std::size_t last_dim(OpKind op, const Shape& s) {
  if (s.empty()) throw ShapeError(fmt::format("{}: needs rank >= 1, got a scalar", op_name(op)));
  if (s.back() == 0) throw ShapeError(fmt::format("{}: last dimension is empty in {}", op_name(op), to_string(s)));
  return s.back();
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  constexpr auto op = OpKind::kMatmul;
  const auto& na = node_of(a, op);
  const auto& nb = node_of(b, op);
  if (na->shape.size() != 2 || nb->shape.size() != 2 || na->shape[1] != nb->shape[0]) {
    shape_mismatch(op, na->shape, nb->shape, "expected [m,k] x [k,n]");
  }
  const auto m = static_cast<Eigen::Index>(na->shape[0]);
  const auto k = static_cast<Eigen::Index>(na->shape[1]);
  const auto n = static_cast<Eigen::Index>(nb->shape[1]);
  std::vector<double> out(static_cast<std::size_t>(m * n));
  MutMap(out.data(), m, n).noalias() = ConstMap(na->data.data(), m, k) * ConstMap(nb->data.data(), k, n);
  return make_result(op, {na->shape[0], nb->shape[1]}, std::move(out), {na, nb}, [m, k, n](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    ConstMap g(self.grad.data(), m, n);
    if (pa.requires_grad) {
      MutMap(pa.ensure_grad().data(), m, k).noalias() += g * ConstMap(pb.data.data(), k, n).transpose();
    }
    if (pb.requires_grad) {
      MutMap(pb.ensure_grad().data(), k, n).noalias() += ConstMap(pa.data.data(), m, k).transpose() * g;
    }
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  constexpr auto op = OpKind::kAdd;
  const auto& na = node_of(a, op);
  const auto& nb = node_of(b, op);
  const Broadcast mode = classify(op, na->shape, nb->shape, false);
  std::vector<double> out = na->data;
  const std::size_t bn = nb->data.size();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += nb->data[mode == Broadcast::kSame ? i : i % bn];
  return make_result(op, na->shape, std::move(out), {na, nb}, [mode, bn](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    if (pa.requires_grad) {
      auto& ga = pa.ensure_grad();
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += self.grad[i];
    }
    if (pb.requires_grad) {
      auto& gb = pb.ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) gb[mode == Broadcast::kSame ? i : i % bn] += self.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  constexpr auto op = OpKind::kMul;
  const auto& na = node_of(a, op);
  const auto& nb = node_of(b, op);
  const Broadcast mode = classify(op, na->shape, nb->shape, true);
  const std::size_t width = na->shape.empty() ? 1 : na->shape.back();
  const std::size_t bn = nb->data.size();
  auto b_index = [mode, width, bn](std::size_t i) {
    switch (mode) {
      case Broadcast::kSame: return i;
      case Broadcast::kLastdim: return i % bn;
      case Broadcast::kRow: return i / width;
    }
    return i;
  };
  std::vector<double> out(na->data.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = na->data[i] * nb->data[b_index(i)];
  return make_result(op, na->shape, std::move(out), {na, nb}, [b_index](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    if (pa.requires_grad) {
      auto& ga = pa.ensure_grad();
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += self.grad[i] * pb.data[b_index(i)];
    }
    if (pb.requires_grad) {
      auto& gb = pb.ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) gb[b_index(i)] += self.grad[i] * pa.data[i];
    }
  });
}

Tensor scale(const Tensor& a, double factor) {
  constexpr auto op = OpKind::kScale;
  const auto& na = node_of(a, op);
  std::vector<double> out = na->data;
  for (double& v : out) v *= factor;
  return make_result(op, na->shape, std::move(out), {na}, [factor](Node& self) {
    auto& ga = self.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += factor * self.grad[i];
  });
}

Tensor transpose2d(const Tensor& a) {
  constexpr auto op = OpKind::kTranspose2d;
  const auto& na = node_of(a, op);
  if (na->shape.size() != 2) {
    throw ShapeError(fmt::format("transpose2d: expected rank 2, got {}", to_string(na->shape)));
  }
  const std::size_t r = na->shape[0], c = na->shape[1];
  std::vector<double> out(r * c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = na->data[i * c + j];
  return make_result(op, {c, r}, std::move(out), {na}, [r, c](Node& self) {
    auto& ga = self.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += self.grad[j * r + i];
  });
}

Tensor reshape(const Tensor& a, Shape shape) {
  constexpr auto op = OpKind::kReshape;
  const auto& na = node_of(a, op);
  if (numel_of(shape) != na->data.size()) shape_mismatch(op, na->shape, shape, "element counts differ");
  return make_result(op, std::move(shape), na->data, {na}, [](Node& self) {
    auto& ga = self.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += self.grad[i];
  });
}

Tensor concat(std::span<const Tensor> parts, std::size_t dim) {
  constexpr auto op = OpKind::kConcat;
  if (parts.empty()) throw ShapeError("concat: no inputs");
  std::vector<std::shared_ptr<Node>> nodes;
  nodes.reserve(parts.size());
  for (const auto& p : parts) nodes.push_back(node_of(p, op));
  const Shape& first = nodes[0]->shape;
  if (dim >= first.size()) {
    throw ShapeError(fmt::format("concat: dim {} out of range for {}", dim, to_string(first)));
  }
  Shape out_shape = first;
  out_shape[dim] = 0;
  std::vector<std::size_t> sizes;
  for (const auto& n : nodes) {
    if (n->shape.size() != first.size()) shape_mismatch(op, first, n->shape, "ranks differ");
    for (std::size_t i = 0; i < first.size(); ++i) {
      if (i != dim && n->shape[i] != first[i]) shape_mismatch(op, first, n->shape, "non-concat dims differ");
    }
    sizes.push_back(n->shape[dim]);
    out_shape[dim] += n->shape[dim];
  }
  const Axis ax = axis_of(out_shape, dim);
  std::vector<double> out(numel_of(out_shape));
  std::size_t offset = 0;
  for (std::size_t p = 0; p < nodes.size(); ++p) {
    const std::size_t block = sizes[p] * ax.inner;
    for (std::size_t o = 0; o < ax.outer; ++o) {
      std::copy_n(nodes[p]->data.begin() + static_cast<std::ptrdiff_t>(o * block), block,
                  out.begin() + static_cast<std::ptrdiff_t>(o * ax.size * ax.inner + offset * ax.inner));
    }
    offset += sizes[p];
  }
  return make_result(op, out_shape, std::move(out), std::move(nodes), [ax, sizes](Node& self) {
    std::size_t offset = 0;
    for (std::size_t p = 0; p < self.parents.size(); ++p) {
      Node& pn = *self.parents[p];
      const std::size_t block = sizes[p] * ax.inner;
      if (pn.requires_grad) {
        auto& g = pn.ensure_grad();
        for (std::size_t o = 0; o < ax.outer; ++o) {
          const double* src = self.grad.data() + o * ax.size * ax.inner + offset * ax.inner;
          double* dst = g.data() + o * block;
          for (std::size_t i = 0; i < block; ++i) dst[i] += src[i];
        }
      }
      offset += sizes[p];
    }
  });
}

Tensor slice(const Tensor& a, std::size_t dim, std::size_t start, std::size_t length) {
  constexpr auto op = OpKind::kSlice;
  const auto& na = node_of(a, op);
  if (dim >= na->shape.size() || start + length > na->shape[dim]) {
    throw ShapeError(fmt::format("slice: range [{}, {}) on dim {} is out of bounds for {}", start, start + length,
                                 dim, to_string(na->shape)));
  }
  const Axis ax = axis_of(na->shape, dim);
  Shape out_shape = na->shape;
  out_shape[dim] = length;
  const std::size_t block = length * ax.inner;
  std::vector<double> out(ax.outer * block);
  for (std::size_t o = 0; o < ax.outer; ++o) {
    std::copy_n(na->data.begin() + static_cast<std::ptrdiff_t>(o * ax.size * ax.inner + start * ax.inner), block,
                out.begin() + static_cast<std::ptrdiff_t>(o * block));
  }
  return make_result(op, std::move(out_shape), std::move(out), {na}, [ax, start, block](Node& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (std::size_t o = 0; o < ax.outer; ++o) {
      double* dst = g.data() + o * ax.size * ax.inner + start * ax.inner;
      const double* src = self.grad.data() + o * block;
      for (std::size_t i = 0; i < block; ++i) dst[i] += src[i];
    }
  });
}

Tensor embedding_lookup(const Tensor& table, std::span<const int> ids) {
  constexpr auto op = OpKind::kEmbeddingLookup;
  const auto& nt = node_of(table, op);
  if (nt->shape.size() != 2) {
    throw ShapeError(fmt::format("embedding_lookup: table must be [V, H], got {}", to_string(nt->shape)));
  }
  const std::size_t vocab = nt->shape[0], width = nt->shape[1];
  std::vector<int> rows(ids.begin(), ids.end());
  const std::size_t n = rows.size();
  std::vector<double> out(rows.size() * width);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] < 0 || static_cast<std::size_t>(rows[r]) >= vocab) {
      throw Error(fmt::format("embedding_lookup: id {} at position {} is outside [0, {})", rows[r], r, vocab));
    }
    std::copy_n(nt->data.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(rows[r]) * width), width,
                out.begin() + static_cast<std::ptrdiff_t>(r * width));
  }
  return make_result(op, {n, width}, std::move(out), {nt}, [rows = std::move(rows), width](Node& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (std::size_t r = 0; r < rows.size(); ++r) {
      double* dst = g.data() + static_cast<std::size_t>(rows[r]) * width;
      const double* src = self.grad.data() + r * width;
      for (std::size_t i = 0; i < width; ++i) dst[i] += src[i];
    }
  });
}

Tensor softmax_lastdim(const Tensor& a) {
  constexpr auto op = OpKind::kSoftmaxLastdim;
  const auto& na = node_of(a, op);
  const std::size_t d = last_dim(op, na->shape);
  const std::size_t rows = na->data.size() / d;
  std::vector<double> out(na->data.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = na->data.data() + r * d;
    double* y = out.data() + r * d;
    const double mx = *std::max_element(x, x + d);
    double total = 0.0;
    for (std::size_t i = 0; i < d; ++i) total += (y[i] = std::exp(x[i] - mx));
    for (std::size_t i = 0; i < d; ++i) y[i] /= total;
  }
  auto result = make_result(op, na->shape, std::move(out), {na}, {});
  if (result.requires_grad()) {
    // Backward needs the output; capture it weakly through the node itself.
    result.node()->backward = [d, rows](Node& self) {
      auto& g = self.parents[0]->ensure_grad();
      for (std::size_t r = 0; r < rows; ++r) {
        const double* y = self.data.data() + r * d;
        const double* gy = self.grad.data() + r * d;
        double dot = 0.0;
        for (std::size_t i = 0; i < d; ++i) dot += gy[i] * y[i];
        for (std::size_t i = 0; i < d; ++i) g[r * d + i] += y[i] * (gy[i] - dot);
      }
    };
  }
  return result;
}

Tensor silu(const Tensor& a) {
  constexpr auto op = OpKind::kSilu;
  const auto& na = node_of(a, op);
  std::vector<double> out(na->data.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double x = na->data[i];
    out[i] = x / (1.0 + std::exp(-x));
  }
  return make_result(op, na->shape, std::move(out), {na}, [](Node& self) {
    Node& pa = *self.parents[0];
    auto& g = pa.ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double x = pa.data[i];
      const double s = 1.0 / (1.0 + std::exp(-x));
      g[i] += self.grad[i] * (s + x * s * (1.0 - s));
    }
  });
}

Tensor mean_lastdim(const Tensor& a) {
  constexpr auto op = OpKind::kMeanLastdim;
  const auto& na = node_of(a, op);
  const std::size_t d = last_dim(op, na->shape);
  const std::size_t rows = na->data.size() / d;
  std::vector<double> out(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    double total = 0.0;
    for (std::size_t i = 0; i < d; ++i) total += na->data[r * d + i];
    out[r] = total / static_cast<double>(d);
  }
  Shape out_shape = na->shape;
  out_shape.back() = 1;
  return make_result(op, std::move(out_shape), std::move(out), {na}, [d, rows](Node& self) {
    auto& g = self.parents[0]->ensure_grad();
    const double inv = 1.0 / static_cast<double>(d);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t i = 0; i < d; ++i) g[r * d + i] += self.grad[r] * inv;
  });
}

Tensor rsqrt(const Tensor& a, double eps) {
  constexpr auto op = OpKind::kRsqrt;
  const auto& na = node_of(a, op);
  std::vector<double> out(na->data.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = 1.0 / std::sqrt(na->data[i] + eps);
  auto result = make_result(op, na->shape, std::move(out), {na}, {});
  if (result.requires_grad()) {
    result.node()->backward = [](Node& self) {
      auto& g = self.parents[0]->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double y = self.data[i];
        g[i] += self.grad[i] * (-0.5 * y * y * y);
      }
    };
  }
  return result;
}

Tensor sum(const Tensor& a) {
  constexpr auto op = OpKind::kSum;
  const auto& na = node_of(a, op);
  double total = 0.0;
  for (double v : na->data) total += v;
  return make_result(op, {}, {total}, {na}, [](Node& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (double& v : g) v += self.grad[0];
  });
}

Tensor cross_entropy_rows(const Tensor& logits, std::span<const int> targets, std::span<const double> weights) {
  constexpr auto op = OpKind::kCrossEntropyRows;
  const auto& nl = node_of(logits, op);
  const std::size_t v = last_dim(op, nl->shape);
  const std::size_t rows = nl->data.size() / v;
  if (targets.size() != rows) {
    throw ShapeError(fmt::format("cross_entropy_rows: logits {} have {} rows but {} targets were given",
                                 to_string(nl->shape), rows, targets.size()));
  }
  if (!weights.empty() && weights.size() != rows) {
    throw ShapeError(fmt::format("cross_entropy_rows: {} rows but {} mask weights", rows, weights.size()));
  }
  std::vector<double> w(rows, 1.0);
  if (!weights.empty()) std::copy(weights.begin(), weights.end(), w.begin());
  double total_w = 0.0;
  for (double x : w) total_w += x;
  if (total_w == 0.0) throw Error("cross_entropy_rows: mask selects no rows");

  std::vector<int> tgt(targets.begin(), targets.end());
  std::vector<double> lse(rows);
  double loss = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (tgt[r] < 0 || static_cast<std::size_t>(tgt[r]) >= v) {
      throw Error(fmt::format("cross_entropy_rows: target {} at row {} is outside [0, {})", tgt[r], r, v));
    }
    const double* x = nl->data.data() + r * v;
    const double mx = *std::max_element(x, x + v);
    double s = 0.0;
    for (std::size_t i = 0; i < v; ++i) s += std::exp(x[i] - mx);
    lse[r] = mx + std::log(s);
    if (w[r] != 0.0) loss += w[r] * (lse[r] - x[tgt[r]]);
  }
  loss /= total_w;
  return make_result(op, {}, {loss}, {nl},
                     [v, rows, total_w, w = std::move(w), tgt = std::move(tgt), lse = std::move(lse)](Node& self) {
                       Node& pl = *self.parents[0];
                       auto& g = pl.ensure_grad();
                       const double go = self.grad[0];
                       for (std::size_t r = 0; r < rows; ++r) {
                         if (w[r] == 0.0) continue;
                         const double coef = go * w[r] / total_w;
                         const double* x = pl.data.data() + r * v;
                         double* gr = g.data() + r * v;
                         for (std::size_t i = 0; i < v; ++i) gr[i] += coef * std::exp(x[i] - lse[r]);
                         gr[tgt[r]] -= coef;
                       }
                     });
}

Tensor where_mask(const Tensor& mask, const Tensor& a, double fill) {
  constexpr auto op = OpKind::kWhereMask;
  const auto& nm = node_of(mask, op);
  const auto& na = node_of(a, op);
  if (nm->shape != na->shape) shape_mismatch(op, nm->shape, na->shape, "mask must match the input shape");
  std::vector<double> out(na->data.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = nm->data[i] != 0.0 ? na->data[i] : fill;
  return make_result(op, na->shape, std::move(out), {na, nm}, [](Node& self) {
    Node& pa = *self.parents[0];
    const Node& pm = *self.parents[1];
    if (!pa.requires_grad) return;
    auto& g = pa.ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (pm.data[i] != 0.0) g[i] += self.grad[i];
    }
  });
}

}  // namespace xmodel::tensor
