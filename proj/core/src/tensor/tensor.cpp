#include "xmodel/tensor/tensor.hpp"

#include <atomic>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "internal.hpp"
#include "xmodel/error.hpp"

namespace xmodel::tensor {

std::size_t numel_of(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string to_string(const Shape& shape) { return fmt::format("[{}]", fmt::join(shape, ", ")); }

std::string_view op_name(OpKind op) {
  switch (op) {
    case OpKind::kLeaf: return "leaf";
    case OpKind::kMatmul: return "matmul";
    case OpKind::kAdd: return "add";
    case OpKind::kMul: return "mul";
    case OpKind::kScale: return "scale";
    case OpKind::kTranspose2d: return "transpose2d";
    case OpKind::kReshape: return "reshape";
    case OpKind::kConcat: return "concat";
    case OpKind::kSlice: return "slice";
    case OpKind::kEmbeddingLookup: return "embedding_lookup";
    case OpKind::kSoftmaxLastdim: return "softmax_lastdim";
    case OpKind::kSilu: return "silu";
    case OpKind::kMeanLastdim: return "mean_lastdim";
    case OpKind::kRsqrt: return "rsqrt";
    case OpKind::kSum: return "sum";
    case OpKind::kCrossEntropyRows: return "cross_entropy_rows";
    case OpKind::kWhereMask: return "where_mask";
  }
  return "unknown";
}

EngineOptions& options() {
  thread_local EngineOptions opts;
  return opts;
}

namespace detail {

std::uint64_t next_id() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}

std::vector<double>& Node::ensure_grad() {
  if (grad.empty()) grad.assign(data.size(), 0.0);
  return grad;
}

Tensor make_result(OpKind op, Shape shape, std::vector<double> data, std::vector<std::shared_ptr<Node>> parents,
                   std::function<void(Node&)> backward) {
  const EngineOptions& opts = options();
  if (opts.precision == Precision::kFloat32) {
    for (double& v : data) v = static_cast<double>(static_cast<float>(v));
  }
  if (opts.strict) {
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (!std::isfinite(data[i])) {
        throw Error(fmt::format("{}: non-finite output at index {} (shape {})", op_name(op), i, to_string(shape)));
      }
    }
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->op = op;
  node->id = next_id();
  bool any = false;
  if (opts.grad_enabled) {
    for (const auto& p : parents) any = any || p->requires_grad;
  }
  if (any) {
    node->requires_grad = true;
    node->parents = std::move(parents);
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

}  // namespace detail

namespace {

std::shared_ptr<detail::Node> make_leaf(Shape shape, std::vector<double> data, bool requires_grad) {
  if (numel_of(shape) != data.size()) {
    throw ShapeError(fmt::format("tensor: shape {} needs {} values, got {}", to_string(shape), numel_of(shape),
                                 data.size()));
  }
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->requires_grad = requires_grad;
  node->id = detail::next_id();
  return node;
}

const detail::Node& checked(const std::shared_ptr<detail::Node>& n) {
  if (!n) throw Error("tensor: use of an undefined tensor");
  return *n;
}

}  // namespace

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  const std::size_t n = numel_of(shape);
  return Tensor(make_leaf(std::move(shape), std::vector<double>(n, value), requires_grad));
}

Tensor Tensor::from_data(Shape shape, std::vector<double> data, bool requires_grad) {
  return Tensor(make_leaf(std::move(shape), std::move(data), requires_grad));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return Tensor(make_leaf({}, {value}, requires_grad));
}

const Shape& Tensor::shape() const { return checked(node_).shape; }
std::size_t Tensor::numel() const { return checked(node_).data.size(); }
std::span<const double> Tensor::data() const { return checked(node_).data; }

std::span<double> Tensor::mutable_data() {
  checked(node_);
  if (node_->op != OpKind::kLeaf) throw Error("tensor: mutable_data() is only allowed on leaf tensors");
  return node_->data;
}

double Tensor::item() const {
  const auto& n = checked(node_);
  if (n.data.size() != 1) throw ShapeError(fmt::format("item(): tensor of shape {} is not a scalar", to_string(n.shape)));
  return n.data[0];
}

bool Tensor::requires_grad() const { return checked(node_).requires_grad; }
bool Tensor::is_leaf() const { return checked(node_).op == OpKind::kLeaf; }
bool Tensor::has_grad() const { return !checked(node_).grad.empty(); }
std::span<const double> Tensor::grad() const { return checked(node_).grad; }

std::span<double> Tensor::mutable_grad() {
  checked(node_);
  return node_->ensure_grad();
}

void Tensor::zero_grad() {
  checked(node_);
  node_->grad.clear();
}

std::uint64_t Tensor::id() const { return checked(node_).id; }
OpKind Tensor::op() const { return checked(node_).op; }

Tensor Tensor::detach(bool requires_grad) const {
  const auto& n = checked(node_);
  return Tensor(make_leaf(n.shape, n.data, requires_grad));
}

}  // namespace xmodel::tensor
