#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace xmodel::tensor {

using Shape = std::vector<std::size_t>;

std::size_t numel_of(const Shape& shape);
std::string to_string(const Shape& shape);

enum class Precision { kFloat64, kFloat32 };

enum class OpKind {
  kLeaf,
  kMatmul,
  kAdd,
  kMul,
  kScale,
  kTranspose2d,
  kReshape,
  kConcat,
  kSlice,
  kEmbeddingLookup,
  kSoftmaxLastdim,
  kSilu,
  kMeanLastdim,
  kRsqrt,
  kSum,
  kCrossEntropyRows,
  kWhereMask,
};

std::string_view op_name(OpKind op);

// Per-thread engine settings. Each thread gets its own, so independent
// training runs on separate threads never observe each other's flags.
struct EngineOptions {
  // Reject non-finite op outputs.
  bool strict = false;
  // kFloat32 rounds every op output through float (storage stays double).
  Precision precision = Precision::kFloat64;
  // When false, ops do not record a tape.
  bool grad_enabled = true;
};

EngineOptions& options();

class OptionsScope {
 public:
  explicit OptionsScope(EngineOptions opts) : saved_(options()) { options() = opts; }
  ~OptionsScope() { options() = saved_; }
  OptionsScope(const OptionsScope&) = delete;
  OptionsScope& operator=(const OptionsScope&) = delete;

 private:
  EngineOptions saved_;
};

class NoGradScope {
 public:
  NoGradScope() : saved_(options().grad_enabled) { options().grad_enabled = false; }
  ~NoGradScope() { options().grad_enabled = saved_; }
  NoGradScope(const NoGradScope&) = delete;
  NoGradScope& operator=(const NoGradScope&) = delete;

 private:
  bool saved_;
};

// Forces 64-bit results inside its extent even in a kFloat32 run.
class FullPrecisionScope {
 public:
  FullPrecisionScope() : saved_(options().precision) { options().precision = Precision::kFloat64; }
  ~FullPrecisionScope() { options().precision = saved_; }
  FullPrecisionScope(const FullPrecisionScope&) = delete;
  FullPrecisionScope& operator=(const FullPrecisionScope&) = delete;

 private:
  Precision saved_;
};

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until a gradient is accumulated
  bool requires_grad = false;
  bool consumed = false;
  OpKind op = OpKind::kLeaf;
  std::uint64_t id = 0;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this node's grad and accumulates into the parents.
  std::function<void(Node&)> backward;

  std::vector<double>& ensure_grad();
};

}  // namespace detail

// Handle to a dense row-major tensor of doubles. Copies share storage.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from_data(Shape shape, std::vector<double> data, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t i) const { return shape().at(i); }
  std::size_t numel() const;

  std::span<const double> data() const;
  // Mutable access for leaves only (parameters, inputs). Used by the
  // optimizer between tapes and by finite-difference checks.
  std::span<double> mutable_data();
  double item() const;
  double at(std::size_t flat_index) const { return data()[flat_index]; }

  bool requires_grad() const;
  bool is_leaf() const;
  bool has_grad() const;
  std::span<const double> grad() const;
  std::span<double> mutable_grad();
  void zero_grad();

  std::uint64_t id() const;
  OpKind op() const;

  // Copy of the values with no graph history.
  Tensor detach(bool requires_grad = false) const;

  // Internal: ops and autograd work on the node directly.
  const std::shared_ptr<detail::Node>& node() const { return node_; }
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<detail::Node> node_;
};

}  // namespace xmodel::tensor
