#pragma once

#include <functional>
#include <initializer_list>
#include <memory>
#include <vector>

#include "xmodel/tensor/tensor.hpp"

namespace xmodel::tensor::detail {

std::uint64_t next_id();

// Builds the output node for `op`: applies precision rounding and the
// strict finiteness check, and wires the tape when any parent needs grad.
Tensor make_result(OpKind op, Shape shape, std::vector<double> data,
                   std::vector<std::shared_ptr<Node>> parents, std::function<void(Node&)> backward);

inline bool wants_grad(const Node& n) { return n.requires_grad; }

}  // namespace xmodel::tensor::detail
