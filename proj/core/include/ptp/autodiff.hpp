#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "ptp/tensor.hpp"

namespace ptp::diff {

// Reverse-mode autodiff over a dynamically built DAG. Nodes own their value
// and gradient; an op node also owns a closure that scatters its gradient
// into its parents. Small by design: just the ops the networks here need.
struct Node;
using NodePtr = std::shared_ptr<Node>;

struct Node {
  Tensor value;
  Tensor grad;  // same shape as value, zero until backward touches it
  bool requires_grad = false;
  bool is_leaf = true;
  std::vector<NodePtr> parents;
  std::function<void(Node&)> backprop;  // adds d(loss)/d(parent) into parent grads
};

// trainable leaf (requires_grad) or plain input leaf
NodePtr leaf(Tensor value, bool requires_grad = false);
NodePtr constant(Tensor value);

// building block for ops defined outside this header (e.g. the variational
// sampling ops); requires_grad is inherited from the parents
NodePtr make_node(Tensor value, std::vector<NodePtr> parents, std::function<void(Node&)> backprop);

// y = x * w + b, with x [batch x in], w [in x out], b [out] broadcast per row
NodePtr affine(const NodePtr& x, const NodePtr& w, const NodePtr& b);
NodePtr relu(const NodePtr& x);
// row-wise softmax with max subtraction; rows sum to 1
NodePtr softmax(const NodePtr& x);
// mean over the batch of -log(p[i, labels[i]]), probabilities clamped at 1e-12
NodePtr cross_entropy(const NodePtr& probabilities, std::vector<int> labels);
// gathers table rows by index -> [batch x dim]; gradients scatter-add back
NodePtr embed(const NodePtr& table, std::vector<int> indices);
// horizontal concatenation of [batch x w_i] blocks
NodePtr concat_cols(const std::vector<NodePtr>& parts);
NodePtr add(const NodePtr& a, const NodePtr& b);  // same shape
NodePtr scale(const NodePtr& x, double factor);

// Runs one reverse sweep from a scalar loss. Gradients of interior nodes are
// reset first; leaf gradients accumulate across calls, so callers zero their
// parameters between steps (see zero_grad).
void backward(const NodePtr& loss);
void zero_grad(const std::vector<NodePtr>& params);

// Central-difference check of d(loss)/d(param) for every element of every
// param; returns the largest relative error. `build_loss` must rebuild the
// graph from the current parameter values on each call.
double finite_diff_check(const std::function<NodePtr()>& build_loss,
                         const std::vector<NodePtr>& params, double h = 1e-5);

}  // namespace ptp::diff
