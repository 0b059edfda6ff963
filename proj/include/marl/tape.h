#pragma once

#include <functional>
#include <vector>

#include "marl/array.h"

namespace marl {

using NodeId = int;

// Reverse-mode tape over Array-valued operations. Nodes are appended during
// the forward pass, so index order is already topological; backward() walks
// them once in reverse.
class Tape {
 public:
  struct Node {
    Array value;
    Array grad;  // allocated lazily by backward()
    std::function<void(Tape&, NodeId)> backprop;  // may be empty (leaf/constant)
    bool requires_grad = false;
  };

  NodeId constant(Array v);
  NodeId leaf(Array v);  // gradient-carrying input (parameters)

  const Array& val(NodeId id) const { return nodes_[id].value; }
  const Array& grad(NodeId id) const { return nodes_[id].grad; }
  Array& acc_grad(NodeId id);  // grad slot, allocated on first touch
  bool requires_grad(NodeId id) const { return nodes_[id].requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  // loss must be a scalar node; fills grads of every reachable node
  void backward(NodeId loss);

  // ---- operations ----
  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  NodeId scale(NodeId a, double c);
  NodeId matmul(NodeId a, NodeId b);
  NodeId add_rowvec(NodeId a, NodeId bias);        // bias broadcast over rows
  NodeId tanh_op(NodeId a);
  NodeId sigmoid(NodeId a);
  NodeId relu(NodeId a);
  NodeId concat_cols(const std::vector<NodeId>& parts);
  NodeId slice_cols(NodeId a, int start, int len);
  NodeId gather_rows(NodeId a, std::vector<int> idx);
  NodeId sum_all(NodeId a);                         // -> [1]
  NodeId sum_cols(NodeId a);                        // -> [R,1]
  NodeId softmax_rows(NodeId a);
  NodeId log_softmax_rows(NodeId a);
  NodeId masked_softmax_rows(NodeId a, Array mask); // mask rows of all zeros -> zero row
  NodeId pairwise_scores(NodeId q, NodeId k, int n);  // [B*n,d] x [B*n,d] -> [B*n,n]
  NodeId attn_mix(NodeId w, NodeId v, int n);         // [B*n,n] x [B*n,d] -> [B*n,d]
  NodeId stack_edge_cols(const std::vector<NodeId>& cols, int n);  // n-1 cols [R,1] -> [R,n], diag 0
  NodeId straight_through(NodeId a);                // rowwise one-hot argmax fwd, identity bwd
  NodeId stop_gradient(NodeId a);
  NodeId select_cols_per_row(NodeId a, std::vector<int> idx);  // -> [R,1]

 private:
  NodeId push(Array value, bool requires_grad, std::function<void(Tape&, NodeId)> bp);
  std::vector<Node> nodes_;
};

}  // namespace marl
