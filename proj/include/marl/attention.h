#pragma once

#include <string>
#include <vector>

#include "marl/nn.h"

namespace marl {

// Per-timestep result of game abstraction over n agents: binary gate matrix,
// soft re-weighting of surviving edges, and their elementwise product.
// Diagonals are identically zero.
struct AgentGraph {
  int n = 0;
  Array hard;      // [n,n], entries in {0,1} (relaxed mode: (0,1))
  Array soft;      // [n,n], entries in [0,1]
  Array combined;  // hard .* soft; rows with >=1 surviving edge sum to 1

  double density() const;  // fraction of off-diagonal surviving edges
};

enum class AggregatorKind { TwoStage, SoftOnly, MeanPool, None };

struct AttentionConfig {
  int pair_hidden = 32;  // Bi-LSTM width over ordered (e_i, e_j) pair sequences
  int key_dim = 32;      // query/key width of the soft stage
  double temperature = 1.0;
  GumbelMode mode = GumbelMode::StraightThrough;
  AggregatorKind aggregator = AggregatorKind::TwoStage;
  // When non-empty: an n*n row-major 0/1 matrix overriding the sampled gate
  // for every batch element (diagnostics and masking tests).
  std::vector<double> forced_hard;
};

struct AttentionOut {
  NodeId hard;        // [B*n, n]
  NodeId soft;        // [B*n, n]
  NodeId combined;    // [B*n, n]
  NodeId aggregated;  // [B*n, d] = sum_j combined[i,j] * values[j]
};

// Hard gate rows over candidate edges: for each i, the ordered sequence
// ((e_i,e_j)) over j != i (ascending j) goes through a Bi-LSTM, a linear
// layer to 2 logits, and gumbel-softmax; component 0 is "edge on".
NodeId hard_attention(Graph& g, const std::string& prefix, const AttentionConfig& cfg,
                      NodeId features, int n, Rng& rng);

// Masked query-key softmax over surviving edges; cut edges get weight zero,
// rows with no survivor stay all-zero. mask is a forward-value selector.
NodeId soft_attention(Graph& g, const std::string& prefix, const AttentionConfig& cfg,
                      NodeId features, int n, const Array& mask);

// Softmax over all j != i, no gate (the soft-only ablation aggregator).
NodeId soft_only_weights(Graph& g, const std::string& prefix, const AttentionConfig& cfg,
                         NodeId features, int n);

// Full two-stage pass: gate, re-weight, aggregate values.
AttentionOut two_stage_forward(Graph& g, const std::string& prefix, const AttentionConfig& cfg,
                               NodeId features, NodeId values, int n, Rng& rng);

// Reads one batch element's matrices off the tape.
AgentGraph extract_graph(const Tape& t, const AttentionOut& out, int n, int batch_index);

Array offdiag_mask(int rows, int n);  // ones except the j == i column per row

}  // namespace marl
