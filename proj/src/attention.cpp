#include "marl/attention.h"

#include <stdexcept>

namespace marl {

double AgentGraph::density() const {
  if (n < 2) return 0.0;
  double on = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && hard.at(i, j) > 0.5) on += 1.0;
  return on / static_cast<double>(n * (n - 1));
}

Array offdiag_mask(int rows, int n) {
  Array m({rows, n}, 1.0);
  for (int r = 0; r < rows; ++r) m.at(r, r % n) = 0.0;
  return m;
}

NodeId hard_attention(Graph& g, const std::string& prefix, const AttentionConfig& cfg,
                      NodeId features, int n, Rng& rng) {
  if (n < 2) throw std::invalid_argument("hard_attention: need at least 2 agents");
  Tape& t = g.tape;
  int rows = t.val(features).rows();
  if (rows % n != 0) throw std::invalid_argument("hard_attention: rows not divisible by n");
  int B = rows / n;

  // row (b,i) position t pairs agent i with the t-th other agent (ascending index)
  std::vector<NodeId> seq(n - 1);
  for (int p = 0; p < n - 1; ++p) {
    std::vector<int> idx(rows);
    for (int r = 0; r < rows; ++r) {
      int b = r / n, i = r % n;
      int j = p < i ? p : p + 1;
      idx[r] = b * n + j;
    }
    NodeId ej = t.gather_rows(features, std::move(idx));
    seq[p] = t.concat_cols({features, ej});
  }
  std::vector<NodeId> enc = bilstm_encode(g, prefix + ".pair", seq, cfg.pair_hidden);

  std::vector<NodeId> gate_cols(n - 1);
  for (int p = 0; p < n - 1; ++p) {
    NodeId w = g.param(prefix + ".gate.w", {2 * cfg.pair_hidden, 2}, Init::UniformFanIn);
    NodeId b = g.param(prefix + ".gate.b", {2}, Init::Zeros);
    NodeId logits = t.add_rowvec(t.matmul(enc[p], w), b);
    GumbelOut gs = gumbel_softmax(g, logits, cfg.temperature, rng, cfg.mode);
    gate_cols[p] = t.slice_cols(gs.out, 0, 1);  // "edge on" component
  }
  (void)B;
  return t.stack_edge_cols(gate_cols, n);
}

NodeId soft_attention(Graph& g, const std::string& prefix, const AttentionConfig& cfg,
                      NodeId features, int n, const Array& mask) {
  Tape& t = g.tape;
  int d = t.val(features).cols();
  NodeId wq = g.param(prefix + ".wq", {d, cfg.key_dim}, Init::UniformFanIn);
  NodeId wk = g.param(prefix + ".wk", {d, cfg.key_dim}, Init::UniformFanIn);
  NodeId q = t.matmul(features, wq);
  NodeId k = t.matmul(features, wk);
  NodeId scores = t.pairwise_scores(q, k, n);
  return t.masked_softmax_rows(scores, mask);
}

NodeId soft_only_weights(Graph& g, const std::string& prefix, const AttentionConfig& cfg,
                         NodeId features, int n) {
  if (n < 2) throw std::invalid_argument("soft_only_weights: need at least 2 agents");
  int rows = g.tape.val(features).rows();
  return soft_attention(g, prefix, cfg, features, n, offdiag_mask(rows, n));
}

AttentionOut two_stage_forward(Graph& g, const std::string& prefix, const AttentionConfig& cfg,
                               NodeId features, NodeId values, int n, Rng& rng) {
  Tape& t = g.tape;
  int rows = t.val(features).rows();
  AttentionOut out;
  switch (cfg.aggregator) {
    case AggregatorKind::TwoStage: {
      if (!cfg.forced_hard.empty()) {
        if (static_cast<int>(cfg.forced_hard.size()) != n * n)
          throw std::invalid_argument("two_stage_forward: forced_hard must be n*n");
        Array forced({rows, n});
        for (int r = 0; r < rows; ++r)
          for (int j = 0; j < n; ++j)
            forced.at(r, j) = (r % n == j) ? 0.0 : cfg.forced_hard[(r % n) * n + j];
        out.hard = t.constant(forced);
        out.soft = soft_attention(g, prefix, cfg, features, n, forced);
        out.combined = t.mul(out.hard, out.soft);
        break;
      }
      out.hard = hard_attention(g, prefix, cfg, features, n, rng);
      // In straight-through mode the sampled gate doubles as the softmax mask,
      // so cut edges carry exactly zero weight. The relaxed gate is smooth, so
      // there the mask keeps every candidate edge and the gate only scales.
      Array mask = offdiag_mask(rows, n);
      if (cfg.mode == GumbelMode::StraightThrough) {
        const Array& hv = t.val(out.hard);
        for (int r = 0; r < rows; ++r)
          for (int j = 0; j < n; ++j) mask.at(r, j) = (r % n == j) ? 0.0 : hv.at(r, j);
      }
      out.soft = soft_attention(g, prefix, cfg, features, n, mask);
      out.combined = t.mul(out.hard, out.soft);
      break;
    }
    case AggregatorKind::SoftOnly: {
      out.soft = soft_only_weights(g, prefix, cfg, features, n);
      out.hard = t.constant(offdiag_mask(rows, n));
      out.combined = out.soft;
      break;
    }
    case AggregatorKind::MeanPool: {
      Array w = offdiag_mask(rows, n);
      for (double& v : w.data) v /= static_cast<double>(n - 1);
      out.combined = t.constant(std::move(w));
      out.hard = t.constant(offdiag_mask(rows, n));
      out.soft = out.combined;
      break;
    }
    case AggregatorKind::None: {
      out.combined = t.constant(Array::zeros({rows, n}));
      out.hard = out.combined;
      out.soft = out.combined;
      break;
    }
  }
  out.aggregated = t.attn_mix(out.combined, values, n);
  return out;
}

AgentGraph extract_graph(const Tape& t, const AttentionOut& out, int n, int batch_index) {
  AgentGraph gr;
  gr.n = n;
  gr.hard = Array::zeros({n, n});
  gr.soft = Array::zeros({n, n});
  gr.combined = Array::zeros({n, n});
  for (int i = 0; i < n; ++i) {
    int r = batch_index * n + i;
    for (int j = 0; j < n; ++j) {
      gr.hard.at(i, j) = i == j ? 0.0 : t.val(out.hard).at(r, j);
      gr.soft.at(i, j) = i == j ? 0.0 : t.val(out.soft).at(r, j);
      gr.combined.at(i, j) = i == j ? 0.0 : t.val(out.combined).at(r, j);
    }
  }
  return gr;
}

}  // namespace marl
