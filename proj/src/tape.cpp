#include "marl/tape.h"

#include <Eigen/Dense>

#include <algorithm>
#include <stdexcept>

namespace marl {

namespace {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Map = Eigen::Map<EMat>;
using CMap = Eigen::Map<const EMat>;

CMap mat(const Array& a) { return CMap(a.data.data(), a.rows(), a.cols()); }
Map mat(Array& a) { return Map(a.data.data(), a.rows(), a.cols()); }

void check_finite(const Array& a, const char* op) {
  if (!a.finite()) throw std::runtime_error(std::string("non-finite result in op ") + op);
}

}  // namespace

NodeId Tape::push(Array value, bool requires_grad, std::function<void(Tape&, NodeId)> bp) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  n.backprop = std::move(bp);
  nodes_.push_back(std::move(n));
  return static_cast<NodeId>(nodes_.size() - 1);
}

NodeId Tape::constant(Array v) { return push(std::move(v), false, nullptr); }

NodeId Tape::leaf(Array v) { return push(std::move(v), true, nullptr); }

Array& Tape::acc_grad(NodeId id) {
  Node& n = nodes_[id];
  if (n.grad.data.empty()) n.grad = Array::zeros(n.value.shape);
  return n.grad;
}

void Tape::backward(NodeId loss) {
  if (val(loss).size() != 1) throw std::invalid_argument("backward: loss must be scalar");
  acc_grad(loss).data[0] = 1.0;
  for (NodeId id = loss; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.requires_grad || n.grad.data.empty() || !n.backprop) continue;
    n.backprop(*this, id);
  }
}

// ---------------------------------------------------------------------------

NodeId Tape::add(NodeId a, NodeId b) {
  if (!val(a).same_shape(val(b))) throw std::invalid_argument("add: shape mismatch " + shape_str(val(a).shape) + " vs " + shape_str(val(b).shape));
  Array out = val(a);
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += val(b).data[i];
  bool rg = requires_grad(a) || requires_grad(b);
  return push(std::move(out), rg, [a, b](Tape& t, NodeId self) {
    const Array& g = t.grad(self);
    if (t.requires_grad(a)) {
      Array& ga = t.acc_grad(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i];
    }
    if (t.requires_grad(b)) {
      Array& gb = t.acc_grad(b);
      for (std::size_t i = 0; i < g.size(); ++i) gb.data[i] += g.data[i];
    }
  });
}

NodeId Tape::sub(NodeId a, NodeId b) {
  if (!val(a).same_shape(val(b))) throw std::invalid_argument("sub: shape mismatch");
  Array out = val(a);
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] -= val(b).data[i];
  bool rg = requires_grad(a) || requires_grad(b);
  return push(std::move(out), rg, [a, b](Tape& t, NodeId self) {
    const Array& g = t.grad(self);
    if (t.requires_grad(a)) {
      Array& ga = t.acc_grad(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i];
    }
    if (t.requires_grad(b)) {
      Array& gb = t.acc_grad(b);
      for (std::size_t i = 0; i < g.size(); ++i) gb.data[i] -= g.data[i];
    }
  });
}

NodeId Tape::mul(NodeId a, NodeId b) {
  if (!val(a).same_shape(val(b))) throw std::invalid_argument("mul: shape mismatch");
  Array out = val(a);
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] *= val(b).data[i];
  bool rg = requires_grad(a) || requires_grad(b);
  return push(std::move(out), rg, [a, b](Tape& t, NodeId self) {
    const Array& g = t.grad(self);
    if (t.requires_grad(a)) {
      Array& ga = t.acc_grad(a);
      const Array& vb = t.val(b);
      for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i] * vb.data[i];
    }
    if (t.requires_grad(b)) {
      Array& gb = t.acc_grad(b);
      const Array& va = t.val(a);
      for (std::size_t i = 0; i < g.size(); ++i) gb.data[i] += g.data[i] * va.data[i];
    }
  });
}

NodeId Tape::scale(NodeId a, double c) {
  Array out = val(a);
  for (double& v : out.data) v *= c;
  return push(std::move(out), requires_grad(a), [a, c](Tape& t, NodeId self) {
    const Array& g = t.grad(self);
    Array& ga = t.acc_grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += c * g.data[i];
  });
}

NodeId Tape::matmul(NodeId a, NodeId b) {
  const Array& va = val(a);
  const Array& vb = val(b);
  if (va.cols() != vb.rows())
    throw std::invalid_argument("matmul: inner dimension mismatch " + shape_str(va.shape) + " x " + shape_str(vb.shape));
  Array out({va.rows(), vb.cols()});
  mat(out) = mat(va) * mat(vb);
  check_finite(out, "matmul");
  bool rg = requires_grad(a) || requires_grad(b);
  return push(std::move(out), rg, [a, b](Tape& t, NodeId self) {
    CMap g = mat(t.grad(self));
    if (t.requires_grad(a)) mat(t.acc_grad(a)) += g * mat(t.val(b)).transpose();
    if (t.requires_grad(b)) mat(t.acc_grad(b)) += mat(t.val(a)).transpose() * g;
  });
}

NodeId Tape::add_rowvec(NodeId a, NodeId bias) {
  const Array& va = val(a);
  const Array& vb = val(bias);
  if (static_cast<int>(vb.size()) != va.cols())
    throw std::invalid_argument("add_rowvec: bias width mismatch");
  Array out = va;
  int R = va.rows(), C = va.cols();
  for (int r = 0; r < R; ++r)
    for (int c = 0; c < C; ++c) out.at(r, c) += vb.data[c];
  bool rg = requires_grad(a) || requires_grad(bias);
  return push(std::move(out), rg, [a, bias](Tape& t, NodeId self) {
    const Array& g = t.grad(self);
    int R = g.rows(), C = g.cols();
    if (t.requires_grad(a)) {
      Array& ga = t.acc_grad(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i];
    }
    if (t.requires_grad(bias)) {
      Array& gb = t.acc_grad(bias);
      for (int r = 0; r < R; ++r)
        for (int c = 0; c < C; ++c) gb.data[c] += g.at(r, c);
    }
  });
}

NodeId Tape::tanh_op(NodeId a) {
  Array out = val(a);
  for (double& v : out.data) v = std::tanh(v);
  return push(std::move(out), requires_grad(a), [a](Tape& t, NodeId self) {
    const Array& g = t.grad(self);
    const Array& y = t.val(self);
    Array& ga = t.acc_grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i] * (1.0 - y.data[i] * y.data[i]);
  });
}

NodeId Tape::sigmoid(NodeId a) {
  Array out = val(a);
  for (double& v : out.data) v = 1.0 / (1.0 + std::exp(-v));
  return push(std::move(out), requires_grad(a), [a](Tape& t, NodeId self) {
    const Array& g = t.grad(self);
    const Array& y = t.val(self);
    Array& ga = t.acc_grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i] * y.data[i] * (1.0 - y.data[i]);
  });
}

NodeId Tape::relu(NodeId a) {
  Array out = val(a);
  for (double& v : out.data) v = v > 0.0 ? v : 0.0;
  return push(std::move(out), requires_grad(a), [a](Tape& t, NodeId self) {
    const Array& g = t.grad(self);
    const Array& x = t.val(a);
    Array& ga = t.acc_grad(a);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (x.data[i] > 0.0) ga.data[i] += g.data[i];
  });
}

NodeId Tape::concat_cols(const std::vector<NodeId>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: empty");
  int R = val(parts[0]).rows();
  int C = 0;
  bool rg = false;
  for (NodeId p : parts) {
    if (val(p).rows() != R) throw std::invalid_argument("concat_cols: row mismatch");
    C += val(p).cols();
    rg = rg || requires_grad(p);
  }
  Array out({R, C});
  int off = 0;
  for (NodeId p : parts) {
    const Array& v = val(p);
    int c = v.cols();
    for (int r = 0; r < R; ++r)
      for (int j = 0; j < c; ++j) out.at(r, off + j) = v.at(r, j);
    off += c;
  }
  std::vector<NodeId> ps = parts;
  return push(std::move(out), rg, [ps](Tape& t, NodeId self) {
    const Array& g = t.grad(self);
    int R = g.rows();
    int off = 0;
    for (NodeId p : ps) {
      int c = t.val(p).cols();
      if (t.requires_grad(p)) {
        Array& gp = t.acc_grad(p);
        for (int r = 0; r < R; ++r)
          for (int j = 0; j < c; ++j) gp.at(r, j) += g.at(r, off + j);
      }
      off += c;
    }
  });
}

NodeId Tape::slice_cols(NodeId a, int start, int len) {
  const Array& v = val(a);
  if (start < 0 || len <= 0 || start + len > v.cols())
    throw std::invalid_argument("slice_cols: out of range");
  int R = v.rows();
  Array out({R, len});
  for (int r = 0; r < R; ++r)
    for (int j = 0; j < len; ++j) out.at(r, j) = v.at(r, start + j);
  return push(std::move(out), requires_grad(a), [a, start, len](Tape& t, NodeId self) {
    const Array& g = t.grad(self);
    Array& ga = t.acc_grad(a);
    int R = g.rows();
    for (int r = 0; r < R; ++r)
      for (int j = 0; j < len; ++j) ga.at(r, start + j) += g.at(r, j);
  });
}

NodeId Tape::gather_rows(NodeId a, std::vector<int> idx) {
  const Array& v = val(a);
  int C = v.cols();
  Array out({static_cast<int>(idx.size()), C});
  for (std::size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] < 0 || idx[r] >= v.rows()) throw std::invalid_argument("gather_rows: index out of range");
    for (int j = 0; j < C; ++j) out.at(static_cast<int>(r), j) = v.at(idx[r], j);
  }
  return push(std::move(out), requires_grad(a), [a, idx = std::move(idx)](Tape& t, NodeId self) {
    const Array& g = t.grad(self);
    Array& ga = t.acc_grad(a);
    int C = g.cols();
    for (std::size_t r = 0; r < idx.size(); ++r)
      for (int j = 0; j < C; ++j) ga.at(idx[r], j) += g.at(static_cast<int>(r), j);
  });
}

NodeId Tape::sum_all(NodeId a) {
  double s = 0.0;
  for (double v : val(a).data) s += v;
  return push(Array::scalar(s), requires_grad(a), [a](Tape& t, NodeId self) {
    double g = t.grad(self).data[0];
    Array& ga = t.acc_grad(a);
    for (double& v : ga.data) v += g;
  });
}

NodeId Tape::sum_cols(NodeId a) {
  const Array& v = val(a);
  int R = v.rows(), C = v.cols();
  Array out({R, 1});
  for (int r = 0; r < R; ++r) {
    double s = 0.0;
    for (int j = 0; j < C; ++j) s += v.at(r, j);
    out.at(r, 0) = s;
  }
  return push(std::move(out), requires_grad(a), [a](Tape& t, NodeId self) {
    const Array& g = t.grad(self);
    Array& ga = t.acc_grad(a);
    int R = ga.rows(), C = ga.cols();
    for (int r = 0; r < R; ++r)
      for (int j = 0; j < C; ++j) ga.at(r, j) += g.at(r, 0);
  });
}

NodeId Tape::softmax_rows(NodeId a) {
  const Array& v = val(a);
  int R = v.rows(), C = v.cols();
  Array out({R, C});
  for (int r = 0; r < R; ++r) {
    double m = v.at(r, 0);
    for (int j = 1; j < C; ++j) m = std::max(m, v.at(r, j));
    double z = 0.0;
    for (int j = 0; j < C; ++j) z += std::exp(v.at(r, j) - m);
    for (int j = 0; j < C; ++j) out.at(r, j) = std::exp(v.at(r, j) - m) / z;
  }
  return push(std::move(out), requires_grad(a), [a](Tape& t, NodeId self) {
    const Array& g = t.grad(self);
    const Array& y = t.val(self);
    Array& ga = t.acc_grad(a);
    int R = g.rows(), C = g.cols();
    for (int r = 0; r < R; ++r) {
      double dot = 0.0;
      for (int j = 0; j < C; ++j) dot += g.at(r, j) * y.at(r, j);
      for (int j = 0; j < C; ++j) ga.at(r, j) += y.at(r, j) * (g.at(r, j) - dot);
    }
  });
}

NodeId Tape::log_softmax_rows(NodeId a) {
  const Array& v = val(a);
  int R = v.rows(), C = v.cols();
  Array out({R, C});
  for (int r = 0; r < R; ++r) {
    double m = v.at(r, 0);
    for (int j = 1; j < C; ++j) m = std::max(m, v.at(r, j));
    double z = 0.0;
    for (int j = 0; j < C; ++j) z += std::exp(v.at(r, j) - m);
    double lz = m + std::log(z);
    for (int j = 0; j < C; ++j) out.at(r, j) = v.at(r, j) - lz;
  }
  return push(std::move(out), requires_grad(a), [a](Tape& t, NodeId self) {
    const Array& g = t.grad(self);
    const Array& y = t.val(self);
    Array& ga = t.acc_grad(a);
    int R = g.rows(), C = g.cols();
    for (int r = 0; r < R; ++r) {
      double gs = 0.0;
      for (int j = 0; j < C; ++j) gs += g.at(r, j);
      for (int j = 0; j < C; ++j) ga.at(r, j) += g.at(r, j) - std::exp(y.at(r, j)) * gs;
    }
  });
}

NodeId Tape::masked_softmax_rows(NodeId a, Array mask) {
  const Array& v = val(a);
  if (!v.same_shape(mask)) throw std::invalid_argument("masked_softmax_rows: mask shape mismatch");
  int R = v.rows(), C = v.cols();
  Array out({R, C});
  for (int r = 0; r < R; ++r) {
    double m = -1e300;
    for (int j = 0; j < C; ++j)
      if (mask.at(r, j) > 0.5) m = std::max(m, v.at(r, j));
    if (m < -1e299) continue;  // fully masked row stays zero
    double z = 0.0;
    for (int j = 0; j < C; ++j)
      if (mask.at(r, j) > 0.5) z += std::exp(v.at(r, j) - m);
    for (int j = 0; j < C; ++j)
      if (mask.at(r, j) > 0.5) out.at(r, j) = std::exp(v.at(r, j) - m) / z;
  }
  return push(std::move(out), requires_grad(a), [a, mask = std::move(mask)](Tape& t, NodeId self) {
    const Array& g = t.grad(self);
    const Array& y = t.val(self);
    Array& ga = t.acc_grad(a);
    int R = g.rows(), C = g.cols();
    for (int r = 0; r < R; ++r) {
      double dot = 0.0;
      for (int j = 0; j < C; ++j)
        if (mask.at(r, j) > 0.5) dot += g.at(r, j) * y.at(r, j);
      for (int j = 0; j < C; ++j)
        if (mask.at(r, j) > 0.5) ga.at(r, j) += y.at(r, j) * (g.at(r, j) - dot);
    }
  });
}

NodeId Tape::pairwise_scores(NodeId q, NodeId k, int n) {
  const Array& vq = val(q);
  const Array& vk = val(k);
  if (!vq.same_shape(vk)) throw std::invalid_argument("pairwise_scores: shape mismatch");
  int rows = vq.rows();
  if (rows % n != 0) throw std::invalid_argument("pairwise_scores: rows not divisible by n");
  int B = rows / n, d = vq.cols();
  Array out({rows, n});
  for (int b = 0; b < B; ++b) {
    CMap Qb(vq.data.data() + static_cast<std::size_t>(b) * n * d, n, d);
    CMap Kb(vk.data.data() + static_cast<std::size_t>(b) * n * d, n, d);
    Map Ob(out.data.data() + static_cast<std::size_t>(b) * n * n, n, n);
    Ob = Qb * Kb.transpose();
  }
  bool rg = requires_grad(q) || requires_grad(k);
  return push(std::move(out), rg, [q, k, n](Tape& t, NodeId self) {
    const Array& g = t.grad(self);
    const Array& vq = t.val(q);
    const Array& vk = t.val(k);
    int B = vq.rows() / n, d = vq.cols();
    for (int b = 0; b < B; ++b) {
      CMap Gb(g.data.data() + static_cast<std::size_t>(b) * n * n, n, n);
      CMap Qb(vq.data.data() + static_cast<std::size_t>(b) * n * d, n, d);
      CMap Kb(vk.data.data() + static_cast<std::size_t>(b) * n * d, n, d);
      if (t.requires_grad(q)) {
        Map Gq(t.acc_grad(q).data.data() + static_cast<std::size_t>(b) * n * d, n, d);
        Gq += Gb * Kb;
      }
      if (t.requires_grad(k)) {
        Map Gk(t.acc_grad(k).data.data() + static_cast<std::size_t>(b) * n * d, n, d);
        Gk += Gb.transpose() * Qb;
      }
    }
  });
}

NodeId Tape::attn_mix(NodeId w, NodeId v, int n) {
  const Array& vw = val(w);
  const Array& vv = val(v);
  if (vw.cols() != n || vw.rows() != vv.rows() || vw.rows() % n != 0)
    throw std::invalid_argument("attn_mix: shape mismatch");
  int B = vw.rows() / n, d = vv.cols();
  Array out({vw.rows(), d});
  for (int b = 0; b < B; ++b) {
    CMap Wb(vw.data.data() + static_cast<std::size_t>(b) * n * n, n, n);
    CMap Vb(vv.data.data() + static_cast<std::size_t>(b) * n * d, n, d);
    Map Ob(out.data.data() + static_cast<std::size_t>(b) * n * d, n, d);
    Ob = Wb * Vb;
  }
  bool rg = requires_grad(w) || requires_grad(v);
  return push(std::move(out), rg, [w, v, n](Tape& t, NodeId self) {
    const Array& g = t.grad(self);
    const Array& vw = t.val(w);
    const Array& vv = t.val(v);
    int B = vw.rows() / n, d = vv.cols();
    for (int b = 0; b < B; ++b) {
      CMap Gb(g.data.data() + static_cast<std::size_t>(b) * n * d, n, d);
      CMap Wb(vw.data.data() + static_cast<std::size_t>(b) * n * n, n, n);
      CMap Vb(vv.data.data() + static_cast<std::size_t>(b) * n * d, n, d);
      if (t.requires_grad(w)) {
        Map Gw(t.acc_grad(w).data.data() + static_cast<std::size_t>(b) * n * n, n, n);
        Gw += Gb * Vb.transpose();
      }
      if (t.requires_grad(v)) {
        Map Gv(t.acc_grad(v).data.data() + static_cast<std::size_t>(b) * n * d, n, d);
        Gv += Wb.transpose() * Gb;
      }
    }
  });
}

NodeId Tape::stack_edge_cols(const std::vector<NodeId>& cols, int n) {
  if (static_cast<int>(cols.size()) != n - 1)
    throw std::invalid_argument("stack_edge_cols: expected n-1 columns");
  int R = val(cols[0]).rows();
  if (R % n != 0) throw std::invalid_argument("stack_edge_cols: rows not divisible by n");
  bool rg = false;
  for (NodeId c : cols) {
    if (val(c).rows() != R || val(c).cols() != 1)
      throw std::invalid_argument("stack_edge_cols: each part must be [R,1]");
    rg = rg || requires_grad(c);
  }
  Array out({R, n});
  for (int r = 0; r < R; ++r) {
    int i = r % n;
    for (int t = 0; t < n - 1; ++t) {
      int j = t < i ? t : t + 1;
      out.at(r, j) = val(cols[t]).at(r, 0);
    }
  }
  std::vector<NodeId> cs = cols;
  return push(std::move(out), rg, [cs, n](Tape& t, NodeId self) {
    const Array& g = t.grad(self);
    int R = g.rows();
    for (int tt = 0; tt < n - 1; ++tt) {
      if (!t.requires_grad(cs[tt])) continue;
      Array& gc = t.acc_grad(cs[tt]);
      for (int r = 0; r < R; ++r) {
        int i = r % n;
        int j = tt < i ? tt : tt + 1;
        gc.at(r, 0) += g.at(r, j);
      }
    }
  });
}

NodeId Tape::straight_through(NodeId a) {
  const Array& v = val(a);
  int R = v.rows(), C = v.cols();
  Array out({R, C});
  for (int r = 0; r < R; ++r) {
    int best = 0;
    for (int j = 1; j < C; ++j)
      if (v.at(r, j) > v.at(r, best)) best = j;
    out.at(r, best) = 1.0;
  }
  return push(std::move(out), requires_grad(a), [a](Tape& t, NodeId self) {
    const Array& g = t.grad(self);
    Array& ga = t.acc_grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i];
  });
}

NodeId Tape::stop_gradient(NodeId a) { return constant(val(a)); }

NodeId Tape::select_cols_per_row(NodeId a, std::vector<int> idx) {
  const Array& v = val(a);
  if (static_cast<int>(idx.size()) != v.rows())
    throw std::invalid_argument("select_cols_per_row: index count mismatch");
  Array out({v.rows(), 1});
  for (int r = 0; r < v.rows(); ++r) {
    if (idx[r] < 0 || idx[r] >= v.cols()) throw std::invalid_argument("select_cols_per_row: column out of range");
    out.at(r, 0) = v.at(r, idx[r]);
  }
  return push(std::move(out), requires_grad(a), [a, idx = std::move(idx)](Tape& t, NodeId self) {
    const Array& g = t.grad(self);
    Array& ga = t.acc_grad(a);
    for (int r = 0; r < g.rows(); ++r) ga.at(r, idx[r]) += g.at(r, 0);
  });
}

}  // namespace marl
