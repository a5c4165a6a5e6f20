#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "pocfuse/error.hpp"
#include "pocfuse/numerics/functions.hpp"
#include "pocfuse/numerics/tensor.hpp"

namespace pocfuse::num {

class Tape;

// Handle to a value recorded on a Tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
};

// Reverse-mode gradient tape. Operations append nodes in evaluation order, so
// the node list is already topologically sorted and backward() walks it once
// in reverse.
//
// Trainable tensors enter through param(); they are referenced, not copied, and
// registering the same tensor twice yields the same node. This is what makes a
// tied weight accumulate a single gradient.
class Tape {
 public:
  enum class Mode { record, inference };

  explicit Tape(Mode mode = Mode::record) : mode_(mode) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return mode_ == Mode::record; }

  Var param(const Tensor& tensor) {
    if (auto it = param_nodes_.find(&tensor); it != param_nodes_.end())
      return {this, it->second};
    Node node;
    node.ref = &tensor;
    node.needs_grad = recording();
    nodes_.push_back(std::move(node));
    const std::size_t id = nodes_.size() - 1;
    param_nodes_.emplace(&tensor, id);
    return {this, id};
  }

  Var constant(Tensor tensor) {
    Node node;
    node.owned = std::move(tensor);
    nodes_.push_back(std::move(node));
    return {this, nodes_.size() - 1};
  }

  const Tensor& value(std::size_t id) const { return nodes_[id].value(); }

  // Appends the result of an operation. `backward` receives the tape and the
  // id of the new node; it is dropped when no input needs a gradient.
  Var record(Tensor result, std::initializer_list<Var> inputs,
             std::function<void(Tape&, std::size_t)> backward, const char* op) {
    return record(std::move(result), std::span<const Var>(inputs.begin(), inputs.size()),
                  std::move(backward), op);
  }

  Var record(Tensor result, std::span<const Var> inputs,
             std::function<void(Tape&, std::size_t)> backward, const char* op) {
    if (!result.all_finite()) throw InvariantError(std::string("non-finite value produced by ") + op);
    Node node;
    node.owned = std::move(result);
    if (recording()) {
      for (const Var& in : inputs) node.needs_grad = node.needs_grad || nodes_[in.id].needs_grad;
      if (node.needs_grad) node.backward = std::move(backward);
    }
    nodes_.push_back(std::move(node));
    return {this, nodes_.size() - 1};
  }

  bool needs_grad(std::size_t id) const { return nodes_[id].needs_grad; }

  // Gradient accumulator for node `id`, allocated as zeros on first use.
  Tensor& grad(std::size_t id) {
    Node& node = nodes_[id];
    if (!node.has_grad) {
      node.grad = Tensor(node.value().shape(), 0.0);
      node.has_grad = true;
    }
    return node.grad;
  }

  void backward(Var loss) {
    if (!recording()) throw InvariantError("backward on an inference tape");
    if (backward_done_) throw InvariantError("backward called twice on one tape");
    if (value(loss.id).size() != 1) throw InvariantError("backward requires a scalar loss");
    backward_done_ = true;
    grad(loss.id)[0] = 1.0;
    for (std::size_t id = loss.id + 1; id-- > 0;) {
      Node& node = nodes_[id];
      if (node.has_grad && node.backward) node.backward(*this, id);
    }
  }

  // d(loss)/d(tensor) after backward(); zeros for a tensor the loss never used.
  Tensor gradient(const Tensor& tensor) const {
    auto it = param_nodes_.find(&tensor);
    if (it == param_nodes_.end() || !nodes_[it->second].has_grad)
      return Tensor(tensor.shape(), 0.0);
    return nodes_[it->second].grad;
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor owned;
    const Tensor* ref = nullptr;
    Tensor grad;
    bool has_grad = false;
    bool needs_grad = false;
    std::function<void(Tape&, std::size_t)> backward;

    const Tensor& value() const { return ref ? *ref : owned; }
  };

  Mode mode_;
  bool backward_done_ = false;
  std::vector<Node> nodes_;
  std::unordered_map<const Tensor*, std::size_t> param_nodes_;
};

inline const Tensor& Var::value() const { return tape->value(id); }

namespace detail {

inline void check_same_tape(Var a, Var b) {
  if (a.tape != b.tape) throw InvariantError("operands recorded on different tapes");
}

inline void accumulate_if_needed(Tape& t, Var v, const std::function<void(Tensor&)>& fn) {
  if (t.needs_grad(v.id)) fn(t.grad(v.id));
}

}  // namespace detail

// a[n x k] * b[k x m]
inline Var matmul(Var a, Var b) {
  detail::check_same_tape(a, b);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  const std::size_t n = A.rows(), k = A.cols(), m = B.cols();
  if (B.rows() != k)
    throw InvariantError("matmul shape mismatch " + shape_string(A.shape()) + " * " +
                         shape_string(B.shape()));
  Tensor C = Tensor::matrix(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    double* c = C.data() + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = A(i, p);
      const double* brow = B.data() + p * m;
      for (std::size_t j = 0; j < m; ++j) c[j] += av * brow[j];
    }
  }
  return a.tape->record(std::move(C), {a, b}, [a, b, n, k, m](Tape& t, std::size_t self) {
    const Tensor& G = t.grad(self);
    const Tensor& A = a.value();
    const Tensor& B = b.value();
    detail::accumulate_if_needed(t, a, [&](Tensor& GA) {
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const double* g = G.data() + i * m;
          const double* brow = B.data() + p * m;
          double s = 0.0;
          for (std::size_t j = 0; j < m; ++j) s += g[j] * brow[j];
          GA(i, p) += s;
        }
    });
    detail::accumulate_if_needed(t, b, [&](Tensor& GB) {
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const double av = A(i, p);
          const double* g = G.data() + i * m;
          double* gb = GB.data() + p * m;
          for (std::size_t j = 0; j < m; ++j) gb[j] += av * g[j];
        }
    });
  }, "matmul");
}

// a[n x k] * b[m x k]^T
inline Var matmul_bt(Var a, Var b) {
  detail::check_same_tape(a, b);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  const std::size_t n = A.rows(), k = A.cols(), m = B.rows();
  if (B.cols() != k)
    throw InvariantError("matmul_bt shape mismatch " + shape_string(A.shape()) + " * " +
                         shape_string(B.shape()) + "^T");
  Tensor C = Tensor::matrix(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    const double* arow = A.data() + i * k;
    for (std::size_t j = 0; j < m; ++j) {
      const double* brow = B.data() + j * k;
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
      C(i, j) = s;
    }
  }
  return a.tape->record(std::move(C), {a, b}, [a, b, n, k, m](Tape& t, std::size_t self) {
    const Tensor& G = t.grad(self);
    const Tensor& A = a.value();
    const Tensor& B = b.value();
    detail::accumulate_if_needed(t, a, [&](Tensor& GA) {
      for (std::size_t i = 0; i < n; ++i) {
        double* ga = GA.data() + i * k;
        for (std::size_t j = 0; j < m; ++j) {
          const double g = G(i, j);
          if (g == 0.0) continue;
          const double* brow = B.data() + j * k;
          for (std::size_t p = 0; p < k; ++p) ga[p] += g * brow[p];
        }
      }
    });
    detail::accumulate_if_needed(t, b, [&](Tensor& GB) {
      for (std::size_t i = 0; i < n; ++i) {
        const double* arow = A.data() + i * k;
        for (std::size_t j = 0; j < m; ++j) {
          const double g = G(i, j);
          if (g == 0.0) continue;
          double* gb = GB.data() + j * k;
          for (std::size_t p = 0; p < k; ++p) gb[p] += g * arow[p];
        }
      }
    });
  }, "matmul_bt");
}

inline Var add(Var a, Var b) {
  detail::check_same_tape(a, b);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (!A.same_shape(B)) throw InvariantError("add shape mismatch");
  Tensor C = A;
  for (std::size_t i = 0; i < C.size(); ++i) C[i] += B[i];
  return a.tape->record(std::move(C), {a, b}, [a, b](Tape& t, std::size_t self) {
    const Tensor& G = t.grad(self);
    for (Var v : {a, b})
      detail::accumulate_if_needed(t, v, [&](Tensor& GV) {
        for (std::size_t i = 0; i < G.size(); ++i) GV[i] += G[i];
      });
  }, "add");
}

// Adds a length-m bias vector to every row of an n x m matrix.
inline Var add_bias(Var a, Var bias) {
  detail::check_same_tape(a, bias);
  const Tensor& A = a.value();
  const Tensor& B = bias.value();
  const std::size_t n = A.rows(), m = A.cols();
  if (B.size() != m) throw InvariantError("add_bias width mismatch");
  Tensor C = A;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) C(i, j) += B[j];
  return a.tape->record(std::move(C), {a, bias}, [a, bias, n, m](Tape& t, std::size_t self) {
    const Tensor& G = t.grad(self);
    detail::accumulate_if_needed(t, a, [&](Tensor& GA) {
      for (std::size_t i = 0; i < G.size(); ++i) GA[i] += G[i];
    });
    detail::accumulate_if_needed(t, bias, [&](Tensor& GB) {
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) GB[j] += G(i, j);
    });
  }, "add_bias");
}

inline Var scale(Var a, double factor) {
  Tensor C = a.value();
  for (double& v : C.values()) v *= factor;
  return a.tape->record(std::move(C), {a}, [a, factor](Tape& t, std::size_t self) {
    const Tensor& G = t.grad(self);
    Tensor& GA = t.grad(a.id);
    for (std::size_t i = 0; i < G.size(); ++i) GA[i] += factor * G[i];
  }, "scale");
}

inline Var gelu(Var a) {
  Tensor C = a.value();
  for (double& v : C.values()) v = num::gelu(v);
  return a.tape->record(std::move(C), {a}, [a](Tape& t, std::size_t self) {
    const Tensor& G = t.grad(self);
    const Tensor& A = a.value();
    Tensor& GA = t.grad(a.id);
    for (std::size_t i = 0; i < G.size(); ++i) GA[i] += G[i] * gelu_derivative(A[i]);
  }, "gelu");
}

// Row-wise layer normalization with learned gain and offset.
inline Var layer_norm(Var x, Var gain, Var offset, double eps = 1e-5) {
  const Tensor& X = x.value();
  const Tensor& Gm = gain.value();
  const Tensor& Bt = offset.value();
  const std::size_t n = X.rows(), m = X.cols();
  if (Gm.size() != m || Bt.size() != m) throw InvariantError("layer_norm width mismatch");
  Tensor normalized = Tensor::matrix(n, m);
  std::vector<double> inv_std(n);
  Tensor Y = Tensor::matrix(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    double mean = 0.0;
    for (std::size_t j = 0; j < m; ++j) mean += X(i, j);
    mean /= static_cast<double>(m);
    double var = 0.0;
    for (std::size_t j = 0; j < m; ++j) var += (X(i, j) - mean) * (X(i, j) - mean);
    var /= static_cast<double>(m);
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < m; ++j) {
      normalized(i, j) = (X(i, j) - mean) * inv_std[i];
      Y(i, j) = normalized(i, j) * Gm[j] + Bt[j];
    }
  }
  return x.tape->record(
      std::move(Y), {x, gain, offset},
      [x, gain, offset, n, m, normalized = std::move(normalized),
       inv_std = std::move(inv_std)](Tape& t, std::size_t self) {
        const Tensor& G = t.grad(self);
        const Tensor& Gm = gain.value();
        detail::accumulate_if_needed(t, gain, [&](Tensor& GG) {
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < m; ++j) GG[j] += G(i, j) * normalized(i, j);
        });
        detail::accumulate_if_needed(t, offset, [&](Tensor& GB) {
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < m; ++j) GB[j] += G(i, j);
        });
        detail::accumulate_if_needed(t, x, [&](Tensor& GX) {
          const double inv_m = 1.0 / static_cast<double>(m);
          for (std::size_t i = 0; i < n; ++i) {
            double sum_g = 0.0, sum_gn = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
              const double gn = G(i, j) * Gm[j];
              sum_g += gn;
              sum_gn += gn * normalized(i, j);
            }
            for (std::size_t j = 0; j < m; ++j) {
              const double gn = G(i, j) * Gm[j];
              GX(i, j) += inv_std[i] * (gn - inv_m * sum_g - normalized(i, j) * inv_m * sum_gn);
            }
          }
        });
      },
      "layer_norm");
}

// Selects rows of `table` by index.
inline Var embedding(Var table, std::vector<int> ids) {
  const Tensor& T = table.value();
  const std::size_t m = T.cols();
  Tensor C = Tensor::matrix(ids.size(), m);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= T.rows())
      throw InvariantError("embedding index " + std::to_string(ids[i]) + " out of range");
    for (std::size_t j = 0; j < m; ++j) C(i, j) = T(ids[i], j);
  }
  return table.tape->record(std::move(C), {table},
                            [table, m, ids = std::move(ids)](Tape& t, std::size_t self) {
                              const Tensor& G = t.grad(self);
                              Tensor& GT = t.grad(table.id);
                              for (std::size_t i = 0; i < ids.size(); ++i)
                                for (std::size_t j = 0; j < m; ++j) GT(ids[i], j) += G(i, j);
                            },
                            "embedding");
}

inline Var gather_rows(Var a, std::vector<int> rows) { return embedding(a, std::move(rows)); }

// Columns [start, start + width) of a matrix.
inline Var slice_cols(Var a, std::size_t start, std::size_t width) {
  const Tensor& A = a.value();
  const std::size_t n = A.rows(), m = A.cols();
  if (start + width > m) throw InvariantError("slice_cols out of range");
  Tensor C = Tensor::matrix(n, width);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < width; ++j) C(i, j) = A(i, start + j);
  return a.tape->record(std::move(C), {a}, [a, n, start, width](Tape& t, std::size_t self) {
    const Tensor& G = t.grad(self);
    Tensor& GA = t.grad(a.id);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < width; ++j) GA(i, start + j) += G(i, j);
  }, "slice_cols");
}

inline Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw InvariantError("concat_cols of nothing");
  Tape* tape = parts.front().tape;
  const std::size_t n = parts.front().value().rows();
  std::size_t total = 0;
  for (const Var& p : parts) {
    if (p.tape != tape || p.value().rows() != n) throw InvariantError("concat_cols mismatch");
    total += p.value().cols();
  }
  Tensor C = Tensor::matrix(n, total);
  std::size_t offset = 0;
  for (const Var& p : parts) {
    const Tensor& P = p.value();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < P.cols(); ++j) C(i, offset + j) = P(i, j);
    offset += P.cols();
  }
  return tape->record(std::move(C), std::span<const Var>(parts),
                      [parts, n](Tape& t, std::size_t self) {
                        const Tensor& G = t.grad(self);
                        std::size_t offset = 0;
                        for (const Var& p : parts) {
                          const std::size_t w = p.value().cols();
                          detail::accumulate_if_needed(t, p, [&](Tensor& GP) {
                            for (std::size_t i = 0; i < n; ++i)
                              for (std::size_t j = 0; j < w; ++j) GP(i, j) += G(i, offset + j);
                          });
                          offset += w;
                        }
                      },
                      "concat_cols");
}

// Row-wise softmax of `scores + mask` for an n x n score matrix and a
// row-major n x n additive mask over {0, -inf}.
inline Var masked_softmax(Var scores, std::span<const double> mask) {
  const Tensor& S = scores.value();
  const std::size_t n = S.rows(), m = S.cols();
  if (mask.size() != n * m) throw InvariantError("masked_softmax mask shape mismatch");
  Tensor P = Tensor::matrix(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    auto row = softmax_masked(S.row(i), mask.subspan(i * m, m));
    std::copy(row.begin(), row.end(), P.row(i).begin());
  }
  return scores.tape->record(std::move(P), {scores}, [scores, n, m](Tape& t, std::size_t self) {
    const Tensor& G = t.grad(self);
    const Tensor& P = t.value(self);
    Tensor& GS = t.grad(scores.id);
    for (std::size_t i = 0; i < n; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < m; ++j) dot += P(i, j) * G(i, j);
      for (std::size_t j = 0; j < m; ++j) GS(i, j) += P(i, j) * (G(i, j) - dot);
    }
  }, "masked_softmax");
}

// Sum over rows of -log softmax(logits[i])[targets[i]].
inline Var cross_entropy_sum(Var logits, std::vector<int> targets) {
  const Tensor& L = logits.value();
  const std::size_t n = L.rows(), v = L.cols();
  if (targets.size() != n) throw InvariantError("cross_entropy target count mismatch");
  Tensor probs = Tensor::matrix(n, v);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (targets[i] < 0 || static_cast<std::size_t>(targets[i]) >= v)
      throw InvariantError("cross_entropy target out of range");
    auto lp = log_softmax(L.row(i));
    total -= lp[targets[i]];
    for (std::size_t j = 0; j < v; ++j) probs(i, j) = std::exp(lp[j]);
  }
  return logits.tape->record(
      Tensor({1}, {total}), {logits},
      [logits, n, v, probs = std::move(probs), targets = std::move(targets)](Tape& t,
                                                                             std::size_t self) {
        const double g = t.grad(self)[0];
        Tensor& GL = t.grad(logits.id);
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < v; ++j)
            GL(i, j) += g * (probs(i, j) - (static_cast<int>(j) == targets[i] ? 1.0 : 0.0));
      },
      "cross_entropy_sum");
}

}  // namespace pocfuse::num
