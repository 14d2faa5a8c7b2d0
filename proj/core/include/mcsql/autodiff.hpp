#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace mcsql::ad {

using Mat = Eigen::MatrixXd;

class Graph;

/// Handle to a node on the tape. Cheap to copy; valid until Graph::clear().
struct Var {
  int idx = -1;
  Graph* g = nullptr;

  bool valid() const { return idx >= 0; }
  const Mat& value() const;
  int rows() const { return static_cast<int>(value().rows()); }
  int cols() const { return static_cast<int>(value().cols()); }
  double scalar() const { return value()(0, 0); }
};

/// Dynamic reverse-mode tape. Nodes are appended in topological order;
/// backward() walks the tape in reverse. Row-vector convention throughout:
/// sequences are T x dim, single vectors are 1 x dim.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  void clear();
  int size() const { return static_cast<int>(nodes_.size()); }

  // ----- leaves -----
  Var constant(Mat v);
  Var constant_scalar(double v);
  /// Leaf whose value aliases `*value`; after backward() the node gradient
  /// is accumulated into `*grad_sink` (pass nullptr to discard).
  Var leaf(const Mat* value, Mat* grad_sink);
  /// Row-gather from an external table with sparse backward directly into
  /// `*grad_sink` (rows scatter-added).
  Var gather_rows(const Mat* table, Mat* grad_sink, std::vector<int> ids);

  // ----- arithmetic -----
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var hadamard(Var a, Var b);
  Var scale(Var a, double s);
  Var add_rowvec(Var a, Var row);   // broadcast row over all rows of a
  Var matmul(Var a, Var b);         // a * b
  Var matmul_nt(Var a, Var b);      // a * b^T
  Var matmul_tn(Var a, Var b);      // a^T * b

  // ----- shape -----
  Var concat_cols(std::span<const Var> parts);
  Var concat_rows(std::span<const Var> parts);
  Var slice_rows(Var a, int start, int count);
  Var slice_cols(Var a, int start, int count);
  Var reverse_rows(Var a);
  Var repeat_rows(Var row, int n);  // 1 x d -> n x d
  Var transpose(Var a);

  // ----- nonlinearities / reductions -----
  Var tanh(Var a);
  Var sigmoid(Var a);
  Var relu(Var a);
  Var softmax_vec(Var a);           // a is n x 1
  Var softmax_rows(Var a);          // softmax over each row
  Var sum_cols(Var a);              // n x m -> n x 1
  Var max_over_rows(Var a);         // T x d -> 1 x d (ties: first row)
  Var layer_norm(Var a, Var gain, Var bias, double eps = 1e-6);  // per row
  Var sum_scalars(std::span<const Var> parts);

  // ----- losses -----
  /// Cross-entropy of a 1 x k logits row against class `gold`.
  Var ce_loss(Var logits, int gold);
  /// Binary cross-entropy of a 1 x 1 logit against target in {0,1}.
  Var bce_loss(Var logit, double target);

  // ----- recurrent -----
  /// Single-direction LSTM over X (T x in). Wih: in x 4h, Whh: h x 4h,
  /// b: 1 x 4h, h0/c0: 1 x h. Gate layout [i f g o]. Returns H (T x h).
  Var lstm_seq(Var x, Var w_ih, Var w_hh, Var b, Var h0, Var c0);

  void backward(Var root);  // root must be 1 x 1

  const Mat& value(Var v) const {
    const Node& n = *nodes_[v.idx];
    return n.external ? *n.external : n.value;
  }
  const Mat& grad(Var v) const { return nodes_[v.idx]->grad; }

 private:
  struct Node {
    Mat value;
    Mat grad;
    const Mat* external = nullptr;  // when set, `value` is unused
    std::function<void(Node&)> backward;
  };

  Node& node(Var v) { return *nodes_[v.idx]; }
  Var push(Mat value, std::function<void(Node&)> bw);
  Var push_external(const Mat* value, std::function<void(Node&)> bw);
  void ensure_grad(Var v);
  Mat& grad_buf(Var v);

  std::vector<std::unique_ptr<Node>> nodes_;

  friend struct Var;
};

inline const Mat& Var::value() const { return g->value(*this); }

}  // namespace mcsql::ad
