#include "mcsql/autodiff.hpp"

#include <cmath>
#include <stdexcept>

namespace mcsql::ad {

namespace {

using RowArr = Eigen::Array<double, 1, Eigen::Dynamic>;

void check(bool ok, const char* msg) {
  if (!ok) throw std::logic_error(std::string("autodiff: ") + msg);
}

RowArr sigmoid_arr(const RowArr& x) { return 1.0 / (1.0 + (-x).exp()); }

}  // namespace

void Graph::clear() { nodes_.clear(); }

Var Graph::push(Mat value, std::function<void(Node&)> bw) {
  auto n = std::make_unique<Node>();
  n->value = std::move(value);
  n->backward = std::move(bw);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1, this};
}

Var Graph::push_external(const Mat* value, std::function<void(Node&)> bw) {
  auto n = std::make_unique<Node>();
  n->external = value;
  n->backward = std::move(bw);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1, this};
}

void Graph::ensure_grad(Var v) {
  Node& n = node(v);
  if (n.grad.size() == 0) n.grad = Mat::Zero(value(v).rows(), value(v).cols());
}

Mat& Graph::grad_buf(Var v) {
  ensure_grad(v);
  return node(v).grad;
}

Var Graph::constant(Mat v) { return push(std::move(v), nullptr); }

Var Graph::constant_scalar(double v) {
  Mat m(1, 1);
  m(0, 0) = v;
  return constant(std::move(m));
}

Var Graph::leaf(const Mat* value, Mat* grad_sink) {
  std::function<void(Node&)> bw;
  if (grad_sink) bw = [grad_sink](Node& n) { *grad_sink += n.grad; };
  return push_external(value, std::move(bw));
}

Var Graph::gather_rows(const Mat* table, Mat* grad_sink, std::vector<int> ids) {
  Mat out(static_cast<int>(ids.size()), table->cols());
  for (size_t i = 0; i < ids.size(); ++i) {
    check(ids[i] >= 0 && ids[i] < table->rows(), "gather_rows: id out of range");
    out.row(static_cast<int>(i)) = table->row(ids[i]);
  }
  std::function<void(Node&)> bw;
  if (grad_sink) {
    bw = [grad_sink, ids = std::move(ids)](Node& n) {
      for (size_t i = 0; i < ids.size(); ++i)
        grad_sink->row(ids[i]) += n.grad.row(static_cast<int>(i));
    };
  }
  return push(std::move(out), std::move(bw));
}

Var Graph::add(Var a, Var b) {
  check(value(a).rows() == value(b).rows() && value(a).cols() == value(b).cols(),
        "add: shape mismatch");
  return push(value(a) + value(b), [this, a, b](Node& n) {
    grad_buf(a) += n.grad;
    grad_buf(b) += n.grad;
  });
}

Var Graph::sub(Var a, Var b) {
  check(value(a).rows() == value(b).rows() && value(a).cols() == value(b).cols(),
        "sub: shape mismatch");
  return push(value(a) - value(b), [this, a, b](Node& n) {
    grad_buf(a) += n.grad;
    grad_buf(b) -= n.grad;
  });
}

Var Graph::hadamard(Var a, Var b) {
  check(value(a).rows() == value(b).rows() && value(a).cols() == value(b).cols(),
        "hadamard: shape mismatch");
  return push(value(a).cwiseProduct(value(b)), [this, a, b](Node& n) {
    grad_buf(a) += n.grad.cwiseProduct(value(b));
    grad_buf(b) += n.grad.cwiseProduct(value(a));
  });
}

Var Graph::scale(Var a, double s) {
  return push(value(a) * s, [this, a, s](Node& n) { grad_buf(a) += n.grad * s; });
}

Var Graph::add_rowvec(Var a, Var row) {
  check(value(row).rows() == 1 && value(row).cols() == value(a).cols(),
        "add_rowvec: bad row shape");
  Mat out = value(a);
  out.rowwise() += value(row).row(0);
  return push(std::move(out), [this, a, row](Node& n) {
    grad_buf(a) += n.grad;
    grad_buf(row).row(0) += n.grad.colwise().sum();
  });
}

Var Graph::matmul(Var a, Var b) {
  check(value(a).cols() == value(b).rows(), "matmul: inner dim mismatch");
  return push(value(a) * value(b), [this, a, b](Node& n) {
    grad_buf(a).noalias() += n.grad * value(b).transpose();
    grad_buf(b).noalias() += value(a).transpose() * n.grad;
  });
}

Var Graph::matmul_nt(Var a, Var b) {
  check(value(a).cols() == value(b).cols(), "matmul_nt: inner dim mismatch");
  return push(value(a) * value(b).transpose(), [this, a, b](Node& n) {
    grad_buf(a).noalias() += n.grad * value(b);
    grad_buf(b).noalias() += n.grad.transpose() * value(a);
  });
}

Var Graph::matmul_tn(Var a, Var b) {
  check(value(a).rows() == value(b).rows(), "matmul_tn: inner dim mismatch");
  return push(value(a).transpose() * value(b), [this, a, b](Node& n) {
    grad_buf(a).noalias() += value(b) * n.grad.transpose();
    grad_buf(b).noalias() += value(a) * n.grad;
  });
}

Var Graph::concat_cols(std::span<const Var> parts) {
  check(!parts.empty(), "concat_cols: empty");
  const int rows = static_cast<int>(value(parts[0]).rows());
  int cols = 0;
  for (Var p : parts) {
    check(value(p).rows() == rows, "concat_cols: row mismatch");
    cols += static_cast<int>(value(p).cols());
  }
  Mat out(rows, cols);
  int off = 0;
  for (Var p : parts) {
    const int w = static_cast<int>(value(p).cols());
    out.middleCols(off, w) = value(p);
    off += w;
  }
  std::vector<Var> ps(parts.begin(), parts.end());
  return push(std::move(out), [this, ps = std::move(ps)](Node& n) {
    int off2 = 0;
    for (Var p : ps) {
      const int w = static_cast<int>(value(p).cols());
      grad_buf(p) += n.grad.middleCols(off2, w);
      off2 += w;
    }
  });
}

Var Graph::concat_rows(std::span<const Var> parts) {
  check(!parts.empty(), "concat_rows: empty");
  const int cols = static_cast<int>(value(parts[0]).cols());
  int rows = 0;
  for (Var p : parts) {
    check(value(p).cols() == cols, "concat_rows: col mismatch");
    rows += static_cast<int>(value(p).rows());
  }
  Mat out(rows, cols);
  int off = 0;
  for (Var p : parts) {
    const int h = static_cast<int>(value(p).rows());
    out.middleRows(off, h) = value(p);
    off += h;
  }
  std::vector<Var> ps(parts.begin(), parts.end());
  return push(std::move(out), [this, ps = std::move(ps)](Node& n) {
    int off2 = 0;
    for (Var p : ps) {
      const int h = static_cast<int>(value(p).rows());
      grad_buf(p) += n.grad.middleRows(off2, h);
      off2 += h;
    }
  });
}

Var Graph::slice_rows(Var a, int start, int count) {
  check(start >= 0 && count >= 0 && start + count <= value(a).rows(),
        "slice_rows: out of range");
  return push(value(a).middleRows(start, count), [this, a, start, count](Node& n) {
    grad_buf(a).middleRows(start, count) += n.grad;
  });
}

Var Graph::slice_cols(Var a, int start, int count) {
  check(start >= 0 && count >= 0 && start + count <= value(a).cols(),
        "slice_cols: out of range");
  return push(value(a).middleCols(start, count), [this, a, start, count](Node& n) {
    grad_buf(a).middleCols(start, count) += n.grad;
  });
}

Var Graph::reverse_rows(Var a) {
  return push(value(a).colwise().reverse(), [this, a](Node& n) {
    grad_buf(a) += n.grad.colwise().reverse();
  });
}

Var Graph::repeat_rows(Var row, int n) {
  check(value(row).rows() == 1, "repeat_rows: expects 1 x d");
  check(n >= 1, "repeat_rows: n must be >= 1");
  Mat out(n, value(row).cols());
  out.rowwise() = value(row).row(0);
  return push(std::move(out), [this, row](Node& n2) {
    grad_buf(row).row(0) += n2.grad.colwise().sum();
  });
}

Var Graph::transpose(Var a) {
  return push(value(a).transpose(), [this, a](Node& n) {
    grad_buf(a) += n.grad.transpose();
  });
}

Var Graph::tanh(Var a) {
  return push(value(a).array().tanh().matrix(), [this, a](Node& n) {
    grad_buf(a).array() += n.grad.array() * (1.0 - n.value.array().square());
  });
}

Var Graph::sigmoid(Var a) {
  return push((1.0 / (1.0 + (-value(a).array()).exp())).matrix(), [this, a](Node& n) {
    grad_buf(a).array() += n.grad.array() * n.value.array() * (1.0 - n.value.array());
  });
}

Var Graph::relu(Var a) {
  return push(value(a).cwiseMax(0.0), [this, a](Node& n) {
    grad_buf(a).array() += n.grad.array() * (value(a).array() > 0.0).cast<double>();
  });
}

Var Graph::softmax_vec(Var a) {
  check(value(a).cols() == 1, "softmax_vec: expects n x 1");
  Eigen::ArrayXd x = value(a).col(0).array();
  Eigen::ArrayXd e = (x - x.maxCoeff()).exp();
  return push((e / e.sum()).matrix(), [this, a](Node& n) {
    const Eigen::ArrayXd y = n.value.col(0).array();
    const Eigen::ArrayXd dy = n.grad.col(0).array();
    const double dot = (y * dy).sum();
    grad_buf(a).col(0).array() += y * (dy - dot);
  });
}

Var Graph::softmax_rows(Var a) {
  Mat out = value(a);
  for (int r = 0; r < out.rows(); ++r) {
    RowArr x = out.row(r).array();
    RowArr e = (x - x.maxCoeff()).exp();
    out.row(r) = (e / e.sum()).matrix();
  }
  return push(std::move(out), [this, a](Node& n) {
    Mat& da = grad_buf(a);
    for (int r = 0; r < n.value.rows(); ++r) {
      const RowArr y = n.value.row(r).array();
      const RowArr dy = n.grad.row(r).array();
      const double dot = (y * dy).sum();
      da.row(r).array() += y * (dy - dot);
    }
  });
}

Var Graph::sum_cols(Var a) {
  return push(value(a).rowwise().sum(), [this, a](Node& n) {
    grad_buf(a).colwise() += n.grad.col(0);
  });
}

Var Graph::max_over_rows(Var a) {
  const Mat& x = value(a);
  check(x.rows() >= 1, "max_over_rows: empty input");
  Mat out(1, x.cols());
  std::vector<int> arg(static_cast<size_t>(x.cols()));
  for (int c = 0; c < x.cols(); ++c) {
    int best = 0;
    for (int r = 1; r < x.rows(); ++r)
      if (x(r, c) > x(best, c)) best = r;
    arg[static_cast<size_t>(c)] = best;
    out(0, c) = x(best, c);
  }
  return push(std::move(out), [this, a, arg = std::move(arg)](Node& n) {
    Mat& da = grad_buf(a);
    for (int c = 0; c < static_cast<int>(arg.size()); ++c)
      da(arg[static_cast<size_t>(c)], c) += n.grad(0, c);
  });
}

Var Graph::layer_norm(Var a, Var gain, Var bias, double eps) {
  const Mat& x = value(a);
  const int d = static_cast<int>(x.cols());
  check(value(gain).rows() == 1 && value(gain).cols() == d, "layer_norm: gain shape");
  check(value(bias).rows() == 1 && value(bias).cols() == d, "layer_norm: bias shape");
  Mat xhat(x.rows(), d);
  Eigen::ArrayXd inv_sigma(x.rows());
  for (int r = 0; r < x.rows(); ++r) {
    const double mu = x.row(r).mean();
    const double var = (x.row(r).array() - mu).square().mean();
    const double is = 1.0 / std::sqrt(var + eps);
    inv_sigma(r) = is;
    xhat.row(r) = ((x.row(r).array() - mu) * is).matrix();
  }
  Mat out = (xhat.array().rowwise() * value(gain).row(0).array()).matrix();
  out.rowwise() += value(bias).row(0);
  return push(std::move(out), [this, a, gain, bias, xhat = std::move(xhat),
                               inv_sigma = std::move(inv_sigma)](Node& n) {
    Mat& da = grad_buf(a);
    Mat& dgain = grad_buf(gain);
    Mat& dbias = grad_buf(bias);
    const RowArr gain_arr = value(gain).row(0).array();
    for (int r = 0; r < xhat.rows(); ++r) {
      const RowArr dy = n.grad.row(r).array();
      const RowArr xh = xhat.row(r).array();
      const RowArr dxhat = dy * gain_arr;
      const double m1 = dxhat.mean();
      const double m2 = (dxhat * xh).mean();
      da.row(r).array() += inv_sigma(r) * (dxhat - m1 - xh * m2);
      dgain.row(0).array() += dy * xh;
      dbias.row(0).array() += dy;
    }
  });
}

Var Graph::sum_scalars(std::span<const Var> parts) {
  check(!parts.empty(), "sum_scalars: empty");
  double total = 0.0;
  for (Var p : parts) {
    check(value(p).size() == 1, "sum_scalars: non-scalar part");
    total += value(p)(0, 0);
  }
  Mat out(1, 1);
  out(0, 0) = total;
  std::vector<Var> ps(parts.begin(), parts.end());
  return push(std::move(out), [this, ps = std::move(ps)](Node& n) {
    for (Var p : ps) grad_buf(p)(0, 0) += n.grad(0, 0);
  });
}

Var Graph::ce_loss(Var logits, int gold) {
  const Mat& l = value(logits);
  check(l.rows() == 1, "ce_loss: logits must be 1 x k");
  check(gold >= 0 && gold < l.cols(), "ce_loss: gold out of range");
  const double mx = l.row(0).maxCoeff();
  const RowArr e = (l.row(0).array() - mx).exp();
  const double z = e.sum();
  Mat probs = (e / z).matrix();  // 1 x k
  Mat out(1, 1);
  out(0, 0) = std::log(z) + mx - l(0, gold);
  return push(std::move(out), [this, logits, gold, probs = std::move(probs)](Node& n) {
    Mat& dl = grad_buf(logits);
    dl += n.grad(0, 0) * probs;
    dl(0, gold) -= n.grad(0, 0);
  });
}

Var Graph::bce_loss(Var logit, double target) {
  check(value(logit).size() == 1, "bce_loss: logit must be scalar");
  const double z = value(logit)(0, 0);
  const double loss = std::max(z, 0.0) - target * z + std::log1p(std::exp(-std::abs(z)));
  Mat out(1, 1);
  out(0, 0) = loss;
  return push(std::move(out), [this, logit, target, z](Node& n) {
    const double s = 1.0 / (1.0 + std::exp(-z));
    grad_buf(logit)(0, 0) += n.grad(0, 0) * (s - target);
  });
}

Var Graph::lstm_seq(Var x, Var w_ih, Var w_hh, Var b, Var h0, Var c0) {
  const Mat& X = value(x);
  const int T = static_cast<int>(X.rows());
  const int in = static_cast<int>(X.cols());
  const int h4 = static_cast<int>(value(w_ih).cols());
  const int h = h4 / 4;
  check(h > 0 && h4 == 4 * h, "lstm_seq: gate width not divisible by 4");
  check(value(w_ih).rows() == in, "lstm_seq: w_ih rows != input dim");
  check(value(w_hh).rows() == h && value(w_hh).cols() == h4, "lstm_seq: w_hh shape");
  check(value(b).rows() == 1 && value(b).cols() == h4, "lstm_seq: bias shape");
  check(value(h0).rows() == 1 && value(h0).cols() == h, "lstm_seq: h0 shape");
  check(value(c0).rows() == 1 && value(c0).cols() == h, "lstm_seq: c0 shape");
  check(T >= 1, "lstm_seq: empty sequence");

  struct Cache {
    Mat I, F, G, O, C, TC;  // T x h each
  };
  auto cache = std::make_shared<Cache>();
  cache->I.resize(T, h);
  cache->F.resize(T, h);
  cache->G.resize(T, h);
  cache->O.resize(T, h);
  cache->C.resize(T, h);
  cache->TC.resize(T, h);

  Mat H(T, h);
  RowArr hprev = value(h0).row(0).array();
  RowArr cprev = value(c0).row(0).array();
  for (int t = 0; t < T; ++t) {
    Eigen::RowVectorXd act =
        X.row(t) * value(w_ih) + hprev.matrix() * value(w_hh) + value(b).row(0);
    const RowArr i = sigmoid_arr(act.segment(0, h).array());
    const RowArr f = sigmoid_arr(act.segment(h, h).array());
    const RowArr g = act.segment(2 * h, h).array().tanh();
    const RowArr o = sigmoid_arr(act.segment(3 * h, h).array());
    const RowArr c = f * cprev + i * g;
    const RowArr tc = c.tanh();
    cache->I.row(t) = i.matrix();
    cache->F.row(t) = f.matrix();
    cache->G.row(t) = g.matrix();
    cache->O.row(t) = o.matrix();
    cache->C.row(t) = c.matrix();
    cache->TC.row(t) = tc.matrix();
    hprev = o * tc;
    cprev = c;
    H.row(t) = hprev.matrix();
  }

  return push(std::move(H), [this, x, w_ih, w_hh, b, h0, c0, cache, T, h](Node& n) {
    const Mat& X2 = value(x);
    const Mat& Wih = value(w_ih);
    const Mat& Whh = value(w_hh);
    Mat& dX = grad_buf(x);
    Mat& dWih = grad_buf(w_ih);
    Mat& dWhh = grad_buf(w_hh);
    Mat& dB = grad_buf(b);
    RowArr carry_dh = RowArr::Zero(h);
    RowArr carry_dc = RowArr::Zero(h);
    Eigen::RowVectorXd da(4 * h);
    for (int t = T - 1; t >= 0; --t) {
      const RowArr i = cache->I.row(t).array();
      const RowArr f = cache->F.row(t).array();
      const RowArr g = cache->G.row(t).array();
      const RowArr o = cache->O.row(t).array();
      const RowArr tc = cache->TC.row(t).array();
      const RowArr cm1 =
          t > 0 ? RowArr(cache->C.row(t - 1).array()) : RowArr(value(c0).row(0).array());
      const Eigen::RowVectorXd hm1 =
          t > 0 ? Eigen::RowVectorXd(
                      (cache->O.row(t - 1).array() * cache->TC.row(t - 1).array()).matrix())
                : Eigen::RowVectorXd(value(h0).row(0));

      const RowArr dh = n.grad.row(t).array() + carry_dh;
      const RowArr dO = dh * tc;
      const RowArr dc = carry_dc + dh * o * (1.0 - tc.square());
      const RowArr dI = dc * g;
      const RowArr dG = dc * i;
      const RowArr dF = dc * cm1;
      carry_dc = dc * f;

      da.segment(0, h) = (dI * i * (1.0 - i)).matrix();
      da.segment(h, h) = (dF * f * (1.0 - f)).matrix();
      da.segment(2 * h, h) = (dG * (1.0 - g.square())).matrix();
      da.segment(3 * h, h) = (dO * o * (1.0 - o)).matrix();

      dWih.noalias() += X2.row(t).transpose() * da;
      dWhh.noalias() += hm1.transpose() * da;
      dB.row(0) += da;
      dX.row(t).noalias() += da * Wih.transpose();
      carry_dh = (da * Whh.transpose()).array();
    }
    grad_buf(h0).row(0) += carry_dh.matrix();
    grad_buf(c0).row(0) += carry_dc.matrix();
  });
}

void Graph::backward(Var root) {
  check(root.g == this, "backward: foreign var");
  check(value(root).size() == 1, "backward: root must be scalar");
  grad_buf(root)(0, 0) = 1.0;
  for (int i = root.idx; i >= 0; --i) {
    Node& n = *nodes_[static_cast<size_t>(i)];
    if (n.backward && n.grad.size() != 0) n.backward(n);
  }
}

}  // namespace mcsql::ad
