#include "mcsql/nn.hpp"

#include <array>
#include <stdexcept>

namespace mcsql {

BiLstm::BiLstm(ParamStore& store, const std::string& prefix, int input_dim,
               int out_dim, int layers, ParamGroup group, uint64_t seed,
               bool external_init)
    : out_dim_(out_dim), external_init_(external_init) {
  if (out_dim % 2 != 0) throw std::invalid_argument("BiLstm: out_dim must be even");
  if (layers < 1) throw std::invalid_argument("BiLstm: layers must be >= 1");
  const int h = out_dim / 2;
  for (int l = 0; l < layers; ++l) {
    const int in = l == 0 ? input_dim : out_dim;
    Layer layer;
    for (int dir = 0; dir < 2; ++dir) {
      const std::string base =
          prefix + "/l" + std::to_string(l) + (dir == 0 ? "/fw" : "/bw");
      DirParams& p = dir == 0 ? layer.fw : layer.bw;
      p.w_ih = &store.create(base + "/w_ih", in, 4 * h, group,
                             InitKind::UniformRecurrent, seed);
      p.w_hh = &store.create(base + "/w_hh", h, 4 * h, group,
                             InitKind::UniformRecurrent, seed);
      p.b = &store.create(base + "/b", 1, 4 * h, group, InitKind::Zeros, seed);
      if (l == 0 && external_init) {
        p.h0 = nullptr;
        p.c0 = nullptr;
      } else {
        p.h0 = &store.create(base + "/h0", 1, h, group, InitKind::UniformRecurrent, seed);
        p.c0 = &store.create(base + "/c0", 1, h, group, InitKind::UniformRecurrent, seed);
      }
    }
    layers_.push_back(layer);
  }
}

ad::Var BiLstm::run(ad::Graph& g, ad::Var x, const ad::Var* s) const {
  const int h = out_dim_ / 2;
  ad::Var cur = x;
  for (size_t l = 0; l < layers_.size(); ++l) {
    const Layer& layer = layers_[l];
    ad::Var h0f, c0f, h0b, c0b;
    if (l == 0 && s != nullptr) {
      h0f = g.slice_cols(*s, 0, h);
      c0f = g.slice_cols(*s, h, h);
      h0b = g.slice_cols(*s, 2 * h, h);
      c0b = g.slice_cols(*s, 3 * h, h);
    } else {
      h0f = g.leaf(&layer.fw.h0->value, &layer.fw.h0->grad);
      c0f = g.leaf(&layer.fw.c0->value, &layer.fw.c0->grad);
      h0b = g.leaf(&layer.bw.h0->value, &layer.bw.h0->grad);
      c0b = g.leaf(&layer.bw.c0->value, &layer.bw.c0->grad);
    }
    auto param = [&](ParamStore::Tensor* t) { return g.leaf(&t->value, &t->grad); };
    ad::Var fwd = g.lstm_seq(cur, param(layer.fw.w_ih), param(layer.fw.w_hh),
                             param(layer.fw.b), h0f, c0f);
    ad::Var rev_in = g.reverse_rows(cur);
    ad::Var bwd_rev = g.lstm_seq(rev_in, param(layer.bw.w_ih), param(layer.bw.w_hh),
                                 param(layer.bw.b), h0b, c0b);
    ad::Var bwd = g.reverse_rows(bwd_rev);
    std::array<ad::Var, 2> parts{fwd, bwd};
    cur = g.concat_cols(parts);
  }
  return cur;
}

ad::Var BiLstm::apply(ad::Graph& g, ad::Var x) const {
  if (external_init_)
    throw std::logic_error("BiLstm: constructed for external init, state required");
  return run(g, x, nullptr);
}

ad::Var BiLstm::apply_with_init(ad::Graph& g, ad::Var x, ad::Var s) const {
  if (!external_init_)
    throw std::logic_error("BiLstm: not constructed for external init");
  return run(g, x, &s);
}

std::pair<ad::Var, ad::Var> self_attention_pool(ad::Graph& g, ad::Var m, ad::Var w) {
  ad::Var proj = g.matmul(m, w);                       // n x d
  ad::Var scores = g.sum_cols(g.hadamard(proj, m));    // n x 1
  ad::Var weights = g.softmax_vec(scores);
  ad::Var pooled = g.matmul_tn(weights, m);            // 1 x d
  return {weights, pooled};
}

std::pair<ad::Var, ad::Var> attention_pool(ad::Graph& g, ad::Var m, ad::Var w,
                                           ad::Var key) {
  ad::Var proj = g.matmul(m, w);                       // n x d
  ad::Var scores = g.matmul_nt(proj, key);             // n x 1
  ad::Var weights = g.softmax_vec(scores);
  ad::Var pooled = g.matmul_tn(weights, m);            // 1 x d
  return {weights, pooled};
}

}  // namespace mcsql
