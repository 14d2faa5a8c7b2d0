#pragma once

#include <string>
#include <vector>

#include "mcsql/autodiff.hpp"
#include "mcsql/params.hpp"

namespace mcsql {

/// Stacked bidirectional LSTM with output width `out_dim` (out_dim/2 per
/// direction). Initial states are either learned parameters or, for the
/// first layer, an externally supplied packed state (h0_f, c0_f, h0_b,
/// c0_b) of width 2*out_dim.
class BiLstm {
 public:
  BiLstm(ParamStore& store, const std::string& prefix, int input_dim, int out_dim,
         int layers, ParamGroup group, uint64_t seed, bool external_init = false);

  /// x: T x input_dim -> T x out_dim, learned initial states.
  ad::Var apply(ad::Graph& g, ad::Var x) const;
  /// Same, but layer 0 initial states come from `s` (1 x 2*out_dim).
  ad::Var apply_with_init(ad::Graph& g, ad::Var x, ad::Var s) const;

  int out_dim() const { return out_dim_; }

 private:
  struct DirParams {
    ParamStore::Tensor* w_ih;
    ParamStore::Tensor* w_hh;
    ParamStore::Tensor* b;
    ParamStore::Tensor* h0;  // null when external init
    ParamStore::Tensor* c0;
  };
  struct Layer {
    DirParams fw, bw;
  };

  ad::Var run(ad::Graph& g, ad::Var x, const ad::Var* s) const;

  std::vector<Layer> layers_;
  int out_dim_;
  bool external_init_;
};

/// score_i = softmax over rows of (M W) . M row-wise; returns the weights
/// (n x 1) and the pooled vector (1 x d).
std::pair<ad::Var, ad::Var> self_attention_pool(ad::Graph& g, ad::Var m, ad::Var w);

/// Attention of sequence rows against a single vector: weights softmax over
/// (M W) key^T; returns (weights n x 1, pooled 1 x d).
std::pair<ad::Var, ad::Var> attention_pool(ad::Graph& g, ad::Var m, ad::Var w,
                                           ad::Var key);

}  // namespace mcsql
