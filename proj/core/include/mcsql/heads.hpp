#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mcsql/autodiff.hpp"
#include "mcsql/content_match.hpp"
#include "mcsql/encoder.hpp"
#include "mcsql/nn.hpp"
#include "mcsql/params.hpp"
#include "mcsql/types.hpp"

namespace mcsql {

struct AblationFlags {
  bool use_tc = true;  // table-content streams in WN/WC/WV
  bool use_vl = true;  // Match/NotMatch type embedding in WV
};

struct ModelConfig {
  EncoderConfig encoder;
  int max_conds = kDefaultMaxConds;
  double sigma = kDefaultSigma;
  int n_max = kDefaultNgramMax;
  AblationFlags ablation;
  uint64_t init_seed = 1;

  bool content_enabled() const { return ablation.use_tc; }
  bool value_linking_enabled() const { return ablation.use_tc && ablation.use_vl; }
};

/// Example precompiled against a table and vocabulary: encoder input,
/// content link, char id sequences and gold supervision spans.
struct CompiledExample {
  Example example;
  const TableData* table = nullptr;
  EncoderInput enc_input;
  ContentLink link;
  std::vector<int> question_char_ids;
  std::vector<std::vector<int>> cell_char_ids;  // per header, linked cell or sentinel
  std::vector<int> type_ids;                    // per question token, Match=1
  std::vector<std::pair<int, int>> gold_spans;  // (st, ed) per gold condition
  bool gold_spans_ok = true;

  int num_tokens() const { return static_cast<int>(example.question_tokens.size()); }
  int num_headers() const { return table->schema.num_cols(); }
};

/// Intermediate values recorded during a forward pass, keyed by name.
/// Used by tests (softmax sums, ablation trace diffs) and the CLI.
struct ForwardTrace {
  std::vector<std::pair<std::string, Mat>> entries;
  void add(std::string name, const Mat& m) { entries.emplace_back(std::move(name), m); }
  const Mat* find(const std::string& name) const;
};

/// Graph-level views of one encoded example shared by all heads.
struct Encoded {
  ad::Var q_ctx;                     // n_tok x d contextual question vectors
  std::vector<ad::Var> header_ctx;   // per header, len x d
  ad::Var e_q;                       // question char embeddings, n_char x d_e
  std::vector<ad::Var> e_cells;      // per header cell char embeddings, m x d_e
  const CompiledExample* ex = nullptr;
};

/// Shared machinery of WC/WV/SC/SA/WO: per-header header-aware context
/// (tau_hat, mu_hat) and, when enabled, content-aware context (tau, mu).
class TwoStreamContext {
 public:
  TwoStreamContext(ParamStore& store, const std::string& prefix,
                   const ModelConfig& cfg, bool with_content);

  struct Out {
    std::vector<ad::Var> tau_hat, mu_hat;  // per header, 1 x d
    std::vector<ad::Var> tau, mu;          // per header, 1 x d; empty w/o content
  };
  Out forward(ad::Graph& g, const Encoded& enc, ForwardTrace* trace,
              const std::string& trace_prefix) const;

  bool with_content() const { return with_content_; }

 private:
  bool with_content_;
  std::optional<BiLstm> hat_header_lstm_, hat_q_lstm_;
  std::optional<BiLstm> cell_lstm_, q_char_lstm_;
  ParamStore::Tensor* w_alpha_hat_ = nullptr;
  ParamStore::Tensor* w_alpha_ = nullptr;
};

class WnHead {
 public:
  WnHead(ParamStore& store, const ModelConfig& cfg);
  /// Score vector over {0..max_conds}, shape 1 x (max_conds+1).
  ad::Var forward(ad::Graph& g, const Encoded& enc, ForwardTrace* trace) const;

 private:
  ad::Var stream(ad::Graph& g, const std::vector<ad::Var>& per_header_seqs,
                 ad::Var q_seq, const BiLstm& pool_lstm, const BiLstm& q_lstm,
                 ParamStore::Tensor* w_alpha_hdr, ParamStore::Tensor* w_s,
                 ParamStore::Tensor* w_alpha_q, ForwardTrace* trace,
                 const std::string& trace_prefix) const;

  bool with_content_;
  int num_classes_;
  std::optional<BiLstm> hat_header_lstm_, hat_q_lstm_;
  std::optional<BiLstm> cell_lstm_, q_char_lstm_;
  ParamStore::Tensor* hat_w_alpha_hdr_ = nullptr;
  ParamStore::Tensor* hat_w_s_ = nullptr;
  ParamStore::Tensor* hat_w_alpha_q_ = nullptr;
  ParamStore::Tensor* w_alpha_hdr_ = nullptr;
  ParamStore::Tensor* w_s_ = nullptr;
  ParamStore::Tensor* w_alpha_q_ = nullptr;
  ParamStore::Tensor* w_mu_ = nullptr;
  ParamStore::Tensor* w_o_ = nullptr;
};

class WcHead {
 public:
  WcHead(ParamStore& store, const ModelConfig& cfg);
  /// One logit per header, 1 x l.
  ad::Var forward(ad::Graph& g, const Encoded& enc, ForwardTrace* trace) const;

 private:
  TwoStreamContext ctx_;
  ParamStore::Tensor* w_o_ = nullptr;
};

class WvHead {
 public:
  WvHead(ParamStore& store, const ModelConfig& cfg);

  /// Per-example work shared by every condition of the example.
  struct Computed {
    TwoStreamContext::Out ctx;
    ad::Var tau_hat_q;             // n_tok x d
    ad::Var type_rows;             // n_tok x d_t, only when VL is on
    bool has_types = false;
  };
  Computed compute(ad::Graph& g, const Encoded& enc, ForwardTrace* trace) const;

  /// Start/end score rows over question tokens, each 1 x n_tok.
  std::pair<ad::Var, ad::Var> score(ad::Graph& g, const Encoded& enc,
                                    const Computed& c, int col, CondOp op,
                                    ForwardTrace* trace) const;

 private:
  TwoStreamContext ctx_;
  std::optional<BiLstm> q_token_lstm_;  // tau_hat_q over encoder outputs
  ParamStore::Tensor* type_emb_ = nullptr;
  ParamStore::Tensor* w_st_ = nullptr;
  ParamStore::Tensor* w_ed_ = nullptr;
  bool use_vl_;
};

/// SC / SA / WO: header-aware context only, scored from [tau_hat; mu_hat].
class HeaderClassifierHead {
 public:
  HeaderClassifierHead(ParamStore& store, const std::string& prefix,
                       const ModelConfig& cfg, int num_classes);

  TwoStreamContext::Out compute(ad::Graph& g, const Encoded& enc,
                                ForwardTrace* trace) const;
  /// Per-header logits 1 x l (num_classes must be 1).
  ad::Var score_per_header(ad::Graph& g, const Encoded& enc,
                           const TwoStreamContext::Out& ctx, ForwardTrace* trace) const;
  /// Class logits 1 x num_classes for one header.
  ad::Var score_for_header(ad::Graph& g, const Encoded& enc,
                           const TwoStreamContext::Out& ctx, int col) const;

 private:
  std::string prefix_;
  TwoStreamContext ctx_;
  ParamStore::Tensor* w_o_ = nullptr;
  int num_classes_;
};

int argmax_lowest(const Mat& row);

}  // namespace mcsql
