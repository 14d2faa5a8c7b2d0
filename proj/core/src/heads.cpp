#include "mcsql/heads.hpp"

#include <array>
#include <stdexcept>

#include "mcsql/tokenize.hpp"

namespace mcsql {

const Mat* ForwardTrace::find(const std::string& name) const {
  for (const auto& [n, m] : entries)
    if (n == name) return &m;
  return nullptr;
}

int argmax_lowest(const Mat& row) {
  int best = 0;
  for (int i = 1; i < row.size(); ++i)
    if (row(i) > row(best)) best = i;
  return best;
}

namespace {

ad::Var param(ad::Graph& g, ParamStore::Tensor* t) {
  return g.leaf(&t->value, &t->grad);
}

}  // namespace

// ---------------------------------------------------------------------------
// TwoStreamContext

TwoStreamContext::TwoStreamContext(ParamStore& store, const std::string& prefix,
                                   const ModelConfig& cfg, bool with_content)
    : with_content_(with_content) {
  const int d = cfg.encoder.d;
  const int layers = cfg.encoder.bilstm_layers;
  const uint64_t seed = cfg.init_seed;
  hat_header_lstm_.emplace(store, prefix + "/hat_header_lstm", d, d, layers,
                           ParamGroup::Sub, seed);
  hat_q_lstm_.emplace(store, prefix + "/hat_q_lstm", d, d, layers, ParamGroup::Sub, seed);
  w_alpha_hat_ = &store.create(prefix + "/w_alpha_hat", d, d, ParamGroup::Sub,
                               InitKind::ScaledNormal, seed);
  if (with_content_) {
    cell_lstm_.emplace(store, prefix + "/cell_lstm", cfg.encoder.d_e, d, layers,
                       ParamGroup::Sub, seed);
    q_char_lstm_.emplace(store, prefix + "/q_char_lstm", cfg.encoder.d_e, d, layers,
                         ParamGroup::Sub, seed);
    w_alpha_ = &store.create(prefix + "/w_alpha", d, d, ParamGroup::Sub,
                             InitKind::ScaledNormal, seed);
  }
}

TwoStreamContext::Out TwoStreamContext::forward(ad::Graph& g, const Encoded& enc,
                                                ForwardTrace* trace,
                                                const std::string& trace_prefix) const {
  Out out;
  const int l = enc.ex->num_headers();

  ad::Var gamma_hat = hat_q_lstm_->apply(g, enc.q_ctx);             // n_tok x d
  ad::Var proj_hat = g.matmul(gamma_hat, param(g, w_alpha_hat_));   // n_tok x d
  for (int h = 0; h < l; ++h) {
    ad::Var tau_hat = g.max_over_rows(hat_header_lstm_->apply(g, enc.header_ctx[h]));
    ad::Var att = g.softmax_vec(g.matmul_nt(proj_hat, tau_hat));
    ad::Var mu_hat = g.matmul_tn(att, gamma_hat);
    out.tau_hat.push_back(tau_hat);
    out.mu_hat.push_back(mu_hat);
    if (trace)
      trace->add(trace_prefix + "/alpha_hat_q/h" + std::to_string(h), att.value());
  }

  if (with_content_) {
    ad::Var gamma = q_char_lstm_->apply(g, enc.e_q);                // n_char x d
    ad::Var proj = g.matmul(gamma, param(g, w_alpha_));
    for (int h = 0; h < l; ++h) {
      ad::Var tau = g.max_over_rows(cell_lstm_->apply(g, enc.e_cells[h]));
      ad::Var att = g.softmax_vec(g.matmul_nt(proj, tau));
      ad::Var mu = g.matmul_tn(att, gamma);
      out.tau.push_back(tau);
      out.mu.push_back(mu);
      if (trace) trace->add(trace_prefix + "/alpha_q/h" + std::to_string(h), att.value());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// WN

WnHead::WnHead(ParamStore& store, const ModelConfig& cfg)
    : with_content_(cfg.content_enabled()), num_classes_(cfg.max_conds + 1) {
  const int d = cfg.encoder.d;
  const int layers = cfg.encoder.bilstm_layers;
  const uint64_t seed = cfg.init_seed;
  hat_header_lstm_.emplace(store, "wn/hat_header_lstm", d, d, layers, ParamGroup::Sub,
                           seed);
  hat_q_lstm_.emplace(store, "wn/hat_q_lstm", d, d, layers, ParamGroup::Sub, seed,
                      /*external_init=*/true);
  hat_w_alpha_hdr_ = &store.create("wn/hat_w_alpha_hdr", d, d, ParamGroup::Sub,
                                   InitKind::ScaledNormal, seed);
  hat_w_s_ = &store.create("wn/hat_w_s", d, 2 * d, ParamGroup::Sub,
                           InitKind::ScaledNormal, seed);
  hat_w_alpha_q_ = &store.create("wn/hat_w_alpha_q", d, d, ParamGroup::Sub,
                                 InitKind::ScaledNormal, seed);
  if (with_content_) {
    cell_lstm_.emplace(store, "wn/cell_lstm", cfg.encoder.d_e, d, layers,
                       ParamGroup::Sub, seed);
    q_char_lstm_.emplace(store, "wn/q_char_lstm", cfg.encoder.d_e, d, layers,
                         ParamGroup::Sub, seed, /*external_init=*/true);
    w_alpha_hdr_ = &store.create("wn/w_alpha_hdr", d, d, ParamGroup::Sub,
                                 InitKind::ScaledNormal, seed);
    w_s_ = &store.create("wn/w_s", d, 2 * d, ParamGroup::Sub, InitKind::ScaledNormal,
                         seed);
    w_alpha_q_ = &store.create("wn/w_alpha_q", d, d, ParamGroup::Sub,
                               InitKind::ScaledNormal, seed);
  }
  const int mu_in = with_content_ ? 2 * d : d;
  w_mu_ = &store.create("wn/w_mu", mu_in, d, ParamGroup::Sub, InitKind::ScaledNormal,
                        seed);
  w_o_ = &store.create("wn/w_o", d, num_classes_, ParamGroup::Sub,
                       InitKind::ScaledNormal, seed);
}

ad::Var WnHead::stream(ad::Graph& g, const std::vector<ad::Var>& per_header_seqs,
                       ad::Var q_seq, const BiLstm& pool_lstm, const BiLstm& q_lstm,
                       ParamStore::Tensor* w_alpha_hdr, ParamStore::Tensor* w_s,
                       ParamStore::Tensor* w_alpha_q, ForwardTrace* trace,
                       const std::string& trace_prefix) const {
  // tau_h per header, stacked l x d.
  std::vector<ad::Var> taus;
  taus.reserve(per_header_seqs.size());
  for (ad::Var seq : per_header_seqs)
    taus.push_back(g.max_over_rows(pool_lstm.apply(g, seq)));
  ad::Var tau_stack = g.concat_rows(taus);

  auto [alpha_h, pooled] = self_attention_pool(g, tau_stack, param(g, w_alpha_hdr));
  if (trace) trace->add(trace_prefix + "/alpha_h", alpha_h.value());
  ad::Var s = g.matmul(pooled, param(g, w_s));  // 1 x 2d initial state

  ad::Var gamma = q_lstm.apply_with_init(g, q_seq, s);
  auto [alpha_q, mu] = self_attention_pool(g, gamma, param(g, w_alpha_q));
  if (trace) trace->add(trace_prefix + "/alpha_q", alpha_q.value());
  return mu;
}

ad::Var WnHead::forward(ad::Graph& g, const Encoded& enc, ForwardTrace* trace) const {
  if (enc.ex->num_headers() == 0) throw DomainError("wn: zero headers");
  ad::Var mu_hat = stream(g, enc.header_ctx, enc.q_ctx, *hat_header_lstm_, *hat_q_lstm_,
                          hat_w_alpha_hdr_, hat_w_s_, hat_w_alpha_q_, trace, "wn/hat");
  ad::Var combined;
  if (with_content_) {
    ad::Var mu = stream(g, enc.e_cells, enc.e_q, *cell_lstm_, *q_char_lstm_,
                        w_alpha_hdr_, w_s_, w_alpha_q_, trace, "wn/content");
    std::array<ad::Var, 2> parts{mu_hat, mu};
    combined = g.concat_cols(parts);
  } else {
    combined = mu_hat;
  }
  ad::Var logits = g.matmul(g.tanh(g.matmul(combined, param(g, w_mu_))), param(g, w_o_));
  if (trace) trace->add("wn/logits", logits.value());
  return logits;
}

// ---------------------------------------------------------------------------
// WC

WcHead::WcHead(ParamStore& store, const ModelConfig& cfg)
    : ctx_(store, "wc", cfg, cfg.content_enabled()) {
  const int d = cfg.encoder.d;
  const int feat = ctx_.with_content() ? 4 * d : 2 * d;
  w_o_ = &store.create("wc/w_o", feat, 1, ParamGroup::Sub, InitKind::ScaledNormal,
                       cfg.init_seed);
}

ad::Var WcHead::forward(ad::Graph& g, const Encoded& enc, ForwardTrace* trace) const {
  TwoStreamContext::Out ctx = ctx_.forward(g, enc, trace, "wc");
  const int l = enc.ex->num_headers();
  ad::Var w_o = param(g, w_o_);
  std::vector<ad::Var> logits;
  logits.reserve(l);
  for (int h = 0; h < l; ++h) {
    std::vector<ad::Var> parts{ctx.mu_hat[h], ctx.tau_hat[h]};
    if (ctx_.with_content()) {
      parts.push_back(ctx.mu[h]);
      parts.push_back(ctx.tau[h]);
    }
    ad::Var feat = g.tanh(g.concat_cols(parts));
    logits.push_back(g.matmul(feat, w_o));  // 1 x 1
  }
  ad::Var row = g.concat_cols(logits);
  if (trace) trace->add("wc/logits", row.value());
  return row;
}

// ---------------------------------------------------------------------------
// WV

WvHead::WvHead(ParamStore& store, const ModelConfig& cfg)
    : ctx_(store, "wv", cfg, cfg.content_enabled()),
      use_vl_(cfg.value_linking_enabled()) {
  const int d = cfg.encoder.d;
  const uint64_t seed = cfg.init_seed;
  q_token_lstm_.emplace(store, "wv/q_token_lstm", d, d, cfg.encoder.bilstm_layers,
                        ParamGroup::Sub, seed);
  if (use_vl_) {
    type_emb_ = &store.create("wv/type_emb", 2, cfg.encoder.d_t, ParamGroup::Sub,
                              InitKind::ScaledNormal, seed);
  }
  int feat = (ctx_.with_content() ? 4 * d : 2 * d) + kNumOps + d;
  if (use_vl_) feat += cfg.encoder.d_t;
  w_st_ = &store.create("wv/w_st", feat, 1, ParamGroup::Sub, InitKind::ScaledNormal, seed);
  w_ed_ = &store.create("wv/w_ed", feat, 1, ParamGroup::Sub, InitKind::ScaledNormal, seed);
}

WvHead::Computed WvHead::compute(ad::Graph& g, const Encoded& enc,
                                 ForwardTrace* trace) const {
  Computed c;
  c.ctx = ctx_.forward(g, enc, trace, "wv");
  c.tau_hat_q = q_token_lstm_->apply(g, enc.q_ctx);
  if (use_vl_) {
    c.type_rows = g.gather_rows(&type_emb_->value, &type_emb_->grad, enc.ex->type_ids);
    c.has_types = true;
  }
  return c;
}

std::pair<ad::Var, ad::Var> WvHead::score(ad::Graph& g, const Encoded& enc,
                                          const Computed& c, int col, CondOp op,
                                          ForwardTrace* trace) const {
  const int op_id = static_cast<int>(op);
  if (op_id < 0 || op_id >= kNumOps) throw DomainError("wv: operator id out of range");
  if (col < 0 || col >= enc.ex->num_headers())
    throw DomainError("wv: column out of range");
  const int n = enc.ex->num_tokens();

  std::vector<ad::Var> fixed_parts{c.ctx.mu_hat[col], c.ctx.tau_hat[col]};
  if (ctx_.with_content()) {
    fixed_parts.push_back(c.ctx.mu[col]);
    fixed_parts.push_back(c.ctx.tau[col]);
  }
  Mat onehot = Mat::Zero(1, kNumOps);
  onehot(0, op_id) = 1.0;
  fixed_parts.push_back(g.constant(std::move(onehot)));
  ad::Var fixed = g.repeat_rows(g.concat_cols(fixed_parts), n);

  std::vector<ad::Var> feat_parts{fixed, c.tau_hat_q};
  if (c.has_types) feat_parts.push_back(c.type_rows);
  ad::Var feats = g.tanh(g.concat_cols(feat_parts));            // n x feat
  ad::Var st = g.transpose(g.matmul(feats, param(g, w_st_)));   // 1 x n
  ad::Var ed = g.transpose(g.matmul(feats, param(g, w_ed_)));
  if (trace) {
    trace->add("wv/st_logits/c" + std::to_string(col), st.value());
    trace->add("wv/ed_logits/c" + std::to_string(col), ed.value());
  }
  return {st, ed};
}

// ---------------------------------------------------------------------------
// SC / SA / WO

HeaderClassifierHead::HeaderClassifierHead(ParamStore& store, const std::string& prefix,
                                           const ModelConfig& cfg, int num_classes)
    : prefix_(prefix),
      ctx_(store, prefix, cfg, /*with_content=*/false),
      num_classes_(num_classes) {
  const int d = cfg.encoder.d;
  w_o_ = &store.create(prefix + "/w_o", 2 * d, num_classes, ParamGroup::Sub,
                       InitKind::ScaledNormal, cfg.init_seed);
}

TwoStreamContext::Out HeaderClassifierHead::compute(ad::Graph& g, const Encoded& enc,
                                                    ForwardTrace* trace) const {
  return ctx_.forward(g, enc, trace, prefix_);
}

ad::Var HeaderClassifierHead::score_per_header(ad::Graph& g, const Encoded& enc,
                                               const TwoStreamContext::Out& ctx,
                                               ForwardTrace* trace) const {
  if (num_classes_ != 1)
    throw std::logic_error(prefix_ + ": per-header scoring needs num_classes == 1");
  const int l = enc.ex->num_headers();
  ad::Var w_o = param(g, w_o_);
  std::vector<ad::Var> logits;
  logits.reserve(l);
  for (int h = 0; h < l; ++h) {
    std::array<ad::Var, 2> parts{ctx.tau_hat[h], ctx.mu_hat[h]};
    logits.push_back(g.matmul(g.tanh(g.concat_cols(parts)), w_o));
  }
  ad::Var row = g.concat_cols(logits);
  if (trace) trace->add(prefix_ + "/logits", row.value());
  return row;
}

ad::Var HeaderClassifierHead::score_for_header(ad::Graph& g, const Encoded& enc,
                                               const TwoStreamContext::Out& ctx,
                                               int col) const {
  if (col < 0 || col >= enc.ex->num_headers())
    throw DomainError(prefix_ + ": column out of range");
  std::array<ad::Var, 2> parts{ctx.tau_hat[col], ctx.mu_hat[col]};
  return g.matmul(g.tanh(g.concat_cols(parts)), param(g, w_o_));
}

}  // namespace mcsql
