#include "mcsql/model.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "mcsql/text.hpp"
#include "mcsql/tokenize.hpp"

namespace mcsql {

std::pair<int, int> find_value_span(const std::vector<Token>& tokens,
                                    const std::string& value, bool numeric_column) {
  std::vector<std::string> targets{normalize_text(value)};
  if (numeric_column) {
    const std::string canon = canonical_cell(value, true);
    if (canon != targets[0]) targets.push_back(canon);
  }
  const int n = static_cast<int>(tokens.size());
  for (int len = 1; len <= n; ++len) {
    for (int s = 0; s + len <= n; ++s) {
      std::string joined;
      for (int k = 0; k < len; ++k) {
        if (k) joined.push_back(' ');
        joined += tokens[s + k].text;
      }
      joined = normalize_text(joined);
      for (const std::string& t : targets)
        if (!t.empty() && joined == t) return {s, s + len - 1};
    }
  }
  return {-1, -1};
}

Model::Model(ModelConfig cfg, Vocab vocab) : cfg_(cfg), vocab_(std::move(vocab)) {
  cfg_.encoder.validate();
  encoder_ = std::make_unique<Encoder>(cfg_.encoder, vocab_, params_, cfg_.init_seed);
  wn_ = std::make_unique<WnHead>(params_, cfg_);
  wc_ = std::make_unique<WcHead>(params_, cfg_);
  wv_ = std::make_unique<WvHead>(params_, cfg_);
  sc_ = std::make_unique<HeaderClassifierHead>(params_, "sc", cfg_, 1);
  sa_ = std::make_unique<HeaderClassifierHead>(params_, "sa", cfg_, kNumAggs);
  wo_ = std::make_unique<HeaderClassifierHead>(params_, "wo", cfg_, kNumOps);
}

CompiledExample Model::compile(const Example& ex, const TableData& table) const {
  CompiledExample out;
  out.example = ex;
  if (out.example.question_tokens.empty())
    out.example.question_tokens = tokenize(out.example.question);
  out.table = &table;
  out.enc_input = build_input(out.example.question_tokens, table.schema.headers,
                              vocab_, cfg_.encoder);
  out.link = select_cells(table, out.example.question_tokens, cfg_.sigma, cfg_.n_max);
  out.type_ids = token_type_ids(out.link);

  const std::string q_norm = normalize_text(out.example.question);
  out.question_char_ids = vocab_.char_ids(q_norm);
  for (const auto& entry : out.link.per_header)
    out.cell_char_ids.push_back(vocab_.char_ids(entry.cell));

  for (const Condition& c : out.example.gold.conds) {
    const bool numeric = c.col >= 0 && c.col < table.schema.num_cols() &&
                         table.schema.col_types[c.col] == ColType::Real;
    auto span = find_value_span(out.example.question_tokens, c.value, numeric);
    if (span.first < 0) out.gold_spans_ok = false;
    out.gold_spans.push_back(span);
  }
  return out;
}

Encoded Model::build_encoded(ad::Graph& g, const CompiledExample& ex) const {
  Encoded enc;
  enc.ex = &ex;
  ad::Var ctx = encoder_->encode_context(g, ex.enc_input);
  const auto& qpos = ex.enc_input.question_positions;
  enc.q_ctx = g.slice_rows(ctx, qpos.front(), static_cast<int>(qpos.size()));
  for (const auto& hpos : ex.enc_input.header_positions)
    enc.header_ctx.push_back(
        g.slice_rows(ctx, hpos.front(), static_cast<int>(hpos.size())));
  enc.e_q = encoder_->embed_char_ids(g, ex.question_char_ids);
  for (const auto& ids : ex.cell_char_ids)
    enc.e_cells.push_back(encoder_->embed_char_ids(g, ids));
  return enc;
}

ad::Var Model::example_loss(ad::Graph& g, const CompiledExample& ex,
                            ForwardTrace* trace) const {
  if (!ex.gold_spans_ok) return ad::Var{};
  const SQLQuery& gold = ex.example.gold;
  Encoded enc = build_encoded(g, ex);

  std::vector<ad::Var> losses;

  auto sc_ctx = sc_->compute(g, enc, trace);
  losses.push_back(g.ce_loss(sc_->score_per_header(g, enc, sc_ctx, trace), gold.sel));

  auto sa_ctx = sa_->compute(g, enc, trace);
  losses.push_back(g.ce_loss(sa_->score_for_header(g, enc, sa_ctx, gold.sel),
                             static_cast<int>(gold.agg)));

  const int wn_gold = std::min(static_cast<int>(gold.conds.size()), cfg_.max_conds);
  losses.push_back(g.ce_loss(wn_->forward(g, enc, trace), wn_gold));

  // WC: one-vs-rest over headers, gold set = distinct condition columns.
  std::vector<char> is_gold_col(static_cast<size_t>(ex.num_headers()), 0);
  for (const Condition& c : gold.conds) is_gold_col[static_cast<size_t>(c.col)] = 1;
  ad::Var wc_logits = wc_->forward(g, enc, trace);
  for (int h = 0; h < ex.num_headers(); ++h) {
    ad::Var logit = g.slice_cols(wc_logits, h, 1);
    losses.push_back(g.bce_loss(logit, is_gold_col[static_cast<size_t>(h)] ? 1.0 : 0.0));
  }

  if (!gold.conds.empty()) {
    auto wo_ctx = wo_->compute(g, enc, trace);
    auto wv_c = wv_->compute(g, enc, trace);
    for (size_t i = 0; i < gold.conds.size(); ++i) {
      const Condition& c = gold.conds[i];
      losses.push_back(g.ce_loss(wo_->score_for_header(g, enc, wo_ctx, c.col),
                                 static_cast<int>(c.op)));
      auto [st, ed] = wv_->score(g, enc, wv_c, c.col, c.op, trace);
      losses.push_back(g.ce_loss(st, ex.gold_spans[i].first));
      losses.push_back(g.ce_loss(ed, ex.gold_spans[i].second));
    }
  }
  return g.sum_scalars(losses);
}

double Model::batch_loss_and_grad(std::span<const CompiledExample* const> batch,
                                  size_t* skipped) {
  double total = 0.0;
  size_t skip = 0;
  ad::Graph g;
  for (const CompiledExample* ex : batch) {
    g.clear();
    ad::Var loss = example_loss(g, *ex);
    if (!loss.valid()) {
      ++skip;
      continue;
    }
    total += loss.scalar();
    g.backward(loss);
  }
  skipped_gold_spans_ += skip;
  if (skipped) *skipped = skip;
  return total;
}

double Model::batch_loss(std::span<const CompiledExample* const> batch,
                         size_t* skipped) {
  double total = 0.0;
  size_t skip = 0;
  ad::Graph g;
  for (const CompiledExample* ex : batch) {
    g.clear();
    ad::Var loss = example_loss(g, *ex);
    if (!loss.valid()) {
      ++skip;
      continue;
    }
    total += loss.scalar();
  }
  if (skipped) *skipped = skip;
  return total;
}

std::pair<int, int> constrained_span(const Mat& st_scores, const Mat& ed_scores) {
  const int n = static_cast<int>(st_scores.cols());
  int best_st = 0, best_ed = 0;
  double best = -std::numeric_limits<double>::infinity();
  for (int s = 0; s < n; ++s) {
    for (int e = s; e < n; ++e) {
      const double score = st_scores(0, s) + ed_scores(0, e);
      if (score > best) {
        best = score;
        best_st = s;
        best_ed = e;
      }
    }
  }
  return {best_st, best_ed};
}

namespace {

std::string span_text(const Example& ex, int st, int ed) {
  const int begin = ex.question_tokens[static_cast<size_t>(st)].begin;
  const int end = ex.question_tokens[static_cast<size_t>(ed)].end;
  return ex.question.substr(static_cast<size_t>(begin),
                            static_cast<size_t>(end - begin));
}

std::vector<int> top_k_headers(const Mat& scores, int k) {
  std::vector<int> order(static_cast<size_t>(scores.cols()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (scores(0, a) != scores(0, b)) return scores(0, a) > scores(0, b);
    return a < b;
  });
  order.resize(static_cast<size_t>(std::min<int>(k, scores.cols())));
  return order;
}

}  // namespace

Prediction Model::predict(const CompiledExample& ex, ForwardTrace* trace) const {
  ad::Graph g;
  Encoded enc = build_encoded(g, ex);
  Prediction p;

  auto sc_ctx = sc_->compute(g, enc, trace);
  p.sc_scores = sc_->score_per_header(g, enc, sc_ctx, trace).value();
  p.sc = argmax_lowest(p.sc_scores);

  auto sa_ctx = sa_->compute(g, enc, trace);
  p.sa_scores = sa_->score_for_header(g, enc, sa_ctx, p.sc).value();
  p.sa = argmax_lowest(p.sa_scores);

  p.wn_scores = wn_->forward(g, enc, trace).value();
  p.wn = argmax_lowest(p.wn_scores);

  p.wc_scores = wc_->forward(g, enc, trace).value();
  p.wc = top_k_headers(p.wc_scores, p.wn);

  if (!p.wc.empty()) {
    auto wo_ctx = wo_->compute(g, enc, trace);
    auto wv_c = wv_->compute(g, enc, trace);
    for (int col : p.wc) {
      const Mat wo_scores = wo_->score_for_header(g, enc, wo_ctx, col).value();
      const int op = argmax_lowest(wo_scores);
      p.wo.push_back(op);
      auto [st, ed] = wv_->score(g, enc, wv_c, col, static_cast<CondOp>(op), trace);
      p.wv.push_back(constrained_span(st.value(), ed.value()));
    }
  }
  return p;
}

SQLQuery Model::decode(const CompiledExample& ex, ForwardTrace* trace) const {
  Prediction p = predict(ex, trace);
  SQLQuery q;
  q.sel = p.sc;
  q.agg = static_cast<Agg>(p.sa);
  for (size_t i = 0; i < p.wc.size(); ++i) {
    Condition c;
    c.col = p.wc[i];
    c.op = static_cast<CondOp>(p.wo[i]);
    c.value = span_text(ex.example, p.wv[i].first, p.wv[i].second);
    q.conds.push_back(std::move(c));
  }
  return q;
}

SubtaskPrediction Model::subtask_predict(const CompiledExample& ex,
                                         ForwardTrace* trace) const {
  ad::Graph g;
  Encoded enc = build_encoded(g, ex);
  const SQLQuery& gold = ex.example.gold;
  SubtaskPrediction p;

  auto sc_ctx = sc_->compute(g, enc, trace);
  p.sc = argmax_lowest(sc_->score_per_header(g, enc, sc_ctx, trace).value());

  auto sa_ctx = sa_->compute(g, enc, trace);
  p.sa = argmax_lowest(sa_->score_for_header(g, enc, sa_ctx, gold.sel).value());

  p.wn = argmax_lowest(wn_->forward(g, enc, trace).value());

  std::vector<char> seen(static_cast<size_t>(ex.num_headers()), 0);
  int distinct_gold_cols = 0;
  for (const Condition& c : gold.conds)
    if (!seen[static_cast<size_t>(c.col)]) {
      seen[static_cast<size_t>(c.col)] = 1;
      ++distinct_gold_cols;
    }
  p.wc = top_k_headers(wc_->forward(g, enc, trace).value(), distinct_gold_cols);

  if (!gold.conds.empty()) {
    auto wo_ctx = wo_->compute(g, enc, trace);
    auto wv_c = wv_->compute(g, enc, trace);
    for (const Condition& c : gold.conds) {
      p.wo.push_back(
          argmax_lowest(wo_->score_for_header(g, enc, wo_ctx, c.col).value()));
      auto [st, ed] = wv_->score(g, enc, wv_c, c.col, c.op, trace);
      auto span = constrained_span(st.value(), ed.value());
      p.wv_values.push_back(span_text(ex.example, span.first, span.second));
    }
  }
  return p;
}

}  // namespace mcsql
