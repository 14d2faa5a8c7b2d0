#include "mcsql/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "mcsql/text.hpp"
#include "mcsql/tokenize.hpp"

namespace mcsql {

int Vocab::add_word(const std::string& w) {
  auto it = word_index.find(w);
  if (it != word_index.end()) return it->second;
  const int id = static_cast<int>(words.size());
  words.push_back(w);
  word_index.emplace(w, id);
  return id;
}

int Vocab::add_char(char c) {
  auto it = char_index.find(c);
  if (it != char_index.end()) return it->second;
  const int id = static_cast<int>(chars.size());
  chars.push_back(std::string(1, c));
  char_index.emplace(c, id);
  return id;
}

int Vocab::word_id(const std::string& w) const {
  auto it = word_index.find(w);
  return it == word_index.end() ? kWordUnk : it->second;
}

int Vocab::char_id(char c) const {
  auto it = char_index.find(c);
  return it == char_index.end() ? kCharUnk : it->second;
}

std::vector<int> Vocab::char_ids(const std::string& text) const {
  if (text == kNoneSentinel) return {kCharNone};
  std::vector<int> ids;
  ids.reserve(text.size());
  for (char c : text) ids.push_back(char_id(c));
  if (ids.empty()) ids.push_back(kCharUnk);
  return ids;
}

Vocab build_vocab(const std::vector<Example>& train,
                  const std::map<std::string, TableData>& tables) {
  Vocab v;
  auto add_text_chars = [&](const std::string& s) {
    for (char c : normalize_text(s)) v.add_char(c);
  };
  std::set<std::string> used_tables;
  for (const Example& ex : train) used_tables.insert(ex.table_id);
  for (const Example& ex : train) {
    const auto toks = ex.question_tokens.empty() ? tokenize(ex.question)
                                                 : ex.question_tokens;
    for (const Token& t : toks) v.add_word(t.text);
    add_text_chars(ex.question);
  }
  for (const auto& [id, t] : tables) {
    if (!used_tables.count(id)) continue;
    for (size_t c = 0; c < t.schema.headers.size(); ++c) {
      const std::string& h = t.schema.headers[c];
      if (!normalize_text(h).empty())
        for (const Token& tok : tokenize(h)) v.add_word(tok.text);
      add_text_chars(h);
      const bool numeric = t.schema.col_types[c] == ColType::Real;
      for (const auto& row : t.rows) add_text_chars(canonical_cell(row[c], numeric));
    }
  }
  // Digits and basic punctuation keep numeric cells in-vocabulary even when
  // a particular digit never occurred in training.
  for (char c : std::string("0123456789.- ")) v.add_char(c);
  return v;
}

void EncoderConfig::validate() const {
  if (d < 2 || d % 2 != 0) throw std::invalid_argument("EncoderConfig: d must be even and >= 2");
  if (d_e < 1 || d_t < 1) throw std::invalid_argument("EncoderConfig: embedding dims must be >= 1");
  if (bilstm_layers < 1) throw std::invalid_argument("EncoderConfig: bilstm_layers must be >= 1");
  if (context_encoder == ContextEncoderKind::TinyTransformer) {
    if (transformer_layers < 1) throw std::invalid_argument("EncoderConfig: transformer_layers");
    if (transformer_heads < 1 || d % transformer_heads != 0)
      throw std::invalid_argument("EncoderConfig: heads must divide d");
  }
  if (max_positions < 8) throw std::invalid_argument("EncoderConfig: max_positions too small");
}

EncoderInput build_input(const std::vector<Token>& question_tokens,
                         const std::vector<std::string>& headers, const Vocab& vocab,
                         const EncoderConfig& cfg) {
  if (headers.empty()) throw DomainError("build_input: need at least one header");
  // Header word ids; empty headers get a single UNK slot.
  std::vector<std::vector<int>> header_ids;
  header_ids.reserve(headers.size());
  for (const std::string& h : headers) {
    std::vector<int> ids;
    if (!normalize_text(h).empty()) {
      for (const Token& t : tokenize(h)) ids.push_back(vocab.word_id(t.text));
    }
    if (ids.empty()) ids.push_back(Vocab::kWordUnk);
    header_ids.push_back(std::move(ids));
  }

  EncoderInput out;
  const int n_q = static_cast<int>(question_tokens.size());
  auto total_len = [&]() {
    int len = 1 + n_q + 1;  // CLS q SEP
    for (const auto& ids : header_ids) len += static_cast<int>(ids.size()) + 1;
    return len;
  };

  // Trim the longest header first (later headers on ties) until we fit.
  std::vector<int> original_sizes;
  for (const auto& ids : header_ids) original_sizes.push_back(static_cast<int>(ids.size()));
  while (total_len() > cfg.max_positions) {
    int victim = -1, longest = 1;
    for (int i = 0; i < static_cast<int>(header_ids.size()); ++i) {
      if (static_cast<int>(header_ids[i].size()) >= longest) {
        longest = static_cast<int>(header_ids[i].size());
        victim = i;
      }
    }
    if (victim < 0 || longest <= 1)
      throw DomainError("build_input: sequence cannot fit the position cap");
    header_ids[victim].pop_back();
  }
  for (size_t i = 0; i < header_ids.size(); ++i) {
    if (static_cast<int>(header_ids[i].size()) != original_sizes[i]) {
      out.truncation_warnings.push_back(
          "header " + std::to_string(i) + " truncated from " +
          std::to_string(original_sizes[i]) + " to " +
          std::to_string(header_ids[i].size()) + " tokens");
    }
  }

  const bool relative = cfg.position_mode == PositionMode::SegmentRelative;
  auto push = [&](int word, int pos, int seg) {
    out.word_ids.push_back(word);
    out.position_ids.push_back(relative ? pos : static_cast<int>(out.word_ids.size()) - 1);
    out.segment_type_ids.push_back(seg);
  };

  push(Vocab::kWordCls, 0, 0);
  for (int i = 0; i < n_q; ++i) {
    out.question_positions.push_back(static_cast<int>(out.word_ids.size()));
    push(vocab.word_id(question_tokens[i].text), i, 1);
  }
  push(Vocab::kWordSep, 1, 0);
  for (const auto& ids : header_ids) {
    std::vector<int> positions;
    for (int j = 0; j < static_cast<int>(ids.size()); ++j) {
      positions.push_back(static_cast<int>(out.word_ids.size()));
      push(ids[j], j, 2);
    }
    out.header_positions.push_back(std::move(positions));
    push(Vocab::kWordSep, 2, 0);
  }
  return out;
}

Encoder::Encoder(const EncoderConfig& cfg, const Vocab& vocab, ParamStore& store,
                 uint64_t seed)
    : cfg_(cfg), vocab_(vocab), store_(store) {
  cfg_.validate();
  const int d = cfg_.d;
  store.create("encoder/word_emb", vocab.word_count(), d, ParamGroup::Encoder,
               InitKind::ScaledNormal, seed);
  store.create("encoder/pos_emb", cfg_.max_positions, d, ParamGroup::Encoder,
               InitKind::ScaledNormal, seed);
  store.create("encoder/seg_emb", 3, d, ParamGroup::Encoder, InitKind::ScaledNormal,
               seed);
  // The char table feeds the sub-modules, so it trains at the sub-module rate.
  store.create("char_emb", vocab.char_count(), cfg_.d_e, ParamGroup::Sub,
               InitKind::ScaledNormal, seed);

  if (cfg_.context_encoder == ContextEncoderKind::TinyTransformer) {
    const int ffn = cfg_.transformer_ffn > 0 ? cfg_.transformer_ffn : 4 * d;
    for (int l = 0; l < cfg_.transformer_layers; ++l) {
      const std::string p = "encoder/l" + std::to_string(l);
      for (const char* w : {"/attn/wq", "/attn/wk", "/attn/wv", "/attn/wo"})
        store.create(p + w, d, d, ParamGroup::Encoder, InitKind::ScaledNormal, seed);
      for (const char* b : {"/attn/bq", "/attn/bk", "/attn/bv", "/attn/bo"})
        store.create(p + b, 1, d, ParamGroup::Encoder, InitKind::Zeros, seed);
      store.create(p + "/ffn/w1", d, ffn, ParamGroup::Encoder, InitKind::ScaledNormal, seed);
      store.create(p + "/ffn/b1", 1, ffn, ParamGroup::Encoder, InitKind::Zeros, seed);
      store.create(p + "/ffn/w2", ffn, d, ParamGroup::Encoder, InitKind::ScaledNormal, seed);
      store.create(p + "/ffn/b2", 1, d, ParamGroup::Encoder, InitKind::Zeros, seed);
      store.create(p + "/ln1/gain", 1, d, ParamGroup::Encoder, InitKind::Ones, seed);
      store.create(p + "/ln1/bias", 1, d, ParamGroup::Encoder, InitKind::Zeros, seed);
      store.create(p + "/ln2/gain", 1, d, ParamGroup::Encoder, InitKind::Ones, seed);
      store.create(p + "/ln2/bias", 1, d, ParamGroup::Encoder, InitKind::Zeros, seed);
    }
  } else {
    ctx_lstm_.emplace(store_, "encoder/bilstm", d, d, cfg_.bilstm_layers,
                      ParamGroup::Encoder, seed);
  }
}

ad::Var Encoder::encode_context(ad::Graph& g, const EncoderInput& input) const {
  auto& word_emb = store_.at("encoder/word_emb");
  auto& pos_emb = store_.at("encoder/pos_emb");
  auto& seg_emb = store_.at("encoder/seg_emb");
  ad::Var x = g.gather_rows(&word_emb.value, &word_emb.grad, input.word_ids);
  ad::Var p = g.gather_rows(&pos_emb.value, &pos_emb.grad, input.position_ids);
  ad::Var s = g.gather_rows(&seg_emb.value, &seg_emb.grad, input.segment_type_ids);
  x = g.add(g.add(x, p), s);
  if (cfg_.context_encoder == ContextEncoderKind::TinyTransformer)
    return transformer_forward(g, x);
  return ctx_lstm_->apply(g, x);
}

ad::Var Encoder::transformer_forward(ad::Graph& g, ad::Var x) const {
  const int d = cfg_.d;
  const int nh = cfg_.transformer_heads;
  const int dk = d / nh;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
  auto param = [&](const std::string& name) {
    auto& t = store_.at(name);
    return g.leaf(&t.value, &t.grad);
  };
  for (int l = 0; l < cfg_.transformer_layers; ++l) {
    const std::string p = "encoder/l" + std::to_string(l);
    ad::Var q = g.add_rowvec(g.matmul(x, param(p + "/attn/wq")), param(p + "/attn/bq"));
    ad::Var k = g.add_rowvec(g.matmul(x, param(p + "/attn/wk")), param(p + "/attn/bk"));
    ad::Var v = g.add_rowvec(g.matmul(x, param(p + "/attn/wv")), param(p + "/attn/bv"));
    std::vector<ad::Var> head_outs;
    for (int h = 0; h < nh; ++h) {
      ad::Var qh = g.slice_cols(q, h * dk, dk);
      ad::Var kh = g.slice_cols(k, h * dk, dk);
      ad::Var vh = g.slice_cols(v, h * dk, dk);
      ad::Var att = g.softmax_rows(g.scale(g.matmul_nt(qh, kh), scale));
      head_outs.push_back(g.matmul(att, vh));
    }
    ad::Var att_out = g.concat_cols(head_outs);
    att_out = g.add_rowvec(g.matmul(att_out, param(p + "/attn/wo")), param(p + "/attn/bo"));
    x = g.layer_norm(g.add(x, att_out), param(p + "/ln1/gain"), param(p + "/ln1/bias"));
    ad::Var ff = g.add_rowvec(g.matmul(x, param(p + "/ffn/w1")), param(p + "/ffn/b1"));
    ff = g.relu(ff);
    ff = g.add_rowvec(g.matmul(ff, param(p + "/ffn/w2")), param(p + "/ffn/b2"));
    x = g.layer_norm(g.add(x, ff), param(p + "/ln2/gain"), param(p + "/ln2/bias"));
  }
  return x;
}

ad::Var Encoder::embed_chars(ad::Graph& g, const std::string& text) const {
  return embed_char_ids(g, vocab_.char_ids(text));
}

ad::Var Encoder::embed_char_ids(ad::Graph& g, const std::vector<int>& ids) const {
  auto& t = store_.at("char_emb");
  return g.gather_rows(&t.value, &t.grad, ids);
}

}  // namespace mcsql
