#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mcsql/heads.hpp"

namespace mcsql {

/// Pipeline-decoded components plus the retained score vectors.
struct Prediction {
  int sc = 0;
  int sa = 0;
  int wn = 0;
  std::vector<int> wc;                       // top-wn headers, score-descending
  std::vector<int> wo;                       // per wc entry
  std::vector<std::pair<int, int>> wv;       // per wc entry, st <= ed
  Mat sc_scores, sa_scores, wn_scores, wc_scores;
};

/// Per-head predictions under teacher-forced conditioning (gold column /
/// operator supplied to the dependent heads), for sub-task scoring.
struct SubtaskPrediction {
  int sc = 0;
  int sa = 0;
  int wn = 0;
  std::vector<int> wc;                 // top-|gold cond columns| headers
  std::vector<int> wo;                 // per gold condition
  std::vector<std::string> wv_values;  // per gold condition, raw question substring
};

/// The table-content-enhanced model: contextual encoder, char embeddings
/// and the six prediction heads. Parameters live in a single ParamStore.
class Model {
 public:
  Model(ModelConfig cfg, Vocab vocab);

  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  CompiledExample compile(const Example& ex, const TableData& table) const;

  /// Summed multi-head cross-entropy of one example (teacher forcing for
  /// SA/WO/WV). Returns the loss and accumulates gradients into the store.
  /// Examples whose gold value is not locatable as a token span are skipped
  /// and counted.
  double batch_loss_and_grad(std::span<const CompiledExample* const> batch,
                             size_t* skipped = nullptr);
  double batch_loss(std::span<const CompiledExample* const> batch,
                    size_t* skipped = nullptr);

  SQLQuery decode(const CompiledExample& ex, ForwardTrace* trace = nullptr) const;
  Prediction predict(const CompiledExample& ex, ForwardTrace* trace = nullptr) const;
  SubtaskPrediction subtask_predict(const CompiledExample& ex,
                                    ForwardTrace* trace = nullptr) const;

  /// Loss graph for one example (teacher-forced); used by the gradient
  /// checks. Returns an invalid Var for skipped examples.
  ad::Var example_loss(ad::Graph& g, const CompiledExample& ex,
                       ForwardTrace* trace = nullptr) const;

  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }
  const ModelConfig& config() const { return cfg_; }
  const Vocab& vocab() const { return vocab_; }
  const Encoder& encoder() const { return *encoder_; }

  size_t skipped_gold_spans() const { return skipped_gold_spans_; }

 private:
  Encoded build_encoded(ad::Graph& g, const CompiledExample& ex) const;

  ModelConfig cfg_;
  Vocab vocab_;
  ParamStore params_;
  std::unique_ptr<Encoder> encoder_;
  std::unique_ptr<WnHead> wn_;
  std::unique_ptr<WcHead> wc_;
  std::unique_ptr<WvHead> wv_;
  std::unique_ptr<HeaderClassifierHead> sc_, sa_, wo_;
  mutable size_t skipped_gold_spans_ = 0;
};

/// Locates `value` as a contiguous token span (normalized comparison;
/// canonical numeric form also tried). Returns {-1,-1} when absent.
std::pair<int, int> find_value_span(const std::vector<Token>& tokens,
                                    const std::string& value, bool numeric_column);

/// Best (st, ed) pair with ed >= st by joint score over 1 x n score rows;
/// ties prefer the lexicographically smallest pair.
std::pair<int, int> constrained_span(const Mat& st_scores, const Mat& ed_scores);

}  // namespace mcsql
