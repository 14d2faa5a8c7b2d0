#pragma once

#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "mcsql/autodiff.hpp"
#include "mcsql/nn.hpp"
#include "mcsql/params.hpp"
#include "mcsql/types.hpp"

namespace mcsql {

/// Word and character vocabularies. Word ids 0..2 are reserved for
/// UNK/CLS/SEP; char id 0 is UNK, 1 is the #None# sentinel row.
struct Vocab {
  static constexpr int kWordUnk = 0;
  static constexpr int kWordCls = 1;
  static constexpr int kWordSep = 2;
  static constexpr int kCharUnk = 0;
  static constexpr int kCharNone = 1;

  std::vector<std::string> words{"[UNK]", "[CLS]", "[SEP]"};
  std::vector<std::string> chars{"[UNK]", kNoneSentinel};
  std::unordered_map<std::string, int> word_index{{"[UNK]", 0}, {"[CLS]", 1}, {"[SEP]", 2}};
  std::unordered_map<char, int> char_index;

  int add_word(const std::string& w);
  int add_char(char c);
  int word_id(const std::string& w) const;
  int char_id(char c) const;
  /// Char ids of a normalized string; the sentinel maps to a single row.
  std::vector<int> char_ids(const std::string& text) const;

  int word_count() const { return static_cast<int>(words.size()); }
  int char_count() const { return static_cast<int>(chars.size()); }
};

/// Vocabularies from the training split: question and header words, plus
/// characters of normalized questions, headers and cells.
Vocab build_vocab(const std::vector<Example>& train,
                  const std::map<std::string, TableData>& tables);

enum class ContextEncoderKind : uint8_t { TinyTransformer = 0, BiLstm = 1 };
enum class PositionMode : uint8_t { SegmentRelative = 0, Absolute = 1 };

struct EncoderConfig {
  int d = 100;        // hidden size of all context vectors
  int d_e = 128;      // character embedding size
  int d_t = 32;       // WV type embedding size
  int bilstm_layers = 2;
  ContextEncoderKind context_encoder = ContextEncoderKind::TinyTransformer;
  int transformer_layers = 2;
  int transformer_heads = 2;
  int transformer_ffn = 0;  // 0 -> 4*d
  PositionMode position_mode = PositionMode::SegmentRelative;
  int max_positions = 128;  // sequence cap

  void validate() const;
};

/// [CLS] q tokens [SEP] h1 tokens [SEP] ... [SEP] plus the segment map.
struct EncoderInput {
  std::vector<int> word_ids;           // length L
  std::vector<int> position_ids;       // per-position (mode-dependent)
  std::vector<int> segment_type_ids;   // 0=CLS/SEP, 1=question, 2=header
  std::vector<int> question_positions; // indices of the question tokens
  std::vector<std::vector<int>> header_positions;  // per header, >= 1 each
  std::vector<std::string> truncation_warnings;
};

/// Builds the marker-delimited sequence. Headers are tokenized with the
/// shared tokenizer; an empty header contributes a single UNK slot. When
/// the sequence exceeds the cap, header tails are truncated (never below
/// one token per header) and a warning is recorded.
EncoderInput build_input(const std::vector<Token>& question_tokens,
                         const std::vector<std::string>& headers, const Vocab& vocab,
                         const EncoderConfig& cfg);

/// The trainable stand-in for the pre-trained sentence encoder plus the
/// character embedding table. Owns nothing; registers tensors in the store.
class Encoder {
 public:
  Encoder(const EncoderConfig& cfg, const Vocab& vocab, ParamStore& store,
          uint64_t seed);

  /// Per-position hidden vectors, L x d.
  ad::Var encode_context(ad::Graph& g, const EncoderInput& input) const;

  /// One learned vector per character of `text` (the sentinel gives the
  /// dedicated row), len x d_e.
  ad::Var embed_chars(ad::Graph& g, const std::string& text) const;
  ad::Var embed_char_ids(ad::Graph& g, const std::vector<int>& ids) const;

  const EncoderConfig& config() const { return cfg_; }
  const Vocab& vocab() const { return vocab_; }

 private:
  ad::Var transformer_forward(ad::Graph& g, ad::Var x) const;

  EncoderConfig cfg_;
  const Vocab& vocab_;
  ParamStore& store_;
  std::optional<BiLstm> ctx_lstm_;
};

}  // namespace mcsql
