#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "mcsql/model.hpp"
#include "mcsql/sql_exec.hpp"

namespace mcsql {

/// Literal match: sel and agg equal, conditions equal as an unordered
/// multiset of (col, op, normalized value).
bool lf_match(const SQLQuery& pred, const SQLQuery& gold);

/// Execution match: results of both queries are equal (errors match only
/// the same error class).
bool ex_match(const SQLQuery& pred, const SQLQuery& gold, const TableData& table);

struct EvalSlice {
  size_t count = 0;
  size_t lf = 0, ex = 0;
  size_t sc = 0, sa = 0, wn = 0, wc = 0, wo = 0, wv = 0;

  double rate(size_t hits) const {
    return count == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(count);
  }
  double lf_rate() const { return rate(lf); }
  double ex_rate() const { return rate(ex); }
};

struct EvalOptions {
  /// Sub-task conditioning: teacher-forced (gold upstream labels, matching
  /// the usual sub-task tables) or pipeline (predicted upstream labels).
  bool teacher_forced_subtasks = true;
};

struct EvalReport {
  EvalSlice full;
  EvalSlice zero_shot;
  size_t missing_table = 0;
  bool teacher_forced_subtasks = true;
  std::string ablation_tag;  // e.g. "full", "no_tc", "no_ml"

  std::string render_grid() const;
  std::string to_jsonl() const;  // one record per slice
};

/// Decodes every example, scores LF/EX and per-sub-task accuracies, and
/// slices by zero-shot table ids. Examples with a missing table id count
/// as all-wrong.
EvalReport evaluate(const Model& model, const std::vector<Example>& examples,
                    const std::map<std::string, TableData>& table_store,
                    const std::set<std::string>& zero_shot_table_ids,
                    const EvalOptions& opts = {});

/// LF accuracy over precompiled examples (used for dev checks in training).
double lf_accuracy(const Model& model,
                   const std::vector<const CompiledExample*>& examples);

}  // namespace mcsql
