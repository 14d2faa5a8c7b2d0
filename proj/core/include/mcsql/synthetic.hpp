#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mcsql/dataset.hpp"

namespace mcsql {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Question phrasing pools. Condition phrases either name the column
/// ("when the {col} is {val}") or omit it ("for {val}"); the latter makes
/// the column recoverable only through the cell content.
struct SynthTemplates {
  std::vector<std::string> select_none{"what is the {sel}", "which {sel} is listed",
                                       "tell me the {sel}", "show the {sel}"};
  std::vector<std::string> select_count{"how many {sel} entries are there",
                                        "count the {sel} values"};
  std::vector<std::string> select_sum{"what is the total {sel}",
                                      "what is the combined {sel}"};
  std::vector<std::string> select_avg{"what is the average {sel}",
                                      "what is the mean {sel}"};
  std::vector<std::string> select_max{"what is the highest {sel}",
                                      "what is the maximum {sel}"};
  std::vector<std::string> select_min{"what is the lowest {sel}",
                                      "what is the minimum {sel}"};
  std::vector<std::string> cond_eq_named{"when the {col} is {val}",
                                         "where {col} is {val}", "with {col} {val}"};
  std::vector<std::string> cond_eq_unnamed{"for {val}", "involving {val}",
                                           "linked to {val}"};
  std::vector<std::string> cond_gt_named{"when the {col} is above {val}",
                                         "where {col} is more than {val}"};
  std::vector<std::string> cond_lt_named{"when the {col} is below {val}",
                                         "where {col} is less than {val}"};
};

struct SynthConfig {
  int n_tables = 40;
  int rows_min = 8, rows_max = 16;
  int headers_min = 4, headers_max = 6;
  double real_column_fraction = 0.35;  // at least one real and one text column
  int examples_per_table = 50;
  double zero_shot_table_fraction = 0.25;
  double unnamed_condition_prob = 0.45;  // chance a text EQ condition omits the column
  SynthTemplates templates;
  uint64_t seed = 7;

  void validate() const;
};

/// Deterministic desk-scale benchmark with guaranteed zero-shot structure:
/// zero-shot tables appear only in dev/test, their headers are drawn mostly
/// from a held-out name pool, every condition value occurs verbatim as a
/// token span, and gold queries execute without error.
DatasetBundle generate_synthetic(const SynthConfig& config);

}  // namespace mcsql
