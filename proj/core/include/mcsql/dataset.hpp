#pragma once

#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcsql/types.hpp"

namespace mcsql {

struct FatalIoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Per-file ingestion report: skipped lines and validation counters.
struct LoadReport {
  size_t lines = 0;
  size_t malformed = 0;
  size_t unknown_table = 0;
  size_t unlocatable_value = 0;  // gold condition value not a token span
  std::vector<std::string> messages;
};

struct DatasetBundle {
  std::map<std::string, TableData> table_store;
  std::vector<Example> train, dev, test;
  std::set<std::string> zero_shot_dev, zero_shot_test;

  const std::vector<Example>& split(const std::string& name) const;
};

/// WikiSQL-format line-delimited tables: one JSON object per line with
/// id/header/types/rows. Missing file is fatal; malformed lines are skipped
/// and counted.
std::map<std::string, TableData> load_tables(const std::string& path,
                                             LoadReport* report = nullptr);

/// WikiSQL-format examples: question/table_id/sql{sel,agg,conds}. agg codes
/// 0..5 map to [NONE,MAX,MIN,COUNT,SUM,AVG]; op codes 0..2 to [EQ,GT,LT].
std::vector<Example> load_examples(const std::string& path,
                                   const std::map<std::string, TableData>& tables,
                                   LoadReport* report = nullptr);

/// Convenience wrapper: tables plus one example file.
std::pair<std::map<std::string, TableData>, std::vector<Example>> load_wikisql(
    const std::string& tables_path, const std::string& examples_path,
    LoadReport* report = nullptr);

/// Table ids of eval splits that never occur in train.
std::set<std::string> derive_zero_shot(const std::vector<Example>& train,
                                       const std::vector<Example>& eval_split);
void derive_zero_shot(DatasetBundle& bundle);

/// Bundle directory layout: tables.jsonl, train.jsonl, dev.jsonl,
/// test.jsonl, bundle.json (format version + zero-shot ids). Version
/// mismatch and truncated files are fatal.
void save_bundle(const DatasetBundle& bundle, const std::string& dir);
DatasetBundle load_bundle(const std::string& dir, LoadReport* report = nullptr);

std::string example_to_json(const Example& ex);
std::string table_to_json(const TableData& t);
Example example_from_json(const std::string& line);  // throws on malformed input
TableData table_from_json(const std::string& line);

inline constexpr int kBundleFormatVersion = 1;

}  // namespace mcsql
