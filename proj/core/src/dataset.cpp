#include "mcsql/dataset.hpp"

#include <filesystem>
#include <fstream>
#include <functional>

#include "json.hpp"
#include "mcsql/log.hpp"
#include "mcsql/model.hpp"
#include "mcsql/text.hpp"
#include "mcsql/tokenize.hpp"

namespace mcsql {

using nlohmann::json;

namespace {

std::string json_value_to_cell(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return canonical_number(static_cast<double>(v.get<int64_t>()));
  if (v.is_number_float()) return canonical_number(v.get<double>());
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_null()) return "";
  return v.dump();
}

TableData parse_table_line(const json& j) {
  TableData t;
  t.schema.table_id = j.at("id").get<std::string>();
  for (const auto& h : j.at("header")) t.schema.headers.push_back(h.get<std::string>());
  if (t.schema.headers.empty()) throw std::runtime_error("table has no headers");
  for (const auto& ty : j.at("types")) {
    const std::string s = ty.get<std::string>();
    t.schema.col_types.push_back(s == "real" ? ColType::Real : ColType::Text);
  }
  if (t.schema.col_types.size() != t.schema.headers.size())
    throw std::runtime_error("types/header length mismatch");
  for (const auto& row : j.at("rows")) {
    std::vector<std::string> cells;
    for (const auto& cell : row) cells.push_back(json_value_to_cell(cell));
    if (cells.size() != t.schema.headers.size())
      throw std::runtime_error("row width mismatch");
    t.rows.push_back(std::move(cells));
  }
  return t;
}

Example parse_example_line(const json& j) {
  Example ex;
  ex.question = j.at("question").get<std::string>();
  ex.table_id = j.at("table_id").get<std::string>();
  const json& sql = j.at("sql");
  ex.gold.sel = sql.at("sel").get<int>();
  const int agg = sql.at("agg").get<int>();
  if (agg < 0 || agg >= kNumAggs) throw std::runtime_error("agg code out of range");
  ex.gold.agg = static_cast<Agg>(agg);
  for (const auto& cond : sql.at("conds")) {
    if (!cond.is_array() || cond.size() != 3)
      throw std::runtime_error("cond is not a [col, op, value] triple");
    Condition c;
    c.col = cond[0].get<int>();
    const int op = cond[1].get<int>();
    if (op < 0 || op >= kNumOps) throw std::runtime_error("op code out of range");
    c.op = static_cast<CondOp>(op);
    c.value = json_value_to_cell(cond[2]);
    ex.gold.conds.push_back(std::move(c));
  }
  ex.question_tokens = tokenize(ex.question);
  return ex;
}

}  // namespace

Example example_from_json(const std::string& line) {
  return parse_example_line(json::parse(line));
}

TableData table_from_json(const std::string& line) {
  return parse_table_line(json::parse(line));
}

namespace {

void for_each_line(const std::string& path, LoadReport* report,
                   const std::function<void(const std::string&, size_t)>& fn) {
  std::ifstream in(path);
  if (!in) throw FatalIoError("cannot open " + path);
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (report) ++report->lines;
    fn(line, lineno);
  }
}

}  // namespace

const std::vector<Example>& DatasetBundle::split(const std::string& name) const {
  if (name == "train") return train;
  if (name == "dev") return dev;
  if (name == "test") return test;
  throw std::invalid_argument("unknown split " + name);
}

std::map<std::string, TableData> load_tables(const std::string& path,
                                             LoadReport* report) {
  std::map<std::string, TableData> tables;
  for_each_line(path, report, [&](const std::string& line, size_t lineno) {
    try {
      TableData t = parse_table_line(json::parse(line));
      tables.emplace(t.schema.table_id, std::move(t));
    } catch (const std::exception& e) {
      if (report) {
        ++report->malformed;
        report->messages.push_back(path + ":" + std::to_string(lineno) + ": " + e.what());
      }
      MCSQL_WARN("skipping malformed table line " + std::to_string(lineno) + ": " +
                 e.what());
    }
  });
  return tables;
}

std::vector<Example> load_examples(const std::string& path,
                                   const std::map<std::string, TableData>& tables,
                                   LoadReport* report) {
  std::vector<Example> examples;
  for_each_line(path, report, [&](const std::string& line, size_t lineno) {
    try {
      Example ex = parse_example_line(json::parse(line));
      auto it = tables.find(ex.table_id);
      if (it == tables.end()) {
        if (report) ++report->unknown_table;
        MCSQL_WARN("skipping example with unknown table id " + ex.table_id);
        return;
      }
      // Validation flag on ingested data: every condition value should be a
      // locatable token span (the WV head needs it for training).
      for (const Condition& c : ex.gold.conds) {
        const bool numeric =
            c.col >= 0 && c.col < it->second.schema.num_cols() &&
            it->second.schema.col_types[static_cast<size_t>(c.col)] == ColType::Real;
        if (find_value_span(ex.question_tokens, c.value, numeric).first < 0) {
          if (report) ++report->unlocatable_value;
          break;
        }
      }
      examples.push_back(std::move(ex));
    } catch (const std::exception& e) {
      if (report) {
        ++report->malformed;
        report->messages.push_back(path + ":" + std::to_string(lineno) + ": " + e.what());
      }
      MCSQL_WARN("skipping malformed example line " + std::to_string(lineno) + ": " +
                 e.what());
    }
  });
  return examples;
}

std::pair<std::map<std::string, TableData>, std::vector<Example>> load_wikisql(
    const std::string& tables_path, const std::string& examples_path,
    LoadReport* report) {
  auto tables = load_tables(tables_path, report);
  auto examples = load_examples(examples_path, tables, report);
  return {std::move(tables), std::move(examples)};
}

std::set<std::string> derive_zero_shot(const std::vector<Example>& train,
                                       const std::vector<Example>& eval_split) {
  std::set<std::string> train_ids;
  for (const Example& ex : train) train_ids.insert(ex.table_id);
  std::set<std::string> out;
  for (const Example& ex : eval_split)
    if (!train_ids.count(ex.table_id)) out.insert(ex.table_id);
  return out;
}

void derive_zero_shot(DatasetBundle& bundle) {
  bundle.zero_shot_dev = derive_zero_shot(bundle.train, bundle.dev);
  bundle.zero_shot_test = derive_zero_shot(bundle.train, bundle.test);
}

std::string table_to_json(const TableData& t) {
  json j;
  j["id"] = t.schema.table_id;
  j["header"] = t.schema.headers;
  json types = json::array();
  for (ColType ty : t.schema.col_types) types.push_back(to_string(ty));
  j["types"] = std::move(types);
  j["rows"] = t.rows;
  return j.dump();
}

std::string example_to_json(const Example& ex) {
  json j;
  j["question"] = ex.question;
  j["table_id"] = ex.table_id;
  json sql;
  sql["sel"] = ex.gold.sel;
  sql["agg"] = static_cast<int>(ex.gold.agg);
  json conds = json::array();
  for (const Condition& c : ex.gold.conds)
    conds.push_back(json::array({c.col, static_cast<int>(c.op), c.value}));
  sql["conds"] = std::move(conds);
  j["sql"] = std::move(sql);
  return j.dump();
}

void save_bundle(const DatasetBundle& bundle, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  auto write_lines = [&](const std::string& name, auto&& emit) {
    std::ofstream out(fs::path(dir) / name);
    if (!out) throw FatalIoError("cannot write " + name + " in " + dir);
    emit(out);
  };
  write_lines("tables.jsonl", [&](std::ofstream& out) {
    for (const auto& [id, t] : bundle.table_store) out << table_to_json(t) << "\n";
  });
  for (const auto& [name, split] :
       {std::pair<std::string, const std::vector<Example>*>{"train.jsonl", &bundle.train},
        {"dev.jsonl", &bundle.dev},
        {"test.jsonl", &bundle.test}}) {
    write_lines(name, [&](std::ofstream& out) {
      for (const Example& ex : *split) out << example_to_json(ex) << "\n";
    });
  }
  json meta;
  meta["format_version"] = kBundleFormatVersion;
  meta["zero_shot_dev"] = bundle.zero_shot_dev;
  meta["zero_shot_test"] = bundle.zero_shot_test;
  meta["counts"] = {{"tables", bundle.table_store.size()},
                    {"train", bundle.train.size()},
                    {"dev", bundle.dev.size()},
                    {"test", bundle.test.size()}};
  write_lines("bundle.json", [&](std::ofstream& out) { out << meta.dump(2) << "\n"; });
}

DatasetBundle load_bundle(const std::string& dir, LoadReport* report) {
  namespace fs = std::filesystem;
  std::ifstream meta_in(fs::path(dir) / "bundle.json");
  if (!meta_in) throw FatalIoError("cannot open bundle.json in " + dir);
  json meta;
  try {
    meta_in >> meta;
  } catch (const std::exception& e) {
    throw FatalIoError(std::string("bundle.json is not valid JSON: ") + e.what());
  }
  const int version = meta.value("format_version", -1);
  if (version != kBundleFormatVersion)
    throw FatalIoError("bundle format version mismatch: found " +
                       std::to_string(version) + ", expected " +
                       std::to_string(kBundleFormatVersion));

  DatasetBundle b;
  b.table_store = load_tables((fs::path(dir) / "tables.jsonl").string(), report);
  b.train = load_examples((fs::path(dir) / "train.jsonl").string(), b.table_store, report);
  b.dev = load_examples((fs::path(dir) / "dev.jsonl").string(), b.table_store, report);
  b.test = load_examples((fs::path(dir) / "test.jsonl").string(), b.table_store, report);
  const auto expected = meta.value("counts", json::object());
  if (!expected.empty()) {
    auto check = [&](const char* key, size_t actual) {
      const size_t want = expected.value(key, size_t{0});
      if (want != actual)
        throw FatalIoError(std::string("bundle ") + key + " count mismatch: file has " +
                           std::to_string(actual) + ", bundle.json says " +
                           std::to_string(want) + " (truncated file?)");
    };
    check("tables", b.table_store.size());
    check("train", b.train.size());
    check("dev", b.dev.size());
    check("test", b.test.size());
  }
  if (meta.contains("zero_shot_dev"))
    b.zero_shot_dev = meta["zero_shot_dev"].get<std::set<std::string>>();
  if (meta.contains("zero_shot_test"))
    b.zero_shot_test = meta["zero_shot_test"].get<std::set<std::string>>();
  // The zero-shot invariant is asserted at load.
  for (const Example& ex : b.train) {
    if (b.zero_shot_dev.count(ex.table_id) || b.zero_shot_test.count(ex.table_id))
      throw FatalIoError("zero-shot table " + ex.table_id + " occurs in train");
  }
  return b;
}

}  // namespace mcsql
