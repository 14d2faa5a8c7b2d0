#include "mcsql/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>
#include <tuple>

#include "mcsql/log.hpp"
#include "mcsql/text.hpp"

namespace mcsql {

namespace {

using CondKey = std::tuple<int, int, std::string>;

std::vector<CondKey> cond_multiset(const SQLQuery& q) {
  std::vector<CondKey> keys;
  keys.reserve(q.conds.size());
  for (const Condition& c : q.conds)
    keys.emplace_back(c.col, static_cast<int>(c.op), normalize_text(c.value));
  std::sort(keys.begin(), keys.end());
  return keys;
}

}  // namespace

bool lf_match(const SQLQuery& pred, const SQLQuery& gold) {
  return pred.sel == gold.sel && pred.agg == gold.agg &&
         cond_multiset(pred) == cond_multiset(gold);
}

bool ex_match(const SQLQuery& pred, const SQLQuery& gold, const TableData& table) {
  return exec_result_equal(execute(pred, table), execute(gold, table));
}

namespace {

void score_example(const Model& model, const CompiledExample& ce, EvalSlice& slice,
                   const EvalOptions& opts) {
  const SQLQuery& gold = ce.example.gold;
  ++slice.count;

  const SQLQuery pred = model.decode(ce);
  if (lf_match(pred, gold)) ++slice.lf;
  if (ex_match(pred, gold, *ce.table)) ++slice.ex;

  // Sub-task scoring. WC compares the predicted top-|gold columns| set; WO
  // and WV require every condition right; zero-condition examples count as
  // correct for WC/WO/WV.
  int sc_pred, sa_pred, wn_pred;
  std::vector<int> wc_pred, wo_pred;
  std::vector<std::string> wv_pred;
  if (opts.teacher_forced_subtasks) {
    SubtaskPrediction sp = model.subtask_predict(ce);
    sc_pred = sp.sc;
    sa_pred = sp.sa;
    wn_pred = sp.wn;
    wc_pred = sp.wc;
    wo_pred = sp.wo;
    wv_pred = sp.wv_values;
  } else {
    sc_pred = pred.sel;
    sa_pred = static_cast<int>(pred.agg);
    wn_pred = static_cast<int>(pred.conds.size());
    for (const Condition& c : pred.conds) {
      wc_pred.push_back(c.col);
      wo_pred.push_back(static_cast<int>(c.op));
      wv_pred.push_back(c.value);
    }
  }

  if (sc_pred == gold.sel) ++slice.sc;
  if (sa_pred == static_cast<int>(gold.agg)) ++slice.sa;
  if (wn_pred == static_cast<int>(gold.conds.size())) ++slice.wn;

  std::set<int> gold_cols, pred_cols(wc_pred.begin(), wc_pred.end());
  for (const Condition& c : gold.conds) gold_cols.insert(c.col);
  if (gold_cols == pred_cols) ++slice.wc;

  bool wo_ok, wv_ok;
  if (opts.teacher_forced_subtasks) {
    wo_ok = wo_pred.size() == gold.conds.size();
    wv_ok = wv_pred.size() == gold.conds.size();
    for (size_t i = 0; i < gold.conds.size() && wo_ok; ++i)
      if (wo_pred[i] != static_cast<int>(gold.conds[i].op)) wo_ok = false;
    for (size_t i = 0; i < gold.conds.size() && wv_ok; ++i)
      if (normalize_text(wv_pred[i]) != normalize_text(gold.conds[i].value))
        wv_ok = false;
  } else {
    // Pipeline mode: compare as multisets of (col, op) / (col, value).
    auto key2 = [](int col, const std::string& s) { return std::make_pair(col, s); };
    std::multiset<std::pair<int, int>> gop, pop;
    std::multiset<std::pair<int, std::string>> gval, pval;
    for (const Condition& c : gold.conds) {
      gop.emplace(c.col, static_cast<int>(c.op));
      gval.insert(key2(c.col, normalize_text(c.value)));
    }
    for (size_t i = 0; i < wc_pred.size(); ++i) {
      pop.emplace(wc_pred[i], wo_pred[i]);
      pval.insert(key2(wc_pred[i], normalize_text(wv_pred[i])));
    }
    wo_ok = gop == pop;
    wv_ok = gval == pval;
  }
  if (wo_ok) ++slice.wo;
  if (wv_ok) ++slice.wv;
}

}  // namespace

EvalReport evaluate(const Model& model, const std::vector<Example>& examples,
                    const std::map<std::string, TableData>& table_store,
                    const std::set<std::string>& zero_shot_table_ids,
                    const EvalOptions& opts) {
  EvalReport report;
  report.teacher_forced_subtasks = opts.teacher_forced_subtasks;
  for (const Example& ex : examples) {
    auto it = table_store.find(ex.table_id);
    const bool zero_shot = zero_shot_table_ids.count(ex.table_id) > 0;
    if (it == table_store.end()) {
      MCSQL_WARN("evaluate: missing table id " + ex.table_id);
      ++report.missing_table;
      ++report.full.count;
      if (zero_shot) ++report.zero_shot.count;
      continue;
    }
    CompiledExample ce = model.compile(ex, it->second);
    score_example(model, ce, report.full, opts);
    if (zero_shot) score_example(model, ce, report.zero_shot, opts);
  }
  return report;
}

double lf_accuracy(const Model& model,
                   const std::vector<const CompiledExample*>& examples) {
  if (examples.empty()) return 0.0;
  size_t hits = 0;
  for (const CompiledExample* ce : examples)
    if (lf_match(model.decode(*ce), ce->example.gold)) ++hits;
  return static_cast<double>(hits) / static_cast<double>(examples.size());
}

namespace {

std::string pct(double rate) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%5.1f", rate * 100.0);
  return buf;
}

void grid_row(std::ostringstream& os, const char* label, const EvalSlice& s) {
  os << label << "  " << pct(s.rate(s.sc)) << " " << pct(s.rate(s.sa)) << " "
     << pct(s.rate(s.wn)) << " " << pct(s.rate(s.wc)) << " " << pct(s.rate(s.wo))
     << " " << pct(s.rate(s.wv)) << " " << pct(s.lf_rate()) << " " << pct(s.ex_rate())
     << "   n=" << s.count << "\n";
}

}  // namespace

std::string EvalReport::render_grid() const {
  std::ostringstream os;
  os << "model: " << (ablation_tag.empty() ? "full" : ablation_tag)
     << (teacher_forced_subtasks ? "  (sub-tasks: teacher-forced)"
                                 : "  (sub-tasks: pipeline)")
     << "\n";
  os << "slice        SC    SA    WN    WC    WO    WV    LF    EX\n";
  grid_row(os, "full     ", full);
  grid_row(os, "zero-shot", zero_shot);
  if (missing_table > 0) os << "missing tables: " << missing_table << "\n";
  return os.str();
}

std::string EvalReport::to_jsonl() const {
  auto line = [&](const char* name, const EvalSlice& s) {
    std::ostringstream os;
    os << "{\"slice\":\"" << name << "\",\"model\":\""
       << (ablation_tag.empty() ? "full" : ablation_tag) << "\",\"count\":" << s.count
       << ",\"sc\":" << s.rate(s.sc) << ",\"sa\":" << s.rate(s.sa)
       << ",\"wn\":" << s.rate(s.wn) << ",\"wc\":" << s.rate(s.wc)
       << ",\"wo\":" << s.rate(s.wo) << ",\"wv\":" << s.rate(s.wv)
       << ",\"lf\":" << s.lf_rate() << ",\"ex\":" << s.ex_rate() << "}";
    return os.str();
  };
  return line("full", full) + "\n" + line("zero_shot", zero_shot) + "\n";
}

}  // namespace mcsql
