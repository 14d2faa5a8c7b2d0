#include "mcsql/synthetic.hpp"

#include <algorithm>
#include <random>
#include <set>
#include <unordered_set>

#include "mcsql/model.hpp"
#include "mcsql/params.hpp"
#include "mcsql/sql_exec.hpp"
#include "mcsql/text.hpp"
#include "mcsql/tokenize.hpp"

namespace mcsql {

namespace {

// Header names. The first block seeds visible tables, the second is held
// out so zero-shot schemas are mostly unseen words.
const std::vector<std::string> kHeaderPoolVisible = {
    "city", "team", "driver", "season", "points", "rank", "price", "capacity",
    "population", "year", "length", "duration", "artist", "album", "genre",
    "speed", "weight", "score", "venue", "country", "coach", "sponsor",
    "engine", "status", "grade", "budget", "revenue", "attendance", "distance",
    "quantity", "rating", "margin", "volume", "surface", "format", "category",
    "division", "district", "brand", "channel", "station", "publisher",
};
const std::vector<std::string> kHeaderPoolZeroShot = {
    "precinct", "cargo", "tonnage", "frequency", "wingspan", "altitude",
    "parish", "enrollment", "salary", "tenure", "mileage", "acreage",
    "voltage", "latency", "throughput", "garrison", "vintage", "bounty",
    "loom", "quarry", "harvest", "freight", "ledger", "canopy", "molar",
    "eaves", "ballast", "gable",
};

// Text cell values; invented-ish words that never collide with headers.
const std::vector<std::string> kValueWords = {
    "arlon",   "bexley",  "corin",   "dalton",  "elmira",  "fenwick", "galway",
    "harlow",  "ilsa",    "jarrow",  "keswick", "lorne",   "medina",  "norwood",
    "osmund",  "perth",   "quimby",  "rialto",  "selby",   "truro",   "ulverston",
    "verona",  "walsall", "xanthe",  "yarrow",  "zetland", "ancona",  "bantry",
    "cavan",   "derwent", "esher",   "frome",   "girona",  "hexham",  "innis",
    "jedburgh", "kelso",  "leith",   "moffat",  "nairn",   "oban",    "peebles",
    "renfrew", "stirling", "thurso", "uphall",  "vane",    "wick",    "yell",
    "zennor",  "alnwick", "buxton",  "clitheroe", "dursley", "evesham", "filey",
};

struct Rng {
  std::mt19937_64 gen;
  explicit Rng(uint64_t seed) : gen(seed) {}
  int index(int bound) { return rng::next_index(gen, bound); }
  double unit() { return rng::next_unit(gen); }
  template <typename T>
  const T& pick(const std::vector<T>& v) {
    return v[static_cast<size_t>(index(static_cast<int>(v.size())))];
  }
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (int i = static_cast<int>(v.size()) - 1; i > 0; --i)
      std::swap(v[static_cast<size_t>(i)], v[static_cast<size_t>(index(i + 1))]);
  }
};

int sample_weighted(Rng& rng, const std::vector<double>& weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  double x = rng.unit() * total;
  for (size_t i = 0; i < weights.size(); ++i) {
    x -= weights[i];
    if (x <= 0.0) return static_cast<int>(i);
  }
  return static_cast<int>(weights.size()) - 1;
}

std::string render_phrase(std::string tpl, const std::string& col,
                          const std::string& val) {
  auto replace = [&](const std::string& slot, const std::string& with) {
    const size_t pos = tpl.find(slot);
    if (pos != std::string::npos) tpl.replace(pos, slot.size(), with);
  };
  replace("{sel}", col);
  replace("{col}", col);
  replace("{val}", val);
  return tpl;
}

TableData make_table(Rng& rng, const SynthConfig& cfg, int table_index,
                     bool zero_shot) {
  TableData t;
  t.schema.table_id =
      (zero_shot ? "synth_zs_" : "synth_") + std::to_string(table_index);
  const int ncols =
      cfg.headers_min + rng.index(cfg.headers_max - cfg.headers_min + 1);

  std::set<std::string> used;
  for (int c = 0; c < ncols; ++c) {
    std::string name;
    for (int attempt = 0; attempt < 100; ++attempt) {
      const bool from_zero_pool = zero_shot && rng.unit() < 0.75;
      name = from_zero_pool ? rng.pick(kHeaderPoolZeroShot)
                            : rng.pick(kHeaderPoolVisible);
      if (!used.count(name)) break;
    }
    used.insert(name);
    t.schema.headers.push_back(name);
  }

  // Column types: at least one real and one text column.
  for (int c = 0; c < ncols; ++c)
    t.schema.col_types.push_back(rng.unit() < cfg.real_column_fraction
                                     ? ColType::Real
                                     : ColType::Text);
  t.schema.col_types[0] = ColType::Text;
  t.schema.col_types[static_cast<size_t>(ncols - 1)] = ColType::Real;

  const int nrows = cfg.rows_min + rng.index(cfg.rows_max - cfg.rows_min + 1);

  // Per text column: a small value inventory so values repeat across rows.
  std::vector<std::vector<std::string>> inventories(static_cast<size_t>(ncols));
  for (int c = 0; c < ncols; ++c) {
    if (t.schema.col_types[static_cast<size_t>(c)] != ColType::Text) continue;
    const int distinct = 3 + rng.index(std::max(1, nrows / 2));
    std::set<std::string> vals;
    for (int attempt = 0; attempt < 200 && static_cast<int>(vals.size()) < distinct;
         ++attempt) {
      std::string v = rng.pick(kValueWords);
      if (rng.unit() < 0.25) v += " " + rng.pick(kValueWords);
      vals.insert(std::move(v));
    }
    inventories[static_cast<size_t>(c)].assign(vals.begin(), vals.end());
  }

  for (int r = 0; r < nrows; ++r) {
    std::vector<std::string> row;
    for (int c = 0; c < ncols; ++c) {
      if (t.schema.col_types[static_cast<size_t>(c)] == ColType::Text) {
        row.push_back(rng.pick(inventories[static_cast<size_t>(c)]));
      } else {
        if (rng.unit() < 0.5) {
          row.push_back(canonical_number(1 + rng.index(500)));
        } else {
          row.push_back(
              canonical_number((1 + rng.index(500)) + 0.1 * rng.index(10)));
        }
      }
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::vector<std::string> distinct_column_values(const TableData& t, int col) {
  std::set<std::string> seen;
  std::vector<std::string> out;
  for (const auto& row : t.rows)
    if (seen.insert(row[static_cast<size_t>(col)]).second)
      out.push_back(row[static_cast<size_t>(col)]);
  return out;
}

Example make_example(Rng& rng, const SynthConfig& cfg, const TableData& t) {
  const int ncols = t.schema.num_cols();
  std::vector<int> real_cols, text_cols;
  for (int c = 0; c < ncols; ++c)
    (t.schema.col_types[static_cast<size_t>(c)] == ColType::Real ? real_cols
                                                                 : text_cols)
        .push_back(c);

  SQLQuery gold;
  // Aggregation mix; SUM/AVG/MAX/MIN need a real select column.
  const int agg_pick = sample_weighted(rng, {0.55, 0.09, 0.09, 0.12, 0.075, 0.075});
  gold.agg = static_cast<Agg>(agg_pick);
  if (gold.agg == Agg::None || gold.agg == Agg::Count) {
    gold.sel = rng.index(ncols);
  } else {
    gold.sel = real_cols[static_cast<size_t>(rng.index(static_cast<int>(real_cols.size())))];
  }

  const int max_n = std::min(kDefaultMaxConds, ncols);
  std::vector<double> n_weights{0.22, 0.33, 0.25, 0.13, 0.07};
  n_weights.resize(static_cast<size_t>(max_n + 1));
  const int n_conds = sample_weighted(rng, n_weights);

  std::vector<int> cols(static_cast<size_t>(ncols));
  for (int c = 0; c < ncols; ++c) cols[static_cast<size_t>(c)] = c;
  rng.shuffle(cols);

  const SynthTemplates& tp = cfg.templates;
  std::vector<std::string> cond_phrases;
  for (int i = 0; i < n_conds; ++i) {
    const int col = cols[static_cast<size_t>(i)];
    const bool numeric = t.schema.col_types[static_cast<size_t>(col)] == ColType::Real;
    const std::vector<std::string> values = distinct_column_values(t, col);
    Condition c;
    c.col = col;
    c.value = values[static_cast<size_t>(rng.index(static_cast<int>(values.size())))];
    std::string phrase;
    if (numeric) {
      const int op_pick = sample_weighted(rng, {0.5, 0.25, 0.25});
      c.op = static_cast<CondOp>(op_pick);
      const auto& pool = c.op == CondOp::Eq    ? tp.cond_eq_named
                         : c.op == CondOp::Gt ? tp.cond_gt_named
                                              : tp.cond_lt_named;
      phrase = render_phrase(rng.pick(pool), t.schema.headers[static_cast<size_t>(col)],
                             c.value);
    } else {
      c.op = CondOp::Eq;
      const bool unnamed = rng.unit() < cfg.unnamed_condition_prob;
      const auto& pool = unnamed ? tp.cond_eq_unnamed : tp.cond_eq_named;
      phrase = render_phrase(rng.pick(pool), t.schema.headers[static_cast<size_t>(col)],
                             c.value);
    }
    cond_phrases.push_back(std::move(phrase));
    gold.conds.push_back(std::move(c));
  }

  const std::vector<std::string>* sel_pool = nullptr;
  switch (gold.agg) {
    case Agg::None: sel_pool = &tp.select_none; break;
    case Agg::Count: sel_pool = &tp.select_count; break;
    case Agg::Sum: sel_pool = &tp.select_sum; break;
    case Agg::Avg: sel_pool = &tp.select_avg; break;
    case Agg::Max: sel_pool = &tp.select_max; break;
    case Agg::Min: sel_pool = &tp.select_min; break;
  }
  std::string question = render_phrase(
      rng.pick(*sel_pool), t.schema.headers[static_cast<size_t>(gold.sel)], "");
  for (size_t i = 0; i < cond_phrases.size(); ++i) {
    question += (i == 0 ? " " : " and ") + cond_phrases[i];
  }
  question += " ?";

  Example ex;
  ex.question = std::move(question);
  ex.question_tokens = tokenize(ex.question);
  ex.table_id = t.schema.table_id;
  ex.gold = std::move(gold);
  return ex;
}

}  // namespace

void SynthConfig::validate() const {
  if (n_tables < 2) throw ConfigError("SynthConfig: need at least 2 tables");
  if (rows_min < 1 || rows_max < rows_min) throw ConfigError("SynthConfig: bad row range");
  if (headers_min < 2 || headers_max < headers_min)
    throw ConfigError("SynthConfig: need at least 2 headers per table");
  if (examples_per_table < 1) throw ConfigError("SynthConfig: examples_per_table >= 1");
  if (zero_shot_table_fraction <= 0.0 || zero_shot_table_fraction >= 1.0)
    throw ConfigError("SynthConfig: zero_shot_table_fraction must be in (0,1)");
  if (unnamed_condition_prob < 0.0 || unnamed_condition_prob > 1.0)
    throw ConfigError("SynthConfig: unnamed_condition_prob must be in [0,1]");
}

DatasetBundle generate_synthetic(const SynthConfig& config) {
  config.validate();
  Rng rng(config.seed);
  DatasetBundle bundle;

  const int n_zero = std::max(
      1, static_cast<int>(config.n_tables * config.zero_shot_table_fraction + 0.5));
  const int n_visible = config.n_tables - n_zero;
  if (n_visible < 1)
    throw ConfigError("SynthConfig: zero_shot_table_fraction leaves no visible tables");

  std::vector<const TableData*> visible_tables, zero_tables;
  for (int i = 0; i < config.n_tables; ++i) {
    const bool zero_shot = i >= n_visible;
    TableData t = make_table(rng, config, i, zero_shot);
    auto [it, ok] = bundle.table_store.emplace(t.schema.table_id, std::move(t));
    (zero_shot ? zero_tables : visible_tables).push_back(&it->second);
  }

  // The dedupe cap: identical questions within a table would make gold
  // ambiguous, so regeneration is attempted a bounded number of times.
  const int max_attempts = config.examples_per_table * 40;
  auto gen_for_table = [&](const TableData& t) {
    std::vector<Example> out;
    std::unordered_set<std::string> seen;
    int attempts = 0;
    while (static_cast<int>(out.size()) < config.examples_per_table) {
      if (++attempts > max_attempts)
        throw ConfigError(
            "SynthConfig infeasible: could not generate " +
            std::to_string(config.examples_per_table) + " distinct examples for table " +
            t.schema.table_id + " (template capacity exhausted after " +
            std::to_string(max_attempts) + " attempts); lower examples_per_table or " +
            "enlarge the table");
      Example ex = make_example(rng, config, t);
      if (!seen.insert(ex.question).second) continue;
      // Generator contract: gold spans locatable, query valid & executes.
      bool ok = validate_query(ex.gold, t.schema).empty();
      for (size_t i = 0; ok && i < ex.gold.conds.size(); ++i) {
        const Condition& c = ex.gold.conds[i];
        const bool numeric =
            t.schema.col_types[static_cast<size_t>(c.col)] == ColType::Real;
        if (find_value_span(ex.question_tokens, c.value, numeric).first < 0) ok = false;
      }
      if (ok && execute(ex.gold, t).kind == ExecResult::Kind::Error) ok = false;
      if (!ok) continue;
      out.push_back(std::move(ex));
    }
    return out;
  };

  for (const TableData* t : visible_tables) {
    std::vector<Example> exs = gen_for_table(*t);
    const size_t n = exs.size();
    const size_t n_dev = std::max<size_t>(1, n / 10);
    const size_t n_test = std::max<size_t>(1, n / 10);
    for (size_t i = 0; i < n; ++i) {
      if (i < n_dev) bundle.dev.push_back(std::move(exs[i]));
      else if (i < n_dev + n_test) bundle.test.push_back(std::move(exs[i]));
      else bundle.train.push_back(std::move(exs[i]));
    }
  }
  for (const TableData* t : zero_tables) {
    std::vector<Example> exs = gen_for_table(*t);
    for (size_t i = 0; i < exs.size(); ++i) {
      if (i % 2 == 0) bundle.dev.push_back(std::move(exs[i]));
      else bundle.test.push_back(std::move(exs[i]));
    }
  }

  derive_zero_shot(bundle);
  // Zero-shot property asserted at generation.
  for (const Example& ex : bundle.train)
    if (bundle.zero_shot_dev.count(ex.table_id) ||
        bundle.zero_shot_test.count(ex.table_id))
      throw std::logic_error("synthetic generator broke the zero-shot property");
  return bundle;
}

}  // namespace mcsql
