#include "mcsql/meta.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "mcsql/eval.hpp"
#include "mcsql/log.hpp"

namespace mcsql {

bool Episode::disjoint() const {
  for (const auto& id : support_table_ids)
    if (query_table_ids.count(id)) return false;
  return true;
}

void MetaConfig::validate() const {
  if (gamma < 0.0 || gamma > 1.0) throw ConfigError("MetaConfig: gamma must be in [0,1]");
  if (n_way < 1 || k_shot < 1) throw ConfigError("MetaConfig: N and K must be >= 1");
  if (alpha_encoder <= 0.0 || alpha_sub <= 0.0 || beta_encoder <= 0.0 || beta_sub <= 0.0)
    throw ConfigError("MetaConfig: learning rates must be > 0");
  if (task_count < 0) throw ConfigError("MetaConfig: task_count must be >= 0");
}

TableGroups group_by_table(const std::vector<CompiledExample>& examples) {
  TableGroups groups;
  for (const CompiledExample& ex : examples) {
    const std::string& id = ex.example.table_id;
    auto it = std::find_if(groups.begin(), groups.end(),
                           [&](const auto& g) { return g.first == id; });
    if (it == groups.end()) {
      groups.emplace_back(id, std::vector<const CompiledExample*>{});
      it = groups.end() - 1;
    }
    it->second.push_back(&ex);
  }
  return groups;
}

Episode sample_episode(const TableGroups& groups, int n_way, int k_shot,
                       std::mt19937_64& rng) {
  std::vector<int> eligible;
  for (int i = 0; i < static_cast<int>(groups.size()); ++i)
    if (static_cast<int>(groups[static_cast<size_t>(i)].second.size()) >= k_shot)
      eligible.push_back(i);
  if (static_cast<int>(eligible.size()) < 2 * n_way) {
    throw ConfigError(
        "sample_episode: need " + std::to_string(2 * n_way) + " tables with >= " +
        std::to_string(k_shot) + " examples, dataset has " +
        std::to_string(eligible.size()) + " (deficit " +
        std::to_string(2 * n_way - static_cast<int>(eligible.size())) + ")");
  }
  // Partial Fisher-Yates: the first 2N entries become support then query.
  for (int i = 0; i < 2 * n_way; ++i) {
    const int j = i + rng::next_index(rng, static_cast<int>(eligible.size()) - i);
    std::swap(eligible[static_cast<size_t>(i)], eligible[static_cast<size_t>(j)]);
  }

  Episode ep;
  auto draw = [&](int group_idx, std::vector<const CompiledExample*>& out) {
    const auto& pool = groups[static_cast<size_t>(group_idx)].second;
    std::vector<int> idx(pool.size());
    for (size_t i = 0; i < pool.size(); ++i) idx[i] = static_cast<int>(i);
    for (int i = 0; i < k_shot; ++i) {
      const int j = i + rng::next_index(rng, static_cast<int>(idx.size()) - i);
      std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(j)]);
      out.push_back(pool[static_cast<size_t>(idx[static_cast<size_t>(i)])]);
    }
  };
  for (int i = 0; i < n_way; ++i) {
    const int gi = eligible[static_cast<size_t>(i)];
    ep.support_table_ids.insert(groups[static_cast<size_t>(gi)].first);
    draw(gi, ep.support);
  }
  for (int i = n_way; i < 2 * n_way; ++i) {
    const int gi = eligible[static_cast<size_t>(i)];
    ep.query_table_ids.insert(groups[static_cast<size_t>(gi)].first);
    draw(gi, ep.query);
  }
  if (!ep.disjoint())
    throw std::logic_error("sample_episode: support/query tables overlap");
  return ep;
}

namespace {

struct Snapshot {
  std::vector<Mat> values;
  static Snapshot of_values(const ParamStore& store) {
    Snapshot s;
    for (const auto& [name, t] : store.tensors()) s.values.push_back(t.value);
    return s;
  }
  static Snapshot of_grads(const ParamStore& store) {
    Snapshot s;
    for (const auto& [name, t] : store.tensors()) s.values.push_back(t.grad);
    return s;
  }
  void restore_values(ParamStore& store) const {
    size_t i = 0;
    for (auto& [name, t] : store.tensors()) t.value = values[i++];
  }
  bool finite() const {
    for (const Mat& m : values)
      if (!m.allFinite()) return false;
    return true;
  }
  double squared_norm() const {
    double s = 0.0;
    for (const Mat& m : values) s += m.squaredNorm();
    return s;
  }
};

double group_rate(const MetaConfig& cfg, ParamGroup g, bool inner) {
  if (inner) return g == ParamGroup::Encoder ? cfg.alpha_encoder : cfg.alpha_sub;
  return g == ParamGroup::Encoder ? cfg.beta_encoder : cfg.beta_sub;
}

}  // namespace

MetaStepResult meta_step(ParamStore& params, AdamOptimizer& opt,
                         const LossGradFn& support_loss_grad,
                         const LossGradFn& query_loss_grad, const MetaConfig& cfg) {
  MetaStepResult res;

  // (1) support loss and gradient at theta
  params.zero_grad();
  res.loss_support = support_loss_grad();
  Snapshot g_s = Snapshot::of_grads(params);
  if (!std::isfinite(res.loss_support) || !g_s.finite()) {
    res.ok = false;
    return res;
  }

  // (2) inner plain gradient-descent step: phi = theta - alpha . g_s
  Snapshot theta = Snapshot::of_values(params);
  {
    size_t i = 0;
    for (auto& [name, t] : params.tensors())
      t.value -= group_rate(cfg, t.group, true) * g_s.values[i++];
  }

  // (3) query loss and gradient at phi
  params.zero_grad();
  res.loss_query = query_loss_grad();
  Snapshot g_q = Snapshot::of_grads(params);
  theta.restore_values(params);
  if (!std::isfinite(res.loss_query) || !g_q.finite()) {
    res.ok = false;
    return res;
  }

  res.loss_total = cfg.gamma * res.loss_support + (1.0 - cfg.gamma) * res.loss_query;

  // (4) full mode: d/dtheta L_Q(phi) = (I - alpha H_S) g_q. The Hessian-
  // vector product H_S g_q comes from a central difference of the support
  // gradient along g_q.
  std::optional<Snapshot> hvp;
  const bool inner_rates_zero = cfg.alpha_encoder == 0.0 && cfg.alpha_sub == 0.0;
  if (cfg.gradient_mode == GradientMode::Full && !inner_rates_zero) {
    const double norm = std::sqrt(g_q.squared_norm());
    if (norm > 0.0) {
      const double eps = cfg.hvp_epsilon;
      auto probe = [&](double sign) {
        size_t i = 0;
        for (auto& [name, t] : params.tensors()) {
          t.value = theta.values[i] + sign * (eps / norm) * g_q.values[i];
          ++i;
        }
        params.zero_grad();
        support_loss_grad();
        return Snapshot::of_grads(params);
      };
      Snapshot g_plus = probe(+1.0);
      Snapshot g_minus = probe(-1.0);
      theta.restore_values(params);
      Snapshot h;
      h.values.reserve(g_plus.values.size());
      for (size_t i = 0; i < g_plus.values.size(); ++i)
        h.values.push_back((g_plus.values[i] - g_minus.values[i]) *
                           (norm / (2.0 * eps)));
      if (!h.finite()) {
        res.ok = false;
        return res;
      }
      hvp = std::move(h);
    }
  }

  // (5) outer Adam step on gamma g_s + (1-gamma) (g_q - alpha H g_q)
  {
    size_t i = 0;
    for (auto& [name, t] : params.tensors()) {
      Mat outer = cfg.gamma * g_s.values[i] + (1.0 - cfg.gamma) * g_q.values[i];
      if (hvp) {
        outer -= (1.0 - cfg.gamma) * group_rate(cfg, t.group, true) * hvp->values[i];
      }
      t.grad = std::move(outer);
      ++i;
    }
  }
  opt.step(params);
  return res;
}

std::string TrainLogRecord::to_json() const {
  std::ostringstream os;
  os << "{\"step\":" << step << ",\"loss_support\":" << loss_support
     << ",\"loss_query\":" << loss_query << ",\"loss_total\":" << loss_total;
  if (dev_lf) os << ",\"dev_lf\":" << *dev_lf;
  os << ",\"wall_ms\":" << wall_ms << "}";
  return os.str();
}

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

/// Shared training-loop shell: periodic dev eval, best-checkpoint
/// retention, JSONL logging, early stopping.
struct LoopShell {
  Model& model;
  const std::vector<const CompiledExample*>& dev;
  const MetaConfig& cfg;
  std::ostream* log_stream;
  TrainResult result;
  int evals_since_best = 0;

  bool record(int step, double ls, double lq, double lt, double wall_ms, bool eval_now) {
    TrainLogRecord rec;
    rec.step = step;
    rec.loss_support = ls;
    rec.loss_query = lq;
    rec.loss_total = lt;
    rec.wall_ms = wall_ms;
    bool stop = false;
    if (eval_now && !dev.empty()) {
      const double lf = lf_accuracy(model, dev);
      rec.dev_lf = lf;
      if (lf > result.best_dev_lf) {
        result.best_dev_lf = lf;
        result.best_dev_step = step;
        result.best_params = model.params().flatten_values();
        evals_since_best = 0;
      } else if (cfg.patience > 0 && ++evals_since_best >= cfg.patience) {
        stop = true;
      }
    }
    if (log_stream) *log_stream << rec.to_json() << "\n";
    result.log.push_back(std::move(rec));
    return stop;
  }

  void finish(int total_steps) {
    // A final eval so short runs still retain a best checkpoint.
    if (!dev.empty() &&
        (result.best_dev_step < 0 ||
         (cfg.eval_every > 0 && total_steps % cfg.eval_every != 0))) {
      const double lf = lf_accuracy(model, dev);
      if (lf > result.best_dev_lf) {
        result.best_dev_lf = lf;
        result.best_dev_step = total_steps;
        result.best_params = model.params().flatten_values();
      }
    }
    if (result.best_params.empty())
      result.best_params = model.params().flatten_values();
  }
};

}  // namespace

TrainResult train_meta(Model& model, const std::vector<CompiledExample>& train,
                       const std::vector<const CompiledExample*>& dev,
                       const MetaConfig& cfg, std::ostream* log_stream,
                       const std::vector<Episode>* fixed_episodes) {
  TableGroups groups = group_by_table(train);
  std::mt19937_64 rng(cfg.seed);
  AdamOptimizer opt(cfg.beta_encoder, cfg.beta_sub);
  LoopShell shell{model, dev, cfg, log_stream, {}, 0};

  const int steps = fixed_episodes ? static_cast<int>(fixed_episodes->size())
                                   : cfg.task_count;
  for (int step = 1; step <= steps; ++step) {
    const auto t0 = Clock::now();
    Episode ep = fixed_episodes ? (*fixed_episodes)[static_cast<size_t>(step - 1)]
                                : sample_episode(groups, cfg.n_way, cfg.k_shot, rng);
    if (!ep.disjoint())  // asserted inside the trainer, not only in tests
      throw std::logic_error("train_meta: episode with overlapping tables");
    auto support_fn = [&]() { return model.batch_loss_and_grad(ep.support); };
    auto query_fn = [&]() { return model.batch_loss_and_grad(ep.query); };
    MetaStepResult r = meta_step(model.params(), opt, support_fn, query_fn, cfg);
    if (!r.ok) {
      ++shell.result.aborted_steps;
      MCSQL_WARN("meta_step " + std::to_string(step) +
                 " aborted on non-finite loss; continuing");
      continue;
    }
    const bool eval_now = cfg.eval_every > 0 && step % cfg.eval_every == 0;
    if (shell.record(step, r.loss_support, r.loss_query, r.loss_total, ms_since(t0),
                     eval_now))
      break;
  }
  shell.finish(steps);
  return shell.result;
}

TrainResult train_minibatch(
    Model& model, const std::vector<CompiledExample>& train,
    const std::vector<const CompiledExample*>& dev, const MetaConfig& cfg,
    std::ostream* log_stream,
    const std::vector<std::vector<const CompiledExample*>>* fixed_batches) {
  std::mt19937_64 rng(cfg.seed);
  AdamOptimizer opt(cfg.beta_encoder, cfg.beta_sub);
  LoopShell shell{model, dev, cfg, log_stream, {}, 0};

  std::vector<const CompiledExample*> order;
  order.reserve(train.size());
  for (const CompiledExample& ex : train) order.push_back(&ex);

  const int batch_size = cfg.effective_minibatch_size();
  const int steps = fixed_batches ? static_cast<int>(fixed_batches->size())
                                  : cfg.effective_minibatch_steps();
  size_t cursor = order.size();  // triggers an initial shuffle

  for (int step = 1; step <= steps; ++step) {
    const auto t0 = Clock::now();
    std::vector<const CompiledExample*> batch;
    if (fixed_batches) {
      batch = (*fixed_batches)[static_cast<size_t>(step - 1)];
    } else {
      for (int i = 0; i < batch_size; ++i) {
        if (cursor >= order.size()) {
          for (int j = static_cast<int>(order.size()) - 1; j > 0; --j)
            std::swap(order[static_cast<size_t>(j)],
                      order[static_cast<size_t>(rng::next_index(rng, j + 1))]);
          cursor = 0;
        }
        batch.push_back(order[cursor++]);
      }
    }
    model.params().zero_grad();
    const double loss = model.batch_loss_and_grad(batch);
    if (!std::isfinite(loss)) {
      ++shell.result.aborted_steps;
      MCSQL_WARN("minibatch step " + std::to_string(step) +
                 " aborted on non-finite loss; continuing");
      continue;
    }
    opt.step(model.params());
    const bool eval_now = cfg.eval_every > 0 && step % cfg.eval_every == 0;
    if (shell.record(step, loss, 0.0, loss, ms_since(t0), eval_now)) break;
  }
  shell.finish(steps);
  return shell.result;
}

}  // namespace mcsql
