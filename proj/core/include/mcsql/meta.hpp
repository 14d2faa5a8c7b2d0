#pragma once

#include <functional>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "mcsql/model.hpp"
#include "mcsql/synthetic.hpp"

namespace mcsql {

/// Support/query sets with provably disjoint table-id sets; the unit of
/// meta-training (N tables with K examples each per set).
struct Episode {
  std::vector<const CompiledExample*> support, query;
  std::set<std::string> support_table_ids, query_table_ids;

  bool disjoint() const;
};

enum class GradientMode : uint8_t { FirstOrder = 0, Full = 1 };

struct MetaConfig {
  double alpha_encoder = 1e-5;
  double alpha_sub = 1e-3;
  double beta_encoder = 1e-5;
  double beta_sub = 1e-3;
  double gamma = 0.3;          // 0.3 WikiSQL / 0.5 ESQL
  int n_way = 4;
  int k_shot = 4;
  int task_count = 10000;      // 10,000 WikiSQL / 2,500 ESQL
  GradientMode gradient_mode = GradientMode::FirstOrder;
  uint64_t seed = 1;

  int eval_every = 0;          // dev LF period in steps; 0 = never
  int patience = 0;            // early-stop patience in evals; 0 = off
  int minibatch_size = 0;      // 0 -> 2*N*K (equal example budget)
  int minibatch_steps = 0;     // 0 -> task_count
  double hvp_epsilon = 1e-4;   // full-mode Hessian-vector probe step

  void validate() const;
  int effective_minibatch_size() const {
    return minibatch_size > 0 ? minibatch_size : 2 * n_way * k_shot;
  }
  int effective_minibatch_steps() const {
    return minibatch_steps > 0 ? minibatch_steps : task_count;
  }
};

/// Examples grouped by table id, the sampler's input.
using TableGroups =
    std::vector<std::pair<std::string, std::vector<const CompiledExample*>>>;

TableGroups group_by_table(const std::vector<CompiledExample>& examples);

/// N-way K-shot episode with disjoint support/query tables, sampled without
/// replacement within the episode. Throws ConfigError naming the deficit
/// when fewer than 2N tables have K examples.
Episode sample_episode(const TableGroups& groups, int n_way, int k_shot,
                       std::mt19937_64& rng);

/// Loss closure: evaluates the loss at the store's current values and
/// accumulates gradients into the store (which meta_step has zeroed).
using LossGradFn = std::function<double()>;

struct MetaStepResult {
  double loss_support = 0.0;
  double loss_query = 0.0;
  double loss_total = 0.0;
  bool ok = true;  // false: non-finite loss, step aborted, params untouched
};

/// One two-stage update: inner plain gradient descent on the support loss
/// (per-group alpha), outer Adam step on gamma*L_S + (1-gamma)*L_{S<-Q}
/// (per-group beta). FirstOrder treats the inner update as constant; Full
/// adds the alpha * H_S * grad_Q correction via a central-difference
/// Hessian-vector product.
MetaStepResult meta_step(ParamStore& params, AdamOptimizer& opt,
                         const LossGradFn& support_loss_grad,
                         const LossGradFn& query_loss_grad, const MetaConfig& cfg);

struct TrainLogRecord {
  int step = 0;
  double loss_support = 0.0;
  double loss_query = 0.0;
  double loss_total = 0.0;
  std::optional<double> dev_lf;
  double wall_ms = 0.0;

  std::string to_json() const;
};

struct TrainResult {
  std::vector<TrainLogRecord> log;
  size_t aborted_steps = 0;
  double best_dev_lf = -1.0;
  int best_dev_step = -1;
  std::vector<double> best_params;  // flattened snapshot at the best dev LF
};

/// Algorithm-1 training: task_count meta steps over sampled episodes,
/// periodic dev LF evaluation, best-dev parameters retained. The log stream
/// (optional) receives one JSON record per step.
TrainResult train_meta(Model& model, const std::vector<CompiledExample>& train,
                       const std::vector<const CompiledExample*>& dev,
                       const MetaConfig& cfg, std::ostream* log_stream = nullptr,
                       const std::vector<Episode>* fixed_episodes = nullptr);

/// Conventional shuffled mini-batch Adam baseline with the same per-group
/// learning rates, logging and checkpoint contract. Consumes the same
/// example budget as train_meta at the default batch size / step count.
TrainResult train_minibatch(Model& model, const std::vector<CompiledExample>& train,
                            const std::vector<const CompiledExample*>& dev,
                            const MetaConfig& cfg, std::ostream* log_stream = nullptr,
                            const std::vector<std::vector<const CompiledExample*>>*
                                fixed_batches = nullptr);

}  // namespace mcsql
