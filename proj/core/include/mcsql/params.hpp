#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace mcsql {

using Mat = Eigen::MatrixXd;

/// Learning-rate group of a tensor: the contextual encoder gets the
/// "BERT-like" rate, everything else the sub-module rate.
enum class ParamGroup : uint8_t { Encoder = 0, Sub = 1 };
inline constexpr int kNumParamGroups = 2;

enum class InitKind : uint8_t { UniformRecurrent, ScaledNormal, Zeros, Ones };

/// Named parameter tensors with gradient buffers and Adam state.
/// Iteration order is the sorted tensor name, so walks are deterministic.
class ParamStore {
 public:
  struct Tensor {
    Mat value;
    Mat grad;
    Mat adam_m;
    Mat adam_v;
    ParamGroup group = ParamGroup::Sub;
  };

  /// Creates (or returns) a tensor. Initialization is a pure function of
  /// (name, seed, kind), so the same tensor gets identical values no matter
  /// what else the model registered.
  Tensor& create(const std::string& name, int rows, int cols, ParamGroup group,
                 InitKind init, uint64_t seed);

  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  bool contains(const std::string& name) const { return tensors_.count(name) > 0; }

  void zero_grad();
  size_t param_count() const;
  size_t tensor_count() const { return tensors_.size(); }

  std::map<std::string, Tensor>& tensors() { return tensors_; }
  const std::map<std::string, Tensor>& tensors() const { return tensors_; }

  /// Flat copies of all values / grads (sorted-name order), and the inverse.
  std::vector<double> flatten_values() const;
  std::vector<double> flatten_grads() const;
  void load_values(const std::vector<double>& flat);

 private:
  std::map<std::string, Tensor> tensors_;
};

/// Adam with bias correction, one learning rate per parameter group.
/// Moments live inside the ParamStore tensors.
class AdamOptimizer {
 public:
  AdamOptimizer(double lr_encoder, double lr_sub, double beta1 = 0.9,
                double beta2 = 0.999, double eps = 1e-8)
      : lr_{lr_encoder, lr_sub}, beta1_(beta1), beta2_(beta2), eps_(eps) {}

  /// One update from the gradients currently in the store.
  void step(ParamStore& store);

  int64_t t() const { return t_; }

 private:
  double lr_[kNumParamGroups];
  double beta1_, beta2_, eps_;
  int64_t t_ = 0;
};

/// Deterministic scalar RNG helpers (shared across the project so results
/// do not depend on libstdc++ distribution internals).
namespace rng {

uint64_t hash_name(const std::string& name, uint64_t seed);
double next_unit(std::mt19937_64& gen);                    // [0, 1)
double next_uniform(std::mt19937_64& gen, double a, double b);
double next_normal(std::mt19937_64& gen);                  // Box-Muller
int next_index(std::mt19937_64& gen, int bound);           // [0, bound)

}  // namespace rng

}  // namespace mcsql
