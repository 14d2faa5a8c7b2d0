#include "mcsql/params.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace mcsql {

namespace rng {

uint64_t hash_name(const std::string& name, uint64_t seed) {
  uint64_t h = 1469598103934665603ull ^ seed;
  for (unsigned char c : name) {
    h ^= c;
    h *= 1099511628211ull;
  }
  h ^= h >> 33;
  h *= 0xff51afd7ed558ccdull;
  h ^= h >> 33;
  return h;
}

double next_unit(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

double next_uniform(std::mt19937_64& gen, double a, double b) {
  return a + (b - a) * next_unit(gen);
}

double next_normal(std::mt19937_64& gen) {
  double u1 = next_unit(gen);
  while (u1 <= 0.0) u1 = next_unit(gen);
  const double u2 = next_unit(gen);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

int next_index(std::mt19937_64& gen, int bound) {
  if (bound <= 0) throw std::invalid_argument("next_index: bound must be positive");
  const uint64_t b = static_cast<uint64_t>(bound);
  const uint64_t limit = UINT64_MAX - UINT64_MAX % b;
  uint64_t r = gen();
  while (r >= limit) r = gen();
  return static_cast<int>(r % b);
}

}  // namespace rng

ParamStore::Tensor& ParamStore::create(const std::string& name, int rows, int cols,
                                       ParamGroup group, InitKind init, uint64_t seed) {
  auto it = tensors_.find(name);
  if (it != tensors_.end()) return it->second;

  Tensor t;
  t.value.resize(rows, cols);
  std::mt19937_64 gen(rng::hash_name(name, seed));
  switch (init) {
    case InitKind::UniformRecurrent:
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) t.value(r, c) = rng::next_uniform(gen, -0.08, 0.08);
      break;
    case InitKind::ScaledNormal: {
      const double scale = 1.0 / std::sqrt(static_cast<double>(rows));
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) t.value(r, c) = scale * rng::next_normal(gen);
      break;
    }
    case InitKind::Zeros:
      t.value.setZero();
      break;
    case InitKind::Ones:
      t.value.setOnes();
      break;
  }
  t.grad = Mat::Zero(rows, cols);
  t.adam_m = Mat::Zero(rows, cols);
  t.adam_v = Mat::Zero(rows, cols);
  t.group = group;
  return tensors_.emplace(name, std::move(t)).first->second;
}

ParamStore::Tensor& ParamStore::at(const std::string& name) {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw std::out_of_range("ParamStore: no tensor " + name);
  return it->second;
}

const ParamStore::Tensor& ParamStore::at(const std::string& name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw std::out_of_range("ParamStore: no tensor " + name);
  return it->second;
}

void ParamStore::zero_grad() {
  for (auto& [name, t] : tensors_) t.grad.setZero();
}

size_t ParamStore::param_count() const {
  size_t n = 0;
  for (const auto& [name, t] : tensors_) n += static_cast<size_t>(t.value.size());
  return n;
}

std::vector<double> ParamStore::flatten_values() const {
  std::vector<double> flat;
  flat.reserve(param_count());
  for (const auto& [name, t] : tensors_)
    flat.insert(flat.end(), t.value.data(), t.value.data() + t.value.size());
  return flat;
}

std::vector<double> ParamStore::flatten_grads() const {
  std::vector<double> flat;
  flat.reserve(param_count());
  for (const auto& [name, t] : tensors_)
    flat.insert(flat.end(), t.grad.data(), t.grad.data() + t.grad.size());
  return flat;
}

void ParamStore::load_values(const std::vector<double>& flat) {
  size_t off = 0;
  for (auto& [name, t] : tensors_) {
    if (off + static_cast<size_t>(t.value.size()) > flat.size())
      throw std::invalid_argument("load_values: size mismatch");
    std::copy(flat.begin() + static_cast<long>(off),
              flat.begin() + static_cast<long>(off) + t.value.size(), t.value.data());
    off += static_cast<size_t>(t.value.size());
  }
  if (off != flat.size()) throw std::invalid_argument("load_values: size mismatch");
}

void AdamOptimizer::step(ParamStore& store) {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (auto& [name, t] : store.tensors()) {
    const double lr = lr_[static_cast<int>(t.group)];
    t.adam_m = beta1_ * t.adam_m + (1.0 - beta1_) * t.grad;
    t.adam_v = (beta2_ * t.adam_v.array() + (1.0 - beta2_) * t.grad.array().square()).matrix();
    const Mat m_hat = t.adam_m / bc1;
    const Mat v_hat = t.adam_v / bc2;
    t.value.array() -= lr * m_hat.array() / (v_hat.array().sqrt() + eps_);
  }
}

}  // namespace mcsql
