#include "sad/nn.hpp"

#include <cassert>
#include <cmath>

namespace sad {

Mlp::Mlp(std::vector<int> sizes, std::size_t offset) : sizes_(std::move(sizes)), offset_(offset) {
  std::size_t at = offset_;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    weight_at_.push_back(at);
    at += static_cast<std::size_t>(sizes_[l + 1]) * (sizes_[l] + 1);
  }
  count_ = at - offset_;
}

std::vector<double> Mlp::forward(std::span<const double> params, std::span<const double> input,
                                 Cache* cache) const {
  assert(static_cast<int>(input.size()) == sizes_.front());
  std::vector<double> x(input.begin(), input.end());
  if (cache) {
    cache->act.clear();
    cache->act.push_back(x);
  }
  const std::size_t layers = weight_at_.size();
  for (std::size_t l = 0; l < layers; ++l) {
    const int in = sizes_[l];
    const int out = sizes_[l + 1];
    const double* w = params.data() + weight_at_[l];
    const double* b = w + static_cast<std::size_t>(out) * in;
    std::vector<double> y(static_cast<std::size_t>(out));
    for (int o = 0; o < out; ++o) {
      double acc = b[o];
      const double* row = w + static_cast<std::size_t>(o) * in;
      for (int i = 0; i < in; ++i) acc += row[i] * x[static_cast<std::size_t>(i)];
      y[static_cast<std::size_t>(o)] = l + 1 < layers ? std::tanh(acc) : acc;
    }
    x = std::move(y);
    if (cache) cache->act.push_back(x);
  }
  return x;
}

void Mlp::backward(std::span<const double> params, const Cache& cache, std::span<const double> grad_out,
                   std::span<double> grad) const {
  std::vector<double> delta(grad_out.begin(), grad_out.end());
  for (std::size_t l = weight_at_.size(); l-- > 0;) {
    const int in = sizes_[l];
    const int out = sizes_[l + 1];
    const auto& x = cache.act[l];
    const double* w = params.data() + weight_at_[l];
    double* gw = grad.data() + weight_at_[l];
    double* gb = gw + static_cast<std::size_t>(out) * in;
    std::vector<double> prev(static_cast<std::size_t>(in), 0.0);
    for (int o = 0; o < out; ++o) {
      const double d = delta[static_cast<std::size_t>(o)];
      if (d == 0.0) continue;
      gb[o] += d;
      double* grow = gw + static_cast<std::size_t>(o) * in;
      const double* row = w + static_cast<std::size_t>(o) * in;
      for (int i = 0; i < in; ++i) {
        grow[i] += d * x[static_cast<std::size_t>(i)];
        prev[static_cast<std::size_t>(i)] += d * row[i];
      }
    }
    if (l == 0) break;
    // Through the tanh that produced x.
    for (int i = 0; i < in; ++i) {
      const double a = x[static_cast<std::size_t>(i)];
      prev[static_cast<std::size_t>(i)] *= 1.0 - a * a;
    }
    delta = std::move(prev);
  }
}

void Mlp::init(std::span<double> params, std::mt19937_64& rng, double output_gain) const {
  for (std::size_t l = 0; l < weight_at_.size(); ++l) {
    const int in = sizes_[l];
    const int out = sizes_[l + 1];
    const double gain = l + 1 == weight_at_.size() ? output_gain : std::sqrt(2.0);
    std::normal_distribution<double> normal(0.0, gain / std::sqrt(static_cast<double>(in)));
    double* w = params.data() + weight_at_[l];
    for (std::size_t k = 0; k < static_cast<std::size_t>(out) * in; ++k) w[k] = normal(rng);
    for (int o = 0; o < out; ++o) w[static_cast<std::size_t>(out) * in + o] = 0.0;
  }
}

}  // namespace sad
