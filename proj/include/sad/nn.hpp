#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <vector>

namespace sad {

// Fully connected network (tanh hidden layers, linear output) whose weights
// live in a slice of an external flat parameter vector. Layer l stores a
// row-major (out x in) weight block followed by its bias.
class Mlp {
 public:
  Mlp() = default;
  Mlp(std::vector<int> sizes, std::size_t offset);

  std::size_t offset() const { return offset_; }
  std::size_t param_count() const { return count_; }
  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }

  // Activations of every layer, input first; filled by forward().
  struct Cache {
    std::vector<std::vector<double>> act;
  };

  std::vector<double> forward(std::span<const double> params, std::span<const double> input,
                              Cache* cache = nullptr) const;
  // Accumulates d(loss)/d(params) into grad given d(loss)/d(output).
  void backward(std::span<const double> params, const Cache& cache, std::span<const double> grad_out,
                std::span<double> grad) const;
  // Scaled-normal init; the last layer is multiplied by output_gain.
  void init(std::span<double> params, std::mt19937_64& rng, double output_gain) const;

 private:
  std::vector<int> sizes_;
  std::vector<std::size_t> weight_at_;  // absolute offsets
  std::size_t offset_ = 0;
  std::size_t count_ = 0;
};

}  // namespace sad
