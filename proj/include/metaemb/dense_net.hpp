#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "metaemb/matrix.hpp"

namespace metaemb {

enum class Activation { Linear, Tanh, LogSoftmax };

const char* to_string(Activation a);
Activation parse_activation(std::string_view name);

enum class Mode { Train, Eval };

struct Layer {
  Matrix weights;  // out x in
  std::vector<double> bias;
  Activation activation = Activation::Linear;

  std::size_t in_dim() const { return weights.cols; }
  std::size_t out_dim() const { return weights.rows; }
};

// Fully connected net. Dropout (inverted: survivors scaled by 1/(1-p)) is
// applied to hidden activations in train mode only.
struct DenseNet {
  std::vector<Layer> layers;
  double dropout_rate = 0.0;

  std::size_t input_dim() const { return layers.front().in_dim(); }
  std::size_t output_dim() const { return layers.back().out_dim(); }
  std::size_t parameter_count() const;
};

struct InitOptions {
  double init_std = 1.0;
  bool scaled = false;  // use std = 1/sqrt(fan_in) instead of init_std
};

// Weights drawn from Normal(0, std^2), biases zero. Same seed, same net.
DenseNet init_net(const std::vector<std::size_t>& dims,
                  const std::vector<Activation>& activations,
                  double dropout_rate, std::uint64_t seed,
                  const InitOptions& opts = {});

// Per-layer intermediates kept for the backward pass.
struct ForwardTape {
  std::vector<std::vector<double>> inputs;       // what each layer consumed
  std::vector<std::vector<double>> preacts;      // z = Wx + b
  std::vector<std::vector<double>> activations;  // act(z), before dropout
  std::vector<std::vector<double>> masks;        // hidden dropout scales
  const std::vector<double>& output() const { return activations.back(); }
};

// Train mode needs `rng` for the dropout draws; eval mode ignores it.
ForwardTape forward(const DenseNet& net, std::span<const double> x, Mode mode,
                    std::mt19937_64* rng = nullptr);

// Output-only eval forward.
std::vector<double> eval_forward(const DenseNet& net, std::span<const double> x);

// Eval-mode activation of the first layer (the meta-embedding hook).
std::vector<double> hidden_activation(const DenseNet& net,
                                      std::span<const double> x);

struct Gradients {
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> bias;

  static Gradients zeros_like(const DenseNet& net);
  void scale(double s);
};

// Accumulates parameter gradients into `grads` and returns dLoss/dInput.
std::vector<double> backward(const DenseNet& net, const ForwardTape& tape,
                             std::span<const double> grad_output,
                             Gradients& grads);

void sgd_step(DenseNet& net, const Gradients& grads, double learning_rate);

// Exact text round-trip (hex floats).
void save_net(const DenseNet& net, std::ostream& out);
DenseNet load_net(std::istream& in);

}  // namespace metaemb
