#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "metaemb/dense_net.hpp"
#include "metaemb/losses.hpp"
#include "metaemb/matrix.hpp"

namespace metaemb {

struct TrainConfig {
  std::size_t batch_size = 32;
  std::size_t epochs = 50;
  double learning_rate = 0.05;
  double init_std = 1.0;
  bool init_scaled = false;
  std::uint64_t shuffle_seed = 0;
};

// Plain minibatch SGD. Rows of `inputs`/`targets` are samples; minibatches
// come from a seeded shuffle each epoch and the last short batch is kept.
// Returns the per-epoch mean sample loss (train mode, so dropout included).
// Throws DivergenceError on a non-finite loss.
std::vector<double> train(DenseNet& net, const Matrix& inputs,
                          const Matrix& targets, LossKind kind,
                          const TrainConfig& cfg);

// Max relative discrepancy between analytic parameter gradients and central
// finite differences at the given sample. Eval mode (no dropout).
double grad_check(const DenseNet& net, LossKind kind, std::span<const double> x,
                  std::span<const double> y, double step = 1e-5);

}  // namespace metaemb
