#include "metaemb/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "metaemb/errors.hpp"

namespace metaemb {

namespace {

constexpr std::uint64_t kDropoutStream = 0x9e3779b97f4a7c15ULL;

void validate(const DenseNet& net, const Matrix& inputs, const Matrix& targets,
              const TrainConfig& cfg) {
  if (inputs.rows == 0) throw ContractError("train: empty dataset");
  if (inputs.rows != targets.rows)
    throw ContractError("train: " + std::to_string(inputs.rows) +
                        " inputs vs " + std::to_string(targets.rows) +
                        " targets");
  if (inputs.cols != net.input_dim() || targets.cols != net.output_dim())
    throw ContractError("train: sample shape does not match the net");
  if (cfg.batch_size == 0) throw ContractError("train: batch_size must be positive");
  if (cfg.epochs == 0) throw ContractError("train: epochs must be positive");
  if (cfg.learning_rate < 0.0)
    throw ContractError("train: learning rate must be non-negative");
}

}  // namespace

std::vector<double> train(DenseNet& net, const Matrix& inputs,
                          const Matrix& targets, LossKind kind,
                          const TrainConfig& cfg) {
  validate(net, inputs, targets, cfg);

  const std::size_t n = inputs.rows;
  std::mt19937_64 shuffle_rng(cfg.shuffle_seed);
  std::mt19937_64 dropout_rng(cfg.shuffle_seed ^ kDropoutStream);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  // Per-sample losses are summed in index order so the epoch trace does not
  // depend on the batch partition.
  std::vector<double> sample_loss(n, 0.0);
  std::vector<double> trace;
  trace.reserve(cfg.epochs);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t end = std::min(start + cfg.batch_size, n);
      const double inv_batch = 1.0 / static_cast<double>(end - start);
      Gradients grads = Gradients::zeros_like(net);
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t idx = order[k];
        ForwardTape tape = forward(net, inputs.row(idx), Mode::Train, &dropout_rng);
        double loss = loss_forward(kind, tape.output(), targets.row(idx));
        if (!std::isfinite(loss))
          throw DivergenceError(epoch, "training diverged at epoch " +
                                           std::to_string(epoch) +
                                           ": non-finite loss");
        sample_loss[idx] = loss;
        std::vector<double> dout = loss_backward(kind, tape.output(), targets.row(idx));
        for (double& g : dout) g *= inv_batch;
        backward(net, tape, dout, grads);
      }
      sgd_step(net, grads, cfg.learning_rate);
    }
    double epoch_loss =
        std::accumulate(sample_loss.begin(), sample_loss.end(), 0.0) /
        static_cast<double>(n);
    if (!std::isfinite(epoch_loss))
      throw DivergenceError(epoch, "training diverged at epoch " +
                                       std::to_string(epoch) +
                                       ": non-finite epoch loss");
    trace.push_back(epoch_loss);
  }
  return trace;
}

double grad_check(const DenseNet& net, LossKind kind, std::span<const double> x,
                  std::span<const double> y, double step) {
  DenseNet work = net;

  ForwardTape tape = forward(work, x, Mode::Eval);
  std::vector<double> dout = loss_backward(kind, tape.output(), y);
  Gradients analytic = Gradients::zeros_like(work);
  backward(work, tape, dout, analytic);

  auto loss_at = [&]() {
    return loss_forward(kind, eval_forward(work, x), y);
  };

  double max_rel = 0.0;
  auto probe = [&](double& param, double analytic_grad) {
    const double saved = param;
    param = saved + step;
    const double up = loss_at();
    param = saved - step;
    const double down = loss_at();
    param = saved;
    const double numeric = (up - down) / (2.0 * step);
    const double denom = std::max(1e-4, std::fabs(analytic_grad) + std::fabs(numeric));
    max_rel = std::max(max_rel, std::fabs(analytic_grad - numeric) / denom);
  };

  for (std::size_t l = 0; l < work.layers.size(); ++l) {
    auto& layer = work.layers[l];
    for (std::size_t k = 0; k < layer.weights.data.size(); ++k)
      probe(layer.weights.data[k], analytic.weights[l].data[k]);
    for (std::size_t i = 0; i < layer.bias.size(); ++i)
      probe(layer.bias[i], analytic.bias[l][i]);
  }
  return max_rel;
}

}  // namespace metaemb
