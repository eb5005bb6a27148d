#pragma once

#include <span>
#include <string_view>
#include <vector>

namespace metaemb {

// MSE and MAE average over elements; KL treats the target through a softmax
// and the prediction as log-probabilities; SCP is (1 - cos(y_hat, y))^2.
enum class LossKind { MSE, MAE, KL, SCP };

const char* to_string(LossKind kind);
LossKind parse_loss(std::string_view name);

double loss_forward(LossKind kind, std::span<const double> y_hat,
                    std::span<const double> y);

// Gradient of loss_forward with respect to y_hat.
std::vector<double> loss_backward(LossKind kind, std::span<const double> y_hat,
                                  std::span<const double> y);

// Numerically stable helpers, exposed for reuse and tests.
std::vector<double> softmax(std::span<const double> v);
std::vector<double> log_softmax(std::span<const double> v);

}  // namespace metaemb
