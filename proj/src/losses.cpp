#include "metaemb/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "metaemb/errors.hpp"
#include "metaemb/matrix.hpp"

namespace metaemb {

const char* to_string(LossKind kind) {
  switch (kind) {
    case LossKind::MSE: return "mse";
    case LossKind::MAE: return "mae";
    case LossKind::KL: return "kl";
    case LossKind::SCP: return "scp";
  }
  return "?";
}

LossKind parse_loss(std::string_view name) {
  if (name == "mse") return LossKind::MSE;
  if (name == "mae") return LossKind::MAE;
  if (name == "kl") return LossKind::KL;
  if (name == "scp") return LossKind::SCP;
  throw ContractError("unknown loss '" + std::string(name) +
                      "' (expected mse|mae|kl|scp)");
}

namespace {

void check_sizes(std::span<const double> y_hat, std::span<const double> y) {
  if (y_hat.empty() || y_hat.size() != y.size())
    throw ContractError("loss: vector sizes " + std::to_string(y_hat.size()) +
                        " and " + std::to_string(y.size()) + " do not match");
}

double log_sum_exp(std::span<const double> v, double& max_out) {
  double m = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  max_out = m;
  return std::log(s);
}

}  // namespace

std::vector<double> softmax(std::span<const double> v) {
  double m = 0.0;
  double lse = log_sum_exp(v, m);
  std::vector<double> p(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) p[i] = std::exp(v[i] - m - lse);
  return p;
}

std::vector<double> log_softmax(std::span<const double> v) {
  double m = 0.0;
  double lse = log_sum_exp(v, m);
  std::vector<double> q(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) q[i] = v[i] - m - lse;
  return q;
}

double loss_forward(LossKind kind, std::span<const double> y_hat,
                    std::span<const double> y) {
  check_sizes(y_hat, y);
  const std::size_t d = y.size();
  switch (kind) {
    case LossKind::MSE: {
      double s = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        double diff = y_hat[i] - y[i];
        s += diff * diff;
      }
      return s / static_cast<double>(d);
    }
    case LossKind::MAE: {
      double s = 0.0;
      for (std::size_t i = 0; i < d; ++i) s += std::fabs(y_hat[i] - y[i]);
      return s / static_cast<double>(d);
    }
    case LossKind::KL: {
      if (!all_finite(y_hat))
        throw NumericError("kl loss: non-finite log-probabilities");
      double m = 0.0;
      double lse = log_sum_exp(y, m);
      double s = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        double logp = y[i] - m - lse;
        s += std::exp(logp) * (logp - y_hat[i]);
      }
      if (!std::isfinite(s)) throw NumericError("kl loss: non-finite value");
      return s;
    }
    case LossKind::SCP: {
      double nh = l2_norm(y_hat);
      double ny = l2_norm(y);
      if (nh == 0.0 || ny == 0.0)
        throw NumericError("scp loss: cosine undefined for a zero vector");
      double c = dot(y_hat, y) / (nh * ny);
      double r = 1.0 - c;
      return r * r;
    }
  }
  throw ContractError("unreachable loss kind");
}

std::vector<double> loss_backward(LossKind kind, std::span<const double> y_hat,
                                  std::span<const double> y) {
  check_sizes(y_hat, y);
  const std::size_t d = y.size();
  std::vector<double> g(d, 0.0);
  switch (kind) {
    case LossKind::MSE: {
      for (std::size_t i = 0; i < d; ++i)
        g[i] = 2.0 * (y_hat[i] - y[i]) / static_cast<double>(d);
      return g;
    }
    case LossKind::MAE: {
      for (std::size_t i = 0; i < d; ++i) {
        double diff = y_hat[i] - y[i];
        g[i] = (diff > 0.0 ? 1.0 : diff < 0.0 ? -1.0 : 0.0) /
               static_cast<double>(d);
      }
      return g;
    }
    case LossKind::KL: {
      if (!all_finite(y_hat))
        throw NumericError("kl loss: non-finite log-probabilities");
      // d/dy_hat of sum p (log p - y_hat) is -p.
      std::vector<double> p = softmax(y);
      for (std::size_t i = 0; i < d; ++i) g[i] = -p[i];
      return g;
    }
    case LossKind::SCP: {
      double nh = l2_norm(y_hat);
      double ny = l2_norm(y);
      if (nh == 0.0 || ny == 0.0)
        throw NumericError("scp loss: cosine undefined for a zero vector");
      double c = dot(y_hat, y) / (nh * ny);
      double k = -2.0 * (1.0 - c);
      for (std::size_t i = 0; i < d; ++i)
        g[i] = k * (y[i] / (nh * ny) - c * y_hat[i] / (nh * nh));
      return g;
    }
  }
  throw ContractError("unreachable loss kind");
}

}  // namespace metaemb
