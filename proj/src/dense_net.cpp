#include "metaemb/dense_net.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include "metaemb/errors.hpp"
#include "metaemb/losses.hpp"
#include "metaemb/util.hpp"

namespace metaemb {

const char* to_string(Activation a) {
  switch (a) {
    case Activation::Linear: return "linear";
    case Activation::Tanh: return "tanh";
    case Activation::LogSoftmax: return "log_softmax";
  }
  return "?";
}

Activation parse_activation(std::string_view name) {
  if (name == "linear") return Activation::Linear;
  if (name == "tanh") return Activation::Tanh;
  if (name == "log_softmax") return Activation::LogSoftmax;
  throw ContractError("unknown activation '" + std::string(name) + "'");
}

std::size_t DenseNet::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weights.data.size() + l.bias.size();
  return n;
}

DenseNet init_net(const std::vector<std::size_t>& dims,
                  const std::vector<Activation>& activations,
                  double dropout_rate, std::uint64_t seed,
                  const InitOptions& opts) {
  if (dims.size() < 2)
    throw ContractError("init_net: need at least one layer (two sizes)");
  if (activations.size() != dims.size() - 1)
    throw ContractError("init_net: " + std::to_string(dims.size() - 1) +
                        " layers but " + std::to_string(activations.size()) +
                        " activations");
  for (std::size_t d : dims)
    if (d == 0) throw ContractError("init_net: zero layer size");
  if (dropout_rate < 0.0 || dropout_rate >= 1.0)
    throw ContractError("init_net: dropout rate must be in [0, 1)");
  if (opts.init_std < 0.0)
    throw ContractError("init_net: init_std must be non-negative");

  DenseNet net;
  net.dropout_rate = dropout_rate;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    Layer layer;
    layer.activation = activations[l];
    layer.weights = Matrix(dims[l + 1], dims[l]);
    double std_dev =
        opts.scaled ? 1.0 / std::sqrt(static_cast<double>(dims[l])) : opts.init_std;
    for (double& w : layer.weights.data) w = std_dev * normal(rng);
    layer.bias.assign(dims[l + 1], 0.0);
    net.layers.push_back(std::move(layer));
  }
  return net;
}

namespace {

void apply_activation(Activation act, std::span<const double> z,
                      std::vector<double>& a) {
  a.resize(z.size());
  switch (act) {
    case Activation::Linear:
      std::copy(z.begin(), z.end(), a.begin());
      break;
    case Activation::Tanh:
      for (std::size_t i = 0; i < z.size(); ++i) a[i] = std::tanh(z[i]);
      break;
    case Activation::LogSoftmax: {
      auto q = log_softmax(z);
      std::copy(q.begin(), q.end(), a.begin());
      break;
    }
  }
}

}  // namespace

ForwardTape forward(const DenseNet& net, std::span<const double> x, Mode mode,
                    std::mt19937_64* rng) {
  if (net.layers.empty()) throw ContractError("forward: empty net");
  if (x.size() != net.input_dim())
    throw ContractError("forward: input size " + std::to_string(x.size()) +
                        ", expected " + std::to_string(net.input_dim()));
  if (!all_finite(x)) throw NumericError("forward: non-finite input");

  const bool dropping = mode == Mode::Train && net.dropout_rate > 0.0;
  if (dropping && rng == nullptr)
    throw ContractError("forward: train mode with dropout needs an rng");

  ForwardTape tape;
  const std::size_t num_layers = net.layers.size();
  tape.inputs.reserve(num_layers);
  tape.preacts.reserve(num_layers);
  tape.activations.reserve(num_layers);

  std::vector<double> cur(x.begin(), x.end());
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  for (std::size_t l = 0; l < num_layers; ++l) {
    const Layer& layer = net.layers[l];
    tape.inputs.push_back(cur);

    std::vector<double> z(layer.out_dim());
    for (std::size_t i = 0; i < layer.out_dim(); ++i)
      z[i] = layer.bias[i] + dot(layer.weights.row(i), cur);

    std::vector<double> a;
    apply_activation(layer.activation, z, a);
    tape.preacts.push_back(std::move(z));
    tape.activations.push_back(a);

    const bool hidden = l + 1 < num_layers;
    if (hidden && dropping) {
      std::vector<double> mask(a.size());
      const double keep_scale = 1.0 / (1.0 - net.dropout_rate);
      for (std::size_t i = 0; i < a.size(); ++i) {
        mask[i] = uniform(*rng) < net.dropout_rate ? 0.0 : keep_scale;
        a[i] *= mask[i];
      }
      tape.masks.push_back(std::move(mask));
    }
    cur = std::move(a);
  }
  return tape;
}

std::vector<double> eval_forward(const DenseNet& net, std::span<const double> x) {
  return forward(net, x, Mode::Eval).output();
}

std::vector<double> hidden_activation(const DenseNet& net,
                                      std::span<const double> x) {
  return forward(net, x, Mode::Eval).activations.front();
}

Gradients Gradients::zeros_like(const DenseNet& net) {
  Gradients g;
  g.weights.reserve(net.layers.size());
  g.bias.reserve(net.layers.size());
  for (const auto& l : net.layers) {
    g.weights.emplace_back(l.out_dim(), l.in_dim());
    g.bias.emplace_back(l.out_dim(), 0.0);
  }
  return g;
}

void Gradients::scale(double s) {
  for (auto& w : weights)
    for (double& v : w.data) v *= s;
  for (auto& b : bias)
    for (double& v : b) v *= s;
}

std::vector<double> backward(const DenseNet& net, const ForwardTape& tape,
                             std::span<const double> grad_output,
                             Gradients& grads) {
  const std::size_t num_layers = net.layers.size();
  if (grad_output.size() != net.output_dim())
    throw ContractError("backward: gradient size mismatch");

  std::vector<double> grad(grad_output.begin(), grad_output.end());
  for (std::size_t li = num_layers; li-- > 0;) {
    const Layer& layer = net.layers[li];
    const auto& a = tape.activations[li];
    const auto& u = tape.inputs[li];

    std::vector<double> dz(layer.out_dim());
    switch (layer.activation) {
      case Activation::Linear:
        dz = grad;
        break;
      case Activation::Tanh:
        for (std::size_t i = 0; i < dz.size(); ++i)
          dz[i] = grad[i] * (1.0 - a[i] * a[i]);
        break;
      case Activation::LogSoftmax: {
        double total = 0.0;
        for (double gi : grad) total += gi;
        // softmax(z) = exp(log_softmax(z))
        for (std::size_t i = 0; i < dz.size(); ++i)
          dz[i] = grad[i] - std::exp(a[i]) * total;
        break;
      }
    }

    Matrix& dw = grads.weights[li];
    for (std::size_t i = 0; i < layer.out_dim(); ++i) {
      auto wrow = dw.row(i);
      for (std::size_t j = 0; j < layer.in_dim(); ++j) wrow[j] += dz[i] * u[j];
      grads.bias[li][i] += dz[i];
    }

    std::vector<double> prev(layer.in_dim(), 0.0);
    for (std::size_t i = 0; i < layer.out_dim(); ++i) {
      auto wrow = layer.weights.row(i);
      for (std::size_t j = 0; j < layer.in_dim(); ++j) prev[j] += wrow[j] * dz[i];
    }
    if (li > 0 && !tape.masks.empty()) {
      const auto& mask = tape.masks[li - 1];
      for (std::size_t j = 0; j < prev.size(); ++j) prev[j] *= mask[j];
    }
    grad = std::move(prev);
  }
  return grad;
}

void sgd_step(DenseNet& net, const Gradients& grads, double learning_rate) {
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    auto& layer = net.layers[l];
    const auto& dw = grads.weights[l];
    for (std::size_t k = 0; k < layer.weights.data.size(); ++k)
      layer.weights.data[k] -= learning_rate * dw.data[k];
    for (std::size_t i = 0; i < layer.bias.size(); ++i)
      layer.bias[i] -= learning_rate * grads.bias[l][i];
  }
}

void save_net(const DenseNet& net, std::ostream& out) {
  out << "net layers " << net.layers.size() << " dropout "
      << hex_double(net.dropout_rate) << '\n';
  for (const auto& l : net.layers) {
    out << "layer " << to_string(l.activation) << " in " << l.in_dim()
        << " out " << l.out_dim() << '\n';
    for (std::size_t i = 0; i < l.out_dim(); ++i) {
      auto r = l.weights.row(i);
      out << 'w';
      for (double v : r) out << ' ' << hex_double(v);
      out << '\n';
    }
    out << 'b';
    for (double v : l.bias) out << ' ' << hex_double(v);
    out << '\n';
  }
}

namespace {

std::string next_token(std::istream& in, const char* what) {
  std::string tok;
  if (!(in >> tok))
    throw DataError(std::string("net checkpoint: missing ") + what);
  return tok;
}

void expect_token(std::istream& in, const char* expected) {
  std::string tok = next_token(in, expected);
  if (tok != expected)
    throw DataError(std::string("net checkpoint: expected '") + expected +
                    "', got '" + tok + "'");
}

}  // namespace

DenseNet load_net(std::istream& in) {
  expect_token(in, "net");
  expect_token(in, "layers");
  std::size_t num_layers = parse_size(next_token(in, "layer count"), "net checkpoint");
  expect_token(in, "dropout");
  DenseNet net;
  net.dropout_rate = parse_hex_double(next_token(in, "dropout"), "net checkpoint");
  for (std::size_t l = 0; l < num_layers; ++l) {
    expect_token(in, "layer");
    Layer layer;
    layer.activation = parse_activation(next_token(in, "activation"));
    expect_token(in, "in");
    std::size_t in_dim = parse_size(next_token(in, "in dim"), "net checkpoint");
    expect_token(in, "out");
    std::size_t out_dim = parse_size(next_token(in, "out dim"), "net checkpoint");
    layer.weights = Matrix(out_dim, in_dim);
    for (std::size_t i = 0; i < out_dim; ++i) {
      expect_token(in, "w");
      auto r = layer.weights.row(i);
      for (std::size_t j = 0; j < in_dim; ++j)
        r[j] = parse_hex_double(next_token(in, "weight"), "net checkpoint");
    }
    expect_token(in, "b");
    layer.bias.resize(out_dim);
    for (std::size_t i = 0; i < out_dim; ++i)
      layer.bias[i] = parse_hex_double(next_token(in, "bias"), "net checkpoint");
    net.layers.push_back(std::move(layer));
  }
  return net;
}

}  // namespace metaemb
