#include "tabsense/models/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tabsense/core/error.hpp"

namespace tabsense::models {

size_t NetworkState::ParameterCount() const {
  size_t count = 0;
  for (const auto& layer : layers) {
    count += static_cast<size_t>(layer.weight.size() + layer.bias.size());
  }
  return count;
}

namespace {

DenseLayer InitDense(int fan_in, int fan_out, Rng& rng) {
  DenseLayer layer;
  layer.weight.resize(fan_in, fan_out);
  const double limit = std::sqrt(6.0 / fan_in);
  for (Eigen::Index i = 0; i < layer.weight.size(); ++i) {
    layer.weight.data()[i] = rng.Uniform(-limit, limit);
  }
  layer.bias = Vector::Zero(fan_out);
  return layer;
}

Matrix Relu(const Matrix& z) { return z.cwiseMax(0.0); }

Matrix ReluMask(const Matrix& z) { return (z.array() > 0.0).cast<double>().matrix(); }

// Fixed summation order per output entry, so a row's result does not depend
// on how many rows share the batch.
Matrix Affine(const Matrix& a, const DenseLayer& layer) {
  Matrix z(a.rows(), layer.weight.cols());
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    z.row(r) = layer.bias.transpose();
    for (Eigen::Index k = 0; k < a.cols(); ++k) z.row(r) += a(r, k) * layer.weight.row(k);
  }
  return z;
}

Matrix DropoutMask(Eigen::Index rows, Eigen::Index cols, double rate, Rng* rng) {
  if (rng == nullptr || rate <= 0.0) return Matrix::Ones(rows, cols);
  Matrix mask(rows, cols);
  const double keep = 1.0 / (1.0 - rate);
  for (Eigen::Index i = 0; i < mask.size(); ++i) {
    mask.data()[i] = rng->Uniform() >= rate ? keep : 0.0;
  }
  return mask;
}

void AccumulateDense(const Matrix& input, const Matrix& delta, DenseLayer& grad) {
  grad.weight = input.transpose() * delta;
  grad.bias = delta.colwise().sum().transpose();
}

}  // namespace

Matrix Softmax(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double m = logits.row(r).maxCoeff();
    double total = 0.0;
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
      out(r, c) = std::exp(logits(r, c) - m);
      total += out(r, c);
    }
    out.row(r) /= total;
  }
  return out;
}

NetworkState InitNetwork(Architecture architecture, data::Task task, const NetworkParams& params,
                         int inputs, int outputs, Rng& rng) {
  NetworkState net;
  net.architecture = architecture;
  net.task = task;
  net.dropout = params.dropout;
  if (architecture == Architecture::kMlp) {
    int fan_in = inputs;
    for (int width : params.hidden_layers) {
      net.layers.push_back(InitDense(fan_in, width, rng));
      fan_in = width;
    }
    net.layers.push_back(InitDense(fan_in, outputs, rng));
  } else {
    net.blocks = params.blocks;
    net.layers.push_back(InitDense(inputs, params.layer_size, rng));
    for (int b = 0; b < params.blocks; ++b) {
      net.layers.push_back(InitDense(params.layer_size, params.layer_size, rng));
      net.layers.push_back(InitDense(params.layer_size, params.layer_size, rng));
    }
    net.layers.push_back(InitDense(params.layer_size, outputs, rng));
  }
  return net;
}

namespace {

// Forward pass keeping what backprop needs. For the MLP, `activations[l]` is
// the input of layer l and `pre[l]` its pre-activation; for the ResNet,
// `activations` holds the residual stream before each block and the block's
// (masked) hidden activation, `pre` the block pre-activations.
struct ForwardCache {
  std::vector<Matrix> activations;
  std::vector<Matrix> pre;
  std::vector<Matrix> masks;
  Matrix head_input;
  Matrix stream_out;
  Matrix output;
};

ForwardCache Forward(const NetworkState& net, const Matrix& x, Rng* dropout_rng) {
  ForwardCache cache;
  const auto& layers = net.layers;
  if (net.architecture == Architecture::kMlp) {
    Matrix a = x;
    for (size_t l = 0; l + 1 < layers.size(); ++l) {
      cache.activations.push_back(a);
      Matrix z = Affine(a, layers[l]);
      Matrix mask = DropoutMask(z.rows(), z.cols(), net.dropout, dropout_rng);
      a = Relu(z).cwiseProduct(mask);
      cache.pre.push_back(std::move(z));
      cache.masks.push_back(std::move(mask));
    }
    cache.head_input = a;
    cache.output = Affine(a, layers.back());
    return cache;
  }
  Matrix h = Affine(x, layers[0]);
  for (int b = 0; b < net.blocks; ++b) {
    const auto& inner = layers[1 + 2 * b];
    const auto& outer = layers[2 + 2 * b];
    Matrix z = Affine(h, inner);
    Matrix mask = DropoutMask(z.rows(), z.cols(), net.dropout, dropout_rng);
    Matrix a = Relu(z).cwiseProduct(mask);
    Matrix next = h + Affine(a, outer);
    cache.activations.push_back(std::move(h));
    cache.activations.push_back(a);
    cache.pre.push_back(std::move(z));
    cache.masks.push_back(std::move(mask));
    h = std::move(next);
  }
  cache.stream_out = h;
  cache.head_input = Relu(h);
  cache.output = Affine(cache.head_input, layers.back());
  return cache;
}

}  // namespace

Matrix NetworkForward(const NetworkState& net, const Matrix& inputs) {
  return Forward(net, inputs, nullptr).output;
}

double NetworkLoss(const NetworkState& net, const Matrix& inputs, const Matrix& targets,
                   std::vector<DenseLayer>* grads, Rng* dropout_rng) {
  const ForwardCache cache = Forward(net, inputs, dropout_rng);
  const auto n = static_cast<double>(inputs.rows());
  double loss = 0.0;
  Matrix delta;
  if (net.task == data::Task::kRegression) {
    const Matrix diff = cache.output - targets;
    const double count = n * static_cast<double>(targets.cols());
    loss = diff.squaredNorm() / count;
    if (grads) delta = (2.0 / count) * diff;
  } else {
    const Matrix& logits = cache.output;
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
      const double m = logits.row(r).maxCoeff();
      const double lse = m + std::log((logits.row(r).array() - m).exp().sum());
      loss -= (targets.row(r).array() * (logits.row(r).array() - lse)).sum();
    }
    loss /= n;
    if (grads) delta = (Softmax(logits) - targets) / n;
  }
  if (!grads) return loss;

  const auto& layers = net.layers;
  grads->assign(layers.size(), DenseLayer{});
  AccumulateDense(cache.head_input, delta, grads->back());
  Matrix upstream = delta * layers.back().weight.transpose();

  if (net.architecture == Architecture::kMlp) {
    for (size_t l = layers.size() - 1; l-- > 0;) {
      const Matrix dz = upstream.cwiseProduct(cache.masks[l]).cwiseProduct(ReluMask(cache.pre[l]));
      AccumulateDense(cache.activations[l], dz, (*grads)[l]);
      if (l > 0) upstream = dz * layers[l].weight.transpose();
    }
    return loss;
  }

  Matrix dh = upstream.cwiseProduct(ReluMask(cache.stream_out));
  for (int b = net.blocks - 1; b >= 0; --b) {
    const size_t inner = 1 + 2 * static_cast<size_t>(b);
    const size_t outer = inner + 1;
    const Matrix& h_in = cache.activations[2 * static_cast<size_t>(b)];
    const Matrix& a = cache.activations[2 * static_cast<size_t>(b) + 1];
    AccumulateDense(a, dh, (*grads)[outer]);
    const Matrix da = (dh * layers[outer].weight.transpose()).cwiseProduct(cache.masks[b]);
    const Matrix dz = da.cwiseProduct(ReluMask(cache.pre[b]));
    AccumulateDense(h_in, dz, (*grads)[inner]);
    dh += dz * layers[inner].weight.transpose();
  }
  AccumulateDense(inputs, dh, (*grads)[0]);
  return loss;
}

double GradientCheck(const NetworkState& net, const Matrix& inputs, const Matrix& targets,
                     double h) {
  NetworkState probe = net;
  probe.dropout = 0.0;
  std::vector<DenseLayer> grads;
  NetworkLoss(probe, inputs, targets, &grads);

  double worst = 0.0;
  auto check = [&](double& param, double analytic) {
    const double saved = param;
    param = saved + h;
    const double up = NetworkLoss(probe, inputs, targets, nullptr);
    param = saved - h;
    const double down = NetworkLoss(probe, inputs, targets, nullptr);
    param = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
    worst = std::max(worst, std::abs(analytic - numeric) / scale);
  };
  for (size_t l = 0; l < probe.layers.size(); ++l) {
    auto& layer = probe.layers[l];
    for (Eigen::Index i = 0; i < layer.weight.size(); ++i) {
      check(layer.weight.data()[i], grads[l].weight.data()[i]);
    }
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) {
      check(layer.bias.data()[i], grads[l].bias.data()[i]);
    }
  }
  return worst;
}

NetworkState TrainNetwork(Architecture architecture, const NetworkParams& params, data::Task task,
                          const Matrix& inputs, const Matrix& targets, uint64_t seed,
                          std::vector<double>* history) {
  Require(inputs.rows() == targets.rows(), ErrorCode::kInvalidArgument, "row count mismatch");
  Require(inputs.rows() >= 1, ErrorCode::kPrecondition, "no training rows");
  Rng rng(seed);
  NetworkState net = InitNetwork(architecture, task, params, static_cast<int>(inputs.cols()),
                                 static_cast<int>(targets.cols()), rng);

  struct Moments {
    Matrix m_w, v_w;
    Vector m_b, v_b;
  };
  std::vector<Moments> moments;
  for (const auto& layer : net.layers) {
    moments.push_back({Matrix::Zero(layer.weight.rows(), layer.weight.cols()),
                       Matrix::Zero(layer.weight.rows(), layer.weight.cols()),
                       Vector::Zero(layer.bias.size()), Vector::Zero(layer.bias.size())});
  }

  const auto n = static_cast<size_t>(inputs.rows());
  const auto batch = std::min(static_cast<size_t>(params.batch_size), n);
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::vector<DenseLayer> grads;
  Matrix xb, yb;
  constexpr double kEps = 1e-8;
  long step = 0;
  if (history) history->clear();

  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    rng.Shuffle(order);
    double epoch_loss = 0.0;
    for (size_t start = 0; start < n; start += batch) {
      const size_t size = std::min(batch, n - start);
      xb.resize(static_cast<Eigen::Index>(size), inputs.cols());
      yb.resize(static_cast<Eigen::Index>(size), targets.cols());
      for (size_t i = 0; i < size; ++i) {
        xb.row(static_cast<Eigen::Index>(i)) = inputs.row(static_cast<Eigen::Index>(order[start + i]));
        yb.row(static_cast<Eigen::Index>(i)) = targets.row(static_cast<Eigen::Index>(order[start + i]));
      }
      epoch_loss += NetworkLoss(net, xb, yb, &grads, &rng) * static_cast<double>(size);

      ++step;
      const double c1 = 1.0 - std::pow(params.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(params.beta2, static_cast<double>(step));
      for (size_t l = 0; l < net.layers.size(); ++l) {
        auto& mo = moments[l];
        mo.m_w = params.beta1 * mo.m_w + (1 - params.beta1) * grads[l].weight;
        mo.v_w = params.beta2 * mo.v_w + (1 - params.beta2) * grads[l].weight.cwiseAbs2();
        mo.m_b = params.beta1 * mo.m_b + (1 - params.beta1) * grads[l].bias;
        mo.v_b = params.beta2 * mo.v_b + (1 - params.beta2) * grads[l].bias.cwiseAbs2();
        net.layers[l].weight.array() -=
            params.learning_rate * (mo.m_w.array() / c1) / ((mo.v_w.array() / c2).sqrt() + kEps);
        net.layers[l].bias.array() -=
            params.learning_rate * (mo.m_b.array() / c1) / ((mo.v_b.array() / c2).sqrt() + kEps);
      }
    }
    if (history) history->push_back(epoch_loss / static_cast<double>(n));
  }
  return net;
}

}  // namespace tabsense::models
