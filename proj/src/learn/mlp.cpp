#include <cmath>
#include <random>
#include <sstream>

#include "vcas/error.hpp"
#include "vcas/learn.hpp"
#include "vcas/rng.hpp"

namespace vcas::learn {

std::size_t MlpModel::in_dim() const {
  return layers.empty() ? 0 : static_cast<std::size_t>(layers.front().weights.cols());
}

std::size_t MlpModel::out_dim() const {
  return layers.empty() ? 0 : static_cast<std::size_t>(layers.back().weights.rows());
}

std::vector<std::size_t> MlpModel::layer_dims() const {
  std::vector<std::size_t> dims;
  if (layers.empty()) return dims;
  dims.push_back(in_dim());
  for (const auto& l : layers) dims.push_back(static_cast<std::size_t>(l.weights.rows()));
  return dims;
}

std::size_t MlpModel::parameter_count() const {
  std::size_t count = 0;
  for (const auto& l : layers) count += static_cast<std::size_t>(l.weights.size() + l.bias.size());
  return count;
}

void MlpModel::validate() const {
  if (layers.empty()) throw ParameterError("MLP has no layers");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    if (l.bias.size() != l.weights.rows()) throw ParameterError("MLP bias/weight shape mismatch");
    if (i > 0 && l.weights.cols() != layers[i - 1].weights.rows()) {
      throw ParameterError("MLP layer dimensions are inconsistent");
    }
    if (!l.weights.allFinite() || !l.bias.allFinite()) {
      throw NumericalError("MLP has non-finite parameters");
    }
  }
  if (head == Head::Classification && !label_names.empty() && label_names.size() != out_dim()) {
    throw ParameterError("MLP label count does not match output dimension");
  }
  if (head == Head::Regression && out_dim() != 1) {
    throw ParameterError("regression MLP must have a single output");
  }
}

MlpModel mlp_init(std::size_t in_dim, std::size_t out_dim, Head head, std::uint64_t seed,
                  std::span<const int> hidden) {
  if (in_dim < 1 || out_dim < 1) throw ParameterError("MLP dimensions must be >= 1");
  std::vector<std::size_t> dims{in_dim};
  for (int h : hidden) {
    if (h < 1) throw ParameterError("MLP hidden sizes must be >= 1");
    dims.push_back(static_cast<std::size_t>(h));
  }
  dims.push_back(out_dim);

  MlpModel model;
  model.head = head;
  Rng rng(seed);
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    const auto fan_in = static_cast<Eigen::Index>(dims[i]);
    const auto fan_out = static_cast<Eigen::Index>(dims[i + 1]);
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    std::uniform_real_distribution<double> uniform(-limit, limit);
    DenseLayer layer;
    layer.weights.resize(fan_out, fan_in);
    // Fill column-major explicitly so the draw order is fixed.
    for (Eigen::Index c = 0; c < fan_in; ++c) {
      for (Eigen::Index r = 0; r < fan_out; ++r) layer.weights(r, c) = uniform(rng);
    }
    layer.bias = Eigen::VectorXd::Zero(fan_out);
    model.layers.push_back(std::move(layer));
  }
  return model;
}

namespace {

struct ForwardTrace {
  std::vector<Eigen::MatrixXd> activations;  // a_0 = input^T, then post-activation per layer
  std::vector<Eigen::MatrixXd> pre;          // pre-activations per layer
};

// Returns network-space outputs (dim x n): logits for classification.
Eigen::MatrixXd forward_columns(const MlpModel& model, const Eigen::MatrixXd& x_cols,
                                ForwardTrace* trace) {
  Eigen::MatrixXd a = x_cols;
  if (trace) trace->activations.push_back(a);
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const auto& l = model.layers[i];
    Eigen::MatrixXd z = l.weights * a;
    z.colwise() += l.bias;
    const bool last = i + 1 == model.layers.size();
    if (trace) trace->pre.push_back(z);
    if (last) return z;
    a = z.cwiseMax(0.0);
    if (trace) trace->activations.push_back(a);
  }
  return a;
}

void softmax_columns(Eigen::MatrixXd& logits) {
  for (Eigen::Index c = 0; c < logits.cols(); ++c) {
    auto col = logits.col(c);
    col.array() -= col.maxCoeff();
    col = col.array().exp().matrix();
    col /= col.sum();
  }
}

void check_input(const MlpModel& model, Eigen::Index cols) {
  if (static_cast<std::size_t>(cols) != model.in_dim()) {
    std::ostringstream why;
    why << "MLP input length " << cols << " does not match model input " << model.in_dim();
    throw ParameterError(why.str());
  }
}

double total_weight(const Batch& batch) {
  if (batch.weights.empty()) return static_cast<double>(batch.size());
  double w = 0.0;
  for (double v : batch.weights) w += v;
  return w;
}

double weight_of(const Batch& batch, std::size_t i) {
  return batch.weights.empty() ? 1.0 : batch.weights[i];
}

}  // namespace

Eigen::MatrixXd mlp_forward_batch(const MlpModel& model, const Eigen::MatrixXd& x) {
  check_input(model, x.cols());
  Eigen::MatrixXd out = forward_columns(model, x.transpose(), nullptr);
  if (model.head == Head::Classification) {
    softmax_columns(out);
  } else {
    out = (out.array() * model.target_scale + model.target_offset).matrix();
  }
  return out.transpose();
}

Eigen::VectorXd mlp_forward(const MlpModel& model, std::span<const double> x) {
  check_input(model, static_cast<Eigen::Index>(x.size()));
  const Eigen::MatrixXd row =
      Eigen::Map<const Eigen::RowVectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
  return mlp_forward_batch(model, row).row(0).transpose();
}

namespace {

// Loss and dL/d(output) in network space, both weighted-mean reduced.
double output_loss(const MlpModel& model, const Batch& batch, const Eigen::MatrixXd& out,
                   Eigen::MatrixXd* dout) {
  const double wsum = total_weight(batch);
  if (!(wsum > 0.0)) throw ParameterError("batch has no weight");
  const auto n = static_cast<Eigen::Index>(batch.size());
  double loss = 0.0;
  if (dout) dout->resize(out.rows(), n);

  if (model.head == Head::Classification) {
    for (Eigen::Index c = 0; c < n; ++c) {
      const auto label = static_cast<Eigen::Index>(batch.targets[static_cast<std::size_t>(c)]);
      if (label < 0 || label >= out.rows()) throw ParameterError("class index out of range");
      const double w = weight_of(batch, static_cast<std::size_t>(c)) / wsum;
      const double m = out.col(c).maxCoeff();
      const double lse = m + std::log((out.col(c).array() - m).exp().sum());
      loss += w * (lse - out(label, c));
      if (dout) {
        dout->col(c) = (out.col(c).array() - lse).exp().matrix() * w;
        (*dout)(label, c) -= w;
      }
    }
  } else {
    const double dims = static_cast<double>(out.rows());
    for (Eigen::Index c = 0; c < n; ++c) {
      const double w = weight_of(batch, static_cast<std::size_t>(c)) / wsum;
      const Eigen::VectorXd diff =
          out.col(c).array() - batch.targets[static_cast<std::size_t>(c)];
      loss += w * diff.squaredNorm() / dims;
      if (dout) dout->col(c) = diff * (2.0 * w / dims);
    }
  }
  return loss;
}

}  // namespace

double mlp_loss(const MlpModel& model, const Batch& batch) {
  if (batch.size() == 0) throw ParameterError("empty batch");
  check_input(model, batch.inputs.cols());
  const Eigen::MatrixXd out = forward_columns(model, batch.inputs.transpose(), nullptr);
  return output_loss(model, batch, out, nullptr);
}

Gradient mlp_grad(const MlpModel& model, const Batch& batch) {
  if (batch.size() == 0) throw ParameterError("empty batch");
  check_input(model, batch.inputs.cols());
  ForwardTrace trace;
  const Eigen::MatrixXd out = forward_columns(model, batch.inputs.transpose(), &trace);
  Eigen::MatrixXd delta;
  Gradient grad;
  grad.loss = output_loss(model, batch, out, &delta);
  grad.layers.resize(model.layers.size());

  for (std::size_t i = model.layers.size(); i-- > 0;) {
    grad.layers[i].weights = delta * trace.activations[i].transpose();
    grad.layers[i].bias = delta.rowwise().sum();
    if (i == 0) break;
    Eigen::MatrixXd back = model.layers[i].weights.transpose() * delta;
    back.array() *= (trace.pre[i - 1].array() > 0.0).cast<double>();
    delta = std::move(back);
  }
  return grad;
}

}  // namespace vcas::learn
