#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "vcas/error.hpp"
#include "vcas/learn.hpp"
#include "vcas/rng.hpp"

namespace vcas::learn {

void Dataset::validate(Head head) const {
  if (static_cast<std::size_t>(rows.rows()) != targets.size()) {
    throw ParameterError("dataset rows and targets differ in length");
  }
  if (!weights.empty() && weights.size() != targets.size()) {
    throw ParameterError("dataset weights and targets differ in length");
  }
  if (!session_ids.empty() && session_ids.size() != targets.size()) {
    throw ParameterError("dataset session ids and targets differ in length");
  }
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ParameterError("dataset weights must be >= 0");
  }
  if (!rows.allFinite()) throw DataError("dataset contains non-finite features");
  if (head == Head::Classification) {
    for (double t : targets) {
      if (t < 0.0 || t != std::floor(t) || t >= static_cast<double>(label_names.size())) {
        std::ostringstream why;
        why << "class index " << t << " outside the " << label_names.size() << " known labels";
        throw ParameterError(why.str());
      }
    }
  } else {
    for (double t : targets) {
      if (!std::isfinite(t)) throw DataError("regression target is not finite");
    }
  }
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ParameterError("learning rate must be positive");
  if (batch_size < 1) throw ParameterError("batch size must be >= 1");
  if (epochs < 1) throw ParameterError("epoch budget must be >= 1");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw ParameterError("validation fraction must lie in (0, 1)");
  }
}

namespace {

// Weights enter relative to the largest weight, so uniformly rescaling them
// (e.g. duplicating every sample) keeps the same split and batch order.
std::uint64_t row_hash(const Dataset& d, std::size_t i, double max_weight) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (Eigen::Index c = 0; c < d.rows.cols(); ++c) {
    const double v = d.rows(static_cast<Eigen::Index>(i), c);
    h = hash_bytes(&v, sizeof v, h);
  }
  h = hash_bytes(&d.targets[i], sizeof(double), h);
  if (!d.weights.empty()) {
    const double w = max_weight > 0.0 ? d.weights[i] / max_weight : 0.0;
    h = hash_bytes(&w, sizeof w, h);
  }
  return h;
}

Dataset subset(const Dataset& d, const std::vector<std::size_t>& idx) {
  Dataset out;
  out.rows.resize(static_cast<Eigen::Index>(idx.size()), d.rows.cols());
  out.label_names = d.label_names;
  out.split = d.split;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    out.rows.row(static_cast<Eigen::Index>(k)) = d.rows.row(static_cast<Eigen::Index>(idx[k]));
    out.targets.push_back(d.targets[idx[k]]);
    if (!d.weights.empty()) out.weights.push_back(d.weights[idx[k]]);
    if (!d.session_ids.empty()) out.session_ids.push_back(d.session_ids[idx[k]]);
  }
  return out;
}

// Positions ordered by a seeded key of each row's content. Identical rows get
// identical keys, and their relative order cannot change any result.
double max_weight(const Dataset& d) {
  return d.weights.empty() ? 1.0 : *std::max_element(d.weights.begin(), d.weights.end());
}

std::vector<std::size_t> content_order(const std::vector<std::uint64_t>& hashes,
                                       std::uint64_t seed) {
  std::vector<std::pair<std::uint64_t, std::uint64_t>> keys(hashes.size());
  for (std::size_t i = 0; i < hashes.size(); ++i) keys[i] = {derive_seed(seed, hashes[i]), hashes[i]};
  std::vector<std::size_t> order(hashes.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });
  return order;
}

Batch make_batch(const Dataset& d, std::span<const std::size_t> idx, const MlpModel& model) {
  Batch b;
  b.inputs.resize(static_cast<Eigen::Index>(idx.size()), d.rows.cols());
  b.targets.reserve(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    b.inputs.row(static_cast<Eigen::Index>(k)) = d.rows.row(static_cast<Eigen::Index>(idx[k]));
    const double t = d.targets[idx[k]];
    b.targets.push_back(model.head == Head::Regression
                            ? (t - model.target_offset) / model.target_scale
                            : t);
    if (!d.weights.empty()) b.weights.push_back(d.weights[idx[k]]);
  }
  return b;
}

Batch full_batch(const Dataset& d, const MlpModel& model) {
  std::vector<std::size_t> idx(d.size());
  std::iota(idx.begin(), idx.end(), 0);
  return make_batch(d, idx, model);
}

class AdamState {
 public:
  explicit AdamState(const MlpModel& model) {
    for (const auto& l : model.layers) {
      m_.push_back({Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()),
                    Eigen::VectorXd::Zero(l.bias.size())});
    }
    v_ = m_;
  }

  void apply(MlpModel& model, const Gradient& g, double lr) {
    constexpr double beta1 = 0.9;
    constexpr double beta2 = 0.999;
    constexpr double eps = 1e-8;
    ++t_;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
      step(model.layers[i].weights, g.layers[i].weights, m_[i].weights, v_[i].weights, lr, c1, c2,
           beta1, beta2, eps);
      step(model.layers[i].bias, g.layers[i].bias, m_[i].bias, v_[i].bias, lr, c1, c2, beta1,
           beta2, eps);
    }
  }

 private:
  template <typename P, typename G>
  static void step(P& param, const G& grad, P& m, P& v, double lr, double c1, double c2,
                   double beta1, double beta2, double eps) {
    m = beta1 * m + (1.0 - beta1) * grad;
    v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
    param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  }

  std::vector<DenseLayer> m_;
  std::vector<DenseLayer> v_;
  std::size_t t_ = 0;
};

void check_loss(double loss, std::size_t epoch) {
  if (!std::isfinite(loss)) {
    std::ostringstream why;
    why << "training loss became non-finite at epoch " << epoch;
    throw NumericalError(why.str());
  }
}

}  // namespace

std::pair<Dataset, Dataset> split_validation(const Dataset& data, double fraction,
                                             std::uint64_t seed) {
  std::vector<std::uint64_t> hashes(data.size());
  const double wmax = max_weight(data);
  for (std::size_t i = 0; i < data.size(); ++i) hashes[i] = row_hash(data, i, wmax);
  const auto order = content_order(hashes, derive_seed(seed, "validation-split"));
  const auto n_val = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(data.size())));
  if (n_val == 0 || n_val >= data.size()) {
    throw ParameterError("dataset too small for a train/validation split");
  }
  std::vector<std::size_t> val_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> train_idx(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  Dataset train = subset(data, train_idx);
  Dataset val = subset(data, val_idx);
  train.split = Split::Train;
  val.split = Split::Validation;
  return {std::move(train), std::move(val)};
}

TrainResult mlp_train(const Dataset& data, Head head, const TrainConfig& cfg) {
  cfg.validate();
  data.validate(head);
  auto [train, val] = split_validation(data, cfg.validation_fraction, cfg.seed);
  return mlp_train(train, val, head, cfg);
}

TrainResult mlp_train(const Dataset& train, const Dataset& validation, Head head,
                      const TrainConfig& cfg) {
  cfg.validate();
  train.validate(head);
  validation.validate(head);
  if (train.size() == 0) throw ParameterError("training split is empty");
  if (validation.size() == 0) throw ParameterError("validation split is empty");
  if (validation.rows.cols() != train.rows.cols()) {
    throw ParameterError("train and validation feature widths differ");
  }

  std::size_t out_dim = 1;
  if (head == Head::Classification) {
    std::set<double> present(train.targets.begin(), train.targets.end());
    if (train.label_names.size() < 2 || present.size() < 2) {
      throw DegenerateInputError(
          "classification needs at least two classes in the training split; found " +
          std::to_string(present.size()));
    }
    if (present.size() != train.label_names.size()) {
      std::ostringstream why;
      why << "training split covers " << present.size() << " of " << train.label_names.size()
          << " classes";
      throw DegenerateInputError(why.str());
    }
    out_dim = train.label_names.size();
  }

  MlpModel model = mlp_init(static_cast<std::size_t>(train.rows.cols()), out_dim, head,
                            derive_seed(cfg.seed, "init"), cfg.hidden);
  if (head == Head::Classification) {
    model.label_names = train.label_names;
  } else {
    const auto [lo, hi] = std::minmax_element(train.targets.begin(), train.targets.end());
    model.target_offset = *lo;
    model.target_scale = *hi > *lo ? *hi - *lo : 1.0;
  }

  std::vector<std::uint64_t> hashes(train.size());
  const double wmax = max_weight(train);
  for (std::size_t i = 0; i < train.size(); ++i) hashes[i] = row_hash(train, i, wmax);

  const Batch train_all = full_batch(train, model);
  const Batch val_all = full_batch(validation, model);

  AdamState adam(model);
  TrainResult result;
  MlpModel best = model;
  double best_val = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto order = content_order(hashes, derive_seed(cfg.seed, epoch));
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const Batch batch =
          make_batch(train, std::span<const std::size_t>(order).subspan(start, end - start), model);
      const Gradient g = mlp_grad(model, batch);
      check_loss(g.loss, epoch);
      if (cfg.optimizer == Optimizer::Adam) {
        adam.apply(model, g, cfg.learning_rate);
      } else {
        for (std::size_t i = 0; i < model.layers.size(); ++i) {
          model.layers[i].weights -= cfg.learning_rate * g.layers[i].weights;
          model.layers[i].bias -= cfg.learning_rate * g.layers[i].bias;
        }
      }
    }

    const double train_loss = mlp_loss(model, train_all);
    const double val_loss = mlp_loss(model, val_all);
    check_loss(train_loss, epoch);
    check_loss(val_loss, epoch);
    result.history.train_loss.push_back(train_loss);
    result.history.validation_loss.push_back(val_loss);
    if (val_loss < best_val) {
      best_val = val_loss;
      best = model;
      result.history.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= cfg.patience && cfg.patience > 0) {
      break;
    }
  }
  result.model = std::move(best);
  return result;
}

}  // namespace vcas::learn
