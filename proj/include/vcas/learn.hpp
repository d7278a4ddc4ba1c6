#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace vcas::learn {

enum class Head { Classification, Regression };

struct DenseLayer {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd bias;     // out
};

inline const std::vector<int> kDefaultHidden{400, 250, 100};

// Fully connected network with rectifier hidden layers and a softmax
// (classification) or identity (regression) head.
struct MlpModel {
  Head head = Head::Classification;
  std::vector<DenseLayer> layers;
  std::vector<std::string> label_names;  // classification only, lexicographic
  // Regression targets are trained on (y - offset) / scale.
  double target_offset = 0.0;
  double target_scale = 1.0;

  std::size_t in_dim() const;
  std::size_t out_dim() const;
  std::vector<std::size_t> layer_dims() const;
  std::size_t parameter_count() const;
  void validate() const;
};

MlpModel mlp_init(std::size_t in_dim, std::size_t out_dim, Head head, std::uint64_t seed,
                  std::span<const int> hidden = kDefaultHidden);

// Probabilities for classification; target-unit predictions for regression.
Eigen::VectorXd mlp_forward(const MlpModel& model, std::span<const double> x);
// Batched forward: one sample per row of `x`, one output per row of the result.
Eigen::MatrixXd mlp_forward_batch(const MlpModel& model, const Eigen::MatrixXd& x);

// Network-space targets: class indices for classification, scaled values for
// regression. Empty weights mean unit weights.
struct Batch {
  Eigen::MatrixXd inputs;  // n x in_dim
  std::vector<double> targets;
  std::vector<double> weights;

  std::size_t size() const noexcept { return targets.size(); }
};

struct Gradient {
  std::vector<DenseLayer> layers;
  double loss = 0.0;
};

// Weighted-mean cross-entropy (classification) or squared error (regression).
double mlp_loss(const MlpModel& model, const Batch& batch);
// Exact gradient of mlp_loss by backpropagation.
Gradient mlp_grad(const MlpModel& model, const Batch& batch);

enum class Split { Train, Validation, Test };

struct Dataset {
  Eigen::MatrixXd rows;  // one feature row per sample
  std::vector<double> targets;  // class index or real value
  std::vector<double> weights;  // optional per-row weights
  std::vector<std::string> label_names;
  std::vector<int> session_ids;
  Split split = Split::Train;

  std::size_t size() const noexcept { return targets.size(); }
  void validate(Head head) const;
};

enum class Optimizer { Adam, GradientDescent };

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 32;
  std::size_t epochs = 200;
  std::size_t patience = 20;
  std::uint64_t seed = 0;
  double validation_fraction = 0.1;
  Optimizer optimizer = Optimizer::Adam;
  std::vector<int> hidden = kDefaultHidden;

  void validate() const;
};

struct TrainHistory {
  std::vector<double> train_loss;
  std::vector<double> validation_loss;
  std::size_t best_epoch = 0;
};

struct TrainResult {
  MlpModel model;
  TrainHistory history;
};

// Splits the rows 9:1 (cfg.validation_fraction) into train/validation and trains.
// Split membership and minibatch order depend on row content and the seed,
// never on row position, so permuting the dataset leaves the result unchanged.
TrainResult mlp_train(const Dataset& data, Head head, const TrainConfig& cfg);
TrainResult mlp_train(const Dataset& train, const Dataset& validation, Head head,
                      const TrainConfig& cfg);

// Deterministic content-based 9:1 split used by mlp_train.
std::pair<Dataset, Dataset> split_validation(const Dataset& data, double fraction,
                                             std::uint64_t seed);

// Rows are true labels, columns predictions.
struct ConfusionMatrix {
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> counts;
  std::vector<std::string> label_names;

  std::int64_t total() const;
  double accuracy() const;  // trace / total
  // Row-stochastic version. Rows without samples stay zero and are listed in
  // `empty_rows` rather than being replaced by a uniform row.
  Eigen::MatrixXd row_normalized(std::vector<std::size_t>* empty_rows = nullptr) const;
};

ConfusionMatrix confusion_from_predictions(std::span<const int> truth, std::span<const int> predicted,
                                           const std::vector<std::string>& label_names);

struct ClassifierReport {
  ConfusionMatrix confusion;
  double accuracy = 0.0;
};

// Argmax of the probabilities; ties go to the lowest class index.
int argmax_class(const Eigen::VectorXd& probabilities);

ClassifierReport eval_classifier(const MlpModel& model, const Dataset& test);

struct TargetError {
  double target = 0.0;
  std::size_t count = 0;
  double rmse = 0.0;
  double mean_prediction = 0.0;
};

struct RegressionReport {
  double rmse = 0.0;
  std::vector<TargetError> per_target;  // sorted by target value
};

RegressionReport regression_from_predictions(std::span<const double> targets,
                                             std::span<const double> predictions);
RegressionReport eval_regressor(const MlpModel& model, const Dataset& test);

}  // namespace vcas::learn
