#include <cmath>
#include <map>
#include <sstream>

#include "vcas/error.hpp"
#include "vcas/learn.hpp"

namespace vcas::learn {

std::int64_t ConfusionMatrix::total() const { return counts.sum(); }

double ConfusionMatrix::accuracy() const {
  const std::int64_t n = total();
  if (n == 0) return 0.0;
  return static_cast<double>(counts.trace()) / static_cast<double>(n);
}

Eigen::MatrixXd ConfusionMatrix::row_normalized(std::vector<std::size_t>* empty_rows) const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(counts.rows(), counts.cols());
  if (empty_rows) empty_rows->clear();
  for (Eigen::Index r = 0; r < counts.rows(); ++r) {
    const std::int64_t row_total = counts.row(r).sum();
    if (row_total == 0) {
      if (empty_rows) empty_rows->push_back(static_cast<std::size_t>(r));
      continue;
    }
    out.row(r) = counts.row(r).cast<double>() / static_cast<double>(row_total);
  }
  return out;
}

ConfusionMatrix confusion_from_predictions(std::span<const int> truth, std::span<const int> predicted,
                                           const std::vector<std::string>& label_names) {
  if (truth.size() != predicted.size()) throw ParameterError("prediction count mismatch");
  const auto l = static_cast<Eigen::Index>(label_names.size());
  ConfusionMatrix cm;
  cm.label_names = label_names;
  cm.counts = decltype(cm.counts)::Zero(l, l);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || truth[i] >= l || predicted[i] < 0 || predicted[i] >= l) {
      throw ParameterError("label index out of range in confusion matrix");
    }
    ++cm.counts(truth[i], predicted[i]);
  }
  return cm;
}

int argmax_class(const Eigen::VectorXd& probabilities) {
  int best = 0;
  for (Eigen::Index i = 1; i < probabilities.size(); ++i) {
    if (probabilities(i) > probabilities(best)) best = static_cast<int>(i);
  }
  return best;
}

ClassifierReport eval_classifier(const MlpModel& model, const Dataset& test) {
  if (model.head != Head::Classification) throw ParameterError("eval_classifier needs a classifier");
  if (test.size() == 0) throw ParameterError("eval_classifier: empty test set");
  if (test.label_names != model.label_names) {
    throw DataError("label spaces of model and test data differ");
  }
  test.validate(Head::Classification);
  const Eigen::MatrixXd probs = mlp_forward_batch(model, test.rows);
  std::vector<int> truth;
  std::vector<int> predicted;
  for (std::size_t i = 0; i < test.size(); ++i) {
    truth.push_back(static_cast<int>(test.targets[i]));
    predicted.push_back(argmax_class(probs.row(static_cast<Eigen::Index>(i)).transpose()));
  }
  ClassifierReport report;
  report.confusion = confusion_from_predictions(truth, predicted, model.label_names);
  report.accuracy = report.confusion.accuracy();
  return report;
}

RegressionReport regression_from_predictions(std::span<const double> targets,
                                             std::span<const double> predictions) {
  if (targets.empty()) throw ParameterError("regression evaluation: empty test set");
  if (targets.size() != predictions.size()) throw ParameterError("prediction count mismatch");
  struct Acc {
    std::size_t n = 0;
    double sq = 0.0;
    double sum = 0.0;
  };
  std::map<double, Acc> groups;
  double sq = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const double e = predictions[i] - targets[i];
    sq += e * e;
    auto& g = groups[targets[i]];
    ++g.n;
    g.sq += e * e;
    g.sum += predictions[i];
  }
  RegressionReport r;
  r.rmse = std::sqrt(sq / static_cast<double>(targets.size()));
  for (const auto& [t, g] : groups) {
    r.per_target.push_back({t, g.n, std::sqrt(g.sq / static_cast<double>(g.n)),
                            g.sum / static_cast<double>(g.n)});
  }
  return r;
}

RegressionReport eval_regressor(const MlpModel& model, const Dataset& test) {
  if (model.head != Head::Regression) throw ParameterError("eval_regressor needs a regression head");
  if (test.size() == 0) throw ParameterError("eval_regressor: empty test set");
  const Eigen::MatrixXd pred = mlp_forward_batch(model, test.rows);
  std::vector<double> p(pred.col(0).data(), pred.col(0).data() + pred.rows());
  return regression_from_predictions(test.targets, p);
}

}  // namespace vcas::learn
