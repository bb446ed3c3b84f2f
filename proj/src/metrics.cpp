#include "pism/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace pism {

ClassificationReport classification_report(const std::vector<int>& predicted,
                                           const std::vector<int>& actual) {
  if (predicted.size() != actual.size() || predicted.empty()) {
    throw std::invalid_argument("classification_report: empty or mismatched input");
  }
  int max_id = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i] < 0 || actual[i] < 0) {
      throw std::invalid_argument(
          "classification_report: sentinel labels must be excluded upstream");
    }
    max_id = std::max({max_id, predicted[i], actual[i]});
  }

  ClassificationReport r;
  r.n_classes = max_id + 1;
  r.confusion.assign(static_cast<std::size_t>(r.n_classes) * r.n_classes, 0);
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    r.confusion[static_cast<std::size_t>(actual[i]) * r.n_classes +
                predicted[i]] += 1;
  }

  std::int64_t correct = 0;
  r.recalls.assign(r.n_classes, std::numeric_limits<double>::quiet_NaN());
  double recall_sum = 0.0;
  int present = 0;
  for (int c = 0; c < r.n_classes; ++c) {
    std::int64_t support = 0;
    for (int p = 0; p < r.n_classes; ++p) support += r.confusion_at(c, p);
    const std::int64_t diag = r.confusion_at(c, c);
    correct += diag;
    if (support > 0) {  // classes absent from the test set do not enter AA
      r.recalls[c] = static_cast<double>(diag) / static_cast<double>(support);
      recall_sum += r.recalls[c];
      present += 1;
    }
  }
  r.oa = static_cast<double>(correct) / static_cast<double>(predicted.size());
  r.aa = recall_sum / present;
  return r;
}

double mse(const std::vector<double>& predicted,
           const std::vector<double>& actual) {
  if (predicted.size() != actual.size() || predicted.empty()) {
    throw std::invalid_argument("mse: empty or mismatched input");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double e = predicted[i] - actual[i];
    acc += e * e;
  }
  return acc / static_cast<double>(predicted.size());
}

double hyperview_score(const std::vector<double>& mse_values,
                       const std::vector<double>& mse_baselines) {
  if (mse_values.empty() || mse_values.size() != mse_baselines.size()) {
    throw std::invalid_argument("hyperview_score: empty or mismatched input");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < mse_values.size(); ++i) {
    if (!(mse_baselines[i] > 0.0)) {
      throw std::invalid_argument("hyperview_score: baseline MSE must be > 0");
    }
    acc += mse_values[i] / mse_baselines[i];
  }
  return acc / static_cast<double>(mse_values.size());
}

std::string format_table(const ClassificationReport& report) {
  std::ostringstream os;
  os << "classes: " << report.n_classes << "\n";
  os << "OA: " << report.oa << "\n";
  os << "AA: " << report.aa << "\n";
  os << "per-class recall:\n";
  for (int c = 0; c < report.n_classes; ++c) {
    os << "  class " << c << ": ";
    if (std::isnan(report.recalls[c])) {
      os << "n/a (no support)";
    } else {
      os << report.recalls[c];
    }
    os << "\n";
  }
  return os.str();
}

std::string format_table(const RegressionReport& report) {
  std::ostringstream os;
  os << "variable, mse, baseline_mse, ratio\n";
  for (std::size_t i = 0; i < report.mse_values.size(); ++i) {
    os << report.variable_names[i] << ", " << report.mse_values[i] << ", "
       << report.mse_baselines[i] << ", "
       << report.mse_values[i] / report.mse_baselines[i] << "\n";
  }
  os << "score: " << report.score;
  if (report.default_baselines) {
    os << " (baselines: train-mean predictor MSE on the test patches)";
  }
  os << "\n";
  return os.str();
}

}  // namespace pism
