#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace pism {

struct ClassificationReport {
  int n_classes = 0;
  std::vector<std::int64_t> confusion;  // n x n, row = actual, col = predicted
  double oa = 0.0;                      // trace / total
  double aa = 0.0;                      // mean recall over classes with support
  std::vector<double> recalls;          // NaN where a class has no support

  std::int64_t confusion_at(int actual, int predicted) const {
    return confusion[static_cast<std::size_t>(actual) * n_classes + predicted];
  }
};

// Sentinel-labeled pixels must be excluded by the caller; ids are >= 0.
ClassificationReport classification_report(const std::vector<int>& predicted,
                                           const std::vector<int>& actual);

double mse(const std::vector<double>& predicted,
           const std::vector<double>& actual);

// mean over variables of MSE_i / MSE_i_base; baselines must be positive
double hyperview_score(const std::vector<double>& mse_values,
                       const std::vector<double>& mse_baselines);

struct RegressionReport {
  std::vector<std::string> variable_names;
  std::vector<double> mse_values;
  std::vector<double> mse_baselines;
  bool default_baselines = false;  // baselines = train-mean predictor MSE
  double score = 0.0;
};

std::string format_table(const ClassificationReport& report);
std::string format_table(const RegressionReport& report);

}  // namespace pism
