#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "insert/param_store.hpp"
#include "insert/rng.hpp"
#include "insert/tensor.hpp"

namespace testutil {

inline std::string tests_dir() { return TESTS_DIR; }
inline std::string fixture(const std::string& name) { return tests_dir() + "/fixtures/" + name; }

inline std::string temp_dir(const std::string& tag) {
  auto dir = std::filesystem::temp_directory_path() / ("insertrec_" + tag);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

// |a - b| relative to max(1, |a|, |b|): relative error with an absolute
// floor, the usual gradient-check metric.
inline double rel_err(double a, double b) {
  return std::fabs(a - b) / std::max({1.0, std::fabs(a), std::fabs(b)});
}

struct GradCheckResult {
  double max_err = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
};

// Central finite differences over every entry of every parameter, compared
// against the analytic gradients. `run(true)` must rebuild the graph from
// the current store values, run backward and return the loss; `run(false)`
// only returns the loss.
inline GradCheckResult check_gradients(insert::ParameterStore& store,
                                       const std::function<double(bool)>& run, double h = 1e-4) {
  store.zero_grads();
  run(true);
  std::vector<insert::Tensor> analytic;
  for (std::size_t p = 0; p < store.count(); ++p) {
    analytic.push_back(store.entry(static_cast<int>(p)).grad);
  }

  GradCheckResult result;
  for (std::size_t p = 0; p < store.count(); ++p) {
    auto& entry = store.entry(static_cast<int>(p));
    for (std::size_t i = 0; i < entry.value.size(); ++i) {
      const double saved = entry.value[i];
      entry.value[i] = saved + h;
      const double fp = run(false);
      entry.value[i] = saved - h;
      const double fm = run(false);
      entry.value[i] = saved;
      const double fd = (fp - fm) / (2.0 * h);
      const double err = rel_err(analytic[p][i], fd);
      if (err > result.max_err) {
        result.max_err = err;
        result.worst_param = entry.name;
        result.worst_index = i;
      }
    }
  }
  return result;
}

}  // namespace testutil
