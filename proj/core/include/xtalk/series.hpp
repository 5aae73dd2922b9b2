#pragma once

#include <cstddef>
#include <vector>

namespace xtalk {

// Monte-Carlo averaged observables on a time grid. stderr = sample standard
// deviation / sqrt(n_realizations) at every time. The entropy columns are
// empty unless entropy was requested.
struct AveragedSeries {
  std::vector<double> times;
  std::vector<double> p_mean;
  std::vector<double> p_stderr;
  std::vector<double> s_mean;
  std::vector<double> s_stderr;
  std::size_t n_realizations = 0;

  bool has_entropy() const { return !s_mean.empty(); }
  std::size_t size() const { return times.size(); }
};

}  // namespace xtalk
