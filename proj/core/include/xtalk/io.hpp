#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "xtalk/fitting.hpp"
#include "xtalk/runner.hpp"
#include "xtalk/series.hpp"

namespace xtalk {

// Write to a sibling temporary file, then rename over `path`. "-" writes to
// stdout. Throws IoError.
void atomic_write(const std::filesystem::path& path, const std::string& content);

// "-" reads stdin. Throws IoError.
std::string read_text(const std::filesystem::path& path);

// Columns t,P_mean,P_stderr[,S_mean,S_stderr] with 12 significant digits.
void write_series_csv(std::ostream& out, const AveragedSeries& series);
AveragedSeries read_series_csv(std::istream& in);

// Columns unit,config,L,sigma,alpha_noise,T2,T2_stderr,alpha_stretch,P_inf,converged.
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

struct SweepTableRow {
  std::string unit;
  std::string config;
  int size = 0;
  double sigma = 0.0;
  double alpha_noise = 0.0;
  double t2 = 0.0;
  double t2_stderr = 0.0;
  double alpha_stretch = 0.0;
  double p_inf = 0.0;
  bool converged = false;
};

std::vector<SweepTableRow> read_sweep_csv(std::istream& in);

}  // namespace xtalk
