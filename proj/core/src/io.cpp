#include "xtalk/io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <sstream>
#include <unistd.h>

#include "xtalk/errors.hpp"

namespace xtalk {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
    while (!field.empty() && field.front() == ' ') field.erase(field.begin());
    out.push_back(field);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& s, std::size_t line) {
  if (s == "nan" || s == "NaN" || s.empty()) return std::numeric_limits<double>::quiet_NaN();
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("line " + std::to_string(line) + ": '" + s + "' is not a number");
  }
}

void write_number(std::ostream& out, double x) {
  if (std::isnan(x)) {
    out << "nan";
  } else {
    out << x;
  }
}

}  // namespace

void atomic_write(const fs::path& path, const std::string& content) {
  if (path == "-") {
    std::cout << content;
    std::cout.flush();
    if (!std::cout) throw IoError("failed writing to stdout");
    return;
  }
  const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
  const fs::path tmp =
      dir / ("." + path.filename().string() + ".tmp." + std::to_string(::getpid()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw IoError("cannot open " + tmp.string() + " for writing: " + std::strerror(errno));
    }
    out << content;
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw IoError("failed writing " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    std::error_code ignored;
    fs::remove(tmp, ignored);
    throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

std::string read_text(const fs::path& path) {
  std::ostringstream buf;
  if (path == "-") {
    buf << std::cin.rdbuf();
    return buf.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + ": " + std::strerror(errno));
  buf << in.rdbuf();
  if (in.bad()) throw IoError("failed reading " + path.string());
  return buf.str();
}

void write_series_csv(std::ostream& out, const AveragedSeries& series) {
  const bool s = series.has_entropy();
  out << "t,P_mean,P_stderr";
  if (s) out << ",S_mean,S_stderr";
  out << '\n';
  out << std::setprecision(12);
  for (std::size_t i = 0; i < series.size(); ++i) {
    out << series.times[i] << ',' << series.p_mean[i] << ',' << series.p_stderr[i];
    if (s) out << ',' << series.s_mean[i] << ',' << series.s_stderr[i];
    out << '\n';
  }
}

AveragedSeries read_series_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("line 1: empty series CSV");
  const auto header = split_csv_line(line);
  const bool with_s = header.size() == 5 && header[3] == "S_mean" && header[4] == "S_stderr";
  if (header.size() < 3 || header[0] != "t" || header[1] != "P_mean" || header[2] != "P_stderr" ||
      !(header.size() == 3 || with_s)) {
    throw ConfigError("line 1: expected header t,P_mean,P_stderr[,S_mean,S_stderr]");
  }
  AveragedSeries series;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected " +
                        std::to_string(header.size()) + " columns, got " +
                        std::to_string(fields.size()));
    }
    const double t = parse_number(fields[0], line_no);
    if (!series.times.empty() && !(t > series.times.back())) {
      throw ConfigError("line " + std::to_string(line_no) + ": times must be strictly increasing");
    }
    series.times.push_back(t);
    series.p_mean.push_back(parse_number(fields[1], line_no));
    series.p_stderr.push_back(parse_number(fields[2], line_no));
    if (with_s) {
      series.s_mean.push_back(parse_number(fields[3], line_no));
      series.s_stderr.push_back(parse_number(fields[4], line_no));
    }
  }
  return series;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "unit,config,L,sigma,alpha_noise,T2,T2_stderr,alpha_stretch,P_inf,converged\n";
  out << std::setprecision(12);
  for (const auto& r : rows) {
    out << to_string(r.unit) << ',' << to_string(r.config) << ',' << r.size << ',';
    write_number(out, r.sigma);
    out << ',';
    write_number(out, r.alpha_noise);
    out << ',';
    write_number(out, r.fit.t2);
    out << ',';
    write_number(out, r.fit.standard_error.t2);
    out << ',';
    write_number(out, r.fit.alpha);
    out << ',';
    write_number(out, r.fit.p_inf);
    out << ',' << (r.fit.converged ? "true" : "false") << '\n';
  }
}

std::vector<SweepTableRow> read_sweep_csv(std::istream& in) {
  static const std::vector<std::string> kHeader = {
      "unit", "config", "L", "sigma", "alpha_noise", "T2", "T2_stderr", "alpha_stretch",
      "P_inf", "converged"};
  std::string line;
  if (!std::getline(in, line) || split_csv_line(line) != kHeader) {
    throw ConfigError("line 1: expected sweep header " +
                      std::string("unit,config,L,sigma,alpha_noise,T2,T2_stderr,alpha_stretch,"
                                  "P_inf,converged"));
  }
  std::vector<SweepTableRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    if (f.size() != kHeader.size()) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected " +
                        std::to_string(kHeader.size()) + " columns, got " +
                        std::to_string(f.size()));
    }
    SweepTableRow row;
    row.unit = f[0];
    row.config = f[1];
    const double size = parse_number(f[2], line_no);
    if (!(size >= 1.0) || size != std::floor(size)) {
      throw ConfigError("line " + std::to_string(line_no) + ": L must be a positive integer");
    }
    row.size = static_cast<int>(size);
    row.sigma = parse_number(f[3], line_no);
    row.alpha_noise = parse_number(f[4], line_no);
    row.t2 = parse_number(f[5], line_no);
    row.t2_stderr = parse_number(f[6], line_no);
    row.alpha_stretch = parse_number(f[7], line_no);
    row.p_inf = parse_number(f[8], line_no);
    if (f[9] == "true" || f[9] == "1") {
      row.converged = true;
    } else if (f[9] == "false" || f[9] == "0") {
      row.converged = false;
    } else {
      throw ConfigError("line " + std::to_string(line_no) + ": converged must be true or false");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace xtalk
