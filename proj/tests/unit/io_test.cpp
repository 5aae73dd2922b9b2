#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "xtalk/errors.hpp"
#include "xtalk/io.hpp"

namespace xtalk {
namespace {

namespace fs = std::filesystem;

fs::path scratch_dir() {
  const fs::path dir = fs::temp_directory_path() / ("xtalk_io_test_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir;
}

TEST(Io, SeriesCsvRoundTrip) {
  AveragedSeries s;
  s.times = {0.0, 0.5, 1.0};
  s.p_mean = {1.0, 0.123456789012345, 0.5};
  s.p_stderr = {0.0, 0.01, 0.02};
  s.s_mean = {0.0, 0.3, 0.6};
  s.s_stderr = {0.0, 0.001, 0.002};
  std::stringstream buf;
  write_series_csv(buf, s);
  EXPECT_EQ(buf.str().substr(0, buf.str().find('\n')), "t,P_mean,P_stderr,S_mean,S_stderr");
  EXPECT_NE(buf.str().find("0.123456789012"), std::string::npos);
  EXPECT_EQ(buf.str().find("0.1234567890123"), std::string::npos);
  const AveragedSeries back = read_series_csv(buf);
  EXPECT_EQ(back.times, s.times);
  EXPECT_NEAR(back.p_mean[1], s.p_mean[1], 1e-12);
  EXPECT_EQ(back.s_stderr, s.s_stderr);

  s.s_mean.clear();
  s.s_stderr.clear();
  std::stringstream plain;
  write_series_csv(plain, s);
  EXPECT_EQ(plain.str().substr(0, plain.str().find('\n')), "t,P_mean,P_stderr");
  EXPECT_FALSE(read_series_csv(plain).has_entropy());
}

TEST(Io, SeriesCsvErrorsNameTheLine) {
  std::istringstream bad_header("time,P\n0,1\n");
  EXPECT_THROW(read_series_csv(bad_header), ConfigError);
  std::istringstream bad_row("t,P_mean,P_stderr\n0,1,0\n0.1,abc,0\n");
  try {
    read_series_csv(bad_row);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
  std::istringstream unordered("t,P_mean,P_stderr\n0.1,1,0\n0.1,1,0\n");
  EXPECT_THROW(read_series_csv(unordered), ConfigError);
}

TEST(Io, SweepCsvRoundTrip) {
  SweepRow row;
  row.unit = UnitKind::kStick;
  row.config = ConfigKind::kRing;
  row.size = 6;
  row.sigma = 0.5;
  row.alpha_noise = 2.0;
  row.fit.t2 = 1.185;
  row.fit.standard_error.t2 = 0.01;
  row.fit.alpha = 1.4;
  row.fit.p_inf = 0.3;
  row.fit.converged = true;
  SweepRow failed = row;
  failed.size = 8;
  failed.fit.t2 = std::nan("");
  failed.fit.converged = false;
  std::stringstream buf;
  write_sweep_csv(buf, {row, failed});
  EXPECT_EQ(buf.str().substr(0, buf.str().find('\n')),
            "unit,config,L,sigma,alpha_noise,T2,T2_stderr,alpha_stretch,P_inf,converged");
  const auto rows = read_sweep_csv(buf);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].unit, "stick");
  EXPECT_EQ(rows[0].config, "ring");
  EXPECT_EQ(rows[0].size, 6);
  EXPECT_DOUBLE_EQ(rows[0].t2, 1.185);
  EXPECT_TRUE(rows[0].converged);
  EXPECT_TRUE(std::isnan(rows[1].t2));
  EXPECT_FALSE(rows[1].converged);
}

TEST(Io, AtomicWriteReplacesWholeFile) {
  const fs::path dir = scratch_dir();
  const fs::path target = dir / "out.txt";
  atomic_write(target, "first version, long content\n");
  atomic_write(target, "second\n");
  EXPECT_EQ(read_text(target), "second\n");
  std::size_t files = 0;
  for (const auto& entry : fs::directory_iterator(dir)) {
    (void)entry;
    ++files;
  }
  EXPECT_EQ(files, 1u) << "temporary file left behind";
  fs::remove_all(dir);
}

TEST(Io, MissingPathsRaiseIoError) {
  EXPECT_THROW(read_text("/nonexistent/dir/file.csv"), IoError);
  EXPECT_THROW(atomic_write("/nonexistent/dir/file.csv", "x"), IoError);
}

}  // namespace
}  // namespace xtalk
