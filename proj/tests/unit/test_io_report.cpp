#include <gtest/gtest.h>

#include <sstream>

#include "mstlimits/io.hpp"
#include "mstlimits/report.hpp"

using namespace mst;

TEST(Io, PoolRoundTripIsExact) {
  const std::vector<cplx> pts{cplx(1.0 / 3.0, -2.5e-300), cplx(123456.789, 0.1), 0.0};
  std::stringstream ss;
  io::write_pool(ss, pts);
  EXPECT_EQ(io::read_pool(ss), pts);
}

TEST(Io, ReadsReplicaCsvWithNamedColumns) {
  std::stringstream ss("rep,xi_hat,re,im\n0,1.0,2.0,3.0\n1,1.5,-1,0.5\n");
  const auto v = io::read_pool(ss);
  ASSERT_EQ(v.size(), 2u);
  EXPECT_EQ(v[1], cplx(-1.0, 0.5));
}

TEST(Io, BadCsv) {
  std::stringstream missing("a,b\n1,2\n");
  EXPECT_THROW(io::read_pool(missing), Error);
  std::stringstream garbage("re,im\n1,x\n");
  try {
    io::read_pool(garbage);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::io_error);
  }
}

TEST(Report, DegradedForM3) {
  ReportConfig cfg;
  cfg.m = 3;
  const auto r = verification_report(cfg);
  EXPECT_EQ(r["schema"], 1);
  EXPECT_EQ(r["scope"], "spectral-only");
  EXPECT_TRUE(r["lambda2"].is_null());
  EXPECT_TRUE(r["pass"].get<bool>());
  EXPECT_NE(r["note"].get<std::string>().find("no-lambda2"), std::string::npos);
}

TEST(Report, SubcriticalMSkipsFixpointGates) {
  ReportConfig cfg;
  cfg.m = 10;
  cfg.xi_reps = 2000;
  cfg.dt_reps = 1000;
  const auto r = verification_report(cfg);
  EXPECT_EQ(r["scope"], "full");
  int skipped = 0;
  for (const auto& g : r["gates"])
    if (g["status"] == "skipped") ++skipped;
  EXPECT_EQ(skipped, 6);
}

TEST(Report, DeterministicBytes) {
  ReportConfig cfg;
  cfg.m = 30;
  cfg.xi_reps = 2000;
  cfg.xi_steps = 200;
  cfg.dt_reps = 500;
  cfg.pool = 3000;
  cfg.generations = 10;
  cfg.replicate_pools = 2;
  cfg.cascade_reps = 500;
  cfg.spiral_targets = 3;
  EXPECT_EQ(verification_report(cfg).dump(), verification_report(cfg).dump());
}
