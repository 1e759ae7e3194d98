#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"

using namespace spherecov;
namespace fs = std::filesystem;

namespace {

struct RunResult {
  int code;
  std::string out;
  std::string err;
};

RunResult run(std::vector<std::string> args) {
  args.insert(args.begin(), "spherecov");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::cli_main(static_cast<int>(argv.size()), argv.data(), {out, err});
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / ("spherecov_cli_" + std::string(info->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  [[nodiscard]] std::string path(const std::string& name) const { return (dir_ / name).string(); }

  /// lon_deg,lat_deg,value CSV of a seeded draw from a known model.
  void write_synthetic_data(const std::string& name, std::size_t n, std::uint64_t seed) const {
    const CovarianceModel model{0.0, 1.0, tabulate(SmoothKernelParams{1.0, 2.0, 1.0}, 32)};
    const auto pts = random_points(n, seed);
    const auto z = sample_gaussian_field(model, pts, seed + 1);
    PointTable t;
    t.header = {"lon_deg", "lat_deg", "value"};
    for (std::size_t i = 0; i < n; ++i) {
      t.rows.push_back({std::atan2(pts[i].y, pts[i].x) * 180.0 / pi,
                        std::asin(std::clamp(pts[i].z, -1.0, 1.0)) * 180.0 / pi, {z[i]}});
    }
    std::ofstream out(path(name));
    write_points(out, t);
  }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, TabulateHemisphereCurveIsLinear) {
  const auto r = run({"tabulate", "--n-steps", "1", "--range", format_double(pi), "--out", path("m.txt")});
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream in(path("curve.csv"));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "d,C");
  int rows = 0;
  while (std::getline(in, line)) {
    const auto f = split_fields(line);
    const double d = *parse_double(f[0]);
    EXPECT_NEAR(*parse_double(f[1]), 1.0 - d / pi, 1e-9) << d;
    ++rows;
  }
  EXPECT_EQ(rows, 1024);
}

TEST_F(CliTest, TabulateDefaultCurveIsMonotoneWithEndpoints) {
  ASSERT_EQ(run({"tabulate", "--out", path("m.txt"), "--curve", path("c.csv")}).code, 0);
  const auto model = cli::load_model(path("m.txt"));
  EXPECT_EQ(model.structure.n_steps(), 64u);
  std::ifstream in(path("c.csv"));
  std::string line;
  std::getline(in, line);
  double prev = 2.0;
  double first = -1.0, last = -1.0;
  while (std::getline(in, line)) {
    const double c = *parse_double(split_fields(line)[1]);
    if (first < 0.0) first = c;
    EXPECT_LE(c, prev);
    prev = last = c;
  }
  EXPECT_NEAR(first, 1.0, 1e-12);
  EXPECT_EQ(last, 0.0);
}

TEST_F(CliTest, InvalidShapeIsAUsageError) {
  const auto r = run({"tabulate", "--nu", "0", "--out", path("m.txt")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("ν > 0"), std::string::npos) << r.err;
  EXPECT_EQ(run({"tabulate"}).code, 2);
  EXPECT_EQ(run({"no-such-command"}).code, 2);
}

TEST_F(CliTest, UnwritableOutputIsAnIoError) {
  const auto r = run({"tabulate", "--out", path("missing_dir/m.txt")});
  EXPECT_EQ(r.code, 3) << r.err;
}

TEST_F(CliTest, ValidatePassesForHealthyModelAndFailsForCorruptedOne) {
  ASSERT_EQ(run({"tabulate", "--range", "1.5", "--n-steps", "16", "--out", path("m.txt")}).code, 0);
  const std::vector<std::string> fast{"--oracle-steps", "1024", "--oracle-grid", "8", "--mc-triples", "2",
                                      "--mc-samples", "1000000", "--psd-configs", "2",
                                      "--audit-points", "10000"};
  auto args = std::vector<std::string>{"validate", "--model", path("m.txt")};
  args.insert(args.end(), fast.begin(), fast.end());
  const auto good = run(args);
  EXPECT_EQ(good.code, 0) << good.out << good.err;

  // Shift the constant term of the first cubic piece by 1e-3.
  auto text = slurp(path("m.txt"));
  const std::string header = "lo,hi,c0,c1,c2,c3\n";
  const auto row = text.find(header) + header.size();
  const auto row_end = text.find('\n', row);
  auto fields = split_fields(std::string_view(text).substr(row, row_end - row));
  const std::string c0 = format_double(*parse_double(fields[2]) - 1e-3);
  std::string edited;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    edited += (i ? "," : "") + (i == 2 ? c0 : std::string(fields[i]));
  }
  text.replace(row, row_end - row, edited);
  write_file(path("bad.txt"), text);
  args[2] = path("bad.txt");
  const auto bad = run(args);
  EXPECT_EQ(bad.code, 1) << bad.out << bad.err;
  EXPECT_NE(bad.out.find("FAIL"), std::string::npos);
}

TEST_F(CliTest, ValidateVerdictDoesNotDependOnSeed) {
  const std::vector<std::string> base{"validate", "--range", "2", "--n-steps", "16", "--oracle-steps", "1024",
                                      "--oracle-grid", "8", "--mc-triples", "3", "--mc-samples", "1000000",
                                      "--psd-configs", "2", "--audit-points", "10000"};
  for (const char* seed : {"1", "2", "3"}) {
    auto args = base;
    args.insert(args.end(), {"--seed", seed});
    EXPECT_EQ(run(args).code, 0) << seed;
  }
}

TEST_F(CliTest, FitReportsParametersAndWritesModel) {
  write_synthetic_data("data.csv", 200, 5);
  const auto r = run({"fit", "--data", path("data.csv"), "--out", path("fit.txt"), "--n-steps", "32"});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* key : {"range=", "mu=", "nu=", "sill=", "nugget=", "objective="}) {
    EXPECT_NE(r.out.find(key), std::string::npos) << key;
  }
  EXPECT_NO_THROW(cli::load_model(path("fit.txt")));
  const auto again = run({"fit", "--data", path("data.csv"), "--out", path("fit2.txt"), "--n-steps", "32"});
  EXPECT_EQ(again.out, r.out);
}

TEST_F(CliTest, FitOnConstantDataWarnsAndFindsNoVariance) {
  std::string csv = "lon_deg,lat_deg,value\n";
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> lon(-180, 180), lat(-80, 80);
  for (int i = 0; i < 60; ++i) csv += std::to_string(lon(rng)) + "," + std::to_string(lat(rng)) + ",2.5\n";
  write_file(path("flat.csv"), csv);
  const auto r = run({"fit", "--data", path("flat.csv"), "--out", path("fit.txt"), "--n-steps", "16"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("warning"), std::string::npos);
  const auto model = cli::load_model(path("fit.txt"));
  EXPECT_LT(model.sill(), 1e-6);
}

TEST_F(CliTest, FitInputErrors) {
  write_file(path("novalue.csv"), "lon_deg,lat_deg\n1,2\n3,4\n");
  EXPECT_EQ(run({"fit", "--data", path("novalue.csv"), "--out", path("f.txt")}).code, 2);
  write_file(path("wrongname.csv"), "lon_deg,lat_deg,height\n1,2,3\n3,4,5\n");
  EXPECT_EQ(run({"fit", "--data", path("wrongname.csv"), "--out", path("f.txt")}).code, 2);
  write_file(path("bad.csv"), "lon_deg,lat_deg,value\n1,2,3\n3,4\n");
  const auto r = run({"fit", "--data", path("bad.csv"), "--out", path("f.txt")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("line 3"), std::string::npos) << r.err;
  EXPECT_EQ(run({"fit", "--data", path("absent.csv"), "--out", path("f.txt")}).code, 3);
}

TEST_F(CliTest, PredictInterpolatesAndHandlesFarAndEmptyTargets) {
  ASSERT_EQ(run({"tabulate", "--range", "0.3", "--n-steps", "16", "--out", path("m.txt")}).code, 0);
  write_file(path("data.csv"), "lon_deg,lat_deg,value\n0,60,1\n90,60,2\n180,60,4\n-90,60,5\n");
  write_file(path("targets.csv"), "lon_deg,lat_deg\n90,60\n0,-60\n");
  ASSERT_EQ(run({"predict", "--model", path("m.txt"), "--data", path("data.csv"), "--targets",
                 path("targets.csv"), "--out", path("pred.csv")})
                .code,
            0);
  std::ifstream in(path("pred.csv"));
  const auto t = read_points(in, 2);
  EXPECT_EQ(t.header.back(), "var");
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_NEAR(t.rows[0].values[0], 2.0, 1e-8);
  EXPECT_LE(t.rows[0].values[1], 1e-8);
  EXPECT_NEAR(t.rows[1].values[0], 3.0, 1e-8);
  EXPECT_NEAR(t.rows[1].values[1], 1.0 * (1.0 + 1.0 / 4.0), 1e-8);

  write_file(path("empty.csv"), "lon_deg,lat_deg\n");
  ASSERT_EQ(run({"predict", "--model", path("m.txt"), "--data", path("data.csv"), "--targets",
                 path("empty.csv"), "--out", path("none.csv")})
                .code,
            0);
  EXPECT_EQ(slurp(path("none.csv")), "lon_deg,lat_deg,pred,var\n");

  write_file(path("broken.csv"), "lon_deg,lat_deg\n1,2\nx,3\n");
  EXPECT_EQ(run({"predict", "--model", path("m.txt"), "--data", path("data.csv"), "--targets",
                 path("broken.csv"), "--out", path("p.csv")})
                .code,
            2);
}

TEST_F(CliTest, SimulateIsDeterministicAndRecordsMetadata) {
  write_file(path("targets.csv"), "lon_deg,lat_deg\n0,0\n10,5\n-120,40\n");
  const std::vector<std::string> args{"simulate", "--range", "1", "--n-nodes", "2000", "--n-realizations",
                                      "3", "--seed", "42", "--targets", path("targets.csv")};
  auto a = args, b = args;
  a.insert(a.end(), {"--out", path("a.csv")});
  b.insert(b.end(), {"--out", path("b.csv")});
  ASSERT_EQ(run(a).code, 0);
  ASSERT_EQ(run(b).code, 0);
  const auto text = slurp(path("a.csv"));
  EXPECT_EQ(text, slurp(path("b.csv")));
  EXPECT_TRUE(text.starts_with("# seed=42\n# n_nodes=2000\n# mu=1 nu=1 range=1 n_steps=64"));
  EXPECT_NE(text.find("lon_deg,lat_deg,r0,r1,r2\n"), std::string::npos);
}

TEST_F(CliTest, SimulateRequiresSeedAndEnoughNodes) {
  write_file(path("targets.csv"), "lon_deg,lat_deg\n0,0\n");
  EXPECT_EQ(run({"simulate", "--targets", path("targets.csv"), "--out", path("o.csv")}).code, 2);
  EXPECT_EQ(run({"simulate", "--seed", "1", "--n-nodes", "99", "--targets", path("targets.csv"), "--out",
                 path("o.csv")})
                .code,
            2);
}

TEST_F(CliTest, SimulateZeroSillGivesZeros) {
  write_file(path("targets.csv"), "lon_deg,lat_deg\n0,0\n10,5\n");
  ASSERT_EQ(run({"simulate", "--sill", "0", "--seed", "3", "--n-nodes", "500", "--n-realizations", "2",
                 "--targets", path("targets.csv"), "--out", path("z.csv")})
                .code,
            0);
  std::ifstream in(path("z.csv"));
  const auto t = read_points(in, 2);
  for (const auto& row : t.rows) {
    for (double v : row.values) EXPECT_EQ(v, 0.0);
  }
}
