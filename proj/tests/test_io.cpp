#include <gtest/gtest.h>

#include <sstream>

#include "test_support.hpp"

namespace hmv {
namespace {

using io::json;

TEST(CsvReader, CovarianceWithHeader) {
  std::istringstream in("a, b\n2,0.5\n0.5,1\n");
  const auto c = io::read_covariance_csv(in);
  EXPECT_EQ(c.labels(), (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(c(0, 1), 0.5);
  EXPECT_EQ(c(0, 0), 2.0);
}

TEST(CsvReader, CovarianceWithoutHeader) {
  std::istringstream in("1,0\r\n0,+1e-1\n\n");
  const auto c = io::read_covariance_csv(in);
  EXPECT_FALSE(c.has_labels());
  EXPECT_EQ(c(1, 1), 0.1);
}

TEST(CsvReader, Errors) {
  auto code_of = [](const std::string& text) {
    std::istringstream in(text);
    try {
      io::read_covariance_csv(in);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::EmptyResult;
  };
  EXPECT_EQ(code_of("1,2\n3\n"), ErrorCode::IoError);
  EXPECT_EQ(code_of("1,0\n0,x\n"), ErrorCode::IoError);
  EXPECT_EQ(code_of("a,b,c\n1,0\n0,1\n"), ErrorCode::IoError);
  EXPECT_EQ(code_of("a,b\n"), ErrorCode::IoError);
  EXPECT_EQ(code_of("1,2,3\n4,5,6\n"), ErrorCode::NotSquare);
  EXPECT_EQ(code_of("1,2\n3,4\n"), ErrorCode::NotSymmetric);
  EXPECT_THROW(io::read_covariance_csv(std::string("/nonexistent/cov.csv")), Error);
}

TEST(CsvReader, ReturnsPanel) {
  std::istringstream in("x,y\n1,2\n3,4\n5,6\n");
  const auto p = io::read_returns_csv(in);
  EXPECT_EQ(p.values.rows(), 3);
  EXPECT_EQ(p.values(2, 1), 6.0);
  EXPECT_EQ(p.labels.back(), "y");
}

TEST(CsvWriter, RoundTripsExactly) {
  Rng rng(71);
  const auto c = testing::random_spd(5, rng);
  std::stringstream buf;
  io::write_matrix_csv(buf, c.values(), {"a", "b", "c", "d", "e"});
  const auto back = io::read_covariance_csv(buf);
  EXPECT_EQ(back.values(), c.values());
  EXPECT_EQ(back.labels().front(), "a");
}

TEST(JsonConfig, AllocationRoundTrip) {
  AllocationConfig c;
  c.gammas = {0.4, 0.2};
  c.mode = AllocationMode::schur_literal;
  c.fitness = FitnessKind::diag_sum_squares;
  c.terminal = TerminalMethod::inverse_variance;
  c.terminal_size = 3;
  c.seriation = SeriationMethod::identity;
  c.adaptive_cap = false;
  const auto back = io::allocation_from_json(io::to_json(c));
  EXPECT_EQ(io::to_json(back), io::to_json(c));
}

TEST(JsonConfig, GammaBFollowsGammaUnlessGiven) {
  auto c = io::allocation_from_json(json{{"gamma", 0.3}});
  EXPECT_EQ(c.gammas.gamma_b, 0.3);
  c = io::allocation_from_json(json{{"gamma", 0.3}, {"gamma_b", 0.9}});
  EXPECT_EQ(c.gammas.gamma_b, 0.9);
  AllocationConfig base;
  base.gammas = {0.5, 0.1};
  c = io::allocation_from_json(json{{"m", 2}}, base);
  EXPECT_EQ(c.gammas.gamma_b, 0.1);
  EXPECT_EQ(c.terminal_size, 2);
}

TEST(JsonConfig, RejectsUnknownKeysAndBadValues) {
  auto code_of = [](const json& j) {
    try {
      io::allocation_from_json(j);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::IoError;
  };
  EXPECT_EQ(code_of(json{{"gama", 0.5}}), ErrorCode::InvalidConfig);
  EXPECT_EQ(code_of(json{{"gamma", "high"}}), ErrorCode::InvalidConfig);
  EXPECT_EQ(code_of(json{{"mode", "fast"}}), ErrorCode::InvalidConfig);
  EXPECT_EQ(code_of(json{{"gamma", 2.0}}), ErrorCode::InvalidConfig);
  EXPECT_EQ(code_of(json::array()), ErrorCode::InvalidConfig);
  EXPECT_THROW(io::experiment_from_json(json{{"assets", 10}}), Error);
  EXPECT_THROW(io::experiment_from_json(json{{"allocation", {{"foo", 1}}}}), Error);
}

TEST(JsonConfig, ExperimentRoundTrip) {
  auto c = ExperimentConfig::desk();
  c.assets = 30;
  c.seed = 42;
  c.gamma_grid = {0.0, 1.0};
  c.allocation.gammas = GammaPair::uniform(0.5);
  const auto back = io::experiment_from_json(io::to_json(c));
  EXPECT_EQ(io::to_json(back), io::to_json(c));
  EXPECT_EQ(back.seed, 42u);
}

TEST(JsonReport, Layout) {
  const auto cov = io::read_covariance_csv(std::string(HMV_DATA_DIR) + "/equi3.csv");
  AllocationConfig cfg;
  cfg.terminal_size = 2;
  const auto report = allocate(cov, cfg);
  const json j = io::to_json(report, cfg);
  EXPECT_EQ(j.at("labels"), json({"a1", "a2", "a3"}));
  EXPECT_EQ(j.at("weights").size(), 3u);
  EXPECT_EQ(j.at("mode"), "schur_debiased");
  EXPECT_EQ(j.at("diagnostics").at("splits").size(), 1u);
  EXPECT_EQ(j.at("diagnostics").at("seriation"), json({0, 1, 2}));
  EXPECT_EQ(j.at("config").at("m"), 2);
}

TEST(CsvWriter, ExperimentAndSummary) {
  ExperimentResult r;
  r.rows.push_back({0, 0.0, 0.5, 1.0});
  r.rows.push_back({0, 1.0, 0.25, 0.5});
  std::ostringstream rows, summary;
  io::write_experiment_csv(rows, r);
  io::write_summary_csv(summary, summarize(r));
  EXPECT_EQ(rows.str(), "trial,gamma,oos_variance,normalized\n0,0,0.5,1\n0,1,0.25,0.5\n");
  EXPECT_EQ(summary.str(), "gamma,mean,median,q10,q90\n0,1,1,1,1\n1,0.5,0.5,0.5,0.5\n");
}

TEST(Svg, RendersCurve) {
  std::vector<SummaryRow> s{{0.0, 1.0, 1.0, 1.0, 1.0, 3}, {1.0, 0.9, 0.9, 0.8, 1.0, 3}};
  const std::string svg = render_gamma_curve_svg(s);
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("polyline"), std::string::npos);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
}

}  // namespace
}  // namespace hmv
