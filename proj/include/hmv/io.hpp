#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "hmv/allocator.hpp"
#include "hmv/covmat.hpp"
#include "hmv/error.hpp"
#include "hmv/sim.hpp"

namespace hmv::io {

using nlohmann::json;

/// 17 significant digits; reads back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string_view rest(line);
  while (true) {
    const auto comma = rest.find(',');
    cells.emplace_back(trim(rest.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return cells;
}

inline std::optional<double> parse_double(std::string_view cell) {
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc{} || ptr != cell.data() + cell.size()) return std::nullopt;
  return value;
}

struct Table {
  std::vector<std::string> header;
  Matrix values;
};

/// Comma-separated numbers with an optional first row of labels.
inline Table read_table(std::istream& in, const std::string& source) {
  Table table;
  std::vector<std::vector<double>> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto cells = split_row(line);
    std::vector<double> row;
    row.reserve(cells.size());
    bool numeric = true;
    for (const auto& cell : cells) {
      const auto v = parse_double(cell);
      if (!v) {
        numeric = false;
        break;
      }
      row.push_back(*v);
    }
    if (!numeric) {
      if (!first) {
        throw Error(ErrorCode::IoError, source + ": non-numeric cell in row " + std::to_string(rows.size() + 1));
      }
      table.header = cells;
    } else {
      if (!rows.empty() && row.size() != rows.front().size()) {
        throw Error(ErrorCode::IoError, source + ": ragged rows");
      }
      rows.push_back(std::move(row));
    }
    first = false;
  }
  const auto cols = rows.empty() ? table.header.size() : rows.front().size();
  if (!table.header.empty() && table.header.size() != cols) {
    throw Error(ErrorCode::IoError, source + ": header has " + std::to_string(table.header.size()) +
                                        " labels for " + std::to_string(cols) + " columns");
  }
  table.values.resize(static_cast<Index>(rows.size()), static_cast<Index>(cols));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      table.values(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
    }
  }
  return table;
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
  return in;
}

}  // namespace detail

inline CovarianceMatrix read_covariance_csv(std::istream& in, const std::string& source = "<stream>") {
  auto table = detail::read_table(in, source);
  if (table.values.rows() == 0) throw Error(ErrorCode::IoError, source + ": no data rows");
  return CovarianceMatrix(std::move(table.values), std::move(table.header));
}

inline CovarianceMatrix read_covariance_csv(const std::string& path) {
  auto in = detail::open_input(path);
  return read_covariance_csv(in, path);
}

inline ReturnsPanel read_returns_csv(std::istream& in, const std::string& source = "<stream>") {
  auto table = detail::read_table(in, source);
  return ReturnsPanel{std::move(table.values), std::move(table.header)};
}

inline ReturnsPanel read_returns_csv(const std::string& path) {
  auto in = detail::open_input(path);
  return read_returns_csv(in, path);
}

inline void write_matrix_csv(std::ostream& out, const Matrix& m, const std::vector<std::string>& labels = {}) {
  if (!labels.empty()) {
    for (std::size_t j = 0; j < labels.size(); ++j) out << (j ? "," : "") << labels[j];
    out << '\n';
  }
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << format_double(m(i, j));
    out << '\n';
  }
}

inline std::vector<std::string> default_labels(const std::vector<std::string>& labels, Index n) {
  if (!labels.empty()) return labels;
  std::vector<std::string> out;
  for (Index i = 0; i < n; ++i) out.push_back("asset" + std::to_string(i));
  return out;
}

inline std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

inline Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

// ---- configuration <-> JSON -----------------------------------------------

inline json to_json(const AllocationConfig& c) {
  return json{{"gamma", c.gammas.gamma_c},
              {"gamma_b", c.gammas.gamma_b},
              {"mode", std::string(to_string(c.mode))},
              {"fitness", std::string(to_string(c.fitness))},
              {"terminal", std::string(to_string(c.terminal))},
              {"m", c.terminal_size},
              {"seriation", std::string(to_string(c.seriation))},
              {"adaptive_cap", c.adaptive_cap},
              {"eps_pd", c.tolerances.eps_pd},
              {"eps_b", c.tolerances.eps_b},
              {"rcond", c.tolerances.rcond},
              {"shrink_grid_step", c.shrink_grid_step}};
}

namespace detail {

inline void reject_unknown_keys(const json& j, std::initializer_list<std::string_view> known, const char* what) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, std::string(what) + " must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw Error(ErrorCode::InvalidConfig, std::string(what) + ": unknown key '" + key + "'");
    }
  }
}

template <typename T>
void read_key(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("bad value for '") + key + "': " + e.what());
  }
}

}  // namespace detail

/// Missing keys keep the values already in `c`; gamma_b defaults to gamma.
inline AllocationConfig allocation_from_json(const json& j, AllocationConfig c = {}) {
  detail::reject_unknown_keys(j, {"gamma", "gamma_b", "mode", "fitness", "terminal", "m", "seriation", "adaptive_cap",
                                  "eps_pd", "eps_b", "rcond", "shrink_grid_step"},
                              "allocation config");
  detail::read_key(j, "gamma", c.gammas.gamma_c);
  if (j.contains("gamma")) c.gammas.gamma_b = c.gammas.gamma_c;
  detail::read_key(j, "gamma_b", c.gammas.gamma_b);
  std::string name;
  if (j.contains("mode")) { detail::read_key(j, "mode", name); c.mode = parse_allocation_mode(name); }
  if (j.contains("fitness")) { detail::read_key(j, "fitness", name); c.fitness = parse_fitness_kind(name); }
  if (j.contains("terminal")) { detail::read_key(j, "terminal", name); c.terminal = parse_terminal_method(name); }
  if (j.contains("seriation")) { detail::read_key(j, "seriation", name); c.seriation = parse_seriation_method(name); }
  detail::read_key(j, "m", c.terminal_size);
  detail::read_key(j, "adaptive_cap", c.adaptive_cap);
  detail::read_key(j, "eps_pd", c.tolerances.eps_pd);
  detail::read_key(j, "eps_b", c.tolerances.eps_b);
  detail::read_key(j, "rcond", c.tolerances.rcond);
  detail::read_key(j, "shrink_grid_step", c.shrink_grid_step);
  c.validate();
  return c;
}

inline json to_json(const ExperimentConfig& c) {
  return json{{"p", c.assets},
              {"rho", c.rho},
              {"a", c.anchor_samples},
              {"o", c.observation_samples},
              {"gamma_grid", c.gamma_grid},
              {"trials", c.trials},
              {"seed", c.seed},
              {"variance_jitter", c.anchor.variance_jitter},
              {"threads", c.threads},
              {"allocation", to_json(c.allocation)}};
}

inline ExperimentConfig experiment_from_json(const json& j, ExperimentConfig c = ExperimentConfig::desk()) {
  detail::reject_unknown_keys(j, {"p", "rho", "a", "o", "gamma_grid", "trials", "seed", "variance_jitter", "threads",
                                  "allocation"},
                              "experiment config");
  detail::read_key(j, "p", c.assets);
  detail::read_key(j, "rho", c.rho);
  detail::read_key(j, "a", c.anchor_samples);
  detail::read_key(j, "o", c.observation_samples);
  detail::read_key(j, "gamma_grid", c.gamma_grid);
  detail::read_key(j, "trials", c.trials);
  detail::read_key(j, "seed", c.seed);
  detail::read_key(j, "variance_jitter", c.anchor.variance_jitter);
  detail::read_key(j, "threads", c.threads);
  if (j.contains("allocation")) c.allocation = allocation_from_json(j.at("allocation"), c.allocation);
  c.validate();
  return c;
}

// ---- results ----------------------------------------------------------------

inline json to_json(const SplitDiagnostic& d) {
  return json{{"depth", d.depth},         {"offset", d.offset},         {"size", d.size},
              {"split_index", d.split_index}, {"gamma_cap", d.gamma_cap}, {"gamma_c", d.gamma_c},
              {"gamma_b", d.gamma_b},     {"nu_a", d.nu_a},             {"nu_d", d.nu_d},
              {"b_a_min", d.b_a_min},     {"b_a_max", d.b_a_max},       {"b_d_min", d.b_d_min},
              {"b_d_max", d.b_d_max},     {"retries", d.retries},       {"fell_back_to_zero", d.fell_back_to_zero}};
}

/// {labels, weights, gamma, gamma_b, mode, config, diagnostics}.
inline json to_json(const AllocationReport& report, const AllocationConfig& config) {
  json splits = json::array();
  for (const auto& s : report.splits) splits.push_back(to_json(s));
  const GammaPair g = config.effective_gammas();
  return json{{"labels", default_labels(report.weights.labels, report.weights.size())},
              {"weights", to_std(report.weights.values)},
              {"gamma", g.gamma_c},
              {"gamma_b", g.gamma_b},
              {"mode", std::string(to_string(config.mode))},
              {"config", to_json(config)},
              {"diagnostics",
               {{"portfolio_variance", report.portfolio_variance},
                {"seriation", report.seriation.order()},
                {"splits", std::move(splits)}}}};
}

inline void write_experiment_csv(std::ostream& out, const ExperimentResult& result) {
  out << "trial,gamma,oos_variance,normalized\n";
  for (const auto& r : result.rows) {
    out << r.trial << ',' << format_double(r.gamma) << ',' << format_double(r.oos_variance) << ','
        << format_double(r.normalized) << '\n';
  }
}

inline void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& summary) {
  out << "gamma,mean,median,q10,q90\n";
  for (const auto& r : summary) {
    out << format_double(r.gamma) << ',' << format_double(r.mean) << ',' << format_double(r.median) << ','
        << format_double(r.q10) << ',' << format_double(r.q90) << '\n';
  }
}

}  // namespace hmv::io
