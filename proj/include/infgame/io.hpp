#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "infgame/asymptotics.hpp"
#include "infgame/bench.hpp"
#include "infgame/montecarlo.hpp"
#include "infgame/solver.hpp"

namespace infgame::io {

using json = nlohmann::json;

/// Shortest round-trip decimal form, so written files are exact and stable.
inline std::string fmt(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << text;
  if (!out) throw ConfigError("failed writing '" + path + "'");
}

/// Parses a JSON configuration file; any failure is a ConfigError.
inline json read_json(const std::string& path) {
  std::string text;
  try {
    text = read_text(path);
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("'" + path + "': " + e.what());
  }
}

namespace detail {

inline void only_keys(const json& j, std::initializer_list<std::string_view> allowed,
                      std::string_view what) {
  if (!j.is_object()) throw ConfigError(std::string(what) + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError("unknown key '" + key + "' in " + std::string(what));
  }
}

inline const json& need(const json& j, const char* key, std::string_view what) {
  auto it = j.find(key);
  if (it == j.end()) {
    throw ConfigError(std::string(what) + " is missing '" + key + "'");
  }
  return *it;
}

inline double number(const json& j, std::string_view what) {
  if (!j.is_number()) throw ConfigError(std::string(what) + " must be a number");
  return j.get<double>();
}

inline Vector vector(const json& j, std::string_view what) {
  if (!j.is_array()) throw ConfigError(std::string(what) + " must be an array");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = number(j[i], what);
  return v;
}

inline Matrix matrix(const json& j, std::string_view what) {
  if (!j.is_array() || j.empty()) throw ConfigError(std::string(what) + " must be a nested array");
  const std::size_t rows = j.size();
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  Matrix out(static_cast<Index>(rows), static_cast<Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) {
      throw DimensionError(std::string(what) + " rows have different lengths");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      out(static_cast<Index>(r), static_cast<Index>(c)) = number(j[r][c], what);
    }
  }
  return out;
}

inline json to_json(const Vector& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline json to_json(const Matrix& m) {
  json out = json::array();
  for (Index r = 0; r < m.rows(); ++r) out.push_back(to_json(Vector(m.row(r).transpose())));
  return out;
}

}  // namespace detail

// ---- market -------------------------------------------------------------

/// {"r", "nu" or "mu", "Sigma" or "sigma", "T"}; nu = mu - r when only mu is given.
inline MarketParams market_from_json(const json& j) {
  detail::only_keys(j, {"r", "nu", "mu", "Sigma", "sigma", "T"}, "market");
  const double r = detail::number(detail::need(j, "r", "market"), "market.r");
  const double T = detail::number(detail::need(j, "T", "market"), "market.T");
  Vector nu;
  if (j.contains("nu")) {
    nu = detail::vector(j["nu"], "market.nu");
  } else if (j.contains("mu")) {
    nu = excess_returns(detail::vector(j["mu"], "market.mu"), r);
  } else {
    throw ConfigError("market is missing 'nu' (or 'mu')");
  }
  if (j.contains("Sigma")) {
    return MarketParams::from_covariance(r, nu, detail::matrix(j["Sigma"], "market.Sigma"), T);
  }
  if (j.contains("sigma")) {
    return MarketParams::from_volatility(r, nu, detail::matrix(j["sigma"], "market.sigma"), T);
  }
  throw ConfigError("market is missing 'Sigma' (or 'sigma')");
}

inline json market_to_json(const MarketParams& market, const Vector* mu = nullptr) {
  json out;
  out["r"] = market.r();
  if (mu) out["mu"] = detail::to_json(*mu);
  out["nu"] = detail::to_json(market.nu());
  out["Sigma"] = detail::to_json(market.Sigma());
  out["T"] = market.T();
  return out;
}

// ---- agents and network ---------------------------------------------------

inline std::vector<AgentParams> agents_from_json(const json& j) {
  detail::only_keys(j, {"agents"}, "agents file");
  const json& list = detail::need(j, "agents", "agents file");
  if (!list.is_array() || list.empty()) throw ConfigError("'agents' must be a non-empty array");
  std::vector<AgentParams> out;
  for (const auto& a : list) {
    detail::only_keys(a, {"alpha", "theta", "x0"}, "agent");
    AgentParams p;
    p.alpha = detail::number(detail::need(a, "alpha", "agent"), "agent.alpha");
    p.theta = a.contains("theta") ? detail::number(a["theta"], "agent.theta") : 0.0;
    p.x0 = detail::number(detail::need(a, "x0", "agent"), "agent.x0");
    p.validate();
    out.push_back(p);
  }
  return out;
}

inline json agents_to_json(std::span<const AgentParams> agents) {
  json list = json::array();
  for (const auto& a : agents) list.push_back({{"alpha", a.alpha}, {"theta", a.theta}, {"x0", a.x0}});
  return {{"agents", list}};
}

inline InfluenceNetwork network_from_json(const json& j) {
  detail::only_keys(j, {"n", "W"}, "network");
  Matrix W = detail::matrix(detail::need(j, "W", "network"), "network.W");
  if (j.contains("n") && detail::number(j["n"], "network.n") != static_cast<double>(W.rows())) {
    throw NetworkError("network 'n' does not match the size of W");
  }
  return InfluenceNetwork::validate(std::move(W));
}

inline json network_to_json(const InfluenceNetwork& network) {
  return {{"n", network.n()}, {"W", detail::to_json(network.W())}};
}

namespace detail {

inline std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.emplace_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::optional<double> parse_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const char* first = s.data();
  if (*first == '+') ++first;
  auto res = std::from_chars(first, s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v)) {
    return std::nullopt;
  }
  return v;
}

inline std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out.push_back(line);
  }
  while (!out.empty() && trim(out.back()).empty()) out.pop_back();
  return out;
}

inline bool is_iso_date(const std::string& s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
  for (std::size_t i : {0, 1, 2, 3, 5, 6, 8, 9}) {
    if (s[i] < '0' || s[i] > '9') return false;
  }
  const int month = std::stoi(s.substr(5, 2));
  const int day = std::stoi(s.substr(8, 2));
  return month >= 1 && month <= 12 && day >= 1 && day <= 31;
}

}  // namespace detail

/// n rows of n comma-separated weights.
inline InfluenceNetwork network_from_csv(const std::string& text) {
  const auto lines = detail::lines_of(text);
  if (lines.empty()) throw NetworkError("network CSV is empty");
  const auto n = static_cast<Index>(lines.size());
  Matrix W(n, n);
  for (Index r = 0; r < n; ++r) {
    const auto cells = detail::split(lines[static_cast<std::size_t>(r)], ',');
    if (static_cast<Index>(cells.size()) != n) {
      throw NetworkError("network CSV line " + std::to_string(r + 1) + ": expected " +
                         std::to_string(n) + " values");
    }
    for (Index c = 0; c < n; ++c) {
      auto v = detail::parse_double(detail::trim(cells[static_cast<std::size_t>(c)]));
      if (!v) throw NetworkError("network CSV line " + std::to_string(r + 1) + ": bad number");
      W(r, c) = *v;
    }
  }
  return InfluenceNetwork::validate(std::move(W));
}

/// Loads a network from a .csv or .json file.
inline InfluenceNetwork load_network(const std::string& path) {
  if (path.size() >= 4 && path.substr(path.size() - 4) == ".csv") {
    std::string text;
    try {
      text = read_text(path);
    } catch (const DataError& e) {
      throw ConfigError(e.what());
    }
    return network_from_csv(text);
  }
  return network_from_json(read_json(path));
}

// ---- solver configuration and results ------------------------------------

inline SolverConfig solver_config_from_json(const json& j, SolverConfig base = {}) {
  detail::only_keys(j,
                    {"eps", "max_iters", "eta_mode", "u_mode", "delta_u", "relaxation",
                     "taylor_warn_threshold", "quad_tol", "threads", "keep_U"},
                    "solver config");
  if (j.contains("eps")) base.eps = detail::number(j["eps"], "eps");
  if (j.contains("max_iters")) {
    if (!j["max_iters"].is_number_integer()) throw ConfigError("max_iters must be an integer");
    base.max_iters = j["max_iters"].get<int>();
  }
  if (j.contains("eta_mode")) base.eta_mode = parse_eta_mode(j["eta_mode"].get<std::string>());
  if (j.contains("u_mode")) base.u_mode = parse_u_mode(j["u_mode"].get<std::string>());
  if (j.contains("delta_u")) base.delta_u = detail::number(j["delta_u"], "delta_u");
  if (j.contains("relaxation")) base.relaxation = detail::number(j["relaxation"], "relaxation");
  if (j.contains("taylor_warn_threshold")) {
    base.taylor_warn_threshold = detail::number(j["taylor_warn_threshold"], "taylor_warn_threshold");
  }
  if (j.contains("quad_tol")) base.quad_abs_tol = detail::number(j["quad_tol"], "quad_tol");
  if (j.contains("threads")) {
    if (!j["threads"].is_number_unsigned()) throw ConfigError("threads must be a non-negative integer");
    base.threads = j["threads"].get<unsigned>();
  }
  if (j.contains("keep_U")) {
    if (!j["keep_U"].is_boolean()) throw ConfigError("keep_U must be a boolean");
    base.keep_U = j["keep_U"].get<bool>();
  }
  base.validate();
  return base;
}

inline json solver_config_to_json(const SolverConfig& c) {
  return {{"eps", c.eps},
          {"max_iters", c.max_iters},
          {"eta_mode", std::string(to_string(c.eta_mode))},
          {"u_mode", std::string(to_string(c.u_mode))},
          {"delta_u", c.delta_u},
          {"relaxation", c.relaxation},
          {"taylor_warn_threshold", c.taylor_warn_threshold},
          {"quad_tol", c.quad_abs_tol},
          {"keep_U", c.keep_U}};
}

inline json strategy_to_json(Index agent, const StrategyCoeffs& s, const MarketParams& market) {
  return {{"agent", agent}, {"c", detail::to_json(s.c)}, {"T", market.T()}, {"r", market.r()}};
}

inline json solution_to_json(const GameSolution& sol) {
  json out;
  out["converged"] = sol.converged;
  out["iters"] = sol.iters;
  out["residual"] = sol.residual;
  out["eta_mode"] = std::string(to_string(sol.eta_mode));
  out["u_mode"] = std::string(to_string(sol.u_mode));
  out["eta"] = detail::to_json(sol.eta);
  json coeffs = json::array();
  for (const auto& c : sol.coeffs) coeffs.push_back(detail::to_json(c.c));
  out["coeffs"] = coeffs;
  out["trace"] = sol.trace;
  out["warnings"] = sol.warnings;
  return out;
}

/// `t,P_1,...,P_m` on `points` uniform times in [0, T].
inline std::string strategy_csv(const StrategyCoeffs& s, const MarketParams& market,
                                Index points = 101) {
  const SampledStrategy grid = sample(s, market, points);
  std::ostringstream out;
  out << 't';
  for (Index a = 0; a < s.m(); ++a) out << ",P_" << (a + 1);
  out << '\n';
  for (Index k = 0; k < grid.points(); ++k) {
    out << fmt(grid.time(k));
    for (Index a = 0; a < s.m(); ++a) out << ',' << fmt(grid.values(k, a));
    out << '\n';
  }
  return out.str();
}

// ---- simulation ----------------------------------------------------------

inline std::string moments_csv(const SimResult& res) {
  std::ostringstream out;
  out << "agent,mean,var,stderr_mean,stderr_var\n";
  for (std::size_t j = 0; j < res.moments.size(); ++j) {
    const auto& e = res.moments[j];
    out << (j + 1) << ',' << fmt(e.mean) << ',' << fmt(e.variance) << ',' << fmt(e.stderr_mean)
        << ',' << fmt(e.stderr_var) << '\n';
  }
  return out.str();
}

/// One row per path, one column per agent.
inline std::string samples_csv(const SimResult& res) {
  std::ostringstream out;
  out << "path";
  for (Index j = 0; j < res.samples.cols(); ++j) out << ",X_" << (j + 1);
  out << '\n';
  for (Index p = 0; p < res.samples.rows(); ++p) {
    out << p;
    for (Index j = 0; j < res.samples.cols(); ++j) out << ',' << fmt(res.samples(p, j));
    out << '\n';
  }
  return out.str();
}

// ---- asymptotic report ---------------------------------------------------

inline json wealth_to_json(const WealthDist& d) {
  return {{"mean", d.mean}, {"variance", d.variance}};
}

/// Limit quantities plus, when `solution` carries U, the weight matrix norm
/// |V_j|_2 for each agent (null where the decomposition is undefined).
inline json asymptotic_report(const AsymptoticResult& limit, std::span<const AgentParams> agents,
                              const MarketParams& market, const GameSolution* solution) {
  json out;
  out["alpha_tilde"] = limit.alpha_tilde;
  out["asymptotic_coeffs"] = detail::to_json(limit.coeffs.c);
  out["within_hypothesis"] = limit.within_hypothesis;
  out["warnings"] = limit.warnings;
  Vector alphas(static_cast<Index>(agents.size()));
  for (std::size_t j = 0; j < agents.size(); ++j) alphas(static_cast<Index>(j)) = agents[j].alpha;
  json per_agent = json::array();
  for (std::size_t j = 0; j < agents.size(); ++j) {
    json a;
    a["agent"] = j + 1;
    a["alpha"] = agents[j].alpha;
    a["V_norm"] = nullptr;
    if (solution && solution->has_U()) {
      try {
        const Matrix V = weight_V(*solution, alphas, limit.alpha_tilde, static_cast<Index>(j));
        a["V_norm"] = Eigen::JacobiSVD<Matrix>(V).singularValues()(0);
      } catch (const DegenerateError&) {
        a["V_note"] = "alpha equals the asymptotic risk aversion";
      }
    }
    const auto w = compare_terminal_wealth(agents[j], limit.alpha_tilde, market);
    a["wealth_rational"] = wealth_to_json(w.rational);
    a["wealth_asymptotic"] = wealth_to_json(w.asymptotic);
    per_agent.push_back(a);
  }
  out["per_agent"] = per_agent;
  return out;
}

// ---- price panel ---------------------------------------------------------

/// Strict `date,asset1,...` CSV with ISO-8601 dates. Any malformed line is a
/// DataError naming the line number.
inline PricePanel parse_price_csv(const std::string& text, double dt_obs = 1.0 / 252.0) {
  const auto lines = detail::lines_of(text);
  if (lines.empty()) throw DataError("line 1: price file is empty");
  const auto header = detail::split(lines[0], ',');
  if (header.size() < 2 || detail::trim(header[0]) != "date") {
    throw DataError("line 1: header must be 'date,<asset>,...'");
  }
  PricePanel panel;
  panel.dt_obs = dt_obs;
  for (std::size_t c = 1; c < header.size(); ++c) {
    auto name = detail::trim(header[c]);
    if (name.empty()) throw DataError("line 1: empty asset name");
    panel.assets.push_back(name);
  }
  const auto m = static_cast<Index>(panel.assets.size());
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::string where = "line " + std::to_string(i + 1) + ": ";
    const auto cells = detail::split(lines[i], ',');
    if (static_cast<Index>(cells.size()) != m + 1) {
      throw DataError(where + "expected " + std::to_string(m + 1) + " fields, found " +
                      std::to_string(cells.size()));
    }
    const auto date = detail::trim(cells[0]);
    if (!detail::is_iso_date(date)) throw DataError(where + "bad date '" + date + "'");
    if (!panel.dates.empty() && date <= panel.dates.back()) {
      throw DataError(where + "dates must be strictly increasing");
    }
    std::vector<double> row;
    for (Index a = 0; a < m; ++a) {
      const auto cell = detail::trim(cells[static_cast<std::size_t>(a + 1)]);
      auto v = detail::parse_double(cell);
      if (!v) throw DataError(where + "bad price '" + cell + "'");
      if (!(*v > 0.0)) throw DataError(where + "non-positive price " + cell);
      row.push_back(*v);
    }
    panel.dates.push_back(date);
    rows.push_back(std::move(row));
  }
  panel.prices.resize(static_cast<Index>(rows.size()), m);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (Index a = 0; a < m; ++a) {
      panel.prices(static_cast<Index>(i), a) = rows[i][static_cast<std::size_t>(a)];
    }
  }
  return panel;
}

inline std::string price_csv(const PricePanel& panel) {
  std::ostringstream out;
  out << "date";
  for (const auto& a : panel.assets) out << ',' << a;
  out << '\n';
  for (Index i = 0; i < panel.prices.rows(); ++i) {
    out << panel.dates[static_cast<std::size_t>(i)];
    for (Index a = 0; a < panel.prices.cols(); ++a) out << ',' << fmt(panel.prices(i, a));
    out << '\n';
  }
  return out.str();
}

}  // namespace infgame::io
