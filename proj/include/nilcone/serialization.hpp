#pragma once

#include <stdexcept>
#include <string>

#include <json.hpp>

#include "nilcone/algebra.hpp"
#include "nilcone/coupling.hpp"
#include "nilcone/derivative.hpp"
#include "nilcone/report.hpp"

namespace nilcone {

using json = nlohmann::json;

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

namespace detail {
inline Rational rational_from_json(const json& v)
{
  if (v.is_string())
    return parse_rational(v.get<std::string>());
  if (v.is_number_integer())
    return Rational(static_cast<long>(v.get<std::int64_t>()));
  throw ConfigError("structure constant must be an integer or a \"p/q\" string");
}
} // namespace detail

/// {"name": ..., "dim": m, "brackets": [{"i": 1, "j": 2, "coeffs": {"3": "1"}}]}
/// with 1-based indices; [X_j, X_i] follows by antisymmetry.
inline NilpotentAlgebraSpec algebra_from_json(const json& j)
{
  try {
    NilpotentAlgebraSpec spec;
    spec.name = j.value("name", std::string("custom"));
    const auto dim = j.at("dim").get<std::int64_t>();
    if (dim < 1)
      throw ConfigError("dim must be positive");
    spec.dim = static_cast<std::size_t>(dim);
    spec.constants = StructureTensor(spec.dim);
    for (const auto& b : j.value("brackets", json::array())) {
      const auto i = b.at("i").get<std::int64_t>(), jj = b.at("j").get<std::int64_t>();
      if (i < 1 || jj < 1 || i > dim || jj > dim || i == jj)
        throw ConfigError("bracket indices out of range");
      RationalVector v = zero_vector(spec.dim);
      for (const auto& [k, c] : b.at("coeffs").items()) {
        const auto kk = std::stoll(k);
        if (kk < 1 || kk > dim)
          throw ConfigError("coefficient index out of range");
        v[static_cast<std::size_t>(kk - 1)] = detail::rational_from_json(c);
      }
      spec.constants.set_bracket(static_cast<std::size_t>(i - 1), static_cast<std::size_t>(jj - 1), v);
    }
    return spec;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid algebra JSON: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid algebra JSON: ") + e.what());
  }
}

inline json algebra_to_json(const NilpotentAlgebraSpec& spec)
{
  json brackets = json::array();
  for (std::size_t i = 0; i < spec.dim; ++i)
    for (std::size_t j = i + 1; j < spec.dim; ++j) {
      json coeffs = json::object();
      for (std::size_t k = 0; k < spec.dim; ++k)
        if (spec.constants(i, j, k) != 0)
          coeffs[std::to_string(k + 1)] = to_string(spec.constants(i, j, k));
      if (!coeffs.empty())
        brackets.push_back({{"i", i + 1}, {"j", j + 1}, {"coeffs", coeffs}});
    }
  return {{"name", spec.name}, {"dim", spec.dim}, {"brackets", brackets}};
}

/// {"group": "heisenberg3", "twist": "scale2" | "shear" | null, "domain": "malcev_box"}
inline CouplingConfig coupling_from_json(const json& j)
{
  try {
    CouplingConfig cfg;
    cfg.group = j.at("group").get<std::string>();
    if (j.contains("twist") && !j.at("twist").is_null())
      cfg.twist = j.at("twist").get<std::string>();
    cfg.domain = j.value("domain", std::string("malcev_box"));
    return cfg;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid coupling JSON: ") + e.what());
  }
}

inline json coupling_to_json(const CouplingConfig& cfg)
{
  return {{"group", cfg.group}, {"twist", cfg.twist ? json(*cfg.twist) : json(nullptr)}, {"domain", cfg.domain}};
}

inline json convergence_summary(const ConvergenceReport& r)
{
  json rows = json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"n", row.n},
                    {"samples", row.samples},
                    {"fraction_within_eps", report::num(row.fraction_within_eps)},
                    {"median_proxy_dist", report::num(row.median_proxy_dist)},
                    {"seed", row.seed}});
  return {{"experiment", r.experiment}, {"eps", report::num(r.eps)},       {"threshold", report::num(r.threshold)},
          {"trend_ok", r.trend_ok()},   {"final_fraction", report::num(r.final_fraction())},
          {"passes", r.passes()},       {"rows", rows}};
}

} // namespace nilcone
