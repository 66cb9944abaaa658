#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "shufflesum/analysis.hpp"
#include "shufflesum/permutation.hpp"
#include "shufflesum/shuffler.hpp"
#include "shufflesum/stats.hpp"

namespace shufflesum {

/// JSON schema for shuffler models, as used in experiment configs:
///   {"variant":"uniform","n":4}
///   {"variant":"cayley_mallows","n":4,"dispersion":0.3,"center":[2,1,3,4]}
///   {"variant":"timestamp_laplace","gamma":20.0,"offsets":[0,0.5,1]}
///   {"variant":"timestamp_laplace","gamma":20.0,"n":4,"offsets":"equispaced"}
///   {"variant":"point_mass","permutation":[2,1,3]}
///   {"variant":"composed","outer":{...},"inner":{...}}
///   {"variant":"inverse","base":{...}}
/// Permutations are written one-based. Offsets accept an explicit array or
/// the literals "all-equal" / "equispaced" (which require "n").
inline ShufflerModel model_from_json(const nlohmann::json& j) {
  const std::string variant = j.at("variant").get<std::string>();
  if (variant == "uniform") {
    return ShufflerModel::uniform(j.at("n").get<std::size_t>());
  }
  if (variant == "cayley_mallows") {
    const std::size_t n = j.at("n").get<std::size_t>();
    const double dispersion = j.at("dispersion").get<double>();
    if (j.contains("center"))
      return ShufflerModel::cayley_mallows(
          n, dispersion,
          Permutation::from_one_based(j.at("center").get<std::vector<std::uint32_t>>()));
    return ShufflerModel::cayley_mallows(n, dispersion);
  }
  if (variant == "timestamp_laplace") {
    const double gamma = j.at("gamma").get<double>();
    const auto& offsets = j.at("offsets");
    if (offsets.is_string()) {
      const std::size_t n = j.at("n").get<std::size_t>();
      const std::string literal = offsets.get<std::string>();
      std::vector<double> t(n, 0.5);
      if (literal == "equispaced") {
        for (std::size_t i = 0; i < n; ++i)
          t[i] = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
      } else if (literal != "all-equal") {
        throw std::invalid_argument("model_from_json: unknown offsets literal '" + literal +
                                    "'");
      }
      return ShufflerModel::timestamp_laplace(gamma, std::move(t));
    }
    return ShufflerModel::timestamp_laplace(gamma, offsets.get<std::vector<double>>());
  }
  if (variant == "point_mass") {
    return ShufflerModel::point_mass(
        Permutation::from_one_based(j.at("permutation").get<std::vector<std::uint32_t>>()));
  }
  if (variant == "composed") {
    return ShufflerModel::composed(model_from_json(j.at("outer")),
                                   model_from_json(j.at("inner")));
  }
  if (variant == "inverse") {
    return ShufflerModel::inverse_of(model_from_json(j.at("base")));
  }
  throw std::invalid_argument("model_from_json: unknown variant '" + variant + "'");
}

inline nlohmann::json model_to_json(const ShufflerModel& m) {
  nlohmann::json j;
  switch (m.kind()) {
    case ShufflerModel::Kind::uniform:
      j["variant"] = "uniform";
      j["n"] = m.size();
      break;
    case ShufflerModel::Kind::cayley_mallows:
      j["variant"] = "cayley_mallows";
      j["n"] = m.size();
      j["dispersion"] = m.dispersion();
      j["center"] = m.fixed_permutation().to_one_based();
      break;
    case ShufflerModel::Kind::timestamp_laplace:
      j["variant"] = "timestamp_laplace";
      j["gamma"] = m.distortion();
      j["offsets"] = m.offsets();
      break;
    case ShufflerModel::Kind::point_mass:
      j["variant"] = "point_mass";
      j["permutation"] = m.fixed_permutation().to_one_based();
      break;
    case ShufflerModel::Kind::composed:
      j["variant"] = "composed";
      j["outer"] = model_to_json(m.outer());
      j["inner"] = model_to_json(m.inner());
      break;
    case ShufflerModel::Kind::inverse:
      j["variant"] = "inverse";
      j["base"] = model_to_json(m.base());
      break;
  }
  return j;
}

inline nlohmann::json bound_report_to_json(const BoundReport& r) {
  nlohmann::json j;
  j["bound"] = r.bound;
  j["preconditions"] = r.preconditions;
  j["vacuous"] = r.vacuous;
  if (r.empirical) {
    j["empirical"] = {{"estimate", r.empirical->estimate},
                      {"half_width", r.empirical->half_width}};
  } else {
    j["empirical"] = nullptr;
  }
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

inline nlohmann::json gof_report_to_json(const GofReport& r) {
  return nlohmann::json{{"statistic", r.statistic},
                        {"dof", r.dof},
                        {"p_value", r.p_value},
                        {"pass", r.pass},
                        {"bins", r.bins}};
}

}  // namespace shufflesum
