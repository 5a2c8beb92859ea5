#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "heatmorse/error.hpp"
#include "heatmorse/field.hpp"

namespace heatmorse {

inline constexpr const char* kFieldFormat = "heatmorse-field-v1";

inline nlohmann::json manifold_to_json(const ManifoldSpec& m) {
  return {{"kind", to_string(m.kind())}, {"n", m.n()}};
}

inline ManifoldSpec manifold_from_json(const nlohmann::json& j) {
  try {
    return {manifold_kind_from_string(j.at("kind").get<std::string>()), j.at("n").get<int>()};
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad manifold object: ") + e.what());
  }
}

inline nlohmann::json field_to_json(const SpectralField& f) {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& t : f.terms()) {
    nlohmann::json mode;
    if (const auto* tm = std::get_if<TorusMode>(&t.element))
      mode = {{"k", tm->k}, {"phase", to_string(tm->phase)}};
    else
      mode = {{"harmonic_index", std::get<HarmonicIndex>(t.element).value}};
    terms.push_back({{"level", t.level}, {"mode", mode}, {"coeff", t.coeff}});
  }
  return {{"format", kFieldFormat}, {"manifold", manifold_to_json(f.manifold())}, {"terms", terms}};
}

inline SpectralField field_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != kFieldFormat)
      throw FormatError("unsupported field format '" + j.at("format").get<std::string>() + "'");
    const ManifoldSpec m = manifold_from_json(j.at("manifold"));
    std::vector<FieldTerm> terms;
    for (const auto& jt : j.at("terms")) {
      FieldTerm t;
      t.level = jt.at("level").get<int>();
      t.coeff = jt.at("coeff").get<double>();
      const auto& mode = jt.at("mode");
      if (mode.contains("harmonic_index")) {
        t.element = HarmonicIndex{mode.at("harmonic_index").get<int>()};
      } else {
        const auto phase = mode.at("phase").get<std::string>();
        if (phase != "cos" && phase != "sin") throw FormatError("phase must be cos or sin");
        t.element = TorusMode{mode.at("k").get<std::vector<int>>(), phase == "cos" ? Phase::Cos : Phase::Sin};
      }
      terms.push_back(std::move(t));
    }
    return {m, std::move(terms)};
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed field file: ") + e.what());
  }
}

inline SpectralField read_field(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open field file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("'" + path + "' is not valid JSON: " + e.what());
  }
  return field_from_json(j);
}

inline void write_field(const SpectralField& f, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DomainError("cannot write field file '" + path + "'");
  out << field_to_json(f).dump(2) << '\n';
}

}  // namespace heatmorse
