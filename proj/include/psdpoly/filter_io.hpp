#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "psdpoly/matrix_io.hpp"
#include "psdpoly/polynomial.hpp"

// Coefficient file:
//   { "epsilon": e, "T": n, "degrees": [...], "stages": [[c1, c3, ...], ...],
//     "provenance": "...", "design_intervals": [[lo, hi], ...] (optional) }

namespace psdpoly {

inline std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string filter_to_json(const CompositeFilter& f) {
  std::ostringstream os;
  os << "{\n  \"epsilon\": " << format_g17(f.epsilon) << ",\n  \"T\": " << f.T()
     << ",\n  \"degrees\": [";
  const auto deg = f.degrees();
  for (std::size_t i = 0; i < deg.size(); ++i) os << (i ? ", " : "") << deg[i];
  os << "],\n  \"stages\": [\n";
  for (std::size_t t = 0; t < f.stages.size(); ++t) {
    os << "    [";
    const auto c = f.stages[t].coeffs();
    for (std::size_t j = 0; j < c.size(); ++j) os << (j ? ", " : "") << format_g17(c[j]);
    os << "]" << (t + 1 < f.stages.size() ? "," : "") << "\n";
  }
  os << "  ],\n  \"provenance\": \"" << to_string(f.provenance) << "\"";
  if (!f.design_intervals.empty()) {
    os << ",\n  \"design_intervals\": [\n";
    for (std::size_t t = 0; t < f.design_intervals.size(); ++t)
      os << "    [" << format_g17(f.design_intervals[t].lo) << ", "
         << format_g17(f.design_intervals[t].hi) << "]"
         << (t + 1 < f.design_intervals.size() ? "," : "") << "\n";
    os << "  ]";
  }
  os << "\n}\n";
  return os.str();
}

inline CompositeFilter filter_from_json(const nlohmann::json& j) {
  try {
    CompositeFilter f;
    f.epsilon = j.value("epsilon", 0.0);
    f.provenance = parse_provenance(j.value("provenance", std::string("UserSupplied")));
    for (const auto& st : j.at("stages")) f.stages.emplace_back(st.get<std::vector<double>>());
    if (j.contains("T") && j.at("T").get<std::size_t>() != f.stages.size())
      throw FormatError("coefficient file: T does not match the number of stages");
    if (j.contains("degrees")) {
      const auto deg = j.at("degrees").get<std::vector<int>>();
      if (deg != f.degrees()) throw FormatError("coefficient file: degrees do not match stages");
    }
    if (j.contains("design_intervals"))
      for (const auto& iv : j.at("design_intervals")) {
        const auto v = iv.get<std::vector<double>>();
        if (v.size() != 2) throw FormatError("coefficient file: interval needs [lo, hi]");
        f.design_intervals.push_back({v[0], v[1]});
      }
    f.validate();
    return f;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("coefficient file: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("coefficient file: ") + e.what());
  }
}

inline CompositeFilter load_filter(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open '" + path.string() + "'");
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("coefficient file '" + path.string() + "': " + e.what());
  }
  return filter_from_json(j);
}

inline void save_filter(const std::filesystem::path& path, const CompositeFilter& f) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write '" + path.string() + "'");
  os << filter_to_json(f);
}

}  // namespace psdpoly
