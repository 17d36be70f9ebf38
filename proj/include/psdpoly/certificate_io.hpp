#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "psdpoly/filter_io.hpp"
#include "psdpoly/refine.hpp"

namespace psdpoly {

inline std::string certificate_to_json(const ErrorCertificate& c) {
  std::ostringstream os;
  os << "{\n  \"filter_hash\": \"" << c.filter_hash << "\",\n  \"mode\": \"" << to_string(c.mode)
     << "\",\n  \"count\": " << c.count << ",\n  \"e_value\": " << format_g17(c.e_value)
     << ",\n  \"argmax_x\": " << format_g17(c.argmax_x)
     << ",\n  \"e_positive\": " << format_g17(c.e_positive)
     << ",\n  \"argmax_positive\": " << format_g17(c.argmax_positive)
     << ",\n  \"e_negative\": " << format_g17(c.e_negative)
     << ",\n  \"argmax_negative\": " << format_g17(c.argmax_negative)
     << ",\n  \"wall_seconds\": " << format_g17(c.wall_seconds) << "\n}\n";
  return os.str();
}

inline ErrorCertificate certificate_from_json(const nlohmann::json& j) {
  try {
    ErrorCertificate c;
    c.filter_hash = j.at("filter_hash").get<std::string>();
    const auto mode = j.at("mode").get<std::string>();
    if (mode == "Grid")
      c.mode = CertificateMode::Grid;
    else if (mode == "FullFloat32Enumeration")
      c.mode = CertificateMode::FullFloat32Enumeration;
    else
      throw FormatError("certificate: unknown mode '" + mode + "'");
    c.count = j.at("count").get<std::uint64_t>();
    c.e_value = j.at("e_value").get<double>();
    c.argmax_x = j.at("argmax_x").get<double>();
    c.e_positive = j.value("e_positive", 0.0);
    c.argmax_positive = j.value("argmax_positive", 0.0);
    c.e_negative = j.value("e_negative", 0.0);
    c.argmax_negative = j.value("argmax_negative", 0.0);
    c.wall_seconds = j.value("wall_seconds", 0.0);
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("certificate: ") + e.what());
  }
}

inline ErrorCertificate load_certificate(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open '" + path.string() + "'");
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("certificate '" + path.string() + "': " + e.what());
  }
  return certificate_from_json(j);
}

inline void save_certificate(const std::filesystem::path& path, const ErrorCertificate& c) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write '" + path.string() + "'");
  os << certificate_to_json(c);
}

}  // namespace psdpoly
