#pragma once

// MapFile: a map persisted as one JSON document (schema version 1).
//
//   {"schema_version": 1, "n": N, "dim": d,
//    "z": [[z00, z01], ...], "w": [[w00, ..., w0d], ...],
//    "provenance": {...}}

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "somsne/core.hpp"

namespace somsne {

inline constexpr int kMapFileSchemaVersion = 1;

struct MapFile {
  MapModel map;
  nlohmann::json provenance;
};

/// FNV-1a over the dimensions and raw bytes of a matrix, as 16 hex digits.
inline std::string fingerprint(const Matrix& x) {
  std::uint64_t h = 14695981039346656037ull;
  auto mix = [&h](const void* p, std::size_t len) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= b[i];
      h *= 1099511628211ull;
    }
  };
  const std::uint64_t dims[2] = {x.rows(), x.cols()};
  mix(dims, sizeof dims);
  mix(x.data().data(), x.data().size() * sizeof(double));
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::string map_file_string(const MapModel& map, const nlohmann::json& provenance) {
  nlohmann::json doc;
  doc["schema_version"] = kMapFileSchemaVersion;
  doc["n"] = map.n();
  doc["dim"] = map.dim();
  auto rows = [](const Matrix& m) {
    nlohmann::json arr = nlohmann::json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
      const auto r = m.row(i);
      arr.push_back(std::vector<double>(r.begin(), r.end()));
    }
    return arr;
  };
  doc["z"] = rows(map.points());
  doc["w"] = rows(map.weights());
  doc["provenance"] = provenance.is_null() ? nlohmann::json::object() : provenance;
  return doc.dump(1) + "\n";
}

inline MapFile parse_map_file(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("map file is not valid JSON: ") + e.what());
  }
  try {
    const int version = doc.at("schema_version").get<int>();
    if (version != kMapFileSchemaVersion) {
      throw Error("unsupported map file schema_version " + std::to_string(version));
    }
    const auto n = doc.at("n").get<std::size_t>();
    const auto dim = doc.at("dim").get<std::size_t>();
    auto read_rows = [](const nlohmann::json& arr, std::size_t rows, std::size_t cols,
                        const char* name) {
      if (!arr.is_array() || arr.size() != rows) {
        throw Error(std::string("map file field '") + name + "' must have " +
                    std::to_string(rows) + " rows");
      }
      Matrix m(rows, cols);
      for (std::size_t i = 0; i < rows; ++i) {
        const auto row = arr[i].get<std::vector<double>>();
        if (row.size() != cols) {
          throw Error(std::string("map file field '") + name + "' row " + std::to_string(i) +
                      " has " + std::to_string(row.size()) + " entries, expected " +
                      std::to_string(cols));
        }
        std::copy(row.begin(), row.end(), m.row(i).begin());
      }
      return m;
    };
    Matrix z = read_rows(doc.at("z"), n, 2, "z");
    Matrix w = read_rows(doc.at("w"), n, dim, "w");
    nlohmann::json prov = doc.contains("provenance") ? doc["provenance"] : nlohmann::json::object();
    return {MapModel(std::move(z), std::move(w)), std::move(prov)};
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed map file: ") + e.what());
  }
}

inline void write_map_file(const std::string& path, const MapModel& map,
                           const nlohmann::json& provenance) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << map_file_string(map, provenance);
  if (!out) throw Error("write failed for '" + path + "'");
}

inline MapFile read_map_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_map_file(ss.str());
}

}  // namespace somsne
