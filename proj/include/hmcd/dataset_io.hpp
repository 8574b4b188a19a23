#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "hmcd/dataset.hpp"
#include "hmcd/matrix_io.hpp"

namespace hmcd {

// On-disk layout of a dataset directory:
//
//   manifest.json   {"global_users": [...],
//                    "networks": [{"id", "users", "overlapping_users",
//                                  "matrices": {attribute: file},
//                                  "overlap_matrices": {attribute: file}}]}
//   <file>          coordinate matrix text (see matrix_io.hpp)
//
// "overlap_matrices" is optional. When absent for an attribute, the overlap
// adjacency is the principal submatrix of the full one on the overlapping
// users, and the writer only emits it when the stored block differs from that.

inline constexpr const char* kManifestName = "manifest.json";

namespace detail {

inline std::string matrix_filename(std::size_t net, AttributeKind kind, bool overlap) {
  return "net" + std::to_string(net) + "_" + std::string(to_string(kind)) +
         (overlap ? "_overlap" : "") + ".txt";
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError(path.string(), 0, "cannot open for writing");
  os << text;
  if (!os) throw FormatError(path.string(), 0, "write failed");
}

}  // namespace detail

inline void save_dataset(const MultiNetworkDataset& ds, const std::filesystem::path& dir) {
  validate(ds);
  std::filesystem::create_directories(dir);
  nlohmann::ordered_json manifest;
  manifest["global_users"] = ds.global_users;
  manifest["networks"] = nlohmann::ordered_json::array();
  for (std::size_t s = 0; s < ds.networks.size(); ++s) {
    const auto& net = ds.networks[s];
    nlohmann::ordered_json entry;
    entry["id"] = net.id;
    entry["users"] = net.users;
    entry["overlapping_users"] = net.overlapping_users;
    nlohmann::ordered_json files = nlohmann::ordered_json::object();
    nlohmann::ordered_json overlap_files = nlohmann::ordered_json::object();
    for (const auto& [kind, m] : net.adjacency) {
      const auto name = detail::matrix_filename(s, kind, false);
      write_matrix((dir / name).string(), m);
      files[std::string(to_string(kind))] = name;
      const Matrix& mo = net.overlap_adjacency.at(kind);
      if (mo != extract_overlap_adjacency(m, net)) {
        const auto oname = detail::matrix_filename(s, kind, true);
        write_matrix((dir / oname).string(), mo);
        overlap_files[std::string(to_string(kind))] = oname;
      }
    }
    entry["matrices"] = std::move(files);
    if (!overlap_files.empty()) entry["overlap_matrices"] = std::move(overlap_files);
    manifest["networks"].push_back(std::move(entry));
  }
  detail::write_text(dir / kManifestName, manifest.dump(2) + "\n");
}

inline MultiNetworkDataset load_dataset(const std::filesystem::path& dir) {
  const auto manifest_path = (dir / kManifestName).string();
  std::ifstream is(manifest_path, std::ios::binary);
  if (!is) throw FormatError(manifest_path, 0, "manifest not found");

  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(is);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(manifest_path, 0, e.what());
  }

  MultiNetworkDataset ds;
  try {
    ds.global_users = manifest.at("global_users").get<std::vector<std::string>>();
    for (const auto& entry : manifest.at("networks")) {
      SocialNetwork net;
      net.id = entry.at("id").get<std::string>();
      net.users = entry.at("users").get<std::vector<std::string>>();
      net.overlapping_users = entry.at("overlapping_users").get<std::vector<std::string>>();
      for (const auto& [key, file] : entry.at("matrices").items()) {
        auto kind = parse_attribute(key);
        if (!kind) throw FormatError(manifest_path, 0, "unknown attribute '" + key + "'");
        net.adjacency[*kind] = read_matrix((dir / file.get<std::string>()).string());
      }
      std::map<AttributeKind, std::string> overlap_files;
      if (entry.contains("overlap_matrices"))
        for (const auto& [key, file] : entry.at("overlap_matrices").items()) {
          auto kind = parse_attribute(key);
          if (!kind || !net.adjacency.count(*kind))
            throw FormatError(manifest_path, 0,
                              "overlap matrix for unknown attribute '" + key + "'");
          overlap_files[*kind] = file.get<std::string>();
        }
      for (const auto& [kind, m] : net.adjacency) {
        auto it = overlap_files.find(kind);
        net.overlap_adjacency[kind] = it != overlap_files.end()
                                          ? read_matrix((dir / it->second).string())
                                          : extract_overlap_adjacency(m, net);
      }
      ds.networks.push_back(std::move(net));
    }
    validate(ds);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(manifest_path, 0, e.what());
  } catch (const InputError& e) {
    throw FormatError(manifest_path, 0, e.what());
  }
  return ds;
}

}  // namespace hmcd
