#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hmcd/dataset.hpp"
#include "hmcd/dataset_io.hpp"
#include "hmcd/factorize.hpp"
#include "hmcd/matrix_io.hpp"
#include "hmcd/metrics.hpp"
#include "hmcd/synth.hpp"

namespace hmcd {

// ---------------------------------------------------------------------------
// Convergence trace: `iter,objective,seconds`. Row 0 is the initial state.
// Wall-clock seconds vary between runs, so the column is left empty unless
// `with_seconds` is set.

inline void write_trace_csv(std::ostream& os, const ConvergenceTrace& trace, bool with_seconds) {
  os << "iter,objective,seconds\n";
  for (std::size_t t = 0; t < trace.outer_objectives.size(); ++t) {
    os << t << ',' << format_double(trace.outer_objectives[t]) << ',';
    if (with_seconds && t < trace.wall_times.size()) os << format_double(trace.wall_times[t]);
    os << '\n';
  }
}

// ---------------------------------------------------------------------------
// Partitions. A partition over named users is written as a JSON object
// {user: community} in user order and as CSV `user,community`.

inline nlohmann::ordered_json partition_to_json(const std::vector<std::string>& users,
                                                const Partition& part) {
  if (users.size() != part.size()) throw InputError("partition and user list differ in length");
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < users.size(); ++i) j[users[i]] = part.labels[i];
  return j;
}

inline Partition partition_from_json(const nlohmann::json& j, const std::vector<std::string>& users,
                                     std::size_t k, const std::string& what) {
  Partition part;
  part.k = k;
  part.labels.reserve(users.size());
  if (!j.is_object()) throw InputError(what + ": expected an object of user -> community");
  if (j.size() != users.size())
    throw InputError(what + ": " + std::to_string(j.size()) + " entries for " +
                     std::to_string(users.size()) + " users");
  for (const auto& u : users) {
    auto it = j.find(u);
    if (it == j.end()) throw InputError(what + ": no label for user '" + u + "'");
    if (!it->is_number_unsigned()) throw InputError(what + ": label of '" + u + "' is not a count");
    const auto label = it->get<std::size_t>();
    if (label >= k) throw InputError(what + ": label of '" + u + "' is out of range");
    part.labels.push_back(label);
  }
  return part;
}

inline void write_partition_csv(std::ostream& os, const std::vector<std::string>& users,
                                const Partition& part) {
  if (users.size() != part.size()) throw InputError("partition and user list differ in length");
  os << "user,community\n";
  for (std::size_t i = 0; i < users.size(); ++i) os << users[i] << ',' << part.labels[i] << '\n';
}

// Everything `detect` writes about one run.
struct DetectionOutput {
  std::size_t k = 0;
  Partition global;
  std::map<std::pair<std::size_t, AttributeKind>, Partition> local;
  std::map<std::pair<std::size_t, AttributeKind>, Partition> overlap;
};

inline DetectionOutput collect_partitions(const HmcdResult& r) {
  DetectionOutput out;
  out.k = r.problem.k;
  out.global = assign_communities(r.state.c);
  for (std::size_t i = 0; i < r.problem.blocks.size(); ++i) {
    const auto& b = r.problem.blocks[i];
    out.local[{b.network, b.kind}] = assign_communities(r.state.blocks[i].x);
    out.overlap[{b.network, b.kind}] = assign_communities(r.state.blocks[i].x_o);
  }
  return out;
}

inline DetectionPartitions to_detection_partitions(const DetectionOutput& d) {
  return {d.global, d.local};
}

// partitions.json:
//   {"K": k, "global": {user: c},
//    "networks": [{"id", "local": {attr: {user: c}}, "overlap": {attr: {user: c}}}]}
inline nlohmann::ordered_json partitions_to_json(const MultiNetworkDataset& ds,
                                                 const DetectionOutput& d) {
  nlohmann::ordered_json j;
  j["K"] = d.k;
  j["global"] = partition_to_json(ds.global_users, d.global);
  j["networks"] = nlohmann::ordered_json::array();
  for (std::size_t s = 0; s < ds.networks.size(); ++s) {
    const auto& net = ds.networks[s];
    nlohmann::ordered_json e;
    e["id"] = net.id;
    e["local"] = nlohmann::ordered_json::object();
    e["overlap"] = nlohmann::ordered_json::object();
    for (const auto& [kind, m] : net.adjacency) {
      const std::string key(to_string(kind));
      if (auto it = d.local.find({s, kind}); it != d.local.end())
        e["local"][key] = partition_to_json(net.users, it->second);
      if (auto it = d.overlap.find({s, kind}); it != d.overlap.end())
        e["overlap"][key] = partition_to_json(net.overlapping_users, it->second);
    }
    j["networks"].push_back(std::move(e));
  }
  return j;
}

inline DetectionOutput partitions_from_json(const MultiNetworkDataset& ds, const nlohmann::json& j) {
  DetectionOutput d;
  try {
    d.k = j.at("K").get<std::size_t>();
    if (d.k == 0) throw InputError("partitions: K must be positive");
    d.global = partition_from_json(j.at("global"), ds.global_users, d.k, "global partition");
    const auto& nets = j.at("networks");
    if (nets.size() != ds.networks.size())
      throw InputError("partitions: network count differs from the dataset");
    for (std::size_t s = 0; s < ds.networks.size(); ++s) {
      const auto& net = ds.networks[s];
      const auto& e = nets.at(s);
      if (e.at("id").get<std::string>() != net.id)
        throw InputError("partitions: network " + std::to_string(s) + " is not '" + net.id + "'");
      for (const auto& [kind, m] : net.adjacency) {
        const std::string key(to_string(kind));
        const std::string tag = net.id + "/" + key;
        d.local[{s, kind}] =
            partition_from_json(e.at("local").at(key), net.users, d.k, tag + " local partition");
        if (e.contains("overlap") && e.at("overlap").contains(key))
          d.overlap[{s, kind}] = partition_from_json(e.at("overlap").at(key), net.overlapping_users,
                                                     d.k, tag + " overlap partition");
      }
    }
  } catch (const nlohmann::json::exception& ex) {
    throw InputError(std::string("partitions: ") + ex.what());
  }
  return d;
}

// ---------------------------------------------------------------------------
// Planted truth: truth.json {"K_planted": k, "layers": {network-id: [labels]}}.
// Labels follow the network's user order.

inline nlohmann::ordered_json truth_to_json(const MultiNetworkDataset& ds, const PlantedTruth& t) {
  if (t.layers.size() != ds.networks.size())
    throw InputError("truth has a different layer count than the dataset");
  nlohmann::ordered_json j;
  j["K_planted"] = t.layers.empty() ? 0 : t.layers.front().k;
  j["layers"] = nlohmann::ordered_json::object();
  for (std::size_t l = 0; l < t.layers.size(); ++l) j["layers"][ds.networks[l].id] = t.layers[l].labels;
  return j;
}

// Network index -> planted partition, for the networks listed in the file.
inline std::map<std::size_t, Partition> truth_from_json(const MultiNetworkDataset& ds,
                                                        const nlohmann::json& j) {
  std::map<std::size_t, Partition> out;
  try {
    const auto k = j.at("K_planted").get<std::size_t>();
    const auto& layers = j.at("layers");
    for (std::size_t s = 0; s < ds.networks.size(); ++s) {
      const auto& net = ds.networks[s];
      if (!layers.contains(net.id)) continue;
      Partition p;
      p.k = k;
      p.labels = layers.at(net.id).get<std::vector<std::size_t>>();
      detail::check_partition(p, net.size(), ("truth for " + net.id).c_str());
      out.emplace(s, std::move(p));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw InputError(std::string("truth: ") + ex.what());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Metric report

namespace detail {

inline nlohmann::ordered_json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

inline std::string optional_csv(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string();
}

}  // namespace detail

inline nlohmann::ordered_json report_to_json(const MetricReport& rep) {
  nlohmann::ordered_json j;
  j["blocks"] = nlohmann::ordered_json::array();
  for (const auto& b : rep.blocks) {
    nlohmann::ordered_json e;
    e["network"] = b.network;
    e["attribute"] = std::string(to_string(b.kind));
    e["mod_local"] = detail::optional_json(b.mod_local);
    e["mod_global"] = detail::optional_json(b.mod_global);
    e["mod_o_local"] = detail::optional_json(b.mod_o_local);
    e["mod_o_global"] = detail::optional_json(b.mod_o_global);
    e["nmi"] = detail::optional_json(b.nmi);
    e["nmi_truth"] = detail::optional_json(b.nmi_truth);
    j["blocks"].push_back(std::move(e));
  }
  j["networks"] = nlohmann::ordered_json::array();
  for (const auto& n : rep.networks) {
    nlohmann::ordered_json e;
    e["network"] = n.network;
    e["compactness"] = detail::optional_json(n.compactness);
    e["density"] = detail::optional_json(n.density);
    j["networks"].push_back(std::move(e));
  }
  j["warnings"] = rep.warnings;
  return j;
}

// One row per (network, attribute); the per-network compactness and density
// repeat on each of that network's rows. Undefined values are empty cells.
inline void write_report_csv(std::ostream& os, const MetricReport& rep) {
  os << "network,attribute,mod_local,mod_global,mod_o_local,mod_o_global,nmi,nmi_truth,"
        "compactness,density\n";
  for (const auto& b : rep.blocks) {
    const NetworkMetrics* nm = nullptr;
    for (const auto& n : rep.networks)
      if (n.network == b.network) nm = &n;
    using detail::optional_csv;
    os << b.network << ',' << to_string(b.kind) << ',' << optional_csv(b.mod_local) << ','
       << optional_csv(b.mod_global) << ',' << optional_csv(b.mod_o_local) << ','
       << optional_csv(b.mod_o_global) << ',' << optional_csv(b.nmi) << ','
       << optional_csv(b.nmi_truth) << ',' << (nm ? optional_csv(nm->compactness) : "") << ','
       << (nm ? optional_csv(nm->density) : "") << '\n';
  }
}

// ---------------------------------------------------------------------------
// File helpers

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError(path.string(), 0, "cannot open");
  try {
    return nlohmann::json::parse(is);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path.string(), 0, e.what());
  }
}

inline void write_json_file(const std::filesystem::path& path, const nlohmann::ordered_json& j) {
  detail::write_text(path, j.dump(2) + "\n");
}

template <class Writer>
void write_stream_file(const std::filesystem::path& path, Writer&& writer) {
  std::ostringstream os;
  writer(os);
  detail::write_text(path, os.str());
}

}  // namespace hmcd
