#include "sns/manifest.hpp"

#include "json.hpp"
#include "sns/io.hpp"
#include "sns/version.hpp"

namespace sns {

std::string manifest_to_json(const RunManifest& m) {
  nlohmann::json j;
  j["command"] = m.command;
  j["code_version"] = m.code_version.empty() ? std::string(kVersion) : m.code_version;
  j["config_text"] = m.config_text;
  j["config_hash"] = m.config_hash;
  j["master_seed"] = m.master_seed;
  j["sample_seeds"] = m.sample_seeds;
  j["path_checksums"] = m.path_checksums;
  j["wall_seconds"] = m.wall_seconds;
  nlohmann::json outs = nlohmann::json::array();
  for (const auto& o : m.outputs) outs.push_back({{"file", o.file}, {"hash", o.hash}});
  j["outputs"] = outs;
  return j.dump(2) + "\n";
}

RunManifest manifest_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  RunManifest m;
  m.command = j.at("command").get<std::string>();
  m.code_version = j.at("code_version").get<std::string>();
  m.config_text = j.at("config_text").get<std::string>();
  m.config_hash = j.at("config_hash").get<std::string>();
  m.master_seed = j.at("master_seed").get<std::uint64_t>();
  m.sample_seeds = j.at("sample_seeds").get<std::vector<std::uint64_t>>();
  m.path_checksums = j.at("path_checksums").get<std::vector<std::string>>();
  m.wall_seconds = j.at("wall_seconds").get<double>();
  for (const auto& o : j.at("outputs")) {
    m.outputs.push_back({o.at("file").get<std::string>(), o.at("hash").get<std::string>()});
  }
  return m;
}

void manifest_add_output(RunManifest& m, const std::string& dir, const std::string& file) {
  std::string bytes = read_file(dir.empty() ? file : dir + "/" + file);
  m.outputs.push_back({file, hex64(fnv1a_bytes(bytes))});
}

}  // namespace sns
