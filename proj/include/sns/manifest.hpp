#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sns {

// Reproducibility record written next to every set of outputs: the exact
// normalised configuration and its hash, the seed derivation inputs, the
// checksums of the sampled paths, and a content hash per output file.
struct ManifestOutput {
  std::string file;
  std::string hash;  // fnv1a-64 of the bytes, hex
};

struct RunManifest {
  std::string command;
  std::string code_version;
  std::string config_text;
  std::string config_hash;
  std::uint64_t master_seed = 0;
  std::vector<std::uint64_t> sample_seeds;
  std::vector<std::string> path_checksums;  // hex
  double wall_seconds = 0.0;
  std::vector<ManifestOutput> outputs;
};

std::string manifest_to_json(const RunManifest& m);
RunManifest manifest_from_json(const std::string& text);

// Hashes dir/file and appends it to m.outputs.
void manifest_add_output(RunManifest& m, const std::string& dir, const std::string& file);

}  // namespace sns
