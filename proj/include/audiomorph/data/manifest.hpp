#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace audiomorph::data {

enum class Split { train, test };

const char* to_string(Split s);
Split parse_split(const std::string& s);

/// Exactly one of audio_path and spec_path is set. Paths are relative to
/// the manifest's directory unless absolute.
struct ManifestEntry {
  std::string audio_path;
  std::string spec_path;
  int style_id = 0;
  int content_id = 0;
  Split split = Split::train;

  bool operator==(const ManifestEntry&) const = default;
};

struct Manifest {
  std::filesystem::path root;
  std::vector<ManifestEntry> entries;

  std::filesystem::path resolve(const ManifestEntry& e) const;
  std::vector<ManifestEntry> select(Split s) const;
};

/// One JSON object per line; blank lines are ignored.
Manifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries);

/// Throws InvalidInput on a duplicate (style, content, split) or a missing file.
void validate_manifest(const Manifest& m);

}  // namespace audiomorph::data
