#include "audiomorph/data/manifest.hpp"

#include <fstream>
#include <set>
#include <tuple>

#include "audiomorph/error.hpp"
#include "json.hpp"

namespace audiomorph::data {

using nlohmann::json;

const char* to_string(Split s) { return s == Split::train ? "train" : "test"; }

Split parse_split(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "test") return Split::test;
  throw InvalidInput("unknown split '" + s + "' (expected train or test)");
}

std::filesystem::path Manifest::resolve(const ManifestEntry& e) const {
  const std::filesystem::path p(e.audio_path.empty() ? e.spec_path : e.audio_path);
  return p.is_absolute() ? p : root / p;
}

std::vector<ManifestEntry> Manifest::select(Split s) const {
  std::vector<ManifestEntry> out;
  for (const auto& e : entries)
    if (e.split == s) out.push_back(e);
  return out;
}

Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  Manifest m;
  m.root = path.parent_path();
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto where = path.string() + ":" + std::to_string(lineno);
    try {
      const auto j = json::parse(line);
      ManifestEntry e;
      if (j.contains("audio_path")) e.audio_path = j["audio_path"].get<std::string>();
      if (j.contains("spec_path")) e.spec_path = j["spec_path"].get<std::string>();
      if (e.audio_path.empty() == e.spec_path.empty())
        throw FormatError(where + ": exactly one of audio_path and spec_path is required");
      e.style_id = j.at("style_id").get<int>();
      e.content_id = j.at("content_id").get<int>();
      e.split = parse_split(j.at("split").get<std::string>());
      m.entries.push_back(std::move(e));
    } catch (const json::exception& ex) {
      throw FormatError(where + ": " + ex.what());
    } catch (const InvalidInput& ex) {
      throw FormatError(where + ": " + ex.what());
    }
  }
  return m;
}

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write manifest " + path.string());
  for (const auto& e : entries) {
    json j = json::object();
    if (!e.audio_path.empty()) j["audio_path"] = e.audio_path;
    if (!e.spec_path.empty()) j["spec_path"] = e.spec_path;
    j["style_id"] = e.style_id;
    j["content_id"] = e.content_id;
    j["split"] = to_string(e.split);
    out << j.dump() << '\n';
  }
  if (!out) throw IoError("failed writing manifest " + path.string());
}

void validate_manifest(const Manifest& m) {
  std::set<std::tuple<int, int, Split>> seen;
  for (const auto& e : m.entries) {
    if (!seen.insert({e.style_id, e.content_id, e.split}).second)
      throw InvalidInput("duplicate clip for style " + std::to_string(e.style_id) + ", content " +
                         std::to_string(e.content_id) + " in split " + to_string(e.split));
    if (!std::filesystem::exists(m.resolve(e))) throw InvalidInput("missing file " + m.resolve(e).string());
  }
}

}  // namespace audiomorph::data
