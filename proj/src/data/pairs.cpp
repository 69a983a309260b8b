#include "audiomorph/data/pairs.hpp"

#include <map>

namespace audiomorph::data {

std::vector<TransformExample> build_pairs(const std::vector<Clip>& clips, bool identity_pairs,
                                          std::vector<std::string>* warnings) {
  std::vector<int> order;
  std::map<int, std::vector<const Clip*>> by_content;
  for (const auto& c : clips) {
    auto& group = by_content[c.entry.content_id];
    if (group.empty()) order.push_back(c.entry.content_id);
    group.push_back(&c);
  }
  std::vector<TransformExample> out;
  for (int content : order) {
    const auto& group = by_content[content];
    if (group.size() < 2) {
      if (warnings) warnings->push_back("content " + std::to_string(content) + " has a single style; skipped");
      continue;
    }
    for (const auto* a : group)
      for (const auto* b : group) {
        if (a == b && !identity_pairs) continue;
        out.push_back({a->features, a->entry.style_id, b->entry.style_id, b->features, content});
      }
  }
  return out;
}

std::vector<Clip> load_clips(const Manifest& m, Split split, const dsp::FeatureConfig& cfg,
                             const FeatureCache* cache, std::size_t jobs) {
  const auto entries = m.select(split);
  auto features = load_features(m, entries, cfg, cache, jobs);
  std::vector<Clip> clips;
  for (std::size_t i = 0; i < entries.size(); ++i) clips.push_back({entries[i], std::move(features[i])});
  return clips;
}

}  // namespace audiomorph::data
