#include "sadd/losses.hpp"

namespace sadd {

std::string label_value_str(LabelValue v) {
  return v == LabelValue::Real ? "REAL" : "FAKE";
}

std::string provenance_str(FakeProvenance p) {
  switch (p) {
    case FakeProvenance::None: return "NONE";
    case FakeProvenance::AudioOnly: return "AUDIO_ONLY";
    case FakeProvenance::VisualOnly: return "VISUAL_ONLY";
    case FakeProvenance::Both: return "BOTH";
  }
  return "NONE";
}

LabelValue label_value_from_str(const std::string& s) {
  if (s == "REAL") return LabelValue::Real;
  if (s == "FAKE") return LabelValue::Fake;
  throw DataError("unknown label '" + s + "'");
}

FakeProvenance provenance_from_str(const std::string& s) {
  if (s == "NONE") return FakeProvenance::None;
  if (s == "AUDIO_ONLY") return FakeProvenance::AudioOnly;
  if (s == "VISUAL_ONLY") return FakeProvenance::VisualOnly;
  if (s == "BOTH") return FakeProvenance::Both;
  throw DataError("unknown provenance '" + s + "'");
}

std::string variant_str(LossVariant v) {
  switch (v) {
    case LossVariant::Stats: return "stats";
    case LossVariant::Kl: return "kl";
    case LossVariant::None: return "none";
  }
  return "stats";
}

LossVariant variant_from_str(const std::string& s) {
  if (s == "stats") return LossVariant::Stats;
  if (s == "kl") return LossVariant::Kl;
  if (s == "none") return LossVariant::None;
  throw ConfigError("unknown loss variant '" + s + "' (expected stats|kl|none)");
}

}  // namespace sadd
