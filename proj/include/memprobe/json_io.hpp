#pragma once

// JSON mappings for the value types that cross file boundaries (result store,
// config snapshots, request ids). Key order is fixed so emitted bytes are
// reproducible.

#include <json.hpp>

#include "memprobe/provider.hpp"
#include "memprobe/scoring.hpp"

namespace memprobe {

using ojson = nlohmann::ordered_json;

ojson to_json(const GenerationParams& p);
GenerationParams params_from_json(const ojson& j);

ojson to_json(const ScoreRecord& s);
ScoreRecord score_from_json(const ojson& j);

ojson to_json(const Completion& c);
Completion completion_from_json(const ojson& j);

ojson to_json(const RougeConfig& r);
RougeConfig rouge_from_json(const ojson& j);

}  // namespace memprobe
