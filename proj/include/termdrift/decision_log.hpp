#pragma once

#include <filesystem>
#include <vector>

#include "termdrift/lexicon.hpp"

namespace termdrift {

// Append-only audit trail for triage decisions, one JSON record per line.
// Records are carried verbatim (including timestamps) so replays are
// bit-identical.
void append_decision(const std::filesystem::path& path, const TriageDecision& decision);
std::vector<TriageDecision> load_decision_log(const std::filesystem::path& path);

}  // namespace termdrift
