#include "termdrift/decision_log.hpp"

#include <fstream>

#include <json.hpp>

#include "termdrift/errors.hpp"
#include "termdrift/util.hpp"

namespace termdrift {

using nlohmann::json;

void append_decision(const std::filesystem::path& path, const TriageDecision& decision) {
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw DataError("cannot append to decision log: " + path.string());
  json j{{"candidate", decision.candidate},
         {"action", action_name(decision.action)},
         {"target", decision.target},
         {"decided_by", decision.decided_by},
         {"timestamp", decision.timestamp}};
  out << j.dump() << "\n";
}

std::vector<TriageDecision> load_decision_log(const std::filesystem::path& path) {
  std::vector<TriageDecision> decisions;
  if (!std::filesystem::exists(path)) return decisions;
  std::string content = read_file(path);
  size_t line_no = 0;
  for (const auto& line : split_lines(content)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      json j = json::parse(line);
      TriageDecision d;
      d.candidate = j.at("candidate").get<std::string>();
      d.action = action_from_name(j.at("action").get<std::string>());
      d.target = j.value("target", "");
      d.decided_by = j.value("decided_by", "");
      d.timestamp = j.value("timestamp", "");
      decisions.push_back(std::move(d));
    } catch (const json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": malformed decision record: " + e.what());
    }
  }
  return decisions;
}

}  // namespace termdrift
