#include "termdrift/config.hpp"

#include <set>

#include <json.hpp>

#include "termdrift/errors.hpp"
#include "termdrift/util.hpp"

namespace termdrift {

using nlohmann::json;

Config Config::load(const std::filesystem::path& path) {
  Config config;
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }

  static const std::set<std::string> known{
      "corpus",           "lexicon",        "counts",
      "decision_log",     "candidates",     "cache",
      "stats_dir",        "output_dir",     "metadata_endpoint",
      "chat_endpoint",    "chat_model",     "api_key_env",
      "venue_order",      "fetch_concurrency", "extract_concurrency",
      "scan_threads",     "scan_abstract_only", "sunburst_collapse_share"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) {
      throw DataError(path.string() + ": unknown config key: " + key);
    }
  }

  try {
    if (j.contains("corpus")) config.corpus_path = j.at("corpus").get<std::string>();
    if (j.contains("lexicon")) config.lexicon_path = j.at("lexicon").get<std::string>();
    if (j.contains("counts")) config.counts_path = j.at("counts").get<std::string>();
    if (j.contains("decision_log")) {
      config.decision_log_path = j.at("decision_log").get<std::string>();
    }
    if (j.contains("candidates")) config.candidates_path = j.at("candidates").get<std::string>();
    if (j.contains("cache")) config.cache_path = j.at("cache").get<std::string>();
    if (j.contains("stats_dir")) config.stats_dir = j.at("stats_dir").get<std::string>();
    if (j.contains("output_dir")) config.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("metadata_endpoint")) {
      config.metadata_endpoint = j.at("metadata_endpoint").get<std::string>();
    }
    if (j.contains("chat_endpoint")) config.chat_endpoint = j.at("chat_endpoint").get<std::string>();
    if (j.contains("chat_model")) config.chat_model = j.at("chat_model").get<std::string>();
    if (j.contains("api_key_env")) config.api_key_env = j.at("api_key_env").get<std::string>();
    if (j.contains("venue_order")) {
      config.venue_order = j.at("venue_order").get<std::vector<std::string>>();
    }
    if (j.contains("fetch_concurrency")) {
      config.fetch_concurrency = j.at("fetch_concurrency").get<int>();
    }
    if (j.contains("extract_concurrency")) {
      config.extract_concurrency = j.at("extract_concurrency").get<int>();
    }
    if (j.contains("scan_threads")) config.scan_threads = j.at("scan_threads").get<int>();
    if (j.contains("scan_abstract_only")) {
      config.scan_abstract_only = j.at("scan_abstract_only").get<bool>();
    }
    if (j.contains("sunburst_collapse_share")) {
      config.sunburst_collapse_share = j.at("sunburst_collapse_share").get<double>();
    }
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return config;
}

}  // namespace termdrift
