#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace termdrift {

// Tool configuration. Loaded from a JSON file (unknown keys rejected) and
// overridden by command-line flags. The API credential is taken only from the
// environment variable named by api_key_env, never from the file.
struct Config {
  std::filesystem::path corpus_path = "corpus.jsonl";
  std::filesystem::path lexicon_path = "lexicon.lex";
  std::filesystem::path counts_path = "counts.jsonl";
  std::filesystem::path decision_log_path = "decisions.jsonl";
  std::filesystem::path candidates_path = "candidates.jsonl";
  std::filesystem::path cache_path = "extract_cache.jsonl";
  std::filesystem::path stats_dir = "stats";
  std::filesystem::path output_dir = "charts";

  std::string metadata_endpoint;  // overridable via TERMDRIFT_METADATA_URL
  std::string chat_endpoint;
  std::string chat_model;
  std::string api_key_env = "TERMDRIFT_API_KEY";

  std::vector<std::string> venue_order{"NAACL", "ACL", "EMNLP"};

  int fetch_concurrency = 4;
  int extract_concurrency = 4;
  int scan_threads = 4;
  bool scan_abstract_only = false;
  double sunburst_collapse_share = 0.005;

  static Config load(const std::filesystem::path& path);
};

}  // namespace termdrift
