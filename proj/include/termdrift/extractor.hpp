#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "termdrift/lexicon.hpp"

namespace termdrift {

class Corpus;

struct CandidateName {
  std::string surface;
  long long frequency = 0;  // number of abstracts that returned it
  std::vector<std::string> example_paper_ids;  // up to 5, paper_id order

  bool operator==(const CandidateName&) const = default;
};

struct ExtractionRequest {
  std::string paper_id;
  std::string title;        // carried for display; not rendered into the prompt
  std::string system_text;  // identical across all requests
  std::string user_text;    // "Input: <abstract>\nOutput: "
};

// Renders the bundled extraction prompt. The system block (instruction plus
// in-context examples) is a fixed template; only the user input varies.
ExtractionRequest build_prompt(const std::string& title, const std::string& abstract_text);

const std::string& extraction_system_prompt();

// Comma-separated name list; "None" (after trim) means no names.
std::vector<std::string> parse_response(std::string_view raw);

struct ChatEndpoint {
  std::string base_url;
  std::string model;
  std::string api_key;  // from the environment; never from config files
  double temperature = 0.0;
};

struct ExtractionLimits {
  int concurrency = 4;
  int max_attempts = 3;
  int timeout_s = 30;
  int backoff_ms = 250;  // base; jittered and scaled per attempt
};

// Append-only response cache keyed by paper_id; reruns over cached papers
// make no network calls.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path file);

  std::optional<std::string> lookup(const std::string& paper_id) const;
  void put(const std::string& paper_id, const std::string& response);
  size_t size() const { return entries_.size(); }

 private:
  std::filesystem::path file_;
  std::map<std::string, std::string> entries_;
  mutable std::mutex mutex_;
};

struct ExtractionRun {
  std::vector<CandidateName> candidates;      // ranked: frequency desc, then surface
  std::vector<std::string> failed_paper_ids;  // gave up after retries
  long long network_calls = 0;
};

// One request per paper with a non-empty abstract; bounded concurrency;
// responses cached. Per-paper failures are recorded and skipped so the run
// always completes.
ExtractionRun run_extraction(const Corpus& corpus, const ChatEndpoint& endpoint,
                             ResponseCache& cache, const ExtractionLimits& limits = {});

// Deterministic reduce from (paper_id -> response names) to ranked candidates.
std::vector<CandidateName> aggregate_candidates(
    const std::map<std::string, std::vector<std::string>>& names_by_paper);

struct Suggestion {
  enum class Kind { already_alias, variation_of, possible_alias_of, new_or_discard };
  Kind kind = Kind::new_or_discard;
  std::string entry_id;  // target entry for the non-trivial kinds
};

std::string suggestion_name(Suggestion::Kind kind);

// Advisory triage suggestion: exact alias -> already_alias; contains an alias
// -> variation_of (longest containing alias wins); case-insensitive equality
// -> possible_alias_of; otherwise new_or_discard.
Suggestion suggest_classification(const std::string& candidate, const Lexicon& lexicon);

void write_candidates(const std::vector<CandidateName>& candidates,
                      const std::filesystem::path& path);
std::vector<CandidateName> load_candidates(const std::filesystem::path& path);

}  // namespace termdrift
