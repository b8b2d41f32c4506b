#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace termdrift {

struct PaperMeta {
  std::string paper_id;
  std::string venue;
  int year = 0;
  // Position of the paper's conference in chronological order across the
  // corpus; strictly increasing with (year, within-year venue order).
  int ordinal = 0;
  std::string title;
  std::string abstract_text;
  std::optional<std::string> source_url;

  bool operator==(const PaperMeta&) const = default;
};

struct Section {
  std::string title;
  size_t char_offset = 0;  // byte offset of the heading line in body_text

  bool operator==(const Section&) const = default;
};

struct Paper {
  PaperMeta meta;
  std::string body_text;  // post-processed, references removed
  std::vector<Section> sections;

  bool operator==(const Paper&) const = default;
};

// Immutable once constructed; safe to share across threads. Papers are kept
// sorted by paper_id and the conference index is derived on construction.
class Corpus {
 public:
  Corpus() = default;
  explicit Corpus(std::vector<Paper> papers);

  const std::vector<Paper>& papers() const { return papers_; }
  const std::map<std::pair<std::string, int>, std::vector<std::string>>& conference_index()
      const {
    return conference_index_;
  }
  const Paper* find(const std::string& paper_id) const;

  bool operator==(const Corpus& other) const { return papers_ == other.papers_; }

 private:
  std::vector<Paper> papers_;
  std::map<std::pair<std::string, int>, std::vector<std::string>> conference_index_;
};

struct ExtractionOptions {
  std::string page_delimiter = "\f";
  // A line is treated as a running footer when the identical trimmed line
  // occurs on at least this fraction of pages (only applied when the input
  // has two or more pages).
  double footer_page_fraction = 0.5;
  std::vector<std::string> extra_footer_lines;  // always removed, trimmed form
  std::vector<std::string> references_headings = {"references", "bibliography"};
  // Unnumbered heading lines recorded as sections when matched exactly
  // (case-insensitive, trimmed).
  std::vector<std::string> section_titles = {
      "abstract",     "introduction",    "conclusion", "conclusions",
      "limitations",  "acknowledgments", "acknowledgements", "appendix",
      "ethics statement"};
};

struct ExtractionResult {
  std::string body_text;
  std::vector<Section> sections;
  std::vector<std::string> warnings;
};

// Post-processes raw page text into body text: normalizes newlines, strips
// repeated per-page footers, truncates before the last references heading and
// records detected section headings. Idempotent and never longer than input.
ExtractionResult extract_body(std::string_view raw_text, const ExtractionOptions& options = {});

// Recomputes conference ordinals in place. Conferences are ordered by year,
// then by the venue's position in venue_order (venues not listed sort after
// the listed ones, alphabetically).
void assign_ordinals(std::vector<Paper>& papers, const std::vector<std::string>& venue_order);

std::vector<std::string> default_venue_order();

// Line-delimited UTF-8 store: one header record, then one record per paper.
// load(store(c)) == c field-for-field.
void store_corpus(const Corpus& corpus, const std::filesystem::path& path);
Corpus load_corpus(const std::filesystem::path& path);

struct FetchOptions {
  int max_attempts = 3;
  int backoff_ms = 200;
  int concurrency = 4;
  int timeout_s = 10;
};

// GET {endpoint}/volumes/{venue}/{year}; see docs/formats.md for the schema.
// Returned records are ordered by paper_id. Throws NotFoundError for an
// unknown volume and ServiceError (with venue/year context) once retries are
// exhausted.
std::vector<PaperMeta> fetch_metadata(const std::string& venue, int year,
                                      const std::string& endpoint,
                                      const FetchOptions& options = {});

// Fetches one raw text document (used for per-paper source_url downloads).
std::string fetch_text(const std::string& url, const FetchOptions& options = {});

}  // namespace termdrift
