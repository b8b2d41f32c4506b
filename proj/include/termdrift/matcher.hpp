#pragma once

#include <array>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "termdrift/lexicon.hpp"

namespace termdrift {

// Counting results for one paper. per_entry omits zero counts, so its key set
// is exactly the present-model set.
struct PaperCounts {
  std::string paper_id;
  long long n_l = 0;
  std::map<std::string, long long> per_term_l;  // every l-term, zeros kept
  std::map<std::string, long long> per_entry;   // zero counts omitted
  long long n = 0;

  bool operator==(const PaperCounts&) const = default;
};

struct AliasMatch {
  std::string entry_id;
  std::string alias;
  size_t begin = 0;
  size_t length = 0;
};

// Aho-Corasick automaton over all alias strings of a lexicon, resolved with
// leftmost-longest, non-overlapping semantics: scanning left to right, the
// longest alias starting at the current position wins and its span is
// consumed, so "RoBERTa" never also counts the "BERT" inside it.
//
// An alias only matches where the previous byte is not an ASCII letter
// (start of text, whitespace, punctuation and digits all qualify). The right
// side is unconstrained, so "T5-3B" still counts toward "T5".
//
// Immutable once built; safe to share across scanning threads.
class ModelMatcher {
 public:
  explicit ModelMatcher(const Lexicon& lexicon);

  // Resolved (non-overlapping) match spans in text order.
  std::vector<AliasMatch> scan_matches(std::string_view text) const;

  // Per-entry counts with zero counts omitted.
  std::map<std::string, long long> count(std::string_view text) const;

 private:
  struct Node {
    std::array<int, 256> next;
    int fail = 0;
    std::vector<int> out;  // pattern ids ending at this node (incl. via fail)
    Node() { next.fill(-1); }
  };

  int add_pattern_path(const std::string& pattern);
  void build_links();

  std::vector<Node> nodes_;
  std::vector<std::string> pattern_alias_;
  std::vector<std::string> pattern_entry_;
};

// N^L counting over the generic-term set. Returns (n_l, per-term counts).
// "language model"-style terms count case-insensitive substring occurrences;
// acronym terms count case-sensitively where the left neighbor is not
// alphanumeric. Occurrences are non-overlapping, left to right, per term.
std::pair<long long, std::map<std::string, long long>> count_lm_terms(
    std::string_view text, const LTermSet& terms);

// One-shot convenience that compiles a throwaway automaton.
std::map<std::string, long long> count_models(std::string_view text, const Lexicon& lexicon);

struct Paper;  // corpus.hpp
class Corpus;

PaperCounts scan_paper(const Paper& paper, const Lexicon& lexicon, const ModelMatcher& matcher);

// Scans every paper with a shared automaton across worker threads; results
// come back ordered by paper_id regardless of scheduling. With abstract_only
// set, scans the abstract instead of the body text.
std::vector<PaperCounts> scan_corpus(const Corpus& corpus, const Lexicon& lexicon,
                                     int threads = 4, bool abstract_only = false);

}  // namespace termdrift
