#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace termdrift {

// The generic-term set. A term whose characters are all uppercase letters or
// digits (e.g. "LLM") is matched case-sensitively with a left boundary; any
// other term (e.g. "language model") is matched as a case-insensitive
// substring, which also covers plurals and "-ing" forms.
struct LTermSet {
  std::vector<std::string> terms;

  static LTermSet defaults() { return {{"language model", "LLM", "PLM"}}; }
  bool operator==(const LTermSet&) const = default;
};

bool is_acronym_term(std::string_view term);

struct ModelEntry {
  std::string entry_id;  // canonical name, always equal to aliases.front()
  std::vector<std::string> aliases;
  std::vector<std::string> variations;
  std::optional<std::string> parent;  // dependency edge toward the family root

  bool operator==(const ModelEntry&) const = default;
};

struct TriageDecision {
  enum class Action { new_entry, alias_of, variation_of, discard };

  std::string candidate;
  Action action = Action::discard;
  std::string target;  // entry id, required for alias_of / variation_of
  std::string decided_by;
  std::string timestamp;  // ISO-8601; carried verbatim so replays are identical

  bool operator==(const TriageDecision&) const = default;
};

std::string action_name(TriageDecision::Action a);
TriageDecision::Action action_from_name(const std::string& name);

// Immutable after construction; apply() returns a new value. All invariants
// (alias uniqueness, variation containment, acyclic parent forest) are
// enforced at construction time, so a Lexicon in hand is always valid.
class Lexicon {
 public:
  Lexicon();
  Lexicon(LTermSet l_terms, std::vector<ModelEntry> entries);

  const LTermSet& l_terms() const { return l_terms_; }
  const std::map<std::string, ModelEntry>& entries() const { return entries_; }

  const ModelEntry* find(const std::string& entry_id) const;
  // Entry id owning the given alias string, or nullptr.
  const std::string* alias_owner(const std::string& alias) const;

  // Follows parent links to the forest root. Throws DataError on unknown id.
  std::string root_of(const std::string& entry_id) const;

  // Applies one triage decision and returns the resulting lexicon. Invalid
  // decisions throw and leave this lexicon untouched; a decision is never
  // partially applied.
  Lexicon apply(const TriageDecision& decision) const;

  bool operator==(const Lexicon& other) const;

 private:
  void validate() const;
  void index_aliases();

  LTermSet l_terms_;
  std::map<std::string, ModelEntry> entries_;
  std::map<std::string, std::string> alias_to_entry_;
};

// Canonical lexicon file format (see docs/formats.md):
//
//   format: 1
//   lterms: language model | LLM | PLM
//
//   entry: ChatGPT
//   aliases: chatgpt
//   variations:
//   parent: GPT-3.5
//
// "aliases:" lists the additional aliases beyond the entry name itself.
Lexicon parse_lexicon(const std::filesystem::path& path);
Lexicon parse_lexicon_text(const std::string& text, const std::string& origin);

std::string render_lexicon(const Lexicon& lexicon);
void write_lexicon(const Lexicon& lexicon, const std::filesystem::path& path);

}  // namespace termdrift
