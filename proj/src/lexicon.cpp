#include "termdrift/lexicon.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "termdrift/errors.hpp"
#include "termdrift/util.hpp"

namespace termdrift {

bool is_acronym_term(std::string_view term) {
  bool has_letter = false;
  for (char c : term) {
    if (c >= 'A' && c <= 'Z') {
      has_letter = true;
    } else if (c < '0' || c > '9') {
      return false;
    }
  }
  return has_letter;
}

std::string action_name(TriageDecision::Action a) {
  switch (a) {
    case TriageDecision::Action::new_entry: return "new_entry";
    case TriageDecision::Action::alias_of: return "alias_of";
    case TriageDecision::Action::variation_of: return "variation_of";
    case TriageDecision::Action::discard: return "discard";
  }
  return "discard";
}

TriageDecision::Action action_from_name(const std::string& name) {
  if (name == "new_entry") return TriageDecision::Action::new_entry;
  if (name == "alias_of") return TriageDecision::Action::alias_of;
  if (name == "variation_of") return TriageDecision::Action::variation_of;
  if (name == "discard") return TriageDecision::Action::discard;
  throw DataError("unknown triage action: " + name);
}

namespace {

// True when `needle` occurs inside `hay` under `needle`'s own matching rule.
// Used to reject l-term sets that would double count.
bool term_occurs_within(const std::string& needle, const std::string& hay) {
  if (needle == hay) return false;
  if (is_acronym_term(needle)) {
    size_t pos = hay.find(needle);
    while (pos != std::string::npos) {
      if (pos == 0 || !is_ascii_alnum(hay[pos - 1])) return true;
      pos = hay.find(needle, pos + 1);
    }
    return false;
  }
  return lower_ascii(hay).find(lower_ascii(needle)) != std::string::npos;
}

}  // namespace

Lexicon::Lexicon() : l_terms_(LTermSet::defaults()) {}

Lexicon::Lexicon(LTermSet l_terms, std::vector<ModelEntry> entries)
    : l_terms_(std::move(l_terms)) {
  for (auto& e : entries) {
    if (entries_.count(e.entry_id)) {
      throw DataError("duplicate entry id: " + e.entry_id);
    }
    entries_.emplace(e.entry_id, std::move(e));
  }
  index_aliases();
  validate();
}

void Lexicon::index_aliases() {
  alias_to_entry_.clear();
  for (const auto& [id, entry] : entries_) {
    for (const auto& alias : entry.aliases) {
      auto [it, inserted] = alias_to_entry_.emplace(alias, id);
      if (!inserted) {
        throw DataError("alias \"" + alias + "\" appears in both entry \"" +
                        it->second + "\" and entry \"" + id + "\"");
      }
    }
  }
}

void Lexicon::validate() const {
  if (l_terms_.terms.empty()) throw DataError("l_terms must be non-empty");
  std::set<std::string> seen;
  for (const auto& t : l_terms_.terms) {
    if (trim(t).empty()) throw DataError("empty l_term");
    if (!seen.insert(t).second) throw DataError("duplicate l_term: " + t);
  }
  for (const auto& a : l_terms_.terms) {
    for (const auto& b : l_terms_.terms) {
      if (&a != &b && term_occurs_within(a, b)) {
        throw DataError("l_term \"" + a + "\" matches inside l_term \"" + b +
                        "\"; the two would double count");
      }
    }
  }

  for (const auto& [id, entry] : entries_) {
    if (entry.aliases.empty()) {
      throw DataError("entry \"" + id + "\" has no aliases");
    }
    if (entry.entry_id != id || entry.aliases.front() != id) {
      throw DataError("entry \"" + id + "\": canonical name must equal the first alias");
    }
    for (const auto& alias : entry.aliases) {
      if (trim(alias) != alias || alias.empty()) {
        throw DataError("entry \"" + id + "\": alias must be non-empty and trimmed");
      }
    }
    for (const auto& v : entry.variations) {
      bool contained = std::any_of(
          entry.aliases.begin(), entry.aliases.end(),
          [&](const std::string& a) { return v.find(a) != std::string::npos; });
      if (!contained) {
        throw DataError("entry \"" + id + "\": variation \"" + v +
                        "\" contains none of the entry's aliases");
      }
    }
    if (entry.parent && !entries_.count(*entry.parent)) {
      throw DataError("entry \"" + id + "\": dangling parent \"" + *entry.parent + "\"");
    }
  }

  // Parent links must form a forest. Walk each chain; entry count bounds the
  // walk, so exceeding it means a cycle.
  for (const auto& [id, entry] : entries_) {
    const ModelEntry* cur = &entry;
    std::vector<std::string> chain{id};
    while (cur->parent) {
      if (chain.size() > entries_.size()) break;
      chain.push_back(*cur->parent);
      cur = &entries_.at(*cur->parent);
    }
    if (cur->parent) {
      std::ostringstream msg;
      msg << "parent cycle:";
      for (const auto& link : chain) msg << " " << link << " ->";
      msg << " ...";
      throw DataError(msg.str());
    }
  }
}

const ModelEntry* Lexicon::find(const std::string& entry_id) const {
  auto it = entries_.find(entry_id);
  return it == entries_.end() ? nullptr : &it->second;
}

const std::string* Lexicon::alias_owner(const std::string& alias) const {
  auto it = alias_to_entry_.find(alias);
  return it == alias_to_entry_.end() ? nullptr : &it->second;
}

std::string Lexicon::root_of(const std::string& entry_id) const {
  auto it = entries_.find(entry_id);
  if (it == entries_.end()) throw DataError("unknown entry: " + entry_id);
  const ModelEntry* cur = &it->second;
  while (cur->parent) cur = &entries_.at(*cur->parent);
  return cur->entry_id;
}

Lexicon Lexicon::apply(const TriageDecision& decision) const {
  const std::string candidate = trim(decision.candidate);
  if (candidate.empty()) throw DataError("empty candidate");

  LTermSet terms = l_terms_;
  std::vector<ModelEntry> entries;
  entries.reserve(entries_.size() + 1);
  for (const auto& [id, entry] : entries_) entries.push_back(entry);

  switch (decision.action) {
    case TriageDecision::Action::new_entry: {
      if (alias_to_entry_.count(candidate)) {
        throw DataError("candidate \"" + candidate + "\" is already an alias of entry \"" +
                        alias_to_entry_.at(candidate) + "\"");
      }
      entries.push_back(ModelEntry{candidate, {candidate}, {}, std::nullopt});
      break;
    }
    case TriageDecision::Action::alias_of: {
      auto it = entries_.find(decision.target);
      if (it == entries_.end()) throw DataError("unknown entry: " + decision.target);
      if (alias_to_entry_.count(candidate)) {
        throw DataError("candidate \"" + candidate + "\" is already an alias of entry \"" +
                        alias_to_entry_.at(candidate) + "\"");
      }
      for (auto& e : entries) {
        if (e.entry_id == decision.target) e.aliases.push_back(candidate);
      }
      break;
    }
    case TriageDecision::Action::variation_of: {
      auto it = entries_.find(decision.target);
      if (it == entries_.end()) throw DataError("unknown entry: " + decision.target);
      bool contains = std::any_of(
          it->second.aliases.begin(), it->second.aliases.end(),
          [&](const std::string& a) { return candidate.find(a) != std::string::npos; });
      if (!contains) {
        throw DataError("candidate \"" + candidate + "\" contains no alias of entry \"" +
                        decision.target + "\"");
      }
      for (auto& e : entries) {
        if (e.entry_id == decision.target) {
          if (std::find(e.variations.begin(), e.variations.end(), candidate) ==
              e.variations.end()) {
            e.variations.push_back(candidate);
          }
        }
      }
      break;
    }
    case TriageDecision::Action::discard:
      break;  // logged by the caller, lexicon unchanged
  }

  return Lexicon(std::move(terms), std::move(entries));
}

bool Lexicon::operator==(const Lexicon& other) const {
  return l_terms_ == other.l_terms_ && entries_ == other.entries_;
}

namespace {

struct Line {
  int number;
  std::string text;
};

[[noreturn]] void parse_fail(const std::string& origin, int line, const std::string& msg) {
  throw DataError(origin + ":" + std::to_string(line) + ": " + msg);
}

}  // namespace

Lexicon parse_lexicon_text(const std::string& text, const std::string& origin) {
  std::vector<Line> lines;
  {
    int n = 0;
    for (auto& raw : split_lines(text)) {
      ++n;
      std::string t = trim(raw);
      if (t.empty() || t[0] == '#') continue;
      lines.push_back({n, std::move(t)});
    }
  }

  LTermSet terms = LTermSet::defaults();
  std::vector<ModelEntry> entries;
  ModelEntry* current = nullptr;
  bool saw_format = false;

  auto key_value = [&](const Line& line) -> std::pair<std::string, std::string> {
    size_t colon = line.text.find(':');
    if (colon == std::string::npos) {
      parse_fail(origin, line.number, "expected \"key: value\", got \"" + line.text + "\"");
    }
    return {trim(line.text.substr(0, colon)), trim(line.text.substr(colon + 1))};
  };

  for (const Line& line : lines) {
    auto [key, value] = key_value(line);
    if (key == "format") {
      if (value != "1") parse_fail(origin, line.number, "unsupported format version: " + value);
      saw_format = true;
    } else if (key == "lterms") {
      if (current) parse_fail(origin, line.number, "lterms must precede entry blocks");
      terms.terms = split_trimmed(value, '|');
    } else if (key == "entry") {
      if (value.empty()) parse_fail(origin, line.number, "entry name must be non-empty");
      entries.push_back(ModelEntry{value, {value}, {}, std::nullopt});
      current = &entries.back();
    } else if (key == "aliases") {
      if (!current) parse_fail(origin, line.number, "aliases outside an entry block");
      for (auto& a : split_trimmed(value, '|')) current->aliases.push_back(std::move(a));
    } else if (key == "variations") {
      if (!current) parse_fail(origin, line.number, "variations outside an entry block");
      for (auto& v : split_trimmed(value, '|')) current->variations.push_back(std::move(v));
    } else if (key == "parent") {
      if (!current) parse_fail(origin, line.number, "parent outside an entry block");
      if (!value.empty()) current->parent = value;
    } else {
      parse_fail(origin, line.number, "unknown key: " + key);
    }
  }

  if (!saw_format) throw DataError(origin + ": missing \"format: 1\" header");

  try {
    return Lexicon(std::move(terms), std::move(entries));
  } catch (const DataError& e) {
    throw DataError(origin + ": " + e.what());
  }
}

Lexicon parse_lexicon(const std::filesystem::path& path) {
  return parse_lexicon_text(read_file(path), path.string());
}

std::string render_lexicon(const Lexicon& lexicon) {
  std::ostringstream out;
  out << "format: 1\n";
  out << "lterms:";
  const auto& terms = lexicon.l_terms().terms;
  for (size_t i = 0; i < terms.size(); ++i) {
    out << (i ? " | " : " ") << terms[i];
  }
  out << "\n";
  for (const auto& [id, entry] : lexicon.entries()) {
    out << "\nentry: " << id << "\n";
    if (entry.aliases.size() > 1) {
      out << "aliases:";
      for (size_t i = 1; i < entry.aliases.size(); ++i) {
        out << (i > 1 ? " | " : " ") << entry.aliases[i];
      }
      out << "\n";
    }
    if (!entry.variations.empty()) {
      out << "variations:";
      for (size_t i = 0; i < entry.variations.size(); ++i) {
        out << (i ? " | " : " ") << entry.variations[i];
      }
      out << "\n";
    }
    if (entry.parent) out << "parent: " << *entry.parent << "\n";
  }
  return out.str();
}

void write_lexicon(const Lexicon& lexicon, const std::filesystem::path& path) {
  write_file_atomic(path, render_lexicon(lexicon));
}

}  // namespace termdrift
