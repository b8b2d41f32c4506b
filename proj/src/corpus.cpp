#include "termdrift/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "termdrift/errors.hpp"
#include "termdrift/util.hpp"

namespace termdrift {

using nlohmann::json;

Corpus::Corpus(std::vector<Paper> papers) : papers_(std::move(papers)) {
  std::sort(papers_.begin(), papers_.end(),
            [](const Paper& a, const Paper& b) { return a.meta.paper_id < b.meta.paper_id; });
  std::set<std::string> ids;
  for (const Paper& p : papers_) {
    if (p.meta.paper_id.empty()) throw DataError("paper with empty paper_id");
    if (!ids.insert(p.meta.paper_id).second) {
      throw DataError("duplicate paper_id: " + p.meta.paper_id);
    }
    for (const Section& s : p.sections) {
      if (s.char_offset >= std::max<size_t>(p.body_text.size(), 1)) {
        throw DataError("paper " + p.meta.paper_id + ": section offset out of range");
      }
    }
    conference_index_[{p.meta.venue, p.meta.year}].push_back(p.meta.paper_id);
  }
}

const Paper* Corpus::find(const std::string& paper_id) const {
  auto it = std::lower_bound(
      papers_.begin(), papers_.end(), paper_id,
      [](const Paper& p, const std::string& id) { return p.meta.paper_id < id; });
  if (it != papers_.end() && it->meta.paper_id == paper_id) return &*it;
  return nullptr;
}

namespace {

std::string normalize_newlines(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  for (size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] == '\r') {
      out.push_back('\n');
      if (i + 1 < raw.size() && raw[i + 1] == '\n') ++i;
    } else {
      out.push_back(raw[i]);
    }
  }
  return out;
}

std::vector<std::string> split_pages(const std::string& text, const std::string& delim) {
  std::vector<std::string> pages;
  if (delim.empty()) {
    pages.push_back(text);
    return pages;
  }
  size_t pos = 0;
  while (true) {
    size_t next = text.find(delim, pos);
    if (next == std::string::npos) {
      pages.push_back(text.substr(pos));
      break;
    }
    pages.push_back(text.substr(pos, next - pos));
    pos = next + delim.size();
  }
  return pages;
}

// "references" / "bibliography", optionally preceded by a section number
// ("6", "6.", "A.2"), as the whole line.
bool is_references_heading(const std::string& trimmed_line,
                           const std::vector<std::string>& headings) {
  std::string line = lower_ascii(trimmed_line);
  size_t pos = 0;
  // optional numeric/appendix-letter section prefix
  size_t p = pos;
  if (p < line.size() && is_ascii_alnum(line[p])) {
    size_t q = p;
    while (q < line.size() && (is_ascii_alnum(line[q]) || line[q] == '.')) ++q;
    bool prefix_ok = q < line.size() && (line[q] == ' ' || line[q] == '\t');
    // the prefix must be short and contain a digit or be a single letter
    bool shape_ok = (q - p) <= 4;
    if (prefix_ok && shape_ok) {
      bool has_digit = false;
      for (size_t i = p; i < q; ++i) has_digit |= (line[i] >= '0' && line[i] <= '9');
      if (has_digit || q - p == 1) {
        size_t r = q;
        while (r < line.size() && (line[r] == ' ' || line[r] == '\t')) ++r;
        for (const auto& h : headings) {
          if (line.compare(r, std::string::npos, h) == 0) return true;
        }
      }
    }
  }
  for (const auto& h : headings) {
    if (line == h) return true;
  }
  return false;
}

bool is_numbered_heading(const std::string& trimmed_line, std::string* title_out) {
  size_t i = 0;
  if (i >= trimmed_line.size() || trimmed_line[i] < '0' || trimmed_line[i] > '9') return false;
  while (i < trimmed_line.size() &&
         ((trimmed_line[i] >= '0' && trimmed_line[i] <= '9') || trimmed_line[i] == '.')) {
    ++i;
  }
  if (i == 0 || i >= trimmed_line.size()) return false;
  if (trimmed_line[i] != ' ' && trimmed_line[i] != '\t') return false;
  while (i < trimmed_line.size() && (trimmed_line[i] == ' ' || trimmed_line[i] == '\t')) ++i;
  if (i >= trimmed_line.size()) return false;
  std::string title = trimmed_line.substr(i);
  // Headings are short title lines starting with an uppercase letter; this
  // deliberately tolerates some noise rather than trying to parse layout.
  if (title.size() > 80) return false;
  if (!(title[0] >= 'A' && title[0] <= 'Z')) return false;
  if (title.back() == '.' || title.back() == ',') return false;
  *title_out = title;
  return true;
}

}  // namespace

ExtractionResult extract_body(std::string_view raw_text, const ExtractionOptions& options) {
  ExtractionResult result;
  if (raw_text.empty()) {
    result.warnings.push_back("empty-input");
    return result;
  }

  std::string text = normalize_newlines(raw_text);

  // Footer removal: lines repeated across pages, plus configured ones.
  std::vector<std::string> pages = split_pages(text, options.page_delimiter);
  std::set<std::string> footers(options.extra_footer_lines.begin(),
                                options.extra_footer_lines.end());
  if (pages.size() >= 2) {
    std::map<std::string, std::set<size_t>> line_pages;
    for (size_t pi = 0; pi < pages.size(); ++pi) {
      for (const auto& line : split_lines(pages[pi])) {
        std::string t = trim(line);
        if (!t.empty()) line_pages[t].insert(pi);
      }
    }
    for (const auto& [line, where] : line_pages) {
      if (static_cast<double>(where.size()) >=
          options.footer_page_fraction * static_cast<double>(pages.size())) {
        footers.insert(line);
      }
    }
  }

  std::string cleaned;
  cleaned.reserve(text.size());
  for (size_t pi = 0; pi < pages.size(); ++pi) {
    if (pi) cleaned.push_back('\n');
    if (footers.empty()) {
      cleaned += pages[pi];
      continue;
    }
    size_t pos = 0;
    const std::string& page = pages[pi];
    while (pos <= page.size()) {
      size_t eol = page.find('\n', pos);
      bool last = eol == std::string::npos;
      std::string_view line(page.data() + pos, (last ? page.size() : eol) - pos);
      if (!footers.count(trim(line))) {
        cleaned.append(line);
        if (!last) cleaned.push_back('\n');
      }
      if (last) break;
      pos = eol + 1;
    }
  }

  // Cut before the last references heading. Appendices rarely precede the
  // bibliography, so the last qualifying line is the real one.
  size_t cut = std::string::npos;
  {
    size_t pos = 0;
    while (pos <= cleaned.size()) {
      size_t eol = cleaned.find('\n', pos);
      bool last = eol == std::string::npos;
      std::string line = cleaned.substr(pos, (last ? cleaned.size() : eol) - pos);
      if (is_references_heading(trim(line), options.references_headings)) cut = pos;
      if (last) break;
      pos = eol + 1;
    }
  }
  if (cut == std::string::npos) {
    result.warnings.push_back("no-references-heading");
    result.body_text = std::move(cleaned);
  } else {
    result.body_text = cleaned.substr(0, cut);
  }

  // Section headings over the final body text.
  {
    size_t pos = 0;
    const std::string& body = result.body_text;
    while (pos < body.size()) {
      size_t eol = body.find('\n', pos);
      bool last = eol == std::string::npos;
      std::string line = trim(body.substr(pos, (last ? body.size() : eol) - pos));
      std::string title;
      if (is_numbered_heading(line, &title)) {
        result.sections.push_back({title, pos});
      } else {
        for (const auto& known : options.section_titles) {
          if (iequals_ascii(line, known)) {
            result.sections.push_back({line, pos});
            break;
          }
        }
      }
      if (last) break;
      pos = eol + 1;
    }
  }

  return result;
}

std::vector<std::string> default_venue_order() { return {"NAACL", "ACL", "EMNLP"}; }

void assign_ordinals(std::vector<Paper>& papers, const std::vector<std::string>& venue_order) {
  auto venue_rank = [&](const std::string& venue) -> std::pair<int, std::string> {
    for (size_t i = 0; i < venue_order.size(); ++i) {
      if (venue_order[i] == venue) return {static_cast<int>(i), ""};
    }
    return {static_cast<int>(venue_order.size()), venue};
  };

  std::set<std::pair<int, std::pair<std::pair<int, std::string>, std::string>>> keys;
  for (const Paper& p : papers) {
    keys.insert({p.meta.year, {venue_rank(p.meta.venue), p.meta.venue}});
  }
  std::map<std::pair<std::string, int>, int> ordinal;
  int next = 1;
  for (const auto& k : keys) {
    ordinal[{k.second.second, k.first}] = next++;
  }
  for (Paper& p : papers) {
    p.meta.ordinal = ordinal.at({p.meta.venue, p.meta.year});
  }
}

namespace {

json paper_to_json(const Paper& p) {
  json sections = json::array();
  for (const Section& s : p.sections) {
    sections.push_back({{"title", s.title}, {"offset", s.char_offset}});
  }
  json j{{"paper_id", p.meta.paper_id},
         {"venue", p.meta.venue},
         {"year", p.meta.year},
         {"ordinal", p.meta.ordinal},
         {"title", p.meta.title},
         {"abstract", p.meta.abstract_text},
         {"body_text", p.body_text},
         {"sections", sections}};
  if (p.meta.source_url) j["source_url"] = *p.meta.source_url;
  return j;
}

Paper paper_from_json(const json& j) {
  Paper p;
  p.meta.paper_id = j.at("paper_id").get<std::string>();
  p.meta.venue = j.at("venue").get<std::string>();
  p.meta.year = j.at("year").get<int>();
  p.meta.ordinal = j.at("ordinal").get<int>();
  p.meta.title = j.at("title").get<std::string>();
  p.meta.abstract_text = j.at("abstract").get<std::string>();
  if (j.contains("source_url")) p.meta.source_url = j.at("source_url").get<std::string>();
  p.body_text = j.at("body_text").get<std::string>();
  for (const auto& s : j.at("sections")) {
    p.sections.push_back({s.at("title").get<std::string>(), s.at("offset").get<size_t>()});
  }
  return p;
}

}  // namespace

void store_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ostringstream out;
  json header{{"schema", "termdrift.corpus"},
              {"version", 1},
              {"paper_count", corpus.papers().size()}};
  out << header.dump() << "\n";
  for (const Paper& p : corpus.papers()) {
    out << paper_to_json(p).dump() << "\n";
  }
  write_file_atomic(path, out.str());
}

Corpus load_corpus(const std::filesystem::path& path) {
  std::string content = read_file(path);
  std::vector<std::string> lines = split_lines(content);
  // store() always ends with a newline, so a trailing empty line is normal.
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty()) throw DataError(path.string() + ":1: missing corpus header");

  auto fail = [&](size_t line_no, const std::string& msg) -> void {
    throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + msg);
  };

  size_t expected = 0;
  try {
    json header = json::parse(lines[0]);
    if (header.at("schema") != "termdrift.corpus") fail(1, "not a corpus file");
    if (header.at("version") != 1) fail(1, "unsupported corpus version");
    expected = header.at("paper_count").get<size_t>();
  } catch (const json::exception& e) {
    fail(1, std::string("malformed header: ") + e.what());
  }

  std::vector<Paper> papers;
  for (size_t i = 1; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) fail(i + 1, "blank record line");
    try {
      papers.push_back(paper_from_json(json::parse(lines[i])));
    } catch (const json::exception& e) {
      fail(i + 1, std::string("malformed record: ") + e.what());
    }
  }
  if (papers.size() != expected) {
    fail(lines.size(), "paper_count mismatch: header says " + std::to_string(expected) +
                           ", found " + std::to_string(papers.size()));
  }
  return Corpus(std::move(papers));
}

}  // namespace termdrift
