#include "termdrift/matcher.hpp"

#include <algorithm>
#include <atomic>
#include <queue>
#include <thread>

#include "termdrift/corpus.hpp"
#include "termdrift/util.hpp"

namespace termdrift {

ModelMatcher::ModelMatcher(const Lexicon& lexicon) {
  nodes_.emplace_back();
  for (const auto& [id, entry] : lexicon.entries()) {
    for (const auto& alias : entry.aliases) {
      int node = add_pattern_path(alias);
      nodes_[static_cast<size_t>(node)].out.push_back(
          static_cast<int>(pattern_alias_.size()));
      pattern_alias_.push_back(alias);
      pattern_entry_.push_back(id);
    }
  }
  build_links();
}

int ModelMatcher::add_pattern_path(const std::string& pattern) {
  int cur = 0;
  for (unsigned char c : pattern) {
    int& slot = nodes_[static_cast<size_t>(cur)].next[c];
    if (slot == -1) {
      slot = static_cast<int>(nodes_.size());
      nodes_.emplace_back();
    }
    cur = slot;
  }
  return cur;
}

void ModelMatcher::build_links() {
  // BFS goto/fail construction; out-lists inherit from the fail node so every
  // alias ending at a position is reported.
  std::queue<int> queue;
  for (int c = 0; c < 256; ++c) {
    int child = nodes_[0].next[static_cast<size_t>(c)];
    if (child == -1) {
      nodes_[0].next[static_cast<size_t>(c)] = 0;
    } else {
      nodes_[static_cast<size_t>(child)].fail = 0;
      queue.push(child);
    }
  }
  while (!queue.empty()) {
    int cur = queue.front();
    queue.pop();
    for (int c = 0; c < 256; ++c) {
      int child = nodes_[static_cast<size_t>(cur)].next[static_cast<size_t>(c)];
      int fall = nodes_[static_cast<size_t>(nodes_[static_cast<size_t>(cur)].fail)]
                     .next[static_cast<size_t>(c)];
      if (child == -1) {
        nodes_[static_cast<size_t>(cur)].next[static_cast<size_t>(c)] = fall;
      } else {
        nodes_[static_cast<size_t>(child)].fail = fall;
        const auto& inherited = nodes_[static_cast<size_t>(fall)].out;
        auto& out = nodes_[static_cast<size_t>(child)].out;
        out.insert(out.end(), inherited.begin(), inherited.end());
        queue.push(child);
      }
    }
  }
}

std::vector<AliasMatch> ModelMatcher::scan_matches(std::string_view text) const {
  struct Raw {
    size_t begin;
    size_t length;
    int pattern;
  };
  std::vector<Raw> raw;

  int state = 0;
  for (size_t i = 0; i < text.size(); ++i) {
    state = nodes_[static_cast<size_t>(state)].next[static_cast<unsigned char>(text[i])];
    for (int pid : nodes_[static_cast<size_t>(state)].out) {
      size_t len = pattern_alias_[static_cast<size_t>(pid)].size();
      size_t begin = i + 1 - len;
      if (begin == 0 || !is_ascii_letter(text[begin - 1])) {
        raw.push_back({begin, len, pid});
      }
    }
  }

  // Leftmost-longest resolution: earliest start wins, longest at that start
  // wins, and the winning span is consumed.
  std::sort(raw.begin(), raw.end(), [](const Raw& a, const Raw& b) {
    if (a.begin != b.begin) return a.begin < b.begin;
    return a.length > b.length;
  });

  std::vector<AliasMatch> matches;
  size_t consumed = 0;  // first position not yet claimed by a match
  for (const Raw& r : raw) {
    if (r.begin < consumed) continue;
    matches.push_back({pattern_entry_[static_cast<size_t>(r.pattern)],
                       pattern_alias_[static_cast<size_t>(r.pattern)], r.begin, r.length});
    consumed = r.begin + r.length;
  }
  return matches;
}

std::map<std::string, long long> ModelMatcher::count(std::string_view text) const {
  std::map<std::string, long long> counts;
  for (const auto& m : scan_matches(text)) counts[m.entry_id] += 1;
  return counts;
}

std::pair<long long, std::map<std::string, long long>> count_lm_terms(
    std::string_view text, const LTermSet& terms) {
  std::map<std::string, long long> per_term;
  long long total = 0;
  for (const auto& term : terms.terms) {
    long long count = 0;
    if (is_acronym_term(term)) {
      size_t pos = 0;
      while ((pos = text.find(term, pos)) != std::string_view::npos) {
        if (pos == 0 || !is_ascii_alnum(text[pos - 1])) {
          ++count;
          pos += term.size();
        } else {
          ++pos;
        }
      }
    } else {
      std::string hay = lower_ascii(text);
      std::string needle = lower_ascii(term);
      size_t pos = 0;
      while ((pos = hay.find(needle, pos)) != std::string::npos) {
        ++count;
        pos += needle.size();
      }
    }
    per_term[term] = count;
    total += count;
  }
  return {total, std::move(per_term)};
}

std::map<std::string, long long> count_models(std::string_view text, const Lexicon& lexicon) {
  return ModelMatcher(lexicon).count(text);
}

PaperCounts scan_paper(const Paper& paper, const Lexicon& lexicon, const ModelMatcher& matcher) {
  PaperCounts counts;
  counts.paper_id = paper.meta.paper_id;
  auto [n_l, per_term] = count_lm_terms(paper.body_text, lexicon.l_terms());
  counts.n_l = n_l;
  counts.per_term_l = std::move(per_term);
  counts.per_entry = matcher.count(paper.body_text);
  for (const auto& [id, c] : counts.per_entry) counts.n += c;
  return counts;
}

std::vector<PaperCounts> scan_corpus(const Corpus& corpus, const Lexicon& lexicon, int threads,
                                     bool abstract_only) {
  const ModelMatcher matcher(lexicon);
  const auto& papers = corpus.papers();  // already sorted by paper_id
  std::vector<PaperCounts> results(papers.size());

  auto scan_one = [&](size_t i) {
    if (abstract_only) {
      Paper shallow;
      shallow.meta.paper_id = papers[i].meta.paper_id;
      shallow.body_text = papers[i].meta.abstract_text;
      results[i] = scan_paper(shallow, lexicon, matcher);
    } else {
      results[i] = scan_paper(papers[i], lexicon, matcher);
    }
  };

  int workers = std::max(1, std::min<int>(threads, static_cast<int>(papers.size())));
  if (workers == 1) {
    for (size_t i = 0; i < papers.size(); ++i) scan_one(i);
    return results;
  }
  std::atomic<size_t> next{0};
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      while (true) {
        size_t i = next.fetch_add(1);
        if (i >= papers.size()) break;
        scan_one(i);
      }
    });
  }
  for (auto& t : pool) t.join();
  return results;
}

}  // namespace termdrift
