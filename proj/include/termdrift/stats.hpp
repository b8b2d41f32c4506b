#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "termdrift/lexicon.hpp"
#include "termdrift/matcher.hpp"

namespace termdrift {

struct ConferenceKey {
  std::string venue;
  int year = 0;
  int ordinal = 0;

  std::string label() const { return venue + " " + std::to_string(year); }
  auto operator<=>(const ConferenceKey&) const = default;
};

struct ConferenceStats {
  ConferenceKey key;
  long long paper_count = 0;
  long long lm_related_count = 0;  // papers with N^L > 0
  double prop_lm_related = 0.0;
  double mean_n_l = 0.0;  // over all papers, zero-count papers included
  double mean_n = 0.0;
  std::vector<PaperCounts> counts;  // sorted by paper_id
};

// Means and the LM-related proportion over all papers of one conference.
ConferenceStats aggregate(const ConferenceKey& key, std::vector<PaperCounts> counts);

// Share-scaled estimate: baseline mean N^L scaled by target_prop over the
// baseline proportion, using unrounded stored values.
double estimated_mean(const ConferenceStats& baseline, double target_prop);

struct KsResult {
  double d = 0.0;
  double p_value = 1.0;
};

// Two-sample Kolmogorov-Smirnov test, two-sided. D is the exact ECDF
// sup-difference. The p-value uses the exact (lattice counting) distribution
// when |a|*|b| is small and the asymptotic Kolmogorov distribution with the
// standard small-sample correction otherwise.
KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);

enum class CountMetric { n_l, n };

struct PairwiseCell {
  ConferenceKey row;  // earlier conference
  ConferenceKey col;  // later conference
  double ks_statistic = 0.0;
  double p_value = 1.0;
  double mean_diff = 0.0;  // column mean minus row mean
  std::string significance_bucket;  // ns | p<0.05 | p<0.01 | p<0.001
};

std::string significance_bucket(double p_value);

// One cell per ordered pair (earlier row, later column); conferences are
// ordered by ordinal.
std::vector<PairwiseCell> pairwise_matrix(const std::vector<ConferenceStats>& conferences,
                                          CountMetric metric);

struct CompositionVector {
  std::string scope;
  std::map<std::string, double> by_entry;      // entry share of N, zeros omitted
  std::map<std::string, double> by_component;  // rolled up to forest roots
  long long total = 0;                         // N over the scope
};

CompositionVector composition(const std::string& scope, std::span<const PaperCounts> counts,
                              const Lexicon& lexicon);

enum class JaccardMode { set, weighted };

// set: |A&B| / |A|B| over present-entry sets. weighted: sum(min)/sum(max)
// over entry share vectors. Both symmetric, both in [0,1].
double jaccard(const CompositionVector& a, const CompositionVector& b,
               JaccardMode mode = JaccardMode::weighted);

// The component root whose rolled-up count strictly exceeds N/2, if any.
std::optional<std::string> absolute_majority(const PaperCounts& counts, const Lexicon& lexicon);

enum class MajoritySelector { all, top_quarter_by_nl };

struct MajorityReport {
  std::string scope;
  long long counted_papers = 0;
  double majority_fraction = 0.0;
  double no_majority_fraction = 0.0;
  std::map<std::string, double> by_component;  // root -> fraction it dominates
};

// Majority rates over a conference. Papers with N == 0 cannot have a majority
// and are excluded from the denominator unless include_zero_model_papers is
// set, in which case they count as no-majority.
MajorityReport majority_rates(const ConferenceStats& conference, MajoritySelector selector,
                              const Lexicon& lexicon, bool include_zero_model_papers = false);

struct QuartileSplit {
  std::vector<std::string> q4_plus;   // most LM-focused quarter, rank order
  std::vector<std::string> q1_minus;  // least LM-focused quarter, rank order
};

// Ranks LM-related papers (N^L > 0) by N^L descending, ties broken by
// ascending paper_id; each quarter holds ceil(k/4) papers. Requires k >= 4.
QuartileSplit quartile_split(const ConferenceStats& conference);

// Component-share deltas a minus b, missing components treated as 0, ordered
// by |delta| descending (ties by root id) and truncated to top_k.
std::vector<std::pair<std::string, double>> composition_diff(const CompositionVector& a,
                                                             const CompositionVector& b,
                                                             size_t top_k = SIZE_MAX);

// Groups PaperCounts by conference (keys taken from the corpus) and returns
// aggregates ordered by ordinal.
class Corpus;  // corpus.hpp
std::vector<ConferenceStats> conference_stats(const Corpus& corpus,
                                              const std::vector<PaperCounts>& counts);

}  // namespace termdrift
