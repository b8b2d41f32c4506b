#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "termdrift/corpus.hpp"
#include "termdrift/stats.hpp"

namespace termdrift {

struct TimeseriesPoint {
  ConferenceKey key;
  long long paper_count = 0;
  long long lm_related_count = 0;
  double prop_lm_related = 0.0;
  double mean_n_l = 0.0;
  double mean_n = 0.0;
  // Scaled from the first conference's proportion; absent when the baseline
  // has no LM-related papers.
  std::optional<double> estimated_mean_n_l;
};

struct ConferenceComposition {
  ConferenceKey key;
  CompositionVector composition;
  std::map<std::string, long long> entry_counts;  // raw N_m totals behind the shares
};

struct ConferenceMajority {
  ConferenceKey key;
  MajorityReport report;
};

struct QuartileAnalysis {
  ConferenceKey key;
  QuartileSplit split;
  std::optional<CompositionVector> q4_composition;  // absent when the quarter has N == 0
  std::optional<CompositionVector> q1_composition;
  std::vector<std::pair<std::string, double>> diff;  // Q4+ minus Q1-, top components
};

struct OvertimeDiff {
  ConferenceKey first;
  ConferenceKey last;
  std::vector<std::pair<std::string, double>> q4_diff;  // last minus first, within Q4+
  std::vector<std::pair<std::string, double>> q1_diff;
};

// Everything the report module consumes, in memory form.
struct AnalysisSet {
  std::vector<TimeseriesPoint> timeseries;
  std::vector<PairwiseCell> ks_n_l;
  std::vector<PairwiseCell> ks_n;
  std::vector<ConferenceComposition> compositions;
  std::vector<std::string> jaccard_labels;
  std::vector<std::vector<double>> jaccard_set;
  std::vector<std::vector<double>> jaccard_weighted;
  std::vector<ConferenceMajority> majority_all;
  std::vector<ConferenceMajority> majority_top_quarter;
  std::vector<QuartileAnalysis> quartiles;
  std::optional<OvertimeDiff> overtime;
};

inline const std::vector<std::string>& analysis_names() {
  static const std::vector<std::string> names{"timeseries", "ks",       "composition",
                                              "jaccard",    "majority", "quartiles"};
  return names;
}

AnalysisSet compute_analyses(const Corpus& corpus, const std::vector<PaperCounts>& counts,
                             const Lexicon& lexicon, size_t diff_top_k = 15);

// One schema-versioned JSON file per analysis: <dir>/<name>.json.
void write_analysis_file(const AnalysisSet& set, const std::string& name,
                         const std::filesystem::path& dir);
void write_analysis_files(const AnalysisSet& set, const std::filesystem::path& dir);
AnalysisSet load_analyses(const std::filesystem::path& dir);

// PaperCounts as line-delimited records keyed by paper_id.
void write_counts(const std::vector<PaperCounts>& counts, const std::filesystem::path& path);
std::vector<PaperCounts> load_counts(const std::filesystem::path& path);

}  // namespace termdrift
