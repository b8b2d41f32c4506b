#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "termdrift/analyses.hpp"
#include "termdrift/lexicon.hpp"
#include "termdrift/matcher.hpp"

namespace termdrift {

// Sunburst tree node. `value` is the subtree total (the entry's own count
// plus all dependents), so value == own + sum of children values. Siblings
// are ordered by value descending with a collapsed "other" leaf last.
struct SunburstNode {
  std::string entry_id;
  std::string label;
  long long own = 0;
  long long value = 0;
  std::string color_key;  // forest root id; "other" for the synthetic root
  std::vector<SunburstNode> children;
};

// Builds the sunburst forest for a scope. Subtrees whose share of the scope's
// N falls below collapse_share are folded into a per-root "other" leaf; whole
// roots below the threshold are folded into a synthetic "other" root. The sum
// of root values (including the "other" nodes) equals the scope's N exactly.
std::vector<SunburstNode> sunburst_data(std::span<const PaperCounts> scope,
                                        const Lexicon& lexicon, double collapse_share = 0.005);
std::vector<SunburstNode> sunburst_from_totals(const std::map<std::string, long long>& totals,
                                               const Lexicon& lexicon,
                                               double collapse_share = 0.005);

enum class ChartKind {
  timeseries,
  ks_heatmap,
  sunburst,
  jaccard_matrix,
  majority_bars,
  quartile_diff,
};

std::string chart_kind_name(ChartKind kind);

struct StyleOptions {
  int width = 720;
  int height = 0;  // 0 = per-kind default
  std::map<std::string, std::string> root_colors;
};

// Stable palette assignment over a sorted root list. "other" is always grey.
std::map<std::string, std::string> assign_root_colors(const std::vector<std::string>& roots);

// Deterministic standalone SVG for one chart payload (see docs/formats.md for
// the per-kind data schemas). No timestamps; floats fixed to 4 decimals.
std::string render(ChartKind kind, const nlohmann::json& data, const StyleOptions& style = {});

struct EmitResult {
  nlohmann::json manifest;
  std::vector<std::filesystem::path> written;
};

// Writes one data file and one SVG per figure kind per applicable scope, plus
// manifest.json with relative paths and content checksums. Refuses to
// overwrite existing outputs unless force is set. The lexicon supplies the
// dependency forest for the sunburst trees.
EmitResult emit_all(const AnalysisSet& analyses, const Lexicon& lexicon,
                    const std::filesystem::path& out_dir, bool force = false);

}  // namespace termdrift
