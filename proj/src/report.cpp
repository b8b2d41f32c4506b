#include "termdrift/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>

#include "termdrift/errors.hpp"
#include "termdrift/util.hpp"

namespace termdrift {

using nlohmann::json;

namespace {

std::string fmt(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  // avoid "-0.0000" noise in otherwise byte-stable output
  std::string s(buf);
  bool zero = true;
  for (char c : s) {
    if (c >= '1' && c <= '9') {
      zero = false;
      break;
    }
  }
  if (zero && !s.empty() && s[0] == '-') s.erase(0, 1);
  return s;
}

std::string f4(double v) { return fmt(v, 4); }
std::string f2(double v) { return fmt(v, 2); }

const std::vector<std::string>& palette() {
  static const std::vector<std::string> colors{
      "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f",
      "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac",
      "#1f77b4", "#a0cbe8", "#2ca02c", "#d62728", "#9467bd",
      "#8c564b", "#e377c2", "#86bcb6", "#bcbd22", "#17becf"};
  return colors;
}

constexpr const char* kOtherColor = "#999999";

struct Rgb {
  int r = 0, g = 0, b = 0;
};

Rgb parse_color(const std::string& hex) {
  Rgb c;
  if (hex.size() == 7 && hex[0] == '#') {
    c.r = static_cast<int>(std::stol(hex.substr(1, 2), nullptr, 16));
    c.g = static_cast<int>(std::stol(hex.substr(3, 2), nullptr, 16));
    c.b = static_cast<int>(std::stol(hex.substr(5, 2), nullptr, 16));
  }
  return c;
}

std::string to_hex(const Rgb& c) {
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", c.r, c.g, c.b);
  return buf;
}

// t = 0 keeps the color, t = 1 is white.
std::string lighten(const std::string& hex, double t) {
  Rgb c = parse_color(hex);
  auto mix = [&](int v) { return static_cast<int>(std::lround(v + (255 - v) * t)); };
  return to_hex({mix(c.r), mix(c.g), mix(c.b)});
}

std::string xml_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

[[noreturn]] void schema_fail(const std::string& field) {
  throw DataError("chart data: missing or malformed field: " + field);
}

const json& need(const json& j, const char* field) {
  if (!j.contains(field)) schema_fail(field);
  return j.at(field);
}

}  // namespace

std::string chart_kind_name(ChartKind kind) {
  switch (kind) {
    case ChartKind::timeseries: return "timeseries";
    case ChartKind::ks_heatmap: return "ks_heatmap";
    case ChartKind::sunburst: return "sunburst";
    case ChartKind::jaccard_matrix: return "jaccard_matrix";
    case ChartKind::majority_bars: return "majority_bars";
    case ChartKind::quartile_diff: return "quartile_diff";
  }
  return "unknown";
}

std::map<std::string, std::string> assign_root_colors(const std::vector<std::string>& roots) {
  std::vector<std::string> sorted(roots.begin(), roots.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::map<std::string, std::string> colors;
  size_t i = 0;
  for (const auto& root : sorted) {
    if (root == "other") continue;
    colors[root] = palette()[i % palette().size()];
    ++i;
  }
  colors["other"] = kOtherColor;
  return colors;
}

std::vector<SunburstNode> sunburst_from_totals(const std::map<std::string, long long>& totals,
                                               const Lexicon& lexicon, double collapse_share) {
  long long n_total = 0;
  for (const auto& [entry, cnt] : totals) {
    if (!lexicon.find(entry)) throw DataError("sunburst: unknown entry " + entry);
    n_total += cnt;
  }
  if (n_total == 0) throw DataError("sunburst: zero model mentions in scope");

  // Counted entries plus their ancestors, so chains with zero own counts
  // still connect to the root.
  std::set<std::string> included;
  for (const auto& [entry, cnt] : totals) {
    std::string cur = entry;
    while (true) {
      if (!included.insert(cur).second) break;
      const ModelEntry* e = lexicon.find(cur);
      if (!e->parent) break;
      cur = *e->parent;
    }
  }

  std::map<std::string, std::vector<std::string>> children;
  std::vector<std::string> root_ids;
  for (const auto& id : included) {
    const ModelEntry* e = lexicon.find(id);
    if (e->parent && included.count(*e->parent)) {
      children[*e->parent].push_back(id);
    } else {
      root_ids.push_back(id);
    }
  }

  std::function<SunburstNode(const std::string&, const std::string&)> build =
      [&](const std::string& id, const std::string& color_key) {
        SunburstNode node;
        node.entry_id = id;
        node.label = id;
        node.color_key = color_key;
        auto it = totals.find(id);
        node.own = it == totals.end() ? 0 : it->second;
        node.value = node.own;
        for (const auto& child : children[id]) {
          SunburstNode c = build(child, color_key);
          node.value += c.value;
          node.children.push_back(std::move(c));
        }
        return node;
      };

  const double threshold = collapse_share * static_cast<double>(n_total);

  // Removes sub-threshold subtrees, deducting their mass from every ancestor;
  // the root gets it back as an "other" leaf so totals are conserved.
  std::function<long long(SunburstNode&)> prune = [&](SunburstNode& node) {
    long long removed = 0;
    std::vector<SunburstNode> kept;
    for (auto& child : node.children) {
      if (static_cast<double>(child.value) < threshold) {
        removed += child.value;
      } else {
        removed += prune(child);
        kept.push_back(std::move(child));
      }
    }
    node.children = std::move(kept);
    node.value -= removed;
    return removed;
  };

  std::function<void(SunburstNode&)> sort_children = [&](SunburstNode& node) {
    std::sort(node.children.begin(), node.children.end(),
              [](const SunburstNode& a, const SunburstNode& b) {
                if (a.value != b.value) return a.value > b.value;
                return a.entry_id < b.entry_id;
              });
    for (auto& child : node.children) sort_children(child);
  };

  std::vector<SunburstNode> roots;
  long long collapsed_roots = 0;
  for (const auto& id : root_ids) {
    SunburstNode root = build(id, id);
    if (static_cast<double>(root.value) < threshold) {
      collapsed_roots += root.value;
      continue;
    }
    long long removed = prune(root);
    sort_children(root);
    if (removed > 0) {
      SunburstNode other;
      other.entry_id = "other";
      other.label = "other";
      other.own = removed;
      other.value = removed;
      other.color_key = id;
      root.children.push_back(std::move(other));
      root.value += removed;
    }
    roots.push_back(std::move(root));
  }
  std::sort(roots.begin(), roots.end(), [](const SunburstNode& a, const SunburstNode& b) {
    if (a.value != b.value) return a.value > b.value;
    return a.entry_id < b.entry_id;
  });
  if (collapsed_roots > 0) {
    SunburstNode other;
    other.entry_id = "other";
    other.label = "other";
    other.own = collapsed_roots;
    other.value = collapsed_roots;
    other.color_key = "other";
    roots.push_back(std::move(other));
  }
  return roots;
}

std::vector<SunburstNode> sunburst_data(std::span<const PaperCounts> scope,
                                        const Lexicon& lexicon, double collapse_share) {
  std::map<std::string, long long> totals;
  for (const PaperCounts& c : scope) {
    for (const auto& [entry, cnt] : c.per_entry) totals[entry] += cnt;
  }
  return sunburst_from_totals(totals, lexicon, collapse_share);
}

namespace {

json sunburst_node_to_json(const SunburstNode& node) {
  json children = json::array();
  for (const auto& c : node.children) children.push_back(sunburst_node_to_json(c));
  return json{{"entry_id", node.entry_id}, {"label", node.label},   {"own", node.own},
              {"value", node.value},       {"color_key", node.color_key},
              {"children", children}};
}

// ---- SVG rendering -------------------------------------------------------

struct Svg {
  std::ostringstream body;
  int width = 0;
  int height = 0;

  std::string finish() const {
    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n"
        << "<style>text{font-family:Helvetica,Arial,sans-serif;}</style>\n"
        << body.str() << "</svg>\n";
    return out.str();
  }

  void text(double x, double y, const std::string& s, int size, const char* anchor = "start",
            const char* fill = "#333333") {
    body << "<text x=\"" << f4(x) << "\" y=\"" << f4(y) << "\" font-size=\"" << size
         << "\" text-anchor=\"" << anchor << "\" fill=\"" << fill << "\">" << xml_escape(s)
         << "</text>\n";
  }

  void rect(double x, double y, double w, double h, const std::string& fill,
            const std::string& extra = "") {
    body << "<rect x=\"" << f4(x) << "\" y=\"" << f4(y) << "\" width=\"" << f4(w)
         << "\" height=\"" << f4(h) << "\" fill=\"" << fill << "\"" << extra << "/>\n";
  }

  void line(double x1, double y1, double x2, double y2, const std::string& stroke,
            const std::string& extra = "") {
    body << "<line x1=\"" << f4(x1) << "\" y1=\"" << f4(y1) << "\" x2=\"" << f4(x2)
         << "\" y2=\"" << f4(y2) << "\" stroke=\"" << stroke << "\"" << extra << "/>\n";
  }
};

struct Point {
  double x = 0, y = 0;
};

Point polar(double cx, double cy, double r, double deg) {
  double rad = deg * 3.14159265358979323846 / 180.0;
  return {cx + r * std::cos(rad), cy - r * std::sin(rad)};
}

// Annular sector from a0 to a1 degrees (counter-clockwise on screen).
std::string arc_path(double cx, double cy, double r_in, double r_out, double a0, double a1) {
  std::ostringstream d;
  double span = a1 - a0;
  if (span >= 359.999) {
    double mid = a0 + 180.0;
    Point o0 = polar(cx, cy, r_out, a0), om = polar(cx, cy, r_out, mid);
    Point i0 = polar(cx, cy, r_in, a0), im = polar(cx, cy, r_in, mid);
    d << "M " << f4(o0.x) << " " << f4(o0.y);
    d << " A " << f4(r_out) << " " << f4(r_out) << " 0 0 0 " << f4(om.x) << " " << f4(om.y);
    d << " A " << f4(r_out) << " " << f4(r_out) << " 0 0 0 " << f4(o0.x) << " " << f4(o0.y);
    if (r_in > 0) {
      d << " M " << f4(i0.x) << " " << f4(i0.y);
      d << " A " << f4(r_in) << " " << f4(r_in) << " 0 0 1 " << f4(im.x) << " " << f4(im.y);
      d << " A " << f4(r_in) << " " << f4(r_in) << " 0 0 1 " << f4(i0.x) << " " << f4(i0.y);
    }
    d << " Z";
    return d.str();
  }
  int large = span > 180.0 ? 1 : 0;
  Point p1 = polar(cx, cy, r_out, a0), p2 = polar(cx, cy, r_out, a1);
  Point p3 = polar(cx, cy, r_in, a1), p4 = polar(cx, cy, r_in, a0);
  d << "M " << f4(p1.x) << " " << f4(p1.y);
  d << " A " << f4(r_out) << " " << f4(r_out) << " 0 " << large << " 0 " << f4(p2.x) << " "
    << f4(p2.y);
  d << " L " << f4(p3.x) << " " << f4(p3.y);
  d << " A " << f4(r_in) << " " << f4(r_in) << " 0 " << large << " 1 " << f4(p4.x) << " "
    << f4(p4.y);
  d << " Z";
  return d.str();
}

std::string color_for(const StyleOptions& style, const std::string& root) {
  auto it = style.root_colors.find(root);
  return it == style.root_colors.end() ? std::string(kOtherColor) : it->second;
}

int tree_depth(const json& node) {
  int depth = 1;
  for (const auto& c : need(node, "children")) depth = std::max(depth, 1 + tree_depth(c));
  return depth;
}

void render_sunburst_node(Svg& svg, const json& node, double cx, double cy, double r0,
                          double ring, int depth, double a0, double a1,
                          const StyleOptions& style) {
  double r_in = r0 + depth * ring;
  double r_out = r_in + ring;
  std::string base = color_for(style, need(node, "color_key").get<std::string>());
  std::string fill = need(node, "entry_id").get<std::string>() == "other" &&
                             need(node, "color_key").get<std::string>() == "other"
                         ? kOtherColor
                         : lighten(base, std::min(0.15 * depth, 0.6));
  svg.body << "<path class=\"arc\" d=\"" << arc_path(cx, cy, r_in, r_out, a0, a1)
           << "\" fill=\"" << fill << "\" stroke=\"#ffffff\" stroke-width=\"1\"/>\n";
  double span = a1 - a0;
  if (span >= 15.0) {
    Point p = polar(cx, cy, (r_in + r_out) / 2.0, (a0 + a1) / 2.0);
    svg.text(p.x, p.y, need(node, "label").get<std::string>(), 9, "middle");
  }
  double value = need(node, "value").get<double>();
  if (value <= 0) return;
  double cursor = a0;
  for (const auto& child : need(node, "children")) {
    double child_span = span * child.at("value").get<double>() / value;
    render_sunburst_node(svg, child, cx, cy, r0, ring, depth + 1, cursor, cursor + child_span,
                         style);
    cursor += child_span;
  }
}

std::string render_sunburst(const json& data, const StyleOptions& style) {
  const json& roots = need(data, "roots");
  double total = need(data, "total").get<double>();
  if (total <= 0) throw DataError("chart data: sunburst total must be positive");

  int max_depth = 1;
  for (const auto& r : roots) max_depth = std::max(max_depth, tree_depth(r));

  Svg svg;
  svg.width = style.width;
  svg.height = style.height > 0 ? style.height : style.width;
  double cx = svg.width / 2.0, cy = svg.height / 2.0;
  double r0 = 36.0;
  double ring = std::max(18.0, (std::min(cx, cy) - r0 - 10.0) / max_depth);

  svg.text(cx, cy + 4, need(data, "scope").get<std::string>(), 12, "middle");
  double cursor = 90.0;  // start at 12 o'clock, proceed counter-clockwise
  for (const auto& root : roots) {
    double span = 360.0 * root.at("value").get<double>() / total;
    render_sunburst_node(svg, root, cx, cy, r0, ring, 0, cursor, cursor + span, style);
    cursor += span;
  }
  return svg.finish();
}

std::string heat_color(const std::string& bucket, double mean_diff) {
  static const std::map<std::string, int> level{{"ns", 0}, {"p<0.05", 1}, {"p<0.01", 2},
                                                {"p<0.001", 3}};
  auto it = level.find(bucket);
  int l = it == level.end() ? 0 : it->second;
  if (l == 0) return "#f2f2f2";
  static const char* blue[] = {"", "#c6dbef", "#6baed6", "#2171b5"};
  static const char* red[] = {"", "#fcbba1", "#fb6a4a", "#cb181d"};
  return mean_diff >= 0 ? blue[l] : red[l];
}

std::string render_ks_heatmap(const json& data, const StyleOptions& style) {
  std::vector<std::string> labels = need(data, "labels").get<std::vector<std::string>>();
  const json& cells = need(data, "cells");
  const size_t k = labels.size();
  if (k < 2) throw DataError("chart data: ks_heatmap needs >= 2 labels");

  const double margin_left = 110, margin_top = 70;
  const double cell = 46;
  Svg svg;
  svg.width = static_cast<int>(margin_left + cell * static_cast<double>(k - 1) + 20);
  svg.height = static_cast<int>(margin_top + cell * static_cast<double>(k - 1) + 30);

  svg.text(margin_left, 20, need(data, "metric").get<std::string>() +
                                " distribution shifts (K-S test, mean difference)",
           12);
  for (size_t j = 1; j < k; ++j) {
    svg.text(margin_left + cell * (static_cast<double>(j) - 0.5), margin_top - 8, labels[j], 9,
             "middle");
  }
  for (size_t i = 0; i + 1 < k; ++i) {
    svg.text(margin_left - 6, margin_top + cell * (static_cast<double>(i) + 0.6), labels[i], 9,
             "end");
  }
  for (const auto& c : cells) {
    size_t i = c.at("row").get<size_t>();
    size_t j = c.at("col").get<size_t>();
    if (j <= i || j >= k) throw DataError("chart data: cell indices out of order");
    double x = margin_left + cell * static_cast<double>(j - 1);
    double y = margin_top + cell * static_cast<double>(i);
    std::string bucket = c.at("bucket").get<std::string>();
    double diff = c.at("mean_diff").get<double>();
    svg.rect(x, y, cell - 2, cell - 2, heat_color(bucket, diff),
             " stroke=\"#ffffff\" stroke-width=\"1\"");
    const char* ink = bucket == "p<0.001" ? "#ffffff" : "#333333";
    svg.text(x + (cell - 2) / 2, y + cell / 2 - 4, f2(diff), 10, "middle", ink);
    svg.text(x + (cell - 2) / 2, y + cell / 2 + 9, bucket, 7, "middle", ink);
  }
  return svg.finish();
}

std::string render_jaccard(const json& data, const StyleOptions& style) {
  std::vector<std::string> labels = need(data, "labels").get<std::vector<std::string>>();
  const json& matrix = need(data, "matrix");
  const size_t k = labels.size();
  if (matrix.size() != k) throw DataError("chart data: matrix/labels size mismatch");

  const double margin_left = 110, margin_top = 70;
  const double cell = 46;
  Svg svg;
  svg.width = static_cast<int>(margin_left + cell * static_cast<double>(k) + 20);
  svg.height = static_cast<int>(margin_top + cell * static_cast<double>(k) + 30);

  svg.text(margin_left, 20,
           "composition similarity (" + need(data, "mode").get<std::string>() + " Jaccard)",
           12);
  for (size_t j = 0; j < k; ++j) {
    svg.text(margin_left + cell * (static_cast<double>(j) + 0.5), margin_top - 8, labels[j], 9,
             "middle");
    svg.text(margin_left - 6, margin_top + cell * (static_cast<double>(j) + 0.6), labels[j], 9,
             "end");
  }
  for (size_t i = 0; i < k; ++i) {
    for (size_t j = i; j < k; ++j) {
      double v = matrix.at(i).at(j).get<double>();
      double x = margin_left + cell * static_cast<double>(j);
      double y = margin_top + cell * static_cast<double>(i);
      svg.rect(x, y, cell - 2, cell - 2, lighten("#08519c", 1.0 - v),
               " stroke=\"#ffffff\" stroke-width=\"1\"");
      svg.text(x + (cell - 2) / 2, y + cell / 2 + 3, f2(v), 10, "middle",
               v > 0.55 ? "#ffffff" : "#333333");
    }
  }
  return svg.finish();
}

std::string render_timeseries(const json& data, const StyleOptions& style) {
  const json& points = need(data, "points");
  const size_t k = points.size();
  if (k == 0) throw DataError("chart data: timeseries has no points");

  Svg svg;
  svg.width = style.width;
  svg.height = style.height > 0 ? style.height : 420;
  const double margin = 50;
  const double panel_h = (svg.height - 3 * margin) / 2.0;
  const double plot_w = svg.width - 2 * margin;
  auto x_at = [&](size_t i) {
    return k == 1 ? margin + plot_w / 2
                  : margin + plot_w * static_cast<double>(i) / static_cast<double>(k - 1);
  };

  // panel 1: LM-related proportion, y in [0,1]
  double top1 = margin;
  svg.text(margin, top1 - 8, "share of papers with any generic-term mention", 11);
  svg.line(margin, top1 + panel_h, margin + plot_w, top1 + panel_h, "#888888");
  std::ostringstream poly;
  for (size_t i = 0; i < k; ++i) {
    const json& p = points.at(i);
    double y = top1 + panel_h * (1.0 - p.at("prop_lm_related").get<double>());
    poly << (i ? " " : "") << f4(x_at(i)) << "," << f4(y);
    svg.body << "<circle cx=\"" << f4(x_at(i)) << "\" cy=\"" << f4(y)
             << "\" r=\"3\" fill=\"#4e79a7\"/>\n";
    svg.text(x_at(i), y - 8, f2(p.at("prop_lm_related").get<double>()), 9, "middle");
  }
  svg.body << "<polyline points=\"" << poly.str()
           << "\" fill=\"none\" stroke=\"#4e79a7\" stroke-width=\"2\"/>\n";

  // panel 2: actual vs estimated mean N^L, plus mean N
  double top2 = 2 * margin + panel_h;
  svg.text(margin, top2 - 8, "mean generic-term count: actual vs share-scaled estimate", 11);
  svg.line(margin, top2 + panel_h, margin + plot_w, top2 + panel_h, "#888888");
  double max_y = 1e-9;
  for (const auto& p : points) {
    max_y = std::max(max_y, p.at("mean_n_l").get<double>());
    max_y = std::max(max_y, p.at("mean_n").get<double>());
    if (p.contains("estimated_mean_n_l")) {
      max_y = std::max(max_y, p.at("estimated_mean_n_l").get<double>());
    }
  }
  auto draw_series = [&](const char* field, const char* stroke, const char* dash) {
    std::ostringstream pts;
    bool any = false;
    for (size_t i = 0; i < k; ++i) {
      const json& p = points.at(i);
      if (!p.contains(field)) continue;
      double y = top2 + panel_h * (1.0 - p.at(field).get<double>() / max_y);
      pts << (any ? " " : "") << f4(x_at(i)) << "," << f4(y);
      any = true;
    }
    if (any) {
      svg.body << "<polyline points=\"" << pts.str() << "\" fill=\"none\" stroke=\"" << stroke
               << "\" stroke-width=\"2\"" << dash << "/>\n";
    }
  };
  draw_series("mean_n_l", "#4e79a7", "");
  draw_series("estimated_mean_n_l", "#777777", " stroke-dasharray=\"5,3\"");
  draw_series("mean_n", "#f28e2b", "");
  svg.text(margin, top2 + panel_h + 16, "solid blue: actual   dashed grey: estimate   orange: mean model-name count",
           9);

  for (size_t i = 0; i < k; ++i) {
    svg.text(x_at(i), svg.height - 12, points.at(i).at("label").get<std::string>(), 9, "middle");
  }
  return svg.finish();
}

std::string render_majority(const json& data, const StyleOptions& style) {
  const json& rows = need(data, "rows");
  if (rows.empty()) throw DataError("chart data: majority_bars has no rows");

  Svg svg;
  svg.width = style.width;
  const double row_h = 34, margin_left = 110, margin_top = 56;
  svg.height = static_cast<int>(margin_top + row_h * rows.size() + 20);
  const double bar_w = svg.width - margin_left - 120;

  svg.body << "<defs><pattern id=\"nomaj\" width=\"6\" height=\"6\" "
              "patternUnits=\"userSpaceOnUse\" patternTransform=\"rotate(45)\">"
              "<rect width=\"6\" height=\"6\" fill=\"#e8e8e8\"/>"
              "<line x1=\"0\" y1=\"0\" x2=\"0\" y2=\"6\" stroke=\"#aaaaaa\" stroke-width=\"2\"/>"
              "</pattern></defs>\n";
  svg.text(margin_left, 20, "papers with an absolute-majority component (" +
                                need(data, "selector").get<std::string>() + ")",
           12);

  double y = margin_top;
  for (const auto& row : rows) {
    svg.text(margin_left - 6, y + row_h / 2 + 3, row.at("label").get<std::string>(), 9, "end");
    double x = margin_left;
    for (const auto& comp : row.at("components")) {
      double w = bar_w * comp.at("fraction").get<double>();
      std::string root = comp.at("root").get<std::string>();
      svg.rect(x, y, w, row_h - 8, color_for(style, root));
      if (w > 34) {
        svg.text(x + w / 2, y + row_h / 2 - 1, root, 8, "middle", "#ffffff");
      }
      x += w;
    }
    double no_majority = row.at("no_majority_fraction").get<double>();
    svg.rect(x, y, bar_w * no_majority, row_h - 8, "url(#nomaj)");
    svg.text(margin_left + bar_w + 8, y + row_h / 2 + 3,
             f2(row.at("majority_fraction").get<double>() * 100.0) + "% majority", 9);
    y += row_h;
  }
  return svg.finish();
}

std::string render_quartile_diff(const json& data, const StyleOptions& style) {
  const json& series = need(data, "series");
  if (series.empty()) throw DataError("chart data: quartile_diff has no series");

  // Row per root, keeping first-series order and appending any extras.
  std::vector<std::string> roots;
  for (const auto& s : series) {
    for (const auto& d : s.at("deltas")) {
      std::string root = d.at("root").get<std::string>();
      if (std::find(roots.begin(), roots.end(), root) == roots.end()) roots.push_back(root);
    }
  }
  if (roots.empty()) throw DataError("chart data: quartile_diff has no deltas");

  double max_abs = 1e-9;
  for (const auto& s : series) {
    for (const auto& d : s.at("deltas")) {
      max_abs = std::max(max_abs, std::fabs(d.at("delta").get<double>()));
    }
  }

  Svg svg;
  svg.width = style.width;
  const double row_h = 26, margin_left = 130, margin_top = 56;
  const size_t ns = series.size();
  svg.height = static_cast<int>(margin_top + row_h * static_cast<double>(roots.size()) + 40);
  const double half_w = (svg.width - margin_left - 80) / 2.0;
  const double x_mid = margin_left + half_w;

  svg.text(margin_left, 20, need(data, "scope").get<std::string>(), 12);
  svg.line(x_mid, margin_top - 6, x_mid, margin_top + row_h * static_cast<double>(roots.size()),
           "#888888");

  double bar_h = (row_h - 8) / static_cast<double>(ns);
  for (size_t r = 0; r < roots.size(); ++r) {
    double y = margin_top + row_h * static_cast<double>(r);
    svg.text(margin_left - 6, y + row_h / 2 + 3, roots[r], 9, "end");
    for (size_t si = 0; si < ns; ++si) {
      const json& s = series.at(si);
      double delta = 0;
      bool found = false;
      for (const auto& d : s.at("deltas")) {
        if (d.at("root").get<std::string>() == roots[r]) {
          delta = d.at("delta").get<double>();
          found = true;
          break;
        }
      }
      if (!found) continue;
      double w = half_w * std::fabs(delta) / max_abs;
      double yy = y + bar_h * static_cast<double>(si);
      std::string fill = delta >= 0 ? "#4e79a7" : "#e15759";
      if (si > 0) fill = lighten(fill, 0.45);
      svg.rect(delta >= 0 ? x_mid : x_mid - w, yy, w, bar_h - 1, fill);
      svg.text(delta >= 0 ? x_mid + w + 4 : x_mid - w - 4, yy + bar_h - 1,
               fmt(delta * 100.0, 1) + "%", 8, delta >= 0 ? "start" : "end");
    }
  }
  double legend_y = margin_top + row_h * static_cast<double>(roots.size()) + 18;
  double legend_x = margin_left;
  for (size_t si = 0; si < ns; ++si) {
    std::string fill = si > 0 ? lighten("#4e79a7", 0.45) : "#4e79a7";
    svg.rect(legend_x, legend_y - 8, 10, 10, fill);
    svg.text(legend_x + 14, legend_y, series.at(si).at("name").get<std::string>(), 9);
    legend_x += 150;
  }
  return svg.finish();
}

}  // namespace

std::string render(ChartKind kind, const json& data, const StyleOptions& style) {
  try {
    switch (kind) {
      case ChartKind::timeseries: return render_timeseries(data, style);
      case ChartKind::ks_heatmap: return render_ks_heatmap(data, style);
      case ChartKind::sunburst: return render_sunburst(data, style);
      case ChartKind::jaccard_matrix: return render_jaccard(data, style);
      case ChartKind::majority_bars: return render_majority(data, style);
      case ChartKind::quartile_diff: return render_quartile_diff(data, style);
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("chart data: ") + e.what());
  }
  throw DataError("unknown chart kind");
}

namespace {

std::string slug(const ConferenceKey& key) {
  std::string s = lower_ascii(key.venue) + "_" + std::to_string(key.year);
  for (char& c : s) {
    if (!is_ascii_alnum(c) && c != '_') c = '_';
  }
  return s;
}

json deltas_json(const std::vector<std::pair<std::string, double>>& deltas) {
  json arr = json::array();
  for (const auto& [root, delta] : deltas) arr.push_back({{"root", root}, {"delta", delta}});
  return arr;
}

}  // namespace

EmitResult emit_all(const AnalysisSet& analyses, const Lexicon& lexicon,
                    const std::filesystem::path& out_dir, bool force) {
  // Stable colors across every chart in the run: all roots that appear
  // anywhere, sorted.
  std::set<std::string> all_roots;
  for (const auto& c : analyses.compositions) {
    for (const auto& [root, share] : c.composition.by_component) all_roots.insert(root);
  }
  for (const auto& m : analyses.majority_all) {
    for (const auto& [root, f] : m.report.by_component) all_roots.insert(root);
  }
  StyleOptions style;
  style.root_colors =
      assign_root_colors(std::vector<std::string>(all_roots.begin(), all_roots.end()));

  struct Bundle {
    ChartKind kind;
    std::string name;
    json data;
  };
  std::vector<Bundle> bundles;

  {
    json points = json::array();
    for (const auto& p : analyses.timeseries) {
      json item{{"label", p.key.label()},
                {"ordinal", p.key.ordinal},
                {"paper_count", p.paper_count},
                {"lm_related_count", p.lm_related_count},
                {"prop_lm_related", p.prop_lm_related},
                {"mean_n_l", p.mean_n_l},
                {"mean_n", p.mean_n}};
      if (p.estimated_mean_n_l) item["estimated_mean_n_l"] = *p.estimated_mean_n_l;
      points.push_back(std::move(item));
    }
    bundles.push_back({ChartKind::timeseries, "timeseries",
                       json{{"schema", "termdrift.chart.timeseries"},
                            {"version", 1},
                            {"points", std::move(points)}}});
  }

  auto ks_bundle = [&](const std::vector<PairwiseCell>& cells, const std::string& metric) {
    std::vector<std::string> labels;
    std::map<int, size_t> ordinal_index;
    for (const auto& c : cells) {
      for (const auto& key : {c.row, c.col}) {
        if (!ordinal_index.count(key.ordinal)) {
          ordinal_index[key.ordinal] = 0;
        }
      }
    }
    // ordinal -> dense index in chronological order
    size_t idx = 0;
    for (auto& [ordinal, slot] : ordinal_index) slot = idx++;
    labels.resize(ordinal_index.size());
    for (const auto& c : cells) {
      labels[ordinal_index[c.row.ordinal]] = c.row.label();
      labels[ordinal_index[c.col.ordinal]] = c.col.label();
    }
    json cell_arr = json::array();
    for (const auto& c : cells) {
      cell_arr.push_back({{"row", ordinal_index[c.row.ordinal]},
                          {"col", ordinal_index[c.col.ordinal]},
                          {"d", c.ks_statistic},
                          {"p_value", c.p_value},
                          {"mean_diff", c.mean_diff},
                          {"bucket", c.significance_bucket}});
    }
    bundles.push_back({ChartKind::ks_heatmap, "ks_heatmap_" + metric,
                       json{{"schema", "termdrift.chart.ks_heatmap"},
                            {"version", 1},
                            {"metric", metric},
                            {"labels", labels},
                            {"cells", std::move(cell_arr)}}});
  };
  if (!analyses.ks_n_l.empty()) ks_bundle(analyses.ks_n_l, "n_l");
  if (!analyses.ks_n.empty()) ks_bundle(analyses.ks_n, "n");

  for (const auto& comp : analyses.compositions) {
    std::vector<SunburstNode> roots = sunburst_from_totals(comp.entry_counts, lexicon);
    json root_arr = json::array();
    long long total = 0;
    for (const auto& r : roots) {
      total += r.value;
      root_arr.push_back(sunburst_node_to_json(r));
    }
    bundles.push_back({ChartKind::sunburst, "sunburst_" + slug(comp.key),
                       json{{"schema", "termdrift.chart.sunburst"},
                            {"version", 1},
                            {"scope", comp.key.label()},
                            {"total", total},
                            {"roots", std::move(root_arr)}}});
  }

  auto jaccard_bundle = [&](const std::vector<std::vector<double>>& matrix,
                            const std::string& mode) {
    bundles.push_back({ChartKind::jaccard_matrix, "jaccard_" + mode,
                       json{{"schema", "termdrift.chart.jaccard_matrix"},
                            {"version", 1},
                            {"mode", mode},
                            {"labels", analyses.jaccard_labels},
                            {"matrix", matrix}}});
  };
  if (!analyses.jaccard_labels.empty()) {
    jaccard_bundle(analyses.jaccard_set, "set");
    jaccard_bundle(analyses.jaccard_weighted, "weighted");
  }

  auto majority_bundle = [&](const std::vector<ConferenceMajority>& reports,
                             const std::string& selector) {
    json rows = json::array();
    for (const auto& m : reports) {
      std::vector<std::pair<std::string, double>> comps(m.report.by_component.begin(),
                                                        m.report.by_component.end());
      std::sort(comps.begin(), comps.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
      });
      json comp_arr = json::array();
      for (const auto& [root, fraction] : comps) {
        comp_arr.push_back({{"root", root}, {"fraction", fraction}});
      }
      rows.push_back({{"label", m.key.label()},
                      {"counted_papers", m.report.counted_papers},
                      {"majority_fraction", m.report.majority_fraction},
                      {"no_majority_fraction", m.report.no_majority_fraction},
                      {"components", std::move(comp_arr)}});
    }
    bundles.push_back({ChartKind::majority_bars, "majority_" + selector,
                       json{{"schema", "termdrift.chart.majority_bars"},
                            {"version", 1},
                            {"selector", selector},
                            {"rows", std::move(rows)}}});
  };
  if (!analyses.majority_all.empty()) majority_bundle(analyses.majority_all, "all");
  if (!analyses.majority_top_quarter.empty()) {
    majority_bundle(analyses.majority_top_quarter, "top_quarter");
  }

  for (const auto& qa : analyses.quartiles) {
    if (qa.diff.empty()) continue;
    json series = json::array();
    series.push_back({{"name", "Q4+ minus Q1-"}, {"deltas", deltas_json(qa.diff)}});
    bundles.push_back({ChartKind::quartile_diff, "quartile_diff_" + slug(qa.key),
                       json{{"schema", "termdrift.chart.quartile_diff"},
                            {"version", 1},
                            {"scope", qa.key.label() + ": Q4+ vs Q1- composition"},
                            {"series", std::move(series)}}});
  }
  if (analyses.overtime) {
    const OvertimeDiff& od = *analyses.overtime;
    json series = json::array();
    series.push_back({{"name", "Q4+"}, {"deltas", deltas_json(od.q4_diff)}});
    series.push_back({{"name", "Q1-"}, {"deltas", deltas_json(od.q1_diff)}});
    bundles.push_back({ChartKind::quartile_diff, "quartile_diff_overtime",
                       json{{"schema", "termdrift.chart.quartile_diff"},
                            {"version", 1},
                            {"scope", od.last.label() + " minus " + od.first.label() +
                                          ", per focus group"},
                            {"series", std::move(series)}}});
  }

  // Refuse to clobber existing outputs unless forced.
  std::filesystem::create_directories(out_dir);
  if (!force) {
    for (const auto& b : bundles) {
      for (const std::string& ext : {std::string(".json"), std::string(".svg")}) {
        std::filesystem::path target = out_dir / (b.name + ext);
        if (std::filesystem::exists(target)) {
          throw DataError("output exists (use --force to overwrite): " + target.string());
        }
      }
    }
  }

  EmitResult result;
  json files = json::array();
  for (const auto& b : bundles) {
    std::string data_text = b.data.dump(2) + "\n";
    std::string svg_text = render(b.kind, b.data, style);
    for (const auto& [ext, content] :
         std::vector<std::pair<std::string, const std::string*>>{{".json", &data_text},
                                                                 {".svg", &svg_text}}) {
      std::filesystem::path target = out_dir / (b.name + ext);
      write_file_atomic(target, *content);
      files.push_back({{"path", b.name + ext},
                       {"kind", chart_kind_name(b.kind)},
                       {"bytes", content->size()},
                       {"fnv1a64", fnv1a64_hex(*content)}});
      result.written.push_back(target);
    }
  }
  std::sort(files.begin(), files.end(),
            [](const json& a, const json& b) { return a.at("path") < b.at("path"); });
  result.manifest =
      json{{"schema", "termdrift.manifest"}, {"version", 1}, {"files", std::move(files)}};
  write_file_atomic(out_dir / "manifest.json", result.manifest.dump(2) + "\n");
  result.written.push_back(out_dir / "manifest.json");
  return result;
}

}  // namespace termdrift
