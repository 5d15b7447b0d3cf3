#pragma once

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "transcut/image.hpp"

namespace transcut {

struct Confusion {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

struct PRF {
  double precision = 0.0;
  double recall = 0.0;
  double f_measure = 0.0;
};

inline Confusion confusion(const Mask& pred, const Mask& gt) {
  require_same_shape(pred, gt, "prf");
  Confusion c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred.data[i] != 0, g = gt.data[i] != 0;
    if (p && g) ++c.tp;
    else if (p) ++c.fp;
    else if (g) ++c.fn;
    else ++c.tn;
  }
  return c;
}

inline double harmonic_f(double precision, double recall) {
  return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

/// Precision, recall and F from confusion counts; empty denominators give 0.
inline PRF prf(const Confusion& c) {
  PRF r;
  r.precision = c.tp + c.fp > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
  r.recall = c.tp + c.fn > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
  r.f_measure = harmonic_f(r.precision, r.recall);
  return r;
}

inline PRF prf(const Mask& pred, const Mask& gt) { return prf(confusion(pred, gt)); }

/// LF-linearity thresholding: foreground where E >= th on textured pixels.
inline Mask threshold_baseline(const ScalarMap& e, double th, const Mask& texture) {
  require_same_shape(e, texture, "threshold_baseline");
  Mask out(e.width, e.height);
  for (std::size_t i = 0; i < e.size(); ++i) out.data[i] = texture.data[i] != 0 && e.data[i] >= th;
  return out;
}

enum class Averaging { Macro, Micro };

struct ReportRow {
  std::string scene;
  std::string method;
  PRF prf;
  Confusion counts;
};

/// Predictions of several methods on one scene.
struct SceneMethods {
  std::string scene;
  Mask gt;
  std::vector<std::pair<std::string, Mask>> methods;
};

struct Report {
  std::vector<ReportRow> rows;      ///< one per (scene, method)
  std::vector<ReportRow> averages;  ///< one per method, scene "mean"
};

/// Per-scene rows plus a per-method average over scenes. Macro averages the
/// per-scene precision, recall and F; micro pools the confusion counts.
inline Report compare_report(const std::vector<SceneMethods>& scenes, Averaging mode = Averaging::Macro) {
  Report report;
  std::vector<std::string> order;
  std::map<std::string, std::vector<const ReportRow*>> by_method;
  for (const auto& sc : scenes)
    for (const auto& [name, mask] : sc.methods) {
      const Confusion c = confusion(mask, sc.gt);
      report.rows.push_back({sc.scene, name, prf(c), c});
    }
  for (const auto& row : report.rows) {
    auto& list = by_method[row.method];
    if (list.empty()) order.push_back(row.method);
    list.push_back(&row);
  }
  for (const auto& name : order) {
    const auto& list = by_method[name];
    ReportRow avg{"mean", name, {}, {}};
    for (const auto* r : list) {
      avg.counts.tp += r->counts.tp;
      avg.counts.fp += r->counts.fp;
      avg.counts.fn += r->counts.fn;
      avg.counts.tn += r->counts.tn;
      avg.prf.precision += r->prf.precision;
      avg.prf.recall += r->prf.recall;
      avg.prf.f_measure += r->prf.f_measure;
    }
    if (mode == Averaging::Micro) {
      avg.prf = prf(avg.counts);
    } else {
      const double n = static_cast<double>(list.size());
      avg.prf.precision /= n;
      avg.prf.recall /= n;
      avg.prf.f_measure /= n;
    }
    report.averages.push_back(avg);
  }
  return report;
}

inline Report compare_report(const std::vector<std::pair<std::string, Mask>>& methods, const Mask& gt,
                             const std::string& scene = "scene") {
  return compare_report(std::vector<SceneMethods>{{scene, gt, methods}});
}

namespace detail {

inline std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace detail

/// Aligned plain-text table.
inline std::string format_table(const Report& report) {
  std::vector<std::vector<std::string>> cells{{"scene", "method", "precision", "recall", "f"}};
  for (const auto* rows : {&report.rows, &report.averages})
    for (const auto& r : *rows)
      cells.push_back({r.scene, r.method, detail::fixed4(r.prf.precision), detail::fixed4(r.prf.recall),
                       detail::fixed4(r.prf.f_measure)});
  std::vector<std::size_t> width(5, 0);
  for (const auto& row : cells)
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  std::string out;
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      const std::string pad(width[c] - row[c].size(), ' ');
      out += c < 2 ? row[c] + pad : pad + row[c];
      out += c + 1 < row.size() ? "  " : "\n";
    }
  }
  return out;
}

/// CSV with header scene,method,precision,recall,f.
inline std::string format_csv(const Report& report) {
  std::string out = "scene,method,precision,recall,f\n";
  char buf[96];
  for (const auto* rows : {&report.rows, &report.averages})
    for (const auto& r : *rows) {
      std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.6f\n", r.prf.precision, r.prf.recall, r.prf.f_measure);
      out += r.scene + "," + r.method + "," + buf;
    }
  return out;
}

}  // namespace transcut
