#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "transcut/errors.hpp"
#include "transcut/image.hpp"
#include "transcut/png_io.hpp"

namespace transcut {

/// Viewpoint coordinate in baseline units; (0, 0) is the central view.
struct Viewpoint {
  double s = 0.0;
  double t = 0.0;
  bool is_center() const { return s == 0.0 && t == 0.0; }
  friend bool operator==(const Viewpoint&, const Viewpoint&) = default;
};

/// Position of a view on the camera grid.
struct GridCell {
  int row = 0;
  int col = 0;
  friend bool operator==(const GridCell&, const GridCell&) = default;
  friend auto operator<=>(const GridCell&, const GridCell&) = default;
};

/// Grid of luminance views. A full light field holds every cell of the
/// grid_rows x grid_cols grid; view subsets keep a sparse set of cells.
struct LightField {
  int grid_rows = 0;
  int grid_cols = 0;
  std::vector<Image> views;
  std::vector<Viewpoint> viewpoints;
  std::vector<GridCell> cells;
  std::size_t center_index = 0;

  std::size_t size() const { return views.size(); }
  int width() const { return views.empty() ? 0 : views.front().width; }
  int height() const { return views.empty() ? 0 : views.front().height; }
  const Image& center() const { return views.at(center_index); }
  GridCell center_cell() const { return cells.at(center_index); }

  /// Integer grid offset (ds, dt) of a cell relative to the central cell.
  std::pair<int, int> offset(const GridCell& c) const {
    const GridCell cc = center_cell();
    return {c.col - cc.col, c.row - cc.row};
  }

  friend bool operator==(const LightField&, const LightField&) = default;
};

/// Checks the structural invariants; throws on violation.
inline void validate(const LightField& lf) {
  if (lf.grid_rows <= 0 || lf.grid_cols <= 0) throw ConfigError("light field: grid dimensions must be positive");
  if (lf.views.size() != lf.viewpoints.size() || lf.views.size() != lf.cells.size())
    throw ConfigError("light field: views, viewpoints and cells differ in length");
  if (lf.views.size() > static_cast<std::size_t>(lf.grid_rows) * static_cast<std::size_t>(lf.grid_cols))
    throw ConfigError("light field: more views than grid cells");
  if (lf.center_index >= lf.views.size() || !lf.viewpoints[lf.center_index].is_center())
    throw ConfigError("light field: center_index does not point at viewpoint (0,0)");
  std::set<GridCell> seen_cells;
  for (std::size_t i = 0; i < lf.views.size(); ++i) {
    if (!lf.views[i].same_shape(lf.views[0]))
      throw ImageSizeMismatch("light field: view " + std::to_string(i) + " differs in size from view 0");
    if (i != lf.center_index && lf.viewpoints[i].is_center())
      throw DuplicateViewpoint("light field: more than one view at (0,0)");
    const GridCell c = lf.cells[i];
    if (c.row < 0 || c.col < 0 || c.row >= lf.grid_rows || c.col >= lf.grid_cols)
      throw ConfigError("light field: view cell outside the grid");
    if (!seen_cells.insert(c).second) throw DuplicateViewpoint("light field: two views share a grid cell");
  }
}

struct ManifestEntry {
  int index = 0;
  Viewpoint viewpoint;
  std::string file;
  int line = 0;
};

/// Parsed light-field manifest: `key=value` lines plus one
/// `view <index> <s> <t> <filename>` line per view. `#` starts a comment.
struct Manifest {
  int grid_rows = 0;
  int grid_cols = 0;
  std::vector<ManifestEntry> views;
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
std::optional<T> parse_number(std::string_view text) {
  T value{};
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) return std::nullopt;
  return value;
}

}  // namespace detail

inline Manifest parse_manifest(std::istream& in) {
  Manifest m;
  std::string raw;
  int line_no = 0;
  bool have_rows = false, have_cols = false;
  while (std::getline(in, raw)) {
    ++line_no;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    const std::string line = detail::trim(raw);
    if (line.empty()) continue;
    if (line.rfind("view", 0) == 0 && (line.size() == 4 || line[4] == ' ' || line[4] == '\t')) {
      std::istringstream ss(line.substr(4));
      std::string idx, s, t, file, extra;
      if (!(ss >> idx >> s >> t >> file) || (ss >> extra))
        throw ManifestError("expected 'view <index> <s> <t> <filename>'", line_no);
      auto i = detail::parse_number<int>(idx);
      auto sv = detail::parse_number<double>(s);
      auto tv = detail::parse_number<double>(t);
      if (!i || !sv || !tv || *i < 0 || !std::isfinite(*sv) || !std::isfinite(*tv))
        throw ManifestError("bad number in view line", line_no);
      m.views.push_back({*i, {*sv, *tv}, file, line_no});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ManifestError("unrecognized line '" + line + "'", line_no);
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key == "grid_rows" || key == "grid_cols") {
      auto v = detail::parse_number<int>(value);
      if (!v || *v <= 0) throw ManifestError(key + " must be a positive integer", line_no);
      (key == "grid_rows" ? m.grid_rows : m.grid_cols) = *v;
      (key == "grid_rows" ? have_rows : have_cols) = true;
    } else {
      throw ManifestError("unknown key '" + key + "'", line_no);
    }
  }
  if (!have_rows || !have_cols) throw ManifestError("grid_rows and grid_cols are required", 0);
  return m;
}

inline void write_manifest(std::ostream& out, const Manifest& m) {
  out << "grid_rows=" << m.grid_rows << "\n"
      << "grid_cols=" << m.grid_cols << "\n";
  for (const auto& v : m.views) out << "view " << v.index << " " << v.viewpoint.s << " " << v.viewpoint.t << " " << v.file << "\n";
}

/// Loads a light-field directory: `manifest` plus one PNG per grid cell.
/// Views are converted to luminance.
inline LightField load_lightfield(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest";
  std::ifstream in(manifest_path);
  if (!in) throw ManifestError("cannot open " + manifest_path.string(), 0);
  const Manifest m = parse_manifest(in);
  const int n = m.grid_rows * m.grid_cols;

  std::map<int, const ManifestEntry*> by_index;
  for (const auto& e : m.views) {
    if (e.index >= n) throw ManifestError("view index " + std::to_string(e.index) + " outside the grid", e.line);
    if (!by_index.emplace(e.index, &e).second)
      throw ManifestError("view index " + std::to_string(e.index) + " declared twice", e.line);
  }
  for (std::size_t i = 0; i < m.views.size(); ++i)
    for (std::size_t j = i + 1; j < m.views.size(); ++j)
      if (m.views[i].viewpoint == m.views[j].viewpoint)
        throw DuplicateViewpoint("views " + std::to_string(m.views[i].index) + " and " + std::to_string(m.views[j].index) +
                                 " share viewpoint (" + std::to_string(m.views[i].viewpoint.s) + "," +
                                 std::to_string(m.views[i].viewpoint.t) + ")");

  const ManifestEntry* center = nullptr;
  for (const auto& e : m.views)
    if (e.viewpoint.is_center()) center = &e;
  if (!center) throw ManifestError("no view at viewpoint (0,0)", 0);
  const GridCell cc{center->index / m.grid_cols, center->index % m.grid_cols};

  LightField lf;
  lf.grid_rows = m.grid_rows;
  lf.grid_cols = m.grid_cols;
  for (int idx = 0; idx < n; ++idx) {
    const GridCell cell{idx / m.grid_cols, idx % m.grid_cols};
    const double ns = cell.col - cc.col, nt = cell.row - cc.row;
    auto it = by_index.find(idx);
    if (it == by_index.end()) throw MissingView(ns, nt, "no manifest entry for grid index " + std::to_string(idx));
    const ManifestEntry& e = *it->second;
    if (std::abs(e.viewpoint.s - ns) >= 0.5 || std::abs(e.viewpoint.t - nt) >= 0.5)
      throw ManifestError("viewpoint does not lie on the grid cell of index " + std::to_string(idx), e.line);
    const auto file = dir / e.file;
    if (!std::filesystem::exists(file)) throw MissingView(e.viewpoint.s, e.viewpoint.t, file.string() + " not found");
    Image img = read_image(file);
    if (!lf.views.empty() && !img.same_shape(lf.views.front()))
      throw ImageSizeMismatch(file.string() + " is " + std::to_string(img.width) + "x" + std::to_string(img.height) +
                              ", expected " + std::to_string(lf.width()) + "x" + std::to_string(lf.height()));
    if (&e == center) lf.center_index = lf.views.size();
    lf.views.push_back(std::move(img));
    lf.viewpoints.push_back(e.viewpoint);
    lf.cells.push_back(cell);
  }
  validate(lf);
  return lf;
}

/// Writes the manifest and one `view_<index>.png` per view.
inline void save_lightfield(const LightField& lf, const std::filesystem::path& dir) {
  validate(lf);
  std::filesystem::create_directories(dir);
  Manifest m;
  m.grid_rows = lf.grid_rows;
  m.grid_cols = lf.grid_cols;
  for (std::size_t i = 0; i < lf.size(); ++i) {
    const int idx = lf.cells[i].row * lf.grid_cols + lf.cells[i].col;
    char name[32];
    std::snprintf(name, sizeof(name), "view_%02d.png", idx);
    write_image(lf.views[i], dir / name);
    m.views.push_back({idx, lf.viewpoints[i], name, 0});
  }
  std::ofstream out(dir / "manifest");
  write_manifest(out, m);
  if (!out) throw ImageIoError("cannot write manifest in " + dir.string());
}

}  // namespace transcut
