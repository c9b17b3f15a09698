#include "otlab/report.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

namespace otlab {
namespace {

namespace fs = std::filesystem;

std::string g12(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string quoted(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

class Csv {
 public:
  explicit Csv(std::initializer_list<const char*> header) {
    bool first = true;
    for (const char* h : header) {
      if (!first) out_ << ',';
      out_ << h;
      first = false;
    }
    out_ << '\n';
  }
  template <class... T>
  void row(const T&... fields) {
    bool first = true;
    ((out_ << (first ? "" : ",") << cell(fields), first = false), ...);
    out_ << '\n';
  }
  void write(const fs::path& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::Config, "cannot write " + path.string());
    f << out_.str();
  }

 private:
  static std::string cell(double v) { return g12(v); }
  static std::string cell(const std::string& s) { return quoted(s); }
  static std::string cell(const char* s) { return quoted(s); }
  static std::string cell(bool b) { return b ? "1" : "0"; }
  template <class I, class = std::enable_if_t<std::is_integral_v<I>>>
  static std::string cell(I v) {
    return std::to_string(v);
  }
  std::ostringstream out_;
};

const char* consistency_name(Consistency c) {
  switch (c) {
    case Consistency::consistent:
      return "consistent";
    case Consistency::violation:
      return "violation";
    case Consistency::not_applicable:
      break;
  }
  return "not_applicable";
}

// ---- SVG ----

constexpr double kCanvas = 512.0;

struct Frame {
  double x0, y1, scale;
  double px(double x) const { return (x - x0) * scale; }
  double py(double y) const { return (y1 - y) * scale; }
};

Frame frame_for(const Grid& g) {
  const double w = g.nx * g.h, hgt = g.ny * g.h;
  return {g.x0, g.y0 + hgt, kCanvas / std::max(w, hgt)};
}

std::string f3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

// Golden-ratio hue walk, HSV with fixed saturation/value, as #rrggbb.
std::string palette(int index) {
  const double hue = std::fmod(0.1 + 0.6180339887498949 * index, 1.0) * 6.0;
  const double s = 0.55, v = 0.92;
  const int sector = static_cast<int>(hue);
  const double f = hue - sector;
  const double p = v * (1 - s), q = v * (1 - s * f), t = v * (1 - s * (1 - f));
  double r = v, g = t, b = p;
  switch (sector % 6) {
    case 1: r = q, g = v, b = p; break;
    case 2: r = p, g = v, b = t; break;
    case 3: r = p, g = q, b = v; break;
    case 4: r = t, g = p, b = v; break;
    case 5: r = v, g = p, b = q; break;
    default: break;
  }
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", static_cast<int>(std::lround(r * 255)),
                static_cast<int>(std::lround(g * 255)), static_cast<int>(std::lround(b * 255)));
  return buf;
}

std::string header(double w, double h) {
  return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
         "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" +
         f3(w) + "\" height=\"" + f3(h) + "\" viewBox=\"0 0 " + f3(w) + " " + f3(h) + "\">\n";
}

// Row runs of equal nonnegative labels as rectangles.
void label_runs(std::ostringstream& out, const Grid& g, const Frame& fr, const std::vector<int>& label,
                const std::function<std::string(int)>& fill) {
  for (int j = 0; j < g.ny; ++j) {
    int i = 0;
    while (i < g.nx) {
      const int l = label[g.index(i, j)];
      int e = i + 1;
      while (e < g.nx && label[g.index(e, j)] == l) ++e;
      if (l >= 0) {
        const double x = g.x0 + i * g.h, y = g.y0 + (j + 1) * g.h;
        out << "<rect x=\"" << f3(fr.px(x)) << "\" y=\"" << f3(fr.py(y)) << "\" width=\"" << f3((e - i) * g.h * fr.scale)
            << "\" height=\"" << f3(g.h * fr.scale) << "\" fill=\"" << fill(l) << "\"/>\n";
      }
      i = e;
    }
  }
}

// Edges between member and non-member cells as one path.
void outline(std::ostringstream& out, const Grid& g, const Frame& fr, const std::vector<std::uint8_t>& in,
             const std::string& stroke) {
  auto member = [&](int i, int j) { return i >= 0 && j >= 0 && i < g.nx && j < g.ny && in[g.index(i, j)]; };
  std::string d;
  auto seg = [&](double xa, double ya, double xb, double yb) {
    d += "M" + f3(fr.px(xa)) + " " + f3(fr.py(ya)) + "L" + f3(fr.px(xb)) + " " + f3(fr.py(yb));
  };
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      if (!member(i, j)) continue;
      const double x = g.x0 + i * g.h, y = g.y0 + j * g.h;
      if (!member(i - 1, j)) seg(x, y, x, y + g.h);
      if (!member(i + 1, j)) seg(x + g.h, y, x + g.h, y + g.h);
      if (!member(i, j - 1)) seg(x, y, x + g.h, y);
      if (!member(i, j + 1)) seg(x, y + g.h, x + g.h, y + g.h);
    }
  if (!d.empty()) out << "<path d=\"" << d << "\" fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"1.5\"/>\n";
}

std::vector<int> support_labels(const SourceDensity& mu) {
  const Grid& g = mu.grid();
  std::vector<int> label(g.size(), -1);
  for (std::size_t k = 0; k < g.size(); ++k)
    if (mu.region.in_raster(k)) label[k] = 0;
  return label;
}

std::string svg_cells(const RunReport& r) {
  const Grid& g = r.tessellation->grid;
  const Frame fr = frame_for(g);
  std::ostringstream out;
  out << header(g.nx * g.h * fr.scale, g.ny * g.h * fr.scale);
  out << "<g id=\"cells\" shape-rendering=\"crispEdges\">\n";
  label_runs(out, g, fr, r.tessellation->assignment, palette);
  out << "</g>\n</svg>\n";
  return out.str();
}

std::string svg_singular(const RunReport& r) {
  const SourceDensity& mu = *r.mu;
  const Grid& g = mu.grid();
  const Frame fr = frame_for(g);
  std::ostringstream out;
  out << header(g.nx * g.h * fr.scale, g.ny * g.h * fr.scale);
  out << "<g id=\"support\" shape-rendering=\"crispEdges\">\n";
  label_runs(out, g, fr, support_labels(mu), [](int) { return std::string("#e6e6e6"); });
  out << "</g>\n<g id=\"singular\" shape-rendering=\"crispEdges\">\n";
  std::vector<int> label(g.size(), -1);
  for (std::size_t i = 0; i < r.singular->pixels.size(); ++i) label[r.singular->pixels[i]] = 0;
  label_runs(out, g, fr, label, [](int) { return std::string("#c0392b"); });
  out << "</g>\n";
  if (r.isolation) {
    out << "<g id=\"isolated\" fill=\"none\" stroke=\"#1f3a93\" stroke-width=\"2\">\n";
    for (const auto& c : r.isolation->components)
      if (c.is_isolated)
        out << "<circle cx=\"" << f3(fr.px(c.representative.x())) << "\" cy=\"" << f3(fr.py(c.representative.y()))
            << "\" r=\"" << f3(std::max(6.0, 4 * g.h * fr.scale)) << "\"/>\n";
    out << "</g>\n";
  }
  out << "</svg>\n";
  return out.str();
}

std::string svg_subdiff(const RunReport& r) {
  std::vector<SubdifferentialPolytope> polys;
  if (r.isolation) {
    for (const auto& c : r.isolation->components) polys.push_back(c.polytope);
  } else {
    for (const auto& c : r.singular->components)
      polys.push_back(subdifferential_on_square(*r.phi, r.singular->grid.center(c.representative), r.singular->grid.h));
  }
  // Frame: all co-gradients of the targets at the representatives, or the unit box.
  Point2 lo(-1, -1), hi(1, 1);
  bool first = true;
  for (const auto& p : polys)
    for (const CoVec2& v : p.vertices) {
      lo = first ? v : lo.cwiseMin(v);
      hi = first ? v : hi.cwiseMax(v);
      first = false;
    }
  const double pad = 0.1 * std::max({hi.x() - lo.x(), hi.y() - lo.y(), 1e-3});
  lo.array() -= pad;
  hi.array() += pad;
  const double scale = kCanvas / std::max(hi.x() - lo.x(), hi.y() - lo.y());
  const Frame fr{lo.x(), hi.y(), scale};
  std::ostringstream out;
  out << header((hi.x() - lo.x()) * scale, (hi.y() - lo.y()) * scale);
  out << "<g id=\"subdifferentials\" stroke=\"#1f3a93\" stroke-width=\"1.5\">\n";
  int index = 0;
  for (const auto& p : polys) {
    const std::string color = palette(index++);
    if (p.hull.size() >= 2) {
      out << "<polygon fill=\"" << color << "\" fill-opacity=\"0.5\" points=\"";
      for (std::size_t i = 0; i < p.hull.size(); ++i)
        out << (i ? " " : "") << f3(fr.px(p.hull[i].x())) << "," << f3(fr.py(p.hull[i].y()));
      out << "\"/>\n";
    }
    for (const CoVec2& v : p.hull)
      out << "<circle cx=\"" << f3(fr.px(v.x())) << "\" cy=\"" << f3(fr.py(v.y())) << "\" r=\"2.5\" fill=\"" << color
          << "\"/>\n";
  }
  out << "</g>\n</svg>\n";
  return out.str();
}

std::string svg_section(const RunReport& r) {
  const SourceDensity& mu = *r.mu;
  const Grid& g = mu.grid();
  const Frame fr = frame_for(g);
  std::ostringstream out;
  out << header(g.nx * g.h * fr.scale, g.ny * g.h * fr.scale);
  out << "<g id=\"support\" shape-rendering=\"crispEdges\">\n";
  label_runs(out, g, fr, support_labels(mu), [](int) { return std::string("#e6e6e6"); });
  out << "</g>\n";
  // Largest first so smaller sections stay visible.
  std::vector<const Section*> order;
  for (const auto& s : r.sections) order.push_back(&s);
  std::stable_sort(order.begin(), order.end(), [](auto a, auto b) { return a->height > b->height; });
  int index = 0;
  for (const Section* s : order) {
    out << "<g id=\"section-" << g12(s->height) << "\" shape-rendering=\"crispEdges\">\n";
    std::vector<int> label(g.size(), -1);
    std::vector<std::uint8_t> in(g.size(), 0);
    for (std::size_t k : s->pixels.pixels) label[k] = 0, in[k] = 1;
    const std::string color = palette(index++);
    label_runs(out, g, fr, label, [&](int) { return color; });
    outline(out, g, fr, in, "#222222");
    out << "</g>\n";
  }
  out << "<circle cx=\"" << f3(fr.px(order.front()->base.x())) << "\" cy=\"" << f3(fr.py(order.front()->base.y()))
      << "\" r=\"3\" fill=\"#000000\"/>\n</svg>\n";
  return out.str();
}

bool layer_available(const RunReport& r, SvgLayer layer) {
  switch (layer) {
    case SvgLayer::cells:
      return r.tessellation.has_value();
    case SvgLayer::singular:
    case SvgLayer::subdiff:
      return r.singular.has_value();
    case SvgLayer::section:
      return !r.sections.empty();
  }
  return false;
}

}  // namespace

std::string to_string(SvgLayer layer) {
  switch (layer) {
    case SvgLayer::cells:
      return "cells";
    case SvgLayer::singular:
      return "singular";
    case SvgLayer::subdiff:
      return "subdiff";
    case SvgLayer::section:
      return "section";
  }
  return "?";
}

SvgLayer parse_svg_layer(std::string_view name) {
  for (SvgLayer l : {SvgLayer::cells, SvgLayer::singular, SvgLayer::subdiff, SvgLayer::section})
    if (to_string(l) == name) return l;
  throw Error(ErrorCode::Config, "unknown SVG layer '" + std::string(name) + "'");
}

std::vector<SvgLayer> available_layers(const RunReport& report) {
  std::vector<SvgLayer> out;
  for (SvgLayer l : {SvgLayer::cells, SvgLayer::singular, SvgLayer::subdiff, SvgLayer::section})
    if (layer_available(report, l)) out.push_back(l);
  return out;
}

std::string svg_document(const RunReport& report, SvgLayer layer) {
  if (!layer_available(report, layer))
    throw Error(ErrorCode::MissingLayer, "layer '" + to_string(layer) + "' needs an analysis that did not run");
  switch (layer) {
    case SvgLayer::cells:
      return svg_cells(report);
    case SvgLayer::singular:
      return svg_singular(report);
    case SvgLayer::subdiff:
      return svg_subdiff(report);
    case SvgLayer::section:
      return svg_section(report);
  }
  return {};
}

fs::path render_svg(RunReport& report, SvgLayer layer, const fs::path& dir) {
  const std::string doc = svg_document(report, layer);
  fs::create_directories(dir);
  const fs::path path = dir / (to_string(layer) + ".svg");
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::Config, "cannot write " + path.string());
  f << doc;
  report.artifacts.push_back(path);
  return path;
}

std::vector<fs::path> export_csv(RunReport& report, const fs::path& dir) {
  fs::create_directories(dir);
  std::vector<fs::path> written;
  auto emit = [&](const Csv& csv, const char* name) {
    const fs::path p = dir / name;
    csv.write(p);
    written.push_back(p);
  };
  const RunReport& r = report;

  if (r.tessellation) {
    const Grid& g = r.tessellation->grid;
    Csv t({"pixel", "col", "row", "x", "y", "index"});
    for (std::size_t k = 0; k < g.size(); ++k)
      if (r.tessellation->assignment[k] >= 0)
        t.row(k, g.col(k), g.row(k), g.center(k).x(), g.center(k).y(), r.tessellation->assignment[k]);
    emit(t, "tessellation.csv");
  }
  if (r.nu && r.phi) {
    Csv m({"index", "x", "y", "weight", "mass"});
    for (std::size_t j = 0; j < r.nu->size(); ++j)
      m.row(j, r.nu->points[j].x(), r.nu->points[j].y(), r.nu->weights[j], j < r.masses.size() ? r.masses[j] : NAN);
    emit(m, "masses.csv");
    Csv p({"index", "lambda"});
    for (std::size_t j = 0; j < r.phi->size(); ++j) p.row(j, r.phi->lambda()[j]);
    emit(p, "potential.csv");
  }
  if (r.structural) {
    const auto& s = *r.structural;
    Csv c({"samples", "skipped_invalid", "twist_ok", "twist_collisions", "min_cogradient_separation", "min_abs_det",
           "nondeg_ok", "min_mtw", "mtw_ok"});
    c.row(s.samples, s.skipped_invalid, s.twist_ok, s.twist_collisions, s.min_cogradient_separation, s.min_abs_det,
          s.nondeg_ok, s.min_mtw, s.mtw_ok);
    emit(c, "structural.csv");
  }
  if (r.holes) {
    Csv c({"hole", "cells", "area", "centroid_x", "centroid_y"});
    for (std::size_t i = 0; i < r.holes->count(); ++i) {
      const auto& h = r.holes->holes[i];
      c.row(i, h.pixels.size(), h.area, h.centroid.x(), h.centroid.y());
    }
    emit(c, "holes.csv");
    if (!r.hole_fill.empty()) {
      Csv f({"component", "hole", "hausdorff"});
      for (const auto& e : r.hole_fill) f.row(e.component, e.hole, e.distance);
      emit(f, "hole_fill.csv");
    }
  }
  if (r.singular) {
    const auto& s = *r.singular;
    Csv c({"pixel", "col", "row", "x", "y", "component", "jump"});
    for (std::size_t i = 0; i < s.pixels.size(); ++i) {
      const std::size_t k = s.pixels[i];
      c.row(k, s.grid.col(k), s.grid.row(k), s.grid.center(k).x(), s.grid.center(k).y(), s.component[i],
            s.jump_at(*r.phi, k));
    }
    emit(c, "singular.csv");
  }
  if (r.isolation) {
    Csv c({"component", "pixels", "extent_x", "extent_y", "rep_x", "rep_y", "isolated", "pixel_affine_dim",
           "affine_dim", "diameter", "area", "hole_consistency"});
    for (const auto& v : r.isolation->components) {
      const auto& comp = r.singular->components[v.component];
      c.row(v.component, comp.pixels.size(), comp.extent_x, comp.extent_y, v.representative.x(),
            v.representative.y(), v.is_isolated, v.pixel_affine_dim, v.affine_dim, v.polytope.diameter,
            v.polytope.area, consistency_name(v.hole_consistency));
    }
    emit(c, "components.csv");
    Csv f({"resolution", "singular_pixels", "components", "isolated"});
    for (const auto& e : r.refinements) f.row(e.resolution, e.singular_pixels, e.components, e.isolated);
    emit(f, "refinements.csv");
  }
  if (!r.propagation.empty()) {
    Csv c({"component", "x", "y", "gap"});
    for (const auto& e : r.propagation) c.row(e.component, e.representative.x(), e.representative.y(), e.gap);
    emit(c, "propagation.csv");
  }
  if (r.loeper) {
    Csv c({"evaluated", "skipped", "max_violation"});
    c.row(r.loeper->evaluated, r.loeper->skipped, r.loeper->max_violation);
    emit(c, "loeper.csv");
  }
  if (r.monotonicity) {
    Csv c({"pairs", "max_violation"});
    c.row(r.monotonicity_pairs, *r.monotonicity);
    emit(c, "monotonicity.csv");
  }
  if (!r.sections.empty()) {
    Csv c({"scenario", "h", "gap", "volume", "ell", "plane_distance_lo", "plane_distance_hi", "ratio",
           "loeper_max_violation", "monotonicity_max_violation"});
    for (std::size_t i = 0; i < r.sections.size(); ++i) {
      const auto& s = r.sections[i];
      const bool planes = s.hull.size() >= 3;
      c.row(r.scenario.name, s.height, s.gap, s.volume, s.ell, planes ? s.planes.distance_lo(s.p0) : NAN,
            planes ? s.planes.distance_hi(s.p0) : NAN, r.aleksandrov ? r.aleksandrov->ratios[i] : NAN,
            r.loeper ? r.loeper->max_violation : NAN, r.monotonicity ? *r.monotonicity : NAN);
    }
    emit(c, "estimates.csv");
  }
  if (!r.cones.empty()) {
    Csv c({"cone", "random", "base_x", "base_y", "focus_x", "focus_y", "h", "gap", "step", "foci", "subdiff_foci",
           "checked", "failures", "margin", "predicted_margin", "focus_interior"});
    for (std::size_t i = 0; i < r.cones.size(); ++i) {
      const auto& e = r.cones[i];
      const auto& s = e.cone.section;
      c.row(i, e.random, s.base.x(), s.base.y(), s.focus.x(), s.focus.y(), s.height, s.gap, e.cone.step,
            e.cone.covectors.size(), e.cone.subdifferential().size(), e.inclusion.checked, e.inclusion.failures,
            e.inclusion.margin, e.inclusion.predicted_margin, e.focus_interior);
    }
    emit(c, "cones.csv");
  }
  Csv v({"verdict", "pass", "detail"});
  for (const auto& e : r.verdicts) v.row(e.name, e.pass, e.detail);
  emit(v, "verdicts.csv");

  report.artifacts.insert(report.artifacts.end(), written.begin(), written.end());
  return written;
}

std::string report_json(const RunReport& r) {
  nlohmann::ordered_json j;
  j["scenario"]["name"] = r.scenario.name;
  j["scenario"]["seed"] = r.scenario.seed;
  j["scenario"]["resolution"] = r.scenario.resolution;
  auto& entries = j["scenario"]["entries"] = nlohmann::ordered_json::array();
  for (const auto& [k, v] : r.scenario.entries) entries.push_back({k, v});
  j["solver"] = {{"solved", r.solved},     {"converged", r.converged},  {"residual", r.residual},
                 {"iterations", r.iterations}, {"targets", r.nu ? r.nu->size() : 0}};
  auto& verdicts = j["verdicts"] = nlohmann::ordered_json::array();
  for (const auto& v : r.verdicts) verdicts.push_back({{"name", v.name}, {"pass", v.pass}, {"detail", v.detail}});
  j["pass"] = r.all_pass();
  auto& artifacts = j["artifacts"] = nlohmann::ordered_json::array();
  for (const auto& a : r.artifacts) artifacts.push_back(a.filename().string());
  return j.dump(2) + "\n";
}

}  // namespace otlab
