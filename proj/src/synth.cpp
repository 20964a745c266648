#include "tmr/synth.hpp"

#include "tmr/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>

namespace tmr {

void set_distractor_counts(SynthSpec& spec, int total) {
  if (total < 0) throw Error(ErrorKind::InvalidParam, "distractor count must be >= 0");
  spec.text_only = static_cast<int>(std::lround(0.63 * total));
  spec.figure_only = static_cast<int>(std::lround(0.02 * total));
  spec.combined = std::max(0, total - spec.text_only - spec.figure_only);
}

namespace {

using Glyph = std::array<std::uint8_t, 7>;

constexpr Glyph row_bits(const char (&rows)[7][6]) {
  Glyph g{};
  for (int r = 0; r < 7; ++r) {
    std::uint8_t bits = 0;
    for (int c = 0; c < 5; ++c)
      if (rows[r][c] == '#') bits |= static_cast<std::uint8_t>(1u << (4 - c));
    g[r] = bits;
  }
  return g;
}

constexpr char kFont[26][7][6] = {
    {" ### ", "#   #", "#   #", "#####", "#   #", "#   #", "#   #"},  // A
    {"#### ", "#   #", "#   #", "#### ", "#   #", "#   #", "#### "},
    {" ### ", "#   #", "#    ", "#    ", "#    ", "#   #", " ### "},
    {"#### ", "#   #", "#   #", "#   #", "#   #", "#   #", "#### "},
    {"#####", "#    ", "#    ", "#### ", "#    ", "#    ", "#####"},
    {"#####", "#    ", "#    ", "#### ", "#    ", "#    ", "#    "},
    {" ### ", "#   #", "#    ", "# ###", "#   #", "#   #", " ####"},
    {"#   #", "#   #", "#   #", "#####", "#   #", "#   #", "#   #"},
    {" ### ", "  #  ", "  #  ", "  #  ", "  #  ", "  #  ", " ### "},
    {"  ###", "   # ", "   # ", "   # ", "   # ", "#  # ", " ##  "},
    {"#   #", "#  # ", "# #  ", "##   ", "# #  ", "#  # ", "#   #"},
    {"#    ", "#    ", "#    ", "#    ", "#    ", "#    ", "#####"},
    {"#   #", "## ##", "# # #", "# # #", "#   #", "#   #", "#   #"},
    {"#   #", "#   #", "##  #", "# # #", "#  ##", "#   #", "#   #"},
    {" ### ", "#   #", "#   #", "#   #", "#   #", "#   #", " ### "},
    {"#### ", "#   #", "#   #", "#### ", "#    ", "#    ", "#    "},
    {" ### ", "#   #", "#   #", "#   #", "# # #", "#  # ", " ## #"},
    {"#### ", "#   #", "#   #", "#### ", "# #  ", "#  # ", "#   #"},
    {" ####", "#    ", "#    ", " ### ", "    #", "    #", "#### "},
    {"#####", "  #  ", "  #  ", "  #  ", "  #  ", "  #  ", "  #  "},
    {"#   #", "#   #", "#   #", "#   #", "#   #", "#   #", " ### "},
    {"#   #", "#   #", "#   #", "#   #", "#   #", " # # ", "  #  "},
    {"#   #", "#   #", "#   #", "# # #", "# # #", "# # #", " # # "},
    {"#   #", "#   #", " # # ", "  #  ", " # # ", "#   #", "#   #"},
    {"#   #", "#   #", " # # ", "  #  ", "  #  ", "  #  ", "  #  "},
    {"#####", "    #", "   # ", "  #  ", " #   ", "#    ", "#####"},  // Z
};

const std::array<Glyph, 26> kGlyphs = [] {
  std::array<Glyph, 26> g{};
  for (int i = 0; i < 26; ++i) g[i] = row_bits(kFont[i]);
  return g;
}();

struct Shape {
  enum Kind { Disc, Ring, Polygon, Stroke, Rect } kind = Disc;
  double cx = 0, cy = 0, r = 0;
  double param = 0;  // ring inner ratio, stroke/rect half-thickness
  double angle = 0;
  int sides = 0;
  double x2 = 0, y2 = 0;
  Rgb color{};

  bool contains(double x, double y) const {
    const double dx = x - cx, dy = y - cy;
    switch (kind) {
      case Disc:
        return dx * dx + dy * dy <= r * r;
      case Ring: {
        const double d2 = dx * dx + dy * dy;
        return d2 <= r * r && d2 >= param * param * r * r;
      }
      case Polygon: {
        const double apothem = r * std::cos(std::numbers::pi / sides);
        for (int k = 0; k < sides; ++k) {
          const double a = angle + 2.0 * std::numbers::pi * (k + 0.5) / sides;
          if (dx * std::cos(a) + dy * std::sin(a) > apothem) return false;
        }
        return true;
      }
      case Stroke: {
        const double ex = x2 - cx, ey = y2 - cy;
        const double len2 = ex * ex + ey * ey;
        const double t = len2 > 0 ? std::clamp((dx * ex + dy * ey) / len2, 0.0, 1.0) : 0.0;
        const double px = dx - t * ex, py = dy - t * ey;
        return px * px + py * py <= param * param;
      }
      case Rect: {
        const double c = std::cos(angle), s = std::sin(angle);
        return std::abs(dx * c + dy * s) <= r && std::abs(-dx * s + dy * c) <= param;
      }
    }
    return false;
  }
};

struct TextRun {
  std::string text;
  double x = 0, y = 0;  // top-left
  double glyph_h = 10;
  bool bold = false;
  double italic = 0.0;  // shear, cells per cell
  Rgb color{};

  double cell() const { return glyph_h / 7.0; }
  double advance() const { return bold ? 7.0 : 6.0; }
  double width() const { return cell() * (advance() * static_cast<double>(text.size()) - 1.0 + 2.0 * italic); }

  bool contains(double px, double py) const {
    const double c = cell();
    const double v = (py - y) / c;
    if (v < 0.0 || v >= 7.0) return false;
    const double u = (px - x) / c - italic * (7.0 - v);
    if (u < 0.0) return false;
    const int g = static_cast<int>(u / advance());
    if (g >= static_cast<int>(text.size())) return false;
    const int col = static_cast<int>(u - g * advance());
    const Glyph& rows = glyph_rows(text[static_cast<std::size_t>(g)]);
    const int row = static_cast<int>(v);
    auto lit = [&](int cc) { return cc >= 0 && cc < 5 && (rows[row] >> (4 - cc) & 1u); };
    return lit(col) || (bold && lit(col - 1));
  }
};

struct Mark {
  std::vector<Shape> shapes;
  std::vector<TextRun> words;
};

struct Transform {
  double scale = 1.0;
  double rotation = 0.0;  // radians
  bool invert = false;
};

constexpr std::array<Rgb, 10> kPalette = {{{200, 30, 40},
                                           {20, 60, 160},
                                           {20, 130, 60},
                                           {240, 170, 10},
                                           {10, 10, 10},
                                           {120, 40, 150},
                                           {0, 150, 170},
                                           {230, 90, 20},
                                           {90, 90, 90},
                                           {150, 20, 90}}};

class Generator {
 public:
  Generator(std::uint64_t seed, int size) : rng_(seed), size_(size) {}

  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng_); }
  int integer(int a, int b) { return std::uniform_int_distribution<int>(a, b)(rng_); }
  bool coin(double p = 0.5) { return uniform(0.0, 1.0) < p; }
  Rgb color() { return kPalette[static_cast<std::size_t>(integer(0, kPalette.size() - 1))]; }

  std::string word() {
    std::string w(static_cast<std::size_t>(integer(3, 7)), 'A');
    for (auto& c : w) c = static_cast<char>('A' + integer(0, 25));
    return w;
  }

  // Word fitted horizontally into [x0, x1], vertical top at y.
  TextRun text_run(double x0, double x1, double y, double max_h) {
    TextRun t;
    t.text = word();
    t.bold = coin(0.3);
    t.italic = coin(0.3) ? 0.25 : 0.0;
    t.color = color();
    t.glyph_h = std::floor(uniform(10.0, max_h));
    const double avail = x1 - x0;
    while (t.width() > avail && t.text.size() > 3) t.text.pop_back();
    while (t.width() > avail && t.glyph_h > 10.0) t.glyph_h -= 1.0;
    t.x = x0 + std::max(0.0, (avail - t.width()) / 2.0);
    t.y = y;
    return t;
  }

  Shape shape(double cx, double cy, double r) {
    Shape s;
    s.kind = static_cast<Shape::Kind>(integer(0, 4));
    s.cx = cx;
    s.cy = cy;
    s.r = r;
    s.color = color();
    s.angle = uniform(0.0, std::numbers::pi);
    switch (s.kind) {
      case Shape::Ring:
        s.param = uniform(0.45, 0.75);
        break;
      case Shape::Polygon:
        s.sides = integer(3, 8);
        break;
      case Shape::Stroke: {
        s.param = uniform(0.08, 0.18) * r + 1.5;
        s.cx = cx - r * std::cos(s.angle);
        s.cy = cy - r * std::sin(s.angle);
        s.x2 = cx + r * std::cos(s.angle);
        s.y2 = cy + r * std::sin(s.angle);
        break;
      }
      case Shape::Rect:
        s.param = r * uniform(0.3, 0.9);
        break;
      case Shape::Disc:
        break;
    }
    return s;
  }

  std::vector<Shape> figure(double x0, double y0, double x1, double y1) {
    std::vector<Shape> out;
    const int n = integer(2, 4);
    const double w = x1 - x0, h = y1 - y0;
    const double rmax = 0.5 * std::min(w, h);
    for (int i = 0; i < n; ++i) {
      const double r = uniform(0.35, 1.0) * rmax * (i == 0 ? 1.0 : 0.7);
      out.push_back(shape(uniform(x0 + r, x1 - r + 1e-9), uniform(y0 + r, y1 - r + 1e-9), r));
    }
    return out;
  }

  Mark text_mark() {
    Mark m;
    const double s = size_;
    const int lines = integer(1, 2);
    const double band = s * 0.7 / lines;
    for (int i = 0; i < lines; ++i)
      m.words.push_back(text_run(0.1 * s, 0.9 * s, 0.15 * s + i * band + 0.1 * band, std::min(0.3 * s, 0.8 * band)));
    if (coin(0.3)) {  // underline
      Shape u;
      u.kind = Shape::Stroke;
      u.cx = 0.15 * s;
      u.x2 = 0.85 * s;
      u.cy = u.y2 = 0.88 * s;
      u.param = 1.5;
      u.color = m.words.front().color;
      m.shapes.push_back(u);
    }
    return m;
  }

  Mark figure_mark() {
    const double s = size_;
    return Mark{figure(0.2 * s, 0.2 * s, 0.8 * s, 0.8 * s), {}};
  }

  Mark combined_mark() {
    const double s = size_;
    Mark m{figure(0.25 * s, 0.12 * s, 0.75 * s, 0.62 * s), {}};
    m.words.push_back(text_run(0.1 * s, 0.9 * s, 0.66 * s, 0.22 * s));
    return m;
  }

  Transform transform(const SynthSpec& spec) {
    Transform t;
    if (spec.scale) t.scale = uniform(0.7, 1.3);
    if (spec.rotation) t.rotation = uniform(-15.0, 15.0) * std::numbers::pi / 180.0;
    if (spec.contrast_inversion) t.invert = coin(0.3);
    return t;
  }

  // Word placed along the top or bottom edge, untransformed.
  TextRun contamination() {
    const double s = size_;
    const bool top = coin();
    const double h = std::floor(uniform(10.0, 0.14 * s + 10.0));
    return text_run(0.04 * s, 0.96 * s, top ? 0.02 * s : s - h - 0.02 * s, h + 1.0);
  }

 private:
  std::mt19937_64 rng_;
  int size_;
};

struct Rendered {
  RasterImage image;
  std::vector<TextBox> text_bounds;
};

void grow(TextBox& b, int x, int y) {
  b.x0 = std::min(b.x0, x);
  b.y0 = std::min(b.y0, y);
  b.x1 = std::max(b.x1, x + 1);
  b.y1 = std::max(b.y1, y + 1);
}

Rendered render(const Mark& mark, const Transform& t, std::span<const TextRun> overlay, int size) {
  constexpr Rgb kBackground{255, 255, 255};
  constexpr double kSub[2] = {0.25, 0.75};
  const std::size_t runs = mark.words.size() + overlay.size();
  std::vector<TextBox> bounds(runs, TextBox{size, size, 0, 0, 1.0});
  Rendered out{RasterImage(size, size, kBackground), {}};
  const double c = 0.5 * size;
  const double cs = std::cos(t.rotation), sn = std::sin(t.rotation);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      std::array<double, 3> acc{};
      for (double oy : kSub) {
        for (double ox : kSub) {
          const double px = x + ox, py = y + oy;
          // inverse transform into mark coordinates
          const double dx = (px - c) / t.scale, dy = (py - c) / t.scale;
          const double mx = c + cs * dx + sn * dy, my = c - sn * dx + cs * dy;
          Rgb col = kBackground;
          for (const auto& s : mark.shapes)
            if (s.contains(mx, my)) col = s.color;
          for (std::size_t w = 0; w < mark.words.size(); ++w)
            if (mark.words[w].contains(mx, my)) {
              col = mark.words[w].color;
              grow(bounds[w], x, y);
            }
          for (std::size_t w = 0; w < overlay.size(); ++w)
            if (overlay[w].contains(px, py)) {
              col = overlay[w].color;
              grow(bounds[mark.words.size() + w], x, y);
            }
          for (int k = 0; k < 3; ++k) acc[static_cast<std::size_t>(k)] += col[static_cast<std::size_t>(k)];
        }
      }
      Rgb px{};
      for (int k = 0; k < 3; ++k)
        px[static_cast<std::size_t>(k)] = static_cast<std::uint8_t>(std::lround(acc[static_cast<std::size_t>(k)] / 4.0));
      out.image.set(x, y, px);
    }
  }
  if (t.invert) out.image = invert_contrast(out.image);
  for (const auto& b : bounds)
    if (b.x1 > b.x0) out.text_bounds.push_back(b);
  return out;
}

std::string describe(const Transform& t, bool text) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "scale=%.3f;rotate=%.2f;invert=%d;text=%d", t.scale,
                t.rotation * 180.0 / std::numbers::pi, t.invert ? 1 : 0, text ? 1 : 0);
  return buf;
}

}  // namespace

const std::array<std::uint8_t, 7>& glyph_rows(char c) {
  if (c < 'A' || c > 'Z') throw Error(ErrorKind::InvalidParam, "glyph outside A-Z");
  return kGlyphs[static_cast<std::size_t>(c - 'A')];
}

SynthCorpus synth_corpus(const SynthSpec& spec) {
  if (spec.text_only < 0 || spec.figure_only < 0 || spec.combined < 0 || spec.groups < 0)
    throw Error(ErrorKind::InvalidParam, "synth counts must be >= 0");
  if (spec.members_per_group < 2) throw Error(ErrorKind::GroupTooSmall, "members_per_group must be >= 2");
  if (spec.image_size < 32) throw Error(ErrorKind::InvalidParam, "image_size must be >= 32");

  Generator gen(spec.seed, spec.image_size);
  SynthCorpus out;
  const Transform identity;
  auto add_distractor = [&](Mark m, const char* kind) {
    char id[32];
    std::snprintf(id, sizeof id, "d%05zu.png", out.distractors.size());
    Rendered r = render(m, identity, {}, spec.image_size);
    out.distractors.push_back({id, std::move(r.image), kind, "", std::move(r.text_bounds), describe(identity, false)});
  };
  // interleave kinds so prefixes of the corpus keep the mix
  const int total = spec.text_only + spec.figure_only + spec.combined;
  int left[3] = {spec.text_only, spec.figure_only, spec.combined};
  for (int i = 0; i < total; ++i) {
    int k = gen.integer(0, total - i - 1);
    int kind = 0;
    while (k >= left[kind]) k -= left[kind++];
    --left[kind];
    if (kind == 0) add_distractor(gen.text_mark(), "text");
    else if (kind == 1) add_distractor(gen.figure_mark(), "figure");
    else add_distractor(gen.combined_mark(), "combined");
  }

  for (int g = 0; g < spec.groups; ++g) {
    char gid[16];
    std::snprintf(gid, sizeof gid, "g%03d", g);
    const Mark base = spec.group_text && gen.coin() ? gen.combined_mark() : gen.figure_mark();
    QueryGroup group{gid, {}};
    for (int m = 0; m < spec.members_per_group; ++m) {
      char id[48];
      std::snprintf(id, sizeof id, "queries/%s_m%02d.png", gid, m);
      SynthImage img;
      if (spec.inverted_duplicate && m == 1) {
        const SynthImage& first = out.members[out.members.size() - 1];
        img = first;
        img.image = invert_contrast(first.image);
        img.transform = first.transform + ";duplicate=inverted";
      } else {
        const Transform t = m == 0 ? identity : gen.transform(spec);
        std::vector<TextRun> overlay;
        if (spec.text_contamination) overlay.push_back(gen.contamination());
        Rendered r = render(base, t, overlay, spec.image_size);
        img.image = std::move(r.image);
        img.text_bounds = std::move(r.text_bounds);
        img.transform = describe(t, spec.text_contamination);
      }
      img.id = id;
      img.kind = "member";
      img.group_id = gid;
      group.members.push_back(id);
      out.members.push_back(std::move(img));
    }
    out.groups.push_back(std::move(group));
  }
  return out;
}

void write_synth_corpus(const SynthCorpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "corpus");
  std::filesystem::create_directories(dir / "queries");
  std::ofstream ann(dir / "annotations.csv");
  std::ofstream manifest(dir / "groups.csv");
  if (!ann || !manifest) throw Error(ErrorKind::Io, "cannot write synth manifests under " + dir.string());
  ann << "image_id,kind,group_id,transform,text_bounds\n";
  manifest << "group_id,image_path\n";
  auto annotate = [&](const SynthImage& img) {
    ann << img.id << ',' << img.kind << ',' << img.group_id << ',' << img.transform << ',';
    for (std::size_t i = 0; i < img.text_bounds.size(); ++i) {
      const auto& b = img.text_bounds[i];
      ann << (i ? ";" : "") << b.x0 << ' ' << b.y0 << ' ' << b.x1 << ' ' << b.y1;
    }
    ann << '\n';
  };
  for (const auto& img : corpus.distractors) {
    save_png(img.image, dir / "corpus" / img.id);
    annotate(img);
  }
  for (const auto& img : corpus.members) {
    save_png(img.image, dir / img.id);
    annotate(img);
    manifest << img.group_id << ',' << img.id << '\n';
  }
}

}  // namespace tmr
