#include "tmr/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace tmr {

std::string fnv1a_hex(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

const PipelineConfig& RunConfig::pipeline(std::string_view name) const {
  for (const auto& p : pipelines)
    if (p.name == name) return p;
  throw ConfigError("no pipeline named '" + std::string(name) + "'");
}

namespace {

using Section = std::map<std::string, std::string>;

class Reader {
 public:
  Reader(std::string section, const Section& values) : section_(std::move(section)), values_(values) {}

  bool has(const std::string& key) const { return values_.contains(key); }

  const std::string* raw(const std::string& key) {
    used_.insert(key);
    const auto it = values_.find(key);
    return it == values_.end() ? nullptr : &it->second;
  }

  void text(const std::string& key, std::string& out) {
    if (const auto* v = raw(key)) out = *v;
  }

  void path(const std::string& key, std::filesystem::path& out, const std::filesystem::path& base) {
    if (const auto* v = raw(key)) {
      if (v->empty()) fail(key, "empty path");
      const std::filesystem::path p(*v);
      out = (p.is_absolute() ? p : base / p).lexically_normal();
    }
  }

  template <typename Int>
  void integer(const std::string& key, Int& out, long long lo, long long hi) {
    const auto* v = raw(key);
    if (!v) return;
    long long x = 0;
    const auto [end, ec] = std::from_chars(v->data(), v->data() + v->size(), x);
    if (ec != std::errc() || end != v->data() + v->size() || x < lo || x > hi)
      fail(key, "expected an integer in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    out = static_cast<Int>(x);
  }

  void unsigned64(const std::string& key, std::uint64_t& out) {
    const auto* v = raw(key);
    if (!v) return;
    const auto [end, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
    if (ec != std::errc() || end != v->data() + v->size()) fail(key, "expected an unsigned integer");
  }

  void real(const std::string& key, double& out, double lo, double hi) {
    const auto* v = raw(key);
    if (!v) return;
    std::istringstream is(*v);
    double x = 0;
    if (!(is >> x) || !is.eof() || x < lo || x > hi) fail(key, "expected a number in range");
    out = x;
  }

  void boolean(const std::string& key, bool& out) {
    const auto* v = raw(key);
    if (!v) return;
    std::string s = *v;
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    if (s == "true" || s == "yes" || s == "on" || s == "1") out = true;
    else if (s == "false" || s == "no" || s == "off" || s == "0") out = false;
    else fail(key, "expected true or false");
  }

  void finish() const {
    for (const auto& [key, value] : values_)
      if (!used_.contains(key)) throw ConfigError("[" + section_ + "] unknown key '" + key + "'");
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw ConfigError("[" + section_ + "] " + key + ": " + what);
  }

 private:
  std::string section_;
  const Section& values_;
  std::set<std::string> used_;
};

void read_codebook(Reader& r, CodebookConfig& c) {
  r.integer("k", c.k, 1, 1 << 24);
  r.integer("max_iters", c.max_iters, 1, 1 << 20);
  r.integer("max_samples", c.max_samples, 1, 1LL << 40);
  r.unsigned64("seed", c.seed);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) throw ConfigError("empty entry in list '" + s + "'");
    out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

PipelineConfig read_pipeline(const std::string& name, Reader& r, const CodebookConfig& codebook,
                             const std::filesystem::path& base) {
  PipelineConfig p;
  p.name = name;
  p.codebook = codebook;
  if (const auto* fuse = r.raw("fuse")) {
    p.fuse = split_list(*fuse);
    r.finish();
    return p;
  }
  const auto* feature = r.raw("feature");
  if (!feature) r.fail("feature", "missing (or give 'fuse')");
  const auto family = parse_feature_family(*feature);
  if (!family) r.fail("feature", "unknown feature '" + *feature + "'");
  p.feature.family = *family;
  p.normalization = default_normalization(*family);
  p.metric = default_metric(*family);
  if (const auto* v = r.raw("normalization")) {
    const auto n = parse_normalization(*v);
    if (!n) r.fail("normalization", "unknown normalization '" + *v + "'");
    p.normalization = *n;
  }
  if (const auto* v = r.raw("metric")) {
    const auto m = parse_metric(*v);
    if (!m) r.fail("metric", "unknown metric '" + *v + "'");
    p.metric = *m;
  }
  if (p.metric == MetricId::Quadratic && *family != FeatureFamily::Hsv72)
    r.fail("metric", "quadratic is only available for hsv72");
  if (is_bovw(*family) && p.metric != MetricId::Cosine)
    r.fail("metric", "bag-of-words pipelines are scored with cosine");
  r.boolean("strip_text", p.feature.strip_text);
  r.boolean("autocrop", p.feature.autocrop);
  if (const auto* v = r.raw("lbp_variant")) {
    const auto lv = parse_lbp_variant(*v);
    if (!lv) r.fail("lbp_variant", "expected base, ri, u2 or riu2");
    p.feature.lbp.variant = *lv;
  }
  r.integer("lbp_neighbors", p.feature.lbp.neighbors, 4, 16);
  r.real("lbp_radius", p.feature.lbp.radius, 1.0, 64.0);
  p.feature.lbp.normalization = Normalization::None;  // the index applies the pipeline normalisation
  r.integer("hog_cell", p.feature.hog_cell, 2, 1024);
  r.integer("shape_samples", p.feature.shape_samples, 2, 100000);
  read_codebook(r, p.codebook);
  r.path("corpus_features", p.corpus_features, base);
  r.path("query_features", p.query_features, base);
  if (*family == FeatureFamily::External && (p.corpus_features.empty() || p.query_features.empty()))
    throw ConfigError("[pipeline." + name + "] external features need corpus_features and query_features");
  r.finish();
  return p;
}

void check_fusion(const RunConfig& cfg) {
  std::map<std::string, const PipelineConfig*> by_name;
  for (const auto& p : cfg.pipelines) by_name[p.name] = &p;
  for (const auto& p : cfg.pipelines)
    for (const auto& part : p.fuse)
      if (!by_name.contains(part)) throw ConfigError("[pipeline." + p.name + "] fuses unknown pipeline '" + part + "'");
  // reject cycles
  std::map<std::string, int> state;
  std::function<void(const std::string&)> visit = [&](const std::string& n) {
    if (state[n] == 2) return;
    if (state[n] == 1) throw ConfigError("fusion cycle through pipeline '" + n + "'");
    state[n] = 1;
    for (const auto& part : by_name[n]->fuse) visit(part);
    state[n] = 2;
  };
  for (const auto& p : cfg.pipelines) visit(p.name);
}

}  // namespace

RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  boost::property_tree::ptree tree;
  try {
    std::istringstream is{std::string(text)};
    boost::property_tree::ini_parser::read_ini(is, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("line " + std::to_string(e.line()) + ": " + e.message());
  }

  std::vector<std::pair<std::string, Section>> sections;
  std::ostringstream canonical;
  for (const auto& [name, node] : tree) {
    if (node.empty()) throw ConfigError("key '" + name + "' outside of a section");
    Section values;
    for (const auto& [key, child] : node) values[key] = child.get_value<std::string>();
    for (const auto& [key, value] : values) canonical << name << '.' << key << '=' << value << '\n';
    sections.emplace_back(name, std::move(values));
  }

  RunConfig cfg;
  cfg.hash = fnv1a_hex(canonical.str());
  auto find = [&](const std::string& name) -> const Section* {
    for (const auto& [n, s] : sections)
      if (n == name) return &s;
    return nullptr;
  };
  for (const auto& [name, values] : sections)
    if (name != "run" && name != "synth" && name != "codebook" && !name.starts_with("pipeline."))
      throw ConfigError("unknown section [" + name + "]");

  if (const Section* s = find("run")) {
    Reader r("run", *s);
    r.path("corpus", cfg.corpus, base_dir);
    r.path("manifest", cfg.manifest, base_dir);
    r.path("output", cfg.output, base_dir);
    r.unsigned64("seed", cfg.seed);
    r.integer("jobs", cfg.jobs, 0, 4096);
    r.finish();
  }
  if (cfg.output.is_relative()) cfg.output = (base_dir / cfg.output).lexically_normal();
  cfg.synth.seed = cfg.seed;
  cfg.codebook.seed = cfg.seed;

  if (const Section* s = find("synth")) {
    Reader r("synth", *s);
    cfg.has_synth = true;
    SynthSpec& sp = cfg.synth;
    r.unsigned64("seed", sp.seed);
    if (r.has("distractors")) {
      int total = 0;
      r.integer("distractors", total, 0, 10000000);
      set_distractor_counts(sp, total);
    }
    r.integer("text_only", sp.text_only, 0, 10000000);
    r.integer("figure_only", sp.figure_only, 0, 10000000);
    r.integer("combined", sp.combined, 0, 10000000);
    r.integer("groups", sp.groups, 0, 100000);
    r.integer("members_per_group", sp.members_per_group, 2, 1000);
    r.integer("image_size", sp.image_size, 32, 4096);
    r.boolean("scale", sp.scale);
    r.boolean("rotation", sp.rotation);
    r.boolean("contrast_inversion", sp.contrast_inversion);
    r.boolean("text_contamination", sp.text_contamination);
    r.boolean("inverted_duplicate", sp.inverted_duplicate);
    r.boolean("group_text", sp.group_text);
    cfg.synth_output = cfg.output / "synth";
    r.path("output", cfg.synth_output, base_dir);
    r.finish();
    if (cfg.corpus.empty()) cfg.corpus = cfg.synth_output / "corpus";
    if (cfg.manifest.empty()) cfg.manifest = cfg.synth_output / "groups.csv";
  }
  if (const Section* s = find("codebook")) {
    Reader r("codebook", *s);
    read_codebook(r, cfg.codebook);
    r.finish();
  }
  cfg.codebook.jobs = cfg.jobs;
  for (const auto& [name, values] : sections) {
    if (!name.starts_with("pipeline.")) continue;
    const std::string pname = name.substr(9);
    if (pname.empty() || pname.find_first_of("/\\ \t") != std::string::npos)
      throw ConfigError("invalid pipeline name in [" + name + "]");
    Reader r(name, values);
    cfg.pipelines.push_back(read_pipeline(pname, r, cfg.codebook, base_dir));
  }
  check_fusion(cfg);
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

}  // namespace tmr
