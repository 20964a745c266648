#include "tmr/cli.hpp"

#include "tmr/config.hpp"
#include "tmr/errors.hpp"
#include "tmr/evaluation.hpp"
#include "tmr/feature_io.hpp"
#include "tmr/fusion.hpp"
#include "tmr/index.hpp"
#include "tmr/parallel.hpp"
#include "tmr/pipeline.hpp"
#include "tmr/synth.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

namespace tmr {

namespace {

namespace fs = std::filesystem;

struct Context {
  RunConfig cfg;
  unsigned jobs = 0;
  std::ostream& out;
  std::ostream& err;

  fs::path features(const std::string& name, const char* set) const {
    return cfg.output / "features" / (name + "." + set + ".tmfeat");
  }
  fs::path codebook(const std::string& name) const { return cfg.output / "codebooks" / (name + ".tmcb"); }
  fs::path index(const std::string& name) const { return cfg.output / "index" / (name + ".tmidx"); }
  fs::path reports() const { return cfg.output / "reports"; }
};

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

void require_file(const fs::path& p, const std::string& hint) {
  if (!fs::exists(p)) throw Error(ErrorKind::Io, "missing " + p.string() + " (" + hint + ")");
}

std::vector<const PipelineConfig*> select(const RunConfig& cfg, const std::vector<std::string>& names) {
  std::vector<const PipelineConfig*> out;
  if (names.empty()) {
    for (const auto& p : cfg.pipelines) out.push_back(&p);
  } else {
    for (const auto& n : names) out.push_back(&cfg.pipeline(n));
  }
  if (out.empty()) throw ConfigError("no [pipeline.*] sections configured");
  return out;
}

struct ImageRef {
  std::string id;
  fs::path path;
};

std::vector<ImageRef> corpus_images(const RunConfig& cfg) {
  if (cfg.corpus.empty()) throw ConfigError("[run] corpus is not set");
  if (!fs::is_directory(cfg.corpus)) throw ConfigError("corpus directory " + cfg.corpus.string() + " does not exist");
  std::vector<ImageRef> out;
  for (auto& e : list_corpus(cfg.corpus)) out.push_back({e.id, e.path});
  if (out.empty()) throw Error(ErrorKind::Io, "no images found under " + cfg.corpus.string());
  return out;
}

std::vector<QueryGroup> manifest_groups(const RunConfig& cfg) {
  if (cfg.manifest.empty()) throw ConfigError("[run] manifest is not set");
  if (!fs::exists(cfg.manifest)) throw ConfigError("manifest " + cfg.manifest.string() + " does not exist");
  return read_group_manifest(cfg.manifest);
}

std::vector<ImageRef> query_images(const RunConfig& cfg) {
  std::vector<ImageRef> out;
  for (const auto& g : manifest_groups(cfg))
    for (const auto& m : g.members) out.push_back({m, cfg.manifest.parent_path() / m});
  return out;
}

// ---- synth -------------------------------------------------------------------

int cmd_synth(Context& ctx) {
  if (!ctx.cfg.has_synth) throw ConfigError("config has no [synth] section");
  const SynthCorpus corpus = synth_corpus(ctx.cfg.synth);
  write_synth_corpus(corpus, ctx.cfg.synth_output);
  ctx.out << "synth: " << corpus.distractors.size() << " distractors, " << corpus.groups.size() << " groups ("
          << corpus.members.size() << " members) -> " << ctx.cfg.synth_output.string() << '\n';
  return kExitOk;
}

// ---- extract -----------------------------------------------------------------

std::size_t extract_set(Context& ctx, const PipelineConfig& p, const std::vector<ImageRef>& images, const char* set) {
  std::vector<std::optional<std::string>> errors(images.size());
  const fs::path path = ctx.features(p.name, set);
  fs::create_directories(path.parent_path());
  std::size_t failures = 0;
  auto guarded = [&](std::size_t i, auto&& fn) {
    try {
      fn(load_image(images[i].path));
    } catch (const Error& e) {
      errors[i] = e.what();
    }
  };
  if (is_local(p.feature.family)) {
    std::vector<DocDescriptorSet> sets(images.size());
    std::vector<std::vector<TextBox>> boxes(images.size());
    parallel_for(images.size(), ctx.jobs, [&](std::size_t i) {
      guarded(i, [&](const RasterImage& img) {
        sets[i] = {images[i].id, extract_local(img, p.feature, &boxes[i])};
      });
    });
    std::vector<DocDescriptorSet> kept;
    for (std::size_t i = 0; i < images.size(); ++i)
      if (errors[i]) ++failures;
      else kept.push_back(std::move(sets[i]));
    if (kept.empty()) throw Error(ErrorKind::Decode, "every image failed to decode");
    write_local_features(kept, std::string(to_string(p.feature.family)), path);
    if (p.feature.strip_text) {
      fs::path csv = path;
      csv.replace_extension(".textboxes.csv");
      std::ofstream bout(csv);
      bout << "image_id,x0,y0,x1,y1,confidence\n";
      for (std::size_t i = 0; i < images.size(); ++i)
        if (!errors[i]) write_text_boxes_csv(bout, images[i].id, boxes[i]);
    }
  } else {
    std::vector<DocDescriptor> docs(images.size());
    parallel_for(images.size(), ctx.jobs, [&](std::size_t i) {
      guarded(i, [&](const RasterImage& img) { docs[i] = {images[i].id, extract_global(img, p.feature)}; });
    });
    std::vector<DocDescriptor> kept;
    for (std::size_t i = 0; i < images.size(); ++i)
      if (errors[i]) ++failures;
      else kept.push_back(std::move(docs[i]));
    if (kept.empty()) throw Error(ErrorKind::Decode, "every image failed to decode");
    write_feature_matrix(to_feature_matrix(kept), path);
  }
  for (std::size_t i = 0; i < images.size(); ++i)
    if (errors[i]) ctx.err << "tmr: skipped " << images[i].id << ": " << *errors[i] << '\n';
  ctx.out << "extract: " << p.name << " " << set << " " << images.size() - failures << "/" << images.size()
          << " images -> " << path.string() << '\n';
  return failures;
}

int cmd_extract(Context& ctx, const std::vector<std::string>& names, bool strip_text) {
  const auto images = corpus_images(ctx.cfg);
  std::vector<ImageRef> queries;
  if (!ctx.cfg.manifest.empty()) queries = query_images(ctx.cfg);
  std::size_t failures = 0;
  for (const auto* sel : select(ctx.cfg, names)) {
    if (!sel->extracts()) continue;
    PipelineConfig p = *sel;
    if (strip_text && is_local(p.feature.family)) p.feature.strip_text = true;
    failures += extract_set(ctx, p, images, "corpus");
    if (!queries.empty()) failures += extract_set(ctx, p, queries, "queries");
  }
  return failures > 0 ? kExitPartial : kExitOk;
}

// ---- train-codebook ----------------------------------------------------------

int cmd_train(Context& ctx, const std::vector<std::string>& names) {
  for (const auto* p : select(ctx.cfg, names)) {
    if (!p->needs_codebook()) continue;
    const fs::path feat = ctx.features(p->name, "corpus");
    require_file(feat, "run `tmr extract` first");
    const auto sets = read_local_features(feat);
    CodebookConfig cc = p->codebook;
    cc.jobs = ctx.jobs;
    const Codebook cb = train_codebook(sets, cc, std::string(to_string(p->feature.family)));
    fs::create_directories(ctx.codebook(p->name).parent_path());
    save_codebook(cb, ctx.codebook(p->name));
    ctx.out << "train-codebook: " << p->name << " k=" << cb.k() << " dim=" << cb.dim() << " -> "
            << ctx.codebook(p->name).string() << '\n';
  }
  return kExitOk;
}

// ---- index -------------------------------------------------------------------

Codebook load_pipeline_codebook(const Context& ctx, const PipelineConfig& p) {
  require_file(ctx.codebook(p.name), "run `tmr train-codebook` first");
  return load_codebook(ctx.codebook(p.name));
}

int cmd_index(Context& ctx, const std::vector<std::string>& names) {
  for (const auto* p : select(ctx.cfg, names)) {
    if (p->is_fusion()) continue;
    const fs::path out = ctx.index(p->name);
    fs::create_directories(out.parent_path());
    const FeatureFamily f = p->feature.family;
    std::size_t n = 0;
    if (f == FeatureFamily::External) {
      require_file(p->corpus_features, "external corpus features");
      const DenseIndex idx = build_dense(to_doc_descriptors(read_feature_matrix(p->corpus_features)), p->normalization,
                        ctx.cfg.seed);
      n = idx.size();
      save_index(idx, out);
    } else if (is_bovw(f)) {
      const fs::path feat = ctx.features(p->name, "corpus");
      require_file(feat, "run `tmr extract` first");
      const InvertedIndex idx =
          build_bovw_index(read_local_features(feat), load_pipeline_codebook(ctx, *p), ctx.cfg.seed);
      n = idx.size();
      save_index(idx, out);
    } else if (f == FeatureFamily::TriSift) {
      const fs::path feat = ctx.features(p->name, "corpus");
      require_file(feat, "run `tmr extract` first");
      const auto docs = trisift_descriptors(read_local_features(feat), load_pipeline_codebook(ctx, *p));
      const DenseIndex idx = build_dense(docs, p->normalization, ctx.cfg.seed);
      n = idx.size();
      save_index(idx, out);
    } else {
      const fs::path feat = ctx.features(p->name, "corpus");
      require_file(feat, "run `tmr extract` first");
      const DenseIndex idx =
          build_dense(to_doc_descriptors(read_feature_matrix(feat)), p->normalization, ctx.cfg.seed);
      n = idx.size();
      save_index(idx, out);
    }
    ctx.out << "index: " << p->name << " " << n << " docs -> " << out.string() << '\n';
  }
  return kExitOk;
}

// ---- pipelines from artifacts ------------------------------------------------

class PipelineFactory {
 public:
  explicit PipelineFactory(const Context& ctx) : ctx_(ctx) {}

  std::shared_ptr<const RetrievalPipeline> get(const PipelineConfig& p) {
    if (auto it = cache_.find(p.name); it != cache_.end()) return it->second;
    std::shared_ptr<const RetrievalPipeline> made = make(p);
    cache_.emplace(p.name, made);
    return made;
  }

 private:
  std::shared_ptr<const RetrievalPipeline> make(const PipelineConfig& p) {
    if (p.is_fusion()) {
      std::vector<std::shared_ptr<const RetrievalPipeline>> parts;
      for (const auto& n : p.fuse) parts.push_back(get(ctx_.cfg.pipeline(n)));
      return std::make_shared<FusionPipeline>(p.name, std::move(parts));
    }
    const fs::path idx_path = ctx_.index(p.name);
    require_file(idx_path, "run `tmr index` first");
    const FeatureFamily f = p.feature.family;
    if (is_bovw(f)) {
      InvertedIndex idx = load_inverted_index(idx_path);
      const Codebook cb = load_pipeline_codebook(ctx_, p);
      std::unordered_map<std::string, BoVWVector> extra;
      for (const auto& q : query_sets(p)) extra.emplace(q.doc_id, tfidf_weight(quantize(q.set, cb), idx.idf));
      return std::make_shared<BovwPipeline>(p.name, std::move(idx), std::move(extra));
    }
    std::vector<DocDescriptor> queries;
    if (f == FeatureFamily::External) {
      require_file(p.query_features, "external query features");
      queries = to_doc_descriptors(read_feature_matrix(p.query_features));
    } else if (f == FeatureFamily::TriSift) {
      queries = trisift_descriptors(query_sets(p), load_pipeline_codebook(ctx_, p));
    } else {
      const fs::path feat = ctx_.features(p.name, "queries");
      require_file(feat, "run `tmr extract` with a manifest first");
      queries = to_doc_descriptors(read_feature_matrix(feat));
    }
    std::unordered_map<std::string, Eigen::VectorXd> extra;
    for (auto& q : queries) extra.emplace(q.doc_id, std::move(q.descriptor.values));
    return std::make_shared<DensePipeline>(p.name, load_dense_index(idx_path), extra, make_metric(p.metric, f));
  }

  std::vector<DocDescriptorSet> query_sets(const PipelineConfig& p) const {
    const fs::path feat = ctx_.features(p.name, "queries");
    require_file(feat, "run `tmr extract` with a manifest first");
    return read_local_features(feat);
  }

  const Context& ctx_;
  std::map<std::string, std::shared_ptr<const RetrievalPipeline>> cache_;
};

// ---- evaluate ----------------------------------------------------------------

int cmd_evaluate(Context& ctx, const std::vector<std::string>& names) {
  const auto groups = manifest_groups(ctx.cfg);
  PipelineFactory factory(ctx);
  std::vector<EvalReport> reports;
  fs::create_directories(ctx.reports());
  for (const auto* p : select(ctx.cfg, names)) {
    const EvalReport r = evaluate(groups, *factory.get(*p), ctx.jobs);
    std::ofstream rank(ctx.reports() / (p->name + ".rank.csv"), std::ios::binary);
    std::ofstream pr(ctx.reports() / (p->name + ".pr.csv"), std::ios::binary);
    write_rank_csv(rank, r, ctx.cfg.hash);
    write_pr_csv(pr, r, ctx.cfg.hash);
    if (!rank || !pr) throw Error(ErrorKind::Io, "cannot write reports under " + ctx.reports().string());
    reports.push_back(r);
  }
  std::ofstream summary(ctx.reports() / "summary.csv", std::ios::binary);
  write_summary(summary, reports, ctx.cfg.hash);
  write_summary(ctx.out, reports, ctx.cfg.hash);
  return kExitOk;
}

// ---- query -------------------------------------------------------------------

int cmd_query(Context& ctx, const std::string& name, const fs::path& image, std::size_t top, bool csv) {
  const PipelineConfig& p = ctx.cfg.pipeline(name);
  const std::string qid = image.filename().string();
  Ranking ranking;
  std::function<Ranking(const PipelineConfig&, const RasterImage&)> rank_with = [&](const PipelineConfig& pc,
                                                                                    const RasterImage& img) {
    if (pc.is_fusion()) {
      std::vector<Ranking> parts;
      for (const auto& n : pc.fuse) parts.push_back(resolve_ties(rank_with(ctx.cfg.pipeline(n), img)));
      return irp_fuse(parts);
    }
    const fs::path idx_path = ctx.index(pc.name);
    require_file(idx_path, "run `tmr index` first");
    const FeatureFamily f = pc.feature.family;
    if (f == FeatureFamily::External)
      throw ConfigError("pipeline '" + pc.name + "' uses external features and cannot embed a query image");
    if (is_bovw(f)) {
      const InvertedIndex idx = load_inverted_index(idx_path);
      const Codebook cb = load_pipeline_codebook(ctx, pc);
      return query_inverted(idx, tfidf_weight(quantize(extract_local(img, pc.feature), cb), idx.idf), std::nullopt,
                            qid);
    }
    const DenseIndex idx = load_dense_index(idx_path);
    DenseDescriptor q;
    if (f == FeatureFamily::TriSift) {
      const Codebook cb = load_pipeline_codebook(ctx, pc);
      q = {"trisift", triplet_histogram(group_triplets(extract_local(img, pc.feature), cb))};
    } else {
      q = extract_global(img, pc.feature);
    }
    return query_dense(idx, q, make_metric(pc.metric, f), std::nullopt, qid);
  };
  ranking = rank_with(p, load_image(image));
  const std::size_t n = std::min(top, ranking.entries.size());
  if (csv) ctx.out << "doc_id,score,rank\n";
  for (std::size_t i = 0; i < n; ++i) {
    const auto& e = ranking.entries[i];
    if (csv) ctx.out << e.doc_id << ',' << fmt6(e.score) << ',' << i + 1 << '\n';
    else ctx.out << e.doc_id << ' ' << fmt6(e.score) << '\n';
  }
  return kExitOk;
}

// ---- fuse --------------------------------------------------------------------

Ranking read_ranking_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open ranking " + path.string());
  std::string line;
  std::getline(in, line);
  std::vector<std::string> cols;
  {
    std::istringstream hs(line);
    for (std::string c; std::getline(hs, c, ',');) cols.push_back(c);
  }
  const auto col = [&](const std::string& name) {
    const auto it = std::find(cols.begin(), cols.end(), name);
    if (it == cols.end()) throw Error(ErrorKind::Format, path.string() + ": header lacks column '" + name + "'");
    return static_cast<std::size_t>(it - cols.begin());
  };
  const std::size_t id_col = col("doc_id"), rank_col = col("rank");
  Ranking r;
  r.query_id = path.stem().string();
  for (int lineno = 2; std::getline(in, line); ++lineno) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');) f.push_back(c);
    if (f.size() <= std::max(id_col, rank_col))
      throw Error(ErrorKind::Format, path.string() + ":" + std::to_string(lineno) + ": too few fields");
    RankedDoc d;
    d.doc_id = f[id_col];
    try {
      std::size_t used = 0;
      d.rank = std::stod(f[rank_col], &used);
      if (used != f[rank_col].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw Error(ErrorKind::Format, path.string() + ":" + std::to_string(lineno) + ": bad rank");
    }
    r.entries.push_back(d);
  }
  return r;
}

int cmd_fuse(Context& ctx, const std::vector<std::string>& inputs, const fs::path& output) {
  std::vector<Ranking> rankings;
  for (const auto& in : inputs) rankings.push_back(read_ranking_csv(in));
  const Ranking fused = irp_fuse(rankings);
  std::ofstream out(output, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + output.string());
  out << "doc_id,score,rank\n";
  for (const auto& e : fused.entries) out << e.doc_id << ',' << fmt6(e.score) << ',' << e.rank << '\n';
  ctx.out << "fuse: " << inputs.size() << " rankings, " << fused.entries.size() << " docs -> " << output.string()
          << '\n';
  return kExitOk;
}

int cmd_import(Context& ctx, const fs::path& input, const fs::path& output) {
  const DenseIndex idx = import_external_features(input);
  if (output.has_parent_path()) fs::create_directories(output.parent_path());
  save_index(idx, output);
  ctx.out << "import-features: " << idx.size() << " docs, dim " << idx.dim() << " -> " << output.string() << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Trademark retrieval engine and benchmark harness", "tmr"};
  app.require_subcommand(1);
  fs::path config_path;
  unsigned jobs_flag = 0;
  bool jobs_given = false;
  std::vector<std::string> names;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config_path, "run configuration file")->required();
    sub->add_option("--jobs", jobs_flag, "worker threads (0 = one per core)")
        ->each([&](const std::string&) { jobs_given = true; });
  };
  auto* synth = app.add_subcommand("synth", "generate the synthetic corpus");
  add_common(synth);
  auto* extract = app.add_subcommand("extract", "extract features for corpus and query images");
  add_common(extract);
  bool strip_text = false;
  extract->add_option("-p,--pipeline", names, "restrict to these pipelines");
  extract->add_flag("--strip-text", strip_text, "drop local features inside detected text");
  auto* train = app.add_subcommand("train-codebook", "train k-means vocabularies");
  add_common(train);
  train->add_option("-p,--pipeline", names, "restrict to these pipelines");
  auto* index = app.add_subcommand("index", "build dense and inverted indexes");
  add_common(index);
  index->add_option("-p,--pipeline", names, "restrict to these pipelines");
  auto* query = app.add_subcommand("query", "rank the indexed corpus for one image");
  add_common(query);
  std::string query_pipeline;
  fs::path query_image;
  std::size_t top = 10;
  bool csv = false;
  query->add_option("-p,--pipeline", query_pipeline, "pipeline to query")->required();
  query->add_option("-i,--image", query_image, "query image")->required();
  query->add_option("-m,--top", top, "number of results");
  query->add_flag("--csv", csv, "print doc_id,score,rank CSV");
  auto* evaluate_cmd = app.add_subcommand("evaluate", "run the query-injection benchmark");
  add_common(evaluate_cmd);
  evaluate_cmd->add_option("-p,--pipeline", names, "restrict to these pipelines");
  auto* fuse = app.add_subcommand("fuse", "IRP-fuse ranking CSVs (doc_id, rank)");
  std::vector<std::string> fuse_inputs;
  fs::path fuse_output;
  fuse->add_option("inputs", fuse_inputs, "ranking CSV files")->required()->expected(2, -1);
  fuse->add_option("-o,--output", fuse_output, "fused ranking CSV")->required();
  auto* import = app.add_subcommand("import-features", "index an external feature matrix for cosine search");
  fs::path import_input, import_output;
  import->add_option("-i,--input", import_input, "TMFEAT1 file")->required();
  import->add_option("-o,--output", import_output, "index file to write")->required();

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    std::optional<Context> ctx;
    if (!config_path.empty()) {
      ctx.emplace(Context{load_config(config_path), 0, out, err});
    } else {
      ctx.emplace(Context{RunConfig{}, 0, out, err});
    }
    ctx->jobs = jobs_given ? jobs_flag : ctx->cfg.jobs;
    if (*synth) return cmd_synth(*ctx);
    if (*extract) return cmd_extract(*ctx, names, strip_text);
    if (*train) return cmd_train(*ctx, names);
    if (*index) return cmd_index(*ctx, names);
    if (*query) return cmd_query(*ctx, query_pipeline, query_image, top, csv);
    if (*evaluate_cmd) return cmd_evaluate(*ctx, names);
    if (*fuse) return cmd_fuse(*ctx, fuse_inputs, fuse_output);
    if (*import) return cmd_import(*ctx, import_input, import_output);
  } catch (const ConfigError& e) {
    err << "tmr: config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "tmr: " << to_string(e.kind()) << ": " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "tmr: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace tmr
