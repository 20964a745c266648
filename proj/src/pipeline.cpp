#include "tmr/pipeline.hpp"

#include "tmr/errors.hpp"
#include "tmr/textmask.hpp"

#include <array>
#include <unordered_map>

namespace tmr {

namespace {

constexpr std::array<std::pair<FeatureFamily, std::string_view>, 11> kFamilyNames = {{
    {FeatureFamily::Hsv72, "hsv72"},
    {FeatureFamily::Rgb64, "rgb64"},
    {FeatureFamily::Rgb512, "rgb512"},
    {FeatureFamily::Lbp, "lbp"},
    {FeatureFamily::Gist, "gist"},
    {FeatureFamily::TriSift, "trisift"},
    {FeatureFamily::Sift, "sift"},
    {FeatureFamily::OrSift, "orsift"},
    {FeatureFamily::Hog, "hog"},
    {FeatureFamily::ShapeContext, "shapecontext"},
    {FeatureFamily::External, "external"},
}};

RasterImage prepare(const RasterImage& img, const FeatureConfig& cfg) { return cfg.autocrop ? autocrop(img) : img; }

}  // namespace

std::string_view to_string(FeatureFamily f) {
  for (const auto& [family, name] : kFamilyNames)
    if (family == f) return name;
  return "?";
}

std::optional<FeatureFamily> parse_feature_family(std::string_view name) {
  for (const auto& [family, n] : kFamilyNames)
    if (n == name) return family;
  return std::nullopt;
}

bool is_local(FeatureFamily f) {
  return f == FeatureFamily::TriSift || f == FeatureFamily::Sift || f == FeatureFamily::OrSift ||
         f == FeatureFamily::Hog || f == FeatureFamily::ShapeContext;
}

bool is_bovw(FeatureFamily f) { return is_local(f) && f != FeatureFamily::TriSift; }

DenseDescriptor extract_global(const RasterImage& input, const FeatureConfig& cfg) {
  const RasterImage img = prepare(input, cfg);
  switch (cfg.family) {
    case FeatureFamily::Hsv72: return color_histogram_hsv72(img);
    case FeatureFamily::Rgb64: return color_histogram_rgb(img, 4);
    case FeatureFamily::Rgb512: return color_histogram_rgb(img, 8);
    case FeatureFamily::Lbp: return lbp(to_gray(img), cfg.lbp);
    case FeatureFamily::Gist: return gist(to_gray(img));
    default: break;
  }
  throw Error(ErrorKind::InvalidParam, std::string("not a global feature: ") + std::string(to_string(cfg.family)));
}

DescriptorSet extract_local(const RasterImage& input, const FeatureConfig& cfg, std::vector<TextBox>* text_boxes) {
  const GrayImage gray = to_gray(prepare(input, cfg));
  DescriptorSet set;
  switch (cfg.family) {
    case FeatureFamily::Sift:
    case FeatureFamily::TriSift:
      set = describe_sift(gray, detect_dog_keypoints(gray));
      break;
    case FeatureFamily::OrSift:
      set = describe_orsift(gray, detect_dog_keypoints(gray));
      break;
    case FeatureFamily::Hog:
      set = describe_hog_dense(gray, cfg.hog_cell);
      break;
    case FeatureFamily::ShapeContext:
      try {
        set = shape_context(gray, cfg.shape_samples);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::InsufficientEdges) throw;
        set.feature_id = "shapecontext";
        set.vectors.resize(0, kShapeContextDim);
      }
      break;
    default:
      throw Error(ErrorKind::InvalidParam, std::string("not a local feature: ") + std::string(to_string(cfg.family)));
  }
  if (cfg.strip_text) {
    auto boxes = detect_text_regions(gray);
    set = filter_keypoints(set, boxes);
    if (text_boxes) *text_boxes = std::move(boxes);
  }
  return set;
}

Normalization default_normalization(FeatureFamily f) {
  switch (f) {
    case FeatureFamily::Hsv72:
    case FeatureFamily::Rgb64:
    case FeatureFamily::Rgb512:
    case FeatureFamily::Lbp: return Normalization::L1;
    case FeatureFamily::Gist: return Normalization::L2;
    default: return Normalization::None;
  }
}

MetricId default_metric(FeatureFamily f) {
  switch (f) {
    case FeatureFamily::Hsv72:
    case FeatureFamily::Rgb64:
    case FeatureFamily::Rgb512: return MetricId::IntersectionL1;
    case FeatureFamily::Gist: return MetricId::Euclidean;
    default: return MetricId::Cosine;
  }
}

Metric make_metric(MetricId id, FeatureFamily f) {
  if (id != MetricId::Quadratic) return Metric(id);
  if (f != FeatureFamily::Hsv72)
    throw Error(ErrorKind::InvalidParam, "quadratic distance is only defined for hsv72 histograms");
  return Metric(id, hsv72_bin_similarity());
}

Codebook train_codebook(std::span<const DocDescriptorSet> corpus, const CodebookConfig& cfg,
                        const std::string& feature_id) {
  std::vector<const DescriptorMatrix*> sources;
  for (const auto& d : corpus) sources.push_back(&d.set.vectors);
  const DescriptorMatrix samples = reservoir_sample(sources, cfg.max_samples, cfg.seed);
  KMeansOptions opt;
  opt.k = cfg.k;
  opt.max_iters = cfg.max_iters;
  opt.seed = cfg.seed;
  opt.jobs = cfg.jobs;
  return train_kmeans(samples, opt, feature_id).codebook;
}

std::shared_ptr<RetrievalPipeline> make_dense_pipeline(std::string name, std::span<const DocDescriptor> corpus,
                                                       std::span<const DocDescriptor> queries,
                                                       Normalization normalization, const Metric& metric) {
  std::unordered_map<std::string, Eigen::VectorXd> extra;
  for (const auto& q : queries) extra.emplace(q.doc_id, q.descriptor.values);
  return std::make_shared<DensePipeline>(std::move(name), build_dense(corpus, normalization), extra, metric);
}

namespace {

std::vector<TermCounts> count_words(std::span<const DocDescriptorSet> sets, const Codebook& codebook) {
  std::vector<TermCounts> out;
  out.reserve(sets.size());
  for (const auto& d : sets) out.push_back(quantize(d.set, codebook));
  return out;
}

}  // namespace

InvertedIndex build_bovw_index(std::span<const DocDescriptorSet> corpus, const Codebook& codebook,
                               std::uint64_t build_seed) {
  const auto counts = count_words(corpus, codebook);
  const auto k = static_cast<std::size_t>(codebook.k());
  IdfModel idf = compute_idf(counts, k);
  std::vector<DocBoVW> docs;
  docs.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) docs.push_back({corpus[i].doc_id, tfidf_weight(counts[i], idf)});
  InvertedIndex idx = build_inverted(docs, k, std::move(idf), build_seed);
  idx.feature_id = codebook.feature_id;
  return idx;
}

std::shared_ptr<RetrievalPipeline> make_bovw_pipeline(std::string name, std::span<const DocDescriptorSet> corpus,
                                                      std::span<const DocDescriptorSet> queries,
                                                      const Codebook& codebook) {
  InvertedIndex idx = build_bovw_index(corpus, codebook);
  std::unordered_map<std::string, BoVWVector> extra;
  for (const auto& q : queries) extra.emplace(q.doc_id, tfidf_weight(quantize(q.set, codebook), idx.idf));
  return std::make_shared<BovwPipeline>(std::move(name), std::move(idx), std::move(extra));
}

std::vector<DocDescriptor> trisift_descriptors(std::span<const DocDescriptorSet> sets, const Codebook& codebook) {
  std::vector<DocDescriptor> out;
  out.reserve(sets.size());
  for (const auto& d : sets)
    out.push_back({d.doc_id, {"trisift", triplet_histogram(group_triplets(d.set, codebook))}});
  return out;
}

}  // namespace tmr
