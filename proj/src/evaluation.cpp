#include "tmr/evaluation.hpp"

#include "tmr/errors.hpp"
#include "tmr/fusion.hpp"
#include "tmr/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace tmr {

std::vector<QueryGroup> read_group_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open manifest " + path.string());
  std::vector<QueryGroup> groups;
  std::unordered_map<std::string, std::size_t> slot;
  std::unordered_set<std::string> seen;
  std::string line;
  std::getline(in, line);  // header
  for (int lineno = 2; std::getline(in, line); ++lineno) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos || comma == 0 || comma + 1 == line.size())
      throw Error(ErrorKind::Format, path.string() + ":" + std::to_string(lineno) + ": expected group_id,image_path");
    const std::string gid = line.substr(0, comma), image = line.substr(comma + 1);
    if (!seen.insert(image).second) throw Error(ErrorKind::DuplicateDoc, "manifest lists " + image + " twice");
    const auto [it, fresh] = slot.emplace(gid, groups.size());
    if (fresh) groups.push_back({gid, {}});
    groups[it->second].members.push_back(image);
  }
  return groups;
}

Ranking resolve_ties(const Ranking& raw) {
  Ranking out = raw;
  auto& e = out.entries;
  std::size_t i = 0;
  while (i < e.size()) {
    std::size_t j = i + 1;
    while (j < e.size() && e[j].score == e[i].score) ++j;
    // positions i+1 .. j share the mean (i + 1 + j) / 2
    const double mean = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) e[k].rank = mean;
    i = j;
  }
  return out;
}

double average_rank(std::span<const double> ranks) {
  if (ranks.empty()) throw Error(ErrorKind::InvalidParam, "average_rank: no relevant documents");
  double sum = 0.0;
  for (double r : ranks) sum += r;
  return sum / static_cast<double>(ranks.size());
}

double normalized_rank(std::span<const double> ranks, std::size_t corpus_size) {
  const double n_rel = static_cast<double>(ranks.size());
  if (ranks.empty()) throw Error(ErrorKind::InvalidParam, "normalized_rank: no relevant documents");
  if (corpus_size < ranks.size()) throw Error(ErrorKind::InvalidParam, "normalized_rank: corpus smaller than N_rel");
  double sum = 0.0;
  for (double r : ranks) sum += r;
  return (sum - n_rel * (n_rel + 1.0) / 2.0) / (static_cast<double>(corpus_size) * n_rel);
}

std::vector<PrPoint> precision_recall_curve(const Ranking& ranking, const std::unordered_set<std::string>& relevant) {
  std::vector<PrPoint> out;
  if (relevant.empty()) throw Error(ErrorKind::InvalidParam, "precision_recall_curve: empty relevant set");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < ranking.entries.size(); ++i) {
    if (!relevant.contains(ranking.entries[i].doc_id)) continue;
    ++hits;
    out.push_back({static_cast<double>(hits) / static_cast<double>(relevant.size()),
                   static_cast<double>(hits) / static_cast<double>(i + 1)});
  }
  return out;
}

InterpolatedPr interpolate_pr(std::span<const PrPoint> curve) {
  InterpolatedPr out{};
  for (int k = 0; k <= 10; ++k) {
    const double r = k / 10.0;
    double best = 0.0;
    for (const auto& p : curve)
      if (p.recall >= r - 1e-12) best = std::max(best, p.precision);
    out[k] = best;
  }
  return out;
}

// ---- pipelines ---------------------------------------------------------------

DensePipeline::DensePipeline(std::string name, DenseIndex base,
                             const std::unordered_map<std::string, Eigen::VectorXd>& extra, Metric metric)
    : name_(std::move(name)), base_(std::move(base)), metric_(std::move(metric)) {
  for (const auto& [id, v] : extra) {
    if (base_.size() > 0 && v.size() != base_.dim())
      throw Error(ErrorKind::DimMismatch, "dense pipeline: query descriptor dimension differs from index");
    extra_.emplace(id, normalize(v, base_.normalization).cast<float>());
  }
}

const Eigen::VectorXf& DensePipeline::extra_row(const std::string& id) const {
  const auto it = extra_.find(id);
  if (it == extra_.end()) throw Error(ErrorKind::InvalidParam, name_ + ": no descriptor for " + id);
  return it->second;
}

Ranking DensePipeline::rank(const std::string& query, std::span<const std::string> injected) const {
  const Eigen::VectorXf& q = extra_row(query);
  std::vector<std::string> ids = base_.doc_ids;
  std::vector<double> scores(base_.size());
  for (std::size_t i = 0; i < base_.size(); ++i)
    scores[i] = distance(q, base_.rows.row(static_cast<Eigen::Index>(i)).transpose(), metric_);
  for (const auto& id : injected) {
    ids.push_back(id);
    scores.push_back(distance(q, extra_row(id), metric_));
  }
  return make_ranking(query, ids, scores);
}

BovwPipeline::BovwPipeline(std::string name, InvertedIndex base, std::unordered_map<std::string, BoVWVector> extra)
    : name_(std::move(name)), base_(std::move(base)), extra_(std::move(extra)) {}

const BoVWVector& BovwPipeline::extra_vector(const std::string& id) const {
  const auto it = extra_.find(id);
  if (it == extra_.end()) throw Error(ErrorKind::InvalidParam, name_ + ": no vector for " + id);
  return it->second;
}

Ranking BovwPipeline::rank(const std::string& query, std::span<const std::string> injected) const {
  const BoVWVector& q = extra_vector(query);
  std::vector<std::string> ids = base_.doc_ids;
  std::vector<double> scores = inverted_scores(base_, q);
  for (const auto& id : injected) {
    ids.push_back(id);
    scores.push_back(sparse_cosine_distance(q, extra_vector(id)));
  }
  return make_ranking(query, ids, scores);
}

FusionPipeline::FusionPipeline(std::string name, std::vector<std::shared_ptr<const RetrievalPipeline>> parts)
    : name_(std::move(name)), parts_(std::move(parts)) {
  if (parts_.empty()) throw Error(ErrorKind::InvalidParam, "fusion pipeline needs at least one part");
}

Ranking FusionPipeline::rank(const std::string& query, std::span<const std::string> injected) const {
  std::vector<Ranking> rankings;
  rankings.reserve(parts_.size());
  for (const auto& p : parts_) rankings.push_back(resolve_ties(p->rank(query, injected)));
  return irp_fuse(rankings);
}

// ---- protocol ----------------------------------------------------------------

namespace {

void check_group(const QueryGroup& group) {
  if (group.members.size() < 2) throw Error(ErrorKind::GroupTooSmall, "group " + group.group_id + " has < 2 members");
}

QueryResult evaluate_member(const QueryGroup& group, std::size_t member, const RetrievalPipeline& pipeline) {
  const std::string& q = group.members[member];
  std::vector<std::string> injected;
  for (std::size_t m = 0; m < group.members.size(); ++m)
    if (m != member) injected.push_back(group.members[m]);
  const Ranking raw = pipeline.rank(q, injected);
  const std::size_t n = pipeline.corpus_size() + injected.size();
  if (raw.entries.size() != n)
    throw Error(ErrorKind::InvalidParam, "ranking size mismatch; are group members already in the corpus?");
  const Ranking tied = resolve_ties(raw);
  const std::unordered_set<std::string> relevant(injected.begin(), injected.end());
  QueryResult r;
  r.query_id = q;
  r.group_id = group.group_id;
  for (const auto& e : tied.entries)
    if (relevant.contains(e.doc_id)) r.injected_ranks.push_back(e.rank);
  r.rank = average_rank(r.injected_ranks);
  r.normalized_rank = normalized_rank(r.injected_ranks, n);
  r.pr = precision_recall_curve(raw, relevant);
  return r;
}

}  // namespace

std::vector<QueryResult> inject_and_evaluate(const QueryGroup& group, const RetrievalPipeline& pipeline) {
  check_group(group);
  std::vector<QueryResult> out;
  for (std::size_t m = 0; m < group.members.size(); ++m) out.push_back(evaluate_member(group, m, pipeline));
  return out;
}

namespace {

void mean_std(const std::vector<double>& v, double& mean, double& sd) {
  mean = sd = 0.0;
  if (v.empty()) return;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  for (double x : v) sd += (x - mean) * (x - mean);
  sd = std::sqrt(sd / static_cast<double>(v.size()));
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

EvalReport evaluate(std::span<const QueryGroup> groups, const RetrievalPipeline& pipeline, unsigned jobs) {
  struct Task {
    std::size_t group;
    std::size_t member;
  };
  std::vector<Task> tasks;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    check_group(groups[g]);
    for (std::size_t m = 0; m < groups[g].members.size(); ++m) tasks.push_back({g, m});
  }
  std::vector<QueryResult> results(tasks.size());
  parallel_for(tasks.size(), jobs, [&](std::size_t t) {
    results[t] = evaluate_member(groups[tasks[t].group], tasks[t].member, pipeline);
  });

  EvalReport report;
  report.pipeline = pipeline.name();
  report.queries = std::move(results);
  std::vector<double> ranks, nranks;
  for (const auto& q : report.queries) {
    ranks.push_back(q.rank);
    nranks.push_back(q.normalized_rank);
    const auto ip = interpolate_pr(q.pr);
    for (int k = 0; k <= 10; ++k) report.pr[k] += ip[k];
  }
  if (!report.queries.empty())
    for (auto& p : report.pr) p /= static_cast<double>(report.queries.size());
  mean_std(ranks, report.mean_rank, report.std_rank);
  mean_std(nranks, report.mean_normalized_rank, report.std_normalized_rank);
  return report;
}

void write_rank_csv(std::ostream& out, const EvalReport& report, const std::string& config_hash) {
  out << "# pipeline=" << report.pipeline << " config=" << config_hash << '\n';
  out << "query_id,group_id,rank,normalized_rank\n";
  for (const auto& q : report.queries)
    out << q.query_id << ',' << q.group_id << ',' << fmt(q.rank) << ',' << fmt(q.normalized_rank) << '\n';
}

void write_pr_csv(std::ostream& out, const EvalReport& report, const std::string& config_hash) {
  out << "# pipeline=" << report.pipeline << " config=" << config_hash << '\n';
  out << "recall,precision\n";
  for (int k = 0; k <= 10; ++k) out << fmt(k / 10.0) << ',' << fmt(report.pr[k]) << '\n';
}

void write_summary(std::ostream& out, std::span<const EvalReport> reports, const std::string& config_hash) {
  out << "# config=" << config_hash << '\n';
  out << "Method,Queries,Average rank,Normalized average rank\n";
  for (const auto& r : reports) {
    out << r.pipeline << ',' << r.queries.size() << ',' << fmt(r.mean_rank) << " +- " << fmt(r.std_rank) << ','
        << fmt(r.mean_normalized_rank) << " +- " << fmt(r.std_normalized_rank) << '\n';
  }
}

}  // namespace tmr
