#pragma once

#include "tmr/codebook.hpp"
#include "tmr/index.hpp"

#include <array>
#include <filesystem>
#include <memory>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace tmr {

/// A set of mutually similar images; every member queries for the others.
struct QueryGroup {
  std::string group_id;
  std::vector<std::string> members;
};

/// Group manifest CSV "group_id,image_path" with a header row. Groups keep
/// their first-appearance order; image paths become member ids.
std::vector<QueryGroup> read_group_manifest(const std::filesystem::path& path);

/// Replaces each rank with the mean position of its equal-score block.
Ranking resolve_ties(const Ranking& raw);

/// Mean rank of the relevant documents.
double average_rank(std::span<const double> ranks);

/// (sum R_i - N_rel (N_rel + 1) / 2) / (N N_rel): 0 for perfect retrieval,
/// about 0.5 for random ordering. N_rel is ranks.size().
double normalized_rank(std::span<const double> ranks, std::size_t corpus_size);

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;
};

/// One point per relevant document in ranking order: precision = hits / cutoff,
/// recall = hits / |relevant|.
std::vector<PrPoint> precision_recall_curve(const Ranking& ranking, const std::unordered_set<std::string>& relevant);

using InterpolatedPr = std::array<double, 11>;

/// Max precision at recall >= r for r = 0, 0.1, ..., 1.
InterpolatedPr interpolate_pr(std::span<const PrPoint> curve);

/// Ranks a query against the base corpus plus a set of injected documents.
/// Returned rankings are raw: strictly ordered, ties broken by doc id.
class RetrievalPipeline {
 public:
  virtual ~RetrievalPipeline() = default;
  virtual const std::string& name() const = 0;
  virtual std::size_t corpus_size() const = 0;
  virtual Ranking rank(const std::string& query, std::span<const std::string> injected) const = 0;
};

/// Global descriptor scan. `extra` holds descriptors of the query-set images.
class DensePipeline final : public RetrievalPipeline {
 public:
  DensePipeline(std::string name, DenseIndex base, const std::unordered_map<std::string, Eigen::VectorXd>& extra,
                Metric metric);
  const std::string& name() const override { return name_; }
  std::size_t corpus_size() const override { return base_.size(); }
  Ranking rank(const std::string& query, std::span<const std::string> injected) const override;

 private:
  const Eigen::VectorXf& extra_row(const std::string& id) const;

  std::string name_;
  DenseIndex base_;
  std::unordered_map<std::string, Eigen::VectorXf> extra_;  // normalised as the index rows
  Metric metric_;
};

/// Inverted-file cosine scoring; injected docs are scored directly against the
/// query so the base index is never rebuilt.
class BovwPipeline final : public RetrievalPipeline {
 public:
  BovwPipeline(std::string name, InvertedIndex base, std::unordered_map<std::string, BoVWVector> extra);
  const std::string& name() const override { return name_; }
  std::size_t corpus_size() const override { return base_.size(); }
  Ranking rank(const std::string& query, std::span<const std::string> injected) const override;

 private:
  const BoVWVector& extra_vector(const std::string& id) const;

  std::string name_;
  InvertedIndex base_;
  std::unordered_map<std::string, BoVWVector> extra_;
};

/// IRP fusion over tie-resolved constituent rankings.
class FusionPipeline final : public RetrievalPipeline {
 public:
  FusionPipeline(std::string name, std::vector<std::shared_ptr<const RetrievalPipeline>> parts);
  const std::string& name() const override { return name_; }
  std::size_t corpus_size() const override { return parts_.front()->corpus_size(); }
  Ranking rank(const std::string& query, std::span<const std::string> injected) const override;

 private:
  std::string name_;
  std::vector<std::shared_ptr<const RetrievalPipeline>> parts_;
};

struct QueryResult {
  std::string query_id;
  std::string group_id;
  std::vector<double> injected_ranks;  // tie-averaged, ascending
  double rank = 0.0;
  double normalized_rank = 0.0;
  std::vector<PrPoint> pr;
};

/// For each member q: rank q against corpus + (group \ {q}), resolve ties and
/// score the injected members with N = corpus size + N_rel.
std::vector<QueryResult> inject_and_evaluate(const QueryGroup& group, const RetrievalPipeline& pipeline);

struct EvalReport {
  std::string pipeline;
  std::vector<QueryResult> queries;
  double mean_rank = 0.0, std_rank = 0.0;
  double mean_normalized_rank = 0.0, std_normalized_rank = 0.0;
  InterpolatedPr pr{};  // macro-averaged over queries
};

/// Runs every group; queries are evaluated in parallel and reported in
/// (group, member) order.
EvalReport evaluate(std::span<const QueryGroup> groups, const RetrievalPipeline& pipeline, unsigned jobs = 1);

void write_rank_csv(std::ostream& out, const EvalReport& report, const std::string& config_hash);
void write_pr_csv(std::ostream& out, const EvalReport& report, const std::string& config_hash);
/// Table with "Average rank" and "Normalized average rank" columns (mean +- std).
void write_summary(std::ostream& out, std::span<const EvalReport> reports, const std::string& config_hash);

}  // namespace tmr
