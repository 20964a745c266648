#include "tmr/fusion.hpp"

#include "tmr/errors.hpp"

#include <unordered_map>

namespace tmr {

Ranking irp_fuse(std::span<const Ranking> rankings) {
  if (rankings.empty()) throw Error(ErrorKind::InvalidParam, "irp_fuse: need at least one ranking");
  const Ranking& first = rankings.front();
  std::unordered_map<std::string, std::size_t> slot;
  std::vector<std::string> ids;
  ids.reserve(first.entries.size());
  for (const auto& e : first.entries) {
    if (!slot.emplace(e.doc_id, ids.size()).second)
      throw Error(ErrorKind::DuplicateDoc, "irp_fuse: duplicate doc " + e.doc_id);
    ids.push_back(e.doc_id);
  }
  std::vector<double> inverse_sum(ids.size(), 0.0);
  for (const Ranking& r : rankings) {
    if (r.entries.size() != ids.size()) throw Error(ErrorKind::UniverseMismatch, "irp_fuse: rankings cover different docs");
    std::vector<bool> seen(ids.size(), false);
    for (const auto& e : r.entries) {
      const auto it = slot.find(e.doc_id);
      if (it == slot.end() || seen[it->second])
        throw Error(ErrorKind::UniverseMismatch, "irp_fuse: rankings cover different docs");
      if (!(e.rank > 0.0)) throw Error(ErrorKind::InvalidParam, "irp_fuse: ranks must be positive");
      seen[it->second] = true;
      inverse_sum[it->second] += 1.0 / e.rank;
    }
  }
  std::vector<double> irp(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) irp[i] = 1.0 / inverse_sum[i];
  return make_ranking(first.query_id, ids, irp);
}

}  // namespace tmr
