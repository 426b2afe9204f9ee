#include "tgmrf/graph.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "tgmrf/errors.hpp"

namespace tgmrf {

namespace detail {

AdjacencyGraph::AdjacencyGraph(Index n_nodes, const EdgeList& edges) : adjacency_(n_nodes) {
  if (n_nodes == 0) throw InvalidArgument("graph must have at least one node");
  for (const auto& [a, b] : edges) {
    if (a >= n_nodes || b >= n_nodes) throw InvalidArgument("edge index out of range");
    if (a == b) throw InvalidArgument("self-edge at node " + std::to_string(a));
    adjacency_[a].push_back(b);
    adjacency_[b].push_back(a);
  }
  for (auto& list : adjacency_) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
    edge_count_ += list.size();
  }
  edge_count_ /= 2;
}

Index AdjacencyGraph::degree(Index node) const {
  if (node >= size()) throw InvalidArgument("node index out of range");
  return adjacency_[node].size();
}

std::span<const Index> AdjacencyGraph::neighbors(Index node) const {
  if (node >= size()) throw InvalidArgument("node index out of range");
  return adjacency_[node];
}

bool AdjacencyGraph::adjacent(Index a, Index b) const {
  const auto list = neighbors(a);
  return std::binary_search(list.begin(), list.end(), b);
}

EdgeList AdjacencyGraph::edges() const {
  EdgeList out;
  out.reserve(edge_count_);
  for (Index a = 0; a < size(); ++a)
    for (Index b : adjacency_[a])
      if (a < b) out.emplace_back(a, b);
  return out;
}

}  // namespace detail

SpatialGraph grid_graph(Index rows, Index cols, GridNeighborhood hood) {
  if (rows == 0 || cols == 0) throw InvalidArgument("grid dimensions must be positive");
  EdgeList edges;
  auto id = [cols](Index r, Index c) { return r * cols + c; };
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) {
      if (c + 1 < cols) edges.emplace_back(id(r, c), id(r, c + 1));
      if (r + 1 < rows) edges.emplace_back(id(r, c), id(r + 1, c));
      if (hood == GridNeighborhood::Queen && r + 1 < rows) {
        if (c + 1 < cols) edges.emplace_back(id(r, c), id(r + 1, c + 1));
        if (c > 0) edges.emplace_back(id(r, c), id(r + 1, c - 1));
      }
    }
  }
  return SpatialGraph(rows * cols, edges);
}

TemporalGraph path_graph(Index n_times) {
  if (n_times == 0) throw InvalidArgument("number of times must be positive");
  EdgeList edges;
  for (Index t = 0; t + 1 < n_times; ++t) edges.emplace_back(t, t + 1);
  return TemporalGraph(n_times, edges);
}

namespace {

void validate_pair(Index n_regions, Index a, Index b, std::size_t line) {
  if (a >= n_regions || b >= n_regions)
    throw IngestionError("region index out of range [0, " + std::to_string(n_regions) + "): " +
                             std::to_string(a) + " " + std::to_string(b),
                         line);
  if (a == b) throw IngestionError("self-edge on region " + std::to_string(a), line);
}

}  // namespace

SpatialGraph from_edge_list(Index n_regions, const EdgeList& pairs) {
  if (n_regions == 0) throw InvalidArgument("number of regions must be positive");
  for (std::size_t k = 0; k < pairs.size(); ++k) validate_pair(n_regions, pairs[k].first, pairs[k].second, k + 1);
  return SpatialGraph(n_regions, pairs);
}

SpatialGraph read_edge_list(std::istream& in, IndexBase base, Index n_regions) {
  const auto offset = static_cast<long long>(base);
  EdgeList pairs;
  std::vector<std::size_t> lines;
  std::string raw;
  std::size_t line_no = 0;
  Index max_index = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    std::istringstream fields(raw);
    long long a = 0;
    long long b = 0;
    if (!(fields >> a)) continue;  // blank or comment-only
    std::string extra;
    if (!(fields >> b) || (fields >> extra)) throw IngestionError("expected exactly two indices `i k`", line_no);
    a -= offset;
    b -= offset;
    if (a < 0 || b < 0) throw IngestionError("negative region index", line_no);
    pairs.emplace_back(static_cast<Index>(a), static_cast<Index>(b));
    lines.push_back(line_no);
    max_index = std::max({max_index, pairs.back().first, pairs.back().second});
  }
  if (n_regions == 0) {
    if (pairs.empty()) throw IngestionError("edge list is empty and no region count was given");
    n_regions = max_index + 1;
  }
  for (std::size_t k = 0; k < pairs.size(); ++k) validate_pair(n_regions, pairs[k].first, pairs[k].second, lines[k]);
  return SpatialGraph(n_regions, pairs);
}

SpatialGraph read_edge_list_file(const std::string& path, IndexBase base, Index n_regions) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open adjacency file '" + path + "'");
  return read_edge_list(in, base, n_regions);
}

Index st_degree(const SpatialGraph& sp, const TemporalGraph& tp, Index region, Index time) {
  if (region >= sp.n_regions() || time >= tp.n_times()) throw InvalidArgument("site index out of range");
  const Index ns = sp.degree(region);
  const Index nt = tp.degree(time);
  return ns + nt + ns * nt;
}

StLayout::StLayout(Index n_regions, Index n_times, Ordering ordering)
    : n_regions_(n_regions), n_times_(n_times), ordering_(ordering) {
  if (n_regions == 0 || n_times == 0) throw InvalidArgument("layout dimensions must be positive");
}

Index StLayout::flat(Index region, Index time) const {
  if (region >= n_regions_ || time >= n_times_) throw InvalidArgument("site index out of range");
  return ordering_ == Ordering::ByRegion ? region * n_times_ + time : time * n_regions_ + region;
}

Index StLayout::region_of(Index flat) const {
  return ordering_ == Ordering::ByRegion ? flat / n_times_ : flat % n_regions_;
}

Index StLayout::time_of(Index flat) const {
  return ordering_ == Ordering::ByRegion ? flat % n_times_ : flat / n_regions_;
}

std::vector<Index> StLayout::permutation_to(const StLayout& target) const {
  if (target.n_regions_ != n_regions_ || target.n_times_ != n_times_)
    throw InvalidArgument("layouts describe different lattices");
  std::vector<Index> perm(size());
  for (Index f = 0; f < size(); ++f) perm[f] = target.flat(region_of(f), time_of(f));
  return perm;
}

}  // namespace tgmrf
