#pragma once

#include <cstddef>
#include <istream>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace tgmrf {

using Index = std::size_t;
using EdgeList = std::vector<std::pair<Index, Index>>;

namespace detail {

// Undirected simple graph stored as sorted adjacency lists.
class AdjacencyGraph {
 public:
  AdjacencyGraph() = default;
  AdjacencyGraph(Index n_nodes, const EdgeList& edges);

  Index size() const noexcept { return adjacency_.size(); }
  Index edge_count() const noexcept { return edge_count_; }
  Index degree(Index node) const;
  std::span<const Index> neighbors(Index node) const;
  bool adjacent(Index a, Index b) const;

  // Each unordered edge once, as (low, high), sorted.
  EdgeList edges() const;

  bool operator==(const AdjacencyGraph& other) const = default;

 private:
  std::vector<std::vector<Index>> adjacency_;
  Index edge_count_ = 0;
};

}  // namespace detail

/// Region adjacency W. Symmetric 0/1, no self-edges.
class SpatialGraph : public detail::AdjacencyGraph {
 public:
  using AdjacencyGraph::AdjacencyGraph;
  Index n_regions() const noexcept { return size(); }
  bool operator==(const SpatialGraph& other) const = default;
};

/// Time adjacency V. Symmetric 0/1, no self-edges.
class TemporalGraph : public detail::AdjacencyGraph {
 public:
  using AdjacencyGraph::AdjacencyGraph;
  Index n_times() const noexcept { return size(); }
  bool operator==(const TemporalGraph& other) const = default;
};

enum class GridNeighborhood { Rook, Queen };

SpatialGraph grid_graph(Index rows, Index cols, GridNeighborhood hood = GridNeighborhood::Rook);

/// Order-1 path over time slices: edges (t, t+1).
TemporalGraph path_graph(Index n_times);

/// Builds a deduplicated symmetric graph. Self-pairs and out-of-range
/// indices raise IngestionError naming the (1-based) offending pair.
SpatialGraph from_edge_list(Index n_regions, const EdgeList& pairs);

enum class IndexBase { Zero = 0, One = 1 };

/// Parses `i k` lines (whitespace separated, `#` comments). With
/// `n_regions == 0` the region count is inferred from the largest index.
/// Errors carry the file line number.
SpatialGraph read_edge_list(std::istream& in, IndexBase base = IndexBase::Zero, Index n_regions = 0);
SpatialGraph read_edge_list_file(const std::string& path, IndexBase base = IndexBase::Zero,
                                 Index n_regions = 0);

/// Total neighbour count D_it of site (i, t): spatial + temporal + cross.
Index st_degree(const SpatialGraph& sp, const TemporalGraph& tp, Index region, Index time);

enum class Ordering { ByRegion, ByTime };

/// Bijection between (region, time) pairs and flat indices in [0, nT).
///   ByRegion: flat = region * T + time   (all times of one region contiguous)
///   ByTime:   flat = time * n + region   (one spatial map per time slice)
class StLayout {
 public:
  StLayout(Index n_regions, Index n_times, Ordering ordering);

  Index n_regions() const noexcept { return n_regions_; }
  Index n_times() const noexcept { return n_times_; }
  Index size() const noexcept { return n_regions_ * n_times_; }
  Ordering ordering() const noexcept { return ordering_; }

  Index flat(Index region, Index time) const;
  Index region_of(Index flat) const;
  Index time_of(Index flat) const;

  StLayout with_ordering(Ordering ordering) const { return {n_regions_, n_times_, ordering}; }

  /// perm[f] = index in `target` of the site stored at f in this layout.
  std::vector<Index> permutation_to(const StLayout& target) const;

  bool operator==(const StLayout& other) const = default;

 private:
  Index n_regions_;
  Index n_times_;
  Ordering ordering_;
};

}  // namespace tgmrf
