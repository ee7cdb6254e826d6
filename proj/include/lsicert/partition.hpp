#pragma once

#include "lsicert/linalg.hpp"

#include <vector>

namespace lsicert {

/// An ordered partition of the coordinates [0, N) into non-empty blocks.
/// Coordinates are 0-based everywhere, including model files.
class BlockPartition {
 public:
  /// Throws ValidationError unless the blocks are non-empty, pairwise
  /// disjoint and cover [0, N) exactly, with N the total element count.
  explicit BlockPartition(std::vector<IndexList> blocks);

  static BlockPartition singletons(Index dim);

  Index dim() const { return dim_; }
  std::size_t block_count() const { return blocks_.size(); }
  const std::vector<IndexList>& blocks() const { return blocks_; }
  const IndexList& block(std::size_t k) const { return blocks_.at(k); }
  Index block_size(std::size_t k) const { return static_cast<Index>(blocks_.at(k).size()); }

  /// Coordinates outside block k, in increasing order.
  const IndexList& complement(std::size_t k) const { return complements_.at(k); }

  std::size_t block_of(Index i) const { return owner_.at(static_cast<std::size_t>(i)); }

 private:
  std::vector<IndexList> blocks_;
  std::vector<IndexList> complements_;
  std::vector<std::size_t> owner_;
  Index dim_ = 0;
};

}  // namespace lsicert
