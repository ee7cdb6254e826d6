#include "lsicert/partition.hpp"

#include "lsicert/errors.hpp"

#include <limits>
#include <string>

namespace lsicert {

namespace {
constexpr std::size_t kUnassigned = std::numeric_limits<std::size_t>::max();
}

BlockPartition::BlockPartition(std::vector<IndexList> blocks) : blocks_(std::move(blocks)) {
  if (blocks_.empty()) throw ValidationError("partition: at least one block is required");
  std::size_t total = 0;
  for (const auto& b : blocks_) {
    if (b.empty()) throw ValidationError("partition: blocks must be non-empty");
    total += b.size();
  }
  dim_ = static_cast<Index>(total);
  owner_.assign(total, kUnassigned);
  for (std::size_t k = 0; k < blocks_.size(); ++k) {
    for (Index i : blocks_[k]) {
      if (i < 0 || i >= dim_) {
        throw ValidationError("partition: index " + std::to_string(i) + " outside [0, " + std::to_string(dim_) + ")");
      }
      auto& slot = owner_[static_cast<std::size_t>(i)];
      if (slot != kUnassigned) {
        throw ValidationError("partition: index " + std::to_string(i) + " appears in more than one block");
      }
      slot = k;
    }
  }
  complements_.resize(blocks_.size());
  for (Index i = 0; i < dim_; ++i) {
    std::size_t owner = owner_[static_cast<std::size_t>(i)];
    for (std::size_t k = 0; k < blocks_.size(); ++k) {
      if (k != owner) complements_[k].push_back(i);
    }
  }
}

BlockPartition BlockPartition::singletons(Index dim) {
  std::vector<IndexList> blocks;
  blocks.reserve(static_cast<std::size_t>(dim));
  for (Index i = 0; i < dim; ++i) blocks.push_back({i});
  return BlockPartition(std::move(blocks));
}

}  // namespace lsicert
