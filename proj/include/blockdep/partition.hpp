#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace blockdep {

/// Disjoint nonempty cells covering {0..p-1} (0-based internally; serialized
/// forms are 1-based). Dependence between coordinates is confined to a cell.
struct Partition {
  std::size_t p = 0;
  std::vector<std::vector<std::uint32_t>> cells;

  std::size_t max_cell_size() const;
};

struct PartitionValidation {
  bool invariants_ok = false;   // disjoint, covering, nonempty cells, indices in range
  bool size_cap_ok = false;     // max_j |B_j| <= d
  std::size_t max_cell_size = 0;
  std::string first_violation;  // empty when fully valid

  bool valid() const { return invariants_ok && size_cap_ok; }
};

/// Report-style check of the partition invariants and the size cap d.
PartitionValidation validate(const Partition& partition, std::size_t d);

/// Coarsening produced by the cell-merging pass: each cell is a union of
/// whole source cells, at most one cell has size <= floor(d/2), and the cell
/// count is at most 4p/d.
struct AlignedPartition {
  std::vector<std::vector<std::uint32_t>> cells;
  std::vector<std::vector<std::size_t>> source_cells;  // indices into the input
  std::size_t d = 0;

  std::size_t size() const { return cells.size(); }
};

/// Merge small cells until each merged cell reaches size floor(d/2)+1 (large
/// cells are copied through). Small cells are consumed in ascending original
/// index order, which makes the output deterministic.
/// Throws ValidationError when the partition is invalid for d.
AlignedPartition merge_cells(const Partition& partition, std::size_t d);

/// Exact sum of |B_j|^m in 128-bit arithmetic. Throws ValidationError for
/// m = 0 and on (astronomically large) overflow.
unsigned __int128 power_sum(const Partition& partition, unsigned m);

std::string u128_to_string(unsigned __int128 v);

}  // namespace blockdep
