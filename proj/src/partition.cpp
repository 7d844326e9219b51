#include "blockdep/partition.hpp"

#include <algorithm>

#include "blockdep/errors.hpp"

namespace blockdep {

std::size_t Partition::max_cell_size() const {
  std::size_t m = 0;
  for (const auto& cell : cells) m = std::max(m, cell.size());
  return m;
}

PartitionValidation validate(const Partition& partition, std::size_t d) {
  PartitionValidation report;
  report.max_cell_size = partition.max_cell_size();

  if (partition.p == 0) {
    report.first_violation = "p must be positive";
    return report;
  }
  std::vector<std::uint8_t> seen(partition.p, 0);
  std::size_t covered = 0;
  for (std::size_t j = 0; j < partition.cells.size(); ++j) {
    const auto& cell = partition.cells[j];
    if (cell.empty()) {
      report.first_violation = "cell " + std::to_string(j + 1) + " is empty";
      return report;
    }
    for (std::uint32_t idx : cell) {
      if (idx >= partition.p) {
        report.first_violation = "cell " + std::to_string(j + 1) +
                                 " contains index " + std::to_string(idx + 1) +
                                 " > p";
        return report;
      }
      if (seen[idx]) {
        report.first_violation = "overlap at index " + std::to_string(idx + 1);
        return report;
      }
      seen[idx] = 1;
      ++covered;
    }
  }
  if (covered != partition.p) {
    for (std::size_t i = 0; i < partition.p; ++i)
      if (!seen[i]) {
        report.first_violation = "index " + std::to_string(i + 1) + " uncovered";
        break;
      }
    return report;
  }
  report.invariants_ok = true;

  if (d == 0) {
    report.first_violation = "d must be positive";
    return report;
  }
  if (report.max_cell_size > d) {
    report.first_violation = "cell size " + std::to_string(report.max_cell_size) +
                             " > d = " + std::to_string(d);
    return report;
  }
  report.size_cap_ok = true;
  return report;
}

AlignedPartition merge_cells(const Partition& partition, std::size_t d) {
  const PartitionValidation report = validate(partition, d);
  if (!report.valid())
    throw ValidationError("merge_cells: invalid partition: " +
                          report.first_violation);
  if (d > partition.p)
    throw ValidationError("merge_cells: d exceeds p");

  const std::size_t threshold = d / 2 + 1;
  AlignedPartition out;
  out.d = d;

  // Large cells pass through; small cells queue up for concatenation.
  std::vector<std::size_t> small;
  for (std::size_t j = 0; j < partition.cells.size(); ++j) {
    if (partition.cells[j].size() >= threshold) {
      out.cells.push_back(partition.cells[j]);
      out.source_cells.push_back({j});
    } else {
      small.push_back(j);
    }
  }

  // Greedy concatenation in ascending original order: grow the current cell
  // until it reaches the threshold or the queue runs dry. At most the final
  // cell can end up below the threshold.
  std::size_t pos = 0;
  while (pos < small.size()) {
    std::vector<std::uint32_t> merged = partition.cells[small[pos]];
    std::vector<std::size_t> sources = {small[pos]};
    ++pos;
    while (merged.size() < threshold && pos < small.size()) {
      const auto& next = partition.cells[small[pos]];
      merged.insert(merged.end(), next.begin(), next.end());
      sources.push_back(small[pos]);
      ++pos;
    }
    out.cells.push_back(std::move(merged));
    out.source_cells.push_back(std::move(sources));
  }
  return out;
}

unsigned __int128 power_sum(const Partition& partition, unsigned m) {
  if (m == 0) throw ValidationError("power_sum: m must be >= 1");
  const PartitionValidation report = validate(partition, partition.p);
  if (!report.invariants_ok)
    throw ValidationError("power_sum: invalid partition: " +
                          report.first_violation);

  unsigned __int128 total = 0;
  for (const auto& cell : partition.cells) {
    unsigned __int128 term = 1;
    const unsigned __int128 b = cell.size();
    for (unsigned e = 0; e < m; ++e) {
      const unsigned __int128 next = term * b;
      if (b != 0 && next / b != term)
        throw ValidationError("power_sum: 128-bit overflow");
      term = next;
    }
    const unsigned __int128 prev = total;
    total += term;
    if (total < prev) throw ValidationError("power_sum: 128-bit overflow");
  }
  return total;
}

std::string u128_to_string(unsigned __int128 v) {
  if (v == 0) return "0";
  std::string s;
  while (v > 0) {
    s.push_back(static_cast<char>('0' + static_cast<int>(v % 10)));
    v /= 10;
  }
  std::reverse(s.begin(), s.end());
  return s;
}

}  // namespace blockdep
