#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "spgym/puzzle.hpp"

namespace spgym {

inline constexpr std::uint64_t kDefaultNodeBudget = 100'000'000;

/// Largest grid (in cells) that bfs_enumerate will expand. 3x3 has 181,440
/// reachable states; 4x4 would have about 10^13.
inline constexpr int kMaxEnumerationCells = 9;

enum class SolveStatus { kSolved, kBudgetExhausted };

struct SolveResult {
  SolveStatus status = SolveStatus::kSolved;
  std::vector<Action> path;
  int length = 0;
  std::uint64_t nodes_expanded = 0;
  std::chrono::nanoseconds elapsed{0};

  bool solved() const { return status == SolveStatus::kSolved; }
};

class BudgetExhausted : public std::runtime_error {
 public:
  explicit BudgetExhausted(const std::string& what) : std::runtime_error(what) {}
};

/// Sum of Manhattan distances of the non-blank tiles to their goal cells.
/// Admissible and consistent for unit-cost moves.
int manhattan_heuristic(const PuzzleState& state);

/// Iterative-deepening A* on f = g + manhattan_heuristic. Children are tried in
/// UP, DOWN, LEFT, RIGHT order and the immediate reversal is pruned, so the
/// returned path is deterministic. Throws DomainError for unsolvable input.
SolveResult ida_star(const PuzzleState& start, std::uint64_t node_budget = kDefaultNodeBudget);

/// Replays `path` from `start`; nullopt if any move is invalid.
std::optional<PuzzleState> replay(const PuzzleState& start, const std::vector<Action>& path);

/// 4 bits per cell, cell 0 in the low nibble. Requires H*W <= 16.
std::uint64_t pack_state(const PuzzleState& state);
PuzzleState unpack_state(std::uint64_t key, GridDims dims);

/// Exact optimal distance to the solved state for every reachable state.
class DistanceTable {
 public:
  /// Breadth-first expansion from the solved state. Throws DomainError when
  /// H*W > kMaxEnumerationCells.
  static DistanceTable build(GridDims dims);

  const GridDims& dims() const { return dims_; }
  std::size_t size() const { return depth_.size(); }
  bool contains(const PuzzleState& state) const;
  /// Throws DomainError if the state is unreachable.
  int depth(const PuzzleState& state) const;
  /// First action in UP, DOWN, LEFT, RIGHT order that reduces the depth.
  std::optional<Action> optimal_action(const PuzzleState& state) const;

  const std::unordered_map<std::uint64_t, std::uint8_t>& entries() const { return depth_; }

 private:
  GridDims dims_;
  std::unordered_map<std::uint64_t, std::uint8_t> depth_;
};

struct EnumerationReport {
  GridDims dims;
  std::uint64_t state_count = 0;
  /// depth_histogram[d] = number of states at optimal distance d.
  std::vector<std::uint64_t> depth_histogram;
  /// Sum of all optimal lengths; the mean is exactly total_depth / state_count.
  std::uint64_t total_depth = 0;
  double mean_optimal_length = 0.0;
  int max_depth = 0;
};

EnumerationReport summarize(const DistanceTable& table);
EnumerationReport bfs_enumerate(GridDims dims);

std::string enumeration_json(const EnumerationReport& report);
/// "depth,count" header, one row per depth.
std::string enumeration_csv(const EnumerationReport& report);

/// Optimal-play policy backed by IDA*. Keeps the last solution and replays it
/// while the observed state follows the plan; anything else triggers a re-solve.
class SolverPolicy {
 public:
  explicit SolverPolicy(std::uint64_t node_budget = kDefaultNodeBudget) : node_budget_(node_budget) {}

  /// nullopt for an already solved state. Throws BudgetExhausted when IDA*
  /// runs out of nodes and DomainError for unsolvable states.
  std::optional<Action> next_action(const PuzzleState& state);

  std::uint64_t solves() const { return solves_; }

 private:
  std::uint64_t node_budget_;
  std::vector<Action> plan_;
  std::size_t cursor_ = 0;
  std::optional<PuzzleState> expected_;
  std::uint64_t solves_ = 0;
};

}  // namespace spgym
