#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "spgym/random.hpp"

namespace spgym {

using TileId = std::uint16_t;

inline constexpr int kMaxGridCells = 64;

struct GridDims {
  int height = 3;
  int width = 3;

  /// Throws DomainError unless both sides are >= 2 and the cell count is at
  /// most `max_cells`.
  static GridDims make(int height, int width, int max_cells = kMaxGridCells);

  /// Parses "HxW" (e.g. "3x3").
  static GridDims parse(std::string_view text);

  int cells() const { return height * width; }
  std::string to_string() const;

  friend bool operator==(const GridDims&, const GridDims&) = default;
};

struct Cell {
  int row = 0;
  int col = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
};

/// Actions name the direction the moved TILE travels. UP slides the tile below
/// the blank upward, DOWN the tile above it downward, LEFT the tile to its
/// right leftward, RIGHT the tile to its left rightward.
enum class Action : std::uint8_t { kUp = 0, kDown = 1, kLeft = 2, kRight = 3 };

inline constexpr std::array<Action, 4> kAllActions = {Action::kUp, Action::kDown,
                                                      Action::kLeft, Action::kRight};

std::string_view action_name(Action action);
std::optional<Action> parse_action(std::string_view name);
Action opposite(Action action);

/// Permutation of tile ids over the grid in row-major order. Id 0 is the blank;
/// id k >= 1 belongs in cell k-1, and the blank belongs in the last cell.
class PuzzleState {
 public:
  static PuzzleState solved(GridDims dims);

  /// Validates that `tiles` is a permutation of 0..H*W-1 (DomainError
  /// otherwise). Solvability is NOT required here, so parity tests can build
  /// unreachable permutations; every other constructor yields solvable states.
  static PuzzleState from_tiles(GridDims dims, std::vector<TileId> tiles);

  /// Canonical text form "H,W:t0,t1,...".
  static PuzzleState parse(std::string_view text);
  std::string to_string() const;

  /// Canonical binary form: H, W, then the tiles, all uint16 little-endian.
  static PuzzleState from_bytes(std::span<const std::uint8_t> bytes);
  std::vector<std::uint8_t> to_bytes() const;

  const GridDims& dims() const { return dims_; }
  std::span<const TileId> tiles() const { return tiles_; }
  TileId tile_at(int index) const { return tiles_[static_cast<std::size_t>(index)]; }
  TileId tile_at(Cell cell) const { return tile_at(cell.row * dims_.width + cell.col); }
  int blank_index() const { return blank_index_; }
  Cell blank_cell() const { return {blank_index_ / dims_.width, blank_index_ % dims_.width}; }

  /// Swaps the blank with the tile at `index` without any adjacency check.
  void swap_blank_with(int index);
  void swap_cells(int a, int b);

  friend bool operator==(const PuzzleState& a, const PuzzleState& b) {
    return a.dims_ == b.dims_ && a.tiles_ == b.tiles_;
  }

 private:
  PuzzleState(GridDims dims, std::vector<TileId> tiles, int blank_index)
      : dims_(dims), tiles_(std::move(tiles)), blank_index_(blank_index) {}

  GridDims dims_;
  std::vector<TileId> tiles_;
  int blank_index_ = 0;
};

struct StepOutcome {
  PuzzleState next_state;
  double reward = 0.0;
  bool valid = false;
  bool solved = false;
  bool terminated = false;
  bool truncated = false;
};

struct RewardOptions {
  /// Count the blank's displacement in the normalized Manhattan numerator.
  bool include_blank = true;
};

Cell goal_position(int tile_id, GridDims dims);

bool is_solved(const PuzzleState& state);

/// Number of out-of-order pairs among non-blank tiles in row-major order.
std::int64_t inversion_count(std::span<const TileId> tiles);

/// Reachability from the solved state via the parity rule. For odd widths the
/// inversion count must be even. For even widths the inversion count plus the
/// blank's row counted from the bottom (0-based) must be even.
bool is_solvable(const PuzzleState& state);

PuzzleState sample_uniform_solvable(GridDims dims, RandomSource& rng);
PuzzleState shuffle_from_solved(GridDims dims, int num_moves, RandomSource& rng);

bool is_valid_action(const PuzzleState& state, Action action);
std::vector<Action> valid_actions(const PuzzleState& state);

/// Cell that the blank moves to when `action` is applied; nullopt if invalid.
std::optional<int> blank_target(const PuzzleState& state, Action action);

/// Sum over cells of |row - goal_row| + |col - goal_col|.
int manhattan_numerator(const PuzzleState& state, RewardOptions options = {});

/// Sum over 1-indexed (i, j) of max(i, H-i) + max(j, W-j).
int manhattan_denominator(GridDims dims);

/// The same sum written with 0-indexed i, j. Kept for the equivalence check.
int manhattan_denominator_zero_indexed(GridDims dims);

double normalized_manhattan(const PuzzleState& state, RewardOptions options = {});

/// One environment transition. Invalid actions leave the state unchanged and
/// cost -1; a solving move pays +1; any other valid move pays -D(next).
/// Invalid actions still count toward the step cap.
StepOutcome apply_action(const PuzzleState& state, Action action, int step_index,
                         int max_steps, RewardOptions options = {});

}  // namespace spgym
