#include "spgym/puzzle.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <sstream>

#include "spgym/errors.hpp"

namespace spgym {

namespace {

int parse_int(std::string_view text, std::string_view what) {
  int value = 0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || text.empty()) {
    throw DomainError("invalid " + std::string(what) + ": '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace

GridDims GridDims::make(int height, int width, int max_cells) {
  if (height < 2 || width < 2) {
    throw DomainError("grid sides must be at least 2, got " + std::to_string(height) + "x" +
                      std::to_string(width));
  }
  if (height * width > max_cells) {
    throw DomainError("grid " + std::to_string(height) + "x" + std::to_string(width) +
                      " exceeds the maximum of " + std::to_string(max_cells) + " cells");
  }
  return GridDims{height, width};
}

GridDims GridDims::parse(std::string_view text) {
  const auto x = text.find_first_of("xX");
  if (x == std::string_view::npos) {
    throw DomainError("grid dims must look like HxW, got '" + std::string(text) + "'");
  }
  return make(parse_int(text.substr(0, x), "grid height"),
              parse_int(text.substr(x + 1), "grid width"));
}

std::string GridDims::to_string() const {
  return std::to_string(height) + "x" + std::to_string(width);
}

std::string_view action_name(Action action) {
  switch (action) {
    case Action::kUp: return "UP";
    case Action::kDown: return "DOWN";
    case Action::kLeft: return "LEFT";
    case Action::kRight: return "RIGHT";
  }
  return "?";
}

std::optional<Action> parse_action(std::string_view name) {
  for (Action a : kAllActions) {
    const auto canonical = action_name(a);
    if (name.size() == canonical.size() &&
        std::equal(name.begin(), name.end(), canonical.begin(),
                   [](char x, char y) { return std::toupper(static_cast<unsigned char>(x)) == y; })) {
      return a;
    }
  }
  if (name.size() == 1 && name[0] >= '0' && name[0] <= '3') {
    return static_cast<Action>(name[0] - '0');
  }
  return std::nullopt;
}

Action opposite(Action action) {
  switch (action) {
    case Action::kUp: return Action::kDown;
    case Action::kDown: return Action::kUp;
    case Action::kLeft: return Action::kRight;
    case Action::kRight: return Action::kLeft;
  }
  return action;
}

PuzzleState PuzzleState::solved(GridDims dims) {
  const int n = dims.cells();
  std::vector<TileId> tiles(static_cast<std::size_t>(n));
  for (int i = 0; i + 1 < n; ++i) tiles[static_cast<std::size_t>(i)] = static_cast<TileId>(i + 1);
  tiles.back() = 0;
  return PuzzleState(dims, std::move(tiles), n - 1);
}

PuzzleState PuzzleState::from_tiles(GridDims dims, std::vector<TileId> tiles) {
  dims = GridDims::make(dims.height, dims.width);
  const auto n = static_cast<std::size_t>(dims.cells());
  if (tiles.size() != n) {
    throw DomainError("expected " + std::to_string(n) + " tiles for a " + dims.to_string() +
                      " grid, got " + std::to_string(tiles.size()));
  }
  std::vector<bool> seen(n, false);
  int blank = -1;
  for (std::size_t i = 0; i < n; ++i) {
    const TileId t = tiles[i];
    if (t >= n || seen[t]) {
      throw DomainError("tiles are not a permutation of 0.." + std::to_string(n - 1));
    }
    seen[t] = true;
    if (t == 0) blank = static_cast<int>(i);
  }
  return PuzzleState(dims, std::move(tiles), blank);
}

PuzzleState PuzzleState::parse(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) {
    throw DomainError("state must look like H,W:t0,t1,..., got '" + std::string(text) + "'");
  }
  const auto header = text.substr(0, colon);
  const auto comma = header.find(',');
  if (comma == std::string_view::npos) {
    throw DomainError("state header must be H,W");
  }
  const GridDims dims = GridDims::make(parse_int(header.substr(0, comma), "grid height"),
                                       parse_int(header.substr(comma + 1), "grid width"));
  std::vector<TileId> tiles;
  auto body = text.substr(colon + 1);
  while (!body.empty()) {
    const auto next = body.find(',');
    const int id = parse_int(body.substr(0, next), "tile id");
    if (id < 0 || id >= dims.cells()) throw DomainError("tile id out of range: " + std::to_string(id));
    tiles.push_back(static_cast<TileId>(id));
    if (next == std::string_view::npos) break;
    body = body.substr(next + 1);
  }
  return from_tiles(dims, std::move(tiles));
}

std::string PuzzleState::to_string() const {
  std::string out = std::to_string(dims_.height) + "," + std::to_string(dims_.width) + ":";
  for (std::size_t i = 0; i < tiles_.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(tiles_[i]);
  }
  return out;
}

PuzzleState PuzzleState::from_bytes(std::span<const std::uint8_t> bytes) {
  auto read16 = [&](std::size_t offset) {
    return static_cast<std::uint16_t>(bytes[offset] | (bytes[offset + 1] << 8));
  };
  if (bytes.size() < 4) throw DomainError("binary state shorter than its header");
  const GridDims dims = GridDims::make(read16(0), read16(2));
  const auto n = static_cast<std::size_t>(dims.cells());
  if (bytes.size() != 4 + 2 * n) throw DomainError("binary state has the wrong length");
  std::vector<TileId> tiles(n);
  for (std::size_t i = 0; i < n; ++i) tiles[i] = read16(4 + 2 * i);
  return from_tiles(dims, std::move(tiles));
}

std::vector<std::uint8_t> PuzzleState::to_bytes() const {
  std::vector<std::uint8_t> out;
  out.reserve(4 + 2 * tiles_.size());
  auto put16 = [&](unsigned v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
  };
  put16(static_cast<unsigned>(dims_.height));
  put16(static_cast<unsigned>(dims_.width));
  for (TileId t : tiles_) put16(t);
  return out;
}

void PuzzleState::swap_blank_with(int index) {
  std::swap(tiles_[static_cast<std::size_t>(blank_index_)], tiles_[static_cast<std::size_t>(index)]);
  blank_index_ = index;
}

void PuzzleState::swap_cells(int a, int b) {
  std::swap(tiles_[static_cast<std::size_t>(a)], tiles_[static_cast<std::size_t>(b)]);
  if (blank_index_ == a) {
    blank_index_ = b;
  } else if (blank_index_ == b) {
    blank_index_ = a;
  }
}

Cell goal_position(int tile_id, GridDims dims) {
  const int n = dims.cells();
  if (tile_id < 0 || tile_id >= n) {
    throw DomainError("tile id " + std::to_string(tile_id) + " out of range for " +
                      dims.to_string());
  }
  const int index = tile_id == 0 ? n - 1 : tile_id - 1;
  return {index / dims.width, index % dims.width};
}

bool is_solved(const PuzzleState& state) {
  const auto tiles = state.tiles();
  const auto n = tiles.size();
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (tiles[i] != i + 1) return false;
  }
  return tiles[n - 1] == 0;
}

std::int64_t inversion_count(std::span<const TileId> tiles) {
  std::int64_t inversions = 0;
  for (std::size_t i = 0; i < tiles.size(); ++i) {
    if (tiles[i] == 0) continue;
    for (std::size_t j = i + 1; j < tiles.size(); ++j) {
      if (tiles[j] != 0 && tiles[j] < tiles[i]) ++inversions;
    }
  }
  return inversions;
}

bool is_solvable(const PuzzleState& state) {
  const auto& dims = state.dims();
  const std::int64_t inversions = inversion_count(state.tiles());
  if (dims.width % 2 == 1) return inversions % 2 == 0;
  const int blank_row_from_bottom = dims.height - 1 - state.blank_cell().row;
  return (inversions + blank_row_from_bottom) % 2 == 0;
}

namespace {

// Swaps the first two non-blank tiles in row-major order. Flips the
// inversion parity while leaving the blank in place.
void flip_parity(PuzzleState& state) {
  int first = -1;
  for (int i = 0; i < state.dims().cells(); ++i) {
    if (state.tile_at(i) == 0) continue;
    if (first < 0) {
      first = i;
    } else {
      state.swap_cells(first, i);
      return;
    }
  }
}

}  // namespace

PuzzleState sample_uniform_solvable(GridDims dims, RandomSource& rng) {
  PuzzleState state = PuzzleState::solved(dims);
  // Fisher-Yates over all ids, blank included.
  for (int i = dims.cells() - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(i) + 1));
    state.swap_cells(i, j);
  }
  if (!is_solvable(state)) flip_parity(state);
  return state;
}

PuzzleState shuffle_from_solved(GridDims dims, int num_moves, RandomSource& rng) {
  if (num_moves < 0) throw DomainError("num_moves must be non-negative");
  PuzzleState state = PuzzleState::solved(dims);
  for (int m = 0; m < num_moves; ++m) {
    const auto actions = valid_actions(state);
    const Action a = actions[rng.uniform_below(actions.size())];
    state.swap_blank_with(*blank_target(state, a));
  }
  return state;
}

std::optional<int> blank_target(const PuzzleState& state, Action action) {
  const auto& dims = state.dims();
  const Cell blank = state.blank_cell();
  switch (action) {
    case Action::kUp:  // tile below moves up
      if (blank.row + 1 >= dims.height) return std::nullopt;
      return state.blank_index() + dims.width;
    case Action::kDown:  // tile above moves down
      if (blank.row == 0) return std::nullopt;
      return state.blank_index() - dims.width;
    case Action::kLeft:  // tile to the right moves left
      if (blank.col + 1 >= dims.width) return std::nullopt;
      return state.blank_index() + 1;
    case Action::kRight:  // tile to the left moves right
      if (blank.col == 0) return std::nullopt;
      return state.blank_index() - 1;
  }
  return std::nullopt;
}

bool is_valid_action(const PuzzleState& state, Action action) {
  return blank_target(state, action).has_value();
}

std::vector<Action> valid_actions(const PuzzleState& state) {
  std::vector<Action> out;
  for (Action a : kAllActions) {
    if (is_valid_action(state, a)) out.push_back(a);
  }
  return out;
}

int manhattan_numerator(const PuzzleState& state, RewardOptions options) {
  const auto& dims = state.dims();
  int total = 0;
  for (int i = 0; i < dims.cells(); ++i) {
    const int tile = state.tile_at(i);
    if (tile == 0 && !options.include_blank) continue;
    const Cell goal = goal_position(tile, dims);
    total += std::abs(i / dims.width - goal.row) + std::abs(i % dims.width - goal.col);
  }
  return total;
}

int manhattan_denominator(GridDims dims) {
  const int h = dims.height;
  const int w = dims.width;
  int total = 0;
  for (int i = 1; i <= h; ++i) {
    for (int j = 1; j <= w; ++j) total += std::max(i, h - i) + std::max(j, w - j);
  }
  return total;
}

int manhattan_denominator_zero_indexed(GridDims dims) {
  const int h = dims.height;
  const int w = dims.width;
  int total = 0;
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) total += std::max(i, h - i) + std::max(j, w - j);
  }
  return total;
}

double normalized_manhattan(const PuzzleState& state, RewardOptions options) {
  return static_cast<double>(manhattan_numerator(state, options)) /
         static_cast<double>(manhattan_denominator(state.dims()));
}

StepOutcome apply_action(const PuzzleState& state, Action action, int step_index, int max_steps,
                         RewardOptions options) {
  StepOutcome out{state};
  const auto target = blank_target(state, action);
  if (!target) {
    out.reward = -1.0;
  } else {
    out.valid = true;
    out.next_state.swap_blank_with(*target);
    out.solved = is_solved(out.next_state);
    out.terminated = out.solved;
    out.reward = out.solved ? 1.0 : -normalized_manhattan(out.next_state, options);
  }
  out.truncated = !out.solved && step_index + 1 >= max_steps;
  return out;
}

}  // namespace spgym
