#include "spgym/solver.hpp"

#include <array>
#include <cstdlib>
#include <sstream>

#include "json.hpp"

#include "spgym/errors.hpp"

namespace spgym {

int manhattan_heuristic(const PuzzleState& state) {
  return manhattan_numerator(state, RewardOptions{.include_blank = false});
}

namespace {

class IdaSearch {
 public:
  IdaSearch(const PuzzleState& start, std::uint64_t budget)
      : height_(start.dims().height), width_(start.dims().width), budget_(budget) {
    const int n = start.dims().cells();
    tiles_.assign(start.tiles().begin(), start.tiles().end());
    blank_ = start.blank_index();
    goal_row_.resize(static_cast<std::size_t>(n));
    goal_col_.resize(static_cast<std::size_t>(n));
    for (int t = 0; t < n; ++t) {
      const Cell g = goal_position(t, start.dims());
      goal_row_[static_cast<std::size_t>(t)] = g.row;
      goal_col_[static_cast<std::size_t>(t)] = g.col;
    }
    h_ = manhattan_heuristic(start);
  }

  SolveResult run() {
    SolveResult result;
    int bound = h_;
    while (true) {
      const int next = search(0, bound, std::nullopt);
      if (next == kFound) {
        result.path = path_;
        result.length = static_cast<int>(path_.size());
        break;
      }
      if (next == kAborted) {
        result.status = SolveStatus::kBudgetExhausted;
        break;
      }
      bound = next;
    }
    result.nodes_expanded = nodes_;
    return result;
  }

 private:
  static constexpr int kFound = -1;
  static constexpr int kAborted = -2;
  static constexpr int kInfinity = 1 << 30;

  int distance(int tile, int cell) const {
    return std::abs(cell / width_ - goal_row_[static_cast<std::size_t>(tile)]) +
           std::abs(cell % width_ - goal_col_[static_cast<std::size_t>(tile)]);
  }

  std::optional<int> target(Action a) const {
    const int row = blank_ / width_;
    const int col = blank_ % width_;
    switch (a) {
      case Action::kUp: return row + 1 < height_ ? std::optional(blank_ + width_) : std::nullopt;
      case Action::kDown: return row > 0 ? std::optional(blank_ - width_) : std::nullopt;
      case Action::kLeft: return col + 1 < width_ ? std::optional(blank_ + 1) : std::nullopt;
      case Action::kRight: return col > 0 ? std::optional(blank_ - 1) : std::nullopt;
    }
    return std::nullopt;
  }

  // Returns kFound, kAborted, or the smallest f that exceeded `bound`.
  int search(int g, int bound, std::optional<Action> previous) {
    const int f = g + h_;
    if (f > bound) return f;
    if (h_ == 0) return kFound;  // every tile home, so the blank is too
    if (++nodes_ > budget_) return kAborted;
    int minimum = kInfinity;
    for (Action a : kAllActions) {
      if (previous && *previous == opposite(a)) continue;
      const auto cell = target(a);
      if (!cell) continue;
      const int tile = tiles_[static_cast<std::size_t>(*cell)];
      const int delta = distance(tile, blank_) - distance(tile, *cell);
      const int old_blank = blank_;
      tiles_[static_cast<std::size_t>(blank_)] = static_cast<TileId>(tile);
      tiles_[static_cast<std::size_t>(*cell)] = 0;
      blank_ = *cell;
      h_ += delta;
      path_.push_back(a);

      const int t = search(g + 1, bound, a);
      if (t == kFound) return kFound;

      path_.pop_back();
      h_ -= delta;
      blank_ = old_blank;
      tiles_[static_cast<std::size_t>(*cell)] = static_cast<TileId>(tile);
      tiles_[static_cast<std::size_t>(blank_)] = 0;
      if (t == kAborted) return kAborted;
      if (t < minimum) minimum = t;
    }
    return minimum;
  }

  int height_;
  int width_;
  std::uint64_t budget_;
  std::vector<TileId> tiles_;
  std::vector<int> goal_row_;
  std::vector<int> goal_col_;
  int blank_ = 0;
  int h_ = 0;
  std::uint64_t nodes_ = 0;
  std::vector<Action> path_;
};

}  // namespace

SolveResult ida_star(const PuzzleState& start, std::uint64_t node_budget) {
  if (!is_solvable(start)) {
    throw DomainError("state " + start.to_string() + " is not solvable");
  }
  const auto t0 = std::chrono::steady_clock::now();
  SolveResult result = IdaSearch(start, node_budget).run();
  result.elapsed = std::chrono::steady_clock::now() - t0;
  return result;
}

std::optional<PuzzleState> replay(const PuzzleState& start, const std::vector<Action>& path) {
  PuzzleState state = start;
  for (Action a : path) {
    const auto target = blank_target(state, a);
    if (!target) return std::nullopt;
    state.swap_blank_with(*target);
  }
  return state;
}

std::uint64_t pack_state(const PuzzleState& state) {
  if (state.dims().cells() > 16) throw DomainError("nibble packing supports at most 16 cells");
  std::uint64_t key = 0;
  for (int i = 0; i < state.dims().cells(); ++i) {
    key |= static_cast<std::uint64_t>(state.tile_at(i)) << (4 * i);
  }
  return key;
}

PuzzleState unpack_state(std::uint64_t key, GridDims dims) {
  std::vector<TileId> tiles(static_cast<std::size_t>(dims.cells()));
  for (int i = 0; i < dims.cells(); ++i) tiles[static_cast<std::size_t>(i)] = static_cast<TileId>((key >> (4 * i)) & 0xF);
  return PuzzleState::from_tiles(dims, std::move(tiles));
}

DistanceTable DistanceTable::build(GridDims dims) {
  dims = GridDims::make(dims.height, dims.width);
  if (dims.cells() > kMaxEnumerationCells) {
    throw DomainError("exhaustive enumeration is limited to grids of at most " +
                      std::to_string(kMaxEnumerationCells) + " cells; " + dims.to_string() +
                      " has " + std::to_string(dims.cells()) + " (its state space is far too large)");
  }
  DistanceTable table;
  table.dims_ = dims;
  const PuzzleState solved = PuzzleState::solved(dims);
  std::vector<std::uint64_t> frontier{pack_state(solved)};
  table.depth_.emplace(frontier.front(), 0);
  std::uint8_t depth = 0;
  while (!frontier.empty()) {
    std::vector<std::uint64_t> next;
    ++depth;
    for (std::uint64_t key : frontier) {
      PuzzleState state = unpack_state(key, dims);
      for (Action a : kAllActions) {
        const auto target = blank_target(state, a);
        if (!target) continue;
        PuzzleState child = state;
        child.swap_blank_with(*target);
        const std::uint64_t child_key = pack_state(child);
        if (table.depth_.emplace(child_key, depth).second) next.push_back(child_key);
      }
    }
    frontier = std::move(next);
  }
  return table;
}

bool DistanceTable::contains(const PuzzleState& state) const {
  return state.dims() == dims_ && depth_.contains(pack_state(state));
}

int DistanceTable::depth(const PuzzleState& state) const {
  if (state.dims() != dims_) throw DomainError("state dims do not match the distance table");
  const auto it = depth_.find(pack_state(state));
  if (it == depth_.end()) throw DomainError("state " + state.to_string() + " is unreachable");
  return it->second;
}

std::optional<Action> DistanceTable::optimal_action(const PuzzleState& state) const {
  const int d = depth(state);
  if (d == 0) return std::nullopt;
  for (Action a : kAllActions) {
    const auto target = blank_target(state, a);
    if (!target) continue;
    PuzzleState child = state;
    child.swap_blank_with(*target);
    if (depth(child) == d - 1) return a;
  }
  return std::nullopt;
}

EnumerationReport summarize(const DistanceTable& table) {
  EnumerationReport report;
  report.dims = table.dims();
  report.state_count = table.size();
  for (const auto& [key, depth] : table.entries()) {
    if (report.depth_histogram.size() <= depth) report.depth_histogram.resize(depth + 1u, 0);
    ++report.depth_histogram[depth];
    report.total_depth += depth;
    report.max_depth = std::max<int>(report.max_depth, depth);
  }
  report.mean_optimal_length =
      static_cast<double>(report.total_depth) / static_cast<double>(report.state_count);
  return report;
}

EnumerationReport bfs_enumerate(GridDims dims) { return summarize(DistanceTable::build(dims)); }

std::string enumeration_json(const EnumerationReport& report) {
  nlohmann::ordered_json j;
  j["schema"] = "spgym.enumeration.v1";
  j["dims"] = report.dims.to_string();
  j["state_count"] = report.state_count;
  j["mean_optimal_length"] = report.mean_optimal_length;
  j["total_optimal_length"] = report.total_depth;
  j["max_depth"] = report.max_depth;
  nlohmann::ordered_json histogram = nlohmann::ordered_json::object();
  for (std::size_t d = 0; d < report.depth_histogram.size(); ++d) {
    histogram[std::to_string(d)] = report.depth_histogram[d];
  }
  j["depth_histogram"] = histogram;
  return j.dump(2) + "\n";
}

std::string enumeration_csv(const EnumerationReport& report) {
  std::ostringstream out;
  out << "depth,count\n";
  for (std::size_t d = 0; d < report.depth_histogram.size(); ++d) {
    out << d << "," << report.depth_histogram[d] << "\n";
  }
  return out.str();
}

std::optional<Action> SolverPolicy::next_action(const PuzzleState& state) {
  if (is_solved(state)) return std::nullopt;
  if (!expected_ || !(*expected_ == state) || cursor_ >= plan_.size()) {
    SolveResult result = ida_star(state, node_budget_);
    ++solves_;
    if (!result.solved()) {
      throw BudgetExhausted("IDA* exhausted its budget of " + std::to_string(node_budget_) +
                            " nodes on " + state.to_string());
    }
    plan_ = std::move(result.path);
    cursor_ = 0;
    expected_ = state;
  }
  const Action a = plan_[cursor_++];
  expected_->swap_blank_with(*blank_target(*expected_, a));
  return a;
}

}  // namespace spgym
