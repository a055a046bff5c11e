#include "spgym/policy.hpp"

#include <bit>
#include <cstring>

#include "spgym/errors.hpp"

namespace spgym {

namespace {

constexpr std::uint64_t kFnvOffset = 0xCBF29CE484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001B3ULL;

// FNV-1a over 32-bit words with a final avalanche.
struct PixelHasher {
  std::uint64_t state = kFnvOffset;
  void add(std::uint32_t word) {
    state ^= word;
    state *= kFnvPrime;
  }
  void add(float f) { add(std::bit_cast<std::uint32_t>(f)); }
  std::uint64_t value() const {
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
};

// Hash of what cell `dst` shows when it holds the patch at `src`; mirrors the
// nearest-neighbour placement in render_image_obs.
std::uint64_t hash_placed_patch(const Image& image, const PatchRect& src, const PatchRect& dst) {
  PixelHasher h;
  h.add(static_cast<std::uint32_t>(dst.height));
  h.add(static_cast<std::uint32_t>(dst.width));
  for (int r = 0; r < dst.height; ++r) {
    const int sr = src.row0 + r * src.height / dst.height;
    for (int c = 0; c < dst.width; ++c) {
      const int sc = src.col0 + c * src.width / dst.width;
      for (int ch = 0; ch < image.channels; ++ch) h.add(image.at(sr, sc, ch));
    }
  }
  return h.value();
}

std::uint64_t hash_cell(const Observation& obs, const PatchRect& dst) {
  PixelHasher h;
  h.add(static_cast<std::uint32_t>(dst.height));
  h.add(static_cast<std::uint32_t>(dst.width));
  const int width = obs.shape[1];
  const int channels = obs.shape[2];
  for (int r = 0; r < dst.height; ++r) {
    for (int c = 0; c < dst.width; ++c) {
      const auto base = (static_cast<std::size_t>(dst.row0 + r) * static_cast<std::size_t>(width) +
                         static_cast<std::size_t>(dst.col0 + c)) *
                        static_cast<std::size_t>(channels);
      for (int ch = 0; ch < channels; ++ch) h.add(obs.data[base + static_cast<std::size_t>(ch)]);
    }
  }
  return h.value();
}

std::uint64_t hash_black_cell(const PatchRect& dst, int channels) {
  PixelHasher h;
  h.add(static_cast<std::uint32_t>(dst.height));
  h.add(static_cast<std::uint32_t>(dst.width));
  for (int i = 0; i < dst.height * dst.width * channels; ++i) h.add(0.0f);
  return h.value();
}

}  // namespace

Action RandomPolicy::act(const PolicyInput&) {
  return static_cast<Action>(rng_.uniform_below(4));
}

ScriptedPolicy::ScriptedPolicy(std::vector<Action> script) : script_(std::move(script)) {
  if (script_.empty()) throw ConfigError("scripted policy needs at least one action");
}

Action ScriptedPolicy::act(const PolicyInput&) {
  const Action a = script_[cursor_];
  cursor_ = (cursor_ + 1) % script_.size();
  return a;
}

Action SolverBackedPolicy::act(const PolicyInput& input) {
  const auto action = solver_.next_action(input.state);
  if (!action) throw DomainError("solver policy asked to act on a solved state");
  return *action;
}

PixelMemorizerPolicy::PixelMemorizerPolicy(const ImagePool& pool, GridDims dims,
                                           std::uint64_t fallback_seed, BlankFill blank_fill)
    : dims_(dims), fallback_(fallback_seed) {
  const int side = pool.render_size;
  const auto rects = patch_rects(side, side, dims);
  for (const Image& image : pool.images) {
    for (int tile = 0; tile < dims.cells(); ++tile) {
      const Cell goal = goal_position(tile, dims);
      const PatchRect& src = rects[static_cast<std::size_t>(goal.row * dims.width + goal.col)];
      for (const PatchRect& dst : rects) {
        if (tile == 0 && blank_fill != BlankFill::kSourcePatch) {
          if (blank_fill == BlankFill::kBlack) table_.emplace(hash_black_cell(dst, image.channels), 0);
          continue;
        }
        table_.emplace(hash_placed_patch(image, src, dst), static_cast<TileId>(tile));
      }
    }
  }
}

std::optional<PuzzleState> PixelMemorizerPolicy::recognize(const Observation& observation) const {
  if (observation.modality != Modality::kImage || observation.shape.size() != 3) return std::nullopt;
  const auto rects = patch_rects(observation.shape[0], observation.shape[1], dims_);
  std::vector<TileId> tiles(rects.size());
  int unknown = -1;
  std::vector<bool> seen(rects.size(), false);
  for (std::size_t cell = 0; cell < rects.size(); ++cell) {
    const auto it = table_.find(hash_cell(observation, rects[cell]));
    if (it == table_.end()) {
      if (unknown >= 0) return std::nullopt;
      unknown = static_cast<int>(cell);  // possibly an unrecognizable blank
      continue;
    }
    if (seen[it->second]) return std::nullopt;
    seen[it->second] = true;
    tiles[cell] = it->second;
  }
  if (unknown >= 0) {
    if (seen[0]) return std::nullopt;
    tiles[static_cast<std::size_t>(unknown)] = 0;
  }
  const PuzzleState state = PuzzleState::from_tiles(dims_, std::move(tiles));
  if (!is_solvable(state)) return std::nullopt;
  return state;
}

Action PixelMemorizerPolicy::act(const PolicyInput& input) {
  if (const auto state = recognize(input.observation); state && !is_solved(*state)) {
    ++hits_;
    return *solver_.next_action(*state);
  }
  ++misses_;
  return static_cast<Action>(fallback_.uniform_below(4));
}

PolicyFactory make_policy_factory(std::string_view name, const PolicyOptions& options) {
  const RandomSource root(options.seed);
  if (name == "random") {
    return [root](std::size_t env) { return std::make_unique<RandomPolicy>(root.derive(env).seed()); };
  }
  if (name == "scripted") {
    if (options.script.empty()) throw ConfigError("actions: scripted policy needs an action list");
    return [script = options.script](std::size_t) { return std::make_unique<ScriptedPolicy>(script); };
  }
  if (name == "solver") {
    return [budget = options.node_budget](std::size_t) { return std::make_unique<SolverBackedPolicy>(budget); };
  }
  if (name == "memorizer") {
    if (!options.pool) throw ConfigError("memorizer policy requires an image pool (image modality)");
    auto pool = options.pool;
    const GridDims dims = options.dims;
    const BlankFill fill = options.blank_fill;
    return [root, pool, dims, fill](std::size_t env) {
      return std::make_unique<PixelMemorizerPolicy>(*pool, dims, root.derive(env).seed(), fill);
    };
  }
  throw ConfigError("policy: unknown policy '" + std::string(name) + "' (expected " +
                    std::string(kPolicyNames) + ")");
}

}  // namespace spgym
