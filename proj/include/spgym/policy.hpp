#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "spgym/observation.hpp"
#include "spgym/puzzle.hpp"
#include "spgym/random.hpp"
#include "spgym/solver.hpp"

namespace spgym {

/// What a policy sees each step. `state` is the ground truth that environments
/// also expose through their info channel; pixel-based policies ignore it.
struct PolicyInput {
  const Observation& observation;
  const PuzzleState& state;
  int step_index = 0;
};

class Policy {
 public:
  virtual ~Policy() = default;
  virtual Action act(const PolicyInput& input) = 0;
  /// False lets the harness skip rendering entirely.
  virtual bool needs_observation() const { return true; }
};

/// Builds one policy per parallel environment.
using PolicyFactory = std::function<std::unique_ptr<Policy>(std::size_t env_index)>;

/// Uniform over all four actions, invalid ones included.
class RandomPolicy : public Policy {
 public:
  explicit RandomPolicy(std::uint64_t seed) : rng_(seed) {}
  Action act(const PolicyInput&) override;
  bool needs_observation() const override { return false; }

 private:
  RandomSource rng_;
};

/// Cycles through a fixed action sequence.
class ScriptedPolicy : public Policy {
 public:
  explicit ScriptedPolicy(std::vector<Action> script);
  Action act(const PolicyInput&) override;
  bool needs_observation() const override { return false; }

 private:
  std::vector<Action> script_;
  std::size_t cursor_ = 0;
};

/// Plays optimally from the true state via IDA*.
class SolverBackedPolicy : public Policy {
 public:
  explicit SolverBackedPolicy(std::uint64_t node_budget = kDefaultNodeBudget) : solver_(node_budget) {}
  Action act(const PolicyInput& input) override;
  bool needs_observation() const override { return false; }

 private:
  SolverPolicy solver_;
};

/// Diagnostic policy that memorizes exact pixels. It hashes every patch of
/// every pool image as it would appear in each grid cell and maps the hash to
/// its tile id. At act time it looks up each observed cell; if the lookups
/// reconstruct a solvable state it plays the optimal move, otherwise it falls
/// back to a uniformly random action. Any pixel change (unseen images,
/// inversion, recoloring) defeats the lookup.
class PixelMemorizerPolicy : public Policy {
 public:
  PixelMemorizerPolicy(const ImagePool& pool, GridDims dims, std::uint64_t fallback_seed,
                       BlankFill blank_fill = BlankFill::kBlack);
  Action act(const PolicyInput& input) override;

  /// The state recovered from pixels, if every cell was recognized.
  std::optional<PuzzleState> recognize(const Observation& observation) const;
  std::size_t table_size() const { return table_.size(); }
  std::uint64_t hits() const { return hits_; }
  std::uint64_t misses() const { return misses_; }

 private:
  GridDims dims_;
  std::unordered_map<std::uint64_t, TileId> table_;
  RandomSource fallback_;
  SolverPolicy solver_;
  std::uint64_t hits_ = 0;
  std::uint64_t misses_ = 0;
};

/// Names accepted by make_policy_factory.
inline constexpr std::string_view kPolicyNames = "random, scripted, solver, memorizer";

struct PolicyOptions {
  std::uint64_t seed = 0;
  std::vector<Action> script{Action::kUp};
  std::uint64_t node_budget = kDefaultNodeBudget;
  /// Required by "memorizer": the training pool to memorize.
  std::shared_ptr<const ImagePool> pool;
  GridDims dims{3, 3};
  BlankFill blank_fill = BlankFill::kBlack;
};

/// Throws ConfigError for unknown names or missing options.
PolicyFactory make_policy_factory(std::string_view name, const PolicyOptions& options);

}  // namespace spgym
