#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "spgym/augment.hpp"
#include "spgym/observation.hpp"
#include "spgym/puzzle.hpp"
#include "spgym/random.hpp"

namespace spgym {

enum class InitMethod {
  kUniform,  // parity-fixed uniform permutation
  kShuffle,  // random walk of `shuffle_moves` valid moves from solved
};

struct EnvConfig {
  GridDims dims{3, 3};
  ObsSpec obs{};
  int max_episode_steps = 1000;
  InitMethod init = InitMethod::kUniform;
  int shuffle_moves = 20;
  RewardOptions reward{};
  /// Applied to every image observation, redrawn on each render.
  std::vector<AugmentSpec> augment;
};

struct EnvInfo {
  std::string state;  // canonical text form of the true state
  std::size_t image_index = 0;
  int step_index = 0;
  bool valid = true;  // whether the last action moved a tile
};

struct StepResult {
  Observation observation;
  double reward = 0.0;
  bool terminated = false;
  bool truncated = false;
  EnvInfo info;
};

/// A transition computed but not yet applied; see PuzzleEnv::preview.
struct PendingStep {
  Action action = Action::kUp;
  StepOutcome outcome;
  Observation observation;
  RandomSource augment_rng;
};

/// One sliding-puzzle environment instance with the reset/step contract used by
/// the harness and by foreign-language bindings. Single owner; distinct
/// instances share only the immutable image pool.
///
/// Randomness: start states and episode images come from a stream seeded with
/// `seed`; augmentation draws come from an independent child stream, so
/// switching rendering off never changes the state trajectory.
class PuzzleEnv {
 public:
  PuzzleEnv(EnvConfig config, std::shared_ptr<const ImagePool> pool, std::uint64_t seed);

  /// Starts a new episode. A seed re-seeds both streams first.
  std::pair<Observation, EnvInfo> reset(std::optional<std::uint64_t> seed = std::nullopt);

  /// Throws DomainError if called before reset or after the episode ended.
  StepResult step(Action action);
  /// Integer action id (0..3 = UP, DOWN, LEFT, RIGHT).
  StepResult step(int action_id);

  /// Computes the transition for `action` without changing the environment.
  PendingStep preview(Action action) const;
  StepResult commit(PendingStep pending);

  const PuzzleState& state() const { return state_; }
  const Observation& observation() const { return observation_; }
  std::size_t image_index() const { return image_index_; }
  int step_index() const { return step_index_; }
  bool episode_over() const { return done_; }
  bool started() const { return started_; }
  const EnvConfig& config() const { return config_; }
  std::vector<int> observation_shape() const;

  /// With rendering off, observations are left empty (for state-reading
  /// policies that never look at pixels).
  void set_render(bool enabled) { render_ = enabled; }

 private:
  Observation render(const PuzzleState& state, RandomSource& augment_rng) const;
  EnvInfo info(bool valid) const;

  EnvConfig config_;
  std::shared_ptr<const ImagePool> pool_;
  RandomSource rng_;
  RandomSource augment_rng_;
  PuzzleState state_;
  Observation observation_;
  std::size_t image_index_ = 0;
  int step_index_ = 0;
  bool started_ = false;
  bool done_ = false;
  bool render_ = true;
};

}  // namespace spgym
