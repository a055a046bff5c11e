#include "spgym/env.hpp"

#include "spgym/errors.hpp"

namespace spgym {

namespace {

constexpr std::uint64_t kAugmentStream = 0xA5;

}  // namespace

PuzzleEnv::PuzzleEnv(EnvConfig config, std::shared_ptr<const ImagePool> pool, std::uint64_t seed)
    : config_(std::move(config)),
      pool_(std::move(pool)),
      rng_(seed),
      augment_rng_(RandomSource(seed).derive(kAugmentStream)),
      state_(PuzzleState::solved(config_.dims)) {
  config_.dims = GridDims::make(config_.dims.height, config_.dims.width);
  if (config_.max_episode_steps < 1) throw ConfigError("max_episode_steps must be positive");
  if (config_.init == InitMethod::kShuffle && config_.shuffle_moves < 1) {
    throw ConfigError("shuffle_moves must be positive");
  }
  if (config_.obs.modality == Modality::kImage) {
    if (!pool_ || pool_->size() == 0) throw ConfigError("dataset_dir: image modality requires an image pool");
    for (const auto& spec : config_.augment) spec.validate(pool_->render_size);
  }
}

std::vector<int> PuzzleEnv::observation_shape() const {
  const int n = config_.dims.cells();
  switch (config_.obs.modality) {
    case Modality::kImage: return {pool_->render_size, pool_->render_size, 3};
    case Modality::kOneHot: return {n, n};
    case Modality::kState: return {n};
  }
  return {};
}

Observation PuzzleEnv::render(const PuzzleState& state, RandomSource& augment_rng) const {
  if (!render_) return {};
  const Image* image = config_.obs.modality == Modality::kImage ? &pool_->images[image_index_] : nullptr;
  Observation obs = render_observation(state, config_.obs, image);
  if (config_.obs.modality == Modality::kImage && !config_.augment.empty()) {
    obs = Observation::from_image(apply_augments(obs.to_image(), config_.augment, augment_rng));
  }
  return obs;
}

EnvInfo PuzzleEnv::info(bool valid) const {
  return EnvInfo{state_.to_string(), image_index_, step_index_, valid};
}

std::pair<Observation, EnvInfo> PuzzleEnv::reset(std::optional<std::uint64_t> seed) {
  if (seed) {
    rng_ = RandomSource(*seed);
    augment_rng_ = RandomSource(*seed).derive(kAugmentStream);
  }
  // Solved starts are redrawn: an episode always needs at least one move.
  do {
    state_ = config_.init == InitMethod::kUniform
                 ? sample_uniform_solvable(config_.dims, rng_)
                 : shuffle_from_solved(config_.dims, config_.shuffle_moves, rng_);
  } while (is_solved(state_));
  // Drawn for every modality so the state stream does not depend on it.
  image_index_ = pool_ ? select_episode_image(*pool_, rng_) : static_cast<std::size_t>(rng_.uniform_below(1));
  step_index_ = 0;
  started_ = true;
  done_ = false;
  observation_ = render(state_, augment_rng_);
  return {observation_, info(true)};
}

PendingStep PuzzleEnv::preview(Action action) const {
  if (!started_) throw DomainError("step called before reset");
  if (done_) throw DomainError("step called on a finished episode; call reset");
  PendingStep pending{action, apply_action(state_, action, step_index_, config_.max_episode_steps, config_.reward),
                      {}, augment_rng_};
  pending.observation = render(pending.outcome.next_state, pending.augment_rng);
  return pending;
}

StepResult PuzzleEnv::commit(PendingStep pending) {
  state_ = std::move(pending.outcome.next_state);
  observation_ = std::move(pending.observation);
  augment_rng_ = pending.augment_rng;
  ++step_index_;
  done_ = pending.outcome.terminated || pending.outcome.truncated;
  return StepResult{observation_, pending.outcome.reward, pending.outcome.terminated,
                    pending.outcome.truncated, info(pending.outcome.valid)};
}

StepResult PuzzleEnv::step(Action action) { return commit(preview(action)); }

StepResult PuzzleEnv::step(int action_id) {
  if (action_id < 0 || action_id > 3) {
    throw DomainError("action id must lie in 0..3, got " + std::to_string(action_id));
  }
  return step(static_cast<Action>(action_id));
}

}  // namespace spgym
