#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "spgym/augment.hpp"
#include "spgym/env.hpp"
#include "spgym/observation.hpp"
#include "spgym/policy.hpp"
#include "spgym/puzzle.hpp"

namespace spgym {

inline constexpr int kOodEpisodes = 100;
inline constexpr int kHeldoutPoolLimit = 100;

struct EarlyTermination {
  bool enabled = true;
  int window = 100;       // consecutive completed episodes
  double success = 1.0;   // required success fraction over the window
};

struct RunConfig {
  GridDims dims{3, 3};
  int pool_size = 1;
  std::uint64_t pool_seed = 0;
  std::filesystem::path dataset_dir;
  std::filesystem::path heldout_dir;
  Modality modality = Modality::kImage;
  /// 0 picks 84, or 100 when a crop augmentation is configured.
  int render_size = 0;
  BlankFill blank_fill = BlankFill::kBlack;
  int num_envs = 64;
  int max_episode_steps = 1000;
  std::uint64_t total_step_cap = 10'000'000;
  std::uint64_t seed = 0;
  std::vector<AugmentSpec> augment;
  EarlyTermination early_termination{};
  double success_threshold = 0.8;
  InitMethod init = InitMethod::kUniform;
  int shuffle_moves = 20;
  bool include_blank_in_reward = true;
  std::uint64_t node_budget = kDefaultNodeBudget;
  /// Threads used to step environments; results do not depend on it.
  int workers = 1;

  int effective_render_size() const;
  EnvConfig env_config() const;
  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// Loads the training pool for `config`, or returns null for non-image
/// modalities with no dataset configured.
std::shared_ptr<const ImagePool> load_training_pool(const RunConfig& config);

enum class EpisodeEnd { kSolved, kTruncated, kRunEnded, kPolicyError };
std::string_view episode_end_name(EpisodeEnd end);

struct EpisodeLog {
  std::uint64_t seed = 0;  // run seed
  std::size_t env_index = 0;
  std::uint64_t episode_index = 0;  // per environment
  std::size_t image_index = 0;
  std::string start_state;
  std::vector<Action> actions;
  std::vector<double> rewards;
  int length = 0;
  bool solved = false;
  EpisodeEnd end = EpisodeEnd::kTruncated;
  std::string error;  // set when end == kPolicyError
};

inline constexpr std::string_view kEpisodeSchema = "spgym.episode.v1";

/// One JSON object on a single line, without the trailing newline.
std::string episode_jsonl(const EpisodeLog& log);

using EpisodeSink = std::function<void(const EpisodeLog&)>;

struct MetricsReport {
  std::uint64_t seed = 0;
  int num_envs = 0;
  std::uint64_t total_step_cap = 0;
  std::uint64_t total_steps = 0;
  std::uint64_t episodes_completed = 0;  // solved or truncated
  std::uint64_t episodes_solved = 0;
  std::uint64_t policy_errors = 0;
  double success_rate = 0.0;         // over all completed episodes
  double recent_success_rate = 0.0;  // over the last 100 completed episodes
  double mean_episode_length = 0.0;  // over the last 100 completed episodes
  /// Environment steps at which the mean of the per-environment "last episode
  /// solved" indicators first reached the success threshold; equals the cap
  /// when that never happened (censored).
  std::uint64_t steps_to_threshold = 0;
  bool censored = true;
  bool early_terminated = false;

  double steps_to_threshold_millions() const { return static_cast<double>(steps_to_threshold) / 1e6; }
};

std::string metrics_json(const MetricsReport& report);
std::string metrics_csv(const std::vector<MetricsReport>& reports);

struct AggregateStat {
  double mean = 0.0;
  double half_width = 0.0;  // 1.96 standard errors
  std::size_t n = 0;
};

/// Mean +- 1.96 * (sample standard deviation / sqrt(n)); half_width is 0 for n < 2.
AggregateStat aggregate(const std::vector<double>& values);

struct SeedAggregate {
  AggregateStat steps_to_threshold_millions;
  AggregateStat success_rate;
  AggregateStat mean_episode_length;
  std::size_t censored_runs = 0;
};

SeedAggregate aggregate_seeds(const std::vector<MetricsReport>& reports);

/// Resets `env` and plays one episode to termination or truncation. A policy
/// exception ends the episode with EpisodeEnd::kPolicyError.
EpisodeLog run_episode(PuzzleEnv& env, Policy& policy);

/// Convenience overload: a fresh environment seeded with config.seed.
EpisodeLog run_episode(const RunConfig& config, Policy& policy,
                       std::shared_ptr<const ImagePool> pool);

/// Drives config.num_envs environments round-robin until the step cap or early
/// termination. Every environment step is committed in environment order, so
/// results are identical for any worker count. Episodes still running when the
/// run stops are emitted with EpisodeEnd::kRunEnded, which keeps the sum of
/// logged lengths equal to total_steps.
MetricsReport run_batch(const RunConfig& config, const PolicyFactory& factory,
                        std::shared_ptr<const ImagePool> pool, const EpisodeSink& sink = {});

struct OodEntry {
  std::string name;
  int episodes = 0;
  int successes = 0;
  double success_rate() const { return episodes ? static_cast<double>(successes) / episodes : 0.0; }
};

struct OodEasyReport {
  std::vector<OodEntry> per_augmentation;  // the six augmentations, canonical order
  OodEntry identity;                        // no augmentation; the in-distribution control
  double mean_success = 0.0;                // mean over the six augmentations
};

struct OodHardReport {
  OodEntry result;
  std::vector<std::string> heldout_ids;
  /// Manhattan heuristic of the start state of every solved episode.
  std::vector<int> solved_start_heuristics;
};

/// kOodEpisodes episodes per augmentation on the training pool, augmentation
/// redrawn for every observation.
OodEasyReport eval_ood_easy(const RunConfig& config, const PolicyFactory& factory,
                            std::shared_ptr<const ImagePool> train_pool);

/// kOodEpisodes episodes on images from `heldout_dir`. Throws ConfigError if
/// any held-out file name is also a training source id.
OodHardReport eval_ood_hard(const RunConfig& config, const PolicyFactory& factory,
                            const ImagePool& train_pool, const std::filesystem::path& heldout_dir);

std::string ood_easy_json(const OodEasyReport& report);
std::string ood_hard_json(const OodHardReport& report);

struct ProbeManifest {
  int samples = 0;
  std::vector<int> observation_shape;
  std::vector<int> label_shape;
  GridDims dims;
  std::uint64_t seed = 0;
};

/// Writes observations.bin and labels.bin (raw tensor records, one per sample)
/// plus probe.json into `out_dir`. Labels are one-hot state matrices.
ProbeManifest export_probe_dataset(const RunConfig& config, const ImagePool& pool, int n_samples,
                                   const std::filesystem::path& out_dir);

struct ProbeDataset {
  ProbeManifest manifest;
  std::vector<RawTensor> observations;
  std::vector<RawTensor> labels;
};

ProbeDataset read_probe_dataset(const std::filesystem::path& dir);

}  // namespace spgym
