#include "spgym/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <deque>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "spgym/errors.hpp"

namespace spgym {

using Json = nlohmann::ordered_json;

int RunConfig::effective_render_size() const {
  if (render_size > 0) return render_size;
  const bool has_crop = std::any_of(augment.begin(), augment.end(),
                                    [](const AugmentSpec& s) { return s.kind == AugmentKind::kCrop; });
  return has_crop ? kCropRenderSize : kDefaultRenderSize;
}

EnvConfig RunConfig::env_config() const {
  EnvConfig env;
  env.dims = dims;
  env.obs = ObsSpec{modality, effective_render_size(), blank_fill, seed};
  env.max_episode_steps = max_episode_steps;
  env.init = init;
  env.shuffle_moves = shuffle_moves;
  env.reward = RewardOptions{include_blank_in_reward};
  env.augment = augment;
  return env;
}

void RunConfig::validate() const {
  auto require = [](bool ok, const std::string& message) {
    if (!ok) throw ConfigError(message);
  };
  require(dims.height >= 2 && dims.width >= 2 && dims.cells() <= kMaxGridCells,
          "dims: invalid grid " + dims.to_string());
  require(pool_size >= 1, "pool_size: must be at least 1");
  require(num_envs >= 1, "num_envs: must be at least 1");
  require(max_episode_steps >= 1, "max_episode_steps: must be positive");
  require(total_step_cap >= 1, "total_steps: must be positive");
  require(success_threshold > 0.0 && success_threshold <= 1.0, "success_threshold: must lie in (0, 1]");
  require(early_termination.window >= 1, "early_termination_window: must be positive");
  require(early_termination.success > 0.0 && early_termination.success <= 1.0,
          "early_termination_success: must lie in (0, 1]");
  require(workers >= 1, "workers: must be at least 1");
  require(render_size == 0 || render_size >= std::max(dims.height, dims.width),
          "render_size: must be at least the grid side");
  require(init != InitMethod::kShuffle || shuffle_moves >= 1, "shuffle_moves: must be positive");
  for (const auto& spec : augment) spec.validate(effective_render_size());
}

std::shared_ptr<const ImagePool> load_training_pool(const RunConfig& config) {
  if (config.dataset_dir.empty()) {
    if (config.modality == Modality::kImage) {
      throw ConfigError("dataset_dir: required for image modality (flag --dataset-dir or SPGYM_DATASET_DIR)");
    }
    return nullptr;
  }
  return std::make_shared<const ImagePool>(
      load_pool(config.dataset_dir, config.pool_size, config.effective_render_size(), config.pool_seed));
}

std::string_view episode_end_name(EpisodeEnd end) {
  switch (end) {
    case EpisodeEnd::kSolved: return "solved";
    case EpisodeEnd::kTruncated: return "truncated";
    case EpisodeEnd::kRunEnded: return "run_ended";
    case EpisodeEnd::kPolicyError: return "policy_error";
  }
  return "?";
}

std::string episode_jsonl(const EpisodeLog& log) {
  Json j;
  j["schema"] = kEpisodeSchema;
  j["seed"] = log.seed;
  j["env"] = log.env_index;
  j["episode"] = log.episode_index;
  j["image_index"] = log.image_index;
  j["start_state"] = log.start_state;
  Json actions = Json::array();
  for (Action a : log.actions) actions.push_back(static_cast<int>(a));
  j["actions"] = std::move(actions);
  j["rewards"] = log.rewards;
  j["length"] = log.length;
  j["solved"] = log.solved;
  j["end"] = episode_end_name(log.end);
  if (!log.error.empty()) j["error"] = log.error;
  return j.dump();
}

std::string metrics_json(const MetricsReport& r) {
  Json j;
  j["schema"] = "spgym.metrics.v1";
  j["seed"] = r.seed;
  j["num_envs"] = r.num_envs;
  j["total_step_cap"] = r.total_step_cap;
  j["total_steps"] = r.total_steps;
  j["episodes_completed"] = r.episodes_completed;
  j["episodes_solved"] = r.episodes_solved;
  j["policy_errors"] = r.policy_errors;
  j["success_rate"] = r.success_rate;
  j["recent_success_rate"] = r.recent_success_rate;
  j["mean_episode_length"] = r.mean_episode_length;
  j["steps_to_threshold"] = r.steps_to_threshold;
  j["steps_to_threshold_millions"] = r.steps_to_threshold_millions();
  j["censored"] = r.censored;
  j["early_terminated"] = r.early_terminated;
  return j.dump(2) + "\n";
}

std::string metrics_csv(const std::vector<MetricsReport>& reports) {
  std::ostringstream out;
  out << "seed,num_envs,total_steps,episodes_completed,episodes_solved,success_rate,"
         "recent_success_rate,mean_episode_length,steps_to_threshold,censored,early_terminated\n";
  for (const auto& r : reports) {
    out << r.seed << ',' << r.num_envs << ',' << r.total_steps << ',' << r.episodes_completed << ','
        << r.episodes_solved << ',' << r.success_rate << ',' << r.recent_success_rate << ','
        << r.mean_episode_length << ',' << r.steps_to_threshold << ',' << (r.censored ? 1 : 0) << ','
        << (r.early_terminated ? 1 : 0) << '\n';
  }
  return out.str();
}

AggregateStat aggregate(const std::vector<double>& values) {
  AggregateStat stat;
  stat.n = values.size();
  if (values.empty()) return stat;
  double sum = 0.0;
  for (double v : values) sum += v;
  stat.mean = sum / static_cast<double>(values.size());
  if (values.size() < 2) return stat;
  double sq = 0.0;
  for (double v : values) sq += (v - stat.mean) * (v - stat.mean);
  const double sd = std::sqrt(sq / static_cast<double>(values.size() - 1));
  stat.half_width = 1.96 * sd / std::sqrt(static_cast<double>(values.size()));
  return stat;
}

SeedAggregate aggregate_seeds(const std::vector<MetricsReport>& reports) {
  std::vector<double> steps, success, length;
  SeedAggregate out;
  for (const auto& r : reports) {
    steps.push_back(r.steps_to_threshold_millions());
    success.push_back(r.success_rate);
    length.push_back(r.mean_episode_length);
    if (r.censored) ++out.censored_runs;
  }
  out.steps_to_threshold_millions = aggregate(steps);
  out.success_rate = aggregate(success);
  out.mean_episode_length = aggregate(length);
  return out;
}

namespace {

EpisodeLog begin_log(const PuzzleEnv& env, std::uint64_t run_seed, std::size_t env_index,
                     std::uint64_t episode_index) {
  EpisodeLog log;
  log.seed = run_seed;
  log.env_index = env_index;
  log.episode_index = episode_index;
  log.image_index = env.image_index();
  log.start_state = env.state().to_string();
  return log;
}

void record(EpisodeLog& log, Action action, const StepResult& result) {
  log.actions.push_back(action);
  log.rewards.push_back(result.reward);
  ++log.length;
}

// Persistent workers that run one batch of indexed tasks at a time. run()
// returns only after every task finished and every worker is idle again.
class StepPool {
 public:
  explicit StepPool(int workers) {
    for (int i = 1; i < workers; ++i) threads_.emplace_back([this] { loop(); });
  }

  ~StepPool() {
    {
      std::lock_guard lock(mu_);
      stop_ = true;
    }
    wake_.notify_all();
  }

  StepPool(const StepPool&) = delete;
  StepPool& operator=(const StepPool&) = delete;

  void run(std::size_t count, const std::function<void(std::size_t)>& task) {
    if (threads_.empty() || count < 2) {
      for (std::size_t i = 0; i < count; ++i) task(i);
      return;
    }
    {
      std::lock_guard lock(mu_);
      task_ = &task;
      count_ = count;
      next_ = 0;
      finished_ = 0;
      ++generation_;
    }
    wake_.notify_all();
    drain(task, count);
    std::unique_lock lock(mu_);
    done_.wait(lock, [&] { return finished_ == count_ && active_ == 0; });
    task_ = nullptr;
  }

 private:
  void drain(const std::function<void(std::size_t)>& task, std::size_t count) {
    for (std::size_t i = next_++; i < count; i = next_++) {
      task(i);
      std::lock_guard lock(mu_);
      if (++finished_ == count_) done_.notify_all();
    }
  }

  void loop() {
    std::uint64_t seen = 0;
    while (true) {
      const std::function<void(std::size_t)>* task = nullptr;
      std::size_t count = 0;
      {
        std::unique_lock lock(mu_);
        wake_.wait(lock, [&] { return stop_ || (generation_ != seen && task_ != nullptr); });
        if (stop_) return;
        seen = generation_;
        task = task_;
        count = count_;
        ++active_;
      }
      drain(*task, count);
      std::lock_guard lock(mu_);
      --active_;
      done_.notify_all();
    }
  }

  std::vector<std::jthread> threads_;
  std::mutex mu_;
  std::condition_variable wake_;
  std::condition_variable done_;
  const std::function<void(std::size_t)>* task_ = nullptr;
  std::size_t count_ = 0;
  std::atomic<std::size_t> next_{0};
  std::size_t finished_ = 0;
  int active_ = 0;
  std::uint64_t generation_ = 0;
  bool stop_ = false;
};

}  // namespace

EpisodeLog run_episode(PuzzleEnv& env, Policy& policy) {
  env.set_render(policy.needs_observation());
  env.reset();
  EpisodeLog log = begin_log(env, 0, 0, 0);
  while (true) {
    Action action;
    try {
      action = policy.act(PolicyInput{env.observation(), env.state(), env.step_index()});
    } catch (const std::exception& e) {
      log.end = EpisodeEnd::kPolicyError;
      log.error = e.what();
      return log;
    }
    const StepResult result = env.step(action);
    record(log, action, result);
    if (result.terminated || result.truncated) {
      log.solved = result.terminated;
      log.end = result.terminated ? EpisodeEnd::kSolved : EpisodeEnd::kTruncated;
      return log;
    }
  }
}

EpisodeLog run_episode(const RunConfig& config, Policy& policy, std::shared_ptr<const ImagePool> pool) {
  config.validate();
  PuzzleEnv env(config.env_config(), std::move(pool), config.seed);
  EpisodeLog log = run_episode(env, policy);
  log.seed = config.seed;
  return log;
}

MetricsReport run_batch(const RunConfig& config, const PolicyFactory& factory,
                        std::shared_ptr<const ImagePool> pool, const EpisodeSink& sink) {
  config.validate();
  const auto n = static_cast<std::size_t>(config.num_envs);
  const EnvConfig env_config = config.env_config();
  const RandomSource root(config.seed);

  std::vector<PuzzleEnv> envs;
  std::vector<std::unique_ptr<Policy>> policies;
  envs.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    envs.emplace_back(env_config, pool, root.derive(k).seed());
    policies.push_back(factory(k));
    envs[k].set_render(policies[k]->needs_observation());
  }

  std::vector<EpisodeLog> logs(n);
  std::vector<std::uint64_t> episode_counter(n, 0);
  auto start_episode = [&](std::size_t k) {
    envs[k].reset();
    logs[k] = begin_log(envs[k], config.seed, k, episode_counter[k]++);
  };
  for (std::size_t k = 0; k < n; ++k) start_episode(k);

  MetricsReport report;
  report.seed = config.seed;
  report.num_envs = config.num_envs;
  report.total_step_cap = config.total_step_cap;

  std::vector<char> last_solved(n, 0);
  std::size_t indicator_sum = 0;
  std::deque<bool> window;
  std::size_t window_successes = 0;
  std::deque<int> recent_lengths;
  std::size_t recent_successes = 0;
  std::deque<bool> recent_solved;
  bool threshold_reached = false;
  bool stop = false;

  auto emit = [&](const EpisodeLog& log) {
    if (sink) sink(log);
  };

  auto finish = [&](std::size_t k, EpisodeEnd end, std::string error = {}) {
    EpisodeLog& log = logs[k];
    log.end = end;
    log.solved = end == EpisodeEnd::kSolved;
    log.error = std::move(error);
    if (end == EpisodeEnd::kPolicyError) {
      ++report.policy_errors;
    } else {
      ++report.episodes_completed;
      if (log.solved) ++report.episodes_solved;
      recent_lengths.push_back(log.length);
      recent_solved.push_back(log.solved);
      recent_successes += log.solved ? 1 : 0;
      if (recent_lengths.size() > 100) {
        recent_successes -= recent_solved.front() ? 1 : 0;
        recent_lengths.pop_front();
        recent_solved.pop_front();
      }
    }
    indicator_sum = indicator_sum - static_cast<std::size_t>(last_solved[k]) + (log.solved ? 1 : 0);
    last_solved[k] = log.solved ? 1 : 0;

    window.push_back(log.solved);
    window_successes += log.solved ? 1 : 0;
    if (window.size() > static_cast<std::size_t>(config.early_termination.window)) {
      window_successes -= window.front() ? 1 : 0;
      window.pop_front();
    }
    emit(log);
    start_episode(k);

    if (config.early_termination.enabled &&
        window.size() == static_cast<std::size_t>(config.early_termination.window) &&
        static_cast<double>(window_successes) >= config.early_termination.success * static_cast<double>(window.size())) {
      report.early_terminated = true;
      stop = true;
    }
  };

  struct Slot {
    std::optional<PendingStep> pending;
    std::string error;
  };
  std::vector<Slot> slots(n);
  StepPool workers(config.workers);

  while (!stop && report.total_steps < config.total_step_cap) {
    const auto round = static_cast<std::size_t>(
        std::min<std::uint64_t>(n, config.total_step_cap - report.total_steps));
    workers.run(round, [&](std::size_t k) {
      Slot& slot = slots[k];
      slot.pending.reset();
      slot.error.clear();
      try {
        const Action a = policies[k]->act(PolicyInput{envs[k].observation(), envs[k].state(), envs[k].step_index()});
        slot.pending = envs[k].preview(a);
      } catch (const std::exception& e) {
        slot.error = e.what();
      }
    });

    bool stepped = false;
    for (std::size_t k = 0; k < round && !stop; ++k) {
      Slot& slot = slots[k];
      if (!slot.pending) {
        finish(k, EpisodeEnd::kPolicyError, slot.error);
        continue;
      }
      const Action action = slot.pending->action;
      const StepResult result = envs[k].commit(std::move(*slot.pending));
      slot.pending.reset();
      ++report.total_steps;
      stepped = true;
      record(logs[k], action, result);
      if (result.terminated || result.truncated) {
        finish(k, result.terminated ? EpisodeEnd::kSolved : EpisodeEnd::kTruncated);
      }
      if (!threshold_reached &&
          static_cast<double>(indicator_sum) >= config.success_threshold * static_cast<double>(n)) {
        threshold_reached = true;
        report.steps_to_threshold = report.total_steps;
      }
    }
    if (!stepped) break;  // every policy failed; nothing can progress
  }

  for (std::size_t k = 0; k < n; ++k) {
    if (logs[k].length > 0) {
      logs[k].end = EpisodeEnd::kRunEnded;
      emit(logs[k]);
    }
  }

  report.censored = !threshold_reached;
  if (!threshold_reached) report.steps_to_threshold = config.total_step_cap;
  if (report.episodes_completed > 0) {
    report.success_rate =
        static_cast<double>(report.episodes_solved) / static_cast<double>(report.episodes_completed);
  }
  if (!recent_lengths.empty()) {
    double total = 0.0;
    for (int len : recent_lengths) total += len;
    report.mean_episode_length = total / static_cast<double>(recent_lengths.size());
    report.recent_success_rate =
        static_cast<double>(recent_successes) / static_cast<double>(recent_lengths.size());
  }
  return report;
}

namespace {

OodEntry run_ood_episodes(const std::string& name, const EnvConfig& env_config,
                          std::shared_ptr<const ImagePool> pool, std::uint64_t seed, Policy& policy) {
  PuzzleEnv env(env_config, std::move(pool), seed);
  OodEntry entry{name, 0, 0};
  for (int e = 0; e < kOodEpisodes; ++e) {
    const EpisodeLog log = run_episode(env, policy);
    ++entry.episodes;
    if (log.solved) ++entry.successes;
  }
  return entry;
}

}  // namespace

OodEasyReport eval_ood_easy(const RunConfig& config, const PolicyFactory& factory,
                            std::shared_ptr<const ImagePool> train_pool) {
  config.validate();
  if (config.modality != Modality::kImage || !train_pool) {
    throw ConfigError("modality: OOD evaluation needs image observations and a training pool");
  }
  const RandomSource root(config.seed);
  OodEasyReport report;
  EnvConfig base = config.env_config();

  base.augment.clear();
  auto control_policy = factory(0);
  report.identity = run_ood_episodes("none", base, train_pool, root.derive(0x0D00).seed(), *control_policy);

  double total = 0.0;
  for (std::size_t i = 0; i < kSingleAugmentations.size(); ++i) {
    EnvConfig env_config = base;
    env_config.augment = {AugmentSpec::of(kSingleAugmentations[i])};
    auto policy = factory(0);
    report.per_augmentation.push_back(run_ood_episodes(std::string(augment_name(kSingleAugmentations[i])),
                                                       env_config, train_pool,
                                                       root.derive(0x0D01 + i).seed(), *policy));
    total += report.per_augmentation.back().success_rate();
  }
  report.mean_success = total / static_cast<double>(kSingleAugmentations.size());
  return report;
}

OodHardReport eval_ood_hard(const RunConfig& config, const PolicyFactory& factory,
                            const ImagePool& train_pool, const std::filesystem::path& heldout_dir) {
  config.validate();
  if (config.modality != Modality::kImage) {
    throw ConfigError("modality: OOD evaluation needs image observations");
  }
  const auto files = list_image_files(heldout_dir);
  if (files.empty()) throw ConfigError("heldout_dir: no images in " + heldout_dir.string());
  const std::set<std::string> train_ids(train_pool.source_ids.begin(), train_pool.source_ids.end());
  std::vector<std::string> overlap;
  for (const auto& f : files) {
    if (train_ids.contains(f.filename().string())) overlap.push_back(f.filename().string());
  }
  if (!overlap.empty()) {
    std::string list;
    for (const auto& id : overlap) list += (list.empty() ? "" : ", ") + id;
    throw ConfigError("heldout_dir: held-out images overlap the training pool: " + list);
  }

  const RandomSource root(config.seed);
  const int p = static_cast<int>(std::min<std::size_t>(kHeldoutPoolLimit, files.size()));
  auto heldout = std::make_shared<const ImagePool>(
      load_pool(heldout_dir, p, train_pool.render_size, RandomSource(config.pool_seed).derive(0x4E1D).seed()));

  EnvConfig env_config = config.env_config();
  env_config.augment.clear();
  PuzzleEnv env(env_config, heldout, root.derive(0x4A2D).seed());
  auto policy = factory(0);

  OodHardReport report;
  report.result.name = "heldout";
  report.heldout_ids = heldout->source_ids;
  for (int e = 0; e < kOodEpisodes; ++e) {
    const EpisodeLog log = run_episode(env, *policy);
    ++report.result.episodes;
    if (log.solved) {
      ++report.result.successes;
      report.solved_start_heuristics.push_back(
          manhattan_heuristic(PuzzleState::parse(log.start_state)));
    }
  }
  return report;
}

std::string ood_easy_json(const OodEasyReport& report) {
  Json j;
  j["schema"] = "spgym.ood_easy.v1";
  j["episodes_per_augmentation"] = kOodEpisodes;
  Json per = Json::object();
  for (const auto& e : report.per_augmentation) {
    per[e.name] = {{"episodes", e.episodes}, {"successes", e.successes}, {"success_rate", e.success_rate()}};
  }
  j["augmentations"] = per;
  j["identity"] = {{"episodes", report.identity.episodes},
                   {"successes", report.identity.successes},
                   {"success_rate", report.identity.success_rate()}};
  j["mean_success"] = report.mean_success;
  return j.dump(2) + "\n";
}

std::string ood_hard_json(const OodHardReport& report) {
  Json j;
  j["schema"] = "spgym.ood_hard.v1";
  j["episodes"] = report.result.episodes;
  j["successes"] = report.result.successes;
  j["success_rate"] = report.result.success_rate();
  j["heldout_pool_size"] = report.heldout_ids.size();
  j["solved_start_heuristics"] = report.solved_start_heuristics;
  return j.dump(2) + "\n";
}

ProbeManifest export_probe_dataset(const RunConfig& config, const ImagePool& pool, int n_samples,
                                   const std::filesystem::path& out_dir) {
  config.validate();
  if (n_samples < 1) throw ConfigError("samples: must be positive");
  if (pool.size() == 0) throw ConfigError("dataset_dir: probe export needs an image pool");
  std::filesystem::create_directories(out_dir);
  std::ofstream obs_out(out_dir / "observations.bin", std::ios::binary);
  std::ofstream label_out(out_dir / "labels.bin", std::ios::binary);
  if (!obs_out || !label_out) throw ConfigError("cannot write probe dataset into " + out_dir.string());

  const int side = pool.render_size;
  const int cells = config.dims.cells();
  RandomSource rng = RandomSource(config.seed).derive(0x9B0B);
  for (int i = 0; i < n_samples; ++i) {
    const PuzzleState state = sample_uniform_solvable(config.dims, rng);
    const std::size_t index = select_episode_image(pool, rng);
    const Image obs = render_image_obs(state, pool.images[index], config.blank_fill, config.seed);
    const Observation label = render_onehot_obs(state);
    write_raw_tensor(obs_out, static_cast<std::uint32_t>(side), static_cast<std::uint32_t>(side), 3, obs.data);
    write_raw_tensor(label_out, static_cast<std::uint32_t>(cells), static_cast<std::uint32_t>(cells), 1,
                     label.data);
  }

  ProbeManifest manifest{n_samples, {side, side, 3}, {cells, cells, 1}, config.dims, config.seed};
  Json j;
  j["schema"] = "spgym.probe.v1";
  j["samples"] = manifest.samples;
  j["observation_shape"] = manifest.observation_shape;
  j["label_shape"] = manifest.label_shape;
  j["dims"] = manifest.dims.to_string();
  j["seed"] = manifest.seed;
  j["observations"] = "observations.bin";
  j["labels"] = "labels.bin";
  std::ofstream(out_dir / "probe.json") << j.dump(2) << "\n";
  return manifest;
}

ProbeDataset read_probe_dataset(const std::filesystem::path& dir) {
  std::ifstream meta(dir / "probe.json");
  if (!meta) throw ConfigError("missing probe.json in " + dir.string());
  const Json j = Json::parse(meta);
  ProbeDataset data;
  data.manifest.samples = j.at("samples").get<int>();
  data.manifest.observation_shape = j.at("observation_shape").get<std::vector<int>>();
  data.manifest.label_shape = j.at("label_shape").get<std::vector<int>>();
  data.manifest.dims = GridDims::parse(j.at("dims").get<std::string>());
  data.manifest.seed = j.at("seed").get<std::uint64_t>();
  std::ifstream obs_in(dir / "observations.bin", std::ios::binary);
  std::ifstream label_in(dir / "labels.bin", std::ios::binary);
  RawTensor t;
  while (read_raw_tensor(obs_in, t)) data.observations.push_back(t);
  while (read_raw_tensor(label_in, t)) data.labels.push_back(t);
  return data;
}

}  // namespace spgym
