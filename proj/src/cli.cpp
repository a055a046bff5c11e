#include "spgym/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>
#include <vector>

#include "CLI11.hpp"

#include "spgym/augment.hpp"
#include "spgym/config.hpp"
#include "spgym/errors.hpp"
#include "spgym/harness.hpp"
#include "spgym/image.hpp"
#include "spgym/observation.hpp"
#include "spgym/policy.hpp"
#include "spgym/solver.hpp"

namespace spgym {

namespace {

namespace fs = std::filesystem;

constexpr std::uint64_t kPolicyStream = 0x9011C7;

// Run-config flags shared by play, eval-ood and probe. Values are kept as text
// and routed through the same parser as config files.
struct RunFlags {
  std::map<std::string, std::string> values;
  std::vector<std::pair<std::string, CLI::Option*>> options;
  std::string config_file;

  void add(CLI::App* app) {
    static const std::vector<std::pair<const char*, const char*>> kFlags = {
        {"dims", "Grid size HxW"},
        {"pool-size", "Number of training images"},
        {"pool-seed", "Seed for choosing the image pool"},
        {"seed", "Run seed"},
        {"num-envs", "Parallel environments"},
        {"max-episode-steps", "Steps before truncation"},
        {"total-steps", "Total environment step cap"},
        {"modality", "image, onehot or state"},
        {"render-size", "Rendered image side (0 = automatic)"},
        {"augment", "Comma-separated augmentations"},
        {"dataset-dir", "Training image directory (default $SPGYM_DATASET_DIR)"},
        {"heldout-dir", "Held-out image directory"},
        {"blank-fill", "black, source or noise"},
        {"init", "uniform or shuffle"},
        {"shuffle-moves", "Random-walk length for shuffle init"},
        {"workers", "Worker threads (results do not depend on it)"},
        {"node-budget", "IDA* node budget for the solver policy"},
    };
    for (const auto& [name, help] : kFlags) {
      options.emplace_back(name, app->add_option(std::string("--") + name, values[name], help));
    }
    app->add_option("--config", config_file, "INI config file; flags override its values");
  }

  RunConfig resolve() const {
    RunConfig config;
    config.dataset_dir = default_dataset_dir();
    if (!config_file.empty()) config = apply_config_map(config, read_config_file(config_file));
    ConfigMap overrides;
    for (const auto& [name, option] : options) {
      if (option->count() > 0) overrides[name] = values.at(name);
    }
    config = apply_config_map(config, overrides);
    config.validate();
    return config;
  }
};

std::vector<Action> parse_action_list(const std::string& text) {
  std::vector<Action> actions;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto a = parse_action(item);
    if (!a) throw ConfigError("actions: unknown action '" + item + "'");
    actions.push_back(*a);
  }
  if (actions.empty()) throw ConfigError("actions: empty action list");
  return actions;
}

PolicyFactory build_policy(const std::string& name, const RunConfig& config, const std::string& actions,
                           std::shared_ptr<const ImagePool> pool) {
  PolicyOptions options;
  options.seed = RandomSource(config.seed).derive(kPolicyStream).seed();
  if (!actions.empty()) options.script = parse_action_list(actions);
  options.node_budget = config.node_budget;
  options.pool = std::move(pool);
  options.dims = config.dims;
  options.blank_fill = config.blank_fill;
  return make_policy_factory(name, options);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

fs::path prepare_out_dir(const std::string& out) {
  if (out.empty()) throw ConfigError("out: an output directory is required");
  fs::create_directories(out);
  return out;
}

Image read_image_arg(const std::string& path, std::istream& in) {
  if (path != "-") return read_image(path);
  const std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_png(std::span(reinterpret_cast<const std::uint8_t*>(raw.data()), raw.size()));
}

void write_png_arg(const std::string& path, const Image& image, std::ostream& out) {
  if (path != "-") {
    write_png(path, image);
    return;
  }
  const auto bytes = encode_png(image);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  out.flush();
}

int cmd_enumerate(const std::string& dims_text, const std::string& out_dir, std::ostream& out) {
  const GridDims dims = GridDims::parse(dims_text);
  const EnumerationReport report = bfs_enumerate(dims);
  const std::string json = enumeration_json(report);
  if (out_dir.empty()) {
    out << json;
    return kExitOk;
  }
  const fs::path dir = prepare_out_dir(out_dir);
  write_text(dir / "enumeration.json", json);
  write_text(dir / "enumeration.csv", enumeration_csv(report));
  out << "dims " << dims.to_string() << "\nstate_count " << report.state_count << "\nmean_optimal_length "
      << report.mean_optimal_length << "\nmax_depth " << report.max_depth << "\n";
  return kExitOk;
}

int cmd_solve(const std::string& state_text, std::uint64_t budget, std::ostream& out, std::ostream& err) {
  const PuzzleState start = PuzzleState::parse(state_text);
  const SolveResult result = ida_star(start, budget);
  if (!result.solved()) {
    err << "error: node budget of " << budget << " exhausted after " << result.nodes_expanded
        << " expansions\n";
    return kExitDomainError;
  }
  out << result.length << (result.length == 1 ? " move\n" : " moves\n");
  for (std::size_t i = 0; i < result.path.size(); ++i) {
    out << (i ? " " : "") << action_name(result.path[i]);
  }
  if (!result.path.empty()) out << "\n";
  return kExitOk;
}

int cmd_play(const RunFlags& flags, const std::string& policy_name, const std::string& actions,
             const std::string& out_dir, std::ostream& out) {
  const RunConfig config = flags.resolve();
  const fs::path dir = prepare_out_dir(out_dir);
  const auto pool = load_training_pool(config);
  const PolicyFactory factory = build_policy(policy_name, config, actions, pool);

  write_config_file(dir / "effective_config.ini", config);
  if (pool) write_pool_manifest(dir / "pool_manifest.txt", *pool);
  std::ofstream episodes(dir / "episodes.jsonl", std::ios::binary);
  if (!episodes) throw ConfigError("cannot write " + (dir / "episodes.jsonl").string());
  const MetricsReport report =
      run_batch(config, factory, pool, [&](const EpisodeLog& log) { episodes << episode_jsonl(log) << '\n'; });
  episodes.close();
  write_text(dir / "metrics.json", metrics_json(report));
  write_text(dir / "metrics.csv", metrics_csv({report}));
  out << "total_steps " << report.total_steps << "\nepisodes_completed " << report.episodes_completed
      << "\nsuccess_rate " << report.success_rate << "\nsteps_to_threshold " << report.steps_to_threshold
      << (report.censored ? " (censored)" : "") << "\n";
  return kExitOk;
}

int cmd_eval_ood(const RunFlags& flags, const std::string& policy_name, const std::string& out_dir,
                 std::ostream& out) {
  const RunConfig config = flags.resolve();
  const fs::path dir = prepare_out_dir(out_dir);
  const auto pool = load_training_pool(config);
  const PolicyFactory factory = build_policy(policy_name, config, "", pool);
  write_config_file(dir / "effective_config.ini", config);
  if (pool) write_pool_manifest(dir / "pool_manifest.txt", *pool);

  const OodEasyReport easy = eval_ood_easy(config, factory, pool);
  write_text(dir / "ood_easy.json", ood_easy_json(easy));
  for (const auto& entry : easy.per_augmentation) {
    out << "easy " << entry.name << " " << entry.success_rate() << "\n";
  }
  out << "easy mean " << easy.mean_success << "\n";
  if (!config.heldout_dir.empty()) {
    const OodHardReport hard = eval_ood_hard(config, factory, *pool, config.heldout_dir);
    write_text(dir / "ood_hard.json", ood_hard_json(hard));
    out << "hard " << hard.result.success_rate() << "\n";
  }
  return kExitOk;
}

struct RenderArgs {
  std::string state;
  std::string image;
  std::string out;
  std::string augment;
  std::string blank_fill = "black";
  std::uint64_t seed = 0;
  int render_size = 0;
};

int cmd_render(const RenderArgs& args, std::istream& in, std::ostream& out) {
  const PuzzleState state = PuzzleState::parse(args.state);
  if (!is_solvable(state)) throw DomainError("state " + args.state + " is not solvable");
  const auto specs = parse_augment_list(args.augment);
  int side = args.render_size;
  if (side == 0) {
    const bool crop = std::any_of(specs.begin(), specs.end(),
                                  [](const AugmentSpec& s) { return s.kind == AugmentKind::kCrop; });
    side = crop ? kCropRenderSize : kDefaultRenderSize;
  }
  for (const auto& spec : specs) spec.validate(side);
  const Image source = resize_bilinear(read_image_arg(args.image, in), side, side);
  Image rendered = render_image_obs(state, source, parse_blank_fill(args.blank_fill), args.seed);
  if (!specs.empty()) {
    // Augment the 8-bit render so this matches piping the plain render through `augment`.
    RandomSource rng(args.seed);
    rendered = apply_augments(quantized(rendered), specs, rng);
  }
  write_png_arg(args.out, rendered, out);
  return kExitOk;
}

int cmd_augment(const std::string& in_path, const std::string& out_path, const std::string& augment,
                std::uint64_t seed, std::istream& in, std::ostream& out) {
  const auto specs = parse_augment_list(augment);
  const Image image = read_image_arg(in_path, in);
  for (const auto& spec : specs) spec.validate(std::min(image.height, image.width));
  RandomSource rng(seed);
  write_png_arg(out_path, apply_augments(image, specs, rng), out);
  return kExitOk;
}

int cmd_probe(const RunFlags& flags, int samples, const std::string& out_dir, std::ostream& out) {
  const RunConfig config = flags.resolve();
  const fs::path dir = prepare_out_dir(out_dir);
  const auto pool = load_training_pool(config);
  if (!pool) throw ConfigError("dataset_dir: probe export needs training images");
  write_config_file(dir / "effective_config.ini", config);
  write_pool_manifest(dir / "pool_manifest.txt", *pool);
  const ProbeManifest manifest = export_probe_dataset(config, *pool, samples, dir);
  out << "samples " << manifest.samples << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sliding-puzzle environment engine, solver and evaluation harness", "spgym"};
  app.require_subcommand(1);

  std::string dims_text = "3x3";
  std::string out_dir;
  auto* enumerate = app.add_subcommand("enumerate", "Breadth-first enumeration of every reachable state");
  enumerate->add_option("--dims", dims_text, "Grid size HxW")->capture_default_str();
  enumerate->add_option("--out", out_dir, "Output directory (JSON is printed when omitted)");

  std::string state_text;
  std::uint64_t budget = kDefaultNodeBudget;
  auto* solve = app.add_subcommand("solve", "Optimal solution with IDA*");
  solve->add_option("--state", state_text, "State as H,W:t0,t1,...")->required();
  solve->add_option("--budget", budget, "Node expansion budget")->capture_default_str();

  RunFlags play_flags;
  std::string policy_name = "random";
  std::string actions;
  auto* play = app.add_subcommand("play", "Run a policy over parallel environments and log episodes");
  play_flags.add(play);
  play->add_option("--policy", policy_name, std::string("Policy: ") + std::string(kPolicyNames))
      ->capture_default_str();
  play->add_option("--actions", actions, "Action list for the scripted policy, e.g. UP,LEFT");
  play->add_option("--out", out_dir, "Output directory")->required();

  RunFlags ood_flags;
  std::string ood_policy = "solver";
  auto* eval_ood = app.add_subcommand("eval-ood", "Augmentation and held-out image evaluation");
  ood_flags.add(eval_ood);
  eval_ood->add_option("--policy", ood_policy, std::string("Policy: ") + std::string(kPolicyNames))
      ->capture_default_str();
  eval_ood->add_option("--out", out_dir, "Output directory")->required();

  RenderArgs render_args;
  auto* render = app.add_subcommand("render", "Render one state as a PNG");
  render->add_option("--state", render_args.state, "State as H,W:t0,t1,...")->required();
  render->add_option("--image", render_args.image, "Source image (- for PNG on stdin)")->required();
  render->add_option("--out", render_args.out, "Output PNG (- for stdout)")->required();
  render->add_option("--augment", render_args.augment, "Comma-separated augmentations");
  render->add_option("--seed", render_args.seed, "Augmentation seed");
  render->add_option("--render-size", render_args.render_size, "Output side (0 = automatic)");
  render->add_option("--blank-fill", render_args.blank_fill, "black, source or noise");

  std::string augment_in;
  std::string augment_out;
  std::string augment_list;
  std::uint64_t augment_seed = 0;
  auto* augment = app.add_subcommand("augment", "Apply augmentations to an existing PNG");
  augment->add_option("--in", augment_in, "Input image (- for stdin)")->required();
  augment->add_option("--out", augment_out, "Output PNG (- for stdout)")->required();
  augment->add_option("--augment", augment_list, "Comma-separated augmentations")->required();
  augment->add_option("--seed", augment_seed, "Augmentation seed");

  RunFlags probe_flags;
  int samples = 1000;
  auto* probe = app.add_subcommand("probe", "Export (observation, one-hot state) pairs");
  probe_flags.add(probe);
  probe->add_option("--samples", samples, "Number of samples")->capture_default_str();
  probe->add_option("--out", out_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitConfigError;
  }

  try {
    if (*enumerate) return cmd_enumerate(dims_text, out_dir, out);
    if (*solve) return cmd_solve(state_text, budget, out, err);
    if (*play) return cmd_play(play_flags, policy_name, actions, out_dir, out);
    if (*eval_ood) return cmd_eval_ood(ood_flags, ood_policy, out_dir, out);
    if (*render) return cmd_render(render_args, in, out);
    if (*augment) return cmd_augment(augment_in, augment_out, augment_list, augment_seed, in, out);
    if (*probe) return cmd_probe(probe_flags, samples, out_dir, out);
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return kExitDomainError;
  } catch (const BudgetExhausted& e) {
    err << "error: " << e.what() << "\n";
    return kExitDomainError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "configuration error: " << e.what() << "\n";
    return kExitConfigError;
  }
  return kExitOk;
}

}  // namespace spgym
