#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <fstream>

#include "json.hpp"

#include "spgym/config.hpp"
#include "spgym/errors.hpp"
#include "spgym/image.hpp"
#include "test_support.hpp"

using namespace spgym;
using spgym::testing::TempDir;
using spgym::testing::run_cli;

namespace {

std::string config_error(const ConfigMap& values) {
  try {
    apply_config_map(RunConfig{}, values);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

bool starts_with(const std::string& s, const std::string& prefix) { return s.rfind(prefix, 0) == 0; }

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

}  // namespace

TEST_SUITE("config map") {
  TEST_CASE("aliases and canonical names") {
    CHECK(canonical_field("seed") == "run.seed");
    CHECK(canonical_field("run.seed") == "run.seed");
    CHECK(canonical_field("pool-size") == "dataset.pool_size");
    CHECK(canonical_field("dataset_dir") == "dataset.dir");
    CHECK_THROWS_AS(canonical_field("learning_rate"), ConfigError);
    const auto c = apply_config_map(RunConfig{}, {{"dims", "4x4"},
                                                  {"seed", "17"},
                                                  {"observation.modality", "onehot"},
                                                  {"augment", "crop,shift"},
                                                  {"total-steps", "5000"},
                                                  {"early_termination", "false"}});
    CHECK(c.dims == GridDims{4, 4});
    CHECK(c.seed == 17);
    CHECK(c.modality == Modality::kOneHot);
    REQUIRE(c.augment.size() == 2);
    CHECK(c.augment[0].kind == AugmentKind::kCrop);
    CHECK(c.total_step_cap == 5000);
    CHECK_FALSE(c.early_termination.enabled);
  }

  TEST_CASE("errors name the bad field") {
    CHECK(starts_with(config_error({{"seed", "abc"}}), "run.seed:"));
    CHECK(starts_with(config_error({{"dims", "3by3"}}), "env.dims:"));
    CHECK(starts_with(config_error({{"modality", "audio"}}), "observation.modality:"));
    CHECK(starts_with(config_error({{"num_envs", "-2"}}), "run.num_envs:"));
    CHECK(starts_with(config_error({{"early_termination", "maybe"}}), "early_termination.enabled:"));
    CHECK(starts_with(config_error({{"augment", "blur"}}), "augment.list:"));
    CHECK(starts_with(config_error({{"learning_rate", "3e-4"}}), "learning_rate:"));
    CHECK(config_error({{"seed", "1"}, {"run.seed", "2"}}).find("given more than once") != std::string::npos);
    CHECK(config_error({{"seed", "12abc"}}).find("'12abc'") != std::string::npos);
  }

  TEST_CASE("every field round-trips through INI") {
    RunConfig c;
    c.dims = {2, 3};
    c.seed = 99;
    c.modality = Modality::kState;
    c.augment = {AugmentSpec::of(AugmentKind::kInversion)};
    c.early_termination.window = 50;
    c.success_threshold = 0.75;
    c.init = InitMethod::kShuffle;
    c.shuffle_moves = 7;
    TempDir dir("ini");
    write_config_file(dir / "run.ini", c);
    const auto values = read_config_file(dir / "run.ini");
    CHECK(values.at("spgym.config_version") == "1");
    ConfigMap fields = values;
    fields.erase("spgym.config_version");
    CHECK(fields.size() == config_field_names().size());
    const auto back = apply_config_map(RunConfig{}, fields);
    CHECK(to_config_map(back) == to_config_map(c));
    CHECK(config_ini(back) == config_ini(c));
  }

  TEST_CASE("config files must carry a supported version") {
    TempDir dir("ver");
    write_text(dir / "none.ini", "[run]\nseed = 3\n");
    CHECK_THROWS_AS(read_config_file(dir / "none.ini"), ConfigError);
    write_text(dir / "future.ini", "[spgym]\nconfig_version = 2\n[run]\nseed = 3\n");
    CHECK_THROWS_AS(read_config_file(dir / "future.ini"), ConfigError);
    write_text(dir / "ok.ini", "[spgym]\nconfig_version = 1\n[run]\nseed = 3\n");
    CHECK(read_config_file(dir / "ok.ini").at("run.seed") == "3");
    CHECK_THROWS_AS(read_config_file(dir / "missing.ini"), ConfigError);
  }
}

TEST_SUITE("cli") {
  TEST_CASE("enumerate") {
    const auto r = run_cli({"enumerate", "--dims", "2x2"});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["state_count"] == 12);
    CHECK(j["max_depth"] == 6);
    TempDir dir("enum");
    CHECK(run_cli({"enumerate", "--dims", "2x3", "--out", dir.path().string()}).code == 0);
    const auto file = nlohmann::json::parse(testing::read_file(dir / "enumeration.json"));
    CHECK(file["state_count"] == 360);
    CHECK(testing::read_file(dir / "enumeration.csv").rfind("depth,count", 0) == 0);
    const auto refused = run_cli({"enumerate", "--dims", "4x4"});
    CHECK(refused.code == kExitDomainError);
    CHECK(refused.err.find("4x4") != std::string::npos);
  }

  TEST_CASE("solve") {
    const auto solved = run_cli({"solve", "--state", "3,3:1,2,3,4,5,6,7,8,0"});
    CHECK(solved.code == 0);
    CHECK(solved.out == "0 moves\n");
    const auto one = run_cli({"solve", "--state", "3,3:1,2,3,4,5,6,7,0,8"});
    CHECK(one.out == "1 move\nLEFT\n");
    CHECK(run_cli({"solve", "--state", "3,3:2,1,3,4,5,6,7,8,0"}).code == kExitDomainError);
    CHECK(run_cli({"solve", "--state", "3,3:1,2,3"}).code == kExitDomainError);
    const auto hard = run_cli({"solve", "--state", "4,4:0,12,9,13,15,11,10,14,3,7,2,5,4,8,6,1", "--budget", "1000"});
    CHECK(hard.code == kExitDomainError);
  }

  TEST_CASE("argument and configuration errors exit 2") {
    CHECK(run_cli({"play", "--out", "x", "--bogus", "1"}).code == kExitConfigError);
    CHECK(run_cli({"nonsense"}).code == kExitConfigError);
    CHECK(run_cli({"--help"}).code == 0);
    TempDir dir("err");
    const auto bad = run_cli({"play", "--out", dir.path().string(), "--modality", "state", "--seed", "x"});
    CHECK(bad.code == kExitConfigError);
    CHECK(bad.err.find("run.seed") != std::string::npos);
    ::unsetenv("SPGYM_DATASET_DIR");
    const auto missing = run_cli({"play", "--out", dir.path().string()});
    CHECK(missing.code == kExitConfigError);
    CHECK(missing.err.find("dataset_dir") != std::string::npos);
  }

  TEST_CASE("play writes artifacts and is deterministic") {
    TempDir dir("play");
    testing::write_dataset(dir / "images", 4, "img", 3);
    ::setenv("SPGYM_DATASET_DIR", (dir / "images").c_str(), 1);
    const std::vector<std::string> base = {"--pool-size", "2", "--seed", "4",        "--num-envs",
                                           "4",           "--total-steps", "600", "--max-episode-steps", "50"};
    auto args_a = std::vector<std::string>{"play", "--out", (dir / "a").string()};
    auto args_b = std::vector<std::string>{"play", "--out", (dir / "b").string(), "--workers", "3"};
    args_a.insert(args_a.end(), base.begin(), base.end());
    args_b.insert(args_b.end(), base.begin(), base.end());
    REQUIRE(run_cli(args_a).code == 0);
    REQUIRE(run_cli(args_b).code == 0);
    ::unsetenv("SPGYM_DATASET_DIR");
    const auto jsonl = testing::read_file(dir / "a" / "episodes.jsonl");
    CHECK_FALSE(jsonl.empty());
    CHECK(jsonl == testing::read_file(dir / "b" / "episodes.jsonl"));
    CHECK(testing::read_file(dir / "a" / "metrics.json") == testing::read_file(dir / "b" / "metrics.json"));
    const auto metrics = nlohmann::json::parse(testing::read_file(dir / "a" / "metrics.json"));
    CHECK(metrics["total_steps"] == 600);
    CHECK(testing::read_file(dir / "a" / "pool_manifest.txt").find("img") != std::string::npos);

    // The effective config reproduces the run.
    const auto replay = run_cli({"play", "--out", (dir / "c").string(), "--config",
                                 (dir / "a" / "effective_config.ini").string()});
    REQUIRE(replay.code == 0);
    CHECK(testing::read_file(dir / "c" / "episodes.jsonl") == jsonl);
  }

  TEST_CASE("flags override config file values") {
    TempDir dir("override");
    write_text(dir / "run.ini",
               "[spgym]\nconfig_version = 1\n[observation]\nmodality = state\n[run]\nseed = 5\ntotal_steps = 300\n");
    REQUIRE(run_cli({"play", "--out", (dir / "o").string(), "--config", (dir / "run.ini").string(), "--seed",
                     "6"})
                .code == 0);
    const auto effective = read_config_file(dir / "o" / "effective_config.ini");
    CHECK(effective.at("run.seed") == "6");
    CHECK(effective.at("run.total_steps") == "300");
    CHECK(effective.at("observation.modality") == "state");
  }

  TEST_CASE("scripted play") {
    TempDir dir("scripted");
    REQUIRE(run_cli({"play", "--out", dir.path().string(), "--modality", "state", "--policy", "scripted", "--actions",
                     "UP,LEFT", "--num-envs", "1", "--total-steps", "10"})
                .code == 0);
    const auto line = testing::read_file(dir / "episodes.jsonl");
    const auto j = nlohmann::json::parse(line.substr(0, line.find('\n')));
    CHECK(j["actions"][0] == 0);
    CHECK(j["actions"][1] == 2);
    CHECK(run_cli({"play", "--out", dir.path().string(), "--modality", "state", "--policy", "scripted", "--actions",
                   "JUMP"})
              .code == kExitConfigError);
  }

  TEST_CASE("render and augment") {
    TempDir dir("render");
    testing::write_dataset(dir.path(), 1, "src", 8, 90, 120);
    const auto src = (dir / "src000.png").string();
    const std::string state = "3,3:4,1,3,7,2,6,0,5,8";
    const auto a = run_cli({"render", "--state", state, "--image", src, "--out", "-"});
    const auto b = run_cli({"render", "--state", state, "--image", src, "--out", "-"});
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
    const Image plain = decode_png(std::span(reinterpret_cast<const std::uint8_t*>(a.out.data()), a.out.size()));
    CHECK(plain.height == 84);
    CHECK(plain.width == 84);

    const auto inverted = run_cli({"render", "--state", state, "--image", src, "--out", "-", "--augment", "inversion"});
    REQUIRE(inverted.code == 0);
    CHECK(inverted.out != a.out);
    const auto restored = run_cli({"augment", "--in", "-", "--out", "-", "--augment", "inversion"}, inverted.out);
    REQUIRE(restored.code == 0);
    CHECK(restored.out == a.out);
    const auto piped = run_cli({"augment", "--in", "-", "--out", "-", "--augment", "shift,color_jitter", "--seed", "9"},
                               a.out);
    const auto direct = run_cli({"render", "--state", state, "--image", src, "--out", "-", "--augment",
                                 "shift,color_jitter", "--seed", "9"});
    CHECK(piped.out == direct.out);

    const auto jitter1 = run_cli({"render", "--state", state, "--image", src, "--out", "-", "--augment", "color_jitter",
                                  "--seed", "3"});
    const auto jitter2 = run_cli({"render", "--state", state, "--image", src, "--out", "-", "--augment", "color_jitter",
                                  "--seed", "3"});
    CHECK(jitter1.out == jitter2.out);
    const auto cropped = run_cli({"render", "--state", state, "--image", src, "--out", (dir / "c.png").string(),
                                  "--augment", "crop"});
    REQUIRE(cropped.code == 0);
    CHECK(read_image(dir / "c.png").height == 100);
    CHECK(run_cli({"render", "--state", "3,3:2,1,3,4,5,6,7,8,0", "--image", src, "--out", "-"}).code ==
          kExitDomainError);
    CHECK(run_cli({"render", "--state", state, "--image", (dir / "none.png").string(), "--out", "-"}).code != 0);
  }

  TEST_CASE("eval-ood and probe") {
    TempDir dir("ood");
    testing::write_dataset(dir / "train", 3, "train", 1);
    testing::write_dataset(dir / "held", 3, "held", 2);
    const auto r = run_cli({"eval-ood", "--out", (dir / "out").string(), "--dataset-dir", (dir / "train").string(),
                            "--heldout-dir", (dir / "held").string(), "--pool-size", "2"});
    REQUIRE(r.code == 0);
    const auto easy = nlohmann::json::parse(testing::read_file(dir / "out" / "ood_easy.json"));
    CHECK(easy["augmentations"].size() == 6);
    CHECK(easy["mean_success"] == 1.0);
    const auto hard = nlohmann::json::parse(testing::read_file(dir / "out" / "ood_hard.json"));
    CHECK(hard["success_rate"] == 1.0);
    CHECK(run_cli({"eval-ood", "--out", (dir / "bad").string(), "--dataset-dir", (dir / "train").string(),
                   "--heldout-dir", (dir / "train").string()})
              .code == kExitConfigError);

    REQUIRE(run_cli({"probe", "--samples", "12", "--out", (dir / "probe").string(), "--dataset-dir",
                     (dir / "train").string()})
                .code == 0);
    const auto manifest = nlohmann::json::parse(testing::read_file(dir / "probe" / "probe.json"));
    CHECK(manifest["samples"] == 12);
  }
}
