#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstring>
#include <set>

#include "spgym/env.hpp"
#include "spgym/errors.hpp"
#include "spgym/policy.hpp"
#include "test_support.hpp"

using namespace spgym;

namespace {

std::shared_ptr<const ImagePool> small_pool(int n = 3, int side = 84, std::uint64_t seed = 1) {
  RandomSource rng(seed);
  std::vector<Image> images;
  std::vector<std::string> ids;
  for (int i = 0; i < n; ++i) {
    images.push_back(testing::random_image_u8(side, side, rng));
    ids.push_back("img" + std::to_string(i) + ".png");
  }
  return std::make_shared<const ImagePool>(make_pool(images, ids, side));
}

EnvConfig config_for(Modality modality, GridDims dims = {3, 3}) {
  EnvConfig c;
  c.dims = dims;
  c.obs.modality = modality;
  return c;
}

}  // namespace

TEST_SUITE("env") {
  TEST_CASE("construction validates configuration") {
    CHECK_THROWS_AS(PuzzleEnv(config_for(Modality::kImage), nullptr, 0), ConfigError);
    auto bad = config_for(Modality::kState);
    bad.max_episode_steps = 0;
    CHECK_THROWS_AS(PuzzleEnv(bad, nullptr, 0), ConfigError);
    auto shuffle = config_for(Modality::kState);
    shuffle.init = InitMethod::kShuffle;
    shuffle.shuffle_moves = 0;
    CHECK_THROWS_AS(PuzzleEnv(shuffle, nullptr, 0), ConfigError);
    auto aug = config_for(Modality::kImage);
    aug.augment = {AugmentSpec::of(AugmentKind::kShift)};
    aug.augment[0].shift_max_offset = 200;
    CHECK_THROWS_AS(PuzzleEnv(aug, small_pool(), 0), ConfigError);
  }

  TEST_CASE("step contract errors") {
    PuzzleEnv env(config_for(Modality::kState), nullptr, 1);
    CHECK_THROWS_AS(env.step(Action::kUp), DomainError);
    env.reset();
    CHECK_THROWS_AS(env.step(7), DomainError);
    CHECK_THROWS_AS(env.step(-1), DomainError);
    auto c = config_for(Modality::kState);
    c.max_episode_steps = 3;
    PuzzleEnv short_env(c, nullptr, 2);
    short_env.reset();
    StepResult r;
    for (int i = 0; i < 3; ++i) r = short_env.step(Action::kUp);
    CHECK(r.truncated);
    CHECK(short_env.episode_over());
    CHECK_THROWS_AS(short_env.step(Action::kUp), DomainError);
  }

  TEST_CASE("reset is deterministic and never starts solved") {
    PuzzleEnv a(config_for(Modality::kOneHot), nullptr, 5);
    PuzzleEnv b(config_for(Modality::kOneHot), nullptr, 5);
    for (int i = 0; i < 50; ++i) {
      const auto [oa, ia] = a.reset();
      const auto [ob, ib] = b.reset();
      REQUIRE(oa == ob);
      REQUIRE(ia.state == ib.state);
      REQUIRE_FALSE(is_solved(a.state()));
    }
    const auto [o1, i1] = a.reset(77);
    const auto [o2, i2] = b.reset(77);
    CHECK(i1.state == i2.state);
    PuzzleEnv tiny(config_for(Modality::kState, {2, 2}), nullptr, 0);
    for (int i = 0; i < 500; ++i) {
      tiny.reset();
      REQUIRE_FALSE(is_solved(tiny.state()));
    }
  }

  TEST_CASE("observation shapes per modality") {
    PuzzleEnv onehot(config_for(Modality::kOneHot), nullptr, 0);
    const auto [obs, info] = onehot.reset();
    CHECK(obs.shape == std::vector<int>{9, 9});
    CHECK(onehot.observation_shape() == std::vector<int>{9, 9});
    CHECK(obs.to_le_bytes().size() == 81 * 4);
    PuzzleEnv state(config_for(Modality::kState), nullptr, 0);
    CHECK(state.reset().first.shape == std::vector<int>{9});
    PuzzleEnv image(config_for(Modality::kImage), small_pool(), 0);
    CHECK(image.reset().first.shape == std::vector<int>{84, 84, 3});
  }

  TEST_CASE("scripted 10^4-action trace matches the core transition function") {
    auto c = config_for(Modality::kOneHot);
    c.max_episode_steps = 50;
    PuzzleEnv env(c, nullptr, 9);
    RandomSource script(10);
    env.reset();
    PuzzleState shadow = env.state();
    int step = 0;
    int invalid = 0;
    for (int i = 0; i < 10000; ++i) {
      const int id = static_cast<int>(script.uniform_below(4));
      const auto expected = apply_action(shadow, static_cast<Action>(id), step, c.max_episode_steps);
      const StepResult r = env.step(id);
      REQUIRE(r.reward == expected.reward);
      REQUIRE(r.terminated == expected.terminated);
      REQUIRE(r.truncated == expected.truncated);
      REQUIRE(r.info.valid == expected.valid);
      REQUIRE(env.state() == expected.next_state);
      REQUIRE(r.observation == render_onehot_obs(expected.next_state));
      if (!expected.valid) {
        REQUIRE(r.reward == -1.0);
        ++invalid;
      }
      shadow = expected.next_state;
      ++step;
      if (r.terminated || r.truncated) {
        env.reset();
        shadow = env.state();
        step = 0;
      }
    }
    CHECK(invalid > 1000);
  }

  TEST_CASE("image observations render the episode image") {
    const auto pool = small_pool(4);
    PuzzleEnv env(config_for(Modality::kImage), pool, 3);
    std::set<std::size_t> seen;
    for (int e = 0; e < 40; ++e) {
      const auto [obs, info] = env.reset();
      REQUIRE(info.image_index < pool->size());
      seen.insert(info.image_index);
      REQUIRE(obs.to_image() == render_image_obs(env.state(), pool->images[info.image_index]));
      const auto r = env.step(valid_actions(env.state()).front());
      REQUIRE(r.observation.to_image() == render_image_obs(env.state(), pool->images[info.image_index]));
    }
    CHECK(seen.size() == 4);
  }

  TEST_CASE("augmentation and rendering do not perturb the state stream") {
    const auto pool = small_pool(2);
    auto plain = config_for(Modality::kImage);
    auto augmented = plain;
    augmented.augment = {AugmentSpec::of(AugmentKind::kColorJitter), AugmentSpec::of(AugmentKind::kShift)};
    PuzzleEnv a(plain, pool, 11);
    PuzzleEnv b(augmented, pool, 11);
    PuzzleEnv c(config_for(Modality::kState), pool, 11);
    c.set_render(false);
    RandomSource script(12);
    a.reset();
    b.reset();
    c.reset();
    for (int i = 0; i < 2000; ++i) {
      const auto act = static_cast<Action>(script.uniform_below(4));
      const auto ra = a.step(act);
      const auto rb = b.step(act);
      const auto rc = c.step(act);
      REQUIRE(a.state() == b.state());
      REQUIRE(a.state() == c.state());
      REQUIRE(ra.reward == rb.reward);
      REQUIRE(ra.reward == rc.reward);
      REQUIRE(rc.observation.data.empty());
      if (ra.terminated || ra.truncated) {
        a.reset();
        b.reset();
        c.reset();
        REQUIRE(a.image_index() == b.image_index());
        REQUIRE(a.image_index() == c.image_index());
      }
    }
  }

  TEST_CASE("preview does not change the environment") {
    PuzzleEnv env(config_for(Modality::kImage), small_pool(), 4);
    env.reset();
    const auto before = env.state();
    const auto obs = env.observation();
    const auto pending = env.preview(Action::kUp);
    CHECK(env.state() == before);
    CHECK(env.observation() == obs);
    const auto r = env.commit(pending);
    CHECK(env.state() == pending.outcome.next_state);
    CHECK(r.observation == pending.observation);
  }
}

TEST_SUITE("policy") {
  TEST_CASE("random and scripted policies") {
    const Observation none;
    const auto s = PuzzleState::solved({3, 3});
    RandomPolicy a(3), b(3);
    for (int i = 0; i < 100; ++i) CHECK(a.act({none, s, i}) == b.act({none, s, i}));
    ScriptedPolicy script({Action::kLeft, Action::kUp});
    CHECK(script.act({none, s, 0}) == Action::kLeft);
    CHECK(script.act({none, s, 1}) == Action::kUp);
    CHECK(script.act({none, s, 2}) == Action::kLeft);
    CHECK_THROWS_AS(ScriptedPolicy({}), ConfigError);
  }

  TEST_CASE("policy factory") {
    PolicyOptions options;
    CHECK(make_policy_factory("random", options)(0) != nullptr);
    CHECK(make_policy_factory("solver", options)(0) != nullptr);
    CHECK(make_policy_factory("scripted", options)(0) != nullptr);
    CHECK_THROWS_AS(make_policy_factory("memorizer", options), ConfigError);
    try {
      make_policy_factory("ppo", options);
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).rfind("policy:", 0) == 0);
    }
    const auto factory = make_policy_factory("random", options);
    const Observation none;
    const auto s = PuzzleState::solved({3, 3});
    auto p0 = factory(0);
    auto p1 = factory(1);
    int same = 0;
    for (int i = 0; i < 64; ++i) same += p0->act({none, s, i}) == p1->act({none, s, i});
    CHECK(same < 40);
  }

  TEST_CASE("memorizer recognizes training renders only") {
    const auto pool = small_pool(3);
    PixelMemorizerPolicy memo(*pool, {3, 3}, 0);
    CHECK(memo.table_size() > 0);
    RandomSource rng(5);
    for (int i = 0; i < 30; ++i) {
      const auto s = sample_uniform_solvable({3, 3}, rng);
      const auto& img = pool->images[rng.uniform_below(pool->size())];
      const auto obs = Observation::from_image(render_image_obs(s, img));
      const auto got = memo.recognize(obs);
      REQUIRE(got.has_value());
      REQUIRE(*got == s);
      const auto inverted = Observation::from_image(invert(obs.to_image()));
      REQUIRE_FALSE(memo.recognize(inverted).has_value());
    }
    const auto unseen = small_pool(1, 84, 999);
    const auto s = sample_uniform_solvable({3, 3}, rng);
    CHECK_FALSE(memo.recognize(Observation::from_image(render_image_obs(s, unseen->images[0]))).has_value());
  }
}
