#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

#include "spgym/errors.hpp"
#include "spgym/puzzle.hpp"
#include "spgym/random.hpp"
#include "spgym/solver.hpp"
#include "test_support.hpp"

using namespace spgym;

namespace {

PuzzleState state_of(GridDims dims, std::vector<TileId> tiles) { return PuzzleState::from_tiles(dims, std::move(tiles)); }

PuzzleState one_move_from_solved() {
  // Solved 3x3 after DOWN: tile 6 slides down into the blank at (2,2).
  return state_of({3, 3}, {1, 2, 3, 4, 5, 0, 7, 8, 6});
}

}  // namespace

TEST_SUITE("random") {
  TEST_CASE("streams are reproducible and seeds differ") {
    RandomSource a(7), b(7), c(8);
    for (int i = 0; i < 100; ++i) {
      const auto x = a.next();
      CHECK(x == b.next());
      CHECK(x != c.next());
    }
  }

  TEST_CASE("first output matches the SplitMix64 definition") {
    RandomSource rng(0);
    CHECK(rng.next() == 0xE220A8397B1DCDAFULL);
  }

  TEST_CASE("derive does not advance the parent and gives distinct streams") {
    RandomSource parent(99);
    const RandomSource before = parent;
    auto x = parent.derive(1);
    auto y = parent.derive(2);
    CHECK(parent == before);
    CHECK(x.next() != y.next());
    CHECK(parent.derive(1).next() == RandomSource(99).derive(1).next());
  }

  TEST_CASE("uniform_below stays in range and is roughly uniform") {
    RandomSource rng(3);
    std::vector<std::uint64_t> counts(6, 0);
    for (int i = 0; i < 60000; ++i) {
      const auto v = rng.uniform_below(6);
      REQUIRE(v < 6);
      ++counts[v];
    }
    CHECK(testing::chi_square_uniform(counts) < 20.52);  // df 5, p = 0.001
  }

  TEST_CASE("uniform_float lies on the 2^-24 grid in [0, 1)") {
    RandomSource rng(5);
    for (int i = 0; i < 10000; ++i) {
      const float f = rng.uniform_float();
      REQUIRE(f >= 0.0f);
      REQUIRE(f < 1.0f);
      const float scaled = f * 16777216.0f;
      REQUIRE(scaled == std::floor(scaled));
    }
  }
}

TEST_SUITE("grid") {
  TEST_CASE("GridDims parsing and limits") {
    CHECK(GridDims::parse("3x3") == GridDims{3, 3});
    CHECK(GridDims::parse("4X5") == GridDims{4, 5});
    CHECK_THROWS_AS(GridDims::parse("3"), DomainError);
    CHECK_THROWS_AS(GridDims::parse("1x3"), DomainError);
    CHECK_THROWS_AS(GridDims::parse("9x9"), DomainError);
    CHECK_NOTHROW(GridDims::make(8, 8));
    CHECK(GridDims{2, 3}.to_string() == "2x3");
  }

  TEST_CASE("goal positions") {
    CHECK(goal_position(1, {3, 3}) == Cell{0, 0});
    CHECK(goal_position(0, {3, 3}) == Cell{2, 2});
    CHECK(goal_position(5, {4, 4}) == Cell{1, 0});
    CHECK_THROWS_AS(goal_position(9, {3, 3}), DomainError);
    CHECK_THROWS_AS(goal_position(-1, {3, 3}), DomainError);
  }

  TEST_CASE("is_solved") {
    CHECK(is_solved(PuzzleState::solved({3, 3})));
    CHECK_FALSE(is_solved(one_move_from_solved()));
    CHECK_FALSE(is_solved(state_of({2, 2}, {1, 2, 0, 3})));
  }

  TEST_CASE("text and binary forms round-trip") {
    RandomSource rng(11);
    for (int i = 0; i < 50; ++i) {
      const auto s = sample_uniform_solvable({3, 4}, rng);
      CHECK(PuzzleState::parse(s.to_string()) == s);
      CHECK(PuzzleState::from_bytes(s.to_bytes()) == s);
    }
    CHECK(PuzzleState::solved({2, 2}).to_string() == "2,2:1,2,3,0");
    const auto bytes = PuzzleState::solved({2, 2}).to_bytes();
    CHECK(bytes == std::vector<std::uint8_t>{2, 0, 2, 0, 1, 0, 2, 0, 3, 0, 0, 0});
  }

  TEST_CASE("malformed states are rejected") {
    CHECK_THROWS_AS(PuzzleState::parse("3,3:1,2,3"), DomainError);
    CHECK_THROWS_AS(PuzzleState::parse("3,3:1,1,3,4,5,6,7,8,0"), DomainError);
    CHECK_THROWS_AS(PuzzleState::parse("3,3:1,2,3,4,5,6,7,8,9"), DomainError);
    CHECK_THROWS_AS(PuzzleState::parse("garbage"), DomainError);
    CHECK_THROWS_AS(PuzzleState::from_tiles({2, 2}, {0, 1, 2, 2}), DomainError);
  }

  TEST_CASE("actions parse by name or id") {
    CHECK(parse_action("up") == Action::kUp);
    CHECK(parse_action("RIGHT") == Action::kRight);
    CHECK(parse_action("2") == Action::kLeft);
    CHECK_FALSE(parse_action("north").has_value());
    CHECK(opposite(Action::kUp) == Action::kDown);
    CHECK(opposite(Action::kLeft) == Action::kRight);
  }
}

TEST_SUITE("dynamics") {
  TEST_CASE("valid action sets by blank position") {
    // Blank in the center: all four.
    CHECK(valid_actions(state_of({3, 3}, {1, 2, 3, 4, 0, 5, 6, 7, 8})).size() == 4);
    // Blank at top-left: the tile below moves up, the tile to the right moves left.
    const auto corner = valid_actions(state_of({3, 3}, {0, 1, 2, 3, 4, 5, 6, 7, 8}));
    CHECK(corner == std::vector<Action>{Action::kUp, Action::kLeft});
    // Solved: blank bottom-right, so DOWN and RIGHT are the valid ones.
    CHECK(valid_actions(PuzzleState::solved({3, 3})) == std::vector<Action>{Action::kDown, Action::kRight});
  }

  TEST_CASE("every blank position has 2 to 4 valid actions") {
    for (GridDims dims : {GridDims{2, 2}, GridDims{3, 3}, GridDims{4, 5}}) {
      for (int b = 0; b < dims.cells(); ++b) {
        auto s = PuzzleState::solved(dims);
        s.swap_cells(s.blank_index(), b);
        const auto n = valid_actions(s).size();
        CHECK(n >= 2);
        CHECK(n <= 4);
      }
    }
  }

  TEST_CASE("denominator by direct summation and index conventions agree") {
    CHECK(manhattan_denominator({3, 3}) == 42);
    CHECK(manhattan_denominator({4, 4}) == 96);
    for (int h = 2; h <= 8; ++h) {
      for (int w = 2; w <= 8; ++w) {
        CHECK(manhattan_denominator({h, w}) == manhattan_denominator_zero_indexed({h, w}));
      }
    }
  }

  TEST_CASE("normalized Manhattan distance") {
    CHECK(normalized_manhattan(PuzzleState::solved({3, 3})) == 0.0);
    CHECK(manhattan_numerator(one_move_from_solved()) == 2);
    CHECK(normalized_manhattan(one_move_from_solved()) == doctest::Approx(2.0 / 42.0).epsilon(1e-15));
    CHECK(manhattan_numerator(one_move_from_solved(), {.include_blank = false}) == 1);
    RandomSource rng(21);
    for (GridDims dims : {GridDims{3, 3}, GridDims{4, 4}, GridDims{5, 5}}) {
      for (int i = 0; i < 20000; ++i) {
        const double d = normalized_manhattan(sample_uniform_solvable(dims, rng));
        REQUIRE(d >= 0.0);
        REQUIRE(d <= 1.0);
      }
    }
  }

  TEST_CASE("rewards follow the three cases") {
    // Reversing move solves.
    const auto solve = apply_action(one_move_from_solved(), Action::kUp, 0, 1000);
    CHECK(solve.valid);
    CHECK(solve.solved);
    CHECK(solve.terminated);
    CHECK(solve.reward == 1.0);
    CHECK(is_solved(solve.next_state));

    // Blank in the top row: DOWN is invalid.
    const auto top = state_of({3, 3}, {1, 0, 2, 3, 4, 5, 6, 7, 8});
    const auto invalid = apply_action(top, Action::kDown, 0, 1000);
    CHECK_FALSE(invalid.valid);
    CHECK(invalid.reward == -1.0);
    CHECK(invalid.next_state == top);
    CHECK_FALSE(invalid.terminated);

    // Ordinary valid move pays -D(next).
    const auto step = apply_action(top, Action::kUp, 0, 1000);
    CHECK(step.valid);
    const int num = manhattan_numerator(step.next_state);
    CHECK(step.reward == -static_cast<double>(num) / 42.0);
  }

  TEST_CASE("truncation counts invalid steps") {
    const auto top = state_of({3, 3}, {1, 0, 2, 3, 4, 5, 6, 7, 8});
    CHECK_FALSE(apply_action(top, Action::kDown, 998, 1000).truncated);
    CHECK(apply_action(top, Action::kDown, 999, 1000).truncated);
    // A solving move on the last step terminates rather than truncates.
    const auto last = apply_action(one_move_from_solved(), Action::kUp, 999, 1000);
    CHECK(last.terminated);
    CHECK_FALSE(last.truncated);
  }

  TEST_CASE("moves preserve permutation, parity and are reversible") {
    RandomSource rng(4);
    for (int i = 0; i < 5000; ++i) {
      const auto s = sample_uniform_solvable({3, 4}, rng);
      const auto a = static_cast<Action>(rng.uniform_below(4));
      const auto out = apply_action(s, a, 0, 1000);
      std::vector<TileId> sorted(out.next_state.tiles().begin(), out.next_state.tiles().end());
      std::sort(sorted.begin(), sorted.end());
      std::vector<TileId> ids(12);
      std::iota(ids.begin(), ids.end(), TileId{0});
      REQUIRE(sorted == ids);
      REQUIRE(is_solvable(out.next_state));
      REQUIRE(out.reward >= -1.0);
      REQUIRE(out.reward <= 1.0);
      if (out.valid) {
        int changed = 0;
        for (int c = 0; c < 12; ++c) changed += s.tile_at(c) != out.next_state.tile_at(c);
        REQUIRE(changed == 2);
        const auto back = apply_action(out.next_state, opposite(a), 0, 1000);
        REQUIRE(back.valid);
        REQUIRE(back.next_state == s);
        if (!out.solved) REQUIRE(out.reward < 0.0);
      }
    }
  }
}

TEST_SUITE("solvability") {
  TEST_CASE("inversions ignore the blank") {
    const std::vector<TileId> tiles{2, 1, 0, 3};
    CHECK(inversion_count(tiles) == 1);
    const std::vector<TileId> sorted{1, 2, 3, 0};
    CHECK(inversion_count(sorted) == 0);
  }

  TEST_CASE("parity rule agrees with BFS on all 24 2x2 permutations") {
    const auto table = DistanceTable::build({2, 2});
    std::vector<TileId> tiles{0, 1, 2, 3};
    int reachable = 0;
    do {
      const auto s = state_of({2, 2}, tiles);
      CHECK(is_solvable(s) == table.contains(s));
      reachable += table.contains(s);
    } while (std::next_permutation(tiles.begin(), tiles.end()));
    CHECK(reachable == 12);
  }

  TEST_CASE("solved states are solvable and a single swap is not") {
    for (GridDims dims : {GridDims{2, 2}, GridDims{3, 3}, GridDims{4, 4}, GridDims{3, 4}, GridDims{5, 6}}) {
      CHECK(is_solvable(PuzzleState::solved(dims)));
      auto swapped = PuzzleState::solved(dims);
      swapped.swap_cells(0, 1);
      CHECK_FALSE(is_solvable(swapped));
    }
  }

  TEST_CASE("even-width parity agrees with reachability via random walks") {
    RandomSource rng(8);
    for (GridDims dims : {GridDims{4, 4}, GridDims{3, 4}, GridDims{2, 6}}) {
      for (int i = 0; i < 200; ++i) {
        const auto s = shuffle_from_solved(dims, 1 + static_cast<int>(rng.uniform_below(60)), rng);
        REQUIRE(is_solvable(s));
        auto t = s;
        const int a = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(dims.cells())));
        int b = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(dims.cells() - 1)));
        if (b >= a) ++b;
        if (t.tile_at(a) == 0 || t.tile_at(b) == 0) continue;
        t.swap_cells(a, b);
        REQUIRE_FALSE(is_solvable(t));
      }
    }
  }

  TEST_CASE("uniform sampler is deterministic and solvable") {
    RandomSource a(42), b(42);
    CHECK(sample_uniform_solvable({3, 3}, a) == sample_uniform_solvable({3, 3}, b));
    RandomSource rng(1);
    for (int i = 0; i < 10000; ++i) REQUIRE(is_solvable(sample_uniform_solvable({4, 4}, rng)));
  }

  TEST_CASE("uniform sampler covers the 12 2x2 states uniformly") {
    RandomSource rng(2024);
    std::map<std::string, std::uint64_t> freq;
    for (int i = 0; i < 100000; ++i) ++freq[sample_uniform_solvable({2, 2}, rng).to_string()];
    REQUIRE(freq.size() == 12);
    std::vector<std::uint64_t> counts;
    for (const auto& [k, v] : freq) {
      counts.push_back(v);
      // 1/12 +- 3 sigma
      const double p = 1.0 / 12.0;
      const double sigma = std::sqrt(100000 * p * (1 - p));
      CHECK(std::abs(static_cast<double>(v) - 100000 * p) < 3 * sigma + 1);
    }
    CHECK(testing::chi_square_uniform(counts) < 31.26);  // df 11, p = 0.001
  }

  TEST_CASE("shuffle_from_solved") {
    RandomSource rng(6);
    CHECK(shuffle_from_solved({3, 3}, 0, rng) == PuzzleState::solved({3, 3}));
    CHECK_THROWS_AS(shuffle_from_solved({3, 3}, -1, rng), DomainError);
    for (int i = 0; i < 200; ++i) {
      const auto s = shuffle_from_solved({3, 3}, 5, rng);
      REQUIRE(is_solvable(s));
      REQUIRE(ida_star(s).length <= 5);
    }
  }
}
