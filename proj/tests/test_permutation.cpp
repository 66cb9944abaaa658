#include <catch2/catch.hpp>

#include <deque>
#include <map>
#include <vector>

#include "shufflesum/permutation.hpp"
#include "shufflesum/rng.hpp"

using namespace shufflesum;

namespace {

// Shortest transposition count by breadth-first search over the graph whose
// moves swap two mapping entries. Independent of the cycle formula.
std::size_t bfs_swap_distance(const Permutation& from, const Permutation& to) {
  if (from == to) return 0;
  std::map<std::vector<std::uint32_t>, std::size_t> dist;
  std::deque<std::vector<std::uint32_t>> queue;
  dist[from.mapping()] = 0;
  queue.push_back(from.mapping());
  while (!queue.empty()) {
    std::vector<std::uint32_t> cur = queue.front();
    queue.pop_front();
    const std::size_t d = dist[cur];
    for (std::size_t a = 0; a + 1 < cur.size(); ++a) {
      for (std::size_t b = a + 1; b < cur.size(); ++b) {
        std::vector<std::uint32_t> next = cur;
        std::swap(next[a], next[b]);
        if (dist.count(next)) continue;
        if (next == to.mapping()) return d + 1;
        dist[next] = d + 1;
        queue.push_back(next);
      }
    }
  }
  return SIZE_MAX;
}

}  // namespace

TEST_CASE("permutation construction validates bijections") {
  CHECK_NOTHROW(Permutation({1, 0, 2}));
  CHECK_THROWS_AS(Permutation({0, 0, 2}), std::invalid_argument);
  CHECK_THROWS_AS(Permutation({0, 3, 1}), std::invalid_argument);
  CHECK_THROWS_AS(Permutation::from_one_based({0, 1}), std::invalid_argument);
}

TEST_CASE("compose evaluates outer after inner") {
  const Permutation outer = Permutation::from_one_based({2, 1, 3});
  const Permutation inner = Permutation::from_one_based({1, 3, 2});
  CHECK(compose(outer, inner) == Permutation::from_one_based({2, 3, 1}));

  const Permutation id = Permutation::identity(3);
  CHECK(compose(id, outer) == outer);
  CHECK(compose(outer, invert(outer)) == id);
  CHECK_THROWS_AS(compose(outer, Permutation::identity(4)), std::invalid_argument);
}

TEST_CASE("invert reference values") {
  CHECK(invert(Permutation::identity(4)) == Permutation::identity(4));
  CHECK(invert(Permutation::from_one_based({2, 3, 1})) ==
        Permutation::from_one_based({3, 1, 2}));
  CHECK(invert(Permutation::from_one_based({2, 1, 3})) ==
        Permutation::from_one_based({2, 1, 3}));
}

TEST_CASE("compose and invert round-trip on larger sizes") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::uint32_t> m(50);
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = static_cast<std::uint32_t>(i);
    for (std::size_t i = m.size() - 1; i > 0; --i)
      std::swap(m[i], m[rng.uniform_below(i + 1)]);
    const Permutation p(m);
    CHECK(compose(p, invert(p)) == Permutation::identity(50));
    CHECK(compose(invert(p), p) == Permutation::identity(50));
    CHECK(invert(invert(p)) == p);
  }
}

TEST_CASE("swap_distance reference values") {
  const Permutation id = Permutation::identity(3);
  CHECK(swap_distance(id, id) == 0);
  CHECK(swap_distance(Permutation::from_one_based({2, 1, 3}), id) == 1);
  CHECK(swap_distance(Permutation::from_one_based({2, 3, 1}), id) == 2);
  CHECK_THROWS_AS(swap_distance(id, Permutation::identity(4)), std::invalid_argument);
}

TEST_CASE("swap_distance matches the BFS oracle exhaustively") {
  for (std::size_t n = 1; n <= 4; ++n) {
    const auto perms = enumerate_permutations(n);
    for (const auto& a : perms)
      for (const auto& b : perms)
        REQUIRE(swap_distance(a, b) == bfs_swap_distance(a, b));
  }
}

TEST_CASE("swap_distance is a left-invariant metric") {
  for (std::size_t n = 2; n <= 4; ++n) {
    const auto perms = enumerate_permutations(n);
    for (const auto& a : perms) {
      for (const auto& b : perms) {
        const std::size_t d = swap_distance(a, b);
        CHECK(d == swap_distance(b, a));
        CHECK((d == 0) == (a == b));
        for (const auto& c : perms) {
          CHECK(d <= swap_distance(a, c) + swap_distance(c, b));
          CHECK(d == swap_distance(compose(c, a), compose(c, b)));
        }
      }
    }
  }
}

TEST_CASE("enumeration is lexicographic and complete") {
  CHECK(enumerate_permutations(1) == std::vector<Permutation>{Permutation::identity(1)});

  const auto two = enumerate_permutations(2);
  REQUIRE(two.size() == 2);
  CHECK(two[0] == Permutation::from_one_based({1, 2}));
  CHECK(two[1] == Permutation::from_one_based({2, 1}));

  const auto three = enumerate_permutations(3);
  REQUIRE(three.size() == 6);
  CHECK(three.front() == Permutation::from_one_based({1, 2, 3}));
  CHECK(three.back() == Permutation::from_one_based({3, 2, 1}));

  CHECK_THROWS_AS(enumerate_permutations(9), std::invalid_argument);
  CHECK_NOTHROW(enumerate_permutations(9, 9));
}

TEST_CASE("lexicographic rank inverts enumeration") {
  for (std::size_t n = 1; n <= 5; ++n) {
    const auto perms = enumerate_permutations(n);
    for (std::size_t i = 0; i < perms.size(); ++i)
      REQUIRE(lexicographic_rank(perms[i]) == i);
  }
}
