#include "doctest.h"
#include "specseg/grid.hpp"

using namespace specseg;

TEST_CASE("one_hot picks the requested class") {
  LabelMask m(1, 2, 2, std::vector<std::uint8_t>{0, 1});
  const auto g = one_hot(m, 1);
  CHECK(g[0] == 0.0F);
  CHECK(g[1] == 1.0F);

  LabelMask zeros(2, 2, 3);
  const auto all_ones = one_hot(zeros, 0);
  for (const float v : all_ones.values()) CHECK(v == 1.0F);

  LabelMask m3(2, 2, 3, std::vector<std::uint8_t>{0, 1, 2, 1});
  CHECK(one_hot(m3, 1) == Grid(2, 2, std::vector<float>{0, 1, 0, 1}));
  CHECK_THROWS_AS((void)one_hot(m3, 3), ArgumentError);
  CHECK_THROWS_AS((void)one_hot(m3, -1), ArgumentError);
}

TEST_CASE("one_hot channels sum to one") {
  LabelMask m(3, 4, 4, std::vector<std::uint8_t>{0, 1, 2, 3, 3, 2, 1, 0, 1, 1, 2, 0});
  const auto ch = one_hot_channels(m);
  REQUIRE(ch.size() == 4);
  for (std::size_t i = 0; i < m.size(); ++i) {
    float s = 0.0F;
    for (const auto& g : ch) s += g[i];
    CHECK(s == 1.0F);
  }
}

TEST_CASE("elementwise arithmetic and reductions") {
  CHECK(reduce_sum(Grid(2, 2, 1.0F)) == 4.0);
  CHECK(scale(Grid(1, 2, std::vector<float>{1, 2}), 0.5F) == Grid(1, 2, std::vector<float>{0.5F, 1.0F}));
  const Grid a(1, 2, std::vector<float>{1, 0});
  const Grid b(1, 2, std::vector<float>{0, 1});
  CHECK(add(a, b) == Grid(1, 2, std::vector<float>{1, 1}));
  CHECK(sub(a, b) == Grid(1, 2, std::vector<float>{1, -1}));
  CHECK(mul(a, b) == Grid(1, 2, std::vector<float>{0, 0}));
  // inputs untouched, repeated calls bitwise identical
  CHECK(a == Grid(1, 2, std::vector<float>{1, 0}));
  CHECK(add(a, b) == add(a, b));
  CHECK_THROWS_AS((void)add(a, Grid(2, 1)), ArgumentError);
  CHECK_THROWS_AS((void)dot(a, Grid(1, 3)), ArgumentError);
}

TEST_CASE("construction rejects bad shapes and labels") {
  CHECK_THROWS_AS(Grid(0, 3), ArgumentError);
  CHECK_THROWS_AS(Grid(2, 2, std::vector<float>{1, 2, 3}), ArgumentError);
  CHECK_THROWS_AS(LabelMask(2, 1, 2, std::vector<std::uint8_t>{0, 2}), ArgumentError);
  CHECK_THROWS_AS(LabelMask(2, 2, 0), ArgumentError);
  LabelMask m(2, 2, 2);
  CHECK_THROWS_AS(m.set(0, 0, 2), ArgumentError);
}

TEST_CASE("argmax breaks ties toward the lowest class") {
  Channels ch{Grid(1, 3, std::vector<float>{0.5F, 0.2F, 0.3F}),
              Grid(1, 3, std::vector<float>{0.5F, 0.7F, 0.3F}),
              Grid(1, 3, std::vector<float>{0.0F, 0.1F, 0.4F})};
  const auto m = argmax(ch);
  CHECK(m[0] == 0);
  CHECK(m[1] == 1);
  CHECK(m[2] == 2);
}
