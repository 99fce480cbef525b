// Copyright 2026 The spikevit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "spikevit/tensor.hpp"

using namespace spikevit;
using spikevit::test::random_tensor;

namespace {

// Tensor whose value at (y, x) is the token index y * w + x.
DenseTensor token_ids(std::size_t h, std::size_t w) {
  DenseTensor x({1, 1, h, w, 1});
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t c = 0; c < w; ++c) x.at(0, 0, y, c, 0) = static_cast<double>(y * w + c);
  return x;
}

std::vector<double> ids(const DenseTensor& g) { return {g.data().begin(), g.data().end()}; }

}  // namespace

TEST_SUITE("tensor_core") {
  TEST_CASE("channel split keeps channel order") {
    const DenseTensor x = random_tensor({2, 1, 2, 2, 4}, 1);
    auto [lo, hi] = channel_split(x, 2);
    CHECK(lo.shape().c == 2);
    CHECK(hi.shape().c == 2);
    CHECK(lo.at(1, 0, 1, 0, 1) == x.at(1, 0, 1, 0, 1));
    CHECK(hi.at(1, 0, 1, 0, 0) == x.at(1, 0, 1, 0, 2));
    auto [empty, all] = channel_split(x, 0);
    CHECK(empty.shape().c == 0);
    CHECK(empty.data().empty());
    CHECK(std::ranges::equal(all.data(), x.data()));
    CHECK(std::ranges::equal(channel_concat(lo, hi).data(), x.data()));
    CHECK_THROWS_AS(channel_split(x, 5), BoundsError);
  }

  TEST_CASE("split ratio places the boundary") {
    CHECK(GroupingPlan::from_ratio(96, 0.5, 4).split_channel == 48);
    CHECK(GroupingPlan::from_ratio(96, 0.5, 4).group_count() == 16);
  }

  TEST_CASE("strided groups take every n-th token") {
    const auto g = strided_groups(token_ids(4, 4), 2);
    REQUIRE(g.size() == 4);
    CHECK(ids(g[0]) == std::vector<double>{0, 2, 8, 10});
    CHECK(ids(g[1]) == std::vector<double>{1, 3, 9, 11});
    CHECK(ids(strided_groups(token_ids(4, 4), 1)[0]) == ids(token_ids(4, 4)));
    const auto big = strided_groups(token_ids(28, 28), 4);
    CHECK(big.size() == 16);
    CHECK(big[5].shape().h == 7);
    CHECK(big[5].shape().w == 7);
  }

  TEST_CASE("window groups are contiguous tiles") {
    const auto g = window_groups(token_ids(4, 4), 2);
    REQUIRE(g.size() == 4);
    CHECK(ids(g[0]) == std::vector<double>{0, 1, 4, 5});
    CHECK(ids(g[3]) == std::vector<double>{10, 11, 14, 15});
    const auto w = window_groups(token_ids(14, 14), 2);
    CHECK(w.size() == 4);
    CHECK(w[0].shape().tokens() == 49);
  }

  TEST_CASE("groups partition the token set") {
    for (GroupMode mode : {GroupMode::strided, GroupMode::window}) {
      for (std::size_t n : {1, 2, 3, 6}) {
        std::multiset<double> seen;
        for (const DenseTensor& g : make_groups(token_ids(6, 6), mode, n))
          seen.insert(g.data().begin(), g.data().end());
        CHECK(seen.size() == 36);
        CHECK(std::set<double>(seen.begin(), seen.end()).size() == 36);
      }
    }
  }

  TEST_CASE("regroup inverts grouping exactly") {
    for (std::uint64_t seed : {1, 7, 42, 1337}) {
      const DenseTensor x = random_tensor({3, 2, 8, 8, 5}, seed);
      for (std::size_t n : {1, 2, 4}) {
        for (GroupMode mode : {GroupMode::strided, GroupMode::window}) {
          const DenseTensor back = regroup(make_groups(x, mode, n), mode, n, x.shape());
          CHECK(test::max_abs_diff(back.data(), x.data()) == 0.0);
        }
      }
    }
  }

  TEST_CASE("grouping rejects sizes that do not divide") {
    CHECK_THROWS_AS(strided_groups(token_ids(6, 6), 4), ShapeError);
    CHECK_THROWS_AS(window_groups(token_ids(6, 6), 0), ShapeError);
  }

  TEST_CASE("temporal average") {
    DenseTensor x({2, 1, 1, 1, 1}, std::vector<double>{1.0, 3.0});
    CHECK(temporal_average(x).data()[0] == 2.0);
    const DenseTensor one = random_tensor({1, 2, 2, 2, 3}, 3);
    CHECK(std::ranges::equal(temporal_average(one).data(), one.data()));
  }

  TEST_CASE("temporal average ignores the order of time-steps") {
    const DenseTensor x = random_tensor({4, 2, 3, 3, 2}, 9);
    const std::size_t slab = x.data().size() / 4;
    DenseTensor p(x.shape());
    const std::size_t perm[] = {2, 0, 3, 1};
    for (std::size_t t = 0; t < 4; ++t)
      std::copy_n(x.data().begin() + perm[t] * slab, slab, p.data().begin() + t * slab);
    CHECK(test::max_abs_diff(temporal_average(p).data(), temporal_average(x).data()) < 1e-15);
  }

  TEST_CASE("shape validation") {
    CHECK_THROWS_AS(DenseTensor(TensorShape{0, 1, 1, 1, 1}), ShapeError);
    CHECK_NOTHROW(DenseTensor(TensorShape{1, 1, 1, 1, 0}));
    CHECK_THROWS(DenseTensor(TensorShape{1, 1, 1, 1, 2}, std::vector<double>{1.0}));
  }

  TEST_CASE("spike tensor amplitude check") {
    DenseTensor codes({2, 1, 1, 1, 2}, std::vector<double>{1.0, 0.0, 2.0, 0.0});
    CHECK_NOTHROW(SpikeTensor(codes, 0.5, 2.0, false, 2).check_amplitudes());
    DenseTensor bad({2, 1, 1, 1, 2}, std::vector<double>{1.0, 0.0, 3.0, 0.0});
    CHECK_THROWS_AS(SpikeTensor(bad, 0.5, 2.0, false, 2).check_amplitudes(),
                    UnsupportedAmplitudeError);
    DenseTensor neg({2, 1, 1, 1, 2}, std::vector<double>{-1.0, 0.0, 0.0, 0.0});
    CHECK_THROWS_AS(SpikeTensor(neg, 0.5, 2.0, false, 2).check_amplitudes(),
                    UnsupportedAmplitudeError);
    CHECK_NOTHROW(SpikeTensor(neg, 0.5, 2.0, true, 2).check_amplitudes());
    CHECK(SpikeTensor(codes, 0.5, 2.0, false, 2).values().data()[2] == 1.0);
  }
}
