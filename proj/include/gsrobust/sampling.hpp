// SPDX-FileCopyrightText: 2026 gsrobust authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "gsrobust/error.hpp"

namespace gsrobust {

/// 64-bit Mersenne Twister; the only randomness source in the library.
using Rng = std::mt19937_64;

/// Uniform draw in (0, 1], built from the top 53 bits so results do not
/// depend on the standard library's distribution implementation.
inline double uniform_open_closed(Rng& rng) {
  return 1.0 - static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Efraimidis-Spirakis key log(u) / w: keeping the `count` largest keys is a
/// weighted draw without replacement with selection weights w.
inline double weighted_key(double weight, Rng& rng) { return std::log(uniform_open_closed(rng)) / weight; }

/// Returns the positions (ascending) of the `count` largest keys. Ties go to the lower position.
inline std::vector<std::size_t> top_keys(std::span<const double> keys, std::size_t count) {
  require(count <= keys.size(), ErrorKind::contract, "cannot select more items than available");
  std::vector<std::size_t> order(keys.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto better = [&](std::size_t x, std::size_t y) { return keys[x] > keys[y] || (keys[x] == keys[y] && x < y); };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count), order.end(), better);
  order.resize(count);
  std::sort(order.begin(), order.end());
  return order;
}

/// Weighted sampling without replacement; weights must be positive.
inline std::vector<std::size_t> weighted_sample_without_replacement(std::span<const double> weights, std::size_t count,
                                                                    Rng& rng) {
  std::vector<double> keys(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!(weights[i] > 0.0)) fail(ErrorKind::contract, "sampling weights must be strictly positive");
    keys[i] = weighted_key(weights[i], rng);
  }
  return top_keys(keys, count);
}

/// Splits `total` into integer parts proportional to `fractions` (largest remainder).
inline std::vector<std::size_t> apportion(std::size_t total, std::span<const double> fractions) {
  std::vector<std::size_t> parts(fractions.size(), 0);
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t s = 0; s < fractions.size(); ++s) {
    const double exact = fractions[s] * static_cast<double>(total);
    parts[s] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    assigned += parts[s];
    remainders.emplace_back(exact - static_cast<double>(parts[s]), s);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& x, const auto& y) { return x.first > y.first; });
  for (std::size_t r = 0; assigned < total && r < remainders.size(); ++r, ++assigned) ++parts[remainders[r].second];
  while (assigned > total) {
    // Only reachable through the floor slack above; trim from the largest part.
    auto it = std::max_element(parts.begin(), parts.end());
    --*it;
    --assigned;
  }
  return parts;
}

}  // namespace gsrobust
