#include "dgr/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace dgr {

InteractionGraph generate_synthetic(const SyntheticSpec& spec) {
  if (spec.users < 1 || spec.items < 2 || spec.topics < 1 || spec.min_user_degree < 1 ||
      spec.min_user_degree > spec.items) {
    throw UsageError("synthetic: invalid shape");
  }
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<Index> rank(static_cast<std::size_t>(spec.items));
  std::iota(rank.begin(), rank.end(), 0);
  std::shuffle(rank.begin(), rank.end(), rng);
  std::uniform_int_distribution<int> pick_topic(0, spec.topics - 1);
  std::vector<double> popularity(rank.size());
  std::vector<int> topic(rank.size());
  for (std::size_t i = 0; i < rank.size(); ++i) {
    popularity[i] = std::pow(static_cast<double>(rank[i] + 1), -spec.popularity_exponent);
    topic[i] = pick_topic(rng);
  }

  // Heavy-tailed user degrees above the minimum, rescaled toward the target.
  std::lognormal_distribution<double> extra(0.0, 1.0);
  std::vector<double> raw(static_cast<std::size_t>(spec.users));
  for (auto& r : raw) r = extra(rng);
  const double budget = std::max<double>(
      0.0, static_cast<double>(spec.interactions - spec.users * spec.min_user_degree));
  const double scale = budget / std::accumulate(raw.begin(), raw.end(), 0.0);
  const Index max_degree = std::max(spec.min_user_degree, spec.items / 2);

  std::gamma_distribution<double> gamma(spec.topic_concentration, 1.0);
  std::vector<std::pair<Index, Index>> edges;
  std::vector<double> mix(static_cast<std::size_t>(spec.topics));
  std::vector<std::pair<double, Index>> keys(rank.size());
  for (Index u = 0; u < spec.users; ++u) {
    double total = 0.0;
    for (auto& m : mix) total += (m = gamma(rng));
    if (total <= 0.0) {
      mix.assign(mix.size(), 0.0);
      mix[static_cast<std::size_t>(pick_topic(rng))] = 1.0;
      total = 1.0;
    }
    const Index degree = std::min<Index>(
        max_degree, spec.min_user_degree + std::llround(scale * raw[static_cast<std::size_t>(u)]));
    // Weighted sampling without replacement: largest log(U) / w wins.
    for (std::size_t i = 0; i < rank.size(); ++i) {
      const double w =
          popularity[i] * (mix[static_cast<std::size_t>(topic[i])] / total + spec.noise);
      keys[i] = {std::log(1.0 - unit(rng)) / w, static_cast<Index>(i)};
    }
    std::partial_sort(keys.begin(), keys.begin() + degree, keys.end(),
                      [](const auto& a, const auto& b) { return a.first > b.first; });
    for (Index k = 0; k < degree; ++k) edges.emplace_back(u, keys[static_cast<std::size_t>(k)].second);
  }
  return InteractionGraph(spec.users, spec.items, std::move(edges));
}

}  // namespace dgr
