#pragma once

#include <cstdint>

#include "dgr/graph.hpp"

namespace dgr {

// Seeded implicit-feedback generator at MovieLens-100k scale. Items carry a
// topic and a Zipf popularity; each user mixes a few topics and draws items
// without replacement with weight popularity * (topic affinity + noise).
struct SyntheticSpec {
  Index users = 943;
  Index items = 1682;
  Index interactions = 100000;  // approximate target
  Index min_user_degree = 20;
  int topics = 18;
  double topic_concentration = 0.1;  // Dirichlet parameter per topic
  double popularity_exponent = 0.8;
  double noise = 0.02;
  std::uint64_t seed = 2024;
};

InteractionGraph generate_synthetic(const SyntheticSpec& spec);

}  // namespace dgr
