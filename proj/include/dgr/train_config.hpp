#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dgr/types.hpp"

namespace dgr {

enum class Precision { kFloat32, kFloat64 };

enum class SteadyRefresh { kEveryStep, kEveryEpoch };

struct TrainConfig {
  int layers = 3;
  int dim = 64;
  double lr = 1e-3;
  int batch_size = 2048;
  int epochs = 300;
  double lambda = 0.1;
  std::vector<double> alpha{0.1, 0.8, 0.1};
  Index lec_k1 = 30;
  Index lec_k2 = 50;
  Index lec_theta = 50;
  // 0 means exact enumeration.
  Index lec_candidate_cap = 200000;
  bool lec_normalize_pairs = false;
  double l2 = 1e-4;
  std::uint64_t seed = 2024;
  int eval_every = 5;
  std::vector<Index> eval_ks{20};
  bool gmp_enabled = true;
  bool lec_enabled = true;
  // Use the initial-residual rule with `alpha` instead of desmoothing.
  bool residual_rule = false;
  bool differentiate_steady_state = false;
  SteadyRefresh steady_refresh = SteadyRefresh::kEveryStep;
  Precision precision = Precision::kFloat32;
  double init_std = 0.1;
  int patience = 20;
  bool track_row_diff = true;
  int threads = 1;
  bool deterministic = true;

  // Throws UsageError on any out-of-range value.
  void validate() const;

  // Alpha schedule actually applied (zeros when desmoothing is disabled).
  std::vector<double> effective_alpha() const;

  bool operator==(const TrainConfig&) const = default;
};

// Plain "key = value" lines for every field, in a fixed order.
std::vector<std::pair<std::string, std::string>> to_key_values(const TrainConfig& config);

// Applies one key; returns false when the key is not a TrainConfig field.
// Throws UsageError on a malformed value.
bool apply_key_value(TrainConfig& config, const std::string& key, const std::string& value);

std::string precision_name(Precision p);

}  // namespace dgr
