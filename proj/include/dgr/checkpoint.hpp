#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "dgr/train_config.hpp"
#include "dgr/trainer.hpp"
#include "dgr/types.hpp"

namespace dgr {

enum class CheckpointErrorCode { kIo, kBadMagic, kBadHeader, kDimensionMismatch, kTruncated };

class CheckpointError : public DataError {
 public:
  CheckpointError(CheckpointErrorCode code, const std::string& what)
      : DataError(what), code_(code) {}
  CheckpointErrorCode code() const { return code_; }

 private:
  CheckpointErrorCode code_;
};

struct Checkpoint {
  TrainConfig config;
  Matrix<float> e0;
};

// Magic line DGRCKPT1, "n=", "T=" and every config key as key=value lines,
// a blank line, then n*T float32 little-endian values in row-major order.
template <typename Scalar>
void save_checkpoint(const std::filesystem::path& path, const Matrix<Scalar>& e0,
                     const TrainConfig& config);

// Throws CheckpointError: kBadMagic ("bad magic"), kBadHeader, kTruncated, or
// kDimensionMismatch when `expected_rows` / `expected_dim` are given and differ.
Checkpoint load_checkpoint(const std::filesystem::path& path,
                           std::optional<Index> expected_rows = std::nullopt,
                           std::optional<Index> expected_dim = std::nullopt);

// Everything beyond the checkpoint needed to continue a run bit-exactly:
// loop progress, RNG state, float64 embeddings, Adam moments and step counters.
template <typename Scalar>
void save_training_state(const std::filesystem::path& path, Trainer<Scalar>& trainer,
                         const FitProgress& progress);

// Restores `trainer` in place and returns the loop progress.
template <typename Scalar>
FitProgress load_training_state(const std::filesystem::path& path, Trainer<Scalar>& trainer);

}  // namespace dgr
