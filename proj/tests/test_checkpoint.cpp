#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "dgr/checkpoint.hpp"
#include "test_support.hpp"

namespace dgr {
namespace {

using testing::random_connected_graph;
using testing::random_matrix;
using testing::TestRng;

class CheckpointTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("dgr_ckpt_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    std::filesystem::remove_all(dir_);
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }

  std::filesystem::path path(const std::string& name) const { return dir_ / name; }

  CheckpointErrorCode load_error(const std::filesystem::path& p,
                                 std::optional<Index> rows = std::nullopt,
                                 std::optional<Index> dim = std::nullopt) {
    try {
      load_checkpoint(p, rows, dim);
    } catch (const CheckpointError& e) {
      last_message_ = e.what();
      return e.code();
    }
    ADD_FAILURE() << "load_checkpoint did not throw";
    return CheckpointErrorCode::kIo;
  }

  std::filesystem::path dir_;
  std::string last_message_;
};

TEST_F(CheckpointTest, RoundTripIsExact) {
  TestRng rng(1);
  TrainConfig config;
  config.dim = 5;
  config.lr = 0.1 + 0.2;
  config.alpha = {0.1, 0.8, 0.1};
  const Matrix<float> e0 = random_matrix<float>(13, 5, rng);
  save_checkpoint(path("a.ckpt"), e0, config);
  const Checkpoint back = load_checkpoint(path("a.ckpt"), 13, 5);
  EXPECT_EQ(back.e0, e0);
  EXPECT_EQ(back.config, config);

  // File size: header then exactly n*T float32 values.
  std::ifstream in(path("a.ckpt"), std::ios::binary);
  std::string first;
  std::getline(in, first);
  EXPECT_EQ(first, "DGRCKPT1");
  const auto size = std::filesystem::file_size(path("a.ckpt"));
  std::ifstream whole(path("a.ckpt"), std::ios::binary);
  const std::string all((std::istreambuf_iterator<char>(whole)), std::istreambuf_iterator<char>());
  const auto blank = all.find("\n\n");
  ASSERT_NE(blank, std::string::npos);
  EXPECT_EQ(size - (blank + 2), 13u * 5u * 4u);
}

TEST_F(CheckpointTest, DoubleEmbeddingsAreStoredAsFloat) {
  TestRng rng(2);
  TrainConfig config;
  config.dim = 3;
  const Matrix<double> e0 = random_matrix(4, 3, rng);
  save_checkpoint(path("d.ckpt"), e0, config);
  EXPECT_EQ(load_checkpoint(path("d.ckpt")).e0, e0.cast<float>());
}

TEST_F(CheckpointTest, BadMagic) {
  std::ofstream(path("bad.ckpt")) << "NOTACKPT\nn=1\nT=1\n\n";
  EXPECT_EQ(load_error(path("bad.ckpt")), CheckpointErrorCode::kBadMagic);
  EXPECT_EQ(last_message_, "bad magic");
}

TEST_F(CheckpointTest, DimensionMismatch) {
  TrainConfig config;
  config.dim = 4;
  save_checkpoint(path("m.ckpt"), Matrix<float>::Zero(6, 4).eval(), config);
  EXPECT_EQ(load_error(path("m.ckpt"), 7, 4), CheckpointErrorCode::kDimensionMismatch);
  EXPECT_EQ(load_error(path("m.ckpt"), 6, 8), CheckpointErrorCode::kDimensionMismatch);
}

TEST_F(CheckpointTest, Truncated) {
  TrainConfig config;
  config.dim = 4;
  save_checkpoint(path("t.ckpt"), Matrix<float>::Ones(6, 4).eval(), config);
  std::filesystem::resize_file(path("t.ckpt"), std::filesystem::file_size(path("t.ckpt")) - 3);
  EXPECT_EQ(load_error(path("t.ckpt")), CheckpointErrorCode::kTruncated);

  std::ofstream(path("h.ckpt")) << "DGRCKPT1\nn=1\nT=1\n";
  EXPECT_EQ(load_error(path("h.ckpt")), CheckpointErrorCode::kTruncated);
}

TEST_F(CheckpointTest, MalformedHeaders) {
  std::ofstream(path("k.ckpt")) << "DGRCKPT1\nn=1\nT=64\nbogus=1\n\n";
  EXPECT_EQ(load_error(path("k.ckpt")), CheckpointErrorCode::kBadHeader);
  std::ofstream(path("v.ckpt")) << "DGRCKPT1\nn=1\nT=64\nlr=fast\n\n";
  EXPECT_EQ(load_error(path("v.ckpt")), CheckpointErrorCode::kBadHeader);
  std::ofstream(path("t.ckpt")) << "DGRCKPT1\nn=1\nT=3\n\n";
  EXPECT_EQ(load_error(path("t.ckpt")), CheckpointErrorCode::kBadHeader);  // dim=64 by default
  std::ofstream(path("n.ckpt")) << "DGRCKPT1\nT=64\n\n";
  EXPECT_EQ(load_error(path("n.ckpt")), CheckpointErrorCode::kBadHeader);
}

TEST_F(CheckpointTest, TrailingBytesRejected) {
  TrainConfig config;
  config.dim = 2;
  save_checkpoint(path("x.ckpt"), Matrix<float>::Ones(2, 2).eval(), config);
  std::ofstream(path("x.ckpt"), std::ios::app | std::ios::binary) << "junk";
  EXPECT_EQ(load_error(path("x.ckpt")), CheckpointErrorCode::kBadHeader);
}

TEST_F(CheckpointTest, MissingFile) {
  EXPECT_EQ(load_error(path("none.ckpt")), CheckpointErrorCode::kIo);
}

template <typename S>
void check_training_state_round_trip(const std::filesystem::path& file) {
  TestRng rng(3);
  const auto g = random_connected_graph(8, 10, 0.25, rng);
  TrainConfig c;
  c.layers = 2;
  c.alpha = {0.2, 0.4};
  c.dim = 4;
  c.batch_size = 8;
  c.lec_k1 = 2;
  c.lec_k2 = 2;
  c.lec_theta = 0;
  c.seed = 5;

  Trainer<S> a(c, g);
  a.run_epoch();
  a.run_epoch();
  FitProgress progress;
  progress.next_epoch = 3;
  progress.best_recall = 0.25;
  progress.best_epoch = 2;
  progress.stale_evals = 1;
  progress.history = {{1, 0.7, 0.1, 0.2, 0.1, 1.5}, {2, 0.6, 0.09, 0.25, 0.125, 1.25}};
  save_training_state(file, a, progress);

  Trainer<S> b(c, g);
  const FitProgress restored = load_training_state(file, b);
  EXPECT_EQ(restored.next_epoch, 3);
  EXPECT_EQ(restored.best_recall, 0.25);
  EXPECT_EQ(restored.best_epoch, 2);
  EXPECT_EQ(restored.stale_evals, 1);
  EXPECT_EQ(restored.history, progress.history);
  EXPECT_EQ(b.embeddings(), a.embeddings());

  // Continuing both must stay bit-identical.
  for (int epoch = 0; epoch < 2; ++epoch) EXPECT_EQ(a.run_epoch(), b.run_epoch());
  EXPECT_EQ(a.embeddings(), b.embeddings());
  EXPECT_EQ(a.optimizer().steps, b.optimizer().steps);
}

TEST_F(CheckpointTest, TrainingStateRoundTripFloat) {
  check_training_state_round_trip<float>(path("f.state"));
}

TEST_F(CheckpointTest, TrainingStateRoundTripDouble) {
  check_training_state_round_trip<double>(path("d.state"));
}

TEST_F(CheckpointTest, TrainingStateShapeMismatch) {
  TestRng rng(4);
  const auto g = random_connected_graph(4, 4, 0.3, rng);
  TrainConfig c;
  c.layers = 1;
  c.alpha = {0.1};
  c.dim = 3;
  c.lec_enabled = false;
  Trainer<double> a(c, g);
  save_training_state(path("s.state"), a, {});
  c.dim = 5;
  Trainer<double> b(c, g);
  try {
    load_training_state(path("s.state"), b);
    FAIL();
  } catch (const CheckpointError& e) {
    EXPECT_EQ(e.code(), CheckpointErrorCode::kDimensionMismatch);
  }
  Trainer<float> f(c, g);
  EXPECT_THROW(load_training_state(path("s.state"), f), CheckpointError);
}

}  // namespace
}  // namespace dgr
