#include "dgr/checkpoint.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "dgr/binary_io.hpp"
#include "dgr/run_config.hpp"

namespace dgr {

namespace {

constexpr const char* kCheckpointMagic = "DGRCKPT1";
constexpr const char* kStateMagic = "DGRSTATE1";

[[noreturn]] void fail(CheckpointErrorCode code, const std::string& what) {
  throw CheckpointError(code, what);
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(CheckpointErrorCode::kIo, "cannot write '" + path.string() + "'");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(CheckpointErrorCode::kIo, "cannot open '" + path.string() + "'");
  return in;
}

void expect_magic(std::istream& in, const char* magic) {
  std::string line;
  if (!std::getline(in, line) || line != magic) fail(CheckpointErrorCode::kBadMagic, "bad magic");
}

// key=value lines up to a blank line, in file order.
std::vector<std::pair<std::string, std::string>> read_header(std::istream& in) {
  std::vector<std::pair<std::string, std::string>> fields;
  std::string line;
  while (true) {
    if (!std::getline(in, line)) fail(CheckpointErrorCode::kTruncated, "truncated header");
    if (line.empty()) return fields;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(CheckpointErrorCode::kBadHeader, "malformed header line '" + line + "'");
    }
    fields.emplace_back(line.substr(0, eq), line.substr(eq + 1));
  }
}

Index header_int(const std::map<std::string, std::string>& fields, const std::string& key) {
  const auto it = fields.find(key);
  if (it == fields.end()) fail(CheckpointErrorCode::kBadHeader, "header lacks '" + key + "'");
  Index value = 0;
  const auto& text = it->second;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || value < 0) {
    fail(CheckpointErrorCode::kBadHeader, "bad value for '" + key + "'");
  }
  return value;
}

double header_double(const std::map<std::string, std::string>& fields, const std::string& key) {
  const auto it = fields.find(key);
  if (it == fields.end()) fail(CheckpointErrorCode::kBadHeader, "header lacks '" + key + "'");
  char* end = nullptr;
  const double value = std::strtod(it->second.c_str(), &end);
  if (end == it->second.c_str() || *end != '\0') {
    fail(CheckpointErrorCode::kBadHeader, "bad value for '" + key + "'");
  }
  return value;
}

template <typename Out, typename Scalar>
void write_matrix(std::ostream& out, const Matrix<Scalar>& m) {
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) binary::write_le<Out>(out, static_cast<Out>(m(r, c)));
  }
}

template <typename In>
Matrix<In> read_matrix(std::istream& in, Index rows, Index cols) {
  Matrix<In> m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) {
      if (!binary::read_le<In>(in, m(r, c))) {
        fail(CheckpointErrorCode::kTruncated, "truncated data");
      }
    }
  }
  return m;
}

void expect_end(std::istream& in) {
  if (in.peek() != std::char_traits<char>::eof()) {
    fail(CheckpointErrorCode::kBadHeader, "trailing bytes after data");
  }
}

}  // namespace

template <typename Scalar>
void save_checkpoint(const std::filesystem::path& path, const Matrix<Scalar>& e0,
                     const TrainConfig& config) {
  std::ofstream out = open_out(path);
  out << kCheckpointMagic << '\n' << "n=" << e0.rows() << '\n' << "T=" << e0.cols() << '\n';
  for (const auto& [key, value] : to_key_values(config)) out << key << '=' << value << '\n';
  out << '\n';
  write_matrix<float>(out, e0);
  if (!out) fail(CheckpointErrorCode::kIo, "write failed for '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path, std::optional<Index> expected_rows,
                           std::optional<Index> expected_dim) {
  std::ifstream in = open_in(path);
  expect_magic(in, kCheckpointMagic);
  const auto fields = read_header(in);
  std::map<std::string, std::string> lookup(fields.begin(), fields.end());
  const Index rows = header_int(lookup, "n");
  const Index dim = header_int(lookup, "T");
  if ((expected_rows && *expected_rows != rows) || (expected_dim && *expected_dim != dim)) {
    fail(CheckpointErrorCode::kDimensionMismatch,
         "dimension mismatch: checkpoint is " + std::to_string(rows) + "x" + std::to_string(dim) +
             ", expected " + (expected_rows ? std::to_string(*expected_rows) : "*") + "x" +
             (expected_dim ? std::to_string(*expected_dim) : "*"));
  }
  Checkpoint ckpt;
  for (const auto& [key, value] : fields) {
    if (key == "n" || key == "T") continue;
    try {
      if (!apply_key_value(ckpt.config, key, value)) {
        fail(CheckpointErrorCode::kBadHeader, "unknown header key '" + key + "'");
      }
    } catch (const UsageError& e) {
      fail(CheckpointErrorCode::kBadHeader, e.what());
    }
  }
  if (ckpt.config.dim != dim) {
    fail(CheckpointErrorCode::kBadHeader, "header T disagrees with dim");
  }
  ckpt.e0 = read_matrix<float>(in, rows, dim);
  expect_end(in);
  return ckpt;
}

template <typename Scalar>
void save_training_state(const std::filesystem::path& path, Trainer<Scalar>& trainer,
                         const FitProgress& progress) {
  std::ofstream out = open_out(path);
  const Matrix<Scalar>& e0 = trainer.embeddings();
  std::ostringstream rng;
  rng << trainer.rng();
  out << kStateMagic << '\n'
      << "n=" << e0.rows() << '\n'
      << "T=" << e0.cols() << '\n'
      << "precision=" << (std::is_same_v<Scalar, float> ? "float32" : "float64") << '\n'
      << "next_epoch=" << progress.next_epoch << '\n'
      << "best_recall=" << format_double(progress.best_recall) << '\n'
      << "best_epoch=" << progress.best_epoch << '\n'
      << "stale_evals=" << progress.stale_evals << '\n'
      << "history=" << progress.history.size() << '\n'
      << "rng=" << rng.str() << '\n';
  for (std::size_t k = 0; k < progress.history.size(); ++k) {
    out << "h" << k << '=' << history_csv_row(progress.history[k]) << '\n';
  }
  out << '\n';
  write_matrix<double>(out, e0);
  const auto& adam = trainer.optimizer();
  write_matrix<double>(out, adam.first);
  write_matrix<double>(out, adam.second);
  for (std::int64_t t : adam.steps) binary::write_le<std::int64_t>(out, t);
  if (!out) fail(CheckpointErrorCode::kIo, "write failed for '" + path.string() + "'");
}

template <typename Scalar>
FitProgress load_training_state(const std::filesystem::path& path, Trainer<Scalar>& trainer) {
  std::ifstream in = open_in(path);
  expect_magic(in, kStateMagic);
  const auto fields = read_header(in);
  std::map<std::string, std::string> lookup(fields.begin(), fields.end());
  const Index rows = header_int(lookup, "n");
  const Index dim = header_int(lookup, "T");
  Matrix<Scalar>& e0 = trainer.embeddings();
  if (rows != e0.rows() || dim != e0.cols()) {
    fail(CheckpointErrorCode::kDimensionMismatch, "training state shape does not match the model");
  }
  const std::string precision = std::is_same_v<Scalar, float> ? "float32" : "float64";
  if (lookup["precision"] != precision) {
    fail(CheckpointErrorCode::kBadHeader, "training state precision does not match the model");
  }

  FitProgress progress;
  progress.next_epoch = static_cast<int>(header_int(lookup, "next_epoch"));
  progress.best_recall = header_double(lookup, "best_recall");
  progress.best_epoch = static_cast<int>(header_int(lookup, "best_epoch"));
  progress.stale_evals = static_cast<int>(header_int(lookup, "stale_evals"));
  const Index history = header_int(lookup, "history");
  for (Index k = 0; k < history; ++k) {
    const auto it = lookup.find("h" + std::to_string(k));
    if (it == lookup.end()) fail(CheckpointErrorCode::kBadHeader, "missing history row");
    HistoryRow row;
    if (std::sscanf(it->second.c_str(), "%d,%lf,%lf,%lf,%lf,%lf", &row.epoch, &row.loss_cf,
                    &row.loss_lec, &row.recall, &row.ndcg, &row.row_diff) != 6) {
      fail(CheckpointErrorCode::kBadHeader, "malformed history row");
    }
    progress.history.push_back(row);
  }
  Rng rng;
  std::istringstream rng_text(lookup["rng"]);
  if (!(rng_text >> rng)) fail(CheckpointErrorCode::kBadHeader, "malformed rng state");

  const Matrix<double> e0_in = read_matrix<double>(in, rows, dim);
  const Matrix<double> first = read_matrix<double>(in, rows, dim);
  const Matrix<double> second = read_matrix<double>(in, rows, dim);
  std::vector<std::int64_t> steps(static_cast<std::size_t>(rows));
  for (auto& t : steps) {
    if (!binary::read_le<std::int64_t>(in, t)) {
      fail(CheckpointErrorCode::kTruncated, "truncated data");
    }
  }
  expect_end(in);

  e0 = e0_in.cast<Scalar>();
  auto& adam = trainer.optimizer();
  adam.first = first.cast<Scalar>();
  adam.second = second.cast<Scalar>();
  adam.steps = std::move(steps);
  trainer.rng() = rng;
  return progress;
}

#define DGR_INSTANTIATE(S)                                                               \
  template void save_checkpoint(const std::filesystem::path&, const Matrix<S>&,          \
                                const TrainConfig&);                                     \
  template void save_training_state(const std::filesystem::path&, Trainer<S>&,           \
                                    const FitProgress&);                                 \
  template FitProgress load_training_state(const std::filesystem::path&, Trainer<S>&);

DGR_INSTANTIATE(float)
DGR_INSTANTIATE(double)

#undef DGR_INSTANTIATE

}  // namespace dgr
