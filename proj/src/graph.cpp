#include "dgr/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>
#include <unordered_map>

namespace dgr {

namespace {

void build_csr(Index rows, const std::vector<std::pair<Index, Index>>& sorted_edges,
               bool by_first, std::vector<Index>& offsets, std::vector<Index>& cols) {
  offsets.assign(static_cast<std::size_t>(rows + 1), 0);
  for (const auto& [a, b] : sorted_edges) {
    ++offsets[static_cast<std::size_t>((by_first ? a : b) + 1)];
  }
  std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
  cols.resize(sorted_edges.size());
  std::vector<Index> cursor(offsets.begin(), offsets.end() - 1);
  for (const auto& [a, b] : sorted_edges) {
    const Index row = by_first ? a : b;
    cols[static_cast<std::size_t>(cursor[static_cast<std::size_t>(row)]++)] =
        by_first ? b : a;
  }
}

}  // namespace

InteractionGraph::InteractionGraph(Index num_users, Index num_items,
                                   std::vector<std::pair<Index, Index>> edges)
    : num_users_(num_users), num_items_(num_items) {
  if (num_users < 0 || num_items < 0) {
    throw DataError("graph sizes must be nonnegative");
  }
  for (const auto& [u, i] : edges) {
    if (u < 0 || u >= num_users || i < 0 || i >= num_items) {
      throw DataError("edge (" + std::to_string(u) + ", " + std::to_string(i) +
                      ") out of range");
    }
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  // Sorting by (u, i) makes both CSR directions come out ascending: user rows
  // are filled in ascending item order, item rows in ascending user order.
  build_csr(num_users, edges, true, user_offsets_, user_cols_);
  build_csr(num_items, edges, false, item_offsets_, item_cols_);
}

bool InteractionGraph::has_edge(Index u, Index i) const {
  const auto items = user_items(u);
  return std::binary_search(items.begin(), items.end(), i);
}

std::vector<std::pair<Index, Index>> InteractionGraph::edges() const {
  std::vector<std::pair<Index, Index>> out;
  out.reserve(user_cols_.size());
  for (Index u = 0; u < num_users_; ++u) {
    for (Index i : user_items(u)) out.emplace_back(u, i);
  }
  return out;
}

Index InteractionGraph::connected_components() const {
  const Index n = num_nodes();
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  std::vector<Index> stack;
  Index components = 0;
  for (Index start = 0; start < n; ++start) {
    if (seen[static_cast<std::size_t>(start)]) continue;
    ++components;
    seen[static_cast<std::size_t>(start)] = 1;
    stack.push_back(start);
    while (!stack.empty()) {
      const Index a = stack.back();
      stack.pop_back();
      auto visit = [&](Index b) {
        if (!seen[static_cast<std::size_t>(b)]) {
          seen[static_cast<std::size_t>(b)] = 1;
          stack.push_back(b);
        }
      };
      if (a < num_users_) {
        for (Index i : user_items(a)) visit(num_users_ + i);
      } else {
        for (Index u : item_users(a - num_users_)) visit(u);
      }
    }
  }
  return components;
}

InputFormat parse_input_format(const std::string& name) {
  if (name == "adjacency-list" || name == "adj") return InputFormat::kAdjacencyList;
  if (name == "pair-list" || name == "pairs") return InputFormat::kPairList;
  throw UsageError("unknown input format '" + name + "'");
}

std::string LoadReport::to_text() const {
  std::ostringstream os;
  os << "users " << num_users << "\n"
     << "items " << num_items << "\n"
     << "edges " << num_edges << "\n"
     << "duplicates_dropped " << duplicates_dropped << "\n"
     << "users_reindexed " << (users_reindexed ? 1 : 0) << "\n"
     << "items_reindexed " << (items_reindexed ? 1 : 0) << "\n"
     << "min_degree " << min_degree << "\n"
     << "max_degree " << max_degree << "\n"
     << "mean_degree " << mean_degree << "\n"
     << "zero_degree_users " << zero_degree_users << "\n"
     << "zero_degree_items " << zero_degree_items << "\n";
  return os.str();
}

LoadReport make_load_report(const InteractionGraph& graph) {
  LoadReport r;
  r.num_users = graph.num_users();
  r.num_items = graph.num_items();
  r.num_edges = graph.num_edges();
  const Index n = graph.num_nodes();
  if (n > 0) {
    r.min_degree = graph.node_degree(0);
    r.max_degree = graph.node_degree(0);
  }
  Index total = 0;
  for (Index a = 0; a < n; ++a) {
    const Index d = graph.node_degree(a);
    r.min_degree = std::min(r.min_degree, d);
    r.max_degree = std::max(r.max_degree, d);
    total += d;
    if (d == 0) {
      (a < graph.num_users() ? r.zero_degree_users : r.zero_degree_items)++;
    }
  }
  r.mean_degree = n > 0 ? static_cast<double>(total) / static_cast<double>(n) : 0.0;
  return r;
}

namespace {

class IdMap {
 public:
  Index intern(Index raw) {
    auto [it, inserted] = index_.try_emplace(raw, static_cast<Index>(order_.size()));
    if (inserted) order_.push_back(raw);
    max_raw_ = std::max(max_raw_, raw);
    return it->second;
  }

  // True when the raw ids are exactly {0, ..., count-1}.
  bool contiguous() const {
    return max_raw_ + 1 == static_cast<Index>(order_.size());
  }

  Index size() const { return static_cast<Index>(order_.size()); }
  const std::vector<Index>& order() const { return order_; }

 private:
  std::unordered_map<Index, Index> index_;
  std::vector<Index> order_;
  Index max_raw_ = -1;
};

Index parse_id(std::string_view token, std::size_t line) {
  Index value = 0;
  const auto* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (ec != std::errc() || ptr != end || value < 0) {
    throw ParseError("invalid id '" + std::string(token) + "'", line);
  }
  return value;
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    const std::size_t start = pos;
    while (pos < s.size() && !std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    if (pos > start) out.push_back(s.substr(start, pos - start));
  }
  return out;
}

}  // namespace

LoadResult parse_interactions(std::istream& in, InputFormat format) {
  IdMap users;
  IdMap items;
  std::vector<std::pair<Index, Index>> raw_edges;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tokens = split_ws(line);
    if (tokens.empty() || tokens.front().front() == '#') continue;
    if (format == InputFormat::kPairList) {
      if (tokens.size() != 2) {
        throw ParseError("expected 'user item', got " + std::to_string(tokens.size()) +
                             " fields",
                         line_no);
      }
      const Index u = parse_id(tokens[0], line_no);
      const Index i = parse_id(tokens[1], line_no);
      raw_edges.emplace_back(u, i);
      users.intern(u);
      items.intern(i);
    } else {
      const Index u = parse_id(tokens[0], line_no);
      users.intern(u);
      for (std::size_t k = 1; k < tokens.size(); ++k) {
        const Index i = parse_id(tokens[k], line_no);
        raw_edges.emplace_back(u, i);
        items.intern(i);
      }
    }
  }
  if (raw_edges.empty()) {
    throw DataError("dataset contains no interactions");
  }

  const bool remap_users = !users.contiguous();
  const bool remap_items = !items.contiguous();
  LoadResult result;
  result.user_ids.resize(static_cast<std::size_t>(users.size()));
  result.item_ids.resize(static_cast<std::size_t>(items.size()));
  for (Index k = 0; k < users.size(); ++k) {
    const Index raw = users.order()[static_cast<std::size_t>(k)];
    result.user_ids[static_cast<std::size_t>(remap_users ? k : raw)] = raw;
  }
  for (Index k = 0; k < items.size(); ++k) {
    const Index raw = items.order()[static_cast<std::size_t>(k)];
    result.item_ids[static_cast<std::size_t>(remap_items ? k : raw)] = raw;
  }

  const std::size_t raw_count = raw_edges.size();
  for (auto& [u, i] : raw_edges) {
    if (remap_users) u = users.intern(u);
    if (remap_items) i = items.intern(i);
  }
  result.graph = InteractionGraph(users.size(), items.size(), std::move(raw_edges));
  result.report = make_load_report(result.graph);
  result.report.duplicates_dropped =
      static_cast<Index>(raw_count) - result.graph.num_edges();
  result.report.users_reindexed = remap_users;
  result.report.items_reindexed = remap_items;
  return result;
}

LoadResult load_interactions(const std::filesystem::path& path, InputFormat format) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open '" + path.string() + "'");
  }
  return parse_interactions(in, format);
}

void save_pair_list(const InteractionGraph& graph, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  for (Index u = 0; u < graph.num_users(); ++u) {
    for (Index i : graph.user_items(u)) out << u << ' ' << i << '\n';
  }
}

std::pair<InteractionGraph, InteractionGraph> split_train_test(
    const InteractionGraph& graph, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw UsageError("split ratio must lie in (0, 1)");
  }
  std::mt19937_64 rng(seed);
  std::vector<std::pair<Index, Index>> train;
  std::vector<std::pair<Index, Index>> test;
  std::vector<Index> items;
  for (Index u = 0; u < graph.num_users(); ++u) {
    const auto span = graph.user_items(u);
    items.assign(span.begin(), span.end());
    std::shuffle(items.begin(), items.end(), rng);
    const auto d = static_cast<Index>(items.size());
    Index keep = std::lround(ratio * static_cast<double>(d));
    if (d >= 1 && keep == 0) keep = 1;
    for (Index k = 0; k < d; ++k) {
      (k < keep ? train : test).emplace_back(u, items[static_cast<std::size_t>(k)]);
    }
  }
  return {InteractionGraph(graph.num_users(), graph.num_items(), std::move(train)),
          InteractionGraph(graph.num_users(), graph.num_items(), std::move(test))};
}

NormalizedAdjacency build_normalized_adjacency(const InteractionGraph& graph) {
  NormalizedAdjacency adj;
  adj.n = graph.num_nodes();
  adj.num_users = graph.num_users();
  adj.degree.resize(static_cast<std::size_t>(adj.n));
  for (Index a = 0; a < adj.n; ++a) adj.degree[static_cast<std::size_t>(a)] = graph.node_degree(a);

  const auto nnz = static_cast<std::size_t>(2 * graph.num_edges() + adj.n);
  adj.row_offsets.reserve(static_cast<std::size_t>(adj.n + 1));
  adj.cols.reserve(nnz);
  adj.values.reserve(nnz);
  adj.row_offsets.push_back(0);
  auto push = [&](Index a, Index b) {
    adj.cols.push_back(b);
    // The product (d_a+1)(d_b+1) is exact in double, so each entry is rounded once.
    const double da = static_cast<double>(adj.degree[static_cast<std::size_t>(a)] + 1);
    const double db = static_cast<double>(adj.degree[static_cast<std::size_t>(b)] + 1);
    adj.values.push_back(a == b ? 1.0 / da : 1.0 / std::sqrt(da * db));
  };
  const Index nu = graph.num_users();
  for (Index u = 0; u < nu; ++u) {
    push(u, u);
    for (Index i : graph.user_items(u)) push(u, nu + i);
    adj.row_offsets.push_back(static_cast<Index>(adj.cols.size()));
  }
  for (Index i = 0; i < graph.num_items(); ++i) {
    for (Index u : graph.item_users(i)) push(nu + i, u);
    push(nu + i, nu + i);
    adj.row_offsets.push_back(static_cast<Index>(adj.cols.size()));
  }
  adj.values_f32.assign(adj.values.begin(), adj.values.end());
  return adj;
}

Matrix<double> NormalizedAdjacency::to_dense() const {
  Matrix<double> dense = Matrix<double>::Zero(n, n);
  for (Index a = 0; a < n; ++a) {
    for (Index e = row_offsets[static_cast<std::size_t>(a)];
         e < row_offsets[static_cast<std::size_t>(a + 1)]; ++e) {
      dense(a, cols[static_cast<std::size_t>(e)]) = values[static_cast<std::size_t>(e)];
    }
  }
  return dense;
}

namespace {

template <typename Scalar>
void spmm_rows(const NormalizedAdjacency& adj, const Matrix<Scalar>& dense,
               Matrix<Scalar>& out, Index begin, Index end) {
  const Index width = dense.cols();
  const Scalar* vals = adj.values_as<Scalar>();
  const Scalar* in = dense.data();
  for (Index a = begin; a < end; ++a) {
    Scalar* row = out.data() + a * width;
    std::fill(row, row + width, Scalar(0));
    for (Index e = adj.row_offsets[static_cast<std::size_t>(a)];
         e < adj.row_offsets[static_cast<std::size_t>(a + 1)]; ++e) {
      const Scalar v = vals[e];
      const Scalar* src = in + adj.cols[static_cast<std::size_t>(e)] * width;
      for (Index t = 0; t < width; ++t) row[t] += v * src[t];
    }
  }
}

}  // namespace

template <typename Scalar>
void spmm(const NormalizedAdjacency& adj, const Matrix<Scalar>& dense,
          Matrix<Scalar>& out, int threads) {
  if (dense.rows() != adj.n) {
    throw UsageError("spmm: dense operand has " + std::to_string(dense.rows()) +
                     " rows, adjacency has " + std::to_string(adj.n));
  }
  if (&out == &dense) {
    throw UsageError("spmm: output must not alias input");
  }
  out.resize(adj.n, dense.cols());
  const Index blocks = std::clamp<Index>(threads, 1, std::max<Index>(adj.n, 1));
  if (blocks == 1) {
    spmm_rows(adj, dense, out, 0, adj.n);
    return;
  }
  std::vector<std::jthread> workers;
  workers.reserve(static_cast<std::size_t>(blocks));
  for (Index b = 0; b < blocks; ++b) {
    const Index begin = adj.n * b / blocks;
    const Index end = adj.n * (b + 1) / blocks;
    workers.emplace_back([&, begin, end] { spmm_rows(adj, dense, out, begin, end); });
  }
}

template void spmm<float>(const NormalizedAdjacency&, const Matrix<float>&,
                          Matrix<float>&, int);
template void spmm<double>(const NormalizedAdjacency&, const Matrix<double>&,
                           Matrix<double>&, int);

int default_thread_count() {
  if (const char* env = std::getenv("DGR_THREADS")) {
    const int value = std::atoi(env);
    if (value >= 1) return value;
  }
  return 1;
}

}  // namespace dgr
