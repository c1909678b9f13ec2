#include "dgr/lec_index.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "dgr/binary_io.hpp"
#include "dgr/log.hpp"

namespace dgr {

void select_similar_and_marginal(std::vector<CoItem> survivors, Index similar_count,
                                 Index marginal_count, std::vector<CoItem>& similar,
                                 std::vector<CoItem>& marginal) {
  std::sort(survivors.begin(), survivors.end(), [](const CoItem& a, const CoItem& b) {
    return a.count != b.count ? a.count > b.count : a.item < b.item;
  });
  const auto total = static_cast<Index>(survivors.size());
  const Index take_similar = std::min(similar_count, total);
  const Index marginal_begin = std::max(take_similar, total - marginal_count);
  similar.assign(survivors.begin(), survivors.begin() + take_similar);
  marginal.assign(survivors.begin() + marginal_begin, survivors.end());
}

LecIndex build_lec_index(const InteractionGraph& train, const LecParams& params) {
  if (params.similar_count < 0 || params.marginal_count < 0 || params.threshold < 0 ||
      params.candidate_cap < 0) {
    throw UsageError("LEC parameters must be nonnegative");
  }
  const Index items = train.num_items();
  LecIndex index;
  index.params = params;
  index.similar.resize(static_cast<std::size_t>(items));
  index.marginal.resize(static_cast<std::size_t>(items));

  std::vector<Index> counts(static_cast<std::size_t>(items), 0);
  std::vector<Index> touched;
  std::vector<CoItem> survivors;
  for (Index i = 0; i < items; ++i) {
    touched.clear();
    Index visits = 0;
    bool capped = false;
    for (Index u : train.item_users(i)) {
      const auto neighbors = train.user_items(u);
      if (params.candidate_cap > 0 &&
          visits + static_cast<Index>(neighbors.size()) > params.candidate_cap) {
        capped = true;
        break;
      }
      visits += static_cast<Index>(neighbors.size());
      for (Index j : neighbors) {
        if (j == i) continue;
        if (counts[static_cast<std::size_t>(j)]++ == 0) touched.push_back(j);
      }
    }
    if (capped) ++index.capped_items;

    survivors.clear();
    for (Index j : touched) {
      const Index count = counts[static_cast<std::size_t>(j)];
      if (count > params.threshold) survivors.push_back({j, count});
      counts[static_cast<std::size_t>(j)] = 0;
    }
    select_similar_and_marginal(survivors, params.similar_count, params.marginal_count,
                                index.similar[static_cast<std::size_t>(i)],
                                index.marginal[static_cast<std::size_t>(i)]);
  }
  if (index.capped_items > 0) {
    log::warn(std::to_string(index.capped_items) +
              " items hit the co-occurrence candidate cap; their counts are partial");
  }
  return index;
}

namespace {

void write_list(std::ostream& out, const std::vector<CoItem>& list) {
  for (const auto& entry : list) out << ' ' << entry.item << ':' << entry.count;
}

std::vector<CoItem> parse_list(const std::string& text, std::size_t line) {
  std::vector<CoItem> list;
  std::istringstream in(text);
  std::string token;
  while (in >> token) {
    const auto colon = token.find(':');
    if (colon == std::string::npos) throw ParseError("expected item:count", line);
    try {
      list.push_back({std::stoll(token.substr(0, colon)), std::stoll(token.substr(colon + 1))});
    } catch (const std::exception&) {
      throw ParseError("bad entry '" + token + "'", line);
    }
  }
  return list;
}

constexpr const char* kTextMagic = "LECINDEX1";
constexpr const char* kBinaryMagic = "DGRLEC1";

void resize_index(LecIndex& index, Index items) {
  if (items < 0) throw DataError("negative item count in LEC index header");
  index.similar.assign(static_cast<std::size_t>(items), {});
  index.marginal.assign(static_cast<std::size_t>(items), {});
}

}  // namespace

void write_lec_index_text(const LecIndex& index, std::ostream& out) {
  out << kTextMagic << " K1=" << index.params.similar_count
      << " K2=" << index.params.marginal_count << " theta=" << index.params.threshold
      << " items=" << index.num_items() << " cap=" << index.params.candidate_cap << '\n';
  for (Index i = 0; i < index.num_items(); ++i) {
    out << i << " |";
    write_list(out, index.similar[static_cast<std::size_t>(i)]);
    out << " |";
    write_list(out, index.marginal[static_cast<std::size_t>(i)]);
    out << '\n';
  }
}

LecIndex read_lec_index_text(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty LEC index");
  std::istringstream header(line);
  std::string magic;
  header >> magic;
  if (magic != kTextMagic) throw DataError("bad magic in LEC index");
  std::map<std::string, Index> fields;
  std::string kv;
  while (header >> kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ParseError("bad header field '" + kv + "'", 1);
    fields[kv.substr(0, eq)] = std::stoll(kv.substr(eq + 1));
  }
  for (const char* key : {"K1", "K2", "theta", "items"}) {
    if (!fields.contains(key)) throw ParseError(std::string("missing header field ") + key, 1);
  }
  LecIndex index;
  index.params.similar_count = fields["K1"];
  index.params.marginal_count = fields["K2"];
  index.params.threshold = fields["theta"];
  if (fields.contains("cap")) index.params.candidate_cap = fields["cap"];
  resize_index(index, fields["items"]);

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto bar1 = line.find('|');
    const auto bar2 = bar1 == std::string::npos ? bar1 : line.find('|', bar1 + 1);
    if (bar2 == std::string::npos) throw ParseError("expected 'i | s-list | m-list'", line_no);
    Index item = 0;
    try {
      item = std::stoll(line.substr(0, bar1));
    } catch (const std::exception&) {
      throw ParseError("bad item id", line_no);
    }
    if (item < 0 || item >= index.num_items()) throw ParseError("item out of range", line_no);
    index.similar[static_cast<std::size_t>(item)] =
        parse_list(line.substr(bar1 + 1, bar2 - bar1 - 1), line_no);
    index.marginal[static_cast<std::size_t>(item)] = parse_list(line.substr(bar2 + 1), line_no);
  }
  return index;
}

void write_lec_index_binary(const LecIndex& index, std::ostream& out) {
  out << kBinaryMagic << '\n'
      << "K1=" << index.params.similar_count << '\n'
      << "K2=" << index.params.marginal_count << '\n'
      << "theta=" << index.params.threshold << '\n'
      << "items=" << index.num_items() << '\n'
      << "cap=" << index.params.candidate_cap << "\n\n";
  auto put_list = [&](const std::vector<CoItem>& list) {
    for (const auto& entry : list) {
      binary::write_le(out, static_cast<std::int32_t>(entry.item));
      binary::write_le(out, static_cast<std::int32_t>(entry.count));
    }
  };
  for (Index i = 0; i < index.num_items(); ++i) {
    const auto& s = index.similar[static_cast<std::size_t>(i)];
    const auto& m = index.marginal[static_cast<std::size_t>(i)];
    binary::write_le(out, static_cast<std::int32_t>(s.size()));
    binary::write_le(out, static_cast<std::int32_t>(m.size()));
    put_list(s);
    put_list(m);
  }
}

LecIndex read_lec_index_binary(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kBinaryMagic) {
    throw DataError("bad magic in LEC index");
  }
  std::map<std::string, Index> fields;
  while (std::getline(in, line) && !line.empty()) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw DataError("bad LEC header line '" + line + "'");
    fields[line.substr(0, eq)] = std::stoll(line.substr(eq + 1));
  }
  LecIndex index;
  index.params.similar_count = fields["K1"];
  index.params.marginal_count = fields["K2"];
  index.params.threshold = fields["theta"];
  if (fields.contains("cap")) index.params.candidate_cap = fields["cap"];
  resize_index(index, fields["items"]);
  auto get_list = [&](std::int32_t size, std::vector<CoItem>& list) {
    list.resize(static_cast<std::size_t>(size));
    for (auto& entry : list) {
      std::int32_t item = 0;
      std::int32_t count = 0;
      if (!binary::read_le(in, item) || !binary::read_le(in, count)) {
        throw DataError("truncated LEC index");
      }
      entry = {item, count};
    }
  };
  for (Index i = 0; i < index.num_items(); ++i) {
    std::int32_t ns = 0;
    std::int32_t nm = 0;
    if (!binary::read_le(in, ns) || !binary::read_le(in, nm) || ns < 0 || nm < 0) {
      throw DataError("truncated LEC index");
    }
    get_list(ns, index.similar[static_cast<std::size_t>(i)]);
    get_list(nm, index.marginal[static_cast<std::size_t>(i)]);
  }
  return index;
}

void save_lec_index(const LecIndex& index, const std::filesystem::path& path, bool binary) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  if (binary) {
    write_lec_index_binary(index, out);
  } else {
    write_lec_index_text(index, out);
  }
}

LecIndex load_lec_index(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::string first;
  std::getline(in, first);
  in.seekg(0);
  if (first == kBinaryMagic) return read_lec_index_binary(in);
  return read_lec_index_text(in);
}

}  // namespace dgr
