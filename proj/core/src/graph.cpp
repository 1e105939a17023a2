#include "causalmp/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "causalmp/error.hpp"
#include "causalmp/format.hpp"
#include "causalmp/rng.hpp"

namespace causalmp {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(EdgeKind kind) {
  switch (kind) {
    case EdgeKind::kUndirected: return "undirected";
    case EdgeKind::kDirected: return "directed";
    case EdgeKind::kAdded: return "added";
  }
  return "unknown";
}

namespace {

std::string trim(std::string_view s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(begin, end - begin + 1));
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(trim(field));
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

template <typename T>
T parse_number(const std::string& token, const fs::path& file, std::size_t line_no) {
  T value{};
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (!token.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw Error(ErrorCode::kFormat, file.string() + ":" + std::to_string(line_no) +
                                        ": cannot parse '" + token + "'");
  }
  return value;
}

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "missing or unreadable file: " + path.string());
  return in;
}

// Uniform non-adjacent unordered pair, rejection sampled.
Edge sample_non_edge(std::size_t n, const std::set<Edge>& excluded, Rng& rng) {
  std::uniform_int_distribution<NodeId> pick(0, static_cast<NodeId>(n - 1));
  for (int attempt = 0; attempt < 1'000'000; ++attempt) {
    const NodeId a = pick(rng);
    const NodeId b = pick(rng);
    if (a == b) continue;
    const Edge e = Edge{a, b}.canonical();
    if (!excluded.contains(e)) return e;
  }
  throw Error(ErrorCode::kInfeasible, "negative sampling: graph too dense to find non-edges");
}

}  // namespace

std::string format_double(double v) {
  std::array<char, 32> buf;
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

void GraphDataset::validate() const {
  if (features.rows() != n_nodes) {
    throw Error(ErrorCode::kShape, "features have " + std::to_string(features.rows()) +
                                       " rows for " + std::to_string(n_nodes) + " nodes");
  }
  if (!features.all_finite()) throw Error(ErrorCode::kNumeric, "non-finite feature value");
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const Edge& e = edges[k];
    if (e.u >= n_nodes || e.v >= n_nodes) {
      throw Error(ErrorCode::kInvalidArgument, "edge (" + std::to_string(e.u) + "," +
                                                   std::to_string(e.v) + ") out of range");
    }
    if (e.u == e.v) throw Error(ErrorCode::kInvalidArgument, "self-loop in edge set");
    if (e.u > e.v) throw Error(ErrorCode::kInvalidArgument, "edge not canonical (u < v)");
    if (k > 0 && !(edges[k - 1] < e)) {
      throw Error(ErrorCode::kInvalidArgument, "edge list unsorted or duplicated");
    }
  }
  if (labels) {
    if (labels->size() != n_nodes) throw Error(ErrorCode::kShape, "label count mismatch");
    for (int y : *labels) {
      if (y < 0 || (n_classes && y >= *n_classes)) {
        throw Error(ErrorCode::kInvalidArgument, "label out of range");
      }
    }
  }
}

GraphDataset GraphDataset::with_edges(std::vector<Edge> new_edges) const {
  GraphDataset g;
  g.name = name;
  g.n_nodes = n_nodes;
  g.features = features;
  g.labels = labels;
  g.n_classes = n_classes;
  for (Edge& e : new_edges) e = e.canonical();
  std::sort(new_edges.begin(), new_edges.end());
  new_edges.erase(std::unique(new_edges.begin(), new_edges.end()), new_edges.end());
  g.edges = std::move(new_edges);
  return g;
}

GraphDataset load_dataset(const fs::path& dir) {
  GraphDataset g;
  json manifest;
  {
    auto in = open_input(dir / "manifest.json");
    try {
      in >> manifest;
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kFormat, "manifest.json: " + std::string(e.what()));
    }
  }
  std::size_t n_features = 0;
  try {
    g.name = manifest.at("name").get<std::string>();
    g.n_nodes = manifest.at("n_nodes").get<std::size_t>();
    n_features = manifest.at("n_features").get<std::size_t>();
    if (manifest.contains("n_classes") && !manifest["n_classes"].is_null()) {
      g.n_classes = manifest["n_classes"].get<int>();
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, "manifest.json: " + std::string(e.what()));
  }

  {
    const fs::path path = dir / "features.csv";
    auto in = open_input(path);
    std::vector<double> values;
    values.reserve(g.n_nodes * n_features);
    std::string line;
    std::size_t line_no = 0, rows = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (trim(line).empty()) continue;
      const auto fields = split_csv_line(line);
      if (fields.size() != n_features) {
        throw Error(ErrorCode::kShape, path.string() + ":" + std::to_string(line_no) + ": expected " +
                                           std::to_string(n_features) + " values, got " +
                                           std::to_string(fields.size()));
      }
      for (const auto& f : fields) {
        const double v = parse_number<double>(f, path, line_no);
        if (!std::isfinite(v)) {
          throw Error(ErrorCode::kNumeric, path.string() + ":" + std::to_string(line_no) +
                                               ": non-finite feature");
        }
        values.push_back(v);
      }
      ++rows;
    }
    if (rows != g.n_nodes) {
      throw Error(ErrorCode::kShape, "features.csv has " + std::to_string(rows) + " rows, manifest says " +
                                         std::to_string(g.n_nodes));
    }
    g.features = DenseMatrix(g.n_nodes, n_features, std::move(values));
  }

  {
    const fs::path path = dir / "edges.csv";
    auto in = open_input(path);
    std::string line;
    std::size_t line_no = 0;
    std::vector<Edge> edges;
    while (std::getline(in, line)) {
      ++line_no;
      if (trim(line).empty()) continue;
      const auto fields = split_csv_line(line);
      if (fields.size() != 2) {
        throw Error(ErrorCode::kFormat, path.string() + ":" + std::to_string(line_no) +
                                            ": expected 'u,v'");
      }
      const auto u = parse_number<long long>(fields[0], path, line_no);
      const auto v = parse_number<long long>(fields[1], path, line_no);
      const auto n = static_cast<long long>(g.n_nodes);
      if (u < 0 || v < 0 || u >= n || v >= n) {
        throw Error(ErrorCode::kInvalidArgument, path.string() + ":" + std::to_string(line_no) +
                                                     ": node index out of range [0," +
                                                     std::to_string(g.n_nodes) + ")");
      }
      if (u == v) continue;
      edges.push_back(Edge{static_cast<NodeId>(u), static_cast<NodeId>(v)}.canonical());
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    g.edges = std::move(edges);
  }

  if (fs::exists(dir / "labels.csv")) {
    const fs::path path = dir / "labels.csv";
    auto in = open_input(path);
    std::vector<int> labels;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (trim(line).empty()) continue;
      labels.push_back(parse_number<int>(trim(line), path, line_no));
    }
    if (labels.size() != g.n_nodes) {
      throw Error(ErrorCode::kShape, "labels.csv has " + std::to_string(labels.size()) +
                                         " rows, manifest says " + std::to_string(g.n_nodes));
    }
    if (!g.n_classes) g.n_classes = *std::max_element(labels.begin(), labels.end()) + 1;
    g.labels = std::move(labels);
  }

  g.validate();
  return g;
}

void save_dataset(const GraphDataset& graph, const fs::path& dir) {
  graph.validate();
  fs::create_directories(dir);
  {
    json manifest = {{"name", graph.name},
                     {"n_nodes", graph.n_nodes},
                     {"n_features", graph.n_features()},
                     {"n_classes", graph.n_classes ? json(*graph.n_classes) : json(nullptr)}};
    std::ofstream out(dir / "manifest.json");
    out << manifest.dump(2) << '\n';
  }
  {
    std::ofstream out(dir / "features.csv");
    for (std::size_t i = 0; i < graph.n_nodes; ++i) {
      const auto row = graph.features.row(i);
      for (std::size_t j = 0; j < row.size(); ++j) {
        if (j) out << ',';
        out << format_double(row[j]);
      }
      out << '\n';
    }
  }
  {
    std::ofstream out(dir / "edges.csv");
    for (const Edge& e : graph.edges) out << e.u << ',' << e.v << '\n';
  }
  if (graph.labels) {
    std::ofstream out(dir / "labels.csv");
    for (int y : *graph.labels) out << y << '\n';
  }
  if (!fs::exists(dir / "edges.csv")) throw Error(ErrorCode::kIo, "failed writing dataset");
}

double homophily_ratio(std::span<const Edge> edges, std::span<const int> labels) {
  if (edges.empty()) throw Error(ErrorCode::kInvalidArgument, "homophily_ratio: empty edge set");
  std::size_t same = 0;
  for (const Edge& e : edges) {
    if (e.u >= labels.size() || e.v >= labels.size()) {
      throw Error(ErrorCode::kInvalidArgument, "homophily_ratio: missing label for edge endpoint");
    }
    if (labels[e.u] == labels[e.v]) ++same;
  }
  return static_cast<double>(same) / static_cast<double>(edges.size());
}

GraphDataset generate_sbm(const SbmParams& p) {
  const auto n = p.n_nodes;
  const auto c = static_cast<std::size_t>(std::max(p.n_classes, 0));
  if (c < 2 || n < c) {
    throw Error(ErrorCode::kInfeasible, "generate_sbm: need n >= classes >= 2");
  }
  if (!(p.avg_degree > 0.0) || p.target_homophily < 0.0 || p.target_homophily > 1.0 ||
      p.n_features == 0) {
    throw Error(ErrorCode::kInvalidArgument, "generate_sbm: invalid parameters");
  }
  const auto n_edges = static_cast<std::size_t>(std::llround(static_cast<double>(n) * p.avg_degree / 2.0));

  // Round-robin classes: class k holds nodes k, k + c, k + 2c, ...
  std::vector<std::vector<NodeId>> members(c);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = static_cast<int>(i % c);
    members[i % c].push_back(static_cast<NodeId>(i));
  }
  double intra_capacity = 0.0;
  for (const auto& m : members) intra_capacity += static_cast<double>(m.size()) * (m.size() - 1) / 2.0;
  const double total_capacity = static_cast<double>(n) * (n - 1) / 2.0;
  const double inter_capacity = total_capacity - intra_capacity;
  const double expected_intra = p.target_homophily * static_cast<double>(n_edges);
  const double expected_inter = static_cast<double>(n_edges) - expected_intra;
  if (static_cast<double>(n_edges) > total_capacity || expected_intra > 0.9 * intra_capacity ||
      expected_inter > 0.9 * inter_capacity) {
    throw Error(ErrorCode::kInfeasible, "generate_sbm: expected edges exceed simple-graph capacity");
  }

  Rng rng = make_stream(p.seed, 0);
  std::bernoulli_distribution intra(p.target_homophily);
  std::uniform_int_distribution<std::size_t> pick_node(0, n - 1);
  std::uniform_int_distribution<std::size_t> pick_other_class(1, c - 1);
  std::set<Edge> edge_set;
  std::size_t attempts = 0;
  while (edge_set.size() < n_edges) {
    if (++attempts > 100 * n_edges + 10000) {
      throw Error(ErrorCode::kInfeasible, "generate_sbm: could not place requested edges");
    }
    const auto u = static_cast<NodeId>(pick_node(rng));
    const std::size_t cu = u % c;
    const std::size_t cv = intra(rng) ? cu : (cu + pick_other_class(rng)) % c;
    const auto& pool = members[cv];
    std::uniform_int_distribution<std::size_t> pick_member(0, pool.size() - 1);
    const NodeId v = pool[pick_member(rng)];
    if (u == v) continue;
    edge_set.insert(Edge{u, v}.canonical());
  }

  Rng feature_rng = make_stream(p.seed, 1);
  std::normal_distribution<double> normal(0.0, 1.0);
  DenseMatrix means(c, p.n_features);
  for (double& v : means.values()) v = 2.0 * normal(feature_rng);
  DenseMatrix features(n, p.n_features);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < p.n_features; ++j) features(i, j) = means(i % c, j) + normal(feature_rng);

  GraphDataset g;
  g.name = "sbm";
  g.n_nodes = n;
  g.features = std::move(features);
  g.edges.assign(edge_set.begin(), edge_set.end());
  g.labels = std::move(labels);
  g.n_classes = static_cast<int>(c);
  return g;
}

EdgeSplit split_edges(const GraphDataset& graph, const SplitRatios& ratios, std::uint64_t seed) {
  const double sum = ratios.train + ratios.val + ratios.test;
  if (std::abs(sum - 1.0) > 1e-9 || ratios.train < 0 || ratios.val < 0 || ratios.test < 0) {
    throw Error(ErrorCode::kInvalidArgument, "split_edges: ratios must be nonnegative and sum to 1");
  }
  const std::size_t m = graph.edges.size();
  if (m < 10) throw Error(ErrorCode::kInfeasible, "split_edges: need at least 10 edges");
  const auto n_val = static_cast<std::size_t>(std::floor(ratios.val * static_cast<double>(m) + 1e-9));
  const auto n_test = static_cast<std::size_t>(std::floor(ratios.test * static_cast<double>(m) + 1e-9));
  const std::size_t n_train = m - n_val - n_test;
  if (n_val == 0 || n_test == 0 || n_train == 0) {
    throw Error(ErrorCode::kInfeasible, "split_edges: too few edges (" + std::to_string(m) +
                                            ") to populate all splits");
  }

  Rng rng = make_stream(seed, stream::kSplit);
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  EdgeSplit s;
  s.val_idx.assign(order.begin(), order.begin() + n_val);
  s.test_idx.assign(order.begin() + n_val, order.begin() + n_val + n_test);
  s.train_idx.assign(order.begin() + n_val + n_test, order.end());
  for (auto* idx : {&s.train_idx, &s.val_idx, &s.test_idx}) std::sort(idx->begin(), idx->end());
  for (std::size_t i : s.train_idx) s.train_pos.push_back(graph.edges[i]);
  for (std::size_t i : s.val_idx) s.val_pos.push_back(graph.edges[i]);
  for (std::size_t i : s.test_idx) s.test_pos.push_back(graph.edges[i]);

  std::set<Edge> excluded(graph.edges.begin(), graph.edges.end());
  auto draw = [&](std::size_t count, std::vector<Edge>& into) {
    into.reserve(count);
    while (into.size() < count) {
      const Edge e = sample_non_edge(graph.n_nodes, excluded, rng);
      excluded.insert(e);
      into.push_back(e);
    }
  };
  draw(n_train, s.train_neg);
  draw(n_val, s.val_neg);
  draw(n_test, s.test_neg);
  return s;
}

void write_split_json(const EdgeSplit& split, const fs::path& path) {
  auto pairs = [](const std::vector<Edge>& edges) {
    json arr = json::array();
    for (const Edge& e : edges) arr.push_back({e.u, e.v});
    return arr;
  };
  json out = {{"train_pos", split.train_idx}, {"val_pos", split.val_idx},
              {"test_pos", split.test_idx},   {"train_neg", pairs(split.train_neg)},
              {"val_neg", pairs(split.val_neg)}, {"test_neg", pairs(split.test_neg)}};
  std::ofstream f(path);
  if (!f) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  f << out.dump() << '\n';
}

EdgeSplit read_split_json(const fs::path& path, const GraphDataset& graph) {
  auto in = open_input(path);
  EdgeSplit s;
  try {
    json doc;
    in >> doc;
    auto positives = [&](const char* key, std::vector<std::size_t>& idx, std::vector<Edge>& edges) {
      idx = doc.at(key).get<std::vector<std::size_t>>();
      for (std::size_t i : idx) {
        if (i >= graph.edges.size()) throw Error(ErrorCode::kFormat, "split.json: edge index out of range");
        edges.push_back(graph.edges[i]);
      }
    };
    auto negatives = [&](const char* key, std::vector<Edge>& edges) {
      for (const auto& pair : doc.at(key)) {
        edges.push_back(Edge{pair.at(0).get<NodeId>(), pair.at(1).get<NodeId>()});
      }
    };
    positives("train_pos", s.train_idx, s.train_pos);
    positives("val_pos", s.val_idx, s.val_pos);
    positives("test_pos", s.test_idx, s.test_pos);
    negatives("train_neg", s.train_neg);
    negatives("val_neg", s.val_neg);
    negatives("test_neg", s.test_neg);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, "split.json: " + std::string(e.what()));
  }
  return s;
}

}  // namespace causalmp
