#include "igsd/graph.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "igsd/rng.hpp"

namespace igsd {

namespace {

long long parse_int_token(const std::string& token, const std::string& file) {
  std::size_t pos = 0;
  long long value = 0;
  try {
    value = std::stoll(token, &pos);
  } catch (const std::exception&) {
    throw FormatError(file + ": non-integer token '" + token + "'");
  }
  // allow trailing whitespace only
  for (std::size_t i = pos; i < token.size(); ++i) {
    if (!std::isspace(static_cast<unsigned char>(token[i])))
      throw FormatError(file + ": non-integer token '" + token + "'");
  }
  return value;
}

std::vector<long long> read_int_column(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IOError("missing required file: " + path);
  std::vector<long long> values;
  std::string line;
  while (std::getline(in, line)) {
    // strip whitespace-only lines
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    values.push_back(parse_int_token(line, path));
  }
  return values;
}

std::vector<std::pair<long long, long long>> read_edge_pairs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IOError("missing required file: " + path);
  std::vector<std::pair<long long, long long>> pairs;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    auto comma = line.find(',');
    if (comma == std::string::npos)
      throw FormatError(path + ": expected 'u, v' but got '" + line + "'");
    long long u = parse_int_token(line.substr(0, comma), path);
    long long v = parse_int_token(line.substr(comma + 1), path);
    pairs.emplace_back(u, v);
  }
  return pairs;
}

}  // namespace

Mat Graph::adjacency() const {
  Mat a = Mat::Zero(node_count, node_count);
  for (const Edge& e : edges) a(e.u, e.v) = e.weight;
  return a;
}

int Graph::undirected_edge_count() const {
  int n = 0;
  for (const Edge& e : edges)
    if (e.u <= e.v) ++n;
  return n;
}

void Graph::validate() const {
  if (node_count <= 0) throw ValueError("graph must have at least one node");
  if (node_features.rows() != node_count)
    throw ShapeError("node_features rows must equal node_count");
  std::set<std::pair<int, int>> seen;
  std::map<std::pair<int, int>, double> weight_of;
  for (const Edge& e : edges) {
    if (e.u < 0 || e.u >= node_count || e.v < 0 || e.v >= node_count)
      throw ValueError("edge endpoint outside [0, node_count)");
    if (!std::isfinite(e.weight)) throw ValueError("edge weight must be finite");
    if (!seen.insert({e.u, e.v}).second) throw ValueError("duplicate edge entry");
    weight_of[{e.u, e.v}] = e.weight;
  }
  for (const auto& [key, w] : weight_of) {
    auto rev = weight_of.find({key.second, key.first});
    if (rev == weight_of.end() || rev->second != w)
      throw ValueError("edge set is not symmetric");
  }
}

Graph make_undirected_graph(int node_count, const std::vector<Edge>& undirected_edges,
                            Mat node_features, std::optional<int> label) {
  std::map<std::pair<int, int>, double> canon;
  for (const Edge& e : undirected_edges) {
    int a = std::min(e.u, e.v), b = std::max(e.u, e.v);
    canon[{a, b}] = e.weight;
  }
  Graph g;
  g.node_count = node_count;
  g.node_features = std::move(node_features);
  g.label = label;
  for (const auto& [key, w] : canon) {
    g.edges.push_back({key.first, key.second, w});
    if (key.first != key.second) g.edges.push_back({key.second, key.first, w});
  }
  return g;
}

void GraphDataset::validate() const {
  for (const Graph& g : graphs) {
    g.validate();
    if (g.node_features.cols() != feature_dim)
      throw ShapeError("all graphs must share feature_dim");
    if (g.label && (*g.label < 0 || *g.label >= num_classes))
      throw ValueError("graph label outside [0, num_classes)");
  }
}

UnlabeledDataset strip_labels(const GraphDataset& ds) {
  UnlabeledDataset out{ds};
  for (Graph& g : out.data.graphs) g.label.reset();
  return out;
}

void assign_degree_features(std::vector<Graph>& graphs, int max_degree_cap) {
  int max_degree = 0;
  std::vector<std::vector<int>> degrees;
  degrees.reserve(graphs.size());
  for (const Graph& g : graphs) {
    std::vector<int> deg(g.node_count, 0);
    for (const Edge& e : g.edges) deg[e.u]++;
    for (int d : deg) max_degree = std::max(max_degree, d);
    degrees.push_back(std::move(deg));
  }
  const int dim = std::min(max_degree, max_degree_cap) + 1;
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    Mat f = Mat::Zero(graphs[i].node_count, dim);
    for (int v = 0; v < graphs[i].node_count; ++v)
      f(v, std::min(degrees[i][v], max_degree_cap)) = 1.0;
    graphs[i].node_features = std::move(f);
  }
}

GraphDataset parse_tu_dataset(const std::string& dir_path, const std::string& name,
                              int max_degree_cap) {
  namespace fs = std::filesystem;
  const std::string prefix = (fs::path(dir_path) / name).string() + "_";

  const auto indicator = read_int_column(prefix + "graph_indicator.txt");
  const auto raw_graph_labels = read_int_column(prefix + "graph_labels.txt");
  const auto edge_pairs = read_edge_pairs(prefix + "A.txt");
  if (indicator.empty()) throw FormatError(prefix + "graph_indicator.txt: empty");

  // Graph ids may be arbitrary; remap in order of first appearance.
  std::map<long long, int> graph_id_of;
  std::vector<int> node_graph(indicator.size());       // node -> graph index
  std::vector<int> node_local(indicator.size());       // node -> index within graph
  std::vector<int> node_counts;
  for (std::size_t k = 0; k < indicator.size(); ++k) {
    auto [it, inserted] = graph_id_of.try_emplace(indicator[k], static_cast<int>(node_counts.size()));
    if (inserted) node_counts.push_back(0);
    node_graph[k] = it->second;
    node_local[k] = node_counts[it->second]++;
  }
  const int graph_count = static_cast<int>(node_counts.size());
  if (static_cast<int>(raw_graph_labels.size()) != graph_count)
    throw FormatError(prefix + "graph_labels.txt: expected " + std::to_string(graph_count) +
                      " labels, found " + std::to_string(raw_graph_labels.size()));

  // Undirected edge sets per graph, 0-indexed local endpoints.
  std::vector<std::map<std::pair<int, int>, double>> edge_sets(graph_count);
  const long long node_total = static_cast<long long>(indicator.size());
  for (const auto& [gu, gv] : edge_pairs) {
    if (gu < 1 || gu > node_total || gv < 1 || gv > node_total)
      throw FormatError(prefix + "A.txt: node id outside [1, " + std::to_string(node_total) + "]");
    const int giu = node_graph[gu - 1], giv = node_graph[gv - 1];
    if (giu != giv)
      throw FormatError(prefix + "A.txt: edge (" + std::to_string(gu) + ", " + std::to_string(gv) +
                        ") connects different graphs");
    int a = node_local[gu - 1], b = node_local[gv - 1];
    if (a > b) std::swap(a, b);
    edge_sets[giu][{a, b}] = 1.0;
  }

  // Remap graph labels to contiguous [0, C).
  std::set<long long> label_values(raw_graph_labels.begin(), raw_graph_labels.end());
  std::map<long long, int> label_rank;
  for (long long v : label_values) label_rank.emplace(v, static_cast<int>(label_rank.size()));

  std::vector<Graph> graphs(graph_count);
  for (int gi = 0; gi < graph_count; ++gi) {
    std::vector<Edge> undirected;
    undirected.reserve(edge_sets[gi].size());
    for (const auto& [key, w] : edge_sets[gi]) undirected.push_back({key.first, key.second, w});
    graphs[gi] = make_undirected_graph(node_counts[gi], undirected, Mat(), label_rank.at(raw_graph_labels[gi]));
  }

  // Node features: one-hot node labels when present, degree one-hots otherwise.
  int node_label_count = 0;
  const std::string node_label_path = prefix + "node_labels.txt";
  if (fs::exists(node_label_path)) {
    const auto raw_node_labels = read_int_column(node_label_path);
    if (raw_node_labels.size() != indicator.size())
      throw FormatError(node_label_path + ": expected one label per node");
    std::set<long long> values(raw_node_labels.begin(), raw_node_labels.end());
    std::map<long long, int> rank;
    for (long long v : values) rank.emplace(v, static_cast<int>(rank.size()));
    node_label_count = static_cast<int>(rank.size());
    for (int gi = 0; gi < graph_count; ++gi)
      graphs[gi].node_features = Mat::Zero(node_counts[gi], node_label_count);
    for (std::size_t k = 0; k < raw_node_labels.size(); ++k)
      graphs[node_graph[k]].node_features(node_local[k], rank.at(raw_node_labels[k])) = 1.0;
  } else {
    assign_degree_features(graphs, max_degree_cap);
  }

  GraphDataset ds;
  ds.graphs = std::move(graphs);
  ds.num_classes = static_cast<int>(label_rank.size());
  ds.feature_dim = static_cast<int>(ds.graphs.front().node_features.cols());
  ds.name = name;
  ds.node_label_count = node_label_count;
  ds.validate();
  return ds;
}

void write_tu_dataset(const GraphDataset& ds, const std::string& dir_path) {
  namespace fs = std::filesystem;
  fs::create_directories(dir_path);
  const std::string prefix = (fs::path(dir_path) / ds.name).string() + "_";

  std::ofstream a_file(prefix + "A.txt");
  std::ofstream ind_file(prefix + "graph_indicator.txt");
  std::ofstream label_file(prefix + "graph_labels.txt");
  if (!a_file || !ind_file || !label_file)
    throw IOError("cannot write TU files under " + dir_path);
  std::ofstream node_label_file;
  if (ds.node_label_count > 0) {
    node_label_file.open(prefix + "node_labels.txt");
    if (!node_label_file) throw IOError("cannot write TU files under " + dir_path);
  }

  long long node_offset = 0;
  for (int gi = 0; gi < ds.size(); ++gi) {
    const Graph& g = ds.graphs[gi];
    std::vector<std::pair<int, int>> directed;
    for (const Edge& e : g.edges) directed.emplace_back(e.u, e.v);
    std::sort(directed.begin(), directed.end());
    for (const auto& [u, v] : directed)
      a_file << (node_offset + u + 1) << ", " << (node_offset + v + 1) << "\n";
    for (int v = 0; v < g.node_count; ++v) {
      ind_file << (gi + 1) << "\n";
      if (ds.node_label_count > 0) {
        int arg = 0;
        g.node_features.row(v).maxCoeff(&arg);
        node_label_file << arg << "\n";
      }
    }
    label_file << g.label.value_or(0) << "\n";
    node_offset += g.node_count;
  }
}

SemiSplit split_semi(const GraphDataset& ds, const SplitSpec& spec) {
  const int n = ds.size();
  if (n == 0) throw ConfigError("split_semi: empty dataset");
  if (spec.labeled_fraction <= 0.0 || spec.labeled_fraction > 1.0)
    throw ConfigError("split_semi: labeled_fraction must lie in (0, 1]");
  std::vector<std::vector<int>> by_class(ds.num_classes);
  for (int i = 0; i < n; ++i) {
    if (!ds.graphs[i].label) throw ConfigError("split_semi: every graph must be labeled");
    by_class[*ds.graphs[i].label].push_back(i);
  }
  const double exact_total = spec.labeled_fraction * n;
  if (exact_total + 1e-9 < ds.num_classes)
    throw ConfigError("split_semi: labeled_fraction too small to cover every class");
  long long target = std::llround(exact_total);
  target = std::max<long long>(target, ds.num_classes);
  target = std::min<long long>(target, n);

  // Largest-remainder quotas with a floor of one per class.
  std::vector<long long> quota(ds.num_classes);
  std::vector<double> remainder(ds.num_classes);
  long long assigned = 0;
  for (int c = 0; c < ds.num_classes; ++c) {
    if (by_class[c].empty()) throw ConfigError("split_semi: class " + std::to_string(c) + " has no graphs");
    const double share = spec.labeled_fraction * by_class[c].size();
    quota[c] = std::max<long long>(1, static_cast<long long>(std::floor(share)));
    remainder[c] = share - std::floor(share);
    assigned += quota[c];
  }
  auto next_class = [&](bool grow) {
    int best = -1;
    for (int c = 0; c < ds.num_classes; ++c) {
      const bool feasible = grow ? quota[c] < static_cast<long long>(by_class[c].size()) : quota[c] > 1;
      if (!feasible) continue;
      if (best < 0) { best = c; continue; }
      if (grow ? remainder[c] > remainder[best] : remainder[c] < remainder[best]) best = c;
    }
    return best;
  };
  while (assigned < target) {
    int c = next_class(true);
    if (c < 0) break;
    ++quota[c];
    remainder[c] -= 1.0;
    ++assigned;
  }
  while (assigned > target) {
    int c = next_class(false);
    if (c < 0) break;
    --quota[c];
    remainder[c] += 1.0;
    --assigned;
  }

  SemiSplit split;
  for (int c = 0; c < ds.num_classes; ++c) {
    auto pool = by_class[c];
    auto rng = make_rng(spec.seed, {0x5EED5u, static_cast<std::uint64_t>(c)});
    std::shuffle(pool.begin(), pool.end(), rng);
    for (std::size_t i = 0; i < pool.size(); ++i)
      (i < static_cast<std::size_t>(quota[c]) ? split.labeled : split.unlabeled).push_back(pool[i]);
  }
  std::sort(split.labeled.begin(), split.labeled.end());
  std::sort(split.unlabeled.begin(), split.unlabeled.end());
  return split;
}

std::vector<FoldSplit> make_folds(int item_count, int fold_count, std::uint64_t seed) {
  if (fold_count < 2) throw ConfigError("make_folds: fold_count must be >= 2");
  if (fold_count > item_count) throw ConfigError("make_folds: fold_count exceeds dataset size");
  std::vector<int> order(item_count);
  std::iota(order.begin(), order.end(), 0);
  auto rng = make_rng(seed, {0xF01D5u});
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<FoldSplit> folds(fold_count);
  const int base = item_count / fold_count;
  const int extra = item_count % fold_count;
  int pos = 0;
  for (int f = 0; f < fold_count; ++f) {
    const int size = base + (f < extra ? 1 : 0);
    folds[f].test.assign(order.begin() + pos, order.begin() + pos + size);
    pos += size;
  }
  for (int f = 0; f < fold_count; ++f) {
    for (int g = 0; g < fold_count; ++g)
      if (g != f)
        folds[f].train.insert(folds[f].train.end(), folds[g].test.begin(), folds[g].test.end());
    std::sort(folds[f].train.begin(), folds[f].train.end());
    std::sort(folds[f].test.begin(), folds[f].test.end());
  }
  return folds;
}

std::vector<FoldSplit> make_folds(const GraphDataset& ds, int fold_count, std::uint64_t seed) {
  return make_folds(ds.size(), fold_count, seed);
}

std::vector<std::vector<int>> batch_iter(const std::vector<int>& indices, int batch_size,
                                         std::uint64_t seed, bool shuffle) {
  if (batch_size < 1) throw ConfigError("batch_iter: batch_size must be >= 1");
  std::vector<int> order = indices;
  if (shuffle) {
    auto rng = make_rng(seed, {0xBA7C4u});
    std::shuffle(order.begin(), order.end(), rng);
  }
  std::vector<std::vector<int>> batches;
  for (std::size_t pos = 0; pos < order.size(); pos += batch_size) {
    const auto end = std::min(order.size(), pos + batch_size);
    batches.emplace_back(order.begin() + pos, order.begin() + end);
  }
  return batches;
}

}  // namespace igsd
