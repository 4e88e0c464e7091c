#include "hvsim/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <utility>

#include "hvsim/random.hpp"

namespace hvsim {

void Dataset::add(std::span<const double> features, double label) {
  if (dim == 0 && y.empty()) dim = features.size();
  if (features.size() != dim) throw std::invalid_argument("dataset row has the wrong dimension");
  x.insert(x.end(), features.begin(), features.end());
  y.push_back(label);
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.dim = dim;
  out.x.reserve(rows.size() * dim);
  out.y.reserve(rows.size());
  for (std::size_t r : rows) {
    const auto v = row(r);
    out.x.insert(out.x.end(), v.begin(), v.end());
    out.y.push_back(y[r]);
  }
  return out;
}

RegressionTree::RegressionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw std::invalid_argument("regression tree needs at least one node");
  for (const auto& n : nodes_) {
    if (n.feature >= 0 && (n.left <= 0 || n.right <= 0 || static_cast<std::size_t>(n.left) >= nodes_.size() ||
                           static_cast<std::size_t>(n.right) >= nodes_.size())) {
      throw std::invalid_argument("regression tree has a dangling child index");
    }
  }
}

double RegressionTree::predict(std::span<const double> x) const {
  std::size_t k = 0;
  while (nodes_[k].feature >= 0) {
    const auto& n = nodes_[k];
    k = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
  }
  return nodes_[k].value;
}

int RegressionTree::depth() const {
  std::vector<std::pair<int, int>> stack{{0, 0}};
  int deepest = 0;
  while (!stack.empty()) {
    const auto [k, d] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, d);
    const auto& n = nodes_[static_cast<std::size_t>(k)];
    if (n.feature >= 0) {
      stack.push_back({n.left, d + 1});
      stack.push_back({n.right, d + 1});
    }
  }
  return deepest;
}

ForestModel::ForestModel(std::size_t dim, std::vector<RegressionTree> trees, ForestParams params, std::uint64_t seed)
    : dim_(dim), trees_(std::move(trees)), params_(params), seed_(seed) {
  for (const auto& t : trees_) {
    for (const auto& n : t.nodes()) {
      if (n.feature >= static_cast<int>(dim_)) throw std::invalid_argument("tree splits on a feature beyond dim");
    }
  }
}

std::vector<double> ForestModel::tree_outputs(std::span<const double> x) const {
  if (x.size() != dim_) throw std::invalid_argument("feature vector dimension does not match the forest");
  std::vector<double> out;
  out.reserve(trees_.size());
  for (const auto& t : trees_) out.push_back(t.predict(x));
  return out;
}

double ForestModel::predict(std::span<const double> x) const {
  if (x.size() != dim_) throw std::invalid_argument("feature vector dimension does not match the forest");
  if (trees_.empty()) throw std::invalid_argument("forest has no trees");
  double acc = 0.0;
  for (const auto& t : trees_) acc += t.predict(x);
  return std::max(0.0, acc / static_cast<double>(trees_.size()));
}

nlohmann::json ForestModel::to_json() const {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : trees_) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : t.nodes()) nodes.push_back({n.feature, n.threshold, n.left, n.right, n.value, n.count});
    trees.push_back(std::move(nodes));
  }
  return {{"dim", dim_},
          {"seed", seed_},
          {"params",
           {{"num_trees", params_.num_trees},
            {"max_depth", params_.max_depth},
            {"min_leaf", params_.min_leaf},
            {"features_per_split", params_.features_per_split}}},
          {"trees", std::move(trees)}};
}

ForestModel ForestModel::from_json(const nlohmann::json& j) {
  ForestParams p;
  const auto& jp = j.at("params");
  p.num_trees = jp.at("num_trees").get<int>();
  p.max_depth = jp.at("max_depth").get<int>();
  p.min_leaf = jp.at("min_leaf").get<int>();
  p.features_per_split = jp.at("features_per_split").get<int>();
  std::vector<RegressionTree> trees;
  for (const auto& jt : j.at("trees")) {
    std::vector<TreeNode> nodes;
    for (const auto& n : jt) {
      if (!n.is_array() || n.size() != 6) throw std::invalid_argument("tree node must have 6 entries");
      nodes.push_back({n[0].get<int>(), n[1].get<double>(), n[2].get<int>(), n[3].get<int>(), n[4].get<double>(),
                       n[5].get<int>()});
    }
    trees.emplace_back(std::move(nodes));
  }
  return ForestModel(j.at("dim").get<std::size_t>(), std::move(trees), p, j.at("seed").get<std::uint64_t>());
}

namespace {

struct SplitCandidate {
  int feature = -1;
  double threshold = 0.0;
  double score = 0.0;  // sum_l^2/n_l + sum_r^2/n_r, larger is better
};

class TreeBuilder {
 public:
  TreeBuilder(const Dataset& data, const ForestParams& params, int mtry, Rng& rng)
      : data_(data), params_(params), mtry_(mtry), rng_(rng), order_(data.dim) {
    std::iota(order_.begin(), order_.end(), 0);
  }

  RegressionTree build(std::vector<std::size_t> rows) {
    nodes_.clear();
    grow(rows, 0);
    return RegressionTree(std::move(nodes_));
  }

 private:
  int grow(std::vector<std::size_t>& rows, int depth) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back({});
    double sum = 0.0;
    double lo = data_.y[rows.front()];
    double hi = lo;
    for (std::size_t r : rows) {
      sum += data_.y[r];
      lo = std::min(lo, data_.y[r]);
      hi = std::max(hi, data_.y[r]);
    }
    const auto n = static_cast<int>(rows.size());
    nodes_[id].value = sum / n;
    nodes_[id].count = n;

    if (depth >= params_.max_depth || n < 2 * params_.min_leaf || lo == hi) return id;

    const SplitCandidate best = find_split(rows, sum);
    if (best.feature < 0) return id;

    const auto f = static_cast<std::size_t>(best.feature);
    const auto mid = std::stable_partition(rows.begin(), rows.end(), [&](std::size_t r) {
      return data_.x[r * data_.dim + f] <= best.threshold;
    });
    std::vector<std::size_t> left(rows.begin(), mid);
    std::vector<std::size_t> right(mid, rows.end());
    rows.clear();
    rows.shrink_to_fit();

    nodes_[id].feature = best.feature;
    nodes_[id].threshold = best.threshold;
    const int l = grow(left, depth + 1);
    const int r = grow(right, depth + 1);
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
  }

  SplitCandidate find_split(const std::vector<std::size_t>& rows, double total) {
    // Partial Fisher-Yates picks mtry distinct features.
    for (int k = 0; k < mtry_; ++k) {
      std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(k), order_.size() - 1);
      std::swap(order_[static_cast<std::size_t>(k)], order_[pick(rng_)]);
    }
    const auto n = rows.size();
    const auto min_leaf = static_cast<std::size_t>(params_.min_leaf);
    SplitCandidate best;
    best.score = total * total / static_cast<double>(n);  // no-split baseline
    const double baseline = best.score;

    scratch_.resize(n);
    for (int k = 0; k < mtry_; ++k) {
      const std::size_t f = order_[static_cast<std::size_t>(k)];
      for (std::size_t i = 0; i < n; ++i) scratch_[i] = {data_.x[rows[i] * data_.dim + f], data_.y[rows[i]]};
      std::sort(scratch_.begin(), scratch_.end());
      double left_sum = 0.0;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        left_sum += scratch_[i].second;
        const std::size_t nl = i + 1;
        if (nl < min_leaf) continue;
        if (n - nl < min_leaf) break;
        const double a = scratch_[i].first;
        const double b = scratch_[i + 1].first;
        if (a == b) continue;
        const double right_sum = total - left_sum;
        const double score =
            left_sum * left_sum / static_cast<double>(nl) + right_sum * right_sum / static_cast<double>(n - nl);
        if (score > best.score) {
          double thr = a + (b - a) / 2.0;
          if (!(thr < b)) thr = a;
          best = {static_cast<int>(f), thr, score};
        }
      }
    }
    // Round-off "gains" on numerically pure nodes are not splits.
    if (best.feature >= 0 && best.score <= baseline * (1.0 + 1e-12)) best.feature = -1;
    return best;
  }

  const Dataset& data_;
  const ForestParams& params_;
  int mtry_;
  Rng& rng_;
  std::vector<std::size_t> order_;
  std::vector<std::pair<double, double>> scratch_;
  std::vector<TreeNode> nodes_;
};

}  // namespace

ForestModel train_forest(const Dataset& data, const ForestParams& params, std::uint64_t seed) {
  if (data.size() == 0) throw std::invalid_argument("cannot train a forest on an empty dataset");
  if (data.dim == 0 || data.x.size() != data.size() * data.dim) throw std::invalid_argument("malformed dataset");
  if (params.num_trees < 1 || params.max_depth < 0 || params.min_leaf < 1 || params.features_per_split < 0) {
    throw std::invalid_argument("invalid forest parameters");
  }
  for (double y : data.y) {
    if (!std::isfinite(y) || y < 0.0) throw std::invalid_argument("forest labels must be finite and >= 0");
  }
  int mtry = params.features_per_split;
  if (mtry == 0) mtry = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(data.dim))));
  mtry = std::min(mtry, static_cast<int>(data.dim));

  const std::size_t n = data.size();
  std::vector<RegressionTree> trees;
  trees.reserve(static_cast<std::size_t>(params.num_trees));
  for (int t = 0; t < params.num_trees; ++t) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
    std::uniform_int_distribution<std::size_t> draw(0, n - 1);
    std::vector<std::size_t> rows(n);
    for (auto& r : rows) r = draw(rng);
    TreeBuilder builder(data, params, mtry, rng);
    trees.push_back(builder.build(std::move(rows)));
  }
  return ForestModel(data.dim, std::move(trees), params, seed);
}

}  // namespace hvsim
