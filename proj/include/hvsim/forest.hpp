#pragma once

// Bagged regression forest (CART trees, variance-reduction splits, random
// feature subset per split). Deterministic given data and seed.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

namespace hvsim {

/// Row-major design matrix with one label per row.
struct Dataset {
  std::size_t dim = 0;
  std::vector<double> x;
  std::vector<double> y;

  std::size_t size() const { return y.size(); }
  std::span<const double> row(std::size_t i) const { return {x.data() + i * dim, dim}; }
  void add(std::span<const double> features, double label);
  Dataset subset(std::span<const std::size_t> rows) const;
};

struct ForestParams {
  int num_trees = 100;
  int max_depth = 12;
  int min_leaf = 5;
  int features_per_split = 0;  // 0: ceil(sqrt(dim))
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;   // taken when x[feature] <= threshold
  int right = -1;
  double value = 0.0;  // mean label of the training rows reaching this node
  int count = 0;
};

class RegressionTree {
 public:
  RegressionTree() = default;
  explicit RegressionTree(std::vector<TreeNode> nodes);

  double predict(std::span<const double> x) const;
  std::span<const TreeNode> nodes() const { return nodes_; }
  int depth() const;

 private:
  std::vector<TreeNode> nodes_;
};

class ForestModel {
 public:
  ForestModel() = default;
  ForestModel(std::size_t dim, std::vector<RegressionTree> trees, ForestParams params = {}, std::uint64_t seed = 0);

  /// Mean over trees, clamped at 0. Throws std::invalid_argument when x has
  /// the wrong dimension or the model has no trees.
  double predict(std::span<const double> x) const;
  std::vector<double> tree_outputs(std::span<const double> x) const;

  std::size_t dim() const { return dim_; }
  std::span<const RegressionTree> trees() const { return trees_; }
  const ForestParams& params() const { return params_; }
  std::uint64_t seed() const { return seed_; }

  nlohmann::json to_json() const;
  static ForestModel from_json(const nlohmann::json& j);

 private:
  std::size_t dim_ = 0;
  std::vector<RegressionTree> trees_;
  ForestParams params_;
  std::uint64_t seed_ = 0;
};

/// Throws std::invalid_argument on an empty dataset, non-finite or negative
/// labels, or invalid parameters.
ForestModel train_forest(const Dataset& data, const ForestParams& params, std::uint64_t seed);

}  // namespace hvsim
