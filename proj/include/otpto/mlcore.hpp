#pragma once

// Learning kernels: K-Means with min-max normalization, a gradient-boosted
// regression-tree learner (logistic and squared loss), and AUC / RMSE.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace otpto::ml {

/// Dense row-major matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}
  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

  bool operator==(const Matrix&) const = default;
};

// ---------------------------------------------------------------- clustering

struct KMeansResult {
  std::vector<int> assignments;
  Matrix centroids;
  double inertia = 0.0;
  int iterations = 0;
  std::vector<double> inertia_history;  // after every assignment step
};

/// Lloyd's algorithm from k-means++ seeding. The effective k is min(k, distinct
/// rows). Empty clusters are reseeded to the point farthest from its centroid.
/// Throws ValidationError on k < 1, no rows, or non-finite values.
KMeansResult kmeans(const Matrix& points, int k, std::uint64_t seed, int max_iter = 100,
                    double tol = 1e-9);

/// Lloyd iterations from the given initial centroids.
KMeansResult kmeans_from(const Matrix& points, Matrix initial, int max_iter = 100, double tol = 1e-9);

/// Index of the nearest centroid (lowest index on ties).
int nearest_centroid(const Matrix& centroids, std::span<const double> point);

/// Per column (v - min) / (max - min); constant columns become 0.
Matrix min_max_normalize(const Matrix& m);

// ---------------------------------------------------------------- boosting

enum class Objective { binary, regression };
enum class Metric { auc, rmse };

std::string to_string(Objective o);
std::string to_string(Metric m);

struct GbdtParams {
  Objective objective = Objective::regression;
  Metric metric = Metric::rmse;
  double learning_rate = 0.1;
  int num_leaves = 31;
  int max_depth = 5;
  int min_child_samples = 5;
  double subsample = 1.0;
  int subsample_freq = 0;
  double colsample_bytree = 1.0;
  int n_estimators = 100;
  double reg_alpha = 0.0;
  double reg_lambda = 0.0;
  int early_stopping_rounds = 0;
  std::uint64_t seed = 0;

  /// Selection classifier settings.
  static GbdtParams pm1();
  /// Quantity regressor settings.
  static GbdtParams pm2();

  void validate() const;
  bool operator==(const GbdtParams&) const = default;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;  // rows with value <= threshold go left
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf output, already scaled by the learning rate
  int depth = 0;

  bool operator==(const TreeNode&) const = default;
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double predict(std::span<const double> row) const;
  int depth() const;
  int leaves() const;
  bool operator==(const Tree&) const = default;
};

struct GbdtModel {
  GbdtParams params;
  int n_features = 0;
  double base_score = 0.0;  // raw score before the link function
  std::vector<Tree> trees;  // truncated to the best iteration
  int best_iteration = 0;   // number of trees kept
  bool degenerate_auc = false;  // training labels had a single class
  std::vector<double> train_loss;    // mean loss after 0, 1, ... trees
  std::vector<double> valid_metric;  // per tree, when a validation set was given

  /// Scores before the link function.
  std::vector<double> predict_raw(const Matrix& rows) const;
  /// Probabilities for the binary objective, values for regression.
  std::vector<double> predict(const Matrix& rows) const;

  std::string to_json() const;
  static GbdtModel from_json(const std::string& text);

  bool operator==(const GbdtModel&) const = default;
};

/// Stage-wise boosting with exact greedy leaf-wise splits. Early stopping runs
/// when the validation set is non-empty and early_stopping_rounds > 0.
/// Throws ValidationError on shape errors or non-finite inputs.
GbdtModel train_gbdt(const Matrix& x, std::span<const double> y, const Matrix& valid_x,
                     std::span<const double> valid_y, const GbdtParams& params);

/// Same as model.predict, with a feature-count check (SchemaError).
std::vector<double> predict_gbdt(const GbdtModel& model, const Matrix& rows);

/// AUC by the rank statistic with average ranks, or RMSE. AUC throws
/// ValidationError unless both classes are present.
double eval_metric(Metric kind, std::span<const double> labels, std::span<const double> scores);

double sigmoid(double z);

}  // namespace otpto::ml
