#include "otpto/mlcore.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

#include "otpto/errors.hpp"

namespace otpto::ml {

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  Matrix m;
  m.rows = rows.size();
  m.cols = rows.empty() ? 0 : rows[0].size();
  m.data.reserve(m.rows * m.cols);
  for (const auto& r : rows) {
    if (r.size() != m.cols) throw ValidationError("ragged matrix rows");
    m.data.insert(m.data.end(), r.begin(), r.end());
  }
  return m;
}

namespace {

void require_finite(const Matrix& m, const char* what) {
  for (double v : m.data)
    if (!std::isfinite(v)) throw ValidationError(std::string(what) + " contains a non-finite value");
}

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

std::size_t distinct_rows(const Matrix& m) {
  std::vector<std::size_t> idx(m.rows);
  std::iota(idx.begin(), idx.end(), 0);
  auto less = [&](std::size_t a, std::size_t b) {
    auto ra = m.row(a), rb = m.row(b);
    return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
  };
  std::sort(idx.begin(), idx.end(), less);
  std::size_t count = 0;
  for (std::size_t i = 0; i < idx.size(); ++i)
    if (i == 0 || less(idx[i - 1], idx[i])) ++count;
  return count;
}

}  // namespace

int nearest_centroid(const Matrix& centroids, std::span<const double> point) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.rows; ++c) {
    double d = sq_dist(centroids.row(c), point);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  return best;
}

KMeansResult kmeans_from(const Matrix& points, Matrix centroids, int max_iter, double tol) {
  if (points.rows == 0) throw ValidationError("kmeans needs at least one row");
  if (centroids.rows == 0 || centroids.cols != points.cols)
    throw ValidationError("kmeans initial centroids do not match the data");
  require_finite(points, "kmeans input");
  const std::size_t n = points.rows, d = points.cols, k = centroids.rows;

  KMeansResult res;
  res.assignments.assign(n, 0);
  std::vector<double> dist(n, 0.0);
  auto assign_all = [&] {
    double inertia = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      int c = nearest_centroid(centroids, points.row(r));
      res.assignments[r] = c;
      dist[r] = sq_dist(centroids.row(static_cast<std::size_t>(c)), points.row(r));
      inertia += dist[r];
    }
    return inertia;
  };

  double inertia = assign_all();
  res.inertia_history.push_back(inertia);
  for (int it = 0; it < max_iter; ++it) {
    Matrix next(k, d, 0.0);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t r = 0; r < n; ++r) {
      auto c = static_cast<std::size_t>(res.assignments[r]);
      ++counts[c];
      for (std::size_t j = 0; j < d; ++j) next(c, j) += points(r, j);
    }
    std::vector<char> taken(n, 0);
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        for (std::size_t j = 0; j < d; ++j) next(c, j) /= static_cast<double>(counts[c]);
        continue;
      }
      // Empty cluster: move it onto the worst-served point.
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t r = 0; r < n; ++r)
        if (!taken[r] && dist[r] > far_d) {
          far_d = dist[r];
          far = r;
        }
      taken[far] = 1;
      dist[far] = 0.0;
      for (std::size_t j = 0; j < d; ++j) next(c, j) = points(far, j);
    }
    double shift = 0.0;
    for (std::size_t c = 0; c < k; ++c) shift = std::max(shift, sq_dist(next.row(c), centroids.row(c)));
    centroids = std::move(next);
    inertia = assign_all();
    res.inertia_history.push_back(inertia);
    res.iterations = it + 1;
    if (std::sqrt(shift) <= tol) break;
  }
  res.centroids = std::move(centroids);
  res.inertia = inertia;
  return res;
}

KMeansResult kmeans(const Matrix& points, int k, std::uint64_t seed, int max_iter, double tol) {
  if (k < 1) throw ValidationError("kmeans needs k >= 1");
  if (points.rows == 0) throw ValidationError("kmeans needs at least one row");
  require_finite(points, "kmeans input");
  const std::size_t n = points.rows, d = points.cols;
  const std::size_t eff = std::min(static_cast<std::size_t>(k), distinct_rows(points));

  // k-means++ seeding.
  std::mt19937_64 rng(seed);
  Matrix init(eff, d);
  std::size_t first = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  for (std::size_t j = 0; j < d; ++j) init(0, j) = points(first, j);
  std::vector<double> best(n);
  for (std::size_t r = 0; r < n; ++r) best[r] = sq_dist(points.row(r), init.row(0));
  for (std::size_t c = 1; c < eff; ++c) {
    double total = std::accumulate(best.begin(), best.end(), 0.0);
    double target = std::uniform_real_distribution<double>(0.0, total)(rng);
    std::size_t pick = n;
    double acc = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      if (best[r] <= 0.0) continue;
      acc += best[r];
      pick = r;
      if (acc > target) break;
    }
    for (std::size_t j = 0; j < d; ++j) init(c, j) = points(pick, j);
    for (std::size_t r = 0; r < n; ++r) best[r] = std::min(best[r], sq_dist(points.row(r), init.row(c)));
  }
  return kmeans_from(points, std::move(init), max_iter, tol);
}

Matrix min_max_normalize(const Matrix& m) {
  require_finite(m, "min_max_normalize input");
  Matrix out(m.rows, m.cols);
  for (std::size_t j = 0; j < m.cols; ++j) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t r = 0; r < m.rows; ++r) {
      lo = std::min(lo, m(r, j));
      hi = std::max(hi, m(r, j));
    }
    double range = hi - lo;
    for (std::size_t r = 0; r < m.rows; ++r) out(r, j) = range > 0 ? (m(r, j) - lo) / range : 0.0;
  }
  return out;
}

// ---------------------------------------------------------------- boosting

std::string to_string(Objective o) { return o == Objective::binary ? "binary" : "regression"; }
std::string to_string(Metric m) { return m == Metric::auc ? "auc" : "rmse"; }

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

GbdtParams GbdtParams::pm1() {
  GbdtParams p;
  p.objective = Objective::binary;
  p.metric = Metric::auc;
  p.learning_rate = 0.05;
  p.num_leaves = 31;
  p.max_depth = 5;
  p.min_child_samples = 5;
  p.subsample = 0.8;
  p.subsample_freq = 1;
  p.colsample_bytree = 0.8;
  p.n_estimators = 600;
  p.reg_alpha = 0.0;
  p.reg_lambda = 0.0;
  p.early_stopping_rounds = 50;
  return p;
}

GbdtParams GbdtParams::pm2() {
  GbdtParams p = pm1();
  p.objective = Objective::regression;
  p.metric = Metric::rmse;
  p.learning_rate = 0.1;
  p.reg_alpha = 0.1;
  p.reg_lambda = 0.1;
  return p;
}

void GbdtParams::validate() const {
  if (num_leaves < 2) throw ValidationError("num_leaves must be >= 2");
  if (max_depth < 1) throw ValidationError("max_depth must be >= 1");
  if (n_estimators < 1) throw ValidationError("n_estimators must be >= 1");
  if (!(learning_rate > 0)) throw ValidationError("learning_rate must be positive");
  if (min_child_samples < 1) throw ValidationError("min_child_samples must be >= 1");
  if (!(subsample > 0 && subsample <= 1)) throw ValidationError("subsample must be in (0,1]");
  if (!(colsample_bytree > 0 && colsample_bytree <= 1))
    throw ValidationError("colsample_bytree must be in (0,1]");
  if (subsample_freq < 0 || early_stopping_rounds < 0)
    throw ValidationError("subsample_freq and early_stopping_rounds must be >= 0");
  if (reg_alpha < 0 || reg_lambda < 0) throw ValidationError("reg_alpha and reg_lambda must be >= 0");
}

double Tree::predict(std::span<const double> row) const {
  int i = 0;
  while (nodes[static_cast<std::size_t>(i)].feature >= 0) {
    const auto& nd = nodes[static_cast<std::size_t>(i)];
    i = row[static_cast<std::size_t>(nd.feature)] <= nd.threshold ? nd.left : nd.right;
  }
  return nodes[static_cast<std::size_t>(i)].value;
}

int Tree::depth() const {
  int d = 0;
  for (const auto& nd : nodes) d = std::max(d, nd.depth);
  return d;
}

int Tree::leaves() const {
  return static_cast<int>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.feature < 0; }));
}

std::vector<double> GbdtModel::predict_raw(const Matrix& rows) const {
  std::vector<double> out(rows.rows, base_score);
  for (std::size_t r = 0; r < rows.rows; ++r)
    for (const auto& t : trees) out[r] += t.predict(rows.row(r));
  return out;
}

std::vector<double> GbdtModel::predict(const Matrix& rows) const {
  auto out = predict_raw(rows);
  if (params.objective == Objective::binary)
    for (double& v : out) v = sigmoid(v);
  return out;
}

std::vector<double> predict_gbdt(const GbdtModel& model, const Matrix& rows) {
  if (static_cast<int>(rows.cols) != model.n_features)
    throw SchemaError("model expects " + std::to_string(model.n_features) + " features, got " +
                      std::to_string(rows.cols));
  return model.predict(rows);
}

double eval_metric(Metric kind, std::span<const double> labels, std::span<const double> scores) {
  if (labels.size() != scores.size() || labels.empty())
    throw ValidationError("metric needs equal, non-empty label and score vectors");
  const std::size_t n = labels.size();
  if (kind == Metric::rmse) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += (labels[i] - scores[i]) * (labels[i] - scores[i]);
    return std::sqrt(s / static_cast<double>(n));
  }
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double pos_rank_sum = 0.0;
  double pos = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[idx[j]] == scores[idx[i]]) ++j;
    double avg_rank = (static_cast<double>(i) + 1.0 + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k)
      if (labels[idx[k]] > 0.5) {
        pos_rank_sum += avg_rank;
        pos += 1.0;
      }
    i = j;
  }
  double neg = static_cast<double>(n) - pos;
  if (pos == 0 || neg == 0) throw ValidationError("AUC needs both classes");
  return (pos_rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

namespace {

constexpr double kMinHessian = 1e-3;

double soft_threshold(double g, double alpha) {
  if (g > alpha) return g - alpha;
  if (g < -alpha) return g + alpha;
  return 0.0;
}

double mean_loss(Objective obj, std::span<const double> y, const std::vector<double>& f) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (obj == Objective::regression) {
      s += 0.5 * (f[i] - y[i]) * (f[i] - y[i]);
    } else {
      double p = std::clamp(sigmoid(f[i]), 1e-15, 1.0 - 1e-15);
      s -= y[i] * std::log(p) + (1.0 - y[i]) * std::log(1.0 - p);
    }
  }
  return s / static_cast<double>(y.size());
}

struct SplitChoice {
  double gain = 0.0;
  int feature = -1;  // index into the tree's feature subset
  double threshold = 0.0;
  std::size_t left_count = 0;
};

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, const std::vector<std::vector<std::uint32_t>>& presorted,
              const GbdtParams& params, const std::vector<double>& grad, const std::vector<double>& hess,
              const std::vector<char>& in_bag, const std::vector<int>& features)
      : x_(x), p_(params), g_(grad), h_(hess), features_(features) {
    sorted_.resize(features.size());
    for (std::size_t k = 0; k < features.size(); ++k) {
      auto& dst = sorted_[k];
      for (auto r : presorted[static_cast<std::size_t>(features[k])])
        if (in_bag[r]) dst.push_back(r);
    }
    buffer_.resize(sorted_[0].size());
    go_left_.assign(x.rows, 0);
  }

  Tree build() {
    Tree tree;
    tree.nodes.push_back({});
    Leaf root{0, sorted_[0].size(), 0, 0, 0, 0, {}};
    totals(root);
    root.split = find_split(root);
    std::vector<Leaf> leaves = {root};
    tree.nodes[0].value = leaf_value(root);

    int n_leaves = 1;
    while (n_leaves < p_.num_leaves) {
      int pick = -1;
      for (std::size_t l = 0; l < leaves.size(); ++l)
        if (leaves[l].split.feature >= 0 &&
            (pick < 0 || leaves[l].split.gain > leaves[static_cast<std::size_t>(pick)].split.gain))
          pick = static_cast<int>(l);
      if (pick < 0) break;
      Leaf parent = leaves[static_cast<std::size_t>(pick)];
      auto [left, right] = split(parent);
      auto& node = tree.nodes[static_cast<std::size_t>(parent.node)];
      node.feature = features_[static_cast<std::size_t>(parent.split.feature)];
      node.threshold = parent.split.threshold;
      node.value = 0.0;
      node.left = static_cast<int>(tree.nodes.size());
      node.right = node.left + 1;
      left.node = node.left;
      right.node = node.right;
      TreeNode ln, rn;
      ln.depth = rn.depth = parent.depth + 1;
      ln.value = leaf_value(left);
      rn.value = leaf_value(right);
      tree.nodes.push_back(ln);
      tree.nodes.push_back(rn);
      left.split = find_split(left);
      right.split = find_split(right);
      leaves[static_cast<std::size_t>(pick)] = left;
      leaves.push_back(right);
      ++n_leaves;
    }
    return tree;
  }

 private:
  struct Leaf {
    std::size_t begin, end;
    int depth;
    int node;
    double g, h;
    SplitChoice split;
  };

  const Matrix& x_;
  const GbdtParams& p_;
  const std::vector<double>& g_;
  const std::vector<double>& h_;
  const std::vector<int>& features_;
  std::vector<std::vector<std::uint32_t>> sorted_;
  std::vector<std::uint32_t> buffer_;
  std::vector<char> go_left_;

  void totals(Leaf& leaf) const {
    leaf.g = leaf.h = 0.0;
    for (std::size_t i = leaf.begin; i < leaf.end; ++i) {
      leaf.g += g_[sorted_[0][i]];
      leaf.h += h_[sorted_[0][i]];
    }
  }

  double score(double g, double h) const {
    double t = soft_threshold(g, p_.reg_alpha);
    return t * t / (h + p_.reg_lambda);
  }

  double leaf_value(const Leaf& leaf) const {
    double denom = leaf.h + p_.reg_lambda;
    if (denom <= 0) return 0.0;
    return -p_.learning_rate * soft_threshold(leaf.g, p_.reg_alpha) / denom;
  }

  SplitChoice find_split(const Leaf& leaf) const {
    SplitChoice best;
    const std::size_t count = leaf.end - leaf.begin;
    const auto min_child = static_cast<std::size_t>(p_.min_child_samples);
    if (leaf.depth >= p_.max_depth || count < 2 * min_child) return best;
    const double parent = score(leaf.g, leaf.h);
    for (std::size_t k = 0; k < features_.size(); ++k) {
      const auto j = static_cast<std::size_t>(features_[k]);
      const auto& rows = sorted_[k];
      double gl = 0.0, hl = 0.0;
      for (std::size_t i = leaf.begin; i + 1 < leaf.end; ++i) {
        gl += g_[rows[i]];
        hl += h_[rows[i]];
        const double v = x_(rows[i], j), next = x_(rows[i + 1], j);
        if (v == next) continue;
        const std::size_t nl = i + 1 - leaf.begin;
        if (nl < min_child || count - nl < min_child) continue;
        const double hr = leaf.h - hl;
        if (hl < kMinHessian || hr < kMinHessian) continue;
        const double gain = score(gl, hl) + score(leaf.g - gl, hr) - parent;
        if (gain > best.gain + 1e-12) {
          best.gain = gain;
          best.feature = static_cast<int>(k);
          double thr = v + (next - v) / 2.0;
          if (!(thr < next)) thr = v;
          best.threshold = thr;
          best.left_count = nl;
        }
      }
    }
    return best;
  }

  std::pair<Leaf, Leaf> split(const Leaf& parent) {
    const auto k = static_cast<std::size_t>(parent.split.feature);
    const std::size_t mid = parent.begin + parent.split.left_count;
    for (std::size_t i = parent.begin; i < parent.end; ++i) go_left_[sorted_[k][i]] = i < mid;
    for (auto& rows : sorted_) {
      std::size_t l = parent.begin, r = 0;
      for (std::size_t i = parent.begin; i < parent.end; ++i) {
        if (go_left_[rows[i]]) rows[l++] = rows[i];
        else buffer_[r++] = rows[i];
      }
      std::copy(buffer_.begin(), buffer_.begin() + static_cast<long>(r), rows.begin() + static_cast<long>(l));
    }
    Leaf left{parent.begin, mid, parent.depth + 1, -1, 0, 0, {}};
    Leaf right{mid, parent.end, parent.depth + 1, -1, 0, 0, {}};
    totals(left);
    totals(right);
    return {left, right};
  }
};

}  // namespace

GbdtModel train_gbdt(const Matrix& x, std::span<const double> y, const Matrix& valid_x,
                     std::span<const double> valid_y, const GbdtParams& params) {
  params.validate();
  if (x.rows == 0 || x.cols == 0) throw ValidationError("training needs at least one row and one feature");
  if (y.size() != x.rows) throw ValidationError("training labels do not match rows");
  if (valid_x.rows != valid_y.size()) throw ValidationError("validation labels do not match rows");
  if (valid_x.rows > 0 && valid_x.cols != x.cols)
    throw ValidationError("validation feature count differs from training");
  require_finite(x, "training features");
  require_finite(valid_x, "validation features");
  for (double v : y)
    if (!std::isfinite(v)) throw ValidationError("training labels contain a non-finite value");
  const bool binary = params.objective == Objective::binary;
  if (binary)
    for (double v : y)
      if (v != 0.0 && v != 1.0) throw ValidationError("binary labels must be 0 or 1");

  const std::size_t n = x.rows, f = x.cols;
  GbdtModel model;
  model.params = params;
  model.n_features = static_cast<int>(f);

  double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  if (binary) {
    model.degenerate_auc = mean == 0.0 || mean == 1.0;
    double p = std::clamp(mean, 1e-6, 1.0 - 1e-6);
    model.base_score = std::log(p / (1.0 - p));
  } else {
    model.base_score = mean;
  }

  std::vector<std::vector<std::uint32_t>> presorted(f);
  for (std::size_t j = 0; j < f; ++j) {
    auto& order = presorted[j];
    order.resize(n);
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) { return x(a, j) < x(b, j); });
  }

  std::vector<double> raw(n, model.base_score), valid_raw(valid_x.rows, model.base_score);
  model.train_loss.push_back(mean_loss(params.objective, y, raw));

  bool use_valid = valid_x.rows > 0 && params.early_stopping_rounds > 0;
  if (use_valid && params.metric == Metric::auc) {
    bool has0 = false, has1 = false;
    for (double v : valid_y) (v > 0.5 ? has1 : has0) = true;
    use_valid = has0 && has1;
  }
  const bool higher_better = params.metric == Metric::auc;
  double best_metric = 0.0;
  int best_iter = 0;

  std::mt19937_64 rng(params.seed);
  std::vector<char> in_bag(n, 1);
  std::vector<std::uint32_t> perm(n);
  std::vector<int> all_features(f);
  std::iota(all_features.begin(), all_features.end(), 0);
  std::vector<double> grad(n), hess(n);

  for (int it = 0; it < params.n_estimators; ++it) {
    if (params.subsample < 1.0 && params.subsample_freq > 0 && it % params.subsample_freq == 0) {
      std::size_t keep = std::max<std::size_t>(1, static_cast<std::size_t>(params.subsample * static_cast<double>(n)));
      std::iota(perm.begin(), perm.end(), 0u);
      for (std::size_t i = 0; i < keep; ++i)
        std::swap(perm[i], perm[i + std::uniform_int_distribution<std::size_t>(0, n - 1 - i)(rng)]);
      std::fill(in_bag.begin(), in_bag.end(), 0);
      for (std::size_t i = 0; i < keep; ++i) in_bag[perm[i]] = 1;
    }
    std::vector<int> features = all_features;
    if (params.colsample_bytree < 1.0) {
      std::size_t keep = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(params.colsample_bytree * static_cast<double>(f))));
      for (std::size_t i = 0; i < keep; ++i)
        std::swap(features[i], features[i + std::uniform_int_distribution<std::size_t>(0, f - 1 - i)(rng)]);
      features.resize(keep);
      std::sort(features.begin(), features.end());
    }

    for (std::size_t i = 0; i < n; ++i) {
      if (binary) {
        double p = sigmoid(raw[i]);
        grad[i] = p - y[i];
        hess[i] = std::max(p * (1.0 - p), 1e-16);
      } else {
        grad[i] = raw[i] - y[i];
        hess[i] = 1.0;
      }
    }

    Tree tree = TreeBuilder(x, presorted, params, grad, hess, in_bag, features).build();
    for (std::size_t i = 0; i < n; ++i) raw[i] += tree.predict(x.row(i));
    for (std::size_t i = 0; i < valid_x.rows; ++i) valid_raw[i] += tree.predict(valid_x.row(i));
    model.trees.push_back(std::move(tree));
    model.train_loss.push_back(mean_loss(params.objective, y, raw));

    if (valid_x.rows > 0 && (params.metric == Metric::rmse || use_valid)) {
      std::vector<double> scores = valid_raw;
      if (binary && params.metric == Metric::rmse)
        for (double& s : scores) s = sigmoid(s);
      double m = eval_metric(params.metric, valid_y, scores);
      model.valid_metric.push_back(m);
      if (use_valid) {
        if (it == 0 || (higher_better ? m > best_metric : m < best_metric)) {
          best_metric = m;
          best_iter = it + 1;
        } else if (it + 1 - best_iter >= params.early_stopping_rounds) {
          break;
        }
      }
    }
  }
  if (use_valid) {
    model.trees.resize(static_cast<std::size_t>(best_iter));
    model.train_loss.resize(static_cast<std::size_t>(best_iter) + 1);
  }
  model.best_iteration = static_cast<int>(model.trees.size());
  return model;
}

// ---------------------------------------------------------------- serialization

namespace {

nlohmann::json params_json(const GbdtParams& p) {
  return {{"objective", to_string(p.objective)},
          {"metric", to_string(p.metric)},
          {"learning_rate", p.learning_rate},
          {"num_leaves", p.num_leaves},
          {"max_depth", p.max_depth},
          {"min_child_samples", p.min_child_samples},
          {"subsample", p.subsample},
          {"subsample_freq", p.subsample_freq},
          {"colsample_bytree", p.colsample_bytree},
          {"n_estimators", p.n_estimators},
          {"reg_alpha", p.reg_alpha},
          {"reg_lambda", p.reg_lambda},
          {"early_stopping_rounds", p.early_stopping_rounds},
          {"seed", p.seed}};
}

GbdtParams params_from(const nlohmann::json& j) {
  GbdtParams p;
  p.objective = j.at("objective").get<std::string>() == "binary" ? Objective::binary : Objective::regression;
  p.metric = j.at("metric").get<std::string>() == "auc" ? Metric::auc : Metric::rmse;
  p.learning_rate = j.at("learning_rate");
  p.num_leaves = j.at("num_leaves");
  p.max_depth = j.at("max_depth");
  p.min_child_samples = j.at("min_child_samples");
  p.subsample = j.at("subsample");
  p.subsample_freq = j.at("subsample_freq");
  p.colsample_bytree = j.at("colsample_bytree");
  p.n_estimators = j.at("n_estimators");
  p.reg_alpha = j.at("reg_alpha");
  p.reg_lambda = j.at("reg_lambda");
  p.early_stopping_rounds = j.at("early_stopping_rounds");
  p.seed = j.at("seed");
  return p;
}

}  // namespace

std::string GbdtModel::to_json() const {
  nlohmann::json j;
  j["format"] = "otpto-gbdt";
  j["version"] = 1;
  j["params"] = params_json(params);
  j["n_features"] = n_features;
  j["base_score"] = base_score;
  j["best_iteration"] = best_iteration;
  j["degenerate_auc"] = degenerate_auc;
  j["train_loss"] = train_loss;
  j["valid_metric"] = valid_metric;
  auto& trees_json = j["trees"] = nlohmann::json::array();
  for (const auto& t : trees) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& nd : t.nodes)
      nodes.push_back({nd.feature, nd.threshold, nd.left, nd.right, nd.value, nd.depth});
    trees_json.push_back(std::move(nodes));
  }
  return j.dump(1);
}

GbdtModel GbdtModel::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("model JSON: ") + e.what());
  }
  if (j.value("format", "") != "otpto-gbdt" || j.value("version", 0) != 1)
    throw SchemaError("not a version 1 otpto-gbdt model document");
  try {
    GbdtModel m;
    m.params = params_from(j.at("params"));
    m.n_features = j.at("n_features");
    m.base_score = j.at("base_score");
    m.best_iteration = j.at("best_iteration");
    m.degenerate_auc = j.at("degenerate_auc");
    m.train_loss = j.at("train_loss").get<std::vector<double>>();
    m.valid_metric = j.at("valid_metric").get<std::vector<double>>();
    for (const auto& tj : j.at("trees")) {
      Tree t;
      for (const auto& nj : tj)
        t.nodes.push_back({nj.at(0), nj.at(1), nj.at(2), nj.at(3), nj.at(4), nj.at(5)});
      m.trees.push_back(std::move(t));
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("model JSON: ") + e.what());
  }
}

}  // namespace otpto::ml
