#pragma once

// Classification as signal separation: support estimation with the Psi_n
// kernel, relative thresholding, single-linkage partitioning at a separation
// eta, and cautious active labeling with one query per component.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "lka/error.hpp"
#include "lka/filters.hpp"
#include "lka/parallel.hpp"

namespace lka::masc {

using Index = Eigen::Index;

enum class Metric { torus_geodesic, euclidean_rescaled, chordal };
enum class PsiForm { squared_real, modulus_squared };
enum class Propagation { nearest, kernel_vote };

inline constexpr int kUnlabeled = -1;

inline Metric parse_metric(const std::string& s) {
  if (s == "torus" || s == "torus_geodesic") return Metric::torus_geodesic;
  if (s == "euclidean" || s == "euclidean_rescaled") return Metric::euclidean_rescaled;
  if (s == "chordal") return Metric::chordal;
  throw InvalidArgument("unknown metric: " + s);
}

inline std::string metric_name(Metric m) {
  switch (m) {
    case Metric::torus_geodesic: return "torus_geodesic";
    case Metric::euclidean_rescaled: return "euclidean_rescaled";
    case Metric::chordal: return "chordal";
  }
  return "?";
}

inline PsiForm parse_psi_form(const std::string& s) {
  if (s == "squared_real") return PsiForm::squared_real;
  if (s == "modulus_squared") return PsiForm::modulus_squared;
  throw InvalidArgument("unknown psi form: " + s);
}

inline std::string psi_form_name(PsiForm f) { return f == PsiForm::squared_real ? "squared_real" : "modulus_squared"; }

// Psi_n(rho) from the cosine sum sum_{l=0}^n h(l/n) cos(l rho), by Clenshaw in cos(rho).
class Psi {
 public:
  Psi(int n, Filter h = Filter(FilterKind::quintic), PsiForm form = PsiForm::squared_real) : n_(n), form_(form) {
    require(n >= 1, "psi kernel needs n >= 1");
    c_.resize(n + 1);
    for (int l = 0; l <= n; ++l) c_[l] = h(double(l) / n);
  }

  int n() const { return n_; }
  PsiForm form() const { return form_; }

  double operator()(double rho) const {
    const double t = std::cos(rho);
    double b1 = 0.0, b2 = 0.0;
    for (int l = n_; l >= 1; --l) {
      const double b = c_[l] + 2.0 * t * b1 - b2;
      b2 = b1;
      b1 = b;
    }
    const double re = c_[0] + t * b1 - b2;
    if (form_ == PsiForm::squared_real) return re * re;
    // sum c_l sin(l rho) = sin(rho) sum_{l>=1} c_l U_{l-1}(t)
    double u1 = 0.0, u2 = 0.0;
    for (int l = n_; l >= 1; --l) {
      const double u = c_[l] + 2.0 * t * u1 - u2;
      u2 = u1;
      u1 = u;
    }
    const double im = std::sin(rho) * u1;
    return re * re + im * im;
  }

  // out[k] = Psi(rho[k]); the recurrence runs across a block of arguments at once
  void eval(const double* rho, double* out, Index count) const {
    constexpr Index B = 64;
    alignas(64) double t[B], b1[B], b2[B], u1[B], u2[B];
    for (Index s = 0; s < count; s += B) {
      const Index w = std::min(B, count - s);
      for (Index k = 0; k < w; ++k) {
        t[k] = std::cos(rho[s + k]);
        b1[k] = b2[k] = u1[k] = u2[k] = 0.0;
      }
      for (int l = n_; l >= 1; --l) {
        const double c = c_[l];
        for (Index k = 0; k < w; ++k) {
          const double b = c + 2.0 * t[k] * b1[k] - b2[k];
          b2[k] = b1[k];
          b1[k] = b;
        }
      }
      if (form_ == PsiForm::modulus_squared)
        for (int l = n_; l >= 1; --l) {
          const double c = c_[l];
          for (Index k = 0; k < w; ++k) {
            const double u = c + 2.0 * t[k] * u1[k] - u2[k];
            u2[k] = u1[k];
            u1[k] = u;
          }
        }
      for (Index k = 0; k < w; ++k) {
        const double re = c_[0] + t[k] * b1[k] - b2[k];
        const double im = form_ == PsiForm::modulus_squared ? std::sin(rho[s + k]) * u1[k] : 0.0;
        out[s + k] = re * re + im * im;
      }
    }
  }

  // (1/count) sum_k Psi(rho[k]) accumulated in index order
  double mean(const double* rho, Index count, std::vector<double>& scratch) const {
    scratch.resize(std::size_t(count));
    eval(rho, scratch.data(), count);
    double s = 0.0;
    for (Index k = 0; k < count; ++k) s += scratch[k];
    return count ? s / double(count) : 0.0;
  }

 private:
  int n_;
  PsiForm form_;
  std::vector<double> c_;
};

inline double psi_kernel(int n, Filter h, double rho, PsiForm form = PsiForm::squared_real) {
  require(rho >= 0.0 && rho <= std::numbers::pi + 1e-12, "rho must lie in [0, pi]");
  return Psi(n, h, form)(rho);
}

// Points as columns. Distances are rescaled so the cloud has diameter <= pi.
struct MetricCloud {
  Metric metric = Metric::euclidean_rescaled;
  Eigen::MatrixXd X;
  double scale = 1.0;   // euclidean: pi/diameter; torus: 1/sqrt(dim)
  double diameter = 0;  // raw euclidean diameter (euclidean and chordal)

  Index size() const { return X.cols(); }
  Index dim() const { return X.rows(); }

  double dist(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b) const {
    if (metric == Metric::torus_geodesic) {
      double s = 0.0;
      for (Index d = 0; d < a.size(); ++d) {
        const double r = std::remainder(a[d] - b[d], 2 * std::numbers::pi);
        s += r * r;
      }
      return std::sqrt(s) * scale;
    }
    const double e = (a - b).norm();
    if (metric == Metric::euclidean_rescaled) return std::min(e * scale, std::numbers::pi);
    return 2.0 * std::asin(std::min(1.0, diameter > 0 ? e / diameter : 0.0));
  }

  double dist(Index i, Index j) const { return dist(X.col(i), X.col(j)); }

  // full M x M matrix, symmetric by construction
  Eigen::MatrixXd distances(int threads = 1) const {
    const Index M = size();
    Eigen::MatrixXd D(M, M);
    parallel_for(M, threads, [&](std::ptrdiff_t b, std::ptrdiff_t e) {
      for (Index i = b; i < e; ++i)
        for (Index j = 0; j <= i; ++j) D(i, j) = dist(i, j);
    });
    for (Index i = 0; i < M; ++i)
      for (Index j = i + 1; j < M; ++j) D(i, j) = D(j, i);
    return D;
  }

  static MetricCloud euclidean(Eigen::MatrixXd X, Metric m = Metric::euclidean_rescaled) {
    require(m != Metric::torus_geodesic, "use MetricCloud::torus for torus data");
    MetricCloud c;
    c.metric = m;
    c.X = std::move(X);
    double d2 = 0.0;
    for (Index i = 0; i < c.size(); ++i)
      for (Index j = 0; j < i; ++j) d2 = std::max(d2, (c.X.col(i) - c.X.col(j)).squaredNorm());
    c.diameter = std::sqrt(d2);
    c.scale = c.diameter > 0 ? std::numbers::pi / c.diameter : 1.0;
    return c;
  }

  // angles in (-pi, pi]; the geodesic distance is divided by sqrt(dim)
  static MetricCloud torus(Eigen::MatrixXd X) {
    MetricCloud c;
    c.metric = Metric::torus_geodesic;
    c.X = std::move(X);
    c.scale = 1.0 / std::sqrt(double(std::max<Index>(1, c.dim())));
    return c;
  }

  static MetricCloud make(Eigen::MatrixXd X, Metric m) {
    return m == Metric::torus_geodesic ? torus(std::move(X)) : euclidean(std::move(X), m);
  }
};

struct SupportEstimate {
  int n = 0;
  Filter h;
  PsiForm form = PsiForm::squared_real;
  Eigen::VectorXd at_samples;
  Eigen::VectorXd at_probes;

  double max_over_samples() const { return at_samples.size() ? at_samples.maxCoeff() : 0.0; }
};

// F_n(x) = (1/M) sum_j Psi_n(rho(x, x_j)) at the samples and at the probe columns
inline SupportEstimate support_estimate(const MetricCloud& cloud, int n, Filter h = Filter(FilterKind::quintic),
                                        const Eigen::MatrixXd& probes = {}, PsiForm form = PsiForm::squared_real,
                                        int threads = 1) {
  require(cloud.size() > 0, "empty cloud");
  require(probes.size() == 0 || probes.rows() == cloud.dim(), "probe dimension mismatch");
  const Psi psi(n, h, form);
  const Index M = cloud.size();
  SupportEstimate est{n, h, form, Eigen::VectorXd::Zero(M), Eigen::VectorXd::Zero(probes.cols())};
  // full rows in index order, so the sums do not depend on the thread count
  parallel_for(M, threads, [&](std::ptrdiff_t b, std::ptrdiff_t e) {
    std::vector<double> rho(M), scratch;
    for (Index i = b; i < e; ++i) {
      for (Index j = 0; j < M; ++j) rho[j] = cloud.dist(i, j);
      est.at_samples[i] = psi.mean(rho.data(), M, scratch);
    }
  });
  parallel_for(probes.cols(), threads, [&](std::ptrdiff_t b, std::ptrdiff_t e) {
    std::vector<double> rho(M), scratch;
    for (Index p = b; p < e; ++p) {
      for (Index j = 0; j < M; ++j) rho[j] = cloud.dist(probes.col(p), cloud.X.col(j));
      est.at_probes[p] = psi.mean(rho.data(), M, scratch);
    }
  });
  return est;
}

inline std::vector<Index> threshold_values(const Eigen::VectorXd& F, double reference_max, double theta) {
  require(theta > 0.0 && theta <= 1.0, "threshold must lie in (0, 1]");
  std::vector<Index> kept;
  for (Index i = 0; i < F.size(); ++i)
    if (F[i] >= theta * reference_max) kept.push_back(i);
  return kept;
}

// sample indices with F_n >= theta max_k F_n(x_k)
inline std::vector<Index> threshold_set(const SupportEstimate& est, double theta) {
  return threshold_values(est.at_samples, est.max_over_samples(), theta);
}

// probe indices, measured against the same sample maximum
inline std::vector<Index> threshold_probes(const SupportEstimate& est, double theta) {
  return threshold_values(est.at_probes, est.max_over_samples(), theta);
}

struct ClusterPartition {
  double theta = std::numeric_limits<double>::quiet_NaN();
  double eta = 0.0;
  std::vector<Index> kept;
  std::vector<std::vector<Index>> clusters;  // sample indices, ascending; clusters ordered by first member
  std::vector<int> labels;                   // per cluster, kUnlabeled when not queried
  double min_gap = std::numeric_limits<double>::infinity();  // smallest inter-cluster distance

  std::size_t count() const { return clusters.size(); }
};

namespace detail {

struct UnionFind {
  std::vector<Index> parent;
  explicit UnionFind(Index n) : parent(n) { std::iota(parent.begin(), parent.end(), Index{0}); }
  Index find(Index a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  }
  void unite(Index a, Index b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace detail

// Connected components of {(i, j): dist(i, j) < eta} over the kept indices.
template <class Dist>
ClusterPartition cluster_by(std::vector<Index> kept, double eta, Dist&& dist) {
  require(eta > 0.0, "separation eta must be positive");
  std::sort(kept.begin(), kept.end());
  kept.erase(std::unique(kept.begin(), kept.end()), kept.end());
  const Index K = Index(kept.size());
  detail::UnionFind uf(K);
  for (Index a = 0; a < K; ++a)
    for (Index b = 0; b < a; ++b)
      if (dist(kept[a], kept[b]) < eta) uf.unite(a, b);
  ClusterPartition p;
  p.eta = eta;
  p.kept = kept;
  std::vector<Index> slot(K, -1), root_slot(K, -1);
  for (Index a = 0; a < K; ++a) {
    const Index r = uf.find(a);
    if (root_slot[r] < 0) {
      root_slot[r] = Index(p.clusters.size());
      p.clusters.emplace_back();
    }
    slot[a] = root_slot[r];
    p.clusters[slot[a]].push_back(kept[a]);
  }
  p.labels.assign(p.clusters.size(), kUnlabeled);
  for (Index a = 0; a < K; ++a)
    for (Index b = 0; b < a; ++b)
      if (slot[a] != slot[b]) p.min_gap = std::min(p.min_gap, dist(kept[a], kept[b]));
  if (!(p.min_gap >= eta)) throw ConstructionFailure("partition violates the separation invariant");
  return p;
}

inline ClusterPartition cluster(const MetricCloud& cloud, std::vector<Index> kept, double eta) {
  return cluster_by(std::move(kept), eta, [&](Index i, Index j) { return cloud.dist(i, j); });
}

// median over idx of the distance to the nearest other member of idx
template <class Dist>
double median_nn(const std::vector<Index>& idx, Dist&& dist) {
  if (idx.size() < 2) return 0.0;
  std::vector<double> nn(idx.size(), std::numeric_limits<double>::infinity());
  for (std::size_t a = 0; a < idx.size(); ++a)
    for (std::size_t b = 0; b < a; ++b) {
      const double d = dist(idx[a], idx[b]);
      nn[a] = std::min(nn[a], d);
      nn[b] = std::min(nn[b], d);
    }
  auto mid = nn.begin() + nn.size() / 2;
  std::nth_element(nn.begin(), mid, nn.end());
  return *mid;
}

using Oracle = std::function<int(Index)>;

struct LabelResult {
  std::vector<int> labels;     // per sample, kUnlabeled when nothing could be propagated
  std::vector<Index> queried;  // in query order
  ClusterPartition partition;

  int queries() const { return int(queried.size()); }
};

// lowest index among the maximizers of F over idx
inline Index argmax_in(const std::vector<Index>& idx, const Eigen::VectorXd& F) {
  Index best = idx.front();
  for (Index i : idx)
    if (F[i] > F[best] || (F[i] == F[best] && i < best)) best = i;
  return best;
}

// larger clusters first, then by first member
inline std::vector<std::size_t> query_order(const ClusterPartition& p) {
  std::vector<std::size_t> order(p.count());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return p.clusters[a].size() > p.clusters[b].size(); });
  return order;
}

template <class Dist>
void propagate_nearest(std::vector<int>& labels, Dist&& dist) {
  const Index M = Index(labels.size());
  std::vector<Index> known;
  for (Index i = 0; i < M; ++i)
    if (labels[i] != kUnlabeled) known.push_back(i);
  if (known.empty()) return;
  std::vector<int> out = labels;
  for (Index i = 0; i < M; ++i) {
    if (labels[i] != kUnlabeled) continue;
    Index best = known.front();
    double bd = std::numeric_limits<double>::infinity();
    for (Index j : known) {
      const double d = dist(i, j);
      if (d < bd) {
        bd = d;
        best = j;
      }
    }
    out[i] = labels[best];
  }
  labels = std::move(out);
}

// score_k(x) = sum of Psi_n(rho(x, x_j)) over labeled x_j of class k
template <class Dist>
void propagate_vote(std::vector<int>& labels, const Psi& psi, Dist&& dist) {
  const Index M = Index(labels.size());
  std::vector<Index> known;
  int classes = 0;
  for (Index i = 0; i < M; ++i)
    if (labels[i] != kUnlabeled) {
      known.push_back(i);
      classes = std::max(classes, labels[i] + 1);
    }
  if (known.empty()) return;
  std::vector<int> out = labels;
  std::vector<double> score(classes);
  bool fallback = false;
  for (Index i = 0; i < M; ++i) {
    if (labels[i] != kUnlabeled) continue;
    std::fill(score.begin(), score.end(), 0.0);
    for (Index j : known) score[labels[j]] += psi(dist(i, j));
    const auto it = std::max_element(score.begin(), score.end());
    if (*it > 0.0)
      out[i] = int(it - score.begin());
    else
      fallback = true;
  }
  labels = std::move(out);
  if (fallback) propagate_nearest(labels, dist);
}

// One query per cluster at its F-maximizer, label spread to the cluster, then
// points outside the kept set take the label of the nearest labeled point.
inline LabelResult active_label(const MetricCloud& cloud, ClusterPartition partition, const Eigen::VectorXd& F,
                                const Oracle& oracle, int budget = std::numeric_limits<int>::max()) {
  require(F.size() == cloud.size(), "support values do not match the cloud");
  require(budget >= 0, "budget must be non-negative");
  LabelResult r;
  r.labels.assign(cloud.size(), kUnlabeled);
  for (std::size_t c : query_order(partition)) {
    if (r.queries() >= budget) break;
    const Index i = argmax_in(partition.clusters[c], F);
    const int l = oracle(i);
    require(l >= 0, "oracle labels must be non-negative");
    r.queried.push_back(i);
    partition.labels[c] = l;
    for (Index j : partition.clusters[c]) r.labels[j] = l;
  }
  // only points outside the kept set are propagated; unqueried clusters stay unlabeled
  std::vector<char> in_unlabeled_cluster(cloud.size(), 0);
  for (std::size_t c = 0; c < partition.count(); ++c)
    if (partition.labels[c] == kUnlabeled)
      for (Index j : partition.clusters[c]) in_unlabeled_cluster[j] = 1;
  std::vector<int> prop = r.labels;
  propagate_nearest(prop, [&](Index i, Index j) { return cloud.dist(i, j); });
  for (Index i = 0; i < cloud.size(); ++i)
    if (!in_unlabeled_cluster[i]) r.labels[i] = prop[i];
  r.partition = std::move(partition);
  return r;
}

struct Config {
  int n = 0;           // 0: ceil(4 / eta0) from a pilot eta over all samples
  double theta = 0.01;
  double eta = 0.0;    // 0: eta_factor x median nearest-neighbor distance of the kept points
  double eta_factor = 3.0;
  Filter h = Filter(FilterKind::quintic);
  PsiForm form = PsiForm::squared_real;
  int budget = std::numeric_limits<int>::max();
  // hierarchical refinement
  bool hierarchical = false;
  int probes = 2;             // re-query probes per cluster
  double overlap = 0.6;       // drop points with F >= overlap x cluster max before re-clustering
  double sub_eta_factor = 0;  // 0: keep eta; else factor x median NN of the remaining points
  int min_cluster = 1;        // smaller clusters are left to propagation
  int max_depth = 2;
  bool fill = false;  // spend leftover budget on probes in unresolved regions
  Propagation propagation = Propagation::nearest;
  int threads = 1;

  nlohmann::json to_json() const {
    return {{"n", n},
            {"theta", theta},
            {"eta", eta},
            {"eta_factor", eta_factor},
            {"filter", h.name()},
            {"psi", psi_form_name(form)},
            {"budget", budget},
            {"hierarchical", hierarchical},
            {"probes", probes},
            {"overlap", overlap},
            {"sub_eta_factor", sub_eta_factor},
            {"min_cluster", min_cluster},
            {"max_depth", max_depth},
            {"fill", fill},
            {"propagation", propagation == Propagation::nearest ? "nearest" : "kernel_vote"}};
  }

  static Config from_json(const nlohmann::json& j) {
    Config c;
    c.n = j.value("n", c.n);
    c.theta = j.value("theta", c.theta);
    if (j.contains("eta") && j["eta"].is_string()) {
      require(j["eta"] == "auto", "eta must be a number or \"auto\"");
    } else {
      c.eta = j.value("eta", c.eta);
    }
    c.eta_factor = j.value("eta_factor", c.eta_factor);
    c.h = Filter::parse(j.value("filter", c.h.name()));
    c.form = parse_psi_form(j.value("psi", psi_form_name(c.form)));
    c.budget = j.value("budget", c.budget);
    c.hierarchical = j.value("hierarchical", c.hierarchical);
    c.probes = j.value("probes", c.probes);
    c.overlap = j.value("overlap", c.overlap);
    c.sub_eta_factor = j.value("sub_eta_factor", c.sub_eta_factor);
    c.min_cluster = j.value("min_cluster", c.min_cluster);
    c.max_depth = j.value("max_depth", c.max_depth);
    c.fill = j.value("fill", c.fill);
    const std::string p = j.value("propagation", std::string("nearest"));
    require(p == "nearest" || p == "kernel_vote", "unknown propagation: " + p);
    c.propagation = p == "nearest" ? Propagation::nearest : Propagation::kernel_vote;
    c.threads = j.value("threads", c.threads);
    return c;
  }
};

struct PipelineResult {
  int n = 0;
  double eta = 0.0;
  std::vector<int> labels;
  std::vector<Index> queried;
  SupportEstimate support;
  ClusterPartition partition;  // top level
  int refined = 0;             // clusters re-partitioned by the second pass

  int queries() const { return int(queried.size()); }

  nlohmann::json to_json() const {
    nlohmann::json cl = nlohmann::json::array();
    for (std::size_t c = 0; c < partition.count(); ++c)
      cl.push_back({{"size", partition.clusters[c].size()}, {"label", partition.labels[c]}});
    return {{"n", n},     {"eta", eta},         {"kept", partition.kept.size()},
            {"clusters", cl}, {"queries", queries()}, {"refined", refined},
            {"min_gap", std::isfinite(partition.min_gap) ? nlohmann::json(partition.min_gap) : nlohmann::json(nullptr)}};
  }
};

// support_estimate -> threshold_set -> cluster -> active_label, with an
// optional second pass inside clusters whose re-query probes disagree.
inline PipelineResult masc_pipeline(const MetricCloud& cloud, const Oracle& oracle, const Config& cfg) {
  require(cloud.size() > 0, "empty cloud");
  require(cfg.theta > 0 && cfg.theta <= 1, "threshold must lie in (0, 1]");
  const Index M = cloud.size();
  const Eigen::MatrixXd D = cloud.distances(cfg.threads);
  auto dist = [&](Index i, Index j) { return D(i, j); };
  PipelineResult r;
  r.n = cfg.n;
  if (r.n <= 0) {
    std::vector<Index> all(M);
    std::iota(all.begin(), all.end(), Index{0});
    const double eta0 = cfg.eta_factor * median_nn(all, dist);
    r.n = eta0 > 0 ? std::max(8, int(std::ceil(4.0 / eta0))) : 8;
  }
  const Psi psi(r.n, cfg.h, cfg.form);
  // F from the distance matrix, in the same order as support_estimate
  r.support = {r.n, cfg.h, cfg.form, Eigen::VectorXd::Zero(M), {}};
  parallel_for(M, cfg.threads, [&](std::ptrdiff_t b, std::ptrdiff_t e) {
    std::vector<double> scratch;
    for (Index i = b; i < e; ++i) r.support.at_samples[i] = psi.mean(D.col(i).data(), M, scratch);
  });
  const Eigen::VectorXd& F = r.support.at_samples;
  const std::vector<Index> kept = threshold_set(r.support, cfg.theta);
  r.eta = cfg.eta > 0 ? cfg.eta : cfg.eta_factor * median_nn(kept, dist);
  require(r.eta > 0, "separation eta is zero (duplicate points?); set eta explicitly");

  r.labels.assign(M, kUnlabeled);
  auto ask = [&](Index i) {
    const int l = oracle(i);
    require(l >= 0, "oracle labels must be non-negative");
    r.queried.push_back(i);
    r.labels[i] = l;
    return l;
  };
  auto left = [&] { return cfg.budget - r.queries(); };

  std::function<void(const std::vector<Index>&, double, int, ClusterPartition*)> process =
      [&](const std::vector<Index>& idx, double eta, int depth, ClusterPartition* top) {
        ClusterPartition p = cluster_by(idx, eta, dist);
        p.theta = cfg.theta;
        for (std::size_t c : query_order(p)) {
          const auto& members = p.clusters[c];
          if (Index(members.size()) < cfg.min_cluster) continue;
          if (left() <= 0) break;
          const Index i = argmax_in(members, F);
          const int l = ask(i);
          p.labels[c] = l;
          bool conflict = false;
          if (cfg.hierarchical) {
            // farthest-point probes: each maximizes the distance to those already chosen
            std::vector<double> dmin(members.size());
            for (std::size_t a = 0; a < members.size(); ++a) dmin[a] = D(i, members[a]);
            for (int k = 0; k < cfg.probes && left() > 0; ++k) {
              const std::size_t a = std::size_t(std::max_element(dmin.begin(), dmin.end()) - dmin.begin());
              if (dmin[a] <= 0) break;
              const Index pj = members[a];
              if (ask(pj) != l) conflict = true;
              for (std::size_t b = 0; b < members.size(); ++b) dmin[b] = std::min(dmin[b], D(pj, members[b]));
            }
          }
          if (!conflict) {
            for (Index j : members)
              if (r.labels[j] == kUnlabeled) r.labels[j] = l;
            continue;
          }
          p.labels[c] = kUnlabeled;
          // cautious: a conflicting cluster at the last level keeps only its queried labels
          if (depth >= cfg.max_depth) continue;
          if (top) ++r.refined;
          double cmax = 0.0;
          for (Index j : members) cmax = std::max(cmax, F[j]);
          std::vector<Index> sub;
          for (Index j : members)
            if (F[j] < cfg.overlap * cmax) sub.push_back(j);
          if (sub.empty()) continue;
          double sub_eta = eta;
          if (cfg.sub_eta_factor > 0) {
            const double m = median_nn(sub, dist);
            if (m > 0) sub_eta = cfg.sub_eta_factor * m;
          }
          process(sub, sub_eta, depth + 1, nullptr);
        }
        if (top) *top = std::move(p);
      };
  process(kept, r.eta, 0, &r.partition);

  if (cfg.hierarchical && cfg.fill) {
    // leftover budget: farthest-point probes among kept points not yet labeled
    std::vector<Index> open;
    for (Index i : kept)
      if (r.labels[i] == kUnlabeled) open.push_back(i);
    std::vector<double> dmin(open.size(), std::numeric_limits<double>::infinity());
    for (std::size_t a = 0; a < open.size(); ++a)
      for (Index j = 0; j < M; ++j)
        if (r.labels[j] != kUnlabeled) dmin[a] = std::min(dmin[a], D(open[a], j));
    while (left() > 0 && !open.empty()) {
      const std::size_t a = std::size_t(std::max_element(dmin.begin(), dmin.end()) - dmin.begin());
      if (!(dmin[a] > 0)) break;
      const Index pj = open[a];
      ask(pj);
      for (std::size_t b = 0; b < open.size(); ++b) dmin[b] = std::min(dmin[b], D(pj, open[b]));
    }
  }

  if (cfg.propagation == Propagation::kernel_vote)
    propagate_vote(r.labels, psi, dist);
  else
    propagate_nearest(r.labels, dist);
  return r;
}

inline double accuracy(const std::vector<int>& labels, const std::vector<int>& truth) {
  require(labels.size() == truth.size(), "label vectors differ in length");
  if (truth.empty()) return 0.0;
  std::size_t ok = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) ok += labels[i] == truth[i];
  return double(ok) / double(truth.size());
}

// Empirical mu(B(x, r)) / r^q at each radius, averaged over the centers;
// returns max/min over radii. Diagnostic for detectability only.
inline double detectability_spread(const MetricCloud& cloud, const std::vector<Index>& centers,
                                   const std::vector<double>& radii, int q) {
  require(!centers.empty() && !radii.empty(), "need centers and radii");
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (double r : radii) {
    double mass = 0.0;
    for (Index c : centers) {
      Index inside = 0;
      for (Index j = 0; j < cloud.size(); ++j) inside += cloud.dist(c, j) < r;
      mass += double(inside) / double(cloud.size());
    }
    const double ratio = mass / double(centers.size()) / std::pow(r, q);
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
  }
  return lo > 0 ? hi / lo : std::numeric_limits<double>::infinity();
}

}  // namespace lka::masc
