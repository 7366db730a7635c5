#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include "hmv/covmat.hpp"
#include "hmv/error.hpp"
#include "hmv/portfolio.hpp"

namespace hmv {

/// Reordering of n assets: position i holds original asset order()[i].
class Permutation {
 public:
  Permutation() = default;

  explicit Permutation(std::vector<Index> order) : order_(std::move(order)) {
    std::vector<bool> seen(order_.size(), false);
    for (Index idx : order_) {
      if (idx < 0 || idx >= static_cast<Index>(order_.size()) || seen[static_cast<std::size_t>(idx)]) {
        throw Error(ErrorCode::InvalidConfig, "permutation is not a bijection");
      }
      seen[static_cast<std::size_t>(idx)] = true;
    }
  }

  static Permutation identity(Index n) {
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    return Permutation(std::move(order));
  }

  const std::vector<Index>& order() const noexcept { return order_; }
  Index size() const noexcept { return static_cast<Index>(order_.size()); }
  Index operator[](Index position) const { return order_[static_cast<std::size_t>(position)]; }

  Permutation inverse() const {
    std::vector<Index> inv(order_.size());
    for (std::size_t i = 0; i < order_.size(); ++i) {
      inv[static_cast<std::size_t>(order_[i])] = static_cast<Index>(i);
    }
    return Permutation(std::move(inv));
  }

  /// (this o other)[i] = other[this[i]]: apply `other` first, then this.
  Permutation compose(const Permutation& other) const {
    if (other.size() != size()) {
      throw Error(ErrorCode::DimensionMismatch, "composing permutations of different sizes");
    }
    std::vector<Index> out(order_.size());
    for (std::size_t i = 0; i < order_.size(); ++i) {
      out[i] = other[order_[i]];
    }
    return Permutation(std::move(out));
  }

  bool is_identity() const {
    for (std::size_t i = 0; i < order_.size(); ++i) {
      if (order_[i] != static_cast<Index>(i)) return false;
    }
    return true;
  }

  friend bool operator==(const Permutation&, const Permutation&) = default;

 private:
  std::vector<Index> order_;
};

enum class SeriationMethod { single_linkage, identity };

constexpr std::string_view to_string(SeriationMethod method) {
  return method == SeriationMethod::single_linkage ? "single_linkage" : "identity";
}

inline SeriationMethod parse_seriation_method(std::string_view name) {
  if (name == "single_linkage") return SeriationMethod::single_linkage;
  if (name == "identity") return SeriationMethod::identity;
  throw Error(ErrorCode::InvalidConfig, "unknown seriation '" + std::string(name) + "'");
}

/// d_ij = sqrt((1 - rho_ij) / 2).
inline Matrix correlation_distance(const CovarianceMatrix& cov) {
  const Index n = cov.size();
  const Vector diag = cov.values().diagonal();
  if ((diag.array() <= 0.0).any()) {
    throw Error(ErrorCode::ZeroVariance, "correlation distance needs positive variances");
  }
  const Vector inv_sd = diag.cwiseSqrt().cwiseInverse();
  Matrix dist(n, n);
  for (Index i = 0; i < n; ++i) {
    dist(i, i) = 0.0;
    for (Index j = i + 1; j < n; ++j) {
      const double rho = std::clamp(cov(i, j) * inv_sd(i) * inv_sd(j), -1.0, 1.0);
      dist(i, j) = dist(j, i) = std::sqrt(0.5 * (1.0 - rho));
    }
  }
  return dist;
}

namespace detail {

struct Cluster {
  std::vector<Index> leaves;  // in dendrogram order
  Index min_leaf = 0;
  bool active = true;
};

/// Smallest distance from any leaf of `cluster` to a leaf outside `parent`;
/// +inf when the parent covers every leaf.
inline double nearest_outside(const Matrix& dist, const std::vector<Index>& cluster,
                              const std::vector<bool>& in_parent) {
  double best = std::numeric_limits<double>::infinity();
  for (Index leaf : cluster) {
    for (Index j = 0; j < dist.rows(); ++j) {
      if (!in_parent[static_cast<std::size_t>(j)]) best = std::min(best, dist(leaf, j));
    }
  }
  return best;
}

/// True when `x` should precede `y` in the merged leaf order. Keys: larger
/// cluster, then nearer to the rest of the assets, then smaller total
/// variance. They are invariant under relabeling whenever distances and
/// variances are distinct; the final min-leaf key only resolves exact ties.
inline bool precedes(const Matrix& dist, const Vector& variances, const Cluster& x, const Cluster& y) {
  if (x.leaves.size() != y.leaves.size()) return x.leaves.size() > y.leaves.size();
  std::vector<bool> in_parent(static_cast<std::size_t>(dist.rows()), false);
  for (Index leaf : x.leaves) in_parent[static_cast<std::size_t>(leaf)] = true;
  for (Index leaf : y.leaves) in_parent[static_cast<std::size_t>(leaf)] = true;
  const double dx = nearest_outside(dist, x.leaves, in_parent);
  const double dy = nearest_outside(dist, y.leaves, in_parent);
  if (dx != dy) return dx < dy;
  auto total = [&](const Cluster& c) {
    double sum = 0.0;
    for (Index leaf : c.leaves) sum += variances(leaf);
    return sum;
  };
  const double vx = total(x);
  const double vy = total(y);
  if (vx != vy) return vx < vy;
  return x.min_leaf < y.min_leaf;
}

/// Agglomerative single-linkage clustering; returns the dendrogram leaf order.
inline std::vector<Index> single_linkage_order(const Matrix& dist, const Vector& variances) {
  const Index n = dist.rows();
  std::vector<Cluster> clusters(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    clusters[static_cast<std::size_t>(i)] = Cluster{{i}, i, true};
  }
  Matrix linkage = dist;  // cluster-to-cluster distance, indexed by slot

  for (Index merges = 0; merges + 1 < n; ++merges) {
    Index best_a = -1;
    Index best_b = -1;
    double best = std::numeric_limits<double>::infinity();
    for (Index a = 0; a < n; ++a) {
      if (!clusters[static_cast<std::size_t>(a)].active) continue;
      for (Index b = a + 1; b < n; ++b) {
        if (!clusters[static_cast<std::size_t>(b)].active) continue;
        const double d = linkage(a, b);
        // Slots keep their min leaf (merges land in the lower slot), so
        // scanning slots in order realizes the lowest-index-pair tie-break.
        if (d < best) {
          best = d;
          best_a = a;
          best_b = b;
        }
      }
    }
    auto& ca = clusters[static_cast<std::size_t>(best_a)];
    auto& cb = clusters[static_cast<std::size_t>(best_b)];
    std::vector<Index> merged;
    merged.reserve(ca.leaves.size() + cb.leaves.size());
    const bool a_first = precedes(dist, variances, ca, cb);
    const auto& first = a_first ? ca.leaves : cb.leaves;
    const auto& second = a_first ? cb.leaves : ca.leaves;
    merged.insert(merged.end(), first.begin(), first.end());
    merged.insert(merged.end(), second.begin(), second.end());
    ca.leaves = std::move(merged);
    ca.min_leaf = std::min(ca.min_leaf, cb.min_leaf);
    cb.active = false;
    cb.leaves.clear();
    for (Index c = 0; c < n; ++c) {
      if (c == best_a || !clusters[static_cast<std::size_t>(c)].active) continue;
      const double d = std::min(linkage(best_a, c), linkage(best_b, c));
      linkage(best_a, c) = linkage(c, best_a) = d;
    }
  }
  return n == 0 ? std::vector<Index>{} : clusters.front().leaves;
}

}  // namespace detail

/// Reorders assets so that similar ones sit next to each other.
inline Permutation seriate(const CovarianceMatrix& cov, SeriationMethod method = SeriationMethod::single_linkage) {
  if (method == SeriationMethod::identity || cov.size() <= 1) {
    return Permutation::identity(cov.size());
  }
  return Permutation(detail::single_linkage_order(correlation_distance(cov), cov.values().diagonal()));
}

/// P S P^T: entry (i, j) of the result is S(p[i], p[j]).
inline CovarianceMatrix apply_permutation(const CovarianceMatrix& cov, const Permutation& p) {
  if (p.size() != cov.size()) {
    throw Error(ErrorCode::DimensionMismatch, "permutation size does not match covariance");
  }
  const Index n = cov.size();
  Matrix out(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      out(i, j) = cov(p[i], p[j]);
    }
  }
  std::vector<std::string> labels;
  if (cov.has_labels()) {
    labels.reserve(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) labels.push_back(cov.labels()[static_cast<std::size_t>(p[i])]);
  }
  return CovarianceMatrix(std::move(out), std::move(labels));
}

/// Weights in permuted coordinates: out[i] = w[p[i]].
inline Vector apply_permutation(const Vector& w, const Permutation& p) {
  if (p.size() != w.size()) {
    throw Error(ErrorCode::DimensionMismatch, "permutation size does not match weights");
  }
  Vector out(w.size());
  for (Index i = 0; i < w.size(); ++i) out(i) = w(p[i]);
  return out;
}

/// Maps weights computed in permuted coordinates back to the original order.
inline Vector apply_inverse_permutation(const Vector& w_permuted, const Permutation& p) {
  if (p.size() != w_permuted.size()) {
    throw Error(ErrorCode::DimensionMismatch, "permutation size does not match weights");
  }
  Vector out(w_permuted.size());
  for (Index i = 0; i < w_permuted.size(); ++i) out(p[i]) = w_permuted(i);
  return out;
}

}  // namespace hmv
