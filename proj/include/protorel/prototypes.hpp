#pragma once

#include <numbers>

#include "protorel/encoder.hpp"

namespace protorel {

/// One prototype row per label relation, kept on the unit sphere.
struct PrototypeStore {
  Eigen::MatrixXd vectors;  ///< K x m

  Eigen::Index size() const { return vectors.rows(); }
  Eigen::Index dim() const { return vectors.cols(); }

  /// In place, so parameter views into `vectors` stay valid.
  void renormalize() {
    for (Eigen::Index k = 0; k < vectors.rows(); ++k) {
      const double n = vectors.row(k).norm();
      if (!(n > 0.0)) throw InvalidArgument("prototype " + std::to_string(k) + " collapsed to zero");
      vectors.row(k) /= n;
    }
  }
};

inline PrototypeStore init_prototypes_random(std::size_t K, std::size_t m, std::uint64_t seed) {
  if (K < 1 || m < 1) throw InvalidArgument("prototype store needs K >= 1 and m >= 1");
  Rng rng = make_rng(seed, 20);
  std::normal_distribution<double> normal(0.0, 1.0);
  PrototypeStore store{Eigen::MatrixXd(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(m))};
  for (Eigen::Index k = 0; k < store.size(); ++k) {
    do {
      for (Eigen::Index j = 0; j < store.dim(); ++j) store.vectors(k, j) = normal(rng);
    } while (store.vectors.row(k).norm() == 0.0);
  }
  store.renormalize();
  return store;
}

/// Row k = normalized mean of the given embeddings labelled k.
inline PrototypeStore class_mean_prototypes(const Eigen::MatrixXd& embeddings, std::span<const RelationId> labels,
                                            std::size_t K, const std::vector<std::string>& names = {}) {
  PrototypeStore store{Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(K), embeddings.cols())};
  std::vector<std::size_t> counts(K, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    store.vectors.row(static_cast<Eigen::Index>(labels[i])) += embeddings.row(static_cast<Eigen::Index>(i));
    ++counts[labels[i]];
  }
  for (std::size_t k = 0; k < K; ++k) {
    if (counts[k] == 0) {
      throw InvalidArgument("relation '" + (k < names.size() ? names[k] : std::to_string(k)) +
                            "' has no statements; cannot form its class mean");
    }
  }
  store.renormalize();
  return store;
}

template <StatementEncoder E>
PrototypeStore init_prototypes_class_mean(const E& encoder, const StatementSet& set) {
  const auto labels = set.labels();
  return class_mean_prototypes(embed_all(encoder, set), labels, set.num_labels, set.relation_vocab);
}

/// argmax_k similarity(s, z_k); ties go to the lowest relation id.
inline RelationId nearest_prototype(const PrototypeStore& store, const Eigen::Ref<const Eigen::VectorXd>& s) {
  const double n = checked_norm(s);
  RelationId best = 0;
  double best_cos = -std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < store.size(); ++k) {
    const double c = store.vectors.row(k).dot(s) / (n * store.vectors.row(k).norm());
    if (c > best_cos) {
      best_cos = c;
      best = static_cast<RelationId>(k);
    }
  }
  return best;
}

/// Smallest angle (radians) between any two prototype rows.
inline double min_pairwise_angle(const PrototypeStore& store) {
  const Eigen::MatrixXd u = normalize_rows(store.vectors);
  double best = std::numbers::pi;
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < u.rows(); ++j) {
      best = std::min(best, std::acos(std::clamp(u.row(i).dot(u.row(j)), -1.0, 1.0)));
    }
  }
  return best;
}

/// Per-statement weights for the IND objective, in [0, 1].
struct IndWeights {
  std::vector<double> values;
};

/// clamp(cos(s_i, z_{r_i}), 0, 1) for every statement.
inline IndWeights ind_weights(const Eigen::MatrixXd& embeddings, std::span<const RelationId> labels,
                              const PrototypeStore& store) {
  IndWeights w;
  w.values.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double c = cosine(embeddings.row(static_cast<Eigen::Index>(i)).transpose(),
                            store.vectors.row(static_cast<Eigen::Index>(labels[i])).transpose());
    w.values.push_back(std::clamp(c, 0.0, 1.0));
  }
  return w;
}

/// Fixed class-mean prototypes from a frozen encoder plus the weights derived
/// from them. Computed once; neither is trained afterwards.
template <StatementEncoder E>
std::pair<PrototypeStore, IndWeights> surrogate_ind_prototypes(const E& encoder, const StatementSet& set) {
  const Eigen::MatrixXd emb = embed_all(encoder, set);
  const auto labels = set.labels();
  PrototypeStore store = class_mean_prototypes(emb, labels, set.num_labels, set.relation_vocab);
  return {store, ind_weights(emb, labels, store)};
}

}  // namespace protorel
