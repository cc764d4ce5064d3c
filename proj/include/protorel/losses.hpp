#pragma once

#include <set>

#include "protorel/prototypes.hpp"

namespace protorel {

/// Weights of the combined objective:
///   s2s * L_s2s + prototype * (L_s2z + L_s2z') + cls * L_cls
struct LossWeights {
  double s2s = 1.0;
  double prototype = 1.0;
  double cls = 1.0;

  void validate() const {
    if (!(s2s >= 0 && prototype >= 0 && cls >= 0)) throw InvalidArgument("loss weights must be >= 0");
  }
};

/// Linear-softmax layer: logits = W x + b. Used both as the prototype-level
/// classifier and as the fine-tuning head.
struct LinearHead {
  Eigen::MatrixXd weight;  ///< K x m
  Eigen::VectorXd bias;    ///< K

  Eigen::Index classes() const { return weight.rows(); }

  Eigen::VectorXd logits(const Eigen::Ref<const Eigen::VectorXd>& x) const { return weight * x + bias; }

  RelationId predict(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    Eigen::Index best = 0;
    logits(x).maxCoeff(&best);
    return static_cast<RelationId>(best);
  }

  std::vector<ParamRef> parameters(const std::string& prefix) {
    return {param_ref(prefix + ".weight", weight), param_ref(prefix + ".bias", bias)};
  }
};

using PrototypeClassifier = LinearHead;
using ClassifierHead = LinearHead;

inline LinearHead init_linear_head(std::size_t classes, std::size_t dim, std::uint64_t seed) {
  LinearHead head{Eigen::MatrixXd(static_cast<Eigen::Index>(classes), static_cast<Eigen::Index>(dim)),
                  Eigen::VectorXd::Zero(static_cast<Eigen::Index>(classes))};
  Rng rng = make_rng(seed, 30);
  const double a = std::sqrt(6.0 / static_cast<double>(classes + dim));
  for (Eigen::Index j = 0; j < head.weight.cols(); ++j) {
    for (Eigen::Index i = 0; i < head.weight.rows(); ++i) head.weight(i, j) = uniform_real(rng, -a, a);
  }
  return head;
}

/// `literal` sums the ratio exp(numerator) / denominator as written for the
/// statement-to-statement objective; `log` sums its logarithm (the usual
/// InfoNCE shape).
enum class ContrastiveForm { literal, log };

struct LossOptions {
  SimilarityForm similarity = SimilarityForm::sigmoid;
  ContrastiveForm contrastive = ContrastiveForm::literal;
};

/// Gradients of a loss. Members that a loss does not depend on stay empty.
struct LossGradients {
  Eigen::MatrixXd embeddings;
  Eigen::MatrixXd prototypes;
  Eigen::MatrixXd classifier_weight;
  Eigen::VectorXd classifier_bias;
  Eigen::MatrixXd logits;
};

struct LossResult {
  double value = 0.0;
  LossGradients grad;
  std::vector<std::string> warnings;
};

namespace detail {

inline void check_batch(const Eigen::MatrixXd& emb, std::span<const RelationId> labels) {
  if (static_cast<std::size_t>(emb.rows()) != labels.size()) {
    throw InvalidArgument("batch has " + std::to_string(emb.rows()) + " embeddings but " +
                          std::to_string(labels.size()) + " labels");
  }
}

inline void check_prototypes(const PrototypeStore& store, const Eigen::MatrixXd& emb,
                             std::span<const RelationId> labels) {
  if (store.dim() != emb.cols()) throw InvalidArgument("prototype and embedding dimensions differ");
  for (auto r : labels) {
    if (r >= static_cast<RelationId>(store.size())) {
      throw InvalidArgument("no prototype for relation id " + std::to_string(r));
    }
  }
}

inline std::vector<RelationId> present_relations(std::span<const RelationId> labels) {
  std::set<RelationId> s(labels.begin(), labels.end());
  return {s.begin(), s.end()};
}

/// Statement-to-statement contrastive objective with optional per-statement
/// weights (pair (i, j) is scaled by w_i * w_j). Self pairs are excluded.
inline LossResult contrastive(const Eigen::MatrixXd& emb, std::span<const RelationId> labels,
                              std::span<const double> weights, const LossOptions& opt) {
  check_batch(emb, labels);
  const Eigen::Index N = emb.rows();
  if (N < 2) throw InvalidArgument("statement contrastive loss needs a batch of at least 2");
  if (!weights.empty() && weights.size() != labels.size()) {
    throw InvalidArgument("weight count " + std::to_string(weights.size()) + " does not match batch size " +
                          std::to_string(labels.size()));
  }
  LossResult out;
  if (present_relations(labels).size() < 2) {
    out.warnings.emplace_back("single-relation batch: denominator carries no negative pairs");
  }
  Eigen::VectorXd norms;
  const Eigen::MatrixXd u = normalize_rows(emb, &norms);
  Eigen::MatrixXd score(N, N), slope(N, N), ex(N, N);
  for (Eigen::Index i = 0; i < N; ++i) {
    for (Eigen::Index j = i + 1; j < N; ++j) {
      const Score s = score_cosine(u.row(i).dot(u.row(j)), opt.similarity);
      score(i, j) = score(j, i) = s.value;
      slope(i, j) = slope(j, i) = s.slope;
      ex(i, j) = ex(j, i) = std::exp(s.value);
    }
  }
  auto pair_weight = [&](Eigen::Index i, Eigen::Index j) {
    return weights.empty() ? 1.0 : weights[static_cast<std::size_t>(i)] * weights[static_cast<std::size_t>(j)];
  };

  const double scale = 1.0 / static_cast<double>(N * N);
  Eigen::MatrixXd grad_u = Eigen::MatrixXd::Zero(N, emb.cols());
  double total = 0.0;
  for (Eigen::Index i = 0; i < N; ++i) {
    double denom = 0.0;
    for (Eigen::Index j = 0; j < N; ++j) {
      if (j == i) continue;
      denom += labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)] ? 1.0 : ex(i, j);
    }
    // numer: sum of weighted numerators; wsum: sum of pair weights.
    double numer = 0.0;
    double wsum = 0.0;
    for (Eigen::Index j = 0; j < N; ++j) {
      if (j == i) continue;
      const bool same = labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)];
      const double w = pair_weight(i, j);
      numer += w * (same ? ex(i, j) : 1.0);
      if (same) total += opt.contrastive == ContrastiveForm::log ? w * score(i, j) : 0.0;
      wsum += w;
    }
    if (opt.contrastive == ContrastiveForm::literal) {
      total += numer / denom;
    } else {
      total -= wsum * std::log(denom);
    }
    for (Eigen::Index j = 0; j < N; ++j) {
      if (j == i) continue;
      const bool same = labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)];
      double d_total;  // d(row i contribution to total) / d(score_ij)
      if (opt.contrastive == ContrastiveForm::literal) {
        d_total = same ? pair_weight(i, j) * ex(i, j) / denom : -numer * ex(i, j) / (denom * denom);
      } else {
        d_total = same ? pair_weight(i, j) : -wsum * ex(i, j) / denom;
      }
      const double dc = -scale * d_total * slope(i, j);
      grad_u.row(i) += dc * u.row(j);
      grad_u.row(j) += dc * u.row(i);
    }
  }
  out.value = -scale * total;
  out.grad.embeddings = unit_backward(u, norms, grad_u);
  return out;
}

inline double log_softmax_at(const Eigen::Ref<const Eigen::VectorXd>& logits, Eigen::Index k,
                             Eigen::VectorXd* probs) {
  const double mx = logits.maxCoeff();
  const Eigen::VectorXd e = (logits.array() - mx).exp();
  const double z = e.sum();
  if (probs) *probs = e / z;
  return logits(k) - mx - std::log(z);
}

}  // namespace detail

/// Statement-to-statement objective:
///   L = -(1/N^2) sum_{i != j} exp(delta_ij d_ij) / sum_{j' != i} exp((1 - delta_ij') d_ij')
inline LossResult loss_s2s(const Eigen::MatrixXd& embeddings, std::span<const RelationId> labels,
                           const LossOptions& opt = {}) {
  return detail::contrastive(embeddings, labels, {}, opt);
}

/// loss_s2s with every ordered pair scaled by weight_i * weight_j.
inline LossResult loss_ind(const Eigen::MatrixXd& embeddings, std::span<const RelationId> labels,
                           std::span<const double> weights, const LossOptions& opt = {}) {
  if (weights.size() != labels.size()) {
    throw InvalidArgument("IND weights (" + std::to_string(weights.size()) + ") not aligned with batch (" +
                          std::to_string(labels.size()) + ")");
  }
  return detail::contrastive(embeddings, labels, weights, opt);
}

/// Prototype-vs-statement term for one fixed prototype z_r:
///   -(1/N^2) sum_{s_i in S^r, s_j in S^-r} [log d(z_r, s_i) + log(1 - d(z_r, s_j))]
inline LossResult loss_s2z_term(const Eigen::MatrixXd& embeddings, std::span<const RelationId> labels,
                                const PrototypeStore& store, RelationId r, const LossOptions& opt = {}) {
  detail::check_batch(embeddings, labels);
  detail::check_prototypes(store, embeddings, labels);
  if (r >= static_cast<RelationId>(store.size())) throw InvalidArgument("no prototype for relation id " + std::to_string(r));
  const Eigen::Index N = embeddings.rows();
  Eigen::VectorXd norms, znorms;
  const Eigen::MatrixXd u = normalize_rows(embeddings, &norms);
  const Eigen::MatrixXd uz = normalize_rows(store.vectors, &znorms);
  const auto ri = static_cast<Eigen::Index>(r);

  double n_in = 0, n_out = 0;
  for (auto l : labels) (l == r ? n_in : n_out) += 1.0;

  LossResult out;
  Eigen::MatrixXd grad_u = Eigen::MatrixXd::Zero(N, embeddings.cols());
  Eigen::MatrixXd grad_uz = Eigen::MatrixXd::Zero(store.size(), store.dim());
  const double scale = 1.0 / static_cast<double>(N * N);
  double total = 0.0;
  if (n_in > 0 && n_out > 0) {
    for (Eigen::Index i = 0; i < N; ++i) {
      const Score s = score_cosine(u.row(i).dot(uz.row(ri)), opt.similarity);
      double dc;
      if (labels[static_cast<std::size_t>(i)] == r) {
        total += n_out * std::log(s.value);
        dc = -scale * n_out * s.slope / s.value;
      } else {
        total += n_in * std::log1p(-s.value);
        dc = scale * n_in * s.slope / (1.0 - s.value);
      }
      grad_u.row(i) += dc * uz.row(ri);
      grad_uz.row(ri) += dc * u.row(i);
    }
  }
  out.value = -scale * total;
  out.grad.embeddings = unit_backward(u, norms, grad_u);
  out.grad.prototypes = unit_backward(uz, znorms, grad_uz);
  return out;
}

/// Sum of loss_s2z_term over every relation present in the batch.
inline LossResult loss_s2z(const Eigen::MatrixXd& embeddings, std::span<const RelationId> labels,
                           const PrototypeStore& store, const LossOptions& opt = {}) {
  detail::check_batch(embeddings, labels);
  detail::check_prototypes(store, embeddings, labels);
  LossResult out;
  out.grad.embeddings = Eigen::MatrixXd::Zero(embeddings.rows(), embeddings.cols());
  out.grad.prototypes = Eigen::MatrixXd::Zero(store.size(), store.dim());
  for (auto r : detail::present_relations(labels)) {
    LossResult t = loss_s2z_term(embeddings, labels, store, r, opt);
    out.value += t.value;
    out.grad.embeddings += t.grad.embeddings;
    out.grad.prototypes += t.grad.prototypes;
  }
  return out;
}

/// For every relation r present:
///   -(1/N^2) sum_{s_i in S^r, z' in Z^-r} [log d(z_r, s_i) + log(1 - d(z', s_i))]
inline LossResult loss_s2z_prime(const Eigen::MatrixXd& embeddings, std::span<const RelationId> labels,
                                 const PrototypeStore& store, const LossOptions& opt = {}) {
  detail::check_batch(embeddings, labels);
  detail::check_prototypes(store, embeddings, labels);
  const Eigen::Index K = store.size();
  if (K < 2) throw InvalidArgument("loss_s2z_prime needs at least 2 prototypes");
  const Eigen::Index N = embeddings.rows();
  Eigen::VectorXd norms, znorms;
  const Eigen::MatrixXd u = normalize_rows(embeddings, &norms);
  const Eigen::MatrixXd uz = normalize_rows(store.vectors, &znorms);
  Eigen::MatrixXd grad_u = Eigen::MatrixXd::Zero(N, embeddings.cols());
  Eigen::MatrixXd grad_uz = Eigen::MatrixXd::Zero(K, store.dim());
  const double scale = 1.0 / static_cast<double>(N * N);
  const double others = static_cast<double>(K - 1);
  double total = 0.0;
  for (Eigen::Index i = 0; i < N; ++i) {
    const auto r = static_cast<Eigen::Index>(labels[static_cast<std::size_t>(i)]);
    for (Eigen::Index k = 0; k < K; ++k) {
      const Score s = score_cosine(u.row(i).dot(uz.row(k)), opt.similarity);
      double dc;
      if (k == r) {
        total += others * std::log(s.value);
        dc = -scale * others * s.slope / s.value;
      } else {
        total += std::log1p(-s.value);
        dc = scale * s.slope / (1.0 - s.value);
      }
      grad_u.row(i) += dc * uz.row(k);
      grad_uz.row(k) += dc * u.row(i);
    }
  }
  LossResult out;
  out.value = -scale * total;
  out.grad.embeddings = unit_backward(u, norms, grad_u);
  out.grad.prototypes = unit_backward(uz, znorms, grad_uz);
  return out;
}

/// Prototype-level classification, as a negative log-likelihood:
///   L = -(1/K) sum_k log softmax(W z_k + b)[k]
inline LossResult loss_cls(const PrototypeStore& store, const PrototypeClassifier& classifier) {
  const Eigen::Index K = store.size();
  if (classifier.weight.rows() != K || classifier.weight.cols() != store.dim() || classifier.bias.size() != K) {
    throw InvalidArgument("prototype classifier shape does not match the prototype store");
  }
  LossResult out;
  out.grad.prototypes = Eigen::MatrixXd::Zero(K, store.dim());
  out.grad.classifier_weight = Eigen::MatrixXd::Zero(K, store.dim());
  out.grad.classifier_bias = Eigen::VectorXd::Zero(K);
  const double inv_k = 1.0 / static_cast<double>(K);
  for (Eigen::Index k = 0; k < K; ++k) {
    const Eigen::VectorXd z = store.vectors.row(k).transpose();
    Eigen::VectorXd p;
    out.value -= inv_k * detail::log_softmax_at(classifier.logits(z), k, &p);
    p(k) -= 1.0;
    p *= inv_k;
    out.grad.classifier_weight.noalias() += p * z.transpose();
    out.grad.classifier_bias += p;
    out.grad.prototypes.row(k) = (classifier.weight.transpose() * p).transpose();
  }
  return out;
}

/// Mean softmax cross-entropy over rows of `logits`; gradient in grad.logits.
inline LossResult loss_ce(const Eigen::MatrixXd& logits, std::span<const RelationId> labels) {
  detail::check_batch(logits, labels);
  const Eigen::Index N = logits.rows();
  if (N == 0) throw InvalidArgument("cross-entropy of an empty batch");
  LossResult out;
  out.grad.logits = Eigen::MatrixXd::Zero(N, logits.cols());
  const double inv_n = 1.0 / static_cast<double>(N);
  for (Eigen::Index i = 0; i < N; ++i) {
    const auto y = labels[static_cast<std::size_t>(i)];
    if (y >= static_cast<RelationId>(logits.cols())) {
      throw InvalidArgument("label " + std::to_string(y) + " out of range for " + std::to_string(logits.cols()) +
                            " classes");
    }
    Eigen::VectorXd p;
    out.value -= inv_n * detail::log_softmax_at(logits.row(i).transpose(), static_cast<Eigen::Index>(y), &p);
    p(static_cast<Eigen::Index>(y)) -= 1.0;
    out.grad.logits.row(i) = inv_n * p.transpose();
  }
  return out;
}

/// Cross-entropy of a linear head applied to embeddings, with gradients for
/// the embeddings and the head.
inline LossResult loss_ce_head(const Eigen::MatrixXd& embeddings, std::span<const RelationId> labels,
                               const LinearHead& head) {
  detail::check_batch(embeddings, labels);
  if (head.weight.cols() != embeddings.cols()) throw InvalidArgument("head and embedding dimensions differ");
  const Eigen::MatrixXd logits = (embeddings * head.weight.transpose()).rowwise() + head.bias.transpose();
  LossResult out = loss_ce(logits, labels);
  out.grad.embeddings = out.grad.logits * head.weight;
  out.grad.classifier_weight = out.grad.logits.transpose() * embeddings;
  out.grad.classifier_bias = out.grad.logits.colwise().sum().transpose();
  return out;
}

/// Component values of the combined objective and its gradients.
struct LossReport {
  double s2s = 0.0;
  double s2z = 0.0;
  double s2z_prime = 0.0;
  double cls = 0.0;
  double combined = 0.0;
  LossGradients grad;
  std::vector<std::string> warnings;
};

/// combined = w.s2s * L_s2s + w.prototype * (L_s2z + L_s2z') + w.cls * L_cls.
/// Components with a zero weight are skipped and reported as 0.
inline LossReport loss_combined(const Eigen::MatrixXd& embeddings, std::span<const RelationId> labels,
                                const PrototypeStore& store, const PrototypeClassifier& classifier,
                                const LossWeights& w, const LossOptions& opt = {}) {
  w.validate();
  detail::check_batch(embeddings, labels);
  LossReport rep;
  rep.grad.embeddings = Eigen::MatrixXd::Zero(embeddings.rows(), embeddings.cols());
  rep.grad.prototypes = Eigen::MatrixXd::Zero(store.size(), store.dim());
  rep.grad.classifier_weight = Eigen::MatrixXd::Zero(classifier.weight.rows(), classifier.weight.cols());
  rep.grad.classifier_bias = Eigen::VectorXd::Zero(classifier.bias.size());
  if (w.s2s > 0) {
    LossResult r = loss_s2s(embeddings, labels, opt);
    rep.s2s = r.value;
    rep.grad.embeddings += w.s2s * r.grad.embeddings;
    rep.warnings.insert(rep.warnings.end(), r.warnings.begin(), r.warnings.end());
  }
  if (w.prototype > 0) {
    LossResult a = loss_s2z(embeddings, labels, store, opt);
    LossResult b = loss_s2z_prime(embeddings, labels, store, opt);
    rep.s2z = a.value;
    rep.s2z_prime = b.value;
    rep.grad.embeddings += w.prototype * (a.grad.embeddings + b.grad.embeddings);
    rep.grad.prototypes += w.prototype * (a.grad.prototypes + b.grad.prototypes);
  }
  if (w.cls > 0) {
    LossResult c = loss_cls(store, classifier);
    rep.cls = c.value;
    rep.grad.prototypes += w.cls * c.grad.prototypes;
    rep.grad.classifier_weight += w.cls * c.grad.classifier_weight;
    rep.grad.classifier_bias += w.cls * c.grad.classifier_bias;
  }
  rep.combined = w.s2s * rep.s2s + w.prototype * (rep.s2z + rep.s2z_prime) + w.cls * rep.cls;
  return rep;
}

}  // namespace protorel
