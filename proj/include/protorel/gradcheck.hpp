#pragma once

#include "protorel/losses.hpp"

namespace protorel {

struct GradCheckCase {
  Eigen::MatrixXd embeddings;
  std::vector<RelationId> labels;
  PrototypeStore store;
  PrototypeClassifier classifier;
  std::vector<double> ind_weights;
};

/// Random problem with N <= 16, m <= 16, 2 <= K <= 4.
inline GradCheckCase random_grad_check_case(Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto N = static_cast<Eigen::Index>(2 + uniform_index(rng, 15));
  const auto m = static_cast<Eigen::Index>(2 + uniform_index(rng, 15));
  const auto K = static_cast<Eigen::Index>(2 + uniform_index(rng, 3));
  auto fill = [&](Eigen::Index r, Eigen::Index c, double scale) {
    Eigen::MatrixXd x(r, c);
    for (Eigen::Index j = 0; j < c; ++j) {
      for (Eigen::Index i = 0; i < r; ++i) x(i, j) = scale * normal(rng);
    }
    return x;
  };
  GradCheckCase c;
  c.embeddings = fill(N, m, 1.0);
  c.store.vectors = fill(K, m, 1.0);
  c.classifier.weight = fill(K, m, 0.5);
  c.classifier.bias = fill(K, 1, 0.5).col(0);
  for (Eigen::Index i = 0; i < N; ++i) {
    c.labels.push_back(uniform_index(rng, static_cast<std::size_t>(K)));
    c.ind_weights.push_back(uniform_real(rng, 0.0, 1.0));
  }
  return c;
}

struct GradCheckSummaryRow {
  std::string loss;
  std::size_t cases = 0;
  double max_rel_error = 0;
};

struct GradCheckSummary {
  std::vector<GradCheckSummaryRow> rows;

  double max_rel_error() const {
    double m = 0;
    for (const auto& r : rows) m = std::max(m, r.max_rel_error);
    return m;
  }
};

inline constexpr std::array<std::string_view, 7> kGradCheckLosses{"s2s", "s2z", "s2z_prime", "cls", "ce", "ind",
                                                                  "combined"};

/// Central-difference check of one named loss on one case; returns the
/// largest relative error over every parameter coordinate.
inline double grad_check_loss(std::string_view loss, GradCheckCase c, double eps, const LossOptions& opt = {}) {
  std::vector<ParamRef> params{param_ref("embeddings", c.embeddings)};
  LossWithGradient fn;
  auto emb_map = [&](const LossGradients& g) { return GradientMap{{"embeddings", flatten(g.embeddings)}}; };
  if (loss == "s2s") {
    fn = [&] {
      auto r = loss_s2s(c.embeddings, c.labels, opt);
      return std::pair{r.value, emb_map(r.grad)};
    };
  } else if (loss == "ind") {
    fn = [&] {
      auto r = loss_ind(c.embeddings, c.labels, c.ind_weights, opt);
      return std::pair{r.value, emb_map(r.grad)};
    };
  } else if (loss == "s2z" || loss == "s2z_prime") {
    params.push_back(param_ref("prototypes", c.store.vectors));
    const bool prime = loss == "s2z_prime";
    fn = [&, prime] {
      auto r = prime ? loss_s2z_prime(c.embeddings, c.labels, c.store, opt) : loss_s2z(c.embeddings, c.labels, c.store, opt);
      auto g = emb_map(r.grad);
      g["prototypes"] = flatten(r.grad.prototypes);
      return std::pair{r.value, g};
    };
  } else if (loss == "cls") {
    params = {param_ref("prototypes", c.store.vectors), param_ref("classifier.weight", c.classifier.weight),
              param_ref("classifier.bias", c.classifier.bias)};
    fn = [&] {
      auto r = loss_cls(c.store, c.classifier);
      return std::pair{r.value, GradientMap{{"prototypes", flatten(r.grad.prototypes)},
                                            {"classifier.weight", flatten(r.grad.classifier_weight)},
                                            {"classifier.bias", r.grad.classifier_bias}}};
    };
  } else if (loss == "ce") {
    params.push_back(param_ref("classifier.weight", c.classifier.weight));
    params.push_back(param_ref("classifier.bias", c.classifier.bias));
    fn = [&] {
      auto r = loss_ce_head(c.embeddings, c.labels, c.classifier);
      auto g = emb_map(r.grad);
      g["classifier.weight"] = flatten(r.grad.classifier_weight);
      g["classifier.bias"] = r.grad.classifier_bias;
      return std::pair{r.value, g};
    };
  } else if (loss == "combined") {
    params.push_back(param_ref("prototypes", c.store.vectors));
    params.push_back(param_ref("classifier.weight", c.classifier.weight));
    params.push_back(param_ref("classifier.bias", c.classifier.bias));
    fn = [&] {
      auto r = loss_combined(c.embeddings, c.labels, c.store, c.classifier, {1.0, 1.0, 1.0}, opt);
      auto g = emb_map(r.grad);
      g["prototypes"] = flatten(r.grad.prototypes);
      g["classifier.weight"] = flatten(r.grad.classifier_weight);
      g["classifier.bias"] = r.grad.classifier_bias;
      return std::pair{r.combined, g};
    };
  } else {
    throw InvalidArgument("unknown loss '" + std::string(loss) + "'");
  }
  return grad_check(fn, params, eps).max_rel_error();
}

/// Every loss on `cases` random problems drawn from `seed`.
inline GradCheckSummary run_grad_check_suite(std::uint64_t seed, std::size_t cases = 20, double eps = 1e-5,
                                             const LossOptions& opt = {}) {
  GradCheckSummary out;
  for (auto name : kGradCheckLosses) out.rows.push_back({std::string(name), cases, 0.0});
  for (std::size_t k = 0; k < cases; ++k) {
    Rng rng = make_rng(seed, 400000 + k);
    const GradCheckCase c = random_grad_check_case(rng);
    for (auto& row : out.rows) row.max_rel_error = std::max(row.max_rel_error, grad_check_loss(row.loss, c, eps, opt));
  }
  return out;
}

}  // namespace protorel
