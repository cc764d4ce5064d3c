#pragma once

#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "protorel/common.hpp"

namespace protorel {

/// How a cosine is turned into a score in (0, 1).
///
/// `sigmoid` is sigma(+cos): larger means more similar, which is what the
/// prototype objectives need when they maximize log d(z, s) for in-class
/// pairs. `printed` is 1 / (1 + exp(+cos)) = sigma(-cos), kept for side by
/// side inspection.
enum class SimilarityForm { sigmoid, printed };

inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// Score of a cosine and its derivative with respect to the cosine.
struct Score {
  double value;
  double slope;
};

inline Score score_cosine(double cosine, SimilarityForm form = SimilarityForm::sigmoid) {
  if (form == SimilarityForm::sigmoid) {
    const double v = sigmoid(cosine);
    return {v, v * (1.0 - v)};
  }
  const double v = sigmoid(-cosine);
  return {v, -v * (1.0 - v)};
}

inline double checked_norm(const Eigen::Ref<const Eigen::VectorXd>& v) {
  const double n = v.norm();
  if (!(n > 0.0)) throw InvalidArgument("similarity of a zero-norm vector is undefined");
  return n;
}

inline double cosine(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b) {
  if (a.size() != b.size()) throw InvalidArgument("similarity of vectors with different dimensions");
  return (a / checked_norm(a)).dot(b / checked_norm(b));
}

/// sigma(a_hat . b_hat): symmetric, scale invariant, in [sigma(-1), sigma(1)].
inline double similarity(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b,
                         SimilarityForm form = SimilarityForm::sigmoid) {
  return score_cosine(cosine(a, b), form).value;
}

/// Rows of `m` scaled to unit length; throws on a zero row.
inline Eigen::MatrixXd normalize_rows(const Eigen::MatrixXd& m, Eigen::VectorXd* norms = nullptr) {
  Eigen::MatrixXd out(m.rows(), m.cols());
  Eigen::VectorXd n(m.rows());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    n(i) = m.row(i).norm();
    if (!(n(i) > 0.0)) {
      throw InvalidArgument("row " + std::to_string(i) + " has zero norm; similarity undefined");
    }
    out.row(i) = m.row(i) / n(i);
  }
  if (norms) *norms = n;
  return out;
}

/// Back-propagates dL/du (u = x / |x|) to dL/dx row by row.
inline Eigen::MatrixXd unit_backward(const Eigen::MatrixXd& unit, const Eigen::VectorXd& norms,
                                     const Eigen::MatrixXd& grad_unit) {
  Eigen::MatrixXd out(unit.rows(), unit.cols());
  for (Eigen::Index i = 0; i < unit.rows(); ++i) {
    const double radial = unit.row(i).dot(grad_unit.row(i));
    out.row(i) = (grad_unit.row(i) - radial * unit.row(i)) / norms(i);
  }
  return out;
}

/// M(i, j) = similarity(row i, row j). Computed once per unordered pair, so
/// the result is exactly symmetric.
inline Eigen::MatrixXd pairwise_similarity(const Eigen::MatrixXd& embeddings,
                                           SimilarityForm form = SimilarityForm::sigmoid) {
  const Eigen::MatrixXd u = normalize_rows(embeddings);
  const Eigen::Index n = u.rows();
  Eigen::MatrixXd m(n, n);
  const double self = score_cosine(1.0, form).value;
  for (Eigen::Index i = 0; i < n; ++i) {
    m(i, i) = self;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      m(i, j) = m(j, i) = score_cosine(u.row(i).dot(u.row(j)), form).value;
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// Finite-difference gradient checking

/// Analytic gradients keyed by parameter name, flattened column-major.
using GradientMap = std::map<std::string, Eigen::VectorXd>;

/// A loss evaluated at the current parameter values.
using LossWithGradient = std::function<std::pair<double, GradientMap>()>;

struct GradCheckEntry {
  std::string name;
  std::size_t coordinates = 0;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;

  double max_rel_error() const {
    double m = 0.0;
    for (const auto& e : entries) m = std::max(m, e.max_rel_error);
    return m;
  }
};

inline constexpr double kRelErrorFloor = 1e-8;
/// Coordinates this far below the largest gradient of their block are
/// compared on the block's scale.
inline constexpr double kBlockScaleFloor = 1e-4;

inline double relative_error(double analytic, double numeric, double floor = kRelErrorFloor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor, kRelErrorFloor});
  return std::abs(analytic - numeric) / denom;
}

/// Compares the analytic gradient returned by `loss` against central
/// differences (f(x+eps) - f(x-eps)) / (2 eps), one coordinate at a time.
/// Parameters are restored to their original values afterwards.
inline GradCheckReport grad_check(const LossWithGradient& loss, std::span<const ParamRef> params,
                                  double eps = 1e-5) {
  if (!(eps > 0.0)) throw InvalidArgument("grad_check step must be positive");
  auto [value, grads] = loss();
  if (!std::isfinite(value)) throw std::runtime_error("grad_check: loss is not finite at the base point");

  auto eval = [&]() {
    const double v = loss().first;
    if (!std::isfinite(v)) throw std::runtime_error("grad_check: loss is not finite at a probe point");
    return v;
  };

  GradCheckReport report;
  for (const auto& p : params) {
    GradCheckEntry entry{p.name, p.size, 0.0, 0.0};
    auto it = grads.find(p.name);
    const Eigen::VectorXd analytic =
        it == grads.end() ? Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.size)) : it->second;
    if (static_cast<std::size_t>(analytic.size()) != p.size) {
      throw InvalidArgument("grad_check: gradient for '" + p.name + "' has the wrong size");
    }
    const double floor = kBlockScaleFloor * (analytic.size() ? analytic.cwiseAbs().maxCoeff() : 0.0);
    for (std::size_t k = 0; k < p.size; ++k) {
      const double saved = p.data[k];
      p.data[k] = saved + eps;
      const double up = eval();
      p.data[k] = saved - eps;
      const double down = eval();
      p.data[k] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic(static_cast<Eigen::Index>(k));
      entry.max_rel_error = std::max(entry.max_rel_error, relative_error(a, numeric, floor));
      entry.max_abs_error = std::max(entry.max_abs_error, std::abs(a - numeric));
    }
    report.entries.push_back(entry);
  }
  return report;
}

}  // namespace protorel
