#include <gtest/gtest.h>

#include "protorel/gradcheck.hpp"

using namespace protorel;

namespace {

// Scalar reference implementations written directly from the formulas.

double sim(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return 1.0 / (1.0 + std::exp(-a.dot(b) / (a.norm() * b.norm())));
}

Eigen::VectorXd row(const Eigen::MatrixXd& m, Eigen::Index i) { return m.row(i).transpose(); }

double oracle_s2s(const Eigen::MatrixXd& e, const std::vector<RelationId>& y, const std::vector<double>& w, bool log) {
  const auto N = e.rows();
  double total = 0;
  for (Eigen::Index i = 0; i < N; ++i) {
    double denom = 0;
    for (Eigen::Index j = 0; j < N; ++j) {
      if (j != i) denom += std::exp((y[i] == y[j] ? 0.0 : 1.0) * sim(row(e, i), row(e, j)));
    }
    for (Eigen::Index j = 0; j < N; ++j) {
      if (j == i) continue;
      const double frac = std::exp((y[i] == y[j] ? 1.0 : 0.0) * sim(row(e, i), row(e, j))) / denom;
      const double wij = w.empty() ? 1.0 : w[i] * w[j];
      total += wij * (log ? std::log(frac) : frac);
    }
  }
  return -total / static_cast<double>(N * N);
}

double oracle_s2z(const Eigen::MatrixXd& e, const std::vector<RelationId>& y, const Eigen::MatrixXd& z) {
  const auto N = e.rows();
  double out = 0;
  for (RelationId r : std::set<RelationId>(y.begin(), y.end())) {
    double t = 0;
    for (Eigen::Index i = 0; i < N; ++i) {
      if (y[i] != r) continue;
      for (Eigen::Index j = 0; j < N; ++j) {
        if (y[j] == r) continue;
        t += std::log(sim(row(z, r), row(e, i))) + std::log(1 - sim(row(z, r), row(e, j)));
      }
    }
    out += -t / static_cast<double>(N * N);
  }
  return out;
}

double oracle_s2z_prime(const Eigen::MatrixXd& e, const std::vector<RelationId>& y, const Eigen::MatrixXd& z) {
  const auto N = e.rows();
  double out = 0;
  for (RelationId r : std::set<RelationId>(y.begin(), y.end())) {
    double t = 0;
    for (Eigen::Index i = 0; i < N; ++i) {
      if (y[i] != r) continue;
      for (Eigen::Index k = 0; k < z.rows(); ++k) {
        if (k == static_cast<Eigen::Index>(r)) continue;
        t += std::log(sim(row(z, r), row(e, i))) + std::log(1 - sim(row(z, k), row(e, i)));
      }
    }
    out += -t / static_cast<double>(N * N);
  }
  return out;
}

double oracle_nll(const Eigen::VectorXd& logits, Eigen::Index k) {
  double s = 0;
  for (Eigen::Index c = 0; c < logits.size(); ++c) s += std::exp(logits(c));
  return -std::log(std::exp(logits(k)) / s);
}

struct Batch {
  Eigen::MatrixXd emb;
  std::vector<RelationId> labels;
  PrototypeStore store;
  PrototypeClassifier cls;
};

Batch random_batch(std::uint64_t seed, Eigen::Index N = 12, Eigen::Index m = 6, std::size_t K = 3) {
  Rng rng = make_rng(seed);
  std::normal_distribution<double> n(0, 1);
  Batch b;
  b.emb.resize(N, m);
  for (Eigen::Index i = 0; i < N; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) b.emb(i, j) = n(rng);
    b.labels.push_back(static_cast<RelationId>(static_cast<std::size_t>(i) % K));
  }
  b.store = init_prototypes_random(K, static_cast<std::size_t>(m), seed);
  b.cls = init_linear_head(K, static_cast<std::size_t>(m), seed);
  b.cls.bias.setRandom();
  return b;
}

}  // namespace

// ---------------------------------------------------------------------------
// Closed-form scalar cases

TEST(LossS2S, IdenticalSameRelationPair) {
  Eigen::MatrixXd e(2, 2);
  e << 1, 0, 1, 0;
  const std::vector<RelationId> y{0, 0};
  const auto r = loss_s2s(e, y);
  EXPECT_NEAR(r.value, -1.038639, 1e-6);  // exp(0.731059) = 2.077278
  EXPECT_NEAR(r.value, -0.5 * std::exp(sigmoid(1.0)), 1e-15);
  ASSERT_EQ(r.warnings.size(), 1u);  // single-relation batch
}

TEST(LossS2S, OrthogonalDifferentRelationPair) {
  const std::vector<RelationId> y{0, 1};
  const auto r = loss_s2s(Eigen::MatrixXd::Identity(2, 2), y);
  EXPECT_NEAR(r.value, -0.303265, 1e-6);
  EXPECT_NEAR(r.value, -0.5 / std::exp(0.5), 1e-15);
  EXPECT_TRUE(r.warnings.empty());
}

TEST(LossS2S, TooSmallBatchRejected) {
  const std::vector<RelationId> y{0};
  EXPECT_THROW(loss_s2s(Eigen::MatrixXd::Ones(1, 2), y), InvalidArgument);
}

TEST(LossS2Z, SingleRelationTermExample) {
  PrototypeStore store{Eigen::Matrix2d::Identity()};
  Eigen::MatrixXd e(2, 2);
  e << 1, 0, -1, 0;
  const std::vector<RelationId> y{0, 1};
  const auto r = loss_s2z_term(e, y, store, 0);
  EXPECT_NEAR(r.value, 0.156631, 1e-6);
  EXPECT_NEAR(r.value, -2 * std::log(sigmoid(1.0)) / 4, 1e-15);
}

TEST(LossS2Z, SingleRelationBatchIsZero) {
  const auto b = random_batch(1, 5, 4, 1);
  const std::vector<RelationId> y(5, 0);
  const auto r = loss_s2z(b.emb, y, b.store);
  EXPECT_EQ(r.value, 0.0);
  EXPECT_TRUE(r.grad.embeddings.isZero(0.0));
}

TEST(LossS2Z, MissingPrototypeRejected) {
  PrototypeStore store{Eigen::MatrixXd::Identity(2, 3)};
  const std::vector<RelationId> y{0, 2};
  EXPECT_THROW(loss_s2z(Eigen::MatrixXd::Ones(2, 3), y, store), InvalidArgument);
}

TEST(LossS2ZPrime, SingleStatementExample) {
  PrototypeStore store{Eigen::Matrix2d::Identity()};
  Eigen::MatrixXd e(1, 2);
  e << 1, 0;
  const std::vector<RelationId> y{0};
  const auto r = loss_s2z_prime(e, y, store);
  EXPECT_NEAR(r.value, 1.006409, 1e-6);
  EXPECT_NEAR(r.value, -std::log(sigmoid(1.0)) - std::log(0.5), 1e-15);
}

TEST(LossS2ZPrime, AntiAlignedIsPerPairOptimum) {
  PrototypeStore store{Eigen::Matrix2d::Identity()};
  store.vectors.row(1) << -1, 0;
  const std::vector<RelationId> y{0};
  Eigen::MatrixXd e(1, 2);
  e << 1, 0;
  const double best = loss_s2z_prime(e, y, store).value;
  EXPECT_NEAR(best, -2 * std::log(sigmoid(1.0)), 1e-15);
  for (double a : {0.1, 0.5, 1.0, 2.0, 3.0}) {
    e << std::cos(a), std::sin(a);
    EXPECT_GT(loss_s2z_prime(e, y, store).value, best);
  }
}

TEST(LossS2ZPrime, SinglePrototypeRejected) {
  PrototypeStore store{Eigen::MatrixXd::Ones(1, 2)};
  const std::vector<RelationId> y{0, 0};
  EXPECT_THROW(loss_s2z_prime(Eigen::MatrixXd::Ones(2, 2), y, store), InvalidArgument);
}

TEST(LossCls, UniformClassifierIsLog4) {
  const auto store = init_prototypes_random(4, 3, 1);
  PrototypeClassifier c{Eigen::MatrixXd::Zero(4, 3), Eigen::VectorXd::Zero(4)};
  EXPECT_NEAR(loss_cls(store, c).value, std::log(4.0), 1e-15);
  EXPECT_NEAR(std::log(4.0), 1.386294, 1e-6);
}

TEST(LossCls, TwoPrototypeHandCase) {
  PrototypeStore store{Eigen::Matrix2d::Identity()};
  PrototypeClassifier c{2 * Eigen::Matrix2d::Identity(), Eigen::VectorXd::Zero(2)};
  const double v = loss_cls(store, c).value;
  EXPECT_NEAR(v, 0.126928, 1e-6);
  EXPECT_NEAR(v, -std::log(std::exp(2.0) / (std::exp(2.0) + 1)), 1e-15);
}

TEST(LossCls, PerfectClassifierLimit) {
  PrototypeStore store{Eigen::Matrix3d::Identity()};
  PrototypeClassifier c{60 * Eigen::Matrix3d::Identity(), Eigen::VectorXd::Zero(3)};
  EXPECT_LT(loss_cls(store, c).value, 1e-20);
}

TEST(LossCe, ReferenceValues) {
  const std::vector<RelationId> y{2};
  EXPECT_NEAR(loss_ce(Eigen::MatrixXd::Zero(1, 4), y).value, std::log(4.0), 1e-15);
  Eigen::MatrixXd l(1, 2);
  l << 1, 0;
  const std::vector<RelationId> y0{0};
  EXPECT_NEAR(loss_ce(l, y0).value, 0.313262, 1e-6);
  l << 80, 0;
  EXPECT_LT(loss_ce(l, y0).value, 1e-30);
  const std::vector<RelationId> bad{5};
  EXPECT_THROW(loss_ce(Eigen::MatrixXd::Zero(1, 4), bad), InvalidArgument);
}

TEST(LossInd, WeightExamples) {
  Eigen::MatrixXd e(2, 2);
  e << 1, 0, 1, 0;
  const std::vector<RelationId> y{0, 0};
  const std::vector<double> half{1.0, 0.5}, zero{0.0, 0.0};
  EXPECT_NEAR(loss_ind(e, y, half).value, -0.519320, 1e-6);
  EXPECT_NEAR(loss_ind(e, y, half).value, -0.25 * std::exp(sigmoid(1.0)), 1e-15);
  EXPECT_EQ(loss_ind(e, y, zero).value, 0.0);
  const std::vector<double> short_w{1.0};
  EXPECT_THROW(loss_ind(e, y, short_w), InvalidArgument);
}

TEST(LossInd, UnitWeightsBitwiseEqualS2S) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto b = random_batch(s);
    const std::vector<double> ones(b.labels.size(), 1.0);
    const auto a = loss_s2s(b.emb, b.labels);
    const auto c = loss_ind(b.emb, b.labels, ones);
    EXPECT_EQ(a.value, c.value);
    EXPECT_EQ(a.grad.embeddings, c.grad.embeddings);
  }
}

TEST(LossCombined, WeightSelections) {
  const auto b = random_batch(3, 8, 5, 4);
  const auto s2s_only = loss_combined(b.emb, b.labels, b.store, b.cls, {1, 0, 0});
  EXPECT_EQ(s2s_only.combined, loss_s2s(b.emb, b.labels).value);
  PrototypeClassifier uniform{Eigen::MatrixXd::Zero(4, 5), Eigen::VectorXd::Zero(4)};
  EXPECT_NEAR(loss_combined(b.emb, b.labels, b.store, uniform, {0, 0, 1}).combined, std::log(4.0), 1e-15);
}

TEST(LossCombined, DecompositionIdentity) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto b = random_batch(s, 10, 4, 3);
    const LossWeights w{0.7, 1.3, 0.4};
    const auto rep = loss_combined(b.emb, b.labels, b.store, b.cls, w);
    const double s2s = loss_s2s(b.emb, b.labels).value;
    const double s2z = loss_s2z(b.emb, b.labels, b.store).value;
    const double s2zp = loss_s2z_prime(b.emb, b.labels, b.store).value;
    const double cls = loss_cls(b.store, b.cls).value;
    EXPECT_NEAR(rep.combined, w.s2s * s2s + w.prototype * (s2z + s2zp) + w.cls * cls, 1e-12);
    EXPECT_NEAR(rep.combined, w.s2s * rep.s2s + w.prototype * (rep.s2z + rep.s2z_prime) + w.cls * rep.cls, 1e-12);
  }
}

// ---------------------------------------------------------------------------
// Agreement with the scalar oracles on random batches

TEST(LossOracle, ValuesMatchReference) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto b = random_batch(100 + s, 9, 5, 3);
    std::vector<double> w;
    Rng rng = make_rng(s);
    for (std::size_t i = 0; i < b.labels.size(); ++i) w.push_back(uniform_real(rng, 0, 1));
    EXPECT_NEAR(loss_s2s(b.emb, b.labels).value, oracle_s2s(b.emb, b.labels, {}, false), 1e-13);
    EXPECT_NEAR(loss_ind(b.emb, b.labels, w).value, oracle_s2s(b.emb, b.labels, w, false), 1e-13);
    LossOptions log_form;
    log_form.contrastive = ContrastiveForm::log;
    EXPECT_NEAR(loss_s2s(b.emb, b.labels, log_form).value, oracle_s2s(b.emb, b.labels, {}, true), 1e-13);
    EXPECT_NEAR(loss_s2z(b.emb, b.labels, b.store).value, oracle_s2z(b.emb, b.labels, b.store.vectors), 1e-13);
    EXPECT_NEAR(loss_s2z_prime(b.emb, b.labels, b.store).value,
                oracle_s2z_prime(b.emb, b.labels, b.store.vectors), 1e-13);
    double cls = 0;
    for (Eigen::Index k = 0; k < 3; ++k) cls += oracle_nll(b.cls.logits(row(b.store.vectors, k)), k) / 3.0;
    EXPECT_NEAR(loss_cls(b.store, b.cls).value, cls, 1e-13);
  }
}

TEST(LossProperties, S2SScaleInvariant) {
  auto b = random_batch(7);
  const double v = loss_s2s(b.emb, b.labels).value;
  b.emb.row(3) *= 4.5;
  b.emb.row(0) *= 0.01;
  EXPECT_NEAR(loss_s2s(b.emb, b.labels).value, v, 1e-14);
}

TEST(LossProperties, S2ZMonotoneInSimilarity) {
  // Rotating an in-class statement towards z_r lowers the loss; rotating an
  // out-class statement towards z_r raises it.
  PrototypeStore store{Eigen::Matrix2d::Identity()};
  const std::vector<RelationId> y{0, 1};
  auto at = [&](double a_in, double a_out) {
    Eigen::MatrixXd e(2, 2);
    e << std::cos(a_in), std::sin(a_in), std::cos(a_out), std::sin(a_out);
    return loss_s2z_term(e, y, store, 0).value;
  };
  for (double a = 0.2; a < 3.0; a += 0.4) {
    EXPECT_LT(at(a - 0.1, 2.0), at(a, 2.0));
    EXPECT_GT(at(1.0, a - 0.1), at(1.0, a));
  }
}

TEST(LossProperties, FiniteForNonzeroInputs) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    auto b = random_batch(s, 6, 3, 3);
    b.emb *= 1e-150;
    const auto rep = loss_combined(b.emb, b.labels, b.store, b.cls, {});
    EXPECT_TRUE(std::isfinite(rep.combined));
  }
}

// ---------------------------------------------------------------------------
// Gradients

TEST(LossGradients, RandomTwelveStatementBatch) {
  Rng rng = make_rng(21);
  GradCheckCase c;
  const auto b = random_batch(21, 12, 6, 3);
  c.embeddings = b.emb;
  c.labels = b.labels;
  c.store = b.store;
  c.classifier = b.cls;
  for (std::size_t i = 0; i < 12; ++i) c.ind_weights.push_back(uniform_real(rng, 0, 1));
  for (auto name : kGradCheckLosses) EXPECT_LT(grad_check_loss(name, c, 1e-5), 1e-4) << name;
}

TEST(LossGradients, AlternativeFormsAlsoCheck) {
  LossOptions opt;
  opt.contrastive = ContrastiveForm::log;
  opt.similarity = SimilarityForm::printed;
  const auto summary = run_grad_check_suite(3, 5, 1e-5, opt);
  EXPECT_LT(summary.max_rel_error(), 1e-4);
}

TEST(LossGradients, UnknownLossNameRejected) {
  Rng rng = make_rng(1);
  EXPECT_THROW(grad_check_loss("nope", random_grad_check_case(rng), 1e-5), InvalidArgument);
}
