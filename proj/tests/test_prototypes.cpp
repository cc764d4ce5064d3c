#include <gtest/gtest.h>

#include <map>

#include "protorel/prototypes.hpp"

using namespace protorel;

TEST(InitPrototypes, RandomUnitRows) {
  for (std::size_t K : {1u, 3u, 7u}) {
    const auto store = init_prototypes_random(K, 5, 2);
    ASSERT_EQ(store.size(), static_cast<Eigen::Index>(K));
    for (Eigen::Index k = 0; k < store.size(); ++k) EXPECT_NEAR(store.vectors.row(k).norm(), 1.0, 1e-12);
  }
  EXPECT_EQ(init_prototypes_random(4, 6, 8).vectors, init_prototypes_random(4, 6, 8).vectors);
  EXPECT_NE(init_prototypes_random(4, 6, 8).vectors, init_prototypes_random(4, 6, 9).vectors);
  EXPECT_THROW(init_prototypes_random(0, 3, 1), InvalidArgument);
}

TEST(InitPrototypes, ClassMeanOfIdenticalVectors) {
  Eigen::MatrixXd emb(4, 2);
  emb << 3, 4, 3, 4, 0, -2, 1, -2;
  const std::vector<RelationId> labels{0, 0, 1, 1};
  const auto store = class_mean_prototypes(emb, labels, 2);
  EXPECT_TRUE(store.vectors.row(0).isApprox(Eigen::RowVector2d(0.6, 0.8), 1e-15));
  EXPECT_TRUE(store.vectors.row(1).isApprox(Eigen::RowVector2d(0.5, -2.0).normalized(), 1e-15));
}

TEST(InitPrototypes, ClassMeanEmptyRelationNamed) {
  Eigen::MatrixXd emb = Eigen::MatrixXd::Ones(2, 2);
  const std::vector<RelationId> labels{0, 0};
  try {
    class_mean_prototypes(emb, labels, 2, {"born_in", "capital_of"});
    FAIL();
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("capital_of"), std::string::npos);
  }
}

TEST(NearestPrototype, SelfAndTieAndHandCase) {
  PrototypeStore store{Eigen::Matrix3d::Identity()};
  for (Eigen::Index k = 0; k < 3; ++k) EXPECT_EQ(nearest_prototype(store, store.vectors.row(k).transpose()), static_cast<RelationId>(k));
  EXPECT_EQ(nearest_prototype(store, Eigen::Vector3d(1, 1, 0)), 0u);
  EXPECT_EQ(nearest_prototype(store, Eigen::Vector3d(0.1, 0, 1)), 2u);  // dots 0.1, 0, 1
  EXPECT_EQ(nearest_prototype(store, Eigen::Vector3d(0.2, 0, 2)), 2u);  // rescaled
  EXPECT_THROW(nearest_prototype(store, Eigen::Vector3d::Zero()), InvalidArgument);
}

TEST(NearestPrototype, ScaleInvariant) {
  const auto store = init_prototypes_random(5, 4, 3);
  Rng rng = make_rng(1);
  for (int t = 0; t < 100; ++t) {
    Eigen::Vector4d s;
    for (int i = 0; i < 4; ++i) s(i) = uniform_real(rng, -1, 1);
    EXPECT_EQ(nearest_prototype(store, s), nearest_prototype(store, 0.01 * s));
  }
}

TEST(IndWeights, ClampedCosine) {
  PrototypeStore store{Eigen::Matrix2d::Identity()};
  Eigen::MatrixXd emb(4, 2);
  emb << 2, 0, 0, 1, -1, 0, 1, 1;
  const std::vector<RelationId> labels{0, 0, 0, 1};
  const auto w = ind_weights(emb, labels, store);
  ASSERT_EQ(w.values.size(), 4u);
  EXPECT_DOUBLE_EQ(w.values[0], 1.0);
  EXPECT_DOUBLE_EQ(w.values[1], 0.0);
  EXPECT_DOUBLE_EQ(w.values[2], 0.0);
  EXPECT_NEAR(w.values[3], std::sqrt(0.5), 1e-15);
}

TEST(MinPairwiseAngle, KnownConfigurations) {
  PrototypeStore ortho{Eigen::Matrix3d::Identity()};
  EXPECT_NEAR(min_pairwise_angle(ortho), std::numbers::pi / 2, 1e-12);
  Eigen::MatrixXd v(3, 2);
  v << 1, 0, 1, 1, -1, 0;
  EXPECT_NEAR(min_pairwise_angle(PrototypeStore{v}), std::numbers::pi / 4, 1e-12);
}

TEST(PrototypeStore, RenormalizeRejectsCollapse) {
  PrototypeStore s{Eigen::MatrixXd::Zero(2, 3)};
  s.vectors(0, 0) = 5;
  EXPECT_THROW(s.renormalize(), InvalidArgument);
}

TEST(SurrogateInd, ClassMeansAndWeightsFromFrozenEncoder) {
  std::map<std::size_t, Eigen::VectorXd> vecs{{0, Eigen::Vector2d(1, 0)},
                                              {1, Eigen::Vector2d(2, 0)},
                                              {2, Eigen::Vector2d(0, 1)},
                                              {3, Eigen::Vector2d(1, 1)}};
  const FrozenEncoder enc(vecs, 2);
  StatementSet set;
  set.num_labels = 2;
  set.relation_vocab = {"a", "b"};
  for (RelationId r : {0u, 0u, 1u, 1u}) {
    Statement s;
    s.tokens = {0, 1};
    s.head = {0, 1};
    s.tail = {1, 2};
    s.relation = r;
    set.statements.push_back(s);
  }
  const auto [store, w] = surrogate_ind_prototypes(enc, set);
  EXPECT_TRUE(store.vectors.row(0).isApprox(Eigen::RowVector2d(1, 0), 1e-15));
  EXPECT_DOUBLE_EQ(w.values[0], 1.0);
  EXPECT_DOUBLE_EQ(w.values[1], 1.0);
  const Eigen::Vector2d z1 = Eigen::Vector2d(1, 2).normalized();
  EXPECT_NEAR(w.values[2], z1.dot(Eigen::Vector2d(0, 1)), 1e-15);
  EXPECT_NEAR(w.values[3], z1.dot(Eigen::Vector2d(1, 1).normalized()), 1e-15);

  set.num_labels = 3;
  set.relation_vocab.push_back("c");
  EXPECT_THROW(surrogate_ind_prototypes(enc, set), InvalidArgument);
}
