#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include "protorel/pca.hpp"
#include "protorel/svg.hpp"
#include "support.hpp"

using namespace protorel;
using protorel::testing::count_substr;

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index n, Eigen::Index m, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  Eigen::MatrixXd x(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) x(i, j) = uniform_real(rng, -1, 1);
  }
  return x;
}

}  // namespace

TEST(Pca, AxisAlignedInputIsCentredInputUpToSign) {
  // Diagonal covariance: the principal axes are the coordinate axes.
  Eigen::MatrixXd x(4, 2);
  x << 14, -3, 6, -3, 10, -2, 10, -4;
  const auto r = project_pca(x);
  const Eigen::MatrixXd centred = x.rowwise() - x.colwise().mean();
  for (Eigen::Index a = 0; a < 2; ++a) {
    const double sign = r.projection.col(a).dot(centred.col(a)) >= 0 ? 1.0 : -1.0;
    EXPECT_LT((r.projection.col(a) - sign * centred.col(a)).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Pca, IdenticalPointsRejected) {
  EXPECT_THROW(project_pca(Eigen::MatrixXd::Constant(4, 3, 2.5)), InvalidArgument);
  EXPECT_THROW(project_pca(Eigen::MatrixXd::Ones(2, 3)), InvalidArgument);
  EXPECT_THROW(project_pca(Eigen::MatrixXd::Ones(5, 1)), InvalidArgument);
}

TEST(Pca, PlaneInThreeDimensionsReconstructs) {
  const Eigen::Vector3d u = Eigen::Vector3d(1, 2, -1).normalized();
  const Eigen::Vector3d v = u.cross(Eigen::Vector3d(0, 0, 1)).normalized();
  const Eigen::Vector3d offset(3, -1, 2);
  const auto coef = random_matrix(40, 2, 6);
  Eigen::MatrixXd x(40, 3);
  for (Eigen::Index i = 0; i < 40; ++i) x.row(i) = (offset + 3 * coef(i, 0) * u + coef(i, 1) * v).transpose();
  const auto r = project_pca(x);
  const Eigen::MatrixXd recon = (r.projection * r.axes).rowwise() + r.mean.transpose();
  EXPECT_LT((recon - x).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Pca, MatchesFullEigendecomposition) {
  Eigen::MatrixXd x = random_matrix(60, 5, 9);
  x.col(0) *= 4;
  x.col(3) *= 2;
  const auto r = project_pca(x);
  const Eigen::MatrixXd c = (x.rowwise() - x.colwise().mean()).transpose() * (x.rowwise() - x.colwise().mean()) / 60.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c);
  const auto& vals = es.eigenvalues();  // ascending
  EXPECT_NEAR(r.variances(0), vals(4), 1e-9);
  EXPECT_NEAR(r.variances(1), vals(3), 1e-9);
  EXPECT_NEAR(std::abs(r.axes.row(0).dot(es.eigenvectors().col(4))), 1.0, 1e-8);
  EXPECT_NEAR(std::abs(r.axes.row(1).dot(es.eigenvectors().col(3))), 1.0, 1e-8);
}

TEST(Pca, OrthonormalAxesAndVarianceOrder) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto r = project_pca(random_matrix(30, 8, seed));
    EXPECT_LT(std::abs(r.axes.row(0).dot(r.axes.row(1))), 1e-8);
    EXPECT_NEAR(r.axes.row(0).norm(), 1.0, 1e-12);
    EXPECT_NEAR(r.axes.row(1).norm(), 1.0, 1e-12);
    EXPECT_GE(r.variances(0), r.variances(1));
    EXPECT_GE(r.projection.col(0).squaredNorm(), r.projection.col(1).squaredNorm());
  }
}

TEST(Pca, RankOneDataStillGivesTwoAxes) {
  Eigen::MatrixXd x(4, 3);
  x << 1, 2, 3, 2, 4, 6, 3, 6, 9, -1, -2, -3;
  const auto r = project_pca(x);
  EXPECT_LT(std::abs(r.axes.row(0).dot(r.axes.row(1))), 1e-8);
  EXPECT_NEAR(r.variances(1), 0.0, 1e-12);
  EXPECT_TRUE(r.transform(x).isApprox(r.projection, 1e-12));
}

TEST(Pca, Deterministic) {
  const auto x = random_matrix(20, 6, 3);
  EXPECT_EQ(project_pca(x).projection, project_pca(x).projection);
}

TEST(Svg, CountsCirclesAndStars) {
  const std::vector<Eigen::Vector2d> points{{0, 0}, {1, 1}};
  const std::vector<std::size_t> labels{0, 1};
  const std::string svg = render_svg_scatter(points, labels, {{0.5, 0.5}});
  EXPECT_EQ(count_substr(svg, "<circle"), 2u);
  EXPECT_EQ(count_substr(svg, "<path"), 1u);
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);

  const std::string none = render_svg_scatter(points, labels, {});
  EXPECT_EQ(count_substr(none, "<path"), 0u);
  EXPECT_EQ(count_substr(none, "<circle"), 2u);
  EXPECT_NE(none.find("</svg>"), std::string::npos);
}

TEST(Svg, LegendAndBoundaries) {
  ScatterStyle style;
  style.title = "a < b & c";
  style.class_names = {"born_in", "capital_of"};
  style.boundaries = {{{1, -1}, 0, "#000000", true, "fit"}};
  const std::vector<Eigen::Vector2d> points{{0, 0}, {1, 1}, {0, 1}};
  const std::vector<std::size_t> labels{0, 1, 1};
  const std::string svg = render_svg_scatter(points, labels, {}, style);
  EXPECT_NE(svg.find("capital_of"), std::string::npos);
  EXPECT_NE(svg.find("a &lt; b &amp; c"), std::string::npos);
  EXPECT_EQ(count_substr(svg, "<line"), 1u);
  EXPECT_EQ(count_substr(svg, "stroke-dasharray"), 1u);
}

TEST(Svg, ByteIdenticalFilesAndErrors) {
  protorel::testing::TempDir dir("svg");
  const std::vector<Eigen::Vector2d> points{{0.1, 2}, {3, -1}, {2, 2}};
  const std::vector<std::size_t> labels{0, 1, 2};
  emit_svg_scatter(points, labels, {{1, 1}}, dir.file("a.svg"));
  emit_svg_scatter(points, labels, {{1, 1}}, dir.file("b.svg"));
  EXPECT_EQ(protorel::testing::slurp(dir.file("a.svg")), protorel::testing::slurp(dir.file("b.svg")));
  EXPECT_THROW(emit_svg_scatter(points, labels, {}, dir.file("missing/x.svg")), std::runtime_error);
  EXPECT_THROW(render_svg_scatter({}, std::vector<std::size_t>{}, {}), InvalidArgument);
  EXPECT_THROW(render_svg_scatter(points, std::vector<std::size_t>{0}, {}), InvalidArgument);
}
