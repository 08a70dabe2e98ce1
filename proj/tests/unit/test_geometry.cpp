#include <doctest.h>

#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include <Eigen/Geometry>

#include "fnnet/error.hpp"
#include "fnnet/diffcore/ops.hpp"
#include "fnnet/geometry/eight_point.hpp"
#include "fnnet/geometry/epipolar.hpp"
#include "fnnet/geometry/jacobi.hpp"
#include "fnnet/geometry/pose.hpp"
#include "support/gradcheck.hpp"
#include "support/scenes.hpp"

using namespace fnnet;
using namespace fnnet::geometry;
using fnnet::testing::synthetic_view;

namespace {

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

double sign_free_distance(const Mat3& a, const Mat3& b) { return std::min((a - b).norm(), (a + b).norm()); }

Mat9 random_psd(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Mat9 a;
  for (int i = 0; i < 81; ++i) a(i) = n(rng);
  return a * a.transpose();
}

}  // namespace

TEST_SUITE("skew and essential") {
  TEST_CASE("skew examples") {
    Mat3 expected;
    expected << 0, -1, 0, 1, 0, 0, 0, 0, 0;
    CHECK(skew(Vec3(0, 0, 1)) == expected);
    const Vec3 v(0.3, -1.2, 2.5), w(1.0, 4.0, -0.5);
    CHECK(max_abs(skew(v).transpose() + skew(v)) == 0.0);
    CHECK(max_abs(skew(v) * v) <= 1e-15);
    CHECK(max_abs(skew(v) * w - v.cross(w)) <= 1e-15);
  }

  TEST_CASE("essential from the identity pose with forward motion") {
    const EssentialMatrix e = essential_from_pose(Pose{Mat3::Identity(), Vec3(0, 0, 1)});
    Mat3 expected;
    expected << 0, -1, 0, 1, 0, 0, 0, 0, 0;
    expected /= std::sqrt(2.0);
    CHECK(max_abs(e.matrix() - expected) <= 1e-15);
  }

  TEST_CASE("epipolar constraint holds for generated points") {
    const auto view = synthetic_view(3, 50);
    const EssentialMatrix e = essential_from_pose(view.pose);
    for (std::size_t i = 0; i < view.corrs.size(); ++i)
      CHECK(std::abs(view.corrs.x2(i).dot(e.matrix() * view.corrs.x1(i))) <= 1e-12);
  }

  TEST_CASE("translation scale does not change E") {
    const auto view = synthetic_view(4, 8);
    Pose scaled = view.pose;
    scaled.t *= 5.0;
    CHECK(max_abs(essential_from_pose(scaled).matrix() - essential_from_pose(view.pose).matrix()) <= 1e-15);
  }

  TEST_CASE("zero translation is degenerate") {
    CHECK_THROWS_AS(essential_from_pose(Pose{Mat3::Identity(), Vec3::Zero()}), DegenerateError);
  }

  TEST_CASE("essential matrix is unit norm and rejects zero") {
    Mat3 m = Mat3::Random();
    CHECK(std::abs(EssentialMatrix(m).matrix().norm() - 1.0) <= 1e-12);
    CHECK_THROWS_AS(EssentialMatrix(Mat3::Zero()), DegenerateError);
  }
}

TEST_SUITE("normalization") {
  TEST_CASE("principal point maps to the origin") {
    CameraIntrinsics k{500, 400, 300, 200};
    const std::vector<Correspondence> px{{300, 200, 300, 200}};
    const auto n = normalize_points(px, k, k);
    for (double v : n.points[0]) CHECK(v == 0.0);
  }

  TEST_CASE("unit intrinsics are the identity and the map inverts") {
    CameraIntrinsics unit{1, 1, 0, 0}, k1{600, 610, 320, 300}, k2{590, 600, 330, 310};
    const std::vector<Correspondence> px{{12.5, -3.0, 400.25, 7.0}, {640, 0, 1, 639}};
    CHECK(normalize_points(px, unit, unit).points == px);
    const auto back = denormalize_points(normalize_points(px, k1, k2), k1, k2);
    for (std::size_t i = 0; i < px.size(); ++i)
      for (int j = 0; j < 4; ++j) CHECK(std::abs(back[i][j] - px[i][j]) <= 1e-12);
  }

  TEST_CASE("invalid intrinsics are rejected") {
    CameraIntrinsics bad{0, 600, 320, 320};
    const std::vector<Correspondence> px{{0, 0, 0, 0}};
    CHECK_THROWS_AS(normalize_points(px, bad, bad), ContractError);
  }
}

TEST_SUITE("symmetric epipolar distance") {
  TEST_CASE("exact matches have zero distance and E sign is irrelevant") {
    const auto view = synthetic_view(5, 20);
    const EssentialMatrix e = essential_from_pose(view.pose);
    const EssentialMatrix neg(-e.matrix());
    for (std::size_t i = 0; i < view.corrs.size(); ++i) {
      const auto& p = view.corrs.points[i];
      const Vec2 a(p[0], p[1]), b(p[2], p[3]);
      CHECK(symmetric_epipolar_distance(a, b, e) <= 1e-16);
      const Vec2 b2(p[2] + 0.01, p[3] - 0.02);
      CHECK(symmetric_epipolar_distance(a, b2, e) == doctest::Approx(symmetric_epipolar_distance(a, b2, neg)));
    }
  }

  TEST_CASE("distance grows with drift along the line normal") {
    const auto view = synthetic_view(6, 1);
    const EssentialMatrix e = essential_from_pose(view.pose);
    const auto& p = view.corrs.points[0];
    const Vec3 line = e.matrix() * view.corrs.x1(0);
    const Vec2 normal = Vec2(line.x(), line.y()).normalized();
    double prev = -1.0;
    for (int k = 1; k <= 20; ++k) {
      const Vec2 x2 = Vec2(p[2], p[3]) + 1e-4 * k * normal;
      const double d = symmetric_epipolar_distance(Vec2(p[0], p[1]), x2, e);
      CHECK(d > prev);
      prev = d;
    }
  }

  TEST_CASE("vanishing epipolar line is flagged") {
    // E = skew(z): E·(0,0,1) = 0, so a point at the epipole has no line.
    const EssentialMatrix e(skew(Vec3(0, 0, 1)));
    CHECK(symmetric_epipolar_distance(Vec2(0, 0), Vec2(0.5, 0.1), e) == kDegenerateDistance);
  }

  TEST_CASE("classification by threshold") {
    const auto view = synthetic_view(7, 100);
    const EssentialMatrix e = essential_from_pose(view.pose);
    const auto in = classify_by_epipolar(view.corrs, e);
    CHECK(std::accumulate(in.begin(), in.end(), 0) == 100);

    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    CorrespondenceSet random;
    for (int i = 0; i < 1000; ++i) random.points.push_back({u(rng), u(rng), u(rng), u(rng)});
    const auto r = classify_by_epipolar(random, e);
    CHECK(std::accumulate(r.begin(), r.end(), 0) < 50);
    const auto all = classify_by_epipolar(random, e, std::numeric_limits<double>::max());
    CHECK(std::accumulate(all.begin(), all.end(), 0) == 1000);
    CHECK_THROWS_AS(classify_by_epipolar(random, e, 0.0), ContractError);
  }
}

TEST_SUITE("jacobi") {
  TEST_CASE("reconstruction and orthogonality") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 20; ++trial) {
      const Mat9 g = random_psd(rng);
      const SymmetricEigen eig = jacobi_eigen(g);
      const Eigen::MatrixXd rec = eig.vectors * eig.values.asDiagonal() * eig.vectors.transpose();
      CHECK((rec - g).norm() <= 1e-10 * g.norm());
      CHECK((eig.vectors.transpose() * eig.vectors - Eigen::MatrixXd::Identity(9, 9)).norm() <= 1e-10);
      for (int k = 1; k < 9; ++k) CHECK(eig.values[k - 1] <= eig.values[k]);
    }
  }

  TEST_CASE("diagonal input is already solved") {
    Eigen::MatrixXd d = Eigen::VectorXd::LinSpaced(9, 9, 1).asDiagonal();
    const SymmetricEigen eig = jacobi_eigen(d);
    for (int k = 0; k < 9; ++k) CHECK(eig.values[k] == doctest::Approx(k + 1.0));
  }
}

TEST_SUITE("weighted eight-point") {
  TEST_CASE("noiseless inliers recover E") {
    const auto view = synthetic_view(9, 20);
    const auto res = eight_point(view.corrs);
    for (std::size_t i = 0; i < view.corrs.size(); ++i)
      CHECK(std::abs(view.corrs.x2(i).dot(res.essential.matrix() * view.corrs.x1(i))) <= 1e-10);
    CHECK(sign_free_distance(res.essential.matrix(), essential_from_pose(view.pose).matrix()) <= 1e-8);
  }

  TEST_CASE("weight rescaling leaves the estimate unchanged") {
    const auto view = synthetic_view(10, 40);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.1, 1.0);
    std::vector<double> w(40), w2(40);
    for (std::size_t i = 0; i < 40; ++i) w[i] = u(rng);
    for (double c : {1e-3, 0.5, 7.0, 1e3}) {
      for (std::size_t i = 0; i < 40; ++i) w2[i] = c * w[i];
      CHECK((weighted_eight_point(view.corrs, w).e - weighted_eight_point(view.corrs, w2).e).cwiseAbs().maxCoeff() <=
            1e-12);
    }
  }

  TEST_CASE("zero-weighted outliers drop out") {
    const auto view = synthetic_view(11, 12);
    CorrespondenceSet mixed = view.corrs;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    for (int i = 0; i < 100; ++i) mixed.points.push_back({u(rng), u(rng), u(rng), u(rng)});
    std::vector<double> w(112, 0.0);
    std::fill(w.begin(), w.begin() + 12, 1.0);
    const Vec9 a = weighted_eight_point(mixed, w).e;
    const Vec9 b = eight_point(view.corrs).e;
    CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-12);
  }

  TEST_CASE("permuting correspondences leaves the estimate unchanged") {
    const auto view = synthetic_view(12, 30);
    CorrespondenceSet perm = view.corrs;
    std::mt19937_64 rng(4);
    std::shuffle(perm.points.begin(), perm.points.end(), rng);
    CHECK((eight_point(view.corrs).e - eight_point(perm).e).cwiseAbs().maxCoeff() <= 1e-12);
  }

  TEST_CASE("result minimizes the weighted quadratic form") {
    const auto view = synthetic_view(13, 30);
    CorrespondenceSet noisy = view.corrs;
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n(0.0, 1e-3);
    for (auto& p : noisy.points)
      for (double& v : p) v += n(rng);
    std::vector<double> w(30, 1.0);
    const auto res = weighted_eight_point(noisy, w);
    const Mat9 g = weighted_gram(noisy, w);
    const double q = res.e.dot(g * res.e);
    CHECK(std::abs(q - res.eigen.values[0]) <= 1e-10);
    for (int t = 0; t < 100; ++t) {
      Vec9 r;
      for (int i = 0; i < 9; ++i) r[i] = n(rng);
      r.normalize();
      CHECK(q <= r.dot(g * r) + 1e-15);
    }
  }

  TEST_CASE("sign convention makes the first significant entry positive") {
    Vec9 v;
    v << 1e-9, -0.5, 0.3, 0, 0, 0, 0, 0, 0.1;
    apply_sign_convention(v);
    CHECK(v[1] > 0.0);
    CHECK(v[0] < 0.0);
  }

  TEST_CASE("insufficient support and invalid weights") {
    const auto view = synthetic_view(14, 20);
    std::vector<double> w(20, 0.0);
    std::fill(w.begin(), w.begin() + 7, 1.0);
    CHECK_THROWS_AS(weighted_eight_point(view.corrs, w), DegenerateError);
    w[10] = -1.0;
    CHECK_THROWS_AS(weighted_eight_point(view.corrs, w), ContractError);
    std::vector<double> short_w(5, 1.0);
    CHECK_THROWS_AS(weighted_eight_point(view.corrs, short_w), DimensionError);
  }

  TEST_CASE("degenerate eigengap is surfaced") {
    // Eight copies of one correspondence leave a rank-1 Gram matrix.
    CorrespondenceSet same;
    for (int i = 0; i < 8; ++i) same.points.push_back({0.1, 0.2, 0.3, 0.4});
    CHECK_THROWS_AS(eight_point(same), DegenerateError);
  }
}

TEST_SUITE("eigen backward") {
  TEST_CASE("gradient of the smallest eigenvalue is v vᵀ") {
    std::mt19937_64 rng(15);
    const Mat9 g = random_psd(rng);
    const SymmetricEigen eig = jacobi_eigen(g);
    const Mat9 grad = eig_backward(eig, Vec9::Zero(), 1.0);
    const Vec9 v = eig.vectors.col(0);
    CHECK((grad - v * v.transpose()).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK(eig_backward(eig, Vec9::Zero(), 0.0).cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("eigenvector gradient on diag(1..9) matches finite differences") {
    Mat9 g = Mat9::Zero();
    for (int i = 0; i < 9; ++i) g(i, i) = i + 1.0;
    std::mt19937_64 rng(16);
    std::normal_distribution<double> n;
    Vec9 c;
    for (int i = 0; i < 9; ++i) c[i] = n(rng);
    // L(G) = cᵀ v(G), with v sign-fixed to agree with the unperturbed vector.
    const SymmetricEigen eig = jacobi_eigen(g);
    const Vec9 v0 = eig.vectors.col(0);
    auto loss = [&](const Mat9& m) {
      const SymmetricEigen e = jacobi_eigen(m);
      Vec9 v = e.vectors.col(0);
      if (v.dot(v0) < 0) v = -v;
      return c.dot(v);
    };
    const Mat9 analytic = eig_backward(eig, c);
    const double h = 1e-6;
    for (int i = 0; i < 9; ++i)
      for (int j = i; j < 9; ++j) {
        Mat9 p = g, m = g;
        // Symmetric perturbation of entries (i,j) and (j,i).
        p(i, j) += h;
        m(i, j) -= h;
        if (i != j) {
          p(j, i) += h;
          m(j, i) -= h;
        }
        const double fd = (loss(p) - loss(m)) / (2 * h);
        const double an = i == j ? analytic(i, i) : analytic(i, j) + analytic(j, i);
        CHECK(std::abs(fd - an) <= 1e-5);
      }
  }

  TEST_CASE("weights to eigenvector chain matches finite differences") {
    const auto view = synthetic_view(17, 24);
    CorrespondenceSet noisy = view.corrs;
    std::mt19937_64 rng(18);
    std::normal_distribution<double> n(0.0, 5e-3);
    for (auto& p : noisy.points)
      for (double& v : p) v += n(rng);
    diff::Parameter w = testing::random_param("w", {24}, rng, 0.3, 1.0);
    Vec9 c;
    for (int i = 0; i < 9; ++i) c[i] = n(rng) * 100.0;
    const diff::Tensor ct(diff::Shape{9}, std::vector<double>(c.data(), c.data() + 9));
    auto res = testing::check_gradients({&w}, [&](diff::Graph& g, const std::vector<diff::Var>& in) {
      return diff::sum_all(diff::mul(weighted_eight_point(in[0], noisy), g.constant(ct)));
    });
    CAPTURE(res.worst);
    CHECK(res.max_rel_error <= 1e-4);
  }
}

TEST_SUITE("pose recovery") {
  TEST_CASE("decomposition recovers the generating pose") {
    for (std::uint64_t seed = 20; seed < 40; ++seed) {
      const auto view = synthetic_view(seed, 30);
      const EssentialMatrix e = essential_from_pose(view.pose);
      const Pose p = decompose_essential(e, view.corrs);
      const Pose q = decompose_essential(EssentialMatrix(-e.matrix()), view.corrs);
      const auto err = pose_angular_errors(view.pose, p);
      CHECK(err.rotation_deg * std::numbers::pi / 180.0 <= 1e-6);
      CHECK(err.translation_deg * std::numbers::pi / 180.0 <= 1e-6);
      CHECK(std::abs(p.t.norm() - 1.0) <= 1e-12);
      CHECK(p.t.dot(view.pose.t) > 0.0);
      CHECK((p.R - q.R).cwiseAbs().maxCoeff() <= 1e-9);
      CHECK((p.t - q.t).cwiseAbs().maxCoeff() <= 1e-9);
    }
  }

  TEST_CASE("there are exactly four proper candidates") {
    const auto view = synthetic_view(41, 10);
    const auto cands = essential_candidates(essential_from_pose(view.pose));
    CHECK(cands.size() == 4);
    for (const auto& c : cands) {
      CHECK(std::abs(c.R.determinant() - 1.0) <= 1e-9);
      CHECK((c.R.transpose() * c.R - Mat3::Identity()).norm() <= 1e-9);
    }
  }

  TEST_CASE("round trip through the eight-point solver") {
    for (std::uint64_t seed = 50; seed < 60; ++seed) {
      const auto view = synthetic_view(seed, 16);
      const Pose p = decompose_essential(eight_point(view.corrs).essential, view.corrs);
      CHECK(pose_angular_errors(view.pose, p).max() < 1e-4);
    }
  }

  TEST_CASE("no point passes cheirality") {
    const auto view = synthetic_view(61, 10);
    std::vector<std::uint8_t> none(10, 0);
    CHECK_THROWS_AS(decompose_essential(essential_from_pose(view.pose), view.corrs, &none), DegenerateError);
  }

  TEST_CASE("angular error examples") {
    const Pose gt{Mat3::Identity(), Vec3(0.2, -0.1, 1.0)};
    const auto same = pose_angular_errors(gt, gt);
    CHECK(same.rotation_deg == doctest::Approx(0.0));
    CHECK(same.translation_deg == doctest::Approx(0.0));
    const Pose rot{rotation_from_axis_angle(Vec3::UnitZ(), 10.0 * std::numbers::pi / 180.0), gt.t};
    CHECK(std::abs(pose_angular_errors(gt, rot).rotation_deg - 10.0) <= 1e-9);
    const Pose flipped{gt.R, -gt.t};
    CHECK(pose_angular_errors(gt, flipped).translation_deg == doctest::Approx(0.0));
  }
}
