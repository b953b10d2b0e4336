#include <doctest.h>

#include <cmath>

#include "vsglight/math.h"

using namespace vsg;

TEST_CASE("vec3 arithmetic and products") {
  Vec3 a{1.0, 2.0, 3.0}, b{-2.0, 0.5, 4.0};
  CHECK((a + b).x == -1.0);
  CHECK((a - b).y == 1.5);
  CHECK((a * 2.0).z == 6.0);
  CHECK((2.0 * a).z == 6.0);
  CHECK((a / 2.0).x == 0.5);
  CHECK((-a).y == -2.0);
  CHECK(dot(a, b) == doctest::Approx(-2.0 + 1.0 + 12.0));
  // componentwise product is the RGB modulation path
  Vec3 p = a * b;
  CHECK(p.x == -2.0);
  CHECK(p.y == 1.0);
  CHECK(p.z == 12.0);
  CHECK(a[0] == 1.0);
  CHECK(a[2] == 3.0);

  Vec3 c = cross(Vec3{1, 0, 0}, Vec3{0, 1, 0});
  CHECK(c.x == 0.0);
  CHECK(c.y == 0.0);
  CHECK(c.z == 1.0);
  CHECK(dot(cross(a, b), a) == doctest::Approx(0.0));
  CHECK(dot(cross(a, b), b) == doctest::Approx(0.0));
}

TEST_CASE("length and normalization") {
  CHECK(length(Vec3{3, 4, 0}) == doctest::Approx(5.0));
  CHECK(length_squared(Vec3{3, 4, 0}) == doctest::Approx(25.0));
  Vec3 n = normalized(Vec3{2, -1, 2});
  CHECK(length(n) == doctest::Approx(1.0));
  CHECK_THROWS_AS(normalized(Vec3{0, 0, 0}), NumericError);
  CHECK(max_component(Vec3{1, 5, 3}) == 5.0);
  CHECK(mean_component(Vec3{1, 5, 3}) == doctest::Approx(3.0));
  CHECK(all_finite(Vec3{1, 2, 3}));
  CHECK_FALSE(all_finite(Vec3{1, std::nan(""), 3}));
}

TEST_CASE("mat3 identity, columns, multiply, transpose") {
  Mat3 id;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(id.m[i][j] == (i == j ? 1.0 : 0.0));

  Mat3 r = Mat3::from_columns({1, 4, 7}, {2, 5, 8}, {3, 6, 9});
  CHECK(r.m[0][1] == 2.0);
  CHECK(r.col(2).x == 3.0);
  CHECK(r.row(1).z == 6.0);

  Vec3 v = r * Vec3{1, 0, 0};
  CHECK(v.x == 1.0);
  CHECK(v.y == 4.0);
  CHECK(v.z == 7.0);

  Mat3 rt = r.transposed();
  CHECK(rt.m[1][0] == r.m[0][1]);
  Mat3 prod = id * r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(prod.m[i][j] == r.m[i][j]);
}

TEST_CASE("rotation about axis") {
  Mat3 rz = rotation_about_axis({0, 0, 1}, M_PI / 2.0);
  Vec3 v = rz * Vec3{1, 0, 0};
  CHECK(v.x == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(v.y == doctest::Approx(1.0));
  CHECK(v.z == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(rz.orthonormality_error() < 1e-14);

  // composition of rotations about the same axis adds angles
  Mat3 a = rotation_about_axis({1, 2, -1}, 0.3);
  Mat3 b = rotation_about_axis({1, 2, -1}, 0.9);
  Mat3 ab = a * b;
  Mat3 sum = rotation_about_axis({1, 2, -1}, 1.2);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(ab.m[i][j] == doctest::Approx(sum.m[i][j]).epsilon(1e-12));

  // rotations preserve length
  Vec3 w = a * Vec3{0.3, -2.0, 1.1};
  CHECK(length(w) == doctest::Approx(length(Vec3{0.3, -2.0, 1.1})));

  Mat3 scaled;
  scaled.m[0][0] = 2.0;
  CHECK(scaled.orthonormality_error() > 1.0);
}

TEST_CASE("aabb queries") {
  AABB b{{-1, -2, -3}, {1, 2, 3}};
  CHECK(b.extent().x == 2.0);
  CHECK(b.extent().z == 6.0);
  CHECK(b.center().y == 0.0);
  CHECK(b.contains({0, 0, 0}));
  CHECK(b.contains({1, 2, 3}));  // closed boundary
  CHECK_FALSE(b.contains({1.001, 0, 0}));
}

TEST_CASE("ray box intersection") {
  AABB b{{-1, -1, -1}, {1, 1, 1}};
  double t0, t1;
  int ax0, ax1;

  // axis-aligned hit from outside
  CHECK(intersect_aabb(b, {-3, 0, 0}, {1, 0, 0}, t0, t1, &ax0, &ax1));
  CHECK(t0 == doctest::Approx(2.0));
  CHECK(t1 == doctest::Approx(4.0));
  CHECK(ax0 == 0);
  CHECK(ax1 == 0);

  // origin inside: t0 negative, exit on +y
  CHECK(intersect_aabb(b, {0, 0, 0}, {0, 1, 0}, t0, t1, &ax0, &ax1));
  CHECK(t0 == doctest::Approx(-1.0));
  CHECK(t1 == doctest::Approx(1.0));
  CHECK(ax1 == 1);

  // miss
  CHECK_FALSE(intersect_aabb(b, {-3, 5, 0}, {1, 0, 0}, t0, t1));
  // zero direction component inside the slab still intersects
  CHECK(intersect_aabb(b, {-3, 0.5, 0.5}, {1, 0, 0}, t0, t1));
  // zero direction component outside the slab cannot
  CHECK_FALSE(intersect_aabb(b, {-3, 1.5, 0}, {1, 0, 0}, t0, t1));

  // diagonal ray through opposite corners
  CHECK(intersect_aabb(b, {-2, -2, -2}, normalized({1, 1, 1}), t0, t1));
  CHECK(t0 == doctest::Approx(std::sqrt(3.0)));
  CHECK(t1 == doctest::Approx(3.0 * std::sqrt(3.0)));

  // entry axis follows the dominant offset
  CHECK(intersect_aabb(b, {-4, -2, 0}, normalized({2, 1, 0}), t0, t1, &ax0, &ax1));
  CHECK(ax0 == 0);
}

TEST_CASE("scalar helpers") {
  CHECK(clamp(5.0, 0.0, 1.0) == 1.0);
  CHECK(clamp(-5.0, 0.0, 1.0) == 0.0);
  CHECK(clamp(0.25, 0.0, 1.0) == 0.25);

  CHECK(softplus(0.0) == doctest::Approx(std::log(2.0)));
  CHECK(softplus(40.0) == doctest::Approx(40.0));
  CHECK(softplus(-40.0) == doctest::Approx(std::exp(-40.0)).epsilon(1e-6));
  // strictly increasing
  CHECK(softplus(1.0) > softplus(0.999));

  for (double y : {0.01, 0.5, 1.0, 4.0, 29.9, 30.5, 80.0}) {
    CHECK(softplus(inverse_softplus(y)) == doctest::Approx(y).epsilon(1e-12));
  }
  for (double x : {-20.0, -3.0, 0.0, 2.5, 31.0}) {
    CHECK(inverse_softplus(softplus(x)) == doctest::Approx(x).epsilon(1e-9));
  }
  CHECK_THROWS_AS(inverse_softplus(0.0), NumericError);
  CHECK_THROWS_AS(inverse_softplus(-1.0), NumericError);

  CHECK(sigmoid(0.0) == 0.5);
  CHECK(sigmoid(50.0) == doctest::Approx(1.0));
  CHECK(sigmoid(-50.0) == doctest::Approx(0.0));
  CHECK(sigmoid(3.0) + sigmoid(-3.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(logit(0.5) == doctest::Approx(0.0));
  for (double p : {1e-6, 0.2, 0.5, 0.9, 1.0 - 1e-6}) {
    CHECK(sigmoid(logit(p)) == doctest::Approx(p).epsilon(1e-12));
  }
}
