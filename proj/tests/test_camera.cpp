#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace nyqsurf;

namespace {

Camera simple(double f, double c, int w = 100, int h = 100) {
  Camera cam;
  cam.fx = cam.fy = f;
  cam.cx = cam.cy = c;
  cam.width = w;
  cam.height = h;
  return cam;
}

}  // namespace

TEST(Camera, ProjectIdentity) {
  const PixelDepth pd = project({0, 0, 1}, simple(1, 0));
  EXPECT_DOUBLE_EQ(pd.x, 0.0);
  EXPECT_DOUBLE_EQ(pd.y, 0.0);
  EXPECT_DOUBLE_EQ(pd.depth, 1.0);
}

TEST(Camera, ProjectSubstitution) {
  const PixelDepth pd = project({1, 0, 2}, simple(100, 50));
  EXPECT_DOUBLE_EQ(pd.x, 100.0);
  EXPECT_DOUBLE_EQ(pd.y, 50.0);
  EXPECT_DOUBLE_EQ(pd.depth, 2.0);
}

TEST(Camera, UnprojectPrincipalRay) {
  std::mt19937_64 rng(3);
  const Camera cam = oracle::random_camera(rng);
  const Vec3 p = unproject({cam.cx, cam.cy, 2.5}, cam);
  EXPECT_LT((p - (cam.center() + 2.5 * cam.optical_axis())).norm(), 1e-12);
  EXPECT_LT((unproject({0, 0, 1}, simple(1, 0)) - Vec3(0, 0, 1)).norm(), 1e-15);
}

TEST(Camera, UnprojectRejectsNonPositiveDepth) {
  EXPECT_THROW(unproject({0, 0, 0.0}, simple(1, 0)), std::invalid_argument);
  EXPECT_THROW(unproject({0, 0, -1.0}, simple(1, 0)), std::invalid_argument);
}

TEST(Camera, RoundTripFuzz) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 2000; ++i) {
    const Camera cam = oracle::random_camera(rng);
    const PixelDepth in{u(rng) * cam.width, u(rng) * cam.height, 0.1 + 20.0 * u(rng)};
    const PixelDepth out = project(unproject(in, cam), cam);
    ASSERT_NEAR(out.x, in.x, 1e-9);
    ASSERT_NEAR(out.y, in.y, 1e-9);
    ASSERT_NEAR(out.depth, in.depth, 1e-9);
  }
}

TEST(Camera, Visibility) {
  Camera cam = simple(100, 50);
  EXPECT_FALSE(visible({0, 0, -1}, cam));
  EXPECT_TRUE(visible({0, 0, 2 * cam.near}, cam));
  // x = fx * X / Z + cx = width exactly
  EXPECT_FALSE(visible({0.5, 0, 1}, cam));
  EXPECT_TRUE(visible({0.49, 0, 1}, cam));
  EXPECT_TRUE(visible({-0.5, -0.5, 1}, cam));
  EXPECT_FALSE(visible({-0.51, 0, 1}, cam));
}

// Points unprojected from the first row and column land a rounding error
// outside [0, w) and must still count as visible.
TEST(Camera, UnprojectedBorderPixelsAreVisible) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i) {
    const Camera cam = oracle::random_camera(rng);
    for (int r : {0, cam.height - 1})
      for (int c : {0, cam.width - 1}) ASSERT_TRUE(visible(unproject({double(c), double(r), 3.7}, cam), cam));
  }
}

TEST(Camera, VisibilityMonotoneInImageSize) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int i = 0; i < 500; ++i) {
    Camera cam = oracle::random_camera(rng, 32, 24);
    const Vec3 p(u(rng), u(rng), u(rng) + 2.0);
    const bool before = visible(p, cam);
    cam.width += 10;
    cam.height += 7;
    if (before) {
      ASSERT_TRUE(visible(p, cam));
    }
  }
}

TEST(Camera, SamplingRate) {
  EXPECT_DOUBLE_EQ(sampling_rate(simple(1, 0), 1.0), 1.0);
  EXPECT_DOUBLE_EQ(sampling_rate(simple(100, 0), 10.0), 100.0);
  EXPECT_THROW(sampling_rate(simple(1, 0), 0.0), std::invalid_argument);
  EXPECT_DOUBLE_EQ(sampling_rate(simple(100, 0), 10.0, RateMode::PerAxis), 10.0);
  double prev = std::numeric_limits<double>::infinity();
  for (double d = 0.1; d < 50.0; d *= 1.3) {
    const double r = sampling_rate(simple(70, 0), d);
    EXPECT_LT(r, prev);
    EXPECT_EQ(r, 70.0 * 70.0 / (d * d));
    prev = r;
  }
}

TEST(Camera, NumericAreaOracleExamples) {
  const Camera cam = simple(100, 50);
  EXPECT_NEAR(numeric_area_oracle(cam, {0, 0, 10}, 1e-3) / 100.0, 1.0, 1e-3);
  EXPECT_NEAR(numeric_area_oracle(cam, {0, 0, 20}, 1e-3) / 25.0, 1.0, 1e-3);
  EXPECT_NEAR(numeric_area_oracle(simple(1, 0.5, 1, 1), {0, 0, 1}, 1e-3), 1.0, 1e-3);
  EXPECT_THROW(numeric_area_oracle(cam, {0, 0, -1}, 1e-3), std::invalid_argument);
}

TEST(Camera, NumericAreaOracleMatchesRateUnderRandomPose) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.1, 0.9), d(0.5, 30.0);
  for (int i = 0; i < 200; ++i) {
    const Camera cam = oracle::random_camera(rng);
    const double depth = d(rng);
    const Vec3 p = unproject({u(rng) * cam.width, u(rng) * cam.height, depth}, cam);
    const double ratio = numeric_area_oracle(cam, p, 1e-3 * depth) / sampling_rate(cam, depth);
    ASSERT_NEAR(ratio, 1.0, 1e-3);
  }
}

TEST(Camera, ValidateRejectsBadCameras) {
  Camera cam = simple(10, 5);
  EXPECT_NO_THROW(validate(cam));
  Camera bad = cam;
  bad.fx = 0.0;
  EXPECT_THROW(validate(bad), std::invalid_argument);
  bad = cam;
  bad.width = 0;
  EXPECT_THROW(validate(bad), std::invalid_argument);
  bad = cam;
  bad.near = 0.0;
  EXPECT_THROW(validate(bad), std::invalid_argument);
  bad = cam;
  bad.rotation(0, 0) = 1.0 + 1e-6;
  EXPECT_THROW(validate(bad), std::invalid_argument);
  bad = cam;
  bad.rotation = -Mat3::Identity();
  EXPECT_THROW(validate(bad), std::invalid_argument);
}

TEST(Camera, LookAtPointsOpticalAxisAtTarget) {
  const Camera cam = look_at({1, 2, 3}, {0, 0, 0}, {0, 1, 0}, 50, 50, 20, 20, 40, 40);
  EXPECT_NO_THROW(validate(cam));
  const PixelDepth pd = project({0, 0, 0}, cam);
  EXPECT_NEAR(pd.x, 20.0, 1e-12);
  EXPECT_NEAR(pd.y, 20.0, 1e-12);
  EXPECT_NEAR(pd.depth, std::sqrt(14.0), 1e-12);
}
