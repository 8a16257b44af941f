#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>

using namespace nyqsurf;

namespace {

Camera pinhole(int w = 48, int h = 40, double f = 60.0) {
  Camera cam;
  cam.fx = cam.fy = f;
  cam.cx = 0.5 * (w - 1);
  cam.cy = 0.5 * (h - 1);
  cam.width = w;
  cam.height = h;
  return cam;
}

Surfel fronto(const Vec3& p, double s, double opacity = 1.0, const Rgb& color = Rgb(0.8, 0.4, 0.2)) {
  return make_surfel(p, Vec3::UnitX(), Vec3::UnitY(), s, s, opacity, color);
}

SurfelField random_field(std::mt19937_64& rng, const Camera& cam, int n) {
  SurfelField field;
  for (int i = 0; i < n; ++i) field.surfels.push_back(oracle::random_surfel(rng, cam));
  return field;
}

}  // namespace

TEST(RaySplat, PrincipalPointHitsCenter) {
  const Camera cam = pinhole();
  const auto hit = ray_splat_intersect(cam, {cam.cx, cam.cy}, fronto({0, 0, 1}, 0.1));
  ASSERT_TRUE(hit);
  EXPECT_NEAR(hit->u, 0.0, 1e-15);
  EXPECT_NEAR(hit->v, 0.0, 1e-15);
  EXPECT_NEAR(hit->depth, 1.0, 1e-15);
}

TEST(RaySplat, PlaneThroughCameraCenterIsAbsent) {
  const Camera cam = pinhole();
  const Surfel edge_on = make_surfel({0, 0, 2}, Vec3::UnitZ(), Vec3::UnitY(), 0.1, 0.1, 1, Rgb::Zero());
  EXPECT_FALSE(ray_splat_intersect(cam, {cam.cx, cam.cy}, edge_on));
  EXPECT_FALSE(ray_splat_intersect(cam, {3.0, 7.0}, edge_on));
  EXPECT_FALSE(ray_splat_intersect(cam, {cam.cx, cam.cy}, fronto({0, 0, -1}, 0.1)));
}

TEST(RaySplat, GaussianMatchesWorldSpaceEvaluation) {
  std::mt19937_64 rng(51);
  std::uniform_real_distribution<double> ux(0.0, 64.0), uy(0.0, 48.0);
  for (int i = 0; i < 500; ++i) {
    const Camera cam = oracle::random_camera(rng);
    const Surfel sf = oracle::random_surfel(rng, cam);
    const double x = ux(rng), y = uy(rng);
    const auto hit = ray_splat_intersect(cam, {x, y}, sf);
    const oracle::BruteHit ref = oracle::brute_pixel(sf, cam, x, y);
    ASSERT_EQ(bool(hit), ref.hit);
    if (!hit) continue;
    ASSERT_NEAR(gaussian_weight(hit->u, hit->v), ref.g, 1e-9);
    ASSERT_NEAR(hit->depth, ref.depth, 1e-9 * ref.depth);
  }
}

TEST(Render, EmptyFieldShowsBackground) {
  const Camera cam = pinhole(8, 6);
  const Rgb bg(0.1, 0.2, 0.3);
  const RenderBuffers b = render(SurfelField{}, cam, bg);
  for (std::size_t p = 0; p < b.color.size(); ++p) {
    EXPECT_EQ(b.color[p], bg);
    EXPECT_EQ(b.alpha[p], 0.0);
    EXPECT_EQ(b.depth[p], 0.0);
    EXPECT_EQ(b.normal[p], Vec3::Zero());
  }
}

TEST(Render, SingleOpaqueSurfelCenter) {
  const Camera cam = pinhole(49, 41);
  SurfelField field;
  field.surfels.push_back(fronto({0, 0, 2}, 0.05));
  const RenderBuffers b = render(field, cam);
  const int r = 20, c = 24;
  EXPECT_NEAR(b.depth.at(r, c), 2.0, 1e-6);
  EXPECT_NEAR(b.alpha.at(r, c), 1.0, 1e-6);
  EXPECT_LT((b.normal.at(r, c) - Vec3(0, 0, -1)).norm(), 1e-6);
  EXPECT_LT((b.color.at(r, c) - field.surfels[0].color).norm(), 1e-6);
}

TEST(Render, FrontSurfelFullyOccludes) {
  const Camera cam = pinhole(49, 41);
  SurfelField field;
  field.surfels.push_back(fronto({0, 0, 2}, 0.05, 1.0, Rgb(0, 0, 1)));
  field.surfels.push_back(fronto({0, 0, 1}, 0.05, 1.0, Rgb(1, 0, 0)));
  RenderOptions opt;
  opt.keep_contributions = true;
  const RenderResult res = render_detailed(field, cam, opt);
  const auto& contrib = res.contributions[20 * 49 + 24];
  ASSERT_EQ(contrib.size(), 2u);
  EXPECT_EQ(contrib[0].surfel, 1u);
  EXPECT_EQ(contrib[1].weight, 0.0);
  EXPECT_EQ(res.buffers.color.at(20, 24), Rgb(1, 0, 0));
  EXPECT_EQ(res.buffers.depth.at(20, 24), 1.0);
}

TEST(Render, BufferInvariants) {
  std::mt19937_64 rng(53);
  const Camera cam = oracle::random_camera(rng, 40, 32);
  const SurfelField field = random_field(rng, cam, 60);
  const Rgb bg(0.3, 0.6, 0.9);
  const RenderBuffers b = render(field, cam, bg);
  for (std::size_t p = 0; p < b.alpha.size(); ++p) {
    ASSERT_GE(b.alpha[p], 0.0);
    ASSERT_LE(b.alpha[p], 1.0);
    if (b.alpha[p] == 0.0) {
      ASSERT_EQ(b.color[p], bg);
      ASSERT_EQ(b.depth[p], 0.0);
      ASSERT_EQ(b.normal[p], Vec3::Zero());
    }
    if (b.normal[p] != Vec3::Zero()) {
      ASSERT_NEAR(b.normal[p].norm(), 1.0, 1e-12);
      // camera-facing: normal points back toward the eye
      const Vec3 ray = cam.rotation.transpose() * pixel_ray_camera(cam, double(p % 40), double(p / 40));
      ASSERT_LE(b.normal[p].dot(ray), 1e-12);
    }
  }
}

TEST(Render, OrderInvariancePixelExact) {
  std::mt19937_64 rng(55);
  for (int trial = 0; trial < 3; ++trial) {
    const Camera cam = oracle::random_camera(rng, 40, 32);
    SurfelField field = random_field(rng, cam, 100);
    field.surfels.push_back(field.surfels[5]);  // exact duplicate: identical depth tie
    const RenderBuffers a = render(field, cam);
    std::shuffle(field.surfels.begin(), field.surfels.end(), rng);
    const RenderBuffers b = render(field, cam);
    EXPECT_TRUE(a.color == b.color);
    EXPECT_TRUE(a.depth == b.depth);
    EXPECT_TRUE(a.normal == b.normal);
    EXPECT_TRUE(a.alpha == b.alpha);
  }
}

TEST(Render, AlphaNonDecreasingAsSurfelsAreAdded) {
  std::mt19937_64 rng(57);
  const Camera cam = oracle::random_camera(rng, 32, 24);
  SurfelField field;
  ScalarImage prev(32, 24, 0.0);
  for (int i = 0; i < 30; ++i) {
    field.surfels.push_back(oracle::random_surfel(rng, cam));
    const RenderBuffers b = render(field, cam);
    for (std::size_t p = 0; p < prev.size(); ++p) ASSERT_GE(b.alpha[p], prev[p] - 1e-15);
    prev = b.alpha;
  }
}

TEST(Render, SingleSurfelDepthMatchesPlane) {
  std::mt19937_64 rng(59);
  for (int trial = 0; trial < 10; ++trial) {
    const Camera cam = oracle::random_camera(rng, 40, 32);
    SurfelField field;
    field.surfels.push_back(oracle::random_surfel(rng, cam, 3.0, 8.0));
    const RenderBuffers b = render(field, cam);
    for (int r = 0; r < cam.height; ++r)
      for (int c = 0; c < cam.width; ++c) {
        if (b.alpha.at(r, c) < 1e-6) continue;
        const oracle::BruteHit h = oracle::brute_pixel(field.surfels[0], cam, c, r);
        ASSERT_TRUE(h.hit);
        ASSERT_NEAR(b.depth.at(r, c), h.depth, 1e-6);
      }
  }
}

TEST(Footprint, BehindCameraIsEmpty) {
  const Camera cam = pinhole();
  EXPECT_TRUE(footprint_region(fronto({0, 0, -2}, 0.1), cam, kDefaultFootprintEpsilon).pixels.empty());
  EXPECT_THROW(footprint_region(fronto({0, 0, 2}, 0.1), cam, 0.0), std::invalid_argument);
  EXPECT_THROW(footprint_region(fronto({0, 0, 2}, 0.1), cam, 1.0), std::invalid_argument);
}

TEST(Footprint, EqualsFullImageBruteForce) {
  std::mt19937_64 rng(61);
  for (int i = 0; i < 50; ++i) {
    const Camera cam = oracle::random_camera(rng, 48, 40);
    const Surfel sf = oracle::random_surfel(rng, cam, 0.5, 10.0);
    for (double eps : {0.01, kDefaultFootprintEpsilon, 0.5}) {
      const FootprintRegion reg = footprint_region(sf, cam, eps, 2, 7);
      EXPECT_EQ(reg.view, 2u);
      EXPECT_EQ(reg.surfel, 7u);
      std::set<std::pair<int, int>> got;
      for (std::size_t j = 0; j < reg.pixels.size(); ++j) {
        got.insert({reg.pixels[j].row, reg.pixels[j].col});
        ASSERT_GT(reg.values[j], eps);
        ASSERT_TRUE(cam.width > reg.pixels[j].col && reg.pixels[j].col >= 0);
      }
      ASSERT_EQ(got, oracle::brute_footprint(sf, cam, eps)) << "surfel " << i << " eps " << eps;
    }
  }
}

TEST(Footprint, NestedInEpsilon) {
  std::mt19937_64 rng(63);
  for (int i = 0; i < 30; ++i) {
    const Camera cam = oracle::random_camera(rng, 40, 32);
    const Surfel sf = oracle::random_surfel(rng, cam);
    const FootprintRegion loose = footprint_region(sf, cam, 0.05);
    const FootprintRegion tight = footprint_region(sf, cam, 0.3);
    const std::set<PixelIndex> big(loose.pixels.begin(), loose.pixels.end());
    for (const PixelIndex& p : tight.pixels) ASSERT_TRUE(big.contains(p));
  }
}

TEST(Footprint, FrontoParallelEllipse) {
  const Camera cam = pinhole(120, 100, 100.0);
  const double d = 4.0;
  for (auto [su, sv] : {std::pair{0.2, 0.1}, std::pair{0.12, 0.3}, std::pair{0.05, 0.05}}) {
    const Surfel sf = make_surfel({0.013, -0.021, d}, Vec3::UnitX(), Vec3::UnitY(), su, sv, 1.0, Rgb::Zero());
    const FootprintRegion reg = footprint_region(sf, cam, std::exp(-2.0));
    int cmin = 1 << 30, cmax = -1, rmin = 1 << 30, rmax = -1;
    for (const PixelIndex& p : reg.pixels) {
      cmin = std::min(cmin, p.col);
      cmax = std::max(cmax, p.col);
      rmin = std::min(rmin, p.row);
      rmax = std::max(rmax, p.row);
    }
    const double a = 2.0 * su * cam.fx / d, b = 2.0 * sv * cam.fy / d;
    EXPECT_NEAR(0.5 * (cmax - cmin), a, 1.0);
    EXPECT_NEAR(0.5 * (rmax - rmin), b, 1.0);
  }
}

TEST(Footprint, PixelsAppearInRenderContributions) {
  std::mt19937_64 rng(65);
  const Camera cam = oracle::random_camera(rng, 40, 32);
  const SurfelField field = random_field(rng, cam, 20);
  RenderOptions opt;
  opt.keep_contributions = true;
  const RenderResult res = render_detailed(field, cam, opt);
  for (std::size_t k = 0; k < field.size(); ++k) {
    const FootprintRegion reg = footprint_region(field.surfels[k], cam, 0.2);
    for (const PixelIndex& p : reg.pixels) {
      const auto& list = res.contributions[static_cast<std::size_t>(p.row) * 40 + p.col];
      const bool found = std::any_of(list.begin(), list.end(), [&](const Contribution& c) {
        return c.surfel == k && c.gaussian > 0.2;
      });
      ASSERT_TRUE(found);
    }
  }
}

TEST(GatherFeatures, Examples) {
  FeatureMap m0(4, 3, 2), m1(4, 3, 2);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 4; ++c) {
      m0.at(r, c)[0] = r;
      m0.at(r, c)[1] = c;
      m1.at(r, c)[0] = 10 + r;
      m1.at(r, c)[1] = 10 + c;
    }
  const std::vector<FeatureMap> maps{m0, m1};

  FootprintRegion one{0, 3, {{1, 2}}, {0.9}};
  const FeatureBundle b1 = gather_features(maps, std::span(&one, 1));
  ASSERT_EQ(b1.size(), 1u);
  EXPECT_EQ(b1.feature(0)[0], 1.0);
  EXPECT_EQ(b1.feature(0)[1], 2.0);

  const std::vector<FootprintRegion> regs{{1, 3, {{2, 3}, {0, 1}, {1, 1}, {0, 0}, {2, 0}}, {}},
                                          {0, 3, {{0, 0}, {2, 2}, {1, 3}}, {}}};
  const FeatureBundle b = gather_features(maps, regs);
  ASSERT_EQ(b.size(), 8u);
  // brute force double loop over views then row-major pixels
  std::vector<double> expect;
  std::vector<std::size_t> views;
  for (std::size_t v = 0; v < 2; ++v)
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 4; ++c)
        for (const auto& reg : regs)
          if (reg.view == v && std::find(reg.pixels.begin(), reg.pixels.end(), PixelIndex{r, c}) != reg.pixels.end()) {
            views.push_back(v);
            expect.push_back(maps[v].at(r, c)[0]);
            expect.push_back(maps[v].at(r, c)[1]);
          }
  EXPECT_EQ(b.features, expect);
  EXPECT_EQ(b.views, views);

  const FeatureBundle capped = gather_features(maps, regs, 4);
  ASSERT_EQ(capped.size(), 4u);
  EXPECT_EQ(std::vector<double>(capped.features.begin(), capped.features.end()),
            std::vector<double>(expect.begin(), expect.begin() + 8));
}

TEST(GatherFeatures, Errors) {
  const std::vector<FeatureMap> maps{FeatureMap(4, 3, 2)};
  const std::vector<FootprintRegion> outside{{0, 0, {{5, 0}}, {}}};
  EXPECT_THROW(gather_features(maps, outside), std::logic_error);
  const std::vector<FootprintRegion> bad_view{{3, 0, {{0, 0}}, {}}};
  EXPECT_THROW(gather_features(maps, bad_view), std::invalid_argument);
  const std::vector<FootprintRegion> mixed{{0, 0, {}, {}}, {0, 1, {}, {}}};
  EXPECT_THROW(gather_features(maps, mixed), std::invalid_argument);
  const std::vector<FeatureMap> uneven{FeatureMap(4, 3, 2), FeatureMap(4, 3, 3)};
  EXPECT_THROW(gather_features(uneven, std::vector<FootprintRegion>{}), std::invalid_argument);
}
