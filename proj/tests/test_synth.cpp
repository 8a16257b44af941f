#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace nyqsurf;

namespace {

synth::SynthParams params(synth::SceneKind kind) {
  synth::SynthParams p;
  p.kind = kind;
  p.width = 40;
  p.height = 32;
  p.focal = 40.0;
  return p;
}

}  // namespace

TEST(Synth, KindNames) {
  for (auto k : {synth::SceneKind::Plane, synth::SceneKind::TiltedPlane, synth::SceneKind::TwoSpheres,
                 synth::SceneKind::StepEdge})
    EXPECT_EQ(synth::parse_kind(synth::to_string(k)), k);
  EXPECT_THROW(synth::parse_kind("cube"), std::invalid_argument);
}

TEST(Synth, PlaneDepthIsConstant) {
  const SceneBundle s = synth::synth_scene(params(synth::SceneKind::Plane));
  ASSERT_EQ(s.views(), 2u);
  for (const auto& d : s.depth)
    for (std::size_t p = 0; p < d->size(); ++p) ASSERT_NEAR((*d)[p], 2.0, 1e-12);
  for (const auto& n : s.normal)
    for (std::size_t p = 0; p < n->size(); ++p) ASSERT_LT(((*n)[p] - Vec3(0, 0, -1)).norm(), 1e-15);
  EXPECT_EQ(s.field.size(), 2u * 40 * 32);
  EXPECT_NO_THROW(validate(s));
}

TEST(Synth, TiltedNormalsAtAngle) {
  const SceneBundle s = synth::synth_scene(params(synth::SceneKind::TiltedPlane));
  for (const auto& n : s.normal)
    for (std::size_t p = 0; p < n->size(); ++p)
      ASSERT_NEAR(std::acos(-(*n)[p].z()) * 180.0 / std::numbers::pi, 30.0, 1e-9);
  EXPECT_NEAR(mean_normal_error_deg(s.field, Vec3(0, 0, 1)), 30.0, 1e-9);
}

TEST(Synth, Deterministic) {
  auto p = params(synth::SceneKind::TwoSpheres);
  p.seed = 9;
  const SceneBundle a = synth::synth_scene(p), b = synth::synth_scene(p);
  ASSERT_EQ(a.field.size(), b.field.size());
  for (std::size_t k = 0; k < a.field.size(); ++k) ASSERT_TRUE(a.field.surfels[k].t_u == b.field.surfels[k].t_u);
  EXPECT_TRUE(a.images[0] == b.images[0]);
}

TEST(Synth, GroundTruthRendersTargets) {
  for (auto kind : {synth::SceneKind::Plane, synth::SceneKind::TiltedPlane, synth::SceneKind::TwoSpheres,
                    synth::SceneKind::StepEdge}) {
    const SceneBundle s = synth::synth_scene(params(kind));
    const FitTargets t = s.targets();
    for (std::size_t v = 0; v < s.views(); ++v) {
      const RenderBuffers b = render(s.field, s.cameras[v]);
      EXPECT_LT(render_loss(b, t, v), 1e-3) << synth::to_string(kind) << " view " << v;
    }
  }
}

TEST(Synth, GridFieldCoversView) {
  const auto p = params(synth::SceneKind::Plane);
  const auto cams = synth::make_cameras(p);
  const SurfelField g = synth::grid_field(cams[0], 4, 4, 2.0, 1);
  ASSERT_EQ(g.size(), 16u);
  for (const Surfel& sf : g.surfels) {
    EXPECT_NO_THROW(validate(sf));
    EXPECT_TRUE(visible(sf.center, cams[0]));
  }
  EXPECT_LT(mean_normal_error_deg(g, Vec3(0, 0, 1)), 5.0);
  EXPECT_THROW(synth::grid_field(cams[0], 0, 4, 2.0, 1), std::invalid_argument);
}

TEST(Synth, InvalidParameters) {
  auto p = params(synth::SceneKind::Plane);
  p.views = 0;
  EXPECT_THROW(synth::synth_scene(p), std::invalid_argument);
  p = params(synth::SceneKind::Plane);
  p.focal = -1;
  EXPECT_THROW(synth::synth_scene(p), std::invalid_argument);
}
