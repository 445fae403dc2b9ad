#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "airsplat/camera.hpp"
#include "airsplat/error.hpp"
#include "airsplat/geometry.hpp"
#include "support.hpp"

namespace airsplat {
namespace {

using testing::random_breathing_mesh;

TEST(DeformMesh, EndpointsAreExact) {
  std::mt19937_64 rng(11);
  const BreathingMesh bm = random_breathing_mesh(rng, 20, 5.0);
  const auto v0 = deform_mesh(bm, 0.0);
  const auto v1 = deform_mesh(bm, 1.0);
  ASSERT_EQ(v0.size(), bm.insp.vertices.size());
  for (std::size_t i = 0; i < v0.size(); ++i) {
    EXPECT_EQ(v0[i], bm.insp.vertices[i]);
    EXPECT_EQ(v1[i], Vec3(bm.insp.vertices[i] + bm.delta[i]));
  }
}

TEST(DeformMesh, Midpoint) {
  BreathingMesh bm;
  bm.insp.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)};
  bm.insp.faces = {{0, 1, 2}};
  bm.delta = {Vec3(2, 0, 0), Vec3::Zero(), Vec3::Zero()};
  EXPECT_EQ(deform_mesh(bm, 0.5)[0], Vec3(1, 0, 0));
}

TEST(DeformMesh, Linearity) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const BreathingMesh bm = random_breathing_mesh(rng, 5, 10.0);
    const double a1 = u(rng), a2 = u(rng), lam = u(rng);
    const auto mix = deform_mesh(bm, lam * a1 + (1 - lam) * a2);
    const auto p = deform_mesh(bm, a1);
    const auto q = deform_mesh(bm, a2);
    for (std::size_t i = 0; i < mix.size(); ++i) {
      const Vec3 expected = lam * p[i] + (1 - lam) * q[i];
      EXPECT_LE((mix[i] - expected).norm(), 1e-12 * (1.0 + expected.norm()));
    }
  }
}

TEST(DeformMesh, RejectsPhaseOutsideUnitInterval) {
  std::mt19937_64 rng(1);
  const BreathingMesh bm = random_breathing_mesh(rng, 2, 1.0);
  EXPECT_THROW(deform_mesh(bm, -0.01), DomainError);
  EXPECT_THROW(deform_mesh(bm, 1.01), DomainError);
  EXPECT_THROW(deform_mesh(bm, std::nan("")), DomainError);
}

TEST(BreathingMesh, FromPairAndValidate) {
  TriMesh a = testing::unit_cube();
  TriMesh b = a;
  for (Vec3& v : b.vertices) v += Vec3(0, 0, 2);
  const BreathingMesh bm = BreathingMesh::from_pair(a, b);
  for (const Vec3& d : bm.delta) EXPECT_EQ(d, Vec3(0, 0, 2));
  EXPECT_EQ(bm.expiration_vertices(), b.vertices);

  b.faces[0] = {0, 1, 2};
  EXPECT_THROW(BreathingMesh::from_pair(a, b), SpecError);
}

TEST(TriMesh, ValidateRejectsBrokenFaces) {
  TriMesh m = testing::unit_cube();
  EXPECT_NO_THROW(m.validate());
  m.faces[0] = {0, 0, 1};
  EXPECT_THROW(m.validate(), SpecError);
  m.faces[0] = {0, 1, 8};
  EXPECT_THROW(m.validate(), SpecError);
}

TEST(FaceFrame, AxisAlignedTriangle) {
  const std::vector<Vec3> v = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)};
  const FaceFrame f = face_frame(v, {0, 1, 2});
  EXPECT_NEAR((f.normal - Vec3(0, 0, 1)).norm(), 0.0, 1e-15);
  EXPECT_NEAR((f.tangent - Vec3(1, 0, 0)).norm(), 0.0, 1e-15);
  EXPECT_NEAR((f.bitangent - Vec3(0, 1, 0)).norm(), 0.0, 1e-15);
  EXPECT_NEAR((f.origin - Vec3(1.0 / 3, 1.0 / 3, 0)).norm(), 0.0, 1e-15);
}

TEST(FaceFrame, TranslationMovesOnlyTheOrigin) {
  const std::vector<Vec3> v = {Vec3(0.3, 0, 1), Vec3(1, 0.2, 0), Vec3(0, 1, 0.5)};
  std::vector<Vec3> moved = v;
  for (Vec3& p : moved) p += Vec3(5, -3, 2);
  const FaceFrame a = face_frame(v, {0, 1, 2});
  const FaceFrame b = face_frame(moved, {0, 1, 2});
  EXPECT_NEAR((a.normal - b.normal).norm(), 0.0, 1e-12);
  EXPECT_NEAR((a.tangent - b.tangent).norm(), 0.0, 1e-12);
  EXPECT_NEAR((b.origin - a.origin - Vec3(5, -3, 2)).norm(), 0.0, 1e-12);
}

TEST(FaceFrame, DegenerateFaceThrows) {
  const std::vector<Vec3> v = {Vec3(0, 0, 0), Vec3(1, 1, 1), Vec3(2, 2, 2)};
  EXPECT_THROW(face_frame(v, {0, 1, 2}), DegenerateFaceError);
  EXPECT_THROW(face_frame(v, {0, 1, 3}), IndexError);
}

TEST(FaceFrame, OrthonormalOnRandomFaces) {
  std::mt19937_64 rng(3);
  const BreathingMesh bm = random_breathing_mesh(rng, 200, 0.0);
  for (const Face& face : bm.insp.faces) {
    const FaceFrame f = face_frame(bm.insp.vertices, face);
    const Mat3 r = f.rotation();
    EXPECT_LE((r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff(), 1e-9);
    const Vec3 e1 = bm.insp.vertices[face[1]] - bm.insp.vertices[face[0]];
    const Vec3 e2 = bm.insp.vertices[face[2]] - bm.insp.vertices[face[0]];
    EXPECT_LE((f.normal - e1.cross(e2).normalized()).norm(), 1e-9);
  }
}

TEST(SliceMeshPlane, UnitCubeMidSection) {
  const TriMesh cube = testing::unit_cube();
  const Plane plane = Plane::through(Vec3(0, 0, 0.5), Vec3(0, 0, 1));
  const PlaneContour c = slice_mesh_plane(cube.vertices, cube.faces, plane);
  // Four vertical edges plus one diagonal per side face.
  ASSERT_EQ(c.entries.size(), 8u);
  double min_x = 1, max_x = 0, min_y = 1, max_y = 0;
  for (const ContourEntry& e : c.entries) {
    EXPECT_NEAR(e.point.z(), 0.5, 1e-12);
    EXPECT_LT(e.edge.first, e.edge.second);
    min_x = std::min(min_x, e.point.x());
    max_x = std::max(max_x, e.point.x());
    min_y = std::min(min_y, e.point.y());
    max_y = std::max(max_y, e.point.y());
  }
  // Every point lies on the square's boundary, so the hull is the square.
  EXPECT_NEAR(2 * (max_x - min_x) + 2 * (max_y - min_y), 4.0, 1e-12);
  for (std::size_t i = 1; i < c.entries.size(); ++i) {
    EXPECT_LT(c.entries[i - 1].edge, c.entries[i].edge);
  }
}

TEST(SliceMeshPlane, PlaneOutsideMeshIsEmpty) {
  const TriMesh cube = testing::unit_cube();
  const Plane plane = Plane::through(Vec3(0, 0, 3), Vec3(0, 0, 1));
  EXPECT_TRUE(slice_mesh_plane(cube.vertices, cube.faces, plane).entries.empty());
}

TEST(SliceMeshPlane, VertexOnPlaneDoesNotCross) {
  const TriMesh cube = testing::unit_cube();
  const Plane plane = Plane::through(Vec3(0, 0, 0), Vec3(0, 0, 1));
  EXPECT_TRUE(slice_mesh_plane(cube.vertices, cube.faces, plane).entries.empty());
}

TEST(SliceMeshPlane, RepeatedSlicesAreIdentical) {
  const TriMesh t = testing::tube(5.0, 20.0, 16, 8);
  const Plane plane = Plane::through(Vec3(0, 0, 7.3), Vec3(0.1, 0, 1).normalized());
  const PlaneContour a = slice_mesh_plane(t.vertices, t.faces, plane);
  const PlaneContour b = slice_mesh_plane(t.vertices, t.faces, plane);
  ASSERT_EQ(a.entries.size(), b.entries.size());
  for (std::size_t i = 0; i < a.entries.size(); ++i) {
    EXPECT_EQ(a.entries[i].edge, b.entries[i].edge);
    EXPECT_EQ(a.entries[i].point, b.entries[i].point);
    EXPECT_NEAR(plane.signed_distance(a.entries[i].point), 0.0, 1e-6);
  }
  const ContourComparison self = contour_rmse(a, a);
  EXPECT_EQ(self.rmse, 0.0);
  EXPECT_EQ(self.matched, a.entries.size());
  EXPECT_EQ(self.unmatched, 0u);
}

TEST(ContourRmse, RigidShiftInPlane) {
  const TriMesh t = testing::tube(5.0, 20.0, 16, 8);
  const Plane plane = Plane::through(Vec3(0, 0, 7.3), Vec3(0, 0, 1));
  const PlaneContour a = slice_mesh_plane(t.vertices, t.faces, plane);
  PlaneContour b = a;
  for (ContourEntry& e : b.entries) e.point += Vec3(0.6, 0.8, 0);
  EXPECT_NEAR(contour_rmse(a, b).rmse, 1.0, 1e-12);
}

TEST(ContourRmse, DisjointEdgesThrow) {
  PlaneContour a, b;
  a.entries.push_back({{0, 1}, Vec3::Zero()});
  b.entries.push_back({{2, 3}, Vec3::Zero()});
  EXPECT_THROW(contour_rmse(a, b), NoOverlapError);
  const Camera cam;
  EXPECT_THROW(target_displacement(a, b, cam), NoOverlapError);
}

TEST(ContourRmse, CountsUnmatchedEdges) {
  PlaneContour a, b;
  a.entries = {{{0, 1}, Vec3::Zero()}, {{1, 2}, Vec3::Zero()}};
  b.entries = {{{0, 1}, Vec3(3, 4, 0)}, {{4, 5}, Vec3::Zero()}};
  const ContourComparison c = contour_rmse(a, b);
  EXPECT_EQ(c.matched, 1u);
  EXPECT_EQ(c.unmatched, 2u);
  EXPECT_NEAR(c.rmse, 5.0, 1e-12);
  EXPECT_NEAR(c.matched_fraction(), 1.0 / 3.0, 1e-12);
}

// Tube along +z whose expiration state is a uniform outward 5 mm offset.
BreathingMesh radial_tube() {
  BreathingMesh bm;
  bm.insp = testing::tube(5.0, 20.0, 16, 8);
  for (const Vec3& v : bm.insp.vertices) {
    bm.delta.push_back(5.0 * Vec3(v.x(), v.y(), 0).normalized());
  }
  return bm;
}

TEST(TargetDisplacement, IdenticalContoursGiveZero) {
  const BreathingMesh bm = radial_tube();
  const Camera cam = Camera::look_along({}, Vec3(0, 0, 10.2), Vec3(1, 0, 0.2).normalized(),
                                        Vec3(0, 1, 0));
  const Plane plane = Plane::through(cam.center(), cam.optical_axis());
  const auto a = slice_mesh_plane(deform_mesh(bm, 0.4), bm.insp.faces, plane);
  const auto b = slice_mesh_plane(deform_mesh(bm, 0.4), bm.insp.faces, plane);
  EXPECT_EQ(target_displacement(a, b, cam), 0.0);
}

TEST(TargetDisplacement, UniformRadialOffset) {
  const BreathingMesh bm = radial_tube();
  // Just above a ring, so every crossing sits next to a ring vertex whose
  // offset is exactly 5 mm; the camera is off-axis to make one wall nearest.
  const Camera cam = Camera::look_along({}, Vec3(1, 0, 10.0 + 1e-7), Vec3(0, 0, 1),
                                        Vec3(0, 1, 0));
  const Plane plane = Plane::through(cam.center(), cam.optical_axis());
  const auto gt = slice_mesh_plane(deform_mesh(bm, 0.0), bm.insp.faces, plane);
  const auto pred = slice_mesh_plane(deform_mesh(bm, 1.0), bm.insp.faces, plane);
  ASSERT_FALSE(gt.entries.empty());
  EXPECT_NEAR(target_displacement(gt, pred, cam), 5.0, 1e-6);
}

TEST(TargetDisplacement, PicksNearestWallWhenAnglesTie) {
  PlaneContour a, b;
  a.entries = {{{0, 1}, Vec3(3, 0, 0)}, {{1, 2}, Vec3(-1, 0, 0)}};
  b.entries = {{{0, 1}, Vec3(3, 2, 0)}, {{1, 2}, Vec3(-1, 0.5, 0)}};
  const Camera cam = Camera::look_along({}, Vec3::Zero(), Vec3(0, 0, 1), Vec3(0, 1, 0));
  EXPECT_NEAR(target_displacement(a, b, cam), 0.5, 1e-12);
}

TEST(ContourRmse, MonotoneInPhaseGap) {
  const BreathingMesh bm = radial_tube();
  const Plane plane = Plane::through(Vec3(0, 0, 9.1), Vec3(0, 0, 1));
  const auto ref = slice_mesh_plane(deform_mesh(bm, 0.2), bm.insp.faces, plane);
  double last = -1.0;
  for (double a = 0.2; a <= 1.0 + 1e-12; a += 0.1) {
    const auto c = slice_mesh_plane(deform_mesh(bm, std::min(a, 1.0)),
                                    bm.insp.faces, plane);
    const double r = contour_rmse(ref, c).rmse;
    EXPECT_GE(r, last);
    last = r;
  }
}

TEST(Obj, RoundTrip) {
  const auto dir = testing::scratch_dir("obj");
  const TriMesh cube = testing::unit_cube();
  write_obj(dir / "cube.obj", cube);
  const TriMesh back = read_obj(dir / "cube.obj");
  EXPECT_EQ(back.vertices, cube.vertices);
  EXPECT_EQ(back.faces, cube.faces);
  EXPECT_THROW(read_obj(dir / "missing.obj"), IoError);
}

}  // namespace
}  // namespace airsplat
