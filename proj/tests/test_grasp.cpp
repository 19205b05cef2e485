#include <catch2/catch_amalgamated.hpp>

#include "gf/family.hpp"
#include "gf/gripper.hpp"
#include "gf/sdf.hpp"

using namespace gf;

namespace {

double rotation_angle(const Mat3& a, const Mat3& b) {
    const Mat3 r = a.transpose() * b;
    return std::acos(std::clamp((r.trace() - 1.0) / 2.0, -1.0, 1.0));
}

GraspPose random_cage_grasp(const AnalyticShape& shape, double local_radius,
                            const GripperModel& gripper, Rng& rng) {
    // antipodal contacts with the chord inside the finger cage
    const Vec3 p = shape.sample_surface(1, rng)[0];
    const Vec3 n = shape.gradient(p).normalized();
    GraspPose g;
    g.p1 = p;
    g.p2 = p - 2.0 * local_radius * n;
    g.v = random_orthogonal_unit(rng, g.p2 - g.p1);
    const double margin = local_radius + 0.004;
    g.d = uniform(rng, margin, gripper.finger_length - margin);
    return g;
}

}  // namespace

TEST_CASE("matrix_from_grasp on the axis-aligned case") {
    GraspPose g;
    g.p1 = Vec3(0, -0.04, 0);
    g.p2 = Vec3(0, 0.04, 0);
    g.d = 0.1;
    g.v = Vec3(0, 0, 1);
    const GraspMatrix m = matrix_from_grasp(g);
    CHECK((m.pose.rotation.col(0) - Vec3(1, 0, 0)).norm() < 1e-15);
    CHECK((m.pose.rotation.col(1) - Vec3(0, 1, 0)).norm() < 1e-15);
    CHECK((m.pose.rotation.col(2) - Vec3(0, 0, 1)).norm() < 1e-15);
    CHECK((m.pose.translation - Vec3(0, 0, -0.1)).norm() < 1e-15);
    CHECK(m.width == Catch::Approx(0.08));
}

TEST_CASE("approach parallel to the contact line is rejected") {
    GraspPose g;
    g.p1 = Vec3(0, -0.04, 0);
    g.p2 = Vec3(0, 0.04, 0);
    g.d = 0.05;
    g.v = Vec3(0, 1, 0);
    CHECK_THROWS_AS(matrix_from_grasp(g), DegenerateApproachError);
}

TEST_CASE("frame construction properties over random grasps") {
    Rng rng = seeded_rng(3, "frames");
    for (int i = 0; i < 1000; ++i) {
        GraspPose g;
        g.p1 = Vec3(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1));
        g.p2 = g.p1 + 0.08 * random_unit_vector(rng);
        g.v = random_unit_vector(rng);
        if (g.v.cross((g.p2 - g.p1).normalized()).norm() < 1e-3) continue;
        g.d = uniform(rng, 0.0, 0.1);
        const GraspMatrix m = matrix_from_grasp(g);
        CHECK(m.pose.rotation.is_valid(1e-9));
        CHECK(std::abs(m.pose.rotation.col(2).dot(g.p2 - g.p1)) < 1e-9);
        CHECK(m.width == (g.p2 - g.p1).norm());
    }
}

TEST_CASE("gripper sample points transform rigidly") {
    const GripperModel gripper = GripperModel::make_default();
    REQUIRE(gripper.surface_points.size() >= 64);

    GraspMatrix identity;
    identity.width = 0.05;
    const auto same = sample_gripper_points(gripper, identity);
    for (std::size_t i = 0; i < same.size(); ++i)
        CHECK((same[i] - gripper.surface_points[i]).norm() == 0.0);

    GraspMatrix shifted = identity;
    shifted.pose.translation = Vec3(0.3, -0.1, 0.05);
    const auto moved = sample_gripper_points(gripper, shifted);
    for (std::size_t i = 0; i < moved.size(); ++i)
        CHECK((moved[i] - gripper.surface_points[i] - shifted.pose.translation).norm() < 1e-15);

    GraspMatrix rotated = identity;
    rotated.pose.rotation = axis_angle(Vec3(1, 2, 3), 1.1);
    const auto rot = sample_gripper_points(gripper, rotated);
    Rng rng = seeded_rng(5, "rigid");
    for (int k = 0; k < 200; ++k) {
        const std::size_t a = std::size_t(uniform(rng, 0, 1) * rot.size()) % rot.size();
        const std::size_t b = std::size_t(uniform(rng, 0, 1) * rot.size()) % rot.size();
        CHECK(std::abs((rot[a] - rot[b]).norm() -
                       (gripper.surface_points[a] - gripper.surface_points[b]).norm()) < 1e-12);
    }
}

TEST_CASE("grasp_from_matrix recovers the diameter of a cylinder") {
    // cylinder of radius 0.04 along x; gripper centered with closing axis y
    const auto cyl = AnalyticShape::make(Cylinder{0.04, 0.2},
                                         [] {
                                             RigidTransform t;
                                             t.rotation = axis_angle(Vec3(0, 1, 0), M_PI / 2);
                                             return t;
                                         }());
    const GripperModel gripper = GripperModel::make_default();
    GraspMatrix m;
    m.pose.rotation = RotationMatrix();  // identity: closing axis = world y
    // place the palm so the cylinder axis sits mid-cage
    m.pose.translation = Vec3(0, 0, -gripper.finger_length / 2);
    m.width = gripper.max_width;
    const GraspPose g = grasp_from_matrix(m, cyl, gripper);
    CHECK((g.p2 - g.p1).norm() == Catch::Approx(0.08).margin(2e-3));
    CHECK(std::abs(g.p1.y() + 0.04) < 2e-3);
    CHECK(std::abs(g.p2.y() - 0.04) < 2e-3);
    CHECK(std::abs(cyl.value(g.p1)) < 1e-6);
    CHECK(std::abs(cyl.value(g.p2)) < 1e-6);
}

TEST_CASE("gripper away from the object reports NoContact") {
    const auto sphere = AnalyticShape::make(Sphere{0.03});
    const GripperModel gripper = GripperModel::make_default();
    GraspMatrix m;
    m.pose.translation = Vec3(1.0, 0, 0);
    CHECK_THROWS_AS(grasp_from_matrix(m, sphere, gripper), NoContactError);
}

TEST_CASE("round trip grasp -> matrix -> grasp") {
    const GripperModel gripper = GripperModel::make_default();
    Rng rng = seeded_rng(7, "roundtrip");
    const double resolution = 2.0 * gripper.finger_length / 100.0;  // two march steps

    int done = 0;
    while (done < 50) {
        const double r = uniform(rng, 0.010, 0.018);
        const bool use_sphere = uniform(rng, 0, 1) < 0.5;
        AnalyticShape shape = use_sphere
                                  ? AnalyticShape::make(Sphere{r})
                                  : AnalyticShape::make(Cylinder{r, 0.06});
        const GraspPose g = random_cage_grasp(shape, r, gripper, rng);
        GraspMatrix m;
        try {
            m = matrix_from_grasp(g);
        } catch (const Error&) {
            continue;
        }
        GraspPose g2;
        try {
            g2 = grasp_from_matrix(m, shape, gripper);
        } catch (const Error&) {
            continue;  // grasp chord outside the cage for this draw
        }
        const GraspMatrix m2 = matrix_from_grasp(g2);
        CHECK(rotation_angle(m.pose.rotation.matrix(), m2.pose.rotation.matrix()) < 1e-3);
        CHECK((g2.p1 - g.p1).norm() < resolution);
        CHECK((g2.p2 - g.p2).norm() < resolution);
        CHECK((m2.pose.translation - m.pose.translation).norm() < resolution);
        ++done;
    }
}

TEST_CASE("authoring on a cylinder yields diameter-wide grasps") {
    const auto cyl = AnalyticShape::make(Cylinder{0.03, 0.09});
    const GripperModel gripper = GripperModel::make_default();
    const AuthoredGrasps out = author_source_grasps(cyl, gripper, 50, 42);
    CHECK(out.grasps.size() == 50);
    CHECK_FALSE(out.warning);
    for (const GraspPose& g : out.grasps) {
        CHECK(g.width() == Catch::Approx(0.06).margin(1e-3));
        CHECK(std::abs(cyl.value(g.p1)) < 1e-6);
        CHECK(std::abs(cyl.value(g.p2)) < 1e-6);
        CHECK(std::abs(g.v.norm() - 1.0) < 1e-12);
        CHECK(std::abs(g.v.dot((g.p2 - g.p1).normalized())) < 1e-9);
        // antipodal within 10 degrees, inward normals
        const Vec3 n1 = -cyl.gradient(g.p1).normalized();
        const Vec3 n2 = -cyl.gradient(g.p2).normalized();
        const Vec3 u = (g.p2 - g.p1).normalized();
        CHECK(u.dot(n1) >= std::cos(10.0 * M_PI / 180) - 1e-12);
        CHECK((-u).dot(n2) >= std::cos(10.0 * M_PI / 180) - 1e-12);
    }
}

TEST_CASE("sphere wider than the gripper yields no grasps and a warning") {
    const auto big = AnalyticShape::make(Sphere{0.05});
    const GripperModel gripper = GripperModel::make_default();
    const AuthoredGrasps out = author_source_grasps(big, gripper, 10, 1);
    CHECK(out.grasps.empty());
    CHECK(out.warning);
}

TEST_CASE("authoring is deterministic in the seed") {
    ShapeFamilySpec spec;
    spec.count = 1;
    spec.seed = 4;
    const ShapeFamily fam = generate_family(spec);
    const GripperModel gripper = GripperModel::make_default();
    const AuthoredGrasps a = author_source_grasps(fam.instances[0].shape, gripper, 20, 9);
    const AuthoredGrasps b = author_source_grasps(fam.instances[0].shape, gripper, 20, 9);
    REQUIRE(a.grasps.size() == b.grasps.size());
    for (std::size_t i = 0; i < a.grasps.size(); ++i) {
        CHECK((a.grasps[i].p1 - b.grasps[i].p1).norm() == 0.0);
        CHECK((a.grasps[i].p2 - b.grasps[i].p2).norm() == 0.0);
        CHECK(a.grasps[i].d == b.grasps[i].d);
        CHECK((a.grasps[i].v - b.grasps[i].v).norm() == 0.0);
    }
}
