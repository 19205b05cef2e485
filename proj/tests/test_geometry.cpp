#include <catch2/catch_amalgamated.hpp>

#include "gf/geometry.hpp"
#include "gf/random.hpp"

using namespace gf;

TEST_CASE("normalize basics") {
    CHECK(normalize(Vec3(2, 0, 0)).isApprox(Vec3(1, 0, 0)));
    CHECK_THROWS_AS(normalize(Vec3(0, 0, 0)), DegenerateVectorError);

    const Vec3 u = normalize(Vec3(1, 1, 1));
    const double c = 1.0 / std::sqrt(3.0);
    CHECK(u.x() == Catch::Approx(c).epsilon(1e-12));
    CHECK(u.y() == Catch::Approx(c).epsilon(1e-12));
    CHECK(u.z() == Catch::Approx(c).epsilon(1e-12));
    CHECK(std::abs(u.norm() - 1.0) < 1e-12);
}

TEST_CASE("rotation matrix validity") {
    Rng rng = seeded_rng(42, "rot");
    for (int i = 0; i < 50; ++i) {
        const RotationMatrix r = axis_angle(random_unit_vector(rng), uniform(rng, -3.0, 3.0));
        CHECK(r.is_valid());
    }
    Mat3 bad = Mat3::Identity();
    bad(0, 0) = 2.0;
    CHECK_THROWS_AS(RotationMatrix::from_matrix(bad), PreconditionError);
}

TEST_CASE("rigid transforms are isometries and invert/compose correctly") {
    Rng rng = seeded_rng(7, "rigid");
    for (int i = 0; i < 100; ++i) {
        RigidTransform t;
        t.rotation = axis_angle(random_unit_vector(rng), uniform(rng, -3.0, 3.0));
        t.translation = Vec3(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1));
        const Vec3 p = Vec3(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1));
        const Vec3 q = Vec3(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1));

        CHECK(std::abs((t.apply(p) - t.apply(q)).norm() - (p - q).norm()) < 1e-9);
        CHECK((t.inverse().apply(t.apply(p)) - p).norm() < 1e-9);

        RigidTransform s;
        s.rotation = axis_angle(random_unit_vector(rng), uniform(rng, -3.0, 3.0));
        s.translation = Vec3(uniform(rng, -1, 1), 0, 0);
        CHECK((t.compose(s).apply(p) - t.apply(s.apply(p))).norm() < 1e-12);
    }
}

TEST_CASE("nearest neighbor on a single point") {
    const KdTree3 tree(std::vector<Vec3>{Vec3(1, 0, 0)});
    const auto r = nearest_neighbor(Vec3(0, 0, 0), tree);
    CHECK(r.index == 0);
    CHECK(r.distance == Catch::Approx(1.0));
}

TEST_CASE("nearest neighbor coincident query has distance zero") {
    std::vector<Vec3> pts{Vec3(0.5, -1, 2), Vec3(0, 0, 0), Vec3(3, 3, 3)};
    const KdTree3 tree(pts);
    const auto r = nearest_neighbor(Vec3(0.5, -1, 2), tree);
    CHECK(r.index == 0);
    CHECK(r.distance == 0.0);
}

TEST_CASE("nearest neighbor matches exhaustive scan") {
    Rng rng = seeded_rng(123, "nn");
    std::vector<Vec3> pts;
    for (int i = 0; i < 1000; ++i)
        pts.emplace_back(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1));
    const KdTree3 tree(pts);
    for (int i = 0; i < 100; ++i) {
        const Vec3 q(uniform(rng, -1.2, 1.2), uniform(rng, -1.2, 1.2), uniform(rng, -1.2, 1.2));
        const auto a = nearest_neighbor(q, tree);
        const auto b = nearest_neighbor_scan(q, pts);
        CHECK(a.index == b.index);
        CHECK(a.distance == b.distance);
    }
}

TEST_CASE("nearest neighbor tie broken by lowest index") {
    // duplicate points: scan and tree must both return the first one
    std::vector<Vec3> pts{Vec3(1, 1, 1), Vec3(-1, 0, 0), Vec3(1, 1, 1)};
    const KdTree3 tree(pts);
    const auto r = nearest_neighbor(Vec3(1, 1, 1.1), tree);
    CHECK(r.index == 0);

    // symmetric pair equidistant from origin along one axis
    std::vector<Vec3> sym{Vec3(1, 0, 0), Vec3(-1, 0, 0)};
    const KdTree3 tree2(sym);
    CHECK(nearest_neighbor(Vec3(0, 0, 0), tree2).index ==
          nearest_neighbor_scan(Vec3(0, 0, 0), sym).index);
}

TEST_CASE("empty cloud raises") {
    CHECK_THROWS_AS(KdTree3(std::vector<Vec3>{}), EmptyCloudError);
    CHECK_THROWS_AS(nearest_neighbor_scan(Vec3(0, 0, 0), {}), EmptyCloudError);
}

TEST_CASE("point cloud validation") {
    PointCloud pc;
    pc.points = {Vec3(0, 0, 0), Vec3(1, 0, 0)};
    CHECK_NOTHROW(pc.validate());
    pc.normals = {Vec3(1, 0, 0)};
    CHECK_THROWS_AS(pc.validate(), PreconditionError);
    pc.normals = {Vec3(1, 0, 0), Vec3(0.5, 0, 0)};
    CHECK_THROWS_AS(pc.validate(), PreconditionError);
    pc.normals = {Vec3(1, 0, 0), Vec3(0, 1, 0)};
    CHECK_NOTHROW(pc.validate());
}
