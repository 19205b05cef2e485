#include <catch2/catch_amalgamated.hpp>

#include "gf/family.hpp"

using namespace gf;

TEST_CASE("spec validation") {
    ShapeFamilySpec bad;
    bad.count = 0;
    CHECK_THROWS_AS(generate_family(bad), PreconditionError);
    bad.count = 3;
    bad.category = "chair-like";
    CHECK_THROWS_AS(generate_family(bad), PreconditionError);
}

TEST_CASE("generation is deterministic for a fixed seed") {
    ShapeFamilySpec spec;
    spec.count = 20;
    spec.seed = 7;
    const ShapeFamily a = generate_family(spec);
    const ShapeFamily b = generate_family(spec);
    REQUIRE(a.instances.size() == 20);
    for (int i = 0; i < 20; ++i) {
        CHECK(a.instances[i].id == b.instances[i].id);
        CHECK(a.instances[i].scale == b.instances[i].scale);
        for (const Vec3& p : {Vec3(0.01, 0.02, 0.03), Vec3(-0.02, 0.0, 0.08)})
            CHECK(a.instances[i].shape.value(p) == b.instances[i].shape.value(p));
    }
}

TEST_CASE("train/test split honors the fraction") {
    ShapeFamilySpec spec;
    spec.count = 20;
    spec.train_fraction = 0.75;
    const ShapeFamily fam = generate_family(spec);
    CHECK(fam.split(true).size() == 15);
    CHECK(fam.split(false).size() == 5);
}

TEST_CASE("surface clouds satisfy their own oracle") {
    for (const char* cat : {"bottle-like", "bowl-like", "mug-like"}) {
        ShapeFamilySpec spec;
        spec.category = cat;
        spec.count = 4;
        spec.seed = 11;
        const ShapeFamily fam = generate_family(spec);
        Rng rng = seeded_rng(3, "fam-surface");
        for (const auto& inst : fam.instances) {
            const auto pts = inst.shape.sample_surface(300, rng);
            for (const Vec3& p : pts) CHECK(std::abs(inst.shape.value(p)) < 1e-6);
        }
    }
}

TEST_CASE("normalization maps instances into the unit cube") {
    ShapeFamilySpec spec;
    spec.count = 6;
    spec.seed = 2;
    for (const char* cat : {"bottle-like", "bowl-like", "mug-like"}) {
        spec.category = cat;
        const ShapeFamily fam = generate_family(spec);
        Rng rng = seeded_rng(4, "fam-norm");
        for (const auto& inst : fam.instances) {
            const auto pts = inst.shape.sample_surface(200, rng);
            for (const Vec3& p : pts) {
                const Vec3 pn = p / inst.scale;
                CHECK(pn.cwiseAbs().maxCoeff() <= 1.0);
            }
            const NormalizedField f{&inst.shape, inst.scale};
            // normalized SDF at a surface point is zero
            CHECK(std::abs(f.value(pts[0] / inst.scale)) < 1e-9);
        }
    }
}

TEST_CASE("sample sets carry correct oracle labels") {
    ShapeFamilySpec spec;
    spec.count = 2;
    spec.seed = 5;
    const ShapeFamily fam = generate_family(spec);
    Rng rng = seeded_rng(6, "fam-samples");
    const SampleSet s = sample_instance(fam.instances[0], 200, 200, rng);
    REQUIRE(s.surface.size() == 200);
    REQUIRE(s.spatial.size() == 200);
    const NormalizedField f{&fam.instances[0].shape, fam.instances[0].scale};
    for (std::size_t i = 0; i < s.spatial.size(); ++i)
        CHECK(f.value(s.spatial[i]) == s.spatial_sdf[i]);
    for (const Vec3& p : s.surface) CHECK(std::abs(f.value(p)) < 1e-6);
}

TEST_CASE("partial observation culls one half-space") {
    ShapeFamilySpec spec;
    spec.count = 1;
    spec.seed = 9;
    const ShapeFamily fam = generate_family(spec);
    Rng rng = seeded_rng(8, "fam-partial");
    const Vec3 dir(1, 0, 0);
    const PointCloud pc = partial_observation(fam.instances[0], 120, dir, rng);
    REQUIRE(pc.points.size() == 120);
    for (const Vec3& p : pc.points) CHECK(p.dot(dir) > 0.0);
    CHECK_NOTHROW(pc.validate());
}

TEST_CASE("mug handle sticks out of the body") {
    ShapeFamilySpec spec;
    spec.category = "mug-like";
    spec.count = 3;
    spec.seed = 13;
    const ShapeFamily fam = generate_family(spec);
    for (const auto& inst : fam.instances) {
        const Aabb b = inst.shape.bounds();
        // the union has to be wider along x (handle side) than along y
        CHECK(b.extents().x() > b.extents().y() * 1.2);
    }
}
