#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gf/geometry.hpp"
#include "gf/random.hpp"
#include "gf/sdf.hpp"

namespace gf {

// Procedural stand-in for a scanned shape category. Instances come with
// exact analytic SDF oracles; parameter draws cover height scaling and
// mouth enlarging/shrinking within the stated ranges.
struct ShapeFamilySpec {
    std::string category = "bottle-like";  // bottle-like | bowl-like | mug-like
    int count = 20;
    std::uint64_t seed = 0;
    double train_fraction = 0.75;

    double height_min = 0.16, height_max = 0.24;      // meters
    double radius_min = 0.024, radius_max = 0.038;    // body radius
    double mouth_min = 0.35, mouth_max = 0.60;        // mouth/neck scale vs body

    void validate() const {
        if (count < 1) throw PreconditionError("family spec: count must be >= 1");
        if (category != "bottle-like" && category != "bowl-like" && category != "mug-like")
            throw PreconditionError("family spec: unknown category '" + category + "'");
        if (!(height_min < height_max) || !(radius_min < radius_max) || !(mouth_min < mouth_max))
            throw PreconditionError("family spec: degenerate parameter range");
    }
};

struct FamilyInstance {
    std::string id;
    AnalyticShape shape;  // metric coordinates, centered near the origin
    double scale = 1.0;   // normalized = metric / scale, maps into [-1,1]^3
    bool train = true;
};

struct ShapeFamily {
    ShapeFamilySpec spec;
    std::vector<FamilyInstance> instances;

    std::vector<const FamilyInstance*> split(bool train) const {
        std::vector<const FamilyInstance*> out;
        for (const auto& inst : instances)
            if (inst.train == train) out.push_back(&inst);
        return out;
    }

    const FamilyInstance& by_id(const std::string& id) const {
        for (const auto& inst : instances)
            if (inst.id == id) return inst;
        throw PreconditionError("family: no instance '" + id + "'");
    }
};

// Evaluates an analytic shape in its normalized [-1,1]^3 frame.
struct NormalizedField {
    const AnalyticShape* shape;
    double scale;

    double value(const Vec3& p) const { return shape->value(p * scale) / scale; }
    Vec3 gradient(const Vec3& p) const { return shape->gradient(p * scale); }
};

namespace detail {

inline AnalyticShape make_bottle(Rng& rng, const ShapeFamilySpec& s) {
    const double h = uniform(rng, s.height_min, s.height_max);
    const double rb = uniform(rng, s.radius_min, s.radius_max);
    const double rn = rb * uniform(rng, s.mouth_min, s.mouth_max);
    const double shoulder = uniform(rng, 0.55, 0.72);  // fraction of height
    const double neck_len = uniform(rng, 0.10, 0.18);
    const double z0 = -h / 2, z1 = h / 2;
    const double zs = z0 + shoulder * h;
    const double zn = std::min(zs + neck_len * h, z1 - 0.05 * h);
    std::vector<Revolution::P2> profile{
        {rb * uniform(rng, 0.70, 0.85), z0},
        {rb, z0 + 0.06 * h},
        {rb * uniform(rng, 0.96, 1.0), zs - 0.08 * h},
        {rb, zs},
        {rn, zn},
        {rn, z1},
    };
    return AnalyticShape::make(Revolution::from_profile(profile));
}

inline AnalyticShape make_bowl(Rng& rng, const ShapeFamilySpec& s) {
    const double R = uniform(rng, 0.05, 0.08);
    const double hb = uniform(rng, 0.55, 0.85) * R;
    const double t = uniform(rng, 0.005, 0.009);
    const double mouth = uniform(rng, 0.95, 1.15);  // rim flare
    const double z0 = -hb / 2, z1 = hb / 2;
    // crescent cross-section: outer wall up, rim, inner wall down
    std::vector<Revolution::P2> poly{
        {0.0, z0},
        {0.45 * R, z0 + 0.04 * hb},
        {0.80 * R, z0 + 0.35 * hb},
        {0.95 * R, z0 + 0.70 * hb},
        {mouth * R, z1},
        {mouth * R - t, z1},
        {0.95 * R - t, z0 + 0.70 * hb},
        {0.80 * R - t, z0 + 0.35 * hb},
        {0.45 * R - t, z0 + t + 0.04 * hb},
        {0.0, z0 + t},
    };
    Revolution rev;
    rev.polygon = poly;
    return AnalyticShape::make(rev);
}

inline AnalyticShape make_mug(Rng& rng, const ShapeFamilySpec& s) {
    const double R = uniform(rng, 0.032, 0.046);
    const double h = uniform(rng, 0.08, 0.11);
    const double t = uniform(rng, 0.004, 0.007);
    const double mouth = uniform(rng, 0.92, 1.10);
    const double z0 = -h / 2, z1 = h / 2;
    std::vector<Revolution::P2> poly{
        {0.0, z0},          {R, z0},           {mouth * R, z1},
        {mouth * R - t, z1}, {R - t, z0 + t},  {0.0, z0 + t},
    };
    Revolution body;
    body.polygon = poly;

    const double ring = uniform(rng, 0.24, 0.32) * h;
    const double tube = uniform(rng, 0.006, 0.009);
    RigidTransform handle_pose;
    handle_pose.rotation = axis_angle(Vec3(1, 0, 0), M_PI / 2);  // ring in the xz-plane
    handle_pose.translation = Vec3(R + ring * 0.72, 0.0, 0.0);
    return AnalyticShape({PlacedPrimitive{body, RigidTransform::identity()},
                          PlacedPrimitive{Torus{ring, tube}, handle_pose}});
}

}  // namespace detail

inline ShapeFamily generate_family(const ShapeFamilySpec& spec) {
    spec.validate();
    ShapeFamily fam;
    fam.spec = spec;
    Rng rng = seeded_rng(spec.seed, "family:" + spec.category);
    const int n_train = std::max(1, int(spec.train_fraction * spec.count + 0.5));
    for (int i = 0; i < spec.count; ++i) {
        FamilyInstance inst;
        char buf[32];
        std::snprintf(buf, sizeof(buf), "_%03d", i);
        inst.id = spec.category + buf;
        if (spec.category == "bottle-like") inst.shape = detail::make_bottle(rng, spec);
        else if (spec.category == "bowl-like") inst.shape = detail::make_bowl(rng, spec);
        else inst.shape = detail::make_mug(rng, spec);
        // recenter so the stored scale alone normalizes into [-1,1]^3
        const Vec3 center = inst.shape.bounds().center();
        std::vector<PlacedPrimitive> shifted = inst.shape.members();
        for (auto& m : shifted) m.pose.translation -= center;
        inst.shape = AnalyticShape(std::move(shifted));
        const Aabb b = inst.shape.bounds();
        inst.scale = b.extents().cwiseAbs().maxCoeff() / 2.0 * 1.05;  // margin inside [-1,1]^3
        inst.train = i < n_train;
        fam.instances.push_back(std::move(inst));
    }
    return fam;
}

// Training sample set for one instance, in normalized coordinates.
struct SampleSet {
    std::vector<Vec3> surface;      // sdf target 0
    std::vector<Vec3> spatial;      // labeled by the oracle
    std::vector<double> spatial_sdf;
};

inline SampleSet sample_instance(const FamilyInstance& inst, int n_surface, int n_spatial,
                                 Rng& rng) {
    SampleSet out;
    const auto surf_metric = inst.shape.sample_surface(std::size_t(n_surface), rng);
    out.surface.reserve(n_surface);
    for (const Vec3& p : surf_metric) out.surface.push_back(p / inst.scale);

    std::normal_distribution<double> near1(0.0, 0.02), near2(0.0, 0.004);
    out.spatial.reserve(n_spatial);
    out.spatial_sdf.reserve(n_spatial);
    const NormalizedField field{&inst.shape, inst.scale};
    for (int i = 0; i < n_spatial; ++i) {
        Vec3 p;
        const double pick = uniform(rng, 0.0, 1.0);
        if (pick < 0.45) {
            p = out.surface[std::size_t(uniform(rng, 0.0, 1.0) * out.surface.size()) %
                            out.surface.size()] +
                Vec3(near1(rng), near1(rng), near1(rng));
        } else if (pick < 0.9) {
            p = out.surface[std::size_t(uniform(rng, 0.0, 1.0) * out.surface.size()) %
                            out.surface.size()] +
                Vec3(near2(rng), near2(rng), near2(rng));
        } else {
            p = Vec3(uniform(rng, -1.05, 1.05), uniform(rng, -1.05, 1.05),
                     uniform(rng, -1.05, 1.05));
        }
        out.spatial.push_back(p);
        out.spatial_sdf.push_back(field.value(p));
    }
    return out;
}

// Partial view: surface samples culled by a half-space through the centroid,
// standing in for a rendered depth view.
inline PointCloud partial_observation(const FamilyInstance& inst, int n_points, const Vec3& view,
                                      Rng& rng) {
    const Vec3 dir = normalize(view);
    PointCloud pc;
    std::size_t attempts = 0;
    while (pc.points.size() < std::size_t(n_points) && attempts++ < std::size_t(400) * n_points) {
        const Vec3 p = inst.shape.sample_surface(1, rng)[0] / inst.scale;
        if (p.dot(dir) > 0.0) {
            pc.points.push_back(p);
            pc.normals.push_back(normalize(inst.shape.gradient(p * inst.scale)));
        }
    }
    if (pc.points.size() < std::size_t(n_points))
        throw PreconditionError("partial_observation: culling left too few points");
    return pc;
}

}  // namespace gf
