#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "gf/errors.hpp"
#include "gf/geometry.hpp"
#include "gf/random.hpp"
#include "gf/sdf.hpp"

namespace gf {

// Surface-contact grasp: two contact points, approach depth from the gripper
// origin to the contact line, and the approach direction.
struct GraspPose {
    Vec3 p1 = Vec3::Zero();
    Vec3 p2 = Vec3::Zero();
    double d = 0.0;
    Vec3 v = Vec3::UnitZ();

    double width() const { return (p2 - p1).norm(); }
};

// Parallel-jaw gripper in its own frame: origin O at the palm center, fingers
// extend along +z with the closing axis along y. A-B is the rung across the
// gap at the fingertip plane, D-C the rung at the palm plane; the conversion
// search lines sweep between them.
struct GripperModel {
    Vec3 origin = Vec3::Zero();
    Vec3 corner_a, corner_b, corner_c, corner_d;
    double max_width = 0.08;
    double finger_length = 0.045;
    std::vector<Vec3> surface_points;

    static GripperModel make_default(int n_samples = 256) {
        GripperModel g;
        g.max_width = 0.08;
        g.finger_length = 0.045;
        const double w2 = g.max_width / 2;
        g.corner_a = Vec3(0, -w2, g.finger_length);
        g.corner_b = Vec3(0, w2, g.finger_length);
        g.corner_c = Vec3(0, w2, 0);
        g.corner_d = Vec3(0, -w2, 0);

        // finger and palm slabs carrying the collision sample points
        const double ft = 0.007;   // finger thickness along y
        const double fx = 0.009;   // finger extent along x
        const double palm_depth = 0.02;
        struct Slab {
            Vec3 lo, hi;
        };
        const std::vector<Slab> slabs = {
            {{-fx / 2, -w2 - ft, 0.0}, {fx / 2, -w2, g.finger_length}},
            {{-fx / 2, w2, 0.0}, {fx / 2, w2 + ft, g.finger_length}},
            {{-fx / 2, -w2 - ft, -palm_depth}, {fx / 2, w2 + ft, 0.0}},
        };
        Rng rng = seeded_rng(0x5a17, "gripper-samples");
        std::vector<double> areas;
        double total = 0.0;
        for (const Slab& s : slabs) {
            const Vec3 e = s.hi - s.lo;
            areas.push_back(2.0 * (e.x() * e.y() + e.y() * e.z() + e.z() * e.x()));
            total += areas.back();
        }
        while (int(g.surface_points.size()) < n_samples) {
            double pick = uniform(rng, 0.0, total);
            std::size_t k = 0;
            while (k + 1 < slabs.size() && pick >= areas[k]) pick -= areas[k++];
            const Slab& s = slabs[k];
            const Vec3 e = s.hi - s.lo;
            Vec3 p(uniform(rng, s.lo.x(), s.hi.x()), uniform(rng, s.lo.y(), s.hi.y()),
                   uniform(rng, s.lo.z(), s.hi.z()));
            const double axy = e.x() * e.y(), ayz = e.y() * e.z(), azx = e.z() * e.x();
            double f = uniform(rng, 0.0, axy + ayz + azx);
            const bool high = uniform(rng, 0.0, 1.0) < 0.5;
            if (f < axy) p.z() = high ? s.hi.z() : s.lo.z();
            else if (f < axy + ayz) p.x() = high ? s.hi.x() : s.lo.x();
            else p.y() = high ? s.hi.y() : s.lo.y();
            g.surface_points.push_back(p);
        }
        return g;
    }
};

struct GraspMatrix {
    RigidTransform pose;
    double width = 0.0;
};

// Closed-form conversion g -> [R, t]: y along the contact line, x from the
// approach vector, z completing the frame, origin set back by the depth.
inline GraspMatrix matrix_from_grasp(const GraspPose& g) {
    const Vec3 u = g.p2 - g.p1;
    if (u.norm() <= kNormEps) throw DegenerateContactsError("matrix_from_grasp: p1 == p2");
    const Vec3 y = u / u.norm();
    const Vec3 c = y.cross(g.v);
    if (c.norm() < 1e-4) throw DegenerateApproachError("matrix_from_grasp: v parallel to p2-p1");
    const Vec3 x = c / c.norm();
    const Vec3 z = x.cross(y);
    GraspMatrix m;
    m.pose.rotation = RotationMatrix::from_columns(x, y, z);
    m.pose.translation = (g.p1 + g.p2) / 2 - z * g.d;
    m.width = u.norm();
    return m;
}

inline std::vector<Vec3> sample_gripper_points(const GripperModel& gripper, const GraspMatrix& m) {
    std::vector<Vec3> out;
    out.reserve(gripper.surface_points.size());
    for (const Vec3& p : gripper.surface_points) out.push_back(m.pose.apply(p));
    return out;
}

namespace detail {

constexpr double kContactThreshold = 2e-3;
constexpr int kContactProbes = 64;
constexpr int kMarchSteps = 100;

template <class Field>
bool is_contact(const Field& f, const Vec3& e, const Vec3& fpt) {
    for (int i = 0; i < kContactProbes; ++i) {
        const double t = double(i) / (kContactProbes - 1);
        if (f.value(e + t * (fpt - e)) < kContactThreshold) return true;
    }
    return false;
}

template <class Field>
double bisect_root(const Field& f, const Vec3& a, const Vec3& b) {
    double lo = 0.0, hi = 1.0;
    double flo = f.value(a);
    for (int it = 0; it < 60; ++it) {
        const double mid = (lo + hi) / 2;
        const double fm = f.value(a + mid * (b - a));
        if ((fm < 0) == (flo < 0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return (lo + hi) / 2;
}

}  // namespace detail

// Conversion [R, t] -> g: two rungs march toward each other from the
// fingertip and palm planes, each stopping at first object contact; the
// grasp points are where their mid-line crosses the surface.
template <class Field>
GraspPose grasp_from_matrix(const GraspMatrix& m, const Field& field,
                            const GripperModel& gripper) {
    const Vec3 A = m.pose.apply(gripper.corner_a);
    const Vec3 B = m.pose.apply(gripper.corner_b);
    const Vec3 C = m.pose.apply(gripper.corner_c);
    const Vec3 D = m.pose.apply(gripper.corner_d);
    const Vec3 O = m.pose.apply(gripper.origin);

    Vec3 e1, f1, e2, f2;
    bool hit = false;
    for (int i = 0; i <= detail::kMarchSteps; ++i) {
        e1 = (A * (detail::kMarchSteps - i) + D * i) / detail::kMarchSteps;
        f1 = (B * (detail::kMarchSteps - i) + C * i) / detail::kMarchSteps;
        if (detail::is_contact(field, e1, f1)) {
            hit = true;
            break;
        }
    }
    if (!hit) throw NoContactError("grasp_from_matrix: tip-side sweep found no contact");
    hit = false;
    for (int i = 0; i <= detail::kMarchSteps; ++i) {
        e2 = (D * (detail::kMarchSteps - i) + A * i) / detail::kMarchSteps;
        f2 = (C * (detail::kMarchSteps - i) + B * i) / detail::kMarchSteps;
        if (detail::is_contact(field, e2, f2)) {
            hit = true;
            break;
        }
    }
    if (!hit) throw NoContactError("grasp_from_matrix: palm-side sweep found no contact");

    const Vec3 pe = (e1 + e2) / 2;
    const Vec3 pf = (f1 + f2) / 2;

    // surface crossings along the projection segment; keep the outermost two
    const int n_scan = 200;
    std::vector<double> roots;
    double prev = field.value(pe);
    for (int i = 1; i <= n_scan; ++i) {
        const double t = double(i) / n_scan;
        const double cur = field.value(pe + t * (pf - pe));
        if ((cur < 0) != (prev < 0)) {
            const double t0 = double(i - 1) / n_scan;
            const Vec3 a = pe + t0 * (pf - pe);
            const Vec3 b = pe + t * (pf - pe);
            roots.push_back(t0 + detail::bisect_root(field, a, b) * (t - t0));
        }
        prev = cur;
    }
    if (roots.size() < 2)
        throw NoGraspPointsError("grasp_from_matrix: projection line has fewer than two crossings");

    GraspPose g;
    g.p1 = pe + roots.front() * (pf - pe);
    g.p2 = pe + roots.back() * (pf - pe);
    g.v = m.pose.rotation.col(2);
    const Vec3 dir = normalize(pf - pe);
    const Vec3 rel = O - pe;
    g.d = (rel - dir * dir.dot(rel)).norm();
    return g;
}

// Analytic antipodal authoring on an exact field: contact pairs found by
// casting the inward normal ray through the solid, then filtered to satisfy
// the same conditions a grasp evaluation checks.
struct AuthoredGrasps {
    std::vector<GraspPose> grasps;
    bool warning = false;  // fewer than requested after the attempt budget
};

template <class Field>
AuthoredGrasps author_source_grasps(const Field& shape, const GripperModel& gripper, int count,
                                    std::uint64_t seed, double antipodal_deg = 10.0) {
    AuthoredGrasps out;
    Rng rng = seeded_rng(seed, "author-grasps");
    const double cos_tol = std::cos(antipodal_deg * M_PI / 180.0);
    std::size_t attempts = 0;
    const std::size_t budget = std::size_t(800) * count + 2000;

    while (int(out.grasps.size()) < count && attempts++ < budget) {
        const Vec3 p1 = shape.sample_surface(std::size_t(1), rng)[0];
        Vec3 grad1 = shape.gradient(p1);
        if (grad1.norm() < 1e-8) continue;
        const Vec3 n1 = -grad1.normalized();

        // march along the inward normal to find the exit crossing
        const double step = gripper.max_width / 128.0;
        double t_lo = 1e-4, t_hi = -1.0;
        double prev = shape.value(p1 + t_lo * n1);
        if (prev > 0) continue;  // grazing start
        for (double t = t_lo + step; t <= gripper.max_width * 1.2; t += step) {
            const double cur = shape.value(p1 + t * n1);
            if (cur >= 0) {
                t_hi = t;
                break;
            }
            t_lo = t;
        }
        if (t_hi < 0) continue;
        double lo = t_lo, hi = t_hi;
        for (int it = 0; it < 50; ++it) {
            const double mid = (lo + hi) / 2;
            if (shape.value(p1 + mid * n1) < 0) lo = mid;
            else hi = mid;
        }
        const Vec3 p2 = p1 + ((lo + hi) / 2) * n1;

        const double width = (p2 - p1).norm();
        if (width > gripper.max_width || width < 1e-3) continue;
        const Vec3 grad2 = shape.gradient(p2);
        if (grad2.norm() < 1e-8) continue;
        const Vec3 n2 = -grad2.normalized();
        const Vec3 u = (p2 - p1).normalized();
        if (u.dot(n1) < cos_tol || (-u).dot(n2) < cos_tol) continue;

        // a few tries for a collision-free approach
        for (int attempt = 0; attempt < 4; ++attempt) {
            GraspPose g;
            g.p1 = p1;
            g.p2 = p2;
            g.v = random_orthogonal_unit(rng, p2 - p1);
            g.d = uniform(rng, 0.15, 0.85) * gripper.finger_length;
            GraspMatrix mat;
            try {
                mat = matrix_from_grasp(g);
            } catch (const Error&) {
                continue;
            }
            double min_sdf = std::numeric_limits<double>::infinity();
            for (const Vec3& s : sample_gripper_points(gripper, mat))
                min_sdf = std::min(min_sdf, shape.value(s));
            if (min_sdf <= detail::kContactThreshold) continue;  // margin above eval's bound
            out.grasps.push_back(g);
            break;
        }
    }
    out.warning = int(out.grasps.size()) < count;
    return out;
}

}  // namespace gf
