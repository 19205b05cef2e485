#pragma once

// shared helpers for unit and acceptance tests

#include "gf/family.hpp"
#include "gf/gripper.hpp"
#include "gf/refine.hpp"
#include "gf/sdf.hpp"

namespace gf::testsupport {

struct RoundTripCase {
    AnalyticShape shape;
    GraspPose grasp;
};

// Random valid grasps whose contact chord the Alg.-1 sweep can recover: a
// diametral chord on a sphere, or a diametral side grasp on a cylinder
// approached in the radial plane. Local radius kept inside the finger cage.
inline RoundTripCase make_round_trip_case(const GripperModel& gripper, Rng& rng) {
    RoundTripCase out;
    const double r = uniform(rng, 0.010, 0.018);
    const double margin = r + 0.004;
    if (uniform(rng, 0, 1) < 0.5) {
        RigidTransform pose;
        pose.rotation = axis_angle(random_unit_vector(rng), uniform(rng, -3, 3));
        pose.translation = 0.1 * random_unit_vector(rng);
        out.shape = AnalyticShape::make(Sphere{r}, pose);
        const Vec3 axis = random_unit_vector(rng);
        out.grasp.p1 = pose.translation - r * axis;
        out.grasp.p2 = pose.translation + r * axis;
        out.grasp.v = random_orthogonal_unit(rng, axis);
    } else {
        RigidTransform pose;
        pose.rotation = axis_angle(random_unit_vector(rng), uniform(rng, -3, 3));
        pose.translation = 0.1 * random_unit_vector(rng);
        const double hl = 0.06;
        out.shape = AnalyticShape::make(Cylinder{r, hl}, pose);
        const Vec3 axis = pose.rotation.col(2);
        const double u = uniform(rng, -hl * 0.6, hl * 0.6);
        const Vec3 center = pose.translation + u * axis;
        const double phi = uniform(rng, 0, 2 * M_PI);
        const Vec3 e1 = pose.rotation.col(0), e2 = pose.rotation.col(1);
        const Vec3 chord = std::cos(phi) * e1 + std::sin(phi) * e2;
        out.grasp.p1 = center - r * chord;
        out.grasp.p2 = center + r * chord;
        // approach in the radial plane so both sweeps stop symmetrically
        out.grasp.v = axis.cross(chord).normalized() * (uniform(rng, 0, 1) < 0.5 ? 1.0 : -1.0);
    }
    out.grasp.d = uniform(rng, margin, gripper.finger_length - margin);
    return out;
}

// Pose jitter plus outward contact lift, the perturbation used by the
// refinement benchmarks.
inline GraspPose jitter_and_lift(const GraspPose& g, const AnalyticShape& shape, Rng& rng,
                                 double max_lift, double max_jitter_deg) {
    GraspPose out = g;
    const Vec3 mid = (g.p1 + g.p2) / 2;
    const RotationMatrix R =
        axis_angle(random_unit_vector(rng), uniform(rng, 0.0, max_jitter_deg * M_PI / 180));
    out.p1 = R * (g.p1 - mid) + mid;
    out.p2 = R * (g.p2 - mid) + mid;
    out.v = (R * g.v).normalized();
    out.p1 += uniform(rng, 0.0, max_lift) * shape.gradient(out.p1);
    out.p2 += uniform(rng, 0.0, max_lift) * shape.gradient(out.p2);
    return out;
}

inline double rotation_angle(const Mat3& a, const Mat3& b) {
    const Mat3 r = a.transpose() * b;
    return std::acos(std::clamp((r.trace() - 1.0) / 2.0, -1.0, 1.0));
}

}  // namespace gf::testsupport
