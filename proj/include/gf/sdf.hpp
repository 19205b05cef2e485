#pragma once

#include <cmath>
#include <cstddef>
#include <variant>
#include <vector>

#include "gf/errors.hpp"
#include "gf/geometry.hpp"
#include "gf/random.hpp"

namespace gf {

// Axis-aligned bounding box.
struct Aabb {
    Vec3 min = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 max = Vec3::Constant(-std::numeric_limits<double>::infinity());

    void expand(const Vec3& p) {
        min = min.cwiseMin(p);
        max = max.cwiseMax(p);
    }
    void expand(const Aabb& o) {
        expand(o.min);
        expand(o.max);
    }
    Vec3 extents() const { return max - min; }
    Vec3 center() const { return (min + max) / 2; }
};

namespace detail {
constexpr double kAxisEps = 1e-9;
constexpr double kGradDegenerate = 1e-8;

struct Grad {
    Vec3 g;
    bool degenerate = false;
};
}  // namespace detail

// ---------------------------------------------------------------------------
// Primitives, all in their local frame. Each provides exact signed distance
// (negative inside), gradient (flagged degenerate on medial/feature sets),
// surface area, local bounds, and area-uniform surface sampling.
// ---------------------------------------------------------------------------

struct Sphere {
    double radius;

    double sdf(const Vec3& p) const { return p.norm() - radius; }

    detail::Grad gradient(const Vec3& p) const {
        const double n = p.norm();
        if (n < detail::kGradDegenerate) return {Vec3::UnitX(), true};
        return {p / n, false};
    }

    double area() const { return 4.0 * M_PI * radius * radius; }

    Aabb bounds() const {
        Aabb b;
        b.expand(Vec3::Constant(-radius));
        b.expand(Vec3::Constant(radius));
        return b;
    }

    Vec3 sample_surface(Rng& rng) const { return radius * random_unit_vector(rng); }
};

struct Box {
    Vec3 half_extents;

    double sdf(const Vec3& p) const {
        const Vec3 q = p.cwiseAbs() - half_extents;
        const Vec3 qpos = q.cwiseMax(0.0);
        return std::min(q.maxCoeff(), 0.0) + qpos.norm();
    }

    detail::Grad gradient(const Vec3& p) const {
        const Vec3 q = p.cwiseAbs() - half_extents;
        const Vec3 sgn(p.x() >= 0 ? 1.0 : -1.0, p.y() >= 0 ? 1.0 : -1.0, p.z() >= 0 ? 1.0 : -1.0);
        if (q.maxCoeff() > 0.0) {
            const Vec3 w = q.cwiseMax(0.0);
            const double n = w.norm();
            if (n < detail::kGradDegenerate) return {sgn.cwiseProduct(Vec3::UnitX()), true};
            return {sgn.cwiseProduct(w / n), false};
        }
        int k = 0;
        q.maxCoeff(&k);
        // interior: ambiguous when two faces are equally close
        int near_ties = 0;
        for (int i = 0; i < 3; ++i)
            if (std::abs(q[i] - q[k]) < 1e-12) ++near_ties;
        Vec3 g = Vec3::Zero();
        g[k] = sgn[k];
        return {g, near_ties > 1};
    }

    double area() const {
        const Vec3 e = 2.0 * half_extents;
        return 2.0 * (e.x() * e.y() + e.y() * e.z() + e.z() * e.x());
    }

    Aabb bounds() const {
        Aabb b;
        b.expand(-half_extents);
        b.expand(half_extents);
        return b;
    }

    Vec3 sample_surface(Rng& rng) const {
        const Vec3 e = 2.0 * half_extents;
        const double axy = e.x() * e.y(), ayz = e.y() * e.z(), azx = e.z() * e.x();
        double pick = uniform(rng, 0.0, axy + ayz + azx);
        const double s = uniform(rng, 0.0, 1.0) < 0.5 ? -1.0 : 1.0;
        Vec3 p(uniform(rng, -half_extents.x(), half_extents.x()),
               uniform(rng, -half_extents.y(), half_extents.y()),
               uniform(rng, -half_extents.z(), half_extents.z()));
        if (pick < axy) p.z() = s * half_extents.z();
        else if (pick < axy + ayz) p.x() = s * half_extents.x();
        else p.y() = s * half_extents.y();
        return p;
    }
};

// Capped cylinder, axis aligned with local z.
struct Cylinder {
    double radius;
    double half_height;

    double sdf(const Vec3& p) const {
        const double rho = std::hypot(p.x(), p.y());
        const double dr = rho - radius;
        const double dz = std::abs(p.z()) - half_height;
        return std::min(std::max(dr, dz), 0.0) +
               std::hypot(std::max(dr, 0.0), std::max(dz, 0.0));
    }

    detail::Grad gradient(const Vec3& p) const {
        const double rho = std::hypot(p.x(), p.y());
        const double dr = rho - radius;
        const double dz = std::abs(p.z()) - half_height;
        const double zs = p.z() >= 0 ? 1.0 : -1.0;
        const bool radial_ok = rho > detail::kGradDegenerate;
        const Vec3 rdir = radial_ok ? Vec3(p.x() / rho, p.y() / rho, 0.0) : Vec3::UnitX();
        if (dr > 0.0 && dz > 0.0) {
            const double n = std::hypot(dr, dz);
            return {(dr * rdir + dz * zs * Vec3::UnitZ()) / n, !radial_ok};
        }
        if (dr > 0.0) return {rdir, !radial_ok};
        if (dz > 0.0) return {zs * Vec3::UnitZ(), false};
        // interior
        if (std::abs(dr - dz) < 1e-12) return {zs * Vec3::UnitZ(), true};
        if (dr > dz) return {rdir, !radial_ok};
        return {zs * Vec3::UnitZ(), false};
    }

    double area() const {
        return 2.0 * M_PI * radius * (2.0 * half_height) + 2.0 * M_PI * radius * radius;
    }

    Aabb bounds() const {
        Aabb b;
        b.expand(Vec3(-radius, -radius, -half_height));
        b.expand(Vec3(radius, radius, half_height));
        return b;
    }

    Vec3 sample_surface(Rng& rng) const {
        const double side = 2.0 * M_PI * radius * 2.0 * half_height;
        const double caps = 2.0 * M_PI * radius * radius;
        const double phi = uniform(rng, 0.0, 2.0 * M_PI);
        if (uniform(rng, 0.0, side + caps) < side) {
            return Vec3(radius * std::cos(phi), radius * std::sin(phi),
                        uniform(rng, -half_height, half_height));
        }
        const double r = radius * std::sqrt(uniform(rng, 0.0, 1.0));
        const double z = uniform(rng, 0.0, 1.0) < 0.5 ? -half_height : half_height;
        return Vec3(r * std::cos(phi), r * std::sin(phi), z);
    }
};

// Torus around local z: tube radius `minor` at ring radius `major`.
struct Torus {
    double major;
    double minor;

    double sdf(const Vec3& p) const {
        const double rho = std::hypot(p.x(), p.y());
        return std::hypot(rho - major, p.z()) - minor;
    }

    detail::Grad gradient(const Vec3& p) const {
        const double rho = std::hypot(p.x(), p.y());
        const double qx = rho - major;
        const double qn = std::hypot(qx, p.z());
        if (rho < detail::kGradDegenerate || qn < detail::kGradDegenerate)
            return {Vec3::UnitX(), true};
        const Vec3 rdir(p.x() / rho, p.y() / rho, 0.0);
        return {(qx * rdir + p.z() * Vec3::UnitZ()) / qn, false};
    }

    double area() const { return 4.0 * M_PI * M_PI * major * minor; }

    Aabb bounds() const {
        Aabb b;
        b.expand(Vec3(-(major + minor), -(major + minor), -minor));
        b.expand(Vec3(major + minor, major + minor, minor));
        return b;
    }

    Vec3 sample_surface(Rng& rng) const {
        // density over tube angle is proportional to major + minor*cos(phi)
        while (true) {
            const double phi = uniform(rng, 0.0, 2.0 * M_PI);
            if (uniform(rng, 0.0, major + minor) <= major + minor * std::cos(phi)) {
                const double theta = uniform(rng, 0.0, 2.0 * M_PI);
                const double rho = major + minor * std::cos(phi);
                return Vec3(rho * std::cos(theta), rho * std::sin(theta), minor * std::sin(phi));
            }
        }
    }
};

// Solid of revolution about local z. The meridian cross-section is a closed
// polygon in (rho, z) with rho >= 0; edges lying on the axis are treated as
// interior (not part of the surface). A plain height->radius profile becomes
// the polygon (0,z0),(r0,z0),...,(rn,zn),(0,zn). Because the nearest point of
// a revolved surface always lies in the query's meridian plane, the 2D signed
// polygon distance equals the exact 3D signed distance.
struct Revolution {
    struct P2 {
        double rho, z;
    };
    std::vector<P2> polygon;

    static Revolution from_profile(const std::vector<P2>& profile) {
        Revolution r;
        r.polygon.push_back({0.0, profile.front().z});
        for (const P2& p : profile) r.polygon.push_back(p);
        r.polygon.push_back({0.0, profile.back().z});
        return r;
    }

    bool inside2d(double rho, double z) const {
        // even-odd crossing with ray along +rho
        bool in = false;
        const std::size_t n = polygon.size();
        for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
            const P2& a = polygon[j];
            const P2& b = polygon[i];
            if ((b.z > z) != (a.z > z)) {
                const double x = b.rho + (z - b.z) / (a.z - b.z) * (a.rho - b.rho);
                if (rho < x) in = !in;
            }
        }
        return in;
    }

    // squared distance to segment plus the closest point
    static double seg_dist2(double rho, double z, const P2& a, const P2& b, P2& cp) {
        const double dx = b.rho - a.rho, dz = b.z - a.z;
        const double len2 = dx * dx + dz * dz;
        double t = len2 > 0 ? ((rho - a.rho) * dx + (z - a.z) * dz) / len2 : 0.0;
        t = std::clamp(t, 0.0, 1.0);
        cp = {a.rho + t * dx, a.z + t * dz};
        const double ex = rho - cp.rho, ez = z - cp.z;
        return ex * ex + ez * ez;
    }

    bool edge_on_axis(std::size_t i) const {
        const P2& a = polygon[i];
        const P2& b = polygon[(i + 1) % polygon.size()];
        return a.rho < detail::kAxisEps && b.rho < detail::kAxisEps;
    }

    double sdf(const Vec3& p) const {
        const double rho = std::hypot(p.x(), p.y());
        double best = std::numeric_limits<double>::infinity();
        P2 cp{};
        for (std::size_t i = 0; i < polygon.size(); ++i) {
            if (edge_on_axis(i)) continue;
            P2 c;
            const double d2 = seg_dist2(rho, p.z(), polygon[i], polygon[(i + 1) % polygon.size()], c);
            if (d2 < best) {
                best = d2;
                cp = c;
            }
        }
        const double d = std::sqrt(best);
        return inside2d(rho, p.z()) ? -d : d;
    }

    detail::Grad gradient(const Vec3& p) const {
        const double rho = std::hypot(p.x(), p.y());
        double best = std::numeric_limits<double>::infinity();
        P2 cp{};
        for (std::size_t i = 0; i < polygon.size(); ++i) {
            if (edge_on_axis(i)) continue;
            P2 c;
            const double d2 = seg_dist2(rho, p.z(), polygon[i], polygon[(i + 1) % polygon.size()], c);
            if (d2 < best) {
                best = d2;
                cp = c;
            }
        }
        const double d = std::sqrt(best);
        if (d < detail::kGradDegenerate) return {Vec3::UnitZ(), true};
        const double sign = inside2d(rho, p.z()) ? -1.0 : 1.0;
        const double grho = sign * (rho - cp.rho) / d;
        const double gz = sign * (p.z() - cp.z) / d;
        if (std::abs(grho) > 1e-12 && rho < detail::kGradDegenerate)
            return {gz * Vec3::UnitZ(), true};
        const Vec3 rdir = rho > detail::kGradDegenerate ? Vec3(p.x() / rho, p.y() / rho, 0.0)
                                                        : Vec3::UnitX();
        return {grho * rdir + gz * Vec3::UnitZ(), false};
    }

    double area() const {
        double a = 0.0;
        for (std::size_t i = 0; i < polygon.size(); ++i) {
            if (edge_on_axis(i)) continue;
            const P2& s = polygon[i];
            const P2& e = polygon[(i + 1) % polygon.size()];
            const double len = std::hypot(e.rho - s.rho, e.z - s.z);
            a += 2.0 * M_PI * 0.5 * (s.rho + e.rho) * len;  // Pappus
        }
        return a;
    }

    Aabb bounds() const {
        double rmax = 0.0, zmin = 1e300, zmax = -1e300;
        for (const P2& v : polygon) {
            rmax = std::max(rmax, v.rho);
            zmin = std::min(zmin, v.z);
            zmax = std::max(zmax, v.z);
        }
        Aabb b;
        b.expand(Vec3(-rmax, -rmax, zmin));
        b.expand(Vec3(rmax, rmax, zmax));
        return b;
    }

    Vec3 sample_surface(Rng& rng) const {
        std::vector<double> w;
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < polygon.size(); ++i) {
            if (edge_on_axis(i)) continue;
            const P2& s = polygon[i];
            const P2& e = polygon[(i + 1) % polygon.size()];
            idx.push_back(i);
            w.push_back(0.5 * (s.rho + e.rho) * std::hypot(e.rho - s.rho, e.z - s.z));
        }
        double total = 0.0;
        for (double x : w) total += x;
        while (true) {
            double pick = uniform(rng, 0.0, total);
            std::size_t k = 0;
            while (k + 1 < w.size() && pick >= w[k]) pick -= w[k++];
            const P2& s = polygon[idx[k]];
            const P2& e = polygon[(idx[k] + 1) % polygon.size()];
            const double t = uniform(rng, 0.0, 1.0);
            const double rho = s.rho + t * (e.rho - s.rho);
            // thin out by rho to stay area-uniform along the revolved band
            const double rmax = std::max(s.rho, e.rho);
            if (rmax <= 0.0 || uniform(rng, 0.0, rmax) > rho) continue;
            const double z = s.z + t * (e.z - s.z);
            const double phi = uniform(rng, 0.0, 2.0 * M_PI);
            return Vec3(rho * std::cos(phi), rho * std::sin(phi), z);
        }
    }
};

using Primitive = std::variant<Sphere, Box, Cylinder, Torus, Revolution>;

// One primitive placed in the world; `pose` maps local to world coordinates.
struct PlacedPrimitive {
    Primitive primitive;
    RigidTransform pose;

    double sdf(const Vec3& p) const {
        const Vec3 q = pose.inverse().apply(p);
        return std::visit([&](const auto& prim) { return prim.sdf(q); }, primitive);
    }

    detail::Grad gradient(const Vec3& p) const {
        const Vec3 q = pose.inverse().apply(p);
        detail::Grad g = std::visit([&](const auto& prim) { return prim.gradient(q); }, primitive);
        g.g = pose.rotation * g.g;
        return g;
    }

    double area() const {
        return std::visit([](const auto& prim) { return prim.area(); }, primitive);
    }

    Aabb bounds() const {
        const Aabb lb = std::visit([](const auto& prim) { return prim.bounds(); }, primitive);
        Aabb wb;
        for (int i = 0; i < 8; ++i) {
            const Vec3 c(i & 1 ? lb.max.x() : lb.min.x(), i & 2 ? lb.max.y() : lb.min.y(),
                         i & 4 ? lb.max.z() : lb.min.z());
            wb.expand(pose.apply(c));
        }
        return wb;
    }

    Vec3 sample_surface(Rng& rng) const {
        const Vec3 q =
            std::visit([&](const auto& prim) { return prim.sample_surface(rng); }, primitive);
        return pose.apply(q);
    }
};

// Union of placed primitives (a single primitive is a one-member union).
// Exact signed distance for isolated members; the usual min-combination
// lower bound across overlaps.
class AnalyticShape {
  public:
    AnalyticShape() = default;
    explicit AnalyticShape(std::vector<PlacedPrimitive> members) : members_(std::move(members)) {}

    static AnalyticShape make(Primitive prim, RigidTransform pose = RigidTransform::identity()) {
        return AnalyticShape({PlacedPrimitive{std::move(prim), pose}});
    }

    const std::vector<PlacedPrimitive>& members() const { return members_; }

    double value(const Vec3& p) const {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& m : members_) best = std::min(best, m.sdf(p));
        return best;
    }

    // Gradient of the active (minimum) member; falls back to jittered central
    // differences on degenerate configurations (medial axis, member ties).
    Vec3 gradient(const Vec3& p) const {
        std::size_t k = 0;
        double best = std::numeric_limits<double>::infinity(), second = best;
        for (std::size_t i = 0; i < members_.size(); ++i) {
            const double d = members_[i].sdf(p);
            if (d < best) {
                second = best;
                best = d;
                k = i;
            } else {
                second = std::min(second, d);
            }
        }
        if (members_.size() > 1 && second - best < 1e-12) return gradient_fd(p, 1e-5, true);
        const detail::Grad g = members_[k].gradient(p);
        if (g.degenerate || g.g.norm() < detail::kGradDegenerate)
            return gradient_fd(p, 1e-5, true);
        return g.g;
    }

    Vec3 gradient_fd(const Vec3& p, double h = 1e-5, bool jitter = false) const {
        Vec3 q = p;
        if (jitter) q += Vec3(3e-9, -2e-9, 1e-9);
        Vec3 g;
        for (int i = 0; i < 3; ++i) {
            Vec3 a = q, b = q;
            a[i] += h;
            b[i] -= h;
            g[i] = (value(a) - value(b)) / (2.0 * h);
        }
        return g;
    }

    double area() const {
        double a = 0.0;
        for (const auto& m : members_) a += m.area();
        return a;
    }

    Aabb bounds() const {
        Aabb b;
        for (const auto& m : members_) b.expand(m.bounds());
        return b;
    }

    // Area-weighted surface samples of the union; samples inside another
    // member are rejected.
    std::vector<Vec3> sample_surface(std::size_t n, Rng& rng) const {
        std::vector<double> areas;
        double total = 0.0;
        for (const auto& m : members_) {
            areas.push_back(m.area());
            total += areas.back();
        }
        std::vector<Vec3> out;
        out.reserve(n);
        std::size_t attempts = 0;
        const std::size_t max_attempts = 200 * n + 1000;
        while (out.size() < n && attempts++ < max_attempts) {
            double pick = uniform(rng, 0.0, total);
            std::size_t k = 0;
            while (k + 1 < members_.size() && pick >= areas[k]) pick -= areas[k++];
            const Vec3 p = members_[k].sample_surface(rng);
            if (members_.size() > 1 && value(p) < -1e-9) continue;
            out.push_back(p);
        }
        if (out.size() < n) throw PreconditionError("sample_surface: rejection budget exhausted");
        return out;
    }

  private:
    std::vector<PlacedPrimitive> members_;
};

// sdf_eval / sdf_gradient named per the shared field interface: any type with
// value()/gradient() is a field.
template <class Field>
double sdf_eval(const Field& f, const Vec3& p) {
    return f.value(p);
}

template <class Field>
Vec3 sdf_gradient(const Field& f, const Vec3& p) {
    return f.gradient(p);
}

// Central-difference gradient for any field; the standard test oracle.
template <class Field>
Vec3 fd_gradient(const Field& f, const Vec3& p, double h = 1e-5) {
    Vec3 g;
    for (int i = 0; i < 3; ++i) {
        Vec3 a = p, b = p;
        a[i] += h;
        b[i] -= h;
        g[i] = (f.value(a) - f.value(b)) / (2.0 * h);
    }
    return g;
}

// Newton projection of a point onto the zero level set along the gradient.
template <class Field>
Vec3 project_to_surface(const Field& f, Vec3 p, int iters = 4) {
    for (int i = 0; i < iters; ++i) {
        const double d = f.value(p);
        const Vec3 g = f.gradient(p);
        const double g2 = g.squaredNorm();
        if (g2 < 1e-16) break;
        p -= d * g / g2;
    }
    return p;
}

}  // namespace gf
