#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include "gf/errors.hpp"

namespace gf {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

constexpr double kNormEps = 1e-12;

inline bool is_finite(const Vec3& v) {
    return std::isfinite(v.x()) && std::isfinite(v.y()) && std::isfinite(v.z());
}

// Unit vector of v. Throws on near-zero input instead of returning garbage.
inline Vec3 normalize(const Vec3& v) {
    const double n = v.norm();
    if (n <= kNormEps) throw DegenerateVectorError("normalize: |v| <= 1e-12");
    return v / n;
}

// Row-major 3x3 rotation. Stored as a plain Mat3; construction via
// from_matrix checks orthonormality and orientation.
class RotationMatrix {
  public:
    RotationMatrix() : m_(Mat3::Identity()) {}

    static RotationMatrix from_matrix(const Mat3& m, double tol = 1e-9) {
        if (((m.transpose() * m) - Mat3::Identity()).cwiseAbs().maxCoeff() > tol)
            throw PreconditionError("RotationMatrix: R^T R != I");
        if (std::abs(m.determinant() - 1.0) > tol)
            throw PreconditionError("RotationMatrix: det(R) != 1");
        RotationMatrix r;
        r.m_ = m;
        return r;
    }

    // Columns are assumed orthonormal by the caller (e.g. built from cross
    // products of unit vectors); skips the validity check.
    static RotationMatrix from_columns(const Vec3& x, const Vec3& y, const Vec3& z) {
        RotationMatrix r;
        r.m_.col(0) = x;
        r.m_.col(1) = y;
        r.m_.col(2) = z;
        return r;
    }

    const Mat3& matrix() const { return m_; }
    Vec3 col(int i) const { return m_.col(i); }
    Vec3 operator*(const Vec3& v) const { return m_ * v; }
    RotationMatrix inverse() const {
        RotationMatrix r;
        r.m_ = m_.transpose();
        return r;
    }
    RotationMatrix operator*(const RotationMatrix& o) const {
        RotationMatrix r;
        r.m_ = m_ * o.m_;
        return r;
    }

    bool is_valid(double tol = 1e-9) const {
        return ((m_.transpose() * m_) - Mat3::Identity()).cwiseAbs().maxCoeff() <= tol &&
               std::abs(m_.determinant() - 1.0) <= tol;
    }

  private:
    Mat3 m_;
};

// Rotation about a unit axis by an angle (Rodrigues).
inline RotationMatrix axis_angle(const Vec3& axis, double angle) {
    const Vec3 a = normalize(axis);
    Mat3 k;
    k << 0, -a.z(), a.y(), a.z(), 0, -a.x(), -a.y(), a.x(), 0;
    const Mat3 m = Mat3::Identity() + std::sin(angle) * k + (1.0 - std::cos(angle)) * (k * k);
    RotationMatrix r = RotationMatrix::from_columns(m.col(0), m.col(1), m.col(2));
    return r;
}

struct RigidTransform {
    RotationMatrix rotation;
    Vec3 translation = Vec3::Zero();

    static RigidTransform identity() { return {}; }

    Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
    Vec3 apply_vector(const Vec3& v) const { return rotation * v; }

    RigidTransform inverse() const {
        RigidTransform t;
        t.rotation = rotation.inverse();
        t.translation = -(t.rotation * translation);
        return t;
    }

    // this ∘ other: applies `other` first.
    RigidTransform compose(const RigidTransform& other) const {
        RigidTransform t;
        t.rotation = rotation * other.rotation;
        t.translation = rotation * other.translation + translation;
        return t;
    }
};

struct PointCloud {
    std::vector<Vec3> points;
    std::vector<Vec3> normals;  // empty, or unit normals matching points

    bool has_normals() const { return !normals.empty(); }

    void validate() const {
        if (!normals.empty() && normals.size() != points.size())
            throw PreconditionError("PointCloud: normals/points cardinality mismatch");
        for (const Vec3& p : points)
            if (!is_finite(p)) throw PreconditionError("PointCloud: non-finite point");
        for (const Vec3& n : normals)
            if (std::abs(n.norm() - 1.0) > 1e-6)
                throw PreconditionError("PointCloud: non-unit normal");
    }
};

struct NearestResult {
    std::size_t index = 0;
    double distance = 0.0;
};

// Static kd-tree over 3D points. Queries reproduce an exhaustive scan
// exactly, including the lowest-index tie break.
class KdTree3 {
  public:
    KdTree3() = default;

    explicit KdTree3(const std::vector<Vec3>& pts) : pts_(pts) {
        if (pts_.empty()) throw EmptyCloudError("KdTree3: empty point set");
        order_.resize(pts_.size());
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        nodes_.reserve(pts_.size());
        root_ = build(0, pts_.size());
    }

    std::size_t size() const { return pts_.size(); }

    NearestResult nearest(const Vec3& q) const {
        if (pts_.empty()) throw EmptyCloudError("KdTree3: empty point set");
        Best best;
        search(root_, q, best);
        return {best.index, std::sqrt(best.d2)};
    }

  private:
    struct Node {
        std::size_t point;     // index into pts_
        int axis;
        int left = -1, right = -1;
    };
    struct Best {
        double d2 = std::numeric_limits<double>::infinity();
        std::size_t index = 0;
        bool found = false;
    };

    int build(std::size_t lo, std::size_t hi) {
        if (lo >= hi) return -1;
        Vec3 mn = pts_[order_[lo]], mx = pts_[order_[lo]];
        for (std::size_t i = lo + 1; i < hi; ++i) {
            mn = mn.cwiseMin(pts_[order_[i]]);
            mx = mx.cwiseMax(pts_[order_[i]]);
        }
        int axis = 0;
        (mx - mn).maxCoeff(&axis);
        const std::size_t mid = (lo + hi) / 2;
        std::nth_element(order_.begin() + lo, order_.begin() + mid, order_.begin() + hi,
                         [&](std::size_t a, std::size_t b) {
                             if (pts_[a][axis] != pts_[b][axis]) return pts_[a][axis] < pts_[b][axis];
                             return a < b;
                         });
        Node n;
        n.point = order_[mid];
        n.axis = axis;
        const int self = static_cast<int>(nodes_.size());
        nodes_.push_back(n);
        const int l = build(lo, mid);
        const int r = build(mid + 1, hi);
        nodes_[self].left = l;
        nodes_[self].right = r;
        return self;
    }

    void consider(std::size_t idx, const Vec3& q, Best& best) const {
        const double d2 = (pts_[idx] - q).squaredNorm();
        if (!best.found || d2 < best.d2 || (d2 == best.d2 && idx < best.index)) {
            best.d2 = d2;
            best.index = idx;
            best.found = true;
        }
    }

    void search(int node, const Vec3& q, Best& best) const {
        if (node < 0) return;
        const Node& n = nodes_[node];
        consider(n.point, q, best);
        const double delta = q[n.axis] - pts_[n.point][n.axis];
        const int near = delta < 0 ? n.left : n.right;
        const int far = delta < 0 ? n.right : n.left;
        search(near, q, best);
        // <= so equal-distance points on the far side still get visited and
        // the lowest-index tie break matches the exhaustive scan.
        if (delta * delta <= best.d2) search(far, q, best);
    }

    std::vector<Vec3> pts_;
    std::vector<std::size_t> order_;
    std::vector<Node> nodes_;
    int root_ = -1;
};

// Exhaustive-scan nearest neighbor; the oracle KdTree3 must reproduce.
inline NearestResult nearest_neighbor_scan(const Vec3& q, const std::vector<Vec3>& pts) {
    if (pts.empty()) throw EmptyCloudError("nearest_neighbor_scan: empty point set");
    NearestResult r{0, std::numeric_limits<double>::infinity()};
    double best_d2 = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double d2 = (pts[i] - q).squaredNorm();
        if (d2 < best_d2) {
            best_d2 = d2;
            r.index = i;
        }
    }
    r.distance = std::sqrt(best_d2);
    return r;
}

inline NearestResult nearest_neighbor(const Vec3& q, const KdTree3& index) {
    return index.nearest(q);
}

}  // namespace gf
