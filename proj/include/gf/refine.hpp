#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "gf/errors.hpp"
#include "gf/geometry.hpp"
#include "gf/gripper.hpp"
#include "gf/mlp.hpp"

namespace gf {

// Loss weights follow the paper's defaults. The optimizer settings of the
// stock config are intentionally conservative; pipeline runs use tuned(),
// whose values were calibrated on the perturbation benchmarks (see README).
struct RefineConfig {
    double lambda_anti = 100.0;
    double lambda_collision = 10.0;
    double lambda_touch = 20.0;
    double lambda_reg = 200.0;
    int iterations = 10;
    double lr = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    bool renormalize_v = true;
    // Return the final iterate when it improves on the start, otherwise the
    // best recorded iterate (the start included). Guarantees the endpoint
    // never scores worse than the input.
    bool keep_best = true;

    static RefineConfig tuned() {
        RefineConfig c;
        c.lambda_anti = 10.0;
        c.lambda_reg = 0.05;
        c.lr = 0.0025;
        c.adam_eps = 0.3;
        c.beta1 = 0.7;
        return c;
    }
};

struct Normals {
    Vec3 n1, n2;  // inward unit normals
};

struct LossTerms {
    double anti = 0.0;
    double collision = 0.0;
    double touch = 0.0;
    double reg = 0.0;
};

struct RefineState {
    GraspPose current;
    GraspPose initial;
    Vec3 dp1 = Vec3::Zero(), dp2 = Vec3::Zero(), dv = Vec3::Zero();
    double dd = 0.0;
    // rows: iteration, anti, collision, touch, reg, total
    std::vector<std::array<double, 6>> trace;
    bool failed = false;
    int best_iteration = 0;
};

// Inward normals from the field gradient: n = -grad/|grad|.
template <class Field>
Normals contact_normals(const Field& field, const Vec3& p1, const Vec3& p2) {
    const Vec3 g1 = field.gradient(p1);
    const Vec3 g2 = field.gradient(p2);
    if (g1.norm() < 1e-8 || g2.norm() < 1e-8)
        throw DegenerateNormalError("contact_normals: vanishing gradient");
    return {-g1.normalized(), -g2.normalized()};
}

inline double antipodal_loss(const Vec3& p1, const Vec3& p2, const Normals& n) {
    const Vec3 u = p2 - p1;
    if (u.norm() <= kNormEps) throw DegenerateContactsError("antipodal_loss: coincident contacts");
    const Vec3 uh = u / u.norm();
    return -uh.dot(n.n1) - (-uh).dot(n.n2);
}

inline double touch_loss(double sdf1, double sdf2) { return std::abs(sdf1) + std::abs(sdf2); }

inline double collision_loss(const std::vector<double>& gripper_sdfs) {
    if (gripper_sdfs.empty()) throw PreconditionError("collision_loss: empty sample list");
    double acc = 0.0;
    for (double s : gripper_sdfs) acc += std::min(0.0, s);
    return -acc / double(gripper_sdfs.size());
}

inline double reg_loss(const RefineState& st) {
    return st.dp1.norm() + st.dp2.norm() + std::abs(st.dd) + st.dv.norm();
}

inline double total_loss(const LossTerms& t, const RefineConfig& cfg) {
    return cfg.lambda_anti * t.anti + cfg.lambda_collision * t.collision +
           cfg.lambda_touch * t.touch + cfg.lambda_reg * t.reg;
}

// ---------------------------------------------------------------------------
// Analytic gradient of the refinement objective with respect to the 10-dim
// pose parameters (p1, p2, d, v), normals held fixed. The gripper-sample
// chain runs through the closed-form frame construction; its Jacobian is
// assembled below and finite differences stay as the test oracle.
// ---------------------------------------------------------------------------

namespace detail {

inline Mat3 skew(const Vec3& w) {
    Mat3 m;
    m << 0, -w.z(), w.y(), w.z(), 0, -w.x(), -w.y(), w.x(), 0;
    return m;
}

// Jacobians of the frame axes and translation wrt theta = (p1, p2, d, v).
struct FrameJacobian {
    Vec3 x, y, z, t;                       // frame values
    Eigen::Matrix<double, 3, 10> Jx, Jy, Jz, Jt;
};

inline FrameJacobian frame_jacobian(const GraspPose& g) {
    FrameJacobian out;
    const Vec3 u = g.p2 - g.p1;
    const double nu = u.norm();
    if (nu <= kNormEps) throw DegenerateContactsError("frame_jacobian: coincident contacts");
    const Vec3 y = u / nu;
    const Vec3 c = y.cross(g.v);
    if (c.norm() < 1e-4) throw DegenerateApproachError("frame_jacobian: v parallel to contacts");
    const Vec3 x = c / c.norm();
    const Vec3 z = x.cross(y);

    const Mat3 I = Mat3::Identity();
    const Mat3 dy_du = (I - y * y.transpose()) / nu;
    Eigen::Matrix<double, 3, 10> Jy = Eigen::Matrix<double, 3, 10>::Zero();
    Jy.block<3, 3>(0, 0) = -dy_du;
    Jy.block<3, 3>(0, 3) = dy_du;

    const Mat3 dc_dy = -skew(g.v);
    const Mat3 dc_dv = skew(y);
    const Mat3 dx_dc = (I - x * x.transpose()) / c.norm();
    Eigen::Matrix<double, 3, 10> Jc = dc_dy * Jy;
    Jc.block<3, 3>(0, 7) += dc_dv;
    const Eigen::Matrix<double, 3, 10> Jx = dx_dc * Jc;

    const Eigen::Matrix<double, 3, 10> Jz = -skew(y) * Jx + skew(x) * Jy;

    Eigen::Matrix<double, 3, 10> Jt = Eigen::Matrix<double, 3, 10>::Zero();
    Jt.block<3, 3>(0, 0) = 0.5 * I;
    Jt.block<3, 3>(0, 3) = 0.5 * I;
    Jt -= g.d * Jz;
    Jt.col(6) -= z;

    out.x = x;
    out.y = y;
    out.z = z;
    out.t = (g.p1 + g.p2) / 2 - z * g.d;
    out.Jx = Jx;
    out.Jy = Jy;
    out.Jz = Jz;
    out.Jt = Jt;
    return out;
}

}  // namespace detail

using PoseVec = Eigen::Matrix<double, 10, 1>;

inline PoseVec pose_to_vec(const GraspPose& g) {
    PoseVec th;
    th << g.p1, g.p2, g.d, g.v;
    return th;
}

inline GraspPose vec_to_pose(const PoseVec& th) {
    GraspPose g;
    g.p1 = th.segment<3>(0);
    g.p2 = th.segment<3>(3);
    g.d = th[6];
    g.v = th.segment<3>(7);
    return g;
}

struct LossEvaluation {
    LossTerms terms;
    double total = 0.0;
    PoseVec gradient = PoseVec::Zero();
};

// Loss terms, weighted total, and its analytic gradient at pose `g`, with
// offsets measured against `initial` and the given frozen normals.
template <class Field>
LossEvaluation refine_loss(const Field& field, const GripperModel& gripper, const GraspPose& g,
                           const GraspPose& initial, const Normals& n, const RefineConfig& cfg,
                           bool want_gradient = true) {
    LossEvaluation out;
    const Vec3 u = g.p2 - g.p1;
    if (u.norm() <= kNormEps) throw DegenerateContactsError("refine_loss: coincident contacts");
    const Vec3 uh = u / u.norm();

    out.terms.anti = -uh.dot(n.n1) + uh.dot(n.n2);

    const double s1 = field.value(g.p1);
    const double s2 = field.value(g.p2);
    out.terms.touch = std::abs(s1) + std::abs(s2);

    const detail::FrameJacobian fj = detail::frame_jacobian(g);
    const std::size_t N = gripper.surface_points.size();
    double coll = 0.0;
    PoseVec g_coll = PoseVec::Zero();
    for (const Vec3& s : gripper.surface_points) {
        const Vec3 w = fj.x * s.x() + fj.y * s.y() + fj.z * s.z() + fj.t;
        const double f = field.value(w);
        if (f < 0.0) {
            coll -= f;
            if (want_gradient) {
                const Vec3 gw = field.gradient(w);
                g_coll -= (gw.transpose() *
                           (fj.Jx * s.x() + fj.Jy * s.y() + fj.Jz * s.z() + fj.Jt))
                              .transpose();
            }
        }
    }
    out.terms.collision = coll / double(N);

    const Vec3 dp1 = g.p1 - initial.p1;
    const Vec3 dp2 = g.p2 - initial.p2;
    const double dd = g.d - initial.d;
    const Vec3 dv = g.v - initial.v;
    out.terms.reg = dp1.norm() + dp2.norm() + std::abs(dd) + dv.norm();

    out.total = total_loss(out.terms, cfg);
    if (!want_gradient) return out;

    PoseVec grad = PoseVec::Zero();

    // antipodal: d/du (u^T n / |u|) = (I - uh uh^T) n / |u|
    const Mat3 P = (Mat3::Identity() - uh * uh.transpose()) / u.norm();
    const Vec3 danti_du = -P * n.n1 + P * n.n2;
    grad.segment<3>(0) += cfg.lambda_anti * (-danti_du);
    grad.segment<3>(3) += cfg.lambda_anti * danti_du;

    // touch: sign(f) * grad f, contacts only
    if (s1 != 0.0) grad.segment<3>(0) += cfg.lambda_touch * (s1 > 0 ? 1.0 : -1.0) * field.gradient(g.p1);
    if (s2 != 0.0) grad.segment<3>(3) += cfg.lambda_touch * (s2 > 0 ? 1.0 : -1.0) * field.gradient(g.p2);

    // collision through the frame chain
    grad += cfg.lambda_collision * g_coll / double(N);

    // regularization subgradient (zero at the kink)
    if (dp1.norm() > 1e-15) grad.segment<3>(0) += cfg.lambda_reg * dp1.normalized();
    if (dp2.norm() > 1e-15) grad.segment<3>(3) += cfg.lambda_reg * dp2.normalized();
    if (dd != 0.0) grad[6] += cfg.lambda_reg * (dd > 0 ? 1.0 : -1.0);
    if (dv.norm() > 1e-15) grad.segment<3>(7) += cfg.lambda_reg * dv.normalized();

    out.gradient = grad;
    return out;
}

// Iterative pose refinement: Adam on the 10-dim parameter vector, normals
// re-evaluated at the current contacts each iteration, v renormalized after
// each step. Model/field state is read-only throughout.
template <class Field>
std::pair<GraspPose, RefineState> refine_grasp(const GraspPose& g_t, const Field& field,
                                               const GripperModel& gripper,
                                               const RefineConfig& cfg) {
    RefineState st;
    st.initial = g_t;
    st.current = g_t;

    PoseVec th = pose_to_vec(g_t);
    VecXr params = th.cast<real>();
    AdamState adam = AdamState::for_size(10, cfg.lr, cfg.beta1, cfg.beta2, cfg.adam_eps);

    auto evaluate = [&](const GraspPose& g, bool want_grad) {
        const Normals n = contact_normals(field, g.p1, g.p2);
        return refine_loss(field, gripper, g, st.initial, n, cfg, want_grad);
    };

    double best_total;
    GraspPose best = g_t;
    int best_iter = 0;
    try {
        const LossEvaluation e0 = evaluate(g_t, false);
        if (!std::isfinite(e0.total)) throw NonFiniteGradientError("refine: non-finite loss");
        best_total = e0.total;
        st.trace.push_back({0.0, e0.terms.anti, e0.terms.collision, e0.terms.touch, e0.terms.reg,
                            e0.total});
    } catch (const Error&) {
        st.failed = true;
        return {g_t, st};
    }

    for (int it = 1; it <= cfg.iterations; ++it) {
        GraspPose g = vec_to_pose(th);
        LossEvaluation e;
        try {
            e = evaluate(g, true);
        } catch (const Error&) {
            st.failed = true;
            break;
        }
        VecXr grad = e.gradient.cast<real>();
        try {
            adam_step(params, grad, adam);
        } catch (const NonFiniteGradientError&) {
            st.failed = true;
            break;
        }
        th = params.cast<double>();
        if (cfg.renormalize_v) {
            const double nv = th.segment<3>(7).norm();
            if (nv > kNormEps) th.segment<3>(7) /= nv;
            params = th.cast<real>();
        }

        GraspPose g_new = vec_to_pose(th);
        try {
            const LossEvaluation en = evaluate(g_new, false);
            if (!std::isfinite(en.total)) throw NonFiniteGradientError("refine: non-finite loss");
            st.trace.push_back({double(it), en.terms.anti, en.terms.collision, en.terms.touch,
                                en.terms.reg, en.total});
            if (en.total < best_total) {
                best_total = en.total;
                best = g_new;
                best_iter = it;
            }
        } catch (const Error&) {
            st.failed = true;
            break;
        }
    }

    const GraspPose last = vec_to_pose(th);
    const double last_total = st.trace.back().back();
    const double init_total = st.trace.front().back();
    if (!cfg.keep_best) {
        st.current = last;
        st.best_iteration = int(st.trace.size()) - 1;
    } else if (!st.failed && last_total <= init_total) {
        st.current = last;
        st.best_iteration = int(st.trace.size()) - 1;
    } else {
        st.current = best;
        st.best_iteration = best_iter;
    }
    st.dp1 = st.current.p1 - st.initial.p1;
    st.dp2 = st.current.p2 - st.initial.p2;
    st.dd = st.current.d - st.initial.d;
    st.dv = st.current.v - st.initial.v;
    return {st.current, st};
}

}  // namespace gf
