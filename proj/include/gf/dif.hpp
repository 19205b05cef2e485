#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "gf/errors.hpp"
#include "gf/family.hpp"
#include "gf/geometry.hpp"
#include "gf/marching_cubes.hpp"
#include "gf/mlp.hpp"
#include "gf/random.hpp"

namespace gf {

// Latent code of one instance in the learned category shape space, plus the
// metric scale that maps normalized coordinates back to meters.
struct ShapeCode {
    VecXr z;
    std::string instance_id;
    double scale = 1.0;
};

struct DifConfig {
    int latent_dim = 32;
    int hidden_width = 128;
    int hidden_depth = 5;
    double sine_w0 = 30.0;
    std::uint64_t seed = 0;
};

// Template-Net (points -> category SDF) plus Deform-Net (code, point ->
// offset into template space). The instance field is template(p + deform).
class DifModel {
  public:
    Mlp template_net;  // 3 -> 1
    Mlp deform_net;    // latent_dim + 3 -> 3
    int latent_dim = 32;
    std::string category;
    std::map<std::string, ShapeCode> latent_table;

    static DifModel make(const DifConfig& cfg, std::string category) {
        DifModel m;
        m.latent_dim = cfg.latent_dim;
        m.category = std::move(category);
        std::vector<int> tw{3};
        std::vector<int> dw{cfg.latent_dim + 3};
        for (int i = 0; i < cfg.hidden_depth; ++i) {
            tw.push_back(cfg.hidden_width);
            dw.push_back(cfg.hidden_width);
        }
        tw.push_back(1);
        dw.push_back(3);
        Rng rt = seeded_rng(cfg.seed, "template-net");
        Rng rd = seeded_rng(cfg.seed, "deform-net");
        m.template_net = Mlp::make(tw, Activation::Sine, rt, cfg.sine_w0);
        m.deform_net = Mlp::make(dw, Activation::Sine, rd, cfg.sine_w0);
        m.deform_net.zero_last_layer();  // identity correspondence at init
        return m;
    }

    void check_code(const VecXr& z) const {
        if (z.size() != latent_dim) throw ShapeError("DifModel: latent dimension mismatch");
    }

    const ShapeCode& stored_code(const std::string& id) const {
        auto it = latent_table.find(id);
        if (it == latent_table.end())
            throw PreconditionError("DifModel: no stored code for '" + id + "'");
        return it->second;
    }
};

inline VecXr deform_input(const DifModel& m, const VecXr& z, const Vec3& p) {
    VecXr in(m.latent_dim + 3);
    in.head(m.latent_dim) = z;
    in[m.latent_dim + 0] = real(p.x());
    in[m.latent_dim + 1] = real(p.y());
    in[m.latent_dim + 2] = real(p.z());
    return in;
}

inline Vec3 deform_point(const DifModel& m, const VecXr& z, const Vec3& p) {
    m.check_code(z);
    const auto [dp, tape] = forward(m.deform_net, deform_input(m, z, p));
    return Vec3(double(dp[0]), double(dp[1]), double(dp[2]));
}

inline std::vector<Vec3> deform_points(const DifModel& m, const VecXr& z,
                                       const std::vector<Vec3>& pts) {
    std::vector<Vec3> out;
    out.reserve(pts.size());
    for (const Vec3& p : pts) out.push_back(deform_point(m, z, p));
    return out;
}

inline double template_sdf(const DifModel& m, const Vec3& p) {
    VecXr in(3);
    in << real(p.x()), real(p.y()), real(p.z());
    const auto [s, tape] = forward(m.template_net, in);
    return double(s[0]);
}

inline double instance_sdf(const DifModel& m, const VecXr& z, const Vec3& p) {
    const Vec3 q = p + deform_point(m, z, p);
    return template_sdf(m, q);
}

inline std::vector<double> instance_sdf_batch(const DifModel& m, const VecXr& z,
                                              const std::vector<Vec3>& pts) {
    std::vector<double> out;
    out.reserve(pts.size());
    for (const Vec3& p : pts) out.push_back(instance_sdf(m, z, p));
    return out;
}

// d sdf / dp and d sdf / dz by chaining backward passes through both nets.
struct SdfDerivatives {
    double value = 0.0;
    Vec3 d_p = Vec3::Zero();
    VecXr d_z;
};

inline SdfDerivatives instance_sdf_derivatives(const DifModel& m, const VecXr& z, const Vec3& p,
                                               bool want_z = false) {
    m.check_code(z);
    auto [dp_vec, tape_d] = forward(m.deform_net, deform_input(m, z, p));
    const Vec3 q = p + Vec3(double(dp_vec[0]), double(dp_vec[1]), double(dp_vec[2]));
    VecXr qin(3);
    qin << real(q.x()), real(q.y()), real(q.z());
    auto [s, tape_t] = forward(m.template_net, qin);

    VecXr one = VecXr::Ones(1);
    const auto [gT, dq] = backward(m.template_net, tape_t, one);
    VecXr ct(3);
    ct << dq[0], dq[1], dq[2];
    const auto [gD, din] = backward(m.deform_net, tape_d, ct);

    SdfDerivatives out;
    out.value = double(s[0]);
    out.d_p = Vec3(double(dq[0] + din[m.latent_dim + 0]), double(dq[1] + din[m.latent_dim + 1]),
                   double(dq[2] + din[m.latent_dim + 2]));
    if (want_z) out.d_z = din.head(m.latent_dim);
    return out;
}

inline Vec3 instance_sdf_gradient(const DifModel& m, const VecXr& z, const Vec3& p) {
    return instance_sdf_derivatives(m, z, p).d_p;
}

// Field adapters -------------------------------------------------------------

// Instance field in the normalized [-1,1]^3 frame.
struct InstanceField {
    const DifModel* model;
    const VecXr* z;

    double value(const Vec3& p) const { return instance_sdf(*model, *z, p); }
    Vec3 gradient(const Vec3& p) const { return instance_sdf_gradient(*model, *z, p); }

    // chunked batch evaluation (matrix forwards); used by mesh extraction
    std::vector<double> values(const std::vector<Vec3>& pts) const {
        const int m = model->latent_dim;
        std::vector<double> out(pts.size());
        const std::size_t chunk = 8192;
        for (std::size_t base = 0; base < pts.size(); base += chunk) {
            const std::size_t nb = std::min(chunk, pts.size() - base);
            MatXr din(m + 3, nb);
            for (std::size_t c = 0; c < nb; ++c) {
                din.col(c).head(m) = *z;
                const Vec3& p = pts[base + c];
                din(m + 0, c) = real(p.x());
                din(m + 1, c) = real(p.y());
                din(m + 2, c) = real(p.z());
            }
            const MatXr dp = forward_batch(model->deform_net, din);
            const MatXr q = din.bottomRows(3) + dp;
            const MatXr s = forward_batch(model->template_net, q);
            for (std::size_t c = 0; c < nb; ++c) out[base + c] = double(s(0, c));
        }
        return out;
    }
};

// Category template field (deformation bypassed).
struct TemplateField {
    const DifModel* model;
    double value(const Vec3& p) const { return template_sdf(*model, p); }
    Vec3 gradient(const Vec3& p) const { return fd_gradient(*this, p, 1e-5); }
    std::vector<double> values(const std::vector<Vec3>& pts) const {
        MatXr in(3, pts.size());
        for (std::size_t c = 0; c < pts.size(); ++c) {
            in(0, c) = real(pts[c].x());
            in(1, c) = real(pts[c].y());
            in(2, c) = real(pts[c].z());
        }
        const MatXr s = forward_batch(model->template_net, in);
        std::vector<double> out(pts.size());
        for (std::size_t c = 0; c < pts.size(); ++c) out[c] = double(s(0, c));
        return out;
    }
};

// Instance field exposed in metric (meters) coordinates.
struct MetricInstanceField {
    const DifModel* model;
    const ShapeCode* code;

    double value(const Vec3& p) const {
        return instance_sdf(*model, code->z, p / code->scale) * code->scale;
    }
    Vec3 gradient(const Vec3& p) const {
        return instance_sdf_gradient(*model, code->z, p / code->scale);
    }
};

// Training --------------------------------------------------------------------

struct TrainConfig {
    DifConfig arch;
    int steps = 2500;
    int points_per_instance = 96;  // per step, drawn from the pre-sampled pool
    int surface_samples = 3000;    // pool sizes per instance
    int spatial_samples = 3000;
    double lr_net = 1e-4;
    double lr_latent = 1e-3;
    double clamp = 0.1;
    double w_deform = 1e-2;  // weight on |deform|^2
    double w_latent = 1e-4;  // weight on |z|^2
    std::uint64_t seed = 0;
    int heldout_samples = 400;  // per instance, for the final error metric
};

struct TrainTraceRow {
    int step;
    double data_l1;
    double deform_reg;
    double latent_reg;
    double total;
};

struct TrainResult {
    std::vector<TrainTraceRow> trace;
    double heldout_mae = 0.0;  // mean |sdf| on fresh surface samples
};

// Auto-decoder training: jointly optimizes both nets and one latent code per
// training instance against the analytic oracles. Single-threaded and fully
// determined by cfg.seed.
inline TrainResult train(DifModel& model, const ShapeFamily& family, const TrainConfig& cfg) {
    const auto train_split = family.split(true);
    if (train_split.empty()) throw PreconditionError("train: no training instances");
    const int n_inst = int(train_split.size());
    const int m = model.latent_dim;

    Rng rng = seeded_rng(cfg.seed, "dif-train");

    // pre-sampled pools, normalized coordinates
    struct Pool {
        std::vector<Vec3> pts;
        std::vector<double> sdf;
    };
    std::vector<Pool> pools(n_inst);
    for (int i = 0; i < n_inst; ++i) {
        const SampleSet s =
            sample_instance(*train_split[i], cfg.surface_samples, cfg.spatial_samples, rng);
        pools[i].pts = s.surface;
        pools[i].sdf.assign(s.surface.size(), 0.0);
        pools[i].pts.insert(pools[i].pts.end(), s.spatial.begin(), s.spatial.end());
        pools[i].sdf.insert(pools[i].sdf.end(), s.spatial_sdf.begin(), s.spatial_sdf.end());
    }

    // latent codes start near zero
    MatXr Z(m, n_inst);
    std::normal_distribution<double> zinit(0.0, 0.01);
    for (int i = 0; i < Z.size(); ++i) Z.data()[i] = real(zinit(rng));

    VecXr pT = model.template_net.param_vector();
    VecXr pD = model.deform_net.param_vector();
    AdamState stT = AdamState::for_size(pT.size(), cfg.lr_net);
    AdamState stD = AdamState::for_size(pD.size(), cfg.lr_net);
    AdamState stZ = AdamState::for_size(Z.size(), cfg.lr_latent);

    const int ppi = cfg.points_per_instance;
    const int B = n_inst * ppi;
    TrainResult result;
    result.trace.reserve(cfg.steps);

    MatXr din(m + 3, B), labels(1, B);
    for (int step = 0; step < cfg.steps; ++step) {
        for (int i = 0; i < n_inst; ++i) {
            std::uniform_int_distribution<std::size_t> pick(0, pools[i].pts.size() - 1);
            for (int c = 0; c < ppi; ++c) {
                const std::size_t idx = pick(rng);
                const int col = i * ppi + c;
                din.col(col).head(m) = Z.col(i);
                const Vec3& p = pools[i].pts[idx];
                din(m + 0, col) = real(p.x());
                din(m + 1, col) = real(p.y());
                din(m + 2, col) = real(p.z());
                labels(0, col) = real(pools[i].sdf[idx]);
            }
        }

        Tape tape_d, tape_t;
        const MatXr dp = forward_batch(model.deform_net, din, &tape_d);
        const MatXr q = din.bottomRows(3) + dp;
        const MatXr s = forward_batch(model.template_net, q, &tape_t);

        const real c = real(cfg.clamp);
        double data_l1 = 0.0, deform_reg = 0.0, latent_reg = 0.0;
        MatXr cot(1, B);
        for (int col = 0; col < B; ++col) {
            const real sh = std::clamp(s(0, col), -c, c);
            const real y = std::clamp(labels(0, col), -c, c);
            const real e = sh - y;
            data_l1 += std::abs(double(e));
            const bool active = std::abs(s(0, col)) < c;
            cot(0, col) = (active && e != 0) ? (e > 0 ? real(1) : real(-1)) / real(B) : real(0);
        }
        data_l1 /= B;
        deform_reg = double(dp.squaredNorm()) / B;
        latent_reg = double(Z.squaredNorm()) / n_inst;
        const double total = data_l1 + cfg.w_deform * deform_reg + cfg.w_latent * latent_reg;
        if (!std::isfinite(total))
            throw TrainingDivergedError("train: loss became non-finite at step " +
                                        std::to_string(step));
        result.trace.push_back({step, data_l1, deform_reg, latent_reg, total});

        auto [gT, dq] = backward_batch(model.template_net, tape_t, cot);
        MatXr dp_cot = dq + real(2.0 * cfg.w_deform / B) * dp;
        auto [gD, ddin] = backward_batch(model.deform_net, tape_d, dp_cot);

        MatXr gZ = MatXr::Zero(m, n_inst);
        for (int i = 0; i < n_inst; ++i) {
            for (int cpt = 0; cpt < ppi; ++cpt) gZ.col(i) += ddin.col(i * ppi + cpt).head(m);
            gZ.col(i) += real(2.0 * cfg.w_latent / n_inst) * Z.col(i);
        }

        VecXr gTf = gT.flatten(), gDf = gD.flatten();
        adam_step(pT, gTf, stT);
        adam_step(pD, gDf, stD);
        VecXr zflat = Eigen::Map<VecXr>(Z.data(), Z.size());
        VecXr gzflat = Eigen::Map<VecXr>(gZ.data(), gZ.size());
        adam_step(zflat, gzflat, stZ);
        Eigen::Map<VecXr>(Z.data(), Z.size()) = zflat;
        model.template_net.set_param_vector(pT);
        model.deform_net.set_param_vector(pD);
    }

    for (int i = 0; i < n_inst; ++i) {
        ShapeCode code;
        code.z = Z.col(i);
        code.instance_id = train_split[i]->id;
        code.scale = train_split[i]->scale;
        model.latent_table[code.instance_id] = std::move(code);
    }

    // held-out surface error on fresh samples
    Rng erng = seeded_rng(cfg.seed, "dif-train-eval");
    double mae = 0.0;
    std::size_t count = 0;
    for (int i = 0; i < n_inst; ++i) {
        const auto pts = train_split[i]->shape.sample_surface(cfg.heldout_samples, erng);
        for (const Vec3& pm : pts) {
            mae += std::abs(instance_sdf(model, Z.col(i), pm / train_split[i]->scale));
            ++count;
        }
    }
    result.heldout_mae = mae / double(count);
    return result;
}

// Latent inference -------------------------------------------------------------

struct InferConfig {
    int iterations = 400;
    double lr = 3e-2;
    double w_latent = 1e-4;
    double target_residual = 1e-2;
};

struct InferResult {
    ShapeCode code;
    double residual = 0.0;  // mean |sdf| over the observations at the best code
    bool warning = false;   // did not reach target_residual
    std::vector<double> trace;
};

// Optimization-based encoder replacement: recovers z for a partial surface
// observation by Adam descent from z = 0, model weights fixed.
inline InferResult infer_latent(const DifModel& model, const std::vector<Vec3>& observation,
                                const InferConfig& cfg = {}) {
    if (observation.size() < 50)
        throw PreconditionError("infer_latent: need at least 50 observed points");
    const int m = model.latent_dim;

    VecXr z = VecXr::Zero(m);
    AdamState st = AdamState::for_size(m, cfg.lr);
    VecXr best_z = z;
    double best_res = std::numeric_limits<double>::infinity();
    InferResult out;

    const std::size_t N = observation.size();
    for (int it = 0; it < cfg.iterations; ++it) {
        VecXr g = VecXr::Zero(m);
        double res = 0.0;
        for (const Vec3& p : observation) {
            const SdfDerivatives d = instance_sdf_derivatives(model, z, p, /*want_z=*/true);
            res += std::abs(d.value);
            if (d.value > 0) g += d.d_z;
            else if (d.value < 0) g -= d.d_z;
        }
        res /= double(N);
        g /= real(N);
        g += real(2.0 * cfg.w_latent) * z;
        out.trace.push_back(res);
        if (res < best_res) {
            best_res = res;
            best_z = z;
        }
        adam_step(z, g, st);
    }
    {  // final candidate
        double res = 0.0;
        for (const Vec3& p : observation) res += std::abs(instance_sdf(model, z, p));
        res /= double(N);
        if (res < best_res) {
            best_res = res;
            best_z = z;
        }
    }

    out.code.z = best_z;
    out.residual = best_res;
    out.warning = best_res > cfg.target_residual;
    return out;
}

// Mesh extraction ---------------------------------------------------------------

inline TriMesh extract_mesh(const DifModel& model, const ShapeCode& code, int resolution) {
    if (resolution < 32) throw PreconditionError("extract_mesh: resolution must be >= 32");
    Aabb box;
    box.expand(Vec3::Constant(-1.1));
    box.expand(Vec3::Constant(1.1));
    const InstanceField field{&model, &code.z};
    return marching_cubes(field, box, resolution);
}

}  // namespace gf
