#include <catch2/catch_amalgamated.hpp>

#include "gf/dif.hpp"

using namespace gf;

namespace {

DifConfig small_arch() {
    DifConfig c;
    c.latent_dim = 8;
    c.hidden_width = 64;
    c.hidden_depth = 3;
    c.seed = 21;
    return c;
}

ShapeFamily one_bottle() {
    ShapeFamilySpec spec;
    spec.count = 1;
    spec.seed = 31;
    spec.train_fraction = 1.0;
    return generate_family(spec);
}

}  // namespace

TEST_CASE("fresh model deforms nothing and matches its template") {
    DifModel model = DifModel::make(small_arch(), "bottle-like");
    Rng rng = seeded_rng(1, "dif");
    for (int i = 0; i < 20; ++i) {
        const VecXr z = VecXr::Random(8);
        const Vec3 p(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1));
        CHECK(deform_point(model, z, p).norm() == 0.0);
        CHECK(instance_sdf(model, z, p) == template_sdf(model, p));
    }
}

TEST_CASE("batched queries equal one-by-one calls") {
    DifModel model = DifModel::make(small_arch(), "bottle-like");
    Rng rng = seeded_rng(2, "dif");
    const VecXr z = VecXr::Random(8);
    std::vector<Vec3> pts;
    for (int i = 0; i < 32; ++i)
        pts.emplace_back(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1));
    const auto batched = deform_points(model, z, pts);
    const auto sdfs = instance_sdf_batch(model, z, pts);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        CHECK((batched[i] - deform_point(model, z, pts[i])).norm() == 0.0);
        CHECK(sdfs[i] == instance_sdf(model, z, pts[i]));
    }
}

TEST_CASE("latent dimension mismatch raises") {
    DifModel model = DifModel::make(small_arch(), "bottle-like");
    CHECK_THROWS_AS(instance_sdf(model, VecXr::Random(5), Vec3(0, 0, 0)), ShapeError);
}

TEST_CASE("instance sdf gradient matches central differences") {
    DifModel model = DifModel::make(small_arch(), "bottle-like");
    // give the deform net nonzero output so the chain through both nets is live
    Rng prng = seeded_rng(3, "dif");
    Mlp& d = model.deform_net;
    VecXr pv = d.param_vector();
    for (Eigen::Index i = pv.size() - d.output_width() * (d.widths[d.layers() - 1] + 1);
         i < pv.size(); ++i)
        pv[i] = real(uniform(prng, -0.02, 0.02));
    d.set_param_vector(pv);

    const VecXr z = 0.3 * VecXr::Random(8);
    const InstanceField field{&model, &z};
    for (int i = 0; i < 40; ++i) {
        const Vec3 p(uniform(prng, -0.8, 0.8), uniform(prng, -0.8, 0.8), uniform(prng, -0.8, 0.8));
        const Vec3 g = instance_sdf_gradient(model, z, p);
        const Vec3 fd = fd_gradient(field, p, 1e-5);
        if (fd.norm() < 1e-8) continue;
        CHECK((g - fd).norm() / fd.norm() < 1e-3);
    }
}

TEST_CASE("memorizing a single instance reaches reconstruction error < 2e-3") {
    const ShapeFamily fam = one_bottle();
    TrainConfig cfg;
    cfg.arch = small_arch();
    cfg.steps = 1200;
    cfg.points_per_instance = 256;
    cfg.surface_samples = 1500;
    cfg.spatial_samples = 1500;
    cfg.seed = 41;
    DifModel model = DifModel::make(cfg.arch, fam.spec.category);
    const TrainResult r = train(model, fam, cfg);
    INFO("heldout mae " << r.heldout_mae);
    CHECK(r.heldout_mae < 2e-3);
    REQUIRE(model.latent_table.size() == 1);

    // trained surface points land near the template zero set through deform
    const ShapeCode& code = model.stored_code(fam.instances[0].id);
    Rng rng = seeded_rng(5, "dif-mem");
    const auto pts = fam.instances[0].shape.sample_surface(50, rng);
    double worst = 0.0;
    for (const Vec3& pm : pts) {
        const Vec3 pn = pm / code.scale;
        const Vec3 q = pn + deform_point(model, code.z, pn);
        worst = std::max(worst, std::abs(template_sdf(model, q)));
    }
    CHECK(worst < 2e-2);
}

TEST_CASE("training trace smooths to a decreasing curve and is seed-deterministic") {
    const ShapeFamily fam = one_bottle();
    TrainConfig cfg;
    cfg.arch = small_arch();
    cfg.steps = 400;
    cfg.points_per_instance = 128;
    cfg.surface_samples = 800;
    cfg.spatial_samples = 800;
    cfg.seed = 43;
    DifModel m1 = DifModel::make(cfg.arch, fam.spec.category);
    const TrainResult r1 = train(m1, fam, cfg);
    DifModel m2 = DifModel::make(cfg.arch, fam.spec.category);
    const TrainResult r2 = train(m2, fam, cfg);

    CHECK(r1.trace.back().total == r2.trace.back().total);
    CHECK(r1.heldout_mae == r2.heldout_mae);

    // window-50 moving average, sampled every 50 steps, must decrease
    auto window_mean = [&](int start) {
        double s = 0.0;
        for (int i = start; i < start + 50; ++i) s += r1.trace[i].total;
        return s / 50.0;
    };
    double prev = window_mean(0);
    for (int start = 50; start + 50 <= cfg.steps; start += 50) {
        const double cur = window_mean(start);
        CHECK(cur <= prev);
        prev = cur;
    }
}

TEST_CASE("latent inference needs at least 50 points") {
    DifModel model = DifModel::make(small_arch(), "bottle-like");
    std::vector<Vec3> obs(10, Vec3(0, 0, 0));
    CHECK_THROWS_AS(infer_latent(model, obs), PreconditionError);
    CHECK_THROWS_AS(infer_latent(model, {}), PreconditionError);
}

TEST_CASE("mesh extraction from a template pre-fit to a sphere") {
    DifConfig arch = small_arch();
    DifModel model = DifModel::make(arch, "sphere-fit");
    const auto sphere = AnalyticShape::make(Sphere{1.0});

    // quick regression of the template net alone onto the sphere SDF;
    // most of the batch concentrates near the surface shell
    Rng rng = seeded_rng(7, "fit");
    VecXr params = model.template_net.param_vector();
    AdamState st = AdamState::for_size(params.size(), 3e-4);
    const int B = 512;
    const int steps = 2500;
    for (int step = 0; step < steps; ++step) {
        st.lr = step < steps / 2 ? 3e-4 : 7.5e-5;
        MatXr X(3, B);
        MatXr cot(1, B);
        Tape tape;
        for (int c = 0; c < B; ++c) {
            if (uniform(rng, 0, 1) > 0.6) {
                for (int r = 0; r < 3; ++r) X(r, c) = real(uniform(rng, -1.1, 1.1));
            } else {
                const Vec3 p = uniform(rng, 0.85, 1.15) * random_unit_vector(rng);
                for (int r = 0; r < 3; ++r) X(r, c) = real(p[r]);
            }
        }
        const MatXr Y = forward_batch(model.template_net, X, &tape);
        for (int c = 0; c < B; ++c) {
            const double target = sphere.value(Vec3(X(0, c), X(1, c), X(2, c)));
            const double e = double(Y(0, c)) - target;
            cot(0, c) = real(2.0 * e / B);
        }
        auto [g, dx] = backward_batch(model.template_net, tape, cot);
        VecXr gf = g.flatten();
        adam_step(params, gf, st);
        model.template_net.set_param_vector(params);
    }

    ShapeCode code;
    code.z = VecXr::Zero(arch.latent_dim);
    const TriMesh mesh = extract_mesh(model, code, 48);
    REQUIRE(mesh.faces.size() > 100);
    double worst = 0.0;
    for (const Vec3& v : mesh.vertices) worst = std::max(worst, std::abs(v.norm() - 1.0));
    CHECK(worst < 2e-2);

    CHECK_THROWS_AS(extract_mesh(model, code, 16), PreconditionError);
}
