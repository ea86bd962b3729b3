// Everything here runs off PointLog/SensorImage data alone: this translation
// unit never includes the simulator, mirroring the premise that the latent
// sensor layout is unknown to the localizer.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>

#include "skintact/calibration.hpp"
#include "skintact/localizer.hpp"
#include "test_util.hpp"

using namespace skintact;
using testutil::TempDir;

namespace {

SensorImage random_image(Rng& rng, double lo = 0.0, double hi = 20.0) {
    SensorImage img;
    for (auto& v : img.values) v = rng.uniform(lo, hi);
    return img;
}

NormStats identity_norm() {
    NormStats n;
    n.mean.fill(0.0);
    n.scale.fill(1.0);
    return n;
}

// Independent forward evaluation: column-major accumulation over explicit
// vectors, no shared code with the library path.
Vec3 oracle_forward(const MlpParams& p, const NormStats& norm, const SensorImage& img) {
    std::vector<double> z(kInputSize);
    for (int i = 0; i < kInputSize; ++i) z[i] = (img.values[i] - norm.mean[i]) / norm.scale[i];

    std::vector<double> h(kHiddenSize, 0.0);
    for (int i = 0; i < kInputSize; ++i)
        for (int j = 0; j < kHiddenSize; ++j) h[j] += p.w1[j * kInputSize + i] * z[i];
    for (int j = 0; j < kHiddenSize; ++j) {
        h[j] += p.b1[j];
        if (p.activation == Activation::relu)
            h[j] = std::max(0.0, h[j]);
        else
            h[j] = std::tanh(h[j]);
    }
    std::vector<double> y(kOutputSize, 0.0);
    for (int j = 0; j < kHiddenSize; ++j)
        for (int o = 0; o < kOutputSize; ++o) y[o] += p.w2[o * kHiddenSize + j] * h[j];
    return {y[0] + p.b2[0], y[1] + p.b2[1], y[2] + p.b2[2]};
}

// Flat-grid dataset whose targets are an exact affine function of the images.
// The baseline is zero so images equal the negated raw frames.
CalibrationDataset linear_toy_dataset(int n_samples, std::uint64_t seed) {
    CalibrationDataset ds;
    ds.baseline.s0.fill(0.0);
    ds.baseline.sigma0.fill(1.0);
    ds.baseline.frame_count = 2;
    Rng rng(seed);
    for (int s = 0; s < n_samples; ++s) {
        SensorImage img = random_image(rng);
        PointLog log;
        for (int i = 0; i < kSensorCount; ++i) log.frames.push_back({});
        log.frames.resize(1);
        for (int i = 0; i < kSensorCount; ++i) log.frames[0][i] = -img.values[i];
        log.location = {0.5 * img.values[0] - 0.25 * img.values[1] + 3.0,
                        0.1 * img.values[2] + 0.4 * img.values[5] + 1.0,
                        -0.3 * img.values[3] + 0.2 * img.values[7]};
        ds.point_logs.push_back(std::move(log));
    }
    return ds;
}

SurfacePointSet line_surface(int count) {
    SurfacePointSet set;
    set.spacing = 1.0;
    for (int i = 0; i < count; ++i) set.points.push_back({static_cast<double>(i), 0.0, 0.0});
    return set;
}

}  // namespace

TEST_CASE("forward: zero parameters map everything to the origin") {
    MlpParams p;  // zero-initialized
    Rng rng(1);
    SensorImage img = random_image(rng);
    CHECK(forward(p, identity_norm(), img) == Vec3{0, 0, 0});
}

TEST_CASE("forward: output bias passes through a dead network") {
    MlpParams p;
    p.b2 = {1.0, 2.0, 3.0};
    Rng rng(2);
    CHECK(forward(p, identity_norm(), random_image(rng)) == Vec3{1, 2, 3});
}

TEST_CASE("forward matches an independent matrix-arithmetic oracle") {
    for (std::uint64_t seed : {10u, 11u, 12u}) {
        MlpParams p = init_params(seed, 1.0, Activation::relu);
        NormStats norm;
        Rng rng(seed + 100);
        for (int i = 0; i < kInputSize; ++i) {
            norm.mean[i] = rng.uniform(-5.0, 5.0);
            norm.scale[i] = rng.uniform(0.5, 3.0);
        }
        SensorImage img = random_image(rng, -10.0, 10.0);

        Vec3 ours = forward(p, norm, img);
        Vec3 expect = oracle_forward(p, norm, img);
        CHECK_THAT(ours.x, Catch::Matchers::WithinRel(expect.x, 1e-12));
        CHECK_THAT(ours.y, Catch::Matchers::WithinRel(expect.y, 1e-12));
        CHECK_THAT(ours.z, Catch::Matchers::WithinRel(expect.z, 1e-12));
    }
}

TEST_CASE("forward rejects non-finite images") {
    MlpParams p;
    SensorImage img;
    img.values.fill(0.0);
    img.values[5] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(forward(p, identity_norm(), img), std::invalid_argument);
}

TEST_CASE("mse_loss conventions") {
    MlpParams p;  // predicts (0,0,0)
    NormStats norm = identity_norm();
    SensorImage img;
    img.values.fill(0.0);

    SECTION("perfect fit gives zero") {
        p.b2 = {1.0, -2.0, 0.5};
        CHECK(mse_loss(p, norm, {img}, {Vec3{1.0, -2.0, 0.5}}) == 0.0);
    }
    SECTION("3-4-5 squared distance") {
        CHECK(mse_loss(p, norm, {img}, {Vec3{3.0, 4.0, 0.0}}) == 25.0);
    }
    SECTION("mean over samples") {
        CHECK(mse_loss(p, norm, {img, img}, {Vec3{3, 4, 0}, Vec3{3, 0, 0}}) == 17.0);
    }
    SECTION("input validation") {
        CHECK_THROWS_AS(mse_loss(p, norm, {}, {}), std::invalid_argument);
        CHECK_THROWS_AS(mse_loss(p, norm, {img}, {}), std::invalid_argument);
    }
}

TEST_CASE("grad: zero residual batch has zero gradient") {
    MlpParams p;
    p.b2 = {4.0, 5.0, 6.0};
    NormStats norm = identity_norm();
    Rng rng(3);
    std::vector<SensorImage> images{random_image(rng), random_image(rng)};
    std::vector<Vec3> targets{{4, 5, 6}, {4, 5, 6}};

    MlpGrad g;
    double loss = grad(p, norm, images, targets, g);
    CHECK(loss == 0.0);
    for (double v : g.w1) CHECK(v == 0.0);
    for (double v : g.b1) CHECK(v == 0.0);
    for (double v : g.w2) CHECK(v == 0.0);
    for (double v : g.b2) CHECK(v == 0.0);
}

TEST_CASE("grad matches central finite differences") {
    const double h = 1e-5;
    const double tol = 1e-4;
    for (std::uint64_t seed : {21u, 22u, 23u}) {
        MlpParams p = init_params(seed, 1.0, Activation::relu);
        NormStats norm = identity_norm();
        Rng rng(seed * 7 + 1);
        std::vector<SensorImage> images;
        std::vector<Vec3> targets;
        for (int s = 0; s < 5; ++s) {
            images.push_back(random_image(rng, -2.0, 2.0));
            targets.push_back({rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3)});
        }

        MlpGrad g;
        grad(p, norm, images, targets, g);

        // Pre-activations per (sample, hidden unit) for the kink guard.
        std::vector<std::array<double, kHiddenSize>> pres(images.size());
        for (std::size_t s = 0; s < images.size(); ++s)
            for (int j = 0; j < kHiddenSize; ++j) {
                double acc = p.b1[j];
                for (int i = 0; i < kInputSize; ++i)
                    acc += p.w1[j * kInputSize + i] * images[s].values[i];
                pres[s][j] = acc;
            }
        auto unit_kinked = [&](int j) {
            for (const auto& pre : pres)
                if (std::abs(pre[j]) < 1e-6) return true;
            return false;
        };
        auto check_entry = [&](double* param, double analytic) {
            double saved = *param;
            *param = saved + h;
            double up = mse_loss(p, norm, images, targets);
            *param = saved - h;
            double down = mse_loss(p, norm, images, targets);
            *param = saved;
            double fd = (up - down) / (2.0 * h);
            double denom = std::max({std::abs(analytic), std::abs(fd), 1e-6});
            CHECK(std::abs(analytic - fd) / denom < tol);
        };

        for (int j = 0; j < kHiddenSize; ++j) {
            if (unit_kinked(j)) continue;
            for (int i = 0; i < kInputSize; i += 5)
                check_entry(&p.w1[j * kInputSize + i], g.w1[j * kInputSize + i]);
            check_entry(&p.b1[j], g.b1[j]);
        }
        for (std::size_t k = 0; k < p.w2.size(); k += 3) check_entry(&p.w2[k], g.w2[k]);
        for (int o = 0; o < kOutputSize; ++o) check_entry(&p.b2[o], g.b2[o]);
    }
}

TEST_CASE("grad: output-layer gradients are linear in the residual") {
    MlpParams p = init_params(31, 1.0, Activation::relu);
    p.w2.fill(0.0);
    p.b2.fill(0.0);  // predictions pinned at zero
    NormStats norm = identity_norm();
    Rng rng(32);
    std::vector<SensorImage> images{random_image(rng), random_image(rng)};
    std::vector<Vec3> targets{{1, -2, 3}, {0.5, 4, -1}};
    std::vector<Vec3> doubled{{2, -4, 6}, {1, 8, -2}};

    MlpGrad g1, g2;
    grad(p, norm, images, targets, g1);
    grad(p, norm, images, doubled, g2);
    for (std::size_t k = 0; k < g1.w2.size(); ++k) CHECK(g2.w2[k] == 2.0 * g1.w2[k]);
    for (int o = 0; o < kOutputSize; ++o) CHECK(g2.b2[o] == 2.0 * g1.b2[o]);
}

TEST_CASE("train fits an exactly representable affine map") {
    CalibrationDataset ds = linear_toy_dataset(40, 404);
    SurfacePointSet surface = line_surface(4);

    TrainConfig cfg;
    cfg.learning_rate = 1e-2;
    cfg.epochs = 5000;
    cfg.seed = 9;
    TrainedLocalizer loc = train(ds, surface, cfg);

    std::vector<SensorImage> images;
    std::vector<Vec3> targets;
    for (const auto& log : ds.point_logs) {
        images.push_back(sensor_image(log, ds.baseline));
        targets.push_back(log.location);
    }
    double initial = mse_loss(init_params(cfg.seed, cfg.init_scale, cfg.activation),
                              compute_norm_stats(images), images, targets);
    double final_loss = mse_loss(loc.params, loc.norm, images, targets);
    CHECK(final_loss < 1e-3 * initial);
    CHECK(loc.loss_history.size() == 5000);
}

TEST_CASE("train is deterministic bit-for-bit") {
    CalibrationDataset ds = linear_toy_dataset(12, 55);
    SurfacePointSet surface = line_surface(4);
    TrainConfig cfg;
    cfg.epochs = 120;
    cfg.seed = 77;

    TrainedLocalizer a = train(ds, surface, cfg);
    TrainedLocalizer b = train(ds, surface, cfg);
    CHECK(a.params.w1 == b.params.w1);
    CHECK(a.params.b1 == b.params.b1);
    CHECK(a.params.w2 == b.params.w2);
    CHECK(a.params.b2 == b.params.b2);
    CHECK(a.loss_history == b.loss_history);
}

TEST_CASE("small steps decrease the loss over the first 100 epochs") {
    CalibrationDataset ds = linear_toy_dataset(20, 606);
    TrainConfig cfg;
    cfg.learning_rate = 1e-4;
    cfg.epochs = 101;
    cfg.seed = 5;
    TrainedLocalizer loc = train(ds, line_surface(4), cfg);
    for (int e = 1; e <= 100; ++e) CHECK(loc.loss_history[e] <= loc.loss_history[e - 1]);
}

TEST_CASE("train floors the scale of constant sensors and records them") {
    CalibrationDataset ds = linear_toy_dataset(10, 70);
    for (auto& log : ds.point_logs) log.frames[0][17] = 4.0;  // sensor 17 constant
    TrainConfig cfg;
    cfg.epochs = 5;
    TrainedLocalizer loc = train(ds, line_surface(4), cfg);
    REQUIRE(loc.floored_inputs == std::vector<int>{17});
    CHECK(loc.norm.scale[17] == kScaleFloor);
}

TEST_CASE("predict stays on the surface point set") {
    SurfacePointSet surface = line_surface(10);
    TrainedLocalizer loc;
    loc.surface = surface;
    loc.norm = identity_norm();

    SECTION("raw output exactly at a surface point") {
        loc.params.b2 = {9.0, 0.0, 0.0};
        SensorImage img;
        img.values.fill(0.0);
        SurfaceProjection p = predict(loc, img);
        CHECK(p.index == 9);
        CHECK(p.distance == 0.0);
    }
    SECTION("far off-surface output still lands in the set") {
        loc.params.b2 = {1e6, -2e6, 3e6};
        SensorImage img;
        img.values.fill(0.0);
        SurfaceProjection p = predict(loc, img);
        bool member = false;
        for (const auto& q : surface.points) member = member || (q == p.point);
        CHECK(member);
    }
}

TEST_CASE("predict equals forward followed by an exhaustive scan") {
    Rng rng(808);
    SurfacePointSet surface;
    surface.spacing = 1.0;
    for (int i = 0; i < 400; ++i)
        surface.points.push_back({rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(-50, 50)});

    TrainedLocalizer loc;
    loc.surface = surface;
    loc.norm = identity_norm();
    loc.params = init_params(99, 1.0, Activation::relu);
    for (auto& b : loc.params.b2) b *= 100.0;  // spread raw outputs around

    for (int k = 0; k < 200; ++k) {
        SensorImage img = random_image(rng, -5.0, 5.0);
        SurfaceProjection p = predict(loc, img);
        Vec3 raw = forward(loc.params, loc.norm, img);
        CHECK(p.index == testutil::oracle_nearest_index(raw, surface.points));
    }
}

TEST_CASE("model files round-trip") {
    CalibrationDataset ds = linear_toy_dataset(8, 99);
    TrainConfig cfg;
    cfg.epochs = 30;
    TrainedLocalizer loc = train(ds, line_surface(6), cfg);

    TempDir tmp;
    auto path = tmp.file("model.json");
    save_localizer(loc, path);
    TrainedLocalizer back = load_localizer(path);

    CHECK(back.params.w1 == loc.params.w1);
    CHECK(back.params.b1 == loc.params.b1);
    CHECK(back.params.w2 == loc.params.w2);
    CHECK(back.params.b2 == loc.params.b2);
    CHECK(back.params.activation == loc.params.activation);
    CHECK(back.norm.mean == loc.norm.mean);
    CHECK(back.norm.scale == loc.norm.scale);
    CHECK(back.surface.spacing == loc.surface.spacing);
    REQUIRE(back.surface.points.size() == loc.surface.points.size());
    CHECK(back.loss_history == loc.loss_history);

    // Identical predictions on fresh images.
    Rng rng(1234);
    for (int k = 0; k < 100; ++k) {
        SensorImage img = random_image(rng);
        SurfaceProjection a = predict(loc, img);
        SurfaceProjection b = predict(back, img);
        CHECK(a.index == b.index);
        CHECK(a.point == b.point);
        CHECK(a.distance == b.distance);
    }
}

TEST_CASE("model loading rejects bad files") {
    TempDir tmp;

    SECTION("version mismatch names both versions") {
        auto path = tmp.file("old.json");
        testutil::write_text(path, R"({"version":"v0"})");
        CHECK_THROWS_MATCHES(load_localizer(path), SchemaError,
                             Catch::Matchers::MessageMatches(
                                 Catch::Matchers::ContainsSubstring("v0") &&
                                 Catch::Matchers::ContainsSubstring("v1")));
    }
    SECTION("truncated file reports corruption") {
        CalibrationDataset ds = linear_toy_dataset(6, 1);
        TrainConfig cfg;
        cfg.epochs = 3;
        TrainedLocalizer loc = train(ds, line_surface(4), cfg);
        auto path = tmp.file("model.json");
        save_localizer(loc, path);

        std::ifstream in(path);
        std::string content((std::istreambuf_iterator<char>(in)), {});
        in.close();
        auto broken = tmp.file("broken.json");
        testutil::write_text(broken, content.substr(0, content.size() / 2));
        CHECK_THROWS_MATCHES(load_localizer(broken), SchemaError,
                             Catch::Matchers::MessageMatches(
                                 Catch::Matchers::ContainsSubstring("corrupt")));
    }
    SECTION("missing file is an I/O error") {
        CHECK_THROWS_AS(load_localizer(tmp.file("none.json")), IoError);
    }
}

TEST_CASE("standardization cancels exact per-sensor affine transforms bit-for-bit") {
    SurfacePointSet surface = line_surface(4);
    TrainConfig cfg;
    cfg.epochs = 60;
    cfg.seed = 31;

    SECTION("scale by 2 (any data)") {
        CalibrationDataset a = linear_toy_dataset(16, 2020);
        CalibrationDataset b = a;
        for (auto& log : b.point_logs)
            for (auto& f : log.frames)
                for (auto& v : f) v *= 2.0;  // image doubles exactly

        TrainedLocalizer la = train(a, surface, cfg);
        TrainedLocalizer lb = train(b, surface, cfg);
        CHECK(la.params.w1 == lb.params.w1);
        CHECK(la.params.b1 == lb.params.b1);
        CHECK(la.params.w2 == lb.params.w2);
        CHECK(la.params.b2 == lb.params.b2);
        CHECK(la.loss_history == lb.loss_history);
    }
    SECTION("shift by 1 (dyadic data, power-of-two sample count)") {
        CalibrationDataset a;
        a.baseline.s0.fill(0.0);
        a.baseline.sigma0.fill(1.0);
        a.baseline.frame_count = 2;
        Rng rng(42);
        for (int s = 0; s < 4; ++s) {
            PointLog log;
            log.frames.resize(1);
            for (int i = 0; i < kSensorCount; ++i)
                log.frames[0][i] = -0.25 * std::floor(rng.uniform(0.0, 64.0));  // multiples of 1/4
            log.location = {log.frames[0][0], log.frames[0][1], log.frames[0][2]};
            a.point_logs.push_back(std::move(log));
        }
        CalibrationDataset b = a;
        for (auto& log : b.point_logs)
            for (auto& v : log.frames[0]) v -= 1.0;  // image shifts by +1 exactly

        TrainedLocalizer la = train(a, surface, cfg);
        TrainedLocalizer lb = train(b, surface, cfg);
        CHECK(la.params.w1 == lb.params.w1);
        CHECK(la.params.b1 == lb.params.b1);
        CHECK(la.params.w2 == lb.params.w2);
        CHECK(la.params.b2 == lb.params.b2);
        CHECK(la.loss_history == lb.loss_history);
    }
}

TEST_CASE("a localizer trains end-to-end from an imported JSONL dataset alone") {
    // No simulator anywhere in this translation unit: the dataset is written
    // as a file, imported, and trained on. This is the architectural seam the
    // pipeline guarantees: point logs in, localizer out.
    CalibrationDataset ds = linear_toy_dataset(16, 777);
    TempDir tmp;
    auto path = tmp.file("ds.jsonl");
    export_jsonl(ds, path);

    CalibrationDataset imported = import_jsonl(path);
    TrainConfig cfg;
    cfg.epochs = 200;
    cfg.seed = 4;
    TrainedLocalizer loc = train(imported, line_surface(8), cfg);
    CHECK(loc.loss_history.size() == 200);
    CHECK(loc.loss_history.back() < loc.loss_history.front());

    SensorImage img = sensor_image(imported.point_logs[0], imported.baseline);
    SurfaceProjection p = predict(loc, img);
    CHECK(p.index >= 0);
    CHECK(p.index < 8);
}
