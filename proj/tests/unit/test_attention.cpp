#include <doctest.h>

#include <cmath>
#include <memory>
#include <random>
#include <vector>

#include "helpers.hpp"
#include "neva/attention.hpp"

using namespace neva;
using namespace neva::attention;
namespace fov = neva::foveation;

namespace {

nlohmann::json tiny_architecture() {
    return nlohmann::json::array({{{"type", "conv"}, {"out", 4}},
                                  {{"type", "relu"}},
                                  {{"type", "avgpool"}},
                                  {{"type", "dense"}, {"out", 6}},
                                  {{"type", "relu"}},
                                  {{"type", "dense"}, {"out", 2}}});
}

AttentionModel tiny_model(std::uint64_t seed = 3) { return make_attention_model({3, 8, 8}, seed, tiny_architecture()); }

// Linear probe of each perceived image, with a step-dependent weight map.
struct ProbeLoss {
    std::vector<Image> weights;
    double operator()(const Image& perceived, std::size_t, Image* grad) const {
        const Image& w = weights[static_cast<std::size_t>(calls++ % static_cast<int>(weights.size()))];
        if (grad) *grad = w;
        return testing::dot(w, perceived);
    }
    mutable int calls = 0;
};

double oracle_total(const AttentionModel& m, const Image& s, const ProbeLoss& probe, const NevaTrainConfig& cfg) {
    auto st = fov::init_state(s, cfg.foveation);
    double total = 0.0;
    for (int t = 0; t < cfg.horizon; ++t) {
        st = fov::update_state(st, m.next_fixation(to_attention_input(m, st.perceived())));
        total += testing::dot(probe.weights[static_cast<std::size_t>(t)], st.perceived());
    }
    return total;
}

std::vector<double> analytic(const AttentionModel& m, const Image& s, ProbeLoss probe, const NevaTrainConfig& cfg) {
    std::vector<double> g(m.network().parameter_count(), 0.0);
    probe.calls = 0;
    rollout_gradient(m, std::make_shared<const Image>(s),
                     std::make_shared<const Image>(fov::blur_stimulus(s, cfg.foveation.sigma_blur)),
                     std::ref(probe), 0, cfg, g);
    return g;
}

}  // namespace

TEST_SUITE("attention") {

TEST_CASE("fixations stay inside the image") {
    std::mt19937_64 rng(51);
    const auto m = tiny_model();
    for (int i = 0; i < 20; ++i) {
        const Fixation f = m.next_fixation(testing::random_image(8, 8, 3, rng));
        CHECK(f.x > 0.0);
        CHECK(f.x < 1.0);
        CHECK(f.y > 0.0);
        CHECK(f.y < 1.0);
    }
    CHECK_THROWS_AS(m.next_fixation(Image(8, 8, 1)), InvalidArgument);
    CHECK_THROWS_AS(make_attention_model({3, 8, 8}, 1, nlohmann::json::array({{{"type", "dense"}, {"out", 3}}})),
                    InvalidArgument);
}

TEST_CASE("checkpoint round trip") {
    std::mt19937_64 rng(52);
    const auto m = tiny_model();
    const auto dir = testing::scratch_dir("attention_ckpt");
    m.save(dir / "a.json");
    const auto back = AttentionModel::load(dir / "a.json");
    const Image x = testing::random_image(8, 8, 3, rng);
    CHECK(back.next_fixation(x) == m.next_fixation(x));
}

TEST_CASE("full unroll gradient matches finite differences") {
    std::mt19937_64 rng(53);
    for (int horizon : {1, 2, 3}) {
        CAPTURE(horizon);
        const Image s = testing::random_image(12, 12, 3, rng);
        NevaTrainConfig cfg;
        cfg.horizon = horizon;
        cfg.unroll_depth = horizon;
        cfg.foveation = {0.15, 0.08, 0.5};
        ProbeLoss probe;
        for (int t = 0; t < horizon; ++t) probe.weights.push_back(testing::random_image(12, 12, 3, rng, -1, 1));
        const auto m = tiny_model(static_cast<std::uint64_t>(horizon));
        const auto g = analytic(m, s, probe, cfg);

        const double h = 1e-6;
        int checked = 0;
        for (std::size_t i = 0; i < g.size(); i += 5) {
            AttentionModel a = m, b = m;
            a.network().parameters()[i] += h;
            b.network().parameters()[i] -= h;
            const double fd = (oracle_total(a, s, probe, cfg) - oracle_total(b, s, probe, cfg)) / (2 * h);
            CHECK(testing::rel_err(fd, g[i], 1e-7) < 1e-4);
            ++checked;
        }
        CHECK(checked > 20);
    }
}

TEST_CASE("one-step base case") {
    std::mt19937_64 rng(54);
    const Image s = testing::random_image(12, 12, 3, rng);
    NevaTrainConfig cfg;
    cfg.horizon = 1;
    ProbeLoss probe{{testing::random_image(12, 12, 3, rng, -1, 1)}};
    const auto m = tiny_model();
    const auto g = analytic(m, s, probe, cfg);

    const Image coarse = fov::blur_stimulus(s, cfg.foveation.sigma_blur);
    const auto step = m.traced_step(to_attention_input(m, coarse));
    const auto gxi = fov::foveate_vjp(s, coarse, step.fixation, cfg.foveation, probe.weights[0]);
    std::vector<double> expect(g.size(), 0.0);
    m.backward(step, gxi, expect);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(g[i] == doctest::Approx(expect[i]).epsilon(1e-12));
}

TEST_CASE("greedy unroll keeps only each step's own fixation") {
    std::mt19937_64 rng(55);
    const Image s = testing::random_image(12, 12, 3, rng);
    NevaTrainConfig cfg;
    cfg.horizon = 3;
    cfg.unroll_depth = 1;
    ProbeLoss probe;
    for (int t = 0; t < 3; ++t) probe.weights.push_back(testing::random_image(12, 12, 3, rng, -1, 1));
    const auto m = tiny_model();
    const auto g = analytic(m, s, probe, cfg);

    std::vector<double> expect(g.size(), 0.0);
    auto st = fov::init_state(s, cfg.foveation);
    for (int t = 0; t < 3; ++t) {
        const auto step = m.traced_step(to_attention_input(m, st.perceived()));
        st = fov::update_state(st, step.fixation);
        const Image ga = fov::accumulator_grad(st, probe.weights[static_cast<std::size_t>(t)]);
        m.backward(step, fov::gaussian_blob_vjp(12, 12, step.fixation, cfg.foveation.sigma_fovea, ga), expect);
    }
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(g[i] == doctest::Approx(expect[i]).epsilon(1e-12));
}

TEST_CASE("constant loss leaves the model untouched") {
    std::mt19937_64 rng(56);
    std::vector<Image> data;
    for (int i = 0; i < 6; ++i) data.push_back(testing::random_image(8, 8, 3, rng));
    const auto m = tiny_model();
    StepLoss flat = [](const Image& p, std::size_t, Image* grad) {
        if (grad) *grad = Image(p.height(), p.width(), p.channels());
        return 1.0;
    };
    NevaTrainConfig cfg;
    cfg.epochs = 2;
    cfg.batch_size = 4;
    AttentionTrainLog log;
    const auto trained = train_attention(m, data, flat, cfg, &log);
    CHECK(std::equal(trained.network().parameters().begin(), trained.network().parameters().end(),
                     m.network().parameters().begin()));
    CHECK(log.epoch_loss == std::vector<double>{1.0, 1.0});
}

TEST_CASE("training is deterministic and reduces a reachable loss") {
    std::mt19937_64 rng(57);
    std::vector<Image> data;
    for (int i = 0; i < 24; ++i) data.push_back(testing::random_image(8, 8, 3, rng));
    // reward looking at the top-left corner: sharp pixels there are cheap
    Image w(8, 8, 3);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 4; ++x) w.at(y, x, c) = 1.0;
    StepLoss loss = [&](const Image& p, std::size_t i, Image* grad) {
        const Image& s = data[i];
        Image diff(8, 8, 3);
        double total = 0.0;
        for (std::size_t k = 0; k < p.size(); ++k) {
            const double d = p.values()[k] - s.values()[k];
            total += w.values()[k] * d * d;
            diff.values()[k] = 2.0 * w.values()[k] * d;
        }
        if (grad) *grad = diff;
        return total;
    };
    NevaTrainConfig cfg;
    cfg.epochs = 6;
    cfg.batch_size = 4;
    cfg.learning_rate = 1e-2;
    cfg.horizon = 2;
    AttentionTrainLog a, b;
    const auto m1 = train_attention(tiny_model(), data, loss, cfg, &a);
    const auto m2 = train_attention(tiny_model(), data, loss, cfg, &b);
    CHECK(a.epoch_loss == b.epoch_loss);
    CHECK(std::equal(m1.network().parameters().begin(), m1.network().parameters().end(),
                     m2.network().parameters().begin()));
    CHECK(a.epoch_loss.back() < a.epoch_loss.front());
}

TEST_CASE("task model training entry point") {
    std::mt19937_64 rng(58);
    const tasks::TaskModel clf(tasks::TaskKind::classification,
                               nn::Network({3, 8, 8}, {nn::LayerSpec::dense(2)}, 1), 2);
    std::vector<tasks::LabeledStimulus> labeled{{testing::random_image(8, 8, 3, rng), 1}};
    NevaTrainConfig cfg;
    cfg.epochs = 1;
    CHECK_NOTHROW(train_attention(tiny_model(), clf, labeled, cfg));
    std::vector<tasks::LabeledStimulus> images{{labeled[0].stimulus, labeled[0].stimulus}};
    CHECK_THROWS_AS(train_attention(tiny_model(), clf, images, cfg), InvalidArgument);
    cfg.horizon = 0;
    CHECK_THROWS_AS(train_attention(tiny_model(), clf, labeled, cfg), InvalidArgument);
}

TEST_CASE("scanpath generation") {
    std::mt19937_64 rng(59);
    const Image s = testing::random_image(16, 20, 3, rng);
    const auto m = tiny_model();
    const fov::FoveationConfig cfg;
    const Scanpath a = generate_scanpath(m, s, 10, cfg);
    CHECK(a.size() == 10);
    for (const auto& f : a.fixations) CHECK(in_unit_square(f));
    CHECK(generate_scanpath(m, s, 10, cfg).fixations == a.fixations);
    CHECK(a.fixations[0] == m.next_fixation(to_attention_input(m, fov::blur_stimulus(s, cfg.sigma_blur))));
    const Scanpath one = generate_scanpath(m, s, 1, cfg);
    CHECK(one.fixations[0] == a.fixations[0]);
    CHECK_THROWS_AS(generate_scanpath(m, s, 0, cfg), InvalidArgument);
}

}
