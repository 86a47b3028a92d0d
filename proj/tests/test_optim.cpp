#include <doctest.h>

#include <cmath>

#include "chartsurf/optim/adam.hpp"
#include "chartsurf/optim/gradcheck.hpp"
#include "chartsurf/optim/param_store.hpp"

using namespace chartsurf;
using namespace chartsurf::optim;

TEST_CASE("adam: zero gradients leave parameters unchanged") {
    ParamStore store;
    store.add_group("w", {1.0, -2.0, 3.0}, 0.1);
    Adam adam;
    store.zero_grads();
    adam.step(store);
    CHECK(store.values("w")[0] == 1.0);
    CHECK(store.values("w")[1] == -2.0);
    CHECK(store.values("w")[2] == 3.0);
}

TEST_CASE("adam: hand-worked first step") {
    // g=1, lr=0.1, step 1: mhat=1, vhat=1 -> delta = -0.1 / (1 + 1e-8)
    ParamStore store;
    store.add_group("x", {0.0}, 0.1);
    Adam adam;
    store.grads("x")[0] = 1.0;
    adam.step(store);
    const double expected = -0.1 * (1.0 / (1.0 + 1e-8));
    CHECK(store.values("x")[0] == doctest::Approx(expected).epsilon(1e-12));
    CHECK(std::fabs(store.values("x")[0] + 0.1) < 1e-8);
}

TEST_CASE("adam: per-group learning rates are independent") {
    ParamStore store;
    store.add_group("a", {0.0}, 0.1);
    store.add_group("b", {0.0}, 0.01);
    Adam adam;
    store.grads("a")[0] = 1.0;
    store.grads("b")[0] = 1.0;
    adam.step(store);
    CHECK(store.values("a")[0] == doctest::Approx(-0.1).epsilon(1e-6));
    CHECK(store.values("b")[0] == doctest::Approx(-0.01).epsilon(1e-6));
}

TEST_CASE("adam: registration order does not change a parameter's update") {
    auto run = [](bool swap) {
        ParamStore store;
        if (swap) {
            store.add_group("b", {2.0}, 0.05);
            store.add_group("a", {1.0}, 0.1);
        } else {
            store.add_group("a", {1.0}, 0.1);
            store.add_group("b", {2.0}, 0.05);
        }
        Adam adam;
        for (int it = 0; it < 5; ++it) {
            store.zero_grads();
            store.grads("a")[0] = store.values("a")[0];
            store.grads("b")[0] = 3.0 * store.values("b")[0];
            adam.step(store);
        }
        return std::pair<double, double>(store.values("a")[0], store.values("b")[0]);
    };
    const auto [a0, b0] = run(false);
    const auto [a1, b1] = run(true);
    CHECK(a0 == a1);
    CHECK(b0 == b1);
}

TEST_CASE("adam: non-finite gradient names the group") {
    ParamStore store;
    store.add_group("enc", {0.0}, 0.1);
    Adam adam;
    store.grads("enc")[0] = std::nan("");
    try {
        adam.step(store);
        FAIL("expected throw");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("enc") != std::string::npos);
    }
}

TEST_CASE("gradient clipping at global norm") {
    ParamStore store;
    store.add_group("x", {0.0, 0.0}, 0.1);
    store.grads("x")[0] = 30.0;
    store.grads("x")[1] = 40.0;  // norm 50
    store.clip_grad_norm(10.0);
    CHECK(store.grad_norm() == doctest::Approx(10.0));
    CHECK(store.grads("x")[0] == doctest::Approx(6.0));
    CHECK(store.grads("x")[1] == doctest::Approx(8.0));
    store.clip_grad_norm(100.0);  // already below: unchanged
    CHECK(store.grads("x")[0] == doctest::Approx(6.0));
}

TEST_CASE("check_gradients: exact quadratic") {
    ParamStore store;
    std::vector<double> init(40);
    for (size_t i = 0; i < init.size(); ++i) init[i] = 0.1 * static_cast<double>(i) - 2.0;
    store.add_group("x", init, 1e-3);
    auto loss = [](ParamStore& s) {
        auto xs = s.values("x");
        auto gs = s.grads("x");
        double l = 0.0;
        for (size_t i = 0; i < xs.size(); ++i) {
            l += 0.5 * xs[i] * xs[i];
            gs[i] += xs[i];
        }
        return l;
    };
    const auto res = check_gradients(loss, store, 1e-5, 0.5, 11);
    CHECK(res.checked > 0);
    CHECK(res.max_rel_error < 1e-9);
}

TEST_CASE("check_gradients: flags a wrong gradient") {
    ParamStore store;
    store.add_group("x", {1.0, 2.0}, 1e-3);
    auto loss = [](ParamStore& s) {
        auto xs = s.values("x");
        auto gs = s.grads("x");
        gs[0] += 2.0 * xs[0];  // wrong: true grad is x0
        gs[1] += xs[1];
        return 0.5 * (xs[0] * xs[0] + xs[1] * xs[1]);
    };
    const auto res = check_gradients(loss, store, 1e-5, 1.0, 3);
    CHECK(res.max_rel_error > 0.1);
    CHECK(res.worst_param == "x[0]");
}
