// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "avflow/errors.hpp"
#include "avflow/flow.hpp"

using namespace avflow;

namespace {

LatentSeq<double> latent_of(std::vector<double> vals, int cols = 1, double fps = 31.25) {
    const int rows = static_cast<int>(vals.size()) / cols;
    LatentSeq<double> x(MatD(rows, cols), fps);
    x.data.v = std::move(vals);
    return x;
}

}  // namespace

TEST_CASE("interpolate follows the straight path") {
    const auto x0 = latent_of({0.0});
    const auto x1 = latent_of({2.0});
    CHECK(interpolate(x0, x1, FlowTime(0.0)).data(0, 0) == 0.0);
    CHECK(interpolate(x0, x1, FlowTime(1.0)).data(0, 0) == 2.0);
    CHECK(interpolate(x0, x1, FlowTime(0.25)).data(0, 0) == doctest::Approx(0.5));

    SUBCASE("shape mismatch is a contract violation") {
        const auto bad = latent_of({1.0, 2.0});
        CHECK_THROWS_AS(interpolate(x0, bad, FlowTime(0.5)), ContractError);
    }

    SUBCASE("path consistency: x_t - x_0 = t * (x1 - x0)") {
        Rng rng(5);
        LatentSeq<double> a(MatD(6, 3), 31.25), b(MatD(6, 3), 31.25);
        rng.fill_normal(a.data);
        rng.fill_normal(b.data);
        const auto vel = target_velocity(a, b);
        for (double t : {0.1, 0.37, 0.9}) {
            const auto xt = interpolate(a, b, FlowTime(t));
            for (size_t i = 0; i < xt.data.v.size(); ++i)
                CHECK(xt.data.v[i] - a.data.v[i] ==
                      doctest::Approx(t * vel.data.v[i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("target velocity") {
    const auto x0 = latent_of({1.0, 2.0}, 2);
    const auto x1 = latent_of({3.0, 5.0}, 2);
    const auto v = target_velocity(x0, x1);
    CHECK(v.data(0, 0) == 2.0);
    CHECK(v.data(0, 1) == 3.0);

    SUBCASE("degenerate path") {
        const auto z = target_velocity(x0, x0);
        CHECK(z.data(0, 0) == 0.0);
        CHECK(z.data(0, 1) == 0.0);
    }
    SUBCASE("antisymmetry") {
        const auto w = target_velocity(x1, x0);
        CHECK(w.data(0, 0) == -v.data(0, 0));
        CHECK(w.data(0, 1) == -v.data(0, 1));
    }
}

TEST_CASE("cfg velocity combination") {
    const auto vu = latent_of({0.0});
    const auto vc = latent_of({1.0});
    CHECK(cfg_velocity(vc, vu, 0.0).data(0, 0) == 0.0);
    CHECK(cfg_velocity(vc, vu, 1.0).data(0, 0) == 1.0);
    CHECK(cfg_velocity(vc, vu, 4.5).data(0, 0) == doctest::Approx(4.5));
}

TEST_CASE("euler integration") {
    SUBCASE("constant field is exact for any step count") {
        const auto c = latent_of({0.7, -1.3}, 2);
        auto field = [&](FlowTime, const LatentSeq<double>&) { return c; };
        for (int n : {1, 3, 25, 1000}) {
            auto x = euler_integrate<double>(field, latent_of({1.0, 2.0}, 2), n);
            CHECK(std::abs(x.data(0, 0) - 1.7) < 1e-12 * 1.7);
            CHECK(std::abs(x.data(0, 1) - 0.7) < 1e-12);
        }
    }

    SUBCASE("one step of the linear ODE") {
        auto field = [](FlowTime, const LatentSeq<double>& x) { return x; };
        const auto x = euler_integrate<double>(field, latent_of({1.0}), 1);
        CHECK(x.data(0, 0) == doctest::Approx(2.0));
    }

    SUBCASE("linear ODE converges to e") {
        auto field = [](FlowTime, const LatentSeq<double>& x) { return x; };
        const auto x = euler_integrate<double>(field, latent_of({1.0}), 1000);
        CHECK(std::abs(x.data(0, 0) - std::exp(1.0)) < 0.002);
    }

    SUBCASE("non-finite state reports the step") {
        auto field = [](FlowTime t, const LatentSeq<double>& x) {
            LatentSeq<double> v = x;
            if (t.t >= 0.5) v.data(0, 0) = std::numeric_limits<double>::infinity();
            return v;
        };
        try {
            euler_integrate<double>(field, latent_of({1.0}), 4);
            FAIL("expected NumericError");
        } catch (const NumericError& e) {
            CHECK(std::string(e.what()).find("step 2") != std::string::npos);
        }
    }
}

TEST_CASE("cfm loss") {
    SUBCASE("cheating evaluator drives the loss to zero") {
        std::vector<LatentSeq<double>> batch;
        Rng data_rng(9);
        for (int b = 0; b < 4; ++b) {
            LatentSeq<double> x1(MatD(10, 3), 31.25);
            data_rng.fill_normal(x1.data);
            batch.push_back(std::move(x1));
        }
        // Recover x0 from x_t and return the exact target velocity.
        Rng probe(123);
        std::vector<double> ts;
        std::vector<MatD> x0s;
        for (const auto& x1 : batch) {
            auto d = draw_flow<double>(probe, x1.data.rows, x1.data.cols);
            ts.push_back(d.t);
            x0s.push_back(d.x0);
        }
        auto cheat = [&](FlowTime, size_t idx, const LatentSeq<double>&) {
            return target_velocity(LatentSeq<double>(x0s[idx], 31.25), batch[idx]);
        };
        Rng rng(123);
        CHECK(cfm_loss<double>(cheat, batch, rng) == doctest::Approx(0.0).epsilon(1e-12));
    }

    SUBCASE("zero model on zero data: expected loss is 1 per element") {
        // With x1 = 0 the target is -x0, so the loss averages ||x0||^2 over
        // standard-normal draws: 1.0 per element.
        std::vector<LatentSeq<double>> batch;
        for (int b = 0; b < 500; ++b) batch.emplace_back(MatD(50, 4), 31.25);
        auto zero_model = [&](FlowTime, size_t, const LatentSeq<double>& x) {
            return LatentSeq<double>(MatD(x.data.rows, x.data.cols), x.fps);
        };
        Rng rng(2024);
        const double loss = cfm_loss<double>(zero_model, batch, rng);  // 1e5 draws
        CHECK(loss == doctest::Approx(1.0).epsilon(0.02));
    }

    SUBCASE("fixed seed reproduces the loss bit for bit") {
        std::vector<LatentSeq<double>> batch;
        Rng data_rng(77);
        for (int b = 0; b < 3; ++b) {
            LatentSeq<double> x1(MatD(8, 2), 31.25);
            data_rng.fill_normal(x1.data);
            batch.push_back(std::move(x1));
        }
        auto model = [](FlowTime t, size_t, const LatentSeq<double>& x) {
            LatentSeq<double> v = x;
            for (auto& val : v.data.v) val *= 0.5 + t.t;
            return v;
        };
        Rng r1(55), r2(55);
        const double l1 = cfm_loss<double>(model, batch, r1);
        const double l2 = cfm_loss<double>(model, batch, r2);
        CHECK(l1 == l2);
    }

    SUBCASE("non-finite output names the sample") {
        std::vector<LatentSeq<double>> batch(3, LatentSeq<double>(MatD(2, 2), 31.25));
        auto model = [](FlowTime, size_t idx, const LatentSeq<double>& x) {
            LatentSeq<double> v = x;
            if (idx == 1) v.data(0, 0) = std::numeric_limits<double>::quiet_NaN();
            return v;
        };
        Rng rng(1);
        try {
            cfm_loss<double>(model, batch, rng);
            FAIL("expected NumericError");
        } catch (const NumericError& e) {
            CHECK(std::string(e.what()).find("sample 1") != std::string::npos);
        }
    }
}
