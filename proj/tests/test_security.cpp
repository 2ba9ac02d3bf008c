#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include <cvmux/network.hpp>
#include <cvmux/security.hpp>

#include "oracles/tmsv_oracle.hpp"
#include "test_util.hpp"

using namespace cvmux;
using test_util::tmsv;

TEST_CASE("g_function values and domain") {
    CHECK(g_function(0.0) == 0.0);
    CHECK(g_function(1.0) == Catch::Approx(2.0).margin(1e-15));
    CHECK(g_function(0.5) ==
          Catch::Approx(1.5 * std::log2(1.5) - 0.5 * std::log2(0.5)).margin(1e-15));
    CHECK(g_function(0.5) == Catch::Approx(1.37744).margin(1e-5));
    CHECK(g_function(-1e-12) == 0.0);
    CHECK_THROWS_AS(g_function(-1e-3), unphysical_state_error);
    // strictly increasing
    double prev = 0.0;
    for (double x : {0.1, 0.2, 0.5, 1.0, 3.0, 10.0}) {
        CHECK(g_function(x) > prev);
        prev = g_function(x);
    }
}

TEST_CASE("von Neumann entropy on the spec states") {
    CHECK(von_neumann_entropy(CovarianceState::vacuum(3)) <= 1e-12);
    CHECK(von_neumann_entropy(test_util::thermal(3.0)) == Catch::Approx(2.0).margin(1e-12));
    CHECK(von_neumann_entropy(tmsv(2.0)) <= 1e-10);  // pure state
    CHECK_THROWS_AS(von_neumann_entropy(CovarianceState(1, 0.5 * Matrix::Identity(2, 2))),
                    unphysical_state_error);
}

TEST_CASE("pairwise mutual information") {
    const auto partition = ModePartition::split_half(2);

    SECTION("zero correlation gives zero information") {
        const auto state = direct_sum(test_util::thermal(2.0), test_util::thermal(3.0));
        const auto mi = pairwise_mutual_information(state, partition, Quadrature::X);
        CHECK(mi.total == 0.0);
    }

    SECTION("V_A = V_B = 2, C = 1") {
        Matrix g = 2.0 * Matrix::Identity(4, 4);
        g(0, 2) = g(2, 0) = 1.0;
        g(1, 3) = g(3, 1) = 1.0;
        const auto mi = pairwise_mutual_information(CovarianceState(2, g), partition, Quadrature::X);
        CHECK(mi.per_pair[0] == Catch::Approx(std::log2(4.0 / 3.0)).margin(1e-15));
        CHECK(mi.total == mi.per_pair[0]);
    }

    SECTION("non-physical correlation is an error") {
        Matrix g = Matrix::Identity(4, 4);
        g(0, 2) = g(2, 0) = 1.5;
        CHECK_THROWS_AS(pairwise_mutual_information(CovarianceState(2, g), partition, Quadrature::X),
                        numerical_error);
    }
}

TEST_CASE("property: MI is additive over an exact direct sum of pairs") {
    // Pairs with different squeezing; state laid out (A1,B1,A2,B2) then
    // repartitioned so Alice = {0,2}, Bob = {1,3}.
    const auto joint = direct_sum(tmsv(1.7), tmsv(3.1));
    ModePartition partition;
    partition.alice = {0, 2};
    partition.bob = {1, 3};
    partition.pairing = {{0, 1}, {2, 3}};

    const auto mi = pairwise_mutual_information(joint, partition, Quadrature::P);
    const auto single_a = pairwise_mutual_information(tmsv(1.7), ModePartition::split_half(2), Quadrature::P);
    const auto single_b = pairwise_mutual_information(tmsv(3.1), ModePartition::split_half(2), Quadrature::P);
    CHECK(mi.total == Catch::Approx(single_a.total + single_b.total).margin(1e-12));
}

TEST_CASE("property: shrinking |C| strictly reduces a pair's MI") {
    double prev = 1e9;
    for (double c : {1.6, 1.2, 0.8, 0.4, 0.1}) {
        Matrix g = 2.0 * Matrix::Identity(4, 4);
        g(0, 2) = g(2, 0) = c;
        const auto mi =
            pairwise_mutual_information(CovarianceState(2, g), ModePartition::split_half(2), Quadrature::X);
        CHECK(mi.total < prev);
        prev = mi.total;
    }
}

TEST_CASE("Holevo bound vanishes on a lossless channel") {
    const auto chi = holevo_bound(tmsv(2.0), ModePartition::split_half(2),
                                  ChannelSpec::uniform(1.0), Quadrature::P);
    CHECK(chi <= 1e-12);
}

TEST_CASE("Holevo bound of separable product inputs matches the analytic oracle") {
    // No A-B correlations: Eve's information comes only from Bob's thermal
    // modes. The closed-form single-mode expressions sum over modes.
    const double vb1 = 2.4, vb2 = 1.6, t = 0.45;
    const auto state = direct_sum(direct_sum(test_util::thermal(1.3), test_util::thermal(1.0)),
                                  direct_sum(test_util::thermal(vb1), test_util::thermal(vb2)));
    const auto partition = ModePartition::split_half(4);
    const auto chi = holevo_bound(state, partition, ChannelSpec::uniform(t), Quadrature::X);

    const double expected =
        tmsv_oracle::evaluate(vb1, t, 1.0).holevo + tmsv_oracle::evaluate(vb2, t, 1.0).holevo;
    CHECK(chi == Catch::Approx(expected).margin(1e-9));
}

TEST_CASE("TMSV through loss matches the independent single-pair oracle") {
    for (double v : {1.5, 2.0, 5.0}) {
        for (double t : {0.2, 0.6, 1.0}) {
            const auto oracle = tmsv_oracle::evaluate(v, t, 0.96);
            const auto report =
                key_rate(tmsv(v), ModePartition::split_half(2), ChannelSpec::uniform(t), 0.96, Quadrature::P);
            CHECK(report.total_mi == Catch::Approx(oracle.mutual_information).margin(1e-9));
            CHECK(report.holevo == Catch::Approx(oracle.holevo).margin(1e-9));
            CHECK(report.key_rate == Catch::Approx(oracle.key_rate).margin(1e-9));
        }
    }
}

TEST_CASE("key rate report basics") {
    const auto partition = ModePartition::split_half(2);

    SECTION("vacuum gives zero key") {
        const auto report =
            key_rate(CovarianceState::vacuum(2), partition, ChannelSpec::uniform(1.0), 1.0, Quadrature::P);
        CHECK(report.key_rate == 0.0);
        CHECK(report.total_mi == 0.0);
        CHECK(report.holevo <= 1e-12);
    }

    SECTION("clamped at zero when beta I < chi") {
        // Noisy weakly-correlated pair: Eve learns more than the parties share.
        Matrix g = 2.0 * Matrix::Identity(4, 4);
        g(0, 2) = g(2, 0) = 0.3;
        g(1, 3) = g(3, 1) = -0.3;
        const auto report =
            key_rate(CovarianceState(2, g), partition, ChannelSpec::uniform(0.3), 0.9, Quadrature::P);
        CHECK(report.beta * report.total_mi - report.holevo < 0.0);
        CHECK(report.key_rate == 0.0);
    }

    SECTION("invariant: key = max(0, beta*mi - chi) exactly") {
        const auto report = key_rate(tmsv(2.0), partition, ChannelSpec::uniform(0.2), 0.96, Quadrature::P);
        CHECK(report.key_rate == std::max(0.0, report.beta * report.total_mi - report.holevo));
        double total = 0.0;
        for (double m : report.per_pair_mi) total += m;
        CHECK(report.total_mi == total);
    }

    SECTION("beta outside (0,1] rejected") {
        CHECK_THROWS_AS(key_rate(tmsv(2.0), partition, ChannelSpec::uniform(0.2), 0.0, Quadrature::P),
                        input_error);
        CHECK_THROWS_AS(key_rate(tmsv(2.0), partition, ChannelSpec::uniform(0.2), 1.2, Quadrature::P),
                        input_error);
    }
}

TEST_CASE("pessimistic adjustment arithmetic") {
    SECTION("asymptotic limit is the identity") {
        const auto state = test_util::random_state(3, 8);
        const auto adjusted = pessimistic_adjust(state, ErrorModel::asymptotic());
        CHECK((adjusted.matrix - state.matrix).cwiseAbs().maxCoeff() <= 1e-12);
    }

    SECTION("V_i = V_j = 2, C = 1, N = 99") {
        Matrix g = 2.0 * Matrix::Identity(4, 4);
        g(0, 2) = g(2, 0) = 1.0;
        const auto adjusted = pessimistic_adjust(CovarianceState(2, g), ErrorModel{99});
        CHECK(adjusted.matrix(0, 0) == Catch::Approx(2.0 + 2.0 * std::sqrt(2.0) / 10.0).margin(1e-14));
        CHECK(adjusted.matrix(0, 2) == Catch::Approx(1.0 - std::sqrt(5.0) / 10.0).margin(1e-14));
        // untouched zero entries stay zero
        CHECK(adjusted.matrix(0, 1) == 0.0);
    }

    SECTION("correlations are floored at zero, never sign-flipped") {
        Matrix g = Matrix::Identity(4, 4) * 2.0;
        g(0, 2) = g(2, 0) = 0.01;
        g(1, 3) = g(3, 1) = -0.01;
        const auto adjusted = pessimistic_adjust(CovarianceState(2, g), ErrorModel{10});
        CHECK(adjusted.matrix(0, 2) == 0.0);
        CHECK(adjusted.matrix(1, 3) == 0.0);
    }

    SECTION("N < 2 rejected") {
        CHECK_THROWS_AS(pessimistic_adjust(CovarianceState::vacuum(1), ErrorModel{1}), input_error);
    }
}

TEST_CASE("property: pessimistic key rates are ordered in N") {
    const auto state = tmsv(2.5);
    const auto partition = ModePartition::split_half(2);
    const auto channel = ChannelSpec::uniform(0.5);

    double prev = -1.0;
    for (std::int64_t n : {5000, 10000, 40000}) {
        const auto adjusted = pessimistic_adjust(state, ErrorModel{n});
        const auto report = key_rate(adjusted, partition, channel, 0.96, Quadrature::P);
        CHECK(report.key_rate >= prev);
        prev = report.key_rate;
    }
    const auto asymptotic = key_rate(state, partition, channel, 0.96, Quadrature::P);
    CHECK(asymptotic.key_rate >= prev);
    CHECK(asymptotic.key_rate > 0.0);
}

TEST_CASE("property: Holevo bound is invariant under local networks (keystone)") {
    for (std::uint64_t seed : {41u, 42u, 43u}) {
        const auto state = test_util::random_state(4, seed);
        const auto partition = ModePartition::split_half(4);
        const auto params = test_util::random_params(partition, seed + 7);
        const auto transformed = apply_network(state, partition, params);
        for (double t : {0.25, 0.7}) {
            const auto chi_before = holevo_bound(state, partition, ChannelSpec::uniform(t), Quadrature::P);
            const auto chi_after =
                holevo_bound(transformed, partition, ChannelSpec::uniform(t), Quadrature::P);
            CHECK(chi_after == Catch::Approx(chi_before).margin(1e-8));
        }
    }
}

TEST_CASE("property: key rate is non-increasing in channel loss") {
    const auto state = tmsv(3.0);
    const auto partition = ModePartition::split_half(2);
    double prev = 1e9;
    for (double db = 0.0; db <= 12.0; db += 1.5) {
        const auto report = key_rate(state, partition, ChannelSpec::from_db(db), 0.96, Quadrature::P);
        CHECK(report.key_rate <= prev + 1e-12);
        prev = report.key_rate;
    }
}
