#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include <cvmux/channel.hpp>
#include <cvmux/security.hpp>

#include "test_util.hpp"

using namespace cvmux;
using test_util::tmsv;

TEST_CASE("channel spec validation and dB conversion") {
    CHECK(ChannelSpec::uniform(0.5).loss_db() == Catch::Approx(10.0 * std::log10(2.0)));
    CHECK(ChannelSpec::from_db(3.0).t_for(0) == Catch::Approx(std::pow(10.0, -0.3)));
    CHECK_THROWS_AS(ChannelSpec::from_db(-1.0), input_error);
    CHECK_THROWS_AS(ChannelSpec::uniform(0.0).check(1), input_error);
    CHECK_THROWS_AS(ChannelSpec::uniform(1.1).check(1), input_error);
    CHECK_THROWS_AS((ChannelSpec{{0.5, 0.5, 0.5}}.check(2)), input_error);
}

TEST_CASE("lossless channel: B' equals B and Eve holds uncorrelated vacuum") {
    const auto state = test_util::random_state(4, 31);
    const auto partition = ModePartition::split_half(4);
    const auto dilated = dilate_loss(state, partition, ChannelSpec::uniform(1.0));

    REQUIRE(dilated.state.n_modes == 6);
    CHECK((dilated.state.matrix.topLeftCorner(8, 8) - state.matrix).cwiseAbs().maxCoeff() <= 1e-15);
    CHECK((dilated.state.matrix.bottomRightCorner(4, 4) - Matrix::Identity(4, 4)).norm() <= 1e-15);
    CHECK(dilated.state.matrix.topRightCorner(8, 4).cwiseAbs().maxCoeff() <= 1e-15);

    const auto received = attenuate(state, partition, ChannelSpec::uniform(1.0));
    CHECK((received.matrix - state.matrix).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("loss on vacuum keeps the joint state vacuum") {
    const auto dilated = dilate_loss(CovarianceState::vacuum(2), ModePartition::split_half(2),
                                     ChannelSpec::uniform(0.37));
    CHECK((dilated.state.matrix - Matrix::Identity(6, 6)).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("thermal mode through T=0.5, against direct dilation algebra") {
    // Single Bob mode of variance 3, Alice side empty of correlations.
    Matrix g = Matrix::Identity(4, 4);
    g(2, 2) = g(3, 3) = 3.0;
    const CovarianceState state(2, g);
    const auto partition = ModePartition::split_half(2);
    const auto dilated = dilate_loss(state, partition, ChannelSpec::uniform(0.5));

    REQUIRE(dilated.eve_modes == std::vector<int>{2});
    CHECK(dilated.state.matrix(2, 2) == Catch::Approx(2.0).margin(1e-14));   // B'
    CHECK(dilated.state.matrix(4, 4) == Catch::Approx(2.0).margin(1e-14));   // E
    CHECK(std::abs(dilated.state.matrix(2, 4)) == Catch::Approx(1.0).margin(1e-14));
}

TEST_CASE("attenuating a TMSV matches the closed-form map") {
    const auto state = tmsv(2.0);
    const auto partition = ModePartition::split_half(2);
    const auto received = attenuate(state, partition, ChannelSpec::uniform(0.2));

    const double c = std::sqrt(3.0) * std::sqrt(0.2);
    CHECK(received.matrix(0, 0) == Catch::Approx(2.0).margin(1e-14));
    CHECK(received.matrix(2, 2) == Catch::Approx(1.2).margin(1e-14));
    CHECK(received.matrix(3, 3) == Catch::Approx(1.2).margin(1e-14));
    CHECK(received.matrix(0, 2) == Catch::Approx(c).margin(1e-14));
    CHECK(received.matrix(1, 3) == Catch::Approx(-c).margin(1e-14));
}

TEST_CASE("property: dilation is symplectic-congruent to input + vacuum") {
    for (std::uint64_t seed : {3u, 4u, 5u}) {
        const auto state = test_util::random_state(4, seed);
        const auto partition = ModePartition::split_half(4);
        const auto dilated = dilate_loss(state, partition, ChannelSpec{{0.3, 0.8}});

        auto nu_in = symplectic_spectrum(embed_vacuum(state, 2));
        const auto nu_out = symplectic_spectrum(dilated.state);
        REQUIRE(nu_in.size() == nu_out.size());
        for (std::size_t i = 0; i < nu_in.size(); ++i)
            CHECK(nu_out[i] == Catch::Approx(nu_in[i]).margin(1e-10));
    }
}

TEST_CASE("Eve ancillas of uncorrelated Bob modes stay uncorrelated") {
    const auto state = direct_sum(direct_sum(test_util::thermal(2.0), test_util::thermal(1.5)),
                                  direct_sum(test_util::thermal(3.0), test_util::thermal(1.2)));
    const auto partition = ModePartition::split_half(4);
    const auto dilated = dilate_loss(state, partition, ChannelSpec::uniform(0.4));
    const auto eve = restrict(dilated.state, dilated.eve_modes);
    CHECK(std::abs(eve.matrix(0, 2)) <= 1e-14);
    CHECK(std::abs(eve.matrix(1, 3)) <= 1e-14);
}

TEST_CASE("property: attenuation pulls Bob's variances toward vacuum") {
    const auto state = tmsv(4.0);
    const auto partition = ModePartition::split_half(2);
    double prev_var = 4.0, prev_corr = std::sqrt(15.0);
    for (double t : {0.8, 0.5, 0.2, 0.05, 0.001}) {
        const auto received = attenuate(state, partition, ChannelSpec::uniform(t));
        const double var = received.matrix(2, 2);
        const double corr = std::abs(received.matrix(0, 2));
        CHECK(var < prev_var);
        CHECK(var >= 1.0);
        CHECK(corr < prev_corr);
        prev_var = var;
        prev_corr = corr;
    }
}

TEST_CASE("beam-splitter sign convention does not affect entropic quantities") {
    // Dilate with the rotation-flavored convention (diag +sqrt(t), +sqrt(t))
    // assembled by hand and compare the Holevo bound to the library's.
    const auto state = tmsv(2.5);
    const auto partition = ModePartition::split_half(2);
    const double t = 0.35;

    const auto chi_lib = holevo_bound(state, partition, ChannelSpec::uniform(t), Quadrature::P);

    const auto embedded = embed_vacuum(state, 1);
    Matrix rot = Matrix::Identity(6, 6);
    const double a = std::sqrt(t), b = std::sqrt(1.0 - t);
    rot.block<2, 2>(2, 2) = a * Matrix::Identity(2, 2);
    rot.block<2, 2>(2, 4) = -b * Matrix::Identity(2, 2);
    rot.block<2, 2>(4, 2) = b * Matrix::Identity(2, 2);
    rot.block<2, 2>(4, 4) = a * Matrix::Identity(2, 2);
    const CovarianceState joint(3, rot * embedded.matrix * rot.transpose());

    const double s_e = von_neumann_entropy(restrict(joint, {2}));
    const double s_eb = von_neumann_entropy(restrict(condition_on_homodyne(joint, {1}, Quadrature::P), {1}));
    CHECK(chi_lib == Catch::Approx(s_e - s_eb).margin(1e-12));
}
