// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <numbers>

#include "otfsradar/params.hpp"
#include "otfsradar/rng.hpp"

using namespace otfsradar;

namespace {

constexpr double kPi = std::numbers::pi;

/// Paper-scale setup: N_a = N = M = 16, f_c = 60 GHz, B = 150 MHz.
Scenario paper_scenario() {
    Scenario s;
    s.config = SystemConfig::make(16, 16, 150e6 / 16, 16, 60e9);
    s.targets.push_back(TargetTruth::from_kinematics(14.0, 60.0 / 3.6, 0.0, {1.0, 0.0}, 60e9));
    return s;
}

} // namespace

TEST_CASE("roundtrip_params zero case") {
    auto [tau, nu] = roundtrip_params(0.0, 0.0, 60e9);
    CHECK(tau == 0.0);
    CHECK(nu == 0.0);
}

TEST_CASE("roundtrip_params at the reference scenario (r = 14 m, v = 60 km/h, 60 GHz)") {
    auto [tau, nu] = roundtrip_params(14.0, 60.0 / 3.6, 60e9);
    CHECK(tau == doctest::Approx(9.339794665548258e-08).epsilon(1e-12));
    CHECK(nu == doctest::Approx(6671.281903963042).epsilon(1e-12));
}

TEST_CASE("roundtrip_params tau definition: r = c/2 gives one second") {
    auto [tau, nu] = roundtrip_params(kSpeedOfLight / 2.0, 0.0, 1e9);
    CHECK(tau == 1.0);
    CHECK(nu == 0.0);
}

TEST_CASE("roundtrip_params is separately linear in r and v") {
    CounterRng rng(CounterRng::derive({2024}));
    for (std::uint64_t i = 0; i < 50; ++i) {
        const double r = 1e3 * rng.uniform01(2 * i);
        const double v = 1e2 * (rng.uniform01(2 * i + 1) - 0.5);
        auto [tau1, nu1] = roundtrip_params(r, v, 24e9);
        auto [tau2, nu2] = roundtrip_params(2.0 * r, 2.0 * v, 24e9);
        CHECK(tau2 == 2.0 * tau1); // doubling is exact in binary floating point
        CHECK(nu2 == 2.0 * nu1);
    }
}

TEST_CASE("validate_scenario accepts the reference scenario unchanged") {
    const Scenario s = paper_scenario();
    const Scenario v = validate_scenario(s);
    CHECK(v.config.n_doppler == 16);
    CHECK(v.targets.size() == 1);
    CHECK(v.targets[0].delay_s == s.targets[0].delay_s);
    // re-validation is idempotent
    const Scenario v2 = validate_scenario(v);
    CHECK(v2.targets[0].delay_s == v.targets[0].delay_s);
}

TEST_CASE("validate_scenario rejects P = N_a (empty noise subspace)") {
    Scenario s = paper_scenario();
    s.config = SystemConfig::make(8, 8, 150e6 / 8, 2, 60e9);
    s.targets.assign(2, TargetTruth::from_kinematics(5.0, 0.0, 0.1, {1.0, 0.0}, 60e9));
    CHECK_THROWS_AS(validate_scenario(s), InvalidConfig);
}

TEST_CASE("validate_scenario rejects a delay outside the frame") {
    Scenario s = paper_scenario();
    // r large enough that tau = 2r/c >= N*T
    const double frame = s.config.frame_duration_s();
    s.targets[0] =
        TargetTruth::from_kinematics(frame * kSpeedOfLight, 0.0, 0.0, {1.0, 0.0}, 60e9);
    CHECK_THROWS_AS(validate_scenario(s), InvalidConfig);
}

TEST_CASE("validate_scenario reports every violation, not just the first") {
    Scenario s = paper_scenario();
    s.config.n_doppler = 1;              // bad N
    s.config.n_antennas = 1;             // bad N_a (and makes P >= N_a)
    s.targets[0].range_m = -3.0;         // bad range
    try {
        validate_scenario(s);
        FAIL("expected InvalidConfig");
    } catch (const InvalidConfig& e) {
        CHECK(e.violations().size() >= 3);
    }
}

TEST_CASE("scenario JSON round trip keeps kinematics, degrees at the boundary") {
    Scenario s = paper_scenario();
    s.targets[0] = TargetTruth::from_kinematics(14.0, 60.0 / 3.6, 20.0 * kPi / 180.0,
                                                {0.6, -0.8}, 60e9);
    const nlohmann::json j = scenario_to_json(s);
    CHECK(j.at("targets")[0].at("phi_deg").get<double>() == doctest::Approx(20.0));
    const Scenario back = scenario_from_json(j);
    CHECK(back.config.n_doppler == s.config.n_doppler);
    CHECK(back.config.delta_f_hz == s.config.delta_f_hz);
    CHECK(back.targets[0].aoa_rad == doctest::Approx(s.targets[0].aoa_rad).epsilon(1e-15));
    CHECK(back.targets[0].delay_s == s.targets[0].delay_s);
    CHECK(back.targets[0].gain == s.targets[0].gain);
}

TEST_CASE("scenario JSON rejects unknown keys and missing fields") {
    nlohmann::json j = scenario_to_json(paper_scenario());
    j["delta_f"] = 1.0; // typo'd key
    CHECK_THROWS_AS(scenario_from_json(j), InvalidConfig);

    nlohmann::json j2 = scenario_to_json(paper_scenario());
    j2.erase("N_a");
    CHECK_THROWS_AS(scenario_from_json(j2), InvalidConfig);
}

TEST_CASE("omitted beamformer defaults to the uniform broadside beam") {
    nlohmann::json j = scenario_to_json(paper_scenario());
    j.erase("f_bf_real");
    j.erase("f_bf_imag");
    const Scenario s = scenario_from_json(j);
    REQUIRE(s.config.beamformer.size() == 16);
    for (const Complex& f : s.config.beamformer)
        CHECK(f == Complex{1.0 / 4.0, 0.0}); // 1/sqrt(16)
}

TEST_CASE("scenario file save/load round trip") {
    const std::string path = "scenario_roundtrip_test.json";
    Scenario s = paper_scenario();
    s.targets[0] = TargetTruth::from_kinematics(11.0, -4.5, -0.2, {0.3, 0.4}, 60e9);
    save_scenario(s, path);
    const Scenario back = load_scenario(path);
    CHECK(back.targets[0].range_m == s.targets[0].range_m);
    CHECK(back.targets[0].gain == s.targets[0].gain);
    CHECK(scenario_hash(back) == scenario_hash(s));
    std::remove(path.c_str());
    CHECK_THROWS_AS(load_scenario(path), IoError);
}

TEST_CASE("derived quantities: T*delta_f = 1, h' rotation") {
    const Scenario s = paper_scenario();
    CHECK(s.config.symbol_duration_s * s.config.delta_f_hz == doctest::Approx(1.0).epsilon(1e-15));
    const TargetTruth& t = s.targets[0];
    CHECK(std::abs(t.rotated_gain) == doctest::Approx(std::abs(t.gain)).epsilon(1e-12));
    CHECK(std::arg(t.rotated_gain) ==
          doctest::Approx(2.0 * kPi * t.doppler_hz * t.delay_s).epsilon(1e-9));
}
