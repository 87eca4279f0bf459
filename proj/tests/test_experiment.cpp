#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "caos/errors.hpp"
#include "caos/experiment.hpp"
#include "caos/image_io.hpp"

using namespace caos;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::filesystem::path scratch(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("caos_test_" + name);
    std::filesystem::remove_all(p);
    return p;
}

}  // namespace

TEST_CASE("config round trip is lossless for every preset") {
    for (const auto& name : preset_names()) {
        for (bool full : {false, true}) {
            const auto c = preset(name, full);
            const auto text = config_to_json(c);
            const auto back = config_from_json(text);
            CHECK(back == c);
            CHECK(config_to_json(back) == text);
        }
    }
}

TEST_CASE("config round trip keeps optional detector fields") {
    auto c = preset("exp1-hdr");
    c.pd1.model.pink = PinkNoise{0.125, 1.5};
    c.pd1.model.adc_bits = 16;
    c.pd1.model.shot_noise = true;
    c.plan.key_seed = 0xfedcba9876543210ULL;
    c.plan.hopping = true;
    c.plan.min_code_length = 512;
    c.noise_seed = 1ULL << 63;
    c.convention = DbConvention::Power10;
    CHECK(config_from_json(config_to_json(c)) == c);
}

TEST_CASE("unknown config fields are rejected with their line") {
    auto text = config_to_json(preset("exp2-dualband"));
    const auto pos = text.find("\"spot_radius\"");
    REQUIRE(pos != std::string::npos);
    text.insert(pos, "\"spot_colour\": 3,\n    ");
    const int line = 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<long>(pos), '\n'));
    try {
        config_from_json(text);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.line() == line);
        CHECK(std::string(e.what()).find("spot_colour") != std::string::npos);
    }
    CHECK_THROWS_AS(config_from_json("{\"schema\": \"caos-experiment/9\"}"), ConfigError);
    CHECK_THROWS_AS(config_from_json("{ not json"), ConfigError);
}

TEST_CASE("experiment-1 presets") {
    const auto fd = build_plan(preset("exp1-hdr", true).plan);
    const auto fm = build_plan(preset("exp1-fmcdma", true).plan);
    CHECK(fd.pixel_count() == 1276);
    CHECK(fd.set_count() == 319);
    CHECK(fd.frame_bits() == 320);
    CHECK(fm.frame_bits() == 1280);
    CHECK(fd.samples_per_bit() == 65536);
    CHECK(fd.frame_time() == doctest::Approx(320));
    CHECK(fm.frame_time() == doctest::Approx(1280));
    CHECK(validate(fd).speedup_vs_single_channel == doctest::Approx(4));

    const auto sd = build_plan(preset("exp1-hdr").plan);
    const auto sm = build_plan(preset("exp1-fmcdma").plan);
    CHECK(sd.grid().cols() <= 32);
    CHECK(sd.grid().rows() <= 32);
    CHECK(sm.frame_time() / sd.frame_time() == doctest::Approx(4));
    // same per-bit parameters in both modes
    CHECK(sd.samples_per_bit() == sm.samples_per_bit());
    CHECK(preset("exp1-hdr").pd1 == preset("exp1-fmcdma").pd1);
}

TEST_CASE("experiment-2 and -3 presets") {
    const auto e2 = build_plan(preset("exp2-dualband", true).plan);
    CHECK(e2.pixel_count() == 65 * 63);
    CHECK(e2.frame_bits() == 1280);
    CHECK(e2.samples_per_bit() == 16384);
    CHECK(e2.frame_time() == doctest::Approx(320));

    const auto e3 = build_plan(preset("exp3-active", true).plan);
    CHECK(e3.set_count() == 480);
    CHECK(e3.frame_bits() == 512);
    CHECK(e3.samples_per_bit() == 64000);
    CHECK(e3.bin(0) == 800);
    CHECK(e3.bin(1) == 928);
    CHECK(e3.bin(2) == 1120);
    CHECK_THROWS_AS(preset("exp9"), ConfigError);
}

TEST_CASE("frozen flicker reproduces the calibration") {
    const auto cal = calibrate_flicker(preset("exp1-fmcdma"), 3, kHdrCalibrationSnr);
    CHECK(cal.flicker == doctest::Approx(kHdrFlicker).epsilon(1e-4));
    CHECK(cal.snr == doctest::Approx(kHdrCalibrationSnr).epsilon(1e-4));
    // SNR falls monotonically as flicker grows
    auto steps = cal.steps;
    std::sort(steps.begin(), steps.end(), [](const auto& a, const auto& b) { return a.flicker < b.flicker; });
    for (std::size_t i = 1; i < steps.size(); ++i) CHECK(steps[i].snr <= steps[i - 1].snr + 1e-9);
}

TEST_CASE("runs are deterministic") {
    const auto a = run_experiment(preset("exp1-hdr"));
    const auto b = run_experiment(preset("exp1-hdr"));
    CHECK(a.images[0].raw == b.images[0].raw);
    const auto d1 = scratch("det1");
    const auto d2 = scratch("det2");
    write_outputs(a, d1);
    write_outputs(b, d2);
    for (const char* f : {"plan.json", "pd1.pgm", "pd1.csv", "summary.json", "patches.json", "config.json"}) {
        CHECK_MESSAGE(slurp(d1 / f) == slurp(d2 / f), f);
    }
    auto c = preset("exp1-hdr");
    c.noise_seed = 2;
    CHECK(run_experiment(c).images[0].raw != a.images[0].raw);
}

TEST_CASE("noiseless presets pass their own checks") {
    for (const char* name : {"exp2-dualband", "exp3-active", "exp3-active-b"}) {
        const auto r = run_experiment(preset(name));
        CHECK_MESSAGE(r.passed(), name);
        CHECK(!r.checks.empty());
    }
}

TEST_CASE("scene builders") {
    const PixelGrid g(12, 8);
    SceneSetup s;
    s.kind = "uniform";
    s.value = 0.25;
    auto b = build_scene(s, g, DbConvention::Amplitude20, std::nullopt);
    CHECK(b.scene.irradiance == std::vector<double>(96, 0.25));

    s.kind = "two-hole";
    s.variant = "C";
    CHECK_THROWS_AS(build_scene(s, g, DbConvention::Amplitude20, std::nullopt), ConfigError);
    s.kind = "bogus";
    CHECK_THROWS_AS(build_scene(s, g, DbConvention::Amplitude20, std::nullopt), ConfigError);

    // scalar map from a CSV raster
    const auto dir = scratch("scene");
    std::filesystem::create_directories(dir);
    Raster r{12, 8, {}};
    for (int i = 0; i < 96; ++i) r.values.push_back(i * 0.5);
    {
        std::ofstream out(dir / "map.csv");
        write_raster_csv(out, r);
    }
    s.kind = "file";
    s.path = (dir / "map.csv").string();
    b = build_scene(s, g, DbConvention::Amplitude20, std::nullopt);
    CHECK(b.scene.irradiance == r.values);
    CHECK_THROWS_AS(build_scene(s, PixelGrid(8, 8), DbConvention::Amplitude20, std::nullopt), DimensionMismatch);
}

TEST_CASE("responsivity names") {
    CHECK(resolve_responsivity("si").min_nm() == doctest::Approx(320));
    CHECK(resolve_responsivity("ge").max_nm() == doctest::Approx(1800));
    CHECK(resolve_responsivity("flat")(1000) == 1.0);
    CHECK_THROWS_AS(resolve_responsivity("/no/such/curve.csv"), ConfigError);
}
