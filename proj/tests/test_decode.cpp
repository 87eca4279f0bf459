#include <doctest.h>

#include <cmath>
#include <numeric>

#include "caos/decode.hpp"
#include "caos/errors.hpp"
#include "caos/sensor.hpp"
#include "oracles.hpp"

using namespace caos;

namespace {

PlanRequest request(Mode mode, int cols, int rows, int P, std::uint64_t key = 0, bool hopping = false) {
    PlanRequest r;
    r.grid = PixelGrid(cols, rows);
    r.mode = mode;
    r.channels = P;
    r.f1 = 8;
    r.bit_rate = 4;
    r.sample_rate = 1024;
    r.key_seed = key;
    r.hopping = hopping;
    if (mode == Mode::ActiveOverlapped) {
        r.f1 = 0;
        r.explicit_freqs = {100, 116, 140};
        r.bit_rate = 4;
        r.sample_rate = 1000;
    }
    return r;
}

Scene scene_for(const CodingPlan& plan, std::uint64_t salt = 1) {
    Scene s;
    s.grid = plan.grid();
    const int Q = plan.pixel_count();
    auto value = [&](int q, int p) { return std::fmod(0.37 * (q + 1) * (p + 2) + 0.11 * static_cast<double>(salt), 1.0) + 0.05; };
    if (plan.is_active()) {
        for (int p = 0; p < plan.channel_count(); ++p) {
            std::vector<double> m;
            for (int q = 0; q < Q; ++q) m.push_back(value(q, p));
            s.per_source.push_back(std::move(m));
        }
    } else {
        for (int q = 0; q < Q; ++q) s.irradiance.push_back(value(q, 0));
    }
    return s;
}

double roundtrip_error(const CodingPlan& plan, const Scene& scene, DetectorSide side) {
    DetectorModel det;
    det.gain = 1.7;
    const auto stream = synthesize(plan, scene, det, side);
    const auto img = decode_frame(stream, plan, side);
    double err = 0;
    if (plan.is_active()) {
        double peak = 0;
        for (const auto& m : scene.per_source) peak = std::max(peak, *std::max_element(m.begin(), m.end()));
        for (int p = 0; p < plan.channel_count(); ++p) {
            const auto got = img.normalized(p);
            std::vector<double> want = scene.per_source[static_cast<std::size_t>(p)];
            for (auto& v : want) v /= peak;
            err = std::max(err, oracle::max_abs_rel_error(got, want));
        }
    } else {
        err = oracle::max_abs_rel_error(img.normalized(0), oracle::normalize(scene.irradiance));
    }
    return err;
}

}  // namespace

TEST_CASE("DSP gain") {
    CHECK(std::abs(dsp_gain_db(65536) - 45.15) < 0.02);
    CHECK(std::abs(dsp_gain_db(16384) - 39.13) < 0.01);
    CHECK(dsp_gain_db(2) == 0.0);
    CHECK_THROWS_AS(dsp_gain_db(1), Error);
}

TEST_CASE("per-bit spectra of a single pixel") {
    const auto plan = build_plan(request(Mode::PassiveFdmaCdma, 2, 2, 4));
    Scene scene = uniform_scene(plan.grid(), 0.0);
    const int q = 1;  // member 1
    scene.irradiance[q] = 1.0;
    DetectorModel det;
    det.gain = 3;
    const auto spectra = per_bit_spectra(synthesize(plan, scene, det), plan);
    const long F = plan.samples_per_bit();
    for (int w = 0; w < plan.frame_bits(); ++w) {
        for (int c = 0; c < 4; ++c) {
            const double want = (plan.code_bit(q, w) && c == 1) ? 3 * oracle::square_bin_magnitude(F, plan.bin(1)) : 0.0;
            CHECK(std::abs(spectra.at(w, c) - want) <= 1e-9 * 3 * F / std::numbers::pi);
        }
    }
}

TEST_CASE("all-zero stream gives all-zero spectra") {
    const auto plan = build_plan(request(Mode::PassiveFdmaCdma, 2, 2, 2));
    SampleStream s{plan.sample_rate(), plan.frame_bits(), plan.samples_per_bit(),
                   std::vector<double>(static_cast<std::size_t>(plan.frame_bits() * plan.samples_per_bit()), 0.0)};
    for (double v : per_bit_spectra(s, plan).values) CHECK(v == 0.0);
    s.samples.pop_back();
    CHECK_THROWS_AS(per_bit_spectra(s, plan), LengthMismatch);
}

TEST_CASE("carriers on distinct channels do not leak") {
    const auto plan = build_plan(request(Mode::PassiveFdmaCdma, 4, 1, 4));
    Scene scene = uniform_scene(plan.grid(), 0.0);
    scene.irradiance[0] = 1;
    scene.irradiance[2] = 5;
    const auto spectra = per_bit_spectra(synthesize(plan, scene, DetectorModel{}), plan);
    const double peak = 5 * oracle::square_bin_magnitude(plan.samples_per_bit(), plan.bin(2));
    for (int w = 0; w < plan.frame_bits(); ++w) {
        CHECK(spectra.at(w, 1) < 1e-9 * peak);
        CHECK(spectra.at(w, 3) < 1e-9 * peak);
    }
}

TEST_CASE("channel sequences") {
    const auto fixed = build_plan(request(Mode::PassiveFdmaCdma, 4, 2, 4));
    SpectralSets s;
    s.bits = fixed.frame_bits();
    s.channels = 4;
    for (int i = 0; i < s.bits * 4; ++i) s.values.push_back(i);
    const int q = *fixed.grid().index_of({3, 1});  // member 2
    const auto y = channel_sequence(s, fixed, q);
    for (int w = 0; w < s.bits; ++w) CHECK(y[static_cast<std::size_t>(w)] == s.at(w, 2));

    const auto hopped = build_plan(request(Mode::PassiveFdmaCdma, 4, 2, 4, 11, true));
    const auto& table = *hopped.hop_schedule();
    for (int p = 0; p < hopped.pixel_count(); ++p) {
        const auto yy = channel_sequence(s, hopped, p);
        for (int w = 0; w < s.bits; ++w) {
            const int ch = table[static_cast<std::size_t>(w)][static_cast<std::size_t>(hopped.member_of(p))];
            REQUIRE(yy[static_cast<std::size_t>(w)] == s.at(w, ch));
        }
    }

    const auto fm = build_plan(request(Mode::FmCdma, 2, 2, 1));
    SpectralSets one;
    one.bits = fm.frame_bits();
    one.channels = 1;
    for (int i = 0; i < one.bits; ++i) one.values.push_back(i * 0.5);
    CHECK(channel_sequence(one, fm, 3) == one.values);
}

TEST_CASE("correlation against the code book") {
    const auto book = codebook(7);
    REQUIRE(book.length == 8);
    std::vector<int> all(7);
    std::iota(all.begin(), all.end(), 0);
    for (int j = 0; j < 7; ++j) {
        std::vector<double> y;
        for (auto b : book.codes[static_cast<std::size_t>(j)]) y.push_back(2.5 * b);
        const auto r = correlate(y, book, all);
        for (int k = 0; k < 7; ++k) CHECK(r.raw[static_cast<std::size_t>(k)] == (k == j ? 2.5 : 0.0));
    }
    const std::vector<double> zero(8, 0.0);
    for (double v : correlate(zero, book, all).value) CHECK(v == 0.0);

    // a negative estimate is clamped in the image but kept raw
    std::vector<double> y(8, 0.0);
    for (int w = 0; w < 8; ++w) y[static_cast<std::size_t>(w)] = book.codes[0][static_cast<std::size_t>(w)] ? 0.0 : 1.0;
    const int first = 0;
    const auto r = correlate(y, book, std::span<const int>(&first, 1));
    CHECK(r.raw[0] == -1.0);
    CHECK(r.value[0] == 0.0);
    CHECK_THROWS_AS(correlate(std::vector<double>(5, 0.0), book, all), LengthMismatch);
}

TEST_CASE("4x4 round trip with two channels") {
    const auto plan = build_plan(request(Mode::PassiveFdmaCdma, 4, 4, 2));
    const auto scene = scene_for(plan);
    const auto img = decode_frame(synthesize(plan, scene, DetectorModel{}), plan);
    // recovered values are G·I exactly once carrier gains are divided out
    CHECK(oracle::max_abs_rel_error(img.values[0], scene.irradiance) < 1e-9);
}

TEST_CASE("noiseless pipeline inverts every mode") {
    struct Case {
        Mode mode;
        int P;
        bool hopping;
    };
    const Case cases[] = {
        {Mode::PassiveFdmaCdma, 4, false}, {Mode::PassiveFdmaCdma, 4, true}, {Mode::PassiveFdmaCdma, 3, true},
        {Mode::FmCdma, 1, false},          {Mode::FmCdma, 1, true},          {Mode::PlainCdma, 1, false},
        {Mode::FmTdma, 1, false},          {Mode::ActiveOverlapped, 3, false},
    };
    for (const auto& c : cases) {
        for (std::uint64_t key : {0ULL, 77ULL}) {
            const auto plan = build_plan(request(c.mode, 5, 3, c.P, key, c.hopping));
            const auto scene = scene_for(plan, key);
            for (auto side : {DetectorSide::Pd1, DetectorSide::Pd2}) {
                CAPTURE(to_string(c.mode));
                CAPTURE(c.hopping);
                CAPTURE(key);
                CAPTURE(static_cast<int>(side));
                CHECK(roundtrip_error(plan, scene, side) < 1e-9);
            }
        }
    }
}

TEST_CASE("PD1 and PD2 give the same normalized image") {
    const auto plan = build_plan(request(Mode::PassiveFdmaCdma, 4, 4, 4, 5, true));
    const auto scene = scene_for(plan);
    const auto [a, b] = decode_dual(synthesize_dual(plan, scene, DetectorModel{}, DetectorModel{}), plan);
    CHECK(oracle::max_abs_rel_error(a.normalized(), b.normalized()) < 1e-9);
    CHECK(a.plan_id == b.plan_id);
}

TEST_CASE("doubling one pixel doubles its value") {
    const auto plan = build_plan(request(Mode::PassiveFdmaCdma, 4, 4, 4, 8, true));
    Scene scene = scene_for(plan);
    const auto before = decode_frame(synthesize(plan, scene, DetectorModel{}), plan);
    scene.irradiance[6] *= 2;
    const auto after = decode_frame(synthesize(plan, scene, DetectorModel{}), plan);
    for (int q = 0; q < plan.pixel_count(); ++q) {
        const double want = before.values[0][static_cast<std::size_t>(q)] * (q == 6 ? 2.0 : 1.0);
        CHECK(std::abs(after.values[0][static_cast<std::size_t>(q)] - want) < 1e-9 * want);
    }
}

TEST_CASE("frame-to-frame code reallocation decodes exactly") {
    auto r = request(Mode::PassiveFdmaCdma, 6, 4, 4, 314, true);
    r.code_reallocation = true;
    for (std::uint64_t frame = 0; frame < 4; ++frame) {
        r.frame_index = frame;
        const auto plan = build_plan(r);
        CHECK(roundtrip_error(plan, scene_for(plan, frame), DetectorSide::Pd1) < 1e-9);
    }
}

TEST_CASE("plan provenance is checked") {
    const auto plan = build_plan(request(Mode::PassiveFdmaCdma, 4, 4, 2));
    const auto stream = synthesize(plan, scene_for(plan), DetectorModel{});
    auto other = request(Mode::PassiveFdmaCdma, 4, 4, 2);
    other.sample_rate = 2048;
    CHECK_THROWS_AS(decode_frame(stream, build_plan(other)), PlanMismatch);
    const auto fm = build_plan(request(Mode::FmCdma, 4, 4, 1));
    CHECK_THROWS_AS(decode_frame(stream, fm), PlanMismatch);
}

TEST_CASE("normalization of an active image set uses the brightest pixel of all images") {
    const auto plan = build_plan(request(Mode::ActiveOverlapped, 3, 2, 3));
    Scene scene;
    scene.grid = plan.grid();
    scene.per_source = {std::vector<double>(6, 0.2), std::vector<double>(6, 0.0), std::vector<double>(6, 0.1)};
    scene.per_source[2][4] = 0.8;
    const auto img = decode_frame(synthesize(plan, scene, DetectorModel{}), plan);
    REQUIRE(img.image_count() == 3);
    CHECK(img.normalized(0)[0] == doctest::Approx(0.25));
    CHECK(img.normalized(2)[4] == doctest::Approx(1.0));
    for (double v : img.normalized(1)) CHECK(v < 1e-9);
}
