// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "caos/codes.hpp"
#include "caos/decode.hpp"
#include "caos/experiment.hpp"
#include "caos/metrics.hpp"
#include "caos/plan.hpp"
#include "caos/scene.hpp"
#include "caos/sensor.hpp"
#include "oracles.hpp"

using namespace caos;

namespace {

struct Outcome {
    bool passed = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string num(double v, const char* f = "%.4g") {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

std::vector<std::string> g_notes;

void note(const std::string& s) { g_notes.push_back(s); }

// Small plans that run fast in every mode.
PlanRequest small_request(Mode mode, int cols, int rows, bool hopping, std::uint64_t key) {
    PlanRequest r;
    r.grid = PixelGrid(cols, rows);
    r.mode = mode;
    r.channels = (mode == Mode::PassiveFdmaCdma) ? 4 : 1;
    r.f1 = 8;
    r.bit_rate = 4;
    r.sample_rate = 1024;
    r.key_seed = key;
    r.hopping = hopping;
    if (mode == Mode::ActiveOverlapped) {
        r.channels = 3;
        r.f1 = 0;
        r.explicit_freqs = {100, 116, 140};
        r.sample_rate = 1000;
    }
    return r;
}

std::vector<double> random_map(int n, std::uint64_t seed, double lo = 0.05, double hi = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(static_cast<std::size_t>(n));
    for (double& x : v) x = u(rng);
    return v;
}

Scene random_scene(const CodingPlan& plan, std::uint64_t seed) {
    Scene s;
    s.grid = plan.grid();
    if (plan.is_active()) {
        for (int p = 0; p < plan.channel_count(); ++p) {
            s.per_source.push_back(random_map(plan.pixel_count(), seed * 7 + static_cast<std::uint64_t>(p)));
        }
    } else {
        s.irradiance = random_map(plan.pixel_count(), seed);
    }
    return s;
}

double round_trip_error(const CodingPlan& plan, const Scene& scene, bool dual) {
    DetectorModel det;
    det.gain = 2.5;
    double err = 0;
    std::vector<RecoveredImage> images;
    if (dual) {
        const auto s = synthesize_dual(plan, scene, det, det);
        auto [a, b] = decode_dual(s, plan);
        images.push_back(std::move(a));
        images.push_back(std::move(b));
    } else {
        images.push_back(decode_frame(synthesize(plan, scene, det), plan));
    }
    for (const auto& img : images) {
        if (plan.is_active()) {
            double peak = 0;
            for (const auto& m : scene.per_source) peak = std::max(peak, *std::max_element(m.begin(), m.end()));
            for (int p = 0; p < plan.channel_count(); ++p) {
                auto want = scene.per_source[static_cast<std::size_t>(p)];
                for (double& v : want) v /= peak;
                err = std::max(err, oracle::max_abs_rel_error(img.normalized(p), want));
            }
        } else {
            err = std::max(err, oracle::max_abs_rel_error(img.normalized(0), oracle::normalize(scene.irradiance)));
        }
    }
    return err;
}

Outcome criterion_round_trip() {
    const auto t0 = Clock::now();
    double worst = 0;
    int cases = 0;
    const Mode modes[] = {Mode::PassiveFdmaCdma, Mode::FmCdma, Mode::PlainCdma, Mode::FmTdma, Mode::ActiveOverlapped};
    const std::pair<int, int> grids[] = {{16, 16}, {7, 5}, {1, 1}};
    for (auto mode : modes) {
        for (auto [c, r] : grids) {
            for (bool hop : {false, true}) {
                for (bool dual : {false, true}) {
                    const auto plan = build_plan(small_request(mode, c, r, hop, hop ? 99 : 0));
                    worst = std::max(worst, round_trip_error(plan, random_scene(plan, static_cast<std::uint64_t>(++cases)), dual));
                }
            }
        }
    }
    const double t = seconds_since(t0);
    return {worst < 1e-9 && t < 10.0,
            std::to_string(cases) + " cases, max error " + num(worst, "%.3g") + ", " + num(t, "%.2f") + " s (< 10 s)"};
}

Outcome criterion_dsp_gain() {
    const double a = dsp_gain_db(65536);
    const double b = dsp_gain_db(16384);
    return {std::abs(a - 45.15) <= 0.02 && std::abs(b - 39.13) <= 0.01,
            "F=65536: " + num(a, "%.4f") + " dB, F=16384: " + num(b, "%.4f") + " dB"};
}

Outcome criterion_partitioning() {
    const auto a = pixel_sets(2035, 8);
    const auto b = pixel_sets(1276, 4);
    const int w1 = codebook(255).length;
    const int w2 = codebook(319).length;
    const int w3 = codebook(480).length;
    const bool ok = a.sets == 255 && a.last_set_size() == 3 && b.sets == 319 && w1 == 256 && w2 == 320 && w3 == 512;
    return {ok, "J(2035,8)=" + std::to_string(a.sets) + " last " + std::to_string(a.last_set_size()) +
                    ", J(1276,4)=" + std::to_string(b.sets) + ", W = " + std::to_string(w1) + "/" + std::to_string(w2) +
                    "/" + std::to_string(w3)};
}

Outcome criterion_speedup() {
    const auto fdma = build_plan(preset("exp1-hdr").plan);
    const auto fm = build_plan(preset("exp1-fmcdma").plan);
    const double s1 = speedup(fdma, fm);
    const auto fdma_full = build_plan(preset("exp1-hdr", true).plan);
    const auto fm_full = build_plan(preset("exp1-fmcdma", true).plan);
    const double s1_full = speedup(fdma_full, fm_full);

    PlanRequest r;
    r.grid = PixelGrid(127, 16);
    r.mode = Mode::PassiveFdmaCdma;
    r.channels = 8;
    r.f1 = 16;
    r.bit_rate = 1;
    r.sample_rate = 8192;
    const auto p8 = build_plan(r);
    r.mode = Mode::FmCdma;
    r.channels = 1;
    const auto p1 = build_plan(r);
    const double s8 = speedup(p8, p1);
    const bool ok = std::abs(s1 - 4.0) < 1e-12 && std::abs(s1_full - 4.0) < 1e-12 && std::abs(s8 - 8.0) < 1e-12;
    return {ok, "experiment 1: " + num(s1, "%.3f") + " (full scale " + num(s1_full, "%.3f") + "), Q=2032 P=8: " +
                    num(s8, "%.3f") + " (W " + std::to_string(p1.frame_bits()) + "/" + std::to_string(p8.frame_bits()) + ")"};
}

// SNR of raw recovered values against the truth, pooled over pixels and trials.
struct SnrAccumulator {
    double signal = 0;
    double err2 = 0;
    long n = 0;
    void add(std::span<const double> got, std::span<const double> truth) {
        for (std::size_t i = 0; i < got.size(); ++i) {
            signal += truth[i];
            err2 += (got[i] - truth[i]) * (got[i] - truth[i]);
            ++n;
        }
    }
    double snr() const { return (signal / static_cast<double>(n)) / std::sqrt(err2 / static_cast<double>(n)); }
};

Outcome criterion_multiplex_snr() {
    // Q = 64, both plans take 1.28 s per frame at f_s = 64 kHz.
    PlanRequest c;
    c.grid = PixelGrid(8, 8);
    c.mode = Mode::PassiveFdmaCdma;
    c.channels = 4;
    c.f1 = 250;
    c.bit_rate = 15.625;
    c.sample_rate = 64000;
    const auto cdma = build_plan(c);
    PlanRequest t = c;
    t.mode = Mode::FmTdma;
    t.channels = 1;
    t.f1 = 2000;
    t.bit_rate = 50;
    const auto tdma = build_plan(t);

    DetectorModel det;
    det.noise_sigma = 0.5;
    const int trials = 200;
    SnrAccumulator acc_c, acc_t, acc_dual;
    for (int k = 0; k < trials; ++k) {
        Scene s = uniform_scene(c.grid, 0);
        s.irradiance = random_map(64, 1000 + static_cast<std::uint64_t>(k), 0.5, 1.0);
        const auto seed = 5000 + static_cast<std::uint64_t>(k);
        const auto dual = synthesize_dual(cdma, s, det, det);
        const auto a = decode_frame(add_noise(dual.pd1, det, seed, 0), cdma, DetectorSide::Pd1);
        const auto b = decode_frame(add_noise(dual.pd2, det, seed, 1), cdma, DetectorSide::Pd2);
        acc_c.add(a.raw[0], s.irradiance);
        std::vector<double> avg(64);
        for (std::size_t q = 0; q < 64; ++q) avg[q] = 0.5 * (a.raw[0][q] + b.raw[0][q]);
        acc_dual.add(avg, s.irradiance);
        const auto d = decode_frame(add_noise(synthesize(tdma, s, det), det, seed, 0), tdma);
        acc_t.add(d.raw[0], s.irradiance);
    }
    const double target = std::sqrt(64.0 / 2.0);
    const double ratio = acc_c.snr() / acc_t.snr();
    const double frac = ratio / target;
    note("criterion 5 diagnostic: frame times " + num(cdma.frame_time()) + " s / " + num(tdma.frame_time()) +
         " s; SNR FDMA-CDMA " + num(acc_c.snr()) + ", FM-TDMA " + num(acc_t.snr()) + ", ratio " + num(ratio) +
         " = " + num(frac, "%.3f") + " x sqrt(Q/2); sqrt(Q)/2 = " + num(std::sqrt(64.0) / 2.0));
    note("criterion 5 diagnostic: averaging PD1 and PD2 on the CDMA side only gives ratio " +
         num(acc_dual.snr() / acc_t.snr()) + " = " + num(acc_dual.snr() / acc_t.snr() / target, "%.3f") + " x sqrt(Q/2)");
    return {frac >= 0.8 && frac <= 1.2, std::to_string(trials) + " trials, SNR ratio " + num(ratio) + " = " +
                                            num(frac, "%.3f") + " x sqrt(Q/2) (need 0.8..1.2)"};
}

Outcome criterion_hdr() {
    const auto t0 = Clock::now();
    const auto fd = run_experiment(preset("exp1-hdr"));
    const auto fm = run_experiment(preset("exp1-fmcdma"));
    const double t = seconds_since(t0);
    const auto& pf = fd.patches->patches;
    const auto& pm = fm.patches->patches;
    const std::vector<double> nominal{0, 20, 30, 48, 58, 64};
    const std::vector<double> published{0, 20.4, 29.2, 49.6, 59.1, 64.1};

    bool within = true, ordered = true, near_published = true;
    std::string levels;
    for (std::size_t k = 0; k < pf.size(); ++k) {
        within = within && std::abs(pf[k].dr_db - nominal[k]) <= 1.0;
        near_published = near_published && std::abs(pf[k].dr_db - published[k]) <= 1.5;
        if (k > 0) ordered = ordered && pf[k].dr_db > pf[k - 1].dr_db;
        levels += (k ? " " : "") + num(pf[k].dr_db, "%.2f");
    }
    const bool dim_ok = pf.back().snr >= 1.0;
    const bool fm_lost = pm[4].snr < 1.0 && pm[5].snr < 1.0;
    note("criterion 6 diagnostic: source flicker " + num(kHdrFlicker, "%.6g") + ", FM-CDMA SNR 48/58/64 dB = " +
         num(pm[3].snr, "%.3f") + "/" + num(pm[4].snr, "%.3f") + "/" + num(pm[5].snr, "%.3f") +
         ", FDMA-CDMA SNR 58/64 dB = " + num(pf[4].snr, "%.3f") + "/" + num(pf[5].snr, "%.3f"));
    note(std::string("criterion 6 diagnostic: all within 1 dB ") + (within ? "yes" : "no") + ", dimmest SNR >= 1 " +
         (dim_ok ? "yes" : "no") + ", FM loses 58 and 64 dB " + (fm_lost ? "yes" : "no") + ", ordering " +
         (ordered ? "yes" : "no") + ", within 1.5 dB of lab readings " + (near_published ? "yes" : "no"));
    return {within && dim_ok && fm_lost && ordered && near_published && t < 60.0,
            "FDMA-CDMA DR " + levels + " dB, dimmest SNR " + num(pf.back().snr, "%.3f") + "; FM-CDMA SNR 58/64 dB " +
                num(pm[4].snr, "%.3f") + "/" + num(pm[5].snr, "%.3f") + "; " + num(t, "%.1f") + " s"};
}

Outcome criterion_dual_band() {
    const auto cfg = preset("exp2-dualband");
    const auto r = run_experiment(cfg);
    const auto src = dual_band_source(cfg.plan.grid, {cfg.scene.spot_center, cfg.scene.spot_radius});
    const SpectralCurve bands[] = {silicon_responsivity(), germanium_responsivity()};
    double worst = 0;
    double spot_level[2] = {0, 0};
    for (std::size_t i = 0; i < 2; ++i) {
        const double unit = oracle::product_integral(src.spectrum.wavelengths(), src.spectrum.values(),
                                                     bands[i].wavelengths(), bands[i].values());
        for (int q : src.spot.pixels) {
            const double want = unit * src.profile[static_cast<std::size_t>(q)];
            const double got = r.images[i].raw[0][static_cast<std::size_t>(q)];
            worst = std::max(worst, std::abs(got - want) / want);
            spot_level[i] += got;
        }
    }
    return {worst < 1e-6 && spot_level[0] > 0 && spot_level[1] > 0,
            "spot in both bands, max rel error vs exact band integral " + num(worst, "%.3g") + " (< 1e-6)"};
}

Outcome criterion_active() {
    // Expected pattern: holes[left, right] visible in images G, R, B.
    struct Variant {
        const char* preset;
        bool visible[3][2];
    };
    const Variant variants[] = {
        {"exp3-active", {{false, true}, {true, false}, {false, false}}},
        {"exp3-active-b", {{true, false}, {false, false}, {false, true}}},
    };
    const auto si = silicon_responsivity();
    bool ok = true;
    double blue_max = 0;
    std::string detail;
    for (const auto& v : variants) {
        const auto cfg = preset(v.preset);
        const auto r = run_experiment(cfg);
        const auto& img = r.images[0];
        const double peak = img.normalization_reference;
        // independent overlap integrals of LED x filter x responsivity
        const struct {
            double c, w;
        } leds[] = {{530, 35}, {625, 17}, {455, 18}};
        const std::string filters = cfg.scene.variant == "A" ? "RG" : "GB";
        for (int p = 0; p < 3; ++p) {
            for (int h = 0; h < 2; ++h) {
                const double fc = filters[static_cast<std::size_t>(h)] == 'R' ? 620 : filters[static_cast<std::size_t>(h)] == 'G' ? 550 : 450;
                const double fw = filters[static_cast<std::size_t>(h)] == 'R' ? 10 : 40;
                const auto led = gaussian_spectrum(leds[p].c, leds[p].w, cfg.scene.spectral_extent);
                const auto filt = gaussian_spectrum(fc, fw, cfg.scene.spectral_extent);
                const auto lf = product(led, filt);
                const double overlap = oracle::product_integral(lf.wavelengths(), lf.values(), si.wavelengths(), si.values());
                double got = 0;
                for (int q : r.scene.regions[static_cast<std::size_t>(h)].pixels) {
                    got = std::max(got, std::abs(img.raw[static_cast<std::size_t>(p)][static_cast<std::size_t>(q)]));
                }
                const bool present = got > 1e-6 * peak;
                ok = ok && present == v.visible[p][h] && (overlap > 0) == v.visible[p][h];
            }
        }
        if (cfg.scene.variant == "A") {
            for (double x : img.raw[2]) blue_max = std::max(blue_max, std::abs(x) / peak);
        }
    }
    ok = ok && blue_max < 1e-6;
    return {ok, "variant A and B hole patterns, blue image of variant A peaks at " + num(blue_max, "%.2g") + " of the brightest pixel"};
}

Outcome criterion_crosstalk() {
    PlanRequest sq;
    sq.grid = PixelGrid(8, 8);
    sq.mode = Mode::PassiveFdmaCdma;
    sq.channels = 4;
    sq.f1 = 128;
    sq.bit_rate = 64;
    sq.sample_rate = 65536;
    PlanRequest sine;
    sine.grid = PixelGrid(8, 8);
    sine.mode = Mode::ActiveOverlapped;
    sine.channels = 3;
    sine.explicit_freqs = {25000, 29000, 35000};
    sine.bit_rate = 250;
    sine.sample_rate = 2e6;
    double worst = -1000;
    for (const auto& req : {sq, sine}) {
        const auto plan = build_plan(req);
        for (int p = 0; p < plan.channel_count(); ++p) {
            const auto leak = crosstalk(plan, p);
            for (int c = 0; c < plan.channel_count(); ++c) {
                if (c != p) worst = std::max(worst, leak[static_cast<std::size_t>(c)]);
            }
        }
    }
    return {worst < -100, "worst inter-channel leakage " + num(worst, "%.1f") + " dB (octave square and 25/29/35 kHz sine)"};
}

Scene blob_scene(const PixelGrid& grid) {
    Scene s;
    s.grid = grid;
    for (const auto& p : grid.active()) {
        const double dm = p.m - 6.0, dn = p.n - 10.0;
        s.irradiance.push_back(0.1 + 0.02 * p.m + std::exp(-(dm * dm + dn * dn) / 18.0));
    }
    return s;
}

Outcome criterion_security() {
    PlanRequest r;
    r.grid = PixelGrid(16, 16);
    r.mode = Mode::PassiveFdmaCdma;
    r.channels = 4;
    r.f1 = 8;
    r.bit_rate = 4;
    r.sample_rate = 1024;
    r.key_seed = 20240601;
    r.hopping = true;
    const auto plan = build_plan(r);
    const auto scene = blob_scene(r.grid);
    DetectorModel det;
    const auto stream = synthesize(plan, scene, det);
    const double right = pearson(decode_frame(stream, plan).values[0], scene.irradiance);
    std::vector<double> wrong;
    for (std::uint64_t k = 1; k <= 64; ++k) wrong.push_back(std::abs(wrong_key_correlation(stream, plan, k, scene.irradiance)));
    std::nth_element(wrong.begin(), wrong.begin() + 32, wrong.end());
    const double median = 0.5 * (wrong[32] + *std::max_element(wrong.begin(), wrong.begin() + 32));

    // frame-to-frame code reallocation keeps the noiseless round trip exact
    double worst = 0;
    for (std::uint64_t frame = 0; frame < 4; ++frame) {
        auto rr = r;
        rr.code_reallocation = true;
        rr.frame_index = frame;
        const auto p = build_plan(rr);
        worst = std::max(worst, round_trip_error(p, scene, frame % 2 == 1));
    }
    return {median < 0.3 && right > 0.999 && worst < 1e-9,
            "wrong-key median |rho| " + num(median, "%.3f") + " over 64 seeds, correct rho " + num(right, "%.9f") +
                ", reallocated frames max error " + num(worst, "%.2g")};
}

Outcome criterion_conservation() {
    double worst = 0;
    int cases = 0;
    for (auto mode : {Mode::PassiveFdmaCdma, Mode::FmCdma, Mode::PlainCdma, Mode::FmTdma}) {
        for (bool hop : {false, true}) {
            const auto plan = build_plan(small_request(mode, 9, 7, hop, 17));
            const auto scene = random_scene(plan, static_cast<std::uint64_t>(++cases));
            DetectorModel det;
            det.gain = 3.25;
            const auto s = synthesize_dual(plan, scene, det, det);
            long double total = 0;
            for (double v : scene.irradiance) total += v;
            const double want = det.gain * static_cast<double>(total);
            for (std::size_t i = 0; i < s.pd1.samples.size(); ++i) {
                worst = std::max(worst, std::abs(s.pd1.samples[i] + s.pd2.samples[i] - want) / want);
            }
        }
    }
    return {worst < 1e-9, std::to_string(cases) + " passive plans, max relative deviation " + num(worst, "%.2g")};
}

}  // namespace

int main() {
    const struct {
        int id;
        const char* name;
        std::function<Outcome()> run;
    } criteria[] = {
        {1, "noiseless round trip", criterion_round_trip},
        {2, "DSP gain", criterion_dsp_gain},
        {3, "partitioning arithmetic", criterion_partitioning},
        {4, "speedup", criterion_speedup},
        {5, "multiplex SNR advantage", criterion_multiplex_snr},
        {6, "HDR recovery", criterion_hdr},
        {7, "dual-band simultaneity", criterion_dual_band},
        {8, "active spectral discrimination", criterion_active},
        {9, "crosstalk", criterion_crosstalk},
        {10, "security", criterion_security},
        {11, "conservation", criterion_conservation},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += o.passed ? 0 : 1;
        std::printf("%s %2d %s: %s\n", o.passed ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str());
        std::fflush(stdout);
    }
    for (const auto& n : g_notes) std::printf("  note: %s\n", n.c_str());
    std::printf("%d/%zu criteria passed\n", static_cast<int>(std::size(criteria)) - failed, std::size(criteria));
    return failed == 0 ? 0 : 1;
}
