#include "caos/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>

#include "caos/errors.hpp"
#include "json_util.hpp"

namespace caos {

namespace {

struct Moments {
    double mean = 0;
    double std = 0;
};

Moments moments(std::span<const double> image, const Region& region) {
    if (region.pixels.empty()) throw EmptyRegion("region '" + region.name + "' has no pixels");
    double sum = 0;
    for (int q : region.pixels) {
        if (q < 0 || static_cast<std::size_t>(q) >= image.size()) {
            throw DimensionMismatch("region '" + region.name + "' reaches outside the image");
        }
        sum += image[static_cast<std::size_t>(q)];
    }
    Moments m;
    m.mean = sum / static_cast<double>(region.pixels.size());
    double ss = 0;
    for (int q : region.pixels) {
        const double d = image[static_cast<std::size_t>(q)] - m.mean;
        ss += d * d;
    }
    m.std = region.pixels.size() > 1 ? std::sqrt(ss / static_cast<double>(region.pixels.size() - 1)) : 0.0;
    return m;
}

}  // namespace

PatchReport patch_dr(std::span<const double> image, std::span<const Region> regions, const Region& background,
                     DbConvention convention, int reference) {
    if (reference < 0 || static_cast<std::size_t>(reference) >= regions.size()) throw EmptyRegion("no reference region");
    PatchReport report;
    report.convention = convention;
    const Moments bg = moments(image, background);
    report.background_mean = bg.mean;
    report.background_std = bg.std;
    const Moments ref = moments(image, regions[static_cast<std::size_t>(reference)]);
    if (!(ref.mean > 0)) throw EmptyRegion("reference region mean is not positive");
    const double f = db_factor(convention);
    for (const auto& r : regions) {
        const Moments m = moments(image, r);
        PatchStat s;
        s.name = r.name;
        s.mean = m.mean;
        s.std = m.std;
        s.dr_db = m.mean > 0 ? f * std::log10(ref.mean / m.mean) : std::numeric_limits<double>::infinity();
        s.snr = bg.std > 0 ? m.mean / bg.std : std::numeric_limits<double>::infinity();
        report.patches.push_back(std::move(s));
    }
    return report;
}

std::vector<double> crosstalk(const CodingPlan& plan, int probe_channel) {
    const int P = plan.channel_count();
    if (probe_channel < 0 || probe_channel >= P) throw Error("probe channel out of range");
    PlanRequest req = plan.request();
    req.hopping = false;
    const CodingPlan fixed = build_plan(req, false);

    // one lit pixel carried on the probe channel
    Scene scene;
    scene.grid = fixed.grid();
    const auto Q = static_cast<std::size_t>(fixed.pixel_count());
    int pixel = 0;
    if (fixed.is_active()) {
        scene.per_source.assign(static_cast<std::size_t>(P), std::vector<double>(Q, 0.0));
        scene.per_source[static_cast<std::size_t>(probe_channel)][0] = 1.0;
    } else {
        for (int q = 0; q < fixed.pixel_count(); ++q) {
            if (fixed.member_of(q) == probe_channel) {
                pixel = q;
                break;
            }
        }
        scene.irradiance.assign(Q, 0.0);
        scene.irradiance[static_cast<std::size_t>(pixel)] = 1.0;
    }
    const auto spectra = per_bit_spectra(synthesize(fixed, scene, DetectorModel{}), fixed);
    std::vector<double> energy(static_cast<std::size_t>(P), 0.0);
    for (int w = 0; w < spectra.bits; ++w) {
        for (int c = 0; c < P; ++c) energy[static_cast<std::size_t>(c)] += spectra.at(w, c) * spectra.at(w, c);
    }
    const double probe = energy[static_cast<std::size_t>(probe_channel)];
    std::vector<double> out(static_cast<std::size_t>(P));
    for (int c = 0; c < P; ++c) {
        const double ratio = probe > 0 ? energy[static_cast<std::size_t>(c)] / probe : 0.0;
        out[static_cast<std::size_t>(c)] = ratio > 0 ? std::max(10.0 * std::log10(ratio), -400.0) : -400.0;
    }
    return out;
}

double pearson(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.empty()) throw DimensionMismatch("correlation needs equal, non-empty inputs");
    const double n = static_cast<double>(a.size());
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa <= 0 || sbb <= 0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

double wrong_key_correlation(const SampleStream& stream, const CodingPlan& true_plan, std::uint64_t wrong_seed,
                             std::span<const double> truth) {
    const CodingPlan wrong = build_plan(with_key(true_plan.request(), wrong_seed), false);
    const auto img = decode_frame(stream, wrong);
    return pearson(img.values[0], truth);
}

double speedup(const CodingPlan& a, const CodingPlan& b) { return b.frame_time() / a.frame_time(); }

double rmse(std::span<const double> image, std::span<const double> scene) {
    if (image.size() != scene.size() || image.empty()) throw DimensionMismatch("rmse needs equal, non-empty inputs");
    const double ma = *std::max_element(image.begin(), image.end());
    const double mb = *std::max_element(scene.begin(), scene.end());
    double ss = 0;
    for (std::size_t i = 0; i < image.size(); ++i) {
        const double d = (ma > 0 ? image[i] / ma : 0.0) - (mb > 0 ? scene[i] / mb : 0.0);
        ss += d * d;
    }
    return std::sqrt(ss / static_cast<double>(image.size()));
}

void write_patch_report(std::ostream& out, const PatchReport& report) {
    detail::Json j;
    j["schema"] = "caos-patches/1";
    j["convention"] = std::string(to_string(report.convention));
    j["background"] = {{"mean", report.background_mean}, {"std", report.background_std}};
    detail::Json rows = detail::Json::array();
    for (const auto& p : report.patches) {
        rows.push_back({{"region", p.name}, {"mean", p.mean}, {"std", p.std}, {"dr_db", p.dr_db}, {"snr", p.snr}});
    }
    j["patches"] = std::move(rows);
    out << j.dump(2) << '\n';
}

void write_patch_csv(std::ostream& out, const PatchReport& report) {
    out << std::setprecision(10) << "region,mean,std,dr_db,snr\n";
    for (const auto& p : report.patches) {
        out << '"' << p.name << "\"," << p.mean << ',' << p.std << ',' << p.dr_db << ',' << p.snr << '\n';
    }
}

}  // namespace caos
