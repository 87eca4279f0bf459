#include "caos/scene.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>

#include "caos/errors.hpp"

namespace caos {

SpectralCurve::SpectralCurve(std::vector<double> nm, std::vector<double> values)
    : nm_(std::move(nm)), values_(std::move(values)) {
    if (nm_.size() != values_.size()) throw DimensionMismatch("spectral curve needs one value per wavelength");
    for (std::size_t i = 0; i < nm_.size(); ++i) {
        if (!std::isfinite(nm_[i]) || !std::isfinite(values_[i]) || values_[i] < 0) {
            throw Error("spectral curve values must be finite and >= 0");
        }
        if (i > 0 && !(nm_[i] > nm_[i - 1])) throw Error("spectral curve wavelengths must increase strictly");
    }
}

SpectralCurve SpectralCurve::flat(double lo_nm, double hi_nm, double value) {
    return SpectralCurve({lo_nm, hi_nm}, {value, value});
}

double SpectralCurve::operator()(double nm) const {
    if (nm_.empty() || nm < nm_.front() || nm > nm_.back()) return 0.0;
    const auto it = std::upper_bound(nm_.begin(), nm_.end(), nm);
    if (it == nm_.end()) return values_.back();
    const auto hi = static_cast<std::size_t>(it - nm_.begin());
    const auto lo = hi - 1;
    const double t = (nm - nm_[lo]) / (nm_[hi] - nm_[lo]);
    return values_[lo] + t * (values_[hi] - values_[lo]);
}

double SpectralCurve::peak() const {
    return values_.empty() ? 0.0 : *std::max_element(values_.begin(), values_.end());
}

SpectralCurve SpectralCurve::scaled(double factor) const {
    std::vector<double> v = values_;
    for (auto& x : v) x *= factor;
    return SpectralCurve(nm_, std::move(v));
}

namespace {

std::vector<double> merged_knots(const SpectralCurve& a, const SpectralCurve& b, int refine) {
    if (a.empty() || b.empty()) return {};
    const double lo = std::max(a.min_nm(), b.min_nm());
    const double hi = std::min(a.max_nm(), b.max_nm());
    if (!(hi > lo)) return {};
    std::vector<double> knots{lo, hi};
    for (const auto* c : {&a, &b}) {
        for (double x : c->wavelengths()) {
            if (x > lo && x < hi) knots.push_back(x);
        }
    }
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
    refine = std::max(refine, 1);
    std::vector<double> out;
    out.reserve(knots.size() * static_cast<std::size_t>(refine));
    for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
        const double step = (knots[i + 1] - knots[i]) / refine;
        for (int r = 0; r < refine; ++r) out.push_back(knots[i] + r * step);
    }
    out.push_back(knots.back());
    return out;
}

}  // namespace

SpectralCurve product(const SpectralCurve& a, const SpectralCurve& b, int refine) {
    auto x = merged_knots(a, b, refine);
    if (x.empty()) return {};
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = a(x[i]) * b(x[i]);
    return SpectralCurve(std::move(x), std::move(y));
}

double band_integrate(const SpectralCurve& radiance, const SpectralCurve& responsivity, int refine) {
    const auto x = merged_knots(radiance, responsivity, refine);
    double sum = 0;
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
        const double f0 = radiance(x[i]) * responsivity(x[i]);
        const double f1 = radiance(x[i + 1]) * responsivity(x[i + 1]);
        sum += 0.5 * (f0 + f1) * (x[i + 1] - x[i]);
    }
    return sum;
}

SpectralCurve gaussian_spectrum(double center_nm, double fwhm_nm, double extent_fwhm) {
    if (!(fwhm_nm > 0)) throw Error("gaussian spectrum needs fwhm > 0");
    const int half = static_cast<int>(std::ceil(extent_fwhm * 400.0));
    const double step = fwhm_nm / 400.0;
    const double k = 4.0 * std::log(2.0) / (fwhm_nm * fwhm_nm);
    std::vector<double> nm, v;
    nm.reserve(static_cast<std::size_t>(2 * half + 1));
    v.reserve(nm.capacity());
    for (int i = -half; i <= half; ++i) {
        const double d = i * step;
        nm.push_back(center_nm + d);
        v.push_back(std::exp(-k * d * d));
    }
    return SpectralCurve(std::move(nm), std::move(v));
}

SpectralCurve blackbody_spectrum(double kelvin, double lo_nm, double hi_nm, double step_nm) {
    constexpr double c2 = 1.438776877e7;  // second radiation constant, nm·K
    std::vector<double> nm, v;
    for (double x = lo_nm; x <= hi_nm + 1e-9; x += step_nm) {
        nm.push_back(x);
        v.push_back(std::pow(x, -5.0) / std::expm1(c2 / (x * kelvin)));
    }
    const double peak = *std::max_element(v.begin(), v.end());
    for (auto& y : v) y /= peak;
    return SpectralCurve(std::move(nm), std::move(v));
}

SpectralCurve silicon_responsivity() {
    return SpectralCurve({320, 350, 400, 500, 600, 700, 800, 900, 950, 1000},
                         {0.03, 0.08, 0.14, 0.27, 0.37, 0.45, 0.52, 0.60, 0.58, 0.40});
}

SpectralCurve germanium_responsivity() {
    return SpectralCurve({800, 900, 1000, 1100, 1200, 1300, 1400, 1500, 1550, 1600, 1700, 1800},
                         {0.05, 0.18, 0.30, 0.40, 0.48, 0.56, 0.64, 0.76, 0.85, 0.88, 0.55, 0.10});
}

double db_factor(DbConvention convention) { return convention == DbConvention::Amplitude20 ? 20.0 : 10.0; }

std::string_view to_string(DbConvention convention) {
    return convention == DbConvention::Amplitude20 ? "20log" : "10log";
}

DbConvention parse_convention(std::string_view text) {
    if (text == "20log") return DbConvention::Amplitude20;
    if (text == "10log") return DbConvention::Power10;
    throw ConfigError("unknown dB convention '" + std::string(text) + "' (expected 20log or 10log)");
}

void Scene::validate() const {
    const auto Q = static_cast<std::size_t>(grid.size());
    auto check_map = [&](const std::vector<double>& v, const char* what) {
        if (v.size() != Q) throw DimensionMismatch(std::string(what) + " has " + std::to_string(v.size()) +
                                                   " values for " + std::to_string(Q) + " pixels");
        for (double x : v) {
            if (!std::isfinite(x) || x < 0) throw Error(std::string(what) + " values must be finite and >= 0");
        }
    };
    if (!irradiance.empty()) check_map(irradiance, "irradiance");
    if (is_spectral() && radiance.size() != Q) throw DimensionMismatch("radiance needs one curve per pixel");
    for (const auto& m : per_source) check_map(m, "per-source irradiance");
    if (irradiance.empty() && !is_spectral() && !is_active()) throw Error("scene has no content");
}

Scene uniform_scene(const PixelGrid& grid, double value) {
    Scene s;
    s.grid = grid;
    s.irradiance.assign(static_cast<std::size_t>(grid.size()), value);
    return s;
}

void DetectorModel::validate() const {
    if (!(gain > 0)) throw Error("detector gain must be > 0");
    if (!(noise_sigma >= 0)) throw Error("noise sigma must be >= 0");
    if (!(source_flicker >= 0)) throw Error("source flicker must be >= 0");
    if (shot_noise && !(shot_scale >= 0)) throw Error("shot noise scale must be >= 0");
    if (pink && !(pink->exponent > 0 && pink->exponent <= 2)) throw Error("pink noise exponent must be in (0, 2]");
    if (pink && !(pink->amplitude >= 0)) throw Error("pink noise amplitude must be >= 0");
    if (adc_bits && (*adc_bits < 1 || *adc_bits > 32)) throw Error("ADC depth must be 1..32 bits");
    if (adc_bits && !(adc_fullscale > 0)) throw Error("ADC full scale must be > 0");
}

std::vector<double> effective_irradiance(const Scene& scene, const DetectorModel& detector) {
    if (!scene.is_spectral()) return scene.irradiance;
    if (!detector.responsivity) throw Error("spectral scene needs a detector responsivity");
    std::vector<double> out(scene.radiance.size());
    for (std::size_t q = 0; q < out.size(); ++q) out[q] = band_integrate(scene.radiance[q], *detector.responsivity);
    return out;
}

HdrTarget hdr_patch_target(const PixelGrid& grid, const std::vector<double>& levels_db, int rows, int cols, int margin,
                           DbConvention convention, bool allow_remainder) {
    if (rows < 1 || cols < 1 || levels_db.size() != static_cast<std::size_t>(rows * cols)) {
        throw LayoutError("need exactly rows*cols patch levels");
    }
    for (double d : levels_db) {
        if (!std::isfinite(d)) throw LayoutError("patch levels must be finite");
    }
    if (!allow_remainder && (grid.cols() % cols != 0 || grid.rows() % rows != 0)) {
        throw LayoutError(std::to_string(grid.cols()) + "x" + std::to_string(grid.rows()) + " grid does not divide into " +
                          std::to_string(cols) + "x" + std::to_string(rows) + " patches");
    }
    const int cell_w = grid.cols() / cols;
    const int cell_h = grid.rows() / rows;
    if (cell_w <= 2 * margin || cell_h <= 2 * margin) throw LayoutError("patch cells are too small for the margin");

    HdrTarget t;
    t.scene.grid = grid;
    t.scene.irradiance.assign(static_cast<std::size_t>(grid.size()), 0.0);
    t.background.name = "background";
    const double f = db_factor(convention);
    for (std::size_t k = 0; k < levels_db.size(); ++k) {
        Region r;
        r.name = "patch " + std::to_string(k + 1) + " (" + std::to_string(static_cast<int>(std::lround(levels_db[k]))) + " dB)";
        t.patches.push_back(std::move(r));
    }
    for (int q = 0; q < grid.size(); ++q) {
        const auto& p = grid.position(q);
        const int cx = (p.m - 1) / cell_w;
        const int cy = (p.n - 1) / cell_h;
        const int lx = (p.m - 1) % cell_w;
        const int ly = (p.n - 1) % cell_h;
        const bool inside = cx < cols && cy < rows && lx >= margin && lx < cell_w - margin && ly >= margin &&
                            ly < cell_h - margin;
        if (!inside) {
            t.background.pixels.push_back(q);
            continue;
        }
        const auto k = static_cast<std::size_t>(cy * cols + cx);
        t.scene.irradiance[static_cast<std::size_t>(q)] = std::pow(10.0, -levels_db[k] / f);
        t.patches[k].pixels.push_back(q);
    }
    return t;
}

TwoHoleTarget two_hole_target(const PixelGrid& grid, const std::vector<Hole>& holes,
                              const std::vector<SpectralCurve>& sources, const SpectralCurve& responsivity) {
    TwoHoleTarget t;
    t.scene.grid = grid;
    const auto Q = static_cast<std::size_t>(grid.size());
    t.scene.per_source.assign(sources.size(), std::vector<double>(Q, 0.0));
    t.scene.irradiance.assign(Q, 0.0);
    t.background.name = "background";

    // level[h][p]: what hole h sends to the detector under source p.
    std::vector<std::vector<double>> level(holes.size(), std::vector<double>(sources.size()));
    for (std::size_t h = 0; h < holes.size(); ++h) {
        for (std::size_t p = 0; p < sources.size(); ++p) {
            level[h][p] = holes[h].gain * band_integrate(product(sources[p], holes[h].filter), responsivity);
        }
        t.holes.push_back({"hole " + std::to_string(h + 1), {}});
    }
    for (int q = 0; q < grid.size(); ++q) {
        const auto& pos = grid.position(q);
        bool in_any = false;
        for (std::size_t h = 0; h < holes.size() && !in_any; ++h) {
            const double dm = pos.m - holes[h].center.m;
            const double dn = pos.n - holes[h].center.n;
            if (dm * dm + dn * dn > holes[h].radius * holes[h].radius) continue;
            in_any = true;
            t.holes[h].pixels.push_back(q);
            for (std::size_t p = 0; p < sources.size(); ++p) {
                t.scene.per_source[p][static_cast<std::size_t>(q)] = level[h][p];
                t.scene.irradiance[static_cast<std::size_t>(q)] += level[h][p];
            }
        }
        if (!in_any) t.background.pixels.push_back(q);
    }
    return t;
}

DualBandSource dual_band_source(const PixelGrid& grid, const Spot& spot) {
    DualBandSource d;
    d.spectrum = blackbody_spectrum(2850.0, 350.0, 1800.0, 1.0);
    d.scene.grid = grid;
    d.scene.radiance.resize(static_cast<std::size_t>(grid.size()));
    d.profile.assign(static_cast<std::size_t>(grid.size()), 0.0);
    d.spot.name = "spot";
    d.background.name = "background";
    for (int q = 0; q < grid.size(); ++q) {
        const auto& pos = grid.position(q);
        const double dm = pos.m - spot.center.m;
        const double dn = pos.n - spot.center.n;
        const double r2 = dm * dm + dn * dn;
        if (r2 > spot.radius * spot.radius) {
            d.background.pixels.push_back(q);
            continue;
        }
        const double w = std::exp(-2.0 * r2 / (spot.radius * spot.radius));
        d.profile[static_cast<std::size_t>(q)] = w;
        d.scene.radiance[static_cast<std::size_t>(q)] = d.spectrum.scaled(w);
        d.spot.pixels.push_back(q);
    }
    return d;
}

}  // namespace caos
