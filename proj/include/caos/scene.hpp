#pragma once

#include <optional>
#include <string>
#include <vector>

#include "caos/plan.hpp"

namespace caos {

/// Piecewise-linear spectrum over wavelength in nm; zero outside its knots.
class SpectralCurve {
public:
    SpectralCurve() = default;
    /// Wavelengths strictly increasing, values finite and >= 0.
    SpectralCurve(std::vector<double> nm, std::vector<double> values);

    static SpectralCurve flat(double lo_nm, double hi_nm, double value = 1.0);

    double operator()(double nm) const;
    bool empty() const noexcept { return nm_.empty(); }
    double min_nm() const { return nm_.front(); }
    double max_nm() const { return nm_.back(); }
    const std::vector<double>& wavelengths() const noexcept { return nm_; }
    const std::vector<double>& values() const noexcept { return values_; }
    double peak() const;
    SpectralCurve scaled(double factor) const;

    friend bool operator==(const SpectralCurve&, const SpectralCurve&) = default;

private:
    std::vector<double> nm_;
    std::vector<double> values_;
};

/// Pointwise product sampled at the union of both knot sets inside the overlap,
/// each interval split `refine` ways.
SpectralCurve product(const SpectralCurve& a, const SpectralCurve& b, int refine = 4);

/// Trapezoidal ∫ radiance·responsivity dλ over the overlapping support, at the
/// union of both curves' knots with each interval split `refine` ways.
double band_integrate(const SpectralCurve& radiance, const SpectralCurve& responsivity, int refine = 4);

/// Gaussian of unit peak whose full width at half maximum is `fwhm`, sampled
/// every fwhm/400 nm and truncated at center ± extent_fwhm·fwhm.
SpectralCurve gaussian_spectrum(double center_nm, double fwhm_nm, double extent_fwhm = 3.0);

/// Planck spectrum at `kelvin`, unit peak over [lo, hi], sampled every step nm.
SpectralCurve blackbody_spectrum(double kelvin, double lo_nm, double hi_nm, double step_nm = 1.0);

/// Relative responsivity of a silicon photodiode over 320-1000 nm.
SpectralCurve silicon_responsivity();
/// Relative responsivity of a germanium photodiode over 800-1800 nm.
SpectralCurve germanium_responsivity();

enum class DbConvention { Amplitude20, Power10 };
double db_factor(DbConvention convention);
std::string_view to_string(DbConvention convention);
DbConvention parse_convention(std::string_view text);

/// Named set of active-pixel indices.
struct Region {
    std::string name;
    std::vector<int> pixels;
};

/// Per-pixel scene content, indexed like grid.active().
struct Scene {
    PixelGrid grid;
    std::vector<double> irradiance;                 ///< scalar I_mn
    std::vector<SpectralCurve> radiance;            ///< spectral mode (empty curve = dark)
    std::vector<std::vector<double>> per_source;    ///< active mode: P maps I_mn^(p)

    bool is_spectral() const noexcept { return !radiance.empty(); }
    bool is_active() const noexcept { return !per_source.empty(); }
    /// Throws DimensionMismatch or Error on size mismatches and negative or non-finite values.
    void validate() const;
};

Scene uniform_scene(const PixelGrid& grid, double value);

struct PinkNoise {
    double amplitude = 0;  ///< noise amplitude spectral density at 1 Hz
    double exponent = 1;   ///< α in PSD ∝ 1/f^α, 0 < α <= 2

    friend bool operator==(const PinkNoise&, const PinkNoise&) = default;
};

struct DetectorModel {
    std::optional<SpectralCurve> responsivity;  ///< required for spectral scenes
    double gain = 1;                            ///< G
    double noise_sigma = 0;                     ///< additive white noise std per sample
    bool shot_noise = false;
    double shot_scale = 1;                      ///< shot variance per unit of instantaneous signal
    std::optional<PinkNoise> pink;
    double source_flicker = 0;                  ///< relative std of the source intensity, drawn once per bit
    std::optional<int> adc_bits;
    double adc_fullscale = 10;

    void validate() const;

    friend bool operator==(const DetectorModel&, const DetectorModel&) = default;
};

/// Scalar irradiance seen through a detector: spectral scenes are reduced by
/// band_integrate against the responsivity, scalar scenes pass through.
std::vector<double> effective_irradiance(const Scene& scene, const DetectorModel& detector);

struct HdrTarget {
    Scene scene;
    std::vector<Region> patches;  ///< in level order
    Region background;
};

/// rows×cols patches on a zero background. Patch k sits in layout cell
/// (k / cols, k % cols), inset by `margin` pixels, with irradiance
/// 10^(-level/20) (10^(-level/10) under the power convention). The grid must
/// divide into the layout unless allow_remainder is set, in which case the
/// leftover columns and rows become background.
HdrTarget hdr_patch_target(const PixelGrid& grid, const std::vector<double>& levels_db, int rows = 2, int cols = 3,
                           int margin = 1, DbConvention convention = DbConvention::Amplitude20,
                           bool allow_remainder = false);

struct Hole {
    PixelPos center;
    double radius = 1;
    SpectralCurve filter;
    double gain = 1;  ///< per-hole illumination non-uniformity
};

struct TwoHoleTarget {
    Scene scene;
    std::vector<Region> holes;
    Region background;
};

/// I_mn^(p) = gain·band_integrate(source_p × filter, responsivity) inside each
/// hole, 0 elsewhere.
TwoHoleTarget two_hole_target(const PixelGrid& grid, const std::vector<Hole>& holes,
                              const std::vector<SpectralCurve>& sources, const SpectralCurve& responsivity);

struct Spot {
    PixelPos center;
    double radius = 3;
};

struct DualBandSource {
    Scene scene;
    Region spot;
    Region background;
    SpectralCurve spectrum;   ///< unit-peak source spectrum
    std::vector<double> profile;  ///< per-pixel spatial weight
};

/// Fiber-fed halogen spot: 2850 K blackbody over 350-1800 nm with a Gaussian
/// spatial profile (1/e² radius = spot.radius) cut at the spot radius.
DualBandSource dual_band_source(const PixelGrid& grid, const Spot& spot);

}  // namespace caos
