#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "caos/decode.hpp"
#include "caos/metrics.hpp"
#include "caos/plan.hpp"
#include "caos/scene.hpp"

namespace caos {

/// Detector parameters plus the name of its responsivity curve: "flat", "si",
/// "ge" or a path to a two-column CSV.
struct DetectorSetup {
    std::string responsivity = "flat";
    DetectorModel model;

    friend bool operator==(const DetectorSetup&, const DetectorSetup&) = default;
};

/// Scene kinds:
///   hdr-patches  rows×cols patch target on a dark background
///   dual-band    fiber-fed halogen spot covering 350-1800 nm
///   two-hole     active target; variant "A" puts R and G filters on the left
///                and right holes, "B" puts G and B
///   uniform      every pixel at `value`
///   file         scalar map read from a 16-bit PGM or CSV raster at `path`
struct SceneSetup {
    std::string kind = "uniform";
    std::vector<double> levels_db;
    int layout_rows = 2;
    int layout_cols = 3;
    int margin = 1;
    bool allow_remainder = false;
    PixelPos spot_center{1, 1};
    double spot_radius = 3;
    std::string variant = "A";
    double spectral_extent = 1;  ///< LED and filter Gaussians are cut at ± this many FWHM
    double value = 1;
    std::string path;

    friend bool operator==(const SceneSetup&, const SceneSetup&) = default;
};

/// What a run is expected to show; decides the acceptance checks.
enum class Expectation { None, HdrRecovery, HdrFmLimit, DualBand, ActivePattern };
std::string_view to_string(Expectation e);
Expectation parse_expectation(std::string_view text);

struct ExperimentConfig {
    std::string name;
    PlanRequest plan;
    DetectorSetup pd1;
    std::optional<DetectorSetup> pd2;  ///< second detector for simultaneous two-band decoding
    SceneSetup scene;
    std::uint64_t noise_seed = 1;
    DbConvention convention = DbConvention::Amplitude20;
    Expectation expect = Expectation::None;
    std::string output = "out";
    std::vector<std::string> notes;

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Versioned JSON; unknown fields are rejected with the line they appear on.
std::string config_to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

SpectralCurve resolve_responsivity(std::string_view name);
DetectorModel resolve_detector(const DetectorSetup& setup);

/// Scene plus the regions the metrics look at.
struct BuiltScene {
    Scene scene;
    std::vector<Region> regions;  ///< patches, the spot, or the holes
    Region background;
    /// Active two-hole scenes: LED and filter names, hole k carries filters[k].
    std::vector<std::string> sources;
    std::vector<std::string> filters;
};
BuiltScene build_scene(const SceneSetup& setup, const PixelGrid& grid, DbConvention convention,
                       const std::optional<SpectralCurve>& responsivity);

/// Preset names accepted by preset().
std::vector<std::string> preset_names();
/// Scaled presets run in seconds on grids no larger than 32×32; full_scale
/// restores the grid, bit rate and code length of the laboratory runs.
ExperimentConfig preset(std::string_view name, bool full_scale = false);

/// Source flicker (relative std per bit) shared by both experiment-1 presets,
/// frozen from calibrate_flicker on the scaled FM-CDMA preset.
extern const double kHdrFlicker;
/// FM-CDMA SNR on the 48 dB patch that the calibration aims for.
extern const double kHdrCalibrationSnr;

struct ExperimentResult {
    ExperimentConfig config;
    CodingPlan plan;
    BuiltScene scene;
    std::vector<RecoveredImage> images;     ///< one per detector
    std::vector<std::vector<double>> truth; ///< per decoded image, G·I per pixel
    std::optional<PatchReport> patches;
    std::vector<Check> checks;

    bool passed() const;
};

ExperimentResult run_experiment(const ExperimentConfig& config);

/// Writes plan, assignment table, images (PGM and CSV), decode and patch
/// reports and summary.json into dir. With log_render an extra dB-scaled PGM
/// is written per image; stored data are never log-scaled.
void write_outputs(const ExperimentResult& result, const std::filesystem::path& dir, bool log_render = false);

struct CalibrationStep {
    double flicker = 0;
    double snr = 0;
};
struct Calibration {
    double flicker = 0;
    double snr = 0;
    std::vector<CalibrationStep> steps;
};
/// Bisects the source flicker of `config` (on a log scale) until the SNR of
/// patch `patch` reaches target_snr.
Calibration calibrate_flicker(ExperimentConfig config, int patch, double target_snr, double lo = 1e-4, double hi = 1,
                              int iterations = 40);

}  // namespace caos
