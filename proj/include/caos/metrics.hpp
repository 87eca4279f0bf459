#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "caos/decode.hpp"
#include "caos/plan.hpp"
#include "caos/scene.hpp"
#include "caos/sensor.hpp"

namespace caos {

struct PatchStat {
    std::string name;
    double mean = 0;
    double std = 0;       ///< spread inside the patch
    double dr_db = 0;     ///< factor·log10(mean_ref / mean)
    double snr = 0;       ///< mean / std of the background region
};

struct PatchReport {
    std::vector<PatchStat> patches;
    DbConvention convention = DbConvention::Amplitude20;
    double background_mean = 0;
    double background_std = 0;
};

/// Per-region statistics with DR relative to regions[reference]. Pass raw
/// (unclamped) values so the background spread is not biased by clamping.
/// Throws EmptyRegion for an empty region or a non-positive reference mean,
/// DimensionMismatch for pixel indices outside the image.
PatchReport patch_dr(std::span<const double> image, std::span<const Region> regions, const Region& background,
                     DbConvention convention = DbConvention::Amplitude20, int reference = 0);

/// Leakage in dB of a single pixel carried on probe_channel into every channel
/// (0 dB at the probe itself), read from noiseless per-bit spectra. Hopping is
/// switched off for the measurement; validation is bypassed so mis-tuned plans
/// report finite leakage. Values are floored at -400 dB.
std::vector<double> crosstalk(const CodingPlan& plan, int probe_channel);

/// Pearson correlation; 0 when either input is constant.
double pearson(std::span<const double> a, std::span<const double> b);

/// Decodes the stream under the plan rebuilt with wrong_seed and correlates the
/// recovered (unnormalized) values with the true per-pixel irradiance.
double wrong_key_correlation(const SampleStream& stream, const CodingPlan& true_plan, std::uint64_t wrong_seed,
                             std::span<const double> truth);

/// frame_time(b) / frame_time(a).
double speedup(const CodingPlan& a, const CodingPlan& b);

/// Root mean square difference after normalizing each input by its maximum.
double rmse(std::span<const double> image, std::span<const double> scene);

/// Versioned JSON report of patch statistics.
void write_patch_report(std::ostream& out, const PatchReport& report);
/// CSV table: region,mean,std,dr_db,snr.
void write_patch_csv(std::ostream& out, const PatchReport& report);

}  // namespace caos
