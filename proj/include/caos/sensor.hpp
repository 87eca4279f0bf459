#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "caos/plan.hpp"
#include "caos/scene.hpp"

namespace caos {

/// Digitized detector signal: W bit windows of F samples each at rate f_s.
struct SampleStream {
    double rate = 0;
    int bits = 0;
    long samples_per_bit = 0;
    std::vector<double> samples;

    std::span<const double> bit(int w) const {
        return {samples.data() + static_cast<std::size_t>(w) * static_cast<std::size_t>(samples_per_bit),
                static_cast<std::size_t>(samples_per_bit)};
    }
    /// Throws LengthMismatch unless there are exactly W·F finite samples.
    void validate() const;
};

struct DualStreams {
    SampleStream pd1;
    SampleStream pd2;
};

/// PD1 sees the mirrors' +θ state (carrier on), PD2 the complement.
enum class DetectorSide { Pd1, Pd2 };

/// Value of channel c's carrier at sample i of a bit window: 0/1 square wave
/// with 50% duty starting high at the bit boundary, (1 + sin)/2 for sine
/// carriers, 1 for plain CDMA.
double carrier(const CodingPlan& plan, int channel, long sample);

/// The carrier over one bit window (F values). Every window is identical since
/// carriers are locked to the bit clock.
std::vector<double> carrier_window(const CodingPlan& plan, int channel);

/// Noiseless encoded detector stream. Scene values pass through
/// effective_irradiance for passive plans; active plans read scene.per_source.
/// Throws DimensionMismatch when the scene does not fit the plan.
SampleStream synthesize(const CodingPlan& plan, const Scene& scene, const DetectorModel& detector,
                        DetectorSide side = DetectorSide::Pd1);

/// Both detectors of one frame, each with its own responsivity and gain.
DualStreams synthesize_dual(const CodingPlan& plan, const Scene& scene, const DetectorModel& pd1,
                            const DetectorModel& pd2);

/// Adds the detector's noise terms in order: source flicker (one relative gain
/// per bit, shared by every detector given the same seed), shot noise, white
/// noise, pink noise. `detector_index` decorrelates the electronic noise of
/// several detectors that share a seed.
SampleStream add_noise(const SampleStream& stream, const DetectorModel& detector, std::uint64_t seed,
                       int detector_index = 0);

/// Clamps to [0, fullscale] and rounds to 2^bits uniform levels; identity
/// without adc_bits.
SampleStream adc(const SampleStream& stream, const DetectorModel& detector);

/// Raw little-endian float32 samples plus `<path>.json` holding rate, length, W and F.
void write_stream(const std::filesystem::path& path, const SampleStream& stream);
SampleStream read_stream(const std::filesystem::path& path);
std::filesystem::path sidecar_path(const std::filesystem::path& path);

}  // namespace caos
