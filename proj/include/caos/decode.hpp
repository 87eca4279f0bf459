#pragma once

#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "caos/plan.hpp"
#include "caos/sensor.hpp"

namespace caos {

/// 10·log10(F/2): coherent gain of an F-point DFT over one bit window.
double dsp_gain_db(double samples_per_bit);

/// W×P carrier-bin readings, row-major by bit.
struct SpectralSets {
    int bits = 0;
    int channels = 0;
    std::vector<double> values;

    double at(int w, int c) const { return values[index(w, c)]; }
    double& at(int w, int c) { return values[index(w, c)]; }

private:
    std::size_t index(int w, int c) const {
        return static_cast<std::size_t>(w) * static_cast<std::size_t>(channels) + static_cast<std::size_t>(c);
    }
};

/// F-point DFT of every bit window read at each carrier bin: the magnitude, or
/// for plain CDMA the signed real DC term. No window function.
/// Throws LengthMismatch when the stream does not hold W·F samples.
SpectralSets per_bit_spectra(const SampleStream& stream, const CodingPlan& plan);

/// Reading a unit-amplitude carrier produces at its own bin: k/sin(π·k/F) for
/// k-cycle square waves (→ F/π), F/4 for sine, F for plain CDMA.
std::vector<double> carrier_gains(const CodingPlan& plan);

/// y(w) = spectra[w][channel the pixel occupies on bit w].
std::vector<double> channel_sequence(const SpectralSets& spectra, const CodingPlan& plan, int pixel);

struct Correlation {
    std::vector<double> value;  ///< clamped at 0
    std::vector<double> raw;
};

/// Î_j = (2/W)·Σ_w y(w)·(2c_j(w) − 1) for each code index j listed.
Correlation correlate(std::span<const double> sequence, const CodeBook& book, std::span<const int> codes);

/// Decoded frame. Active plans yield one image per source, others a single image.
/// Values are in units of G·I (carrier gains divided out).
struct RecoveredImage {
    PixelGrid grid;
    Mode mode = Mode::PassiveFdmaCdma;
    DetectorSide side = DetectorSide::Pd1;
    std::string plan_id;
    std::vector<std::vector<double>> values;  ///< per image, per pixel, clamped at 0
    std::vector<std::vector<double>> raw;     ///< same before clamping
    double normalization_reference = 0;       ///< brightest value across all images

    int image_count() const noexcept { return static_cast<int>(values.size()); }
    /// values[image] / normalization_reference (all zero for a dark frame).
    std::vector<double> normalized(int image = 0) const;
};

/// Throws PlanMismatch when W, F or the sample rate disagree with the plan.
RecoveredImage decode_frame(const SampleStream& stream, const CodingPlan& plan, DetectorSide side = DetectorSide::Pd1);
/// Runs decode_frame on each spectra matrix already computed.
RecoveredImage decode_spectra(const SpectralSets& spectra, const CodingPlan& plan, DetectorSide side);
std::pair<RecoveredImage, RecoveredImage> decode_dual(const DualStreams& streams, const CodingPlan& plan);

/// Short hex digest of the plan document.
std::string plan_identity(const CodingPlan& plan);

/// JSON report: plan identity, normalization reference, per-pixel raw values
/// and, when given, the W×P peak matrix.
void write_decode_report(std::ostream& out, const RecoveredImage& image, const SpectralSets* peaks = nullptr);

}  // namespace caos
