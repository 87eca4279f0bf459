#include "caos/decode.hpp"

#include <cmath>
#include <cstdio>
#include <mutex>
#include <numbers>

#include <fftw3.h>

#include "caos/errors.hpp"
#include "json_util.hpp"

namespace caos {

double dsp_gain_db(double samples_per_bit) {
    if (!(samples_per_bit >= 2)) throw Error("DSP gain needs F >= 2");
    return 10.0 * std::log10(samples_per_bit / 2.0);
}

namespace {

std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

void check_provenance(const SampleStream& stream, const CodingPlan& plan) {
    if (stream.bits != plan.frame_bits() || stream.samples_per_bit != plan.samples_per_bit() ||
        std::abs(stream.rate - plan.sample_rate()) > 1e-9 * plan.sample_rate()) {
        throw PlanMismatch("stream (W=" + std::to_string(stream.bits) + ", F=" + std::to_string(stream.samples_per_bit) +
                           ") was not encoded under this plan (W=" + std::to_string(plan.frame_bits()) +
                           ", F=" + std::to_string(plan.samples_per_bit()) + ")");
    }
}

}  // namespace

SpectralSets per_bit_spectra(const SampleStream& stream, const CodingPlan& plan) {
    const int W = plan.frame_bits();
    const long F = plan.samples_per_bit();
    const auto expected = static_cast<std::size_t>(W) * static_cast<std::size_t>(F);
    // streams read from disk carry W, F and the rate; bare sample vectors do not
    if (stream.bits != 0) check_provenance(stream, plan);
    if (stream.samples.size() != expected) {
        throw LengthMismatch("stream holds " + std::to_string(stream.samples.size()) + " samples, plan needs W*F = " +
                             std::to_string(expected));
    }
    const int P = plan.channel_count();
    SpectralSets out;
    out.bits = W;
    out.channels = P;
    out.values.assign(static_cast<std::size_t>(W) * static_cast<std::size_t>(P), 0.0);

    const std::size_t bins = static_cast<std::size_t>(F) / 2 + 1;
    auto* in = static_cast<double*>(fftw_malloc(sizeof(double) * static_cast<std::size_t>(F)));
    auto* freq = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * bins));
    fftw_plan fft;
    {
        std::lock_guard lock(planner_mutex());
        fft = fftw_plan_dft_r2c_1d(static_cast<int>(F), in, freq, FFTW_ESTIMATE);
    }
    const bool dc = !plan.has_carrier();
    for (int w = 0; w < W; ++w) {
        const auto bit = stream.bit(w);
        std::copy(bit.begin(), bit.end(), in);
        fftw_execute(fft);
        for (int c = 0; c < P; ++c) {
            const auto b = static_cast<std::size_t>(plan.bin(c));
            out.at(w, c) = dc ? freq[0][0] : std::hypot(freq[b][0], freq[b][1]);
        }
    }
    {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(fft);
    }
    fftw_free(freq);
    fftw_free(in);
    return out;
}

std::vector<double> carrier_gains(const CodingPlan& plan) {
    const int P = plan.channel_count();
    const long F = plan.samples_per_bit();
    std::vector<double> g(static_cast<std::size_t>(P));
    for (int c = 0; c < P; ++c) {
        // Direct single-bin DFT of the sampled carrier; exact for any waveform.
        const auto window = carrier_window(plan, c);
        const long b = plan.bin(c);
        double re = 0, im = 0;
        for (long i = 0; i < F; ++i) {
            const double phase = 2.0 * std::numbers::pi * static_cast<double>((b * i) % F) / static_cast<double>(F);
            re += window[static_cast<std::size_t>(i)] * std::cos(phase);
            im -= window[static_cast<std::size_t>(i)] * std::sin(phase);
        }
        g[static_cast<std::size_t>(c)] = plan.has_carrier() ? std::hypot(re, im) : re;
    }
    return g;
}

std::vector<double> channel_sequence(const SpectralSets& spectra, const CodingPlan& plan, int pixel) {
    std::vector<double> y(static_cast<std::size_t>(spectra.bits));
    const int member = plan.member_of(pixel);
    for (int w = 0; w < spectra.bits; ++w) y[static_cast<std::size_t>(w)] = spectra.at(w, plan.channel_of_member(member, w));
    return y;
}

Correlation correlate(std::span<const double> sequence, const CodeBook& book, std::span<const int> codes) {
    if (static_cast<int>(sequence.size()) != book.length) {
        throw LengthMismatch("sequence has " + std::to_string(sequence.size()) + " bits, codes have " +
                             std::to_string(book.length));
    }
    Correlation out;
    for (int j : codes) {
        const auto& c = book.codes.at(static_cast<std::size_t>(j));
        double acc = 0;
        for (std::size_t w = 0; w < sequence.size(); ++w) acc += c[w] ? sequence[w] : -sequence[w];
        const double v = 2.0 * acc / book.length;
        out.raw.push_back(v);
        out.value.push_back(std::max(v, 0.0));
    }
    return out;
}

std::vector<double> RecoveredImage::normalized(int image) const {
    std::vector<double> out = values.at(static_cast<std::size_t>(image));
    for (auto& v : out) v = normalization_reference > 0 ? v / normalization_reference : 0.0;
    return out;
}

RecoveredImage decode_spectra(const SpectralSets& spectra_in, const CodingPlan& plan, DetectorSide side) {
    const int Q = plan.pixel_count();
    const int P = plan.channel_count();
    SpectralSets spectra = spectra_in;
    const auto gains = carrier_gains(plan);
    for (int w = 0; w < spectra.bits; ++w) {
        for (int c = 0; c < P; ++c) spectra.at(w, c) /= gains[static_cast<std::size_t>(c)];
    }

    RecoveredImage img;
    img.grid = plan.grid();
    img.mode = plan.mode();
    img.side = side;
    img.plan_id = plan_identity(plan);
    const int images = plan.is_active() ? P : 1;
    img.values.assign(static_cast<std::size_t>(images), std::vector<double>(static_cast<std::size_t>(Q), 0.0));
    img.raw = img.values;

    // PD2 sees the complement of the coded light: for DC and shared-carrier
    // readings the code-dependent part enters with the opposite sign.
    const bool flip = side == DetectorSide::Pd2 && (plan.is_active() || plan.mode() == Mode::PlainCdma);
    const double sign = flip ? -1.0 : 1.0;

    if (plan.mode() == Mode::FmTdma) {
        for (int q = 0; q < Q; ++q) {
            const double v = spectra.at(plan.set_of(q), 0);
            img.raw[0][static_cast<std::size_t>(q)] = v;
            img.values[0][static_cast<std::size_t>(q)] = std::max(v, 0.0);
        }
    } else if (plan.is_active()) {
        std::vector<double> y(static_cast<std::size_t>(spectra.bits));
        for (int p = 0; p < P; ++p) {
            for (int w = 0; w < spectra.bits; ++w) y[static_cast<std::size_t>(w)] = sign * spectra.at(w, p);
            for (int q = 0; q < Q; ++q) {
                const int code = plan.set_of(q);
                const auto r = correlate(y, plan.codebook(), std::span<const int>(&code, 1));
                img.raw[static_cast<std::size_t>(p)][static_cast<std::size_t>(q)] = r.raw[0];
                img.values[static_cast<std::size_t>(p)][static_cast<std::size_t>(q)] = r.value[0];
            }
        }
    } else {
        for (int q = 0; q < Q; ++q) {
            auto y = channel_sequence(spectra, plan, q);
            if (flip) {
                for (auto& v : y) v = -v;
            }
            const int code = plan.set_of(q);
            const auto r = correlate(y, plan.codebook(), std::span<const int>(&code, 1));
            img.raw[0][static_cast<std::size_t>(q)] = r.raw[0];
            img.values[0][static_cast<std::size_t>(q)] = r.value[0];
        }
    }

    for (const auto& image : img.values) {
        for (double v : image) img.normalization_reference = std::max(img.normalization_reference, v);
    }
    return img;
}

RecoveredImage decode_frame(const SampleStream& stream, const CodingPlan& plan, DetectorSide side) {
    check_provenance(stream, plan);
    return decode_spectra(per_bit_spectra(stream, plan), plan, side);
}

std::pair<RecoveredImage, RecoveredImage> decode_dual(const DualStreams& streams, const CodingPlan& plan) {
    if (streams.pd1.samples.size() != streams.pd2.samples.size() || streams.pd1.rate != streams.pd2.rate) {
        throw LengthMismatch("PD1 and PD2 streams differ in rate or length");
    }
    return {decode_frame(streams.pd1, plan, DetectorSide::Pd1), decode_frame(streams.pd2, plan, DetectorSide::Pd2)};
}

std::string plan_identity(const CodingPlan& plan) {
    // FNV-1a, 64 bit
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : plan_to_json(plan)) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void write_decode_report(std::ostream& out, const RecoveredImage& image, const SpectralSets* peaks) {
    detail::Json j;
    j["schema"] = "caos-decode/1";
    j["plan_id"] = image.plan_id;
    j["mode"] = std::string(to_string(image.mode));
    j["detector"] = image.side == DetectorSide::Pd1 ? "pd1" : "pd2";
    j["normalization_reference"] = image.normalization_reference;
    j["grid"] = {{"cols", image.grid.cols()}, {"rows", image.grid.rows()}};
    detail::Json imgs = detail::Json::array();
    for (int k = 0; k < image.image_count(); ++k) {
        detail::Json pixels = detail::Json::array();
        for (int q = 0; q < image.grid.size(); ++q) {
            const auto& p = image.grid.position(q);
            pixels.push_back({{"m", p.m}, {"n", p.n}, {"raw", image.raw[static_cast<std::size_t>(k)][static_cast<std::size_t>(q)]}});
        }
        imgs.push_back({{"image", k + 1}, {"pixels", std::move(pixels)}});
    }
    j["images"] = std::move(imgs);
    if (peaks) {
        detail::Json rows = detail::Json::array();
        for (int w = 0; w < peaks->bits; ++w) {
            detail::Json row = detail::Json::array();
            for (int c = 0; c < peaks->channels; ++c) row.push_back(peaks->at(w, c));
            rows.push_back(std::move(row));
        }
        j["peaks"] = std::move(rows);
    }
    out << j.dump(2) << '\n';
}

}  // namespace caos
