#include "caos/sensor.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <mutex>
#include <numbers>
#include <random>

#include <fftw3.h>

#include "caos/errors.hpp"
#include "caos/keyed_rng.hpp"
#include "json_util.hpp"

namespace caos {

void SampleStream::validate() const {
    const auto expected = static_cast<std::size_t>(bits) * static_cast<std::size_t>(samples_per_bit);
    if (bits < 1 || samples_per_bit < 1 || samples.size() != expected) {
        throw LengthMismatch("stream holds " + std::to_string(samples.size()) + " samples, W*F = " +
                             std::to_string(expected));
    }
    for (double s : samples) {
        if (!std::isfinite(s)) throw Error("stream contains a non-finite sample");
    }
}

namespace {

bool exact_bin(const CodingPlan& plan, int channel) {
    const double cycles = plan.frequencies().freqs[static_cast<std::size_t>(channel)] * plan.bit_time();
    return std::abs(cycles - static_cast<double>(plan.bin(channel))) < 1e-9 * std::max(1.0, cycles);
}

}  // namespace

double carrier(const CodingPlan& plan, int channel, long sample) {
    const auto& fp = plan.frequencies();
    const long F = plan.samples_per_bit();
    switch (fp.waveform) {
        case Waveform::Constant: return 1.0;
        case Waveform::Square: {
            if (exact_bin(plan, channel)) {
                // first half of every period high; integer arithmetic keeps edges exact
                const long b = plan.bin(channel);
                return (2 * b * sample) % (2 * F) < F ? 1.0 : 0.0;
            }
            const double cycles = fp.freqs[static_cast<std::size_t>(channel)] * sample / plan.sample_rate();
            return cycles - std::floor(cycles) < 0.5 ? 1.0 : 0.0;
        }
        case Waveform::Sine: {
            double phase;
            if (exact_bin(plan, channel)) {
                const long b = plan.bin(channel);
                phase = 2.0 * std::numbers::pi * static_cast<double>((b * sample) % F) / static_cast<double>(F);
            } else {
                phase = 2.0 * std::numbers::pi * fp.freqs[static_cast<std::size_t>(channel)] * sample / plan.sample_rate();
            }
            return 0.5 * (1.0 + std::sin(phase + plan.carrier_phase(channel)));
        }
    }
    return 0.0;
}

std::vector<double> carrier_window(const CodingPlan& plan, int channel) {
    std::vector<double> out(static_cast<std::size_t>(plan.samples_per_bit()));
    for (long i = 0; i < plan.samples_per_bit(); ++i) out[static_cast<std::size_t>(i)] = carrier(plan, channel, i);
    return out;
}

namespace {

SampleStream empty_stream(const CodingPlan& plan) {
    SampleStream s;
    s.rate = plan.sample_rate();
    s.bits = plan.frame_bits();
    s.samples_per_bit = plan.samples_per_bit();
    s.samples.assign(static_cast<std::size_t>(s.bits) * static_cast<std::size_t>(s.samples_per_bit), 0.0);
    return s;
}

std::vector<std::vector<double>> all_windows(const CodingPlan& plan) {
    std::vector<std::vector<double>> tables;
    for (int c = 0; c < plan.channel_count(); ++c) tables.push_back(carrier_window(plan, c));
    return tables;
}

}  // namespace

SampleStream synthesize(const CodingPlan& plan, const Scene& scene, const DetectorModel& detector, DetectorSide side) {
    if (!(scene.grid == plan.grid())) throw DimensionMismatch("scene grid does not match the plan grid");
    scene.validate();
    detector.validate();
    const int Q = plan.pixel_count();
    const int P = plan.channel_count();
    const int W = plan.frame_bits();
    const long F = plan.samples_per_bit();
    const double G = detector.gain;
    const bool pd2 = side == DetectorSide::Pd2;

    SampleStream out = empty_stream(plan);
    const auto tables = all_windows(plan);
    std::vector<double> amp(static_cast<std::size_t>(P));

    if (plan.is_active()) {
        if (static_cast<int>(scene.per_source.size()) != P) {
            throw DimensionMismatch("active plan needs " + std::to_string(P) + " per-source maps, scene has " +
                                    std::to_string(scene.per_source.size()));
        }
        std::vector<double> total(static_cast<std::size_t>(P), 0.0);
        for (int p = 0; p < P; ++p) {
            for (double v : scene.per_source[static_cast<std::size_t>(p)]) total[static_cast<std::size_t>(p)] += v;
        }
        for (int w = 0; w < W; ++w) {
            std::fill(amp.begin(), amp.end(), 0.0);
            for (int q = 0; q < Q; ++q) {
                if (!plan.code_bit(q, w)) continue;
                for (int p = 0; p < P; ++p) amp[static_cast<std::size_t>(p)] += scene.per_source[static_cast<std::size_t>(p)][static_cast<std::size_t>(q)];
            }
            if (pd2) {
                for (int p = 0; p < P; ++p) amp[static_cast<std::size_t>(p)] = total[static_cast<std::size_t>(p)] - amp[static_cast<std::size_t>(p)];
            }
            double* dst = out.samples.data() + static_cast<std::size_t>(w) * static_cast<std::size_t>(F);
            for (int p = 0; p < P; ++p) {
                const double a = G * amp[static_cast<std::size_t>(p)];
                const auto& t = tables[static_cast<std::size_t>(p)];
                for (long i = 0; i < F; ++i) dst[i] += a * t[static_cast<std::size_t>(i)];
            }
        }
        return out;
    }

    const auto I = effective_irradiance(scene, detector);
    if (static_cast<int>(I.size()) != Q) throw DimensionMismatch("scene has no scalar irradiance for a passive plan");
    double total = 0;
    for (double v : I) total += v;

    for (int w = 0; w < W; ++w) {
        std::fill(amp.begin(), amp.end(), 0.0);
        for (int q = 0; q < Q; ++q) {
            const auto e = plan.coding_element(q, w);
            if (e.code_bit) amp[static_cast<std::size_t>(*e.channel)] += I[static_cast<std::size_t>(q)];
        }
        double* dst = out.samples.data() + static_cast<std::size_t>(w) * static_cast<std::size_t>(F);
        for (int c = 0; c < P; ++c) {
            const double a = G * amp[static_cast<std::size_t>(c)];
            if (a == 0.0) continue;
            const auto& t = tables[static_cast<std::size_t>(c)];
            for (long i = 0; i < F; ++i) dst[i] += a * t[static_cast<std::size_t>(i)];
        }
        if (pd2) {
            // every mirror not pointing at PD1 points at PD2
            for (long i = 0; i < F; ++i) dst[i] = G * total - dst[i];
        }
    }
    return out;
}

DualStreams synthesize_dual(const CodingPlan& plan, const Scene& scene, const DetectorModel& pd1,
                            const DetectorModel& pd2) {
    return {synthesize(plan, scene, pd1, DetectorSide::Pd1), synthesize(plan, scene, pd2, DetectorSide::Pd2)};
}

namespace {

std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

// Zero-mean noise with one-sided PSD amplitude²/f^α, shaped in the frequency domain.
std::vector<double> pink_sequence(std::size_t n, double rate, const PinkNoise& pink, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> x(n);
    for (auto& v : x) v = normal(rng);
    if (n < 2) return std::vector<double>(n, 0.0);
    const std::size_t bins = n / 2 + 1;
    auto* freq = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * bins));
    fftw_plan fwd, inv;
    {
        std::lock_guard lock(fftw_planner_mutex());
        fwd = fftw_plan_dft_r2c_1d(static_cast<int>(n), x.data(), freq, FFTW_ESTIMATE);
        inv = fftw_plan_dft_c2r_1d(static_cast<int>(n), freq, x.data(), FFTW_ESTIMATE);
    }
    fftw_execute(fwd);
    // white N(0,1) at this rate has one-sided PSD 2/rate
    const double c = pink.amplitude * std::sqrt(rate / 2.0) / static_cast<double>(n);
    freq[0][0] = freq[0][1] = 0.0;
    for (std::size_t k = 1; k < bins; ++k) {
        const double f = static_cast<double>(k) * rate / static_cast<double>(n);
        const double h = c * std::pow(f, -pink.exponent / 2.0);
        freq[k][0] *= h;
        freq[k][1] *= h;
    }
    fftw_execute(inv);
    {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(fwd);
        fftw_destroy_plan(inv);
    }
    fftw_free(freq);
    return x;
}

}  // namespace

SampleStream add_noise(const SampleStream& stream, const DetectorModel& detector, std::uint64_t seed,
                       int detector_index) {
    detector.validate();
    SampleStream out = stream;
    const auto F = static_cast<std::size_t>(stream.samples_per_bit);
    const auto idx = static_cast<std::uint64_t>(detector_index);

    if (detector.source_flicker > 0) {
        std::mt19937_64 rng(KeyedRng(seed, KeyStream::Noise, 0).next());
        std::normal_distribution<double> normal(0.0, detector.source_flicker);
        for (int w = 0; w < stream.bits; ++w) {
            const double g = 1.0 + normal(rng);
            for (std::size_t i = 0; i < F; ++i) out.samples[static_cast<std::size_t>(w) * F + i] *= g;
        }
    }
    std::mt19937_64 rng(KeyedRng(seed, KeyStream::Noise, 1 + idx).next());
    std::normal_distribution<double> normal(0.0, 1.0);
    if (detector.shot_noise && detector.shot_scale > 0) {
        for (auto& s : out.samples) s += std::sqrt(detector.shot_scale * std::max(s, 0.0)) * normal(rng);
    }
    if (detector.noise_sigma > 0) {
        for (auto& s : out.samples) s += detector.noise_sigma * normal(rng);
    }
    if (detector.pink && detector.pink->amplitude > 0) {
        std::mt19937_64 prng(KeyedRng(seed, KeyStream::Noise, 1001 + idx).next());
        const auto pink = pink_sequence(out.samples.size(), stream.rate, *detector.pink, prng);
        for (std::size_t i = 0; i < pink.size(); ++i) out.samples[i] += pink[i];
    }
    return out;
}

SampleStream adc(const SampleStream& stream, const DetectorModel& detector) {
    if (!detector.adc_bits) return stream;
    if (!(detector.adc_fullscale > 0)) throw Error("ADC full scale must be > 0");
    SampleStream out = stream;
    const double levels = std::ldexp(1.0, *detector.adc_bits) - 1.0;
    const double step = detector.adc_fullscale / levels;
    for (auto& s : out.samples) {
        const double v = std::clamp(s, 0.0, detector.adc_fullscale);
        s = std::round(v / step) * step;
    }
    return out;
}

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
    auto p = path;
    p += ".json";
    return p;
}

void write_stream(const std::filesystem::path& path, const SampleStream& stream) {
    stream.validate();
    std::ofstream raw(path, std::ios::binary);
    if (!raw) throw Error("cannot write " + path.string());
    std::vector<char> buf(stream.samples.size() * 4);
    for (std::size_t i = 0; i < stream.samples.size(); ++i) {
        auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(stream.samples[i]));
        if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
        std::memcpy(buf.data() + 4 * i, &bits, 4);
    }
    raw.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!raw) throw Error("short write to " + path.string());

    const detail::Json side = {{"schema", "caos-stream/1"},
                               {"format", "f32le"},
                               {"rate", stream.rate},
                               {"length", stream.samples.size()},
                               {"W", stream.bits},
                               {"F", stream.samples_per_bit}};
    std::ofstream meta(sidecar_path(path));
    if (!meta) throw Error("cannot write " + sidecar_path(path).string());
    meta << side.dump(2) << '\n';
}

SampleStream read_stream(const std::filesystem::path& path) {
    std::ifstream meta(sidecar_path(path));
    if (!meta) throw Error("missing stream sidecar " + sidecar_path(path).string());
    const std::string text((std::istreambuf_iterator<char>(meta)), std::istreambuf_iterator<char>());
    const auto j = detail::parse_json(text);
    detail::reject_unknown(j, {"schema", "format", "rate", "length", "W", "F"}, "stream sidecar", text);
    if (detail::get_field<std::string>(j, "schema", text) != "caos-stream/1") {
        throw ConfigError("unsupported stream schema", detail::line_of_key(text, "schema"));
    }
    if (detail::get_or<std::string>(j, "format", "f32le", text) != "f32le") {
        throw ConfigError("unsupported sample format", detail::line_of_key(text, "format"));
    }
    SampleStream s;
    s.rate = detail::get_field<double>(j, "rate", text);
    s.bits = detail::get_field<int>(j, "W", text);
    s.samples_per_bit = detail::get_field<long>(j, "F", text);
    const auto length = detail::get_field<std::size_t>(j, "length", text);

    std::ifstream raw(path, std::ios::binary);
    if (!raw) throw Error("cannot read " + path.string());
    std::vector<char> buf(length * 4);
    raw.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (raw.gcount() != static_cast<std::streamsize>(buf.size()) || raw.peek() != std::char_traits<char>::eof()) {
        throw LengthMismatch(path.string() + " does not hold " + std::to_string(length) + " float32 samples");
    }
    s.samples.resize(length);
    for (std::size_t i = 0; i < length; ++i) {
        std::uint32_t bits;
        std::memcpy(&bits, buf.data() + 4 * i, 4);
        if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
        s.samples[i] = static_cast<double>(std::bit_cast<float>(bits));
    }
    s.validate();
    return s;
}

}  // namespace caos
