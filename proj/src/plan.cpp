#include "caos/plan.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>

#include "caos/errors.hpp"
#include "caos/keyed_rng.hpp"
#include "plan_json.hpp"

namespace caos {

// ---------------------------------------------------------------------------
// PixelGrid

PixelGrid::PixelGrid(int cols, int rows, int pixel_size) : cols_(cols), rows_(rows), pixel_size_(pixel_size) {
    if (cols < 1 || rows < 1) throw DimensionMismatch("grid needs at least one column and one row");
    active_.reserve(static_cast<std::size_t>(cols) * static_cast<std::size_t>(rows));
    for (int n = 1; n <= rows; ++n) {
        for (int m = 1; m <= cols; ++m) active_.push_back({m, n});
    }
}

PixelGrid::PixelGrid(int cols, int rows, std::vector<PixelPos> active, int pixel_size)
    : cols_(cols), rows_(rows), pixel_size_(pixel_size), active_(std::move(active)) {
    if (cols < 1 || rows < 1) throw DimensionMismatch("grid needs at least one column and one row");
    if (active_.empty()) throw DimensionMismatch("grid has no active pixels");
    std::vector<bool> seen(static_cast<std::size_t>(cols) * static_cast<std::size_t>(rows), false);
    for (const auto& p : active_) {
        if (p.m < 1 || p.m > cols || p.n < 1 || p.n > rows) {
            throw DimensionMismatch("active pixel (" + std::to_string(p.m) + "," + std::to_string(p.n) +
                                    ") outside the grid");
        }
        const auto idx = static_cast<std::size_t>((p.n - 1) * cols + (p.m - 1));
        if (seen[idx]) throw DimensionMismatch("active pixel listed twice");
        seen[idx] = true;
    }
}

std::optional<int> PixelGrid::index_of(PixelPos p) const {
    if (is_full_raster()) {
        if (p.m < 1 || p.m > cols_ || p.n < 1 || p.n > rows_) return std::nullopt;
        return (p.n - 1) * cols_ + (p.m - 1);
    }
    const auto it = std::find(active_.begin(), active_.end(), p);
    if (it == active_.end()) return std::nullopt;
    return static_cast<int>(it - active_.begin());
}

bool PixelGrid::is_full_raster() const {
    if (static_cast<long>(active_.size()) != static_cast<long>(cols_) * rows_) return false;
    for (std::size_t i = 0; i < active_.size(); ++i) {
        const auto& p = active_[i];
        if (static_cast<std::size_t>((p.n - 1) * cols_ + (p.m - 1)) != i) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Names

std::string_view to_string(Mode mode) {
    switch (mode) {
        case Mode::PassiveFdmaCdma: return "fdma-cdma";
        case Mode::FmCdma: return "fm-cdma";
        case Mode::PlainCdma: return "cdma";
        case Mode::FmTdma: return "fm-tdma";
        case Mode::ActiveOverlapped: return "active-overlapped";
    }
    return "?";
}

std::string_view to_string(Waveform waveform) {
    switch (waveform) {
        case Waveform::Square: return "square";
        case Waveform::Sine: return "sine";
        case Waveform::Constant: return "constant";
    }
    return "?";
}

Mode parse_mode(std::string_view text) {
    for (Mode m : {Mode::PassiveFdmaCdma, Mode::FmCdma, Mode::PlainCdma, Mode::FmTdma, Mode::ActiveOverlapped}) {
        if (to_string(m) == text) return m;
    }
    throw ConfigError("unknown mode '" + std::string(text) + "'");
}

Waveform parse_waveform(std::string_view text) {
    for (Waveform w : {Waveform::Square, Waveform::Sine, Waveform::Constant}) {
        if (to_string(w) == text) return w;
    }
    throw ConfigError("unknown waveform '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------
// Layout

SetLayout pixel_sets(int pixel_count, int channels) {
    if (pixel_count < 1 || channels < 1) throw Error("pixel_sets needs Q >= 1 and P >= 1");
    SetLayout layout;
    layout.sets = (pixel_count + channels - 1) / channels;
    layout.set_sizes.assign(static_cast<std::size_t>(layout.sets), channels);
    layout.set_sizes.back() = pixel_count - (layout.sets - 1) * channels;
    return layout;
}

bool ValidationReport::ok() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

const Check* ValidationReport::first_failure() const {
    for (const auto& c : checks) {
        if (!c.passed) return &c;
    }
    return nullptr;
}

int CodingPlan::channel_of_member(int member, int bit) const {
    if (!hop_) return member;
    return (*hop_)[static_cast<std::size_t>(bit)][static_cast<std::size_t>(member)];
}

int CodingPlan::member_on_channel(int channel, int bit) const {
    if (!hop_) return channel;
    return hop_inverse_[static_cast<std::size_t>(bit)][static_cast<std::size_t>(channel)];
}

bool CodingPlan::code_bit(int pixel, int bit) const {
    const int s = set_of(pixel);
    if (mode() == Mode::FmTdma) return s == bit;
    return codebook_.codes[static_cast<std::size_t>(s)][static_cast<std::size_t>(bit)] != 0;
}

CodingElement CodingPlan::coding_element(int pixel, int bit) const {
    CodingElement e;
    e.code_bit = code_bit(pixel, bit);
    if (e.code_bit && !is_active()) e.channel = channel_of_member(member_of(pixel), bit);
    return e;
}

PlanRequest with_key(PlanRequest request, std::uint64_t key_seed) {
    request.key_seed = key_seed;
    return request;
}

namespace {

bool near_integer(double x, double tol = 1e-9) {
    return std::abs(x - std::round(x)) <= tol * std::max(1.0, std::abs(x));
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

Check check(std::string name, bool passed, std::string detail = {}) {
    return Check{std::move(name), passed, std::move(detail)};
}

}  // namespace

ValidationReport validate(const CodingPlan& plan) {
    ValidationReport report;
    auto& out = report.checks;
    const auto& fp = plan.frequencies();
    const auto& req = plan.request();
    const int Q = plan.pixel_count();
    const int P = plan.channel_count();
    const double fs = plan.sample_rate();
    const double F_exact = fs * fp.bit_time;
    const long F = plan.samples_per_bit();

    out.push_back(check("grid.nonempty", Q >= 1, "Q = " + std::to_string(Q)));
    out.push_back(check("timing.samples_per_bit_integer", F >= 1 && near_integer(F_exact),
                        "F = f_s*T = " + fmt(F_exact)));

    if (plan.has_carrier()) {
        for (int p = 0; p < P; ++p) {
            const double cycles = fp.freqs[static_cast<std::size_t>(p)] * fp.bit_time;
            out.push_back(check("timing.cycles_per_bit_integer[" + std::to_string(p + 1) + "]",
                                cycles > 0 && near_integer(cycles), "f_p*T = " + fmt(cycles)));
        }
        const double f_top = *std::max_element(fp.freqs.begin(), fp.freqs.end());
        const int harmonics = fp.waveform == Waveform::Square ? std::max(1, req.square_harmonics) : 1;
        const bool nyquist = fs > 2.0 * f_top && fs >= 2.0 * harmonics * f_top;
        out.push_back(check("nyquist.highest_carrier", nyquist,
                            "f_s = " + fmt(fs) + ", needs > 2*" + std::to_string(harmonics) + "*" + fmt(f_top)));

        if (fp.waveform == Waveform::Square) {
            bool aligned = true;
            for (int p = 0; p < P; ++p) aligned = aligned && plan.bin(p) > 0 && F % (2 * plan.bin(p)) == 0;
            out.push_back(check("timing.square_edges_on_samples", aligned,
                                "every half carrier period must span a whole number of samples"));
        }
        std::set<long> bins;
        bool distinct = true;
        for (int p = 0; p < P; ++p) {
            const long b = plan.bin(p);
            distinct = distinct && b > 0 && 2 * b < F && bins.insert(b).second;
        }
        out.push_back(check("carriers.distinct_bins", distinct, "carrier bins must be distinct and below F/2"));

        if (fp.waveform == Waveform::Square && distinct && F > 0) {
            // Sampled square waves put energy at odd multiples of the carrier bin, folded into [0, F/2].
            bool clean = true;
            std::string where;
            for (int p = 0; p < P && clean; ++p) {
                const long b = plan.bin(p);
                const long period = F / std::gcd(F, b);
                for (long mult = 3; mult < 2 * period && mult < 4'000'000; mult += 2) {
                    long h = (mult * b) % F;
                    if (h > F / 2) h = F - h;
                    if (h != b && bins.count(h)) {
                        clean = false;
                        where = "harmonic " + std::to_string(mult) + " of channel " + std::to_string(p + 1);
                        break;
                    }
                }
            }
            out.push_back(check("carriers.no_odd_harmonic_collision", clean, where));
        }
    }

    int expected_sets = Q;
    if (plan.mode() == Mode::PassiveFdmaCdma) expected_sets = pixel_sets(Q, P).sets;
    out.push_back(check("sets.count", plan.set_count() == expected_sets,
                        "J = " + std::to_string(plan.set_count()) + ", expected " + std::to_string(expected_sets)));

    {
        std::set<std::pair<int, int>> pairs;
        bool unique = true;
        for (int q = 0; q < Q; ++q) unique = unique && pairs.insert({plan.set_of(q), plan.member_of(q)}).second;
        out.push_back(check("sets.unique_code_channel", unique, "each (code, channel) pair serves one pixel"));
    }

    if (plan.mode() != Mode::FmTdma) {
        out.push_back(check("codes.length", plan.frame_bits() >= plan.set_count() + 1,
                            "W = " + std::to_string(plan.frame_bits())));
    }

    if (const auto& hop = plan.hop_schedule()) {
        bool good = static_cast<int>(hop->size()) == plan.frame_bits();
        for (const auto& perm : *hop) {
            std::vector<int> sorted = perm;
            std::sort(sorted.begin(), sorted.end());
            for (int p = 0; p < static_cast<int>(sorted.size()); ++p) good = good && sorted[static_cast<std::size_t>(p)] == p;
            good = good && static_cast<int>(perm.size()) == P;
        }
        out.push_back(check("hop.schedule", good, "W permutations of the channel indices"));
    }

    const int single_bits = plan.mode() == Mode::FmTdma ? Q : smallest_supported_order(Q + 1);
    report.speedup_vs_single_channel = single_bits * fp.bit_time / plan.frame_time();
    return report;
}

CodingPlan build_plan(const PlanRequest& request, bool strict) {
    if (request.grid.size() < 1) throw DimensionMismatch("plan needs a non-empty grid");
    if (!(request.bit_rate > 0) || !(request.sample_rate > 0)) throw TimingError("bit rate and sample rate must be > 0");

    CodingPlan plan;
    plan.request_ = request;
    const Mode mode = request.mode;
    const int Q = request.grid.size();

    auto& fp = plan.freq_;
    fp.bit_time = 1.0 / request.bit_rate;
    fp.explicit_freqs = !request.explicit_freqs.empty();
    switch (mode) {
        case Mode::PlainCdma: fp.waveform = Waveform::Constant; break;
        case Mode::ActiveOverlapped: fp.waveform = request.waveform.value_or(Waveform::Sine); break;
        default: fp.waveform = request.waveform.value_or(Waveform::Square); break;
    }
    if (fp.waveform == Waveform::Constant && mode != Mode::PlainCdma) {
        throw Error("constant waveform is only valid for plain CDMA");
    }

    const bool single_channel = mode == Mode::FmCdma || mode == Mode::PlainCdma || mode == Mode::FmTdma;
    if (mode == Mode::PlainCdma) {
        fp.channels = 1;
        fp.freqs = {0.0};
    } else if (fp.explicit_freqs) {
        fp.freqs = request.explicit_freqs;
        fp.channels = static_cast<int>(fp.freqs.size());
        if (single_channel && fp.channels != 1) throw Error(std::string(to_string(mode)) + " uses a single carrier");
        fp.f1 = fp.freqs.front();
    } else {
        fp.channels = single_channel ? 1 : request.channels;
        if (fp.channels < 1) throw Error("need at least one FDMA channel");
        if (!(request.f1 > 0)) throw TimingError("fundamental carrier f1 must be > 0");
        fp.f1 = request.f1;
        for (int p = 0; p < fp.channels; ++p) fp.freqs.push_back(std::ldexp(request.f1, p));
    }
    const int P = fp.channels;

    plan.samples_per_bit_ = std::lround(request.sample_rate * fp.bit_time);
    for (double f : fp.freqs) plan.bins_.push_back(std::lround(f * fp.bit_time));

    // Sets and codes.
    if (mode == Mode::PassiveFdmaCdma) {
        plan.sets_ = pixel_sets(Q, P).sets;
    } else {
        plan.sets_ = Q;
    }
    if (mode == Mode::FmTdma) {
        plan.frame_bits_ = Q;
    } else {
        int W = smallest_supported_order(plan.sets_ + 1);
        if (request.min_code_length && *request.min_code_length > W) {
            if (!is_supported_order(*request.min_code_length)) {
                throw UnsupportedOrder("code length " + std::to_string(*request.min_code_length) + " is not supported");
            }
            W = *request.min_code_length;
        }
        std::vector<int> rows(static_cast<std::size_t>(plan.sets_));
        if (request.code_reallocation) {
            KeyedRng rng(request.key_seed, KeyStream::CodeRealloc, request.frame_index);
            const auto perm = rng.permutation(W - 1);
            for (int j = 0; j < plan.sets_; ++j) rows[static_cast<std::size_t>(j)] = perm[static_cast<std::size_t>(j)] + 1;
        } else {
            std::iota(rows.begin(), rows.end(), 1);
        }
        plan.codebook_ = codebook_from_rows(W, rows);
        plan.frame_bits_ = W;
    }

    // Spatial coding: pixel -> slot.
    std::vector<int> slot(static_cast<std::size_t>(Q));
    if (request.key_seed != 0 && request.shuffle) {
        KeyedRng rng(request.key_seed, KeyStream::PixelShuffle, request.frame_index);
        slot = rng.permutation(Q);
    } else {
        std::iota(slot.begin(), slot.end(), 0);
    }
    const int per_set = mode == Mode::PassiveFdmaCdma ? P : 1;
    plan.set_.resize(static_cast<std::size_t>(Q));
    plan.member_.resize(static_cast<std::size_t>(Q));
    plan.members_.assign(static_cast<std::size_t>(plan.sets_), {});
    for (int q = 0; q < Q; ++q) {
        const int s = slot[static_cast<std::size_t>(q)];
        plan.set_[static_cast<std::size_t>(q)] = s / per_set;
        plan.member_[static_cast<std::size_t>(q)] = s % per_set;
    }
    for (auto& m : plan.members_) m.assign(static_cast<std::size_t>(per_set), -1);
    for (int q = 0; q < Q; ++q) {
        plan.members_[static_cast<std::size_t>(plan.set_[static_cast<std::size_t>(q)])]
                     [static_cast<std::size_t>(plan.member_[static_cast<std::size_t>(q)])] = q;
    }
    for (auto& m : plan.members_) {
        while (!m.empty() && m.back() < 0) m.pop_back();
    }

    // One channel permutation per bit, shared by every set.
    const bool hop_applies = request.hopping && (mode == Mode::PassiveFdmaCdma || mode == Mode::FmCdma);
    if (hop_applies) {
        KeyedRng rng(request.key_seed, KeyStream::FrequencyHop, request.frame_index);
        std::vector<std::vector<int>> hop(static_cast<std::size_t>(plan.frame_bits_));
        plan.hop_inverse_.assign(static_cast<std::size_t>(plan.frame_bits_), std::vector<int>(static_cast<std::size_t>(P)));
        for (int w = 0; w < plan.frame_bits_; ++w) {
            hop[static_cast<std::size_t>(w)] = rng.permutation(P);
            for (int p = 0; p < P; ++p) {
                plan.hop_inverse_[static_cast<std::size_t>(w)][static_cast<std::size_t>(hop[static_cast<std::size_t>(w)][static_cast<std::size_t>(p)])] = p;
            }
        }
        plan.hop_ = std::move(hop);
    }

    plan.phases_.assign(static_cast<std::size_t>(P), 0.0);
    if (fp.waveform == Waveform::Sine) {
        KeyedRng rng(request.key_seed, KeyStream::CarrierPhase, request.frame_index);
        for (auto& ph : plan.phases_) ph = 2.0 * std::numbers::pi * rng.unit();
    }

    if (strict) {
        const ValidationReport report = validate(plan);
        if (const Check* bad = report.first_failure()) {
            const std::string msg = bad->name + " failed: " + bad->detail;
            if (bad->name.rfind("timing.", 0) == 0) throw TimingError(msg);
            if (bad->name.rfind("nyquist.", 0) == 0) throw NyquistError(msg);
            throw Error(msg);
        }
    }
    return plan;
}

// ---------------------------------------------------------------------------
// Plan files

namespace {
constexpr std::string_view kPlanSchema = "caos-plan/1";
}  // namespace

detail::Json detail::request_to_json(const PlanRequest& r) {
    detail::Json grid = {{"cols", r.grid.cols()}, {"rows", r.grid.rows()}, {"pixel_size", r.grid.pixel_size()}};
    if (!r.grid.is_full_raster()) {
        detail::Json active = detail::Json::array();
        for (const auto& p : r.grid.active()) active.push_back({p.m, p.n});
        grid["active"] = std::move(active);
    }
    detail::Json j = {
        {"grid", std::move(grid)},
        {"mode", std::string(to_string(r.mode))},
        {"channels", r.channels},
        {"f1", r.f1},
        {"explicit_freqs", r.explicit_freqs},
        {"bit_rate", r.bit_rate},
        {"sample_rate", r.sample_rate},
        {"key_seed", r.key_seed},
        {"shuffle", r.shuffle},
        {"hopping", r.hopping},
        {"code_reallocation", r.code_reallocation},
        {"frame_index", r.frame_index},
        {"square_harmonics", r.square_harmonics},
    };
    j["min_code_length"] = r.min_code_length ? detail::Json(*r.min_code_length) : detail::Json(nullptr);
    j["waveform"] = r.waveform ? detail::Json(std::string(to_string(*r.waveform))) : detail::Json(nullptr);
    return j;
}

std::string plan_to_json(const CodingPlan& plan) {
    detail::Json j = detail::request_to_json(plan.request());
    j["schema"] = kPlanSchema;
    j["W"] = plan.frame_bits();
    j["J"] = plan.set_count();
    j["F"] = plan.samples_per_bit();
    return j.dump(2) + "\n";
}

PixelGrid detail::grid_from_json(const detail::Json& g, std::string_view text) {
    detail::reject_unknown(g, {"cols", "rows", "pixel_size", "active"}, "grid", text);
    const int cols = detail::get_field<int>(g, "cols", text);
    const int rows = detail::get_field<int>(g, "rows", text);
    const int size = detail::get_or<int>(g, "pixel_size", 1, text);
    if (!g.contains("active")) return PixelGrid(cols, rows, size);
    std::vector<PixelPos> active;
    for (const auto& p : g.at("active")) {
        if (!p.is_array() || p.size() != 2) throw ConfigError("active pixels are [m, n] pairs", detail::line_of_key(text, "active"));
        active.push_back({p[0].get<int>(), p[1].get<int>()});
    }
    return PixelGrid(cols, rows, std::move(active), size);
}

PlanRequest detail::request_from_json(const detail::Json& j, std::string_view text, bool allow_derived) {
    if (allow_derived) {
        detail::reject_unknown(j, {"schema", "grid", "mode", "channels", "f1", "explicit_freqs", "bit_rate", "sample_rate",
                                   "key_seed", "shuffle", "hopping", "code_reallocation", "frame_index", "square_harmonics",
                                   "min_code_length", "waveform", "W", "J", "F"},
                               "plan", text);
    }
    PlanRequest r;
    r.grid = detail::grid_from_json(detail::get_field<detail::Json>(j, "grid", text), text);
    r.mode = parse_mode(detail::get_field<std::string>(j, "mode", text));
    r.channels = detail::get_or<int>(j, "channels", 1, text);
    r.f1 = detail::get_or<double>(j, "f1", 0.0, text);
    r.explicit_freqs = detail::get_or<std::vector<double>>(j, "explicit_freqs", {}, text);
    r.bit_rate = detail::get_field<double>(j, "bit_rate", text);
    r.sample_rate = detail::get_field<double>(j, "sample_rate", text);
    r.key_seed = detail::get_or<std::uint64_t>(j, "key_seed", 0, text);
    r.shuffle = detail::get_or<bool>(j, "shuffle", true, text);
    r.hopping = detail::get_or<bool>(j, "hopping", false, text);
    r.code_reallocation = detail::get_or<bool>(j, "code_reallocation", false, text);
    r.frame_index = detail::get_or<std::uint64_t>(j, "frame_index", 0, text);
    r.square_harmonics = detail::get_or<int>(j, "square_harmonics", 1, text);
    if (j.contains("min_code_length") && !j.at("min_code_length").is_null()) {
        r.min_code_length = detail::get_field<int>(j, "min_code_length", text);
    }
    if (j.contains("waveform") && !j.at("waveform").is_null()) {
        r.waveform = parse_waveform(detail::get_field<std::string>(j, "waveform", text));
    }
    return r;
}

CodingPlan plan_from_json(std::string_view text) {
    const detail::Json j = detail::parse_json(text);
    const auto schema = detail::get_field<std::string>(j, "schema", text);
    if (schema != kPlanSchema) {
        throw ConfigError("unsupported plan schema '" + schema + "'", detail::line_of_key(text, "schema"));
    }
    CodingPlan plan = build_plan(detail::request_from_json(j, text, true));
    const int W = detail::get_field<int>(j, "W", text);
    const int J = detail::get_field<int>(j, "J", text);
    const long F = detail::get_field<long>(j, "F", text);
    if (W != plan.frame_bits() || J != plan.set_count() || F != plan.samples_per_bit()) {
        throw PlanMismatch("plan file W/J/F (" + std::to_string(W) + "/" + std::to_string(J) + "/" + std::to_string(F) +
                           ") disagree with the rebuilt plan");
    }
    return plan;
}

void write_assignment_csv(std::ostream& out, const CodingPlan& plan) {
    out << "m,n,set,member,code_row,channel\n";
    for (int q = 0; q < plan.pixel_count(); ++q) {
        const auto& pos = plan.grid().position(q);
        const int s = plan.set_of(q);
        const int row = plan.mode() == Mode::FmTdma ? 0 : plan.codebook().source_rows[static_cast<std::size_t>(s)];
        const int ch = plan.is_active() ? 0 : plan.member_of(q) + 1;
        out << pos.m << ',' << pos.n << ',' << s + 1 << ',' << plan.member_of(q) + 1 << ',' << row << ',' << ch << '\n';
    }
}

}  // namespace caos
