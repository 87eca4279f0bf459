#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "caos/codes.hpp"

namespace caos {

/// 1-based CAOS pixel position: m along the horizontal axis, n along the vertical.
struct PixelPos {
    int m = 1;
    int n = 1;
    friend bool operator==(const PixelPos&, const PixelPos&) = default;
};

/// M×N raster of CAOS pixels, optionally restricted to a subset of active pixels.
/// Per-pixel data throughout the library is indexed by position in active().
class PixelGrid {
public:
    PixelGrid() = default;
    /// Full raster, row by row (n outer, m inner).
    PixelGrid(int cols, int rows, int pixel_size = 1);
    PixelGrid(int cols, int rows, std::vector<PixelPos> active, int pixel_size = 1);

    int cols() const noexcept { return cols_; }
    int rows() const noexcept { return rows_; }
    int pixel_size() const noexcept { return pixel_size_; }
    int size() const noexcept { return static_cast<int>(active_.size()); }
    const std::vector<PixelPos>& active() const noexcept { return active_; }
    const PixelPos& position(int pixel) const { return active_.at(static_cast<std::size_t>(pixel)); }
    std::optional<int> index_of(PixelPos p) const;
    bool is_full_raster() const;

    friend bool operator==(const PixelGrid&, const PixelGrid&) = default;

private:
    int cols_ = 0;
    int rows_ = 0;
    int pixel_size_ = 1;
    std::vector<PixelPos> active_;
};

enum class Mode { PassiveFdmaCdma, FmCdma, PlainCdma, FmTdma, ActiveOverlapped };
enum class Waveform { Square, Sine, Constant };

std::string_view to_string(Mode mode);
std::string_view to_string(Waveform waveform);
Mode parse_mode(std::string_view text);
Waveform parse_waveform(std::string_view text);

/// Carrier set and bit timing.
struct FrequencyPlan {
    double f1 = 0;                 ///< fundamental carrier, Hz
    int channels = 1;              ///< P
    double bit_time = 1;           ///< T, seconds
    Waveform waveform = Waveform::Square;
    std::vector<double> freqs;     ///< f_p, Hz
    bool explicit_freqs = false;

    double bin_spacing() const { return 1.0 / bit_time; }
    double cycles_per_bit() const { return f1 * bit_time; }  ///< k
};

/// Everything build_plan needs. Fields not used by a mode are ignored.
struct PlanRequest {
    PixelGrid grid;
    Mode mode = Mode::PassiveFdmaCdma;
    int channels = 1;                        ///< P (forced to 1 for FmCdma, PlainCdma, FmTdma)
    double f1 = 0;                           ///< octave plans: f_p = 2^(p-1) f1
    std::vector<double> explicit_freqs;      ///< overrides the octave ladder when non-empty
    double bit_rate = 1;                     ///< f_b = 1/T
    double sample_rate = 0;                  ///< f_s
    std::uint64_t key_seed = 0;              ///< 0 keeps raster assignment
    bool shuffle = true;                     ///< keyed pixel shuffle (only when key_seed != 0)
    bool hopping = false;
    bool code_reallocation = false;
    std::uint64_t frame_index = 0;
    std::optional<int> min_code_length;
    int square_harmonics = 1;                ///< H: square carriers need f_s >= 2·H·f_P
    std::optional<Waveform> waveform;        ///< default square (passive), sine (active)

    friend bool operator==(const PlanRequest&, const PlanRequest&) = default;
};

/// Result of coding_element: the pixel's code bit and the channel it occupies
/// for that bit. channel is empty when the bit is 0 (mirror parked) and for
/// active plans, where every pixel carries all channels.
struct CodingElement {
    bool code_bit = false;
    std::optional<int> channel;
};

/// One named invariant check.
struct Check {
    std::string name;
    bool passed = true;
    std::string detail;
};

struct ValidationReport {
    std::vector<Check> checks;
    double speedup_vs_single_channel = 1;  ///< frame_time(P=1 plan, same grid) / frame_time

    bool ok() const;
    const Check* first_failure() const;
};

/// Triple space-time-frequency coding plan. Immutable once built.
///
/// Pixels are mapped to slots in raster order, or through a keyed shuffle when
/// key_seed != 0. Passive slot s belongs to set s / P as member s % P; member p
/// uses channel p, or hop_schedule[w][p] on bit w when hopping. Each set j uses
/// code j of the code book. Active plans give every pixel its own code and all
/// P channels; FM-TDMA plans give slot s the single bit window s.
class CodingPlan {
public:
    const PlanRequest& request() const noexcept { return request_; }
    const PixelGrid& grid() const noexcept { return request_.grid; }
    Mode mode() const noexcept { return request_.mode; }
    const FrequencyPlan& frequencies() const noexcept { return freq_; }
    const CodeBook& codebook() const noexcept { return codebook_; }

    int pixel_count() const noexcept { return grid().size(); }
    int channel_count() const noexcept { return freq_.channels; }
    int set_count() const noexcept { return sets_; }            ///< J
    int frame_bits() const noexcept { return frame_bits_; }     ///< W (Q for FM-TDMA)
    long samples_per_bit() const noexcept { return samples_per_bit_; }  ///< F
    double sample_rate() const noexcept { return request_.sample_rate; }
    double bit_time() const noexcept { return freq_.bit_time; }
    double frame_time() const noexcept { return frame_bits_ * freq_.bit_time; }
    bool is_active() const noexcept { return mode() == Mode::ActiveOverlapped; }
    bool has_carrier() const noexcept { return freq_.waveform != Waveform::Constant; }

    int set_of(int pixel) const { return set_.at(static_cast<std::size_t>(pixel)); }
    int member_of(int pixel) const { return member_.at(static_cast<std::size_t>(pixel)); }
    /// Pixels of set j ordered by member index.
    const std::vector<int>& set_members(int set) const { return members_.at(static_cast<std::size_t>(set)); }

    /// Channel of a member for bit w (0-based), honoring hopping.
    int channel_of_member(int member, int bit) const;
    /// Member occupying channel c at bit w; inverse of channel_of_member.
    int member_on_channel(int channel, int bit) const;
    bool code_bit(int pixel, int bit) const;
    CodingElement coding_element(int pixel, int bit) const;

    const std::optional<std::vector<std::vector<int>>>& hop_schedule() const noexcept { return hop_; }

    /// Carrier DFT bin f_p·T, rounded. Exact when the timing checks pass.
    long bin(int channel) const { return bins_.at(static_cast<std::size_t>(channel)); }
    double carrier_phase(int channel) const { return phases_.at(static_cast<std::size_t>(channel)); }

    friend CodingPlan build_plan(const PlanRequest& request, bool strict);

private:
    CodingPlan() = default;

    PlanRequest request_;
    FrequencyPlan freq_;
    CodeBook codebook_;
    int sets_ = 0;
    int frame_bits_ = 0;
    long samples_per_bit_ = 0;
    std::vector<int> set_;
    std::vector<int> member_;
    std::vector<std::vector<int>> members_;
    std::optional<std::vector<std::vector<int>>> hop_;
    std::vector<std::vector<int>> hop_inverse_;
    std::vector<long> bins_;
    std::vector<double> phases_;
};

/// J = ceil(Q/P) and the member count of every set.
struct SetLayout {
    int sets = 0;
    std::vector<int> set_sizes;
    int last_set_size() const { return set_sizes.empty() ? 0 : set_sizes.back(); }
};
SetLayout pixel_sets(int pixel_count, int channels);

/// Builds a plan. With strict = true any failed invariant throws
/// (TimingError, NyquistError, UnsupportedOrder, Error); with strict = false the
/// plan is built anyway, carriers keep their requested frequencies and
/// validate() reports the failures.
CodingPlan build_plan(const PlanRequest& request, bool strict = true);

/// Runs every plan and frequency invariant check.
ValidationReport validate(const CodingPlan& plan);

/// Same request with a different key.
PlanRequest with_key(PlanRequest request, std::uint64_t key_seed);

// Plan files: versioned JSON document. Loading rebuilds the plan and checks the
// stored W, J and F against the rebuilt one.
std::string plan_to_json(const CodingPlan& plan);
CodingPlan plan_from_json(std::string_view text);
/// Per-pixel assignment table for auditing: m,n,set,member,code_row,channel (1-based).
void write_assignment_csv(std::ostream& out, const CodingPlan& plan);

}  // namespace caos
