#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

namespace caos {

/// Square ±1 matrix with H·Hᵀ = order·I. Row 0 is all ones.
class HadamardMatrix {
public:
    HadamardMatrix(int order, std::vector<std::int8_t> entries);

    int order() const noexcept { return order_; }
    std::int8_t at(int row, int col) const { return entries_[index(row, col)]; }
    std::span<const std::int8_t> row(int r) const {
        return {entries_.data() + index(r, 0), static_cast<std::size_t>(order_)};
    }

private:
    std::size_t index(int r, int c) const {
        return static_cast<std::size_t>(r) * static_cast<std::size_t>(order_) + static_cast<std::size_t>(c);
    }

    int order_;
    std::vector<std::int8_t> entries_;
};

/// True when order = s·2^a with s in {1, 12, 20} and order >= 2.
bool is_supported_order(int order);

/// Smallest supported order >= at_least. Throws UnsupportedOrder past 2^30.
int smallest_supported_order(int at_least);

/// Sylvester doubling over a seed of order 1, 12 or 20 (Paley type I for the
/// latter two, from the quadratic residues of 11 and 19). Normalized so that
/// row 0 is all ones and every other row is balanced.
HadamardMatrix hadamard(int order);

using Code = std::vector<std::uint8_t>;

/// Balanced on/off codes taken from the non-constant rows of a Hadamard matrix.
struct CodeBook {
    int length = 0;                ///< W, bits per code
    std::vector<Code> codes;       ///< J codes, each W bits in {0,1}
    std::vector<int> source_rows;  ///< Hadamard row each code came from

    int size() const noexcept { return static_cast<int>(codes.size()); }
};

/// Codes from rows 1..J of hadamard(W), W the smallest supported order >= J+1
/// (or min_length when that is larger).
CodeBook codebook(int num_codes, std::optional<int> min_length = std::nullopt);

/// Codes from the given Hadamard rows (each in 1..W-1, no repeats).
CodeBook codebook_from_rows(int length, std::span<const int> rows);

/// Elementwise 2c - 1.
std::vector<int> bipolar(std::span<const std::uint8_t> code);

/// One code per line, bits as 0/1 separated by commas.
void write_codebook_csv(std::ostream& out, const CodeBook& book);

}  // namespace caos
