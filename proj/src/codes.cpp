#include "caos/codes.hpp"

#include <algorithm>
#include <bit>
#include <string>

#include "caos/errors.hpp"

namespace caos {

namespace {

struct Factorization {
    int seed;   // 1, 12 or 20
    int power;  // order = seed * 2^power
};

std::optional<Factorization> factor(int order) {
    if (order < 2) return std::nullopt;
    for (int seed : {1, 12, 20}) {
        if (order % seed != 0) continue;
        const int rest = order / seed;
        if (std::has_single_bit(static_cast<unsigned>(rest))) {
            return Factorization{seed, std::countr_zero(static_cast<unsigned>(rest))};
        }
    }
    return std::nullopt;
}

int legendre(int a, int q) {
    a %= q;
    if (a < 0) a += q;
    if (a == 0) return 0;
    for (int x = 1; x < q; ++x) {
        if ((x * x) % q == a) return 1;
    }
    return -1;
}

// Paley type I, q prime with q = 3 (mod 4): H = I + S with S the skew conference
// matrix [[0, 1ᵀ], [-1, Q]] and Q the Jacobsthal matrix Q[i][j] = χ(j - i).
std::vector<std::int8_t> paley(int q) {
    const int n = q + 1;
    std::vector<std::int8_t> h(static_cast<std::size_t>(n * n));
    auto at = [&](int r, int c) -> std::int8_t& { return h[static_cast<std::size_t>(r * n + c)]; };
    at(0, 0) = 1;
    for (int j = 1; j < n; ++j) {
        at(0, j) = 1;
        at(j, 0) = -1;
    }
    for (int i = 0; i < q; ++i) {
        for (int j = 0; j < q; ++j) {
            at(i + 1, j + 1) = static_cast<std::int8_t>(i == j ? 1 : legendre(j - i, q));
        }
    }
    return h;
}

}  // namespace

HadamardMatrix::HadamardMatrix(int order, std::vector<std::int8_t> entries)
    : order_(order), entries_(std::move(entries)) {
    if (order_ < 1 || entries_.size() != static_cast<std::size_t>(order_) * static_cast<std::size_t>(order_)) {
        throw DimensionMismatch("Hadamard entries do not form a square matrix of order " + std::to_string(order_));
    }
}

bool is_supported_order(int order) { return factor(order).has_value(); }

int smallest_supported_order(int at_least) {
    for (int n = std::max(at_least, 2); n <= (1 << 30); ++n) {
        if (is_supported_order(n)) return n;
    }
    throw UnsupportedOrder("no supported Hadamard order >= " + std::to_string(at_least));
}

HadamardMatrix hadamard(int order) {
    const auto f = factor(order);
    if (!f) {
        throw UnsupportedOrder("Hadamard order " + std::to_string(order) +
                               " is not of the form s*2^a with s in {1, 12, 20}");
    }
    std::vector<std::int8_t> seed{1};
    if (f->seed == 12) seed = paley(11);
    if (f->seed == 20) seed = paley(19);

    const int s = f->seed;
    const int n2 = 1 << f->power;
    std::vector<std::int8_t> h(static_cast<std::size_t>(order) * static_cast<std::size_t>(order));
    // Kronecker product seed ⊗ Sylvester(2^power); Sylvester entries are (-1)^popcount(i & j).
    for (int r = 0; r < order; ++r) {
        const int r1 = r / n2;
        const int r2 = r % n2;
        for (int c = 0; c < order; ++c) {
            const int c1 = c / n2;
            const int c2 = c % n2;
            const int sylv = (std::popcount(static_cast<unsigned>(r2 & c2)) & 1) ? -1 : 1;
            h[static_cast<std::size_t>(r) * static_cast<std::size_t>(order) + static_cast<std::size_t>(c)] =
                static_cast<std::int8_t>(seed[static_cast<std::size_t>(r1 * s + c1)] * sylv);
        }
    }
    return HadamardMatrix(order, std::move(h));
}

CodeBook codebook_from_rows(int length, std::span<const int> rows) {
    const HadamardMatrix h = hadamard(length);
    CodeBook book;
    book.length = length;
    std::vector<bool> used(static_cast<std::size_t>(length), false);
    for (int r : rows) {
        if (r < 1 || r >= length) {
            throw UnsupportedOrder("code row " + std::to_string(r) + " outside 1.." + std::to_string(length - 1));
        }
        if (used[static_cast<std::size_t>(r)]) throw Error("code row " + std::to_string(r) + " assigned twice");
        used[static_cast<std::size_t>(r)] = true;
        Code code(static_cast<std::size_t>(length));
        const auto row = h.row(r);
        std::transform(row.begin(), row.end(), code.begin(), [](std::int8_t v) { return std::uint8_t(v > 0); });
        book.codes.push_back(std::move(code));
        book.source_rows.push_back(r);
    }
    return book;
}

CodeBook codebook(int num_codes, std::optional<int> min_length) {
    if (num_codes < 1) throw Error("codebook needs at least one code");
    int length = smallest_supported_order(num_codes + 1);
    if (min_length && *min_length > length) {
        if (!is_supported_order(*min_length)) {
            throw UnsupportedOrder("requested code length " + std::to_string(*min_length) + " is not supported");
        }
        length = *min_length;
    }
    std::vector<int> rows(static_cast<std::size_t>(num_codes));
    for (int j = 0; j < num_codes; ++j) rows[static_cast<std::size_t>(j)] = j + 1;
    return codebook_from_rows(length, rows);
}

std::vector<int> bipolar(std::span<const std::uint8_t> code) {
    std::vector<int> out(code.size());
    std::transform(code.begin(), code.end(), out.begin(), [](std::uint8_t c) { return c ? 1 : -1; });
    return out;
}

void write_codebook_csv(std::ostream& out, const CodeBook& book) {
    for (const auto& code : book.codes) {
        for (std::size_t i = 0; i < code.size(); ++i) {
            if (i) out << ',';
            out << int(code[i]);
        }
        out << '\n';
    }
}

}  // namespace caos
