#include "caos/image_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>

#include "caos/errors.hpp"

namespace caos {

namespace {

double parse_number(const std::string& token, int line) {
    const char* begin = token.data();
    const char* end = begin + token.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(*begin))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(end[-1]))) --end;
    double v = 0;
    const auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end || begin == end) throw ConfigError("not a number: '" + token + "'", line);
    return v;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream is(line);
    while (std::getline(is, item, sep)) out.push_back(item);
    return out;
}

// PGM header tokens, skipping comments.
std::string next_token(std::istream& in) {
    std::string tok;
    while (in >> tok) {
        if (tok[0] != '#') return tok;
        std::string rest;
        std::getline(in, rest);
    }
    throw ConfigError("truncated PGM header");
}

}  // namespace

Raster to_raster(const PixelGrid& grid, std::span<const double> values) {
    if (values.size() != static_cast<std::size_t>(grid.size())) throw DimensionMismatch("one value per active pixel expected");
    Raster r{grid.cols(), grid.rows(), std::vector<double>(static_cast<std::size_t>(grid.cols() * grid.rows()), 0.0)};
    for (int q = 0; q < grid.size(); ++q) {
        const auto& p = grid.position(q);
        r.values[static_cast<std::size_t>((p.n - 1) * grid.cols() + (p.m - 1))] = values[static_cast<std::size_t>(q)];
    }
    return r;
}

std::vector<double> from_raster(const PixelGrid& grid, const Raster& raster) {
    if (raster.cols != grid.cols() || raster.rows != grid.rows()) {
        throw DimensionMismatch("raster is " + std::to_string(raster.cols) + "x" + std::to_string(raster.rows) +
                                ", grid is " + std::to_string(grid.cols()) + "x" + std::to_string(grid.rows()));
    }
    std::vector<double> out(static_cast<std::size_t>(grid.size()));
    for (int q = 0; q < grid.size(); ++q) {
        const auto& p = grid.position(q);
        out[static_cast<std::size_t>(q)] = raster.values[static_cast<std::size_t>((p.n - 1) * grid.cols() + (p.m - 1))];
    }
    return out;
}

double write_pgm16(std::ostream& out, const Raster& raster) {
    double peak = 0;
    for (double v : raster.values) peak = std::max(peak, v);
    const double scale = peak > 0 ? 65535.0 / peak : 0.0;
    out << "P5\n" << raster.cols << ' ' << raster.rows << "\n65535\n";
    for (double v : raster.values) {
        const auto q = static_cast<unsigned>(std::lround(std::clamp(v * scale, 0.0, 65535.0)));
        out.put(static_cast<char>((q >> 8) & 0xff));
        out.put(static_cast<char>(q & 0xff));
    }
    return scale;
}

Raster read_pgm16(std::istream& in) {
    if (next_token(in) != "P5") throw ConfigError("not a binary PGM (P5)");
    Raster r;
    r.cols = std::stoi(next_token(in));
    r.rows = std::stoi(next_token(in));
    const int maxval = std::stoi(next_token(in));
    if (r.cols < 1 || r.rows < 1 || maxval < 1 || maxval > 65535) throw ConfigError("bad PGM header");
    in.get();  // single whitespace before the raster
    const bool wide = maxval > 255;
    r.values.resize(static_cast<std::size_t>(r.cols) * static_cast<std::size_t>(r.rows));
    for (auto& v : r.values) {
        unsigned q = static_cast<unsigned char>(in.get());
        if (wide) q = (q << 8) | static_cast<unsigned char>(in.get());
        if (!in) throw ConfigError("truncated PGM raster");
        v = static_cast<double>(q) / maxval;
    }
    return r;
}

void write_raster_csv(std::ostream& out, const Raster& raster) {
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (int n = 0; n < raster.rows; ++n) {
        for (int m = 0; m < raster.cols; ++m) {
            if (m) out << ',';
            out << raster.values[static_cast<std::size_t>(n * raster.cols + m)];
        }
        out << '\n';
    }
}

Raster read_raster_csv(std::istream& in) {
    Raster r;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto cells = split(line, ',');
        if (r.cols == 0) r.cols = static_cast<int>(cells.size());
        if (static_cast<int>(cells.size()) != r.cols) throw ConfigError("ragged CSV row", lineno);
        for (const auto& c : cells) r.values.push_back(parse_number(c, lineno));
        ++r.rows;
    }
    if (r.rows == 0) throw ConfigError("empty CSV image");
    return r;
}

void write_curve_csv(std::ostream& out, const SpectralCurve& curve) {
    out << std::setprecision(std::numeric_limits<double>::max_digits10) << "nm,value\n";
    for (std::size_t i = 0; i < curve.wavelengths().size(); ++i) {
        out << curve.wavelengths()[i] << ',' << curve.values()[i] << '\n';
    }
}

SpectralCurve read_curve_csv(std::istream& in) {
    std::vector<double> nm, v;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto cells = split(line, ',');
        if (cells.size() != 2) throw ConfigError("spectral curve rows need two columns", lineno);
        if (lineno == 1 && !cells[0].empty() && !std::isdigit(static_cast<unsigned char>(cells[0][0])) && cells[0][0] != '.' &&
            cells[0][0] != '-' && cells[0][0] != '+') {
            continue;
        }
        nm.push_back(parse_number(cells[0], lineno));
        v.push_back(parse_number(cells[1], lineno));
    }
    try {
        return SpectralCurve(std::move(nm), std::move(v));
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
}

}  // namespace caos
