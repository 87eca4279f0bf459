#pragma once

#include <istream>
#include <ostream>
#include <span>
#include <vector>

#include "caos/plan.hpp"
#include "caos/scene.hpp"

namespace caos {

/// Dense M×N raster, row-major (n outer). Inactive grid pixels read as 0.
struct Raster {
    int cols = 0;
    int rows = 0;
    std::vector<double> values;
};

/// Places per-pixel values (indexed like grid.active()) on the full raster.
Raster to_raster(const PixelGrid& grid, std::span<const double> values);
/// Reads per-pixel values for the grid's active pixels from a raster of the same shape.
std::vector<double> from_raster(const PixelGrid& grid, const Raster& raster);

/// Binary 16-bit PGM (P5, maxval 65535, big-endian). Values are scaled so the
/// largest maps to 65535 and negatives clip to 0; returns the scale used.
double write_pgm16(std::ostream& out, const Raster& raster);
/// Values come back in [0, 1].
Raster read_pgm16(std::istream& in);

/// One raster row per line, comma separated, full double precision.
void write_raster_csv(std::ostream& out, const Raster& raster);
Raster read_raster_csv(std::istream& in);

/// Two columns: wavelength in nm, value. A non-numeric first line is a header.
void write_curve_csv(std::ostream& out, const SpectralCurve& curve);
SpectralCurve read_curve_csv(std::istream& in);

}  // namespace caos
