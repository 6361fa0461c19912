#include "tilecrypt/viewport.hpp"

#include <algorithm>
#include <cmath>

namespace tilecrypt::viewport {

std::string_view to_string(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::OutOfRange: return "OutOfRange";
    case ErrorKind::EmptyCoverage: return "EmptyCoverage";
    case ErrorKind::EmptyWindow: return "EmptyWindow";
    case ErrorKind::SchemaError: return "SchemaError";
    case ErrorKind::BadRow: return "BadRow";
    case ErrorKind::NonMonotoneTime: return "NonMonotoneTime";
    case ErrorKind::BadSelection: return "BadSelection";
    }
    return "?";
}

Error::Error(ErrorKind kind, const std::string& what) : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

std::pair<double, double> TileGrid::center(int tile) const
{
    const double yaw = -180.0 + (col_of(tile) + 0.5) * tile_width();
    const double pitch = 90.0 - (row_of(tile) + 0.5) * tile_height();
    return {yaw, pitch};
}

std::vector<int> TileGrid::neighbors(int tile) const
{
    std::vector<int> out;
    const int r = row_of(tile);
    const int c = col_of(tile);
    for (int dr = -1; dr <= 1; ++dr) {
        const int rr = r + dr;
        if (rr < 0 || rr >= rows) continue;
        for (int dc = -1; dc <= 1; ++dc) {
            if (dr == 0 && dc == 0) continue;
            const int cc = ((c + dc) % cols + cols) % cols;
            const int id = tile_id(rr, cc);
            if (id != tile) out.push_back(id);
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

namespace {

double overlap(double a0, double a1, double b0, double b1) { return std::max(0.0, std::min(a1, b1) - std::max(a0, b0)); }

}  // namespace

Coverage tile_coverage(double yaw, double pitch, const TileGrid& grid, const FieldOfView& fov)
{
    if (grid.rows < 1 || grid.cols < 1) throw Error(ErrorKind::OutOfRange, "grid needs at least one row and column");
    if (!(yaw >= -180.0 && yaw < 180.0)) throw Error(ErrorKind::OutOfRange, "yaw " + std::to_string(yaw));
    if (!(pitch >= -90.0 && pitch <= 90.0)) throw Error(ErrorKind::OutOfRange, "pitch " + std::to_string(pitch));
    if (!(fov.horizontal > 0.0 && fov.horizontal <= 360.0 && fov.vertical > 0.0 && fov.vertical <= 180.0)) {
        throw Error(ErrorKind::OutOfRange, "field of view");
    }

    // Horizontal interval, shifted so that it starts inside [-180, 180).
    double h0 = yaw - fov.horizontal / 2.0;
    if (h0 < -180.0) h0 += 360.0;
    const double h1 = h0 + fov.horizontal;  // may exceed 180: the excess wraps to -180
    const double v0 = std::max(-90.0, pitch - fov.vertical / 2.0);
    const double v1 = std::min(90.0, pitch + fov.vertical / 2.0);
    const double area = fov.horizontal * (v1 - v0);

    const double w = grid.tile_width();
    const double h = grid.tile_height();
    std::vector<double> col_share(grid.cols, 0.0);
    for (int c = 0; c < grid.cols; ++c) {
        const double c0 = -180.0 + c * w;
        const double c1 = c0 + w;
        col_share[c] = overlap(h0, h1, c0, c1) + overlap(h0 - 360.0, h1 - 360.0, c0, c1);
    }
    Coverage cov;
    for (int r = 0; r < grid.rows; ++r) {
        const double top = 90.0 - r * h;
        const double row_share = overlap(v0, v1, top - h, top);
        if (row_share <= 0.0) continue;
        for (int c = 0; c < grid.cols; ++c) {
            if (col_share[c] <= 0.0) continue;
            cov[grid.tile_id(r, c)] = col_share[c] * row_share / area;
        }
    }
    return cov;
}

}  // namespace tilecrypt::viewport
