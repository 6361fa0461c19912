#pragma once

// Viewport-to-tile mapping on an equirectangular tile grid, per-segment
// major/minor selection, and the tile-suffixed MPD.
//
// Tiles are numbered row-major from 1; row 0 is the top of the frame
// (pitch +90) and column 0 starts at yaw -180.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tilecrypt/selenc.hpp"

namespace tilecrypt::viewport {

using selenc::EncryptionLevel;
using selenc::SchemeId;
using selenc::TileRole;

enum class ErrorKind { OutOfRange, EmptyCoverage, EmptyWindow, SchemaError, BadRow, NonMonotoneTime, BadSelection };

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what);
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

struct HeadSample {
    double t = 0;
    double yaw = 0;    // [-180, 180)
    double pitch = 0;  // [-90, 90]
    friend bool operator==(const HeadSample&, const HeadSample&) = default;
};

struct TileGrid {
    int rows = 3;
    int cols = 3;

    int tile_count() const { return rows * cols; }
    double tile_width() const { return 360.0 / cols; }
    double tile_height() const { return 180.0 / rows; }
    int tile_id(int row, int col) const { return row * cols + col + 1; }
    int row_of(int tile) const { return (tile - 1) / cols; }
    int col_of(int tile) const { return (tile - 1) % cols; }
    // Yaw/pitch of a tile's center.
    std::pair<double, double> center(int tile) const;
    // 8-neighborhood with horizontal wrap, ascending ids.
    std::vector<int> neighbors(int tile) const;
};

struct FieldOfView {
    double horizontal = 120.0;
    double vertical = 60.0;
};

// tile id -> fraction of the viewport rectangle; only nonzero entries.
using Coverage = std::map<int, double>;

Coverage tile_coverage(double yaw, double pitch, const TileGrid& grid = {}, const FieldOfView& fov = {});

struct TileSelection {
    std::size_t segment_index = 0;
    int major = 0;
    std::array<int, 3> minors{};
    std::map<int, EncryptionLevel> levels;  // filled by apply_scheme

    std::array<int, 4> tiles() const { return {major, minors[0], minors[1], minors[2]}; }
    TileRole role_of(int tile) const;
    friend bool operator==(const TileSelection&, const TileSelection&) = default;
};

TileSelection select_tiles(const Coverage& cov, const TileGrid& grid = {});
void apply_scheme(TileSelection& sel, SchemeId scheme);

struct SelectionOptions {
    double segment_duration_s = 2.0;
    // When set, the segment count is ceil(duration / segment duration);
    // otherwise it follows the last trace sample.
    std::optional<double> video_duration_s;
    TileGrid grid;
    FieldOfView fov;
};

std::size_t segment_count(double last_sample_t, const SelectionOptions& opts);

// Per-window mean coverage, one entry per segment.
std::vector<Coverage> window_coverage(const std::vector<HeadSample>& trace, const SelectionOptions& opts);
std::vector<TileSelection> per_segment_selection(const std::vector<HeadSample>& trace, const SelectionOptions& opts);
// Averages window coverage across users before selecting.
std::vector<TileSelection> aggregate_selection(const std::vector<std::vector<HeadSample>>& traces,
                                               const SelectionOptions& opts);

std::vector<HeadSample> parse_headtrace(std::string_view csv);
std::string render_headtrace(const std::vector<HeadSample>& trace);

struct HeadTraceSpec {
    double duration_s = 293.5;
    double sample_interval_s = 0.1;
    std::uint64_t seed = 1;
    double yaw_drift_deg_s = 8.0;     // random-walk step scale
    double saccade_rate_hz = 0.08;    // mean rate of sudden turns
    double pitch_spread_deg = 18.0;   // stationary pitch spread around the horizon
};

std::vector<HeadSample> synth_headtrace(const HeadTraceSpec& spec);

// Selection files: "segment,major,minor1,minor2,minor3".
std::vector<TileSelection> parse_selections(std::string_view csv);
std::string render_selections(const std::vector<TileSelection>& selections);

struct Quality {
    std::uint64_t bitrate_bps = 0;  // per tile
    std::string resolution;         // "WxH"
    friend bool operator==(const Quality&, const Quality&) = default;
};

// Per-tile ladder used in the experiments.
const std::vector<Quality>& default_qualities();

struct SegmentUrl {
    std::string video_id;
    int tile = 0;
    std::size_t segment = 0;
    int quality = 0;  // 1-based
    EncryptionLevel level = EncryptionLevel::None;
    friend bool operator==(const SegmentUrl&, const SegmentUrl&) = default;
};

std::string segment_url(const SegmentUrl& u);
// Inverse of segment_url; SchemaError when the pattern or suffix is wrong.
SegmentUrl parse_segment_url(std::string_view url);

struct MpdRepresentation {
    int slot = 0;  // 0 = major tile, 1..3 = minor tiles
    std::uint64_t bandwidth_bps = 0;
    std::string resolution;
    std::vector<std::string> urls;  // one per segment
    friend bool operator==(const MpdRepresentation&, const MpdRepresentation&) = default;
};

struct MpdAdaptationSet {
    int quality = 0;  // 1-based
    std::uint64_t bandwidth_bps = 0;  // sum over the four representations
    std::vector<MpdRepresentation> representations;
    friend bool operator==(const MpdAdaptationSet&, const MpdAdaptationSet&) = default;
};

struct MpdModel {
    std::string video_id;
    double segment_duration_s = 2.0;
    std::vector<MpdAdaptationSet> adaptation_sets;

    std::size_t segment_count() const;
    friend bool operator==(const MpdModel&, const MpdModel&) = default;
};

// `level_overhead[level]` scales advertised bitrates by (1 + overhead).
MpdModel build_mpd(const std::string& video_id, const std::vector<TileSelection>& selections,
                   const std::vector<Quality>& qualities, SchemeId scheme, double segment_duration_s,
                   const std::array<double, 4>& level_overhead = {});

std::string render_mpd(const MpdModel& model);
MpdModel parse_mpd(std::string_view text);

}  // namespace tilecrypt::viewport
