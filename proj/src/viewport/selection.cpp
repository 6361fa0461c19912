#include "tilecrypt/viewport.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

namespace tilecrypt::viewport {

TileRole TileSelection::role_of(int tile) const
{
    if (tile == major) return TileRole::Major;
    if (std::find(minors.begin(), minors.end(), tile) != minors.end()) return TileRole::Minor;
    return TileRole::NonViewport;
}

TileSelection select_tiles(const Coverage& cov, const TileGrid& grid)
{
    if (grid.tile_count() < 4) throw Error(ErrorKind::BadSelection, "grid has fewer than four tiles");
    std::vector<std::pair<int, double>> ranked;
    for (const auto& [tile, share] : cov) {
        if (tile < 1 || tile > grid.tile_count()) throw Error(ErrorKind::BadSelection, "tile " + std::to_string(tile) + " outside grid");
        if (share > 0.0) ranked.emplace_back(tile, share);
    }
    if (ranked.empty()) throw Error(ErrorKind::EmptyCoverage, "no tile has nonzero coverage");
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });

    std::vector<int> chosen;
    for (std::size_t i = 0; i < ranked.size() && chosen.size() < 4; ++i) chosen.push_back(ranked[i].first);
    auto take = [&chosen](int tile) {
        if (chosen.size() < 4 && std::find(chosen.begin(), chosen.end(), tile) == chosen.end()) chosen.push_back(tile);
    };
    for (int n : grid.neighbors(chosen.front())) take(n);
    for (int t = 1; t <= grid.tile_count(); ++t) take(t);

    TileSelection sel;
    sel.major = chosen[0];
    sel.minors = {chosen[1], chosen[2], chosen[3]};
    return sel;
}

void apply_scheme(TileSelection& sel, SchemeId scheme)
{
    sel.levels.clear();
    for (int tile : sel.tiles()) sel.levels[tile] = selenc::level_for(scheme, sel.role_of(tile));
}

std::size_t segment_count(double last_sample_t, const SelectionOptions& opts)
{
    if (!(opts.segment_duration_s > 0.0)) throw Error(ErrorKind::OutOfRange, "segment duration must be positive");
    if (opts.video_duration_s) {
        return static_cast<std::size_t>(std::ceil(*opts.video_duration_s / opts.segment_duration_s - 1e-9));
    }
    return static_cast<std::size_t>(std::floor(last_sample_t / opts.segment_duration_s)) + 1;
}

std::vector<Coverage> window_coverage(const std::vector<HeadSample>& trace, const SelectionOptions& opts)
{
    if (trace.empty()) throw Error(ErrorKind::EmptyWindow, "empty head trace");
    const std::size_t count = segment_count(trace.back().t, opts);
    std::vector<Coverage> sums(count);
    std::vector<std::size_t> samples(count, 0);
    for (const auto& s : trace) {
        if (s.t < 0) continue;
        const auto k = static_cast<std::size_t>(std::floor(s.t / opts.segment_duration_s));
        if (k >= count) continue;
        for (const auto& [tile, share] : tile_coverage(s.yaw, s.pitch, opts.grid, opts.fov)) sums[k][tile] += share;
        ++samples[k];
    }
    for (std::size_t k = 0; k < count; ++k) {
        if (samples[k] == 0) throw Error(ErrorKind::EmptyWindow, "no head samples in segment " + std::to_string(k));
        for (auto& [tile, share] : sums[k]) share /= double(samples[k]);
    }
    return sums;
}

namespace {

std::vector<TileSelection> select_all(const std::vector<Coverage>& windows, const TileGrid& grid)
{
    std::vector<TileSelection> out;
    out.reserve(windows.size());
    for (std::size_t k = 0; k < windows.size(); ++k) {
        TileSelection sel = select_tiles(windows[k], grid);
        sel.segment_index = k;
        out.push_back(std::move(sel));
    }
    return out;
}

}  // namespace

std::vector<TileSelection> per_segment_selection(const std::vector<HeadSample>& trace, const SelectionOptions& opts)
{
    return select_all(window_coverage(trace, opts), opts.grid);
}

std::vector<TileSelection> aggregate_selection(const std::vector<std::vector<HeadSample>>& traces,
                                               const SelectionOptions& opts)
{
    if (traces.empty()) throw Error(ErrorKind::EmptyWindow, "no traces to aggregate");
    std::vector<Coverage> mean;
    for (const auto& trace : traces) {
        auto w = window_coverage(trace, opts);
        if (mean.empty()) mean.resize(w.size());
        if (w.size() != mean.size()) throw Error(ErrorKind::EmptyWindow, "traces cover different segment counts");
        for (std::size_t k = 0; k < w.size(); ++k) {
            for (const auto& [tile, share] : w[k]) mean[k][tile] += share / double(traces.size());
        }
    }
    return select_all(mean, opts.grid);
}

namespace {

std::vector<std::string> split_fields(const std::string& line)
{
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) {
        const auto a = field.find_first_not_of(" \t\r");
        const auto b = field.find_last_not_of(" \t\r");
        out.push_back(a == std::string::npos ? std::string() : field.substr(a, b - a + 1));
    }
    return out;
}

template <typename T>
bool parse_field(const std::string& text, T& out)
{
    const char* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, out);
    return ec == std::errc() && ptr == end && !text.empty();
}

}  // namespace

std::vector<TileSelection> parse_selections(std::string_view csv)
{
    std::vector<TileSelection> out;
    std::istringstream in{std::string(csv)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto f = split_fields(line);
        if (line_no == 1 && !f.empty() && f[0] == "segment") continue;
        TileSelection sel;
        int minor[3] = {};
        if (f.size() != 5 || !parse_field(f[0], sel.segment_index) || !parse_field(f[1], sel.major) ||
            !parse_field(f[2], minor[0]) || !parse_field(f[3], minor[1]) || !parse_field(f[4], minor[2])) {
            throw Error(ErrorKind::BadSelection, "line " + std::to_string(line_no) + ": '" + line + "'");
        }
        sel.minors = {minor[0], minor[1], minor[2]};
        auto tiles = sel.tiles();
        std::sort(tiles.begin(), tiles.end());
        if (std::adjacent_find(tiles.begin(), tiles.end()) != tiles.end() || tiles.front() < 1) {
            throw Error(ErrorKind::BadSelection, "line " + std::to_string(line_no) + ": tiles must be four distinct ids");
        }
        if (sel.segment_index != out.size()) {
            throw Error(ErrorKind::BadSelection, "line " + std::to_string(line_no) + ": segments must be listed in order from 0");
        }
        out.push_back(std::move(sel));
    }
    return out;
}

std::string render_selections(const std::vector<TileSelection>& selections)
{
    std::string out = "segment,major,minor1,minor2,minor3\n";
    for (const auto& s : selections) {
        out += std::to_string(s.segment_index) + ',' + std::to_string(s.major);
        for (int m : s.minors) out += ',' + std::to_string(m);
        out += '\n';
    }
    return out;
}

}  // namespace tilecrypt::viewport
