#include "tilecrypt/simnet.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

namespace tilecrypt::simnet {

std::string_view to_string(Mode mode)
{
    switch (mode) {
    case Mode::Https: return "https";
    case Mode::AbeMajorP: return "abe-majorP";
    case Mode::AbeAllIP: return "abe-alliP";
    }
    return "?";
}

Mode parse_mode(std::string_view name)
{
    if (name == "https") return Mode::Https;
    if (name == "abe-majorP") return Mode::AbeMajorP;
    if (name == "abe-alliP") return Mode::AbeAllIP;
    throw Error(ErrorKind::ConfigError, "unknown mode '" + std::string(name) + "' (expected https, abe-majorP or abe-alliP)");
}

selenc::SchemeId scheme_for(Mode mode)
{
    switch (mode) {
    case Mode::AbeMajorP: return selenc::SchemeId::MajorAllP;
    case Mode::AbeAllIP: return selenc::SchemeId::AllIP;
    case Mode::Https: break;
    }
    throw Error(ErrorKind::ConfigError, "https mode has no selective encryption scheme");
}

bool is_abe(Mode mode) { return mode != Mode::Https; }

Catalog::Catalog(std::string video_id, double segment_duration_s, std::size_t segment_count, int tiles,
                 std::vector<viewport::Quality> qualities, std::size_t blob_overhead)
    : video_id_(std::move(video_id)),
      segment_duration_s_(segment_duration_s),
      segment_count_(segment_count),
      tiles_(tiles),
      qualities_(std::move(qualities)),
      blob_overhead_(blob_overhead),
      stats_(std::size_t(tiles) * segment_count * qualities_.size()),
      sizes_(stats_.size())
{
    if (tiles < 1 || segment_count == 0 || qualities_.empty()) throw Error(ErrorKind::ConfigError, "empty catalog");
}

std::size_t Catalog::slot(int tile, std::size_t segment, int quality) const
{
    if (tile < 1 || tile > tiles_ || segment >= segment_count_ || quality < 1 || quality > int(qualities_.size())) {
        throw Error(ErrorKind::ConfigError, "no catalog entry for tile " + std::to_string(tile) + " segment " +
                                                std::to_string(segment) + " quality " + std::to_string(quality));
    }
    return (std::size_t(tile - 1) * segment_count_ + segment) * qualities_.size() + std::size_t(quality - 1);
}

const selenc::SegmentStats& Catalog::stats(int tile, std::size_t segment, int quality) const
{
    return stats_[slot(tile, segment, quality)];
}

void Catalog::set_stats(int tile, std::size_t segment, int quality, const selenc::SegmentStats& s)
{
    const std::size_t i = slot(tile, segment, quality);
    stats_[i] = s;
    for (auto level : selenc::kAllLevels) {
        sizes_[i][std::size_t(level)] = s.total_bytes + s.covered_nals(level) * blob_overhead_;
    }
}

void Catalog::set_size(int tile, std::size_t segment, int quality, EncryptionLevel level, std::size_t bytes)
{
    sizes_[slot(tile, segment, quality)][std::size_t(level)] = bytes;
}

std::size_t Catalog::size(int tile, std::size_t segment, int quality, EncryptionLevel level) const
{
    return sizes_[slot(tile, segment, quality)][std::size_t(level)];
}

std::size_t Catalog::catalog_bytes(Mode mode, std::size_t aliases) const
{
    std::vector<EncryptionLevel> levels;
    switch (mode) {
    case Mode::Https: levels = {EncryptionLevel::None}; break;
    case Mode::AbeAllIP: levels = {EncryptionLevel::AllIP}; break;
    case Mode::AbeMajorP: levels = {EncryptionLevel::AllIP, EncryptionLevel::AllI}; break;
    }
    std::size_t total = 0;
    for (const auto& s : sizes_)
        for (auto level : levels) total += s[std::size_t(level)];
    return total * aliases;
}

std::string Catalog::alias_id(std::size_t alias) const
{
    return alias == 0 ? video_id_ : video_id_ + "-" + std::to_string(alias);
}

namespace {

std::uint64_t splitmix(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

Catalog synthetic_catalog(const SyntheticCatalogSpec& spec, std::size_t blob_overhead)
{
    if (!(spec.segment_duration_s > 0.0) || !(spec.video_duration_s > 0.0) || !(spec.fps > 0.0) || spec.gop_len == 0) {
        throw Error(ErrorKind::ConfigError, "synthetic catalog needs positive durations, frame rate and GOP length");
    }
    const auto segs = static_cast<std::size_t>(std::ceil(spec.video_duration_s / spec.segment_duration_s - 1e-9));
    const viewport::TileGrid grid;
    Catalog cat(spec.video_id, spec.segment_duration_s, segs, grid.tile_count(), spec.qualities, blob_overhead);

    const auto frames = static_cast<std::size_t>(std::llround(spec.fps * spec.segment_duration_s));
    const std::size_t i_frames = (frames + spec.gop_len - 1) / spec.gop_len;
    const std::size_t p_frames = frames - i_frames;
    const double weight = spec.i_to_p_ratio * double(i_frames) + double(p_frames);
    for (int tile = 1; tile <= grid.tile_count(); ++tile) {
        for (std::size_t k = 0; k < segs; ++k) {
            // Content complexity varies per tile and segment but not per quality.
            const std::uint64_t h = splitmix(spec.seed ^ splitmix(std::uint64_t(tile) << 32 | k));
            const double jitter = 1.0 + spec.tile_jitter * (2.0 * (double(h >> 11) * 0x1.0p-53) - 1.0);
            for (int q = 1; q <= int(spec.qualities.size()); ++q) {
                const double vcl = double(spec.qualities[q - 1].bitrate_bps) * spec.segment_duration_s / 8.0 * jitter;
                selenc::SegmentStats s;
                s.frames = {i_frames, p_frames, 0};
                s.vcl_nals = {i_frames, p_frames, 0};
                s.vcl_bytes[0] = static_cast<std::size_t>(std::llround(vcl * spec.i_to_p_ratio * double(i_frames) / weight));
                s.vcl_bytes[1] = static_cast<std::size_t>(std::llround(vcl * double(p_frames) / weight));
                s.total_bytes = s.vcl_bytes[0] + s.vcl_bytes[1] + spec.container_bytes;
                cat.set_stats(tile, k, q, s);
            }
        }
    }
    return cat;
}

std::string manifest_header()
{
    return "file,tile,segment,quality,level,original_bytes,bytes,i_frames,p_frames,b_frames,i_nals,p_nals,b_nals,"
           "i_bytes,p_bytes,b_bytes";
}

std::string render_manifest_row(const ManifestRow& r)
{
    std::string out = r.file + ',' + std::to_string(r.tile) + ',' + std::to_string(r.segment) + ',' + std::to_string(r.quality) +
                      ',' + std::string(selenc::to_string(r.level)) + ',' + std::to_string(r.original_bytes) + ',' +
                      std::to_string(r.bytes);
    for (auto v : r.stats.frames) out += ',' + std::to_string(v);
    for (auto v : r.stats.vcl_nals) out += ',' + std::to_string(v);
    for (auto v : r.stats.vcl_bytes) out += ',' + std::to_string(v);
    return out;
}

namespace {

template <typename T>
T field_number(const std::string& text, std::size_t line_no)
{
    T v{};
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
        throw Error(ErrorKind::ConfigError, "manifest line " + std::to_string(line_no) + ": bad number '" + text + "'");
    }
    return v;
}

}  // namespace

std::vector<ManifestRow> parse_manifest(std::string_view csv)
{
    std::vector<ManifestRow> out;
    std::istringstream in{std::string(csv)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line_no == 1 && line.rfind("file,", 0) == 0) continue;
        std::vector<std::string> f;
        std::string field;
        std::istringstream row(line);
        while (std::getline(row, field, ',')) f.push_back(field);
        if (f.size() != 16) throw Error(ErrorKind::ConfigError, "manifest line " + std::to_string(line_no) + ": expected 16 fields");
        ManifestRow r;
        r.file = f[0];
        r.tile = field_number<int>(f[1], line_no);
        r.segment = field_number<std::size_t>(f[2], line_no);
        r.quality = field_number<int>(f[3], line_no);
        try {
            r.level = selenc::parse_level(f[4]);
        } catch (const selenc::Error& e) {
            throw Error(ErrorKind::ConfigError, "manifest line " + std::to_string(line_no) + ": " + e.what());
        }
        r.original_bytes = field_number<std::size_t>(f[5], line_no);
        r.bytes = field_number<std::size_t>(f[6], line_no);
        for (int i = 0; i < 3; ++i) {
            r.stats.frames[i] = field_number<std::size_t>(f[7 + i], line_no);
            r.stats.vcl_nals[i] = field_number<std::size_t>(f[10 + i], line_no);
            r.stats.vcl_bytes[i] = field_number<std::size_t>(f[13 + i], line_no);
        }
        r.stats.total_bytes = r.original_bytes;
        out.push_back(std::move(r));
    }
    return out;
}

Catalog catalog_from_manifest(const std::vector<ManifestRow>& rows, const std::string& video_id, double segment_duration_s,
                              const std::vector<viewport::Quality>& qualities, std::size_t blob_overhead)
{
    if (rows.empty()) throw Error(ErrorKind::ConfigError, "empty size manifest");
    int tiles = 0;
    std::size_t segs = 0;
    for (const auto& r : rows) {
        tiles = std::max(tiles, r.tile);
        segs = std::max(segs, r.segment + 1);
    }
    Catalog cat(video_id, segment_duration_s, segs, tiles, qualities, blob_overhead);
    std::vector<char> seen(std::size_t(tiles) * segs * qualities.size(), 0);
    for (const auto& r : rows) {
        if (r.quality < 1 || r.quality > int(qualities.size())) {
            throw Error(ErrorKind::ConfigError, "manifest row " + r.file + " has quality outside the ladder");
        }
        const std::size_t i = (std::size_t(r.tile - 1) * segs + r.segment) * qualities.size() + std::size_t(r.quality - 1);
        if (!seen[i]) cat.set_stats(r.tile, r.segment, r.quality, r.stats);
        seen[i] = 1;
    }
    // Measured sizes take precedence over the layout formula.
    for (const auto& r : rows) cat.set_size(r.tile, r.segment, r.quality, r.level, r.bytes);
    if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
        throw Error(ErrorKind::ConfigError, "size manifest does not cover every tile, segment and quality");
    }
    return cat;
}

ClientPlan make_plan(const std::vector<viewport::TileSelection>& selections, Mode mode, std::size_t alias, std::size_t trace)
{
    ClientPlan plan;
    plan.alias = alias;
    plan.trace = trace;
    plan.segments.reserve(selections.size());
    for (const auto& sel : selections) {
        SegmentPlan sp;
        sp.tiles = sel.tiles();
        for (int slot = 0; slot < 4; ++slot) {
            const auto role = slot == 0 ? selenc::TileRole::Major : selenc::TileRole::Minor;
            sp.levels[slot] = is_abe(mode) ? selenc::level_for(scheme_for(mode), role) : EncryptionLevel::None;
        }
        plan.segments.push_back(sp);
    }
    return plan;
}

std::uint64_t object_id(std::size_t alias, int tile, std::size_t segment, int quality, EncryptionLevel level)
{
    return std::uint64_t(alias) << 48 | std::uint64_t(tile & 0xff) << 40 | std::uint64_t(segment & 0xffffff) << 16 |
           std::uint64_t(quality & 0xff) << 8 | std::uint64_t(level);
}

std::string object_url(const Catalog& catalog, std::uint64_t id)
{
    const viewport::SegmentUrl u{catalog.alias_id(std::size_t(id >> 48)), int((id >> 40) & 0xff), std::size_t((id >> 16) & 0xffffff),
                                 int((id >> 8) & 0xff), static_cast<EncryptionLevel>(id & 0xff)};
    return viewport::segment_url(u);
}

}  // namespace tilecrypt::simnet
