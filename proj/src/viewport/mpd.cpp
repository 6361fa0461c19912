#include "tilecrypt/viewport.hpp"

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include <charconv>
#include <cmath>
#include <sstream>

namespace tilecrypt::viewport {

namespace pt = boost::property_tree;

const std::vector<Quality>& default_qualities()
{
    static const std::vector<Quality> ladder{
        {500'000, "480x240"},
        {1'000'000, "640x320"},
        {2'000'000, "960x480"},
        {3'000'000, "1280x640"},
    };
    return ladder;
}

std::string segment_url(const SegmentUrl& u)
{
    return u.video_id + '_' + std::to_string(u.tile) + '_' + std::to_string(u.segment) + '_' + std::to_string(u.quality) +
           std::string(selenc::suffix_for(u.level)) + ".m4s";
}

namespace {

template <typename T>
bool parse_uint(std::string_view text, T& out)
{
    if (text.empty()) return false;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc() && ptr == text.data() + text.size();
}

[[noreturn]] void schema(const std::string& msg) { throw Error(ErrorKind::SchemaError, msg); }

std::string format_double(double v)
{
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

double read_double(const std::string& text, const char* what)
{
    double v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) schema(std::string("bad ") + what + " '" + text + "'");
    return v;
}

std::uint64_t read_u64(const std::string& text, const char* what)
{
    std::uint64_t v = 0;
    if (!parse_uint(std::string_view(text), v)) schema(std::string("bad ") + what + " '" + text + "'");
    return v;
}

}  // namespace

SegmentUrl parse_segment_url(std::string_view url)
{
    const std::string whole(url);
    if (!url.ends_with(".m4s")) schema("segment URL without .m4s: '" + whole + "'");
    std::string_view stem = url.substr(0, url.size() - 4);
    SegmentUrl out;
    try {
        out.level = selenc::parse_suffix(stem);
    } catch (const selenc::Error& e) {
        schema(std::string(e.what()) + " in '" + whole + "'");
    }
    stem.remove_suffix(selenc::suffix_for(out.level).size());

    std::string_view parts[3];
    for (int i = 2; i >= 0; --i) {
        const auto us = stem.rfind('_');
        if (us == std::string_view::npos) schema("segment URL does not match {video}_{tile}_{seg}_{quality}: '" + whole + "'");
        parts[i] = stem.substr(us + 1);
        stem = stem.substr(0, us);
    }
    if (stem.empty() || !parse_uint(parts[0], out.tile) || !parse_uint(parts[1], out.segment) ||
        !parse_uint(parts[2], out.quality)) {
        schema("segment URL does not match {video}_{tile}_{seg}_{quality}: '" + whole + "'");
    }
    out.video_id = std::string(stem);
    return out;
}

std::size_t MpdModel::segment_count() const
{
    if (adaptation_sets.empty() || adaptation_sets.front().representations.empty()) return 0;
    return adaptation_sets.front().representations.front().urls.size();
}

MpdModel build_mpd(const std::string& video_id, const std::vector<TileSelection>& selections,
                   const std::vector<Quality>& qualities, SchemeId scheme, double segment_duration_s,
                   const std::array<double, 4>& level_overhead)
{
    if (qualities.empty()) throw Error(ErrorKind::SchemaError, "no qualities");
    MpdModel m;
    m.video_id = video_id;
    m.segment_duration_s = segment_duration_s;
    const EncryptionLevel slot_level[4] = {selenc::level_for(scheme, TileRole::Major), selenc::level_for(scheme, TileRole::Minor),
                                           selenc::level_for(scheme, TileRole::Minor), selenc::level_for(scheme, TileRole::Minor)};
    for (std::size_t q = 0; q < qualities.size(); ++q) {
        MpdAdaptationSet set;
        set.quality = int(q + 1);
        for (int slot = 0; slot < 4; ++slot) {
            MpdRepresentation rep;
            rep.slot = slot;
            rep.resolution = qualities[q].resolution;
            const double scale = 1.0 + level_overhead[static_cast<std::size_t>(slot_level[slot])];
            rep.bandwidth_bps = static_cast<std::uint64_t>(std::llround(double(qualities[q].bitrate_bps) * scale));
            rep.urls.reserve(selections.size());
            for (const auto& sel : selections) {
                const int tile = sel.tiles()[slot];
                rep.urls.push_back(segment_url({video_id, tile, sel.segment_index, set.quality, slot_level[slot]}));
            }
            set.bandwidth_bps += rep.bandwidth_bps;
            set.representations.push_back(std::move(rep));
        }
        m.adaptation_sets.push_back(std::move(set));
    }
    return m;
}

std::string render_mpd(const MpdModel& model)
{
    pt::ptree root;
    pt::ptree& mpd = root.add("MPD", "");
    mpd.put("<xmlattr>.xmlns", "urn:mpeg:dash:schema:mpd:2011");
    mpd.put("<xmlattr>.type", "static");
    mpd.put("<xmlattr>.profiles", "urn:mpeg:dash:profile:isoff-live:2011");
    pt::ptree& period = mpd.add("Period", "");
    period.put("<xmlattr>.id", model.video_id);
    period.put("<xmlattr>.segmentDuration", format_double(model.segment_duration_s));
    for (const auto& set : model.adaptation_sets) {
        pt::ptree& as = period.add("AdaptationSet", "");
        as.put("<xmlattr>.id", set.quality);
        as.put("<xmlattr>.bandwidth", set.bandwidth_bps);
        for (const auto& rep : set.representations) {
            pt::ptree& r = as.add("Representation", "");
            r.put("<xmlattr>.id", rep.slot);
            r.put("<xmlattr>.bandwidth", rep.bandwidth_bps);
            r.put("<xmlattr>.resolution", rep.resolution);
            pt::ptree& list = r.add("SegmentList", "");
            list.put("<xmlattr>.duration", format_double(model.segment_duration_s));
            for (const auto& url : rep.urls) list.add("SegmentURL", "").put("<xmlattr>.media", url);
        }
    }
    std::ostringstream out;
    pt::write_xml(out, root, pt::xml_writer_make_settings<std::string>(' ', 1));
    return out.str();
}

MpdModel parse_mpd(std::string_view text)
{
    pt::ptree root;
    try {
        std::istringstream in{std::string(text)};
        pt::read_xml(in, root, pt::xml_parser::trim_whitespace);
    } catch (const pt::xml_parser_error& e) {
        schema(std::string("not an XML document: ") + e.what());
    }
    const auto mpd = root.get_child_optional("MPD");
    if (!mpd) schema("missing MPD element");
    const auto period = mpd->get_child_optional("Period");
    if (!period) schema("missing Period element");

    MpdModel m;
    m.video_id = period->get<std::string>("<xmlattr>.id", "");
    if (m.video_id.empty()) schema("Period without id");
    m.segment_duration_s = read_double(period->get<std::string>("<xmlattr>.segmentDuration", ""), "segmentDuration");
    if (!(m.segment_duration_s > 0.0)) schema("segment duration must be positive");

    for (const auto& [name, as] : *period) {
        if (name != "AdaptationSet") continue;
        MpdAdaptationSet set;
        set.quality = static_cast<int>(read_u64(as.get<std::string>("<xmlattr>.id", ""), "AdaptationSet id"));
        set.bandwidth_bps = read_u64(as.get<std::string>("<xmlattr>.bandwidth", ""), "AdaptationSet bandwidth");
        std::uint64_t sum = 0;
        for (const auto& [rname, r] : as) {
            if (rname != "Representation") continue;
            MpdRepresentation rep;
            rep.slot = static_cast<int>(read_u64(r.get<std::string>("<xmlattr>.id", ""), "Representation id"));
            rep.bandwidth_bps = read_u64(r.get<std::string>("<xmlattr>.bandwidth", ""), "Representation bandwidth");
            rep.resolution = r.get<std::string>("<xmlattr>.resolution", "");
            const auto list = r.get_child_optional("SegmentList");
            if (!list) schema("Representation without SegmentList");
            for (const auto& [uname, u] : *list) {
                if (uname != "SegmentURL") continue;
                rep.urls.push_back(u.get<std::string>("<xmlattr>.media", ""));
                const SegmentUrl parsed = parse_segment_url(rep.urls.back());
                if (parsed.video_id != m.video_id || parsed.quality != set.quality) {
                    schema("URL '" + rep.urls.back() + "' does not belong to this adaptation set");
                }
            }
            sum += rep.bandwidth_bps;
            set.representations.push_back(std::move(rep));
        }
        if (set.representations.size() != 4) {
            schema("adaptation set " + std::to_string(set.quality) + " has " + std::to_string(set.representations.size()) +
                   " representations, expected 4");
        }
        for (int slot = 0; slot < 4; ++slot) {
            if (set.representations[slot].slot != slot) schema("representations must be slots 0..3 in order");
            if (set.representations[slot].urls.size() != set.representations[0].urls.size()) {
                schema("representations list different segment counts");
            }
        }
        if (sum != set.bandwidth_bps) {
            schema("adaptation set " + std::to_string(set.quality) + " bandwidth " + std::to_string(set.bandwidth_bps) +
                   " != sum of tile bandwidths " + std::to_string(sum));
        }
        m.adaptation_sets.push_back(std::move(set));
    }
    if (m.adaptation_sets.empty()) schema("no adaptation sets");
    const std::size_t segs = m.segment_count();
    for (const auto& set : m.adaptation_sets) {
        if (set.representations[0].urls.size() != segs) schema("adaptation sets list different segment counts");
    }
    return m;
}

}  // namespace tilecrypt::viewport
