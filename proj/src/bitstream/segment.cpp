#include "tilecrypt/bitstream.hpp"

#include <algorithm>
#include <numeric>

namespace tilecrypt::bitstream {

std::string_view to_string(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::TruncatedBox: return "TruncatedBox";
    case ErrorKind::MissingBox: return "MissingBox";
    case ErrorKind::UnsupportedLayout: return "UnsupportedLayout";
    case ErrorKind::BadLengthPrefix: return "BadLengthPrefix";
    case ErrorKind::ZeroLengthNal: return "ZeroLengthNal";
    case ErrorKind::OutOfBits: return "OutOfBits";
    case ErrorKind::MalformedSliceHeader: return "MalformedSliceHeader";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::CardinalityMismatch: return "CardinalityMismatch";
    }
    return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind)
{
}

namespace {

std::uint32_t be32(ByteView b, std::size_t at)
{
    return (std::uint32_t(b[at]) << 24) | (std::uint32_t(b[at + 1]) << 16) |
           (std::uint32_t(b[at + 2]) << 8) | std::uint32_t(b[at + 3]);
}

std::uint64_t be64(ByteView b, std::size_t at)
{
    return (std::uint64_t(be32(b, at)) << 32) | be32(b, at + 4);
}

struct RawBox {
    std::string type;
    std::size_t offset = 0;
    std::size_t header = 0;
    std::size_t size = 0;
    std::size_t payload() const { return offset + header; }
    std::size_t end() const { return offset + size; }
};

// Reads a box header at `pos` inside [pos, limit). When `allow_overrun` is
// set the declared size may extend past `limit` (stale mdat).
RawBox read_box(ByteView bytes, std::size_t pos, std::size_t limit, bool allow_overrun = false)
{
    const std::size_t remaining = limit - pos;
    if (remaining < 8) {
        throw Error(ErrorKind::TruncatedBox, "box header at offset " + std::to_string(pos) +
                                                 " needs 8 bytes, " + std::to_string(remaining) + " left");
    }
    RawBox box;
    box.offset = pos;
    box.type.assign(reinterpret_cast<const char*>(bytes.data() + pos + 4), 4);
    std::uint64_t size = be32(bytes, pos);
    box.header = 8;
    if (size == 1) {
        if (remaining < 16) {
            throw Error(ErrorKind::TruncatedBox, "largesize header of '" + box.type + "' is cut off");
        }
        size = be64(bytes, pos + 8);
        box.header = 16;
    } else if (size == 0) {
        size = remaining;
    }
    if (size < box.header) {
        throw Error(ErrorKind::TruncatedBox, "box '" + box.type + "' declares size " + std::to_string(size) +
                                                 " smaller than its header");
    }
    if (size > remaining && !allow_overrun) {
        throw Error(ErrorKind::TruncatedBox, "box '" + box.type + "' at offset " + std::to_string(pos) +
                                                 " declares " + std::to_string(size) + " bytes, " +
                                                 std::to_string(remaining) + " available");
    }
    box.size = static_cast<std::size_t>(size);
    return box;
}

std::vector<RawBox> children(ByteView bytes, const RawBox& parent)
{
    std::vector<RawBox> out;
    std::size_t pos = parent.payload();
    while (pos < parent.end()) {
        out.push_back(read_box(bytes, pos, parent.end()));
        pos = out.back().end();
    }
    return out;
}

class FieldCursor {
public:
    FieldCursor(ByteView bytes, const RawBox& box) : bytes_(bytes), pos_(box.payload()), end_(box.end()), type_(box.type) {}

    std::uint32_t u32()
    {
        need(4);
        auto v = be32(bytes_, pos_);
        pos_ += 4;
        return v;
    }
    void skip(std::size_t n)
    {
        need(n);
        pos_ += n;
    }
    std::size_t pos() const { return pos_; }

private:
    void need(std::size_t n) const
    {
        if (end_ - pos_ < n) {
            throw Error(ErrorKind::TruncatedBox, "'" + type_ + "' body ends before its declared fields");
        }
    }
    ByteView bytes_;
    std::size_t pos_;
    std::size_t end_;
    std::string type_;
};

constexpr std::uint32_t kTfhdBaseDataOffset = 0x000001;
constexpr std::uint32_t kTfhdSampleDescription = 0x000002;
constexpr std::uint32_t kTfhdDefaultDuration = 0x000008;
constexpr std::uint32_t kTfhdDefaultSize = 0x000010;
constexpr std::uint32_t kTfhdDefaultFlags = 0x000020;

constexpr std::uint32_t kTrunDataOffset = 0x000001;
constexpr std::uint32_t kTrunFirstSampleFlags = 0x000004;
constexpr std::uint32_t kTrunDuration = 0x000100;
constexpr std::uint32_t kTrunSize = 0x000200;
constexpr std::uint32_t kTrunFlags = 0x000400;
constexpr std::uint32_t kTrunCompositionOffset = 0x000800;

struct MoofInfo {
    TrackRun run;
    bool has_data_offset = false;
    std::int64_t data_offset = 0;
};

MoofInfo parse_moof(ByteView bytes, const RawBox& moof)
{
    std::vector<RawBox> trafs;
    for (const auto& child : children(bytes, moof)) {
        if (child.type == "traf") trafs.push_back(child);
    }
    if (trafs.empty()) throw Error(ErrorKind::MissingBox, "moof has no traf");
    if (trafs.size() > 1) throw Error(ErrorKind::UnsupportedLayout, "more than one traf in moof");

    MoofInfo info;
    const RawBox* tfhd = nullptr;
    std::vector<RawBox> truns;
    auto traf_children = children(bytes, trafs.front());
    for (const auto& child : traf_children) {
        if (child.type == "tfhd") tfhd = &child;
        if (child.type == "trun") truns.push_back(child);
    }
    if (tfhd == nullptr) throw Error(ErrorKind::MissingBox, "traf has no tfhd");
    if (truns.empty()) throw Error(ErrorKind::MissingBox, "traf has no trun");
    if (truns.size() > 1) throw Error(ErrorKind::UnsupportedLayout, "more than one trun in traf");

    FieldCursor th(bytes, *tfhd);
    info.run.tfhd_flags = th.u32() & 0x00FFFFFF;
    info.run.track_id = th.u32();
    if (info.run.tfhd_flags & kTfhdBaseDataOffset) {
        throw Error(ErrorKind::UnsupportedLayout, "tfhd carries an explicit base data offset");
    }
    if (info.run.tfhd_flags & kTfhdSampleDescription) th.skip(4);
    if (info.run.tfhd_flags & kTfhdDefaultDuration) th.skip(4);
    bool has_default_size = false;
    std::uint32_t default_size = 0;
    if (info.run.tfhd_flags & kTfhdDefaultSize) {
        has_default_size = true;
        default_size = th.u32();
    }
    if (info.run.tfhd_flags & kTfhdDefaultFlags) th.skip(4);

    FieldCursor tr(bytes, truns.front());
    info.run.trun_flags = tr.u32() & 0x00FFFFFF;
    const std::uint32_t count = tr.u32();
    if (info.run.trun_flags & kTrunDataOffset) {
        info.has_data_offset = true;
        info.data_offset = static_cast<std::int32_t>(tr.u32());
    }
    if (info.run.trun_flags & kTrunFirstSampleFlags) tr.skip(4);
    const bool per_sample_size = (info.run.trun_flags & kTrunSize) != 0;
    if (!per_sample_size && !has_default_size) {
        throw Error(ErrorKind::UnsupportedLayout, "no per-sample or default sample size");
    }
    std::size_t entry = 0;
    for (auto flag : {kTrunDuration, kTrunSize, kTrunFlags, kTrunCompositionOffset}) {
        if (info.run.trun_flags & flag) entry += 4;
    }
    if (std::uint64_t(count) * entry > truns.front().end() - tr.pos()) {
        throw Error(ErrorKind::TruncatedBox, "trun declares " + std::to_string(count) + " samples beyond its size");
    }
    info.run.declared_sizes.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        if (info.run.trun_flags & kTrunDuration) tr.skip(4);
        if (per_sample_size) {
            info.run.size_field_offsets.push_back(tr.pos());
            info.run.declared_sizes.push_back(tr.u32());
        } else {
            info.run.declared_sizes.push_back(default_size);
        }
        if (info.run.trun_flags & kTrunFlags) tr.skip(4);
        if (info.run.trun_flags & kTrunCompositionOffset) tr.skip(4);
    }
    return info;
}

BoxRecord record(const RawBox& box) { return {box.type, box.offset, box.size}; }

}  // namespace

ContainerLayout parse_container(ByteView bytes, bool trust_mdat_size)
{
    ContainerLayout layout;
    std::size_t pos = 0;
    bool have_moof = false;
    bool have_mdat = false;
    RawBox moof_box;
    MoofInfo moof;
    while (pos < bytes.size()) {
        RawBox box = read_box(bytes, pos, bytes.size(), !trust_mdat_size);
        if (box.size > bytes.size() - pos && box.type != "mdat") {
            throw Error(ErrorKind::TruncatedBox, "box '" + box.type + "' overruns the segment");
        }
        if (box.type == "moof") {
            if (have_moof) throw Error(ErrorKind::UnsupportedLayout, "more than one moof");
            have_moof = true;
            moof_box = box;
            moof = parse_moof(bytes, box);
        } else if (box.type == "mdat" && have_moof && !have_mdat) {
            have_mdat = true;
            const std::size_t available = bytes.size() - box.payload();
            layout.media_payload = {box.payload(), std::min(box.size - box.header, available)};
            layout.boxes.push_back(record(box));
            if (!trust_mdat_size) break;
            pos = box.end();
            continue;
        } else if (box.type == "mdat" && !have_moof) {
            throw Error(ErrorKind::UnsupportedLayout, "mdat precedes moof");
        }
        layout.boxes.push_back(record(box));
        pos = box.end();
    }
    if (!have_moof) throw Error(ErrorKind::MissingBox, "no moof box");
    if (!have_mdat) throw Error(ErrorKind::MissingBox, "no mdat box after moof");

    layout.run = std::move(moof.run);
    const std::size_t mdat_start = layout.media_payload.offset;
    const std::size_t mdat_end = mdat_start + layout.media_payload.length;
    if (moof.has_data_offset) {
        const std::int64_t start = std::int64_t(moof_box.offset) + moof.data_offset;
        if (start < std::int64_t(mdat_start) || start > std::int64_t(mdat_end)) {
            throw Error(ErrorKind::UnsupportedLayout, "trun data offset points outside mdat");
        }
        layout.run.data_start = static_cast<std::size_t>(start);
    } else {
        layout.run.data_start = mdat_start;
    }
    if (trust_mdat_size) {
        const std::uint64_t total = std::accumulate(layout.run.declared_sizes.begin(),
                                                    layout.run.declared_sizes.end(), std::uint64_t{0});
        if (layout.run.data_start + total > mdat_end) {
            throw Error(ErrorKind::UnsupportedLayout, "track run extends past the mdat payload");
        }
    }
    return layout;
}

namespace {

MediaSegment assemble(ByteView bytes, ContainerLayout layout, std::vector<std::vector<NalUnit>> sample_nals,
                      std::size_t media_end)
{
    MediaSegment seg;
    seg.boxes = std::move(layout.boxes);
    seg.media_payload = layout.media_payload;
    seg.head.assign(bytes.begin(), bytes.begin() + layout.run.data_start);
    seg.tail.assign(bytes.begin() + media_end, bytes.end());
    std::size_t offset = layout.run.data_start - layout.media_payload.offset;
    seg.samples.reserve(sample_nals.size());
    for (std::size_t i = 0; i < sample_nals.size(); ++i) {
        SampleRef s;
        s.index = i;
        s.offset = offset;
        s.nals = std::move(sample_nals[i]);
        s.size = 0;
        for (const auto& n : s.nals) s.size += n.framed_size();
        offset += s.size;
        seg.samples.push_back(std::move(s));
    }
    seg.run = std::move(layout.run);
    return seg;
}

}  // namespace

MediaSegment parse_segment(ByteView bytes)
{
    ContainerLayout layout = parse_container(bytes, true);
    std::vector<std::vector<NalUnit>> sample_nals;
    sample_nals.reserve(layout.run.declared_sizes.size());
    std::size_t pos = layout.run.data_start;
    for (auto size : layout.run.declared_sizes) {
        sample_nals.push_back(extract_nals(bytes.subspan(pos, size)));
        pos += size;
    }
    return assemble(bytes, std::move(layout), std::move(sample_nals), pos);
}

MediaSegment parse_resized_segment(ByteView bytes, const OriginalLength& original_length)
{
    ContainerLayout layout = parse_container(bytes, false);
    std::vector<std::vector<NalUnit>> sample_nals;
    sample_nals.reserve(layout.run.declared_sizes.size());
    std::size_t pos = layout.run.data_start;
    for (std::size_t i = 0; i < layout.run.declared_sizes.size(); ++i) {
        const std::size_t declared = layout.run.declared_sizes[i];
        std::size_t restored = 0;
        std::vector<NalUnit> nals;
        while (restored < declared) {
            if (bytes.size() - pos < 4) {
                throw Error(ErrorKind::BadLengthPrefix, "sample " + std::to_string(i) + " ends inside a length prefix");
            }
            const std::size_t len = be32(bytes, pos);
            if (len == 0) throw Error(ErrorKind::ZeroLengthNal, "sample " + std::to_string(i));
            if (len > bytes.size() - pos - 4) {
                throw Error(ErrorKind::BadLengthPrefix, "NAL of " + std::to_string(len) + " bytes overruns the segment");
            }
            auto payload = bytes.subspan(pos + 4, len);
            restored += 4 + original_length(payload);
            NalUnit nal;
            nal.nal_type = payload[0] & 0x1F;
            nal.ref_idc = (payload[0] >> 5) & 0x03;
            nal.payload.assign(payload.begin(), payload.end());
            nals.push_back(std::move(nal));
            pos += 4 + len;
        }
        if (restored != declared) {
            throw Error(ErrorKind::BadLengthPrefix, "restored NAL framing of sample " + std::to_string(i) +
                                                        " does not match its declared size");
        }
        sample_nals.push_back(std::move(nals));
    }
    return assemble(bytes, std::move(layout), std::move(sample_nals), pos);
}

Bytes MediaSegment::serialize() const
{
    Bytes out;
    out.reserve(byte_size());
    out.insert(out.end(), head.begin(), head.end());
    for (const auto& s : samples) {
        for (const auto& n : s.nals) {
            const auto len = static_cast<std::uint32_t>(n.payload.size());
            out.push_back(std::uint8_t(len >> 24));
            out.push_back(std::uint8_t(len >> 16));
            out.push_back(std::uint8_t(len >> 8));
            out.push_back(std::uint8_t(len));
            out.insert(out.end(), n.payload.begin(), n.payload.end());
        }
    }
    out.insert(out.end(), tail.begin(), tail.end());
    return out;
}

std::size_t MediaSegment::byte_size() const { return head.size() + actual_media_bytes() + tail.size(); }

std::size_t MediaSegment::declared_media_bytes() const
{
    return std::accumulate(run.declared_sizes.begin(), run.declared_sizes.end(), std::size_t{0});
}

std::size_t MediaSegment::actual_media_bytes() const
{
    std::size_t total = 0;
    for (const auto& s : samples) total += s.size;
    return total;
}

bool MediaSegment::container_consistent() const
{
    if (run.declared_sizes.size() != samples.size()) return false;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (run.declared_sizes[i] != samples[i].size) return false;
    }
    return true;
}

FrameType MediaSegment::frame_type(std::size_t sample_index) const
{
    if (sample_index >= samples.size()) {
        throw Error(ErrorKind::IndexOutOfRange, "sample " + std::to_string(sample_index));
    }
    return classify_sample(samples[sample_index]);
}

void rewrite_sample_in_place(MediaSegment& seg, std::size_t sample_index, std::vector<Bytes> new_nals)
{
    if (sample_index >= seg.samples.size()) {
        throw Error(ErrorKind::IndexOutOfRange, "sample " + std::to_string(sample_index) + " of " +
                                                    std::to_string(seg.samples.size()));
    }
    auto& sample = seg.samples[sample_index];
    if (new_nals.size() != sample.nals.size()) {
        throw Error(ErrorKind::CardinalityMismatch, "sample has " + std::to_string(sample.nals.size()) +
                                                        " NAL units, got " + std::to_string(new_nals.size()));
    }
    for (const auto& p : new_nals) {
        if (p.empty()) throw Error(ErrorKind::ZeroLengthNal, "replacement payload is empty");
    }
    const std::size_t media_end = seg.head.size() + seg.actual_media_bytes();
    const std::size_t old_size = sample.size;
    sample.size = 0;
    for (std::size_t j = 0; j < new_nals.size(); ++j) {
        auto& nal = sample.nals[j];
        nal.payload = std::move(new_nals[j]);
        nal.nal_type = nal.payload[0] & 0x1F;
        nal.ref_idc = (nal.payload[0] >> 5) & 0x03;
        sample.size += nal.framed_size();
    }
    const std::ptrdiff_t delta = std::ptrdiff_t(sample.size) - std::ptrdiff_t(old_size);
    if (delta == 0) return;
    for (std::size_t i = sample_index + 1; i < seg.samples.size(); ++i) {
        seg.samples[i].offset = seg.samples[i - 1].offset + seg.samples[i - 1].size;
    }
    // Boxes that follow the media region move; their headers are untouched.
    for (auto& box : seg.boxes) {
        if (box.offset >= media_end) box.offset = std::size_t(std::ptrdiff_t(box.offset) + delta);
    }
}

MediaSegment rewrite_sample(const MediaSegment& seg, std::size_t sample_index, const std::vector<Bytes>& new_nals)
{
    MediaSegment out = seg;
    rewrite_sample_in_place(out, sample_index, new_nals);
    return out;
}

}  // namespace tilecrypt::bitstream
