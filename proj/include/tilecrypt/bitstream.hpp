#pragma once

// Fragmented-MP4 segment parsing and H.264 NAL handling.
//
// Only the subset needed to reach media samples is understood:
// styp/ftyp, moof -> traf -> tfhd/tfdt/trun, and mdat. Everything else is
// carried verbatim so that an unmodified MediaSegment serializes back to
// the exact input bytes.

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tilecrypt {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

}  // namespace tilecrypt

namespace tilecrypt::bitstream {

enum class ErrorKind {
    TruncatedBox,
    MissingBox,
    UnsupportedLayout,
    BadLengthPrefix,
    ZeroLengthNal,
    OutOfBits,
    MalformedSliceHeader,
    IndexOutOfRange,
    CardinalityMismatch,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what);
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

enum class FrameType { I, P, B, NonVCL };

std::string_view to_string(FrameType type);

struct BoxRecord {
    std::string type;  // four characters
    std::size_t offset = 0;
    std::size_t size = 0;  // as declared by the box header
};

struct NalUnit {
    std::uint8_t nal_type = 0;
    std::uint8_t ref_idc = 0;
    Bytes payload;  // includes the one-byte NAL header, excludes the length prefix

    bool forbidden_bit() const { return !payload.empty() && (payload[0] & 0x80) != 0; }
    bool is_vcl() const { return nal_type == 1 || nal_type == 5; }
    std::size_t framed_size() const { return 4 + payload.size(); }
};

struct SampleRef {
    std::size_t index = 0;
    std::size_t offset = 0;  // relative to the start of the mdat payload
    std::size_t size = 0;    // actual framed size: sum of (4 + payload) over nals
    std::vector<NalUnit> nals;
};

struct ByteRange {
    std::size_t offset = 0;
    std::size_t length = 0;
};

// Container fields located while parsing moof. Offsets are absolute.
struct TrackRun {
    std::uint32_t tfhd_flags = 0;
    std::uint32_t trun_flags = 0;
    std::uint32_t track_id = 0;
    std::size_t data_start = 0;  // first sample byte
    std::vector<std::uint32_t> declared_sizes;
    std::vector<std::size_t> size_field_offsets;  // per-sample trun size fields (empty when tfhd default is used)
};

class MediaSegment {
public:
    std::vector<BoxRecord> boxes;  // top-level boxes in file order
    Bytes head;                    // every byte before the first sample
    std::vector<SampleRef> samples;
    Bytes tail;                    // every byte after the last sample
    ByteRange media_payload;       // declared mdat payload
    TrackRun run;

    Bytes serialize() const;
    std::size_t byte_size() const;

    // Sum of declared sample sizes (what the track run claims).
    std::size_t declared_media_bytes() const;
    // Sum of the actual framed sample sizes.
    std::size_t actual_media_bytes() const;
    // True when every declared trun/tfhd size matches the real NAL framing.
    bool container_consistent() const;

    FrameType frame_type(std::size_t sample_index) const;
};

// Top-level structure up to the first sample. Used on segments whose
// container metadata may be stale, where the mdat size can no longer be
// trusted.
struct ContainerLayout {
    std::vector<BoxRecord> boxes;  // up to and including mdat
    ByteRange media_payload;
    TrackRun run;
};

MediaSegment parse_segment(ByteView bytes);
ContainerLayout parse_container(ByteView bytes, bool trust_mdat_size);

// Rebuilds a MediaSegment from a segment whose NAL payloads may have been
// resized. `original_length` maps a stored NAL payload to the length it had
// when the trun sizes were written; samples are delimited by accumulating
// those lengths until the declared sample size is reached.
using OriginalLength = std::function<std::size_t(ByteView payload)>;
MediaSegment parse_resized_segment(ByteView bytes, const OriginalLength& original_length);

std::vector<NalUnit> extract_nals(ByteView sample_bytes);
Bytes frame_nals(const std::vector<NalUnit>& nals);

class BitReader {
public:
    explicit BitReader(ByteView data) : data_(data) {}

    unsigned read_bit();
    std::uint32_t read_bits(unsigned count);
    std::uint32_t read_ue();
    std::size_t bits_left() const { return data_.size() * 8 - pos_; }
    std::size_t position() const { return pos_; }

private:
    ByteView data_;
    std::size_t pos_ = 0;
};

class BitWriter {
public:
    void put_bit(unsigned bit);
    void put_bits(std::uint32_t value, unsigned count);
    void put_ue(std::uint32_t value);
    // Pads with zero bits to the next byte boundary and returns the buffer.
    Bytes finish();

private:
    Bytes out_;
    unsigned fill_ = 0;
};

std::uint32_t decode_ue(BitReader& bits);

// Drops emulation-prevention bytes (00 00 03 -> 00 00).
Bytes unescape_rbsp(ByteView nal_body);

FrameType classify_frame(const NalUnit& nal);
// Frame class of a sample: taken from its first VCL NAL, NonVCL if none.
FrameType classify_sample(const SampleRef& sample);

MediaSegment rewrite_sample(const MediaSegment& seg, std::size_t sample_index,
                            const std::vector<Bytes>& new_nals);
// Same contract as rewrite_sample without copying the segment.
void rewrite_sample_in_place(MediaSegment& seg, std::size_t sample_index, std::vector<Bytes> new_nals);

// Synthetic segment generator for fixtures and desk-scale datasets.
struct SynthSpec {
    double fps = 30.0;
    double duration_s = 2.0;
    std::size_t gop_len = 60;
    // Frame types after each IDR, applied cyclically: 'P', 'B', or 'I'
    // (non-IDR intra slice).
    std::string pattern = "P";
    std::vector<std::size_t> frame_sizes;  // VCL payload bytes per frame; overrides the averages
    std::uint64_t size_seed = 1;
    std::size_t i_frame_bytes = 6000;
    std::size_t p_frame_bytes = 1200;
    std::size_t b_frame_bytes = 600;
    double size_jitter = 0.25;  // +/- fraction around the averages
    bool parameter_sets = true; // SPS/PPS ahead of every IDR
    std::uint32_t track_id = 1;
    std::uint32_t sequence_number = 1;

    std::size_t frame_count() const;
    FrameType declared_type(std::size_t frame) const;
};

SynthSpec parse_synth_spec(std::string_view key_value_text);
Bytes synth_segment(const SynthSpec& spec);

}  // namespace tilecrypt::bitstream
