#pragma once

// Frame-level selective encryption of tiled segments.
//
// A level names the frame classes whose VCL NALs are sealed; a scheme maps
// each tile's viewport role to a level. Encrypted NALs are replaced in place
// by blobs, NAL length prefixes are rewritten and the container's sample
// sizes are left untouched.

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tilecrypt/abekit.hpp"
#include "tilecrypt/bitstream.hpp"

namespace tilecrypt::selenc {

using bitstream::FrameType;

enum class EncryptionLevel { None = 0, AllI = 1, AllIP = 2, Full = 3 };
enum class SchemeId { Full, AllIP, MajorAllP, MajorAllI };
enum class TileRole { Major, Minor, NonViewport };

inline constexpr std::array<EncryptionLevel, 4> kAllLevels{EncryptionLevel::None, EncryptionLevel::AllI,
                                                           EncryptionLevel::AllIP, EncryptionLevel::Full};
inline constexpr std::array<SchemeId, 4> kAllSchemes{SchemeId::Full, SchemeId::AllIP, SchemeId::MajorAllP,
                                                     SchemeId::MajorAllI};

enum class ErrorKind { UnknownSuffix, UnknownScheme, UnknownLevel };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what);
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

std::string_view to_string(EncryptionLevel level);
std::string_view to_string(SchemeId scheme);
std::string_view to_string(TileRole role);
// Accepts the command-line names full, alliP, majorP, majorI.
SchemeId parse_scheme(std::string_view name);
// Accepts the names printed by to_string(EncryptionLevel).
EncryptionLevel parse_level(std::string_view name);

bool covers(EncryptionLevel level, FrameType type);
bool viewport_aware(SchemeId scheme);
EncryptionLevel level_for(SchemeId scheme, TileRole role);

std::string_view suffix_for(EncryptionLevel level);
// Level encoded in a file name or bare suffix: the last '_' token of the
// stem. Tokens that look like a level but are not one raise UnknownSuffix;
// names without such a token are unencrypted.
EncryptionLevel parse_suffix(std::string_view name);

struct FrameRecord {
    std::size_t sample_index = 0;
    FrameType type = FrameType::NonVCL;
    bool encrypted = false;
};

struct EncryptedSegment {
    Bytes bytes;
    EncryptionLevel level = EncryptionLevel::None;
    std::vector<FrameRecord> frame_map;
    std::size_t blob_count = 0;
    bool no_matching_frames = false;  // level != None but nothing was covered
};

// Per frame class (indexed by I, P, B): sample count, VCL NAL count, VCL payload bytes.
struct SegmentStats {
    std::array<std::size_t, 3> frames{};
    std::array<std::size_t, 3> vcl_nals{};
    std::array<std::size_t, 3> vcl_bytes{};
    std::size_t total_bytes = 0;

    std::size_t covered_frames(EncryptionLevel level) const;
    std::size_t covered_nals(EncryptionLevel level) const;
    std::size_t covered_bytes(EncryptionLevel level) const;
};

SegmentStats segment_stats(const bitstream::MediaSegment& seg);
SegmentStats segment_stats(ByteView seg_bytes);

// Size of the segment after encryption at `level`, from the blob layout alone.
std::size_t encrypted_size(const SegmentStats& stats, EncryptionLevel level, const abekit::AccessPolicy& policy);

EncryptedSegment encrypt_segment(ByteView seg_bytes, EncryptionLevel level, const abekit::AccessPolicy& policy,
                                 const abekit::PublicParams& pp, const abekit::AttributeAuthority& authority,
                                 ByteView rng_seed);

// Restores the original segment. Throws abekit::Error on a non-satisfying
// key or damaged blob; nothing is returned in that case.
Bytes decrypt_segment(ByteView enc_bytes, const abekit::PrivateKey& sk);
Bytes decrypt_segment(const EncryptedSegment& enc, const abekit::PrivateKey& sk);

// Walks a possibly encrypted segment using blob-aware sample boundaries.
bitstream::MediaSegment parse_encrypted_segment(ByteView enc_bytes);

double size_overhead(ByteView original, const EncryptedSegment& enc);
double size_overhead(std::size_t original_bytes, std::size_t encrypted_bytes);

enum class Direction { Encrypt, Decrypt };

struct AbeCost {
    double encrypt_per_frame = 50.0;
    double encrypt_per_byte = 0.2;
    double decrypt_per_frame = 50.0;
    double decrypt_per_byte = 0.2;
};

// Abstract work units: per-frame cost over covered frames plus per-byte cost
// over their VCL payload bytes.
double crypto_work(Direction dir, EncryptionLevel level, const SegmentStats& stats, const AbeCost& cost);

}  // namespace tilecrypt::selenc
