#include "tilecrypt/selenc.hpp"

namespace tilecrypt::selenc {

namespace {

std::size_t slot(FrameType type)
{
    switch (type) {
    case FrameType::I: return 0;
    case FrameType::P: return 1;
    case FrameType::B: return 2;
    case FrameType::NonVCL: break;
    }
    return 3;
}

constexpr std::array<FrameType, 3> kVclTypes{FrameType::I, FrameType::P, FrameType::B};

template <typename F>
std::size_t sum_covered(EncryptionLevel level, F&& value)
{
    std::size_t total = 0;
    for (std::size_t k = 0; k < kVclTypes.size(); ++k) {
        if (covers(level, kVclTypes[k])) total += value(k);
    }
    return total;
}

Bytes frame_seed(ByteView rng_seed, std::size_t sample, std::size_t nal)
{
    Bytes seed(rng_seed.begin(), rng_seed.end());
    for (int i = 0; i < 8; ++i) seed.push_back(std::uint8_t(std::uint64_t(sample) >> (8 * i)));
    for (int i = 0; i < 4; ++i) seed.push_back(std::uint8_t(std::uint32_t(nal) >> (8 * i)));
    return seed;
}

}  // namespace

std::size_t SegmentStats::covered_frames(EncryptionLevel level) const
{
    return sum_covered(level, [&](std::size_t k) { return frames[k]; });
}

std::size_t SegmentStats::covered_nals(EncryptionLevel level) const
{
    return sum_covered(level, [&](std::size_t k) { return vcl_nals[k]; });
}

std::size_t SegmentStats::covered_bytes(EncryptionLevel level) const
{
    return sum_covered(level, [&](std::size_t k) { return vcl_bytes[k]; });
}

SegmentStats segment_stats(const bitstream::MediaSegment& seg)
{
    SegmentStats stats;
    stats.total_bytes = seg.byte_size();
    for (const auto& sample : seg.samples) {
        const std::size_t k = slot(bitstream::classify_sample(sample));
        if (k >= 3) continue;
        ++stats.frames[k];
        for (const auto& nal : sample.nals) {
            if (!nal.is_vcl()) continue;
            ++stats.vcl_nals[k];
            stats.vcl_bytes[k] += nal.payload.size();
        }
    }
    return stats;
}

SegmentStats segment_stats(ByteView seg_bytes) { return segment_stats(bitstream::parse_segment(seg_bytes)); }

std::size_t encrypted_size(const SegmentStats& stats, EncryptionLevel level, const abekit::AccessPolicy& policy)
{
    return stats.total_bytes + stats.covered_nals(level) * abekit::blob_overhead(policy);
}

EncryptedSegment encrypt_segment(ByteView seg_bytes, EncryptionLevel level, const abekit::AccessPolicy& policy,
                                 const abekit::PublicParams& pp, const abekit::AttributeAuthority& authority,
                                 ByteView rng_seed)
{
    bitstream::MediaSegment seg = bitstream::parse_segment(seg_bytes);
    EncryptedSegment out;
    out.level = level;
    out.frame_map.reserve(seg.samples.size());
    for (std::size_t i = 0; i < seg.samples.size(); ++i) {
        const FrameType type = bitstream::classify_sample(seg.samples[i]);
        const bool hit = covers(level, type);
        out.frame_map.push_back({i, type, hit});
        if (!hit) continue;
        std::vector<Bytes> replaced;
        replaced.reserve(seg.samples[i].nals.size());
        for (std::size_t j = 0; j < seg.samples[i].nals.size(); ++j) {
            const auto& nal = seg.samples[i].nals[j];
            if (!nal.is_vcl()) {
                replaced.push_back(nal.payload);
                continue;
            }
            const Bytes seed = frame_seed(rng_seed, i, j);
            replaced.push_back(abekit::encrypt(pp, authority, policy, nal.payload, seed).serialize());
            ++out.blob_count;
        }
        bitstream::rewrite_sample_in_place(seg, i, std::move(replaced));
    }
    out.no_matching_frames = level != EncryptionLevel::None && out.blob_count == 0;
    if (out.blob_count == 0) {
        out.bytes.assign(seg_bytes.begin(), seg_bytes.end());
    } else {
        out.bytes = seg.serialize();
    }
    return out;
}

bitstream::MediaSegment parse_encrypted_segment(ByteView enc_bytes)
{
    return bitstream::parse_resized_segment(enc_bytes, [](ByteView payload) {
        return abekit::looks_like_blob(payload) ? abekit::blob_plaintext_size(payload) : payload.size();
    });
}

Bytes decrypt_segment(ByteView enc_bytes, const abekit::PrivateKey& sk)
{
    bitstream::MediaSegment seg = parse_encrypted_segment(enc_bytes);
    bool changed = false;
    for (std::size_t i = 0; i < seg.samples.size(); ++i) {
        const auto& nals = seg.samples[i].nals;
        bool sealed = false;
        for (const auto& nal : nals) sealed = sealed || abekit::looks_like_blob(nal.payload);
        if (!sealed) continue;
        std::vector<Bytes> restored;
        restored.reserve(nals.size());
        for (const auto& nal : nals) {
            restored.push_back(abekit::looks_like_blob(nal.payload) ? abekit::decrypt(sk, ByteView(nal.payload)) : nal.payload);
        }
        bitstream::rewrite_sample_in_place(seg, i, std::move(restored));
        changed = true;
    }
    if (!changed) return Bytes(enc_bytes.begin(), enc_bytes.end());
    return seg.serialize();
}

Bytes decrypt_segment(const EncryptedSegment& enc, const abekit::PrivateKey& sk) { return decrypt_segment(ByteView(enc.bytes), sk); }

double size_overhead(std::size_t original_bytes, std::size_t encrypted_bytes)
{
    if (original_bytes == 0) return 0.0;
    return (double(encrypted_bytes) - double(original_bytes)) / double(original_bytes);
}

double size_overhead(ByteView original, const EncryptedSegment& enc) { return size_overhead(original.size(), enc.bytes.size()); }

double crypto_work(Direction dir, EncryptionLevel level, const SegmentStats& stats, const AbeCost& cost)
{
    const double per_frame = dir == Direction::Encrypt ? cost.encrypt_per_frame : cost.decrypt_per_frame;
    const double per_byte = dir == Direction::Encrypt ? cost.encrypt_per_byte : cost.decrypt_per_byte;
    return per_frame * double(stats.covered_frames(level)) + per_byte * double(stats.covered_bytes(level));
}

}  // namespace tilecrypt::selenc
