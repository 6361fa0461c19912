#include "tilecrypt/bitstream.hpp"

namespace tilecrypt::bitstream {

std::string_view to_string(FrameType type)
{
    switch (type) {
    case FrameType::I: return "I";
    case FrameType::P: return "P";
    case FrameType::B: return "B";
    case FrameType::NonVCL: return "NonVCL";
    }
    return "?";
}

std::vector<NalUnit> extract_nals(ByteView sample_bytes)
{
    std::vector<NalUnit> nals;
    std::size_t pos = 0;
    while (pos < sample_bytes.size()) {
        if (sample_bytes.size() - pos < 4) {
            throw Error(ErrorKind::BadLengthPrefix, "length prefix cut off at byte " + std::to_string(pos));
        }
        const std::size_t len = (std::size_t(sample_bytes[pos]) << 24) | (std::size_t(sample_bytes[pos + 1]) << 16) |
                                (std::size_t(sample_bytes[pos + 2]) << 8) | std::size_t(sample_bytes[pos + 3]);
        pos += 4;
        if (len == 0) throw Error(ErrorKind::ZeroLengthNal, "at byte " + std::to_string(pos - 4));
        if (len > sample_bytes.size() - pos) {
            throw Error(ErrorKind::BadLengthPrefix, "prefix " + std::to_string(len) + " overruns the sample by " +
                                                        std::to_string(len - (sample_bytes.size() - pos)) + " bytes");
        }
        NalUnit nal;
        nal.nal_type = sample_bytes[pos] & 0x1F;
        nal.ref_idc = (sample_bytes[pos] >> 5) & 0x03;
        nal.payload.assign(sample_bytes.begin() + pos, sample_bytes.begin() + pos + len);
        nals.push_back(std::move(nal));
        pos += len;
    }
    return nals;
}

Bytes frame_nals(const std::vector<NalUnit>& nals)
{
    Bytes out;
    for (const auto& n : nals) {
        const auto len = static_cast<std::uint32_t>(n.payload.size());
        out.push_back(std::uint8_t(len >> 24));
        out.push_back(std::uint8_t(len >> 16));
        out.push_back(std::uint8_t(len >> 8));
        out.push_back(std::uint8_t(len));
        out.insert(out.end(), n.payload.begin(), n.payload.end());
    }
    return out;
}

unsigned BitReader::read_bit()
{
    if (pos_ >= data_.size() * 8) throw Error(ErrorKind::OutOfBits, "read past end of " + std::to_string(data_.size()) + " bytes");
    const unsigned bit = (data_[pos_ >> 3] >> (7 - (pos_ & 7))) & 1u;
    ++pos_;
    return bit;
}

std::uint32_t BitReader::read_bits(unsigned count)
{
    std::uint32_t v = 0;
    for (unsigned i = 0; i < count; ++i) v = (v << 1) | read_bit();
    return v;
}

std::uint32_t BitReader::read_ue()
{
    unsigned leading_zeros = 0;
    while (read_bit() == 0) {
        if (++leading_zeros > 31) throw Error(ErrorKind::OutOfBits, "exp-Golomb prefix longer than 31 bits");
    }
    if (leading_zeros == 0) return 0;
    const std::uint64_t suffix = read_bits(leading_zeros);
    return static_cast<std::uint32_t>((std::uint64_t{1} << leading_zeros) - 1 + suffix);
}

std::uint32_t decode_ue(BitReader& bits) { return bits.read_ue(); }

void BitWriter::put_bit(unsigned bit)
{
    if (fill_ == 0) out_.push_back(0);
    if (bit) out_.back() |= std::uint8_t(0x80u >> fill_);
    fill_ = (fill_ + 1) & 7;
}

void BitWriter::put_bits(std::uint32_t value, unsigned count)
{
    for (unsigned i = count; i-- > 0;) put_bit((value >> i) & 1u);
}

void BitWriter::put_ue(std::uint32_t value)
{
    const std::uint64_t code = std::uint64_t(value) + 1;
    unsigned width = 0;
    while ((code >> width) > 1) ++width;
    for (unsigned i = 0; i < width; ++i) put_bit(0);
    for (unsigned i = width + 1; i-- > 0;) put_bit(unsigned((code >> i) & 1u));
}

Bytes BitWriter::finish()
{
    fill_ = 0;
    return std::move(out_);
}

Bytes unescape_rbsp(ByteView nal_body)
{
    Bytes out;
    out.reserve(nal_body.size());
    unsigned zeros = 0;
    for (auto b : nal_body) {
        if (zeros >= 2 && b == 0x03) {
            zeros = 0;
            continue;
        }
        zeros = (b == 0) ? zeros + 1 : 0;
        out.push_back(b);
    }
    return out;
}

FrameType classify_frame(const NalUnit& nal)
{
    if (nal.nal_type == 5) return FrameType::I;
    if (nal.nal_type != 1) return FrameType::NonVCL;
    if (nal.payload.size() < 2) throw Error(ErrorKind::MalformedSliceHeader, "slice NAL has no header bits");
    // first_mb_in_slice and slice_type fit comfortably in the first bytes.
    const std::size_t window = std::min<std::size_t>(nal.payload.size() - 1, 16);
    const Bytes rbsp = unescape_rbsp(ByteView(nal.payload).subspan(1, window));
    BitReader bits(rbsp);
    std::uint32_t slice_type = 0;
    try {
        decode_ue(bits);  // first_mb_in_slice
        slice_type = decode_ue(bits);
    } catch (const Error& e) {
        throw Error(ErrorKind::MalformedSliceHeader, e.what());
    }
    if (slice_type > 9) throw Error(ErrorKind::MalformedSliceHeader, "slice_type " + std::to_string(slice_type));
    switch (slice_type % 5) {
    case 0: return FrameType::P;
    case 1: return FrameType::B;
    case 2: return FrameType::I;
    case 3: return FrameType::P;  // SP
    default: return FrameType::I; // SI
    }
}

FrameType classify_sample(const SampleRef& sample)
{
    for (const auto& nal : sample.nals) {
        if (nal.is_vcl()) return classify_frame(nal);
    }
    return FrameType::NonVCL;
}

}  // namespace tilecrypt::bitstream
