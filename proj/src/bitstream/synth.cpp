#include "tilecrypt/bitstream.hpp"

#include <charconv>
#include <cmath>
#include <random>
#include <sstream>

namespace tilecrypt::bitstream {

std::size_t SynthSpec::frame_count() const
{
    return static_cast<std::size_t>(std::llround(fps * duration_s));
}

FrameType SynthSpec::declared_type(std::size_t frame) const
{
    const std::size_t in_gop = frame % gop_len;
    if (in_gop == 0 || pattern.empty()) return FrameType::I;
    switch (pattern[(in_gop - 1) % pattern.size()]) {
    case 'B': return FrameType::B;
    case 'I': return FrameType::I;
    default: return FrameType::P;
    }
}

namespace {

std::string trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& value)
{
    T out{};
    const auto* end = value.data() + value.size();
    auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc() || ptr != end) throw std::invalid_argument("synth spec: bad value for " + key + ": '" + value + "'");
    return out;
}

void put_u32(Bytes& out, std::uint32_t v)
{
    out.push_back(std::uint8_t(v >> 24));
    out.push_back(std::uint8_t(v >> 16));
    out.push_back(std::uint8_t(v >> 8));
    out.push_back(std::uint8_t(v));
}

void put_u64(Bytes& out, std::uint64_t v)
{
    put_u32(out, std::uint32_t(v >> 32));
    put_u32(out, std::uint32_t(v));
}

void put_type(Bytes& out, const char* type) { out.insert(out.end(), type, type + 4); }

void patch_u32(Bytes& out, std::size_t at, std::uint32_t v)
{
    out[at] = std::uint8_t(v >> 24);
    out[at + 1] = std::uint8_t(v >> 16);
    out[at + 2] = std::uint8_t(v >> 8);
    out[at + 3] = std::uint8_t(v);
}

// Opens a box; returns the offset of its size field for patching.
std::size_t open_box(Bytes& out, const char* type)
{
    const std::size_t at = out.size();
    put_u32(out, 0);
    put_type(out, type);
    return at;
}

void close_box(Bytes& out, std::size_t at) { patch_u32(out, at, static_cast<std::uint32_t>(out.size() - at)); }

class PayloadRng {
public:
    explicit PayloadRng(std::uint64_t seed) : engine_(seed) {}
    std::uint8_t byte()
    {
        if (left_ == 0) {
            word_ = engine_();
            left_ = 8;
        }
        --left_;
        const auto b = std::uint8_t(word_);
        word_ >>= 8;
        return b;
    }
    double unit() { return double(engine_() >> 11) * 0x1.0p-53; }

private:
    std::mt19937_64 engine_;
    std::uint64_t word_ = 0;
    unsigned left_ = 0;
};

Bytes make_slice(FrameType type, bool idr, std::size_t frame, std::size_t size, PayloadRng& rng)
{
    Bytes nal;
    if (idr) {
        nal.push_back(0x65);
    } else if (type == FrameType::B) {
        nal.push_back(0x01);
    } else if (type == FrameType::I) {
        nal.push_back(0x61);
    } else {
        nal.push_back(0x41);
    }
    BitWriter w;
    w.put_ue(0);  // first_mb_in_slice
    w.put_ue(type == FrameType::P ? 5 : type == FrameType::B ? 6 : 7);
    w.put_ue(0);  // pic_parameter_set_id
    w.put_bits(std::uint32_t(frame & 0xF), 4);
    w.put_bit(1);
    Bytes header = w.finish();
    nal.insert(nal.end(), header.begin(), header.end());
    while (nal.size() < size) nal.push_back(rng.byte());
    return nal;
}

}  // namespace

SynthSpec parse_synth_spec(std::string_view text)
{
    SynthSpec spec;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        const std::string entry = trim(line);
        if (entry.empty()) continue;
        const auto eq = entry.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("synth spec: expected key=value, got '" + entry + "'");
        const std::string key = trim(std::string_view(entry).substr(0, eq));
        const std::string value = trim(std::string_view(entry).substr(eq + 1));
        if (key == "fps") spec.fps = parse_number<double>(key, value);
        else if (key == "duration_s") spec.duration_s = parse_number<double>(key, value);
        else if (key == "gop_len") spec.gop_len = parse_number<std::size_t>(key, value);
        else if (key == "pattern") spec.pattern = value;
        else if (key == "size_seed") spec.size_seed = parse_number<std::uint64_t>(key, value);
        else if (key == "i_frame_bytes") spec.i_frame_bytes = parse_number<std::size_t>(key, value);
        else if (key == "p_frame_bytes") spec.p_frame_bytes = parse_number<std::size_t>(key, value);
        else if (key == "b_frame_bytes") spec.b_frame_bytes = parse_number<std::size_t>(key, value);
        else if (key == "size_jitter") spec.size_jitter = parse_number<double>(key, value);
        else if (key == "parameter_sets") spec.parameter_sets = (value == "1" || value == "true");
        else if (key == "track_id") spec.track_id = parse_number<std::uint32_t>(key, value);
        else if (key == "sequence_number") spec.sequence_number = parse_number<std::uint32_t>(key, value);
        else if (key == "frame_sizes") {
            std::istringstream list(value);
            std::string item;
            while (std::getline(list, item, ',')) spec.frame_sizes.push_back(parse_number<std::size_t>(key, trim(item)));
        } else {
            throw std::invalid_argument("synth spec: unknown key '" + key + "'");
        }
    }
    if (spec.gop_len < 1) throw std::invalid_argument("synth spec: gop_len must be >= 1");
    if (spec.fps <= 0 || spec.duration_s <= 0) throw std::invalid_argument("synth spec: fps and duration_s must be positive");
    return spec;
}

Bytes synth_segment(const SynthSpec& spec)
{
    if (spec.gop_len < 1) throw std::invalid_argument("synth_segment: gop_len must be >= 1");
    PayloadRng rng(spec.size_seed);
    const std::size_t frames = spec.frame_count();

    std::vector<Bytes> samples;
    samples.reserve(frames);
    for (std::size_t f = 0; f < frames; ++f) {
        const FrameType type = spec.declared_type(f);
        const bool idr = (f % spec.gop_len) == 0;
        std::size_t size = 0;
        if (!spec.frame_sizes.empty()) {
            size = spec.frame_sizes[f % spec.frame_sizes.size()];
        } else {
            const std::size_t avg = type == FrameType::I ? spec.i_frame_bytes
                                    : type == FrameType::B ? spec.b_frame_bytes
                                                           : spec.p_frame_bytes;
            const double scale = 1.0 + spec.size_jitter * (2.0 * rng.unit() - 1.0);
            size = static_cast<std::size_t>(std::llround(double(avg) * scale));
        }
        size = std::max<std::size_t>(size, 8);

        std::vector<NalUnit> nals;
        auto add = [&nals](Bytes payload) {
            NalUnit n;
            n.nal_type = payload[0] & 0x1F;
            n.ref_idc = (payload[0] >> 5) & 3;
            n.payload = std::move(payload);
            nals.push_back(std::move(n));
        };
        if (idr && spec.parameter_sets) {
            Bytes sps{0x67, 0x42, 0xC0, 0x1F};
            for (int i = 0; i < 8; ++i) sps.push_back(rng.byte() | 0x01);
            add(std::move(sps));
            add(Bytes{0x68, 0xCE, 0x38, 0x80});
        }
        add(make_slice(type, idr, f, size, rng));
        samples.push_back(frame_nals(nals));
    }

    const auto sample_duration = static_cast<std::uint32_t>(std::llround(90000.0 / spec.fps));
    Bytes out;
    const std::size_t styp = open_box(out, "styp");
    put_type(out, "msdh");
    put_u32(out, 0);
    put_type(out, "msdh");
    put_type(out, "msix");
    close_box(out, styp);

    const std::size_t moof_start = out.size();
    const std::size_t moof = open_box(out, "moof");
    const std::size_t mfhd = open_box(out, "mfhd");
    put_u32(out, 0);
    put_u32(out, spec.sequence_number);
    close_box(out, mfhd);
    const std::size_t traf = open_box(out, "traf");
    const std::size_t tfhd = open_box(out, "tfhd");
    put_u32(out, 0x020000);  // default-base-is-moof
    put_u32(out, spec.track_id);
    close_box(out, tfhd);
    const std::size_t tfdt = open_box(out, "tfdt");
    put_u32(out, 0x01000000);
    put_u64(out, std::uint64_t(spec.sequence_number - 1) * sample_duration * frames);
    close_box(out, tfdt);
    const std::size_t trun = open_box(out, "trun");
    put_u32(out, 0x000701);  // data offset, duration, size, flags
    put_u32(out, static_cast<std::uint32_t>(frames));
    const std::size_t data_offset_at = out.size();
    put_u32(out, 0);
    for (std::size_t f = 0; f < frames; ++f) {
        put_u32(out, sample_duration);
        put_u32(out, static_cast<std::uint32_t>(samples[f].size()));
        put_u32(out, (f % spec.gop_len) == 0 ? 0x02000000u : 0x01010000u);
    }
    close_box(out, trun);
    close_box(out, traf);
    close_box(out, moof);
    patch_u32(out, data_offset_at, static_cast<std::uint32_t>(out.size() - moof_start + 8));

    const std::size_t mdat = open_box(out, "mdat");
    for (const auto& s : samples) out.insert(out.end(), s.begin(), s.end());
    close_box(out, mdat);
    return out;
}

}  // namespace tilecrypt::bitstream
