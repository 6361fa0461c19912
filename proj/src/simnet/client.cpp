#include "tilecrypt/simnet.hpp"

#include <algorithm>

namespace tilecrypt::simnet {

double harmonic_mean(const std::vector<double>& values, std::size_t window)
{
    if (values.empty() || window == 0) return 0.0;
    const std::size_t n = std::min(window, values.size());
    double inv = 0;
    for (std::size_t i = values.size() - n; i < values.size(); ++i) {
        if (!(values[i] > 0.0)) return 0.0;
        inv += 1.0 / values[i];
    }
    return double(n) / inv;
}

std::size_t abr_select(double throughput_estimate_bps, const std::vector<double>& segment_bits,
                       const std::vector<double>& decrypt_s, double segment_duration_s)
{
    if (!(throughput_estimate_bps > 0.0) || segment_bits.empty()) return 0;
    for (std::size_t q = segment_bits.size(); q-- > 1;) {
        const double decrypt = q < decrypt_s.size() ? decrypt_s[q] : 0.0;
        if (segment_bits[q] / throughput_estimate_bps + decrypt <= segment_duration_s) return q;
    }
    return 0;
}

Playback::Playback(double segment_duration_s, std::size_t segment_count, std::size_t startup_segments, double video_duration_s)
    : segment_duration_(segment_duration_s),
      segment_count_(segment_count),
      startup_segments_(std::max<std::size_t>(1, startup_segments)),
      video_duration_(video_duration_s)
{
}

void Playback::advance(double now)
{
    const double dt = now - last_;
    last_ = now;
    if (!playing_ || dt <= 0.0) return;
    if (buffer_ >= dt) {
        buffer_ -= dt;
        return;
    }
    const double deficit = dt - buffer_;
    buffer_ = 0;
    if (ready_ < segment_count_) {
        stall_ += deficit;
    } else {
        playing_ = false;  // played to the end
    }
}

void Playback::segment_ready(double now)
{
    advance(now);
    buffer_ += segment_duration_;
    ++ready_;
    if (!started_ && (ready_ >= startup_segments_ || ready_ >= segment_count_)) {
        started_ = true;
        playing_ = true;
        startup_delay_ = now - session_start_;
    }
}

}  // namespace tilecrypt::simnet
