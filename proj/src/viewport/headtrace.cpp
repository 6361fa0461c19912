#include "tilecrypt/viewport.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <random>
#include <sstream>

namespace tilecrypt::viewport {

namespace {

bool parse_double(const std::string& text, double& out)
{
    const auto a = text.find_first_not_of(" \t\r");
    if (a == std::string::npos) return false;
    const auto b = text.find_last_not_of(" \t\r");
    const char* first = text.data() + a;
    const char* last = text.data() + b + 1;
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last && std::isfinite(out);
}

void append_double(std::string& out, double v)
{
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, ptr);
}

class TraceRng {
public:
    explicit TraceRng(std::uint64_t seed) : engine_(seed) {}
    double unit() { return double(engine_() >> 11) * 0x1.0p-53; }
    double normal()
    {
        // Box-Muller on engine bits keeps the stream library-independent.
        const double u1 = 1.0 - unit();
        const double u2 = unit();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

private:
    std::mt19937_64 engine_;
};

double wrap_yaw(double yaw)
{
    yaw = std::fmod(yaw + 180.0, 360.0);
    if (yaw < 0) yaw += 360.0;
    yaw -= 180.0;
    return yaw >= 180.0 ? -180.0 : yaw;
}

}  // namespace

std::vector<HeadSample> parse_headtrace(std::string_view csv)
{
    std::vector<HeadSample> out;
    std::istringstream in{std::string(csv)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto first = line.find_first_not_of(" \t");
        if (out.empty() && std::isalpha(static_cast<unsigned char>(line[first]))) continue;  // header
        std::vector<std::string> fields;
        std::string field;
        std::istringstream row(line);
        while (std::getline(row, field, ',')) fields.push_back(field);
        HeadSample s;
        if (fields.size() != 3 || !parse_double(fields[0], s.t) || !parse_double(fields[1], s.yaw) ||
            !parse_double(fields[2], s.pitch)) {
            throw Error(ErrorKind::BadRow, "line " + std::to_string(line_no) + ": '" + line + "'");
        }
        if (!(s.yaw >= -180.0 && s.yaw < 180.0)) throw Error(ErrorKind::BadRow, "line " + std::to_string(line_no) + ": yaw out of [-180, 180)");
        if (!(s.pitch >= -90.0 && s.pitch <= 90.0)) throw Error(ErrorKind::BadRow, "line " + std::to_string(line_no) + ": pitch out of [-90, 90]");
        if (!out.empty() && !(s.t > out.back().t)) {
            throw Error(ErrorKind::NonMonotoneTime, "line " + std::to_string(line_no) + ": t does not increase");
        }
        out.push_back(s);
    }
    return out;
}

std::string render_headtrace(const std::vector<HeadSample>& trace)
{
    std::string out = "t,yaw,pitch\n";
    for (const auto& s : trace) {
        append_double(out, s.t);
        out += ',';
        append_double(out, s.yaw);
        out += ',';
        append_double(out, s.pitch);
        out += '\n';
    }
    return out;
}

std::vector<HeadSample> synth_headtrace(const HeadTraceSpec& spec)
{
    if (!(spec.sample_interval_s > 0.0) || !(spec.duration_s > 0.0)) {
        throw Error(ErrorKind::OutOfRange, "trace duration and interval must be positive");
    }
    TraceRng rng(spec.seed);
    const auto n = static_cast<std::size_t>(std::llround(spec.duration_s / spec.sample_interval_s));
    const double dt = spec.sample_interval_s;
    const double reversion = 0.5;  // pitch pull-back per second
    std::vector<HeadSample> out;
    out.reserve(n);
    double yaw = wrap_yaw(360.0 * rng.unit() - 180.0);
    double pitch = spec.pitch_spread_deg * rng.normal() * 0.5;
    for (std::size_t k = 0; k < n; ++k) {
        out.push_back({double(k) * dt, yaw, pitch});
        yaw += spec.yaw_drift_deg_s * std::sqrt(dt) * rng.normal();
        if (rng.unit() < spec.saccade_rate_hz * dt) {
            const double turn = 60.0 + 90.0 * rng.unit();
            yaw += rng.unit() < 0.5 ? -turn : turn;
        }
        yaw = wrap_yaw(yaw);
        pitch += -reversion * pitch * dt + spec.pitch_spread_deg * std::sqrt(2.0 * reversion * dt) * rng.normal();
        pitch = std::clamp(pitch, -90.0, 90.0);
    }
    return out;
}

}  // namespace tilecrypt::viewport
