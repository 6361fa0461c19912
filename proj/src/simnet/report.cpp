#include "tilecrypt/simnet.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <charconv>
#include <cmath>
#include <sstream>
#include <tuple>

namespace tilecrypt::simnet {

std::string format_number(double v)
{
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

namespace {

std::string num(double v) { return format_number(v); }

struct RunPrefix {
    std::string text;
};

RunPrefix prefix(const RunConfig& c)
{
    return {std::string(to_string(c.topology)) + ',' + std::string(to_string(c.mode)) + ',' + num(c.cache_mb) + ',' +
            num(c.segment_duration_s) + ',' + std::to_string(c.seed) + ','};
}

void row(std::string& out, const RunPrefix& p, std::string_view scope, const std::string& entity, std::string_view metric, double v)
{
    out += p.text;
    out += scope;
    out += ',';
    out += entity;
    out += ',';
    out += metric;
    out += ',';
    out += num(v);
    out += '\n';
}

std::vector<std::string> split(const std::string& line)
{
    std::vector<std::string> f;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) f.push_back(field);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    return f;
}

template <typename T>
T parse_num(const std::string& text, std::size_t line_no)
{
    T v{};
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
        throw Error(ErrorKind::ConfigError, "metrics line " + std::to_string(line_no) + ": bad number '" + text + "'");
    }
    return v;
}

}  // namespace

std::string metrics_header() { return "topology,mode,cache_mb,segment_duration_s,seed,scope,entity,metric,value"; }

std::string render_metrics(const Metrics& m)
{
    const RunPrefix p = prefix(m.config);
    std::string out = metrics_header() + '\n';
    row(out, p, "run", "all", "link_violations", double(m.link_violations));
    row(out, p, "run", "all", "events", double(m.events));
    row(out, p, "run", "all", "measured_duration_s", m.measured_end_s - m.measured_start_s);
    row(out, p, "run", "all", "origin_bytes", double(m.origin_bytes));
    row(out, p, "run", "all", "client_bytes", double(m.client_bytes));
    row(out, p, "run", "all", "cache_crypto_work", m.cache_crypto_work());
    row(out, p, "run", "all", "cache_cpu_work", m.cache_cpu_work());
    row(out, p, "run", "all", "mean_rebuffer_ratio", m.mean_rebuffer_ratio());
    row(out, p, "run", "all", "mean_hit_rate", m.mean_hit_rate());
    for (const auto& n : m.nodes) {
        row(out, p, "node", n.name, "crypto_work", n.crypto_work);
        row(out, p, "node", n.name, "cpu_work", n.cpu_work);
        const std::string metric = std::string(to_string(n.kind)) + "_cpu_work";
        for (std::size_t b = 0; b < n.cpu_bins.size(); ++b) {
            row(out, p, "bin", n.name + '@' + num(double(b) * m.config.bin_s), metric, n.cpu_bins[b]);
        }
    }
    for (const auto& c : m.caches) {
        row(out, p, "cache", c.name, "requests", double(c.requests));
        row(out, p, "cache", c.name, "hits", double(c.hits));
        row(out, p, "cache", c.name, "rww_hits", double(c.rww_hits));
        row(out, p, "cache", c.name, "misses", double(c.misses));
        row(out, p, "cache", c.name, "hit_rate", c.hit_rate());
        row(out, p, "cache", c.name, "midgress_bytes", double(c.midgress_bytes));
        row(out, p, "cache", c.name, "served_bytes", double(c.served_bytes));
        row(out, p, "cache", c.name, "written_bytes", double(c.written_bytes));
        row(out, p, "cache", c.name, "crypto_work", c.crypto_work);
        row(out, p, "cache", c.name, "cpu_work", c.cpu_work);
    }
    for (const auto& c : m.clients) {
        const std::string id = "client" + std::to_string(c.index);
        row(out, p, "client", id, "rebuffer_ratio", c.rebuffer_ratio);
        row(out, p, "client", id, "stall_s", c.stall_s);
        row(out, p, "client", id, "startup_delay_s", c.startup_delay_s);
        row(out, p, "client", id, "mean_quality", c.mean_quality);
        row(out, p, "client", id, "mean_bitrate_bps", c.mean_bitrate_bps);
        row(out, p, "client", id, "bytes_received", double(c.bytes_received));
        row(out, p, "client", id, "crypto_work", c.crypto_work);
        row(out, p, "client", id, "video", double(c.video));
    }
    return out;
}

std::string request_log_header() { return "t,node,url,result"; }

std::string render_request_log(const Metrics& m)
{
    std::string out = request_log_header() + '\n';
    for (const auto& e : m.request_log) {
        out += num(e.t - m.measured_start_s);
        out += ',';
        out += e.node;
        out += ',';
        out += e.url;
        out += ',';
        out += e.from_origin ? std::string_view("origin") : to_string(e.result);
        out += '\n';
    }
    return out;
}

std::vector<MetricRow> parse_metrics(std::string_view csv)
{
    std::vector<MetricRow> out;
    std::istringstream in{std::string(csv)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line == metrics_header()) continue;
        const auto f = split(line);
        if (f.size() != 9) throw Error(ErrorKind::ConfigError, "metrics line " + std::to_string(line_no) + ": expected 9 fields");
        MetricRow r;
        r.topology = f[0];
        r.mode = f[1];
        r.cache_mb = parse_num<double>(f[2], line_no);
        r.segment_duration_s = parse_num<double>(f[3], line_no);
        r.seed = parse_num<std::uint64_t>(f[4], line_no);
        r.scope = f[5];
        r.entity = f[6];
        r.metric = f[7];
        r.value = parse_num<double>(f[8], line_no);
        out.push_back(std::move(r));
    }
    return out;
}

Summary summarize(const std::vector<double>& values)
{
    Summary s;
    s.n = values.size();
    if (values.empty()) return s;
    double sum = 0;
    for (double v : values) sum += v;
    s.mean = sum / double(s.n);
    if (s.n < 2) return s;
    double ss = 0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    const double sd = std::sqrt(ss / double(s.n - 1));
    const boost::math::students_t dist(double(s.n - 1));
    s.ci95 = boost::math::quantile(boost::math::complement(dist, 0.025)) * sd / std::sqrt(double(s.n));
    return s;
}

std::string render_report(const std::vector<MetricRow>& rows)
{
    using Key = std::tuple<std::string, std::string, double, double, std::string>;
    std::map<Key, std::vector<double>> groups;
    for (const auto& r : rows) {
        if (r.scope == "node") continue;  // per-node totals are covered by run, cache and bin rows
        groups[{r.topology, r.mode, r.cache_mb, r.segment_duration_s, r.scope + '.' + r.metric}].push_back(r.value);
    }
    std::string out = "topology,mode,cache_mb,segment_duration_s,metric,n,mean,ci95\n";
    for (const auto& [k, values] : groups) {
        const Summary s = summarize(values);
        out += std::get<0>(k) + ',' + std::get<1>(k) + ',' + num(std::get<2>(k)) + ',' + num(std::get<3>(k)) + ',' + std::get<4>(k) +
               ',' + std::to_string(s.n) + ',' + num(s.mean) + ',' + (s.ci95 ? num(*s.ci95) : std::string()) + '\n';
    }
    return out;
}

SweepSpec standard_sweep(TopologyKind topology)
{
    SweepSpec s;
    s.topology = topology;
    if (topology == TopologyKind::SmallScale) {
        s.cache_mb = {0, 100, 250, 500, 1000, 1500, 2000};
    } else {
        s.cache_mb = {10, 100, 250, 500, 1000, 1500, 2000};
    }
    s.runs_per_size = 2;
    return s;
}

std::vector<RunKey> expand_sweep(const SweepSpec& sweep)
{
    if (sweep.runs_per_size == 0) throw Error(ErrorKind::ConfigError, "runs per size must be positive");
    std::vector<RunKey> out;
    for (Mode mode : sweep.modes) {
        for (double dur : sweep.segment_durations) {
            for (double mb : sweep.cache_mb) {
                // The uncached baseline is run once.
                const std::size_t runs = mb == 0.0 ? 1 : sweep.runs_per_size;
                for (std::size_t r = 0; r < runs; ++r) out.push_back({sweep.topology, mode, dur, mb, sweep.base_seed + r});
            }
        }
    }
    return out;
}

}  // namespace tilecrypt::simnet
