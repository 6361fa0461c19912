#include "tilecrypt/cli.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <set>

namespace tilecrypt::cli {

using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorKind::ConfigError, msg); }

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where)
{
    if (!obj.is_object()) config_error(where + " must be an object");
    for (const auto& [k, v] : obj.items()) {
        if (!allowed.contains(k)) config_error("unknown key '" + k + "' in " + where);
    }
}

double number(const json& v, const std::string& name)
{
    if (!v.is_number()) config_error("'" + name + "' must be a number");
    return v.get<double>();
}

std::uint64_t uinteger(const json& v, const std::string& name)
{
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
        config_error("'" + name + "' must be a non-negative integer");
    }
    return v.get<std::uint64_t>();
}

bool boolean(const json& v, const std::string& name)
{
    if (!v.is_boolean()) config_error("'" + name + "' must be true or false");
    return v.get<bool>();
}

std::string text(const json& v, const std::string& name)
{
    if (!v.is_string()) config_error("'" + name + "' must be a string");
    return v.get<std::string>();
}

std::vector<double> numbers(const json& v, const std::string& name)
{
    std::vector<double> out;
    if (v.is_array()) {
        for (const auto& x : v) out.push_back(number(x, name));
    } else {
        out.push_back(number(v, name));
    }
    if (out.empty()) config_error("'" + name + "' must not be empty");
    return out;
}

json parse_json(std::string_view text, const std::string& what)
{
    try {
        return json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        config_error(what + " is not valid JSON: " + e.what());
    }
}

simnet::CostModel cost_from_json(const json& j)
{
    check_keys(j,
               {"tls_handshake_units", "tls_per_byte", "handshake_per_request", "abe_per_frame", "abe_per_byte", "http_per_request",
                "io_per_byte", "client_work_rate"},
               "cost model");
    simnet::CostModel c;
    if (j.contains("tls_handshake_units")) c.tls_handshake_units = number(j["tls_handshake_units"], "tls_handshake_units");
    if (j.contains("tls_per_byte")) c.tls_per_byte = number(j["tls_per_byte"], "tls_per_byte");
    if (j.contains("handshake_per_request")) c.handshake_per_request = boolean(j["handshake_per_request"], "handshake_per_request");
    if (j.contains("abe_per_frame")) c.abe_per_frame = number(j["abe_per_frame"], "abe_per_frame");
    if (j.contains("abe_per_byte")) c.abe_per_byte = number(j["abe_per_byte"], "abe_per_byte");
    if (j.contains("http_per_request")) c.http_per_request = number(j["http_per_request"], "http_per_request");
    if (j.contains("io_per_byte")) c.io_per_byte = number(j["io_per_byte"], "io_per_byte");
    if (j.contains("client_work_rate")) c.client_work_rate = number(j["client_work_rate"], "client_work_rate");
    try {
        c.validate();
    } catch (const simnet::Error& e) {
        config_error(e.what());
    }
    return c;
}

fs::path resolve(const fs::path& base, const std::string& p)
{
    const fs::path path(p);
    return (path.is_absolute() ? path : base / path).lexically_normal();
}

}  // namespace

simnet::CostModel parse_cost_model(std::string_view json_text) { return cost_from_json(parse_json(json_text, "cost model")); }

SimPlan load_sim_plan(std::string_view json_text, const fs::path& base_dir)
{
    const json j = parse_json(json_text, "simulation config");
    check_keys(j,
               {"topology", "mode", "modes", "segment_duration_s", "segment_durations", "cache_mb", "sweep", "runs_per_size",
                "base_seed", "seeds", "origin_link_mbps", "cost_model", "cost_model_file", "workload", "client", "passes",
                "replay_measured_pass", "bin_s", "video_duration_s", "request_log", "dataset", "out"},
               "simulation config");
    SimPlan plan;
    try {
        if (j.contains("topology")) plan.sweep.topology = simnet::parse_topology(text(j["topology"], "topology"));
        if (j.contains("sweep")) {
            const std::string s = text(j["sweep"], "sweep");
            if (s != "standard") config_error("unknown sweep '" + s + "' (only \"standard\" is defined)");
            const auto modes = plan.sweep.modes;
            plan.sweep = simnet::standard_sweep(plan.sweep.topology);
            plan.sweep.modes = modes;
        }
        if (j.contains("mode") && j.contains("modes")) config_error("give either 'mode' or 'modes'");
        if (j.contains("mode")) plan.sweep.modes = {simnet::parse_mode(text(j["mode"], "mode"))};
        if (j.contains("modes")) {
            plan.sweep.modes.clear();
            if (!j["modes"].is_array() || j["modes"].empty()) config_error("'modes' must be a non-empty array");
            for (const auto& m : j["modes"]) plan.sweep.modes.push_back(simnet::parse_mode(text(m, "modes")));
        }
    } catch (const simnet::Error& e) {
        config_error(e.what());
    }
    if (j.contains("segment_duration_s") && j.contains("segment_durations")) config_error("give either 'segment_duration_s' or 'segment_durations'");
    if (j.contains("segment_duration_s")) plan.sweep.segment_durations = numbers(j["segment_duration_s"], "segment_duration_s");
    if (j.contains("segment_durations")) plan.sweep.segment_durations = numbers(j["segment_durations"], "segment_durations");
    for (double d : plan.sweep.segment_durations)
        if (!(d > 0)) config_error("segment durations must be positive");
    if (j.contains("cache_mb")) plan.sweep.cache_mb = numbers(j["cache_mb"], "cache_mb");
    if (plan.sweep.cache_mb.empty()) plan.sweep.cache_mb = {0};
    for (double mb : plan.sweep.cache_mb)
        if (!(mb >= 0)) config_error("cache sizes must be non-negative");
    if (j.contains("runs_per_size")) plan.sweep.runs_per_size = uinteger(j["runs_per_size"], "runs_per_size");
    if (plan.sweep.runs_per_size == 0) config_error("'runs_per_size' must be positive");
    if (j.contains("base_seed")) plan.sweep.base_seed = uinteger(j["base_seed"], "base_seed");
    if (j.contains("seeds")) {
        if (!j["seeds"].is_array() || j["seeds"].empty()) config_error("'seeds' must be a non-empty array");
        std::vector<std::uint64_t> seeds;
        for (const auto& s : j["seeds"]) seeds.push_back(uinteger(s, "seeds"));
        plan.seeds = seeds;
    }

    simnet::RunConfig& b = plan.base;
    if (j.contains("origin_link_mbps")) {
        const double mbps = number(j["origin_link_mbps"], "origin_link_mbps");
        if (!(mbps > 0)) config_error("'origin_link_mbps' must be positive");
        b.topology_options.origin_link_bps = mbps * 1e6;
    }
    if (j.contains("cost_model") && j.contains("cost_model_file")) config_error("give either 'cost_model' or 'cost_model_file'");
    if (j.contains("cost_model")) b.cost = cost_from_json(j["cost_model"]);
    if (j.contains("cost_model_file")) b.cost = parse_cost_model(read_text(resolve(base_dir, text(j["cost_model_file"], "cost_model_file"))));
    if (j.contains("workload")) {
        const json& w = j["workload"];
        check_keys(w, {"videos", "zipf_s", "mean_interarrival_s", "client_count", "trace_count"}, "workload");
        if (w.contains("videos")) plan.workload.videos = uinteger(w["videos"], "videos");
        if (w.contains("zipf_s")) plan.workload.zipf_s = number(w["zipf_s"], "zipf_s");
        if (w.contains("mean_interarrival_s")) plan.workload.mean_interarrival_s = number(w["mean_interarrival_s"], "mean_interarrival_s");
        if (w.contains("client_count")) plan.workload.client_count = uinteger(w["client_count"], "client_count");
        if (w.contains("trace_count")) plan.workload.trace_count = uinteger(w["trace_count"], "trace_count");
        if (plan.workload.zipf_s && !(*plan.workload.zipf_s > 0)) config_error("'zipf_s' must be positive");
        if (plan.workload.videos && *plan.workload.videos == 0) config_error("'videos' must be positive");
    }
    if (j.contains("client")) {
        const json& c = j["client"];
        check_keys(c, {"buffer_cap_s", "startup_segments"}, "client");
        if (c.contains("buffer_cap_s")) b.buffer_cap_s = number(c["buffer_cap_s"], "buffer_cap_s");
        if (c.contains("startup_segments")) b.startup_segments = uinteger(c["startup_segments"], "startup_segments");
    }
    if (j.contains("passes")) b.passes = uinteger(j["passes"], "passes");
    if (b.passes == 0) config_error("'passes' must be positive");
    if (j.contains("replay_measured_pass")) b.replay_measured_pass = boolean(j["replay_measured_pass"], "replay_measured_pass");
    if (j.contains("bin_s")) b.bin_s = number(j["bin_s"], "bin_s");
    if (j.contains("video_duration_s")) b.video_duration_s = number(j["video_duration_s"], "video_duration_s");
    if (!(b.bin_s > 0) || !(b.video_duration_s > 0)) config_error("'bin_s' and 'video_duration_s' must be positive");
    if (j.contains("request_log")) b.request_log = boolean(j["request_log"], "request_log");
    if (j.contains("out")) plan.out_dir = resolve(base_dir, text(j["out"], "out"));

    plan.synthetic.catalog.video_duration_s = b.video_duration_s;
    if (j.contains("dataset")) {
        const json& d = j["dataset"];
        check_keys(d, {"kind", "manifest", "selections", "video_id", "traces", "trace_seed", "catalog_seed", "tile_jitter", "i_to_p_ratio"},
                   "dataset");
        const std::string kind = d.contains("kind") ? text(d["kind"], "kind") : (d.contains("manifest") ? "manifest" : "synthetic");
        if (d.contains("video_id")) plan.video_id = text(d["video_id"], "video_id");
        plan.synthetic.catalog.video_id = plan.video_id;
        if (kind == "manifest") {
            if (!d.contains("manifest") || !d.contains("selections")) config_error("a manifest dataset needs 'manifest' and 'selections'");
            plan.manifest = resolve(base_dir, text(d["manifest"], "manifest"));
            plan.selections = resolve(base_dir, text(d["selections"], "selections"));
        } else if (kind == "synthetic") {
            if (d.contains("manifest") || d.contains("selections")) config_error("synthetic datasets take no manifest or selections");
            if (d.contains("traces")) plan.synthetic.traces = uinteger(d["traces"], "traces");
            if (d.contains("trace_seed")) plan.synthetic.trace_seed = uinteger(d["trace_seed"], "trace_seed");
            if (d.contains("catalog_seed")) plan.synthetic.catalog.seed = uinteger(d["catalog_seed"], "catalog_seed");
            if (d.contains("tile_jitter")) plan.synthetic.catalog.tile_jitter = number(d["tile_jitter"], "tile_jitter");
            if (d.contains("i_to_p_ratio")) plan.synthetic.catalog.i_to_p_ratio = number(d["i_to_p_ratio"], "i_to_p_ratio");
            if (plan.synthetic.traces == 0) config_error("'traces' must be positive");
        } else {
            config_error("unknown dataset kind '" + kind + "'");
        }
    }
    return plan;
}

void apply_overrides(SimPlan& plan, const SimulateOptions& o)
{
    try {
        if (o.topology) {
            const auto t = simnet::parse_topology(*o.topology);
            if (t != plan.sweep.topology) {
                plan.sweep.topology = t;
                // The 0 MB baseline does not exist on the large topology.
                if (t == simnet::TopologyKind::LargeScale) std::replace(plan.sweep.cache_mb.begin(), plan.sweep.cache_mb.end(), 0.0, 10.0);
            }
        }
        if (o.mode) plan.sweep.modes = {simnet::parse_mode(*o.mode)};
    } catch (const simnet::Error& e) {
        throw Error(ErrorKind::ConfigError, e.what());
    }
    if (o.cache_mb) {
        if (!(*o.cache_mb >= 0)) throw Error(ErrorKind::ConfigError, "--cache-mb must be non-negative");
        plan.sweep.cache_mb = {*o.cache_mb};
    }
    if (o.segment_duration_s) {
        if (!(*o.segment_duration_s > 0)) throw Error(ErrorKind::ConfigError, "--segment-duration must be positive");
        plan.sweep.segment_durations = {*o.segment_duration_s};
    }
    if (o.seed) plan.seeds = std::vector<std::uint64_t>{*o.seed};
    if (o.out) plan.out_dir = *o.out;
}

std::vector<simnet::RunKey> plan_runs(const SimPlan& plan)
{
    if (!plan.seeds) return simnet::expand_sweep(plan.sweep);
    std::vector<simnet::RunKey> out;
    for (auto mode : plan.sweep.modes)
        for (double dur : plan.sweep.segment_durations)
            for (double mb : plan.sweep.cache_mb)
                for (auto seed : *plan.seeds) out.push_back({plan.sweep.topology, mode, dur, mb, seed});
    return out;
}

simnet::RunConfig run_config(const SimPlan& plan, const simnet::RunKey& key)
{
    simnet::RunConfig c = plan.base;
    c.topology = key.topology;
    c.mode = key.mode;
    c.segment_duration_s = key.segment_duration_s;
    c.cache_mb = key.cache_mb;
    c.seed = key.seed;
    simnet::Workload w = simnet::Workload::for_topology(key.topology);
    const WorkloadOverrides& o = plan.workload;
    if (o.videos) w.videos = *o.videos;
    if (o.zipf_s) w.zipf_s = *o.zipf_s;
    if (o.mean_interarrival_s) w.mean_interarrival_s = *o.mean_interarrival_s;
    if (o.client_count) w.client_count = *o.client_count;
    if (o.trace_count) w.trace_count = *o.trace_count;
    c.workload = w;
    return c;
}

namespace {

std::string compact(double v)
{
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

}  // namespace

std::string run_file_name(const simnet::RunKey& key)
{
    return "run_" + std::string(simnet::to_string(key.topology)) + "_" + std::string(simnet::to_string(key.mode)) + "_" +
           compact(key.cache_mb) + "mb_" + compact(key.segment_duration_s) + "s_seed" + std::to_string(key.seed) + ".csv";
}

simnet::Dataset load_dataset(const SimPlan& plan, double segment_duration_s)
{
    if (!plan.manifest) {
        simnet::DatasetSpec spec = plan.synthetic;
        spec.catalog.segment_duration_s = segment_duration_s;
        spec.catalog.video_duration_s = plan.base.video_duration_s;
        spec.catalog.video_id = plan.video_id;
        return simnet::synthetic_dataset(spec, simnet::default_policy());
    }
    simnet::Dataset d;
    try {
        const auto rows = simnet::parse_manifest(read_text(*plan.manifest));
        std::string video = plan.video_id;
        if (!rows.empty()) video = viewport::parse_segment_url(fs::path(rows.front().file).filename().string()).video_id;
        d.catalog = std::make_shared<const simnet::Catalog>(simnet::catalog_from_manifest(
            rows, video, segment_duration_s, viewport::default_qualities(), abekit::blob_overhead(simnet::default_policy())));
    } catch (const simnet::Error& e) {
        throw Error(ErrorKind::ConfigError, std::string(e.what()) + " (" + plan.manifest->string() + ")");
    } catch (const viewport::Error& e) {
        throw Error(ErrorKind::ConfigError, std::string(e.what()) + " (" + plan.manifest->string() + ")");
    }
    std::vector<fs::path> files;
    if (fs::is_directory(*plan.selections)) {
        for (const auto& e : fs::directory_iterator(*plan.selections))
            if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
        std::sort(files.begin(), files.end());
    } else {
        files.push_back(*plan.selections);
    }
    if (files.empty()) throw Error(ErrorKind::ConfigError, "no selections files in " + plan.selections->string());
    for (const auto& f : files) {
        try {
            d.selections.push_back(viewport::parse_selections(read_text(f)));
        } catch (const viewport::Error& e) {
            throw Error(ErrorKind::ConfigError, std::string(e.what()) + " (" + f.string() + ")");
        }
    }
    return d;
}

}  // namespace tilecrypt::cli
