#include "tilecrypt/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <thread>

namespace tilecrypt::cli {

namespace {

Bytes u64_le(std::uint64_t v)
{
    Bytes out(8);
    for (int i = 0; i < 8; ++i) out[i] = std::uint8_t(v >> (8 * i));
    return out;
}

abekit::MasterKey load_master(const fs::path& p) { return abekit::MasterKey::deserialize(read_file(p)); }

// Runs task(i) for i in [0, n) on up to `jobs` threads; rethrows the first
// failure by index so errors do not depend on scheduling.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& task)
{
    jobs = std::max<std::size_t>(1, std::min(jobs, n));
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                task(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
}

std::vector<fs::path> files_in(const fs::path& p, const std::string& ext)
{
    std::vector<fs::path> out;
    if (fs::is_directory(p)) {
        for (const auto& e : fs::directory_iterator(p))
            if (e.is_regular_file() && e.path().extension() == ext) out.push_back(e.path());
        std::sort(out.begin(), out.end());
    } else if (fs::is_regular_file(p)) {
        out.push_back(p);
    } else {
        throw Error(ErrorKind::IoError, "no such file or directory: " + p.string());
    }
    return out;
}

}  // namespace

std::pair<fs::path, fs::path> cmd_setup(const SetupOptions& o)
{
    Bytes material;
    if (o.seed_file && o.seed) throw Error(ErrorKind::UsageError, "give either --seed-file or --seed");
    if (o.seed_file) {
        material = read_file(*o.seed_file);
    } else if (o.seed) {
        const std::string s = std::to_string(*o.seed);
        material.assign(s.begin(), s.end());
    } else {
        throw Error(ErrorKind::UsageError, "setup needs --seed-file or --seed");
    }
    const abekit::AuthorityKeys keys = abekit::setup(abekit::seed_from_bytes(material));
    const fs::path mk = o.out_dir / "master.key";
    const fs::path pp = o.out_dir / "public.params";
    StagedOutput out(o.out_dir);
    out.write("master.key", keys.master.serialize());
    out.write("public.params", keys.params.serialize());
    out.commit();
    return {mk, pp};
}

void cmd_keygen(const KeygenOptions& o)
{
    const abekit::MasterKey mk = load_master(o.master);
    abekit::AttributeSet attrs(o.attributes.begin(), o.attributes.end());
    write_file_atomic(o.out, abekit::keygen(mk, o.user_id, attrs).serialize());
}

selenc::EncryptedSegment cmd_encrypt_seg(const EncryptSegOptions& o)
{
    const abekit::MasterKey mk = load_master(o.master);
    const abekit::AccessPolicy policy = abekit::parse_policy(o.policy);
    const Bytes seg = read_file(o.in);
    const Bytes seed = u64_le(o.seed);
    selenc::EncryptedSegment enc = selenc::encrypt_segment(seg, o.level, policy, mk.public_params(), mk.authority(), seed);
    write_file_atomic(o.out, enc.bytes);
    return enc;
}

void cmd_decrypt_seg(const DecryptSegOptions& o)
{
    const abekit::PrivateKey sk = abekit::PrivateKey::deserialize(read_file(o.key));
    write_file_atomic(o.out, selenc::decrypt_segment(read_file(o.in), sk));
}

PackResult cmd_pack(const PackOptions& o)
{
    const abekit::AccessPolicy policy = abekit::parse_policy(o.policy);
    const abekit::MasterKey mk = load_master(o.master);
    const abekit::PublicParams pp = mk.public_params();
    const abekit::AttributeAuthority authority = mk.authority();
    const viewport::TileGrid grid;
    const auto& qualities = viewport::default_qualities();

    // Index the plain dataset.
    std::map<std::tuple<int, std::size_t, int>, fs::path> inputs;
    std::string video_id;
    std::size_t segments = 0;
    for (const auto& p : files_in(o.dataset, ".m4s")) {
        viewport::SegmentUrl u;
        try {
            u = viewport::parse_segment_url(p.filename().string());
        } catch (const viewport::Error&) {
            continue;  // not a dataset segment
        }
        if (u.level != EncryptionLevel::None) continue;
        if (video_id.empty()) video_id = u.video_id;
        if (u.video_id != video_id) throw Error(ErrorKind::ConfigError, "dataset mixes videos '" + video_id + "' and '" + u.video_id + "'");
        if (u.tile < 1 || u.tile > grid.tile_count() || u.quality < 1 || u.quality > int(qualities.size())) {
            throw Error(ErrorKind::ConfigError, "dataset file outside the tile grid or quality ladder: " + p.string());
        }
        inputs[{u.tile, u.segment, u.quality}] = p;
        segments = std::max(segments, u.segment + 1);
    }
    if (inputs.empty()) throw Error(ErrorKind::MissingSegment, "no segment files in " + o.dataset.string());
    for (int t = 1; t <= grid.tile_count(); ++t)
        for (std::size_t k = 0; k < segments; ++k)
            for (int q = 1; q <= int(qualities.size()); ++q)
                if (!inputs.contains({t, k, q})) {
                    throw Error(ErrorKind::MissingSegment,
                                viewport::segment_url({video_id, t, k, q, EncryptionLevel::None}) + " is missing from " + o.dataset.string());
                }

    // Selections, one MPD each.
    std::vector<std::pair<std::string, std::vector<viewport::TileSelection>>> selections;
    for (const auto& p : files_in(o.selections, ".csv")) {
        auto sel = viewport::parse_selections(read_text(p));
        if (sel.size() > segments) {
            throw Error(ErrorKind::MissingSegment, p.string() + " selects segment " + std::to_string(sel.size() - 1) +
                                                       " but the dataset has " + std::to_string(segments) + " segments");
        }
        if (sel.size() < segments) {
            throw Error(ErrorKind::ConfigError, p.string() + " covers " + std::to_string(sel.size()) + " of " +
                                                    std::to_string(segments) + " segments");
        }
        for (const auto& s : sel)
            for (int t : s.tiles())
                if (t > grid.tile_count()) throw Error(ErrorKind::ConfigError, p.string() + " selects a tile outside the grid");
        selections.emplace_back(p.stem().string(), std::move(sel));
    }
    if (selections.empty()) throw Error(ErrorKind::ConfigError, "no selections files in " + o.selections.string());

    std::vector<EncryptionLevel> levels{selenc::level_for(o.scheme, selenc::TileRole::Major)};
    const EncryptionLevel minor = selenc::level_for(o.scheme, selenc::TileRole::Minor);
    if (minor != levels.front()) levels.push_back(minor);

    struct Job {
        int tile;
        std::size_t segment;
        int quality;
        EncryptionLevel level;
        const fs::path* in;
    };
    std::vector<Job> jobs;
    for (const auto& [key, path] : inputs)
        for (auto level : levels) jobs.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), level, &path});

    StagedOutput out(o.out);
    std::vector<simnet::ManifestRow> rows(jobs.size());
    std::vector<simnet::ManifestRow> originals(inputs.size());
    std::mutex stage_mu;
    parallel_for(jobs.size(), o.jobs, [&](std::size_t i) {
        const Job& j = jobs[i];
        const Bytes plain = read_file(*j.in);
        Bytes seed = u64_le(o.seed);
        for (std::uint64_t v : {std::uint64_t(j.tile), std::uint64_t(j.segment), std::uint64_t(j.quality), std::uint64_t(j.level)}) {
            const Bytes b = u64_le(v);
            seed.insert(seed.end(), b.begin(), b.end());
        }
        selenc::SegmentStats stats;
        Bytes enc;
        try {
            stats = selenc::segment_stats(plain);
            enc = j.level == EncryptionLevel::None ? plain : selenc::encrypt_segment(plain, j.level, policy, pp, authority, seed).bytes;
        } catch (const bitstream::Error& e) {
            throw Error(ErrorKind::ConfigError, j.in->string() + ": " + e.what());
        }
        const std::string name = viewport::segment_url({video_id, j.tile, j.segment, j.quality, j.level});
        {
            std::lock_guard lock(stage_mu);
            out.write(fs::path("segments") / name, enc);
        }
        rows[i] = {name, j.tile, j.segment, j.quality, j.level, plain.size(), enc.size(), stats};
    });

    // Original rows give the simulator the unencrypted sizes for HTTPS.
    std::size_t oi = 0;
    for (const auto& [key, path] : inputs) {
        simnet::ManifestRow r;
        for (const auto& row : rows) {
            if (row.tile == std::get<0>(key) && row.segment == std::get<1>(key) && row.quality == std::get<2>(key)) {
                r = row;
                break;
            }
        }
        r.file = path.filename().string();
        r.level = EncryptionLevel::None;
        r.bytes = r.original_bytes;
        originals[oi++] = r;
    }

    std::array<double, 4> orig_sum{}, enc_sum{};
    std::string manifest = simnet::manifest_header() + '\n';
    for (const auto& r : originals) manifest += simnet::render_manifest_row(r) + '\n';
    for (const auto& r : rows) {
        if (r.level == EncryptionLevel::None) continue;
        manifest += simnet::render_manifest_row(r) + '\n';
        orig_sum[std::size_t(r.level)] += double(r.original_bytes);
        enc_sum[std::size_t(r.level)] += double(r.bytes);
    }
    std::array<double, 4> overhead{};
    for (std::size_t l = 0; l < 4; ++l) overhead[l] = orig_sum[l] > 0 ? enc_sum[l] / orig_sum[l] - 1.0 : 0.0;
    out.write_text("sizes.csv", manifest);

    std::string report = "file,level,original_bytes,encrypted_bytes,overhead_fraction,work_units\n";
    const selenc::AbeCost cost;
    for (const auto& r : rows) {
        report += r.file + ',' + std::string(selenc::to_string(r.level)) + ',' + std::to_string(r.original_bytes) + ',' +
                  std::to_string(r.bytes) + ',' + simnet::format_number(selenc::size_overhead(r.original_bytes, r.bytes)) + ',' +
                  simnet::format_number(selenc::crypto_work(selenc::Direction::Encrypt, r.level, r.stats, cost)) + '\n';
    }
    out.write_text("overhead.csv", report);

    for (const auto& [stem, sel] : selections) {
        const auto mpd = viewport::build_mpd(video_id, sel, qualities, o.scheme, o.segment_duration_s, overhead);
        out.write_text(fs::path("mpd") / (stem + ".mpd"), viewport::render_mpd(mpd));
    }
    out.commit();

    PackResult res;
    res.inputs = inputs.size();
    res.outputs = jobs.size();
    res.mpds = selections.size();
    res.video_id = video_id;
    res.manifest = o.out / "sizes.csv";
    return res;
}

std::size_t cmd_trace(const TraceOptions& o)
{
    std::vector<fs::path> files;
    for (const auto& in : o.inputs) {
        const auto f = files_in(in, ".csv");
        files.insert(files.end(), f.begin(), f.end());
    }
    if (files.empty()) throw Error(ErrorKind::ConfigError, "no head traces given");
    viewport::SelectionOptions opts;
    opts.segment_duration_s = o.segment_duration_s;
    opts.video_duration_s = o.video_duration_s;
    std::vector<std::vector<viewport::HeadSample>> traces;
    for (const auto& f : files) {
        try {
            traces.push_back(viewport::parse_headtrace(read_text(f)));
        } catch (const viewport::Error& e) {
            throw Error(ErrorKind::ConfigError, f.string() + ": " + e.what());
        }
    }
    StagedOutput out(o.out);
    std::size_t written = 0;
    if (o.aggregate) {
        out.write_text("aggregate.csv", viewport::render_selections(viewport::aggregate_selection(traces, opts)));
        written = 1;
    } else {
        for (std::size_t i = 0; i < files.size(); ++i) {
            out.write_text(files[i].stem().string() + ".csv", viewport::render_selections(viewport::per_segment_selection(traces[i], opts)));
            ++written;
        }
    }
    out.commit();
    return written;
}

std::vector<fs::path> cmd_simulate(const SimulateOptions& o)
{
    SimPlan plan = load_sim_plan(read_text(o.config), o.config.parent_path());
    apply_overrides(plan, o);
    const auto runs = plan_runs(plan);
    if (runs.empty()) throw Error(ErrorKind::ConfigError, "configuration expands to no runs");

    std::map<double, simnet::Dataset> datasets;
    for (const auto& r : runs)
        if (!datasets.contains(r.segment_duration_s)) datasets.emplace(r.segment_duration_s, load_dataset(plan, r.segment_duration_s));

    StagedOutput out(plan.out_dir);
    std::vector<fs::path> written(runs.size());
    std::mutex mu;
    parallel_for(runs.size(), o.jobs, [&](std::size_t i) {
        const simnet::RunConfig cfg = run_config(plan, runs[i]);
        simnet::Metrics m;
        try {
            m = simnet::run(cfg, datasets.at(runs[i].segment_duration_s));
        } catch (const simnet::Error& e) {
            throw Error(ErrorKind::ConfigError, e.what());
        }
        const std::string name = run_file_name(runs[i]);
        const std::string metrics = simnet::render_metrics(m);
        const std::string log = cfg.request_log ? simnet::render_request_log(m) : std::string();
        std::lock_guard lock(mu);
        out.write_text(name, metrics);
        if (cfg.request_log) out.write_text("requests_" + name.substr(4), log);
        written[i] = plan.out_dir / name;
    });
    out.commit();
    return written;
}

std::size_t cmd_report(const ReportOptions& o)
{
    const auto files = glob_paths(o.glob);
    if (files.empty()) throw Error(ErrorKind::ConfigError, "no metrics files match '" + o.glob + "'");
    std::vector<simnet::MetricRow> rows;
    for (const auto& f : files) {
        try {
            auto r = simnet::parse_metrics(read_text(f));
            rows.insert(rows.end(), r.begin(), r.end());
        } catch (const simnet::Error& e) {
            throw Error(ErrorKind::ConfigError, f.string() + ": " + e.what());
        }
    }
    write_text_atomic(o.out, simnet::render_report(rows));
    return files.size();
}

void cmd_synth_segment(const SynthSegmentOptions& o)
{
    write_file_atomic(o.out, bitstream::synth_segment(bitstream::parse_synth_spec(o.spec)));
}

std::size_t cmd_synth_dataset(const SynthDatasetOptions& o)
{
    if (!(o.segment_duration_s > 0) || !(o.video_duration_s > 0) || !(o.byte_scale > 0)) {
        throw Error(ErrorKind::UsageError, "durations and byte scale must be positive");
    }
    std::size_t segments = static_cast<std::size_t>(std::ceil(o.video_duration_s / o.segment_duration_s - 1e-9));
    if (o.segments) segments = std::min(segments, *o.segments);
    const viewport::TileGrid grid;
    const auto& qualities = viewport::default_qualities();
    StagedOutput out(o.out);
    std::size_t n = 0;
    for (int tile = 1; tile <= grid.tile_count(); ++tile) {
        for (std::size_t k = 0; k < segments; ++k) {
            for (int q = 1; q <= int(qualities.size()); ++q) {
                bitstream::SynthSpec spec;
                spec.duration_s = o.segment_duration_s;
                spec.pattern = o.pattern;
                spec.sequence_number = std::uint32_t(k + 1);
                spec.size_seed = o.seed * 1000003ULL + std::uint64_t(tile) * 10007ULL + k * 101ULL + std::uint64_t(q);
                spec.size_jitter = 0.1;
                // Split the bitrate budget so that I : P : B frames weigh 5 : 1 : 0.5.
                double weight = 0;
                for (std::size_t f = 0; f < spec.frame_count(); ++f) {
                    const auto t = spec.declared_type(f);
                    weight += t == FrameType::I ? 5.0 : t == FrameType::B ? 0.5 : 1.0;
                }
                const double budget = double(qualities[q - 1].bitrate_bps) * o.segment_duration_s / 8.0 * o.byte_scale;
                const double unit = std::max(8.0, budget / std::max(1.0, weight));
                spec.i_frame_bytes = std::size_t(std::llround(unit * 5.0));
                spec.p_frame_bytes = std::size_t(std::llround(unit));
                spec.b_frame_bytes = std::size_t(std::llround(std::max(8.0, unit * 0.5)));
                out.write(viewport::segment_url({o.video_id, tile, k, q, EncryptionLevel::None}), bitstream::synth_segment(spec));
                ++n;
            }
        }
    }
    out.commit();
    return n;
}

std::size_t cmd_synth_traces(const SynthTracesOptions& o)
{
    StagedOutput out(o.out);
    for (std::size_t i = 0; i < o.count; ++i) {
        viewport::HeadTraceSpec spec;
        spec.seed = o.seed + i;
        spec.duration_s = o.duration_s;
        char name[32];
        std::snprintf(name, sizeof name, "trace_%02zu.csv", i);
        out.write_text(name, viewport::render_headtrace(viewport::synth_headtrace(spec)));
    }
    out.commit();
    return o.count;
}

namespace {

const std::map<std::string, EncryptionLevel> kLevelNames{
    {"none", EncryptionLevel::None}, {"allI", EncryptionLevel::AllI}, {"alliP", EncryptionLevel::AllIP},
    {"allI+P", EncryptionLevel::AllIP}, {"full", EncryptionLevel::Full}};

const std::map<std::string, selenc::SchemeId> kSchemeNames{{"full", selenc::SchemeId::Full},
                                                           {"alliP", selenc::SchemeId::AllIP},
                                                           {"majorP", selenc::SchemeId::MajorAllP},
                                                           {"majorI", selenc::SchemeId::MajorAllI}};

}  // namespace

int run(int argc, char** argv)
{
    CLI::App app{"tilecrypt: selective ABE encryption for tiled 360 video and CDN simulation"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");

    SetupOptions setup;
    std::string seed_file;
    std::uint64_t setup_seed = 0;
    auto* c_setup = app.add_subcommand("setup", "create a master key and public parameters");
    c_setup->add_option("--seed-file", seed_file, "file holding seed material");
    c_setup->add_option("--seed", setup_seed, "numeric seed");
    c_setup->add_option("--out", setup.out_dir, "output directory")->required();

    KeygenOptions keygen;
    std::string attrs;
    auto* c_keygen = app.add_subcommand("keygen", "issue a private key for a set of attributes");
    c_keygen->add_option("--master", keygen.master, "master key file")->required();
    c_keygen->add_option("--user", keygen.user_id, "user id")->required();
    c_keygen->add_option("--attrs", attrs, "comma-separated attributes")->required();
    c_keygen->add_option("--out", keygen.out, "private key file")->required();

    EncryptSegOptions enc;
    auto* c_enc = app.add_subcommand("encrypt-seg", "encrypt one media segment");
    c_enc->add_option("--in", enc.in)->required();
    c_enc->add_option("--out", enc.out)->required();
    c_enc->add_option("--master", enc.master)->required();
    c_enc->add_option("--policy", enc.policy, "access policy, e.g. and(subscriber,premium)");
    std::string enc_level = "alliP";
    c_enc->add_option("--level", enc_level, "none|allI|alliP|full")->check(CLI::IsMember(kLevelNames));
    c_enc->add_option("--seed", enc.seed);

    DecryptSegOptions dec;
    auto* c_dec = app.add_subcommand("decrypt-seg", "restore an encrypted segment");
    c_dec->add_option("--in", dec.in)->required();
    c_dec->add_option("--key", dec.key, "private key file")->required();
    c_dec->add_option("--out", dec.out)->required();

    PackOptions pack;
    auto* c_pack = app.add_subcommand("pack", "encrypt a tiled dataset and write MPDs and a size manifest");
    c_pack->add_option("--dataset", pack.dataset)->required();
    c_pack->add_option("--selections", pack.selections, "selections CSV or directory")->required();
    c_pack->add_option("--master", pack.master)->required();
    c_pack->add_option("--out", pack.out)->required();
    std::string pack_scheme = "alliP";
    c_pack->add_option("--scheme", pack_scheme, "full|alliP|majorP|majorI")->check(CLI::IsMember(kSchemeNames));
    c_pack->add_option("--policy", pack.policy);
    c_pack->add_option("--seed", pack.seed);
    c_pack->add_option("--segment-duration", pack.segment_duration_s);
    c_pack->add_option("--jobs", pack.jobs)->check(CLI::PositiveNumber);

    TraceOptions trace;
    double trace_video = 293.0;
    auto* c_trace = app.add_subcommand("trace", "map head traces to per-segment tile selections");
    c_trace->add_option("--in", trace.inputs, "head-trace CSVs or directories")->required();
    c_trace->add_option("--segment-duration", trace.segment_duration_s);
    c_trace->add_option("--video-duration", trace_video, "video length in seconds; 0 follows the trace");
    c_trace->add_flag("--aggregate", trace.aggregate, "average coverage across traces");
    c_trace->add_option("--out", trace.out)->required();

    SimulateOptions sim;
    std::string sim_mode, sim_topology, sim_out;
    double sim_cache = -1, sim_dur = -1;
    std::uint64_t sim_seed = 0;
    auto* c_sim = app.add_subcommand("simulate", "run simulation sweeps from a JSON config");
    c_sim->add_option("--config", sim.config)->required();
    auto* o_mode = c_sim->add_option("--mode", sim_mode, "https|abe-majorP|abe-alliP");
    auto* o_cache = c_sim->add_option("--cache-mb", sim_cache);
    auto* o_topo = c_sim->add_option("--topology", sim_topology, "small|large");
    auto* o_dur = c_sim->add_option("--segment-duration", sim_dur);
    auto* o_seed = c_sim->add_option("--seed", sim_seed);
    auto* o_out = c_sim->add_option("--out", sim_out);
    c_sim->add_option("--jobs", sim.jobs)->check(CLI::PositiveNumber);

    ReportOptions report;
    auto* c_report = app.add_subcommand("report", "aggregate metrics CSVs into mean and 95% CI tables");
    c_report->add_option("--glob", report.glob, "metrics file pattern, e.g. 'results/run_*.csv'")->required();
    c_report->add_option("--out", report.out)->required();

    auto* c_synth = app.add_subcommand("synth", "generate synthetic inputs");
    c_synth->require_subcommand(1);
    SynthSegmentOptions synth_seg;
    auto* s_seg = c_synth->add_subcommand("segment", "one synthetic fMP4 segment");
    fs::path seg_spec_file;
    std::vector<std::string> seg_settings;
    s_seg->add_option("--spec", seg_spec_file, "key=value spec file, one setting per line");
    s_seg->add_option("--set", seg_settings, "extra key=value settings, e.g. --set pattern=PB");
    s_seg->add_option("--out", synth_seg.out)->required();
    SynthDatasetOptions synth_ds;
    std::size_t ds_segments = 0;
    auto* s_ds = c_synth->add_subcommand("dataset", "a plain tiled dataset (9 tiles x 4 qualities)");
    s_ds->add_option("--video", synth_ds.video_id);
    s_ds->add_option("--segment-duration", synth_ds.segment_duration_s);
    s_ds->add_option("--video-duration", synth_ds.video_duration_s);
    auto* o_segs = s_ds->add_option("--segments", ds_segments, "limit the number of segments");
    s_ds->add_option("--byte-scale", synth_ds.byte_scale, "scale frame sizes below the ladder bitrates");
    s_ds->add_option("--pattern", synth_ds.pattern, "frame pattern after each IDR, e.g. P or PB");
    s_ds->add_option("--seed", synth_ds.seed);
    s_ds->add_option("--out", synth_ds.out)->required();
    SynthTracesOptions synth_tr;
    auto* s_tr = c_synth->add_subcommand("traces", "synthetic head traces");
    s_tr->add_option("--count", synth_tr.count);
    s_tr->add_option("--seed", synth_tr.seed);
    s_tr->add_option("--duration", synth_tr.duration_s);
    s_tr->add_option("--out", synth_tr.out)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (c_setup->parsed()) {
            if (!seed_file.empty()) setup.seed_file = seed_file;
            if (c_setup->count("--seed")) setup.seed = setup_seed;
            const auto [mk, pp] = cmd_setup(setup);
            std::cout << mk.string() << '\n' << pp.string() << '\n';
        } else if (c_keygen->parsed()) {
            std::string a;
            for (char ch : attrs + ",") {
                if (ch == ',') {
                    if (!a.empty()) keygen.attributes.push_back(a);
                    a.clear();
                } else {
                    a += ch;
                }
            }
            cmd_keygen(keygen);
        } else if (c_enc->parsed()) {
            enc.level = kLevelNames.at(enc_level);
            const auto r = cmd_encrypt_seg(enc);
            std::cout << "blobs " << r.blob_count << " bytes " << r.bytes.size() << '\n';
            if (r.no_matching_frames) std::cerr << "warning: no frames matched level " << selenc::to_string(enc.level) << '\n';
        } else if (c_dec->parsed()) {
            cmd_decrypt_seg(dec);
        } else if (c_pack->parsed()) {
            pack.scheme = kSchemeNames.at(pack_scheme);
            const auto r = cmd_pack(pack);
            std::cout << "inputs " << r.inputs << " outputs " << r.outputs << " mpds " << r.mpds << " manifest " << r.manifest.string() << '\n';
        } else if (c_trace->parsed()) {
            if (trace_video > 0) {
                trace.video_duration_s = trace_video;
            } else {
                trace.video_duration_s.reset();
            }
            const std::size_t n = cmd_trace(trace);
            std::cout << "selections " << n << '\n';
        } else if (c_sim->parsed()) {
            if (o_mode->count()) sim.mode = sim_mode;
            if (o_cache->count()) sim.cache_mb = sim_cache;
            if (o_topo->count()) sim.topology = sim_topology;
            if (o_dur->count()) sim.segment_duration_s = sim_dur;
            if (o_seed->count()) sim.seed = sim_seed;
            if (o_out->count()) sim.out = sim_out;
            for (const auto& p : cmd_simulate(sim)) std::cout << p.string() << '\n';
        } else if (c_report->parsed()) {
            const std::size_t n = cmd_report(report);
            std::cout << "files " << n << '\n';
        } else if (s_seg->parsed()) {
            if (!seg_spec_file.empty()) synth_seg.spec = read_text(seg_spec_file);
            for (const auto& kv : seg_settings) synth_seg.spec += '\n' + kv;
            cmd_synth_segment(synth_seg);
        } else if (s_ds->parsed()) {
            if (o_segs->count()) synth_ds.segments = ds_segments;
            const std::size_t n = cmd_synth_dataset(synth_ds);
            std::cout << "files " << n << '\n';
        } else if (s_tr->parsed()) {
            const std::size_t n = cmd_synth_traces(synth_tr);
            std::cout << "traces " << n << '\n';
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.kind() == ErrorKind::UsageError ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

}  // namespace tilecrypt::cli
