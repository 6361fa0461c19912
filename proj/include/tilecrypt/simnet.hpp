#pragma once

// Deterministic fluid-flow CDN simulation of tiled 360 streaming.
//
// Links carry flows whose rates are max-min fair and recomputed at every
// event. A cache miss opens an upstream flow; downstream readers of an
// in-flight object follow it no faster than it fills. Cryptographic and
// request-handling costs are charged in abstract work units.

#include <array>
#include <cstdint>
#include <limits>
#include <list>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tilecrypt/abekit.hpp"
#include "tilecrypt/selenc.hpp"
#include "tilecrypt/viewport.hpp"

namespace tilecrypt::simnet {

using selenc::EncryptionLevel;

enum class ErrorKind { ConfigError };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what);
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

// ---------------------------------------------------------------- topology

enum class NodeKind { Origin, Cache, ClientNode };
enum class TopologyKind { SmallScale, LargeScale };

std::string_view to_string(NodeKind kind);
std::string_view to_string(TopologyKind kind);
TopologyKind parse_topology(std::string_view name);  // "small" | "large"

inline constexpr double kUncappedBps = 100e9;

struct Node {
    int id = 0;
    NodeKind kind = NodeKind::Origin;
    std::string name;
    int parent = -1;  // -1 for the origin
    int uplink = -1;  // link to the parent
    int depth = 0;    // hops from the origin
};

struct Link {
    int parent = 0;
    int child = 0;
    double bandwidth_bps = 0;
};

struct Topology {
    TopologyKind kind = TopologyKind::SmallScale;
    std::vector<Node> nodes;
    std::vector<Link> links;
    std::map<int, int> clients_per_node;  // client node id -> client count

    int client_count() const;
    std::vector<int> caches() const;
    std::vector<int> client_nodes() const;
    // Throws ConfigError when the structure is not a tree rooted at one origin.
    void validate() const;
};

struct TopologyOptions {
    std::optional<double> origin_link_bps;  // replaces the origin uplink bandwidth
};

Topology build_topology(TopologyKind kind, const TopologyOptions& opts = {});

// ---------------------------------------------------------------- randomness

// Raw-bit generator; doubles are built from engine bits so that streams do
// not depend on the standard library's distribution implementations.
class SimRng {
public:
    explicit SimRng(std::uint64_t seed) : engine_(seed) {}
    std::uint64_t bits() { return engine_(); }
    double unit() { return double(engine_() >> 11) * 0x1.0p-53; }  // [0, 1)
    double exponential(double mean);

private:
    std::mt19937_64 engine_;
};

std::vector<double> sample_arrivals(SimRng& rng, std::size_t client_count, double mean_interarrival_s);
std::vector<double> zipf_pmf(std::size_t n, double s);
std::size_t sample_video(SimRng& rng, std::size_t catalog_size = 5, double s = 1.5);

// ---------------------------------------------------------------- workload

struct Workload {
    std::size_t videos = 5;
    double zipf_s = 1.5;
    double mean_interarrival_s = 20.0;
    std::size_t client_count = 30;
    std::size_t trace_count = 40;

    static Workload for_topology(TopologyKind kind);
};

struct ClientSpec {
    int index = 0;
    int node = 0;  // client node id
    double start_s = 0;
    std::size_t video = 0;  // alias index
    std::size_t trace = 0;
};

std::vector<ClientSpec> plan_clients(const Topology& topo, const Workload& wl, std::uint64_t seed);

// ---------------------------------------------------------------- catalog

enum class Mode { Https, AbeMajorP, AbeAllIP };

std::string_view to_string(Mode mode);
Mode parse_mode(std::string_view name);  // "https" | "abe-majorP" | "abe-alliP"
selenc::SchemeId scheme_for(Mode mode);
bool is_abe(Mode mode);

// Segment sizes and frame census for one tiled video over all qualities; the
// aliases share these numbers but have distinct URLs.
class Catalog {
public:
    Catalog(std::string video_id, double segment_duration_s, std::size_t segment_count, int tiles,
            std::vector<viewport::Quality> qualities, std::size_t blob_overhead);

    const std::string& video_id() const { return video_id_; }
    double segment_duration_s() const { return segment_duration_s_; }
    std::size_t segment_count() const { return segment_count_; }
    int tiles() const { return tiles_; }
    const std::vector<viewport::Quality>& qualities() const { return qualities_; }
    std::size_t blob_overhead() const { return blob_overhead_; }

    // Quality is 1-based.
    const selenc::SegmentStats& stats(int tile, std::size_t segment, int quality) const;
    // Also resets the four level sizes from the blob layout.
    void set_stats(int tile, std::size_t segment, int quality, const selenc::SegmentStats& s);
    void set_size(int tile, std::size_t segment, int quality, EncryptionLevel level, std::size_t bytes);
    std::size_t size(int tile, std::size_t segment, int quality, EncryptionLevel level) const;
    // Total bytes of every object the mode can request, across `aliases` copies.
    std::size_t catalog_bytes(Mode mode, std::size_t aliases) const;

    std::string alias_id(std::size_t alias) const;

private:
    std::size_t slot(int tile, std::size_t segment, int quality) const;

    std::string video_id_;
    double segment_duration_s_;
    std::size_t segment_count_;
    int tiles_;
    std::vector<viewport::Quality> qualities_;
    std::size_t blob_overhead_;
    std::vector<selenc::SegmentStats> stats_;
    std::vector<std::array<std::size_t, 4>> sizes_;
};

struct SyntheticCatalogSpec {
    std::string video_id = "help";
    double video_duration_s = 293.0;
    double segment_duration_s = 2.0;
    double fps = 30.0;
    std::size_t gop_len = 60;
    double i_to_p_ratio = 5.0;      // I-frame bytes relative to a P frame
    double tile_jitter = 0.2;       // +/- per tile-segment size variation
    std::size_t container_bytes = 900;  // non-VCL bytes per segment
    std::uint64_t seed = 7;
    std::vector<viewport::Quality> qualities = viewport::default_qualities();
};

// Sizes follow quality bitrate x segment duration; frames are I then P.
Catalog synthetic_catalog(const SyntheticCatalogSpec& spec, std::size_t blob_overhead);

// Size manifest rows written by the packaging step.
struct ManifestRow {
    std::string file;
    int tile = 0;
    std::size_t segment = 0;
    int quality = 0;
    EncryptionLevel level = EncryptionLevel::None;
    std::size_t original_bytes = 0;
    std::size_t bytes = 0;
    selenc::SegmentStats stats;
};

std::string manifest_header();
std::string render_manifest_row(const ManifestRow& row);
std::vector<ManifestRow> parse_manifest(std::string_view csv);
Catalog catalog_from_manifest(const std::vector<ManifestRow>& rows, const std::string& video_id, double segment_duration_s,
                              const std::vector<viewport::Quality>& qualities, std::size_t blob_overhead);

// Per-client request schedule: four tiles and their levels per segment.
struct SegmentPlan {
    std::array<int, 4> tiles{};
    std::array<EncryptionLevel, 4> levels{};
};

struct ClientPlan {
    std::size_t alias = 0;
    std::size_t trace = 0;
    std::vector<SegmentPlan> segments;
};

ClientPlan make_plan(const std::vector<viewport::TileSelection>& selections, Mode mode, std::size_t alias, std::size_t trace);

// Object identity for caching: distinct per alias, tile, segment, quality and level.
std::uint64_t object_id(std::size_t alias, int tile, std::size_t segment, int quality, EncryptionLevel level);
std::string object_url(const Catalog& catalog, std::uint64_t id);

// ---------------------------------------------------------------- cost model

struct CostModel {
    double tls_handshake_units = 500000.0;  // per handshake, at each endpoint
    double tls_per_byte = 1.0;              // per byte encrypted or decrypted
    bool handshake_per_request = true;      // false: once per (requester, server) pair per pass
    double abe_per_frame = 50.0;
    double abe_per_byte = 0.2;
    double http_per_request = 2000.0;       // request handling at the serving node
    double io_per_byte = 0.05;              // bytes served and bytes written to cache storage
    double client_work_rate = 2.0e6;        // client decrypt throughput, units per second

    selenc::AbeCost abe() const { return {abe_per_frame, abe_per_byte, abe_per_frame, abe_per_byte}; }
    void validate() const;
};

// ---------------------------------------------------------------- cache

enum class LookupResult { Hit, RwwHit, Miss };

std::string_view to_string(LookupResult r);

class CacheState {
public:
    explicit CacheState(std::size_t capacity_bytes) : capacity_(capacity_bytes) {}

    std::size_t capacity() const { return capacity_; }
    std::size_t used() const { return used_; }
    bool stores(std::uint64_t object) const { return index_.contains(object); }
    std::optional<int> in_flight(std::uint64_t object) const;

    // Classifies a request and updates recency on a hit. Counters are not touched.
    LookupResult lookup(std::uint64_t object);
    // Registers an upstream fetch so later requests can read while it is written.
    void begin_fill(std::uint64_t object, int flow);
    // Ends the fetch and admits the object if it fits after LRU eviction.
    // Returns true when the object was stored.
    bool complete_fill(std::uint64_t object, int flow, std::size_t size);
    std::size_t object_count() const { return index_.size(); }
    // Least recently used first.
    std::vector<std::uint64_t> lru_order() const;

private:
    std::size_t capacity_;
    std::size_t used_ = 0;
    std::list<std::pair<std::uint64_t, std::size_t>> lru_;  // front = most recent
    std::map<std::uint64_t, std::list<std::pair<std::uint64_t, std::size_t>>::iterator> index_;
    std::map<std::uint64_t, int> in_flight_;
};

// ---------------------------------------------------------------- client

// Harmonic mean of the last `window` entries; 0 when empty.
double harmonic_mean(const std::vector<double>& values, std::size_t window = 5);

// Returns the 0-based quality index. `segment_bits[q]` is the four-tile
// download size at quality q, `decrypt_s[q]` the estimated decrypt time.
std::size_t abr_select(double throughput_estimate_bps, const std::vector<double>& segment_bits,
                       const std::vector<double>& decrypt_s, double segment_duration_s);

// Playback accounting between download completions.
class Playback {
public:
    Playback(double segment_duration_s, std::size_t segment_count, std::size_t startup_segments, double video_duration_s);

    // Moves the clock forward; stalls accrue while playing on an empty buffer.
    void advance(double now);
    // A segment became playable at `now`.
    void segment_ready(double now);
    double buffer_s() const { return buffer_; }
    bool playing() const { return playing_; }
    bool started() const { return started_; }
    double startup_delay_s() const { return startup_delay_; }
    double stall_s() const { return stall_; }
    double rebuffer_ratio() const { return stall_ / video_duration_; }
    std::size_t ready_segments() const { return ready_; }
    void start_session(double now) { session_start_ = now; last_ = now; }

private:
    double segment_duration_;
    std::size_t segment_count_;
    std::size_t startup_segments_;
    double video_duration_;
    double session_start_ = 0;
    double last_ = 0;
    double buffer_ = 0;
    double stall_ = 0;
    double startup_delay_ = 0;
    std::size_t ready_ = 0;
    bool playing_ = false;
    bool started_ = false;
};

// ---------------------------------------------------------------- run

struct RunConfig {
    TopologyKind topology = TopologyKind::SmallScale;
    TopologyOptions topology_options;
    Workload workload = Workload::for_topology(TopologyKind::SmallScale);
    double cache_mb = 0;
    Mode mode = Mode::Https;
    double segment_duration_s = 2.0;
    double video_duration_s = 293.0;
    CostModel cost;
    std::uint64_t seed = 1;
    double buffer_cap_s = 20.0;
    std::size_t startup_segments = 2;
    double bin_s = 10.0;
    bool request_log = false;
    // Measured pass repeats the warm-up pass's per-client request sequence.
    bool replay_measured_pass = true;
    std::size_t passes = 2;  // warm-up passes + 1 measured pass

    std::size_t cache_bytes() const { return static_cast<std::size_t>(cache_mb * 1e6); }
};

struct NodeMetrics {
    std::string name;
    NodeKind kind = NodeKind::Origin;
    double crypto_work = 0;
    double cpu_work = 0;
    std::vector<double> cpu_bins;  // cpu_work per bin_s interval of the measured pass
};

struct CacheMetrics {
    std::string name;
    std::uint64_t requests = 0;
    std::uint64_t hits = 0;
    std::uint64_t rww_hits = 0;
    std::uint64_t misses = 0;
    std::uint64_t midgress_bytes = 0;  // bytes fetched from upstream
    std::uint64_t miss_bytes = 0;      // object sizes of missed requests
    std::uint64_t served_bytes = 0;
    std::uint64_t written_bytes = 0;
    double crypto_work = 0;
    double cpu_work = 0;

    double hit_rate() const { return hits + misses == 0 ? 0.0 : double(hits) / double(hits + misses); }
};

struct ClientMetrics {
    int index = 0;
    std::string node;
    std::size_t video = 0;
    std::size_t trace = 0;
    double start_s = 0;
    double startup_delay_s = 0;
    double stall_s = 0;
    double rebuffer_ratio = 0;
    double mean_quality = 0;      // 1-based
    double mean_bitrate_bps = 0;  // four-tile nominal bitrate of the chosen qualities
    std::uint64_t bytes_received = 0;
    std::uint64_t bytes_requested = 0;
    double crypto_work = 0;
    std::size_t segments = 0;
};

struct RequestLogEntry {
    double t = 0;
    std::string node;
    std::string url;
    LookupResult result = LookupResult::Miss;
    bool from_origin = false;
};

struct Metrics {
    RunConfig config;
    std::vector<NodeMetrics> nodes;
    std::vector<CacheMetrics> caches;
    std::vector<ClientMetrics> clients;
    std::vector<RequestLogEntry> request_log;
    std::uint64_t link_violations = 0;
    std::uint64_t events = 0;
    double measured_start_s = 0;
    double measured_end_s = 0;
    std::uint64_t origin_bytes = 0;  // bytes sent on the origin uplink(s) in the measured pass
    std::uint64_t client_bytes = 0;

    double cache_crypto_work() const;
    double cache_cpu_work() const;
    double mean_rebuffer_ratio() const;
    double mean_hit_rate() const;
};

// Inputs that can be prepared once and shared by many runs.
struct Dataset {
    std::shared_ptr<const Catalog> catalog;
    // selections[trace] for this segment duration
    std::vector<std::vector<viewport::TileSelection>> selections;
};

struct DatasetSpec {
    SyntheticCatalogSpec catalog;
    std::size_t traces = 40;
    std::uint64_t trace_seed = 1000;
    viewport::HeadTraceSpec trace_template;
};

Dataset synthetic_dataset(const DatasetSpec& spec, const abekit::AccessPolicy& policy);
const abekit::AccessPolicy& default_policy();  // single attribute "subscriber"

Metrics run(const RunConfig& config, const Dataset& data);

// ---------------------------------------------------------------- reporting

// Shortest round-trip decimal form, used for every number in the CSVs.
std::string format_number(double v);
std::string metrics_header();
std::string render_metrics(const Metrics& m);
std::string request_log_header();
std::string render_request_log(const Metrics& m);

struct MetricRow {
    std::string topology;
    std::string mode;
    double cache_mb = 0;
    double segment_duration_s = 0;
    std::uint64_t seed = 0;
    std::string scope;   // run | node | cache | client
    std::string entity;
    std::string metric;
    double value = 0;
};

std::vector<MetricRow> parse_metrics(std::string_view csv);

struct Summary {
    double mean = 0;
    std::optional<double> ci95;  // half-width; empty when fewer than two samples
    std::size_t n = 0;
};

Summary summarize(const std::vector<double>& values);

// Groups rows by (topology, mode, cache_mb, segment_duration, metric) and
// reports mean and 95% confidence half-width.
std::string render_report(const std::vector<MetricRow>& rows);

// Sweep expansion.
struct SweepSpec {
    TopologyKind topology = TopologyKind::SmallScale;
    std::vector<Mode> modes{Mode::Https, Mode::AbeMajorP, Mode::AbeAllIP};
    std::vector<double> segment_durations{2.0};
    std::vector<double> cache_mb;
    std::size_t runs_per_size = 2;
    std::uint64_t base_seed = 1;
};

// The experiment's cache sizes: 0 MB once then two runs each of the rest on
// the small topology; 10 MB replaces 0 MB on the large one.
SweepSpec standard_sweep(TopologyKind topology);
struct RunKey {
    TopologyKind topology;
    Mode mode;
    double segment_duration_s;
    double cache_mb;
    std::uint64_t seed;
};
std::vector<RunKey> expand_sweep(const SweepSpec& sweep);

}  // namespace tilecrypt::simnet
