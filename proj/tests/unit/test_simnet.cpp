#include <doctest.h>

#include "tilecrypt/simnet.hpp"

#include <cmath>
#include <numeric>
#include <set>

using namespace tilecrypt;
using namespace tilecrypt::simnet;

namespace {

const Dataset& short_dataset(double seg_s)
{
    static std::map<double, Dataset> cache;
    auto it = cache.find(seg_s);
    if (it != cache.end()) return it->second;
    DatasetSpec spec;
    spec.catalog.video_duration_s = 40.0;
    spec.catalog.segment_duration_s = seg_s;
    spec.traces = 6;
    spec.trace_template.duration_s = 40.5;
    return cache.emplace(seg_s, synthetic_dataset(spec, default_policy())).first->second;
}

RunConfig short_config(Mode mode, double cache_mb, std::uint64_t seed = 1)
{
    RunConfig c;
    c.mode = mode;
    c.cache_mb = cache_mb;
    c.seed = seed;
    c.video_duration_s = 40.0;
    c.workload.client_count = 12;
    c.workload.trace_count = 6;
    return c;
}

}  // namespace

TEST_CASE("topologies")
{
    const Topology small = build_topology(TopologyKind::SmallScale);
    CHECK(small.nodes.size() == 7);
    CHECK(small.links.size() == 6);
    CHECK(small.client_count() == 30);
    CHECK(small.caches().size() == 1);
    CHECK(small.client_nodes().size() == 5);
    small.validate();

    const Topology large = build_topology(TopologyKind::LargeScale);
    CHECK(large.nodes.size() == 8);
    CHECK(large.client_count() == 80);
    large.validate();
    // Downstream of each L2 cache: two links of 240 Mbps.
    for (int cache : large.caches()) {
        double down = 0;
        for (const auto& l : large.links)
            if (l.parent == cache && large.nodes[l.child].kind == NodeKind::ClientNode) down += l.bandwidth_bps;
        if (down > 0) CHECK(down == doctest::Approx(480e6));
    }

    const Topology opened = build_topology(TopologyKind::SmallScale, {kUncappedBps});
    CHECK(opened.links[opened.nodes[1].uplink].bandwidth_bps == kUncappedBps);

    Topology broken = small;
    broken.nodes[2].parent = 2;
    CHECK_THROWS_AS(broken.validate(), Error);
    CHECK(parse_topology("large") == TopologyKind::LargeScale);
    CHECK_THROWS_AS(parse_topology("medium"), Error);
}

TEST_CASE("arrivals have the configured mean and are deterministic")
{
    for (double mean : {20.0, 10.0}) {
        SimRng rng(3);
        const auto a = sample_arrivals(rng, 100000, mean);
        REQUIRE(a.size() == 100000);
        CHECK(a.front() >= 0.0);
        for (std::size_t i = 1; i < a.size(); ++i) REQUIRE(a[i] >= a[i - 1]);
        // Gaps average to the mean; the first start is the first gap.
        CHECK(a.back() / double(a.size()) == doctest::Approx(mean).epsilon(0.01));
    }
    SimRng x(5), y(5);
    CHECK(sample_arrivals(x, 50, 20.0) == sample_arrivals(y, 50, 20.0));
}

TEST_CASE("zipf popularity")
{
    // Hand-computed: sum_{k=1..5} k^-1.5 = 1 + 0.353553 + 0.192450 + 0.125 + 0.089443.
    const double norm = 1.0 + 0.3535534 + 0.1924501 + 0.125 + 0.0894427;
    const auto p = zipf_pmf(5, 1.5);
    CHECK(p[0] == doctest::Approx(1.0 / norm).epsilon(1e-6));
    CHECK(p[0] == doctest::Approx(0.568).epsilon(1e-3));
    CHECK(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(1.0));
    for (std::size_t i = 1; i < p.size(); ++i) CHECK(p[i] < p[i - 1]);

    for (double q : zipf_pmf(5, 1e-9)) CHECK(q == doctest::Approx(0.2).epsilon(1e-6));

    SimRng rng(17);
    std::vector<double> counts(5, 0.0);
    const int n = 1000000;
    for (int i = 0; i < n; ++i) counts[sample_video(rng)] += 1.0;
    for (std::size_t k = 0; k < 5; ++k) CHECK(counts[k] / n == doctest::Approx(p[k]).epsilon(0.01));
}

TEST_CASE("cache lookup, read-while-write and LRU")
{
    CacheState c(1000);
    const auto a = object_id(0, 1, 0, 1, EncryptionLevel::None);
    const auto a_enc = object_id(0, 1, 0, 1, EncryptionLevel::AllI);
    CHECK(a != a_enc);
    CHECK(c.lookup(a) == LookupResult::Miss);
    c.begin_fill(a, 7);
    CHECK(c.lookup(a) == LookupResult::RwwHit);
    CHECK(c.in_flight(a) == 7);
    CHECK(c.complete_fill(a, 7, 400));
    CHECK(c.lookup(a) == LookupResult::Hit);
    // A different encryption level is a different object.
    CHECK(c.lookup(a_enc) == LookupResult::Miss);

    const auto b = object_id(0, 2, 0, 1, EncryptionLevel::None);
    const auto d = object_id(0, 3, 0, 1, EncryptionLevel::None);
    c.begin_fill(b, 8);
    CHECK(c.complete_fill(b, 8, 400));
    CHECK(c.lru_order() == std::vector<std::uint64_t>{a, b});
    CHECK(c.lookup(a) == LookupResult::Hit);  // a is now most recent
    c.begin_fill(d, 9);
    CHECK(c.complete_fill(d, 9, 400));        // evicts b
    CHECK(c.stores(a));
    CHECK_FALSE(c.stores(b));
    CHECK(c.used() <= c.capacity());

    const auto huge = object_id(0, 4, 0, 1, EncryptionLevel::None);
    c.begin_fill(huge, 10);
    CHECK_FALSE(c.complete_fill(huge, 10, 5000));
    CHECK(c.stores(a));

    CacheState none(0);
    none.begin_fill(a, 1);
    CHECK(none.lookup(a) == LookupResult::Miss);
    CHECK_FALSE(none.complete_fill(a, 1, 1));
    CHECK(none.object_count() == 0);
}

TEST_CASE("abr selection")
{
    const auto q = viewport::default_qualities();
    std::vector<double> bits;
    for (const auto& x : q) bits.push_back(4 * x.bitrate_bps * 2.0);
    const std::vector<double> no_decrypt(bits.size(), 0.0);
    CHECK(abr_select(1e15, bits, no_decrypt, 2.0) == bits.size() - 1);
    CHECK(abr_select(0.0, bits, no_decrypt, 2.0) == 0);
    // 5 Mbps: 4 x 1 Mbps downloads in 1.6 s, 4 x 3 Mbps does not fit.
    CHECK(abr_select(5e6, bits, no_decrypt, 2.0) == 1);
    // Decrypt time counts against the deadline.
    std::vector<double> slow(bits.size(), 0.5);
    CHECK(abr_select(5e6, bits, slow, 2.0) == 0);
    for (double bps = 1e5; bps < 1e9; bps *= 1.7) {
        const auto pick = abr_select(bps, bits, no_decrypt, 2.0);
        if (pick > 0) CHECK(bits[pick] / bps <= 2.0);
        if (pick + 1 < bits.size()) CHECK(bits[pick + 1] / bps > 2.0);
    }

    CHECK(harmonic_mean({}) == 0.0);
    CHECK(harmonic_mean({1.0, 2.0, 4.0}) == doctest::Approx(3.0 / 1.75));
    CHECK(harmonic_mean({100.0, 1.0, 1.0, 1.0, 1.0, 1.0}) == doctest::Approx(1.0));
}

TEST_CASE("playback accounting keeps startup apart from stalls")
{
    Playback p(2.0, 147, 2, 293.0);
    p.start_session(10.0);
    p.segment_ready(11.0);
    CHECK_FALSE(p.started());
    p.segment_ready(12.0);
    CHECK(p.started());
    CHECK(p.startup_delay_s() == doctest::Approx(2.0));
    CHECK(p.stall_s() == 0.0);
    // Buffer of 4 s drains by t=16, next segment lands at t=19: 3 s stall.
    p.segment_ready(19.0);
    CHECK(p.stall_s() == doctest::Approx(3.0));
    CHECK(p.rebuffer_ratio() == doctest::Approx(3.0 / 293.0));
    CHECK(p.buffer_s() == doctest::Approx(2.0));
    p.segment_ready(20.0);
    CHECK(p.stall_s() == doctest::Approx(3.0));
}

TEST_CASE("run metrics obey accounting invariants")
{
    const Dataset& data = short_dataset(2.0);
    for (Mode mode : {Mode::Https, Mode::AbeMajorP, Mode::AbeAllIP}) {
        for (double mb : {0.0, 20.0}) {
            CAPTURE(to_string(mode));
            CAPTURE(mb);
            RunConfig cfg = short_config(mode, mb);
            cfg.request_log = true;
            const Metrics m = run(cfg, data);
            CHECK(m.link_violations == 0);
            std::uint64_t requested = 0;
            for (const auto& c : m.clients) {
                requested += c.bytes_requested;
                CHECK(c.bytes_received == c.bytes_requested);
                CHECK(c.segments == data.catalog->segment_count());
                CHECK(c.rebuffer_ratio >= 0.0);
            }
            CHECK(m.client_bytes == requested);
            for (const auto& c : m.caches) {
                CHECK(c.hits + c.rww_hits + c.misses == c.requests);
                CHECK(c.midgress_bytes == c.miss_bytes);
                if (mb == 0.0) {
                    CHECK(c.hit_rate() == 0.0);
                    CHECK(c.rww_hits == 0);
                }
                if (is_abe(mode)) CHECK(c.crypto_work == 0.0);
                else CHECK(c.crypto_work > 0.0);
            }
            // Every logged request is unfragmented: URLs name whole objects.
            std::set<std::string> urls;
            for (const auto& e : m.request_log) {
                CHECK(e.url.find("bytes=") == std::string::npos);
                urls.insert(e.url);
            }
            CHECK_FALSE(m.request_log.empty());
        }
    }
}

TEST_CASE("run is deterministic and a warm cache of catalog size always hits")
{
    const Dataset& data = short_dataset(2.0);
    const RunConfig cfg = short_config(Mode::AbeMajorP, 20.0, 3);
    CHECK(render_metrics(run(cfg, data)) == render_metrics(run(cfg, data)));

    for (Mode mode : {Mode::Https, Mode::AbeAllIP}) {
        const double mb = std::ceil(double(data.catalog->catalog_bytes(mode, 5)) / 1e6) + 1.0;
        const Metrics m = run(short_config(mode, mb), data);
        for (const auto& c : m.caches) CHECK(c.hit_rate() == 1.0);
    }
}

TEST_CASE("a third pass reproduces the second pass's hit rate")
{
    const Dataset& data = short_dataset(2.0);
    RunConfig two = short_config(Mode::Https, 10.0, 2);
    RunConfig three = two;
    three.passes = 3;
    const Metrics a = run(two, data);
    const Metrics b = run(three, data);
    REQUIRE(a.caches.size() == b.caches.size());
    for (std::size_t i = 0; i < a.caches.size(); ++i)
        CHECK(b.caches[i].hit_rate() == doctest::Approx(a.caches[i].hit_rate()).epsilon(0.05));
}

TEST_CASE("a zero cost model charges nothing")
{
    const Dataset& data = short_dataset(2.0);
    RunConfig cfg = short_config(Mode::Https, 20.0);
    cfg.cost.tls_handshake_units = 0;
    cfg.cost.tls_per_byte = 0;
    cfg.cost.abe_per_frame = 0;
    cfg.cost.abe_per_byte = 0;
    const Metrics https = run(cfg, data);
    cfg.mode = Mode::AbeAllIP;
    const Metrics abe = run(cfg, data);
    CHECK(https.cache_crypto_work() == 0.0);
    CHECK(abe.cache_crypto_work() == 0.0);
    CostModel bad;
    bad.tls_per_byte = -1;
    CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("metric CSV round trip and report shape")
{
    const Dataset& data = short_dataset(2.0);
    std::vector<MetricRow> rows;
    for (Mode mode : {Mode::Https, Mode::AbeMajorP, Mode::AbeAllIP}) {
        const Metrics m = run(short_config(mode, 0.0), data);
        const auto parsed = parse_metrics(render_metrics(m));
        CHECK_FALSE(parsed.empty());
        rows.insert(rows.end(), parsed.begin(), parsed.end());
    }
    const std::string report = render_report(rows);
    CHECK(report.find("https") != std::string::npos);
    CHECK(report.find("abe-alliP") != std::string::npos);
    CHECK(report.find("cache_crypto_work") != std::string::npos);

    const Summary one = summarize({4.0});
    CHECK(one.mean == 4.0);
    CHECK_FALSE(one.ci95.has_value());
    const Summary two = summarize({1.0, 3.0});
    CHECK(two.mean == 2.0);
    // t(0.975, 1) = 12.7062; s = sqrt(2); half-width = t * s / sqrt(2).
    REQUIRE(two.ci95.has_value());
    CHECK(*two.ci95 == doctest::Approx(12.7062047).epsilon(1e-6));
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(2.0) == "2");
}

TEST_CASE("sweep expansion")
{
    SweepSpec small = standard_sweep(TopologyKind::SmallScale);
    small.modes = {Mode::Https};
    CHECK(expand_sweep(small).size() == 13);
    SweepSpec large = standard_sweep(TopologyKind::LargeScale);
    large.modes = {Mode::Https};
    CHECK(expand_sweep(large).size() == 14);
    const auto all = expand_sweep(standard_sweep(TopologyKind::SmallScale));
    CHECK(all.size() == 39);
    small.runs_per_size = 0;
    CHECK_THROWS_AS(expand_sweep(small), Error);
}

TEST_CASE("manifest rows round trip")
{
    ManifestRow r;
    r.file = "help_5_3_2_allI.m4s";
    r.tile = 5;
    r.segment = 3;
    r.quality = 2;
    r.level = EncryptionLevel::AllI;
    r.original_bytes = 1000;
    r.bytes = 1117;
    const auto parsed = parse_manifest(manifest_header() + "\n" + render_manifest_row(r) + "\n");
    REQUIRE(parsed.size() == 1);
    CHECK(parsed[0].file == r.file);
    CHECK(parsed[0].level == EncryptionLevel::AllI);
    CHECK(parsed[0].bytes == 1117);
    CHECK(parse_mode("abe-majorP") == Mode::AbeMajorP);
    CHECK_THROWS_AS(parse_mode("abe"), Error);
}
