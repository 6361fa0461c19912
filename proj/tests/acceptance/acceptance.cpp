// Acceptance checks C1..C12. Prints one PASS/FAIL line per criterion and
// exits nonzero when any criterion fails.

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "tilecrypt/abekit.hpp"
#include "tilecrypt/bitstream.hpp"
#include "tilecrypt/cli.hpp"
#include "tilecrypt/selenc.hpp"
#include "tilecrypt/simnet.hpp"
#include "tilecrypt/viewport.hpp"

using namespace tilecrypt;
namespace fs = std::filesystem;
using simnet::Mode;
using simnet::TopologyKind;
using selenc::EncryptionLevel;

namespace {

// Tolerances and sizes pinned here.
constexpr std::size_t kRoundTripSegments = 200;
constexpr double kRoundTripBudgetS = 60.0;
constexpr double kCoverageSumTol = 1e-9;
constexpr double kCornerTol = 1e-9;
constexpr double kMonteCarloTol = 1e-3;
constexpr int kMonteCarloN = 1000;
constexpr std::size_t kSeeds = 5;
constexpr double kDeskRunBudgetS = 300.0;
constexpr double kStartupOnlyRebuffer = 1e-3;
const std::vector<double> kSmallCacheMb{0, 100, 250, 500, 1000, 1500, 2000};
const std::vector<double> kLargeCacheMb{10, 100, 250, 500, 1000, 1500, 2000};
const std::vector<double> kFragmentationCacheMb{500, 1000, 1500, 2000};
const std::vector<double> kRebufferCacheMb{0, 100, 250};
constexpr Mode kModes[] = {Mode::Https, Mode::AbeMajorP, Mode::AbeAllIP};

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ------------------------------------------------------------ crypto fixture

struct Authority {
    abekit::AuthorityKeys keys = abekit::setup(abekit::Key32{0x5a, 0x17});
    abekit::AttributeAuthority authority = keys.master.authority();
    abekit::AccessPolicy policy{abekit::PolicyNode::leaf("subscriber")};
    abekit::PrivateKey subscriber = abekit::keygen(keys.master, "acceptance", {"subscriber"});
};

bitstream::SynthSpec random_spec(std::mt19937_64& rng, bool need_b)
{
    static const char* patterns[] = {"P", "B", "PB", "BBP", "PBB", "PIB", "BP", "PPB"};
    static const char* with_b[] = {"PB", "BBP", "PBB", "PIB", "BP", "PPB"};
    bitstream::SynthSpec s;
    s.duration_s = rng() % 2 ? 2.0 : 4.0;
    s.gop_len = rng() % 2 ? 60 : 30;
    s.pattern = need_b ? with_b[rng() % 6] : patterns[rng() % 8];
    s.size_seed = rng();
    s.i_frame_bytes = 500 + rng() % 8000;
    s.p_frame_bytes = 100 + rng() % 2000;
    s.b_frame_bytes = 50 + rng() % 1000;
    s.parameter_sets = rng() % 4 != 0;
    s.sequence_number = std::uint32_t(1 + rng() % 1000);
    return s;
}

Outcome c1_round_trip()
{
    Authority a;
    std::mt19937_64 rng(101);
    const auto t0 = std::chrono::steady_clock::now();
    std::size_t checked = 0, mismatched = 0;
    for (std::size_t i = 0; i < kRoundTripSegments; ++i) {
        const Bytes seg = bitstream::synth_segment(random_spec(rng, false));
        for (auto level : selenc::kAllLevels) {
            const Bytes seed{std::uint8_t(i), std::uint8_t(i >> 8), std::uint8_t(level)};
            const auto e = selenc::encrypt_segment(seg, level, a.policy, a.keys.params, a.authority, seed);
            if (selenc::decrypt_segment(e.bytes, a.subscriber) != seg) ++mismatched;
            ++checked;
        }
    }
    const double dt = seconds_since(t0);
    return {mismatched == 0 && dt < kRoundTripBudgetS,
            std::to_string(checked) + " segment/level pairs, " + std::to_string(mismatched) + " mismatches, " + fmt(dt) +
                " s (budget " + fmt(kRoundTripBudgetS) + " s)"};
}

// Every access tree of depth <= 3 over {a,b,c,d}, depth counting a leaf as 1.
// Depth-2 gates take distinct leaves; depth-3 gates take 1..3 distinct
// children from the depth <= 2 trees, at least one of them a gate.
std::vector<abekit::PolicyNode> enumerate_trees(const std::vector<std::string>& attrs)
{
    using abekit::PolicyNode;
    std::vector<PolicyNode> shallow;
    for (const auto& x : attrs) shallow.push_back(PolicyNode::leaf(x));
    const std::size_t leaves = shallow.size();
    for (unsigned mask = 1; mask < (1u << attrs.size()); ++mask) {
        std::vector<PolicyNode> kids;
        for (std::size_t i = 0; i < attrs.size(); ++i)
            if (mask & (1u << i)) kids.push_back(PolicyNode::leaf(attrs[i]));
        for (std::size_t k = 1; k <= kids.size(); ++k) shallow.push_back(PolicyNode::gate(k, kids));
    }
    std::vector<PolicyNode> all = shallow;
    const std::size_t n = shallow.size();
    auto add = [&](std::vector<std::size_t> idx) {
        bool has_gate = false;
        for (auto i : idx) has_gate |= i >= leaves;
        if (!has_gate) return;
        std::vector<PolicyNode> kids;
        for (auto i : idx) kids.push_back(shallow[i]);
        for (std::size_t k = 1; k <= kids.size(); ++k) all.push_back(PolicyNode::gate(k, kids));
    };
    for (std::size_t i = 0; i < n; ++i) {
        add({i});
        for (std::size_t j = i + 1; j < n; ++j) {
            add({i, j});
            for (std::size_t k = j + 1; k < n; ++k) add({i, j, k});
        }
    }
    return all;
}

Outcome c2_policy_gate()
{
    Authority a;
    const std::vector<std::string> attrs{"a", "b", "c", "d"};
    std::vector<abekit::AttributeSet> subsets;
    std::vector<abekit::PrivateKey> keys;
    for (unsigned mask = 0; mask < 16; ++mask) {
        abekit::AttributeSet s;
        for (std::size_t i = 0; i < 4; ++i)
            if (mask & (1u << i)) s.insert(attrs[i]);
        subsets.push_back(s);
        // The empty set is represented by a key over an unrelated attribute.
        keys.push_back(abekit::keygen(a.keys.master, "u" + std::to_string(mask), s.empty() ? abekit::AttributeSet{"zzz"} : s));
    }
    const auto trees = enumerate_trees(attrs);
    const Bytes pt{'g', 'a', 't', 'e'};
    std::size_t checks = 0, disagreements = 0, unexpected = 0, too_deep = 0;
    for (std::size_t t = 0; t < trees.size(); ++t) {
        const abekit::AccessPolicy policy(trees[t]);
        if (policy.depth() > 3) ++too_deep;
        const Bytes seed{std::uint8_t(t), std::uint8_t(t >> 8), std::uint8_t(t >> 16)};
        const Bytes wire = abekit::encrypt(a.keys.params, a.authority, policy, pt, seed).serialize();
        for (unsigned mask = 0; mask < 16; ++mask) {
            const bool sat = abekit::satisfies(policy, subsets[mask]);
            bool opened = false;
            try {
                opened = abekit::decrypt(keys[mask], wire) == pt;
            } catch (const abekit::Error& e) {
                // An unsatisfied key is refused with PolicyUnsatisfied; anything else is unexpected.
                if (sat || e.kind() != abekit::ErrorKind::PolicyUnsatisfied) ++unexpected;
            } catch (...) {
                ++unexpected;
            }
            if (opened != sat) ++disagreements;
            ++checks;
        }
    }
    return {disagreements == 0 && unexpected == 0 && too_deep == 0,
            std::to_string(trees.size()) + " trees x 16 subsets = " + std::to_string(checks) + " checks, " +
                std::to_string(disagreements) + " disagreements, " + std::to_string(unexpected) + " unexpected exceptions"};
}

Outcome c3_scheme_table()
{
    using selenc::SchemeId;
    using selenc::TileRole;
    const std::tuple<SchemeId, TileRole, EncryptionLevel> table[] = {
        {SchemeId::MajorAllP, TileRole::Major, EncryptionLevel::AllIP}, {SchemeId::MajorAllP, TileRole::Minor, EncryptionLevel::AllI},
        {SchemeId::MajorAllI, TileRole::Major, EncryptionLevel::AllI},  {SchemeId::MajorAllI, TileRole::Minor, EncryptionLevel::None},
        {SchemeId::Full, TileRole::Major, EncryptionLevel::Full},       {SchemeId::Full, TileRole::Minor, EncryptionLevel::Full},
        {SchemeId::AllIP, TileRole::Major, EncryptionLevel::AllIP},     {SchemeId::AllIP, TileRole::Minor, EncryptionLevel::AllIP},
    };
    std::size_t wrong = 0;
    for (const auto& [scheme, role, level] : table)
        if (selenc::level_for(scheme, role) != level) ++wrong;
    return {wrong == 0, std::to_string(std::size(table) - wrong) + "/" + std::to_string(std::size(table)) + " entries match"};
}

// Blob wire layout for a single-leaf policy: magic 4, version 1, policy_len 2,
// nonce 12, share_count 2, ct_len 4; policy leaf: kind 1, name_len 1, name;
// one 64-byte share record per leaf; 16-byte GCM tag.
std::size_t oracle_blob_overhead_single_leaf(std::size_t name_len)
{
    return (4 + 1 + 2 + 12 + 2 + 4) + (1 + 1 + name_len) + 64 + 16;
}

Outcome c4_size_overhead()
{
    Authority a;
    const std::size_t per_blob = oracle_blob_overhead_single_leaf(std::string("subscriber").size());
    std::mt19937_64 rng(404);
    std::size_t segments = 0, order_fail = 0, closed_fail = 0;
    for (int i = 0; i < 100; ++i) {
        const Bytes seg = bitstream::synth_segment(random_spec(rng, true));
        const bitstream::MediaSegment m = bitstream::parse_segment(seg);
        // Count VCL NALs per frame type straight from the parsed samples.
        std::array<std::size_t, 3> nals{};
        for (std::size_t s = 0; s < m.samples.size(); ++s) {
            const auto type = m.frame_type(s);
            if (type == bitstream::FrameType::NonVCL) continue;
            for (const auto& n : m.samples[s].nals)
                if (n.is_vcl()) ++nals[std::size_t(type)];
        }
        if (nals[0] == 0 || nals[1] == 0 || nals[2] == 0) continue;
        ++segments;
        const std::size_t covered[4] = {0, nals[0], nals[0] + nals[1], nals[0] + nals[1] + nals[2]};
        std::array<double, 4> ov{};
        for (auto level : selenc::kAllLevels) {
            const auto e = selenc::encrypt_segment(seg, level, a.policy, a.keys.params, a.authority, Bytes{std::uint8_t(i)});
            ov[std::size_t(level)] = selenc::size_overhead(seg, e);
            if (e.bytes.size() != seg.size() + covered[std::size_t(level)] * per_blob) ++closed_fail;
        }
        if (!(ov[3] > ov[2] && ov[2] > ov[1] && ov[1] >= 0.0)) ++order_fail;
    }
    return {segments >= 50 && order_fail == 0 && closed_fail == 0,
            std::to_string(segments) + " I+P+B segments, " + std::to_string(order_fail) + " ordering failures, " +
                std::to_string(closed_fail) + " closed-form mismatches (" + std::to_string(per_blob) + " B per blob)"};
}

viewport::Coverage monte_carlo(double yaw, double pitch, const viewport::TileGrid& g, const viewport::FieldOfView& fov, int n)
{
    std::mt19937_64 rng(0xacce);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double top = std::min(90.0, pitch + fov.vertical / 2);
    const double bottom = std::max(-90.0, pitch - fov.vertical / 2);
    std::map<int, double> counts;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            double y = yaw - fov.horizontal / 2 + fov.horizontal * (i + u(rng)) / n;
            const double p = bottom + (top - bottom) * (j + u(rng)) / n;
            y = std::fmod(y + 180.0, 360.0);
            if (y < 0) y += 360.0;
            const int col = std::min(g.cols - 1, int(y / g.tile_width()));
            const int row = std::min(g.rows - 1, int((90.0 - p) / g.tile_height()));
            counts[g.tile_id(row, col)] += 1.0;
        }
    }
    viewport::Coverage c;
    for (const auto& [t, k] : counts) c[t] = k / double(n) / double(n);
    return c;
}

double at(const viewport::Coverage& c, int tile)
{
    const auto it = c.find(tile);
    return it == c.end() ? 0.0 : it->second;
}

Outcome c5_geometry()
{
    const viewport::TileGrid g;
    const viewport::FieldOfView fov;
    double worst_sum = 0;
    for (int yaw = -180; yaw < 180; ++yaw) {
        for (int pitch = -90; pitch <= 90; ++pitch) {
            double s = 0;
            for (const auto& [t, v] : viewport::tile_coverage(yaw, pitch, g, fov)) s += v;
            worst_sum = std::max(worst_sum, std::abs(s - 1.0));
        }
    }
    // Viewport centred on the corner shared by tiles 5, 6, 8, 9.
    const auto corner = viewport::tile_coverage(60.0, -30.0, g, fov);
    double worst_corner = corner.size() == 4 ? 0.0 : 1.0;
    for (int t : {5, 6, 8, 9}) worst_corner = std::max(worst_corner, std::abs(at(corner, t) - 0.25));
    double worst_mc = 0;
    for (auto [yaw, pitch] : {std::pair{179.0, 0.0}, std::pair{-179.0, 10.0}, std::pair{-120.0, -40.0}, std::pair{150.0, 70.0},
                              std::pair{180.0 - 1e-6, -89.0}}) {
        const auto exact = viewport::tile_coverage(yaw, pitch, g, fov);
        const auto mc = monte_carlo(yaw, pitch, g, fov, kMonteCarloN);
        for (int t = 1; t <= g.tile_count(); ++t) worst_mc = std::max(worst_mc, std::abs(at(exact, t) - at(mc, t)));
    }
    return {worst_sum <= kCoverageSumTol && worst_corner <= kCornerTol && worst_mc <= kMonteCarloTol,
            "max |sum-1| " + fmt(worst_sum) + ", corner max error " + fmt(worst_corner) + ", seam max |exact-MC| " + fmt(worst_mc)};
}

Outcome c6_segment_counts()
{
    viewport::HeadTraceSpec spec;
    spec.duration_s = 293.5;
    const auto trace = viewport::synth_headtrace(spec);
    viewport::SelectionOptions two;
    two.segment_duration_s = 2.0;
    two.video_duration_s = 293.0;
    viewport::SelectionOptions four = two;
    four.segment_duration_s = 4.0;
    const std::size_t n2 = viewport::per_segment_selection(trace, two).size();
    const std::size_t n4 = viewport::per_segment_selection(trace, four).size();
    return {n2 == 147 && n4 == 74, std::to_string(n2) + " two-second, " + std::to_string(n4) + " four-second selections"};
}

// ------------------------------------------------------------ simulation

struct RunSummary {
    double cache_crypto = 0;
    double cache_cpu = 0;
    double hit_rate = 0;
    double rebuffer = 0;
    std::size_t mixed_stems = 0;  // URL stems requested under more than one level suffix
};

std::size_t mixed_stems(const simnet::Metrics& m)
{
    std::map<std::string, std::set<std::string>> levels;
    for (const auto& e : m.request_log) {
        std::string stem = e.url.substr(0, e.url.rfind(".m4s"));
        std::string level = "none";
        const auto us = stem.rfind('_');
        if (us != std::string::npos) {
            const std::string tail = stem.substr(us + 1);
            if (tail == "allI" || tail == "allI+P" || tail == "full") {
                level = tail;
                stem.resize(us);
            }
        }
        levels[stem].insert(level);
    }
    std::size_t n = 0;
    for (const auto& [stem, ls] : levels) n += ls.size() > 1;
    return n;
}

class Runner {
public:
    RunSummary get(TopologyKind topo, Mode mode, double seg_s, double cache_mb, std::uint64_t seed, bool uncapped = false)
    {
        const auto key = std::make_tuple(int(topo), int(mode), seg_s, cache_mb, seed, uncapped);
        if (auto it = cache_.find(key); it != cache_.end()) return it->second;
        simnet::RunConfig cfg;
        cfg.topology = topo;
        cfg.workload = simnet::Workload::for_topology(topo);
        cfg.mode = mode;
        cfg.segment_duration_s = seg_s;
        cfg.cache_mb = cache_mb;
        cfg.seed = seed;
        cfg.request_log = true;
        if (uncapped) cfg.topology_options.origin_link_bps = simnet::kUncappedBps;
        const simnet::Metrics m = simnet::run(cfg, dataset(seg_s));
        check_accounting(m);
        RunSummary s{m.cache_crypto_work(), m.cache_cpu_work(), m.mean_hit_rate(), m.mean_rebuffer_ratio(), mixed_stems(m)};
        cache_.emplace(key, s);
        return s;
    }

    // Seed average over 1..kSeeds.
    RunSummary mean(TopologyKind topo, Mode mode, double seg_s, double cache_mb, bool uncapped = false)
    {
        RunSummary out;
        for (std::uint64_t seed = 1; seed <= kSeeds; ++seed) {
            const RunSummary r = get(topo, mode, seg_s, cache_mb, seed, uncapped);
            out.cache_crypto += r.cache_crypto / kSeeds;
            out.cache_cpu += r.cache_cpu / kSeeds;
            out.hit_rate += r.hit_rate / kSeeds;
            out.rebuffer += r.rebuffer / kSeeds;
            out.mixed_stems += r.mixed_stems;
        }
        return out;
    }

    const simnet::Dataset& dataset(double seg_s)
    {
        if (auto it = data_.find(seg_s); it != data_.end()) return it->second;
        simnet::DatasetSpec spec;
        spec.catalog.segment_duration_s = seg_s;
        return data_.emplace(seg_s, simnet::synthetic_dataset(spec, simnet::default_policy())).first->second;
    }

    void check_accounting(const simnet::Metrics& m)
    {
        ++runs_;
        for (const auto& c : m.caches) {
            ++cache_checks_;
            if (c.hits + c.rww_hits + c.misses != c.requests) ++accounting_failures_;
        }
    }

    std::size_t runs() const { return runs_; }
    std::size_t cache_checks() const { return cache_checks_; }
    std::size_t accounting_failures() const { return accounting_failures_; }

private:
    std::map<double, simnet::Dataset> data_;
    std::map<std::tuple<int, int, double, double, std::uint64_t, bool>, RunSummary> cache_;
    std::size_t runs_ = 0;
    std::size_t cache_checks_ = 0;
    std::size_t accounting_failures_ = 0;
};

Outcome c7_cache_crypto(Runner& r)
{
    std::string detail;
    bool ok = true;
    const auto t0 = std::chrono::steady_clock::now();
    double small_s = 0;
    for (TopologyKind topo : {TopologyKind::SmallScale, TopologyKind::LargeScale}) {
        const auto& sizes = topo == TopologyKind::SmallScale ? kSmallCacheMb : kLargeCacheMb;
        std::size_t held = 0;
        for (double mb : sizes) {
            const double h = r.mean(topo, Mode::Https, 2.0, mb).cache_crypto;
            const double mp = r.mean(topo, Mode::AbeMajorP, 2.0, mb).cache_crypto;
            const double ip = r.mean(topo, Mode::AbeAllIP, 2.0, mb).cache_crypto;
            if (h > mp && mp >= ip) ++held;
            else {
                ok = false;
                detail += " [" + std::string(to_string(topo)) + " " + fmt(mb) + " MB: " + fmt(h) + "/" + fmt(mp) + "/" + fmt(ip) + "]";
            }
        }
        if (topo == TopologyKind::SmallScale) small_s = seconds_since(t0);
        detail = std::string(to_string(topo)) + " " + std::to_string(held) + "/" + std::to_string(sizes.size()) + " sizes; " + detail;
    }
    // One desk-scale run: 30 clients on the small topology, timed on its own.
    const auto t1 = std::chrono::steady_clock::now();
    simnet::RunConfig desk;
    desk.seed = 99;
    desk.cache_mb = 250;
    simnet::run(desk, r.dataset(2.0));
    const double desk_s = seconds_since(t1);
    ok = ok && desk_s < kDeskRunBudgetS;
    return {ok, detail + "desk run " + fmt(desk_s) + " s, small sweep " + fmt(small_s) + " s (budget " + fmt(kDeskRunBudgetS) + " s)"};
}

Outcome c8_duration_gap(Runner& r)
{
    auto sweep_work = [&](Mode mode, double seg_s) {
        double w = 0;
        for (double mb : kSmallCacheMb) w += r.mean(TopologyKind::SmallScale, mode, seg_s, mb).cache_cpu;
        return w;
    };
    const double https = sweep_work(Mode::Https, 2.0) / sweep_work(Mode::Https, 4.0);
    const double abe = sweep_work(Mode::AbeAllIP, 2.0) / sweep_work(Mode::AbeAllIP, 4.0);
    return {https > abe, "cache work 2s/4s: https " + fmt(https) + ", abe-alliP " + fmt(abe)};
}

Outcome c9_fragmentation(Runner& r)
{
    bool ok = true;
    std::size_t majorp_mixed = 0, allip_mixed = 0;
    std::string detail;
    for (double seg_s : {2.0, 4.0}) {
        for (double mb : kFragmentationCacheMb) {
            const RunSummary ip = r.mean(TopologyKind::SmallScale, Mode::AbeAllIP, seg_s, mb);
            const RunSummary mp = r.mean(TopologyKind::SmallScale, Mode::AbeMajorP, seg_s, mb);
            majorp_mixed += mp.mixed_stems;
            allip_mixed += ip.mixed_stems;
            if (!(ip.hit_rate >= mp.hit_rate)) {
                ok = false;
                detail += " [" + fmt(seg_s) + "s " + fmt(mb) + " MB: " + fmt(ip.hit_rate) + " < " + fmt(mp.hit_rate) + "]";
            }
        }
    }
    ok = ok && majorp_mixed > 0 && allip_mixed == 0;
    const RunSummary ip = r.mean(TopologyKind::SmallScale, Mode::AbeAllIP, 2.0, 500);
    const RunSummary mp = r.mean(TopologyKind::SmallScale, Mode::AbeMajorP, 2.0, 500);
    return {ok, "hit rate at 500 MB/2s: alliP " + fmt(ip.hit_rate) + ", majorP " + fmt(mp.hit_rate) + "; mixed-suffix stems majorP " +
                    std::to_string(majorp_mixed) + ", alliP " + std::to_string(allip_mixed) + detail};
}

Outcome c10_accounting(Runner& r)
{
    std::string detail;
    bool warm_ok = true;
    std::size_t judged = 0, idle = 0;
    for (TopologyKind topo : {TopologyKind::SmallScale, TopologyKind::LargeScale}) {
        for (Mode mode : {Mode::Https, Mode::AbeAllIP}) {
            simnet::RunConfig cfg;
            cfg.topology = topo;
            cfg.workload = simnet::Workload::for_topology(topo);
            cfg.mode = mode;
            cfg.cache_mb = std::ceil(double(r.dataset(2.0).catalog->catalog_bytes(mode, cfg.workload.videos)) / 1e6) + 1.0;
            const simnet::Metrics m = simnet::run(cfg, r.dataset(2.0));
            r.check_accounting(m);
            for (const auto& c : m.caches) {
                // A parent behind warm children receives no requests; its hit rate is undefined.
                if (c.hits + c.misses == 0) {
                    ++idle;
                    continue;
                }
                ++judged;
                if (c.hit_rate() != 1.0) {
                    warm_ok = false;
                    detail += " [" + std::string(to_string(topo)) + " " + std::string(to_string(mode)) + " " + c.name + " " + fmt(c.hit_rate()) + "]";
                }
            }
        }
    }
    warm_ok = warm_ok && judged > 0;
    return {warm_ok && r.accounting_failures() == 0,
            std::to_string(r.cache_checks()) + " cache records over " + std::to_string(r.runs()) + " runs, " +
                std::to_string(r.accounting_failures()) + " accounting failures; warm catalog-size hit rate " +
                (warm_ok ? "1.0" : "below 1:" + detail) + " at " + std::to_string(judged) + " requested caches (" +
                std::to_string(idle) + " without requests)"};
}

Outcome c11_rebuffering(Runner& r)
{
    bool ok = true;
    std::string detail = "capped (https/majorP/alliP):";
    for (double mb : kRebufferCacheMb) {
        const double h = r.mean(TopologyKind::SmallScale, Mode::Https, 2.0, mb).rebuffer;
        const double mp = r.mean(TopologyKind::SmallScale, Mode::AbeMajorP, 2.0, mb).rebuffer;
        const double ip = r.mean(TopologyKind::SmallScale, Mode::AbeAllIP, 2.0, mb).rebuffer;
        const bool held = ip >= mp && mp >= h;
        ok = ok && held;
        detail += " " + fmt(mb) + "MB " + fmt(h) + "/" + fmt(mp) + "/" + fmt(ip) + (held ? "" : "(x)");
    }
    double worst_uncapped = 0;
    for (double mb : kRebufferCacheMb)
        for (Mode mode : kModes) worst_uncapped = std::max(worst_uncapped, r.mean(TopologyKind::SmallScale, mode, 2.0, mb, true).rebuffer);
    ok = ok && worst_uncapped < kStartupOnlyRebuffer;
    return {ok, detail + "; uncapped max " + fmt(worst_uncapped) + " (limit " + fmt(kStartupOnlyRebuffer) + ")"};
}

// ------------------------------------------------------------ pipeline

int argv_run(std::vector<std::string> args)
{
    args.insert(args.begin(), "tilecrypt");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    return cli::run(int(argv.size()), argv.data());
}

// Runs setup through report under `root`; returns false on any nonzero exit.
bool pipeline(const fs::path& root)
{
    const std::string r = root.string();
    fs::create_directories(root);
    {
        std::ofstream cfg(root / "sim.json");
        cfg << R"({"topology": "small", "modes": ["https", "abe-majorP", "abe-alliP"], "segment_duration_s": 2,)"
            << R"( "cache_mb": [0, 50], "seeds": [1, 2], "video_duration_s": 20, "request_log": true,)"
            << R"( "workload": {"videos": 1, "client_count": 6, "trace_count": 3},)"
            << R"( "dataset": {"manifest": "packed/sizes.csv", "selections": "selections", "video_id": "demo"},)"
            << R"( "out": "results"})";
    }
    const std::vector<std::vector<std::string>> steps = {
        {"setup", "--seed", "42", "--out", r + "/keys"},
        {"synth", "dataset", "--video", "demo", "--segment-duration", "2", "--video-duration", "20", "--byte-scale", "0.02", "--out",
         r + "/plain"},
        {"synth", "traces", "--count", "3", "--duration", "20.5", "--out", r + "/traces"},
        {"trace", "--in", r + "/traces", "--segment-duration", "2", "--video-duration", "20", "--out", r + "/selections"},
        {"pack", "--dataset", r + "/plain", "--selections", r + "/selections", "--master", r + "/keys/master.key", "--scheme", "majorP",
         "--jobs", "2", "--out", r + "/packed"},
        {"simulate", "--config", r + "/sim.json", "--jobs", "2"},
        {"report", "--glob", r + "/results/run_*.csv", "--out", r + "/report.csv"},
    };
    for (const auto& s : steps)
        if (argv_run(s) != 0) return false;
    return true;
}

std::map<std::string, Bytes> csv_files(const fs::path& root)
{
    std::map<std::string, Bytes> out;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file() && e.path().extension() == ".csv") out[fs::relative(e.path(), root).string()] = cli::read_file(e.path());
    return out;
}

Outcome c12_determinism()
{
    const fs::path base = fs::temp_directory_path() / ("tilecrypt_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(base);
    std::ostringstream sink;
    auto* old_out = std::cout.rdbuf(sink.rdbuf());
    bool ran = false;
    try {
        ran = pipeline(base / "a") && pipeline(base / "b");
    } catch (...) {
        ran = false;
    }
    std::cout.rdbuf(old_out);
    if (!ran) {
        fs::remove_all(base);
        return {false, "pipeline command failed"};
    }
    const auto a = csv_files(base / "a");
    const auto b = csv_files(base / "b");
    std::size_t differing = 0;
    for (const auto& [name, bytes] : a) {
        const auto it = b.find(name);
        if (it == b.end() || it->second != bytes) ++differing;
    }
    const bool same_set = a.size() == b.size();
    fs::remove_all(base);
    return {same_set && differing == 0 && a.size() > 10,
            std::to_string(a.size()) + " CSV files per invocation, " + std::to_string(differing) + " differ"};
}

}  // namespace

int main()
{
    Runner runner;
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"C1 round-trip fidelity", c1_round_trip},
        {"C2 policy gate", c2_policy_gate},
        {"C3 scheme table", c3_scheme_table},
        {"C4 size-overhead ordering", c4_size_overhead},
        {"C5 geometry", c5_geometry},
        {"C6 segment counts", c6_segment_counts},
        {"C7 cache crypto ordering", [&] { return c7_cache_crypto(runner); }},
        {"C8 segment-duration gap", [&] { return c8_duration_gap(runner); }},
        {"C9 fragmentation", [&] { return c9_fragmentation(runner); }},
        {"C11 rebuffering ordering", [&] { return c11_rebuffering(runner); }},
        {"C10 accounting and warm cache", [&] { return c10_accounting(runner); }},
        {"C12 determinism", c12_determinism},
    };
    std::map<int, std::pair<std::string, Outcome>> results;
    for (const auto& [name, check] : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        o.detail += " (" + fmt(seconds_since(t0)) + " s)";
        std::cerr << "done " << name << std::endl;
        results[std::stoi(name.substr(1))] = {name, o};
    }
    std::size_t failed = 0;
    for (const auto& [id, entry] : results) {
        failed += !entry.second.pass;
        std::cout << (entry.second.pass ? "PASS " : "FAIL ") << entry.first << ": " << entry.second.detail << std::endl;
    }
    std::cout << (failed == 0 ? "ALL PASS" : std::to_string(failed) + " criteria failed") << std::endl;
    return failed == 0 ? 0 : 1;
}
