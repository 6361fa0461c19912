#include <doctest.h>

#include "tilecrypt/viewport.hpp"

#include <cmath>
#include <random>

using namespace tilecrypt;
using namespace tilecrypt::viewport;

namespace {

// Stratified jittered sampling of the viewport rectangle; each point is
// assigned to the tile that contains it.
Coverage monte_carlo(double yaw, double pitch, const TileGrid& g, const FieldOfView& fov, int n)
{
    std::mt19937_64 rng(77);
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
    Coverage c;
    for (const auto& [t, k] : counts) c[t] = k / double(n) / double(n);
    return c;
}

double total(const Coverage& c)
{
    double s = 0;
    for (const auto& [t, v] : c) s += v;
    return s;
}

double at(const Coverage& c, int tile)
{
    auto it = c.find(tile);
    return it == c.end() ? 0.0 : it->second;
}

std::vector<HeadSample> constant_trace(double duration, double yaw, double pitch)
{
    std::vector<HeadSample> t;
    for (int i = 0; i * 0.1 <= duration + 1e-9; ++i) t.push_back({i * 0.1, yaw, pitch});
    return t;
}

}  // namespace

TEST_CASE("tile grid basics")
{
    TileGrid g;
    CHECK(g.tile_count() == 9);
    CHECK(g.tile_id(1, 1) == 5);
    CHECK(g.center(5) == std::pair<double, double>{0.0, 0.0});
    CHECK(g.neighbors(5) == std::vector<int>{1, 2, 3, 4, 6, 7, 8, 9});
    // Horizontal wrap: tile 4 (middle row, left) touches tile 6.
    const auto n4 = g.neighbors(4);
    CHECK(std::find(n4.begin(), n4.end(), 6) != n4.end());
}

TEST_CASE("tile_coverage examples")
{
    const Coverage center = tile_coverage(0, 0);
    CHECK(center.size() == 1);
    CHECK(at(center, 5) == doctest::Approx(1.0).epsilon(1e-12));

    // Corner shared by tiles 5, 6, 8, 9: yaw 60, pitch -30.
    const Coverage corner = tile_coverage(60, -30);
    for (int t : {5, 6, 8, 9}) CHECK(std::abs(at(corner, t) - 0.25) <= 1e-9);
    CHECK(std::abs(total(corner) - 1.0) <= 1e-9);

    CHECK_THROWS_AS(tile_coverage(180, 0), Error);
    CHECK_THROWS_AS(tile_coverage(0, 91), Error);
}

TEST_CASE("wrap seam agrees with the Monte-Carlo oracle")
{
    const TileGrid g;
    const FieldOfView fov;
    for (auto [yaw, pitch] : {std::pair{179.0, 0.0}, std::pair{-179.5, 20.0}, std::pair{175.0, -75.0}, std::pair{-150.0, 88.0}}) {
        const Coverage exact = tile_coverage(yaw, pitch, g, fov);
        const Coverage mc = monte_carlo(yaw, pitch, g, fov, 400);
        for (int t = 1; t <= 9; ++t) {
            CAPTURE(yaw);
            CAPTURE(t);
            CHECK(std::abs(at(exact, t) - at(mc, t)) <= 1e-3);
        }
    }
}

TEST_CASE("property: coverage sums to one and shifts by a tile width permute columns")
{
    const TileGrid g;
    for (int yaw = -180; yaw < 180; yaw += 7) {
        for (int pitch = -90; pitch <= 90; pitch += 5) {
            const Coverage c = tile_coverage(yaw, pitch);
            CHECK(std::abs(total(c) - 1.0) <= 1e-9);
            for (const auto& [t, v] : c) CHECK(v >= 0.0);
            double shifted_yaw = yaw + 120.0;
            if (shifted_yaw >= 180.0) shifted_yaw -= 360.0;
            const Coverage s = tile_coverage(shifted_yaw, pitch);
            for (const auto& [t, v] : c) {
                const int moved = g.tile_id(g.row_of(t), (g.col_of(t) + 1) % g.cols);
                CHECK(std::abs(at(s, moved) - v) <= 1e-9);
            }
        }
    }
}

TEST_CASE("select_tiles")
{
    TileSelection a = select_tiles({{5, 0.6}, {6, 0.2}, {8, 0.15}, {9, 0.05}});
    CHECK(a.major == 5);
    CHECK(a.minors == std::array<int, 3>{6, 8, 9});
    TileSelection tie = select_tiles({{5, 0.25}, {6, 0.25}, {8, 0.25}, {9, 0.25}});
    CHECK(tie.major == 5);
    TileSelection pad = select_tiles({{5, 1.0}});
    CHECK(pad.major == 5);
    CHECK(pad.minors == std::array<int, 3>{1, 2, 3});
    CHECK_THROWS_AS(select_tiles({}), Error);

    // Scale invariance.
    std::mt19937_64 rng(3);
    for (int i = 0; i < 50; ++i) {
        Coverage c;
        for (int t = 1; t <= 9; ++t)
            if (rng() % 2) c[t] = double(rng() % 1000 + 1);
        if (c.empty()) continue;
        Coverage scaled;
        for (const auto& [t, v] : c) scaled[t] = v * 3.7;
        CHECK(select_tiles(c) == select_tiles(scaled));
        const auto tiles = select_tiles(c).tiles();
        std::set<int> distinct(tiles.begin(), tiles.end());
        CHECK(distinct.size() == 4);
    }
}

TEST_CASE("apply_scheme and roles")
{
    TileSelection s = select_tiles({{5, 0.6}, {6, 0.2}, {8, 0.15}, {9, 0.05}});
    apply_scheme(s, SchemeId::MajorAllP);
    CHECK(s.levels.at(5) == EncryptionLevel::AllIP);
    for (int t : {6, 8, 9}) CHECK(s.levels.at(t) == EncryptionLevel::AllI);
    CHECK(s.role_of(5) == TileRole::Major);
    CHECK(s.role_of(6) == TileRole::Minor);
    CHECK(s.role_of(1) == TileRole::NonViewport);
}

TEST_CASE("per-segment selection")
{
    SelectionOptions opts;
    opts.video_duration_s = 293.0;
    const auto still = per_segment_selection(constant_trace(293.5, 10, 5), opts);
    CHECK(still.size() == 147);
    for (const auto& s : still) {
        CHECK(s.major == still.front().major);
        CHECK(s.minors == still.front().minors);
    }
    opts.segment_duration_s = 4.0;
    CHECK(per_segment_selection(constant_trace(293.5, 10, 5), opts).size() == 74);
    CHECK(segment_count(293.4, opts) == 74);

    // Two samples with disjoint single-tile coverage average to a tie.
    SelectionOptions one;
    one.segment_duration_s = 2.0;
    const std::vector<HeadSample> pair{{0.0, 0.0, 0.0}, {1.0, 120.0, 0.0}};
    const auto w = window_coverage(pair, one);
    REQUIRE(w.size() == 1);
    CHECK(at(w[0], 5) == doctest::Approx(0.5));
    CHECK(at(w[0], 6) == doctest::Approx(0.5));
    CHECK(per_segment_selection(pair, one)[0].major == 5);

    // A gap leaves a window empty.
    const std::vector<HeadSample> gap{{0.0, 0, 0}, {5.0, 0, 0}};
    try {
        per_segment_selection(gap, one);
        FAIL("expected EmptyWindow");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::EmptyWindow);
    }

    const auto agg = aggregate_selection({constant_trace(10, 0, 0), constant_trace(10, 0, 0)}, one);
    CHECK(agg.size() == 6);
}

TEST_CASE("head traces")
{
    const auto one = parse_headtrace("t,yaw,pitch\n0.0,0,0\n");
    REQUIRE(one.size() == 1);
    CHECK(one[0] == HeadSample{0, 0, 0});
    try {
        parse_headtrace("t,yaw,pitch\n0.0,200,0\n");
        FAIL("expected BadRow");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::BadRow);
    }
    try {
        parse_headtrace("t,yaw,pitch\n1.0,0,0\n0.5,0,0\n");
        FAIL("expected NonMonotoneTime");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NonMonotoneTime);
    }
    HeadTraceSpec spec;
    const auto synth = synth_headtrace(spec);
    CHECK(synth.size() == 2935);
    CHECK(parse_headtrace(render_headtrace(synth)) == synth);
    SelectionOptions opts;
    opts.video_duration_s = 293.0;
    CHECK(per_segment_selection(synth, opts).size() == 147);
    CHECK(synth_headtrace(spec) == synth);
}

TEST_CASE("selections CSV round trip")
{
    HeadTraceSpec spec;
    spec.duration_s = 30;
    const auto sel = per_segment_selection(synth_headtrace(spec), SelectionOptions{});
    CHECK(parse_selections(render_selections(sel)) == sel);
    CHECK_THROWS_AS(parse_selections("segment,major,minor1,minor2,minor3\n0,5,5,6,8\n"), Error);
}

TEST_CASE("segment URLs")
{
    const SegmentUrl u{"help", 5, 12, 3, EncryptionLevel::AllIP};
    CHECK(segment_url(u) == "help_5_12_3_allI+P.m4s");
    CHECK(parse_segment_url(segment_url(u)) == u);
    CHECK(parse_segment_url("help-2_9_0_1.m4s") == SegmentUrl{"help-2", 9, 0, 1, EncryptionLevel::None});
    CHECK_THROWS_AS(parse_segment_url("help_5_12_3_allX.m4s"), Error);
}

TEST_CASE("build_mpd and parse_mpd")
{
    const auto& q = default_qualities();
    REQUIRE(q.size() == 4);
    CHECK(q[3].bitrate_bps == 3'000'000);
    CHECK(q[0].resolution == "480x240");

    TileSelection s = select_tiles({{5, 0.6}, {6, 0.2}, {8, 0.15}, {9, 0.05}});
    const MpdModel m = build_mpd("help", {s}, q, SchemeId::MajorAllP, 2.0);
    REQUIRE(m.adaptation_sets.size() == 4);
    CHECK(m.adaptation_sets[3].bandwidth_bps == 12'000'000);
    for (const auto& as : m.adaptation_sets) {
        for (const auto& rep : as.representations) {
            const std::string& url = rep.urls.at(0);
            const bool major = rep.slot == 0;
            CHECK(url.ends_with(major ? "_allI+P.m4s" : "_allI.m4s"));
            CHECK(parse_segment_url(url).tile == s.tiles()[std::size_t(rep.slot)]);
        }
    }
    CHECK(parse_mpd(render_mpd(m)) == m);

    const MpdModel full = build_mpd("help", {s}, q, SchemeId::Full, 2.0);
    for (const auto& as : full.adaptation_sets)
        for (const auto& rep : as.representations) CHECK(rep.urls.at(0).ends_with("_full.m4s"));

    // Randomized round trips.
    HeadTraceSpec spec;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        spec.seed = seed;
        spec.duration_s = 20;
        const auto sel = per_segment_selection(synth_headtrace(spec), SelectionOptions{});
        std::array<double, 4> overhead{0.0, 0.01 * double(seed), 0.02 * double(seed), 0.05};
        const MpdModel r = build_mpd("v" + std::to_string(seed), sel, q, selenc::kAllSchemes[seed % 4], seed % 2 ? 2.0 : 4.0, overhead);
        CHECK(parse_mpd(render_mpd(r)) == r);
    }

    // Broken invariants are schema errors.
    std::string text = render_mpd(m);
    const auto pos = text.find("12000000");
    REQUIRE(pos != std::string::npos);
    std::string bad_bw = text;
    bad_bw.replace(pos, 8, "12000001");
    CHECK_THROWS_AS(parse_mpd(bad_bw), Error);
    std::string bad_suffix = text;
    const auto sfx = bad_suffix.find("_allI.m4s");
    REQUIRE(sfx != std::string::npos);
    bad_suffix.replace(sfx, 9, "_allZ.m4s");
    CHECK_THROWS_AS(parse_mpd(bad_suffix), Error);
}
