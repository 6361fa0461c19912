#include <doctest.h>

#include "tilecrypt/cli.hpp"

#include <unistd.h>

#include <fstream>

using namespace tilecrypt;
using namespace tilecrypt::cli;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag)
        : path(fs::temp_directory_path() / ("tilecrypt_cli_" + tag + "_" + std::to_string(::getpid())))
    {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::size_t count_files(const fs::path& dir)
{
    if (!fs::exists(dir)) return 0;
    std::size_t n = 0;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file()) ++n;
    return n;
}

template <class F>
ErrorKind error_of(F&& f)
{
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected a cli::Error");
    return ErrorKind::UsageError;
}

// Small packaging fixture: keys, a 3-segment dataset and two traces' selections.
struct Pipeline {
    TempDir dir;
    fs::path keys, plain, traces, selections;

    explicit Pipeline(const std::string& tag) : dir(tag)
    {
        keys = dir.path / "keys";
        plain = dir.path / "plain";
        traces = dir.path / "traces";
        selections = dir.path / "selections";
        SetupOptions s;
        s.seed = 42;
        s.out_dir = keys;
        cmd_setup(s);
        SynthDatasetOptions d;
        d.video_id = "demo";
        d.video_duration_s = 6.0;
        d.byte_scale = 0.01;
        d.out = plain;
        CHECK(cmd_synth_dataset(d) == 9 * 4 * 3);
        SynthTracesOptions t;
        t.count = 2;
        t.duration_s = 6.5;
        t.out = traces;
        CHECK(cmd_synth_traces(t) == 2);
        TraceOptions tr;
        tr.inputs = {traces};
        tr.video_duration_s = 6.0;
        tr.out = selections;
        CHECK(cmd_trace(tr) == 2);
    }

    PackResult pack(const fs::path& out, std::size_t jobs = 1) const
    {
        PackOptions p;
        p.dataset = plain;
        p.selections = selections;
        p.master = keys / "master.key";
        p.out = out;
        p.scheme = selenc::SchemeId::MajorAllP;
        p.jobs = jobs;
        return cmd_pack(p);
    }

    fs::path write_config(const fs::path& packed, const fs::path& results) const
    {
        const fs::path cfg = dir.path / ("sim_" + results.filename().string() + ".json");
        std::ofstream(cfg) << R"({"topology": "small", "modes": ["https", "abe-majorP"], "segment_duration_s": 2,)"
                           << R"( "cache_mb": [0, 5], "seeds": [1], "video_duration_s": 6,)"
                           << R"( "workload": {"videos": 1, "client_count": 4, "trace_count": 2},)"
                           << R"( "dataset": {"manifest": ")" << (packed / "sizes.csv").string() << R"(", "selections": ")"
                           << selections.string() << R"(", "video_id": "demo"}, "out": ")" << results.string() << "\"}";
        return cfg;
    }
};

}  // namespace

TEST_CASE("setup is reproducible from a seed and rejects bad inputs")
{
    TempDir d("setup");
    SetupOptions a;
    a.seed = 7;
    a.out_dir = d.path / "a";
    SetupOptions b = a;
    b.out_dir = d.path / "b";
    const auto [ma, pa] = cmd_setup(a);
    const auto [mb, pb] = cmd_setup(b);
    CHECK(read_file(ma) == read_file(mb));
    CHECK(read_file(pa) == read_file(pb));

    SetupOptions missing;
    missing.seed_file = d.path / "nope.bin";
    missing.out_dir = d.path / "c";
    CHECK(error_of([&] { cmd_setup(missing); }) == ErrorKind::IoError);
    CHECK_FALSE(fs::exists(d.path / "c" / "master.key"));

    SetupOptions both = missing;
    both.seed = 1;
    CHECK(error_of([&] { cmd_setup(both); }) == ErrorKind::UsageError);
    SetupOptions neither;
    neither.out_dir = d.path / "d";
    CHECK(error_of([&] { cmd_setup(neither); }) == ErrorKind::UsageError);
}

TEST_CASE("keygen, encrypt-seg and decrypt-seg round trip through files")
{
    TempDir d("seg");
    SetupOptions s;
    s.seed = 3;
    s.out_dir = d.path;
    const auto [master, params] = cmd_setup(s);
    SynthSegmentOptions seg;
    seg.spec = "pattern=PB\nsize_seed=4\n";
    seg.out = d.path / "plain.m4s";
    cmd_synth_segment(seg);

    EncryptSegOptions e;
    e.in = seg.out;
    e.out = d.path / "enc.m4s";
    e.master = master;
    const auto enc = cmd_encrypt_seg(e);
    CHECK(enc.blob_count > 0);
    CHECK(read_file(e.out) == enc.bytes);

    KeygenOptions k;
    k.master = master;
    k.user_id = "alice";
    k.attributes = {"subscriber"};
    k.out = d.path / "alice.key";
    cmd_keygen(k);
    DecryptSegOptions dec;
    dec.in = e.out;
    dec.key = k.out;
    dec.out = d.path / "dec.m4s";
    cmd_decrypt_seg(dec);
    CHECK(read_file(dec.out) == read_file(seg.out));

    k.attributes = {"guest"};
    k.out = d.path / "guest.key";
    cmd_keygen(k);
    dec.key = k.out;
    dec.out = d.path / "guest.m4s";
    CHECK_THROWS(cmd_decrypt_seg(dec));
    CHECK_FALSE(fs::exists(dec.out));
}

TEST_CASE("pack writes every level, MPDs and a manifest")
{
    Pipeline p("pack");
    const PackResult r = p.pack(p.dir.path / "packed", 2);
    CHECK(r.inputs == 108);
    CHECK(r.video_id == "demo");
    // MajorP encrypts every input at allI+P and allI.
    CHECK(r.outputs == 2 * 108);
    CHECK(r.mpds == 2);
    CHECK(fs::exists(p.dir.path / "packed" / "segments" / "demo_5_0_1_allI+P.m4s"));
    CHECK(fs::exists(p.dir.path / "packed" / "segments" / "demo_5_0_1_allI.m4s"));
    const auto rows = simnet::parse_manifest(read_text(r.manifest));
    CHECK(rows.size() == 3 * 108);
    for (const auto& row : rows) {
        if (row.level == EncryptionLevel::None) CHECK(row.bytes == row.original_bytes);
        else CHECK(row.bytes > row.original_bytes);
    }

    // Same inputs and seed give byte-identical outputs regardless of jobs.
    const PackResult again = p.pack(p.dir.path / "packed1", 1);
    CHECK(read_text(again.manifest) == read_text(r.manifest));

    fs::remove(p.plain / "demo_3_1_2.m4s");
    CHECK(error_of([&] { p.pack(p.dir.path / "broken"); }) == ErrorKind::MissingSegment);
    CHECK(count_files(p.dir.path / "broken") == 0);
}

TEST_CASE("simulate plans and report")
{
    const SimPlan small = load_sim_plan(read_text(fs::path(TILECRYPT_SOURCE_DIR) / "configs" / "small_sweep.json"),
                                        fs::path(TILECRYPT_SOURCE_DIR) / "configs");
    CHECK(plan_runs(small).size() == 13 * 3 * 2);
    const SimPlan large = load_sim_plan(read_text(fs::path(TILECRYPT_SOURCE_DIR) / "configs" / "large_sweep.json"),
                                        fs::path(TILECRYPT_SOURCE_DIR) / "configs");
    CHECK(plan_runs(large).size() == 14 * 3 * 2);
    CHECK_THROWS_AS(load_sim_plan("{\"topology\": \"small\", \"modes\": [\"tls\"]}", "."), Error);
    CHECK_THROWS(load_sim_plan("not json", "."));

    TempDir d("report");
    ReportOptions empty;
    empty.glob = (d.path / "run_*.csv").string();
    empty.out = d.path / "report.csv";
    CHECK(error_of([&] { cmd_report(empty); }) == ErrorKind::ConfigError);
    CHECK_FALSE(fs::exists(empty.out));
}

TEST_CASE("end-to-end pipeline is deterministic")
{
    Pipeline p("e2e");
    const PackResult packed = p.pack(p.dir.path / "packed");
    std::vector<std::string> reports;
    for (const char* name : {"r1", "r2"}) {
        SimulateOptions s;
        s.config = p.write_config(p.dir.path / "packed", p.dir.path / name);
        s.jobs = 2;
        const auto files = cmd_simulate(s);
        CHECK(files.size() == 4);
        ReportOptions r;
        r.glob = (p.dir.path / name / "run_*.csv").string();
        r.out = p.dir.path / (std::string(name) + ".csv");
        CHECK(cmd_report(r) == 4);
        reports.push_back(read_text(r.out));
    }
    CHECK(reports[0] == reports[1]);
    CHECK(reports[0].find("abe-majorP") != std::string::npos);
    (void)packed;
}

TEST_CASE("argv entry point exit codes")
{
    TempDir d("argv");
    const std::string out = (d.path / "k").string();
    std::vector<std::string> ok{"tilecrypt", "setup", "--seed", "5", "--out", out};
    std::vector<std::string> bad{"tilecrypt", "setup", "--bogus"};
    std::vector<std::string> missing{"tilecrypt", "report", "--glob", (d.path / "none_*.csv").string(), "--out",
                                     (d.path / "r.csv").string()};
    auto call = [](std::vector<std::string> args) {
        std::vector<char*> argv;
        for (auto& a : args) argv.push_back(a.data());
        return run(int(argv.size()), argv.data());
    };
    CHECK(call(ok) == 0);
    CHECK(fs::exists(d.path / "k" / "master.key"));
    CHECK(call(bad) == 2);
    CHECK(call(missing) == 1);
}
