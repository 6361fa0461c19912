#pragma once

// Batch commands wiring the libraries into key setup, packaging, viewport
// mapping, simulation sweeps and reporting. Every command writes its outputs
// through temporary files and renames them into place only on success.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tilecrypt/abekit.hpp"
#include "tilecrypt/bitstream.hpp"
#include "tilecrypt/selenc.hpp"
#include "tilecrypt/simnet.hpp"
#include "tilecrypt/viewport.hpp"

namespace tilecrypt::cli {

namespace fs = std::filesystem;
using selenc::EncryptionLevel;
using bitstream::FrameType;

enum class ErrorKind { IoError, ConfigError, MissingSegment, UsageError };

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what);
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

// ---------------------------------------------------------------- io

Bytes read_file(const fs::path& path);
std::string read_text(const fs::path& path);
// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const fs::path& path, ByteView data);
void write_text_atomic(const fs::path& path, std::string_view text);

// Collects files in a hidden staging directory under `target`; commit()
// moves them into `target`, otherwise the destructor discards them.
class StagedOutput {
public:
    explicit StagedOutput(fs::path target);
    ~StagedOutput();
    StagedOutput(const StagedOutput&) = delete;
    StagedOutput& operator=(const StagedOutput&) = delete;

    fs::path path_for(const fs::path& relative) const;
    void write(const fs::path& relative, ByteView data) const;
    void write_text(const fs::path& relative, std::string_view text) const;
    void commit();
    const fs::path& target() const { return target_; }

private:
    fs::path target_;
    fs::path staging_;
    bool committed_ = false;
};

// Files matching a shell glob, sorted; empty when nothing matches.
std::vector<fs::path> glob_paths(const std::string& pattern);

// ---------------------------------------------------------------- commands

struct SetupOptions {
    std::optional<fs::path> seed_file;
    std::optional<std::uint64_t> seed;
    fs::path out_dir;
};
// Returns {master key path, public params path}.
std::pair<fs::path, fs::path> cmd_setup(const SetupOptions& o);

struct KeygenOptions {
    fs::path master;
    std::string user_id;
    std::vector<std::string> attributes;
    fs::path out;
};
void cmd_keygen(const KeygenOptions& o);

struct EncryptSegOptions {
    fs::path in;
    fs::path out;
    fs::path master;
    std::string policy = "subscriber";
    EncryptionLevel level = EncryptionLevel::AllIP;
    std::uint64_t seed = 1;
};
selenc::EncryptedSegment cmd_encrypt_seg(const EncryptSegOptions& o);

struct DecryptSegOptions {
    fs::path in;
    fs::path key;
    fs::path out;
};
void cmd_decrypt_seg(const DecryptSegOptions& o);

struct PackOptions {
    fs::path dataset;
    fs::path selections;  // a selections CSV or a directory of them
    fs::path master;
    fs::path out;
    selenc::SchemeId scheme = selenc::SchemeId::AllIP;
    std::string policy = "subscriber";
    std::uint64_t seed = 1;
    double segment_duration_s = 2.0;
    std::size_t jobs = 1;
};

struct PackResult {
    std::size_t inputs = 0;
    std::size_t outputs = 0;  // encrypted or copied segment files
    std::size_t mpds = 0;
    std::string video_id;
    fs::path manifest;
};
// Encrypts every input segment at each level the scheme assigns to viewport
// tiles, writes one MPD per selections file and the size manifest.
PackResult cmd_pack(const PackOptions& o);

struct TraceOptions {
    std::vector<fs::path> inputs;  // head-trace CSVs or directories of them
    double segment_duration_s = 2.0;
    std::optional<double> video_duration_s = 293.0;
    bool aggregate = false;
    fs::path out;  // directory
};
// Writes one selections CSV per trace (or one aggregate); returns the count.
std::size_t cmd_trace(const TraceOptions& o);

struct SimulateOptions {
    fs::path config;
    std::optional<std::string> mode;
    std::optional<double> cache_mb;
    std::optional<std::string> topology;
    std::optional<double> segment_duration_s;
    std::optional<std::uint64_t> seed;
    std::optional<fs::path> out;
    std::size_t jobs = 1;
};

struct WorkloadOverrides {
    std::optional<std::size_t> videos;
    std::optional<double> zipf_s;
    std::optional<double> mean_interarrival_s;
    std::optional<std::size_t> client_count;
    std::optional<std::size_t> trace_count;
};

// Parsed simulation configuration.
struct SimPlan {
    simnet::RunConfig base;  // per-run fields are filled from each RunKey
    simnet::SweepSpec sweep;
    std::optional<std::vector<std::uint64_t>> seeds;  // explicit seeds for every run
    WorkloadOverrides workload;
    fs::path out_dir = "results";
    // Dataset source: synthetic unless a manifest is given.
    simnet::DatasetSpec synthetic;
    std::optional<fs::path> manifest;
    std::optional<fs::path> selections;
    std::string video_id = "help";
};

SimPlan load_sim_plan(std::string_view json_text, const fs::path& base_dir);
void apply_overrides(SimPlan& plan, const SimulateOptions& o);
std::vector<simnet::RunKey> plan_runs(const SimPlan& plan);
simnet::RunConfig run_config(const SimPlan& plan, const simnet::RunKey& key);
simnet::CostModel parse_cost_model(std::string_view json_text);
std::string run_file_name(const simnet::RunKey& key);
// Returns the metrics files written, in run order.
std::vector<fs::path> cmd_simulate(const SimulateOptions& o);

struct ReportOptions {
    std::string glob;
    fs::path out;
};
std::size_t cmd_report(const ReportOptions& o);  // returns the number of input files

struct SynthSegmentOptions {
    std::string spec;  // key=value lines understood by parse_synth_spec
    fs::path out;
};
void cmd_synth_segment(const SynthSegmentOptions& o);

struct SynthDatasetOptions {
    std::string video_id = "help";
    double segment_duration_s = 2.0;
    double video_duration_s = 293.0;
    std::optional<std::size_t> segments;  // limits the segment count
    double byte_scale = 1.0;              // scales every frame size
    std::string pattern = "P";
    std::uint64_t seed = 1;
    fs::path out;
};
std::size_t cmd_synth_dataset(const SynthDatasetOptions& o);  // returns files written

struct SynthTracesOptions {
    std::size_t count = 40;
    std::uint64_t seed = 1000;
    double duration_s = 293.5;
    fs::path out;
};
std::size_t cmd_synth_traces(const SynthTracesOptions& o);

// Builds the simulation dataset described by a plan for one segment duration.
simnet::Dataset load_dataset(const SimPlan& plan, double segment_duration_s);

// Entry point: parses argv, runs one command, prints errors to stderr.
// Returns 0 on success, 1 on a command error, 2 on a usage error.
int run(int argc, char** argv);

}  // namespace tilecrypt::cli
