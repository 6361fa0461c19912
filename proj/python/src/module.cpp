#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "tilecrypt/cli.hpp"

namespace py = pybind11;
using namespace tilecrypt;

namespace {

Bytes to_bytes(const py::bytes& b)
{
    const std::string_view v = b;
    return Bytes(v.begin(), v.end());
}

py::bytes from_bytes(const Bytes& b) { return py::bytes(reinterpret_cast<const char*>(b.data()), b.size()); }

}  // namespace

PYBIND11_MODULE(_tilecrypt, m)
{
    m.doc() = "Bindings for the tilecrypt packaging and simulation libraries.";

    m.def(
        "synth_segment", [](const std::string& spec) { return from_bytes(bitstream::synth_segment(bitstream::parse_synth_spec(spec))); },
        py::arg("spec") = "", "Synthetic fMP4 segment from key=value lines.");
    m.def(
        "frame_types",
        [](const py::bytes& seg) {
            const auto parsed = bitstream::parse_segment(to_bytes(seg));
            std::string out;
            for (std::size_t i = 0; i < parsed.samples.size(); ++i) out += bitstream::to_string(parsed.frame_type(i)).front();
            return out;
        },
        "One letter per sample: I, P, B or N.");

    m.def(
        "setup",
        [](const py::bytes& seed) {
            const auto keys = abekit::setup(abekit::seed_from_bytes(to_bytes(seed)));
            return py::make_tuple(from_bytes(keys.master.serialize()), from_bytes(keys.params.serialize()));
        },
        "Returns (master key, public params) file contents.");
    m.def("keygen", [](const py::bytes& master, const std::string& user, const std::vector<std::string>& attrs) {
        return from_bytes(abekit::keygen(abekit::MasterKey::deserialize(to_bytes(master)), user, abekit::AttributeSet(attrs.begin(), attrs.end())).serialize());
    });
    m.def(
        "encrypt_segment",
        [](const py::bytes& seg, const std::string& level, const std::string& policy, const py::bytes& master, const py::bytes& seed) {
            const auto mk = abekit::MasterKey::deserialize(to_bytes(master));
            return from_bytes(selenc::encrypt_segment(to_bytes(seg), selenc::parse_level(level), abekit::parse_policy(policy),
                                                      mk.public_params(), mk.authority(), to_bytes(seed))
                                  .bytes);
        },
        py::arg("segment"), py::arg("level"), py::arg("policy"), py::arg("master"), py::arg("seed") = py::bytes("\x01"));
    m.def("decrypt_segment", [](const py::bytes& enc, const py::bytes& key) {
        return from_bytes(selenc::decrypt_segment(to_bytes(enc), abekit::PrivateKey::deserialize(to_bytes(key))));
    });
    m.def("blob_overhead", [](const std::string& policy) { return abekit::blob_overhead(abekit::parse_policy(policy)); });

    m.def(
        "tile_coverage", [](double yaw, double pitch) { return viewport::tile_coverage(yaw, pitch); },
        "Tile id to viewport fraction on the 3x3 grid with a 120x60 degree view.");
    m.def("select_tiles", [](double yaw, double pitch) {
        const auto sel = viewport::select_tiles(viewport::tile_coverage(yaw, pitch));
        return py::make_tuple(sel.major, sel.minors);
    });

    m.def(
        "simulate",
        [](const std::string& mode, double cache_mb, const std::string& topology, double segment_duration_s, std::uint64_t seed,
           double video_duration_s, std::size_t clients) {
            simnet::RunConfig cfg;
            cfg.topology = simnet::parse_topology(topology);
            cfg.workload = simnet::Workload::for_topology(cfg.topology);
            cfg.workload.client_count = clients;
            cfg.mode = simnet::parse_mode(mode);
            cfg.cache_mb = cache_mb;
            cfg.segment_duration_s = segment_duration_s;
            cfg.seed = seed;
            cfg.video_duration_s = video_duration_s;
            simnet::DatasetSpec spec;
            spec.catalog.video_duration_s = video_duration_s;
            spec.catalog.segment_duration_s = segment_duration_s;
            spec.trace_template.duration_s = video_duration_s + 0.5;
            py::gil_scoped_release release;
            return simnet::render_metrics(simnet::run(cfg, simnet::synthetic_dataset(spec, simnet::default_policy())));
        },
        py::arg("mode") = "https", py::arg("cache_mb") = 100.0, py::arg("topology") = "small", py::arg("segment_duration_s") = 2.0,
        py::arg("seed") = 1, py::arg("video_duration_s") = 293.0, py::arg("clients") = 30, "Metrics CSV of one synthetic run.");

    m.def(
        "main",
        [](std::vector<std::string> args) {
            args.insert(args.begin(), "tilecrypt");
            std::vector<char*> argv;
            for (auto& a : args) argv.push_back(a.data());
            return cli::run(int(argv.size()), argv.data());
        },
        "Runs one tilecrypt command; returns the exit code.");
}
