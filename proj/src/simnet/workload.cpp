#include "tilecrypt/simnet.hpp"

#include <cmath>

namespace tilecrypt::simnet {

double SimRng::exponential(double mean)
{
    // 1 - unit() lies in (0, 1], so the log is finite.
    return -mean * std::log(1.0 - unit());
}

std::vector<double> sample_arrivals(SimRng& rng, std::size_t client_count, double mean_interarrival_s)
{
    if (!(mean_interarrival_s > 0.0)) throw Error(ErrorKind::ConfigError, "mean inter-arrival time must be positive");
    std::vector<double> starts;
    starts.reserve(client_count);
    double t = 0;
    for (std::size_t i = 0; i < client_count; ++i) {
        if (i > 0) t += rng.exponential(mean_interarrival_s);
        starts.push_back(t);
    }
    return starts;
}

std::vector<double> zipf_pmf(std::size_t n, double s)
{
    if (n == 0) throw Error(ErrorKind::ConfigError, "Zipf catalog must not be empty");
    std::vector<double> p(n);
    double z = 0;
    for (std::size_t k = 0; k < n; ++k) z += p[k] = std::pow(double(k + 1), -s);
    for (double& v : p) v /= z;
    return p;
}

std::size_t sample_video(SimRng& rng, std::size_t catalog_size, double s)
{
    const auto pmf = zipf_pmf(catalog_size, s);
    const double u = rng.unit();
    double acc = 0;
    for (std::size_t k = 0; k < pmf.size(); ++k) {
        acc += pmf[k];
        if (u < acc) return k;
    }
    return pmf.size() - 1;
}

Workload Workload::for_topology(TopologyKind kind)
{
    Workload w;
    if (kind == TopologyKind::LargeScale) {
        w.mean_interarrival_s = 10.0;
        w.client_count = 80;
    }
    return w;
}

std::vector<ClientSpec> plan_clients(const Topology& topo, const Workload& wl, std::uint64_t seed)
{
    if (wl.trace_count == 0) throw Error(ErrorKind::ConfigError, "at least one head trace is required");
    std::vector<int> nodes;
    for (const auto& [node, count] : topo.clients_per_node)
        if (count > 0) nodes.push_back(node);
    if (nodes.empty()) throw Error(ErrorKind::ConfigError, "topology has no clients");

    SimRng rng(seed);
    const auto starts = sample_arrivals(rng, wl.client_count, wl.mean_interarrival_s);
    std::vector<ClientSpec> out;
    out.reserve(wl.client_count);
    for (std::size_t i = 0; i < wl.client_count; ++i) {
        ClientSpec c;
        c.index = int(i);
        // Clients fill the client nodes round-robin so every node gets load early.
        c.node = nodes[i % nodes.size()];
        c.start_s = starts[i];
        c.video = sample_video(rng, wl.videos, wl.zipf_s);
        c.trace = i % wl.trace_count;
        out.push_back(c);
    }
    return out;
}

}  // namespace tilecrypt::simnet
