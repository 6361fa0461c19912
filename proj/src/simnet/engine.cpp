#include "tilecrypt/simnet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <set>

namespace tilecrypt::simnet {

double Metrics::cache_crypto_work() const
{
    double w = 0;
    for (const auto& c : caches) w += c.crypto_work;
    return w;
}

double Metrics::cache_cpu_work() const
{
    double w = 0;
    for (const auto& c : caches) w += c.cpu_work;
    return w;
}

double Metrics::mean_rebuffer_ratio() const
{
    if (clients.empty()) return 0;
    double s = 0;
    for (const auto& c : clients) s += c.rebuffer_ratio;
    return s / double(clients.size());
}

double Metrics::mean_hit_rate() const
{
    if (caches.empty()) return 0;
    double s = 0;
    for (const auto& c : caches) s += c.hit_rate();
    return s / double(caches.size());
}

void CostModel::validate() const
{
    const double v[] = {tls_handshake_units, tls_per_byte, abe_per_frame, abe_per_byte, http_per_request, io_per_byte};
    for (double x : v)
        if (!(x >= 0.0) || !std::isfinite(x)) throw Error(ErrorKind::ConfigError, "cost model entries must be finite and non-negative");
    if (!(client_work_rate > 0.0)) throw Error(ErrorKind::ConfigError, "client work rate must be positive");
}

const abekit::AccessPolicy& default_policy()
{
    static const abekit::AccessPolicy p(abekit::PolicyNode::leaf("subscriber"));
    return p;
}

Dataset synthetic_dataset(const DatasetSpec& spec, const abekit::AccessPolicy& policy)
{
    Dataset d;
    d.catalog = std::make_shared<const Catalog>(synthetic_catalog(spec.catalog, abekit::blob_overhead(policy)));
    viewport::SelectionOptions opts;
    opts.segment_duration_s = spec.catalog.segment_duration_s;
    opts.video_duration_s = spec.catalog.video_duration_s;
    for (std::size_t i = 0; i < spec.traces; ++i) {
        viewport::HeadTraceSpec ts = spec.trace_template;
        ts.seed = spec.trace_seed + i;
        d.selections.push_back(viewport::per_segment_selection(viewport::synth_headtrace(ts), opts));
    }
    return d;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kCatchUpEps = 1e-6;   // bytes; a reader this close to its writer follows it
constexpr double kCompleteEps = 1e-3;  // bytes left when a flow counts as finished

struct Flow {
    int link = 0;
    int src_node = 0;
    int dst_node = 0;
    std::uint64_t object = 0;
    double size = 0;
    double delivered = 0;
    double rate = 0;
    int source = -1;
    bool active = true;
    bool fill = false;  // cache fill (else a client tile download)
    int client = -1;
    std::vector<int> dependents;
};

enum class EventType { ClientStart, ClientRequest, SegmentReady };

struct Event {
    double t;
    std::uint64_t seq;
    EventType type;
    int client;
    bool operator>(const Event& o) const { return t != o.t ? t > o.t : seq > o.seq; }
};

struct ClientRt {
    ClientSpec spec;
    const ClientPlan* plan = nullptr;
    Playback playback{2.0, 1, 2, 293.0};
    std::vector<double> throughput;
    std::vector<int> chosen;  // 1-based quality per segment, from the first pass
    std::size_t next_segment = 0;
    int pending = 0;
    double request_t = 0;
    double segment_bytes = 0;
    double segment_decrypt_work = 0;
    double quality_sum = 0;
    double bitrate_sum = 0;
    std::uint64_t bytes_received = 0;
    std::uint64_t bytes_requested = 0;
    double crypto_work = 0;
};

class Engine {
public:
    Engine(const RunConfig& cfg, const Dataset& data)
        : cfg_(cfg), data_(data), cat_(*data.catalog), topo_(build_topology(cfg.topology, cfg.topology_options))
    {
        cfg_.cost.validate();
        if (std::abs(cat_.segment_duration_s() - cfg.segment_duration_s) > 1e-9) {
            throw Error(ErrorKind::ConfigError, "dataset segment duration does not match the run");
        }
        if (data.selections.empty()) throw Error(ErrorKind::ConfigError, "dataset has no head traces");
        if (cfg.passes == 0) throw Error(ErrorKind::ConfigError, "at least one pass is required");
        if (!(cfg.buffer_cap_s >= cfg.segment_duration_s)) throw Error(ErrorKind::ConfigError, "buffer cap below one segment");
        if (!(cfg.bin_s > 0.0)) throw Error(ErrorKind::ConfigError, "bin width must be positive");

        for (const auto& n : topo_.nodes) {
            NodeMetrics m;
            m.name = n.name;
            m.kind = n.kind;
            nodes_.push_back(m);
            caches_.emplace_back(n.kind == NodeKind::Cache ? cfg.cache_bytes() : 0);
            CacheMetrics cm;
            cm.name = n.name;
            cache_metrics_.push_back(cm);
        }
        link_flows_.resize(topo_.links.size());
        link_order_.resize(topo_.links.size());
        for (std::size_t i = 0; i < link_order_.size(); ++i) link_order_[i] = int(i);
        std::stable_sort(link_order_.begin(), link_order_.end(),
                         [this](int a, int b) { return topo_.nodes[topo_.links[a].child].depth < topo_.nodes[topo_.links[b].child].depth; });

        Workload wl = cfg.workload;
        const auto specs = plan_clients(topo_, wl, cfg.seed);
        for (const auto& s : specs) {
            const std::size_t trace = s.trace % data.selections.size();
            const auto key = std::make_pair(s.video, trace);
            if (!plans_.contains(key)) plans_.emplace(key, make_plan(data.selections[trace], cfg.mode, s.video, trace));
            ClientRt c;
            c.spec = s;
            c.spec.trace = trace;
            c.plan = &plans_.at(key);
            if (c.plan->segments.size() != cat_.segment_count()) {
                throw Error(ErrorKind::ConfigError, "head trace selections do not match the catalog segment count");
            }
            clients_.push_back(std::move(c));
        }
    }

    Metrics run()
    {
        double pass_start = 0;
        for (std::size_t pass = 0; pass < cfg_.passes; ++pass) {
            measured_ = pass + 1 == cfg_.passes;
            replay_ = pass > 0 && cfg_.replay_measured_pass;
            first_pass_ = pass == 0;
            sessions_.clear();
            if (measured_) measured_start_ = pass_start;
            for (std::size_t i = 0; i < clients_.size(); ++i) {
                ClientRt& c = clients_[i];
                c.playback = Playback(cat_.segment_duration_s(), cat_.segment_count(), cfg_.startup_segments, cfg_.video_duration_s);
                c.throughput.clear();
                c.next_segment = 0;
                c.pending = 0;
                c.quality_sum = c.bitrate_sum = 0;
                c.bytes_received = c.bytes_requested = 0;
                c.crypto_work = 0;
                push({pass_start + c.spec.start_s, 0, EventType::ClientStart, int(i)});
            }
            loop();
            pass_start = now_;
        }
        return collect();
    }

private:
    void push(Event e)
    {
        e.seq = seq_++;
        queue_.push(e);
    }

    // ---- work accounting

    void charge_node(int node, double crypto, double other)
    {
        if (!measured_) return;
        NodeMetrics& m = nodes_[node];
        m.crypto_work += crypto;
        m.cpu_work += crypto + other;
        const double rel = std::max(0.0, now_ - measured_start_);
        const auto bin = static_cast<std::size_t>(rel / cfg_.bin_s);
        if (m.cpu_bins.size() <= bin) m.cpu_bins.resize(bin + 1, 0.0);
        m.cpu_bins[bin] += crypto + other;
        if (topo_.nodes[node].kind == NodeKind::Cache) {
            cache_metrics_[node].crypto_work += crypto;
            cache_metrics_[node].cpu_work += crypto + other;
        }
    }

    void charge_client(int client, double crypto)
    {
        if (!measured_) return;
        clients_[client].crypto_work += crypto;
        charge_node(clients_[client].spec.node, crypto, 0.0);
    }

    // Handshake cost due for a requester/server pair under the session policy.
    double handshake(long requester, int server)
    {
        if (cfg_.cost.handshake_per_request) return cfg_.cost.tls_handshake_units;
        return sessions_.insert({requester, server}).second ? cfg_.cost.tls_handshake_units : 0.0;
    }

    // Costs of one HTTP(S) response of `size` bytes from `server`. The server
    // encrypts and pays the handshake; the returned amount is the requester's
    // decrypt cost.
    double charge_response(int server, long requester, double size)
    {
        const CostModel& c = cfg_.cost;
        double tls = 0;
        if (!is_abe(cfg_.mode)) tls = c.tls_per_byte * size + handshake(requester, server);
        charge_node(server, tls, c.http_per_request + c.io_per_byte * size);
        return is_abe(cfg_.mode) ? 0.0 : c.tls_per_byte * size;
    }

    void log(int node, std::uint64_t object, LookupResult r, bool from_origin)
    {
        if (!measured_ || !cfg_.request_log) return;
        log_.push_back({now_, topo_.nodes[node].name, object_url(cat_, object), r, from_origin});
    }

    // ---- serving

    // Returns the flow the requester's download must trail, or -1 when the
    // bytes are available at `node` already.
    int serve(int node, long requester, std::uint64_t object, double size, double* requester_tls)
    {
        if (topo_.nodes[node].kind == NodeKind::Origin) {
            *requester_tls = charge_response(node, requester, size);
            if (measured_) origin_bytes_ += std::uint64_t(size);
            log(node, object, LookupResult::Miss, true);
            return -1;
        }
        CacheState& cache = caches_[node];
        CacheMetrics& cm = cache_metrics_[node];
        const LookupResult r = cache.lookup(object);
        if (measured_) {
            ++cm.requests;
            cm.served_bytes += std::uint64_t(size);
        }
        log(node, object, r, false);
        *requester_tls = charge_response(node, requester, size);
        switch (r) {
        case LookupResult::Hit:
            if (measured_) ++cm.hits;
            return -1;
        case LookupResult::RwwHit:
            if (measured_) ++cm.rww_hits;
            return *cache.in_flight(object);
        case LookupResult::Miss: break;
        }
        if (measured_) {
            ++cm.misses;
            cm.miss_bytes += std::uint64_t(size);
            cm.midgress_bytes += std::uint64_t(size);
        }
        const int parent = topo_.nodes[node].parent;
        double tls = 0;
        const int src = serve(parent, -1 - long(node), object, size, &tls);
        charge_node(node, tls, 0.0);
        const int f = open_flow(topo_.nodes[node].uplink, parent, node, object, size, src, true, -1);
        cache.begin_fill(object, f);
        return f;
    }

    int open_flow(int link, int src_node, int dst_node, std::uint64_t object, double size, int source, bool fill, int client)
    {
        Flow fl;
        fl.link = link;
        fl.src_node = src_node;
        fl.dst_node = dst_node;
        fl.object = object;
        fl.size = size;
        fl.source = source;
        fl.fill = fill;
        fl.client = client;
        const int id = int(flows_.size());
        flows_.push_back(std::move(fl));
        if (source >= 0) flows_[source].dependents.push_back(id);
        link_flows_[link].push_back(id);
        active_.push_back(id);
        dirty_ = true;
        return id;
    }

    // ---- clients

    void client_start(int ci)
    {
        clients_[ci].playback.start_session(now_);
        request_segment(ci);
    }

    int choose_quality(const ClientRt& c, std::size_t k) const
    {
        if (replay_ && k < c.chosen.size()) return c.chosen[k];
        const auto& sp = c.plan->segments[k];
        const std::size_t nq = cat_.qualities().size();
        std::vector<double> bits(nq, 0.0), decrypt(nq, 0.0);
        const auto abe = cfg_.cost.abe();
        for (std::size_t q = 0; q < nq; ++q) {
            for (int slot = 0; slot < 4; ++slot) {
                // Clients only know the advertised ladder bitrate before fetching.
                bits[q] += double(cat_.qualities()[q].bitrate_bps) * cat_.segment_duration_s();
                if (is_abe(cfg_.mode)) {
                    decrypt[q] += selenc::crypto_work(selenc::Direction::Decrypt, sp.levels[slot], cat_.stats(sp.tiles[slot], k, int(q + 1)), abe) /
                                  cfg_.cost.client_work_rate;
                }
            }
        }
        return int(abr_select(harmonic_mean(c.throughput, 5), bits, decrypt, cat_.segment_duration_s())) + 1;
    }

    void request_segment(int ci)
    {
        ClientRt& c = clients_[ci];
        const std::size_t k = c.next_segment;
        const int q = choose_quality(c, k);
        if (first_pass_) {
            if (c.chosen.size() <= k) c.chosen.resize(k + 1);
            c.chosen[k] = q;
        }
        const auto& sp = c.plan->segments[k];
        const int client_node = c.spec.node;
        const int server = topo_.nodes[client_node].parent;
        const auto abe = cfg_.cost.abe();
        c.quality_sum += q;
        c.bitrate_sum += 4.0 * double(cat_.qualities()[q - 1].bitrate_bps);
        c.request_t = now_;
        c.segment_bytes = 0;
        c.segment_decrypt_work = 0;
        c.pending = 4;
        for (int slot = 0; slot < 4; ++slot) {
            const std::uint64_t obj = object_id(c.plan->alias, sp.tiles[slot], k, q, sp.levels[slot]);
            const double size = double(cat_.size(sp.tiles[slot], k, q, sp.levels[slot]));
            c.segment_bytes += size;
            c.bytes_requested += std::uint64_t(size);
            if (is_abe(cfg_.mode)) {
                c.segment_decrypt_work +=
                    selenc::crypto_work(selenc::Direction::Decrypt, sp.levels[slot], cat_.stats(sp.tiles[slot], k, q), abe);
            }
            double tls = 0;
            const int src = serve(server, long(ci), obj, size, &tls);
            charge_client(ci, tls);
            open_flow(topo_.nodes[client_node].uplink, server, client_node, obj, size, src, false, ci);
        }
    }

    void tile_done(int ci, const Flow& f)
    {
        ClientRt& c = clients_[ci];
        c.bytes_received += std::uint64_t(f.size);
        if (--c.pending > 0) return;
        const double elapsed = now_ - c.request_t;
        if (elapsed > 0) c.throughput.push_back(8.0 * c.segment_bytes / elapsed);
        if (c.segment_decrypt_work > 0) {
            charge_client(ci, c.segment_decrypt_work);
            push({now_ + c.segment_decrypt_work / cfg_.cost.client_work_rate, 0, EventType::SegmentReady, ci});
        } else {
            segment_ready(ci);
        }
    }

    void segment_ready(int ci)
    {
        ClientRt& c = clients_[ci];
        c.playback.segment_ready(now_);
        ++c.next_segment;
        if (c.next_segment >= cat_.segment_count()) return;
        const double limit = cfg_.buffer_cap_s - cat_.segment_duration_s();
        const double wait = c.playback.buffer_s() - limit;
        if (wait <= 0) {
            request_segment(ci);
        } else {
            push({now_ + wait, 0, EventType::ClientRequest, ci});
        }
    }

    void handle(const Event& e)
    {
        switch (e.type) {
        case EventType::ClientStart: client_start(e.client); break;
        case EventType::ClientRequest:
            clients_[e.client].playback.advance(now_);
            request_segment(e.client);
            break;
        case EventType::SegmentReady: segment_ready(e.client); break;
        }
    }

    // ---- fluid network

    void allocate()
    {
        std::vector<std::pair<double, int>> caps;
        for (int li : link_order_) {
            auto& ids = link_flows_[li];
            if (ids.empty()) continue;
            caps.clear();
            for (int id : ids) {
                Flow& f = flows_[id];
                double cap = kInf;
                if (f.source >= 0) {
                    const Flow& s = flows_[f.source];
                    if (s.delivered - f.delivered <= kCatchUpEps) {
                        f.delivered = std::min(f.delivered, s.delivered);
                        cap = s.rate;
                    }
                }
                caps.emplace_back(cap, id);
            }
            std::sort(caps.begin(), caps.end());
            double rem = topo_.links[li].bandwidth_bps / 8.0;  // bytes per second
            std::size_t n = caps.size();
            for (std::size_t i = 0; i < caps.size(); ++i) {
                const double fair = rem / double(n - i);
                if (caps[i].first <= fair) {
                    flows_[caps[i].second].rate = caps[i].first;
                    rem -= caps[i].first;
                } else {
                    for (std::size_t j = i; j < caps.size(); ++j) flows_[caps[j].second].rate = fair;
                    break;
                }
            }
            double sum = 0;
            for (int id : ids) sum += flows_[id].rate;
            if (sum > topo_.links[li].bandwidth_bps / 8.0 * (1.0 + 1e-9)) ++link_violations_;
        }
        dirty_ = false;
    }

    // Time until the next flow completes or a reader reaches its writer.
    double next_flow_dt(int* who, bool* catch_up) const
    {
        double best = kInf;
        *who = -1;
        *catch_up = false;
        for (int id : active_) {
            const Flow& f = flows_[id];
            if (f.rate > 0) {
                const double dt = (f.size - f.delivered) / f.rate;
                if (dt < best) best = dt, *who = id, *catch_up = false;
            }
            if (f.source >= 0) {
                const Flow& s = flows_[f.source];
                const double gap = s.delivered - f.delivered;
                if (gap > kCatchUpEps && f.rate > s.rate) {
                    const double dt = gap / (f.rate - s.rate);
                    if (dt < best) best = dt, *who = id, *catch_up = true;
                }
            }
        }
        return best;
    }

    void advance(double dt)
    {
        if (dt <= 0) return;
        // Sources always precede their readers in id order.
        for (int id : active_) {
            Flow& f = flows_[id];
            f.delivered = std::min(f.size, f.delivered + f.rate * dt);
            if (f.source >= 0) f.delivered = std::min(f.delivered, flows_[f.source].delivered);
        }
    }

    void finish_flows(int forced, bool catch_up)
    {
        if (forced >= 0) {
            Flow& f = flows_[forced];
            f.delivered = catch_up ? flows_[f.source].delivered : f.size;
        }
        std::vector<int> done;
        for (int id : active_)
            if (flows_[id].size - flows_[id].delivered <= kCompleteEps) done.push_back(id);
        for (int id : done) complete(id);
    }

    void complete(int id)
    {
        Flow& f = flows_[id];
        if (!f.active) return;
        f.delivered = f.size;
        f.active = false;
        f.rate = 0;
        auto& lf = link_flows_[f.link];
        lf.erase(std::find(lf.begin(), lf.end(), id));
        active_.erase(std::lower_bound(active_.begin(), active_.end(), id));
        dirty_ = true;
        for (int d : f.dependents) flows_[d].source = -1;
        if (f.fill) {
            if (caches_[f.dst_node].complete_fill(f.object, id, std::size_t(f.size))) {
                if (measured_) cache_metrics_[f.dst_node].written_bytes += std::uint64_t(f.size);
                charge_node(f.dst_node, 0.0, cfg_.cost.io_per_byte * f.size);
            }
        } else {
            tile_done(f.client, f);
        }
    }

    void loop()
    {
        while (true) {
            if (dirty_) allocate();
            int who = -1;
            bool catch_up = false;
            const double dt_flow = active_.empty() ? kInf : next_flow_dt(&who, &catch_up);
            const double t_evt = queue_.empty() ? kInf : queue_.top().t;
            if (dt_flow == kInf && t_evt == kInf) {
                if (!active_.empty()) throw Error(ErrorKind::ConfigError, "simulation stalled with flows that cannot progress");
                break;
            }
            ++events_;
            if (now_ + dt_flow <= t_evt) {
                advance(dt_flow);
                now_ += dt_flow;
                finish_flows(who, catch_up);
                dirty_ = true;
            } else {
                advance(t_evt - now_);
                now_ = t_evt;
                while (!queue_.empty() && queue_.top().t <= now_) {
                    const Event e = queue_.top();
                    queue_.pop();
                    handle(e);
                }
                // Flows may have crossed a threshold during the step.
                finish_flows(-1, false);
                dirty_ = true;
            }
        }
    }

    Metrics collect()
    {
        Metrics m;
        m.config = cfg_;
        m.link_violations = link_violations_;
        m.events = events_;
        m.measured_start_s = measured_start_;
        m.measured_end_s = now_;
        m.origin_bytes = origin_bytes_;
        m.request_log = std::move(log_);
        m.nodes = nodes_;
        for (int id : topo_.caches()) m.caches.push_back(cache_metrics_[id]);
        for (auto& c : clients_) {
            c.playback.advance(now_ + cfg_.video_duration_s + double(cat_.segment_count()) * cat_.segment_duration_s());
            ClientMetrics cm;
            cm.index = c.spec.index;
            cm.node = topo_.nodes[c.spec.node].name;
            cm.video = c.spec.video;
            cm.trace = c.spec.trace;
            cm.start_s = c.spec.start_s;
            cm.startup_delay_s = c.playback.startup_delay_s();
            cm.stall_s = c.playback.stall_s();
            cm.rebuffer_ratio = c.playback.rebuffer_ratio();
            cm.segments = c.next_segment;
            const double n = std::max<double>(1.0, double(c.next_segment));
            cm.mean_quality = c.quality_sum / n;
            cm.mean_bitrate_bps = c.bitrate_sum / n;
            cm.bytes_received = c.bytes_received;
            cm.bytes_requested = c.bytes_requested;
            cm.crypto_work = c.crypto_work;
            m.client_bytes += c.bytes_received;
            m.clients.push_back(cm);
        }
        return m;
    }

    RunConfig cfg_;
    const Dataset& data_;
    const Catalog& cat_;
    Topology topo_;
    std::vector<NodeMetrics> nodes_;
    std::vector<CacheState> caches_;
    std::vector<CacheMetrics> cache_metrics_;
    std::map<std::pair<std::size_t, std::size_t>, ClientPlan> plans_;
    std::vector<ClientRt> clients_;
    std::vector<Flow> flows_;
    std::vector<std::vector<int>> link_flows_;
    std::vector<int> link_order_;
    std::priority_queue<Event, std::vector<Event>, std::greater<Event>> queue_;
    std::set<std::pair<long, int>> sessions_;
    std::vector<RequestLogEntry> log_;
    std::uint64_t seq_ = 0;
    std::uint64_t events_ = 0;
    std::uint64_t link_violations_ = 0;
    std::uint64_t origin_bytes_ = 0;
    std::vector<int> active_;  // ascending ids
    double now_ = 0;
    double measured_start_ = 0;
    bool dirty_ = true;
    bool measured_ = false;
    bool replay_ = false;
    bool first_pass_ = true;
};

}  // namespace

Metrics run(const RunConfig& config, const Dataset& data)
{
    if (!data.catalog) throw Error(ErrorKind::ConfigError, "dataset has no catalog");
    Engine e(config, data);
    return e.run();
}

}  // namespace tilecrypt::simnet
