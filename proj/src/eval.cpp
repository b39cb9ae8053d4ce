#include "eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "error.hpp"
#include "json.hpp"
#include "json_io.hpp"

namespace odin {

double relative_error(double estimate_ms, double actual_ms) {
    if (actual_ms <= 0.0) raise(Status::ZeroActual, "actual RTT must be > 0");
    return (estimate_ms - actual_ms) / actual_ms;
}

ErrorHistogram ErrorHistogram::make(double edge, double bin_width, std::vector<double> thresholds) {
    ErrorHistogram hist;
    constexpr double inf = std::numeric_limits<double>::infinity();
    hist.bins.push_back(HistogramBin{-inf, -edge, 0});
    // Bounds are built from integer thousandths so that the decimal text in
    // the CSV parses back to the identical double.
    const long edge_k = std::lround(edge * 1000.0);
    const long width_k = std::lround(bin_width * 1000.0);
    for (long k = -edge_k; k < edge_k; k += width_k)
        hist.bins.push_back(
            HistogramBin{static_cast<double>(k) / 1000.0,
                         static_cast<double>(std::min(k + width_k, edge_k)) / 1000.0, 0});
    hist.bins.push_back(HistogramBin{edge, inf, 0});
    for (double t : thresholds) {
        hist.threshold_hits_[t] = 0;
        hist.within_threshold[t] = 0.0;
    }
    return hist;
}

void ErrorHistogram::add(double error) {
    for (auto& bin : bins) {
        if (error >= bin.low && error < bin.high) {
            ++bin.count;
            break;
        }
    }
    ++total;
    for (auto& [threshold, hits] : threshold_hits_)
        if (std::fabs(error) <= threshold) ++hits;
    refresh_proportions();
}

void ErrorHistogram::refresh_proportions() {
    for (const auto& [threshold, hits] : threshold_hits_)
        within_threshold[threshold] = total ? static_cast<double>(hits) / total : 0.0;
}

namespace {

PeerRttState passthrough_prior(const Ipv4& target) {
    // An infinite prior makes the update rule adopt the raw observation, which
    // is what a single-shot evaluation sample wants.
    PeerRttState prior;
    prior.peer_address = target;
    prior.rtt_est_ms = std::numeric_limits<double>::infinity();
    return prior;
}

}  // namespace

EvalReport run_simnet_evaluation(const EvalOptions& opts) {
    if (opts.samples < 1) raise(Status::InvalidArgument, "samples must be >= 1");
    EvalReport report;
    report.mode = opts.mode;
    report.seed = opts.seed;
    report.histogram = ErrorHistogram::make();

    SeededRandom master(opts.seed);
    EstimateConfig cfg = opts.estimate;
    cfg.mode = opts.mode;

    for (int i = 0; i < opts.samples; ++i) {
        const uint64_t sample_seed = master.next_u64();
        GeneratedTopology gen = generate_topology(opts.topology, sample_seed);
        SimNet net(gen.spec, sample_seed);
        SimTransport transport(net);
        SeededRandom rng(sample_seed ^ 0x9e3779b97f4a7c15ull);

        if (!ping(gen.target, transport, opts.ping_timeout_ms)) {
            ++report.failures;
            continue;
        }
        const double actual = net.ground_truth_rtt(gen.target);
        try {
            EstimateResult est =
                estimate_rtt(gen.target, passthrough_prior(gen.target), cfg, transport, rng);
            report.histogram.add(relative_error(est.estimate_ms, actual));
            report.samples.push_back(
                SamplePair{gen.target, est.probed_address, actual, std::move(est), opts.mode});
        } catch (const Error& err) {
            if (err.status() != Status::NoReachableHop && err.status() != Status::StrictExhausted)
                throw;
            ++report.failures;
        }
    }

    if (report.samples.empty()) raise(Status::EmptySampleSet, "no sample produced an estimate");
    return report;
}

EvalReport run_transport_evaluation(const std::vector<Ipv4>& targets, const EvalOptions& opts,
                                    ProbeTransport& transport, RandomSource& rng,
                                    const std::function<void()>& sleep_between) {
    EvalReport report;
    report.mode = opts.mode;
    report.seed = opts.seed;
    report.histogram = ErrorHistogram::make();

    EstimateConfig cfg = opts.estimate;
    cfg.mode = opts.mode;

    for (const Ipv4& target : targets) {
        if (sleep_between) sleep_between();
        // Reachability gate first; it also warms the routers' caches so the
        // paired traces see comparable paths.
        if (!ping(target, transport, opts.ping_timeout_ms)) {
            ++report.failures;
            continue;
        }
        TraceResult trace_a = trace_route(target, cfg.probe, transport);
        if (!trace_a.destination_reached) {
            ++report.failures;
            continue;
        }
        const double actual = *trace_a.hops.back().rtt_ms;
        try {
            EstimateResult est =
                estimate_rtt(target, passthrough_prior(target), cfg, transport, rng);
            report.histogram.add(relative_error(est.estimate_ms, actual));
            report.samples.push_back(
                SamplePair{target, est.probed_address, actual, std::move(est), opts.mode});
        } catch (const Error& err) {
            if (err.status() != Status::NoReachableHop && err.status() != Status::StrictExhausted)
                throw;
            ++report.failures;
        }
    }

    if (report.samples.empty()) raise(Status::EmptySampleSet, "no sample produced an estimate");
    return report;
}

bool is_public_unicast(const Ipv4& addr) {
    const uint32_t v = addr.value;
    auto in = [&](uint32_t base, int prefix) {
        return (v & (prefix == 0 ? 0u : ~((1u << (32 - prefix)) - 1u))) == base;
    };
    if (in(0x00000000u, 8)) return false;   // 0.0.0.0/8
    if (in(0x0a000000u, 8)) return false;   // 10/8
    if (in(0x64400000u, 10)) return false;  // 100.64/10
    if (in(0x7f000000u, 8)) return false;   // 127/8
    if (in(0xa9fe0000u, 16)) return false;  // 169.254/16
    if (in(0xac100000u, 12)) return false;  // 172.16/12
    if (in(0xc0000000u, 24)) return false;  // 192.0.0/24
    if (in(0xc0000200u, 24)) return false;  // 192.0.2/24
    if (in(0xc0586300u, 24)) return false;  // 192.88.99/24
    if (in(0xc0a80000u, 16)) return false;  // 192.168/16
    if (in(0xc6120000u, 15)) return false;  // 198.18/15
    if (in(0xc6336400u, 24)) return false;  // 198.51.100/24
    if (in(0xcb007100u, 24)) return false;  // 203.0.113/24
    if (in(0xe0000000u, 4)) return false;   // 224/4 multicast
    if (in(0xf0000000u, 4)) return false;   // 240/4 class E
    if (v == 0xffffffffu) return false;     // broadcast
    return true;
}

Ipv4 random_public_ipv4(RandomSource& rng) {
    while (true) {
        Ipv4 addr{static_cast<uint32_t>(rng.next_u64() & 0xffffffffull)};
        if (is_public_unicast(addr)) return addr;
    }
}

namespace {

std::string format_bound(double v) {
    if (std::isinf(v)) return v < 0 ? "-inf" : "inf";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

double parse_bound(const std::string& s) {
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    return std::stod(s);
}

}  // namespace

std::string histogram_to_csv(const ErrorHistogram& hist) {
    std::string out = "bin_low,bin_high,count,fraction\n";
    char buf[128];
    for (const auto& bin : hist.bins) {
        double fraction = hist.total ? static_cast<double>(bin.count) / hist.total : 0.0;
        std::snprintf(buf, sizeof(buf), "%s,%s,%llu,%.10g\n", format_bound(bin.low).c_str(),
                      format_bound(bin.high).c_str(), static_cast<unsigned long long>(bin.count),
                      fraction);
        out += buf;
    }
    return out;
}

ErrorHistogram histogram_from_csv(const std::string& csv_text) {
    std::istringstream in(csv_text);
    std::string line;
    if (!std::getline(in, line) || line != "bin_low,bin_high,count,fraction")
        raise(Status::ParseFailure, "missing histogram CSV header");
    ErrorHistogram hist;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream fields(line);
        std::string low, high, count, fraction;
        if (!std::getline(fields, low, ',') || !std::getline(fields, high, ',') ||
            !std::getline(fields, count, ',') || !std::getline(fields, fraction))
            raise(Status::ParseFailure, "bad histogram CSV row: " + line);
        HistogramBin bin;
        bin.low = parse_bound(low);
        bin.high = parse_bound(high);
        bin.count = std::stoull(count);
        hist.bins.push_back(bin);
        hist.total += bin.count;
    }
    return hist;
}

void emit_histogram_csv(const ErrorHistogram& hist, const std::string& path) {
    write_file(path, histogram_to_csv(hist));
}

std::string eval_summary_json(const EvalReport& report) {
    nlohmann::json doc;
    doc["total"] = report.samples.size();
    doc["failures"] = report.failures;
    auto threshold = [&](double t) {
        auto it = report.histogram.within_threshold.find(t);
        return it == report.histogram.within_threshold.end() ? 0.0 : it->second;
    };
    doc["within_0.5pct"] = threshold(0.005);
    doc["within_15pct"] = threshold(0.15);
    doc["mode"] = estimate_mode_name(report.mode);
    doc["seed"] = report.seed;
    return doc.dump(2);
}

}  // namespace odin
