#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "estimator.hpp"
#include "topogen.hpp"

namespace odin {

// Signed relative error; permissive-mode underestimates come out negative.
// Throws Error{ZeroActual} when actual_ms <= 0.
double relative_error(double estimate_ms, double actual_ms);

struct SamplePair {
    Ipv4 target_a;
    Ipv4 neighbor_b;
    double rtt_a_actual_ms = 0.0;
    EstimateResult estimate;
    EstimateMode mode = EstimateMode::Strict;
};

struct HistogramBin {
    double low = 0.0;
    double high = 0.0;
    uint64_t count = 0;
    bool operator==(const HistogramBin&) const = default;
};

// Binned relative-error distribution. Interior bins are half-open [low, high)
// over [-edge, +edge]; the first and last bins are open-ended.
struct ErrorHistogram {
    std::vector<HistogramBin> bins;
    uint64_t total = 0;
    std::map<double, double> within_threshold;  // |error| <= key, as a proportion

    static ErrorHistogram make(double edge = 0.30, double bin_width = 0.005,
                               std::vector<double> thresholds = {0.005, 0.15});

    void add(double error);

    bool same_bins(const ErrorHistogram& other) const {
        return bins == other.bins && total == other.total;
    }

private:
    std::map<double, uint64_t> threshold_hits_;
    void refresh_proportions();
};

struct EvalOptions {
    EstimateMode mode = EstimateMode::Strict;
    int samples = 100;
    uint64_t seed = 1;
    TopogenParams topology;
    EstimateConfig estimate;
    double ping_timeout_ms = 1000.0;
};

struct EvalReport {
    std::vector<SamplePair> samples;
    ErrorHistogram histogram;
    uint64_t failures = 0;  // per-sample estimation failures (recorded, not fatal)
    EstimateMode mode = EstimateMode::Strict;
    uint64_t seed = 0;
};

// Desk-scale reproduction of the paired-trace methodology: each sample gets a
// fresh seeded topology, a ping gate, ground truth from the simulator, and one
// estimate in the requested mode. Throws Error{EmptySampleSet} if every sample
// fails.
EvalReport run_simnet_evaluation(const EvalOptions& opts);

// Same methodology over an arbitrary transport: ping gate, trace to the target
// for ground truth, then the indirect estimate. sleep_between is called after
// each target (rate limiting); pass nullptr to disable.
EvalReport run_transport_evaluation(const std::vector<Ipv4>& targets, const EvalOptions& opts,
                                    ProbeTransport& transport, RandomSource& rng,
                                    const std::function<void()>& sleep_between = nullptr);

// Uniform public-unicast IPv4 draw; reserved, private, loopback, link-local,
// benchmark, documentation, multicast, and class E ranges are excluded.
Ipv4 random_public_ipv4(RandomSource& rng);
bool is_public_unicast(const Ipv4& addr);

std::string histogram_to_csv(const ErrorHistogram& hist);
ErrorHistogram histogram_from_csv(const std::string& csv_text);
void emit_histogram_csv(const ErrorHistogram& hist, const std::string& path);

// {total, within_0.5pct, within_15pct, mode, seed}
std::string eval_summary_json(const EvalReport& report);

}  // namespace odin
