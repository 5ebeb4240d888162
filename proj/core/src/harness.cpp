#include "rsma/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <regex>
#include <sstream>

#include "rsma/parallel.hpp"

namespace rsma {

namespace {

const DatasetRecord& labeled(const Dataset& dataset, std::size_t i) {
    const DatasetRecord& rec = dataset.records[i];
    if (!rec.wsr_star) {
        throw std::invalid_argument("record " + std::to_string(i) + " has no oracle label");
    }
    return rec;
}

template <class Fn>
double seconds(Fn&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double>(t1 - t0).count();
}

} // namespace

Metrics asr(std::span<const double> wsr_hat, std::span<const double> wsr_star) {
    if (wsr_hat.size() != wsr_star.size()) {
        throw DimensionError("asr: " + std::to_string(wsr_hat.size()) + " estimates for " +
                             std::to_string(wsr_star.size()) + " labels");
    }
    if (wsr_hat.empty()) {
        throw std::invalid_argument("asr: no samples");
    }
    Metrics m;
    m.n_samples = wsr_hat.size();
    m.per_sample_ratio.resize(m.n_samples);
    for (std::size_t q = 0; q < m.n_samples; ++q) {
        if (!(wsr_star[q] > 0.0) || !std::isfinite(wsr_star[q])) {
            throw std::invalid_argument("asr: label " + std::to_string(q) + " is not positive");
        }
        m.per_sample_ratio[q] = wsr_hat[q] / wsr_star[q];
    }
    m.asr = std::accumulate(m.per_sample_ratio.begin(), m.per_sample_ratio.end(), 0.0) /
            static_cast<double>(m.n_samples);
    return m;
}

Metrics evaluate(const Dataset& dataset, const NetworkParams& params, std::uint64_t seed) {
    params.validate();
    if (params.num_users() != dataset.config.num_users) {
        throw DimensionError("evaluate: parameters built for " + std::to_string(params.num_users()) +
                             " users, dataset has " + std::to_string(dataset.config.num_users));
    }
    const std::size_t Q = dataset.records.size();
    const std::size_t N = static_cast<std::size_t>(params.num_layers());
    std::vector<double> star(Q);
    for (std::size_t i = 0; i < Q; ++i) {
        star[i] = *labeled(dataset, i).wsr_star;
    }
    std::vector<std::vector<double>> per_layer(Q);
    parallel_for(Q, [&](std::size_t i) {
        const ForwardTrace trace =
            network_forward(dataset.records[i].instance, params, derive_seed(seed, {static_cast<std::uint64_t>(i)}));
        per_layer[i].resize(N);
        for (std::size_t n = 0; n < N; ++n) {
            per_layer[i][n] = trace.layers[n].wsr_hat;
        }
    });

    std::vector<double> final_wsr(Q);
    for (std::size_t i = 0; i < Q; ++i) {
        final_wsr[i] = per_layer[i].back();
    }
    Metrics m = asr(final_wsr, star);
    m.per_layer_asr.assign(N, 0.0);
    for (std::size_t n = 0; n < N; ++n) {
        for (std::size_t i = 0; i < Q; ++i) {
            m.per_layer_asr[n] += per_layer[i][n] / star[i];
        }
        m.per_layer_asr[n] /= static_cast<double>(Q);
    }
    return m;
}

Metrics evaluate_solutions(const Dataset& dataset) {
    const std::size_t Q = dataset.records.size();
    std::vector<double> hat(Q);
    std::vector<double> star(Q);
    for (std::size_t i = 0; i < Q; ++i) {
        const DatasetRecord& rec = labeled(dataset, i);
        if (!rec.solution) {
            throw std::invalid_argument("record " + std::to_string(i) + " has no stored oracle solution");
        }
        hat[i] = wsr(rec.instance, rec.solution->beams, rec.solution->rc);
        star[i] = *rec.wsr_star;
    }
    return asr(hat, star);
}

OodScenario OodScenario::parse(const std::string& text) {
    static const std::regex pattern(R"(^(snr|pmax)([+-](?:\d+\.?\d*|\.\d+))$)");
    std::smatch match;
    if (!std::regex_match(text, match, pattern)) {
        throw std::invalid_argument("scenario '" + text + "' is not of the form snr+N, snr-N, pmax+N or pmax-N");
    }
    OodScenario s;
    s.kind = match[1] == "snr" ? Kind::snr : Kind::pmax;
    s.delta = std::stod(match[2]);
    return s;
}

std::string OodScenario::name() const {
    std::ostringstream os;
    os << (kind == Kind::snr ? "snr" : "pmax") << std::showpos << delta;
    return os.str();
}

Dataset ood_transform(const Dataset& dataset, const OodScenario& scenario, bool relabel_records) {
    Dataset out = dataset;
    out.scenario = scenario.name();
    const int U = out.config.num_users;
    if (scenario.kind == OodScenario::Kind::snr) {
        const double gain = std::pow(10.0, scenario.delta / 20.0);
        out.config.channel_variance *= std::pow(10.0, scenario.delta / 10.0);
        for (DatasetRecord& rec : out.records) {
            rec.instance.channels *= gain;
        }
    } else {
        out.config.p_max_dbm += scenario.delta;
        const double budget = out.config.power_budget();
        for (std::size_t i = 0; i < out.records.size(); ++i) {
            ProblemInstance& inst = out.records[i].instance;
            if (!(budget > (U + 1) * inst.p0)) {
                throw std::invalid_argument("ood_transform: shifted budget " + std::to_string(budget) +
                                            " W does not exceed (U+1) p0 on record " + std::to_string(i));
            }
            inst.power_budget = budget;
        }
    }
    for (DatasetRecord& rec : out.records) {
        rec.wsr_star.reset();
        rec.solution.reset();
        rec.oracle.iterations_used = 0;
        rec.oracle.converged = false;
    }
    if (relabel_records) {
        if (!dataset.labeling) {
            throw std::invalid_argument("ood_transform: dataset carries no labeling settings");
        }
        relabel(out, *dataset.labeling);
    }
    return out;
}

TimingSummary summarize(std::span<const double> seconds) {
    if (seconds.empty()) {
        return {};
    }
    std::vector<double> sorted(seconds.begin(), seconds.end());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    TimingSummary s;
    s.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(n);
    s.median = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(n)));
    s.p95 = sorted[std::max<std::size_t>(rank, 1) - 1];
    return s;
}

TimingStats bench(const Dataset& dataset, const NetworkParams& params, const SolverOptions& oracle_opts,
                  int repetitions, std::uint64_t seed) {
    if (repetitions < 1) {
        throw std::invalid_argument("bench: repetitions must be at least 1");
    }
    params.validate();
    const std::size_t Q = dataset.records.size();
    TimingStats stats;
    stats.du_seconds.resize(Q);
    stats.fp_seconds.resize(Q);
    if (Q == 0) {
        return stats;
    }

    // Keeps results observable so the timed calls cannot be discarded.
    volatile double sink = 0.0;
    {
        const ProblemInstance& first = dataset.records.front().instance;
        sink = network_forward(first, params, seed).final_wsr();
        sink = solve_fp_oracle(first, oracle_opts).trace.iterations_used;
    }
    for (std::size_t i = 0; i < Q; ++i) {
        const ProblemInstance& inst = dataset.records[i].instance;
        const std::uint64_t init_seed = derive_seed(seed, {static_cast<std::uint64_t>(i)});
        SolverOptions opts = oracle_opts;
        opts.seed = dataset.records[i].oracle.solver_seed;
        double du = 0.0;
        double fp = 0.0;
        for (int r = 0; r < repetitions; ++r) {
            du += seconds([&] { sink = network_forward(inst, params, init_seed).final_wsr(); });
            fp += seconds([&] { sink = solve_fp_oracle(inst, opts).trace.iterations_used; });
        }
        stats.du_seconds[i] = du / repetitions;
        stats.fp_seconds[i] = fp / repetitions;
    }
    (void)sink;
    stats.du = summarize(stats.du_seconds);
    stats.fp = summarize(stats.fp_seconds);
    return stats;
}

void write_cdf_csv(std::ostream& os, std::span<const double> seconds) {
    std::vector<double> sorted(seconds.begin(), seconds.end());
    std::sort(sorted.begin(), sorted.end());
    os << "seconds,fraction\n";
    const auto old_precision = os.precision(std::numeric_limits<double>::max_digits10);
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        os << sorted[i] << ',' << static_cast<double>(i + 1) / static_cast<double>(sorted.size()) << '\n';
    }
    os.precision(old_precision);
}

} // namespace rsma
