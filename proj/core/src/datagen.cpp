#include "rsma/datagen.hpp"

#include "rsma/parallel.hpp"

namespace rsma {

LabelSettings LabelSettings::defaults(int num_users) { return {SolverOptions::oracle_defaults(num_users), 3}; }

ProblemInstance sample_instance(const SystemConfig& config, Rng& rng) {
    config.validate();
    const int U = config.num_users;
    const int M = config.num_antennas;
    CMatrix channels(U, M);
    for (int k = 0; k < U; ++k) {
        for (int m = 0; m < M; ++m) {
            channels(k, m) = rng.complex_normal(config.channel_variance);
        }
    }
    RVector weights(U);
    for (int k = 0; k < U; ++k) {
        double u = rng.uniform();
        while (u == 0.0) {
            u = rng.uniform();
        }
        weights(k) = u;
    }
    weights /= weights.sum();
    const double p0 = rng.uniform(0.0, config.p0_upper);
    return make_instance(std::move(channels), std::move(weights), RVector::Constant(U, config.noise_variance), p0,
                         config.power_budget());
}

DatasetRecord label_instance(const ProblemInstance& inst, const SolverOptions& oracle_opts, int restarts) {
    if (restarts < 1) {
        throw std::invalid_argument("label_instance: restarts must be at least 1");
    }
    DatasetRecord record;
    record.instance = inst;
    record.oracle.solver_seed = oracle_opts.seed;
    record.oracle.restarts = restarts;

    std::optional<Solution> best;
    double best_value = 0.0;
    std::string last_error;
    for (int r = 0; r < restarts; ++r) {
        SolverOptions opts = oracle_opts;
        opts.seed = derive_seed(oracle_opts.seed, {static_cast<std::uint64_t>(r)});
        try {
            Solution sol = solve_fp_oracle(inst, opts);
            const double value = wsr(inst, sol.beams, sol.rc);
            if (!best || value > best_value) {
                best_value = value;
                best = std::move(sol);
            }
        } catch (const std::exception& e) {
            last_error = e.what();
        }
    }
    if (!best) {
        throw std::runtime_error("label_instance: every oracle restart failed: " + last_error);
    }
    record.wsr_star = best_value;
    record.oracle.iterations_used = best->trace.iterations_used;
    record.oracle.converged = best->trace.converged;
    record.solution = Iterate{std::move(best->beams), std::move(best->rc)};
    return record;
}

Dataset generate_dataset(const SystemConfig& config, std::size_t count, std::uint64_t seed,
                         const std::optional<LabelSettings>& labeling) {
    config.validate();
    Dataset ds;
    ds.config = config;
    ds.config.seed = seed;
    ds.seed = seed;
    ds.labeling = labeling;
    ds.records.resize(count);
    parallel_for(count, [&](std::size_t i) {
        Rng rng(seed, {static_cast<std::uint64_t>(i), 1});
        const ProblemInstance inst = sample_instance(config, rng);
        const std::uint64_t solver_seed = derive_seed(seed, {static_cast<std::uint64_t>(i), 2});
        if (labeling) {
            SolverOptions opts = labeling->oracle;
            opts.seed = solver_seed;
            ds.records[i] = label_instance(inst, opts, labeling->restarts);
        } else {
            ds.records[i].instance = inst;
            ds.records[i].oracle.solver_seed = solver_seed;
        }
    });
    return ds;
}

void relabel(Dataset& dataset, const LabelSettings& labeling) {
    parallel_for(dataset.records.size(), [&](std::size_t i) {
        DatasetRecord& rec = dataset.records[i];
        SolverOptions opts = labeling.oracle;
        opts.seed = rec.oracle.solver_seed;
        rec = label_instance(rec.instance, opts, labeling.restarts);
    });
    dataset.labeling = labeling;
}

std::vector<LabeledInstance> labeled_instances(const Dataset& dataset) {
    std::vector<LabeledInstance> out;
    out.reserve(dataset.records.size());
    for (std::size_t i = 0; i < dataset.records.size(); ++i) {
        const DatasetRecord& rec = dataset.records[i];
        if (!rec.wsr_star) {
            throw std::invalid_argument("record " + std::to_string(i) + " has no oracle label");
        }
        out.push_back({rec.instance, *rec.wsr_star});
    }
    return out;
}

} // namespace rsma
