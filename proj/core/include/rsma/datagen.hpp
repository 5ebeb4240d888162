#pragma once

// Instance sampling, oracle labeling, and the JSON Lines dataset format.
//
// File layout: line 1 is a header object, every following line is one record.
// Complex numbers are [re, im] pairs; doubles are written in shortest
// round-trip form so read(write(d)) reproduces every bit.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rsma/model.hpp"
#include "rsma/pgd.hpp"
#include "rsma/rng.hpp"
#include "rsma/unfold.hpp"

namespace rsma {

inline constexpr const char* kDatasetFormat = "rsma-dataset";
inline constexpr const char* kDatasetVersion = "1";

struct OracleMeta {
    int iterations_used = 0;
    bool converged = false;
    std::uint64_t solver_seed = 0;
    int restarts = 0;
};

struct DatasetRecord {
    ProblemInstance instance;
    std::optional<double> wsr_star;
    OracleMeta oracle;
    std::optional<Iterate> solution; // the oracle's best point
};

/// Oracle settings used to produce (or reproduce) labels.
struct LabelSettings {
    SolverOptions oracle;
    int restarts = 3;

    static LabelSettings defaults(int num_users);
};

struct Dataset {
    SystemConfig config;
    std::uint64_t seed = 0;
    std::string scenario = "base";
    std::optional<LabelSettings> labeling;
    std::vector<DatasetRecord> records;
};

/// Line-numbered failure while reading a dataset file.
class DatasetError : public std::runtime_error {
public:
    DatasetError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

ProblemInstance sample_instance(const SystemConfig& config, Rng& rng);

/// Best of `restarts` oracle runs; restart r starts from the beams seeded by
/// derive_seed(oracle_opts.seed, {r}).
DatasetRecord label_instance(const ProblemInstance& inst, const SolverOptions& oracle_opts, int restarts);

/// Record i draws its instance from Rng(seed, {i, 1}) and its oracle seed is
/// derive_seed(seed, {i, 2}), so the dataset is a pure function of its inputs.
Dataset generate_dataset(const SystemConfig& config, std::size_t count, std::uint64_t seed,
                         const std::optional<LabelSettings>& labeling);

/// Re-runs the oracle on every record, reusing each record's stored solver seed.
void relabel(Dataset& dataset, const LabelSettings& labeling);

/// Labeled records as training examples; throws if any label is missing.
std::vector<LabeledInstance> labeled_instances(const Dataset& dataset);

void write_dataset(std::ostream& os, const Dataset& dataset);
void write_dataset(const std::string& path, const Dataset& dataset);
Dataset read_dataset(std::istream& is);
Dataset read_dataset(const std::string& path);

std::string config_to_json(const SystemConfig& config);
SystemConfig config_from_json(const std::string& text);
SystemConfig load_config(const std::string& path);

} // namespace rsma
