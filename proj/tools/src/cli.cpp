#include "rsma/cli.hpp"

#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "rsma/datagen.hpp"
#include "rsma/harness.hpp"
#include "rsma/pgd.hpp"
#include "rsma/unfold.hpp"

namespace rsma {

namespace {

constexpr int kDigits = std::numeric_limits<double>::max_digits10;

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open '" + path + "' for writing");
    }
    out << std::setprecision(kDigits);
    return out;
}

std::string fixed4(double x) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(4) << x;
    return os.str();
}

struct OracleFlags {
    double tol = 1e-2;
    int max_iters = 200;
    int inner_iters = 500;
    double inner_step = 1e-3;
    int restarts = 3;

    void add(CLI::App* app) {
        app->add_option("--tol", tol, "oracle stopping tolerance on |dWSR|")->check(CLI::PositiveNumber);
        app->add_option("--max-iters", max_iters, "oracle outer iterations")->check(CLI::PositiveNumber);
        app->add_option("--inner-iters", inner_iters, "oracle inner ascent steps")->check(CLI::PositiveNumber);
        app->add_option("--inner-step", inner_step, "oracle inner initial step")->check(CLI::PositiveNumber);
        app->add_option("--restarts", restarts, "oracle restarts per instance")->check(CLI::PositiveNumber);
    }

    LabelSettings settings(int users) const {
        LabelSettings l = LabelSettings::defaults(users);
        l.oracle.tol = tol;
        l.oracle.max_iters = max_iters;
        l.oracle.inner_iters = inner_iters;
        l.oracle.inner_step = inner_step;
        l.restarts = restarts;
        return l;
    }
};

const std::map<std::string, InitScheme> kInitSchemes{{"random", InitScheme::random_small},
                                                     {"mimic", InitScheme::pgd_mimic}};

/// Assigns fresh oracle seeds derived from `seed` and labels every record.
void label_all(Dataset& d, std::uint64_t seed, const LabelSettings& settings) {
    d.seed = seed;
    for (std::size_t i = 0; i < d.records.size(); ++i) {
        d.records[i].oracle.solver_seed = derive_seed(seed, {static_cast<std::uint64_t>(i), 2});
    }
    relabel(d, settings);
}

} // namespace

int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Rate-splitting beamforming: reference solver, unfolded network and experiment harness", "rsma"};
    app.require_subcommand(1);
    app.fallthrough(false);

    std::uint64_t seed = 0;
    std::function<void()> run;
    auto seeded = [&](CLI::App* sub) {
        sub->add_option("--seed", seed, "seed for every random draw of this command")->required();
    };

    // gen-data
    std::string config_path;
    std::size_t count = 0;
    std::string out_path;
    bool label_now = false;
    OracleFlags oracle;
    auto* gen = app.add_subcommand("gen-data", "sample problem instances into a JSONL dataset");
    gen->add_option("--config", config_path, "SystemConfig JSON (defaults when omitted)")->check(CLI::ExistingFile);
    gen->add_option("--n", count, "number of records")->required();
    gen->add_option("--out", out_path, "output dataset")->required();
    gen->add_flag("--label", label_now, "label records with the oracle");
    oracle.add(gen);
    seeded(gen);
    gen->callback([&] {
        run = [&] {
            const SystemConfig config = config_path.empty() ? SystemConfig{} : load_config(config_path);
            std::optional<LabelSettings> labeling;
            if (label_now) {
                labeling = oracle.settings(config.num_users);
            }
            const Dataset d = generate_dataset(config, count, seed, labeling);
            write_dataset(out_path, d);
            out << "wrote " << d.records.size() << " records to " << out_path << '\n';
        };
    });

    // label
    std::string in_path;
    auto* label = app.add_subcommand("label", "label (or re-label) every record with the oracle");
    label->add_option("--in", in_path, "input dataset")->required()->check(CLI::ExistingFile);
    label->add_option("--out", out_path, "output dataset")->required();
    oracle.add(label);
    seeded(label);
    label->callback([&] {
        run = [&] {
            Dataset d = read_dataset(in_path);
            label_all(d, seed, oracle.settings(d.config.num_users));
            write_dataset(out_path, d);
            double mean = 0.0;
            for (const DatasetRecord& r : d.records) {
                mean += *r.wsr_star;
            }
            out << "labeled " << d.records.size() << " records, mean WSR* "
                << fixed4(d.records.empty() ? 0.0 : mean / static_cast<double>(d.records.size())) << '\n';
        };
    });

    // solve
    std::string solver = "fp";
    std::optional<std::size_t> index;
    std::string trace_path;
    double step = 1e-3;
    double lambda = 1.0;
    double step_decay = 1.0;
    std::optional<double> solve_tol;
    std::optional<int> solve_iters;
    auto* solve = app.add_subcommand("solve", "run the oracle or plain PGD on a dataset or one record");
    solve->add_option("--solver", solver, "fp or pgd")->check(CLI::IsMember({"fp", "pgd"}));
    solve->add_option("--in", in_path, "input dataset")->required()->check(CLI::ExistingFile);
    solve->add_option("--index", index, "solve only this record");
    solve->add_option("--out", out_path, "per-record results CSV")->required();
    solve->add_option("--trace", trace_path, "per-iteration CSV (requires --index)");
    solve->add_option("--step", step, "PGD step size for every variable")->check(CLI::PositiveNumber);
    solve->add_option("--step-decay", step_decay, "PGD geometric step decay")->check(CLI::PositiveNumber);
    solve->add_option("--lambda", lambda, "penalty factor")->check(CLI::PositiveNumber);
    solve->add_option("--tol", solve_tol, "stopping tolerance on |dWSR| (fp 1e-2, pgd 1e-6)")
        ->check(CLI::PositiveNumber);
    solve->add_option("--max-iters", solve_iters, "iteration cap (fp 200, pgd 2000)")->check(CLI::PositiveNumber);
    seeded(solve);
    solve->callback([&] {
        run = [&] {
            const Dataset d = read_dataset(in_path);
            const int U = d.config.num_users;
            SolverOptions opts = solver == "fp" ? SolverOptions::oracle_defaults(U) : SolverOptions::pgd_defaults(U);
            opts.lambda = lambda;
            opts.tol = solve_tol.value_or(opts.tol);
            opts.max_iters = solve_iters.value_or(opts.max_iters);
            opts.steps = StepSizes::uniform(U, step);
            opts.step_decay = step_decay;
            std::size_t first = 0;
            std::size_t last = d.records.size();
            if (index) {
                if (*index >= d.records.size()) {
                    throw CLI::ValidationError("--index", "record " + std::to_string(*index) + " out of range");
                }
                first = *index;
                last = *index + 1;
            } else if (!trace_path.empty()) {
                throw CLI::ValidationError("--trace", "requires --index");
            }
            std::vector<Solution> sols(last - first);
            for (std::size_t i = first; i < last; ++i) {
                SolverOptions o = opts;
                o.seed = derive_seed(seed, {static_cast<std::uint64_t>(i)});
                const ProblemInstance& inst = d.records[i].instance;
                sols[i - first] = solver == "fp" ? solve_fp_oracle(inst, o) : solve_pgd(inst, o);
            }
            std::ofstream csv = open_out(out_path);
            csv << "index,wsr,iterations,converged,feasible\n";
            double mean = 0.0;
            for (std::size_t i = first; i < last; ++i) {
                const Solution& s = sols[i - first];
                const ProblemInstance& inst = d.records[i].instance;
                const double value = wsr(inst, s.beams, s.rc);
                mean += value;
                csv << i << ',' << value << ',' << s.trace.iterations_used << ',' << (s.trace.converged ? 1 : 0)
                    << ',' << (check_feasibility(inst, s.beams, s.rc, 1e-9).all() ? 1 : 0) << '\n';
            }
            if (!trace_path.empty()) {
                std::ofstream tr = open_out(trace_path);
                write_trace_csv(tr, sols.front().trace);
            }
            out << "solved " << sols.size() << " records with " << solver << ", mean WSR "
                << fixed4(sols.empty() ? 0.0 : mean / static_cast<double>(sols.size())) << '\n';
        };
    });

    // train
    std::string train_path;
    std::string test_path;
    std::string history_path;
    std::string init_name = "random";
    int layers = 8;
    double mimic_step = 0.03;
    TrainConfig tc;
    auto* train_cmd = app.add_subcommand("train", "train the unfolded network on a labeled dataset");
    train_cmd->add_option("--train", train_path, "labeled training dataset")->required()->check(CLI::ExistingFile);
    train_cmd->add_option("--test", test_path, "labeled dataset to report final ASR on")->check(CLI::ExistingFile);
    train_cmd->add_option("--layers", layers, "number of unfolded layers")->check(CLI::PositiveNumber);
    train_cmd->add_option("--epochs", tc.epochs, "training epochs")->check(CLI::NonNegativeNumber);
    train_cmd->add_option("--lr", tc.learning_rate, "Adam learning rate")->check(CLI::NonNegativeNumber);
    train_cmd->add_option("--batch", tc.batch_size, "minibatch size")->check(CLI::PositiveNumber);
    train_cmd->add_option("--lambda", lambda, "penalty factor")->check(CLI::PositiveNumber);
    train_cmd->add_option("--init", init_name, "random or mimic")->check(CLI::IsMember({"random", "mimic"}));
    train_cmd->add_option("--mimic-step", mimic_step, "step size reproduced by --init mimic")
        ->check(CLI::PositiveNumber);
    train_cmd->add_flag("!--no-z-backprop", tc.z_backprop, "treat auxiliaries as constants in backprop");
    train_cmd->add_option("--out", out_path, "trained parameters JSON")->required();
    train_cmd->add_option("--history", history_path, "per-epoch CSV");
    seeded(train_cmd);
    train_cmd->callback([&] {
        run = [&] {
            const Dataset d = read_dataset(train_path);
            const int U = d.config.num_users;
            const NetworkParams init =
                init_params(U, layers, seed, kInitSchemes.at(init_name), StepSizes::uniform(U, mimic_step), lambda);
            tc.seed = seed;
            const auto data = labeled_instances(d);
            const TrainResult r = train(data, init, tc);
            save_params(out_path, r.params);
            if (!history_path.empty()) {
                std::ofstream h = open_out(history_path);
                write_history_csv(h, r.history);
            }
            if (!r.history.empty()) {
                out << "epochs " << r.history.size() << ", final loss " << fixed4(r.history.back().mean_loss)
                    << ", train ASR " << fixed4(r.history.back().train_asr) << '\n';
            }
            if (!test_path.empty()) {
                out << "test ASR " << fixed4(evaluate(read_dataset(test_path), r.params, seed).asr) << '\n';
            }
        };
    });

    // eval
    std::string params_path;
    std::string data_path;
    std::string layers_path;
    bool oracle_solutions = false;
    auto* eval = app.add_subcommand("eval", "average sum ratio of the network (or stored oracle solutions)");
    eval->add_option("--data", data_path, "labeled dataset")->required()->check(CLI::ExistingFile);
    auto* params_opt = eval->add_option("--params", params_path, "network parameters JSON")->check(CLI::ExistingFile);
    auto* oracle_flag = eval->add_flag("--oracle-solutions", oracle_solutions, "score the stored oracle solutions");
    params_opt->excludes(oracle_flag);
    eval->add_option("--per-layer", layers_path, "per-layer ASR CSV");
    eval->add_option("--out", out_path, "per-sample ratio CSV");
    seeded(eval);
    eval->callback([&] {
        if (params_path.empty() && !oracle_solutions) {
            throw CLI::RequiredError("--params or --oracle-solutions");
        }
        run = [&] {
            const Dataset d = read_dataset(data_path);
            const Metrics m = oracle_solutions ? evaluate_solutions(d) : evaluate(d, load_params(params_path), seed);
            out << "ASR " << fixed4(m.asr) << '\n';
            out << "samples " << m.n_samples << '\n';
            if (!layers_path.empty()) {
                std::ofstream csv = open_out(layers_path);
                csv << "layer,asr\n";
                for (std::size_t n = 0; n < m.per_layer_asr.size(); ++n) {
                    csv << n + 1 << ',' << m.per_layer_asr[n] << '\n';
                }
            }
            if (!out_path.empty()) {
                std::ofstream csv = open_out(out_path);
                csv << "index,ratio\n";
                for (std::size_t i = 0; i < m.per_sample_ratio.size(); ++i) {
                    csv << i << ',' << m.per_sample_ratio[i] << '\n';
                }
            }
        };
    });

    // ood
    std::string scenario_text;
    std::string save_path;
    auto* ood = app.add_subcommand("ood", "shift the test distribution, re-label, and evaluate");
    ood->add_option("--data", data_path, "labeled in-distribution dataset")->required()->check(CLI::ExistingFile);
    ood->add_option("--params", params_path, "network parameters JSON")->required()->check(CLI::ExistingFile);
    ood->add_option("--scenario", scenario_text, "snr+N, snr-N, pmax+N or pmax-N")->required();
    ood->add_option("--out", out_path, "append the result row to this CSV");
    ood->add_option("--save", save_path, "write the shifted, re-labeled dataset");
    seeded(ood);
    ood->callback([&] {
        try {
            (void)OodScenario::parse(scenario_text);
        } catch (const std::invalid_argument& e) {
            throw CLI::ValidationError("--scenario", e.what());
        }
        run = [&] {
            const Dataset d = read_dataset(data_path);
            const NetworkParams p = load_params(params_path);
            const OodScenario s = OodScenario::parse(scenario_text);
            const Dataset shifted = ood_transform(d, s);
            if (!save_path.empty()) {
                write_dataset(save_path, shifted);
            }
            const double base = evaluate(d, p, seed).asr;
            const double moved = evaluate(shifted, p, seed).asr;
            std::ostringstream row;
            row << std::setprecision(kDigits) << s.name() << ',' << d.records.size() << ',' << base << ',' << moved
                << ',' << 100.0 * (base - moved) << '\n';
            const std::string header = "scenario,n,in_dist_asr,ood_asr,drop_pp\n";
            out << header << row.str();
            if (!out_path.empty()) {
                const bool fresh = !std::ifstream(out_path).good();
                std::ofstream csv(out_path, std::ios::binary | std::ios::app);
                if (!csv) {
                    throw std::runtime_error("cannot open '" + out_path + "' for writing");
                }
                csv << (fresh ? header : "") << row.str();
            }
        };
    });

    // bench
    int reps = 3;
    std::string du_cdf;
    std::string fp_cdf;
    auto* bench_cmd = app.add_subcommand("bench", "time the network against the oracle per record");
    bench_cmd->add_option("--data", data_path, "dataset")->required()->check(CLI::ExistingFile);
    bench_cmd->add_option("--params", params_path, "network parameters JSON")->required()->check(CLI::ExistingFile);
    bench_cmd->add_option("--reps", reps, "repetitions per record")->check(CLI::PositiveNumber);
    bench_cmd->add_option("--tol", oracle.tol, "oracle tolerance")->check(CLI::PositiveNumber);
    bench_cmd->add_option("--du-cdf", du_cdf, "network time CDF CSV");
    bench_cmd->add_option("--fp-cdf", fp_cdf, "oracle time CDF CSV");
    seeded(bench_cmd);
    bench_cmd->callback([&] {
        run = [&] {
            const Dataset d = read_dataset(data_path);
            SolverOptions opts = SolverOptions::oracle_defaults(d.config.num_users);
            opts.tol = oracle.tol;
            const TimingStats t = bench(d, load_params(params_path), opts, reps, seed);
            out << std::setprecision(6) << "solver,mean_s,median_s,p95_s\n"
                << "du," << t.du.mean << ',' << t.du.median << ',' << t.du.p95 << '\n'
                << "fp," << t.fp.mean << ',' << t.fp.median << ',' << t.fp.p95 << '\n';
            if (!du_cdf.empty()) {
                std::ofstream csv = open_out(du_cdf);
                write_cdf_csv(csv, t.du_seconds);
            }
            if (!fp_cdf.empty()) {
                std::ofstream csv = open_out(fp_cdf);
                write_cdf_csv(csv, t.fp_seconds);
            }
        };
    });

    // export-params
    std::string format = "csv";
    auto* exp = app.add_subcommand("export-params", "flatten trained parameters to CSV or canonical JSON");
    exp->add_option("--params", params_path, "network parameters JSON")->required()->check(CLI::ExistingFile);
    exp->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    exp->add_option("--out", out_path, "output file")->required();
    seeded(exp);
    exp->callback([&] {
        run = [&] {
            const NetworkParams p = load_params(params_path);
            if (format == "json") {
                save_params(out_path, p);
            } else {
                std::ofstream csv = open_out(out_path);
                csv << "layer,field,row,col,value\n";
                for (int n = 0; n < p.num_layers(); ++n) {
                    const LayerParams& l = p.layers[n];
                    for (Eigen::Index i = 0; i < l.w0.size(); ++i) {
                        csv << n + 1 << ",w0,0," << i << ',' << l.w0(i) << '\n';
                    }
                    for (Eigen::Index r = 0; r < l.w.rows(); ++r) {
                        for (Eigen::Index c = 0; c < l.w.cols(); ++c) {
                            csv << n + 1 << ",w," << r << ',' << c << ',' << l.w(r, c) << '\n';
                        }
                    }
                    for (Eigen::Index r = 0; r < l.eta.rows(); ++r) {
                        for (Eigen::Index c = 0; c < l.eta.cols(); ++c) {
                            csv << n + 1 << ",eta," << r << ',' << c << ',' << l.eta(r, c) << '\n';
                        }
                    }
                }
            }
            out << "exported " << p.num_layers() << " layers to " << out_path << '\n';
        };
    });

    std::vector<const char*> argv{"rsma"};
    for (const std::string& a : args) {
        argv.push_back(a.c_str());
    }
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, err, err);
        const auto parsed = app.get_subcommands();
        err << (parsed.empty() ? app.help() : parsed.front()->help());
        return kExitUsage;
    }

    try {
        run();
    } catch (const CLI::ValidationError& e) {
        err << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitOk;
}

} // namespace rsma
