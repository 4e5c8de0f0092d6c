#include "cli.hpp"

#include "mklpo/dataset.hpp"
#include "mklpo/error.hpp"
#include "mklpo/kernels.hpp"
#include "mklpo/measures.hpp"
#include "mklpo/model.hpp"
#include "mklpo/solver.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace mklpo::cli {

std::string format_number(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

namespace {

enum class Verbosity { quiet, info, trace };

Verbosity verbosity_from_env() {
    const char *raw = std::getenv("MKLPO_LOG");
    if (raw == nullptr || *raw == '\0') return Verbosity::info;
    const std::string v{raw};
    if (v == "quiet") return Verbosity::quiet;
    if (v == "info") return Verbosity::info;
    if (v == "trace") return Verbosity::trace;
    throw CLI::ValidationError("MKLPO_LOG", "expected quiet, info or trace, got '" + v + "'");
}

struct TrainFlags {
    std::string data;
    std::string format = "svm";
    std::string measure = "err";
    std::string kernels;
    double C = TrainConfig{}.C;
    double epsilon = TrainConfig{}.epsilon;
    int max_iters = TrainConfig{}.max_outer_iters;
    double qp_tolerance = TrainConfig{}.qp_tolerance;
    int tau_iters = TrainConfig{}.tau_step_iters;
    std::uint64_t seed = 0;
    std::optional<std::size_t> single_kernel;
    bool no_normalize = false;
};

void add_train_flags(CLI::App &cmd, TrainFlags &f, bool measure_list) {
    cmd.add_option("--data", f.data, "Training data, '-' for stdin")->required();
    cmd.add_option("--format", f.format, "svm or csv")->check(CLI::IsMember({"svm", "csv"}));
    if (!measure_list) cmd.add_option("--measure", f.measure, "err, f1, prbep, mcc or auc");
    cmd.add_option("--kernels", f.kernels, "Kernel bank, e.g. linear,poly:degree=2,offset=1,rbf:gamma=0.1");
    cmd.add_option("--c", f.C, "Slack trade-off");
    cmd.add_option("--epsilon", f.epsilon, "Cutting-plane tolerance");
    cmd.add_option("--max-iters", f.max_iters, "Outer iteration cap");
    cmd.add_option("--qp-tolerance", f.qp_tolerance, "KKT tolerance of the alpha step");
    cmd.add_option("--tau-iters", f.tau_iters, "Subgradient steps per tau update");
    cmd.add_option("--seed", f.seed, "Seed");
    cmd.add_option("--single-kernel", f.single_kernel, "Train on bank entry INDEX (0-based) only");
    cmd.add_flag("--no-normalize", f.no_normalize, "Keep raw Gram matrices");
}

TrainConfig config_from(const TrainFlags &f, MeasureKind measure) {
    TrainConfig c;
    c.C = f.C;
    c.epsilon = f.epsilon;
    c.max_outer_iters = f.max_iters;
    c.qp_tolerance = f.qp_tolerance;
    c.tau_step_iters = f.tau_iters;
    c.measure = measure;
    c.seed = f.seed;
    c.normalize_kernels = !f.no_normalize;
    c.validate();
    return c;
}

std::vector<KernelSpec> bank_specs(const TrainFlags &f, std::size_t feature_dim) {
    auto specs = f.kernels.empty() ? default_kernel_specs(feature_dim) : parse_kernel_specs(f.kernels);
    if (f.single_kernel) {
        if (*f.single_kernel >= specs.size()) {
            throw DataError("--single-kernel " + std::to_string(*f.single_kernel) + " is out of range for a bank of " +
                            std::to_string(specs.size()) + " kernels");
        }
    }
    return specs;
}

KernelBank make_bank(const TrainFlags &f, const std::vector<KernelSpec> &specs, const Eigen::MatrixXd &X) {
    KernelBank bank(specs, X, !f.no_normalize);
    return f.single_kernel ? bank.single(*f.single_kernel) : bank;
}

std::vector<MeasureKind> parse_measure_list(const std::string &text) {
    std::vector<MeasureKind> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_measure(item));
    if (out.empty()) throw DataError("empty measure list");
    return out;
}

std::ofstream open_output(const std::string &path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    return out;
}

nlohmann::ordered_json record_json(const IterationRecord &r) {
    nlohmann::ordered_json tau = nlohmann::ordered_json::array();
    for (Eigen::Index m = 0; m < r.tau.size(); ++m) tau.push_back(r.tau(m));
    return {{"iteration", r.iteration},
            {"working_set_size", r.working_set_size},
            {"violation", r.violation},
            {"xi", r.xi},
            {"objective_after_alpha", r.objective_after_alpha},
            {"objective", r.objective},
            {"tau", std::move(tau)}};
}

std::string tau_text(const Eigen::VectorXd &tau) {
    std::string s;
    for (Eigen::Index m = 0; m < tau.size(); ++m) s += (m ? " " : "") + format_number(tau(m));
    return s;
}

int cmd_train(const TrainFlags &f, const std::string &out_path, const std::string &log_path, Verbosity v,
              std::ostream &err) {
    const Dataset data = load_dataset(f.data, parse_data_format(f.format));
    const auto measure = parse_measure(f.measure);
    const TrainConfig config = config_from(f, measure);
    data.require_both_classes("training");
    const auto specs = bank_specs(f, data.feature_dim());

    std::optional<std::ofstream> log;
    if (!log_path.empty()) log = open_output(log_path);
    const auto progress = [&](const IterationRecord &r) {
        if (log) *log << record_json(r).dump() << '\n';
        if (v == Verbosity::trace) {
            err << "iter " << r.iteration << " |W|=" << r.working_set_size << " violation=" << format_number(r.violation)
                << " xi=" << format_number(r.xi) << " objective=" << format_number(r.objective) << '\n';
        }
    };
    const TrainResult result = mklpo_train(data, make_bank(f, specs, data.features()), config, progress);
    if (log) {
        *log << nlohmann::ordered_json{{"event", "done"},
                                       {"stop", std::string{stop_reason_name(result.stop)}},
                                       {"iterations", result.iterations},
                                       {"final_violation", result.final_violation},
                                       {"xi", result.xi},
                                       {"objective", result.objective}}
                    .dump()
             << '\n';
    }
    std::ofstream out = open_output(out_path);
    save(result.model, out);
    if (!out) throw DataError("failed writing '" + out_path + "'");
    if (v != Verbosity::quiet) {
        err << "trained " << measure_name(measure) << ": " << result.iterations << " iterations, "
            << stop_reason_name(result.stop) << ", objective " << format_number(result.objective) << ", tau "
            << tau_text(result.model.tau) << '\n';
    }
    return ok;
}

Model read_model(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open model '" + path + "'");
    return load(in);
}

int cmd_predict(const std::string &model_path, const std::string &data_path, const std::string &format,
                std::ostream &out) {
    const Model model = read_model(model_path);
    const Dataset data = load_dataset(data_path, parse_data_format(format));
    const Eigen::VectorXd scores = model.predict_scores(data.features());
    const Labels dec = decisions(scores);
    for (Eigen::Index i = 0; i < scores.size(); ++i) {
        out << format_number(scores(i)) << ' ' << (dec[static_cast<std::size_t>(i)] > 0 ? "+1" : "-1") << '\n';
    }
    return ok;
}

int cmd_evaluate(const std::string &model_path, const std::string &data_path, const std::string &format,
                 const std::string &measures, std::ostream &out) {
    const Model model = read_model(model_path);
    const Dataset data = load_dataset(data_path, parse_data_format(format));
    const auto kinds = measures.empty() ? std::vector<MeasureKind>(all_measures.begin(), all_measures.end())
                                        : parse_measure_list(measures);
    const Eigen::VectorXd scores = model.predict_scores(data.features());
    for (const auto kind : kinds) out << measure_name(kind) << ' ' << format_number(evaluate(kind, data.labels(), scores)) << '\n';
    return ok;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const auto n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

int cmd_cv(const TrainFlags &f, const std::string &measures, std::size_t folds, const std::string &out_path,
           bool wall_time, Verbosity v, std::ostream &out, std::ostream &err) {
    const Dataset data = load_dataset(f.data, parse_data_format(f.format));
    data.require_both_classes("cross-validation");
    const auto kinds = measures.empty() ? std::vector<MeasureKind>(all_measures.begin(), all_measures.end())
                                        : parse_measure_list(measures);
    for (const auto kind : kinds) (void)config_from(f, kind);
    const auto specs = bank_specs(f, data.feature_dim());
    const FoldPlan plan = stratified_folds(data.labels(), folds, f.seed);

    std::optional<std::ofstream> file;
    if (!out_path.empty()) file = open_output(out_path);
    std::ostream &report = file ? *file : out;
    report << "fold,measure,value,seconds,iterations\n";
    std::vector<std::vector<double>> values(kinds.size());
    for (std::size_t fold = 0; fold < folds; ++fold) {
        const Dataset train = data.subset(plan.train_indices(fold));
        const Dataset test = data.subset(plan.test_indices(fold));
        for (std::size_t k = 0; k < kinds.size(); ++k) {
            const auto start = std::chrono::steady_clock::now();
            const TrainResult result =
                mklpo_train(train, make_bank(f, specs, train.features()), config_from(f, kinds[k]));
            const double value = evaluate(kinds[k], test.labels(), result.model.predict_scores(test.features()));
            const double seconds =
                wall_time ? std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() : 0.0;
            values[k].push_back(value);
            report << fold << ',' << measure_name(kinds[k]) << ',' << format_number(value) << ','
                   << format_number(seconds) << ',' << result.iterations << '\n';
            if (v == Verbosity::trace) {
                err << "fold " << fold << ' ' << measure_name(kinds[k]) << ' ' << format_number(value) << '\n';
            }
        }
    }
    report.flush();
    if (!report) throw DataError("failed writing the report");
    if (v != Verbosity::quiet) {
        for (std::size_t k = 0; k < kinds.size(); ++k) {
            err << "median " << measure_name(kinds[k]) << ' ' << format_number(median(values[k])) << '\n';
        }
    }
    return ok;
}

/// Uniform double in [0, 1) from the top 53 bits.
double unit(std::mt19937_64 &gen) { return static_cast<double>(gen() >> 11) * 0x1.0p-53; }

double standard_normal(std::mt19937_64 &gen) {
    const double u1 = 1.0 - unit(gen);
    const double u2 = unit(gen);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

int cmd_synth(const std::string &kind, std::size_t n, std::uint64_t seed, double noise, const std::string &out_path,
              std::ostream &out) {
    if (n < 2) throw DataError("synth needs at least 2 samples");
    std::mt19937_64 gen(seed);
    const std::size_t n_pos = n / 2;
    Labels y(n);
    Eigen::MatrixXd X;
    if (kind == "rings") {
        // inner ring (radius 1) positive, outer ring (radius 2) negative
        X.resize(2, static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) {
            const bool pos = i < n_pos;
            const double r = pos ? 1.0 : 2.0;
            const double t = 2.0 * M_PI * unit(gen);
            X(0, static_cast<Eigen::Index>(i)) = r * std::cos(t) + noise * standard_normal(gen);
            X(1, static_cast<Eigen::Index>(i)) = r * std::sin(t) + noise * standard_normal(gen);
            y[i] = pos ? 1 : -1;
        }
    } else {
        X.resize(1, static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) {
            const bool pos = i < n_pos;
            const double x = 0.5 + unit(gen);
            X(0, static_cast<Eigen::Index>(i)) = pos ? x : -x;
            y[i] = pos ? 1 : -1;
        }
    }
    const Dataset data(std::move(X), std::move(y));
    if (out_path.empty() || out_path == "-") {
        write_sparse(out, data);
    } else {
        std::ofstream file = open_output(out_path);
        write_sparse(file, data);
    }
    return ok;
}

}  // namespace

int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
    CLI::App app{"Multiple kernel learning for multivariate performance measures", "mklpo"};
    app.require_subcommand(1);

    TrainFlags train_flags;
    std::string train_out;
    std::string train_log;
    auto *train = app.add_subcommand("train", "Train a model");
    add_train_flags(*train, train_flags, false);
    train->add_option("--out", train_out, "Model file")->required();
    train->add_option("--log", train_log, "Per-iteration progress as JSON lines");

    std::string model_path;
    std::string data_path;
    std::string data_format = "svm";
    std::string eval_measures;
    auto *predict = app.add_subcommand("predict", "Print '<score> <decision>' per sample");
    predict->add_option("--model", model_path, "Model file")->required();
    predict->add_option("--data", data_path, "Data, '-' for stdin")->required();
    predict->add_option("--format", data_format, "svm or csv")->check(CLI::IsMember({"svm", "csv"}));

    auto *evaluate_cmd = app.add_subcommand("evaluate", "Print measures of a model on data");
    evaluate_cmd->add_option("--model", model_path, "Model file")->required();
    evaluate_cmd->add_option("--data", data_path, "Data, '-' for stdin")->required();
    evaluate_cmd->add_option("--format", data_format, "svm or csv")->check(CLI::IsMember({"svm", "csv"}));
    evaluate_cmd->add_option("--measures", eval_measures, "Comma separated measures (default: all)");

    TrainFlags cv_flags;
    std::string cv_measures;
    std::size_t cv_folds = 10;
    std::string cv_out;
    std::string cv_timing = "wall";
    auto *cv = app.add_subcommand("cv", "Stratified k-fold cross-validation report");
    add_train_flags(*cv, cv_flags, true);
    cv->add_option("--measure,--measures", cv_measures, "Comma separated measures (default: all)");
    cv->add_option("--folds", cv_folds, "Fold count");
    cv->add_option("--out", cv_out, "CSV report (default: stdout)");
    cv->add_option("--timing", cv_timing, "wall or none")->check(CLI::IsMember({"wall", "none"}));

    std::string synth_kind = "rings";
    std::size_t synth_n = 200;
    std::uint64_t synth_seed = 0;
    double synth_noise = 0.1;
    std::string synth_out;
    auto *synth = app.add_subcommand("synth", "Write a synthetic dataset in sparse format");
    synth->add_option("--kind", synth_kind, "rings or separable")->check(CLI::IsMember({"rings", "separable"}));
    synth->add_option("--n", synth_n, "Sample count");
    synth->add_option("--seed", synth_seed, "Seed");
    synth->add_option("--noise", synth_noise, "Radial noise of rings")->check(CLI::NonNegativeNumber);
    synth->add_option("--out", synth_out, "Output path (default: stdout)");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp &) {
        out << app.help();
        return ok;
    } catch (const CLI::CallForAllHelp &) {
        out << app.help("", CLI::AppFormatMode::All);
        return ok;
    } catch (const CLI::ParseError &e) {
        err << "mklpo: " << e.what() << '\n';
        return usage_error;
    }

    try {
        const Verbosity v = verbosity_from_env();
        if (train->parsed()) return cmd_train(train_flags, train_out, train_log, v, err);
        if (predict->parsed()) return cmd_predict(model_path, data_path, data_format, out);
        if (evaluate_cmd->parsed()) return cmd_evaluate(model_path, data_path, data_format, eval_measures, out);
        if (cv->parsed()) return cmd_cv(cv_flags, cv_measures, cv_folds, cv_out, cv_timing == "wall", v, out, err);
        return cmd_synth(synth_kind, synth_n, synth_seed, synth_noise, synth_out, out);
    } catch (const CLI::ValidationError &e) {
        err << "mklpo: " << e.what() << '\n';
        return usage_error;
    } catch (const DataError &e) {
        err << "mklpo: " << e.what() << '\n';
        return data_error;
    } catch (const Error &e) {
        err << "mklpo: " << e.what() << '\n';
        return solver_error;
    }
}

}  // namespace mklpo::cli
