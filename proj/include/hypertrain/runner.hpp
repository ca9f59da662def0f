#ifndef HYPERTRAIN_RUNNER_HPP
#define HYPERTRAIN_RUNNER_HPP

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <json.hpp>

#include "hypertrain/algorithms.hpp"
#include "hypertrain/baselines.hpp"
#include "hypertrain/checkpoint.hpp"
#include "hypertrain/config.hpp"
#include "hypertrain/gradcheck_suite.hpp"
#include "hypertrain/svg.hpp"

namespace hypertrain {

constexpr const char* kVersion = "0.1.0";

namespace rundetail {

using nlohmann::json;

inline json base_summary(const Experiment& ex) {
    json s;
    s["experiment"] = ex.kind;
    s["seed"] = ex.run.seed;
    s["resolved_config"] = ex.resolved;
    s["versions"] = {{"hypertrain", kVersion}, {"summary_format", 1}};
    return s;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write " + path.string());
    os << text;
    if (!os) throw IoError("write failed on " + path.string());
}

inline void write_summary(const std::filesystem::path& dir, const json& summary) {
    write_text(dir / "summary.json", summary.dump(2) + "\n");
}

inline void write_record(const std::filesystem::path& dir, const RunRecord& record) {
    std::ostringstream csv;
    record.write_csv(csv);
    write_text(dir / "run.csv", csv.str());

    SvgSeries train{"train_loss", "#d62728", {}};
    SvgSeries valid{"valid_loss", "#1f77b4", {}};
    for (const RunRow& r : record.rows) {
        train.y.push_back(r.train_loss);
        valid.y.push_back(r.valid_loss);
    }
    std::ostringstream svg;
    write_line_plot(svg, {train, valid}, "step", "loss");
    write_text(dir / "loss_curves.svg", svg.str());
}

inline json lambda_stats(const HyperVector& lambda) {
    json s;
    s["norm"] = norm2(lambda);
    s["first"] = lambda.empty() ? 0.0 : lambda[0];
    s["dim"] = lambda.size();
    if (lambda.size() <= 64) s["values"] = lambda;
    return s;
}

/// Synthesize a step-schema record from per-proposal validation losses so
/// cross-validation runs share the run.csv format (train_loss is not
/// measured there and is written as nan).
inline RunRecord proposals_record(const std::vector<HyperVector>& proposals, const DenseVector& losses) {
    RunRecord rec;
    for (std::size_t i = 0; i < proposals.size(); ++i)
        rec.rows.push_back({i, std::nan(""), losses[i], norm2(proposals[i]), proposals[i][0], 0.0});
    return rec;
}

} // namespace rundetail

/// `hypertrain run <config>`: execute the configured experiment and emit
/// run.csv, summary.json and loss_curves.svg into out_dir.
/// Exit codes: 0 ok, 2 config error, 3 numeric failure, 4 i/o failure.
inline int run_experiment(const std::string& config_path, const Overrides& ov = {}) {
    using rundetail::json;
    try {
        const Experiment ex = load_experiment(config_path, ov);
        if (ex.kind == "surrogate-compare")
            throw ConfigError("key 'config.experiment': use the 'compare' subcommand for surrogate-compare");

        json summary = rundetail::base_summary(ex);
        const std::filesystem::path dir(ex.out_dir);

        if (ex.kind == "gradcheck") {
            const auto probes = run_gradcheck_suite(ex.run.seed);
            double worst = 0.0;
            json detail = json::array();
            for (const auto& p : probes) {
                worst = std::max(worst, p.max_rel_error);
                detail.push_back({{"probe", p.name}, {"max_rel_error", p.max_rel_error}});
            }
            summary["max_rel_error"] = worst;
            summary["tolerance"] = 1e-4;
            summary["pass"] = worst <= 1e-4;
            summary["probes"] = detail;
            std::filesystem::create_directories(dir);
            rundetail::write_summary(dir, summary);
            std::cout << "gradcheck max relative error " << worst << (worst <= 1e-4 ? " (pass)" : " (FAIL)") << "\n";
            return 0;
        }

        const Dataset data = build_dataset(ex.dataset, ex.run.seed);
        const Splits splits = make_splits(data, ex.split);

        if (ex.kind == "global" || ex.kind == "joint") {
            const HyperTrainResult res = ex.kind == "global" ? hyper_train_global(ex.run, data, splits)
                                                             : hyper_train_joint(ex.run, data, splits);
            std::filesystem::create_directories(dir);
            rundetail::write_record(dir, res.record);
            save_hypernet((dir / "hypernet.hnet").string(), ex.run.hypernet, res.phi);
            summary["lambda_final"] = rundetail::lambda_stats(res.lambda_hat);
            if (!res.record.rows.empty()) {
                summary["final_train_loss"] = res.record.rows.back().train_loss;
                summary["final_valid_loss"] = res.record.rows.back().valid_loss;
            }
            summary["train_grad_evals"] = res.record.train_grad_evals;
            summary["total_seconds"] = res.record.total_seconds;
            summary["checkpoint"] = "hypernet.hnet";
            rundetail::write_summary(dir, summary);
            return 0;
        }

        if (ex.kind == "cross-validate" || ex.kind == "random-search") {
            CrossValResult cv;
            std::vector<HyperVector> proposals;
            if (ex.kind == "cross-validate") {
                proposals = ex.proposals;
                cv = cross_validate(ex.run, data, splits, proposals);
            } else {
                RandomSearchResult rs = random_search(ex.run, data, splits, ex.rs_samples, ex.rs_lo, ex.rs_hi);
                proposals = std::move(rs.proposals);
                cv = std::move(rs.cv);
            }
            std::filesystem::create_directories(dir);
            rundetail::write_record(dir, rundetail::proposals_record(proposals, cv.valid_losses));
            summary["best_index"] = cv.best_index;
            summary["best_lambda"] = rundetail::lambda_stats(cv.best_lambda);
            summary["best_valid_loss"] = cv.valid_losses[cv.best_index];
            summary["valid_losses"] = cv.valid_losses;
            summary["train_grad_evals"] = cv.grad_evals;
            rundetail::write_summary(dir, summary);
            return 0;
        }

        throw ConfigError("key 'config.experiment': unhandled kind '" + ex.kind + "'");
    } catch (const ConfigError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << e.what() << "\n";
        return 3;
    } catch (const ParseError& e) {
        std::cerr << e.what() << "\n";
        return 4;
    } catch (const IoError& e) {
        std::cerr << e.what() << "\n";
        return 4;
    }
}

/// `hypertrain compare <config>`: surrogate comparison; writes errors.csv,
/// one histogram svg per method, and summary.json with per-method stats.
inline int run_compare(const std::string& config_path, const Overrides& ov = {}) {
    using rundetail::json;
    try {
        const Experiment ex = load_experiment(config_path, ov);
        if (ex.kind != "surrogate-compare")
            throw ConfigError("key 'config.experiment': compare expects 'surrogate-compare', got '" + ex.kind + "'");
        const Dataset data = build_dataset(ex.dataset, ex.run.seed);
        const Splits splits = make_splits(data, ex.split);
        const SurrogateComparison cmp = surrogate_comparison(ex.run, data, splits, ex.n_fit, ex.n_eval, ex.delta);

        const std::filesystem::path dir(ex.out_dir);
        std::filesystem::create_directories(dir);

        const std::size_t lam_dim = ex.run.reg.dim;
        std::ostringstream csv;
        csv << "method";
        for (std::size_t j = 0; j < lam_dim; ++j) csv << ",lambda_" << j;
        csv << ",true_loss,predicted_loss,error\n";
        char buf[64];
        auto emit = [&](const SurrogateArm& arm) {
            for (std::size_t i = 0; i < cmp.eval_lambdas.size(); ++i) {
                csv << arm.name;
                for (std::size_t j = 0; j < lam_dim; ++j) {
                    std::snprintf(buf, sizeof buf, ",%.17g", cmp.eval_lambdas[i][j]);
                    csv << buf;
                }
                std::snprintf(buf, sizeof buf, ",%.17g,%.17g,%.17g\n", cmp.true_losses[i], arm.predictions[i],
                              arm.errors[i]);
                csv << buf;
            }
        };
        emit(cmp.gp);
        emit(cmp.hypernet_fixed);
        emit(cmp.hypernet_trained);
        rundetail::write_text(dir / "errors.csv", csv.str());

        json summary = rundetail::base_summary(ex);
        for (const SurrogateArm* arm : {&cmp.gp, &cmp.hypernet_fixed, &cmp.hypernet_trained}) {
            std::ostringstream svg;
            write_histogram(svg, arm->errors, 40, "inferred - true loss");
            rundetail::write_text(dir / ("histogram_" + arm->name + ".svg"), svg.str());
            summary["methods"][arm->name] = {{"mean_error", arm->mean_error},
                                             {"sd_error", arm->sd_error},
                                             {"frac_within_delta", arm->frac_within},
                                             {"grad_evals", arm->grad_evals}};
        }
        summary["delta"] = cmp.delta;
        summary["n_fit"] = ex.n_fit;
        summary["n_eval"] = ex.n_eval;
        summary["fit_grad_evals"] = cmp.fit_grad_evals;
        if (ex.n_eval == 0) summary["note"] = "no evaluation data";
        rundetail::write_summary(dir, summary);
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << e.what() << "\n";
        return 3;
    } catch (const ParseError& e) {
        std::cerr << e.what() << "\n";
        return 4;
    } catch (const IoError& e) {
        std::cerr << e.what() << "\n";
        return 4;
    }
}

/// `hypertrain gradcheck [--seed N]`: run the probe battery and print the
/// worst relative error.
inline int run_gradcheck_cli(std::uint64_t seed) {
    const auto probes = run_gradcheck_suite(seed);
    double worst = 0.0;
    for (const auto& p : probes) {
        std::cout << p.name << ": " << p.max_rel_error << "\n";
        worst = std::max(worst, p.max_rel_error);
    }
    std::cout << "max relative error " << worst << (worst <= 1e-4 ? " (pass at 1e-4)" : " (FAIL at 1e-4)") << "\n";
    return worst <= 1e-4 ? 0 : 3;
}

} // namespace hypertrain

#endif
