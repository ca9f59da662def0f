#ifndef HYPERTRAIN_CONFIG_HPP
#define HYPERTRAIN_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hypertrain/algorithms.hpp"
#include "hypertrain/data.hpp"
#include "hypertrain/errors.hpp"
#include "hypertrain/models.hpp"

namespace hypertrain {

/// Synthetic or file-backed dataset selection.
struct DatasetSpec {
    std::string kind;  // "ridge" | "digits" | "idx"
    std::string images, labels;
    std::size_t n = 0, d = 0;
    double noise_sd = 0.0;
};

/// A fully resolved experiment file.
struct Experiment {
    std::string kind;  // global | joint | cross-validate | random-search | surrogate-compare | gradcheck
    std::string out_dir = "out";
    DatasetSpec dataset;
    SplitSpec split;
    RunConfig run;

    std::vector<HyperVector> proposals;  // cross-validate
    std::size_t rs_samples = 0;          // random-search
    HyperVector rs_lo, rs_hi;
    std::size_t n_fit = 25, n_eval = 500;  // surrogate-compare
    double delta = 0.05;

    nlohmann::json resolved;  // defaults expanded, for summary.json
};

/// CLI flag overrides applied after parsing.
struct Overrides {
    bool has_seed = false;
    std::uint64_t seed = 0;
    std::string out_dir;
    bool paper_sigma = false;  // sampler.sigma = 1e-5, the local-sampling preset
};

namespace cfgdetail {

using nlohmann::json;

inline void check_keys(const json& obj, const std::string& ctx, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw ConfigError(ctx + ": expected an object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) {
                ok = true;
                break;
            }
        if (!ok) throw ConfigError("unknown key '" + ctx + "." + it.key() + "'");
    }
}

template <class T>
T want(const json& obj, const std::string& ctx, const char* key) {
    if (!obj.contains(key)) throw ConfigError("missing key '" + ctx + "." + key + "'");
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("bad value for key '" + ctx + "." + key + "'");
    }
}

template <class T>
T want_or(const json& obj, const std::string& ctx, const char* key, T fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("bad value for key '" + ctx + "." + key + "'");
    }
}

/// scalar -> broadcast to dim; array -> checked length
inline HyperVector want_vector(const json& obj, const std::string& ctx, const char* key, std::size_t dim) {
    if (!obj.contains(key)) throw ConfigError("missing key '" + ctx + "." + key + "'");
    const json& v = obj.at(key);
    if (v.is_number()) return HyperVector(dim, v.get<double>());
    if (v.is_array()) {
        HyperVector out;
        for (const auto& x : v) {
            if (!x.is_number()) throw ConfigError("bad value for key '" + ctx + "." + key + "'");
            out.push_back(x.get<double>());
        }
        if (out.size() != dim)
            throw ConfigError("key '" + ctx + "." + key + "' has length " + std::to_string(out.size()) +
                              ", expected " + std::to_string(dim));
        return out;
    }
    throw ConfigError("bad value for key '" + ctx + "." + key + "'");
}

} // namespace cfgdetail

inline Experiment parse_experiment(const nlohmann::json& j, const Overrides& ov = {}) {
    using nlohmann::json;
    using namespace cfgdetail;

    check_keys(j, "config",
               {"experiment", "seed", "out_dir", "dataset", "split", "model", "reg", "hypernet", "sampler", "optim",
                "batch", "steps", "lambda_init", "proposals", "grid", "random_search", "surrogate"});
    Experiment ex;
    ex.kind = want<std::string>(j, "config", "experiment");
    const bool needs_data = ex.kind != "gradcheck";
    ex.run.seed = want_or<std::uint64_t>(j, "config", "seed", 0);
    ex.out_dir = want_or<std::string>(j, "config", "out_dir", "out");

    if (ov.has_seed) ex.run.seed = ov.seed;
    if (!ov.out_dir.empty()) ex.out_dir = ov.out_dir;

    static const std::vector<std::string> kinds{"global",        "joint",             "cross-validate",
                                                "random-search", "surrogate-compare", "gradcheck"};
    if (std::find(kinds.begin(), kinds.end(), ex.kind) == kinds.end())
        throw ConfigError("bad value for key 'config.experiment': '" + ex.kind + "'");

    if (needs_data) {
        const json& d = j.contains("dataset") ? j.at("dataset") : throw ConfigError("missing key 'config.dataset'");
        check_keys(d, "dataset", {"kind", "n", "d", "noise_sd", "images", "labels"});
        ex.dataset.kind = want<std::string>(d, "dataset", "kind");
        if (ex.dataset.kind == "ridge") {
            ex.dataset.n = want<std::size_t>(d, "dataset", "n");
            ex.dataset.d = want<std::size_t>(d, "dataset", "d");
            ex.dataset.noise_sd = want<double>(d, "dataset", "noise_sd");
        } else if (ex.dataset.kind == "digits") {
            ex.dataset.n = want<std::size_t>(d, "dataset", "n");
        } else if (ex.dataset.kind == "idx") {
            ex.dataset.images = want<std::string>(d, "dataset", "images");
            ex.dataset.labels = want<std::string>(d, "dataset", "labels");
            if (!std::filesystem::exists(ex.dataset.images))
                throw ConfigError("key 'dataset.images': path does not exist: " + ex.dataset.images);
            if (!std::filesystem::exists(ex.dataset.labels))
                throw ConfigError("key 'dataset.labels': path does not exist: " + ex.dataset.labels);
        } else {
            throw ConfigError("bad value for key 'dataset.kind': '" + ex.dataset.kind + "'");
        }

        const json& s = j.contains("split") ? j.at("split") : throw ConfigError("missing key 'config.split'");
        check_keys(s, "split", {"train", "valid", "test"});
        ex.split.n_train = want<std::size_t>(s, "split", "train");
        ex.split.n_valid = want<std::size_t>(s, "split", "valid");
        ex.split.n_test = want_or<std::size_t>(s, "split", "test", 0);
        ex.split.seed = ex.run.seed;

        const json& m = j.contains("model") ? j.at("model") : throw ConfigError("missing key 'config.model'");
        check_keys(m, "model", {"layers", "task", "bias"});
        ex.run.model.layer_sizes = want<std::vector<std::size_t>>(m, "model", "layers");
        if (ex.run.model.layer_sizes.size() < 2) throw ConfigError("key 'model.layers' needs at least two sizes");
        const std::string task = want<std::string>(m, "model", "task");
        if (task == "softmax") ex.run.model.task = LossTask::SoftmaxCrossEntropy;
        else if (task == "mse") ex.run.model.task = LossTask::MeanSquaredError;
        else throw ConfigError("bad value for key 'model.task': '" + task + "'");
        ex.run.model.bias = want_or<bool>(m, "model", "bias", true);

        const std::string reg = want_or<std::string>(j, "config", "reg", "global");
        const auto layout = make_layout(ex.run.model);
        if (reg == "global") ex.run.reg = make_reg(RegMode::Global, layout);
        else if (reg == "per-weight") ex.run.reg = make_reg(RegMode::PerWeight, layout);
        else throw ConfigError("bad value for key 'config.reg': '" + reg + "'");

        const bool needs_hypernet =
            ex.kind == "global" || ex.kind == "joint" || ex.kind == "surrogate-compare";
        if (needs_hypernet) {
            const json& h = j.contains("hypernet") ? j.at("hypernet") : throw ConfigError("missing key 'config.hypernet'");
            check_keys(h, "hypernet", {"family", "bottleneck", "hidden"});
            const std::string fam = want<std::string>(h, "hypernet", "family");
            if (fam == "linear") ex.run.hypernet.family = HyperNetFamily::Linear;
            else if (fam == "factorized") ex.run.hypernet.family = HyperNetFamily::Factorized;
            else if (fam == "mlp") ex.run.hypernet.family = HyperNetFamily::Mlp;
            else throw ConfigError("bad value for key 'hypernet.family': '" + fam + "'");
            ex.run.hypernet.bottleneck = want_or<std::size_t>(h, "hypernet", "bottleneck", 0);
            ex.run.hypernet.hidden = want_or<std::size_t>(h, "hypernet", "hidden", 0);
            ex.run.hypernet.lambda_dim = ex.run.reg.dim;
            ex.run.hypernet.theta_dim = layout.total;
            make_hypernet_layout(ex.run.hypernet);  // validate family constraints now
        }

        const bool needs_sampler = needs_hypernet;
        if (needs_sampler) {
            const json& sp = j.contains("sampler") ? j.at("sampler") : throw ConfigError("missing key 'config.sampler'");
            check_keys(sp, "sampler", {"kind", "mean", "sd", "sigma"});
            const std::string kind = want<std::string>(sp, "sampler", "kind");
            if (kind == "global") {
                ex.run.sampler.kind = SamplerKind::GlobalGaussian;
                ex.run.sampler.mean = want_vector(sp, "sampler", "mean", ex.run.reg.dim);
                ex.run.sampler.sd = want_vector(sp, "sampler", "sd", ex.run.reg.dim);
                for (double v : ex.run.sampler.sd)
                    if (!(v > 0.0)) throw ConfigError("key 'sampler.sd' entries must be > 0");
            } else if (kind == "local") {
                ex.run.sampler.kind = SamplerKind::LocalGaussian;
                ex.run.sampler.sigma = want_or<double>(sp, "sampler", "sigma", 0.1);
                if (!(ex.run.sampler.sigma > 0.0)) throw ConfigError("key 'sampler.sigma' must be > 0");
            } else {
                throw ConfigError("bad value for key 'sampler.kind': '" + kind + "'");
            }
            if (ov.paper_sigma) ex.run.sampler.sigma = 1e-5;
        }

        if (j.contains("optim")) {
            const json& o = j.at("optim");
            check_keys(o, "optim", {"step_phi", "step_lambda", "step_theta", "beta1", "beta2", "eps", "inner"});
            ex.run.step_phi = want_or<double>(o, "optim", "step_phi", ex.run.step_phi);
            ex.run.step_lambda = want_or<double>(o, "optim", "step_lambda", ex.run.step_lambda);
            ex.run.step_theta = want_or<double>(o, "optim", "step_theta", ex.run.step_theta);
            ex.run.adam_beta1 = want_or<double>(o, "optim", "beta1", ex.run.adam_beta1);
            ex.run.adam_beta2 = want_or<double>(o, "optim", "beta2", ex.run.adam_beta2);
            ex.run.adam_eps = want_or<double>(o, "optim", "eps", ex.run.adam_eps);
            const std::string inner = want_or<std::string>(o, "optim", "inner", "adam");
            if (inner == "adam") ex.run.inner_opt = InnerOpt::Adam;
            else if (inner == "sgd") ex.run.inner_opt = InnerOpt::Sgd;
            else throw ConfigError("bad value for key 'optim.inner': '" + inner + "'");
        }
        if (j.contains("batch")) {
            const json& b = j.at("batch");
            check_keys(b, "batch", {"data", "valid", "lambda"});
            ex.run.data_batch = want_or<std::size_t>(b, "batch", "data", 0);
            ex.run.valid_batch = want_or<std::size_t>(b, "batch", "valid", 0);
            ex.run.lambda_batch = want_or<std::size_t>(b, "batch", "lambda", 8);
            if (ex.run.lambda_batch < 1) throw ConfigError("key 'batch.lambda' must be >= 1");
        }
        if (j.contains("steps")) {
            const json& st = j.at("steps");
            check_keys(st, "steps", {"hypernet", "hyperparam", "joint", "inner"});
            ex.run.steps_hypernet = want_or<std::size_t>(st, "steps", "hypernet", ex.run.steps_hypernet);
            ex.run.steps_hyper = want_or<std::size_t>(st, "steps", "hyperparam", ex.run.steps_hyper);
            ex.run.steps_joint = want_or<std::size_t>(st, "steps", "joint", ex.run.steps_joint);
            ex.run.steps_inner = want_or<std::size_t>(st, "steps", "inner", ex.run.steps_inner);
        }
        if (j.contains("lambda_init")) ex.run.lambda_init = want_vector(j, "config", "lambda_init", ex.run.reg.dim);

        if (ex.kind == "cross-validate") {
            if (j.contains("proposals")) {
                const json& p = j.at("proposals");
                if (!p.is_array() || p.empty()) throw ConfigError("key 'config.proposals' must be a non-empty array");
                for (const auto& entry : p) {
                    if (entry.is_number()) ex.proposals.push_back(HyperVector(ex.run.reg.dim, entry.get<double>()));
                    else if (entry.is_array()) {
                        HyperVector v;
                        for (const auto& x : entry) v.push_back(x.get<double>());
                        if (v.size() != ex.run.reg.dim)
                            throw ConfigError("key 'config.proposals' entry has wrong length");
                        ex.proposals.push_back(std::move(v));
                    } else throw ConfigError("bad value inside key 'config.proposals'");
                }
            } else if (j.contains("grid")) {
                const json& g = j.at("grid");
                check_keys(g, "grid", {"lo", "hi", "count"});
                const double lo = want<double>(g, "grid", "lo");
                const double hi = want<double>(g, "grid", "hi");
                const std::size_t count = want<std::size_t>(g, "grid", "count");
                if (count < 1) throw ConfigError("key 'grid.count' must be >= 1");
                for (std::size_t i = 0; i < count; ++i) {
                    const double v = count == 1 ? lo : lo + (hi - lo) * double(i) / double(count - 1);
                    ex.proposals.push_back(HyperVector(ex.run.reg.dim, v));
                }
            } else {
                throw ConfigError("missing key 'config.proposals' (or 'config.grid')");
            }
        }
        if (ex.kind == "random-search") {
            const json& r = j.contains("random_search") ? j.at("random_search")
                                                        : throw ConfigError("missing key 'config.random_search'");
            check_keys(r, "random_search", {"n_samples", "lo", "hi"});
            ex.rs_samples = want<std::size_t>(r, "random_search", "n_samples");
            ex.rs_lo = want_vector(r, "random_search", "lo", ex.run.reg.dim);
            ex.rs_hi = want_vector(r, "random_search", "hi", ex.run.reg.dim);
        }
        if (ex.kind == "surrogate-compare") {
            const json& sc = j.contains("surrogate") ? j.at("surrogate") : json::object();
            check_keys(sc, "surrogate", {"n_fit", "n_eval", "delta"});
            ex.n_fit = want_or<std::size_t>(sc, "surrogate", "n_fit", 25);
            ex.n_eval = want_or<std::size_t>(sc, "surrogate", "n_eval", 500);
            ex.delta = want_or<double>(sc, "surrogate", "delta", 0.05);
        }
    }

    // Resolved config with every default expanded, kept for summary.json.
    json r;
    r["experiment"] = ex.kind;
    r["seed"] = ex.run.seed;
    r["out_dir"] = ex.out_dir;
    if (needs_data) {
        r["dataset"] = {{"kind", ex.dataset.kind}};
        if (ex.dataset.kind == "ridge")
            r["dataset"].update({{"n", ex.dataset.n}, {"d", ex.dataset.d}, {"noise_sd", ex.dataset.noise_sd}});
        if (ex.dataset.kind == "digits") r["dataset"].update({{"n", ex.dataset.n}});
        if (ex.dataset.kind == "idx")
            r["dataset"].update({{"images", ex.dataset.images}, {"labels", ex.dataset.labels}});
        r["split"] = {{"train", ex.split.n_train}, {"valid", ex.split.n_valid}, {"test", ex.split.n_test}};
        r["model"] = {{"layers", ex.run.model.layer_sizes},
                      {"task", ex.run.model.task == LossTask::SoftmaxCrossEntropy ? "softmax" : "mse"},
                      {"bias", ex.run.model.bias}};
        r["reg"] = ex.run.reg.mode == RegMode::Global ? "global" : "per-weight";
        r["optim"] = {{"step_phi", ex.run.step_phi},   {"step_lambda", ex.run.step_lambda},
                      {"step_theta", ex.run.step_theta}, {"beta1", ex.run.adam_beta1},
                      {"beta2", ex.run.adam_beta2},     {"eps", ex.run.adam_eps},
                      {"inner", ex.run.inner_opt == InnerOpt::Adam ? "adam" : "sgd"}};
        r["batch"] = {{"data", ex.run.data_batch}, {"valid", ex.run.valid_batch}, {"lambda", ex.run.lambda_batch}};
        r["steps"] = {{"hypernet", ex.run.steps_hypernet},
                      {"hyperparam", ex.run.steps_hyper},
                      {"joint", ex.run.steps_joint},
                      {"inner", ex.run.steps_inner}};
        if (ex.kind == "global" || ex.kind == "joint" || ex.kind == "surrogate-compare") {
            r["hypernet"] = {{"family", family_name(ex.run.hypernet.family)},
                             {"bottleneck", ex.run.hypernet.bottleneck},
                             {"hidden", ex.run.hypernet.hidden},
                             {"lambda_dim", ex.run.hypernet.lambda_dim},
                             {"theta_dim", ex.run.hypernet.theta_dim}};
            if (ex.run.sampler.kind == SamplerKind::GlobalGaussian)
                r["sampler"] = {{"kind", "global"}, {"mean", ex.run.sampler.mean}, {"sd", ex.run.sampler.sd}};
            else
                r["sampler"] = {{"kind", "local"}, {"sigma", ex.run.sampler.sigma}};
        }
        if (!ex.run.lambda_init.empty()) r["lambda_init"] = ex.run.lambda_init;
        if (ex.kind == "cross-validate") {
            json props = json::array();
            for (const auto& p : ex.proposals) props.push_back(p);
            r["proposals"] = props;
        }
        if (ex.kind == "random-search")
            r["random_search"] = {{"n_samples", ex.rs_samples}, {"lo", ex.rs_lo}, {"hi", ex.rs_hi}};
        if (ex.kind == "surrogate-compare")
            r["surrogate"] = {{"n_fit", ex.n_fit}, {"n_eval", ex.n_eval}, {"delta", ex.delta}};
    }
    ex.resolved = std::move(r);
    return ex;
}

inline Experiment load_experiment(const std::string& path, const Overrides& ov = {}) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open config " + path);
    nlohmann::json j = nlohmann::json::parse(is, nullptr, false);
    if (j.is_discarded()) throw ConfigError("config " + path + " is not valid JSON");
    return parse_experiment(j, ov);
}

/// Materialize the configured dataset. Synthetic kinds draw from a stream
/// derived from the experiment seed.
inline Dataset build_dataset(const DatasetSpec& spec, std::uint64_t seed) {
    if (spec.kind == "ridge") return make_ridge_synthetic(spec.n, spec.d, spec.noise_sd, derive_seed(seed, {0xda7a}));
    if (spec.kind == "digits") return make_digits_synthetic(spec.n, derive_seed(seed, {0xda7b}));
    return load_idx(spec.images, spec.labels);
}

} // namespace hypertrain

#endif
