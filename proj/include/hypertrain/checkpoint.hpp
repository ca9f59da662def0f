#ifndef HYPERTRAIN_CHECKPOINT_HPP
#define HYPERTRAIN_CHECKPOINT_HPP

#include <cstdint>
#include <fstream>
#include <string>
#include <utility>

#include <json.hpp>

#include "hypertrain/errors.hpp"
#include "hypertrain/hypernets.hpp"

namespace hypertrain {

/// Hypernet checkpoint: one file holding a JSON header line (family, dims,
/// seed) followed by the flat weight vector as little-endian doubles.
inline void save_hypernet(const std::string& path, const HyperNetSpec& spec, const HyperNetParams& phi) {
    nlohmann::json header{{"format", "hypertrain-hypernet-v1"},
                          {"family", family_name(spec.family)},
                          {"lambda_dim", spec.lambda_dim},
                          {"theta_dim", spec.theta_dim},
                          {"bottleneck", spec.bottleneck},
                          {"hidden", spec.hidden},
                          {"seed", phi.seed},
                          {"count", phi.flat.size()}};
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write " + path);
    os << header.dump() << '\n';
    os.write(reinterpret_cast<const char*>(phi.flat.data()),
             std::streamsize(phi.flat.size() * sizeof(double)));
    if (!os) throw IoError("write failed on " + path);
}

inline std::pair<HyperNetSpec, HyperNetParams> load_hypernet(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path);
    std::string line;
    if (!std::getline(is, line)) throw ParseError(path + ": missing header line at byte 0");
    nlohmann::json header = nlohmann::json::parse(line, nullptr, false);
    if (header.is_discarded() || header.value("format", "") != "hypertrain-hypernet-v1")
        throw ParseError(path + ": bad checkpoint header at byte 0");
    HyperNetSpec spec;
    const std::string fam = header.at("family").get<std::string>();
    if (fam == "linear") spec.family = HyperNetFamily::Linear;
    else if (fam == "factorized") spec.family = HyperNetFamily::Factorized;
    else if (fam == "mlp") spec.family = HyperNetFamily::Mlp;
    else throw ParseError(path + ": unknown hypernet family '" + fam + "'");
    spec.lambda_dim = header.at("lambda_dim").get<std::size_t>();
    spec.theta_dim = header.at("theta_dim").get<std::size_t>();
    spec.bottleneck = header.at("bottleneck").get<std::size_t>();
    spec.hidden = header.at("hidden").get<std::size_t>();
    HyperNetParams phi;
    phi.seed = header.at("seed").get<std::uint64_t>();
    const std::size_t count = header.at("count").get<std::size_t>();
    if (count != make_hypernet_layout(spec).total)
        throw ParseError(path + ": weight count " + std::to_string(count) + " does not match the header layout");
    phi.flat.resize(count);
    is.read(reinterpret_cast<char*>(phi.flat.data()), std::streamsize(count * sizeof(double)));
    if (std::size_t(is.gcount()) != count * sizeof(double))
        throw ParseError(path + ": truncated payload after header (want " + std::to_string(count * sizeof(double)) +
                         " bytes)");
    return {spec, std::move(phi)};
}

} // namespace hypertrain

#endif
