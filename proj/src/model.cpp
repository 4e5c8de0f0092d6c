#include "mklpo/model.hpp"

#include "mklpo/error.hpp"

#include <json.hpp>

#include <cmath>
#include <istream>
#include <ostream>
#include <string>

namespace mklpo {

using json = nlohmann::ordered_json;

void Model::validate() const {
    const auto M = kernel_specs.size();
    if (M == 0) throw DataError("model: no kernels");
    if (static_cast<std::size_t>(tau.size()) != M) throw DataError("model: tau length differs from kernel count");
    check_simplex(tau);
    if (normalization_factors.size() != M) throw DataError("model: normalization_factors length differs from kernel count");
    const auto n = training_features.cols();
    for (const auto &f : normalization_factors) {
        if (f.size() != n) throw DataError("model: normalization factor length differs from sample count");
        if (!f.allFinite() || (f.size() > 0 && f.minCoeff() <= 0.0)) throw DataError("model: normalization factors must be positive");
    }
    if (constraint_coeffs.rows() != alpha.size()) throw DataError("model: constraint_coeffs row count differs from alpha length");
    if (alpha.size() > 0 && constraint_coeffs.cols() != n) throw DataError("model: constraint_coeffs column count differs from sample count");
    if (!alpha.allFinite() || (alpha.size() > 0 && alpha.minCoeff() < 0.0)) throw DataError("model: alpha must be nonnegative");
    if (alpha.sum() > config.C + 1e-9) throw DataError("model: alpha sums above C");
    for (const auto &spec : kernel_specs) spec.validate();
}

Eigen::VectorXd Model::expansion() const {
    if (alpha.size() == 0) return Eigen::VectorXd::Zero(training_features.cols());
    return constraint_coeffs.transpose() * alpha;
}

Eigen::VectorXd Model::predict_scores(const Eigen::MatrixXd &X_new) const {
    if (X_new.rows() != training_features.rows()) {
        throw DataError("feature dimension mismatch: model expects " + std::to_string(training_features.rows()) +
                        " features, data has " + std::to_string(X_new.rows()));
    }
    const Eigen::MatrixXd K = combine_cross(kernel_specs, tau, normalization_factors, config.normalize_kernels,
                                            training_features, X_new);
    return K.transpose() * expansion();
}

namespace {

json vector_json(const Eigen::VectorXd &v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

// rows of `m` as arrays
json rows_json(const Eigen::MatrixXd &m) {
    json out = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) out.push_back(vector_json(m.row(r).transpose()));
    return out;
}

const json &field(const json &doc, const char *name) {
    const auto it = doc.find(name);
    if (it == doc.end()) throw DataError(std::string{"model document: missing field '"} + name + "'");
    return *it;
}

double number(const json &v, const std::string &where) {
    if (!v.is_number()) throw DataError("model document: '" + where + "' must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw DataError("model document: '" + where + "' is not finite");
    return d;
}

Eigen::VectorXd vector_from(const json &v, const std::string &where) {
    if (!v.is_array()) throw DataError("model document: '" + where + "' must be an array");
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = number(v[i], where);
    return out;
}

// Array of equally long arrays; `width` is used when there are no rows.
Eigen::MatrixXd rows_from(const json &v, const std::string &where, Eigen::Index width) {
    if (!v.is_array()) throw DataError("model document: '" + where + "' must be an array of arrays");
    Eigen::MatrixXd out(static_cast<Eigen::Index>(v.size()), v.empty() ? width : static_cast<Eigen::Index>(v[0].size()));
    for (std::size_t r = 0; r < v.size(); ++r) {
        const Eigen::VectorXd row = vector_from(v[r], where);
        if (row.size() != out.cols()) throw DataError("model document: '" + where + "' has rows of different length");
        out.row(static_cast<Eigen::Index>(r)) = row.transpose();
    }
    return out;
}

}  // namespace

void save(const Model &model, std::ostream &out) {
    model.validate();
    json doc;
    doc["format_version"] = Model::format_version;
    doc["measure"] = std::string{measure_name(model.measure)};
    json specs = json::array();
    for (const auto &s : model.kernel_specs) specs.push_back(s.to_string());
    doc["kernel_specs"] = std::move(specs);
    doc["tau"] = vector_json(model.tau);
    doc["alpha"] = vector_json(model.alpha);
    doc["constraint_coeffs"] = rows_json(model.constraint_coeffs);
    // one array per training sample
    doc["training_features"] = rows_json(model.training_features.transpose());
    json factors = json::array();
    for (const auto &f : model.normalization_factors) factors.push_back(vector_json(f));
    doc["normalization_factors"] = std::move(factors);
    const auto &c = model.config;
    doc["trained_config"] = json{{"C", c.C},
                                 {"epsilon", c.epsilon},
                                 {"max_outer_iters", c.max_outer_iters},
                                 {"qp_tolerance", c.qp_tolerance},
                                 {"tau_step_iters", c.tau_step_iters},
                                 {"measure", std::string{measure_name(c.measure)}},
                                 {"seed", c.seed},
                                 {"normalize_kernels", c.normalize_kernels}};
    out << doc.dump(1) << '\n';
}

Model load(std::istream &in) {
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception &e) {
        throw DataError(std::string{"model document is not valid JSON: "} + e.what());
    }
    if (!doc.is_object()) throw DataError("model document must be a JSON object");

    const json &version = field(doc, "format_version");
    if (!version.is_number_integer()) throw DataError("model document: 'format_version' must be an integer");
    if (version.get<long long>() != Model::format_version) {
        throw DataError("unsupported model format_version " + std::to_string(version.get<long long>()) +
                        " (this build reads version " + std::to_string(Model::format_version) + ")");
    }

    Model m;
    const json &measure = field(doc, "measure");
    if (!measure.is_string()) throw DataError("model document: 'measure' must be a string");
    m.measure = parse_measure(measure.get<std::string>());

    const json &specs = field(doc, "kernel_specs");
    if (!specs.is_array()) throw DataError("model document: 'kernel_specs' must be an array");
    for (const auto &s : specs) {
        if (!s.is_string()) throw DataError("model document: 'kernel_specs' entries must be strings");
        const auto parsed = parse_kernel_specs(s.get<std::string>());
        if (parsed.size() != 1) throw DataError("model document: each 'kernel_specs' entry must hold one kernel");
        m.kernel_specs.push_back(parsed.front());
    }
    m.tau = vector_from(field(doc, "tau"), "tau");
    m.alpha = vector_from(field(doc, "alpha"), "alpha");
    const Eigen::MatrixXd samples = rows_from(field(doc, "training_features"), "training_features", 0);
    m.training_features = samples.transpose();
    m.constraint_coeffs = rows_from(field(doc, "constraint_coeffs"), "constraint_coeffs", samples.rows());
    const json &factors = field(doc, "normalization_factors");
    if (!factors.is_array()) throw DataError("model document: 'normalization_factors' must be an array");
    for (const auto &f : factors) m.normalization_factors.push_back(vector_from(f, "normalization_factors"));

    const json &cfg = field(doc, "trained_config");
    if (!cfg.is_object()) throw DataError("model document: 'trained_config' must be an object");
    const auto integer = [&](const char *name) {
        const json &v = field(cfg, name);
        if (!v.is_number_integer()) throw DataError(std::string{"model document: 'trained_config."} + name + "' must be an integer");
        return v;
    };
    m.config.C = number(field(cfg, "C"), "trained_config.C");
    m.config.epsilon = number(field(cfg, "epsilon"), "trained_config.epsilon");
    m.config.max_outer_iters = integer("max_outer_iters").get<int>();
    m.config.qp_tolerance = number(field(cfg, "qp_tolerance"), "trained_config.qp_tolerance");
    m.config.tau_step_iters = integer("tau_step_iters").get<int>();
    const json &cmeasure = field(cfg, "measure");
    if (!cmeasure.is_string()) throw DataError("model document: 'trained_config.measure' must be a string");
    m.config.measure = parse_measure(cmeasure.get<std::string>());
    m.config.seed = integer("seed").get<std::uint64_t>();
    const json &norm = field(cfg, "normalize_kernels");
    if (!norm.is_boolean()) throw DataError("model document: 'trained_config.normalize_kernels' must be a boolean");
    m.config.normalize_kernels = norm.get<bool>();

    m.validate();
    return m;
}

}  // namespace mklpo
