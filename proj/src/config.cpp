#include "iqcd/config.hpp"

#include <set>

#include "iqcd/errors.hpp"

namespace iqcd {
namespace {

void require_keys(const Json& j, const std::string& path, const std::set<std::string>& required,
                  const std::set<std::string>& optional = {}) {
    if (!j.is_object()) throw ConfigError(path + ": expected an object");
    for (const auto& [key, _] : j.items()) {
        if (!required.count(key) && !optional.count(key))
            throw ConfigError(path + "." + key + ": unknown key");
    }
    for (const auto& key : required) {
        if (!j.contains(key)) throw ConfigError(path + "." + key + ": missing");
    }
}

double number_at(const Json& j, const std::string& path) {
    if (!j.is_number()) throw ConfigError(path + ": expected a number");
    return j.get<double>();
}

Mat shaped_mat(const Json& j, const std::string& path, Eigen::Index rows, Eigen::Index cols) {
    Mat m = mat_from_json(j, path);
    if (m.rows() != rows || m.cols() != cols)
        throw ConfigError(path + ": expected shape " + std::to_string(rows) + "x" +
                          std::to_string(cols) + ", got " + std::to_string(m.rows()) + "x" +
                          std::to_string(m.cols()));
    return m;
}

}  // namespace

Mat mat_from_json(const Json& j, const std::string& path) {
    if (!j.is_array()) throw ConfigError(path + ": expected an array of rows");
    const auto rows = static_cast<Eigen::Index>(j.size());
    Eigen::Index cols = -1;
    for (Eigen::Index i = 0; i < rows; ++i) {
        const Json& row = j[static_cast<size_t>(i)];
        if (!row.is_array())
            throw ConfigError(path + "[" + std::to_string(i) + "]: expected an array");
        if (cols < 0) cols = static_cast<Eigen::Index>(row.size());
        if (static_cast<Eigen::Index>(row.size()) != cols)
            throw ConfigError(path + "[" + std::to_string(i) + "]: ragged row");
    }
    if (cols < 0) cols = 0;
    Mat m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index k = 0; k < cols; ++k)
            m(i, k) = number_at(j[static_cast<size_t>(i)][static_cast<size_t>(k)],
                                path + "[" + std::to_string(i) + "][" + std::to_string(k) + "]");
    return m;
}

Json mat_to_json(const Mat& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
        rows.push_back(std::move(row));
    }
    return rows;
}

AnalysisConfig parse_config(const Json& j) {
    require_keys(j, "config", {"plant", "delta", "nu_list"}, {"solver", "sim"});
    AnalysisConfig cfg;

    const Json& pj = j.at("plant");
    require_keys(pj, "config.plant", {"a", "b_w", "b_d", "c_z", "d_zw", "d_zd", "c_e"});
    const Mat a = mat_from_json(pj.at("a"), "config.plant.a");
    if (a.rows() != a.cols()) throw ConfigError("config.plant.a: must be square");
    const Eigen::Index n = a.rows();
    const Mat b_w = mat_from_json(pj.at("b_w"), "config.plant.b_w");
    if (b_w.rows() != n) throw ConfigError("config.plant.b_w: row count must match a");
    const Eigen::Index nw = b_w.cols();
    const Mat b_d = mat_from_json(pj.at("b_d"), "config.plant.b_d");
    if (b_d.rows() != n) throw ConfigError("config.plant.b_d: row count must match a");
    const Eigen::Index nd = b_d.cols();
    const Mat c_z = mat_from_json(pj.at("c_z"), "config.plant.c_z");
    if (c_z.cols() != n) throw ConfigError("config.plant.c_z: column count must match a");
    const Eigen::Index nz = c_z.rows();
    const Mat d_zw = shaped_mat(pj.at("d_zw"), "config.plant.d_zw", nz, nw);
    const Mat d_zd = shaped_mat(pj.at("d_zd"), "config.plant.d_zd", nz, nd);
    const Mat c_e = mat_from_json(pj.at("c_e"), "config.plant.c_e");
    if (c_e.cols() != n) throw ConfigError("config.plant.c_e: column count must match a");
    cfg.plant = UncertainPlant(a, b_w, b_d, c_z, d_zw, d_zd, c_e);

    const Json& dj = j.at("delta");
    require_keys(dj, "config.delta", {"min", "max"});
    const double lo = number_at(dj.at("min"), "config.delta.min");
    const double hi = number_at(dj.at("max"), "config.delta.max");
    if (!(lo <= hi)) throw ConfigError("config.delta: min must not exceed max");
    cfg.interval = Interval(lo, hi);

    const Json& nj = j.at("nu_list");
    if (!nj.is_array() || nj.empty()) throw ConfigError("config.nu_list: expected a non-empty array");
    for (size_t i = 0; i < nj.size(); ++i) {
        const Json& v = nj[i];
        if (!v.is_number_integer() || v.get<int>() < 0)
            throw ConfigError("config.nu_list[" + std::to_string(i) + "]: expected an integer >= 0");
        cfg.nu_list.push_back(v.get<int>());
    }

    if (j.contains("solver")) {
        const Json& sj = j.at("solver");
        require_keys(sj, "config.solver", {}, {"eps_margin", "tol_feas", "tol_gap", "max_iter"});
        if (sj.contains("eps_margin"))
            cfg.analysis.eps_margin = number_at(sj.at("eps_margin"), "config.solver.eps_margin");
        if (sj.contains("tol_feas"))
            cfg.analysis.sdp.tol_feas = number_at(sj.at("tol_feas"), "config.solver.tol_feas");
        if (sj.contains("tol_gap"))
            cfg.analysis.sdp.tol_gap = number_at(sj.at("tol_gap"), "config.solver.tol_gap");
        if (sj.contains("max_iter")) {
            if (!sj.at("max_iter").is_number_integer())
                throw ConfigError("config.solver.max_iter: expected an integer");
            cfg.analysis.sdp.max_iter = sj.at("max_iter").get<int>();
        }
    }
    if (j.contains("sim")) {
        const Json& sj = j.at("sim");
        require_keys(sj, "config.sim", {}, {"dt", "horizon", "n_random_runs", "seed"});
        if (sj.contains("dt")) cfg.sim.dt = number_at(sj.at("dt"), "config.sim.dt");
        if (sj.contains("horizon"))
            cfg.sim.horizon = number_at(sj.at("horizon"), "config.sim.horizon");
        if (sj.contains("n_random_runs")) {
            if (!sj.at("n_random_runs").is_number_integer())
                throw ConfigError("config.sim.n_random_runs: expected an integer");
            cfg.sim.n_random_runs = sj.at("n_random_runs").get<int>();
        }
        if (sj.contains("seed")) {
            if (!sj.at("seed").is_number_integer() || sj.at("seed").get<long long>() < 0)
                throw ConfigError("config.sim.seed: expected a nonnegative integer");
            cfg.sim.seed = sj.at("seed").get<unsigned>();
        }
        if (cfg.sim.dt <= 0) throw ConfigError("config.sim.dt: must be positive");
        if (cfg.sim.horizon <= 0) throw ConfigError("config.sim.horizon: must be positive");
    }
    return cfg;
}

AnalysisConfig parse_config_text(const std::string& text) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ConfigError(std::string("invalid JSON: ") + e.what());
    }
    return parse_config(j);
}

Json bundle_to_json(const CertificateBundle& bundle) {
    Json j;
    j["nu"] = bundle.nu;
    j["p"] = mat_to_json(bundle.p);
    j["xcal"] = mat_to_json(bundle.xcal);
    j["r"] = mat_to_json(bundle.r);
    j["k"] = mat_to_json(bundle.k);
    j["y"] = mat_to_json(bundle.y);
    if (bundle.gamma)
        j["gamma"] = *bundle.gamma;
    else
        j["gamma"] = nullptr;
    j["z_tilde"] = mat_to_json(bundle.z_tilde.z);
    j["coupling_margin"] = bundle.coupling_margin;
    j["solver"] = {{"status", to_string(bundle.diagnostics.status)},
                   {"objective", bundle.diagnostics.objective},
                   {"iterations", bundle.diagnostics.iterations},
                   {"duality_gap", bundle.diagnostics.duality_gap},
                   {"worst_residual", bundle.diagnostics.worst_residual}};
    return j;
}

CertificateBundle bundle_from_json(const Json& j) {
    if (!j.is_object()) throw ConfigError("certificate: expected an object");
    for (const char* key : {"nu", "p", "xcal", "r", "k", "y"}) {
        if (!j.contains(key)) throw ConfigError(std::string("certificate.") + key + ": missing");
    }
    CertificateBundle b;
    if (!j.at("nu").is_number_integer()) throw ConfigError("certificate.nu: expected an integer");
    b.nu = j.at("nu").get<int>();
    b.p = mat_from_json(j.at("p"), "certificate.p");
    b.xcal = mat_from_json(j.at("xcal"), "certificate.xcal");
    b.r = mat_from_json(j.at("r"), "certificate.r");
    b.k = mat_from_json(j.at("k"), "certificate.k");
    b.y = mat_from_json(j.at("y"), "certificate.y");
    if (j.contains("gamma") && j.at("gamma").is_number()) b.gamma = j.at("gamma").get<double>();
    b.z_tilde = terminal_cost_from_k(b.k);
    if (j.contains("coupling_margin"))
        b.coupling_margin = number_at(j.at("coupling_margin"), "certificate.coupling_margin");
    return b;
}

Json certificates_to_json(const std::vector<CertificateBundle>& bundles) {
    Json arr = Json::array();
    for (const auto& b : bundles) arr.push_back(bundle_to_json(b));
    return Json{{"certificates", arr}};
}

std::vector<CertificateBundle> certificates_from_json(const Json& j) {
    if (!j.is_object() || !j.contains("certificates") || !j.at("certificates").is_array() ||
        j.at("certificates").empty())
        throw ConfigError("certificates: expected a non-empty 'certificates' array");
    std::vector<CertificateBundle> out;
    for (const auto& item : j.at("certificates")) out.push_back(bundle_from_json(item));
    return out;
}

}  // namespace iqcd
