// Command-line front end; talks to the library exclusively through the
// C interface in iqcd.h.
#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "iqcd/iqcd.h"

namespace {

enum class LogLevel { Error = 0, Info = 1, Debug = 2 };

LogLevel log_level() {
    const char* env = std::getenv("IQC_LOG");
    if (!env) return LogLevel::Error;
    const std::string v(env);
    if (v == "debug") return LogLevel::Debug;
    if (v == "info") return LogLevel::Info;
    return LogLevel::Error;
}

void log_info(const std::string& msg) {
    if (log_level() >= LogLevel::Info) std::cerr << "[iqcd] " << msg << "\n";
}

bool read_file(const std::string& path, std::string& out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return false;
    std::ostringstream ss;
    ss << in.rdbuf();
    out = ss.str();
    return true;
}

bool write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) return false;
    out << content;
    return static_cast<bool>(out);
}

struct Session {
    iqcd_session* handle = iqcd_session_create();
    ~Session() { iqcd_session_destroy(handle); }
};

struct Result {
    char* json = nullptr;
    ~Result() { iqcd_string_free(json); }
};

int report_status(const Session& session, int status) {
    if (status != 0) std::cerr << "error: " << iqcd_last_error(session.handle) << "\n";
    return status;
}

int cmd_analyze(const std::string& config_path) {
    std::string config;
    if (!read_file(config_path, config)) {
        std::cerr << "error: cannot read config file " << config_path << "\n";
        return 1;
    }
    Session session;
    Result result;
    log_info("running analysis from " + config_path);
    const int status = iqcd_analyze(session.handle, config.c_str(), &result.json);
    if (status != 0) return report_status(session, status);

    nlohmann::json out = nlohmann::json::parse(result.json);
    for (const auto& [name, csv] : out.at("ellipses").items()) {
        if (!write_file(name, csv.get<std::string>())) {
            std::cerr << "error: cannot write " << name << "\n";
            return 3;
        }
        log_info("wrote " + name);
    }
    out.erase("ellipses");
    if (!write_file("certificates.json", out.dump(2) + "\n")) {
        std::cerr << "error: cannot write certificates.json\n";
        return 3;
    }
    log_info("wrote certificates.json");
    return 0;
}

int cmd_verify(const std::string& config_path, const std::string& certs_path) {
    std::string config, certs;
    if (!read_file(config_path, config)) {
        std::cerr << "error: cannot read config file " << config_path << "\n";
        return 1;
    }
    if (!read_file(certs_path, certs)) {
        std::cerr << "error: cannot read certificates file " << certs_path << "\n";
        return 1;
    }
    Session session;
    Result result;
    log_info("verifying certificates from " + certs_path);
    const int status =
        iqcd_verify(session.handle, config.c_str(), certs.c_str(), &result.json);
    if (result.json) {
        if (!write_file("verify_report.json", std::string(result.json) + "\n")) {
            std::cerr << "error: cannot write verify_report.json\n";
            return 3;
        }
        log_info("wrote verify_report.json");
    }
    if (status != 0) return report_status(session, status);
    return 0;
}

int cmd_simulate(const std::string& config_path, double delta, double angle,
                 std::optional<double> horizon) {
    std::string config;
    if (!read_file(config_path, config)) {
        std::cerr << "error: cannot read config file " << config_path << "\n";
        return 1;
    }
    Session session;
    Result result;
    const int status = iqcd_simulate(session.handle, config.c_str(), delta, angle,
                                     horizon.value_or(-1.0), &result.json);
    if (status != 0) return report_status(session, status);
    nlohmann::json out = nlohmann::json::parse(result.json);
    const std::string name = "traj_" + out.at("tag").get<std::string>() + ".csv";
    if (!write_file(name, out.at("csv").get<std::string>())) {
        std::cerr << "error: cannot write " << name << "\n";
        return 3;
    }
    log_info("wrote " + name);
    return 0;
}

int cmd_factorize(const std::string& config_path) {
    std::string config;
    if (!read_file(config_path, config)) {
        std::cerr << "error: cannot read config file " << config_path << "\n";
        return 1;
    }
    std::string certs;
    const bool have_certs = read_file("certificates.json", certs);
    if (have_certs) log_info("using existing certificates.json");
    Session session;
    Result result;
    const int status = iqcd_factorize(session.handle, config.c_str(),
                                      have_certs ? certs.c_str() : nullptr, &result.json);
    if (status != 0) return report_status(session, status);
    if (!write_file("factorization.json", std::string(result.json) + "\n")) {
        std::cerr << "error: cannot write factorization.json\n";
        return 3;
    }
    log_info("wrote factorization.json");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"IQC-based robust invariance analysis"};
    app.require_subcommand(1);

    std::string config_path, certs_path;
    double delta = 0.0, angle = 0.0;
    double horizon_flag = -1.0;

    auto* analyze = app.add_subcommand("analyze", "solve the invariance LMIs");
    analyze->add_option("config", config_path, "JSON configuration")->required();

    auto* verify = app.add_subcommand("verify", "validate certificates by simulation");
    verify->add_option("config", config_path, "JSON configuration")->required();
    verify->add_option("certificates", certs_path, "certificates.json from analyze")->required();

    auto* simulate = app.add_subcommand("simulate", "worst-case trajectory synthesis");
    simulate->add_option("config", config_path, "JSON configuration")->required();
    simulate->add_option("--delta", delta, "parameter value")->required();
    simulate->add_option("--direction-angle", angle, "target direction (radians)")->required();
    simulate->add_option("--horizon", horizon_flag, "simulation horizon (seconds)");

    auto* factorize = app.add_subcommand("factorize", "canonical factorization via the ARE");
    factorize->add_option("config", config_path, "JSON configuration")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    if (analyze->parsed()) return cmd_analyze(config_path);
    if (verify->parsed()) return cmd_verify(config_path, certs_path);
    if (simulate->parsed()) {
        std::optional<double> horizon;
        if (simulate->count("--horizon")) horizon = horizon_flag;
        return cmd_simulate(config_path, delta, angle, horizon);
    }
    if (factorize->parsed()) return cmd_factorize(config_path);
    return 1;
}
