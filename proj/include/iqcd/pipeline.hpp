#pragma once

#include <map>
#include <optional>
#include <string>

#include "iqcd/config.hpp"

namespace iqcd {

struct AnalyzeResult {
    std::vector<CertificateBundle> bundles;
    Json certificates;                       // certificates.json content
    std::map<std::string, std::string> csv;  // ellipse_nu<k>.csv contents
};

struct VerifyResult {
    bool passed = false;
    Json report;  // verify_report.json content
};

struct SimulateResult {
    std::string tag;  // traj_<tag>.csv
    std::string csv;
    Json meta;
};

AnalyzeResult run_analyze(const AnalysisConfig& cfg);

VerifyResult run_verify(const AnalysisConfig& cfg, const Json& certificates);

SimulateResult run_simulate(const AnalysisConfig& cfg, double delta, double direction_angle,
                            std::optional<double> horizon);

/// Non-symmetric ARE factorization report per certificate; runs the
/// analysis first when no certificates are supplied.
Json run_factorize(const AnalysisConfig& cfg, const std::optional<Json>& certificates);

}  // namespace iqcd
