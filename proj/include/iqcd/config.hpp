#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "iqcd/analysis.hpp"

namespace iqcd {

using Json = nlohmann::json;

/// Strictly parsed tool configuration: unknown keys are rejected and
/// every error message carries the offending field path.
struct AnalysisConfig {
    UncertainPlant plant;
    Interval interval;
    std::vector<int> nu_list;
    AnalysisOptions analysis;
    SimOptions sim;
};

AnalysisConfig parse_config(const Json& j);
AnalysisConfig parse_config_text(const std::string& text);

Json mat_to_json(const Mat& m);
Mat mat_from_json(const Json& j, const std::string& path);

Json bundle_to_json(const CertificateBundle& bundle);
CertificateBundle bundle_from_json(const Json& j);

Json certificates_to_json(const std::vector<CertificateBundle>& bundles);
std::vector<CertificateBundle> certificates_from_json(const Json& j);

}  // namespace iqcd
