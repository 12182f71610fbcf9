#include "iqcd/iqcd.h"

#include <cstring>
#include <new>
#include <string>

#include "iqcd/errors.hpp"
#include "iqcd/pipeline.hpp"

struct iqcd_session {
    std::string last_error;
};

namespace {

char* dup_string(const std::string& s) {
    char* out = new (std::nothrow) char[s.size() + 1];
    if (out) std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

int fail(iqcd_session* session, int code, const std::string& message) {
    if (session) session->last_error = message;
    return code;
}

template <typename Fn>
int guarded(iqcd_session* session, char** result_json, Fn&& fn) {
    if (!session) return 1;
    if (!result_json) return fail(session, 1, "result pointer is null");
    *result_json = nullptr;
    try {
        return fn();
    } catch (const iqcd::ConfigError& e) {
        return fail(session, 1, e.what());
    } catch (const iqcd::InfeasibleError& e) {
        return fail(session, 2, e.what());
    } catch (const iqcd::Error& e) {
        return fail(session, 3, e.what());
    } catch (const std::exception& e) {
        return fail(session, 3, e.what());
    }
}

}  // namespace

extern "C" {

iqcd_session* iqcd_session_create(void) { return new (std::nothrow) iqcd_session; }

void iqcd_session_destroy(iqcd_session* session) { delete session; }

const char* iqcd_last_error(const iqcd_session* session) {
    return session ? session->last_error.c_str() : "";
}

int iqcd_analyze(iqcd_session* session, const char* config_json, char** result_json) {
    return guarded(session, result_json, [&]() -> int {
        if (!config_json) return fail(session, 1, "config_json is null");
        const iqcd::AnalysisConfig cfg = iqcd::parse_config_text(config_json);
        const iqcd::AnalyzeResult res = iqcd::run_analyze(cfg);
        iqcd::Json out = res.certificates;
        iqcd::Json ellipses = iqcd::Json::object();
        for (const auto& [name, csv] : res.csv) ellipses[name] = csv;
        out["ellipses"] = std::move(ellipses);
        *result_json = dup_string(out.dump(2));
        return *result_json ? 0 : fail(session, 3, "allocation failure");
    });
}

int iqcd_verify(iqcd_session* session, const char* config_json, const char* certificates_json,
                char** result_json) {
    return guarded(session, result_json, [&]() -> int {
        if (!config_json) return fail(session, 1, "config_json is null");
        if (!certificates_json) return fail(session, 1, "certificates_json is null");
        const iqcd::AnalysisConfig cfg = iqcd::parse_config_text(config_json);
        iqcd::Json certs;
        try {
            certs = iqcd::Json::parse(certificates_json);
        } catch (const iqcd::Json::parse_error& e) {
            return fail(session, 1, std::string("invalid certificates JSON: ") + e.what());
        }
        const iqcd::VerifyResult res = iqcd::run_verify(cfg, certs);
        *result_json = dup_string(res.report.dump(2));
        if (!*result_json) return fail(session, 3, "allocation failure");
        if (!res.passed)
            return fail(session, 4,
                        "verification failed: " +
                            res.report.at("failing_check").get<std::string>());
        return 0;
    });
}

int iqcd_simulate(iqcd_session* session, const char* config_json, double delta,
                  double direction_angle, double horizon, char** result_json) {
    return guarded(session, result_json, [&]() -> int {
        if (!config_json) return fail(session, 1, "config_json is null");
        const iqcd::AnalysisConfig cfg = iqcd::parse_config_text(config_json);
        std::optional<double> h;
        if (horizon > 0) h = horizon;
        const iqcd::SimulateResult res = iqcd::run_simulate(cfg, delta, direction_angle, h);
        iqcd::Json out = {{"tag", res.tag}, {"csv", res.csv}, {"meta", res.meta}};
        *result_json = dup_string(out.dump(2));
        return *result_json ? 0 : fail(session, 3, "allocation failure");
    });
}

int iqcd_factorize(iqcd_session* session, const char* config_json,
                   const char* certificates_json, char** result_json) {
    return guarded(session, result_json, [&]() -> int {
        if (!config_json) return fail(session, 1, "config_json is null");
        const iqcd::AnalysisConfig cfg = iqcd::parse_config_text(config_json);
        std::optional<iqcd::Json> certs;
        if (certificates_json) {
            try {
                certs = iqcd::Json::parse(certificates_json);
            } catch (const iqcd::Json::parse_error& e) {
                return fail(session, 1, std::string("invalid certificates JSON: ") + e.what());
            }
        }
        const iqcd::Json out = iqcd::run_factorize(cfg, certs);
        *result_json = dup_string(out.dump(2));
        return *result_json ? 0 : fail(session, 3, "allocation failure");
    });
}

void iqcd_string_free(char* str) { delete[] str; }

}  // extern "C"
