#include <doctest.h>

#include <string>

#include "example_data.hpp"
#include "iqcd/config.hpp"
#include "iqcd/iqcd.h"

using iqcd::Json;

namespace {

struct Session {
    iqcd_session* s = iqcd_session_create();
    ~Session() { iqcd_session_destroy(s); }
};

struct Result {
    char* str = nullptr;
    ~Result() { iqcd_string_free(str); }
};

Json example_config() {
    Json j;
    j["plant"]["a"] = iqcd::mat_to_json(example_plant().a);
    j["plant"]["b_w"] = iqcd::mat_to_json(example_plant().b_w);
    j["plant"]["b_d"] = iqcd::mat_to_json(example_plant().b_d);
    j["plant"]["c_z"] = iqcd::mat_to_json(example_plant().c_z);
    j["plant"]["d_zw"] = iqcd::mat_to_json(example_plant().d_zw);
    j["plant"]["d_zd"] = iqcd::mat_to_json(example_plant().d_zd);
    j["plant"]["c_e"] = iqcd::mat_to_json(example_plant().c_e);
    j["delta"] = {{"min", -0.6}, {"max", 5.0}};
    j["nu_list"] = {0};
    j["sim"] = {{"n_random_runs", 20}, {"horizon", 3.0}};
    return j;
}

// Scalar loop 2/(s+1) with delta up to 1: destabilized at delta > 0.5.
Json infeasible_config() {
    Json j;
    j["plant"]["a"] = {{-1.0}};
    j["plant"]["b_w"] = {{1.0}};
    j["plant"]["b_d"] = {{1.0}};
    j["plant"]["c_z"] = {{2.0}};
    j["plant"]["d_zw"] = {{0.0}};
    j["plant"]["d_zd"] = {{0.0}};
    j["plant"]["c_e"] = {{1.0}};
    j["delta"] = {{"min", 0.6}, {"max", 1.0}};
    j["nu_list"] = {0};
    return j;
}

}  // namespace

TEST_CASE("session lifecycle and null-argument handling") {
    Session s;
    REQUIRE(s.s != nullptr);
    CHECK(std::string(iqcd_last_error(s.s)).empty());
    iqcd_session_destroy(nullptr);
    iqcd_string_free(nullptr);

    Result r;
    CHECK(iqcd_analyze(nullptr, "{}", &r.str) == 1);
    CHECK(iqcd_analyze(s.s, "{}", nullptr) == 1);
    CHECK(iqcd_analyze(s.s, nullptr, &r.str) == 1);
    CHECK(std::string(iqcd_last_error(s.s)) == "config_json is null");
    CHECK(iqcd_verify(s.s, example_config().dump().c_str(), nullptr, &r.str) == 1);
    CHECK(std::string(iqcd_last_error(s.s)) == "certificates_json is null");
}

TEST_CASE("malformed config yields code 1 with a message") {
    Session s;
    Result r;
    CHECK(iqcd_analyze(s.s, "{ nope", &r.str) == 1);
    CHECK(std::string(iqcd_last_error(s.s)).find("invalid JSON") != std::string::npos);
    CHECK(r.str == nullptr);

    Json bad = example_config();
    bad["plant"]["extra"] = 0;
    CHECK(iqcd_analyze(s.s, bad.dump().c_str(), &r.str) == 1);
    CHECK(std::string(iqcd_last_error(s.s)).find("config.plant.extra") != std::string::npos);
}

TEST_CASE("infeasible system yields code 2") {
    Session s;
    Result r;
    CHECK(iqcd_analyze(s.s, infeasible_config().dump().c_str(), &r.str) == 2);
    CHECK(!std::string(iqcd_last_error(s.s)).empty());
}

TEST_CASE("analyze, verify, simulate, factorize round trip") {
    Session s;
    const std::string cfg = example_config().dump();

    Result analyzed;
    REQUIRE(iqcd_analyze(s.s, cfg.c_str(), &analyzed.str) == 0);
    REQUIRE(analyzed.str != nullptr);
    Json out = Json::parse(analyzed.str);
    REQUIRE(out.contains("certificates"));
    CHECK(out.at("certificates").size() == 1);
    CHECK(out.at("ellipses").size() == 1);
    // the ellipse CSV has a header plus points
    const std::string csv = out.at("ellipses").begin().value().get<std::string>();
    CHECK(csv.rfind("theta,e1,e2", 0) == 0);

    Json certs = Json{{"certificates", out.at("certificates")}};
    const std::string certs_text = certs.dump();

    Result verified;
    CHECK(iqcd_verify(s.s, cfg.c_str(), certs_text.c_str(), &verified.str) == 0);
    REQUIRE(verified.str != nullptr);
    CHECK(Json::parse(verified.str).at("passed").get<bool>());

    Result simulated;
    CHECK(iqcd_simulate(s.s, cfg.c_str(), -0.6, 0.25, 2.0, &simulated.str) == 0);
    REQUIRE(simulated.str != nullptr);
    Json simj = Json::parse(simulated.str);
    CHECK(!simj.at("tag").get<std::string>().empty());
    CHECK(!simj.at("csv").get<std::string>().empty());

    Result factored;
    CHECK(iqcd_factorize(s.s, cfg.c_str(), certs_text.c_str(), &factored.str) == 0);
    REQUIRE(factored.str != nullptr);
    CHECK(Json::parse(factored.str).contains("factorizations"));

    // NULL certificates re-runs the analysis internally
    Result factored2;
    CHECK(iqcd_factorize(s.s, cfg.c_str(), nullptr, &factored2.str) == 0);
}

TEST_CASE("tampered certificates fail verification with code 4") {
    Session s;
    const std::string cfg = example_config().dump();
    Result analyzed;
    REQUIRE(iqcd_analyze(s.s, cfg.c_str(), &analyzed.str) == 0);
    Json out = Json::parse(analyzed.str);
    Json certs = Json{{"certificates", out.at("certificates")}};
    Json& y = certs["certificates"][0]["y"];
    for (auto& row : y)
        for (auto& v : row) v = -v.get<double>();

    Result verified;
    CHECK(iqcd_verify(s.s, cfg.c_str(), certs.dump().c_str(), &verified.str) == 4);
    REQUIRE(verified.str != nullptr);
    Json report = Json::parse(verified.str);
    CHECK(!report.at("passed").get<bool>());
    CHECK(std::string(iqcd_last_error(s.s)).find("verification failed") != std::string::npos);

    Result bad;
    CHECK(iqcd_verify(s.s, cfg.c_str(), "{ nope", &bad.str) == 1);
    CHECK(std::string(iqcd_last_error(s.s)).find("invalid certificates JSON") != std::string::npos);
}

TEST_CASE("simulate rejects a delta that breaks well-posedness or stability") {
    Session s;
    Result r;
    const int code = iqcd_simulate(s.s, example_config().dump().c_str(), 6.0, 0.0, 2.0, &r.str);
    CHECK(code != 0);
    CHECK(!std::string(iqcd_last_error(s.s)).empty());
}
