#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "frequency.hpp"
#include "msa.hpp"
#include "operators.hpp"

namespace qploc {

enum class ExperimentKind { Msa, Wegner, Exclusion, Dynamics, Localization, Identities };

std::string to_string(ExperimentKind k);
ExperimentKind parse_experiment_kind(const std::string& s);

struct FrequencyConfig {
    std::vector<double> omega;  // explicit; empty means generated
    std::string generator = "quadratic";
    int index = 0;  // which generated vector
    DiophantineParams diophantine;

    Frequency resolve(int nu) const;
};

struct ScheduleConfig {
    int N0 = 0;  // 0 derives N0 from delta and c
    double c = 1.0;
    double sigma = 0.5;
    double C = 2.0;
    double alpha = 1.5;
    int levels = 3;
    ScheduleMode mode = ScheduleMode::Paper;
    double gamma0 = 1.0;
    double kappa = 0.25;

    ScaleSchedule resolve(const OperatorSpec& spec) const;
};

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::Identities;
    OperatorSpec op;
    FrequencyConfig frequency;
    ScheduleConfig schedule;
    int trials = 0;  // 0 picks the kind's default when parsed
    std::uint64_t seed = 0;
    int workers = 1;
    std::string out = "qploc-out";
    nlohmann::json params = nlohmann::json::object();  // kind-specific, defaults filled in

    nlohmann::json to_json() const;
    // Every field except out and workers, which never change results.
    nlohmann::json hashed_json() const;
    std::string hash() const;  // sha256 hex of hashed_json().dump()

    // Field-level errors come back as ErrorCode::Config with the dotted field path first.
    static ExperimentConfig from_json(const nlohmann::json& j);
    static ExperimentConfig from_toml(const std::string& text);
    static ExperimentConfig parse(const std::string& text, const std::string& format);  // "toml" or "json"
    static ExperimentConfig load(const std::filesystem::path& path);
    static ExperimentConfig defaults(ExperimentKind kind);
};

struct Assertion {
    std::string name;
    bool hard = true;  // hard failures make the run exit nonzero
    bool pass = false;
    nlohmann::json detail;
};

struct RunResult {
    std::filesystem::path dir;
    std::vector<std::string> files;
    std::vector<Assertion> assertions;
    nlohmann::json summary;
    int hard_failures() const;
};

// raw config tree from TOML or JSON text, before validation
nlohmann::json config_tree(const std::string& text, const std::string& format);

RunResult run_experiment(const ExperimentConfig& cfg);

struct ReplayReport {
    bool ok = false;
    std::vector<std::string> compared;
    std::vector<std::string> mismatched;
    std::vector<std::string> missing;  // produced by the rerun but absent from the directory
    nlohmann::json to_json() const;
};

// workers <= 0 keeps the recorded worker count
ReplayReport replay(const std::filesystem::path& dir, int workers = 0);

std::string sha256_hex(const std::string& data);

}  // namespace qploc
