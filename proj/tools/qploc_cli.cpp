#include <cstdint>
#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "qploc/qploc.h"

namespace {

// exit codes: 0 pass, 1 hard invariant failed or replay mismatch, 2 bad config, 3 other errors
int report_error(qploc_status st) {
    std::cerr << "error: " << qploc_last_error() << "\n";
    return st == QPLOC_E_CONFIG || st == QPLOC_E_INVALID_ARGUMENT ? 2 : 3;
}

void print_run(const nlohmann::json& j) {
    for (const auto& a : j["assertions"]) {
        std::cout << (a["pass"].get<bool>() ? "PASS " : "FAIL ") << a["name"].get<std::string>()
                  << (a["hard"].get<bool>() ? "" : " (soft)") << " " << a["detail"].dump() << "\n";
    }
    std::cout << "artifacts: " << j["dir"].get<std::string>() << "\n";
    std::cout << "config_sha256: " << j["meta"]["config_sha256"].get<std::string>() << "\n";
}

struct Common {
    std::string config;
    std::uint64_t seed = 0;
    std::string out;
    int workers = 0;
};

int run_kind(const std::string& kind, const Common& c, CLI::App* sub) {
    qploc_config* cfg = nullptr;
    qploc_status st = c.config.empty() ? qploc_config_default(kind.c_str(), &cfg)
                                       : qploc_config_load(c.config.c_str(), kind.c_str(), &cfg);
    if (st != QPLOC_OK) return report_error(st);
    if (kind != qploc_config_kind(cfg)) {
        std::cerr << "error: config kind '" << qploc_config_kind(cfg) << "' does not match subcommand '" << kind
                  << "'\n";
        qploc_config_free(cfg);
        return 2;
    }
    if (sub->count("--seed")) st = qploc_config_set_seed(cfg, c.seed);
    if (st == QPLOC_OK && c.workers > 0) st = qploc_config_set_workers(cfg, c.workers);
    if (st == QPLOC_OK && !c.out.empty()) st = qploc_config_set_out(cfg, c.out.c_str());
    if (st != QPLOC_OK) {
        qploc_config_free(cfg);
        return report_error(st);
    }
    qploc_report* rep = nullptr;
    st = qploc_run(cfg, &rep);
    qploc_config_free(cfg);
    if (st != QPLOC_OK) return report_error(st);
    print_run(nlohmann::json::parse(qploc_report_json(rep)));
    int rc = qploc_report_passed(rep) ? 0 : 1;
    qploc_report_free(rep);
    return rc;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Numerical experiments on localization for quasi-periodically driven lattice operators"};
    app.set_version_flag("--version", std::string(qploc_version()));
    app.require_subcommand(1);

    Common common;
    std::string kinds[] = {"identities", "wegner", "exclusion", "msa", "dynamics", "localization"};
    for (const auto& k : kinds) {
        CLI::App* sub = app.add_subcommand(k, "run the " + k + " experiment");
        sub->add_option("--config", common.config, "TOML or JSON experiment config")->check(CLI::ExistingFile);
        sub->add_option("--seed", common.seed, "master seed (overrides the config)");
        sub->add_option("--out", common.out, "artifact directory (overrides the config)");
        sub->add_option("--workers", common.workers, "worker threads")->check(CLI::PositiveNumber);
    }
    std::string replay_dir;
    int replay_workers = 0;
    CLI::App* rp = app.add_subcommand("replay", "re-run an artifact directory and byte-compare its outputs");
    rp->add_option("dir", replay_dir, "artifact directory")->required()->check(CLI::ExistingDirectory);
    rp->add_option("--workers", replay_workers, "worker threads for the rerun")->check(CLI::PositiveNumber);

    CLI11_PARSE(app, argc, argv);

    if (rp->parsed()) {
        qploc_report* rep = nullptr;
        qploc_status st = qploc_replay(replay_dir.c_str(), replay_workers, &rep);
        if (st != QPLOC_OK) return report_error(st);
        auto j = nlohmann::json::parse(qploc_report_json(rep));
        for (const auto& f : j["compared"]) std::cout << "compared " << f.get<std::string>() << "\n";
        for (const auto& f : j["mismatched"]) std::cout << "MISMATCH " << f.get<std::string>() << "\n";
        for (const auto& f : j["missing"]) std::cout << "MISSING " << f.get<std::string>() << "\n";
        int rc = qploc_report_passed(rep) ? 0 : 1;
        std::cout << (rc == 0 ? "replay identical" : "replay differs") << "\n";
        qploc_report_free(rep);
        return rc;
    }
    for (const auto& k : kinds)
        if (app.got_subcommand(k)) return run_kind(k, common, app.get_subcommand(k));
    return 2;
}
