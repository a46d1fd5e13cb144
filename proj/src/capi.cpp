#include "qploc/qploc.h"

#include <fstream>
#include <sstream>
#include <string>

#include "common.hpp"
#include "experiment.hpp"

using namespace qploc;

struct qploc_config {
    ExperimentConfig cfg;
    std::string kind, hash, json;

    void refresh() {
        kind = to_string(cfg.kind);
        hash = cfg.hash();
        json = cfg.to_json().dump(2);
    }
};

struct qploc_report {
    bool passed = false;
    int hard_failures = 0;
    std::string json;
};

namespace {

thread_local std::string g_last_error;

template <class F>
qploc_status guarded(F&& f) {
    g_last_error.clear();
    try {
        f();
        return QPLOC_OK;
    } catch (const Error& e) {
        g_last_error = e.what();
        return static_cast<qploc_status>(e.code());
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return QPLOC_E_INTERNAL;
    } catch (...) {
        g_last_error = "unknown exception";
        return QPLOC_E_INTERNAL;
    }
}

qploc_status null_arg(const char* what) {
    g_last_error = std::string(what) + " is null";
    return QPLOC_E_INVALID_ARGUMENT;
}

qploc_status from_tree(nlohmann::json tree, const char* default_kind, qploc_config** out) {
    if (default_kind && tree.is_object() && !tree.contains("kind")) tree["kind"] = default_kind;
    auto* h = new qploc_config{ExperimentConfig::from_json(tree), {}, {}, {}};
    h->refresh();
    *out = h;
    return QPLOC_OK;
}

}  // namespace

extern "C" {

const char* qploc_version(void) { return kVersion; }

const char* qploc_last_error(void) { return g_last_error.c_str(); }

qploc_status qploc_config_default(const char* kind, qploc_config** out) {
    if (!kind) return null_arg("kind");
    if (!out) return null_arg("out");
    return guarded([&] {
        auto* h = new qploc_config{ExperimentConfig::defaults(parse_experiment_kind(kind)), {}, {}, {}};
        h->refresh();
        *out = h;
    });
}

qploc_status qploc_config_parse(const char* text, const char* format, const char* default_kind, qploc_config** out) {
    if (!text) return null_arg("text");
    if (!format) return null_arg("format");
    if (!out) return null_arg("out");
    return guarded([&] { from_tree(config_tree(text, format), default_kind, out); });
}

qploc_status qploc_config_load(const char* path, const char* default_kind, qploc_config** out) {
    if (!path) return null_arg("path");
    if (!out) return null_arg("out");
    return guarded([&] {
        std::ifstream f(path, std::ios::binary);
        if (!f) fail(ErrorCode::Io, std::string("cannot read ") + path);
        std::stringstream ss;
        ss << f.rdbuf();
        std::string p(path);
        bool is_json = p.size() >= 5 && p.compare(p.size() - 5, 5, ".json") == 0;
        from_tree(config_tree(ss.str(), is_json ? "json" : "toml"), default_kind, out);
    });
}

void qploc_config_free(qploc_config* cfg) { delete cfg; }

qploc_status qploc_config_set_seed(qploc_config* cfg, uint64_t seed) {
    if (!cfg) return null_arg("cfg");
    return guarded([&] {
        cfg->cfg.seed = seed;
        cfg->refresh();
    });
}

qploc_status qploc_config_set_workers(qploc_config* cfg, int workers) {
    if (!cfg) return null_arg("cfg");
    return guarded([&] {
        if (workers < 1) fail(ErrorCode::Config, "workers: must be at least 1");
        cfg->cfg.workers = workers;
        cfg->refresh();
    });
}

qploc_status qploc_config_set_out(qploc_config* cfg, const char* dir) {
    if (!cfg) return null_arg("cfg");
    if (!dir) return null_arg("dir");
    return guarded([&] {
        cfg->cfg.out = dir;
        cfg->refresh();
    });
}

const char* qploc_config_kind(const qploc_config* cfg) { return cfg ? cfg->kind.c_str() : ""; }
const char* qploc_config_hash(const qploc_config* cfg) { return cfg ? cfg->hash.c_str() : ""; }
const char* qploc_config_json(const qploc_config* cfg) { return cfg ? cfg->json.c_str() : ""; }

qploc_status qploc_run(const qploc_config* cfg, qploc_report** out) {
    if (!cfg) return null_arg("cfg");
    if (!out) return null_arg("out");
    return guarded([&] {
        RunResult rr = run_experiment(cfg->cfg);
        auto* r = new qploc_report;
        r->hard_failures = rr.hard_failures();
        r->passed = r->hard_failures == 0;
        nlohmann::json j = rr.summary;
        j["dir"] = rr.dir.string();
        j["files"] = rr.files;
        r->json = j.dump(2);
        *out = r;
    });
}

qploc_status qploc_replay(const char* dir, int workers, qploc_report** out) {
    if (!dir) return null_arg("dir");
    if (!out) return null_arg("out");
    return guarded([&] {
        ReplayReport rep = replay(dir, workers);
        auto* r = new qploc_report;
        r->passed = rep.ok;
        r->hard_failures = rep.ok ? 0 : 1;
        r->json = rep.to_json().dump(2);
        *out = r;
    });
}

int qploc_report_passed(const qploc_report* rep) { return rep && rep->passed; }
int qploc_report_hard_failures(const qploc_report* rep) { return rep ? rep->hard_failures : 0; }
const char* qploc_report_json(const qploc_report* rep) { return rep ? rep->json.c_str() : ""; }
void qploc_report_free(qploc_report* rep) { delete rep; }

}  // extern "C"
