#include "isleforge/config.hpp"

#include <fstream>
#include <set>

namespace isleforge {

using nlohmann::json;

namespace {

template <class T>
T get(const json& node, const std::string& key, const std::string& path) {
    try {
        return node.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(path + key, "has the wrong type");
    }
}

std::uint64_t get_count(const json& node, const std::string& key, const std::string& path) {
    const auto& v = node.at(key);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_float() && v.get<double>() >= 0.0 && v.get<double>() == std::floor(v.get<double>()))
        return static_cast<std::uint64_t>(v.get<double>());
    throw ConfigError(path + key, "must be a nonnegative integer");
}

void check_keys(const json& node, const std::set<std::string>& allowed, const std::string& path) {
    if (!node.is_object()) throw ConfigError(path.empty() ? "<root>" : path, "must be an object");
    for (const auto& [key, value] : node.items())
        if (!allowed.count(key)) throw ConfigError(path + key, "unknown field");
}

TestFunction parse_trapezoid(const json& v, const std::string& path) {
    if (!v.is_array() || v.size() != 5) throw ConfigError(path, "must be [a, a', b', b, h]");
    std::array<double, 5> x{};
    for (std::size_t i = 0; i < 5; ++i) {
        if (!v[i].is_number()) throw ConfigError(path, "entries must be numbers");
        x[i] = v[i].get<double>();
    }
    return {x[0], x[1], x[2], x[3], x[4]};
}

} // namespace

std::vector<TestFunction> default_test_functions(Model model) {
    if (model == Model::fossil)
        return {{0.05, 0.1, 0.3, 0.5, 1.0}, {0.5, 0.8, 1.2, 1.5, 0.5}, {0.2, 0.4, 0.6, 0.9, 2.0}};
    return {{0.01, 0.02, 0.04, 0.06, 1.0}, {0.02, 0.05, 0.08, 0.12, 1.0}, {0.05, 0.1, 0.15, 0.2, 2.0}};
}

LimitParams RunConfig::limit_params() const {
    LimitParams p{c, law.sigma2(), 1.0};
    if (inject_fault == "double-lambda") p.lambda_factor = 2.0;
    return p;
}

PCMethod RunConfig::pc_method() const {
    PCMethod m;
    m.kind = pool.method == "excursion" ? PCMethod::Kind::excursion : PCMethod::Kind::walk;
    m.n_ref = pool.n_ref;
    m.dt = pool.dt;
    // The walk approximation needs a law with the configured variance.
    m.law = law.sigma2() == 1.0 && law.kind() != LawKind::custom_pmf ? OffspringLaw::binary_half() : law;
    return m;
}

RunConfig parse_config(const json& doc) {
    check_keys(doc,
               {"model", "law", "c", "N", "replicates", "master_seed", "workers", "step_cap", "support_min",
                "test_functions", "out", "max_overflow_rate", "dump_atoms", "limit_samples", "tree_budget",
                "saturation", "tol", "pc_pool", "quick", "only", "inject_fault"},
               "");
    RunConfig cfg;
    if (doc.contains("model")) {
        try {
            cfg.model = model_from_string(get<std::string>(doc, "model", ""));
        } catch (const std::invalid_argument& e) {
            throw ConfigError("model", e.what());
        }
    }
    if (doc.contains("law")) {
        const auto& law = doc["law"];
        try {
            if (law.is_string()) {
                cfg.law = OffspringLaw::from_name(law.get<std::string>());
            } else if (law.is_object() && law.contains("pmf") && law.size() == 1) {
                cfg.law = OffspringLaw::custom(get<std::vector<double>>(law, "pmf", "law."));
            } else {
                throw ConfigError("law", "must be a law name or {\"pmf\": [...]}");
            }
        } catch (const std::invalid_argument& e) {
            throw ConfigError("law", e.what());
        }
    }
    if (doc.contains("c")) cfg.c = get<double>(doc, "c", "");
    if (doc.contains("N")) {
        const auto& n = doc["N"];
        cfg.N.clear();
        if (n.is_array()) {
            for (std::size_t i = 0; i < n.size(); ++i) {
                if (!n[i].is_number_unsigned()) throw ConfigError("N[" + std::to_string(i) + "]", "must be a positive integer");
                cfg.N.push_back(n[i].get<std::uint64_t>());
            }
        } else {
            cfg.N.push_back(get_count(doc, "N", ""));
        }
    }
    if (doc.contains("replicates")) cfg.replicates = get_count(doc, "replicates", "");
    if (doc.contains("master_seed")) cfg.master_seed = get_count(doc, "master_seed", "");
    if (doc.contains("workers")) cfg.workers = static_cast<unsigned>(get_count(doc, "workers", ""));
    if (doc.contains("step_cap")) cfg.step_cap = get_count(doc, "step_cap", "");
    if (doc.contains("support_min")) cfg.support_min = get<double>(doc, "support_min", "");
    if (doc.contains("test_functions")) {
        const auto& fns = doc["test_functions"];
        if (!fns.is_array()) throw ConfigError("test_functions", "must be a list of trapezoids");
        for (std::size_t i = 0; i < fns.size(); ++i)
            cfg.test_functions.push_back(parse_trapezoid(fns[i], "test_functions[" + std::to_string(i) + "]"));
    } else {
        cfg.test_functions = default_test_functions(cfg.model);
    }
    if (doc.contains("out")) cfg.out = get<std::string>(doc, "out", "");
    if (doc.contains("max_overflow_rate")) cfg.max_overflow_rate = get<double>(doc, "max_overflow_rate", "");
    if (doc.contains("dump_atoms")) cfg.dump_atoms = get<bool>(doc, "dump_atoms", "");
    if (doc.contains("limit_samples")) cfg.limit_samples = get_count(doc, "limit_samples", "");
    if (doc.contains("tree_budget")) cfg.tree_budget = get_count(doc, "tree_budget", "");
    if (doc.contains("saturation")) cfg.saturation = get<double>(doc, "saturation", "");
    if (doc.contains("tol")) cfg.tol = get<double>(doc, "tol", "");
    if (doc.contains("pc_pool")) {
        const auto& p = doc["pc_pool"];
        check_keys(p, {"path", "method", "n_ref", "dt", "size"}, "pc_pool.");
        if (p.contains("path")) cfg.pool.path = get<std::string>(p, "path", "pc_pool.");
        if (p.contains("method")) cfg.pool.method = get<std::string>(p, "method", "pc_pool.");
        if (p.contains("n_ref")) cfg.pool.n_ref = get_count(p, "n_ref", "pc_pool.");
        if (p.contains("dt")) cfg.pool.dt = get<double>(p, "dt", "pc_pool.");
        if (p.contains("size")) cfg.pool.size = get_count(p, "size", "pc_pool.");
    }
    if (doc.contains("quick")) cfg.quick = get<bool>(doc, "quick", "");
    if (doc.contains("only")) cfg.only = get<std::vector<std::string>>(doc, "only", "");
    if (doc.contains("inject_fault")) cfg.inject_fault = get<std::string>(doc, "inject_fault", "");
    validate_config(cfg);
    return cfg;
}

void validate_config(const RunConfig& cfg) {
    if (!(cfg.c > 0.0) || !std::isfinite(cfg.c)) throw ConfigError("c", "must be positive");
    if (cfg.N.empty()) throw ConfigError("N", "must list at least one value");
    for (std::size_t i = 0; i < cfg.N.size(); ++i)
        if (cfg.N[i] < 1) throw ConfigError(cfg.N.size() == 1 ? "N" : "N[" + std::to_string(i) + "]", "must be >= 1");
    if (cfg.replicates < 1) throw ConfigError("replicates", "must be >= 1");
    if (cfg.workers < 1) throw ConfigError("workers", "must be >= 1");
    if (cfg.step_cap < 1) throw ConfigError("step_cap", "must be >= 1");
    if (!(cfg.support_min > 0.0)) throw ConfigError("support_min", "must be positive");
    if (cfg.test_functions.empty()) throw ConfigError("test_functions", "must list at least one trapezoid");
    for (std::size_t i = 0; i < cfg.test_functions.size(); ++i) {
        const auto& f = cfg.test_functions[i];
        const std::string path = "test_functions[" + std::to_string(i) + "]";
        if (const auto why = f.invalid_reason(); !why.empty()) throw ConfigError(path, why);
        if (f.a < cfg.support_min) throw ConfigError(path + ".a", "must be >= support_min");
    }
    if (!(cfg.max_overflow_rate >= 0.0 && cfg.max_overflow_rate <= 1.0))
        throw ConfigError("max_overflow_rate", "must lie in [0, 1]");
    if (cfg.limit_samples < 1) throw ConfigError("limit_samples", "must be >= 1");
    if (cfg.tree_budget < 1) throw ConfigError("tree_budget", "must be >= 1");
    if (!(cfg.saturation >= 0.0)) throw ConfigError("saturation", "must be >= 0");
    if (!(cfg.tol > 0.0)) throw ConfigError("tol", "must be positive");
    if (cfg.pool.method != "walk" && cfg.pool.method != "excursion")
        throw ConfigError("pc_pool.method", "must be \"walk\" or \"excursion\"");
    if (cfg.pool.method == "walk" && cfg.pool.n_ref < 500) throw ConfigError("pc_pool.n_ref", "must be >= 500");
    if (cfg.pool.method == "excursion" && !(cfg.pool.dt > 0.0 && cfg.pool.dt <= 1e-4))
        throw ConfigError("pc_pool.dt", "must lie in (0, 1e-4]");
    if (cfg.pool.size < 1) throw ConfigError("pc_pool.size", "must be >= 1");
    if (!cfg.inject_fault.empty() && cfg.inject_fault != "double-lambda")
        throw ConfigError("inject_fault", "unknown fault '" + cfg.inject_fault + "'");
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("--config", "cannot open '" + path + "'");
    json doc;
    try {
        in >> doc;
    } catch (const json::parse_error& e) {
        throw ConfigError("--config", std::string("invalid JSON: ") + e.what());
    }
    return parse_config(doc);
}

// Worker count and output directory are left out so that artifacts are
// byte-identical across them.
json RunConfig::to_json() const {
    json j;
    j["model"] = to_string(model);
    if (law.kind() == LawKind::custom_pmf)
        j["law"] = json{{"pmf", law.pmf()}};
    else
        j["law"] = law.name();
    j["c"] = c;
    j["N"] = N;
    j["replicates"] = replicates;
    j["master_seed"] = master_seed;
    j["step_cap"] = step_cap;
    j["support_min"] = support_min;
    json fns = json::array();
    for (const auto& f : test_functions) fns.push_back({f.a, f.a_top, f.b_top, f.b, f.h});
    j["test_functions"] = fns;
    j["max_overflow_rate"] = max_overflow_rate;
    j["dump_atoms"] = dump_atoms;
    j["limit_samples"] = limit_samples;
    j["tree_budget"] = tree_budget;
    j["saturation"] = saturation;
    j["tol"] = tol;
    j["pc_pool"] = {{"path", pool.path}, {"method", pool.method}, {"n_ref", pool.n_ref}, {"dt", pool.dt},
                    {"size", pool.size}};
    j["quick"] = quick;
    j["only"] = only;
    j["inject_fault"] = inject_fault;
    return j;
}

} // namespace isleforge
