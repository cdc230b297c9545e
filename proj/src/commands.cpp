#include "isleforge/commands.hpp"

#include <filesystem>
#include <fstream>
#include <ostream>

#include "isleforge/acceptance.hpp"
#include "isleforge/cumulant.hpp"
#include "isleforge/empirical.hpp"
#include "isleforge/limits.hpp"
#include "isleforge/output.hpp"
#include "isleforge/parallel.hpp"

namespace isleforge {

using nlohmann::json;

namespace {

constexpr std::uint64_t kChunk = 1000;

std::ofstream open_out(const RunConfig& cfg, const std::string& name) {
    std::filesystem::create_directories(cfg.out);
    const auto path = std::filesystem::path(cfg.out) / name;
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    return os;
}

void write_json(const RunConfig& cfg, const std::string& name, const std::string& command, json payload) {
    auto os = open_out(cfg, name);
    os << with_provenance(std::move(payload), command, cfg.to_json()).dump(2) << '\n';
}

json estimate_json(const CumulantEstimate& e) { return {{"value", e.value}, {"se", e.se}, {"n", e.n_samples}}; }

json fn_json(const TestFunction& f) { return json::array({f.a, f.a_top, f.b_top, f.b, f.h}); }

struct PoolSource {
    PCPool pool;
    json note;
};

PoolSource obtain_pool(const RunConfig& cfg, std::ostream& log) {
    PoolSource src;
    if (!cfg.pool.path.empty()) {
        std::ifstream in(cfg.pool.path);
        if (!in) throw ConfigError("pc_pool.path", "cannot open '" + cfg.pool.path + "'");
        src.pool = read_pc_pool(in);
        src.note = {{"generated", false}, {"path", cfg.pool.path}, {"size", src.pool.samples.size()},
                    {"method", src.pool.method}};
        return src;
    }
    const auto method = cfg.pc_method();
    log << "building PC pool: " << cfg.pool.size << " samples, " << method.describe() << std::endl;
    src.pool = build_pc_pool(cfg.limit_params(), method, cfg.pool.size, cfg.master_seed, cfg.workers);
    src.note = {{"generated", true}, {"size", src.pool.samples.size()}, {"method", src.pool.method},
                {"n_ref", cfg.pool.n_ref}};
    return src;
}

// Single-root-island replicates; each yields per-function integrals.
struct SimIntegrals {
    std::vector<std::vector<double>> values;
    std::uint64_t overflow = 0;
};

SimIntegrals simulate_integrals(const RunConfig& cfg, std::uint64_t N, std::uint64_t roots, double saturation) {
    SimulationOptions s;
    s.model = cfg.model;
    s.law = cfg.law;
    s.N = N;
    s.r = rescaled_threshold(cfg.model, cfg.c, N);
    s.step_cap = cfg.step_cap;
    s.roots = roots;
    s.fns = cfg.test_functions;
    s.saturation = saturation;
    SimIntegrals out;
    out.values.resize(cfg.test_functions.size());
    for (std::uint64_t first = 0; first < cfg.replicates; first += kChunk) {
        const auto n = std::min(kChunk, cfg.replicates - first);
        for (const auto& r : run_replicates(s, cfg.master_seed, first, n, cfg.workers)) {
            if (r.summary.overflow) {
                ++out.overflow;
                continue;
            }
            for (std::size_t j = 0; j < s.fns.size(); ++j) out.values[j].push_back(r.summary.integrals[j]);
        }
    }
    return out;
}

struct EtaDraws {
    std::vector<LimitRow> rows;
    std::vector<std::vector<double>> atoms;
    std::uint64_t overflow = 0;
};

EtaDraws draw_eta(const RunConfig& cfg, const PCPool* pool, double saturation, bool keep_atoms) {
    const auto p = cfg.limit_params();
    const bool regrow = cfg.model == Model::regrow;
    const std::uint64_t key = splitmix64(cfg.master_seed ^ 0x65746161746f6d73ull);
    EtaDraws out;
    out.rows.resize(cfg.limit_samples);
    if (keep_atoms) out.atoms.resize(cfg.limit_samples);
    parallel_for(cfg.limit_samples, cfg.workers, [&](std::size_t i) {
        RandomStream rng(key, i);
        auto& row = out.rows[i];
        row.sample = i;
        if (keep_atoms) {
            auto e = regrow ? sample_eta_regrow(p, cfg.support_min, rng, *pool, cfg.tree_budget)
                            : sample_eta_fossil(p, cfg.support_min, rng, cfg.tree_budget);
            for (const auto& f : cfg.test_functions) row.integrals.push_back(e.measure.integrate(f));
            row.nodes = e.nodes;
            row.overflow = e.budget_exceeded;
            out.atoms[i] = std::move(e.measure.atoms);
        } else {
            const auto d = sample_eta_integrals(p, regrow, cfg.test_functions, cfg.support_min, saturation, rng,
                                                pool, cfg.tree_budget);
            row.integrals = d.integrals;
            row.nodes = d.nodes;
            row.overflow = d.budget_exceeded;
        }
    });
    for (const auto& r : out.rows)
        if (r.overflow) ++out.overflow;
    return out;
}

std::vector<double> column(const std::vector<LimitRow>& rows, std::size_t j) {
    std::vector<double> v;
    for (const auto& r : rows)
        if (!r.overflow) v.push_back(r.integrals[j]);
    return v;
}

int budget_verdict(double rate, const RunConfig& cfg, std::ostream& log) {
    if (rate > cfg.max_overflow_rate) {
        log << "budget exhausted: overflow rate " << rate << " exceeds " << cfg.max_overflow_rate << std::endl;
        return kExitBudgetExhausted;
    }
    return kExitOk;
}

} // namespace

int cmd_simulate(const RunConfig& cfg, std::ostream& log) {
    auto csv = open_out(cfg, "replicates.csv");
    write_csv_preamble(csv, "simulate", cfg.to_json());
    std::ofstream atoms;
    if (cfg.dump_atoms) {
        atoms = open_out(cfg, "atoms.csv");
        write_csv_preamble(atoms, "simulate", cfg.to_json());
        atoms << "source,replicate,atom\n";
    }
    json per_n = json::array();
    std::uint64_t total = 0, overflowed = 0;
    bool header = true;
    for (std::uint64_t N : cfg.N) {
        SimulationOptions s;
        s.model = cfg.model;
        s.law = cfg.law;
        s.N = N;
        s.r = rescaled_threshold(cfg.model, cfg.c, N);
        s.step_cap = cfg.step_cap;
        s.fns = cfg.test_functions;
        s.keep_atoms = cfg.dump_atoms;
        s.keep_ztable = true;
        std::vector<std::vector<double>> integrals(s.fns.size());
        std::uint64_t overflow = 0, islands = 0, fertile = 0;
        std::map<std::uint32_t, std::uint64_t> generation_mass;
        for (std::uint64_t first = 0; first < cfg.replicates; first += kChunk) {
            const auto reps =
                run_replicates(s, cfg.master_seed, first, std::min(kChunk, cfg.replicates - first), cfg.workers);
            std::vector<ReplicateSummary> rows;
            for (const auto& r : reps) {
                rows.push_back(r.summary);
                if (cfg.dump_atoms) write_atom_rows(atoms, "sim", r.summary.replicate_index, r.measure.atoms);
                if (r.summary.overflow) {
                    ++overflow;
                    continue;
                }
                islands += r.summary.islands;
                fertile += r.summary.fertile;
                for (std::size_t j = 0; j < s.fns.size(); ++j) integrals[j].push_back(r.summary.integrals[j]);
                generation_mass[0] += r.ztable.generation_total(0);
            }
            write_replicate_rows(csv, rows, header);
            header = false;
        }
        json fns = json::array();
        for (std::size_t j = 0; j < s.fns.size(); ++j) {
            json entry{{"fn_id", j}, {"fn", fn_json(s.fns[j])}};
            if (!integrals[j].empty()) {
                double mean = 0.0;
                for (double v : integrals[j]) mean += v;
                entry["mean_integral"] = mean / static_cast<double>(integrals[j].size());
                try {
                    entry["kappa"] = estimate_json(empirical_cumulant(integrals[j]));
                } catch (const DegenerateSample&) {
                    entry["kappa"] = nullptr;
                }
            }
            fns.push_back(entry);
        }
        const auto kept = cfg.replicates - overflow;
        per_n.push_back({{"N", N},
                         {"r", s.r},
                         {"replicates", cfg.replicates},
                         {"overflow", overflow},
                         {"overflow_rate", static_cast<double>(overflow) / static_cast<double>(cfg.replicates)},
                         {"mean_islands", kept ? static_cast<double>(islands) / static_cast<double>(kept) : 0.0},
                         {"mean_fertile", kept ? static_cast<double>(fertile) / static_cast<double>(kept) : 0.0},
                         {"generation0_mass", generation_mass[0]},
                         {"test_functions", fns}});
        total += cfg.replicates;
        overflowed += overflow;
        log << "simulate N=" << N << " r=" << s.r << ": " << cfg.replicates << " replicates, " << overflow
            << " over the step cap" << std::endl;
    }
    const double rate = static_cast<double>(overflowed) / static_cast<double>(total);
    write_json(cfg, "summary.json", "simulate", {{"runs", per_n}, {"overflow_rate", rate}});
    return budget_verdict(rate, cfg, log);
}

int cmd_limit_sample(const RunConfig& cfg, std::ostream& log) {
    std::optional<PoolSource> pool;
    if (cfg.model == Model::regrow) pool = obtain_pool(cfg, log);
    const auto draws = draw_eta(cfg, pool ? &pool->pool : nullptr, 0.0, cfg.dump_atoms);
    auto csv = open_out(cfg, "limit.csv");
    write_csv_preamble(csv, "limit-sample", cfg.to_json());
    write_limit_rows(csv, to_string(cfg.model), draws.rows);
    if (cfg.dump_atoms) {
        auto atoms = open_out(cfg, "limit_atoms.csv");
        write_csv_preamble(atoms, "limit-sample", cfg.to_json());
        atoms << "source,replicate,atom\n";
        for (std::size_t i = 0; i < draws.atoms.size(); ++i) write_atom_rows(atoms, "limit", i, draws.atoms[i]);
    }
    json fns = json::array();
    for (std::size_t j = 0; j < cfg.test_functions.size(); ++j) {
        json entry{{"fn_id", j}, {"fn", fn_json(cfg.test_functions[j])}};
        try {
            entry["kappa_eta"] = estimate_json(empirical_cumulant(column(draws.rows, j)));
        } catch (const std::exception&) {
            entry["kappa_eta"] = nullptr;
        }
        fns.push_back(entry);
    }
    const double rate = static_cast<double>(draws.overflow) / static_cast<double>(cfg.limit_samples);
    json payload{{"samples", cfg.limit_samples}, {"tree_budget_exceeded", draws.overflow}, {"overflow_rate", rate},
                 {"test_functions", fns}};
    if (pool) payload["pc_pool"] = pool->note;
    write_json(cfg, "limit_summary.json", "limit-sample", payload);
    log << "limit-sample: " << cfg.limit_samples << " draws, " << draws.overflow << " over the tree budget"
        << std::endl;
    return budget_verdict(rate, cfg, log);
}

int cmd_cumulant(const RunConfig& cfg, std::ostream& log) {
    const auto p = cfg.limit_params();
    std::optional<PoolSource> pool;
    if (cfg.model == Model::regrow) pool = obtain_pool(cfg, log);
    const PCPool* pc = pool ? &pool->pool : nullptr;
    const std::uint64_t N = cfg.N.front();
    const auto sim = simulate_integrals(cfg, N, 1, cfg.saturation);
    const auto eta = draw_eta(cfg, pc, cfg.saturation, false);
    json reports = json::array();
    for (std::size_t j = 0; j < cfg.test_functions.size(); ++j) {
        const auto& f = cfg.test_functions[j];
        const double kappa = cfg.model == Model::fossil ? solve_cumulant_fossil(f, p, cfg.tol)
                                                        : solve_cumulant_regrow(f, p, *pc, cfg.tol);
        json r{{"fn", fn_json(f)},
               {"model", to_string(cfg.model)},
               {"params", {{"c", p.c}, {"sigma2", p.sigma2}, {"lambda", p.lambda()}, {"lambda2", p.lambda2()}}},
               {"kappa_solver", kappa},
               {"residual", cumulant_residual(kappa, f, p, cfg.model, pc)}};
        try {
            r["kappa_empirical"] = estimate_json(empirical_cumulant(sim.values[j], N));
            r["kappa_empirical"]["N"] = N;
        } catch (const std::exception&) {
            r["kappa_empirical"] = nullptr;
        }
        try {
            r["kappa_eta"] = estimate_json(empirical_cumulant(column(eta.rows, j)));
        } catch (const std::exception&) {
            r["kappa_eta"] = nullptr;
        }
        if (pool) r["pc_pool"] = pool->note;
        reports.push_back(r);
        log << "fn " << j << ": kappa_solver=" << format_double(kappa) << std::endl;
    }
    write_json(cfg, "cumulant.json", "cumulant",
               {{"reports", reports},
                {"sim_overflow", sim.overflow},
                {"eta_overflow", eta.overflow}});
    const double rate = static_cast<double>(sim.overflow) / static_cast<double>(cfg.replicates);
    return budget_verdict(rate, cfg, log);
}

int cmd_verify(const RunConfig& cfg, std::ostream& log) {
    AcceptanceOptions opt;
    opt.quick = cfg.quick;
    opt.only = cfg.only;
    opt.double_lambda = cfg.inject_fault == "double-lambda";
    opt.workers = cfg.workers;
    opt.seed = cfg.master_seed;
    const auto results = run_acceptance(opt, log);
    const bool ok = all_passed(results);
    write_json(cfg, "verify.json", "verify", {{"criteria", acceptance_report(results)}, {"pass", ok}});
    return ok ? kExitOk : kExitAcceptanceFailure;
}

} // namespace isleforge
