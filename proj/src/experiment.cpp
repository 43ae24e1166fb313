#include "ibcb/experiment.hpp"

#include "ibcb/constraints.hpp"
#include "ibcb/error.hpp"

#include <json.hpp>

#include <fmt/format.h>

#include <chrono>
#include <cstring>
#include <exception>
#include <fstream>
#include <mutex>

namespace ibcb {

namespace fs = std::filesystem;
using nlohmann::json;

std::string Cell::tag(SelectionMode mode) const {
    return fmt::format("{}_noise{:g}_dup{}_ce{:g}_ood{}", to_string(mode), noise_std, dup, ce_rate, ood ? 1 : 0);
}

std::vector<Cell> expand_cells(const ExperimentConfig& cfg) {
    std::vector<Cell> out;
    for (double noise : cfg.ablation.noise_std) {
        for (int dup : cfg.ablation.dup) {
            for (double ce : cfg.ablation.ce_rate) {
                for (bool ood : cfg.ablation.ood) out.push_back(Cell{noise, dup, ce, ood});
            }
        }
    }
    return out;
}

std::uint64_t LogSeeds::test(int j) const { return Rng::derive_seed(log, {0x40, static_cast<std::uint64_t>(j)}); }

LogSeeds log_seeds(std::uint64_t base, int log_index) {
    LogSeeds s;
    s.log = Rng::derive_seed(base, {0x10, static_cast<std::uint64_t>(log_index)});
    s.online = Rng::derive_seed(s.log, {0x20});
    // run_online_phase draws policy randomness from child stream 3.
    s.policy = Rng(s.online).child(3).seed();
    s.birl = Rng::derive_seed(s.log, {0x30});
    return s;
}

EnvSpec make_env(const ExperimentConfig& cfg, const Cell& cell, std::uint64_t log_seed) {
    EnvSpec spec;
    spec.dim = cfg.env.dim;
    spec.mu_list = cfg.env.mu_list;
    spec.sigma_s = cfg.env.sigma_s;
    spec.noise_std = cell.noise_std;
    spec.reward_link = cfg.env.reward_link;
    if (cell.ood) spec.ood_first_mean_bt = cfg.env.ood_mean;
    spec.dup = cell.dup;
    spec.seed = log_seed;
    return with_sampled_reward_weights(std::move(spec), cfg.env.w_mean, cfg.env.w_std);
}

namespace {

std::string env_digest(const EnvSpec& env) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    const auto mix = [&](const void* p, std::size_t n) {
        const auto* bytes = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= bytes[i];
            h *= 0x100000001b3ULL;
        }
    };
    mix(&env.seed, sizeof env.seed);
    mix(env.w_reward.data(), sizeof(double) * static_cast<std::size_t>(env.w_reward.size()));
    mix(env.mu_list.data(), sizeof(double) * env.mu_list.size());
    mix(&env.sigma_s, sizeof env.sigma_s);
    mix(&env.noise_std, sizeof env.noise_std);
    mix(&env.dup, sizeof env.dup);
    return fmt::format("{:016x}", h);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Runs body(i) for i in [0, n) on `jobs` threads, rethrowing the first failure.
template <class F>
void parallel_tasks(int n, int jobs, F body) {
    if (jobs <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(dynamic) num_threads(jobs)
    for (int i = 0; i < n; ++i) {
        try {
            body(i);
        } catch (...) {
            errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

struct Task {
    Cell cell;
    int log = 0;
};

std::vector<Task> tasks_for(const ExperimentConfig& cfg) {
    std::vector<Task> out;
    for (const Cell& c : expand_cells(cfg)) {
        for (int k = 0; k < cfg.seeds.n_logs; ++k) out.push_back(Task{c, k});
    }
    return out;
}

struct Reporter {
    const Progress& progress;
    std::mutex mutex;

    void operator()(const std::string& msg) {
        if (!progress) return;
        const std::lock_guard<std::mutex> lock(mutex);
        progress(msg);
    }
};

json vec_json(const Vec& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

Vec json_vec(const json& j) {
    const auto values = j.get<std::vector<double>>();
    return Eigen::Map<const Vec>(values.data(), static_cast<Eigen::Index>(values.size()));
}

void write_json(const json& j, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    out << j.dump(1) << '\n';
    if (!out) throw Error("failed writing '" + path.string() + "'");
}

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path.string() + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw Error("'" + path.string() + "': " + e.what());
    }
}

std::string params_name(const std::string& method, std::optional<double> alpha) {
    return alpha ? fmt::format("params_{}_a{:g}.json", method, *alpha) : fmt::format("params_{}.json", method);
}

// Canonical estimator order: every IBCB α, then bc, then birl.
std::vector<std::pair<std::string, std::optional<double>>> estimator_order(const ExperimentConfig& cfg) {
    std::vector<std::pair<std::string, std::optional<double>>> out;
    if (cfg.runs("ibcb")) {
        for (double a : cfg.ibcb.alpha_list) out.emplace_back("ibcb", a);
    }
    if (cfg.runs("bc")) out.emplace_back("bc", std::nullopt);
    if (cfg.runs("birl")) out.emplace_back("birl", std::nullopt);
    return out;
}

}  // namespace

SimulatedLog simulate_log(const ExperimentConfig& cfg, const Cell& cell, int log_index) {
    SimulatedLog out;
    out.cell = cell;
    out.log_index = log_index;
    out.seeds = log_seeds(cfg.seeds.base, log_index);
    out.env = make_env(cfg, cell, out.seeds.log);
    Rng rng(out.seeds.online);
    OnlineRun run = run_online_phase(out.env, cfg.expert, cfg.phases.n_ol, cfg.phases.b_ol, rng);
    out.history = std::move(run.history);
    out.history.meta.env_digest = env_digest(out.env);
    out.expert_theta = run.final_state.theta();
    return out;
}

EvolutionHistory training_view(const SimulatedLog& log) { return truncate(strip_rewards(log.history), log.cell.ce_rate); }

const Vec& Inversion::scorer() const {
    if (theta) return *theta;
    if (bc) return bc->w;
    throw Error("inversion '" + method + "' has no parameters (status " + status + ")");
}

Inversion invert(const ExperimentConfig& cfg, const std::string& method, std::optional<double> alpha,
                 const EvolutionHistory& train, std::uint64_t birl_seed) {
    Inversion inv;
    inv.method = method;
    inv.alpha = alpha;
    try {
        if (method == "ibcb") {
            if (!alpha) throw Error("ibcb needs an alpha");
            const auto t0 = std::chrono::steady_clock::now();
            const ConstraintSystem cs = build_constraints(train, train.meta.expert_lambda, *alpha,
                                                          constraint_mode_for(train.meta.expert_mode),
                                                          cfg.ibcb.epsilon_margin);
            const QpSolution sol = estimate(cs, cfg.ibcb.qp);
            inv.train_time_seconds = seconds_since(t0);
            inv.theta = sol.theta_hat;
            inv.status = std::string(to_string(sol.status));
            if (sol.status == QpStatus::PenaltyFallback) {
                inv.warnings.push_back(fmt::format("ibcb: penalty fallback, max violation {:.3g}", sol.max_violation));
            }
        } else if (method == "bc") {
            const auto t0 = std::chrono::steady_clock::now();
            BcModel model = bc_train(train, cfg.bc);
            inv.train_time_seconds = seconds_since(t0);
            inv.train_fitness = bc_training_fitness(model, train);
            inv.status = model.converged ? "converged" : "iteration_cap";
            inv.warnings = model.warnings;
            inv.bc = std::move(model);
        } else if (method == "birl") {
            Rng rng(birl_seed);
            const auto t0 = std::chrono::steady_clock::now();
            McmcResult res = birl_estimate(train, cfg.birl, rng);
            inv.train_time_seconds = seconds_since(t0);
            inv.theta = res.mean;
            inv.status = res.warnings.empty() ? "ok" : "acceptance_warning";
            inv.warnings = std::move(res.warnings);
        } else {
            throw Error("unknown method '" + method + "'");
        }
    } catch (const Error& e) {
        if (method != "ibcb" && method != "bc" && method != "birl") throw;
        inv.status = "failed";
        inv.theta.reset();
        inv.bc.reset();
        inv.warnings.push_back(method + ": " + e.what());
    }
    return inv;
}

std::vector<Inversion> invert_all(const ExperimentConfig& cfg, const SimulatedLog& log) {
    const EvolutionHistory train = training_view(log);
    std::vector<Inversion> out;
    for (const auto& [method, alpha] : estimator_order(cfg)) {
        out.push_back(invert(cfg, method, alpha, train, log.seeds.birl));
    }
    return out;
}

std::vector<MetricReport> evaluate_log(const ExperimentConfig& cfg, const SimulatedLog& log,
                                       const std::vector<Inversion>& inversions) {
    const PhaseData ol_data = phase_data_from_history(log.history);
    std::vector<int> reference;
    for (const auto& ep : log.history.episodes) {
        for (const auto& st : ep) reference.push_back(st.chosen);
    }

    MetricReport base;
    base.expert_mode = cfg.expert.mode;
    base.noise_std = log.cell.noise_std;
    base.dup = log.cell.dup;
    base.ce_rate = log.cell.ce_rate;
    base.ood = log.cell.ood;
    base.log = log.log_index;

    struct Entry {
        MetricReport proto;
        const Vec* scorer = nullptr;
    };
    std::vector<Entry> entries;
    if (cfg.runs("expert")) {
        Entry e{base, &log.expert_theta};
        e.proto.algorithm = "expert";
        e.proto.status = "ok";
        e.proto.ol_fitness = ol_fitness(log.expert_theta, ol_data, cfg.expert, reference, log.seeds.policy);
        entries.push_back(e);
    }
    for (const Inversion& inv : inversions) {
        Entry e{base, nullptr};
        e.proto.algorithm = inv.method;
        e.proto.alpha = inv.alpha;
        e.proto.status = inv.status;
        e.proto.train_fitness = inv.train_fitness;
        e.proto.train_time_seconds = inv.train_time_seconds;
        if (inv.theta || inv.bc) e.scorer = &inv.scorer();
        if (inv.theta) e.proto.ol_fitness = ol_fitness(*inv.theta, ol_data, cfg.expert, reference, log.seeds.policy);
        entries.push_back(e);
    }

    std::vector<MetricReport> rows;
    for (int j = 0; j < cfg.seeds.n_seeds_per_log; ++j) {
        const Rng test_rng(log.seeds.test(j));
        Rng data_rng = test_rng.child(1);
        const PhaseData bt = gen_phase(log.env, Phase::BatchTest, cfg.phases.n_bt, cfg.phases.b_bt, data_rng);
        const std::vector<int> expert_choices = run_batch_test_phase(log.expert_theta, bt);
        for (const Entry& e : entries) {
            MetricReport row = e.proto;
            row.seed = j;
            if (e.scorer) {
                const std::vector<int> choices = run_batch_test_phase(*e.scorer, bt);
                Rng reward_rng = test_rng.child(2);
                row.bt_fitness = match_rate(choices, expert_choices);
                row.bt_avg_reward = bt_avg_reward(choices, bt, log.env, reward_rng);
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

std::vector<MetricReport> run_matrix(const ExperimentConfig& cfg, const Progress& progress) {
    cfg.validate();
    const std::vector<Task> tasks = tasks_for(cfg);
    std::vector<std::vector<MetricReport>> results(tasks.size());
    Reporter report{progress, {}};
    parallel_tasks(static_cast<int>(tasks.size()), cfg.jobs, [&](int i) {
        const Task& t = tasks[static_cast<std::size_t>(i)];
        const SimulatedLog log = simulate_log(cfg, t.cell, t.log);
        const std::vector<Inversion> inversions = invert_all(cfg, log);
        for (const auto& inv : inversions) {
            for (const auto& w : inv.warnings) report(fmt::format("warning [{} log {}]: {}", t.cell.tag(cfg.expert.mode), t.log, w));
        }
        results[static_cast<std::size_t>(i)] = evaluate_log(cfg, log, inversions);
        report(fmt::format("done {} log {}", t.cell.tag(cfg.expert.mode), t.log));
    });
    std::vector<MetricReport> rows;
    for (auto& r : results) rows.insert(rows.end(), r.begin(), r.end());
    return rows;
}

void write_outputs(const std::vector<MetricReport>& rows, const fs::path& dir) {
    fs::create_directories(dir);
    {
        std::ofstream out(dir / "metrics.csv", std::ios::binary);
        if (!out) throw Error("cannot write " + (dir / "metrics.csv").string());
        write_metrics_csv(rows, out);
    }
    std::ofstream out(dir / "timings.csv", std::ios::binary);
    if (!out) throw Error("cannot write " + (dir / "timings.csv").string());
    write_timings_csv(rows, out);
}

fs::path log_dir(const ExperimentConfig& cfg, const Cell& cell, int log_index) {
    return cfg.output_dir / cell.tag(cfg.expert.mode) / fmt::format("log_{}", log_index);
}

void write_env_snapshot(const SimulatedLog& log, const fs::path& path) {
    json j;
    j["log"] = log.log_index;
    j["seeds"] = {{"log", log.seeds.log}, {"online", log.seeds.online}, {"policy", log.seeds.policy},
                  {"birl", log.seeds.birl}};
    j["cell"] = {{"noise_std", log.cell.noise_std}, {"dup", log.cell.dup}, {"ce_rate", log.cell.ce_rate},
                 {"ood", log.cell.ood}};
    j["w_reward"] = vec_json(log.env.w_reward);
    j["reward_link"] = std::string(to_string(log.env.reward_link));
    j["expert_theta"] = vec_json(log.expert_theta);
    j["env_digest"] = log.history.meta.env_digest;
    write_json(j, path);
}

SimulatedLog read_log_dir(const ExperimentConfig& cfg, const Cell& cell, int log_index) {
    const fs::path dir = log_dir(cfg, cell, log_index);
    const json j = read_json(dir / "env.json");
    SimulatedLog out;
    out.cell = cell;
    out.log_index = log_index;
    try {
        out.seeds.log = j.at("seeds").at("log").get<std::uint64_t>();
        out.seeds.online = j.at("seeds").at("online").get<std::uint64_t>();
        out.seeds.policy = j.at("seeds").at("policy").get<std::uint64_t>();
        out.seeds.birl = j.at("seeds").at("birl").get<std::uint64_t>();
        out.env = make_env(cfg, cell, out.seeds.log);
        out.env.w_reward = json_vec(j.at("w_reward"));
        out.expert_theta = json_vec(j.at("expert_theta"));
    } catch (const json::exception& e) {
        throw Error("'" + (dir / "env.json").string() + "': " + e.what());
    }
    out.history = read_history(dir / "history.jsonl");
    if (out.history.meta.env_digest != env_digest(out.env)) {
        throw Error("'" + dir.string() + "': history was simulated under a different configuration");
    }
    return out;
}

void write_inversion(const Inversion& inv, const fs::path& path) {
    json j;
    j["method"] = inv.method;
    j["alpha"] = inv.alpha ? json(*inv.alpha) : json(nullptr);
    j["theta"] = inv.theta ? vec_json(*inv.theta) : json(nullptr);
    if (inv.bc) {
        j["bc"] = {{"w", vec_json(inv.bc->w)}, {"bias", inv.bc->bias}, {"iterations", inv.bc->iterations},
                   {"converged", inv.bc->converged}};
    }
    j["train_fitness"] = inv.train_fitness ? json(*inv.train_fitness) : json(nullptr);
    j["train_time_seconds"] = inv.train_time_seconds;
    j["status"] = inv.status;
    j["warnings"] = inv.warnings;
    write_json(j, path);
}

Inversion read_inversion(const fs::path& path) {
    const json j = read_json(path);
    Inversion inv;
    try {
        inv.method = j.at("method").get<std::string>();
        if (!j.at("alpha").is_null()) inv.alpha = j["alpha"].get<double>();
        if (!j.at("theta").is_null()) inv.theta = json_vec(j["theta"]);
        if (j.contains("bc")) {
            BcModel m;
            m.w = json_vec(j["bc"].at("w"));
            m.bias = j["bc"].at("bias").get<double>();
            m.iterations = j["bc"].at("iterations").get<long>();
            m.converged = j["bc"].at("converged").get<bool>();
            inv.bc = std::move(m);
        }
        if (!j.at("train_fitness").is_null()) inv.train_fitness = j["train_fitness"].get<double>();
        inv.train_time_seconds = j.at("train_time_seconds").get<double>();
        inv.status = j.at("status").get<std::string>();
        inv.warnings = j.at("warnings").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
        throw Error("'" + path.string() + "': " + e.what());
    }
    return inv;
}

void cmd_simulate(const ExperimentConfig& cfg, const Progress& progress) {
    cfg.validate();
    const std::vector<Task> tasks = tasks_for(cfg);
    Reporter report{progress, {}};
    fs::create_directories(cfg.output_dir);
    parallel_tasks(static_cast<int>(tasks.size()), cfg.jobs, [&](int i) {
        const Task& t = tasks[static_cast<std::size_t>(i)];
        const SimulatedLog log = simulate_log(cfg, t.cell, t.log);
        const fs::path dir = log_dir(cfg, t.cell, t.log);
        fs::create_directories(dir);
        write_history(log.history, dir / "history.jsonl");
        write_history(training_view(log), dir / "train.jsonl");
        write_env_snapshot(log, dir / "env.json");
        report("simulated " + dir.string());
    });
}

void cmd_invert(const ExperimentConfig& cfg, const std::string& method, const Progress& progress) {
    cfg.validate();
    if (method != "ibcb" && method != "bc" && method != "birl") {
        throw Error("invert: method must be ibcb, bc or birl, got '" + method + "'");
    }
    const std::vector<Task> tasks = tasks_for(cfg);
    Reporter report{progress, {}};
    parallel_tasks(static_cast<int>(tasks.size()), cfg.jobs, [&](int i) {
        const Task& t = tasks[static_cast<std::size_t>(i)];
        const fs::path dir = log_dir(cfg, t.cell, t.log);
        const json env = read_json(dir / "env.json");
        const std::uint64_t birl_seed = env.at("seeds").at("birl").get<std::uint64_t>();
        const EvolutionHistory train = read_history(dir / "train.jsonl");
        if (train.has_rewards()) throw Error("'" + (dir / "train.jsonl").string() + "' carries rewards");
        std::vector<std::optional<double>> alphas = {std::nullopt};
        if (method == "ibcb") alphas.assign(cfg.ibcb.alpha_list.begin(), cfg.ibcb.alpha_list.end());
        for (const auto& alpha : alphas) {
            const Inversion inv = invert(cfg, method, alpha, train, birl_seed);
            for (const auto& w : inv.warnings) report("warning [" + dir.string() + "]: " + w);
            write_inversion(inv, dir / params_name(method, alpha));
        }
        report("inverted " + dir.string() + " with " + method);
    });
}

std::vector<MetricReport> cmd_evaluate(const ExperimentConfig& cfg, const Progress& progress) {
    cfg.validate();
    const std::vector<Task> tasks = tasks_for(cfg);
    std::vector<std::vector<MetricReport>> results(tasks.size());
    Reporter report{progress, {}};
    parallel_tasks(static_cast<int>(tasks.size()), cfg.jobs, [&](int i) {
        const Task& t = tasks[static_cast<std::size_t>(i)];
        const SimulatedLog log = read_log_dir(cfg, t.cell, t.log);
        const fs::path dir = log_dir(cfg, t.cell, t.log);
        std::vector<Inversion> inversions;
        for (const auto& [method, alpha] : estimator_order(cfg)) {
            const fs::path p = dir / params_name(method, alpha);
            if (fs::exists(p)) inversions.push_back(read_inversion(p));
        }
        results[static_cast<std::size_t>(i)] = evaluate_log(cfg, log, inversions);
        report("evaluated " + dir.string());
    });
    std::vector<MetricReport> rows;
    for (auto& r : results) rows.insert(rows.end(), r.begin(), r.end());
    write_outputs(rows, cfg.output_dir);
    return rows;
}

}  // namespace ibcb
