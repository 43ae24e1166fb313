#include "ibcb/config.hpp"

#include "ibcb/error.hpp"
#include "ibcb/history.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <fmt/format.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace ibcb {

namespace pt = boost::property_tree;

namespace {

std::string trim(std::string s) {
    const auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double out = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return out;
    } catch (const std::exception&) {
        throw Error("config: " + key + " expects a number, got '" + v + "'");
    }
}

long to_long(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const long out = std::stol(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return out;
    } catch (const std::exception&) {
        throw Error("config: " + key + " expects an integer, got '" + v + "'");
    }
}

std::uint64_t to_seed(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        if (!v.empty() && v[0] == '-') throw std::invalid_argument(v);
        const unsigned long long out = std::stoull(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return out;
    } catch (const std::exception&) {
        throw Error("config: " + key + " expects a non-negative integer, got '" + v + "'");
    }
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
    if (v == "0" || v == "false" || v == "off" || v == "no") return false;
    throw Error("config: " + key + " expects a boolean, got '" + v + "'");
}

template <class T, class F>
std::vector<T> to_list(const std::string& key, const std::string& v, F convert) {
    std::vector<T> out;
    for (const auto& item : split_list(v)) out.push_back(static_cast<T>(convert(key, item)));
    if (out.empty()) throw Error("config: " + key + " must not be empty");
    return out;
}

template <class T>
std::string join(const std::vector<T>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ", ";
        if constexpr (std::is_same_v<T, double>) {
            out += format_double(values[i]);
        } else if constexpr (std::is_same_v<T, bool>) {
            out += values[i] ? "true" : "false";
        } else {
            out += fmt::format("{}", values[i]);
        }
    }
    return out;
}

using Setter = std::function<void(ExperimentConfig&, const std::string& key, const std::string& value)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"env.dim", [](auto& c, auto& k, auto& v) { c.env.dim = static_cast<int>(to_long(k, v)); }},
        {"env.mu_list", [](auto& c, auto& k, auto& v) { c.env.mu_list = to_list<double>(k, v, to_double); }},
        {"env.sigma_s", [](auto& c, auto& k, auto& v) { c.env.sigma_s = to_double(k, v); }},
        {"env.w_mean", [](auto& c, auto& k, auto& v) { c.env.w_mean = to_double(k, v); }},
        {"env.w_std", [](auto& c, auto& k, auto& v) { c.env.w_std = to_double(k, v); }},
        {"env.reward_link", [](auto& c, auto&, auto& v) { c.env.reward_link = reward_link_from_string(v); }},
        {"env.ood_mean", [](auto& c, auto& k, auto& v) { c.env.ood_mean = to_double(k, v); }},
        {"expert.mode", [](auto& c, auto&, auto& v) { c.expert.mode = selection_mode_from_string(v); }},
        {"expert.alpha", [](auto& c, auto& k, auto& v) { c.expert.alpha = to_double(k, v); }},
        {"expert.lambda", [](auto& c, auto& k, auto& v) { c.expert.lambda = to_double(k, v); }},
        {"phases.n_ol", [](auto& c, auto& k, auto& v) { c.phases.n_ol = static_cast<int>(to_long(k, v)); }},
        {"phases.b_ol", [](auto& c, auto& k, auto& v) { c.phases.b_ol = static_cast<int>(to_long(k, v)); }},
        {"phases.n_bt", [](auto& c, auto& k, auto& v) { c.phases.n_bt = static_cast<int>(to_long(k, v)); }},
        {"phases.b_bt", [](auto& c, auto& k, auto& v) { c.phases.b_bt = static_cast<int>(to_long(k, v)); }},
        {"ibcb.alpha_list", [](auto& c, auto& k, auto& v) { c.ibcb.alpha_list = to_list<double>(k, v, to_double); }},
        {"ibcb.epsilon_margin", [](auto& c, auto& k, auto& v) { c.ibcb.epsilon_margin = to_double(k, v); }},
        {"qp.eps_abs", [](auto& c, auto& k, auto& v) { c.ibcb.qp.eps_abs = to_double(k, v); }},
        {"qp.eps_rel", [](auto& c, auto& k, auto& v) { c.ibcb.qp.eps_rel = to_double(k, v); }},
        {"qp.fallback_eps", [](auto& c, auto& k, auto& v) { c.ibcb.qp.fallback_eps = to_double(k, v); }},
        {"qp.max_iter", [](auto& c, auto& k, auto& v) { c.ibcb.qp.max_iter = static_cast<int>(to_long(k, v)); }},
        {"qp.rho", [](auto& c, auto& k, auto& v) { c.ibcb.qp.rho = to_double(k, v); }},
        {"qp.sigma", [](auto& c, auto& k, auto& v) { c.ibcb.qp.sigma = to_double(k, v); }},
        {"qp.infeasibility_tol", [](auto& c, auto& k, auto& v) { c.ibcb.qp.infeasibility_tol = to_double(k, v); }},
        {"qp.penalty_weight", [](auto& c, auto& k, auto& v) { c.ibcb.qp.penalty_weight = to_double(k, v); }},
        {"bc.c", [](auto& c, auto& k, auto& v) { c.bc.c = to_double(k, v); }},
        {"bc.tolerance", [](auto& c, auto& k, auto& v) { c.bc.tolerance = to_double(k, v); }},
        {"bc.max_iter", [](auto& c, auto& k, auto& v) { c.bc.max_iter = to_long(k, v); }},
        {"birl.burn_in", [](auto& c, auto& k, auto& v) { c.birl.burn_in = to_long(k, v); }},
        {"birl.iterations", [](auto& c, auto& k, auto& v) { c.birl.iterations = to_long(k, v); }},
        {"birl.thin", [](auto& c, auto& k, auto& v) { c.birl.thin = to_long(k, v); }},
        {"birl.proposal_std", [](auto& c, auto& k, auto& v) { c.birl.proposal_std = to_double(k, v); }},
        {"birl.beta", [](auto& c, auto& k, auto& v) { c.birl.beta_inv_temp = to_double(k, v); }},
        {"birl.prior_std", [](auto& c, auto& k, auto& v) { c.birl.prior_std = to_double(k, v); }},
        {"ablation.noise_std",
         [](auto& c, auto& k, auto& v) { c.ablation.noise_std = to_list<double>(k, v, to_double); }},
        {"ablation.dup", [](auto& c, auto& k, auto& v) { c.ablation.dup = to_list<int>(k, v, to_long); }},
        {"ablation.ce_rate", [](auto& c, auto& k, auto& v) { c.ablation.ce_rate = to_list<double>(k, v, to_double); }},
        {"ablation.ood", [](auto& c, auto& k, auto& v) { c.ablation.ood = to_list<bool>(k, v, to_bool); }},
        {"seeds.base", [](auto& c, auto& k, auto& v) { c.seeds.base = to_seed(k, v); }},
        {"seeds.n_logs", [](auto& c, auto& k, auto& v) { c.seeds.n_logs = static_cast<int>(to_long(k, v)); }},
        {"seeds.n_seeds_per_log",
         [](auto& c, auto& k, auto& v) { c.seeds.n_seeds_per_log = static_cast<int>(to_long(k, v)); }},
        {"run.methods",
         [](auto& c, auto& k, auto& v) {
             c.methods = split_list(v);
             if (c.methods.empty()) throw Error("config: " + k + " must not be empty");
         }},
        {"run.jobs", [](auto& c, auto& k, auto& v) { c.jobs = static_cast<int>(to_long(k, v)); }},
        {"output.dir", [](auto& c, auto&, auto& v) { c.output_dir = v; }},
    };
    return table;
}

}  // namespace

bool ExperimentConfig::runs(const std::string& method) const {
    return std::find(methods.begin(), methods.end(), method) != methods.end();
}

void ExperimentConfig::validate() const {
    if (env.dim < 1) throw Error("config: env.dim must be positive");
    if (env.mu_list.size() < 2) throw Error("config: env.mu_list needs at least two candidates");
    if (!(env.sigma_s >= 0.0) || !(env.w_std >= 0.0)) throw Error("config: standard deviations must be non-negative");
    if (!(expert.alpha >= 0.0) || !(expert.lambda > 0.0)) throw Error("config: expert alpha ≥ 0 and lambda > 0 required");
    if (phases.n_ol < 1 || phases.b_ol < 1 || phases.n_bt < 1 || phases.b_bt < 1) {
        throw Error("config: phase sizes must be positive");
    }
    for (double a : ibcb.alpha_list) {
        if (!(a >= 0.0)) throw Error("config: ibcb.alpha_list entries must be non-negative");
    }
    if (!(ibcb.epsilon_margin >= 0.0)) throw Error("config: ibcb.epsilon_margin must be non-negative");
    ibcb.qp.validate();
    bc.validate();
    birl.validate();
    if (ablation.noise_std.empty() || ablation.dup.empty() || ablation.ce_rate.empty() || ablation.ood.empty()) {
        throw Error("config: ablation lists must not be empty");
    }
    for (double s : ablation.noise_std) {
        if (!(s >= 0.0)) throw Error("config: ablation.noise_std entries must be non-negative");
    }
    for (int k : ablation.dup) {
        if (k < 0 || (k > 0 && 2 * k >= phases.n_ol)) {
            throw Error(fmt::format("config: dup = {} needs 2·dup < n_ol = {}", k, phases.n_ol));
        }
    }
    for (double r : ablation.ce_rate) {
        if (!(r > 0.0 && r <= 1.0)) throw Error("config: ablation.ce_rate entries must lie in (0, 1]");
    }
    if (seeds.n_logs < 1 || seeds.n_seeds_per_log < 1) throw Error("config: seed counts must be positive");
    static const std::set<std::string> known = {"expert", "ibcb", "bc", "birl"};
    for (const auto& m : methods) {
        if (!known.count(m)) throw Error("config: unknown method '" + m + "'");
    }
    if (jobs < 1) throw Error("config: run.jobs must be positive");
}

ExperimentConfig parse_config(std::istream& in) {
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ParseError("config: " + e.message(), static_cast<int>(e.line()));
    }
    ExperimentConfig cfg;
    const auto& table = setters();
    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty()) throw Error("config: key '" + section + "' outside any section");
        for (const auto& [key, value] : body) {
            const std::string full = section + "." + key;
            const auto it = table.find(full);
            if (it == table.end()) throw Error("config: unknown key '" + full + "'");
            it->second(cfg, full, trim(value.data()));
        }
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config '" + path.string() + "'");
    return parse_config(in);
}

void write_config(const ExperimentConfig& c, std::ostream& out) {
    out << "[env]\n"
        << "dim = " << c.env.dim << "\nmu_list = " << join(c.env.mu_list) << "\nsigma_s = " << format_double(c.env.sigma_s)
        << "\nw_mean = " << format_double(c.env.w_mean) << "\nw_std = " << format_double(c.env.w_std)
        << "\nreward_link = " << to_string(c.env.reward_link) << "\nood_mean = " << format_double(c.env.ood_mean)
        << "\n\n[expert]\nmode = " << to_string(c.expert.mode) << "\nalpha = " << format_double(c.expert.alpha)
        << "\nlambda = " << format_double(c.expert.lambda) << "\n\n[phases]\nn_ol = " << c.phases.n_ol
        << "\nb_ol = " << c.phases.b_ol << "\nn_bt = " << c.phases.n_bt << "\nb_bt = " << c.phases.b_bt
        << "\n\n[ibcb]\nalpha_list = " << join(c.ibcb.alpha_list)
        << "\nepsilon_margin = " << format_double(c.ibcb.epsilon_margin) << "\n\n[qp]\neps_abs = "
        << format_double(c.ibcb.qp.eps_abs) << "\neps_rel = " << format_double(c.ibcb.qp.eps_rel)
        << "\nfallback_eps = " << format_double(c.ibcb.qp.fallback_eps) << "\nmax_iter = " << c.ibcb.qp.max_iter
        << "\nrho = " << format_double(c.ibcb.qp.rho) << "\nsigma = " << format_double(c.ibcb.qp.sigma)
        << "\ninfeasibility_tol = " << format_double(c.ibcb.qp.infeasibility_tol)
        << "\npenalty_weight = " << format_double(c.ibcb.qp.penalty_weight) << "\n\n[bc]\nc = " << format_double(c.bc.c)
        << "\ntolerance = " << format_double(c.bc.tolerance) << "\nmax_iter = " << c.bc.max_iter
        << "\n\n[birl]\nburn_in = " << c.birl.burn_in << "\niterations = " << c.birl.iterations
        << "\nthin = " << c.birl.thin << "\nproposal_std = " << format_double(c.birl.proposal_std)
        << "\nbeta = " << format_double(c.birl.beta_inv_temp) << "\nprior_std = " << format_double(c.birl.prior_std)
        << "\n\n[ablation]\nnoise_std = " << join(c.ablation.noise_std) << "\ndup = " << join(c.ablation.dup)
        << "\nce_rate = " << join(c.ablation.ce_rate) << "\nood = " << join(c.ablation.ood)
        << "\n\n[seeds]\nbase = " << c.seeds.base << "\nn_logs = " << c.seeds.n_logs
        << "\nn_seeds_per_log = " << c.seeds.n_seeds_per_log << "\n\n[run]\nmethods = " << join(c.methods)
        << "\njobs = " << c.jobs << "\n\n[output]\ndir = " << c.output_dir.string() << "\n";
}

}  // namespace ibcb
