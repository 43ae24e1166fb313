#include "ibcb/baselines.hpp"

#include "ibcb/error.hpp"
#include "ibcb/kernels.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace ibcb {

void BcSettings::validate() const {
    if (!(c > 0.0) || !(tolerance > 0.0) || max_iter < 1) throw Error("bc: c, tolerance and max_iter must be positive");
}

int BcModel::predict(RowsView candidates) const {
    int best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < candidates.rows(); ++j) {
        const double score = candidates.row(j).dot(w);
        if (score > best_score) {
            best_score = score;
            best = static_cast<int>(j);
        }
    }
    return best;
}

ChoiceData flatten_choices(const EvolutionHistory& h) {
    h.validate();
    ChoiceData out;
    out.n_candidates = h.meta.n_candidates;
    const Eigen::Index steps = static_cast<Eigen::Index>(h.meta.n_episodes) * h.meta.batch;
    out.candidates.resize(steps * h.meta.n_candidates, h.meta.dim);
    out.chosen.reserve(static_cast<std::size_t>(steps));
    Eigen::Index row = 0;
    for (const auto& ep : h.episodes) {
        for (const auto& st : ep) {
            out.candidates.middleRows(row, st.candidates.rows()) = st.candidates;
            row += st.candidates.rows();
            out.chosen.push_back(st.chosen);
        }
    }
    return out;
}

BcModel bc_train(const EvolutionHistory& h, const BcSettings& settings) {
    settings.validate();
    if (h.meta.n_episodes < 1) throw Error("bc_train: empty history");
    const ChoiceData data = flatten_choices(h);
    const Eigen::Index n = data.candidates.rows();
    const int d = h.meta.dim;
    const int m = data.n_candidates;

    BcModel model;
    model.w = Vec::Zero(d);

    const auto first = data.candidates.row(0);
    bool degenerate = true;
    for (Eigen::Index i = 1; i < n && degenerate; ++i) degenerate = data.candidates.row(i) == first;
    if (degenerate) {
        model.converged = true;
        model.warnings.push_back("bc_train: all contexts identical; returning zero weights");
        return model;
    }

    // Augmented weights (w, bias) against features (s, 1).
    Vec wa = Vec::Zero(d + 1);
    std::vector<double> y(static_cast<std::size_t>(n), -1.0);
    for (std::size_t t = 0; t < data.chosen.size(); ++t) y[t * static_cast<std::size_t>(m) + data.chosen[t]] = 1.0;
    std::vector<double> qd(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) qd[static_cast<std::size_t>(i)] = data.candidates.row(i).squaredNorm() + 1.0;
    std::vector<double> alpha(static_cast<std::size_t>(n), 0.0);
    std::vector<Eigen::Index> index(static_cast<std::size_t>(n));
    std::iota(index.begin(), index.end(), Eigen::Index{0});

    const double upper = settings.c;
    Eigen::Index active = n;
    double pg_max_old = std::numeric_limits<double>::infinity();
    double pg_min_old = -std::numeric_limits<double>::infinity();
    Rng order(settings.order_seed);

    long iter = 0;
    while (iter < settings.max_iter) {
        for (Eigen::Index i = 0; i < active; ++i) {
            const auto j = i + static_cast<Eigen::Index>(order.next_u64() % static_cast<std::uint64_t>(active - i));
            std::swap(index[static_cast<std::size_t>(i)], index[static_cast<std::size_t>(j)]);
        }
        double pg_max = -std::numeric_limits<double>::infinity();
        double pg_min = std::numeric_limits<double>::infinity();
        for (Eigen::Index s = 0; s < active; ++s) {
            const Eigen::Index i = index[static_cast<std::size_t>(s)];
            const auto iu = static_cast<std::size_t>(i);
            const auto xi = data.candidates.row(i);
            const double g = y[iu] * (xi.dot(wa.head(d)) + wa(d)) - 1.0;
            double pg = 0.0;
            if (alpha[iu] == 0.0) {
                if (g > pg_max_old) {
                    --active;
                    std::swap(index[static_cast<std::size_t>(s)], index[static_cast<std::size_t>(active)]);
                    --s;
                    continue;
                }
                pg = std::min(g, 0.0);
            } else if (alpha[iu] == upper) {
                if (g < pg_min_old) {
                    --active;
                    std::swap(index[static_cast<std::size_t>(s)], index[static_cast<std::size_t>(active)]);
                    --s;
                    continue;
                }
                pg = std::max(g, 0.0);
            } else {
                pg = g;
            }
            pg_max = std::max(pg_max, pg);
            pg_min = std::min(pg_min, pg);
            if (std::abs(pg) > 1e-12) {
                const double old = alpha[iu];
                alpha[iu] = std::clamp(old - g / qd[iu], 0.0, upper);
                const double step = (alpha[iu] - old) * y[iu];
                wa.head(d) += step * xi.transpose();
                wa(d) += step;
            }
        }
        ++iter;
        if (pg_max - pg_min <= settings.tolerance) {
            if (active == n) {
                model.converged = true;
                break;
            }
            // Re-check everything before declaring convergence.
            active = n;
            pg_max_old = std::numeric_limits<double>::infinity();
            pg_min_old = -std::numeric_limits<double>::infinity();
            continue;
        }
        pg_max_old = pg_max > 0.0 ? pg_max : std::numeric_limits<double>::infinity();
        pg_min_old = pg_min < 0.0 ? pg_min : -std::numeric_limits<double>::infinity();
    }
    model.w = wa.head(d);
    model.bias = wa(d);
    model.iterations = iter;
    if (!model.converged) {
        model.warnings.push_back(fmt::format("bc_train: stopped at the iteration cap ({})", settings.max_iter));
    }
    if (!model.w.allFinite()) throw Error("bc_train: non-finite weights");
    return model;
}

double bc_training_fitness(const BcModel& model, const EvolutionHistory& h) {
    long hits = 0;
    long total = 0;
    for (const auto& ep : h.episodes) {
        for (const auto& st : ep) {
            const RowsView view(st.candidates.data(), st.candidates.rows(), st.candidates.cols());
            hits += model.predict(view) == st.chosen;
            ++total;
        }
    }
    return total ? static_cast<double>(hits) / static_cast<double>(total) : 0.0;
}

void BirlConfig::validate() const {
    if (burn_in < 0 || iterations < 1 || thin < 1) throw Error("birl: iterations and thin must be positive");
    if (!(proposal_std > 0.0) || !(prior_std > 0.0) || !(beta_inv_temp >= 0.0)) {
        throw Error("birl: proposal_std and prior_std must be positive, beta non-negative");
    }
}

McmcResult metropolis_hastings(const BoundedLogDensity& log_density, const Vec& init, const BirlConfig& cfg,
                               Rng& rng) {
    cfg.validate();
    const Eigen::Index d = init.size();
    Vec current = init;
    double current_lp = log_density(current, -std::numeric_limits<double>::infinity());
    if (!std::isfinite(current_lp)) throw Error("metropolis_hastings: log density is not finite at the start point");

    McmcResult out;
    out.mean = Vec::Zero(d);
    out.samples.reserve(static_cast<std::size_t>(cfg.n_samples()));
    long accepted = 0;
    Vec proposal(d);
    const long total = cfg.burn_in + cfg.iterations;
    for (long it = 0; it < total; ++it) {
        for (Eigen::Index k = 0; k < d; ++k) proposal(k) = current(k) + cfg.proposal_std * rng.normal();
        const double threshold = current_lp + std::log(rng.uniform());
        const double lp = log_density(proposal, threshold);
        const bool accept = std::isfinite(lp) && lp > threshold;
        if (accept) {
            current = proposal;
            current_lp = lp;
        }
        if (it < cfg.burn_in) continue;
        accepted += accept;
        const long kept = it - cfg.burn_in + 1;
        if (kept % cfg.thin == 0) {
            out.samples.push_back(current);
            out.mean += current;
        }
    }
    if (!out.samples.empty()) out.mean /= static_cast<double>(out.samples.size());
    out.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(cfg.iterations);
    if (out.acceptance_rate < 0.05 || out.acceptance_rate > 0.95) {
        out.warnings.push_back(fmt::format("metropolis_hastings: acceptance rate {:.4f} outside [0.05, 0.95] "
                                           "(proposal_std {}, {} post-burn-in iterations)",
                                           out.acceptance_rate, cfg.proposal_std, cfg.iterations));
    }
    return out;
}

McmcResult metropolis_hastings(const LogDensity& log_density, const Vec& init, const BirlConfig& cfg, Rng& rng) {
    return metropolis_hastings(BoundedLogDensity([&](const Vec& x, double) { return log_density(x); }), init, cfg,
                               rng);
}

double birl_log_posterior(const ChoiceData& data, const Vec& theta, const BirlConfig& cfg) {
    const double prior = -0.5 * theta.squaredNorm() / (cfg.prior_std * cfg.prior_std);
    return prior + kernels::softmax_log_likelihood(data.view(), data.chosen, data.n_candidates, theta,
                                                   cfg.beta_inv_temp);
}

double birl_log_posterior_bounded(const ChoiceData& data, const Vec& theta, const BirlConfig& cfg, double floor) {
    const double prior = -0.5 * theta.squaredNorm() / (cfg.prior_std * cfg.prior_std);
    const double lik = kernels::softmax_log_likelihood_bounded(data.view(), data.chosen, data.n_candidates, theta,
                                                               cfg.beta_inv_temp, floor - prior);
    if (lik < floor - prior) return -std::numeric_limits<double>::infinity();
    return prior + lik;
}

McmcResult birl_estimate(const EvolutionHistory& h, const BirlConfig& cfg, Rng& rng) {
    cfg.validate();
    if (h.meta.n_episodes < 1) throw Error("birl_estimate: empty history");
    const ChoiceData data = flatten_choices(h);
    return metropolis_hastings(
        BoundedLogDensity([&](const Vec& theta, double floor) { return birl_log_posterior_bounded(data, theta, cfg, floor); }),
        Vec::Zero(h.meta.dim), cfg, rng);
}

}  // namespace ibcb
