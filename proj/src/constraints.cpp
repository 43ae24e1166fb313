#include "ibcb/constraints.hpp"

#include "ibcb/error.hpp"

#include <json.hpp>

#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <string>

namespace ibcb {

std::string_view to_string(ConstraintMode mode) { return mode == ConstraintMode::Ucb ? "ucb" : "ts"; }

ConstraintMode constraint_mode_from_string(std::string_view name) {
    if (name == "ucb") return ConstraintMode::Ucb;
    if (name == "ts") return ConstraintMode::Ts;
    throw Error("unknown constraint mode '" + std::string(name) + "'");
}

ConstraintMode constraint_mode_for(SelectionMode expert) {
    return is_thompson(expert) ? ConstraintMode::Ts : ConstraintMode::Ucb;
}

Eigen::Index ConstraintSystem::count_vacuous() const {
    Eigen::Index count = 0;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        if ((a.row(i).array() == 0.0).all()) ++count;
    }
    return count;
}

double ConstraintSystem::max_violation(const Vec& theta) const {
    if (a.rows() == 0) return 0.0;
    return (a * theta - u).maxCoeff();
}

Mat PsiReplay::phi(int episode) const {
    const int d = static_cast<int>(psi.front().rows());
    Mat out = Mat::Zero(d, d);
    for (int i = 0; i < episode; ++i) out += gram[static_cast<std::size_t>(i)];
    return out;
}

PsiReplay replay_psi(const EvolutionHistory& h, double lambda) {
    if (!(lambda > 0.0)) throw Error("replay_psi: lambda must be positive");
    h.validate();
    const int d = h.meta.dim;
    PsiReplay out;
    Mat psi = lambda * Mat::Identity(d, d);
    for (const auto& ep : h.episodes) {
        out.psi.push_back(psi);
        Mat g = Mat::Zero(d, d);
        for (const auto& st : ep) {
            const auto s = st.candidates.row(st.chosen);
            g.noalias() += s.transpose() * s;
        }
        out.gram.push_back(g);
        psi += g;
    }
    return out;
}

namespace {

void check_inputs(const EvolutionHistory& h, double lambda, double alpha, double epsilon) {
    h.validate();
    if (h.meta.n_episodes < 2) {
        throw Error("build_constraints: history has " + std::to_string(h.meta.n_episodes) +
                    " episode(s); at least 2 are needed");
    }
    if (!(lambda > 0.0)) throw Error("build_constraints: lambda must be positive");
    if (!(alpha >= 0.0) || !(epsilon >= 0.0)) throw Error("build_constraints: alpha and epsilon must be non-negative");
    for (const auto& ep : h.episodes) {
        for (const auto& st : ep) {
            if (!st.candidates.allFinite()) throw Error("build_constraints: non-finite context");
        }
    }
}

ConstraintSystem empty_system(const EvolutionHistory& h, double alpha, ConstraintMode mode, double epsilon) {
    const int m = h.meta.n_candidates;
    const Eigen::Index rows =
        static_cast<Eigen::Index>(h.meta.n_episodes - 1) * h.meta.batch * std::max(0, m - 1);
    ConstraintSystem cs;
    cs.dim = h.meta.dim;
    cs.a.resize(rows, h.meta.dim);
    cs.u.resize(rows);
    cs.provenance.resize(static_cast<std::size_t>(rows));
    cs.mode = mode;
    cs.alpha_ibcb = alpha;
    cs.epsilon_margin = mode == ConstraintMode::Ts ? epsilon : 0.0;
    return cs;
}

}  // namespace

ConstraintSystem build_constraints(const EvolutionHistory& h, double lambda, double alpha_ibcb, ConstraintMode mode,
                                   double epsilon_margin) {
    check_inputs(h, lambda, alpha_ibcb, epsilon_margin);
    ConstraintSystem cs = empty_system(h, alpha_ibcb, mode, epsilon_margin);
    const PsiReplay replay = replay_psi(h, lambda);
    const int m = h.meta.n_candidates;
    const int batch = h.meta.batch;
    const Eigen::Index per_step = std::max(0, m - 1);

    Mat phi = Mat::Zero(h.meta.dim, h.meta.dim);
    for (int e = 1; e < h.meta.n_episodes; ++e) {
        phi += replay.gram[static_cast<std::size_t>(e - 1)];
        const Cholesky chol(replay.psi[static_cast<std::size_t>(e)]);
        // Φ and Ψ⁻¹ commute, so Φ Ψ⁻¹ = (Ψ⁻¹ Φ)ᵀ.
        Mat coupling(h.meta.dim, h.meta.dim);
        for (int c = 0; c < h.meta.dim; ++c) coupling.row(c) = chol.solve(phi.col(c)).transpose();
        const auto& ep = h.episodes[static_cast<std::size_t>(e)];
        const Eigen::Index base = static_cast<Eigen::Index>(e - 1) * batch * per_step;

#pragma omp parallel for schedule(static)
        for (int b = 0; b < batch; ++b) {
            const StepRecord& st = ep[static_cast<std::size_t>(b)];
            const Vec chosen = st.candidates.row(st.chosen).transpose();
            const double h_chosen = mode == ConstraintMode::Ucb ? std::sqrt(chol.inverse_quad_form(chosen)) : 0.0;
            Eigen::Index row = base + static_cast<Eigen::Index>(b) * per_step;
            for (int j = 0; j < m; ++j) {
                if (j == st.chosen) continue;
                const Vec alt = st.candidates.row(j).transpose();
                cs.a.row(row) = (coupling * (alt - chosen)).transpose();
                cs.u(row) = mode == ConstraintMode::Ucb
                                ? alpha_ibcb * (h_chosen - std::sqrt(chol.inverse_quad_form(alt)))
                                : -epsilon_margin;
                cs.provenance[static_cast<std::size_t>(row)] = RowTag{e + 1, b + 1, j};
                ++row;
            }
        }
    }
    return cs;
}

namespace serial {

ConstraintSystem build_constraints(const EvolutionHistory& h, double lambda, double alpha_ibcb, ConstraintMode mode,
                                   double epsilon_margin) {
    check_inputs(h, lambda, alpha_ibcb, epsilon_margin);
    ConstraintSystem cs = empty_system(h, alpha_ibcb, mode, epsilon_margin);
    const int d = h.meta.dim;
    Mat phi = Mat::Zero(d, d);
    Eigen::Index row = 0;
    for (int e = 0; e < h.meta.n_episodes; ++e) {
        const auto& ep = h.episodes[static_cast<std::size_t>(e)];
        if (e > 0) {
            Mat psi = phi;
            psi.diagonal().array() += lambda;
            const Mat psi_inv = Cholesky(psi).inverse();
            for (int b = 0; b < h.meta.batch; ++b) {
                const StepRecord& st = ep[static_cast<std::size_t>(b)];
                const Vec chosen = st.candidates.row(st.chosen).transpose();
                for (int j = 0; j < h.meta.n_candidates; ++j) {
                    if (j == st.chosen) continue;
                    const Vec alt = st.candidates.row(j).transpose();
                    cs.a.row(row) = (phi * (psi_inv * (alt - chosen))).transpose();
                    if (mode == ConstraintMode::Ucb) {
                        const double hc = std::sqrt(std::max(0.0, chosen.dot(psi_inv * chosen)));
                        const double hj = std::sqrt(std::max(0.0, alt.dot(psi_inv * alt)));
                        cs.u(row) = alpha_ibcb * (hc - hj);
                    } else {
                        cs.u(row) = -epsilon_margin;
                    }
                    cs.provenance[static_cast<std::size_t>(row)] = RowTag{e + 1, b + 1, j};
                    ++row;
                }
            }
        }
        for (const auto& st : ep) {
            const Vec s = st.candidates.row(st.chosen).transpose();
            phi += s * s.transpose();
        }
    }
    return cs;
}

}  // namespace serial

QpSolution estimate(const ConstraintSystem& cs, const QpSettings& settings) {
    if (cs.a.cols() != cs.dim || cs.u.size() != cs.a.rows()) throw DimensionError("estimate: malformed system");
    QpSolution sol = solve_minnorm(cs.rows(), cs.bounds(), settings);
    if (sol.status == QpStatus::Failed) {
        throw Error(fmt::format("estimate: solver failed after {} iterations (max violation {:.3g}, primal residual "
                                "{:.3g}, dual residual {:.3g})",
                                sol.iterations, sol.max_violation, sol.primal_residual, sol.dual_residual));
    }
    return sol;
}

void write_constraints(const ConstraintSystem& cs, std::ostream& out) {
    out << "{\"format\":\"ibcb-constraints\",\"version\":1,\"d\":" << cs.dim << ",\"rows\":" << cs.n_rows()
        << ",\"mode\":\"" << to_string(cs.mode) << "\",\"alpha\":" << format_double(cs.alpha_ibcb)
        << ",\"epsilon\":" << format_double(cs.epsilon_margin) << "}\n";
    std::string line;
    for (Eigen::Index i = 0; i < cs.n_rows(); ++i) {
        line = "{\"a\":[";
        for (Eigen::Index k = 0; k < cs.a.cols(); ++k) {
            if (k) line += ',';
            line += format_double(cs.a(i, k));
        }
        const RowTag& tag = cs.provenance[static_cast<std::size_t>(i)];
        line += fmt::format("],\"u\":{},\"episode\":{},\"step\":{},\"alt\":{}}}\n", format_double(cs.u(i)),
                            tag.episode, tag.step, tag.alt);
        out << line;
    }
    if (!out) throw Error("failed writing constraint dump");
}

void write_constraints(const ConstraintSystem& cs, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    write_constraints(cs, out);
}

ConstraintSystem read_constraints(std::istream& in) {
    using nlohmann::json;
    ConstraintSystem cs;
    std::string line;
    int line_no = 0;
    Eigen::Index expected = -1;
    Eigen::Index row = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(std::string("malformed JSON: ") + e.what(), line_no);
        }
        try {
            if (expected < 0) {
                if (obj.at("format").get<std::string>() != "ibcb-constraints") {
                    throw ParseError("not an ibcb-constraints file", line_no);
                }
                cs.dim = obj.at("d").get<int>();
                expected = obj.at("rows").get<Eigen::Index>();
                cs.mode = constraint_mode_from_string(obj.at("mode").get<std::string>());
                cs.alpha_ibcb = obj.at("alpha").get<double>();
                cs.epsilon_margin = obj.at("epsilon").get<double>();
                cs.a.resize(expected, cs.dim);
                cs.u.resize(expected);
                cs.provenance.resize(static_cast<std::size_t>(expected));
                continue;
            }
            if (row >= expected) throw ParseError("more rows than the header declares", line_no);
            const auto& coeffs = obj.at("a");
            if (static_cast<int>(coeffs.size()) != cs.dim) throw ParseError("row length does not match d", line_no);
            for (int k = 0; k < cs.dim; ++k) cs.a(row, k) = coeffs[static_cast<std::size_t>(k)].get<double>();
            cs.u(row) = obj.at("u").get<double>();
            cs.provenance[static_cast<std::size_t>(row)] =
                RowTag{obj.value("episode", 0), obj.value("step", 0), obj.value("alt", 0)};
            ++row;
        } catch (const json::exception& e) {
            throw ParseError(e.what(), line_no);
        }
    }
    if (expected < 0) throw ParseError("empty constraint file");
    if (row != expected) throw ParseError("constraint file has " + std::to_string(row) + " rows, header declares " +
                                          std::to_string(expected));
    return cs;
}

ConstraintSystem read_constraints(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path.string() + "'");
    return read_constraints(in);
}

}  // namespace ibcb
