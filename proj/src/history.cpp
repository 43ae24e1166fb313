#include "ibcb/history.hpp"

#include "ibcb/error.hpp"

#include <json.hpp>

#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <sstream>

namespace ibcb {

using nlohmann::json;

void EvolutionHistory::validate() const {
    const auto& m = meta;
    if (m.dim < 1 || m.n_candidates < 1 || m.batch < 1) throw DimensionError("history meta has non-positive sizes");
    if (static_cast<int>(episodes.size()) != m.n_episodes) {
        throw DimensionError("history has " + std::to_string(episodes.size()) + " episodes, meta says " +
                             std::to_string(m.n_episodes));
    }
    std::optional<bool> rewarded;
    for (std::size_t e = 0; e < episodes.size(); ++e) {
        const auto& ep = episodes[e];
        if (static_cast<int>(ep.size()) != m.batch) {
            throw DimensionError("episode " + std::to_string(e + 1) + " has " + std::to_string(ep.size()) +
                                 " steps, expected " + std::to_string(m.batch));
        }
        for (std::size_t b = 0; b < ep.size(); ++b) {
            const auto& st = ep[b];
            if (st.candidates.rows() != m.n_candidates || st.candidates.cols() != m.dim) {
                throw DimensionError("episode " + std::to_string(e + 1) + " step " + std::to_string(b + 1) +
                                     ": candidates are " + std::to_string(st.candidates.rows()) + "x" +
                                     std::to_string(st.candidates.cols()) + ", expected " +
                                     std::to_string(m.n_candidates) + "x" + std::to_string(m.dim));
            }
            if (st.chosen < 0 || st.chosen >= m.n_candidates) {
                throw DimensionError("episode " + std::to_string(e + 1) + " step " + std::to_string(b + 1) +
                                     ": chosen index out of range");
            }
            if (!rewarded) rewarded = st.reward.has_value();
            if (*rewarded != st.reward.has_value()) throw Error("history mixes rewarded and reward-free steps");
        }
    }
}

bool EvolutionHistory::has_rewards() const {
    return !episodes.empty() && !episodes.front().empty() && episodes.front().front().reward.has_value();
}

Vec EvolutionHistory::chosen_context(int episode, int step) const {
    const auto& st = episodes.at(static_cast<std::size_t>(episode)).at(static_cast<std::size_t>(step));
    return st.candidates.row(st.chosen).transpose();
}

std::string format_double(double v) {
    if (!std::isfinite(v)) throw Error("cannot serialize non-finite value");
    return fmt::format("{:.17g}", v);
}

namespace {

void write_meta(const HistoryMeta& m, std::ostream& out) {
    out << "{\"format\":\"ibcb-history\",\"version\":1"
        << ",\"d\":" << m.dim << ",\"M\":" << m.n_candidates << ",\"N\":" << m.n_episodes << ",\"B\":" << m.batch
        << ",\"expert_mode\":\"" << to_string(m.expert_mode) << "\""
        << ",\"expert_alpha\":" << format_double(m.expert_alpha)
        << ",\"expert_lambda\":" << format_double(m.expert_lambda) << ",\"env_digest\":" << json(m.env_digest).dump()
        << "}\n";
}

void write_episode(const std::vector<StepRecord>& ep, int number, std::ostream& out) {
    std::string line;
    line.reserve(ep.size() * 64);
    line += fmt::format("{{\"episode\":{},\"steps\":[", number);
    for (std::size_t b = 0; b < ep.size(); ++b) {
        const auto& st = ep[b];
        if (b) line += ',';
        line += "{\"candidates\":[";
        for (Eigen::Index r = 0; r < st.candidates.rows(); ++r) {
            if (r) line += ',';
            line += '[';
            for (Eigen::Index c = 0; c < st.candidates.cols(); ++c) {
                if (c) line += ',';
                line += format_double(st.candidates(r, c));
            }
            line += ']';
        }
        line += fmt::format("],\"chosen\":{}", st.chosen);
        if (st.reward) line += ",\"reward\":" + format_double(*st.reward);
        line += '}';
    }
    line += "]}\n";
    out << line;
}

template <typename T>
T field(const json& obj, const char* key, int line) {
    auto it = obj.find(key);
    if (it == obj.end()) throw ParseError(std::string("missing field '") + key + "'", line);
    try {
        return it->get<T>();
    } catch (const json::exception& e) {
        throw ParseError(std::string("field '") + key + "': " + e.what(), line);
    }
}

}  // namespace

void write_history(const EvolutionHistory& h, std::ostream& out) {
    h.validate();
    write_meta(h.meta, out);
    for (std::size_t e = 0; e < h.episodes.size(); ++e) write_episode(h.episodes[e], static_cast<int>(e + 1), out);
    if (!out) throw Error("failed writing history");
}

void write_history(const EvolutionHistory& h, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    write_history(h, out);
}

EvolutionHistory read_history(std::istream& in) {
    EvolutionHistory h;
    std::string line;
    int line_no = 0;
    bool have_meta = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(std::string("malformed JSON: ") + e.what(), line_no);
        }
        if (!obj.is_object()) throw ParseError("expected a JSON object", line_no);
        if (!have_meta) {
            auto& m = h.meta;
            if (field<std::string>(obj, "format", line_no) != "ibcb-history") {
                throw ParseError("not an ibcb-history file", line_no);
            }
            m.dim = field<int>(obj, "d", line_no);
            m.n_candidates = field<int>(obj, "M", line_no);
            m.n_episodes = field<int>(obj, "N", line_no);
            m.batch = field<int>(obj, "B", line_no);
            try {
                m.expert_mode = selection_mode_from_string(field<std::string>(obj, "expert_mode", line_no));
            } catch (const ParseError&) {
                throw;
            } catch (const Error& e) {
                throw ParseError(e.what(), line_no);
            }
            m.expert_alpha = field<double>(obj, "expert_alpha", line_no);
            m.expert_lambda = field<double>(obj, "expert_lambda", line_no);
            m.env_digest = obj.value("env_digest", std::string());
            have_meta = true;
            continue;
        }
        const int number = field<int>(obj, "episode", line_no);
        if (number != static_cast<int>(h.episodes.size()) + 1) {
            throw ParseError("episode " + std::to_string(number) + " out of order", line_no);
        }
        const auto steps_it = obj.find("steps");
        if (steps_it == obj.end() || !steps_it->is_array()) throw ParseError("missing 'steps' array", line_no);
        std::vector<StepRecord> ep;
        ep.reserve(steps_it->size());
        for (const auto& st : *steps_it) {
            StepRecord rec;
            const auto cands = st.find("candidates");
            if (cands == st.end() || !cands->is_array()) throw ParseError("step without candidates", line_no);
            const auto rows = static_cast<Eigen::Index>(cands->size());
            const Eigen::Index cols = rows ? static_cast<Eigen::Index>((*cands)[0].size()) : 0;
            if (rows != h.meta.n_candidates) {
                throw ParseError("step has " + std::to_string(rows) + " candidates, meta says M=" +
                                     std::to_string(h.meta.n_candidates),
                                 line_no);
            }
            rec.candidates.resize(rows, cols);
            for (Eigen::Index r = 0; r < rows; ++r) {
                const auto& row = (*cands)[static_cast<std::size_t>(r)];
                if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != h.meta.dim) {
                    throw ParseError("candidate has " + std::to_string(row.size()) +
                                         " coordinates, meta says d=" + std::to_string(h.meta.dim),
                                     line_no);
                }
                for (Eigen::Index c = 0; c < cols; ++c) {
                    const auto& v = row[static_cast<std::size_t>(c)];
                    if (!v.is_number()) throw ParseError("non-numeric candidate coordinate", line_no);
                    rec.candidates(r, c) = v.get<double>();
                }
            }
            rec.chosen = field<int>(st, "chosen", line_no);
            if (auto rw = st.find("reward"); rw != st.end()) {
                if (!rw->is_number()) throw ParseError("non-numeric reward", line_no);
                rec.reward = rw->get<double>();
            }
            ep.push_back(std::move(rec));
        }
        if (static_cast<int>(ep.size()) != h.meta.batch) {
            throw ParseError("episode " + std::to_string(number) + " has " + std::to_string(ep.size()) +
                                 " steps, meta says B=" + std::to_string(h.meta.batch),
                             line_no);
        }
        h.episodes.push_back(std::move(ep));
    }
    if (!have_meta) throw ParseError("empty history file");
    h.validate();
    return h;
}

EvolutionHistory read_history(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path.string() + "'");
    return read_history(in);
}

EvolutionHistory strip_rewards(const EvolutionHistory& h) {
    EvolutionHistory out = h;
    for (auto& ep : out.episodes) {
        for (auto& st : ep) st.reward.reset();
    }
    return out;
}

EvolutionHistory truncate(const EvolutionHistory& h, double ce_rate) {
    if (!(ce_rate > 0.0 && ce_rate <= 1.0)) throw Error("truncate: ce_rate must be in (0, 1]");
    const int keep = static_cast<int>(std::floor(ce_rate * h.meta.n_episodes + 1e-9));
    if (keep < 1) {
        throw Error("truncate: ce_rate " + format_double(ce_rate) + " keeps zero of " +
                    std::to_string(h.meta.n_episodes) + " episodes");
    }
    EvolutionHistory out;
    out.meta = h.meta;
    out.meta.n_episodes = std::min(keep, h.meta.n_episodes);
    out.episodes.assign(h.episodes.begin(), h.episodes.begin() + out.meta.n_episodes);
    return out;
}

}  // namespace ibcb
