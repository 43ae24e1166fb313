#pragma once

// Behavioral evolution history: candidate sets and chosen indices per
// episode, optionally with the observed rewards (the privileged view used by
// the forward simulator and evaluators only).
//
// On disk the log is line-delimited JSON. Line 1 is the metadata object, each
// following line is one episode:
//
//   {"format":"ibcb-history","version":1,"d":10,"M":10,"N":20,"B":1000,
//    "expert_mode":"ucb","expert_alpha":0.4,"expert_lambda":1,"env_digest":"..."}
//   {"episode":1,"steps":[{"candidates":[[...],...],"chosen":9,"reward":0.0691...},...]}
//
// Episode numbers in the file are 1-based. Floating point values are written
// with 17 significant digits so a round trip is lossless.

#include "ibcb/linalg.hpp"
#include "ibcb/types.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace ibcb {

struct StepRecord {
    RowMat candidates;
    int chosen = 0;
    std::optional<double> reward;

    bool operator==(const StepRecord&) const = default;
};

struct HistoryMeta {
    int dim = 0;
    int n_candidates = 0;
    int n_episodes = 0;
    int batch = 0;
    SelectionMode expert_mode = SelectionMode::UcbDeterministic;
    double expert_alpha = 0.0;
    double expert_lambda = 1.0;
    std::string env_digest;

    bool operator==(const HistoryMeta&) const = default;
};

struct EvolutionHistory {
    HistoryMeta meta;
    std::vector<std::vector<StepRecord>> episodes;

    /// Rectangularity, index ranges and meta/payload agreement.
    void validate() const;
    /// True when every step carries a reward, false when none does.
    bool has_rewards() const;
    /// Chosen context of one step.
    Vec chosen_context(int episode, int step) const;

    bool operator==(const EvolutionHistory&) const = default;
};

void write_history(const EvolutionHistory& h, std::ostream& out);
void write_history(const EvolutionHistory& h, const std::filesystem::path& path);
EvolutionHistory read_history(std::istream& in);
EvolutionHistory read_history(const std::filesystem::path& path);

/// The reward-free view handed to inverse learners.
EvolutionHistory strip_rewards(const EvolutionHistory& h);

/// Keeps the first ⌊ce_rate·N⌋ episodes.
EvolutionHistory truncate(const EvolutionHistory& h, double ce_rate);

/// Formats a double with 17 significant digits.
std::string format_double(double v);

}  // namespace ibcb
