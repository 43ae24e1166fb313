#include "ibcb/types.hpp"

#include "ibcb/error.hpp"

#include <string>

namespace ibcb {

void CandidateSet::validate() const {
    if (contexts.rows() < 2) throw Error("candidate set needs at least two candidates");
    if (contexts.cols() < 1) throw DimensionError("candidate contexts must have positive dimension");
}

PhaseData::PhaseData(Phase phase, int episodes, int batch, int candidates, int dim)
    : phase_(phase), episodes_(episodes), batch_(batch), candidates_(candidates), dim_(dim) {
    if (episodes < 1 || batch < 1 || candidates < 1 || dim < 1) {
        throw DimensionError("phase data dimensions must be positive");
    }
    values_.assign(static_cast<std::size_t>(episodes) * batch * candidates * dim, 0.0);
}

std::size_t PhaseData::offset(int episode, int b) const {
    if (episode < 0 || episode >= episodes_ || b < 0 || b >= batch_) {
        throw DimensionError("phase data index out of range");
    }
    return (static_cast<std::size_t>(episode) * batch_ + b) * candidates_ * dim_;
}

RowsView PhaseData::step(int episode, int b) const {
    return RowsView(values_.data() + offset(episode, b), candidates_, dim_);
}

double* PhaseData::step_data(int episode, int b) { return values_.data() + offset(episode, b); }

CandidateSet PhaseData::candidate_set(int episode, int b) const {
    return CandidateSet{RowMat(step(episode, b)), episode, b};
}

RowsView PhaseData::episode_rows(int episode) const {
    return RowsView(values_.data() + offset(episode, 0), static_cast<Eigen::Index>(batch_) * candidates_, dim_);
}

std::string_view to_string(SelectionMode mode) {
    switch (mode) {
        case SelectionMode::UcbDeterministic: return "ucb";
        case SelectionMode::ThompsonFullVector: return "ts";
        case SelectionMode::ThompsonReparam: return "ts-reparam";
    }
    return "ucb";
}

SelectionMode selection_mode_from_string(std::string_view name) {
    if (name == "ucb" || name == "sbucb") return SelectionMode::UcbDeterministic;
    if (name == "ts" || name == "sbts") return SelectionMode::ThompsonFullVector;
    if (name == "ts-reparam") return SelectionMode::ThompsonReparam;
    throw Error("unknown selection mode '" + std::string(name) + "' (expected ucb, ts or ts-reparam)");
}

bool is_thompson(SelectionMode mode) { return mode != SelectionMode::UcbDeterministic; }

}  // namespace ibcb
