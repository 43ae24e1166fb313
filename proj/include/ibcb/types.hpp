#pragma once

#include "ibcb/linalg.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace ibcb {

enum class Phase { OnlineLearning, BatchTest };

/// The M candidate contexts offered at one step, one context per row.
struct CandidateSet {
    RowMat contexts;
    int episode = 0;
    int step = 0;

    int size() const noexcept { return static_cast<int>(contexts.rows()); }
    int dim() const noexcept { return static_cast<int>(contexts.cols()); }
    RowsView view() const { return RowsView(contexts.data(), contexts.rows(), contexts.cols()); }

    /// Throws unless there are at least two candidates of equal, positive length.
    void validate() const;
};

/// Rectangular block of candidate sets: episodes × steps × candidates × dim,
/// stored contiguously. Episodes and steps are 0-based in memory.
class PhaseData {
public:
    PhaseData() = default;
    PhaseData(Phase phase, int episodes, int batch, int candidates, int dim);

    Phase phase() const noexcept { return phase_; }
    int episodes() const noexcept { return episodes_; }
    int batch() const noexcept { return batch_; }
    int candidates() const noexcept { return candidates_; }
    int dim() const noexcept { return dim_; }

    RowsView step(int episode, int b) const;
    double* step_data(int episode, int b);
    CandidateSet candidate_set(int episode, int b) const;
    /// Every candidate of one episode, batch*candidates rows.
    RowsView episode_rows(int episode) const;

    const std::vector<double>& values() const noexcept { return values_; }

private:
    std::size_t offset(int episode, int b) const;

    Phase phase_ = Phase::OnlineLearning;
    int episodes_ = 0;
    int batch_ = 0;
    int candidates_ = 0;
    int dim_ = 0;
    std::vector<double> values_;
};

enum class SelectionMode { UcbDeterministic, ThompsonFullVector, ThompsonReparam };

std::string_view to_string(SelectionMode mode);
SelectionMode selection_mode_from_string(std::string_view name);
/// True for both Thompson-sampling variants.
bool is_thompson(SelectionMode mode);

}  // namespace ibcb
