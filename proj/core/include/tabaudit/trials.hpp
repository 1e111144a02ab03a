#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "tabaudit/search_space.hpp"

namespace tabaudit {

inline constexpr double kNotMeasured = std::numeric_limits<double>::quiet_NaN();

/// What one objective evaluation measured. `value` is minimised.
struct Evaluation {
    double value = 0.0;
    double auc = kNotMeasured;
    double recall = kNotMeasured;
    double precision = kNotMeasured;
    std::size_t n_eval = 0;
};

struct TrialContext {
    std::size_t index = 0;   ///< position in the run's trial sequence
    std::uint64_t seed = 0;  ///< derive_seed(master, index)
};

struct Objective {
    std::string name = "objective";
    std::function<Evaluation(const ParamPoint&, const TrialContext&)> evaluate;
    /// Value recorded when `evaluate` throws.
    double worst = std::numeric_limits<double>::infinity();
};

struct TrialRecord {
    std::size_t index = 0;
    std::size_t group = 0; ///< restart or generation number; 0 when unused
    ParamPoint point;
    std::string objective;
    Evaluation eval;
    std::uint64_t seed = 0;
    bool failed = false;
    std::string error;
    double wall_seconds = 0.0; ///< kept out of the trial CSV

    [[nodiscard]] double value() const noexcept { return eval.value; }
};

/// Runs the objective, timing it and turning exceptions into failed records.
TrialRecord run_trial(const Objective& objective, const ParamPoint& point, const TrialContext& ctx,
                      std::size_t group = 0);

using TrialObserver = std::function<void(const TrialRecord&)>;

/// Index of the record with the lowest value (ties: lowest index).
std::size_t best_trial(const std::vector<TrialRecord>& trials);

/// Trial table header: trial,group,<param names>,objective,value,auc,recall,
/// precision,n_eval,seed,status,error
std::string trials_csv_header(const SearchSpace& space);
std::string trial_csv_row(const SearchSpace& space, const TrialRecord& record);
std::string trials_to_csv(const SearchSpace& space, const std::vector<TrialRecord>& trials);
std::vector<TrialRecord> trials_from_csv(const SearchSpace& space, const std::string& text);

/// trial,wall_seconds
std::string timings_to_csv(const std::vector<TrialRecord>& trials);

/// Append-only CSV journal. Opening an existing file checks its header and
/// loads the records already written, so a search can resume.
class TrialJournal {
public:
    TrialJournal(std::filesystem::path path, SearchSpace space, bool resume);

    [[nodiscard]] const std::vector<TrialRecord>& existing() const noexcept { return existing_; }
    void append(const TrialRecord& record);
    [[nodiscard]] const std::filesystem::path& path() const noexcept { return path_; }

private:
    std::filesystem::path path_;
    SearchSpace space_;
    std::vector<TrialRecord> existing_;
};

/// Wraps an objective so that trials already present in `journal` (matched by
/// index and point) are replayed instead of re-evaluated.
Objective replaying(Objective inner, std::vector<TrialRecord> journal);

} // namespace tabaudit
