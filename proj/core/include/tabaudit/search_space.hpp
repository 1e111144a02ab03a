#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "tabaudit/prior_config.hpp"

namespace tabaudit {

enum class ParamKind { Continuous, Integer, Binary, Categorical };

/// One searchable parameter. Binary parameters are categorical with choices
/// {"0", "1"}. A parameter with a condition is active only while the earlier
/// categorical parameter `condition->param` holds one of `condition->choices`.
struct ParamSpec {
    struct Condition {
        std::size_t param = 0;
        std::vector<std::size_t> choices;
    };

    std::string name;
    ParamKind kind = ParamKind::Continuous;
    double lo = 0.0;
    double hi = 1.0;
    std::vector<std::string> choices;
    std::optional<Condition> condition;

    [[nodiscard]] bool is_discrete_choice() const noexcept {
        return kind == ParamKind::Binary || kind == ParamKind::Categorical;
    }
    [[nodiscard]] std::size_t n_choices() const noexcept { return choices.size(); }
};

/// A point in a search space: one value per parameter, NaN where inactive.
/// Binary and categorical values hold the choice index.
using ParamPoint = std::vector<double>;

class SearchSpace {
public:
    SearchSpace() = default;
    explicit SearchSpace(std::vector<ParamSpec> params);

    static ParamSpec continuous(std::string name, double lo, double hi);
    static ParamSpec integer(std::string name, int lo, int hi);
    static ParamSpec binary(std::string name);
    static ParamSpec categorical(std::string name, std::vector<std::string> choices);

    [[nodiscard]] const std::vector<ParamSpec>& params() const noexcept { return params_; }
    [[nodiscard]] std::size_t size() const noexcept { return params_.size(); }
    [[nodiscard]] const ParamSpec& operator[](std::size_t i) const { return params_.at(i); }
    [[nodiscard]] std::optional<std::size_t> find(const std::string& name) const;

    /// Whether parameter i is active given the earlier values of `point`.
    [[nodiscard]] bool is_active(const ParamPoint& point, std::size_t i) const;

    /// Uniform draw over the space, conditional parameters in order.
    ParamPoint sample_uniform(std::mt19937_64& rng) const;
    /// Draw for a single active parameter.
    double sample_param(std::size_t i, std::mt19937_64& rng) const;

    /// Clamp, round integers, set inactive to NaN and draw missing active values.
    void repair(ParamPoint& point, std::mt19937_64& rng) const;

    /// Throws DomainError when `point` breaks bounds or activity rules.
    void validate(const ParamPoint& point) const;

    /// Display text for one coordinate ("" when inactive).
    [[nodiscard]] std::string format_value(std::size_t i, double v) const;
    /// Inverse of format_value. Throws InputError.
    [[nodiscard]] double parse_value(std::size_t i, const std::string& text) const;

private:
    std::vector<ParamSpec> params_;
};

/// Parameter order used for the prior:
/// max_classes, p_categorical, p_ordered, balanced, replay_small, scm_type,
/// tree_family, depth_rate, estimators_rate, p_mlp.
SearchSpace prior_search_space();

/// Map a point of prior_search_space() onto a config; column bounds come from `base`.
PriorConfig to_prior_config(const ParamPoint& point, const PriorConfig& base = {});
ParamPoint from_prior_config(const PriorConfig& config);

/// Grid values of parameter `spec` at resolution g: G evenly spaced values
/// (the midpoint when g == 1); integers rounded and deduplicated; choices all.
std::vector<double> grid_values(const ParamSpec& spec, std::size_t g);

/// Lexicographic Cartesian product in parameter order; inactive parameters
/// contribute a single NaN. `resolution` overrides G per parameter name.
std::vector<ParamPoint> grid_enumerate(const SearchSpace& space, std::size_t g,
                                       const std::map<std::string, std::size_t>& resolution = {});

/// Closed-form grid size of prior_search_space() at uniform resolution g.
std::size_t prior_grid_count(std::size_t g);

} // namespace tabaudit
