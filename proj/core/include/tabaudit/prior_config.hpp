#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace tabaudit {

enum class ScmType { Mlp, Tree, Mix };
enum class TreeFamily { DecisionTree, ExtraTrees, RandomForest, GradientBoosted };

std::string_view to_string(ScmType t) noexcept;
std::string_view to_string(TreeFamily f) noexcept;
std::optional<ScmType> parse_scm_type(std::string_view s) noexcept;
std::optional<TreeFamily> parse_tree_family(std::string_view s) noexcept;

/// Parameters of the synthetic-table prior.
///
/// tree_family, depth_rate and estimators_rate only matter for tree and mix
/// priors; p_mlp only for mix. Inactive fields are ignored by equality and
/// omitted when serialised.
struct PriorConfig {
    int max_classes = 10;
    double p_categorical = 0.3;
    double p_ordered = 0.5;
    bool balanced = false;
    bool replay_small = false;
    ScmType scm_type = ScmType::Mlp;
    TreeFamily tree_family = TreeFamily::GradientBoosted;
    double depth_rate = 0.65;
    double estimators_rate = 0.65;
    double p_mlp = 0.5;
    std::size_t min_cols = 2;
    std::size_t max_cols = 1000;

    [[nodiscard]] bool tree_active() const noexcept { return scm_type != ScmType::Mlp; }
    [[nodiscard]] bool mix_active() const noexcept { return scm_type == ScmType::Mix; }

    /// Throws DomainError on any out-of-range field.
    void validate() const;

    /// One `key=value` per line, active fields only.
    [[nodiscard]] std::string to_text() const;
    static PriorConfig from_text(std::string_view text);

    friend bool operator==(const PriorConfig& a, const PriorConfig& b) noexcept;
};

PriorConfig load_prior_config(const std::string& path);
void save_prior_config(const PriorConfig& config, const std::string& path);

} // namespace tabaudit
