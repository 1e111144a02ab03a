#include "tabaudit/search_space.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

#include "tabaudit/error.hpp"

namespace tabaudit {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

enum PriorParam : std::size_t {
    kMaxClasses,
    kPCategorical,
    kPOrdered,
    kBalanced,
    kReplaySmall,
    kScmType,
    kTreeFamily,
    kDepthRate,
    kEstimatorsRate,
    kPMlp,
    kPriorParamCount
};

std::string fmt(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

} // namespace

SearchSpace::SearchSpace(std::vector<ParamSpec> params) : params_(std::move(params)) {
    for (std::size_t i = 0; i < params_.size(); ++i) {
        const auto& p = params_[i];
        if (p.is_discrete_choice() && p.choices.empty()) {
            throw DomainError("search space: '" + p.name + "' has no choices");
        }
        if (!p.is_discrete_choice() && !(p.lo <= p.hi)) {
            throw DomainError("search space: '" + p.name + "' has lo > hi");
        }
        if (p.condition) {
            if (p.condition->param >= i || !params_[p.condition->param].is_discrete_choice()) {
                throw DomainError("search space: '" + p.name + "' must depend on an earlier choice parameter");
            }
        }
    }
}

ParamSpec SearchSpace::continuous(std::string name, double lo, double hi) {
    ParamSpec p;
    p.name = std::move(name);
    p.kind = ParamKind::Continuous;
    p.lo = lo;
    p.hi = hi;
    return p;
}

ParamSpec SearchSpace::integer(std::string name, int lo, int hi) {
    ParamSpec p = continuous(std::move(name), lo, hi);
    p.kind = ParamKind::Integer;
    return p;
}

ParamSpec SearchSpace::binary(std::string name) {
    ParamSpec p;
    p.name = std::move(name);
    p.kind = ParamKind::Binary;
    p.choices = {"0", "1"};
    p.lo = 0;
    p.hi = 1;
    return p;
}

ParamSpec SearchSpace::categorical(std::string name, std::vector<std::string> choices) {
    ParamSpec p;
    p.name = std::move(name);
    p.kind = ParamKind::Categorical;
    p.lo = 0;
    p.hi = static_cast<double>(choices.size()) - 1;
    p.choices = std::move(choices);
    return p;
}

std::optional<std::size_t> SearchSpace::find(const std::string& name) const {
    for (std::size_t i = 0; i < params_.size(); ++i) {
        if (params_[i].name == name) {
            return i;
        }
    }
    return std::nullopt;
}

bool SearchSpace::is_active(const ParamPoint& point, std::size_t i) const {
    const auto& cond = params_.at(i).condition;
    if (!cond) {
        return true;
    }
    if (!is_active(point, cond->param)) {
        return false;
    }
    const double v = point.at(cond->param);
    if (std::isnan(v)) {
        return false;
    }
    const auto choice = static_cast<std::size_t>(v);
    return std::find(cond->choices.begin(), cond->choices.end(), choice) != cond->choices.end();
}

double SearchSpace::sample_param(std::size_t i, std::mt19937_64& rng) const {
    const auto& p = params_.at(i);
    switch (p.kind) {
    case ParamKind::Continuous: return std::uniform_real_distribution<double>(p.lo, p.hi)(rng);
    case ParamKind::Integer:
        return static_cast<double>(std::uniform_int_distribution<long long>(std::llround(p.lo), std::llround(p.hi))(rng));
    case ParamKind::Binary:
    case ParamKind::Categorical:
        return static_cast<double>(std::uniform_int_distribution<std::size_t>(0, p.choices.size() - 1)(rng));
    }
    return kNaN;
}

ParamPoint SearchSpace::sample_uniform(std::mt19937_64& rng) const {
    ParamPoint point(params_.size(), kNaN);
    for (std::size_t i = 0; i < params_.size(); ++i) {
        if (is_active(point, i)) {
            point[i] = sample_param(i, rng);
        }
    }
    return point;
}

void SearchSpace::repair(ParamPoint& point, std::mt19937_64& rng) const {
    point.resize(params_.size(), kNaN);
    for (std::size_t i = 0; i < params_.size(); ++i) {
        if (!is_active(point, i)) {
            point[i] = kNaN;
            continue;
        }
        if (std::isnan(point[i])) {
            point[i] = sample_param(i, rng);
            continue;
        }
        const auto& p = params_[i];
        if (p.is_discrete_choice()) {
            point[i] = std::clamp(std::round(point[i]), 0.0, static_cast<double>(p.choices.size() - 1));
        } else if (p.kind == ParamKind::Integer) {
            point[i] = std::clamp(std::round(point[i]), p.lo, p.hi);
        } else {
            point[i] = std::clamp(point[i], p.lo, p.hi);
        }
    }
}

void SearchSpace::validate(const ParamPoint& point) const {
    if (point.size() != params_.size()) {
        throw DomainError("search point has wrong dimension");
    }
    for (std::size_t i = 0; i < params_.size(); ++i) {
        const auto& p = params_[i];
        const double v = point[i];
        if (!is_active(point, i)) {
            if (!std::isnan(v)) {
                throw DomainError("search point sets inactive parameter '" + p.name + "'");
            }
            continue;
        }
        if (std::isnan(v) || v < p.lo || v > p.hi) {
            throw DomainError("search point: '" + p.name + "' out of range");
        }
        if ((p.kind != ParamKind::Continuous) && v != std::round(v)) {
            throw DomainError("search point: '" + p.name + "' must be integral");
        }
    }
}

std::string SearchSpace::format_value(std::size_t i, double v) const {
    if (std::isnan(v)) {
        return "";
    }
    const auto& p = params_.at(i);
    if (p.is_discrete_choice()) {
        return p.choices.at(static_cast<std::size_t>(v));
    }
    if (p.kind == ParamKind::Integer) {
        return std::to_string(std::llround(v));
    }
    return fmt(v);
}

double SearchSpace::parse_value(std::size_t i, const std::string& text) const {
    if (text.empty()) {
        return kNaN;
    }
    const auto& p = params_.at(i);
    if (p.is_discrete_choice()) {
        const auto it = std::find(p.choices.begin(), p.choices.end(), text);
        if (it == p.choices.end()) {
            throw InputError("unknown choice '" + text + "' for '" + p.name + "'");
        }
        return static_cast<double>(it - p.choices.begin());
    }
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw InputError("bad value '" + text + "' for '" + p.name + "'");
    }
    return v;
}

SearchSpace prior_search_space() {
    std::vector<ParamSpec> ps(kPriorParamCount);
    ps[kMaxClasses] = SearchSpace::integer("max_classes", 2, 20);
    ps[kPCategorical] = SearchSpace::continuous("p_categorical", 0.0, 0.6);
    ps[kPOrdered] = SearchSpace::continuous("p_ordered", 0.0, 1.0);
    ps[kBalanced] = SearchSpace::binary("balanced");
    ps[kReplaySmall] = SearchSpace::binary("replay_small");
    ps[kScmType] = SearchSpace::categorical("scm_type", {"mlp", "tree", "mix"});
    ps[kTreeFamily] = SearchSpace::categorical("tree_family", {"dt", "et", "rf", "xgb"});
    ps[kDepthRate] = SearchSpace::continuous("depth_rate", 0.3, 1.0);
    ps[kEstimatorsRate] = SearchSpace::continuous("estimators_rate", 0.3, 1.0);
    ps[kPMlp] = SearchSpace::continuous("p_mlp", 0.0, 1.0);
    const ParamSpec::Condition tree_or_mix{kScmType, {1, 2}};
    ps[kTreeFamily].condition = tree_or_mix;
    ps[kDepthRate].condition = tree_or_mix;
    ps[kEstimatorsRate].condition = tree_or_mix;
    ps[kPMlp].condition = ParamSpec::Condition{kScmType, {2}};
    return SearchSpace(std::move(ps));
}

PriorConfig to_prior_config(const ParamPoint& point, const PriorConfig& base) {
    if (point.size() != kPriorParamCount) {
        throw DomainError("to_prior_config: point does not belong to the prior space");
    }
    PriorConfig c = base;
    c.max_classes = static_cast<int>(std::llround(point[kMaxClasses]));
    c.p_categorical = point[kPCategorical];
    c.p_ordered = point[kPOrdered];
    c.balanced = point[kBalanced] != 0.0;
    c.replay_small = point[kReplaySmall] != 0.0;
    c.scm_type = static_cast<ScmType>(static_cast<int>(point[kScmType]));
    if (c.tree_active()) {
        c.tree_family = static_cast<TreeFamily>(static_cast<int>(point[kTreeFamily]));
        c.depth_rate = point[kDepthRate];
        c.estimators_rate = point[kEstimatorsRate];
    }
    if (c.mix_active()) {
        c.p_mlp = point[kPMlp];
    }
    c.validate();
    return c;
}

ParamPoint from_prior_config(const PriorConfig& c) {
    ParamPoint p(kPriorParamCount, kNaN);
    p[kMaxClasses] = c.max_classes;
    p[kPCategorical] = c.p_categorical;
    p[kPOrdered] = c.p_ordered;
    p[kBalanced] = c.balanced ? 1.0 : 0.0;
    p[kReplaySmall] = c.replay_small ? 1.0 : 0.0;
    p[kScmType] = static_cast<double>(static_cast<int>(c.scm_type));
    if (c.tree_active()) {
        p[kTreeFamily] = static_cast<double>(static_cast<int>(c.tree_family));
        p[kDepthRate] = c.depth_rate;
        p[kEstimatorsRate] = c.estimators_rate;
    }
    if (c.mix_active()) {
        p[kPMlp] = c.p_mlp;
    }
    return p;
}

std::vector<double> grid_values(const ParamSpec& spec, std::size_t g) {
    if (g == 0) {
        throw DomainError("grid resolution must be >= 1");
    }
    std::vector<double> out;
    if (spec.is_discrete_choice()) {
        for (std::size_t k = 0; k < spec.choices.size(); ++k) {
            out.push_back(static_cast<double>(k));
        }
        return out;
    }
    for (std::size_t k = 0; k < g; ++k) {
        double v = g == 1 ? 0.5 * (spec.lo + spec.hi)
                          : spec.lo + (spec.hi - spec.lo) * static_cast<double>(k) / static_cast<double>(g - 1);
        if (spec.kind == ParamKind::Integer) {
            v = std::round(v);
        }
        if (out.empty() || v != out.back()) {
            out.push_back(v);
        }
    }
    return out;
}

std::vector<ParamPoint> grid_enumerate(const SearchSpace& space, std::size_t g,
                                       const std::map<std::string, std::size_t>& resolution) {
    for (const auto& [name, r] : resolution) {
        if (!space.find(name)) {
            throw DomainError("grid resolution given for unknown parameter '" + name + "'");
        }
        if (r == 0) {
            throw DomainError("grid resolution must be >= 1");
        }
    }
    std::vector<std::vector<double>> values(space.size());
    for (std::size_t i = 0; i < space.size(); ++i) {
        const auto it = resolution.find(space[i].name);
        values[i] = grid_values(space[i], it == resolution.end() ? g : it->second);
    }
    std::vector<ParamPoint> out;
    ParamPoint current(space.size(), kNaN);
    auto recurse = [&](auto&& self, std::size_t i) -> void {
        if (i == space.size()) {
            out.push_back(current);
            return;
        }
        if (!space.is_active(current, i)) {
            current[i] = kNaN;
            self(self, i + 1);
            return;
        }
        for (double v : values[i]) {
            current[i] = v;
            self(self, i + 1);
        }
        current[i] = kNaN;
    };
    recurse(recurse, 0);
    return out;
}

std::size_t prior_grid_count(std::size_t g) {
    const std::size_t shared = 4 * g * g * g;
    const std::size_t tree = 4 * g * g;
    return shared * (1 + tree + tree * g);
}

} // namespace tabaudit
