#include "tabaudit/tpe.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tabaudit/error.hpp"
#include "tabaudit/parallel.hpp"

namespace tabaudit {

namespace {

constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

std::vector<std::size_t> ranked(const std::vector<TrialRecord>& history) {
    std::vector<std::size_t> idx(history.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return history[a].value() < history[b].value(); });
    return idx;
}

std::vector<double> active_values(const std::vector<TrialRecord>& history, const std::vector<std::size_t>& members,
                                  std::size_t param) {
    std::vector<double> out;
    for (auto m : members) {
        const double v = history[m].point.at(param);
        if (!std::isnan(v)) {
            out.push_back(v);
        }
    }
    return out;
}

} // namespace

void TpeParams::validate() const {
    if (n_startup == 0 || n_candidates == 0) {
        throw DomainError("tpe: n_startup and n_candidates must be positive");
    }
    if (!(good_fraction > 0.0 && good_fraction < 1.0)) {
        throw DomainError("tpe: good_fraction must lie in (0, 1)");
    }
    if (n_trials < n_startup) {
        throw DomainError("tpe: n_trials must be at least n_startup");
    }
}

ParzenDensity::ParzenDensity(const ParamSpec& spec, std::vector<double> observations) : spec_(&spec) {
    if (spec.is_discrete_choice()) {
        const std::size_t k = spec.choices.size();
        std::vector<double> counts(k, 1.0);
        for (double v : observations) {
            counts[static_cast<std::size_t>(v)] += 1.0;
        }
        const double total = static_cast<double>(observations.size() + k);
        choice_prob_.resize(k);
        for (std::size_t c = 0; c < k; ++c) {
            choice_prob_[c] = counts[c] / total;
        }
        return;
    }
    const double range = spec.hi - spec.lo;
    if (range <= 0.0) {
        return;
    }
    std::sort(observations.begin(), observations.end());
    const std::size_t n = observations.size();
    const double min_sigma = range / std::min(100.0, static_cast<double>(n + 1));
    mu_.reserve(n + 1);
    sigma_.reserve(n + 1);
    for (std::size_t i = 0; i < n; ++i) {
        const double left = observations[i] - (i == 0 ? spec.lo : observations[i - 1]);
        const double right = (i + 1 == n ? spec.hi : observations[i + 1]) - observations[i];
        mu_.push_back(observations[i]);
        sigma_.push_back(std::clamp(std::max(left, right), min_sigma, range));
    }
    mu_.push_back(0.5 * (spec.lo + spec.hi));
    sigma_.push_back(range);
    mass_.resize(mu_.size());
    for (std::size_t i = 0; i < mu_.size(); ++i) {
        mass_[i] = normal_cdf((spec.hi - mu_[i]) / sigma_[i]) - normal_cdf((spec.lo - mu_[i]) / sigma_[i]);
        mass_[i] = std::max(mass_[i], 1e-300);
    }
}

double ParzenDensity::log_density(double x) const {
    if (spec_->is_discrete_choice()) {
        return std::log(choice_prob_.at(static_cast<std::size_t>(x)));
    }
    if (mu_.empty()) {
        return 0.0;
    }
    double d = 0.0;
    for (std::size_t i = 0; i < mu_.size(); ++i) {
        const double z = (x - mu_[i]) / sigma_[i];
        d += kInvSqrt2Pi * std::exp(-0.5 * z * z) / (sigma_[i] * mass_[i]);
    }
    d /= static_cast<double>(mu_.size());
    return std::log(std::max(d, 1e-300));
}

double ParzenDensity::sample(std::mt19937_64& rng) const {
    const auto& spec = *spec_;
    if (spec.is_discrete_choice()) {
        std::discrete_distribution<std::size_t> pick(choice_prob_.begin(), choice_prob_.end());
        return static_cast<double>(pick(rng));
    }
    if (mu_.empty()) {
        return spec.lo;
    }
    const std::size_t k = std::uniform_int_distribution<std::size_t>(0, mu_.size() - 1)(rng);
    std::normal_distribution<double> noise(0.0, sigma_[k]);
    double x = mu_[k];
    for (int attempt = 0; attempt < 64; ++attempt) {
        x = mu_[k] + noise(rng);
        if (x >= spec.lo && x <= spec.hi) {
            break;
        }
    }
    x = std::clamp(x, spec.lo, spec.hi);
    if (spec.kind == ParamKind::Integer) {
        x = std::round(x);
    }
    return x;
}

ParamPoint tpe_suggest(const SearchSpace& space, const std::vector<TrialRecord>& history, const TpeParams& params,
                       std::mt19937_64& rng) {
    if (history.empty()) {
        throw DomainError("tpe_suggest: empty history");
    }
    const auto order = ranked(history);
    const auto n_good = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(params.good_fraction * static_cast<double>(history.size()))));
    const std::vector<std::size_t> good(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_good));
    const std::vector<std::size_t> bad(order.begin() + static_cast<std::ptrdiff_t>(n_good), order.end());

    std::vector<ParzenDensity> l;
    std::vector<ParzenDensity> g;
    l.reserve(space.size());
    g.reserve(space.size());
    for (std::size_t i = 0; i < space.size(); ++i) {
        l.emplace_back(space[i], active_values(history, good, i));
        g.emplace_back(space[i], active_values(history, bad, i));
    }

    ParamPoint best;
    double best_score = -INFINITY;
    for (std::size_t c = 0; c < params.n_candidates; ++c) {
        ParamPoint cand(space.size(), std::numeric_limits<double>::quiet_NaN());
        double score = 0.0;
        for (std::size_t i = 0; i < space.size(); ++i) {
            if (!space.is_active(cand, i)) {
                continue;
            }
            cand[i] = l[i].sample(rng);
            score += l[i].log_density(cand[i]) - g[i].log_density(cand[i]);
        }
        if (best.empty() || score > best_score) {
            best = std::move(cand);
            best_score = score;
        }
    }
    return best;
}

void finalize_search(SearchResult& result) {
    result.best_so_far.clear();
    if (result.trials.empty()) {
        return;
    }
    result.best = best_trial(result.trials);
    double running = INFINITY;
    for (const auto& t : result.trials) {
        running = std::min(running, t.value());
        result.best_so_far.push_back(running);
    }
}

SearchResult tpe_optimize(const Objective& objective, const SearchSpace& space, const TpeParams& params,
                          std::uint64_t seed, const TrialObserver& observer, RunLabel label) {
    params.validate();
    std::mt19937_64 rng(seed);
    SearchResult result;
    result.trials.reserve(params.n_trials);
    for (std::size_t i = 0; i < params.n_trials; ++i) {
        ParamPoint point = i < params.n_startup ? space.sample_uniform(rng)
                                                : tpe_suggest(space, result.trials, params, rng);
        auto record = run_trial(objective, point, {label.index_offset + i, derive_seed(seed, i)}, label.group);
        if (observer) {
            observer(record);
        }
        result.trials.push_back(std::move(record));
    }
    finalize_search(result);
    return result;
}

SearchResult random_search(const Objective& objective, const SearchSpace& space, std::size_t n_trials,
                           std::uint64_t seed, const TrialObserver& observer, RunLabel label) {
    std::mt19937_64 rng(seed);
    SearchResult result;
    for (std::size_t i = 0; i < n_trials; ++i) {
        auto record = run_trial(objective, space.sample_uniform(rng), {label.index_offset + i, derive_seed(seed, i)},
                                label.group);
        if (observer) {
            observer(record);
        }
        result.trials.push_back(std::move(record));
    }
    finalize_search(result);
    return result;
}

} // namespace tabaudit
