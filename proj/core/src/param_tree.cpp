#include "curio/param_tree.hpp"

#include <algorithm>
#include <cmath>

#include "curio/errors.hpp"
#include "curio/rng.hpp"

namespace curio {

ParamTree::Entry& ParamTree::add(std::string_view name, std::vector<int> shape) {
    if (name.empty()) throw ConfigError("ParamTree: empty entry name");
    for (int d : shape) {
        if (d <= 0) {
            throw ConfigError("ParamTree: non-positive dimension in entry '" + std::string(name) + "'");
        }
    }
    auto it = std::lower_bound(entries_.begin(), entries_.end(), name,
                               [](const Entry& e, std::string_view n) { return e.name < n; });
    if (it != entries_.end() && it->name == name) {
        throw ConfigError("ParamTree: duplicate entry '" + std::string(name) + "'");
    }
    Entry e;
    e.name = std::string(name);
    e.shape = std::move(shape);
    e.data.assign(static_cast<size_t>(e.numel()), 0.0);
    return *entries_.insert(it, std::move(e));
}

int ParamTree::index_of(std::string_view name) const {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), name,
                               [](const Entry& e, std::string_view n) { return e.name < n; });
    if (it == entries_.end() || it->name != name) return -1;
    return static_cast<int>(it - entries_.begin());
}

ParamTree::Entry& ParamTree::at(std::string_view name) {
    int i = index_of(name);
    if (i < 0) throw ConfigError("ParamTree: no entry '" + std::string(name) + "'");
    return entries_[static_cast<size_t>(i)];
}

const ParamTree::Entry& ParamTree::at(std::string_view name) const {
    int i = index_of(name);
    if (i < 0) throw ConfigError("ParamTree: no entry '" + std::string(name) + "'");
    return entries_[static_cast<size_t>(i)];
}

int ParamTree::scalar_count() const {
    int n = 0;
    for (const Entry& e : entries_) n += e.numel();
    return n;
}

bool ParamTree::congruent(const ParamTree& other) const {
    if (entries_.size() != other.entries_.size()) return false;
    for (size_t i = 0; i < entries_.size(); ++i) {
        if (entries_[i].name != other.entries_[i].name) return false;
        if (entries_[i].shape != other.entries_[i].shape) return false;
    }
    return true;
}

void ParamTree::require_congruent(const ParamTree& other, std::string_view context) const {
    if (entries_.size() != other.entries_.size()) {
        throw ConfigError(std::string(context) + ": trees not congruent (entry counts " +
                          std::to_string(entries_.size()) + " vs " +
                          std::to_string(other.entries_.size()) + ")");
    }
    for (size_t i = 0; i < entries_.size(); ++i) {
        if (entries_[i].name != other.entries_[i].name || entries_[i].shape != other.entries_[i].shape) {
            throw ConfigError(std::string(context) + ": trees not congruent at entry '" +
                              entries_[i].name + "' vs '" + other.entries_[i].name + "'");
        }
    }
}

void ParamTree::check_finite(std::string_view context) const {
    for (const Entry& e : entries_) {
        for (double v : e.data) {
            if (!std::isfinite(v)) {
                throw ConfigError(std::string(context) + ": non-finite value in entry '" + e.name + "'");
            }
        }
    }
}

ParamTree ParamTree::zeros_like(const ParamTree& other) {
    ParamTree t;
    t.entries_ = other.entries_;
    for (Entry& e : t.entries_) std::fill(e.data.begin(), e.data.end(), 0.0);
    return t;
}

void fill_entry_uniform(ParamTree::Entry& e, std::mt19937_64& rng) {
    const int fan_in = e.shape.back();
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (double& v : e.data) v = uniform(rng, -bound, bound);
}

void ParamTree::fill_uniform(std::mt19937_64& rng) {
    for (Entry& e : entries_) fill_entry_uniform(e, rng);
}

} // namespace curio
