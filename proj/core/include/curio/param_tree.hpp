#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace curio {

/// Named, nested collection of real-valued arrays. Entry names are
/// hierarchical paths like "wm/encoder/l0/w". Entries are kept sorted by
/// name, so iteration order is deterministic and independent of insertion
/// order. Two trees are congruent iff they have identical name sets and
/// shapes; every binary operation on trees requires congruence.
class ParamTree {
public:
    struct Entry {
        std::string name;
        std::vector<int> shape;
        std::vector<double> data;

        int numel() const {
            int n = 1;
            for (int d : shape) n *= d;
            return n;
        }
    };

    ParamTree() = default;

    /// Adds a zero-filled entry. Throws ConfigError on duplicate names or
    /// non-positive dimensions.
    Entry& add(std::string_view name, std::vector<int> shape);

    bool has(std::string_view name) const { return index_of(name) >= 0; }

    /// Index of an entry, or -1 if absent.
    int index_of(std::string_view name) const;

    /// Entry accessors; the string forms throw ConfigError if absent.
    Entry& at(std::string_view name);
    const Entry& at(std::string_view name) const;
    Entry& entry(int idx) { return entries_[static_cast<size_t>(idx)]; }
    const Entry& entry(int idx) const { return entries_[static_cast<size_t>(idx)]; }

    int entry_count() const { return static_cast<int>(entries_.size()); }
    std::span<const Entry> entries() const { return entries_; }

    /// Total number of scalar parameters.
    int scalar_count() const;

    bool congruent(const ParamTree& other) const;

    /// Throws ConfigError naming the first mismatching entry.
    void require_congruent(const ParamTree& other, std::string_view context) const;

    /// Throws ConfigError naming the first non-finite entry.
    void check_finite(std::string_view context) const;

    /// Same names and shapes, all values zero.
    static ParamTree zeros_like(const ParamTree& other);

    /// Fills every entry with uniform values in [-1/sqrt(fan_in), +1/sqrt(fan_in)],
    /// where fan_in is the trailing dimension of the entry shape. Used by tests;
    /// model builders initialize layer by layer instead.
    void fill_uniform(std::mt19937_64& rng);

private:
    std::vector<Entry> entries_; // sorted by name
};

/// Uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)] for a single entry,
/// fan_in being the trailing dimension.
void fill_entry_uniform(ParamTree::Entry& e, std::mt19937_64& rng);

} // namespace curio
