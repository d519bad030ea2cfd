#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace lrfr {

// Per-task selection of active neurons, one boolean vector per shared layer
// (over that layer's output units). Immutable once built.
class MaskSet {
public:
    MaskSet() = default;
    MaskSet(std::vector<std::vector<std::uint8_t>> active, double k_percent);

    static MaskSet all_active(const std::vector<std::size_t>& layer_widths);

    std::size_t num_layers() const { return active_.size(); }
    std::size_t width(std::size_t layer) const { return active_[layer].size(); }
    bool is_active(std::size_t layer, std::size_t unit) const { return active_[layer][unit] != 0; }
    const std::vector<std::uint8_t>& layer(std::size_t l) const { return active_[l]; }
    std::size_t active_count(std::size_t l) const;
    double k_percent() const { return k_percent_; }

    // Sorted indices of active units per layer (for persistence/reporting).
    std::vector<std::vector<std::size_t>> active_indices() const;

private:
    std::vector<std::vector<std::uint8_t>> active_;
    double k_percent_ = 100.0;
};

} // namespace lrfr
