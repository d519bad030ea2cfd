#include "lrfr/mask.hpp"

#include "lrfr/errors.hpp"

namespace lrfr {

MaskSet::MaskSet(std::vector<std::vector<std::uint8_t>> active, double k_percent)
    : active_(std::move(active)), k_percent_(k_percent) {
    if (active_.empty()) fail(Errc::ShapeMismatch, "mask must cover at least one layer");
}

MaskSet MaskSet::all_active(const std::vector<std::size_t>& layer_widths) {
    std::vector<std::vector<std::uint8_t>> active;
    active.reserve(layer_widths.size());
    for (std::size_t w : layer_widths) active.emplace_back(w, std::uint8_t{1});
    return MaskSet(std::move(active), 100.0);
}

std::size_t MaskSet::active_count(std::size_t l) const {
    std::size_t count = 0;
    for (std::uint8_t v : active_[l]) count += (v != 0);
    return count;
}

std::vector<std::vector<std::size_t>> MaskSet::active_indices() const {
    std::vector<std::vector<std::size_t>> out(active_.size());
    for (std::size_t l = 0; l < active_.size(); ++l)
        for (std::size_t j = 0; j < active_[l].size(); ++j)
            if (active_[l][j]) out[l].push_back(j);
    return out;
}

} // namespace lrfr
