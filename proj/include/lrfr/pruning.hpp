#pragma once

#include <cstdint>
#include <vector>

#include "lrfr/datasets.hpp"
#include "lrfr/mask.hpp"
#include "lrfr/network.hpp"

namespace lrfr {

// Sparsity-probing pretraining: trains a throwaway deep copy of `base` on
// the task with all neurons active, plain (unprojected) SGD, and an L1
// penalty of strength mu on the task's shared-layer BN scales. Returns the
// final |gamma| magnitudes per layer; the copy is discarded and `base` is
// left untouched.
std::vector<std::vector<double>> pretrain_for_selection(const Network& base, const TaskData& task,
                                                        double mu, std::size_t epochs, double lr,
                                                        std::size_t batch_size,
                                                        std::uint64_t seed);

// Keeps the ceil(k_percent * width / 100) largest magnitudes per layer; ties
// go to the lower index. Deterministic.
MaskSet build_mask(const std::vector<std::vector<double>>& magnitudes, double k_percent);

} // namespace lrfr
