#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lrfr/matrix.hpp"

namespace lrfr {

struct TaskData {
    int task_id = 0;
    std::size_t num_classes = 0;
    DenseMatrix train_x; // n_train x dim
    std::vector<int> train_y;
    DenseMatrix test_x; // n_test x dim
    std::vector<int> test_y;
};

struct TaskSequence {
    std::vector<TaskData> tasks; // task_ids 1..T in order
    std::string provenance;      // generator description, seeds included
};

// Synthetic task stream: each task draws its class means uniformly on the
// sphere of radius `separation` and samples unit-variance Gaussians around
// them. Labels are assigned round-robin, so histograms are balanced within
// one sample. Each task uses its own stream derived from (seed, task_id).
TaskSequence gen_gaussian_tasks(std::size_t dim, std::size_t classes_per_task, std::size_t T,
                                std::size_t n_train, std::size_t n_test, double separation,
                                std::uint64_t seed);

// Task t applies a fixed seeded permutation of the input features of `base`;
// the first task is the identity permutation.
TaskSequence gen_permuted_tasks(const TaskData& base, std::size_t T, std::uint64_t seed);

// Loads an IDX image/label pair and splits the label set into T groups of
// classes_per_task consecutive classes (ascending original label order),
// relabelled 0..c-1 within each task. One sixth of each class (the last
// samples in file order) is held out as the test split. normalize scales
// pixels to [0, 1].
TaskSequence load_idx_split(const std::string& images_path, const std::string& labels_path,
                            std::size_t classes_per_task, std::size_t T, bool normalize);

} // namespace lrfr
