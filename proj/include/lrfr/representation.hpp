#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "lrfr/mask.hpp"
#include "lrfr/matrix.hpp"
#include "lrfr/network.hpp"

namespace lrfr {

struct LayerRankReport {
    std::size_t rank = 0;
    std::size_t null_dim = 0;
};

// Running per-layer uncentered covariance of layer inputs, accumulated over
// the training data of all absorbed tasks:
//   cov_l = (1 / n_total) * sum over samples of x^l (x^l)^T.
// Stored already normalized by the seen-sample count and rescaled on each
// update, so long task streams cannot overflow.
class RepresentationTracker {
public:
    RepresentationTracker() = default;
    explicit RepresentationTracker(std::vector<std::size_t> input_dims);

    std::size_t num_layers() const { return cov_.size(); }
    const DenseMatrix& covariance(std::size_t l) const { return cov_[l]; }
    std::size_t seen_samples() const { return seen_; }
    std::size_t absorbed_tasks() const { return tasks_; }

    // Folds one task's representation matrices (a_l x n_t each) into the
    // running covariances. Algebraically identical to recomputing the batch
    // covariance over all absorbed samples from scratch.
    void absorb_task(const std::vector<DenseMatrix>& reps, std::size_t n_t);

    // Per-layer numerical rank and null-space dimension (width minus rank).
    std::vector<LayerRankReport> null_report(double rel_tol) const;

    // Rebuilds a tracker from checkpointed state.
    static RepresentationTracker restore(std::vector<DenseMatrix> cov, std::size_t seen,
                                         std::size_t tasks);

private:
    std::vector<DenseMatrix> cov_;
    std::size_t seen_ = 0;
    std::size_t tasks_ = 0;
};

// Eval-mode forward over the full dataset (batched only for memory; batching
// does not change the result) collecting the input representation of every
// layer: F^1 is the raw data, F^l for l > 1 the masked activation feeding
// layer l. Matrices are (a_l x n), one column per sample.
std::vector<DenseMatrix> collect_representations(const Network& net, const DenseMatrix& data,
                                                 int task_id, const MaskSet& mask,
                                                 std::size_t batch_rows = 256);

void save_tracker(const RepresentationTracker& tracker, const std::string& path);
RepresentationTracker load_tracker(const std::string& path);

} // namespace lrfr
