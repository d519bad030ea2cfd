#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lrfr/datasets.hpp"
#include "lrfr/mask.hpp"
#include "lrfr/network.hpp"
#include "lrfr/representation.hpp"

namespace lrfr {

enum class Method { lrfr, nscl_full, lowrank_baseline, finetune };

const char* method_name(Method method);
std::optional<Method> method_from_string(const std::string& name);

struct TrainConfig {
    std::size_t epochs = 40;
    std::size_t batch_size = 32;
    double lr = 0.05;
    std::vector<std::size_t> lr_milestones = {20, 30}; // 1-based epochs; lr halves at each
    double mu = 0.1;          // BN-scale L1 strength during pretraining
    double k_percent = 50.0;  // kept neurons per layer
    double rel_tol = 1e-8;    // numerical null-space tolerance
    double energy = 0.95;     // kept spectral energy for the truncation baseline
    std::size_t pretrain_epochs = 20;
    std::uint64_t seed = 1;
    Method method = Method::lrfr;
};

// Accumulated leakage allowed by the exact-null-space methods: per-step
// residuals of at most rel_tol * lambda_max, amplified over at most ~1e4
// steps with bounded update norms.
inline constexpr double kStabilityAuditBudget = 1e-4;

// R[t][p]: test accuracy on task p after finishing task t (lower triangle).
struct AccuracyMatrix {
    std::vector<std::vector<double>> rows; // rows[t-1] has t entries
};

struct Metrics {
    double acc = 0.0;
    double bwt = 0.0;
};

// ACC = mean of the final row; BWT = mean over p < T of R[T][p] - R[p][p]
// (0 when T == 1). The lower triangle must be complete.
Metrics compute_metrics(const AccuracyMatrix& r);

// Per-step observation of the projected update, for mechanism checks.
struct StepSample {
    int task_id = 0;
    std::size_t step = 0;                // 0-based within the task
    std::vector<double> inner;           // <P G, G> per shared layer (Frobenius)
    std::vector<double> proj_sq;         // |P G|_F^2 per shared layer
    std::vector<double> residual;        // |cov * dW|_max per layer, dW = -lr P G
    std::vector<double> lambda_max;      // top eigenvalue of the layer covariance
    std::vector<std::size_t> dims;       // a_l per layer
};

struct TrainHooks {
    std::size_t sample_every = 1;
    std::function<void(const StepSample&)> on_step;
};

// Everything accumulated while training a task sequence with one method.
class ExperimentState {
public:
    ExperimentState(std::vector<std::size_t> layer_sizes, std::size_t classes_per_task,
                    const TrainConfig& cfg);

    Network& net() { return net_; }
    const Network& net() const { return net_; }
    const RepresentationTracker& tracker() const { return tracker_; }
    const MaskSet& mask(int task_id) const;
    int next_task() const { return next_task_; }
    const AccuracyMatrix& accuracy() const { return accuracy_; }
    const std::vector<std::vector<LayerRankReport>>& rank_trajectory() const {
        return rank_trajectory_;
    }
    const std::vector<std::vector<double>>& audit_per_past() const { return audit_per_past_; }
    const std::vector<TaskData>& seen_tasks() const { return seen_tasks_; }

private:
    friend void train_task(ExperimentState&, const TaskData&, const TrainConfig&,
                           const TrainHooks*);
    friend std::vector<LayerRankReport> final_null_report(const ExperimentState&,
                                                          const TrainConfig&);

    Network net_;
    RepresentationTracker tracker_;
    std::map<int, MaskSet> masks_;
    AccuracyMatrix accuracy_;
    std::vector<std::vector<LayerRankReport>> rank_trajectory_; // entry t-1: basis for task t
    std::vector<std::vector<double>> audit_per_past_;           // entry t-1: drift per past task
    std::vector<TaskData> seen_tasks_;
    int next_task_ = 1;
};

// Projects shared-layer weight gradients into the per-layer subspaces
// (weight gradient <- P_l * G_l); BN and head gradients pass through.
Gradients project_gradients(const Gradients& grads, const std::vector<DenseMatrix>& projectors);

// Runs the full per-task pipeline: (t > 1) absorb the previous task's masked
// representations; select this task's sub-network (lrfr only; other methods
// keep all neurons); build per-layer projectors from the tracked covariances
// and run projected SGD; then record the accuracy row over all seen tasks and
// the stability audit against the pre-training snapshot.
void train_task(ExperimentState& state, const TaskData& task, const TrainConfig& cfg,
                const TrainHooks* hooks = nullptr);

// Eval-mode accuracy on each task's test split, using that task's head, BN
// set and mask.
std::vector<double> evaluate(const ExperimentState& state, const std::vector<TaskData>& tasks);

// Max-abs eval-mode logit difference on the past task's test data between
// the current network and the snapshot taken before the current task's
// official training, under the past task's head/BN/mask.
double stability_audit(const ExperimentState& state, const TaskData& past_task,
                       const Network& snapshot);

// Rank report after additionally absorbing the last trained task into a copy
// of the tracker (the live tracker only ever holds tasks 1..t-1).
std::vector<LayerRankReport> final_null_report(const ExperimentState& state,
                                               const TrainConfig& cfg);

struct MethodRunResult {
    Method method = Method::lrfr;
    AccuracyMatrix accuracy;
    Metrics metrics;
    std::vector<std::vector<LayerRankReport>> trajectory; // entry t-1: basis for task t
    std::vector<LayerRankReport> final_report;            // after absorbing the last task
    std::vector<std::vector<double>> audit_per_past;      // entry t-1 (empty for task 1)
    std::vector<double> audit_max;                        // entry t-1 (0 for task 1)
    std::vector<std::vector<std::vector<std::size_t>>> mask_indices; // per task, per layer
};

// Trains every task of the sequence in order with one method.
MethodRunResult run_method(const TaskSequence& seq, const std::vector<std::size_t>& layer_sizes,
                           const TrainConfig& cfg, const TrainHooks* hooks = nullptr);

} // namespace lrfr
