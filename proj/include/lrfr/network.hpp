#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "lrfr/mask.hpp"
#include "lrfr/matrix.hpp"

namespace lrfr {

// Batch-normalization parameter set for one layer of one task.
struct BnParams {
    std::vector<double> gamma;
    std::vector<double> beta;
    std::vector<double> run_mean;
    std::vector<double> run_var;
};

// Per-task linear classifier head on top of the last shared layer.
struct Head {
    DenseMatrix weight; // (last width x classes)
    std::vector<double> bias;
};

enum class Mode { train, eval };
enum class UpdateScope { shared_and_task, task_only };

// Fully-connected stack (Linear -> BN -> ReLU -> mask) x L. The linear
// weights are shared across tasks; BN parameter sets and classifier heads are
// private to each task. Batches are row-major: one sample per row.
class Network {
public:
    Network(std::vector<std::size_t> layer_sizes, std::size_t classes_per_task,
            std::uint64_t seed);

    std::size_t num_layers() const { return weights_.size(); } // L
    const std::vector<std::size_t>& layer_sizes() const { return layer_sizes_; }
    std::size_t input_dim() const { return layer_sizes_.front(); }
    std::size_t last_width() const { return layer_sizes_.back(); }
    // Output widths b_l of the L shared layers (mask widths).
    std::vector<std::size_t> hidden_widths() const;
    std::size_t classes_per_task() const { return classes_per_task_; }
    std::uint64_t seed() const { return seed_; }

    // Creates the BN parameter set and head for a task if missing. Head
    // weights come from a stream derived from (seed, task_id), so creation
    // order does not matter.
    void ensure_task(int task_id);
    bool has_task(int task_id) const { return heads_.count(task_id) != 0; }
    std::vector<int> task_ids() const;

    DenseMatrix& weight(std::size_t l) { return weights_[l]; }
    const DenseMatrix& weight(std::size_t l) const { return weights_[l]; }
    BnParams& bn(int task_id, std::size_t l);
    const BnParams& bn(int task_id, std::size_t l) const;
    Head& head(int task_id);
    const Head& head(int task_id) const;

    bool operator==(const Network& other) const;

private:
    std::vector<std::size_t> layer_sizes_;
    std::size_t classes_per_task_ = 0;
    std::uint64_t seed_ = 0;
    std::vector<DenseMatrix> weights_;
    std::map<int, std::vector<BnParams>> task_bn_;
    std::map<int, Head> heads_;
};

Network init_network(std::vector<std::size_t> layer_sizes, std::size_t classes_per_task,
                     std::uint64_t seed);

// Activations recorded during one forward pass; everything backward needs.
struct ForwardTrace {
    Mode mode = Mode::eval;
    int task_id = 0;
    DenseMatrix input;                        // n x a_1
    std::vector<DenseMatrix> pre_bn;          // n x b_l
    std::vector<DenseMatrix> normalized;      // n x b_l, (z - mean)/sqrt(var + eps)
    std::vector<DenseMatrix> post_bn;         // n x b_l, gamma*normalized + beta
    std::vector<DenseMatrix> activations;     // n x b_l, mask(relu(post_bn))
    std::vector<std::vector<double>> mean;    // stats used per layer
    std::vector<std::vector<double>> var;
    DenseMatrix logits;                       // n x classes
};

// Train mode normalizes with batch statistics and updates the running stats
// (momentum 0.1); eval mode uses the stored running stats and leaves the
// network untouched. Train mode needs at least 2 samples.
ForwardTrace forward(Network& net, const DenseMatrix& batch, int task_id,
                     const MaskSet& mask, Mode mode);
ForwardTrace forward_eval(const Network& net, const DenseMatrix& batch, int task_id,
                          const MaskSet& mask);

struct Gradients {
    std::vector<DenseMatrix> weight;          // per shared layer, a_l x b_l
    std::vector<std::vector<double>> bn_gamma;
    std::vector<std::vector<double>> bn_beta;
    DenseMatrix head_weight;
    std::vector<double> head_bias;
};

// Mean cross-entropy over the batch plus l1_scale * sum |gamma| over the
// current task's shared-layer BN scales. Gradients flow through the
// batch-statistics normalization path, so the trace must come from a
// train-mode forward. sign(0) contributes 0 to the L1 term.
std::pair<double, Gradients> backward(const Network& net, const ForwardTrace& trace,
                                      const std::vector<int>& labels, int task_id,
                                      const MaskSet& mask, double l1_scale);

// params <- params - lr * gradient. task_only leaves shared weights intact.
void apply_update(Network& net, int task_id, const Gradients& grads, double lr,
                  UpdateScope scope);

// Binary checkpoint, little-endian: "LRFR" magic, version, layer map, task
// ids, then float64 parameter blocks (shared weights, per-task BN sets,
// per-task heads) in that order.
void save_network(const Network& net, const std::string& path);
Network load_network(const std::string& path);

} // namespace lrfr
