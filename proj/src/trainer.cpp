#include "lrfr/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lrfr/errors.hpp"
#include "lrfr/kernels.hpp"
#include "lrfr/linalg.hpp"
#include "lrfr/pruning.hpp"
#include "lrfr/rng.hpp"

namespace lrfr {

const char* method_name(Method method) {
    switch (method) {
        case Method::lrfr: return "lrfr";
        case Method::nscl_full: return "nscl_full";
        case Method::lowrank_baseline: return "lowrank_baseline";
        case Method::finetune: return "finetune";
    }
    return "?";
}

std::optional<Method> method_from_string(const std::string& name) {
    if (name == "lrfr") return Method::lrfr;
    if (name == "nscl_full") return Method::nscl_full;
    if (name == "lowrank_baseline") return Method::lowrank_baseline;
    if (name == "finetune") return Method::finetune;
    return std::nullopt;
}

Metrics compute_metrics(const AccuracyMatrix& r) {
    const std::size_t T = r.rows.size();
    if (T == 0) fail(Errc::IncompleteMatrix, "accuracy matrix is empty");
    for (std::size_t t = 0; t < T; ++t) {
        if (r.rows[t].size() != t + 1)
            fail(Errc::IncompleteMatrix, "accuracy matrix lower triangle is incomplete");
        for (double v : r.rows[t])
            if (!(v >= 0.0 && v <= 1.0))
                fail(Errc::IncompleteMatrix, "accuracy outside [0,1]");
    }
    Metrics m;
    const std::vector<double>& last = r.rows[T - 1];
    m.acc = std::accumulate(last.begin(), last.end(), 0.0) / static_cast<double>(T);
    if (T == 1) {
        m.bwt = 0.0;
    } else {
        double sum = 0.0;
        for (std::size_t p = 0; p + 1 < T; ++p) sum += last[p] - r.rows[p][p];
        m.bwt = sum / static_cast<double>(T - 1);
    }
    return m;
}

ExperimentState::ExperimentState(std::vector<std::size_t> layer_sizes,
                                 std::size_t classes_per_task, const TrainConfig& cfg)
    : net_(std::move(layer_sizes), classes_per_task, cfg.seed) {
    std::vector<std::size_t> input_dims(net_.layer_sizes().begin(),
                                        net_.layer_sizes().end() - 1);
    tracker_ = RepresentationTracker(std::move(input_dims));
}

const MaskSet& ExperimentState::mask(int task_id) const {
    auto it = masks_.find(task_id);
    if (it == masks_.end()) fail(Errc::UnknownTask, "no mask recorded for task");
    return it->second;
}

Gradients project_gradients(const Gradients& grads, const std::vector<DenseMatrix>& projectors) {
    if (projectors.size() != grads.weight.size())
        fail(Errc::ShapeMismatch, "projector count does not match layer count");
    Gradients out = grads;
    const auto& ops = kernels::active();
    for (std::size_t l = 0; l < projectors.size(); ++l) {
        const DenseMatrix& p = projectors[l];
        const DenseMatrix& g = grads.weight[l];
        if (p.rows() != p.cols() || p.rows() != g.rows())
            fail(Errc::ShapeMismatch, "projector does not match weight gradient rows");
        ops.gemm_nn(p.data(), g.data(), out.weight[l].data(), p.rows(), p.cols(), g.cols());
    }
    return out;
}

namespace {

double accuracy_on(const Network& net, const MaskSet& mask, const TaskData& task) {
    const ForwardTrace trace = forward_eval(net, task.test_x, task.task_id, mask);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < trace.logits.rows(); ++i) {
        const double* row = trace.logits.row(i);
        std::size_t best = 0;
        for (std::size_t c = 1; c < trace.logits.cols(); ++c)
            if (row[c] > row[best]) best = c;
        if (static_cast<int>(best) == task.test_y[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(trace.logits.rows());
}

DenseMatrix gather_rows(const DenseMatrix& x, const std::vector<std::size_t>& idx,
                        std::size_t begin, std::size_t count) {
    DenseMatrix out(count, x.cols());
    for (std::size_t i = 0; i < count; ++i)
        for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) = x(idx[begin + i], j);
    return out;
}

double frobenius_inner(const DenseMatrix& a, const DenseMatrix& b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += a.data()[i] * b.data()[i];
    return sum;
}

struct LayerProjector {
    DenseMatrix p;
    double lambda_max = 0.0;
    std::size_t rank = 0;
    std::size_t null_dim = 0;
};

std::vector<LayerProjector> build_projectors(const RepresentationTracker& tracker,
                                             const TrainConfig& cfg) {
    std::vector<LayerProjector> out;
    out.reserve(tracker.num_layers());
    for (std::size_t l = 0; l < tracker.num_layers(); ++l) {
        const DenseMatrix& cov = tracker.covariance(l);
        const Spectrum s = sym_eig(cov);
        LayerProjector lp;
        lp.lambda_max = s.eigenvalues.empty() ? 0.0 : s.eigenvalues.front();
        lp.rank = numerical_rank(s, cfg.rel_tol);
        lp.null_dim = cov.rows() - lp.rank;
        switch (cfg.method) {
            case Method::lrfr:
            case Method::nscl_full:
                lp.p = null_projector(s, cfg.rel_tol);
                break;
            case Method::lowrank_baseline:
                lp.p = lowrank_truncation_projector(cov, cfg.energy);
                break;
            case Method::finetune:
                lp.p = DenseMatrix::identity(cov.rows());
                break;
        }
        out.push_back(std::move(lp));
    }
    return out;
}

double lr_for_epoch(const TrainConfig& cfg, std::size_t epoch_1based) {
    double lr = cfg.lr;
    for (std::size_t milestone : cfg.lr_milestones)
        if (milestone <= epoch_1based) lr *= 0.5;
    return lr;
}

} // namespace

void train_task(ExperimentState& state, const TaskData& task, const TrainConfig& cfg,
                const TrainHooks* hooks) {
    if (task.task_id != state.next_task_)
        fail(Errc::OutOfOrderTask, "tasks must be trained in order 1..T");
    if (task.train_x.rows() == 0) fail(Errc::EmptyDataset, "task has no training data");

    // Stage 1: fold the previous task's masked representations into the
    // tracked covariances. The tracker holds exactly tasks 1..t-1 afterwards.
    if (!state.seen_tasks_.empty()) {
        const TaskData& prev = state.seen_tasks_.back();
        const std::vector<DenseMatrix> reps = collect_representations(
            state.net_, prev.train_x, prev.task_id, state.mask(prev.task_id));
        state.tracker_.absorb_task(reps, prev.train_x.rows());
    }

    // Stage 2: sub-network selection. Only the low-rank method prunes; the
    // baselines train with every neuron active.
    state.net_.ensure_task(task.task_id);
    MaskSet mask = MaskSet::all_active(state.net_.hidden_widths());
    if (cfg.method == Method::lrfr) {
        const std::uint64_t pre_seed =
            Rng::derive(cfg.seed, {0x73656c65 /* "sele" */,
                                   static_cast<std::uint64_t>(task.task_id)})
                .next_u64();
        const auto magnitudes = pretrain_for_selection(state.net_, task, cfg.mu,
                                                       cfg.pretrain_epochs, cfg.lr,
                                                       cfg.batch_size, pre_seed);
        mask = build_mask(magnitudes, cfg.k_percent);
    }
    state.masks_.emplace(task.task_id, mask);

    // Stage 3: official training with projected updates.
    std::vector<LayerProjector> projectors = build_projectors(state.tracker_, cfg);
    std::vector<LayerRankReport> report;
    report.reserve(projectors.size());
    for (const LayerProjector& lp : projectors) report.push_back({lp.rank, lp.null_dim});
    state.rank_trajectory_.push_back(std::move(report));

    const Network snapshot = state.net_;

    std::vector<DenseMatrix> ps;
    ps.reserve(projectors.size());
    for (const LayerProjector& lp : projectors) ps.push_back(lp.p);

    const std::size_t n = task.train_x.rows();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::size_t step = 0;
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const double lr = lr_for_epoch(cfg, epoch);
        Rng shuffle_rng = Rng::derive(cfg.seed, {0x73687566 /* "shuf" */,
                                                 static_cast<std::uint64_t>(task.task_id), epoch});
        shuffle_rng.shuffle(order);
        for (std::size_t start = 0; start + 2 <= n; start += cfg.batch_size) {
            const std::size_t count = std::min(cfg.batch_size, n - start);
            if (count < 2) break;
            const DenseMatrix batch = gather_rows(task.train_x, order, start, count);
            std::vector<int> labels(count);
            for (std::size_t i = 0; i < count; ++i) labels[i] = task.train_y[order[start + i]];

            const ForwardTrace trace = forward(state.net_, batch, task.task_id, mask, Mode::train);
            auto [loss, grads] = backward(state.net_, trace, labels, task.task_id, mask, 0.0);
            (void)loss;

            const Gradients projected = project_gradients(grads, ps);

            if (hooks && hooks->on_step && (step % std::max<std::size_t>(1, hooks->sample_every)) == 0) {
                StepSample sample;
                sample.task_id = task.task_id;
                sample.step = step;
                for (std::size_t l = 0; l < projectors.size(); ++l) {
                    sample.inner.push_back(frobenius_inner(projected.weight[l], grads.weight[l]));
                    sample.proj_sq.push_back(
                        frobenius_inner(projected.weight[l], projected.weight[l]));
                    DenseMatrix leak = matmul(state.tracker_.covariance(l), projected.weight[l]);
                    sample.residual.push_back(lr * leak.max_abs());
                    sample.lambda_max.push_back(projectors[l].lambda_max);
                    sample.dims.push_back(state.net_.layer_sizes()[l]);
                }
                hooks->on_step(sample);
            }

            apply_update(state.net_, task.task_id, projected, lr, UpdateScope::shared_and_task);
            ++step;
        }
    }

    // Stability audit against the pre-training snapshot, then the accuracy
    // row over every task seen so far.
    std::vector<double> drifts;
    drifts.reserve(state.seen_tasks_.size());
    for (const TaskData& past : state.seen_tasks_)
        drifts.push_back(stability_audit(state, past, snapshot));
    state.audit_per_past_.push_back(std::move(drifts));

    state.seen_tasks_.push_back(task);
    state.accuracy_.rows.push_back(evaluate(state, state.seen_tasks_));
    ++state.next_task_;
}

std::vector<double> evaluate(const ExperimentState& state, const std::vector<TaskData>& tasks) {
    std::vector<double> row;
    row.reserve(tasks.size());
    for (const TaskData& task : tasks)
        row.push_back(accuracy_on(state.net(), state.mask(task.task_id), task));
    return row;
}

double stability_audit(const ExperimentState& state, const TaskData& past_task,
                       const Network& snapshot) {
    const MaskSet& mask = state.mask(past_task.task_id);
    const DenseMatrix now =
        forward_eval(state.net(), past_task.test_x, past_task.task_id, mask).logits;
    const DenseMatrix then =
        forward_eval(snapshot, past_task.test_x, past_task.task_id, mask).logits;
    return max_abs_diff(now, then);
}

std::vector<LayerRankReport> final_null_report(const ExperimentState& state,
                                               const TrainConfig& cfg) {
    if (state.seen_tasks_.empty()) return state.tracker_.null_report(cfg.rel_tol);
    const TaskData& last = state.seen_tasks_.back();
    RepresentationTracker copy = state.tracker_;
    const std::vector<DenseMatrix> reps = collect_representations(
        state.net(), last.train_x, last.task_id, state.mask(last.task_id));
    copy.absorb_task(reps, last.train_x.rows());
    return copy.null_report(cfg.rel_tol);
}

MethodRunResult run_method(const TaskSequence& seq, const std::vector<std::size_t>& layer_sizes,
                           const TrainConfig& cfg, const TrainHooks* hooks) {
    if (seq.tasks.empty()) fail(Errc::EmptyDataset, "task sequence is empty");
    const std::size_t classes = seq.tasks.front().num_classes;
    for (const TaskData& task : seq.tasks)
        if (task.num_classes != classes)
            fail(Errc::InvalidSpec, "all tasks must share the class count");
    if (layer_sizes.empty() || layer_sizes.front() != seq.tasks.front().train_x.cols())
        fail(Errc::InvalidArchitecture, "input width does not match the data");

    ExperimentState state(layer_sizes, classes, cfg);
    MethodRunResult result;
    result.method = cfg.method;
    for (const TaskData& task : seq.tasks) train_task(state, task, cfg, hooks);

    result.accuracy = state.accuracy();
    result.metrics = compute_metrics(result.accuracy);
    result.trajectory = state.rank_trajectory();
    result.final_report = final_null_report(state, cfg);
    result.audit_per_past = state.audit_per_past();
    result.audit_max.reserve(result.audit_per_past.size());
    for (const auto& drifts : result.audit_per_past) {
        double worst = 0.0;
        for (double d : drifts) worst = std::max(worst, d);
        result.audit_max.push_back(worst);
    }
    for (const TaskData& task : seq.tasks)
        result.mask_indices.push_back(state.mask(task.task_id).active_indices());
    return result;
}

} // namespace lrfr
