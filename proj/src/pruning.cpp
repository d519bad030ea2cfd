#include "lrfr/pruning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lrfr/errors.hpp"
#include "lrfr/rng.hpp"

namespace lrfr {
namespace {

DenseMatrix gather_rows(const DenseMatrix& x, const std::vector<std::size_t>& idx,
                        std::size_t begin, std::size_t count) {
    DenseMatrix out(count, x.cols());
    for (std::size_t i = 0; i < count; ++i)
        for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) = x(idx[begin + i], j);
    return out;
}

std::vector<int> gather_labels(const std::vector<int>& y, const std::vector<std::size_t>& idx,
                               std::size_t begin, std::size_t count) {
    std::vector<int> out(count);
    for (std::size_t i = 0; i < count; ++i) out[i] = y[idx[begin + i]];
    return out;
}

} // namespace

std::vector<std::vector<double>> pretrain_for_selection(const Network& base, const TaskData& task,
                                                        double mu, std::size_t epochs, double lr,
                                                        std::size_t batch_size,
                                                        std::uint64_t seed) {
    if (task.train_x.rows() == 0) fail(Errc::EmptyDataset, "pretraining needs training samples");
    if (batch_size < 2) fail(Errc::SingularBatch, "pretraining batch size must be at least 2");

    Network probe = base; // the persistent network is never touched
    probe.ensure_task(task.task_id);
    const MaskSet full_mask = MaskSet::all_active(probe.hidden_widths());

    const std::size_t n = task.train_x.rows();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        Rng shuffle_rng = Rng::derive(seed, {0x70726574 /* "pret" */, epoch});
        shuffle_rng.shuffle(order);
        for (std::size_t start = 0; start + 2 <= n; start += batch_size) {
            const std::size_t count = std::min(batch_size, n - start);
            if (count < 2) break; // batch statistics need two samples
            const DenseMatrix batch = gather_rows(task.train_x, order, start, count);
            const std::vector<int> labels = gather_labels(task.train_y, order, start, count);
            const ForwardTrace trace = forward(probe, batch, task.task_id, full_mask, Mode::train);
            auto [loss, grads] = backward(probe, trace, labels, task.task_id, full_mask, mu);
            (void)loss;
            apply_update(probe, task.task_id, grads, lr, UpdateScope::shared_and_task);
        }
    }

    std::vector<std::vector<double>> magnitudes;
    magnitudes.reserve(probe.num_layers());
    for (std::size_t l = 0; l < probe.num_layers(); ++l) {
        const std::vector<double>& gamma = probe.bn(task.task_id, l).gamma;
        std::vector<double> mag(gamma.size());
        for (std::size_t j = 0; j < gamma.size(); ++j) mag[j] = std::fabs(gamma[j]);
        magnitudes.push_back(std::move(mag));
    }
    return magnitudes;
}

MaskSet build_mask(const std::vector<std::vector<double>>& magnitudes, double k_percent) {
    if (!(k_percent > 0.0 && k_percent <= 100.0))
        fail(Errc::InvalidK, "k_percent must be in (0, 100]");
    if (magnitudes.empty()) fail(Errc::ShapeMismatch, "no magnitude vectors given");

    std::vector<std::vector<std::uint8_t>> active;
    active.reserve(magnitudes.size());
    for (const std::vector<double>& mag : magnitudes) {
        const std::size_t width = mag.size();
        const std::size_t keep = static_cast<std::size_t>(
            std::ceil(k_percent * static_cast<double>(width) / 100.0));
        std::vector<std::size_t> order(width);
        std::iota(order.begin(), order.end(), 0);
        // stable sort: equal magnitudes keep ascending index order
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return mag[a] > mag[b]; });
        std::vector<std::uint8_t> lane(width, 0);
        for (std::size_t i = 0; i < keep && i < width; ++i) lane[order[i]] = 1;
        active.push_back(std::move(lane));
    }
    return MaskSet(std::move(active), k_percent);
}

} // namespace lrfr
