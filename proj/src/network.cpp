#include "lrfr/network.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "lrfr/errors.hpp"
#include "lrfr/kernels.hpp"
#include "lrfr/rng.hpp"

namespace lrfr {
namespace {

constexpr double kBnEpsilon = 1e-5;
constexpr double kBnMomentum = 0.1;
constexpr std::uint64_t kHeadStreamTag = 0x68656164; // "head"
constexpr char kMagic[4] = {'L', 'R', 'F', 'R'};
constexpr std::uint32_t kCheckpointVersion = 1;

DenseMatrix xavier_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    DenseMatrix w(fan_in, fan_out);
    for (std::size_t i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(-bound, bound);
    return w;
}

BnParams fresh_bn(std::size_t width) {
    BnParams bn;
    bn.gamma.assign(width, 1.0);
    bn.beta.assign(width, 0.0);
    bn.run_mean.assign(width, 0.0);
    bn.run_var.assign(width, 1.0);
    return bn;
}

void check_mask_shape(const Network& net, const MaskSet& mask) {
    if (mask.num_layers() != net.num_layers())
        fail(Errc::ShapeMismatch, "mask layer count does not match network");
    for (std::size_t l = 0; l < mask.num_layers(); ++l)
        if (mask.width(l) != net.layer_sizes()[l + 1])
            fail(Errc::ShapeMismatch, "mask width does not match layer output size");
}

} // namespace

Network::Network(std::vector<std::size_t> layer_sizes, std::size_t classes_per_task,
                 std::uint64_t seed)
    : layer_sizes_(std::move(layer_sizes)), classes_per_task_(classes_per_task), seed_(seed) {
    if (layer_sizes_.size() < 2)
        fail(Errc::InvalidArchitecture, "need an input size and at least one layer width");
    for (std::size_t s : layer_sizes_)
        if (s == 0) fail(Errc::InvalidArchitecture, "layer sizes must be positive");
    if (classes_per_task_ == 0)
        fail(Errc::InvalidArchitecture, "classes per task must be positive");

    Rng rng = Rng::derive(seed_, {0x77656967 /* "weig" */});
    weights_.reserve(layer_sizes_.size() - 1);
    for (std::size_t l = 0; l + 1 < layer_sizes_.size(); ++l)
        weights_.push_back(xavier_uniform(layer_sizes_[l], layer_sizes_[l + 1], rng));
}

Network init_network(std::vector<std::size_t> layer_sizes, std::size_t classes_per_task,
                     std::uint64_t seed) {
    return Network(std::move(layer_sizes), classes_per_task, seed);
}

std::vector<std::size_t> Network::hidden_widths() const {
    return {layer_sizes_.begin() + 1, layer_sizes_.end()};
}

void Network::ensure_task(int task_id) {
    if (has_task(task_id)) return;
    std::vector<BnParams> bn_set;
    bn_set.reserve(num_layers());
    for (std::size_t l = 0; l < num_layers(); ++l) bn_set.push_back(fresh_bn(layer_sizes_[l + 1]));
    task_bn_.emplace(task_id, std::move(bn_set));

    Rng rng = Rng::derive(seed_, {kHeadStreamTag, static_cast<std::uint64_t>(task_id)});
    Head head;
    head.weight = xavier_uniform(last_width(), classes_per_task_, rng);
    head.bias.assign(classes_per_task_, 0.0);
    heads_.emplace(task_id, std::move(head));
}

std::vector<int> Network::task_ids() const {
    std::vector<int> ids;
    ids.reserve(heads_.size());
    for (const auto& [id, head] : heads_) ids.push_back(id);
    return ids;
}

BnParams& Network::bn(int task_id, std::size_t l) {
    auto it = task_bn_.find(task_id);
    if (it == task_bn_.end()) fail(Errc::UnknownTask, "no BN parameters for task");
    return it->second[l];
}

const BnParams& Network::bn(int task_id, std::size_t l) const {
    auto it = task_bn_.find(task_id);
    if (it == task_bn_.end()) fail(Errc::UnknownTask, "no BN parameters for task");
    return it->second[l];
}

Head& Network::head(int task_id) {
    auto it = heads_.find(task_id);
    if (it == heads_.end()) fail(Errc::UnknownTask, "no head for task");
    return it->second;
}

const Head& Network::head(int task_id) const {
    auto it = heads_.find(task_id);
    if (it == heads_.end()) fail(Errc::UnknownTask, "no head for task");
    return it->second;
}

bool Network::operator==(const Network& other) const {
    if (layer_sizes_ != other.layer_sizes_ || classes_per_task_ != other.classes_per_task_ ||
        seed_ != other.seed_ || weights_.size() != other.weights_.size())
        return false;
    for (std::size_t l = 0; l < weights_.size(); ++l)
        if (!(weights_[l] == other.weights_[l])) return false;
    auto bn_eq = [](const BnParams& a, const BnParams& b) {
        return a.gamma == b.gamma && a.beta == b.beta && a.run_mean == b.run_mean &&
               a.run_var == b.run_var;
    };
    if (task_bn_.size() != other.task_bn_.size() || heads_.size() != other.heads_.size())
        return false;
    for (const auto& [id, set] : task_bn_) {
        auto it = other.task_bn_.find(id);
        if (it == other.task_bn_.end() || it->second.size() != set.size()) return false;
        for (std::size_t l = 0; l < set.size(); ++l)
            if (!bn_eq(set[l], it->second[l])) return false;
    }
    for (const auto& [id, head] : heads_) {
        auto it = other.heads_.find(id);
        if (it == other.heads_.end() || !(head.weight == it->second.weight) ||
            head.bias != it->second.bias)
            return false;
    }
    return true;
}

namespace {

// Shared forward path. When `stats_target` is non-null (train mode) the
// running statistics of the current task are updated in place.
ForwardTrace forward_impl(const Network& net, const DenseMatrix& batch, int task_id,
                          const MaskSet& mask, Mode mode, Network* stats_target) {
    if (batch.cols() != net.input_dim())
        fail(Errc::ShapeMismatch, "batch feature count does not match input size");
    if (!net.has_task(task_id)) fail(Errc::UnknownTask, "task has no BN set / head");
    check_mask_shape(net, mask);
    const std::size_t n = batch.rows();
    if (mode == Mode::train && n < 2)
        fail(Errc::SingularBatch, "train-mode batch statistics need at least 2 samples");
    if (n == 0) fail(Errc::ShapeMismatch, "empty batch");

    const auto& ops = kernels::active();
    const std::size_t num_layers = net.num_layers();

    ForwardTrace trace;
    trace.mode = mode;
    trace.task_id = task_id;
    trace.input = batch;
    trace.pre_bn.reserve(num_layers);
    trace.normalized.reserve(num_layers);
    trace.post_bn.reserve(num_layers);
    trace.activations.reserve(num_layers);
    trace.mean.reserve(num_layers);
    trace.var.reserve(num_layers);

    const DenseMatrix* x = &batch;
    for (std::size_t l = 0; l < num_layers; ++l) {
        const DenseMatrix& w = net.weight(l);
        const std::size_t width = w.cols();

        DenseMatrix z(n, width);
        ops.gemm_nn(x->data(), w.data(), z.data(), n, w.rows(), width);

        std::vector<double> mean(width), var(width);
        const BnParams& bn = net.bn(task_id, l);
        if (mode == Mode::train) {
            ops.colwise_sum(z.data(), mean.data(), n, width);
            const double inv_n = 1.0 / static_cast<double>(n);
            for (std::size_t j = 0; j < width; ++j) mean[j] *= inv_n;
            ops.colwise_sqdev_sum(z.data(), mean.data(), var.data(), n, width);
            for (std::size_t j = 0; j < width; ++j) var[j] *= inv_n;
            if (stats_target) {
                BnParams& live = stats_target->bn(task_id, l);
                for (std::size_t j = 0; j < width; ++j) {
                    live.run_mean[j] = (1.0 - kBnMomentum) * live.run_mean[j] + kBnMomentum * mean[j];
                    live.run_var[j] = (1.0 - kBnMomentum) * live.run_var[j] + kBnMomentum * var[j];
                }
            }
        } else {
            mean = bn.run_mean;
            var = bn.run_var;
        }

        std::vector<double> inv_std(width);
        for (std::size_t j = 0; j < width; ++j) inv_std[j] = 1.0 / std::sqrt(var[j] + kBnEpsilon);

        DenseMatrix normalized(n, width);
        DenseMatrix post_bn(n, width);
        ops.bn_normalize(z.data(), mean.data(), inv_std.data(), bn.gamma.data(), bn.beta.data(),
                         normalized.data(), post_bn.data(), n, width);

        DenseMatrix act(n, width);
        const auto& lane = mask.layer(l);
        for (std::size_t i = 0; i < n; ++i) {
            const double* src = post_bn.row(i);
            double* dst = act.row(i);
            for (std::size_t j = 0; j < width; ++j)
                dst[j] = (lane[j] && src[j] > 0.0) ? src[j] : 0.0;
        }

        trace.pre_bn.push_back(std::move(z));
        trace.normalized.push_back(std::move(normalized));
        trace.post_bn.push_back(std::move(post_bn));
        trace.activations.push_back(std::move(act));
        trace.mean.push_back(std::move(mean));
        trace.var.push_back(std::move(var));
        x = &trace.activations.back();
    }

    const Head& head = net.head(task_id);
    trace.logits = DenseMatrix(n, head.weight.cols());
    ops.gemm_nn(x->data(), head.weight.data(), trace.logits.data(), n, head.weight.rows(),
                head.weight.cols());
    for (std::size_t i = 0; i < n; ++i)
        ops.axpy(1.0, head.bias.data(), trace.logits.row(i), head.bias.size());
    return trace;
}

} // namespace

ForwardTrace forward(Network& net, const DenseMatrix& batch, int task_id, const MaskSet& mask,
                     Mode mode) {
    return forward_impl(net, batch, task_id, mask, mode, mode == Mode::train ? &net : nullptr);
}

ForwardTrace forward_eval(const Network& net, const DenseMatrix& batch, int task_id,
                          const MaskSet& mask) {
    return forward_impl(net, batch, task_id, mask, Mode::eval, nullptr);
}

std::pair<double, Gradients> backward(const Network& net, const ForwardTrace& trace,
                                      const std::vector<int>& labels, int task_id,
                                      const MaskSet& mask, double l1_scale) {
    if (trace.task_id != task_id) fail(Errc::UnknownTask, "trace belongs to a different task");
    if (trace.mode != Mode::train)
        fail(Errc::InvalidSpec, "backward needs a train-mode trace (batch statistics)");
    check_mask_shape(net, mask);
    const std::size_t n = trace.logits.rows();
    const std::size_t classes = trace.logits.cols();
    if (labels.size() != n) fail(Errc::ShapeMismatch, "label count does not match batch");
    for (int y : labels)
        if (y < 0 || static_cast<std::size_t>(y) >= classes)
            fail(Errc::ShapeMismatch, "label out of range");

    const auto& ops = kernels::active();
    const std::size_t num_layers = net.num_layers();
    const double inv_n = 1.0 / static_cast<double>(n);

    // Softmax cross-entropy, mean over the batch.
    double data_loss = 0.0;
    DenseMatrix dlogits(n, classes);
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = trace.logits.row(i);
        double m = row[0];
        for (std::size_t c = 1; c < classes; ++c) m = std::max(m, row[c]);
        double sum = 0.0;
        for (std::size_t c = 0; c < classes; ++c) sum += std::exp(row[c] - m);
        const double log_sum = std::log(sum);
        data_loss += (log_sum + m - row[labels[i]]);
        double* drow = dlogits.row(i);
        for (std::size_t c = 0; c < classes; ++c) {
            const double p = std::exp(row[c] - m) / sum;
            drow[c] = (p - (static_cast<std::size_t>(labels[i]) == c ? 1.0 : 0.0)) * inv_n;
        }
    }
    data_loss *= inv_n;

    double penalty = 0.0;
    if (l1_scale != 0.0)
        for (std::size_t l = 0; l < num_layers; ++l)
            for (double g : net.bn(task_id, l).gamma) penalty += std::fabs(g);
    const double loss = data_loss + l1_scale * penalty;

    Gradients grads;
    grads.weight.resize(num_layers);
    grads.bn_gamma.resize(num_layers);
    grads.bn_beta.resize(num_layers);

    const Head& head = net.head(task_id);
    const DenseMatrix& last_act = trace.activations.back();
    grads.head_weight = DenseMatrix(head.weight.rows(), head.weight.cols());
    ops.gemm_tn(last_act.data(), dlogits.data(), grads.head_weight.data(), n, last_act.cols(),
                classes);
    grads.head_bias.assign(classes, 0.0);
    ops.colwise_sum(dlogits.data(), grads.head_bias.data(), n, classes);

    // d(activations of last layer)
    DenseMatrix head_wt = head.weight.transposed();
    DenseMatrix dact(n, head.weight.rows());
    ops.gemm_nn(dlogits.data(), head_wt.data(), dact.data(), n, classes, head.weight.rows());

    for (std::size_t li = num_layers; li-- > 0;) {
        const std::size_t width = net.layer_sizes()[li + 1];
        const BnParams& bn = net.bn(task_id, li);
        const auto& lane = mask.layer(li);
        const DenseMatrix& post_bn = trace.post_bn[li];
        const DenseMatrix& xhat = trace.normalized[li];

        // Through mask and ReLU.
        DenseMatrix dpost(n, width);
        for (std::size_t i = 0; i < n; ++i) {
            const double* src = dact.row(i);
            const double* pb = post_bn.row(i);
            double* dst = dpost.row(i);
            for (std::size_t j = 0; j < width; ++j)
                dst[j] = (lane[j] && pb[j] > 0.0) ? src[j] : 0.0;
        }

        // BN backward through the batch-statistics path.
        std::vector<double>& dgamma = grads.bn_gamma[li];
        std::vector<double>& dbeta = grads.bn_beta[li];
        dgamma.assign(width, 0.0);
        dbeta.assign(width, 0.0);
        std::vector<double> sum_dxhat(width, 0.0);
        std::vector<double> sum_dxhat_xhat(width, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double* dy = dpost.row(i);
            const double* xh = xhat.row(i);
            for (std::size_t j = 0; j < width; ++j) {
                dbeta[j] += dy[j];
                dgamma[j] += dy[j] * xh[j];
                const double dxh = dy[j] * bn.gamma[j];
                sum_dxhat[j] += dxh;
                sum_dxhat_xhat[j] += dxh * xh[j];
            }
        }
        std::vector<double> inv_std(width);
        for (std::size_t j = 0; j < width; ++j)
            inv_std[j] = 1.0 / std::sqrt(trace.var[li][j] + kBnEpsilon);

        DenseMatrix dz(n, width);
        for (std::size_t i = 0; i < n; ++i) {
            const double* dy = dpost.row(i);
            const double* xh = xhat.row(i);
            double* dst = dz.row(i);
            for (std::size_t j = 0; j < width; ++j) {
                const double dxh = dy[j] * bn.gamma[j];
                dst[j] = inv_std[j] *
                         (dxh - inv_n * (sum_dxhat[j] + xh[j] * sum_dxhat_xhat[j]));
            }
        }

        if (l1_scale != 0.0) {
            for (std::size_t j = 0; j < width; ++j) {
                const double g = bn.gamma[j];
                if (g > 0.0) dgamma[j] += l1_scale;
                else if (g < 0.0) dgamma[j] -= l1_scale;
            }
        }

        const DenseMatrix& layer_in = (li == 0) ? trace.input : trace.activations[li - 1];
        grads.weight[li] = DenseMatrix(layer_in.cols(), width);
        ops.gemm_tn(layer_in.data(), dz.data(), grads.weight[li].data(), n, layer_in.cols(),
                    width);

        if (li > 0) {
            DenseMatrix wt = net.weight(li).transposed();
            DenseMatrix next(n, wt.cols());
            ops.gemm_nn(dz.data(), wt.data(), next.data(), n, wt.rows(), wt.cols());
            dact = std::move(next);
        }
    }

    return {loss, std::move(grads)};
}

void apply_update(Network& net, int task_id, const Gradients& grads, double lr,
                  UpdateScope scope) {
    const auto& ops = kernels::active();
    const std::size_t num_layers = net.num_layers();
    if (grads.weight.size() != num_layers || grads.bn_gamma.size() != num_layers ||
        grads.bn_beta.size() != num_layers)
        fail(Errc::ShapeMismatch, "gradient layer count does not match network");

    if (scope == UpdateScope::shared_and_task) {
        for (std::size_t l = 0; l < num_layers; ++l) {
            DenseMatrix& w = net.weight(l);
            if (!w.same_shape(grads.weight[l]))
                fail(Errc::ShapeMismatch, "weight gradient shape mismatch");
            ops.axpy(-lr, grads.weight[l].data(), w.data(), w.size());
        }
    }
    for (std::size_t l = 0; l < num_layers; ++l) {
        BnParams& bn = net.bn(task_id, l);
        if (grads.bn_gamma[l].size() != bn.gamma.size() ||
            grads.bn_beta[l].size() != bn.beta.size())
            fail(Errc::ShapeMismatch, "BN gradient shape mismatch");
        ops.axpy(-lr, grads.bn_gamma[l].data(), bn.gamma.data(), bn.gamma.size());
        ops.axpy(-lr, grads.bn_beta[l].data(), bn.beta.data(), bn.beta.size());
    }
    Head& head = net.head(task_id);
    if (!head.weight.same_shape(grads.head_weight) || head.bias.size() != grads.head_bias.size())
        fail(Errc::ShapeMismatch, "head gradient shape mismatch");
    ops.axpy(-lr, grads.head_weight.data(), head.weight.data(), head.weight.size());
    ops.axpy(-lr, grads.head_bias.data(), head.bias.data(), head.bias.size());
}

// --- checkpoint -------------------------------------------------------------

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
    put_u32(out, static_cast<std::uint32_t>(v));
    put_u32(out, static_cast<std::uint32_t>(v >> 32));
}

void put_f64(std::ostream& out, double v) {
    std::uint64_t bits;
    static_assert(sizeof(bits) == sizeof(v));
    std::memcpy(&bits, &v, sizeof(bits));
    put_u64(out, bits);
}

std::uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) fail(Errc::TruncatedFile, "checkpoint ended early");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::uint64_t get_u64(std::istream& in) {
    const std::uint64_t lo = get_u32(in);
    const std::uint64_t hi = get_u32(in);
    return lo | (hi << 32);
}

double get_f64(std::istream& in) {
    const std::uint64_t bits = get_u64(in);
    double v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
}

void put_vec(std::ostream& out, const std::vector<double>& v) {
    for (double x : v) put_f64(out, x);
}

void get_vec(std::istream& in, std::vector<double>& v) {
    for (double& x : v) x = get_f64(in);
}

} // namespace

void save_network(const Network& net, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(Errc::IoError, "cannot open checkpoint for writing: " + path);
    out.write(kMagic, 4);
    put_u32(out, kCheckpointVersion);
    put_u32(out, static_cast<std::uint32_t>(net.num_layers()));
    for (std::size_t s : net.layer_sizes()) put_u32(out, static_cast<std::uint32_t>(s));
    put_u32(out, static_cast<std::uint32_t>(net.classes_per_task()));
    put_u64(out, net.seed());
    const std::vector<int> tasks = net.task_ids();
    put_u32(out, static_cast<std::uint32_t>(tasks.size()));
    for (int id : tasks) put_u32(out, static_cast<std::uint32_t>(id));

    for (std::size_t l = 0; l < net.num_layers(); ++l)
        for (std::size_t i = 0; i < net.weight(l).size(); ++i) put_f64(out, net.weight(l).data()[i]);
    for (int id : tasks) {
        for (std::size_t l = 0; l < net.num_layers(); ++l) {
            const BnParams& bn = net.bn(id, l);
            put_vec(out, bn.gamma);
            put_vec(out, bn.beta);
            put_vec(out, bn.run_mean);
            put_vec(out, bn.run_var);
        }
    }
    for (int id : tasks) {
        const Head& head = net.head(id);
        for (std::size_t i = 0; i < head.weight.size(); ++i) put_f64(out, head.weight.data()[i]);
        put_vec(out, head.bias);
    }
    if (!out) fail(Errc::IoError, "checkpoint write failed: " + path);
}

Network load_network(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Errc::IoError, "cannot open checkpoint: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        fail(Errc::BadMagic, "not a network checkpoint: " + path);
    const std::uint32_t version = get_u32(in);
    if (version != kCheckpointVersion) fail(Errc::BadMagic, "unsupported checkpoint version");
    const std::uint32_t num_layers = get_u32(in);
    std::vector<std::size_t> sizes(num_layers + 1);
    for (auto& s : sizes) s = get_u32(in);
    const std::uint32_t classes = get_u32(in);
    const std::uint64_t seed = get_u64(in);
    const std::uint32_t num_tasks = get_u32(in);
    std::vector<int> tasks(num_tasks);
    for (auto& id : tasks) id = static_cast<int>(get_u32(in));

    Network net(sizes, classes, seed);
    for (std::size_t l = 0; l < net.num_layers(); ++l)
        for (std::size_t i = 0; i < net.weight(l).size(); ++i) net.weight(l).data()[i] = get_f64(in);
    for (int id : tasks) net.ensure_task(id);
    for (int id : tasks) {
        for (std::size_t l = 0; l < net.num_layers(); ++l) {
            BnParams& bn = net.bn(id, l);
            get_vec(in, bn.gamma);
            get_vec(in, bn.beta);
            get_vec(in, bn.run_mean);
            get_vec(in, bn.run_var);
            for (double v : bn.run_var)
                if (v < 0.0) fail(Errc::TruncatedFile, "corrupt checkpoint: negative running variance");
        }
    }
    for (int id : tasks) {
        Head& head = net.head(id);
        for (std::size_t i = 0; i < head.weight.size(); ++i) head.weight.data()[i] = get_f64(in);
        get_vec(in, head.bias);
    }
    return net;
}

} // namespace lrfr
