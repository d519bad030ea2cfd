#include "lrfr/representation.hpp"

#include <cstring>
#include <fstream>
#include <utility>

#include "lrfr/errors.hpp"
#include "lrfr/kernels.hpp"
#include "lrfr/linalg.hpp"

namespace lrfr {

RepresentationTracker::RepresentationTracker(std::vector<std::size_t> input_dims) {
    cov_.reserve(input_dims.size());
    for (std::size_t dim : input_dims) cov_.emplace_back(dim, dim);
}

void RepresentationTracker::absorb_task(const std::vector<DenseMatrix>& reps, std::size_t n_t) {
    if (reps.size() != cov_.size())
        fail(Errc::ShapeMismatch, "representation list does not match tracked layers");
    for (std::size_t l = 0; l < reps.size(); ++l) {
        if (reps[l].rows() != cov_[l].rows() || reps[l].cols() != n_t)
            fail(Errc::ShapeMismatch, "representation shape does not match tracker");
    }
    if (n_t == 0) fail(Errc::ShapeMismatch, "cannot absorb an empty task");

    const double denom = static_cast<double>(seen_ + n_t);
    const double prior = static_cast<double>(seen_);
    for (std::size_t l = 0; l < reps.size(); ++l) {
        // F F^T computed as Y^T Y with Y = F^T; the kernel evaluates (i,j)
        // and (j,i) with identical operation sequences, so the result is
        // symmetric exactly.
        const DenseMatrix y = reps[l].transposed();
        DenseMatrix gram(cov_[l].rows(), cov_[l].cols());
        kernels::active().gemm_tn(y.data(), y.data(), gram.data(), y.rows(), y.cols(), y.cols());
        DenseMatrix& cov = cov_[l];
        for (std::size_t i = 0; i < cov.size(); ++i)
            cov.data()[i] = (prior * cov.data()[i] + gram.data()[i]) / denom;
    }
    seen_ += n_t;
    ++tasks_;
}

std::vector<LayerRankReport> RepresentationTracker::null_report(double rel_tol) const {
    std::vector<LayerRankReport> out;
    out.reserve(cov_.size());
    for (const DenseMatrix& cov : cov_) {
        const Spectrum s = sym_eig(cov);
        const std::size_t rank = numerical_rank(s, rel_tol);
        out.push_back({rank, cov.rows() - rank});
    }
    return out;
}

std::vector<DenseMatrix> collect_representations(const Network& net, const DenseMatrix& data,
                                                 int task_id, const MaskSet& mask,
                                                 std::size_t batch_rows) {
    if (!net.has_task(task_id)) fail(Errc::UnknownTask, "cannot collect for unknown task");
    if (batch_rows == 0) batch_rows = 1;
    const std::size_t n = data.rows();
    const std::size_t num_layers = net.num_layers();

    std::vector<DenseMatrix> reps;
    reps.reserve(num_layers);
    reps.emplace_back(net.input_dim(), n);
    for (std::size_t l = 0; l + 1 < num_layers; ++l)
        reps.emplace_back(net.layer_sizes()[l + 1], n);

    for (std::size_t start = 0; start < n; start += batch_rows) {
        const std::size_t count = std::min(batch_rows, n - start);
        DenseMatrix chunk(count, data.cols());
        for (std::size_t i = 0; i < count; ++i)
            for (std::size_t j = 0; j < data.cols(); ++j) chunk(i, j) = data(start + i, j);
        const ForwardTrace trace = forward_eval(net, chunk, task_id, mask);
        for (std::size_t i = 0; i < count; ++i) {
            for (std::size_t j = 0; j < data.cols(); ++j) reps[0](j, start + i) = chunk(i, j);
            for (std::size_t l = 1; l < num_layers; ++l) {
                const DenseMatrix& act = trace.activations[l - 1];
                for (std::size_t j = 0; j < act.cols(); ++j) reps[l](j, start + i) = act(i, j);
            }
        }
    }
    return reps;
}

// --- checkpoint -------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'L', 'R', 'F', 'R'};
constexpr std::uint32_t kVersion = 1;

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
    std::memcpy(&bits, &v, sizeof(bits));
    put_u64(out, bits);
}

std::uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) fail(Errc::TruncatedFile, "tracker checkpoint ended early");
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

} // namespace

void save_tracker(const RepresentationTracker& tracker, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(Errc::IoError, "cannot open tracker checkpoint for writing: " + path);
    out.write(kMagic, 4);
    put_u32(out, kVersion);
    put_u32(out, static_cast<std::uint32_t>(tracker.num_layers()));
    for (std::size_t l = 0; l < tracker.num_layers(); ++l)
        put_u32(out, static_cast<std::uint32_t>(tracker.covariance(l).rows()));
    put_u64(out, tracker.seen_samples());
    put_u64(out, tracker.absorbed_tasks());
    for (std::size_t l = 0; l < tracker.num_layers(); ++l) {
        const DenseMatrix& cov = tracker.covariance(l);
        for (std::size_t i = 0; i < cov.size(); ++i) put_f64(out, cov.data()[i]);
    }
    if (!out) fail(Errc::IoError, "tracker checkpoint write failed: " + path);
}

RepresentationTracker load_tracker(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Errc::IoError, "cannot open tracker checkpoint: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        fail(Errc::BadMagic, "not a tracker checkpoint: " + path);
    if (get_u32(in) != kVersion) fail(Errc::BadMagic, "unsupported tracker checkpoint version");
    const std::uint32_t layers = get_u32(in);
    std::vector<std::size_t> dims(layers);
    for (auto& d : dims) d = get_u32(in);
    const std::uint64_t seen = get_u64(in);
    const std::uint64_t tasks = get_u64(in);

    std::vector<DenseMatrix> cov;
    cov.reserve(layers);
    for (std::size_t l = 0; l < layers; ++l) {
        DenseMatrix m(dims[l], dims[l]);
        for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = get_f64(in);
        if (!m.all_finite()) fail(Errc::NotFinite, "corrupt tracker checkpoint");
        cov.push_back(std::move(m));
    }
    return RepresentationTracker::restore(std::move(cov), seen, tasks);
}

RepresentationTracker RepresentationTracker::restore(std::vector<DenseMatrix> cov,
                                                     std::size_t seen, std::size_t tasks) {
    RepresentationTracker tracker;
    tracker.cov_ = std::move(cov);
    tracker.seen_ = seen;
    tracker.tasks_ = tasks;
    return tracker;
}

} // namespace lrfr
