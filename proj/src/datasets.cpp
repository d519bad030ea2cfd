#include "lrfr/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>

#include "lrfr/errors.hpp"
#include "lrfr/rng.hpp"

namespace lrfr {
namespace {

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

std::vector<double> sphere_point(std::size_t dim, double radius, Rng& rng) {
    std::vector<double> v(dim);
    double norm_sq = 0.0;
    for (double& x : v) {
        x = rng.normal();
        norm_sq += x * x;
    }
    const double norm = std::sqrt(norm_sq);
    if (norm < 1e-300 || radius == 0.0) return std::vector<double>(dim, 0.0);
    for (double& x : v) x = x / norm * radius;
    return v;
}

void fill_split(DenseMatrix& x, std::vector<int>& y, std::size_t n, std::size_t dim,
                std::size_t classes, const std::vector<std::vector<double>>& means, Rng& rng) {
    x = DenseMatrix(n, dim);
    y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t label = i % classes;
        y[i] = static_cast<int>(label);
        for (std::size_t j = 0; j < dim; ++j) x(i, j) = means[label][j] + rng.normal();
    }
}

} // namespace

TaskSequence gen_gaussian_tasks(std::size_t dim, std::size_t classes_per_task, std::size_t T,
                                std::size_t n_train, std::size_t n_test, double separation,
                                std::uint64_t seed) {
    if (dim == 0 || classes_per_task == 0 || T == 0 || n_train == 0 || n_test == 0)
        fail(Errc::InvalidSpec, "gaussian task counts must be positive");
    if (separation < 0.0 || !std::isfinite(separation))
        fail(Errc::InvalidSpec, "separation must be finite and non-negative");

    TaskSequence seq;
    seq.tasks.reserve(T);
    for (std::size_t t = 1; t <= T; ++t) {
        Rng rng = Rng::derive(seed, {0x67617573 /* "gaus" */, t});
        std::vector<std::vector<double>> means;
        means.reserve(classes_per_task);
        for (std::size_t c = 0; c < classes_per_task; ++c)
            means.push_back(sphere_point(dim, separation, rng));

        TaskData task;
        task.task_id = static_cast<int>(t);
        task.num_classes = classes_per_task;
        fill_split(task.train_x, task.train_y, n_train, dim, classes_per_task, means, rng);
        fill_split(task.test_x, task.test_y, n_test, dim, classes_per_task, means, rng);
        seq.tasks.push_back(std::move(task));
    }

    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "gaussian(dim=%zu,classes=%zu,tasks=%zu,n_train=%zu,n_test=%zu,"
                  "separation=%.17g,seed=%llu)",
                  dim, classes_per_task, T, n_train, n_test, separation,
                  static_cast<unsigned long long>(seed));
    seq.provenance = buf;
    return seq;
}

TaskSequence gen_permuted_tasks(const TaskData& base, std::size_t T, std::uint64_t seed) {
    if (T == 0) fail(Errc::InvalidSpec, "permuted task count must be positive");
    const std::size_t dim = base.train_x.cols();

    TaskSequence seq;
    seq.tasks.reserve(T);
    for (std::size_t t = 1; t <= T; ++t) {
        std::vector<std::size_t> perm(dim);
        std::iota(perm.begin(), perm.end(), 0);
        if (t > 1) {
            Rng rng = Rng::derive(seed, {0x7065726d /* "perm" */, t});
            rng.shuffle(perm);
        }
        TaskData task;
        task.task_id = static_cast<int>(t);
        task.num_classes = base.num_classes;
        task.train_y = base.train_y;
        task.test_y = base.test_y;
        task.train_x = DenseMatrix(base.train_x.rows(), dim);
        task.test_x = DenseMatrix(base.test_x.rows(), dim);
        for (std::size_t i = 0; i < base.train_x.rows(); ++i)
            for (std::size_t j = 0; j < dim; ++j) task.train_x(i, j) = base.train_x(i, perm[j]);
        for (std::size_t i = 0; i < base.test_x.rows(); ++i)
            for (std::size_t j = 0; j < dim; ++j) task.test_x(i, j) = base.test_x(i, perm[j]);
        seq.tasks.push_back(std::move(task));
    }

    char buf[128];
    std::snprintf(buf, sizeof(buf), "permuted(dim=%zu,tasks=%zu,seed=%llu)", dim, T,
                  static_cast<unsigned long long>(seed));
    seq.provenance = buf;
    return seq;
}

// --- IDX loading ------------------------------------------------------------

namespace {

std::uint32_t read_be_u32(std::istream& in, const std::string& path) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) fail(Errc::TruncatedFile, "unexpected end of file: " + path);
    return (static_cast<std::uint32_t>(b[0]) << 24) | (static_cast<std::uint32_t>(b[1]) << 16) |
           (static_cast<std::uint32_t>(b[2]) << 8) | static_cast<std::uint32_t>(b[3]);
}

std::vector<unsigned char> read_bytes(std::istream& in, std::size_t count,
                                      const std::string& path) {
    std::vector<unsigned char> bytes(count);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(count));
    if (static_cast<std::size_t>(in.gcount()) != count)
        fail(Errc::TruncatedFile, "unexpected end of file: " + path);
    return bytes;
}

} // namespace

TaskSequence load_idx_split(const std::string& images_path, const std::string& labels_path,
                            std::size_t classes_per_task, std::size_t T, bool normalize) {
    if (classes_per_task == 0 || T == 0)
        fail(Errc::InvalidSpec, "classes_per_task and task count must be positive");

    std::ifstream images(images_path, std::ios::binary);
    if (!images) fail(Errc::IoError, "cannot open images file: " + images_path);
    if (read_be_u32(images, images_path) != kIdxImagesMagic)
        fail(Errc::BadMagic, "bad IDX image magic in " + images_path);
    const std::uint32_t n_images = read_be_u32(images, images_path);
    const std::uint32_t rows = read_be_u32(images, images_path);
    const std::uint32_t cols = read_be_u32(images, images_path);
    const std::size_t dim = static_cast<std::size_t>(rows) * cols;
    const auto pixel_bytes = read_bytes(images, static_cast<std::size_t>(n_images) * dim,
                                        images_path);

    std::ifstream labels(labels_path, std::ios::binary);
    if (!labels) fail(Errc::IoError, "cannot open labels file: " + labels_path);
    if (read_be_u32(labels, labels_path) != kIdxLabelsMagic)
        fail(Errc::BadMagic, "bad IDX label magic in " + labels_path);
    const std::uint32_t n_labels = read_be_u32(labels, labels_path);
    if (n_labels != n_images)
        fail(Errc::InvalidSpec, "image and label counts differ between IDX files");
    const auto label_bytes = read_bytes(labels, n_labels, labels_path);

    // Sample indices per class, ascending original label.
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < label_bytes.size(); ++i)
        by_class[static_cast<int>(label_bytes[i])].push_back(i);
    if (by_class.size() < classes_per_task * T)
        fail(Errc::InsufficientClasses, "not enough distinct classes for the requested split");

    std::vector<int> class_order;
    class_order.reserve(by_class.size());
    for (const auto& [label, idx] : by_class) class_order.push_back(label);

    const double scale = normalize ? 1.0 / 255.0 : 1.0;
    TaskSequence seq;
    seq.tasks.reserve(T);
    for (std::size_t t = 0; t < T; ++t) {
        std::vector<std::pair<std::size_t, int>> train_idx; // (sample, within-task label)
        std::vector<std::pair<std::size_t, int>> test_idx;
        for (std::size_t c = 0; c < classes_per_task; ++c) {
            const auto& members = by_class[class_order[t * classes_per_task + c]];
            const std::size_t held_out = members.size() / 6;
            const std::size_t train_count = members.size() - held_out;
            for (std::size_t i = 0; i < members.size(); ++i) {
                auto& target = (i < train_count) ? train_idx : test_idx;
                target.emplace_back(members[i], static_cast<int>(c));
            }
        }

        TaskData task;
        task.task_id = static_cast<int>(t + 1);
        task.num_classes = classes_per_task;
        task.train_x = DenseMatrix(train_idx.size(), dim);
        task.test_x = DenseMatrix(test_idx.size(), dim);
        task.train_y.reserve(train_idx.size());
        task.test_y.reserve(test_idx.size());
        for (std::size_t i = 0; i < train_idx.size(); ++i) {
            const auto [sample, label] = train_idx[i];
            task.train_y.push_back(label);
            const unsigned char* px = pixel_bytes.data() + sample * dim;
            for (std::size_t j = 0; j < dim; ++j) task.train_x(i, j) = px[j] * scale;
        }
        for (std::size_t i = 0; i < test_idx.size(); ++i) {
            const auto [sample, label] = test_idx[i];
            task.test_y.push_back(label);
            const unsigned char* px = pixel_bytes.data() + sample * dim;
            for (std::size_t j = 0; j < dim; ++j) task.test_x(i, j) = px[j] * scale;
        }
        seq.tasks.push_back(std::move(task));
    }

    char buf[512];
    std::snprintf(buf, sizeof(buf), "idx(images=%s,labels=%s,classes=%zu,tasks=%zu,normalize=%d)",
                  images_path.c_str(), labels_path.c_str(), classes_per_task, T,
                  normalize ? 1 : 0);
    seq.provenance = buf;
    return seq;
}

} // namespace lrfr
