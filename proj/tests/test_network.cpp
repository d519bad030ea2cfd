#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <vector>

#include "lrfr/errors.hpp"
#include "lrfr/network.hpp"
#include "lrfr/rng.hpp"

using namespace lrfr;

namespace {

DenseMatrix random_batch(std::size_t n, std::size_t dim, Rng& rng) {
    DenseMatrix x(n, dim);
    for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    return x;
}

std::vector<int> random_labels(std::size_t n, std::size_t classes, Rng& rng) {
    std::vector<int> y(n);
    for (int& v : y) v = static_cast<int>(rng.bounded(classes));
    return y;
}

double loss_at(Network net, const DenseMatrix& batch, const std::vector<int>& labels,
               int task_id, const MaskSet& mask, double mu) {
    const ForwardTrace trace = forward(net, batch, task_id, mask, Mode::train);
    return backward(net, trace, labels, task_id, mask, mu).first;
}

double relative_error(double fd, double an) {
    return std::fabs(fd - an) / std::max({1e-6, std::fabs(fd), std::fabs(an)});
}

} // namespace

TEST_SUITE("network") {

TEST_CASE("seeded initialization is deterministic and bounded") {
    const Network a({4, 8, 8}, 2, 7);
    const Network b({4, 8, 8}, 2, 7);
    CHECK(a == b);

    CHECK_THROWS_AS(Network({4}, 2, 0), Error);

    const Network c({2, 3}, 2, 0);
    const double bound = std::sqrt(6.0 / 5.0);
    for (std::size_t i = 0; i < c.weight(0).size(); ++i) {
        CHECK(c.weight(0).data()[i] > -bound);
        CHECK(c.weight(0).data()[i] < bound);
    }
}

TEST_CASE("train-mode BN normalizes to zero mean and unit variance") {
    Network net({4, 6}, 2, 3);
    net.ensure_task(1);
    const MaskSet mask = MaskSet::all_active(net.hidden_widths());
    Rng rng(11u);
    const DenseMatrix batch = random_batch(64, 4, rng);
    const ForwardTrace trace = forward(net, batch, 1, mask, Mode::train);

    const DenseMatrix& out = trace.post_bn[0]; // gamma=1, beta=0 at init
    for (std::size_t j = 0; j < out.cols(); ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < out.rows(); ++i) mean += out(i, j);
        mean /= static_cast<double>(out.rows());
        double var = 0.0;
        for (std::size_t i = 0; i < out.rows(); ++i)
            var += (out(i, j) - mean) * (out(i, j) - mean);
        var /= static_cast<double>(out.rows());
        CHECK(std::fabs(mean) < 1e-12);
        CHECK(std::fabs(var - 1.0) < 1e-3); // epsilon in the denominator
    }
}

TEST_CASE("masked neurons produce exactly zero activations") {
    Network net({4, 5, 3}, 2, 21);
    net.ensure_task(1);
    std::vector<std::vector<std::uint8_t>> lanes = {{1, 0, 1, 1, 0}, {1, 1, 1}};
    const MaskSet mask(lanes, 60.0);
    Rng rng(3u);
    for (int trial = 0; trial < 3; ++trial) {
        const DenseMatrix batch = random_batch(9, 4, rng);
        const ForwardTrace trace = forward(net, batch, 1, mask, Mode::train);
        for (std::size_t i = 0; i < trace.activations[0].rows(); ++i) {
            CHECK(trace.activations[0](i, 1) == 0.0);
            CHECK(trace.activations[0](i, 4) == 0.0);
        }
    }
}

TEST_CASE("train mode rejects single-sample batches") {
    Network net({4, 5}, 2, 1);
    net.ensure_task(1);
    const MaskSet mask = MaskSet::all_active(net.hidden_widths());
    Rng rng(5u);
    const DenseMatrix one = random_batch(1, 4, rng);
    CHECK_THROWS_WITH_AS(forward(net, one, 1, mask, Mode::train),
                         doctest::Contains("SingularBatch"), Error);
    CHECK_NOTHROW(forward_eval(net, one, 1, mask));
    CHECK_THROWS_WITH_AS(forward(net, one, 99, mask, Mode::eval), doctest::Contains("UnknownTask"),
                         Error);
}

TEST_CASE("uniform logits give ln(c) loss") {
    Network net({4, 5}, 3, 2);
    net.ensure_task(1);
    Head& head = net.head(1);
    for (std::size_t i = 0; i < head.weight.size(); ++i) head.weight.data()[i] = 0.0;
    const MaskSet mask = MaskSet::all_active(net.hidden_widths());
    Rng rng(17u);
    const DenseMatrix batch = random_batch(8, 4, rng);
    const std::vector<int> labels = random_labels(8, 3, rng);
    const double loss = loss_at(net, batch, labels, 1, mask, 0.0);
    CHECK(loss == doctest::Approx(std::log(3.0)).epsilon(1e-12));
}

TEST_CASE("the BN-scale L1 term adds mu times the scale count at gamma = 1") {
    // Two shared layers of width 8: 16 scales, all 1 at init.
    Network net({4, 8, 8}, 2, 9);
    net.ensure_task(1);
    const MaskSet mask = MaskSet::all_active(net.hidden_widths());
    Rng rng(23u);
    const DenseMatrix batch = random_batch(6, 4, rng);
    const std::vector<int> labels = random_labels(6, 2, rng);
    const double plain = loss_at(net, batch, labels, 1, mask, 0.0);
    const double penalized = loss_at(net, batch, labels, 1, mask, 0.1);
    CHECK(penalized - plain == doctest::Approx(1.6).epsilon(1e-12));
}

TEST_CASE("analytic gradients match central finite differences") {
    Network net({5, 6, 7}, 3, 31);
    net.ensure_task(1);
    const MaskSet mask = MaskSet::all_active(net.hidden_widths());
    Rng rng(41u);
    const DenseMatrix batch = random_batch(8, 5, rng);
    const std::vector<int> labels = random_labels(8, 3, rng);
    const double mu = 0.1;

    const ForwardTrace trace = forward(net, batch, 1, mask, Mode::train);
    const auto [loss, grads] = backward(net, trace, labels, 1, mask, mu);
    CHECK(std::isfinite(loss));

    const double h = 1e-5;
    double worst = 0.0;
    auto fd_check = [&](auto&& get_param, double analytic) {
        Network plus = net;
        Network minus = net;
        *get_param(plus) += h;
        *get_param(minus) -= h;
        const double fd = (loss_at(plus, batch, labels, 1, mask, mu) -
                           loss_at(minus, batch, labels, 1, mask, mu)) /
                          (2.0 * h);
        worst = std::max(worst, relative_error(fd, analytic));
    };

    for (std::size_t l = 0; l < net.num_layers(); ++l) {
        const DenseMatrix& w = net.weight(l);
        for (std::size_t idx = 0; idx < w.size(); idx += 7) {
            fd_check([&](Network& n) { return n.weight(l).data() + idx; },
                     grads.weight[l].data()[idx]);
        }
        for (std::size_t j = 0; j < net.bn(1, l).gamma.size(); j += 2) {
            fd_check([&, l, j](Network& n) { return &n.bn(1, l).gamma[j]; },
                     grads.bn_gamma[l][j]);
            fd_check([&, l, j](Network& n) { return &n.bn(1, l).beta[j]; }, grads.bn_beta[l][j]);
        }
    }
    for (std::size_t idx = 0; idx < net.head(1).weight.size(); idx += 3) {
        fd_check([&, idx](Network& n) { return n.head(1).weight.data() + idx; },
                 grads.head_weight.data()[idx]);
    }
    for (std::size_t j = 0; j < net.head(1).bias.size(); ++j) {
        fd_check([&, j](Network& n) { return &n.head(1).bias[j]; }, grads.head_bias[j]);
    }
    CHECK(worst <= 1e-5);
}

TEST_CASE("masked neurons receive exactly zero gradients") {
    Network net({4, 5, 4}, 2, 13);
    net.ensure_task(1);
    std::vector<std::vector<std::uint8_t>> lanes = {{1, 0, 1, 0, 1}, {1, 1, 1, 1}};
    const MaskSet mask(lanes, 60.0);
    Rng rng(7u);
    const DenseMatrix batch = random_batch(10, 4, rng);
    const std::vector<int> labels = random_labels(10, 2, rng);
    const ForwardTrace trace = forward(net, batch, 1, mask, Mode::train);
    const auto [loss, grads] = backward(net, trace, labels, 1, mask, 0.0);
    (void)loss;
    // Outgoing rows of the next layer's weight gradient.
    for (std::size_t j : {1u, 3u}) {
        for (std::size_t c = 0; c < grads.weight[1].cols(); ++c)
            CHECK(grads.weight[1](j, c) == 0.0);
        // Incoming column of the masked layer and its BN parameters.
        for (std::size_t r = 0; r < grads.weight[0].rows(); ++r)
            CHECK(grads.weight[0](r, j) == 0.0);
        CHECK(grads.bn_gamma[0][j] == 0.0);
        CHECK(grads.bn_beta[0][j] == 0.0);
    }
}

TEST_CASE("apply_update semantics") {
    Network net({3, 4}, 2, 3);
    net.ensure_task(1);
    const MaskSet mask = MaskSet::all_active(net.hidden_widths());
    Rng rng(13u);
    const DenseMatrix batch = random_batch(6, 3, rng);
    const std::vector<int> labels = random_labels(6, 2, rng);
    const ForwardTrace trace = forward(net, batch, 1, mask, Mode::train);
    const auto [loss, grads] = backward(net, trace, labels, 1, mask, 0.0);
    (void)loss;

    Network frozen = net;
    apply_update(frozen, 1, grads, 0.0, UpdateScope::shared_and_task);
    CHECK(frozen == net);

    Network task_only = net;
    apply_update(task_only, 1, grads, 0.1, UpdateScope::task_only);
    CHECK(task_only.weight(0) == net.weight(0));

    // Plain SGD arithmetic on a single weight.
    Network stepped = net;
    const double w0 = stepped.weight(0)(0, 0);
    const double g0 = grads.weight[0](0, 0);
    apply_update(stepped, 1, grads, 0.1, UpdateScope::shared_and_task);
    CHECK(stepped.weight(0)(0, 0) == doctest::Approx(w0 - 0.1 * g0).epsilon(1e-15));
}

TEST_CASE("eval-mode forward is pure") {
    Network net({4, 6, 5}, 2, 19);
    net.ensure_task(1);
    const MaskSet mask = MaskSet::all_active(net.hidden_widths());
    Rng rng(29u);
    const DenseMatrix batch = random_batch(5, 4, rng);
    const Network before = net;
    const ForwardTrace a = forward_eval(net, batch, 1, mask);
    const ForwardTrace b = forward_eval(net, batch, 1, mask);
    CHECK(a.logits == b.logits);
    CHECK(net == before);
}

TEST_CASE("checkpoint round-trips bit-exactly") {
    Network net({4, 6, 5}, 3, 101);
    net.ensure_task(1);
    net.ensure_task(2);
    const MaskSet mask = MaskSet::all_active(net.hidden_widths());
    Rng rng(31u);
    // A couple of updates so stats and weights are non-trivial.
    for (int i = 0; i < 3; ++i) {
        const DenseMatrix batch = random_batch(8, 4, rng);
        const std::vector<int> labels = random_labels(8, 3, rng);
        const ForwardTrace trace = forward(net, batch, 1, mask, Mode::train);
        auto [loss, grads] = backward(net, trace, labels, 1, mask, 0.05);
        (void)loss;
        apply_update(net, 1, grads, 0.02, UpdateScope::shared_and_task);
    }

    const std::string path =
        (std::filesystem::temp_directory_path() / "lrfr_net_ckpt.bin").string();
    save_network(net, path);
    const Network loaded = load_network(path);
    CHECK(loaded == net);

    // Corrupt the magic.
    {
        std::FILE* f = std::fopen(path.c_str(), "r+b");
        REQUIRE(f);
        std::fputc('X', f);
        std::fclose(f);
    }
    CHECK_THROWS_WITH_AS(load_network(path), doctest::Contains("BadMagic"), Error);

    // Rewrite, then truncate.
    save_network(net, path);
    std::filesystem::resize_file(path, std::filesystem::file_size(path) / 2);
    CHECK_THROWS_WITH_AS(load_network(path), doctest::Contains("TruncatedFile"), Error);
    std::filesystem::remove(path);
}

} // TEST_SUITE
