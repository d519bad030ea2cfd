#include <doctest.h>

#include <cmath>
#include <vector>

#include "lrfr/errors.hpp"
#include "lrfr/kernels.hpp"
#include "lrfr/linalg.hpp"
#include "lrfr/rng.hpp"
#include "lrfr/trainer.hpp"
#include "oracles.hpp"

using namespace lrfr;

namespace {

TrainConfig tiny_config(Method method, std::uint64_t seed = 5) {
    TrainConfig cfg;
    cfg.epochs = 4;
    cfg.batch_size = 10;
    cfg.lr = 0.05;
    cfg.lr_milestones = {3};
    cfg.pretrain_epochs = 3;
    cfg.seed = seed;
    cfg.method = method;
    return cfg;
}

TaskSequence tiny_sequence(std::size_t tasks = 2) {
    return gen_gaussian_tasks(6, 2, tasks, 60, 40, 3.0, 11);
}

Gradients make_grads(std::size_t layers, const std::vector<std::size_t>& sizes,
                     std::size_t classes, Rng& rng) {
    Gradients g;
    for (std::size_t l = 0; l < layers; ++l) {
        DenseMatrix w(sizes[l], sizes[l + 1]);
        for (std::size_t i = 0; i < w.size(); ++i) w.data()[i] = rng.normal();
        g.weight.push_back(std::move(w));
        g.bn_gamma.emplace_back(sizes[l + 1], 0.1);
        g.bn_beta.emplace_back(sizes[l + 1], -0.2);
    }
    g.head_weight = DenseMatrix(sizes.back(), classes);
    for (std::size_t i = 0; i < g.head_weight.size(); ++i) g.head_weight.data()[i] = rng.normal();
    g.head_bias.assign(classes, 0.3);
    return g;
}

} // namespace

TEST_SUITE("trainer") {

TEST_CASE("metric formulas") {
    AccuracyMatrix r;
    r.rows = {{0.9}, {0.8, 0.7}};
    const Metrics m = compute_metrics(r);
    CHECK(m.acc == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(m.bwt == doctest::Approx(-0.1).epsilon(1e-12));

    AccuracyMatrix steady;
    steady.rows = {{0.6}, {0.6, 0.9}, {0.6, 0.9, 0.8}};
    CHECK(compute_metrics(steady).bwt == doctest::Approx(0.0));

    AccuracyMatrix single;
    single.rows = {{0.9}};
    CHECK(compute_metrics(single).acc == doctest::Approx(0.9));
    CHECK(compute_metrics(single).bwt == 0.0);

    AccuracyMatrix broken;
    broken.rows = {{0.9}, {0.8}};
    CHECK_THROWS_WITH_AS(compute_metrics(broken), doctest::Contains("IncompleteMatrix"), Error);
}

TEST_CASE("project_gradients: identity, annihilation and pass-through") {
    Rng rng(31u);
    const std::vector<std::size_t> sizes = {4, 5, 3};
    const Gradients g = make_grads(2, sizes, 2, rng);

    std::vector<DenseMatrix> identities = {DenseMatrix::identity(4), DenseMatrix::identity(5)};
    const Gradients same = project_gradients(g, identities);
    for (std::size_t l = 0; l < 2; ++l) CHECK(same.weight[l] == g.weight[l]);
    CHECK(same.head_weight == g.head_weight);
    CHECK(same.bn_gamma == g.bn_gamma);

    std::vector<DenseMatrix> zeros = {DenseMatrix(4, 4), DenseMatrix(5, 5)};
    const Gradients killed = project_gradients(g, zeros);
    for (std::size_t l = 0; l < 2; ++l) CHECK(killed.weight[l].max_abs() == 0.0);
    CHECK(killed.head_weight == g.head_weight);

    std::vector<DenseMatrix> wrong = {DenseMatrix::identity(3), DenseMatrix::identity(5)};
    CHECK_THROWS_AS(project_gradients(g, wrong), Error);
}

TEST_CASE("projected updates stay in the tracked null space") {
    Rng rng(62u);
    const std::size_t a = 8;
    const DenseMatrix cov = oracles::random_psd(a, 3, rng);
    const Spectrum s = sym_eig(cov);
    const DenseMatrix p = null_projector(s, 1e-8);
    DenseMatrix g(a, 5);
    for (std::size_t i = 0; i < g.size(); ++i) g.data()[i] = rng.normal();
    const DenseMatrix leak = matmul(cov, matmul(p, g));
    CHECK(leak.max_abs() <= 1e-8 * s.eigenvalues.front() * static_cast<double>(a));
}

TEST_CASE("tasks must arrive in order") {
    const TaskSequence seq = tiny_sequence();
    const TrainConfig cfg = tiny_config(Method::finetune);
    ExperimentState state({6, 8, 8}, 2, cfg);
    CHECK_THROWS_WITH_AS(train_task(state, seq.tasks[1], cfg), doctest::Contains("OutOfOrderTask"),
                         Error);
}

TEST_CASE("a small run produces complete bookkeeping") {
    const TaskSequence seq = tiny_sequence(3);
    const TrainConfig cfg = tiny_config(Method::lrfr);
    const MethodRunResult result = run_method(seq, {6, 8, 8}, cfg);

    REQUIRE(result.accuracy.rows.size() == 3);
    for (std::size_t t = 0; t < 3; ++t) CHECK(result.accuracy.rows[t].size() == t + 1);
    REQUIRE(result.trajectory.size() == 3);
    for (const auto& row : result.trajectory) {
        REQUIRE(row.size() == 2);
        // Tracked dimensions are the layer input widths: 6 then 8.
        CHECK(row[0].rank + row[0].null_dim == 6);
        CHECK(row[1].rank + row[1].null_dim == 8);
    }
    // First task trains against an empty history.
    CHECK(result.trajectory[0][0].rank == 0);
    CHECK(result.trajectory[0][1].null_dim == 8);
    REQUIRE(result.final_report.size() == 2);
    REQUIRE(result.mask_indices.size() == 3);
    for (const auto& task_masks : result.mask_indices)
        for (const auto& layer : task_masks) CHECK(layer.size() == 4); // k=50% of 8
    REQUIRE(result.audit_per_past.size() == 3);
    CHECK(result.audit_per_past[0].empty());
    CHECK(result.audit_per_past[1].size() == 1);
    CHECK(result.audit_per_past[2].size() == 2);
}

TEST_CASE("projection keeps past-task logits put; fine-tuning does not promise it") {
    const TaskSequence seq = tiny_sequence(2);
    TrainConfig cfg = tiny_config(Method::lrfr);
    cfg.epochs = 6;
    const MethodRunResult projected = run_method(seq, {6, 8, 8}, cfg);
    CHECK(projected.audit_max[1] <= kStabilityAuditBudget);
}

TEST_CASE("fine-tuning forgets a disjoint first task; projection retains it") {
    const TaskSequence seq = gen_gaussian_tasks(16, 2, 2, 200, 200, 3.0, 77);
    TrainConfig cfg;
    cfg.epochs = 12;
    cfg.batch_size = 16;
    cfg.lr = 0.1;
    cfg.lr_milestones = {8};
    cfg.pretrain_epochs = 5;
    cfg.seed = 2;

    cfg.method = Method::finetune;
    const MethodRunResult drifted = run_method(seq, {16, 24, 24}, cfg);
    CHECK(drifted.accuracy.rows[1][0] < drifted.accuracy.rows[0][0]);
    CHECK(drifted.audit_max[1] > 1e-2);

    cfg.method = Method::lrfr;
    const MethodRunResult held = run_method(seq, {16, 24, 24}, cfg);
    CHECK(held.audit_max[1] <= kStabilityAuditBudget);
    CHECK(held.accuracy.rows[1][0] == doctest::Approx(held.accuracy.rows[0][0]).epsilon(1e-9));
}

TEST_CASE("an untouched network audits to exactly zero") {
    const TaskSequence seq = tiny_sequence(1);
    const TrainConfig cfg = tiny_config(Method::finetune);
    ExperimentState state({6, 8, 8}, 2, cfg);
    train_task(state, seq.tasks[0], cfg);
    const Network snapshot = state.net();
    CHECK(stability_audit(state, seq.tasks[0], snapshot) == 0.0);
}

TEST_CASE("all-correct predictions score exactly 1.0") {
    // Class means 10 sigma apart: the trained model classifies every test
    // sample correctly, so the accuracy fraction is exactly 1.
    const TaskSequence seq = gen_gaussian_tasks(8, 2, 1, 100, 200, 10.0, 6);
    TrainConfig cfg;
    cfg.epochs = 8;
    cfg.batch_size = 16;
    cfg.lr = 0.1;
    cfg.lr_milestones = {};
    cfg.pretrain_epochs = 3;
    cfg.seed = 9;
    cfg.method = Method::lrfr;
    const MethodRunResult run = run_method(seq, {8, 12, 12}, cfg);
    CHECK(run.accuracy.rows[0][0] == 1.0);
}

TEST_CASE("evaluation of an untrained head sits at chance level") {
    // Zero separation: labels carry no information, so any classifier lands
    // at 1/c up to binomial noise. lr = 0 keeps every parameter bit-exact.
    const TaskSequence seq = gen_gaussian_tasks(8, 4, 1, 100, 2000, 0.0, 3);
    TrainConfig cfg = tiny_config(Method::finetune);
    cfg.epochs = 1;
    cfg.lr = 0.0;
    ExperimentState state({8, 12}, 4, cfg);
    train_task(state, seq.tasks[0], cfg);

    const double acc = state.accuracy().rows[0][0];
    const double se = std::sqrt(0.25 * 0.75 / 2000.0);
    CHECK(std::fabs(acc - 0.25) <= 5.0 * se);

    const std::vector<double> again = evaluate(state, state.seen_tasks());
    CHECK(again[0] == acc);
}

TEST_CASE("pruning enlarges the null space over the full-network baseline") {
    const TaskSequence seq = gen_gaussian_tasks(6, 2, 2, 80, 40, 3.0, 19);
    TrainConfig pruned_cfg = tiny_config(Method::lrfr, 7);
    TrainConfig full_cfg = tiny_config(Method::nscl_full, 7);
    const MethodRunResult pruned = run_method(seq, {6, 12, 12}, pruned_cfg);
    const MethodRunResult full = run_method(seq, {6, 12, 12}, full_cfg);
    for (std::size_t l = 0; l < 2; ++l)
        CHECK(pruned.trajectory[1][l].null_dim >= full.trajectory[1][l].null_dim);
}

TEST_CASE("identical configs reproduce identical runs") {
    const TaskSequence seq = tiny_sequence(2);
    const TrainConfig cfg = tiny_config(Method::lrfr);
    const MethodRunResult a = run_method(seq, {6, 8, 8}, cfg);
    const MethodRunResult b = run_method(seq, {6, 8, 8}, cfg);
    CHECK(a.accuracy.rows == b.accuracy.rows);
    CHECK(a.audit_per_past == b.audit_per_past);
    CHECK(a.mask_indices == b.mask_indices);
    for (std::size_t t = 0; t < a.trajectory.size(); ++t)
        for (std::size_t l = 0; l < a.trajectory[t].size(); ++l) {
            CHECK(a.trajectory[t][l].rank == b.trajectory[t][l].rank);
            CHECK(a.trajectory[t][l].null_dim == b.trajectory[t][l].null_dim);
        }
}

TEST_CASE("training is bit-identical across kernel backends") {
    const kernels::Backend initial = kernels::active_backend();
    if (initial == kernels::Backend::scalar) {
        MESSAGE("only the scalar backend is available here");
        return;
    }
    const TaskSequence seq = tiny_sequence(2);
    const TrainConfig cfg = tiny_config(Method::lrfr);
    const MethodRunResult fast = run_method(seq, {6, 8, 8}, cfg);
    kernels::force_backend(kernels::Backend::scalar);
    const MethodRunResult slow = run_method(seq, {6, 8, 8}, cfg);
    kernels::force_backend(initial);
    CHECK(fast.accuracy.rows == slow.accuracy.rows);
    CHECK(fast.audit_per_past == slow.audit_per_past);
    CHECK(fast.mask_indices == slow.mask_indices);
}

TEST_CASE("step hooks observe the projection identities") {
    const TaskSequence seq = tiny_sequence(2);
    const TrainConfig cfg = tiny_config(Method::lrfr);
    std::vector<StepSample> samples;
    TrainHooks hooks;
    hooks.sample_every = 2;
    hooks.on_step = [&](const StepSample& s) { samples.push_back(s); };
    run_method(seq, {6, 8, 8}, cfg, &hooks);
    REQUIRE(!samples.empty());
    for (const StepSample& s : samples) {
        REQUIRE(s.inner.size() == 2);
        for (std::size_t l = 0; l < 2; ++l) {
            const double scale = std::max({1.0, s.proj_sq[l], std::fabs(s.inner[l])});
            CHECK(std::fabs(s.inner[l] - s.proj_sq[l]) <= 1e-9 * scale);
            CHECK(s.proj_sq[l] >= 0.0);
        }
    }
}

} // TEST_SUITE
