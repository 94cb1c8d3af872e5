// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <stdexcept>
#include <string>

#include <cmath>

#include "test_instances.hpp"
#include "wtawp/model.hpp"
#include "wtawp/rng.hpp"

using namespace wtawp;
using wtawp::testing::fd_feature_gradient_check;
using wtawp::testing::fd_gradient_check;
using wtawp::testing::make_small_instance;

TEST_SUITE("model") {

TEST_CASE("gcn on a single node: A_hat = [[1]], relu gates the logit") {
    Graph g;
    g.n_nodes = 1;
    g.n_features = 1;
    g.n_classes = 1;
    g.adjacency = CsrMatrix(1, 1);
    g.features = DenseMatrix(1, 1);
    g.features(0, 0) = 1.0;
    g.labels = {0};
    const auto adj = normalize_adjacency(g);

    ModelSpec spec;
    spec.kind = ModelKind::Gcn2;
    spec.in_dim = 1;
    spec.hidden_dim = 1;
    spec.out_dim = 1;
    ModelParams p;
    p.layers = {DenseMatrix(1, 1), DenseMatrix(1, 1)};
    p.awp_mask = {0, 0};

    for (double w : {0.7, -0.7}) {
        p.layers[0](0, 0) = w;
        p.layers[1](0, 0) = 0.3;
        const auto out = forward(spec, p, adj, g.features, std::nullopt);
        CHECK(out.logits(0, 0) == doctest::Approx(w > 0.0 ? w * 0.3 : 0.0));
    }
}

TEST_CASE("ppnp: alpha = 1 and k = 0 reduce to the mlp head") {
    auto inst = make_small_instance(ModelKind::Ppnp, 5);
    inst.spec.ppnp_alpha = 1.0;
    const auto full = forward(inst.spec, inst.params, inst.adj, inst.xc, std::nullopt);
    auto spec0 = inst.spec;
    spec0.ppnp_k = 0;
    spec0.ppnp_alpha = 0.2;
    const auto none = forward(spec0, inst.params, inst.adj, inst.xc, std::nullopt);
    REQUIRE(full.logits.size() == none.logits.size());
    for (std::size_t i = 0; i < full.logits.size(); ++i) {
        CHECK(full.logits.data[i] == doctest::Approx(none.logits.data[i]));
    }
}

TEST_CASE("ppnp propagation is linear in its input") {
    auto inst = make_small_instance(ModelKind::Ppnp, 6);
    Rng rng(99);
    const std::size_t n = inst.graph.n_nodes;
    DenseMatrix h1(n, 3), h2(n, 3);
    for (double& v : h1.data) v = rng.normal();
    for (double& v : h2.data) v = rng.normal();
    const double a = 0.7, b = -1.3;
    DenseMatrix combo(n, 3);
    for (std::size_t i = 0; i < combo.size(); ++i)
        combo.data[i] = a * h1.data[i] + b * h2.data[i];

    const auto out1 = ppnp_propagate(inst.adj, h1, 4, 0.15);
    const auto out2 = ppnp_propagate(inst.adj, h2, 4, 0.15);
    const auto outc = ppnp_propagate(inst.adj, combo, 4, 0.15);
    for (std::size_t i = 0; i < combo.size(); ++i) {
        CHECK(outc.data[i] == doctest::Approx(a * out1.data[i] + b * out2.data[i]));
    }
}

TEST_CASE("uniform logits give ln K; zero-weight gcn gives ln K") {
    DenseMatrix logits(3, 7, 0.25);  // identical entries per row
    std::vector<int> labels{1, 3, 6};
    std::vector<std::size_t> set{0, 1, 2};
    CHECK(ce_loss_from_logits(logits, labels, set) == doctest::Approx(std::log(7.0)));

    auto inst = make_small_instance(ModelKind::Gcn2, 11);
    for (auto& w : inst.params.layers) w.fill(0.0);
    const double loss = loss_at(inst.spec, inst.params, inst.adj, inst.xc, inst.graph.labels,
                                inst.node_set, std::nullopt, 0.0);
    CHECK(loss == doctest::Approx(std::log(static_cast<double>(inst.spec.out_dim))));
}

TEST_CASE("softmax shift invariance through the loss") {
    Rng rng(31);
    DenseMatrix logits(4, 5);
    for (double& v : logits.data) v = rng.normal();
    std::vector<int> labels{0, 2, 4, 1};
    std::vector<std::size_t> set{0, 1, 2, 3};
    const double base = ce_loss_from_logits(logits, labels, set);
    DenseMatrix shifted = logits;
    for (std::size_t i = 0; i < shifted.rows; ++i)
        for (std::size_t j = 0; j < shifted.cols; ++j) shifted(i, j) += 17.5;
    CHECK(ce_loss_from_logits(shifted, labels, set) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("analytic weight gradients match central differences (all kinds)") {
    for (const auto kind : {ModelKind::Gcn2, ModelKind::Ppnp, ModelKind::Mlp3}) {
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            const auto inst = make_small_instance(kind, 100 + seed);
            const auto chk =
                fd_gradient_check(inst.spec, inst.params, inst.adj, inst.xc, inst.graph.labels,
                                  inst.node_set, std::nullopt, 0.0);
            INFO("kind=", static_cast<int>(kind), " seed=", seed,
                 " worst=", chk.worst_abs_diff, " allowed=", chk.worst_allowed);
            CHECK(chk.ok);
        }
    }
}

TEST_CASE("gradients include the weight-decay term") {
    const auto inst = make_small_instance(ModelKind::Gcn2, 200);
    const auto chk = fd_gradient_check(inst.spec, inst.params, inst.adj, inst.xc,
                                       inst.graph.labels, inst.node_set, std::nullopt, 0.05);
    CHECK(chk.ok);
}

TEST_CASE("fixed dropout mask: gradients still match finite differences") {
    for (const auto kind : {ModelKind::Gcn2, ModelKind::Ppnp}) {
        const auto inst = make_small_instance(kind, 300);
        const auto chk = fd_gradient_check(inst.spec, inst.params, inst.adj, inst.xc,
                                           inst.graph.labels, inst.node_set,
                                           std::optional<std::uint64_t>{77}, 0.0);
        INFO("kind=", static_cast<int>(kind), " worst=", chk.worst_abs_diff);
        CHECK(chk.ok);
    }
}

TEST_CASE("feature gradients match central differences") {
    for (const auto kind : {ModelKind::Gcn2, ModelKind::Ppnp, ModelKind::Mlp3}) {
        const auto inst = make_small_instance(kind, 400);
        const auto chk = fd_feature_gradient_check(inst.spec, inst.params, inst.adj,
                                                   inst.graph.features, inst.graph.labels,
                                                   inst.node_set);
        INFO("kind=", static_cast<int>(kind), " worst=", chk.worst_abs_diff);
        CHECK(chk.ok);
    }
}

TEST_CASE("adjacency-entry gradients match central differences") {
    for (const auto kind : {ModelKind::Gcn2, ModelKind::Ppnp}) {
        const auto inst = make_small_instance(kind, 500);
        const auto g = loss_and_input_grads(inst.spec, inst.params, inst.adj, inst.xc,
                                            inst.graph.labels, inst.node_set,
                                            /*want_features=*/false, /*want_adjacency=*/true);
        const double h = 1e-5;
        NormalizedAdjacency probe{inst.adj.matrix};
        for (std::size_t k = 0; k < probe.matrix.values.size(); ++k) {
            const double saved = probe.matrix.values[k];
            probe.matrix.values[k] = saved + h;
            const double up = loss_at(inst.spec, inst.params, probe, inst.xc, inst.graph.labels,
                                      inst.node_set, std::nullopt, 0.0);
            probe.matrix.values[k] = saved - h;
            const double down = loss_at(inst.spec, inst.params, probe, inst.xc, inst.graph.labels,
                                        inst.node_set, std::nullopt, 0.0);
            probe.matrix.values[k] = saved;
            const double fd = (up - down) / (2.0 * h);
            const double an = g.d_adjacency.values[k];
            CHECK(std::abs(an - fd) <= std::max(1e-8, 1e-5 * std::max(std::abs(an), std::abs(fd))));
        }
    }
}

TEST_CASE("loss_at matches loss_and_grad; evaluation mode is deterministic") {
    const auto inst = make_small_instance(ModelKind::Gcn2, 600);
    const auto lg = loss_and_grad(inst.spec, inst.params, inst.adj, inst.xc, inst.graph.labels,
                                  inst.node_set, std::optional<std::uint64_t>{5}, 0.0);
    const double la = loss_at(inst.spec, inst.params, inst.adj, inst.xc, inst.graph.labels,
                              inst.node_set, std::optional<std::uint64_t>{5}, 0.0);
    CHECK(lg.loss == la);

    const double e1 = loss_at(inst.spec, inst.params, inst.adj, inst.xc, inst.graph.labels,
                              inst.node_set, std::nullopt, 0.0);
    const double e2 = loss_at(inst.spec, inst.params, inst.adj, inst.xc, inst.graph.labels,
                              inst.node_set, std::nullopt, 0.0);
    CHECK(e1 == e2);
}

TEST_CASE("forward bit-matches across repeated calls with the same seed") {
    const auto inst = make_small_instance(ModelKind::Ppnp, 700);
    const auto a = forward(inst.spec, inst.params, inst.adj, inst.xc,
                           std::optional<std::uint64_t>{123});
    const auto b = forward(inst.spec, inst.params, inst.adj, inst.xc,
                           std::optional<std::uint64_t>{123});
    CHECK(a.logits.data == b.logits.data);
    const auto c = forward(inst.spec, inst.params, inst.adj, inst.xc,
                           std::optional<std::uint64_t>{124});
    CHECK(a.logits.data != c.logits.data);
}

TEST_CASE("accuracy: ties break toward the lowest class, counts match oracle") {
    DenseMatrix logits(3, 2, 0.0);  // all ties -> class 0
    std::vector<int> labels{0, 1, 0};
    std::vector<std::size_t> set{0, 1, 2};
    CHECK(accuracy(logits, labels, set) == doctest::Approx(2.0 / 3.0));

    Rng rng(8);
    DenseMatrix r(10, 4);
    for (double& v : r.data) v = rng.normal();
    std::vector<int> ry(10);
    for (auto& y : ry) y = static_cast<int>(rng.uniform_index(4));
    std::vector<std::size_t> rs{0, 2, 3, 5, 7, 9};
    std::size_t correct = 0;
    for (auto v : rs) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < 4; ++j)
            if (r(v, j) > r(v, best)) best = j;
        correct += static_cast<std::size_t>(static_cast<int>(best) == ry[v]);
    }
    CHECK(accuracy(r, ry, rs) ==
          doctest::Approx(static_cast<double>(correct) / static_cast<double>(rs.size())));
}

TEST_CASE("shape errors name the offending layer; empty node set rejected") {
    auto inst = make_small_instance(ModelKind::Gcn2, 800);
    inst.params.layers[1] = DenseMatrix(inst.spec.hidden_dim + 1, inst.spec.out_dim);
    try {
        (void)forward(inst.spec, inst.params, inst.adj, inst.xc, std::nullopt);
        FAIL("expected shape error");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("layer 2") != std::string::npos);
    }

    const auto good = make_small_instance(ModelKind::Gcn2, 801);
    const std::vector<std::size_t> empty;
    CHECK_THROWS_AS((void)loss_at(good.spec, good.params, good.adj, good.xc, good.graph.labels,
                                  empty, std::nullopt, 0.0),
                    std::invalid_argument);
}

TEST_CASE("glorot init: bounds and per-layer stream independence") {
    ModelSpec spec;
    spec.kind = ModelKind::Mlp3;
    spec.in_dim = 4;
    spec.hidden_dim = 5;
    spec.out_dim = 3;
    const auto p = init_params(spec, 42);
    REQUIRE(p.layers.size() == 3);
    const double b1 = std::sqrt(6.0 / (4 + 5));
    for (double v : p.layers[0].data) CHECK(std::abs(v) <= b1);
    const auto q = init_params(spec, 42);
    CHECK(p.layers[1].data == q.layers[1].data);
    const auto r = init_params(spec, 43);
    CHECK(p.layers[1].data != r.layers[1].data);
}

}  // TEST_SUITE
