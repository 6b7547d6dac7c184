#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstring>
#include <functional>
#include <random>
#include <vector>

#include "lsg/errors.hpp"
#include "lsg/graph.hpp"
#include "lsg/tensor.hpp"

using lsg::Tensor;
namespace ad = lsg::ad;

namespace {

using GraphFn =
    std::function<ad::Value(ad::Tape&, const std::vector<ad::Value>&)>;

double eval_scalar(const GraphFn& fn, const std::vector<Tensor>& inputs) {
    ad::Tape tape;
    std::vector<ad::Value> leaves;
    leaves.reserve(inputs.size());
    for (const Tensor& t : inputs) leaves.push_back(tape.leaf(t, false));
    return fn(tape, leaves).val().item();
}

// Central finite differences, step 1e-5, checked with the relative
// comparator |ad - fd| / (|fd| + 1e-8) < 1e-4.
void check_against_fd(const GraphFn& fn, std::vector<Tensor> inputs,
                      double h = 1e-5, double tol = 1e-4) {
    ad::Tape tape;
    std::vector<ad::Value> leaves;
    for (const Tensor& t : inputs) leaves.push_back(tape.leaf(t, true));
    ad::Value loss = fn(tape, leaves);
    tape.backward(loss);

    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const Tensor& g = tape.grad(leaves[i]);
        REQUIRE(g.same_shape(inputs[i]));
        for (std::size_t j = 0; j < inputs[i].size(); ++j) {
            const double orig = inputs[i][j];
            inputs[i][j] = orig + h;
            const double fp = eval_scalar(fn, inputs);
            inputs[i][j] = orig - h;
            const double fm = eval_scalar(fn, inputs);
            inputs[i][j] = orig;
            const double fd = (fp - fm) / (2.0 * h);
            const double rel = std::fabs(g[j] - fd) / (std::fabs(fd) + 1e-8);
            CAPTURE(i);
            CAPTURE(j);
            CAPTURE(g[j]);
            CAPTURE(fd);
            CHECK(rel < tol);
        }
    }
}

Tensor random_tensor(std::vector<std::size_t> shape, std::mt19937_64& rng,
                     double lo = -2.0, double hi = 2.0) {
    Tensor t(std::move(shape));
    std::uniform_real_distribution<double> d(lo, hi);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = d(rng);
    return t;
}

} // namespace

TEST_CASE("matmul forward reference values") {
    ad::Tape t;
    auto eye = t.constant(Tensor({2, 2}, {1, 0, 0, 1}));
    auto a = t.constant(Tensor({2, 2}, {1, 2, 3, 4}));
    auto c = ad::matmul(eye, a);
    CHECK(c.val().vec() == std::vector<double>{1, 2, 3, 4});

    auto r = t.constant(Tensor({1, 2}, {1, 2}));
    auto col = t.constant(Tensor({2, 1}, {3, 4}));
    CHECK(ad::matmul(r, col).val().item() == 11.0);

    auto bad = t.constant(Tensor({3, 3}));
    CHECK_THROWS_AS(ad::matmul(a, bad), lsg::shape_error);
}

TEST_CASE("matmul gradient closed form and finite differences") {
    std::mt19937_64 rng(1);
    Tensor a = random_tensor({3, 4}, rng);
    Tensor b = random_tensor({4, 2}, rng);

    // d sum(a*b) / da == ones(3x2) . b^T
    ad::Tape t;
    auto av = t.leaf(a, true);
    auto bv = t.leaf(b, true);
    t.backward(ad::sum_all(ad::matmul(av, bv)));
    const Tensor& ga = t.grad(av);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t l = 0; l < 4; ++l) {
            double expect = 0.0;
            for (std::size_t j = 0; j < 2; ++j) expect += b.at2(l, j);
            CHECK(ga.at2(i, l) == doctest::Approx(expect).epsilon(1e-12));
        }

    check_against_fd(
        [](ad::Tape& tp, const std::vector<ad::Value>& xs) {
            return ad::sum_all(ad::matmul(xs[0], xs[1]));
        },
        {a, b});
}

TEST_CASE("elementwise ops vs finite differences") {
    std::mt19937_64 rng(2);
    const Tensor x = random_tensor({3, 5}, rng);
    const Tensor y = random_tensor({3, 5}, rng);
    const Tensor pos = random_tensor({3, 5}, rng, 0.3, 2.5);

    auto wrap1 = [](ad::Value (*op)(ad::Value)) {
        return [op](ad::Tape&, const std::vector<ad::Value>& xs) {
            return ad::sum_all(op(xs[0]));
        };
    };
    check_against_fd(wrap1(&ad::exp), {x});
    check_against_fd(wrap1(&ad::log), {pos});
    check_against_fd(wrap1(&ad::square), {x});
    check_against_fd(wrap1(&ad::softplus), {x});
    check_against_fd(wrap1(&ad::relu), {x});

    auto wrap2 = [](ad::Value (*op)(ad::Value, ad::Value)) {
        return [op](ad::Tape&, const std::vector<ad::Value>& xs) {
            return ad::sum_all(op(xs[0], xs[1]));
        };
    };
    check_against_fd(wrap2(&ad::add), {x, y});
    check_against_fd(wrap2(&ad::sub), {x, y});
    check_against_fd(wrap2(&ad::mul), {x, y});
    check_against_fd(wrap2(&ad::div), {x, pos});

    // weighted sums so the upstream gradient is not uniform
    const Tensor w = random_tensor({3, 5}, rng);
    check_against_fd(
        [&w](ad::Tape& tp, const std::vector<ad::Value>& xs) {
            return ad::sum_all(ad::mul(tp.constant(w), ad::softplus(xs[0])));
        },
        {x});
}

TEST_CASE("broadcast operands vs finite differences") {
    std::mt19937_64 rng(3);
    const Tensor m = random_tensor({4, 6}, rng);
    const Tensor row = random_tensor({6}, rng);
    const Tensor posrow = random_tensor({6}, rng, 0.4, 2.0);
    const Tensor scalar = Tensor::scalar(0.8);

    auto bsum = [](ad::Value (*op)(ad::Value, ad::Value)) {
        return [op](ad::Tape&, const std::vector<ad::Value>& xs) {
            return ad::sum_all(op(xs[0], xs[1]));
        };
    };
    check_against_fd(bsum(&ad::add), {m, row});
    check_against_fd(bsum(&ad::sub), {m, row});
    check_against_fd(bsum(&ad::mul), {m, row});
    check_against_fd(bsum(&ad::div), {m, posrow});
    check_against_fd(bsum(&ad::add), {row, m});
    check_against_fd(bsum(&ad::mul), {scalar, m});
    check_against_fd(bsum(&ad::sub), {m, scalar});

    ad::Tape t;
    auto a = t.constant(Tensor({2, 3}));
    auto b = t.constant(Tensor({3, 2}));
    CHECK_THROWS_AS(ad::add(a, b), lsg::shape_error);
}

TEST_CASE("softplus reference values") {
    ad::Tape t;
    auto x = t.constant(Tensor({3}, {0.0, 50.0, -1.0}));
    const Tensor& y = ad::softplus(x).val();
    CHECK(y[0] == doctest::Approx(0.693147).epsilon(1e-6));
    CHECK(std::fabs(y[1] - 50.0) < 1e-9);

    // d/dx softplus at 0 is 0.5
    check_against_fd(
        [](ad::Tape&, const std::vector<ad::Value>& xs) {
            return ad::sum_all(ad::softplus(xs[0]));
        },
        {Tensor::scalar(0.0)});
    ad::Tape t2;
    auto z = t2.leaf(Tensor::scalar(0.0), true);
    t2.backward(ad::softplus(z));
    CHECK(t2.grad(z)[0] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("reductions") {
    ad::Tape t;
    auto v = t.constant(Tensor({3}, {1, 2, 3}));
    CHECK(ad::mean_all(v).val().item() == 2.0);

    // empty axis list is the identity
    auto same = ad::sum(v, {});
    CHECK(&same.val() == &v.val());

    auto m = t.leaf(Tensor({2, 3}, {1, 2, 3, 4, 5, 6}), true);
    CHECK(ad::sum(m, {0}).val().vec() == std::vector<double>{5, 7, 9});
    CHECK(ad::sum(m, {1}).val().vec() == std::vector<double>{6, 15});
    CHECK(ad::mean(m, {0}).val().vec() == std::vector<double>{2.5, 3.5, 4.5});
    CHECK(ad::mean(m, {1}).val().vec() == std::vector<double>{2, 5});

    t.backward(ad::mean_all(m));
    for (std::size_t i = 0; i < 6; ++i) CHECK(t.grad(m)[i] == 1.0 / 6.0);

    CHECK_THROWS_AS(ad::sum(m, {2}), lsg::shape_error);

    std::mt19937_64 rng(4);
    const Tensor x = random_tensor({4, 3}, rng);
    const Tensor w0 = random_tensor({3}, rng);
    const Tensor w1 = random_tensor({4}, rng);
    check_against_fd(
        [&w0](ad::Tape& tp, const std::vector<ad::Value>& xs) {
            return ad::sum_all(ad::mul(tp.constant(w0), ad::mean(xs[0], {0})));
        },
        {x});
    check_against_fd(
        [&w1](ad::Tape& tp, const std::vector<ad::Value>& xs) {
            return ad::sum_all(ad::mul(tp.constant(w1), ad::sum(xs[0], {1})));
        },
        {x});
}

TEST_CASE("reshape, transpose, concat, split, slice") {
    std::mt19937_64 rng(5);
    const Tensor x = random_tensor({4, 6}, rng);

    ad::Tape t;
    auto xv = t.constant(x);
    auto flat = ad::reshape(xv, {24});
    auto back = ad::reshape(flat, {4, 6});
    CHECK(back.val().vec() == x.vec());
    CHECK_THROWS_AS(ad::reshape(xv, {5, 5}), lsg::shape_error);

    // split last-dim-4 into two last-dim-2 and concat restores the input
    const Tensor y = random_tensor({3, 4}, rng);
    auto yv = t.constant(y);
    auto parts = ad::split(yv, 1, {2, 2});
    REQUIRE(parts.size() == 2);
    CHECK(parts[0].val().shape() == std::vector<std::size_t>{3, 2});
    auto glued = ad::concat({parts[0], parts[1]}, 1);
    CHECK(glued.val().vec() == y.vec());
    CHECK_THROWS_AS(ad::split(yv, 1, {3, 2}), lsg::shape_error);

    // gradient flows through flatten unchanged
    const Tensor w = random_tensor({24}, rng);
    {
        ad::Tape t2;
        auto a = t2.leaf(x, true);
        auto loss = ad::sum_all(ad::mul(t2.constant(w), ad::reshape(a, {24})));
        t2.backward(loss);
        const Tensor& g = t2.grad(a);
        CHECK(g.shape() == x.shape());
        for (std::size_t i = 0; i < 24; ++i) CHECK(g[i] == w[i]);
    }
    check_against_fd(
        [&w](ad::Tape& tp, const std::vector<ad::Value>& xs) {
            return ad::sum_all(ad::mul(tp.constant(w), ad::reshape(xs[0], {24})));
        },
        {x});

    const Tensor wq = random_tensor({6, 4}, rng);
    check_against_fd(
        [&wq](ad::Tape& tp, const std::vector<ad::Value>& xs) {
            return ad::sum_all(ad::mul(tp.constant(wq), ad::transpose(xs[0])));
        },
        {x});
    check_against_fd(
        [](ad::Tape& tp, const std::vector<ad::Value>& xs) {
            auto parts = ad::split(xs[0], 1, {2, 1, 3});
            auto mixed = ad::concat({parts[2], parts[0]}, 1);
            return ad::sum_all(ad::square(mixed)) +
                   ad::sum_all(ad::softplus(parts[1]));
        },
        {x});
    check_against_fd(
        [](ad::Tape& tp, const std::vector<ad::Value>& xs) {
            return ad::sum_all(ad::square(ad::slice_rows(xs[0], 1, 3)));
        },
        {x});
}

TEST_CASE("backward basics and parameter gradients") {
    ad::Tape t;
    auto p = t.leaf(Tensor({4}, {0.3, -1.2, 2.0, 0.0}), true);
    t.backward(ad::sum_all(p));
    for (std::size_t i = 0; i < 4; ++i) CHECK(t.grad(p)[i] == 1.0);

    ad::Tape t2;
    auto q = t2.leaf(Tensor({2}, {1, 2}), true);
    t2.backward(ad::sum_all(ad::square(q)));
    CHECK(t2.grad(q).vec() == std::vector<double>{2, 4});

    // non-scalar loss rejected
    ad::Tape t3;
    auto r = t3.leaf(Tensor({2}, {1, 2}), true);
    auto s = ad::square(r);
    CHECK_THROWS_AS(t3.backward(s), lsg::contract_error);

    // unused parameter still gets a (zero) gradient entry
    ad::Tape t4;
    auto used = t4.leaf(Tensor({2}, {1, 2}), true);
    auto unused = t4.leaf(Tensor({3}, {1, 2, 3}), true);
    auto loss4 = ad::sum_all(used);
    t4.backward(loss4);
    CHECK(t4.grad(unused).vec() == std::vector<double>{0, 0, 0});
    // non-parameter nodes expose no gradient
    CHECK_THROWS_AS(t4.grad(loss4), lsg::contract_error);
}

TEST_CASE("gradient accumulation is additive and exact") {
    std::mt19937_64 rng(6);
    const Tensor x = random_tensor({5, 3}, rng);

    ad::Tape tf;
    auto xf = tf.leaf(x, true);
    tf.backward(ad::sum_all(ad::square(xf)));
    const Tensor gf = tf.grad(xf);

    ad::Tape tg;
    auto xg = tg.leaf(x, true);
    tg.backward(ad::sum_all(ad::softplus(xg)));
    const Tensor gg = tg.grad(xg);

    ad::Tape tc;
    auto xc = tc.leaf(x, true);
    tc.backward(ad::add(ad::sum_all(ad::square(xc)), ad::sum_all(ad::softplus(xc))));
    const Tensor& gc = tc.grad(xc);

    for (std::size_t i = 0; i < x.size(); ++i) {
        const double expect = gf[i] + gg[i];
        CHECK(gc[i] == expect);  // exact, not approximate
    }
}

TEST_CASE("diamond graph accumulates fan-out contributions") {
    // y = x*x + x  -> dy/dx = 2x + 1, x consumed by two ops
    ad::Tape t;
    auto x = t.leaf(Tensor::scalar(1.7), true);
    t.backward(ad::add(ad::mul(x, x), x));
    CHECK(t.grad(x)[0] == doctest::Approx(2 * 1.7 + 1).epsilon(1e-15));

    check_against_fd(
        [](ad::Tape&, const std::vector<ad::Value>& xs) {
            auto h = ad::softplus(xs[0]);
            return ad::add(ad::sum_all(ad::mul(h, h)), ad::sum_all(h));
        },
        {Tensor({3}, {0.2, -0.9, 1.1})});
}

TEST_CASE("forward and backward are deterministic bitwise") {
    std::mt19937_64 rng(7);
    const Tensor a = random_tensor({6, 8}, rng);
    const Tensor b = random_tensor({8, 4}, rng);

    auto run = [&](Tensor* grad_out) {
        ad::Tape t;
        auto av = t.leaf(a, true);
        auto bv = t.constant(b);
        auto y = ad::softplus(ad::matmul(av, bv));
        auto loss = ad::mean_all(ad::square(y));
        t.backward(loss);
        *grad_out = t.grad(av);
        return loss.val().item();
    };
    Tensor g1, g2;
    const double l1 = run(&g1);
    const double l2 = run(&g2);
    CHECK(std::memcmp(&l1, &l2, sizeof(double)) == 0);
    REQUIRE(g1.size() == g2.size());
    CHECK(std::memcmp(g1.data(), g2.data(), g1.size() * sizeof(double)) == 0);
}

TEST_CASE("domain and finiteness errors") {
    ad::Tape t;
    auto neg = t.constant(Tensor({2}, {1.0, -1.0}));
    CHECK_THROWS_AS(ad::log(neg), std::domain_error);
    auto zero = t.constant(Tensor({1}, {0.0}));
    auto one = t.constant(Tensor({1}, {1.0}));
    CHECK_THROWS_AS(ad::div(one, zero), std::domain_error);

    // overflow surfaces as an error instead of propagating Inf
    auto big = t.constant(Tensor({1}, {1000.0}));
    CHECK_THROWS_AS(ad::exp(big), lsg::numeric_error);
}
