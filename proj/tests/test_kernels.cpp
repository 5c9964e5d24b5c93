#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "c2f/kernels.hpp"
#include "c2f/parallel.hpp"
#include "c2f/rng.hpp"

#include "test_util.hpp"

using namespace c2f;

namespace {

struct WorkerGuard {
    explicit WorkerGuard(int n) { set_max_workers(n); }
    ~WorkerGuard() { set_max_workers(1); }
};

std::vector<double> rand_vec(size_t n, Rng& rng) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.next_range(-2.0, 2.0);
    return v;
}

} // namespace

// The OpenMP kernels must reproduce the serial references bitwise: same
// per-element reduction order, threads only partition independent outputs.
TEST_CASE("openmp kernels match serial references bitwise") {
    WorkerGuard guard(4);
    Rng rng(99);
    for (int trial = 0; trial < 8; ++trial) {
        int H = 2 * static_cast<int>(rng.next_int(2, 8));
        int W = 2 * static_cast<int>(rng.next_int(2, 8));
        int Cin = static_cast<int>(rng.next_int(1, 6));
        int Cout = static_cast<int>(rng.next_int(1, 6));

        auto in = rand_vec(static_cast<size_t>(H) * W * Cin, rng);
        auto w = rand_vec(9ull * Cin * Cout, rng);
        auto b = rand_vec(static_cast<size_t>(Cout), rng);
        auto go = rand_vec(static_cast<size_t>(H) * W * Cout, rng);

        std::vector<double> a(static_cast<size_t>(H) * W * Cout), bb(a.size());
        kernels::ref::conv3x3_forward(in.data(), H, W, Cin, w.data(), b.data(), Cout, a.data());
        kernels::conv3x3_forward(in.data(), H, W, Cin, w.data(), b.data(), Cout, bb.data());
        CHECK(a == bb);

        std::vector<double> gi1(in.size()), gi2(in.size());
        kernels::ref::conv3x3_grad_input(w.data(), go.data(), H, W, Cin, Cout, gi1.data());
        kernels::conv3x3_grad_input(w.data(), go.data(), H, W, Cin, Cout, gi2.data());
        CHECK(gi1 == gi2);

        std::vector<double> gw1(w.size()), gw2(w.size()), gb1(b.size()), gb2(b.size());
        kernels::ref::conv3x3_grad_params(in.data(), go.data(), H, W, Cin, Cout, gw1.data(),
                                          gb1.data());
        kernels::conv3x3_grad_params(in.data(), go.data(), H, W, Cin, Cout, gw2.data(),
                                     gb2.data());
        CHECK(gw1 == gw2);
        CHECK(gb1 == gb2);

        std::vector<double> p1(static_cast<size_t>(H / 2) * (W / 2) * Cin);
        std::vector<double> p2(p1.size());
        kernels::ref::maxpool2x2_forward(in.data(), H, W, Cin, p1.data());
        kernels::maxpool2x2_forward(in.data(), H, W, Cin, p2.data());
        CHECK(p1 == p2);

        auto pgo = rand_vec(p1.size(), rng);
        std::vector<double> pg1(in.size()), pg2(in.size());
        kernels::ref::maxpool2x2_backward(in.data(), pgo.data(), H, W, Cin, pg1.data());
        kernels::maxpool2x2_backward(in.data(), pgo.data(), H, W, Cin, pg2.data());
        CHECK(pg1 == pg2);

        int In = static_cast<int>(rng.next_int(3, 300));
        int Out = static_cast<int>(rng.next_int(2, 200));
        auto din = rand_vec(static_cast<size_t>(In), rng);
        auto dw = rand_vec(static_cast<size_t>(In) * Out, rng);
        auto db = rand_vec(static_cast<size_t>(Out), rng);
        auto dgo = rand_vec(static_cast<size_t>(Out), rng);
        std::vector<double> o1(static_cast<size_t>(Out)), o2(o1.size());
        kernels::ref::dense_forward(din.data(), dw.data(), db.data(), In, Out, o1.data());
        kernels::dense_forward(din.data(), dw.data(), db.data(), In, Out, o2.data());
        CHECK(o1 == o2);

        std::vector<double> dgi1(static_cast<size_t>(In)), dgi2(dgi1.size());
        kernels::ref::dense_grad_input(dw.data(), dgo.data(), In, Out, dgi1.data());
        kernels::dense_grad_input(dw.data(), dgo.data(), In, Out, dgi2.data());
        CHECK(dgi1 == dgi2);

        std::vector<double> dgw1(dw.size()), dgw2(dw.size()), dgb1(db.size()), dgb2(db.size());
        kernels::ref::dense_grad_params(din.data(), dgo.data(), In, Out, dgw1.data(),
                                        dgb1.data());
        kernels::dense_grad_params(din.data(), dgo.data(), In, Out, dgw2.data(), dgb2.data());
        CHECK(dgw1 == dgw2);
        CHECK(dgb1 == dgb2);
    }
}

TEST_CASE("worker count does not change kernel results") {
    Rng rng(5);
    int H = 16, W = 16, Cin = 3, Cout = 7;
    auto in = rand_vec(static_cast<size_t>(H) * W * Cin, rng);
    auto w = rand_vec(9ull * Cin * Cout, rng);
    auto b = rand_vec(static_cast<size_t>(Cout), rng);
    std::vector<std::vector<double>> outs;
    for (int workers : {1, 2, 3, 8}) {
        WorkerGuard guard(workers);
        std::vector<double> out(static_cast<size_t>(H) * W * Cout);
        kernels::conv3x3_forward(in.data(), H, W, Cin, w.data(), b.data(), Cout, out.data());
        outs.push_back(std::move(out));
    }
    for (size_t i = 1; i < outs.size(); ++i) CHECK(outs[0] == outs[i]);
}
