#pragma once

#include <algorithm>
#include <cstring>
#include <vector>

#include "c2f/parallel.hpp"

// Low-level layer math on raw buffers. Every kernel has a plain serial
// reference under kernels::ref with the same per-element reduction order,
// so the OpenMP versions must match it bitwise for any worker count.
//
// Layouts: images (H, W, C) row-major channel-last; conv weights
// (3, 3, Cin, Cout); dense weights (In, Out).

namespace c2f::kernels {

namespace ref {

template <typename T>
void conv3x3_forward(const T* in, int H, int W, int Cin,
                     const T* w, const T* bias, int Cout, T* out) {
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            for (int co = 0; co < Cout; ++co) {
                T acc = bias[co];
                for (int ky = 0; ky < 3; ++ky) {
                    int yy = y + ky - 1;
                    if (yy < 0 || yy >= H) continue;
                    for (int kx = 0; kx < 3; ++kx) {
                        int xx = x + kx - 1;
                        if (xx < 0 || xx >= W) continue;
                        const T* ip = in + (static_cast<size_t>(yy) * W + xx) * Cin;
                        const T* wp = w + ((static_cast<size_t>(ky) * 3 + kx) * Cin) * Cout + co;
                        for (int ci = 0; ci < Cin; ++ci)
                            acc += ip[ci] * wp[static_cast<size_t>(ci) * Cout];
                    }
                }
                out[(static_cast<size_t>(y) * W + x) * Cout + co] = acc;
            }
}

template <typename T>
void conv3x3_grad_input(const T* w, const T* go, int H, int W, int Cin, int Cout, T* gin) {
    for (int iy = 0; iy < H; ++iy)
        for (int ix = 0; ix < W; ++ix)
            for (int ci = 0; ci < Cin; ++ci) {
                T acc = 0;
                for (int ky = 0; ky < 3; ++ky) {
                    int y = iy - (ky - 1);
                    if (y < 0 || y >= H) continue;
                    for (int kx = 0; kx < 3; ++kx) {
                        int x = ix - (kx - 1);
                        if (x < 0 || x >= W) continue;
                        const T* gp = go + (static_cast<size_t>(y) * W + x) * Cout;
                        const T* wp = w + ((static_cast<size_t>(ky) * 3 + kx) * Cin + ci) * Cout;
                        for (int co = 0; co < Cout; ++co)
                            acc += wp[co] * gp[co];
                    }
                }
                gin[(static_cast<size_t>(iy) * W + ix) * Cin + ci] = acc;
            }
}

template <typename T>
void conv3x3_grad_params(const T* in, const T* go, int H, int W, int Cin, int Cout,
                         T* gw, T* gb) {
    for (int kk = 0; kk < 9; ++kk) {
        int ky = kk / 3, kx = kk % 3;
        for (int ci = 0; ci < Cin; ++ci)
            for (int co = 0; co < Cout; ++co) {
                T acc = 0;
                for (int y = 0; y < H; ++y) {
                    int yy = y + ky - 1;
                    if (yy < 0 || yy >= H) continue;
                    for (int x = 0; x < W; ++x) {
                        int xx = x + kx - 1;
                        if (xx < 0 || xx >= W) continue;
                        acc += in[(static_cast<size_t>(yy) * W + xx) * Cin + ci] *
                               go[(static_cast<size_t>(y) * W + x) * Cout + co];
                    }
                }
                gw[(static_cast<size_t>(kk) * Cin + ci) * Cout + co] = acc;
            }
    }
    for (int co = 0; co < Cout; ++co) {
        T acc = 0;
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x)
                acc += go[(static_cast<size_t>(y) * W + x) * Cout + co];
        gb[co] = acc;
    }
}

template <typename T>
void maxpool2x2_forward(const T* in, int H, int W, int C, T* out) {
    int Ho = H / 2, Wo = W / 2;
    for (int y = 0; y < Ho; ++y)
        for (int x = 0; x < Wo; ++x)
            for (int c = 0; c < C; ++c) {
                T best = in[(static_cast<size_t>(2 * y) * W + 2 * x) * C + c];
                for (int dy = 0; dy < 2; ++dy)
                    for (int dx = 0; dx < 2; ++dx) {
                        T v = in[(static_cast<size_t>(2 * y + dy) * W + 2 * x + dx) * C + c];
                        if (v > best) best = v;
                    }
                out[(static_cast<size_t>(y) * Wo + x) * C + c] = best;
            }
}

// Gradient goes to the first max in window scan order; gin must be zeroed.
template <typename T>
void maxpool2x2_backward(const T* in, const T* go, int H, int W, int C, T* gin) {
    int Ho = H / 2, Wo = W / 2;
    for (int y = 0; y < Ho; ++y)
        for (int x = 0; x < Wo; ++x)
            for (int c = 0; c < C; ++c) {
                int by = 2 * y, bx = 2 * x;
                T best = in[(static_cast<size_t>(by) * W + bx) * C + c];
                for (int dy = 0; dy < 2; ++dy)
                    for (int dx = 0; dx < 2; ++dx) {
                        T v = in[(static_cast<size_t>(2 * y + dy) * W + 2 * x + dx) * C + c];
                        if (v > best) { best = v; by = 2 * y + dy; bx = 2 * x + dx; }
                    }
                gin[(static_cast<size_t>(by) * W + bx) * C + c] +=
                    go[(static_cast<size_t>(y) * Wo + x) * C + c];
            }
}

template <typename T>
void dense_forward(const T* in, const T* w, const T* b, int In, int Out, T* out) {
    for (int o = 0; o < Out; ++o) {
        T acc = b[o];
        for (int i = 0; i < In; ++i)
            acc += in[i] * w[static_cast<size_t>(i) * Out + o];
        out[o] = acc;
    }
}

template <typename T>
void dense_grad_input(const T* w, const T* go, int In, int Out, T* gin) {
    for (int i = 0; i < In; ++i) {
        T acc = 0;
        const T* wp = w + static_cast<size_t>(i) * Out;
        for (int o = 0; o < Out; ++o)
            acc += wp[o] * go[o];
        gin[i] = acc;
    }
}

template <typename T>
void dense_grad_params(const T* in, const T* go, int In, int Out, T* gw, T* gb) {
    for (int i = 0; i < In; ++i) {
        T v = in[i];
        T* gp = gw + static_cast<size_t>(i) * Out;
        for (int o = 0; o < Out; ++o)
            gp[o] = v * go[o];
    }
    for (int o = 0; o < Out; ++o)
        gb[o] = go[o];
}

} // namespace ref

template <typename T>
void conv3x3_forward(const T* in, int H, int W, int Cin,
                     const T* w, const T* bias, int Cout, T* out) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(worker_count()) if (par_enabled())
#endif
    for (int y = 0; y < H; ++y) {
        std::vector<T> acc(static_cast<size_t>(Cout));
        for (int x = 0; x < W; ++x) {
            for (int co = 0; co < Cout; ++co) acc[co] = bias[co];
            for (int ky = 0; ky < 3; ++ky) {
                int yy = y + ky - 1;
                if (yy < 0 || yy >= H) continue;
                for (int kx = 0; kx < 3; ++kx) {
                    int xx = x + kx - 1;
                    if (xx < 0 || xx >= W) continue;
                    const T* ip = in + (static_cast<size_t>(yy) * W + xx) * Cin;
                    const T* wbase = w + (static_cast<size_t>(ky) * 3 + kx) * Cin * Cout;
                    for (int ci = 0; ci < Cin; ++ci) {
                        T v = ip[ci];
                        const T* wp = wbase + static_cast<size_t>(ci) * Cout;
                        for (int co = 0; co < Cout; ++co)
                            acc[co] += v * wp[co];
                    }
                }
            }
            std::copy(acc.begin(), acc.end(),
                      out + (static_cast<size_t>(y) * W + x) * Cout);
        }
    }
}

template <typename T>
void conv3x3_grad_input(const T* w, const T* go, int H, int W, int Cin, int Cout, T* gin) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(worker_count()) if (par_enabled())
#endif
    for (int iy = 0; iy < H; ++iy)
        for (int ix = 0; ix < W; ++ix) {
            T* gp_out = gin + (static_cast<size_t>(iy) * W + ix) * Cin;
            for (int ci = 0; ci < Cin; ++ci) {
                T acc = 0;
                for (int ky = 0; ky < 3; ++ky) {
                    int y = iy - (ky - 1);
                    if (y < 0 || y >= H) continue;
                    for (int kx = 0; kx < 3; ++kx) {
                        int x = ix - (kx - 1);
                        if (x < 0 || x >= W) continue;
                        const T* gp = go + (static_cast<size_t>(y) * W + x) * Cout;
                        const T* wp = w + ((static_cast<size_t>(ky) * 3 + kx) * Cin + ci) * Cout;
                        for (int co = 0; co < Cout; ++co)
                            acc += wp[co] * gp[co];
                    }
                }
                gp_out[ci] = acc;
            }
        }
}

// Each (ky,kx) weight plane is owned by one task, so the accumulation order
// over (y,x) matches the serial reference exactly.
template <typename T>
void conv3x3_grad_params(const T* in, const T* go, int H, int W, int Cin, int Cout,
                         T* gw, T* gb) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(worker_count()) if (par_enabled())
#endif
    for (int kk = 0; kk < 9; ++kk) {
        int ky = kk / 3, kx = kk % 3;
        T* plane = gw + static_cast<size_t>(kk) * Cin * Cout;
        std::memset(plane, 0, sizeof(T) * static_cast<size_t>(Cin) * Cout);
        for (int y = 0; y < H; ++y) {
            int yy = y + ky - 1;
            if (yy < 0 || yy >= H) continue;
            for (int x = 0; x < W; ++x) {
                int xx = x + kx - 1;
                if (xx < 0 || xx >= W) continue;
                const T* ip = in + (static_cast<size_t>(yy) * W + xx) * Cin;
                const T* gp = go + (static_cast<size_t>(y) * W + x) * Cout;
                for (int ci = 0; ci < Cin; ++ci) {
                    T v = ip[ci];
                    T* acc = plane + static_cast<size_t>(ci) * Cout;
                    for (int co = 0; co < Cout; ++co)
                        acc[co] += v * gp[co];
                }
            }
        }
    }
    for (int co = 0; co < Cout; ++co) {
        T acc = 0;
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x)
                acc += go[(static_cast<size_t>(y) * W + x) * Cout + co];
        gb[co] = acc;
    }
}

template <typename T>
void maxpool2x2_forward(const T* in, int H, int W, int C, T* out) {
    int Ho = H / 2, Wo = W / 2;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(worker_count()) if (par_enabled())
#endif
    for (int y = 0; y < Ho; ++y)
        for (int x = 0; x < Wo; ++x) {
            const T* r0 = in + (static_cast<size_t>(2 * y) * W + 2 * x) * C;
            const T* r1 = in + (static_cast<size_t>(2 * y + 1) * W + 2 * x) * C;
            T* op = out + (static_cast<size_t>(y) * Wo + x) * C;
            for (int c = 0; c < C; ++c) {
                T best = r0[c];
                if (r0[C + c] > best) best = r0[C + c];
                if (r1[c] > best) best = r1[c];
                if (r1[C + c] > best) best = r1[C + c];
                op[c] = best;
            }
        }
}

template <typename T>
void maxpool2x2_backward(const T* in, const T* go, int H, int W, int C, T* gin) {
    int Ho = H / 2, Wo = W / 2;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(worker_count()) if (par_enabled())
#endif
    for (int y = 0; y < Ho; ++y)
        for (int x = 0; x < Wo; ++x)
            for (int c = 0; c < C; ++c) {
                int by = 2 * y, bx = 2 * x;
                T best = in[(static_cast<size_t>(by) * W + bx) * C + c];
                for (int dy = 0; dy < 2; ++dy)
                    for (int dx = 0; dx < 2; ++dx) {
                        T v = in[(static_cast<size_t>(2 * y + dy) * W + 2 * x + dx) * C + c];
                        if (v > best) { best = v; by = 2 * y + dy; bx = 2 * x + dx; }
                    }
                gin[(static_cast<size_t>(by) * W + bx) * C + c] +=
                    go[(static_cast<size_t>(y) * Wo + x) * C + c];
            }
}

template <typename T>
void dense_forward(const T* in, const T* w, const T* b, int In, int Out, T* out) {
    constexpr int kBlock = 128;
    int nblk = (Out + kBlock - 1) / kBlock;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(worker_count()) if (par_enabled() && nblk > 1)
#endif
    for (int blk = 0; blk < nblk; ++blk) {
        int o0 = blk * kBlock;
        int o1 = std::min(Out, o0 + kBlock);
        for (int o = o0; o < o1; ++o) out[o] = b[o];
        for (int i = 0; i < In; ++i) {
            T v = in[i];
            const T* wp = w + static_cast<size_t>(i) * Out;
            for (int o = o0; o < o1; ++o)
                out[o] += v * wp[o];
        }
    }
}

template <typename T>
void dense_grad_input(const T* w, const T* go, int In, int Out, T* gin) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(worker_count()) if (par_enabled())
#endif
    for (int i = 0; i < In; ++i) {
        T acc = 0;
        const T* wp = w + static_cast<size_t>(i) * Out;
        for (int o = 0; o < Out; ++o)
            acc += wp[o] * go[o];
        gin[i] = acc;
    }
}

template <typename T>
void dense_grad_params(const T* in, const T* go, int In, int Out, T* gw, T* gb) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(worker_count()) if (par_enabled())
#endif
    for (int i = 0; i < In; ++i) {
        T v = in[i];
        T* gp = gw + static_cast<size_t>(i) * Out;
        for (int o = 0; o < Out; ++o)
            gp[o] = v * go[o];
    }
    for (int o = 0; o < Out; ++o)
        gb[o] = go[o];
}

} // namespace c2f::kernels
