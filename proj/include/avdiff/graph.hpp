#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "avdiff/errors.hpp"
#include "avdiff/tensor.hpp"

namespace avdiff {

// Padding for conv3d, one symmetric zero-pad amount per convolved axis.
struct Pad3 {
    int t = 0;
    int h = 0;
    int w = 0;
};

// Zero-pads a [d0, c, h, w] volume on the d0/h/w axes.
inline void detail_pad4(const float* src, int F, int C, int H, int W, Pad3 pad,
                        std::vector<float>& out) {
    const int FP = F + 2 * pad.t, HP = H + 2 * pad.h, WP = W + 2 * pad.w;
    out.assign(static_cast<std::size_t>(FP) * C * HP * WP, 0.0f);
    for (int t = 0; t < F; ++t) {
        for (int c = 0; c < C; ++c) {
            for (int i = 0; i < H; ++i) {
                std::copy_n(src + ((static_cast<std::size_t>(t) * C + c) * H + i) * W, W,
                            out.data() +
                                ((static_cast<std::size_t>(t + pad.t) * C + c) * HP +
                                 (i + pad.h)) *
                                    WP +
                                pad.w);
            }
        }
    }
}

// Tape-based reverse-mode graph, rebuilt per step. Ops append a backward
// closure when any input requires grad; backward() runs the tape once in
// reverse execution order. Single-threaded; identical inputs give
// bit-identical outputs. Reductions and matmul/conv inner products accumulate
// in double.
class Graph {
public:
    Tensor matmul(const Tensor& a, const Tensor& b) {
        if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
            throw DimError("matmul shapes " + shape_str(a.shape()) + " x " +
                           shape_str(b.shape()));
        }
        const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
        Tensor y(Shape{m, n});
        const float* pa = a.data();
        const float* pb = b.data();
        float* py = y.data();
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < n; ++j) {
                double acc = 0.0;
                for (int l = 0; l < k; ++l) {
                    acc += static_cast<double>(pa[i * k + l]) * pb[l * n + j];
                }
                py[i * n + j] = static_cast<float>(acc);
            }
        }
        check_finite(y, "matmul");
        record(y, {a, b}, [a, b, y, m, k, n]() mutable {
            const float* dy = y.grad().data();
            if (a.requires_grad()) {
                float* da = a.grad().data();
                const float* pb = b.data();
                for (int i = 0; i < m; ++i) {
                    for (int l = 0; l < k; ++l) {
                        double acc = 0.0;
                        for (int j = 0; j < n; ++j) {
                            acc += static_cast<double>(dy[i * n + j]) * pb[l * n + j];
                        }
                        da[i * k + l] += static_cast<float>(acc);
                    }
                }
            }
            if (b.requires_grad()) {
                float* db = b.grad().data();
                const float* pa = a.data();
                for (int l = 0; l < k; ++l) {
                    for (int j = 0; j < n; ++j) {
                        double acc = 0.0;
                        for (int i = 0; i < m; ++i) {
                            acc += static_cast<double>(pa[i * k + l]) * dy[i * n + j];
                        }
                        db[l * n + j] += static_cast<float>(acc);
                    }
                }
            }
        });
        return y;
    }

    // y = x.w + bias, x:[m,k] w:[k,n] bias:[n].
    Tensor linear(const Tensor& x, const Tensor& w, const Tensor& bias) {
        if (bias.rank() != 1 || w.rank() != 2 || bias.dim(0) != w.dim(1)) {
            throw DimError("linear bias shape " + shape_str(bias.shape()) + " vs weight " +
                           shape_str(w.shape()));
        }
        Tensor y = matmul(x, w);
        const int m = y.dim(0), n = y.dim(1);
        float* py = y.data();
        const float* pb = bias.data();
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < n; ++j) py[i * n + j] += pb[j];
        }
        check_finite(y, "linear");
        record(y, {bias}, [bias, y, m, n]() mutable {
            if (!bias.requires_grad()) return;
            const float* dy = y.grad().data();
            float* db = bias.grad().data();
            for (int j = 0; j < n; ++j) {
                double acc = 0.0;
                for (int i = 0; i < m; ++i) acc += dy[i * n + j];
                db[j] += static_cast<float>(acc);
            }
        });
        return y;
    }

    // Cross-correlation over (t, h, w). x:[f,c,h,w] k:[o,c,kt,kh,kw] bias:[o].
    // Defaults to same-size symmetric zero padding (odd kernels).
    Tensor conv3d(const Tensor& x, const Tensor& k, const Tensor& bias) {
        if (k.rank() != 5) throw DimError("conv3d kernel must be rank 5");
        return conv3d(x, k, bias, Pad3{k.dim(2) / 2, k.dim(3) / 2, k.dim(4) / 2});
    }

    Tensor conv3d(const Tensor& x, const Tensor& k, const Tensor& bias, Pad3 pad) {
        if (x.rank() != 4 || k.rank() != 5) {
            throw DimError("conv3d expects x rank 4 and kernel rank 5, got " +
                           shape_str(x.shape()) + " and " + shape_str(k.shape()));
        }
        const int F = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
        const int O = k.dim(0), KC = k.dim(1), KT = k.dim(2), KH = k.dim(3), KW = k.dim(4);
        if (KC != C) {
            throw DimError("conv3d channel mismatch: input " + std::to_string(C) + " kernel " +
                           std::to_string(KC));
        }
        if (bias.rank() != 1 || bias.dim(0) != O) throw DimError("conv3d bias must be [o]");
        const int OF = F + 2 * pad.t - KT + 1;
        const int OH = H + 2 * pad.h - KH + 1;
        const int OW = W + 2 * pad.w - KW + 1;
        if (OF < 1 || OH < 1 || OW < 1) {
            throw DimError("conv3d kernel larger than padded input");
        }
        if (pad.t >= KT || pad.h >= KH || pad.w >= KW) {
            throw DimError("conv3d padding must stay below the kernel extent");
        }

        // Zero-padded input keeps the hot loops branch-free; the padded copy
        // is shared with the backward pass.
        auto xp = std::make_shared<std::vector<float>>();
        const int FP = F + 2 * pad.t, HP = H + 2 * pad.h, WP = W + 2 * pad.w;
        detail_pad4(x.data(), F, C, H, W, pad, *xp);

        Tensor y(Shape{OF, O, OH, OW});
        const float* pk = k.data();
        const float* pb = bias.data();
        float* py = y.data();
        // Plane-at-a-time accumulation: for each scalar kernel tap, sweep the
        // whole output plane with stride-1 reads, accumulating in double.
        std::vector<double> plane(static_cast<std::size_t>(OH) * OW);
        for (int t = 0; t < OF; ++t) {
            for (int o = 0; o < O; ++o) {
                std::fill(plane.begin(), plane.end(), static_cast<double>(pb[o]));
                for (int c = 0; c < C; ++c) {
                    for (int kt = 0; kt < KT; ++kt) {
                        const float* xbase =
                            xp->data() + (static_cast<std::size_t>(t + kt) * C + c) * HP * WP;
                        const float* wbase =
                            pk + (((static_cast<std::size_t>(o) * C + c) * KT + kt) * KH) * KW;
                        for (int kh = 0; kh < KH; ++kh) {
                            for (int kw = 0; kw < KW; ++kw) {
                                const double wv = wbase[kh * KW + kw];
                                if (wv == 0.0) continue;
                                for (int i = 0; i < OH; ++i) {
                                    const float* xrow = xbase + (i + kh) * WP + kw;
                                    double* arow = plane.data() + static_cast<std::size_t>(i) * OW;
                                    for (int j = 0; j < OW; ++j) arow[j] += wv * xrow[j];
                                }
                            }
                        }
                    }
                }
                float* yplane = py + (static_cast<std::size_t>(t) * O + o) * OH * OW;
                for (int p = 0; p < OH * OW; ++p) yplane[p] = static_cast<float>(plane[p]);
            }
        }
        check_finite(y, "conv3d");
        record(y, {x, k, bias},
               [x, k, bias, y, xp, F, C, H, W, O, KT, KH, KW, OF, OH, OW, HP, WP, FP,
                pad]() mutable {
                   (void)FP;
                   const float* dy = y.grad().data();
                   const float* pk = k.data();
                   if (x.requires_grad()) {
                       // Transposed convolution: correlate the padded output
                       // gradient with the flipped kernel, a plane at a time.
                       const Pad3 bpad{KT - 1 - pad.t, KH - 1 - pad.h, KW - 1 - pad.w};
                       std::vector<float> dyp;
                       detail_pad4(dy, OF, O, OH, OW, bpad, dyp);
                       const int DHP = OH + 2 * bpad.h, DWP = OW + 2 * bpad.w;
                       float* dx = x.grad().data();
                       std::vector<double> plane(static_cast<std::size_t>(H) * W);
                       for (int st = 0; st < F; ++st) {
                           for (int c = 0; c < C; ++c) {
                               std::fill(plane.begin(), plane.end(), 0.0);
                               for (int o = 0; o < O; ++o) {
                                   for (int kt = 0; kt < KT; ++kt) {
                                       const float* dbase =
                                           dyp.data() +
                                           (static_cast<std::size_t>(st + KT - 1 - kt) * O + o) *
                                               DHP * DWP;
                                       const float* wbase =
                                           pk +
                                           (((static_cast<std::size_t>(o) * C + c) * KT + kt) *
                                            KH) *
                                               KW;
                                       for (int kh = 0; kh < KH; ++kh) {
                                           for (int kw = 0; kw < KW; ++kw) {
                                               const double wv = wbase[kh * KW + kw];
                                               if (wv == 0.0) continue;
                                               const int oi = KH - 1 - kh, oj = KW - 1 - kw;
                                               for (int si = 0; si < H; ++si) {
                                                   const float* drow =
                                                       dbase + (si + oi) * DWP + oj;
                                                   double* arow = plane.data() +
                                                                  static_cast<std::size_t>(si) *
                                                                      W;
                                                   for (int sj = 0; sj < W; ++sj) {
                                                       arow[sj] += wv * drow[sj];
                                                   }
                                               }
                                           }
                                       }
                                   }
                               }
                               float* dxplane =
                                   dx + (static_cast<std::size_t>(st) * C + c) * H * W;
                               for (int p = 0; p < H * W; ++p) {
                                   dxplane[p] += static_cast<float>(plane[p]);
                               }
                           }
                       }
                   }
                   if (k.requires_grad()) {
                       float* dk = k.grad().data();
                       for (int o = 0; o < O; ++o) {
                           for (int c = 0; c < C; ++c) {
                               for (int kt = 0; kt < KT; ++kt) {
                                   for (int kh = 0; kh < KH; ++kh) {
                                       for (int kw = 0; kw < KW; ++kw) {
                                           double acc = 0.0;
                                           for (int t = 0; t < OF; ++t) {
                                               const float* dyrow =
                                                   dy + (static_cast<std::size_t>(t) * O + o) *
                                                            OH * OW;
                                               const float* xrow =
                                                   xp->data() +
                                                   ((static_cast<std::size_t>(t + kt) * C + c) *
                                                        HP +
                                                    kh) *
                                                       WP +
                                                   kw;
                                               for (int i = 0; i < OH; ++i) {
                                                   double row_acc = 0.0;
                                                   for (int j = 0; j < OW; ++j) {
                                                       row_acc +=
                                                           static_cast<double>(dyrow[j]) *
                                                           xrow[j];
                                                   }
                                                   acc += row_acc;
                                                   dyrow += OW;
                                                   xrow += WP;
                                               }
                                           }
                                           dk[(((static_cast<std::size_t>(o) * C + c) * KT + kt) *
                                                   KH +
                                               kh) *
                                                  KW +
                                              kw] += static_cast<float>(acc);
                                       }
                                   }
                               }
                           }
                       }
                   }
                   if (bias.requires_grad()) {
                       float* db = bias.grad().data();
                       for (int o = 0; o < O; ++o) {
                           double acc = 0.0;
                           for (int t = 0; t < OF; ++t) {
                               const float* row =
                                   dy + (static_cast<std::size_t>(t) * O + o) * OH * OW;
                               for (int p = 0; p < OH * OW; ++p) acc += row[p];
                           }
                           db[o] += static_cast<float>(acc);
                       }
                   }
               });
        return y;
    }

    // Per (frame, group) zero mean / unit variance, then per-channel affine.
    // x:[f,c,h,w], gamma,beta:[c].
    Tensor group_norm(const Tensor& x, int groups, const Tensor& gamma, const Tensor& beta,
                      float eps = 1e-5f) {
        if (x.rank() != 4) throw DimError("group_norm expects rank-4 input");
        const int F = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
        if (groups < 1 || C % groups != 0) {
            throw DimError("group_norm: channels " + std::to_string(C) +
                           " not divisible by groups " + std::to_string(groups));
        }
        if (gamma.rank() != 1 || gamma.dim(0) != C || beta.rank() != 1 || beta.dim(0) != C) {
            throw DimError("group_norm affine params must be [c]");
        }
        const int GC = C / groups;
        const std::size_t group_n = static_cast<std::size_t>(GC) * H * W;
        Tensor y(x.shape());
        auto mean = std::make_shared<std::vector<float>>(static_cast<std::size_t>(F) * groups);
        auto inv_std = std::make_shared<std::vector<float>>(static_cast<std::size_t>(F) * groups);
        const float* px = x.data();
        const float* pg = gamma.data();
        const float* pbt = beta.data();
        float* py = y.data();
        const int HW = H * W;
        for (int t = 0; t < F; ++t) {
            for (int g = 0; g < groups; ++g) {
                double sum = 0.0, sum_sq = 0.0;
                for (int c = g * GC; c < (g + 1) * GC; ++c) {
                    const float* row = px + (static_cast<std::size_t>(t) * C + c) * HW;
                    for (int p = 0; p < HW; ++p) {
                        sum += row[p];
                        sum_sq += static_cast<double>(row[p]) * row[p];
                    }
                }
                const double mu = sum / static_cast<double>(group_n);
                const double var = sum_sq / static_cast<double>(group_n) - mu * mu;
                const double istd = 1.0 / std::sqrt(std::max(var, 0.0) + eps);
                (*mean)[t * groups + g] = static_cast<float>(mu);
                (*inv_std)[t * groups + g] = static_cast<float>(istd);
                for (int c = g * GC; c < (g + 1) * GC; ++c) {
                    const float* row = px + (static_cast<std::size_t>(t) * C + c) * HW;
                    float* out = py + (static_cast<std::size_t>(t) * C + c) * HW;
                    for (int p = 0; p < HW; ++p) {
                        const float xhat = static_cast<float>((row[p] - mu) * istd);
                        out[p] = pg[c] * xhat + pbt[c];
                    }
                }
            }
        }
        check_finite(y, "group_norm");
        record(y, {x, gamma, beta},
               [x, gamma, beta, y, mean, inv_std, F, C, H, W, groups, GC]() mutable {
                   const int HW = H * W;
                   const std::size_t group_n = static_cast<std::size_t>(GC) * HW;
                   const float* dy = y.grad().data();
                   const float* px = x.data();
                   const float* pg = gamma.data();
                   const bool need_dx = x.requires_grad();
                   float* dgamma = gamma.requires_grad() ? gamma.grad().data() : nullptr;
                   float* dbeta = beta.requires_grad() ? beta.grad().data() : nullptr;
                   if (dgamma || dbeta) {
                       for (int c = 0; c < C; ++c) {
                           double acc_g = 0.0, acc_b = 0.0;
                           for (int t = 0; t < F; ++t) {
                               const int g = c / GC;
                               const float mu = (*mean)[t * groups + g];
                               const float istd = (*inv_std)[t * groups + g];
                               const float* row = px + (static_cast<std::size_t>(t) * C + c) * HW;
                               const float* drow =
                                   dy + (static_cast<std::size_t>(t) * C + c) * HW;
                               for (int p = 0; p < HW; ++p) {
                                   acc_g += static_cast<double>(drow[p]) * (row[p] - mu) * istd;
                                   acc_b += drow[p];
                               }
                           }
                           if (dgamma) dgamma[c] += static_cast<float>(acc_g);
                           if (dbeta) dbeta[c] += static_cast<float>(acc_b);
                       }
                   }
                   if (!need_dx) return;
                   float* dx = x.grad().data();
                   for (int t = 0; t < F; ++t) {
                       for (int g = 0; g < groups; ++g) {
                           const double mu = (*mean)[t * groups + g];
                           const double istd = (*inv_std)[t * groups + g];
                           // dxhat = dy * gamma; reduce its mean and its
                           // xhat-weighted mean over the group.
                           double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
                           for (int c = g * GC; c < (g + 1) * GC; ++c) {
                               const float* row = px + (static_cast<std::size_t>(t) * C + c) * HW;
                               const float* drow =
                                   dy + (static_cast<std::size_t>(t) * C + c) * HW;
                               for (int p = 0; p < HW; ++p) {
                                   const double dxhat = static_cast<double>(drow[p]) * pg[c];
                                   const double xhat = (row[p] - mu) * istd;
                                   sum_dxhat += dxhat;
                                   sum_dxhat_xhat += dxhat * xhat;
                               }
                           }
                           const double mean_dxhat = sum_dxhat / static_cast<double>(group_n);
                           const double mean_dxhat_xhat =
                               sum_dxhat_xhat / static_cast<double>(group_n);
                           for (int c = g * GC; c < (g + 1) * GC; ++c) {
                               const float* row = px + (static_cast<std::size_t>(t) * C + c) * HW;
                               const float* drow =
                                   dy + (static_cast<std::size_t>(t) * C + c) * HW;
                               float* dxrow = dx + (static_cast<std::size_t>(t) * C + c) * HW;
                               for (int p = 0; p < HW; ++p) {
                                   const double dxhat = static_cast<double>(drow[p]) * pg[c];
                                   const double xhat = (row[p] - mu) * istd;
                                   dxrow[p] += static_cast<float>(
                                       istd * (dxhat - mean_dxhat - xhat * mean_dxhat_xhat));
                               }
                           }
                       }
                   }
               });
        return y;
    }

    Tensor silu(const Tensor& x) {
        Tensor y(x.shape());
        const float* px = x.data();
        float* py = y.data();
        for (std::size_t i = 0; i < x.size(); ++i) {
            const float s = 1.0f / (1.0f + std::exp(-px[i]));
            py[i] = px[i] * s;
        }
        check_finite(y, "silu");
        record(y, {x}, [x, y]() mutable {
            if (!x.requires_grad()) return;
            const float* px = x.data();
            const float* dy = y.grad().data();
            float* dx = x.grad().data();
            for (std::size_t i = 0; i < x.size(); ++i) {
                const float s = 1.0f / (1.0f + std::exp(-px[i]));
                dx[i] += dy[i] * s * (1.0f + px[i] * (1.0f - s));
            }
        });
        return y;
    }

    // Softmax over the last axis.
    Tensor softmax(const Tensor& x) {
        if (x.rank() < 1) throw DimError("softmax needs at least rank 1");
        const int n = x.dim(x.rank() - 1);
        const std::size_t rows = x.size() / static_cast<std::size_t>(n);
        Tensor y(x.shape());
        const float* px = x.data();
        float* py = y.data();
        for (std::size_t r = 0; r < rows; ++r) {
            const float* in = px + r * n;
            float* out = py + r * n;
            float mx = in[0];
            for (int i = 1; i < n; ++i) mx = std::max(mx, in[i]);
            double denom = 0.0;
            for (int i = 0; i < n; ++i) {
                out[i] = std::exp(in[i] - mx);
                denom += out[i];
            }
            for (int i = 0; i < n; ++i) out[i] = static_cast<float>(out[i] / denom);
        }
        check_finite(y, "softmax");
        record(y, {x}, [x, y, n, rows]() mutable {
            if (!x.requires_grad()) return;
            const float* py = y.data();
            const float* dy = y.grad().data();
            float* dx = x.grad().data();
            for (std::size_t r = 0; r < rows; ++r) {
                const float* yr = py + r * n;
                const float* dyr = dy + r * n;
                float* dxr = dx + r * n;
                double dot = 0.0;
                for (int i = 0; i < n; ++i) dot += static_cast<double>(yr[i]) * dyr[i];
                for (int i = 0; i < n; ++i) {
                    dxr[i] += static_cast<float>(yr[i] * (dyr[i] - dot));
                }
            }
        });
        return y;
    }

    Tensor add(const Tensor& a, const Tensor& b) { return elementwise(a, b, /*mul=*/false); }

    Tensor sub(const Tensor& a, const Tensor& b) { return add(a, scale(b, -1.0f)); }

    Tensor mul(const Tensor& a, const Tensor& b) { return elementwise(a, b, /*mul=*/true); }

    // Multiply by a compile-time constant; the scalar itself carries no grad.
    Tensor scale(const Tensor& x, float c) {
        Tensor y(x.shape());
        const float* px = x.data();
        float* py = y.data();
        for (std::size_t i = 0; i < x.size(); ++i) py[i] = px[i] * c;
        check_finite(y, "scale");
        record(y, {x}, [x, y, c]() mutable {
            if (!x.requires_grad()) return;
            const float* dy = y.grad().data();
            float* dx = x.grad().data();
            for (std::size_t i = 0; i < x.size(); ++i) dx[i] += dy[i] * c;
        });
        return y;
    }

    Tensor add_scalar(const Tensor& x, float c) {
        Tensor y(x.shape());
        const float* px = x.data();
        float* py = y.data();
        for (std::size_t i = 0; i < x.size(); ++i) py[i] = px[i] + c;
        check_finite(y, "add_scalar");
        record(y, {x}, [x, y]() mutable {
            if (!x.requires_grad()) return;
            const float* dy = y.grad().data();
            float* dx = x.grad().data();
            for (std::size_t i = 0; i < x.size(); ++i) dx[i] += dy[i];
        });
        return y;
    }

    // x:[f,c,h,w] + b:[c] broadcast over frames and pixels; the conditioning
    // injection path.
    Tensor add_channel_bias(const Tensor& x, const Tensor& b) {
        if (x.rank() != 4 || b.rank() != 1 || b.dim(0) != x.dim(1)) {
            throw DimError("add_channel_bias expects x [f,c,h,w] and b [c]");
        }
        const int F = x.dim(0), C = x.dim(1), HW = x.dim(2) * x.dim(3);
        Tensor y(x.shape());
        const float* px = x.data();
        const float* pb = b.data();
        float* py = y.data();
        for (int t = 0; t < F; ++t) {
            for (int c = 0; c < C; ++c) {
                const std::size_t base = (static_cast<std::size_t>(t) * C + c) * HW;
                for (int p = 0; p < HW; ++p) py[base + p] = px[base + p] + pb[c];
            }
        }
        check_finite(y, "add_channel_bias");
        record(y, {x, b}, [x, b, y, F, C, HW]() mutable {
            const float* dy = y.grad().data();
            if (x.requires_grad()) {
                float* dx = x.grad().data();
                for (std::size_t i = 0; i < x.size(); ++i) dx[i] += dy[i];
            }
            if (b.requires_grad()) {
                float* db = b.grad().data();
                for (int c = 0; c < C; ++c) {
                    double acc = 0.0;
                    for (int t = 0; t < F; ++t) {
                        const std::size_t base = (static_cast<std::size_t>(t) * C + c) *
                                                 static_cast<std::size_t>(HW);
                        for (int p = 0; p < HW; ++p) acc += dy[base + p];
                    }
                    db[c] += static_cast<float>(acc);
                }
            }
        });
        return y;
    }

    Tensor sum(const Tensor& x) { return reduce(x, /*take_mean=*/false); }

    Tensor mean(const Tensor& x) { return reduce(x, /*take_mean=*/true); }

    // mean((a-b)^2), the diffusion training objective's core.
    Tensor mse(const Tensor& a, const Tensor& b) {
        Tensor d = sub(a, b);
        return mean(mul(d, d));
    }

    Tensor reshape(const Tensor& x, Shape shape) {
        if (shape_numel(shape) != x.size()) {
            throw DimError("reshape " + shape_str(x.shape()) + " -> " + shape_str(shape) +
                           " changes element count");
        }
        Tensor y(std::move(shape), x.values());
        record(y, {x}, [x, y]() mutable {
            if (!x.requires_grad()) return;
            const float* dy = y.grad().data();
            float* dx = x.grad().data();
            for (std::size_t i = 0; i < x.size(); ++i) dx[i] += dy[i];
        });
        return y;
    }

    // Concatenate rank-4 tensors along the channel axis.
    Tensor concat_channels(const Tensor& a, const Tensor& b) {
        if (a.rank() != 4 || b.rank() != 4 || a.dim(0) != b.dim(0) || a.dim(2) != b.dim(2) ||
            a.dim(3) != b.dim(3)) {
            throw DimError("concat_channels shapes " + shape_str(a.shape()) + " and " +
                           shape_str(b.shape()));
        }
        const int F = a.dim(0), CA = a.dim(1), CB = b.dim(1), HW = a.dim(2) * a.dim(3);
        Tensor y(Shape{F, CA + CB, a.dim(2), a.dim(3)});
        const float* pa = a.data();
        const float* pb = b.data();
        float* py = y.data();
        for (int t = 0; t < F; ++t) {
            std::copy_n(pa + static_cast<std::size_t>(t) * CA * HW,
                        static_cast<std::size_t>(CA) * HW,
                        py + static_cast<std::size_t>(t) * (CA + CB) * HW);
            std::copy_n(pb + static_cast<std::size_t>(t) * CB * HW,
                        static_cast<std::size_t>(CB) * HW,
                        py + static_cast<std::size_t>(t) * (CA + CB) * HW +
                            static_cast<std::size_t>(CA) * HW);
        }
        record(y, {a, b}, [a, b, y, F, CA, CB, HW]() mutable {
            const float* dy = y.grad().data();
            if (a.requires_grad()) {
                float* da = a.grad().data();
                for (int t = 0; t < F; ++t) {
                    const float* src = dy + static_cast<std::size_t>(t) * (CA + CB) * HW;
                    float* dst = da + static_cast<std::size_t>(t) * CA * HW;
                    for (std::size_t i = 0; i < static_cast<std::size_t>(CA) * HW; ++i) {
                        dst[i] += src[i];
                    }
                }
            }
            if (b.requires_grad()) {
                float* db = b.grad().data();
                for (int t = 0; t < F; ++t) {
                    const float* src = dy + static_cast<std::size_t>(t) * (CA + CB) * HW +
                                       static_cast<std::size_t>(CA) * HW;
                    float* dst = db + static_cast<std::size_t>(t) * CB * HW;
                    for (std::size_t i = 0; i < static_cast<std::size_t>(CB) * HW; ++i) {
                        dst[i] += src[i];
                    }
                }
            }
        });
        return y;
    }

    // Row lookup: table:[v,d], ids index rows, output [n,d].
    Tensor embedding(const Tensor& table, const std::vector<int>& ids) {
        if (table.rank() != 2) throw DimError("embedding table must be rank 2");
        const int V = table.dim(0), D = table.dim(1);
        for (int id : ids) {
            if (id < 0 || id >= V) {
                throw ContractError("embedding id " + std::to_string(id) + " out of range");
            }
        }
        Tensor y(Shape{static_cast<int>(ids.size()), D});
        const float* pt = table.data();
        float* py = y.data();
        for (std::size_t i = 0; i < ids.size(); ++i) {
            std::copy_n(pt + static_cast<std::size_t>(ids[i]) * D, D, py + i * D);
        }
        record(y, {table}, [table, y, ids, D]() mutable {
            if (!table.requires_grad()) return;
            const float* dy = y.grad().data();
            float* dt = table.grad().data();
            for (std::size_t i = 0; i < ids.size(); ++i) {
                for (int j = 0; j < D; ++j) {
                    dt[static_cast<std::size_t>(ids[i]) * D + j] += dy[i * D + j];
                }
            }
        });
        return y;
    }

    // Populates dLoss/dLeaf for every requires_grad leaf reachable from loss.
    void backward(const Tensor& loss) {
        if (loss.size() != 1) throw ContractError("backward requires a scalar loss");
        loss.grad()[0] += 1.0f;
        for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
    }

    std::size_t node_count() const { return nodes_.size(); }

private:
    Tensor elementwise(const Tensor& a, const Tensor& b, bool is_mul) {
        // Scalar broadcast is the only allowed implicit broadcast.
        if (!same_shape(a.shape(), b.shape()) && b.size() != 1 && a.size() != 1) {
            throw DimError("elementwise shapes " + shape_str(a.shape()) + " vs " +
                           shape_str(b.shape()));
        }
        const bool a_scalar = a.size() == 1 && b.size() != 1;
        const bool b_scalar = b.size() == 1 && a.size() != 1;
        const Tensor& big = a_scalar ? b : a;
        Tensor y(big.shape());
        const float* pa = a.data();
        const float* pb = b.data();
        float* py = y.data();
        const std::size_t n = y.size();
        for (std::size_t i = 0; i < n; ++i) {
            const float av = a_scalar ? pa[0] : pa[i];
            const float bv = b_scalar ? pb[0] : pb[i];
            py[i] = is_mul ? av * bv : av + bv;
        }
        check_finite(y, is_mul ? "mul" : "add");
        record(y, {a, b}, [a, b, y, is_mul, a_scalar, b_scalar, n]() mutable {
            const float* dy = y.grad().data();
            const float* pa = a.data();
            const float* pb = b.data();
            if (a.requires_grad()) {
                float* da = a.grad().data();
                if (a_scalar) {
                    double acc = 0.0;
                    for (std::size_t i = 0; i < n; ++i) {
                        acc += is_mul ? static_cast<double>(dy[i]) * pb[i]
                                      : static_cast<double>(dy[i]);
                    }
                    da[0] += static_cast<float>(acc);
                } else {
                    for (std::size_t i = 0; i < n; ++i) {
                        const float bv = b_scalar ? pb[0] : pb[i];
                        da[i] += is_mul ? dy[i] * bv : dy[i];
                    }
                }
            }
            if (b.requires_grad()) {
                float* db = b.grad().data();
                if (b_scalar) {
                    double acc = 0.0;
                    for (std::size_t i = 0; i < n; ++i) {
                        acc += is_mul ? static_cast<double>(dy[i]) * pa[i]
                                      : static_cast<double>(dy[i]);
                    }
                    db[0] += static_cast<float>(acc);
                } else {
                    for (std::size_t i = 0; i < n; ++i) {
                        const float av = a_scalar ? pa[0] : pa[i];
                        db[i] += is_mul ? dy[i] * av : dy[i];
                    }
                }
            }
        });
        return y;
    }

    Tensor reduce(const Tensor& x, bool take_mean) {
        double acc = 0.0;
        for (float v : x.values()) acc += v;
        const float denom = take_mean ? static_cast<float>(x.size()) : 1.0f;
        Tensor y = Tensor::scalar(static_cast<float>(acc) / denom);
        check_finite(y, take_mean ? "mean" : "sum");
        record(y, {x}, [x, y, denom]() mutable {
            if (!x.requires_grad()) return;
            const float g = y.grad()[0] / denom;
            float* dx = x.grad().data();
            for (std::size_t i = 0; i < x.size(); ++i) dx[i] += g;
        });
        return y;
    }

    void record(Tensor& out, std::initializer_list<Tensor> inputs,
                std::function<void()> backward_fn) {
        bool needs = false;
        for (const Tensor& t : inputs) needs = needs || t.requires_grad();
        if (!needs) return;
        out.set_requires_grad(true);
        nodes_.push_back(std::move(backward_fn));
    }

    std::vector<std::function<void()>> nodes_;
};

}  // namespace avdiff
