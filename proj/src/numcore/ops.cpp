#include "infotime/numcore/ops.hpp"

#include <cblas.h>
#include <cmath>
#include <numbers>

// Present when the linked BLAS is OpenBLAS; weak so a plain BLAS still links.
extern "C" void openblas_set_num_threads(int) __attribute__((weak));

namespace infotime::numcore {

namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

void check_finite(const Tensor& t, const char* op) {
    for (double v : t.values())
        if (!std::isfinite(v)) throw NumericError(std::string(op) + ": non-finite output");
}

void require_rank2(const Tensor& a, const char* op) {
    if (a.rank() != 2)
        throw ShapeError(std::string(op) + ": expected rank-2 tensor, got " + shape_str(a.shape()));
}

// c[m x n] += op_a(a) . op_b(b); op_a(a) is m x k. Stored matrices are
// row-major; when beta is 0 c is overwritten.
void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k,
          const double* a, const double* b, double beta, double* c) {
    if (openblas_set_num_threads) {
        // Keep kernels single-threaded: run-to-run determinism, and the
        // experiment runners parallelize across fits instead.
        static const bool once = [] { openblas_set_num_threads(1); return true; }();
        (void)once;
    }
    cblas_dgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
                trans_b ? CblasTrans : CblasNoTrans,
                static_cast<int>(m), static_cast<int>(n), static_cast<int>(k), 1.0,
                a, static_cast<int>(trans_a ? m : k),
                b, static_cast<int>(trans_b ? k : n), beta,
                c, static_cast<int>(n));
}

void record_if_needed(const Tensor& out, bool needed, std::function<void()> backward) {
    Tape* tape = active_tape();
    if (!tape || !needed) return;
    Tensor marked = out;
    marked.mark_grad_connected();
    tape->record(marked, std::move(backward));
}

} // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    const std::size_t n = a.numel();
    Tensor out = Tensor::zeros(a.shape());
    const double* pa = a.data();
    const double* pb = b.data();
    double* po = out.data();
    if (b.shape() == a.shape()) {
        for (std::size_t i = 0; i < n; ++i) po[i] = pa[i] + pb[i];
        record_if_needed(out, a.needs_grad() || b.needs_grad(), [a, b, out]() {
            auto go = out.grad_view();
            if (a.needs_grad()) {
                auto ga = a.grad();
                for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i];
            }
            if (b.needs_grad()) {
                auto gb = b.grad();
                for (std::size_t i = 0; i < go.size(); ++i) gb[i] += go[i];
            }
        });
    } else if (b.numel() == 1) {
        const double c = pb[0];
        for (std::size_t i = 0; i < n; ++i) po[i] = pa[i] + c;
        record_if_needed(out, a.needs_grad() || b.needs_grad(), [a, b, out]() {
            auto go = out.grad_view();
            if (a.needs_grad()) {
                auto ga = a.grad();
                for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i];
            }
            if (b.needs_grad()) {
                double s = 0.0;
                for (double g : go) s += g;
                b.grad()[0] += s;
            }
        });
    } else if (a.rank() == 2 && b.rank() == 1 && b.dim(0) == a.dim(1)) {
        const std::size_t rows = a.dim(0), cols = a.dim(1);
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c) po[r * cols + c] = pa[r * cols + c] + pb[c];
        record_if_needed(out, a.needs_grad() || b.needs_grad(), [a, b, out, rows, cols]() {
            auto go = out.grad_view();
            if (a.needs_grad()) {
                auto ga = a.grad();
                for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i];
            }
            if (b.needs_grad()) {
                auto gb = b.grad();
                for (std::size_t r = 0; r < rows; ++r)
                    for (std::size_t c = 0; c < cols; ++c) gb[c] += go[r * cols + c];
            }
        });
    } else {
        throw ShapeError("add: incompatible shapes " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()));
    }
    check_finite(out, "add");
    return out;
}

Tensor add_scalar(const Tensor& a, double c) {
    Tensor out = Tensor::zeros(a.shape());
    const double* pa = a.data();
    double* po = out.data();
    for (std::size_t i = 0; i < a.numel(); ++i) po[i] = pa[i] + c;
    check_finite(out, "add_scalar");
    record_if_needed(out, a.needs_grad(), [a, out]() {
        auto go = out.grad_view();
        auto ga = a.grad();
        for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i];
    });
    return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape() && b.numel() != 1)
        throw ShapeError("sub: incompatible shapes " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()));
    Tensor out = Tensor::zeros(a.shape());
    const double* pa = a.data();
    const double* pb = b.data();
    double* po = out.data();
    const bool scalar_b = b.numel() == 1;
    for (std::size_t i = 0; i < a.numel(); ++i) po[i] = pa[i] - (scalar_b ? pb[0] : pb[i]);
    check_finite(out, "sub");
    record_if_needed(out, a.needs_grad() || b.needs_grad(), [a, b, out, scalar_b]() {
        auto go = out.grad_view();
        if (a.needs_grad()) {
            auto ga = a.grad();
            for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i];
        }
        if (b.needs_grad()) {
            auto gb = b.grad();
            if (scalar_b) {
                double s = 0.0;
                for (double g : go) s += g;
                gb[0] -= s;
            } else {
                for (std::size_t i = 0; i < go.size(); ++i) gb[i] -= go[i];
            }
        }
    });
    return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape() && b.numel() != 1)
        throw ShapeError("mul: incompatible shapes " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()));
    Tensor out = Tensor::zeros(a.shape());
    const double* pa = a.data();
    const double* pb = b.data();
    double* po = out.data();
    const bool scalar_b = b.numel() == 1;
    for (std::size_t i = 0; i < a.numel(); ++i) po[i] = pa[i] * (scalar_b ? pb[0] : pb[i]);
    check_finite(out, "mul");
    record_if_needed(out, a.needs_grad() || b.needs_grad(), [a, b, out, scalar_b]() {
        auto go = out.grad_view();
        const double* pa = a.data();
        const double* pb = b.data();
        if (a.needs_grad()) {
            auto ga = a.grad();
            for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * (scalar_b ? pb[0] : pb[i]);
        }
        if (b.needs_grad()) {
            auto gb = b.grad();
            if (scalar_b) {
                double s = 0.0;
                for (std::size_t i = 0; i < go.size(); ++i) s += go[i] * pa[i];
                gb[0] += s;
            } else {
                for (std::size_t i = 0; i < go.size(); ++i) gb[i] += go[i] * pa[i];
            }
        }
    });
    return out;
}

Tensor mul_scalar(const Tensor& a, double c) {
    Tensor out = Tensor::zeros(a.shape());
    const double* pa = a.data();
    double* po = out.data();
    for (std::size_t i = 0; i < a.numel(); ++i) po[i] = pa[i] * c;
    check_finite(out, "mul_scalar");
    record_if_needed(out, a.needs_grad(), [a, out, c]() {
        auto go = out.grad_view();
        auto ga = a.grad();
        for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * c;
    });
    return out;
}

Tensor square(const Tensor& a) {
    Tensor out = Tensor::zeros(a.shape());
    const double* pa = a.data();
    double* po = out.data();
    for (std::size_t i = 0; i < a.numel(); ++i) po[i] = pa[i] * pa[i];
    check_finite(out, "square");
    record_if_needed(out, a.needs_grad(), [a, out]() {
        auto go = out.grad_view();
        auto ga = a.grad();
        const double* pa = a.data();
        for (std::size_t i = 0; i < go.size(); ++i) ga[i] += 2.0 * pa[i] * go[i];
    });
    return out;
}

Tensor relu(const Tensor& a) {
    Tensor out = Tensor::zeros(a.shape());
    const double* pa = a.data();
    double* po = out.data();
    for (std::size_t i = 0; i < a.numel(); ++i) po[i] = pa[i] > 0.0 ? pa[i] : 0.0;
    check_finite(out, "relu");
    record_if_needed(out, a.needs_grad(), [a, out]() {
        auto go = out.grad_view();
        auto ga = a.grad();
        const double* pa = a.data();
        // subgradient 0 at exactly 0
        for (std::size_t i = 0; i < go.size(); ++i)
            if (pa[i] > 0.0) ga[i] += go[i];
    });
    return out;
}

Tensor clamp(const Tensor& a, double lo, double hi) {
    if (lo > hi) throw ContractError("clamp: lo > hi");
    Tensor out = Tensor::zeros(a.shape());
    const double* pa = a.data();
    double* po = out.data();
    for (std::size_t i = 0; i < a.numel(); ++i) po[i] = std::min(std::max(pa[i], lo), hi);
    check_finite(out, "clamp");
    record_if_needed(out, a.needs_grad(), [a, out, lo, hi]() {
        auto go = out.grad_view();
        auto ga = a.grad();
        const double* pa = a.data();
        for (std::size_t i = 0; i < go.size(); ++i)
            if (pa[i] > lo && pa[i] < hi) ga[i] += go[i];
    });
    return out;
}

Tensor scale_rows(const Tensor& a, const Tensor& s) {
    require_rank2(a, "scale_rows");
    if (s.numel() != a.dim(0))
        throw ShapeError("scale_rows: scale length " + std::to_string(s.numel()) +
                         " does not match rows of " + shape_str(a.shape()));
    const std::size_t rows = a.dim(0), cols = a.dim(1);
    Tensor out = Tensor::zeros(a.shape());
    const double* pa = a.data();
    const double* ps = s.data();
    double* po = out.data();
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) po[r * cols + c] = pa[r * cols + c] * ps[r];
    check_finite(out, "scale_rows");
    record_if_needed(out, a.needs_grad() || s.needs_grad(), [a, s, out, rows, cols]() {
        auto go = out.grad_view();
        const double* pa = a.data();
        const double* ps = s.data();
        if (a.needs_grad()) {
            auto ga = a.grad();
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t c = 0; c < cols; ++c) ga[r * cols + c] += go[r * cols + c] * ps[r];
        }
        if (s.needs_grad()) {
            auto gs = s.grad();
            for (std::size_t r = 0; r < rows; ++r) {
                double acc = 0.0;
                for (std::size_t c = 0; c < cols; ++c) acc += go[r * cols + c] * pa[r * cols + c];
                gs[r] += acc;
            }
        }
    });
    return out;
}

Tensor shift_rows(const Tensor& a, const Tensor& s) {
    require_rank2(a, "shift_rows");
    if (s.numel() != a.dim(0))
        throw ShapeError("shift_rows: shift length " + std::to_string(s.numel()) +
                         " does not match rows of " + shape_str(a.shape()));
    const std::size_t rows = a.dim(0), cols = a.dim(1);
    Tensor out = Tensor::zeros(a.shape());
    const double* pa = a.data();
    const double* ps = s.data();
    double* po = out.data();
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) po[r * cols + c] = pa[r * cols + c] + ps[r];
    check_finite(out, "shift_rows");
    record_if_needed(out, a.needs_grad() || s.needs_grad(), [a, s, out, rows, cols]() {
        auto go = out.grad_view();
        if (a.needs_grad()) {
            auto ga = a.grad();
            for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i];
        }
        if (s.needs_grad()) {
            auto gs = s.grad();
            for (std::size_t r = 0; r < rows; ++r) {
                double acc = 0.0;
                for (std::size_t c = 0; c < cols; ++c) acc += go[r * cols + c];
                gs[r] += acc;
            }
        }
    });
    return out;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_rank2(a, "matmul");
    require_rank2(b, "matmul");
    if (a.dim(1) != b.dim(0))
        throw ShapeError("matmul: inner dimensions disagree, " + shape_str(a.shape()) + " x " +
                         shape_str(b.shape()));
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    Tensor out = Tensor::zeros({m, n});
    gemm(false, false, m, n, k, a.data(), b.data(), 0.0, out.data());
    check_finite(out, "matmul");
    record_if_needed(out, a.needs_grad() || b.needs_grad(), [a, b, out, m, k, n]() {
        auto go = out.grad_view();
        if (a.needs_grad())
            gemm(false, true, m, k, n, go.data(), b.data(), 1.0, a.grad().data());
        if (b.needs_grad())
            gemm(true, false, k, n, m, a.data(), go.data(), 1.0, b.grad().data());
    });
    return out;
}

Tensor concat_cols(std::span<const Tensor> parts) {
    if (parts.empty()) throw ContractError("concat_cols: no inputs");
    const std::size_t rows = parts[0].dim(0);
    std::size_t total = 0;
    bool needed = false;
    for (const Tensor& p : parts) {
        require_rank2(p, "concat_cols");
        if (p.dim(0) != rows) throw ShapeError("concat_cols: row counts differ");
        total += p.dim(1);
        needed = needed || p.needs_grad();
    }
    Tensor out = Tensor::zeros({rows, total});
    double* po = out.data();
    std::size_t col0 = 0;
    for (const Tensor& p : parts) {
        const std::size_t cols = p.dim(1);
        const double* pp = p.data();
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c) po[r * total + col0 + c] = pp[r * cols + c];
        col0 += cols;
    }
    check_finite(out, "concat_cols");
    std::vector<Tensor> held(parts.begin(), parts.end());
    record_if_needed(out, needed, [held = std::move(held), out, rows, total]() {
        auto go = out.grad_view();
        std::size_t col0 = 0;
        for (const Tensor& p : held) {
            const std::size_t cols = p.dim(1);
            if (p.needs_grad()) {
                auto gp = p.grad();
                for (std::size_t r = 0; r < rows; ++r)
                    for (std::size_t c = 0; c < cols; ++c) gp[r * cols + c] += go[r * total + col0 + c];
            }
            col0 += cols;
        }
    });
    return out;
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
    const Tensor parts[2] = {a, b};
    return concat_cols(std::span<const Tensor>(parts, 2));
}

Tensor slice_cols(const Tensor& a, std::size_t start, std::size_t len) {
    require_rank2(a, "slice_cols");
    if (start + len > a.dim(1))
        throw ShapeError("slice_cols: [" + std::to_string(start) + ", " +
                         std::to_string(start + len) + ") out of range for " + shape_str(a.shape()));
    const std::size_t rows = a.dim(0), cols = a.dim(1);
    Tensor out = Tensor::zeros({rows, len});
    const double* pa = a.data();
    double* po = out.data();
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < len; ++c) po[r * len + c] = pa[r * cols + start + c];
    check_finite(out, "slice_cols");
    record_if_needed(out, a.needs_grad(), [a, out, start, len, rows, cols]() {
        auto go = out.grad_view();
        auto ga = a.grad();
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < len; ++c) ga[r * cols + start + c] += go[r * len + c];
    });
    return out;
}

Tensor slice_cols_strided(const Tensor& a, std::size_t start, std::size_t stride) {
    require_rank2(a, "slice_cols_strided");
    if (stride == 0) throw ContractError("slice_cols_strided: zero stride");
    const std::size_t cols = a.dim(1);
    if (start >= cols) throw ShapeError("slice_cols_strided: start out of range");
    if (cols % stride != 0)
        throw ShapeError("slice_cols_strided: " + std::to_string(cols) +
                         " columns not divisible by stride " + std::to_string(stride));
    const std::size_t rows = a.dim(0), len = cols / stride;
    Tensor out = Tensor::zeros({rows, len});
    const double* pa = a.data();
    double* po = out.data();
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < len; ++c) po[r * len + c] = pa[r * cols + start + c * stride];
    check_finite(out, "slice_cols_strided");
    record_if_needed(out, a.needs_grad(), [a, out, start, stride, rows, cols, len]() {
        auto go = out.grad_view();
        auto ga = a.grad();
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < len; ++c) ga[r * cols + start + c * stride] += go[r * len + c];
    });
    return out;
}

Tensor interleave_cols(std::span<const Tensor> parts) {
    if (parts.empty()) throw ContractError("interleave_cols: no inputs");
    const std::size_t m = parts.size();
    const std::size_t rows = parts[0].dim(0), len = parts[0].dim(1);
    bool needed = false;
    for (const Tensor& p : parts) {
        require_rank2(p, "interleave_cols");
        if (p.dim(0) != rows || p.dim(1) != len)
            throw ShapeError("interleave_cols: inconsistent part shapes");
        needed = needed || p.needs_grad();
    }
    const std::size_t cols = m * len;
    Tensor out = Tensor::zeros({rows, cols});
    double* po = out.data();
    for (std::size_t j = 0; j < m; ++j) {
        const double* pp = parts[j].data();
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < len; ++c) po[r * cols + j + c * m] = pp[r * len + c];
    }
    check_finite(out, "interleave_cols");
    std::vector<Tensor> held(parts.begin(), parts.end());
    record_if_needed(out, needed, [held = std::move(held), out, rows, cols, len, m]() {
        auto go = out.grad_view();
        for (std::size_t j = 0; j < m; ++j) {
            if (!held[j].needs_grad()) continue;
            auto gp = held[j].grad();
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t c = 0; c < len; ++c) gp[r * len + c] += go[r * cols + j + c * m];
        }
    });
    return out;
}

Tensor gather_rows(const Tensor& a, std::span<const std::size_t> indices) {
    require_rank2(a, "gather_rows");
    const std::size_t rows = a.dim(0), cols = a.dim(1);
    Tensor out = Tensor::zeros({indices.size(), cols});
    const double* pa = a.data();
    double* po = out.data();
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= rows) throw ContractError("gather_rows: index out of range");
        for (std::size_t c = 0; c < cols; ++c) po[i * cols + c] = pa[indices[i] * cols + c];
    }
    check_finite(out, "gather_rows");
    std::vector<std::size_t> idx(indices.begin(), indices.end());
    record_if_needed(out, a.needs_grad(), [a, out, idx = std::move(idx), cols]() {
        auto go = out.grad_view();
        auto ga = a.grad();
        for (std::size_t i = 0; i < idx.size(); ++i)
            for (std::size_t c = 0; c < cols; ++c) ga[idx[i] * cols + c] += go[i * cols + c];
    });
    return out;
}

Tensor sum_all(const Tensor& a) {
    double s = 0.0;
    for (double v : a.values()) s += v;
    Tensor out = Tensor::scalar(s);
    check_finite(out, "sum_all");
    record_if_needed(out, a.needs_grad(), [a, out]() {
        const double g = out.grad_view()[0];
        auto ga = a.grad();
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g;
    });
    return out;
}

Tensor mean_all(const Tensor& a) {
    if (a.numel() == 0) throw ContractError("mean_all: empty tensor");
    double s = 0.0;
    for (double v : a.values()) s += v;
    const double inv = 1.0 / static_cast<double>(a.numel());
    Tensor out = Tensor::scalar(s * inv);
    check_finite(out, "mean_all");
    record_if_needed(out, a.needs_grad(), [a, out, inv]() {
        const double g = out.grad_view()[0] * inv;
        auto ga = a.grad();
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g;
    });
    return out;
}

Tensor gaussian_log_density(const Tensor& x, const Tensor& mean, const Tensor& logvar) {
    const bool mean_scalar = mean.numel() == 1;
    const bool lv_scalar = logvar.numel() == 1;
    if (!mean_scalar && mean.shape() != x.shape())
        throw ShapeError("gaussian_log_density: mean shape mismatch");
    if (!lv_scalar && logvar.shape() != x.shape())
        throw ShapeError("gaussian_log_density: logvar shape mismatch");
    const std::size_t n = x.numel();
    Tensor out = Tensor::zeros(x.shape());
    const double* px = x.data();
    const double* pm = mean.data();
    const double* pl = logvar.data();
    double* po = out.data();
    for (std::size_t i = 0; i < n; ++i) {
        const double mu = mean_scalar ? pm[0] : pm[i];
        const double lv = lv_scalar ? pl[0] : pl[i];
        const double d = px[i] - mu;
        po[i] = -0.5 * (d * d * std::exp(-lv) + lv + kLog2Pi);
    }
    check_finite(out, "gaussian_log_density");
    record_if_needed(out, x.needs_grad() || mean.needs_grad() || logvar.needs_grad(),
                     [x, mean, logvar, out, mean_scalar, lv_scalar, n]() {
        auto go = out.grad_view();
        const double* px = x.data();
        const double* pm = mean.data();
        const double* pl = logvar.data();
        const bool gx = x.needs_grad(), gm = mean.needs_grad(), gl = logvar.needs_grad();
        std::span<double> gxs = gx ? x.grad() : std::span<double>();
        std::span<double> gms = gm ? mean.grad() : std::span<double>();
        std::span<double> gls = gl ? logvar.grad() : std::span<double>();
        for (std::size_t i = 0; i < n; ++i) {
            const double mu = mean_scalar ? pm[0] : pm[i];
            const double lv = lv_scalar ? pl[0] : pl[i];
            const double d = px[i] - mu;
            const double inv_var = std::exp(-lv);
            if (gx) gxs[i] += go[i] * (-d * inv_var);
            if (gm) gms[mean_scalar ? 0 : i] += go[i] * (d * inv_var);
            if (gl) gls[lv_scalar ? 0 : i] += go[i] * 0.5 * (d * d * inv_var - 1.0);
        }
    });
    return out;
}

Tensor mse_loss(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape())
        throw ShapeError("mse_loss: shapes differ, " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
    return mean_all(square(sub(a, b)));
}

} // namespace infotime::numcore
