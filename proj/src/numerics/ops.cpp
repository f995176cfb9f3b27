#include "cmarl/numerics/ops.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "cmarl/common/error.hpp"
#include "eigen_maps.hpp"

namespace cmarl::numerics {

namespace {

std::string dims(const Tensor& t)
{
    return "[" + std::to_string(t.rows()) + "," + std::to_string(t.cols()) + "]";
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op)
{
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw ConfigError(std::string(op) + ": shape mismatch " + dims(a) + " vs " + dims(b));
    }
}

Tensor like(const Tensor& t)
{
    return Tensor::matrix(t.rows(), t.cols());
}

template <typename F, typename G>
Var unary(Var a, F forward, G derivative)
{
    Tape& tape = *a.tape();
    const Tensor& x = a.value();
    Tensor y = like(x);
    for (std::size_t i = 0; i < x.size(); ++i) {
        y[i] = forward(x[i]);
    }
    const std::size_t ia = a.id();
    return tape.record(std::move(y), {a}, [ia, derivative](Tape& t, std::size_t self) {
        const Tensor& gy = t.grad(self);
        const Tensor& xv = t.value(ia);
        const Tensor& yv = t.value(self);
        Tensor& gx = t.grad(ia);
        for (std::size_t i = 0; i < gy.size(); ++i) {
            gx[i] += gy[i] * derivative(xv[i], yv[i]);
        }
    });
}

}  // namespace

Var matmul(Var a, Var b)
{
    Tape& tape = *a.tape();
    Tensor y = numerics::matmul(a.value(), b.value());
    const std::size_t ia = a.id();
    const std::size_t ib = b.id();
    return tape.record(std::move(y), {a, b}, [ia, ib](Tape& t, std::size_t self) {
        const auto gy = as_matrix(t.grad(self));
        if (t.requires_grad(ia)) {
            as_matrix(t.grad(ia)).noalias() += gy * as_matrix(t.value(ib)).transpose();
        }
        if (t.requires_grad(ib)) {
            as_matrix(t.grad(ib)).noalias() += as_matrix(t.value(ia)).transpose() * gy;
        }
    });
}

Var add(Var a, Var b)
{
    require_same_shape(a.value(), b.value(), "add");
    Tensor y = a.value();
    as_matrix(y) += as_matrix(b.value());
    const std::size_t ia = a.id();
    const std::size_t ib = b.id();
    return a.tape()->record(std::move(y), {a, b}, [ia, ib](Tape& t, std::size_t self) {
        for (std::size_t in : {ia, ib}) {
            if (t.requires_grad(in)) {
                as_matrix(t.grad(in)) += as_matrix(t.grad(self));
            }
        }
    });
}

Var sub(Var a, Var b)
{
    require_same_shape(a.value(), b.value(), "sub");
    Tensor y = a.value();
    as_matrix(y) -= as_matrix(b.value());
    const std::size_t ia = a.id();
    const std::size_t ib = b.id();
    return a.tape()->record(std::move(y), {a, b}, [ia, ib](Tape& t, std::size_t self) {
        if (t.requires_grad(ia)) {
            as_matrix(t.grad(ia)) += as_matrix(t.grad(self));
        }
        if (t.requires_grad(ib)) {
            as_matrix(t.grad(ib)) -= as_matrix(t.grad(self));
        }
    });
}

Var mul(Var a, Var b)
{
    require_same_shape(a.value(), b.value(), "mul");
    Tensor y = a.value();
    as_matrix(y).array() *= as_matrix(b.value()).array();
    const std::size_t ia = a.id();
    const std::size_t ib = b.id();
    return a.tape()->record(std::move(y), {a, b}, [ia, ib](Tape& t, std::size_t self) {
        const auto gy = as_matrix(t.grad(self)).array();
        if (t.requires_grad(ia)) {
            as_matrix(t.grad(ia)).array() += gy * as_matrix(t.value(ib)).array();
        }
        if (t.requires_grad(ib)) {
            as_matrix(t.grad(ib)).array() += gy * as_matrix(t.value(ia)).array();
        }
    });
}

Var add_row(Var a, Var b)
{
    const Tensor& x = a.value();
    const Tensor& r = b.value();
    if (r.rows() != 1 || r.cols() != x.cols()) {
        throw ConfigError("add_row: cannot broadcast " + dims(r) + " over " + dims(x));
    }
    Tensor y = x;
    as_matrix(y).rowwise() += as_matrix(r).row(0);
    const std::size_t ia = a.id();
    const std::size_t ib = b.id();
    return a.tape()->record(std::move(y), {a, b}, [ia, ib](Tape& t, std::size_t self) {
        const auto gy = as_matrix(t.grad(self));
        if (t.requires_grad(ia)) {
            as_matrix(t.grad(ia)) += gy;
        }
        if (t.requires_grad(ib)) {
            as_matrix(t.grad(ib)) += gy.colwise().sum();
        }
    });
}

Var scale(Var a, double s)
{
    return unary(
        a, [s](double x) { return s * x; }, [s](double, double) { return s; });
}

Var add_scalar(Var a, double s)
{
    return unary(
        a, [s](double x) { return x + s; }, [](double, double) { return 1.0; });
}

Var sigmoid(Var a)
{
    return unary(
        a,
        [](double x) {
            if (x >= 0.0) {
                return 1.0 / (1.0 + std::exp(-x));
            }
            const double e = std::exp(x);
            return e / (1.0 + e);
        },
        [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Var a)
{
    return unary(
        a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var relu(Var a)
{
    return unary(
        a, [](double x) { return x > 0.0 ? x : 0.0; }, [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var elu(Var a)
{
    return unary(
        a, [](double x) { return x > 0.0 ? x : std::expm1(x); },
        [](double x, double y) { return x > 0.0 ? 1.0 : y + 1.0; });
}

Var abs(Var a)
{
    return unary(
        a, [](double x) { return std::abs(x); },
        [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Var square(Var a)
{
    return unary(
        a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var sum(Var a)
{
    const Tensor& x = a.value();
    double s = 0.0;
    for (double v : x.values()) {
        s += v;
    }
    const std::size_t ia = a.id();
    return a.tape()->record(Tensor::scalar(s), {a}, [ia](Tape& t, std::size_t self) {
        const double g = t.grad(self)[0];
        as_matrix(t.grad(ia)).array() += g;
    });
}

Var row_sum(Var a)
{
    const Tensor& x = a.value();
    Tensor y = Tensor::matrix(x.rows(), 1);
    as_matrix(y) = as_matrix(x).rowwise().sum();
    const std::size_t ia = a.id();
    return a.tape()->record(std::move(y), {a}, [ia](Tape& t, std::size_t self) {
        const Tensor& gy = t.grad(self);
        Tensor& gx = t.grad(ia);
        const std::size_t c = gx.cols();
        for (std::size_t r = 0; r < gx.rows(); ++r) {
            for (std::size_t k = 0; k < c; ++k) {
                gx(r, k) += gy[r];
            }
        }
    });
}

Var slice_cols(Var a, std::size_t begin, std::size_t end)
{
    const Tensor& x = a.value();
    if (begin > end || end > x.cols()) {
        throw ConfigError("slice_cols: range [" + std::to_string(begin) + "," + std::to_string(end) +
                          ") outside " + dims(x));
    }
    Tensor y = Tensor::matrix(x.rows(), end - begin);
    as_matrix(y) = as_matrix(x).middleCols(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(end - begin));
    const std::size_t ia = a.id();
    return a.tape()->record(std::move(y), {a}, [ia, begin, end](Tape& t, std::size_t self) {
        as_matrix(t.grad(ia)).middleCols(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(end - begin)) +=
            as_matrix(t.grad(self));
    });
}

Var concat_cols(Var a, Var b)
{
    const Tensor& x = a.value();
    const Tensor& z = b.value();
    if (x.rows() != z.rows()) {
        throw ConfigError("concat_cols: row mismatch " + dims(x) + " vs " + dims(z));
    }
    Tensor y = Tensor::matrix(x.rows(), x.cols() + z.cols());
    auto ym = as_matrix(y);
    const auto xc = static_cast<Eigen::Index>(x.cols());
    const auto zc = static_cast<Eigen::Index>(z.cols());
    ym.leftCols(xc) = as_matrix(x);
    ym.rightCols(zc) = as_matrix(z);
    const std::size_t ia = a.id();
    const std::size_t ib = b.id();
    return a.tape()->record(std::move(y), {a, b}, [ia, ib, xc, zc](Tape& t, std::size_t self) {
        const auto gy = as_matrix(t.grad(self));
        if (t.requires_grad(ia)) {
            as_matrix(t.grad(ia)) += gy.leftCols(xc);
        }
        if (t.requires_grad(ib)) {
            as_matrix(t.grad(ib)) += gy.rightCols(zc);
        }
    });
}

Var gather_cols(Var a, std::span<const std::int32_t> index)
{
    const Tensor& x = a.value();
    if (index.size() != x.rows()) {
        throw ConfigError("gather_cols: " + std::to_string(index.size()) + " indices for " + dims(x));
    }
    Tensor y = Tensor::matrix(x.rows(), 1);
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const auto c = index[r];
        if (c < 0 || static_cast<std::size_t>(c) >= x.cols()) {
            throw ConfigError("gather_cols: index " + std::to_string(c) + " out of range");
        }
        y[r] = x(r, static_cast<std::size_t>(c));
    }
    std::vector<std::int32_t> idx(index.begin(), index.end());
    const std::size_t ia = a.id();
    return a.tape()->record(std::move(y), {a}, [ia, idx = std::move(idx)](Tape& t, std::size_t self) {
        const Tensor& gy = t.grad(self);
        Tensor& gx = t.grad(ia);
        for (std::size_t r = 0; r < idx.size(); ++r) {
            gx(r, static_cast<std::size_t>(idx[r])) += gy[r];
        }
    });
}

Var reshape(Var a, std::size_t rows, std::size_t cols)
{
    const Tensor& x = a.value();
    if (rows * cols != x.size()) {
        throw ConfigError("reshape: cannot view " + dims(x) + " as [" + std::to_string(rows) + "," +
                          std::to_string(cols) + "]");
    }
    Tensor y = x.reshaped(Shape{rows, cols});
    const std::size_t ia = a.id();
    return a.tape()->record(std::move(y), {a}, [ia](Tape& t, std::size_t self) {
        const Tensor& gy = t.grad(self);
        Tensor& gx = t.grad(ia);
        for (std::size_t i = 0; i < gy.size(); ++i) {
            gx[i] += gy[i];
        }
    });
}

Var rowwise_vecmat(Var q, Var w, std::size_t m)
{
    const Tensor& qv = q.value();
    const Tensor& wv = w.value();
    const std::size_t rows = qv.rows();
    const std::size_t n = qv.cols();
    if (wv.rows() != rows || wv.cols() != n * m) {
        throw ConfigError("rowwise_vecmat: weights " + dims(wv) + " do not match " + dims(qv) + " x " +
                          std::to_string(m));
    }
    Tensor y = Tensor::matrix(rows, m);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t i = 0; i < n; ++i) {
            const double qi = qv(r, i);
            const double* wrow = wv.data() + r * n * m + i * m;
            double* yrow = y.data() + r * m;
            for (std::size_t j = 0; j < m; ++j) {
                yrow[j] += qi * wrow[j];
            }
        }
    }
    const std::size_t iq = q.id();
    const std::size_t iw = w.id();
    return q.tape()->record(std::move(y), {q, w}, [iq, iw, rows, n, m](Tape& t, std::size_t self) {
        const Tensor& gy = t.grad(self);
        const bool gq_needed = t.requires_grad(iq);
        const bool gw_needed = t.requires_grad(iw);
        const Tensor& qv = t.value(iq);
        const Tensor& wv = t.value(iw);
        Tensor* gq = gq_needed ? &t.grad(iq) : nullptr;
        Tensor* gw = gw_needed ? &t.grad(iw) : nullptr;
        for (std::size_t r = 0; r < rows; ++r) {
            const double* gyrow = gy.data() + r * m;
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t base = r * n * m + i * m;
                if (gq != nullptr) {
                    double acc = 0.0;
                    for (std::size_t j = 0; j < m; ++j) {
                        acc += gyrow[j] * wv[base + j];
                    }
                    (*gq)(r, i) += acc;
                }
                if (gw != nullptr) {
                    const double qi = qv(r, i);
                    for (std::size_t j = 0; j < m; ++j) {
                        (*gw)[base + j] += qi * gyrow[j];
                    }
                }
            }
        }
    });
}

Var masked_softmax(Var a, std::span<const std::uint8_t> mask, double temperature)
{
    const Tensor& x = a.value();
    if (mask.size() != x.size()) {
        throw ConfigError("masked_softmax: mask has " + std::to_string(mask.size()) + " entries for " + dims(x));
    }
    if (!(temperature > 0.0)) {
        throw ConfigError("masked_softmax: temperature must be positive");
    }
    const std::size_t rows = x.rows();
    const std::size_t cols = x.cols();
    Tensor y = like(x);
    for (std::size_t r = 0; r < rows; ++r) {
        double hi = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < cols; ++c) {
            if (mask[r * cols + c] != 0) {
                hi = std::max(hi, x(r, c) / temperature);
            }
        }
        if (!std::isfinite(hi)) {
            throw ContractViolation("masked_softmax: row " + std::to_string(r) + " has no legal entry");
        }
        double z = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
            if (mask[r * cols + c] != 0) {
                y(r, c) = std::exp(x(r, c) / temperature - hi);
                z += y(r, c);
            }
        }
        for (std::size_t c = 0; c < cols; ++c) {
            y(r, c) /= z;
        }
    }
    const std::size_t ia = a.id();
    return a.tape()->record(std::move(y), {a}, [ia, temperature](Tape& t, std::size_t self) {
        const Tensor& gy = t.grad(self);
        const Tensor& p = t.value(self);
        Tensor& gx = t.grad(ia);
        const std::size_t cols = p.cols();
        for (std::size_t r = 0; r < p.rows(); ++r) {
            double dot = 0.0;
            for (std::size_t c = 0; c < cols; ++c) {
                dot += p(r, c) * gy(r, c);
            }
            for (std::size_t c = 0; c < cols; ++c) {
                gx(r, c) += p(r, c) * (gy(r, c) - dot) / temperature;
            }
        }
    });
}

Var kl_to_mixture(Var p, Var others, double n)
{
    const Tensor& pv = p.value();
    const Tensor& sv = others.value();
    require_same_shape(pv, sv, "kl_to_mixture");
    if (!(n >= 1.0)) {
        throw ConfigError("kl_to_mixture: policy count must be >= 1");
    }
    const std::size_t rows = pv.rows();
    const std::size_t cols = pv.cols();
    Tensor y = Tensor::matrix(rows, 1);
    for (std::size_t r = 0; r < rows; ++r) {
        double kl = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
            const double pa = pv(r, c);
            if (pa > 0.0) {
                const double ma = (pa + sv(r, c)) / n;
                kl += pa * (std::log(pa) - std::log(ma));
            }
        }
        y[r] = kl;
    }
    const std::size_t ip = p.id();
    const std::size_t is = others.id();
    return p.tape()->record(std::move(y), {p, others}, [ip, is, n](Tape& t, std::size_t self) {
        const Tensor& gy = t.grad(self);
        const Tensor& pv = t.value(ip);
        const Tensor& sv = t.value(is);
        Tensor* gp = t.requires_grad(ip) ? &t.grad(ip) : nullptr;
        Tensor* gs = t.requires_grad(is) ? &t.grad(is) : nullptr;
        const std::size_t cols = pv.cols();
        for (std::size_t r = 0; r < pv.rows(); ++r) {
            for (std::size_t c = 0; c < cols; ++c) {
                const double pa = pv(r, c);
                if (pa <= 0.0) {
                    continue;
                }
                const double ma = (pa + sv(r, c)) / n;
                const double ratio = pa / (n * ma);
                if (gp != nullptr) {
                    (*gp)(r, c) += gy[r] * (std::log(pa) + 1.0 - std::log(ma) - ratio);
                }
                if (gs != nullptr) {
                    (*gs)(r, c) -= gy[r] * ratio;
                }
            }
        }
    });
}

}  // namespace cmarl::numerics
