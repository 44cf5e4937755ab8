#pragma once

// Small fixed-size complex linear algebra used throughout: 2-component state
// vectors and 2x2 matrices in the {|g>, |e>} basis, plus a dense complex
// matrix just big enough for the cascaded atom+cavity reference.

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

namespace nmqt {

using cplx = std::complex<double>;
inline constexpr cplx I_UNIT{0.0, 1.0};

struct cvec2 {
    cplx g{0.0, 0.0};
    cplx e{0.0, 0.0};

    cvec2() = default;
    cvec2(cplx g_, cplx e_) : g(g_), e(e_) {}

    cvec2& operator+=(const cvec2& o) { g += o.g; e += o.e; return *this; }
    cvec2& operator-=(const cvec2& o) { g -= o.g; e -= o.e; return *this; }
    cvec2& operator*=(cplx s) { g *= s; e *= s; return *this; }
    friend cvec2 operator+(cvec2 a, const cvec2& b) { return a += b; }
    friend cvec2 operator-(cvec2 a, const cvec2& b) { return a -= b; }
    friend cvec2 operator*(cplx s, cvec2 v) { return v *= s; }
    friend cvec2 operator*(double s, cvec2 v) { return v *= cplx(s, 0.0); }

    double norm2() const { return std::norm(g) + std::norm(e); }
    double norm() const { return std::sqrt(norm2()); }
};

inline cplx inner(const cvec2& a, const cvec2& b) {
    return std::conj(a.g) * b.g + std::conj(a.e) * b.e;
}

// Row-major 2x2 complex matrix.
struct cmat2 {
    std::array<cplx, 4> m{};  // m[0]=a_gg m[1]=a_ge m[2]=a_eg m[3]=a_ee

    cmat2() = default;
    cmat2(cplx a, cplx b, cplx c, cplx d) : m{a, b, c, d} {}

    static cmat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
    static cmat2 zero() { return {}; }

    cplx& operator()(int r, int c) { return m[std::size_t(2 * r + c)]; }
    cplx operator()(int r, int c) const { return m[std::size_t(2 * r + c)]; }

    cmat2& operator+=(const cmat2& o) {
        for (int i = 0; i < 4; ++i) m[std::size_t(i)] += o.m[std::size_t(i)];
        return *this;
    }
    cmat2& operator-=(const cmat2& o) {
        for (int i = 0; i < 4; ++i) m[std::size_t(i)] -= o.m[std::size_t(i)];
        return *this;
    }
    cmat2& operator*=(cplx s) {
        for (auto& x : m) x *= s;
        return *this;
    }
    friend cmat2 operator+(cmat2 a, const cmat2& b) { return a += b; }
    friend cmat2 operator-(cmat2 a, const cmat2& b) { return a -= b; }
    friend cmat2 operator*(cplx s, cmat2 a) { return a *= s; }
    friend cmat2 operator*(double s, cmat2 a) { return a *= cplx(s, 0.0); }

    friend cmat2 operator*(const cmat2& a, const cmat2& b) {
        return {a.m[0] * b.m[0] + a.m[1] * b.m[2], a.m[0] * b.m[1] + a.m[1] * b.m[3],
                a.m[2] * b.m[0] + a.m[3] * b.m[2], a.m[2] * b.m[1] + a.m[3] * b.m[3]};
    }
    friend cvec2 operator*(const cmat2& a, const cvec2& v) {
        return {a.m[0] * v.g + a.m[1] * v.e, a.m[2] * v.g + a.m[3] * v.e};
    }

    cplx det() const { return m[0] * m[3] - m[1] * m[2]; }
    cplx trace() const { return m[0] + m[3]; }

    cmat2 inverse() const {
        cplx d = det();
        return {m[3] / d, -m[1] / d, -m[2] / d, m[0] / d};
    }

    double frobenius_norm() const {
        double s = 0.0;
        for (const auto& x : m) s += std::norm(x);
        return std::sqrt(s);
    }
};

// Frobenius distance, for closeness checks in tests and invariants.
inline double mat_distance(const cmat2& a, const cmat2& b) { return (a - b).frobenius_norm(); }
inline double vec_distance(const cvec2& a, const cvec2& b) { return (a - b).norm(); }

// Dense column: used by the cascaded reference (dimension 2*(n_max+1)).
using cvec = std::vector<cplx>;

struct cmat {
    std::size_t n = 0;
    std::vector<cplx> a;  // row-major n x n

    cmat() = default;
    explicit cmat(std::size_t dim) : n(dim), a(dim * dim, cplx{0.0, 0.0}) {}

    cplx& operator()(std::size_t r, std::size_t c) { return a[r * n + c]; }
    cplx operator()(std::size_t r, std::size_t c) const { return a[r * n + c]; }

    static cmat identity(std::size_t dim) {
        cmat m(dim);
        for (std::size_t i = 0; i < dim; ++i) m(i, i) = 1.0;
        return m;
    }

    friend cmat operator*(const cmat& x, const cmat& y) {
        cmat r(x.n);
        for (std::size_t i = 0; i < x.n; ++i)
            for (std::size_t k = 0; k < x.n; ++k) {
                cplx xik = x(i, k);
                if (xik == cplx{0.0, 0.0}) continue;
                for (std::size_t j = 0; j < x.n; ++j) r(i, j) += xik * y(k, j);
            }
        return r;
    }
    friend cvec operator*(const cmat& x, const cvec& v) {
        cvec r(x.n, cplx{0.0, 0.0});
        for (std::size_t i = 0; i < x.n; ++i) {
            cplx s{0.0, 0.0};
            for (std::size_t j = 0; j < x.n; ++j) s += x(i, j) * v[j];
            r[i] = s;
        }
        return r;
    }
    cmat& operator+=(const cmat& o) {
        for (std::size_t i = 0; i < a.size(); ++i) a[i] += o.a[i];
        return *this;
    }
    cmat& operator*=(cplx s) {
        for (auto& x : a) x *= s;
        return *this;
    }
    cmat dagger() const {
        cmat r(n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) r(i, j) = std::conj((*this)(j, i));
        return r;
    }
    double max_abs() const {
        double m = 0.0;
        for (const auto& x : a) m = std::max(m, std::abs(x));
        return m;
    }
};

inline double vnorm2(const cvec& v) {
    double s = 0.0;
    for (const auto& x : v) s += std::norm(x);
    return s;
}

// exp(A) by scaling-and-squaring with a Taylor series. The matrices fed in
// here are generators times a small dt, so the series converges fast.
inline cmat expm(const cmat& A) {
    double scale = A.max_abs() * double(A.n);
    int squarings = 0;
    while (scale > 0.5) {
        scale *= 0.5;
        ++squarings;
    }
    cmat B = A;
    B *= cplx(std::ldexp(1.0, -squarings), 0.0);
    cmat result = cmat::identity(A.n);
    cmat term = cmat::identity(A.n);
    for (int k = 1; k <= 24; ++k) {
        term = term * B;
        term *= cplx(1.0 / k, 0.0);
        result += term;
        if (term.max_abs() < 1e-18) break;
    }
    for (int s = 0; s < squarings; ++s) result = result * result;
    return result;
}

} // namespace nmqt
