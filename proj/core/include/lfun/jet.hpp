#pragma once
// Truncated power-series ("jet") arithmetic.
//
//   Jet1<S>     one variable, dense coefficients, elementary functions via
//               the usual convolution recurrences.  S is a field: double,
//               dd, or Cx<> of either.
//   RectJet2<S> two variables on a full rectangle of orders (nt, ny);
//               what the evaluation engine consumes.  Rows are y-jets.
//   Jet3<S>     three variables on the total-degree simplex; cold path,
//               used for chart jets in group coordinates and their tests.
//
// Binary Jet1 ops require equal orders; pad polynomials up front.

#include <cassert>
#include <cmath>
#include <vector>

#include "lfun/cx.hpp"

namespace lfun {

template <class S>
struct Jet1 {
  using scalar = S;
  std::vector<S> c;

  Jet1() = default;
  explicit Jet1(int order) : c(size_t(order) + 1) {}
  Jet1(int order, S c0) : c(size_t(order) + 1) { c[0] = c0; }

  int order() const { return int(c.size()) - 1; }
  S &operator[](int i) { return c[size_t(i)]; }
  const S &operator[](int i) const { return c[size_t(i)]; }

  Jet1 resized(int order) const {
    Jet1 r(order);
    int m = std::min(order, this->order());
    for (int i = 0; i <= m; ++i) r.c[size_t(i)] = c[size_t(i)];
    return r;
  }
};

template <class S> Jet1<S> operator+(const Jet1<S> &a, const Jet1<S> &b) {
  assert(a.order() == b.order());
  Jet1<S> r(a.order());
  for (int i = 0; i <= a.order(); ++i) r[i] = a[i] + b[i];
  return r;
}

template <class S> Jet1<S> operator-(const Jet1<S> &a, const Jet1<S> &b) {
  assert(a.order() == b.order());
  Jet1<S> r(a.order());
  for (int i = 0; i <= a.order(); ++i) r[i] = a[i] - b[i];
  return r;
}

template <class S> Jet1<S> operator-(const Jet1<S> &a) {
  Jet1<S> r(a.order());
  for (int i = 0; i <= a.order(); ++i) r[i] = -a[i];
  return r;
}

template <class S, class T> Jet1<S> operator*(const Jet1<S> &a, T s) {
  Jet1<S> r(a.order());
  for (int i = 0; i <= a.order(); ++i) r[i] = a[i] * s;
  return r;
}

template <class S> void mul_into(Jet1<S> &r, const Jet1<S> &a, const Jet1<S> &b) {
  int n = a.order();
  assert(b.order() == n);
  r.c.assign(size_t(n) + 1, S{});
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; j + i <= n; ++j) r[i + j] += a[i] * b[j];
  }
}

template <class S> Jet1<S> operator*(const Jet1<S> &a, const Jet1<S> &b) {
  Jet1<S> r;
  mul_into(r, a, b);
  return r;
}

template <class S> Jet1<S> operator/(const Jet1<S> &a, const Jet1<S> &b) {
  int n = a.order();
  assert(b.order() == n);
  Jet1<S> r(n);
  for (int m = 0; m <= n; ++m) {
    S acc = a[m];
    for (int j = 0; j < m; ++j) acc -= r[j] * b[m - j];
    r[m] = acc / b[0];
  }
  return r;
}

template <class S> Jet1<S> derivative(const Jet1<S> &a) {
  int n = a.order();
  Jet1<S> r(n > 0 ? n - 1 : 0);
  if (n == 0) return r;
  for (int m = 1; m <= n; ++m) r[m - 1] = a[m] * double(m);
  return r;
}

template <class S> Jet1<S> antiderivative(const Jet1<S> &a, S c0) {
  int n = a.order();
  Jet1<S> r(n + 1);
  r[0] = c0;
  for (int m = 0; m <= n; ++m) r[m + 1] = a[m] * (1.0 / double(m + 1));
  return r;
}

template <class S, class X> S eval(const Jet1<S> &a, X x) {
  S acc = a[a.order()];
  for (int m = a.order() - 1; m >= 0; --m) acc = acc * x + a[m];
  return acc;
}

// integral over [0, h] of the truncated series
template <class S, class X> S integrate0h(const Jet1<S> &a, X h) {
  int n = a.order();
  S acc = a[n] * (1.0 / double(n + 1));
  for (int m = n - 1; m >= 0; --m) acc = acc * h + a[m] * (1.0 / double(m + 1));
  return acc * h;
}

// f(g(tau)); the constant term of g is ignored (treated as expansion point)
template <class S> Jet1<S> compose(const Jet1<S> &f, const Jet1<S> &g) {
  int n = g.order();
  Jet1<S> gz = g;
  gz[0] = S{};
  int top = f.order();
  Jet1<S> r(n);
  r[0] = f[top];
  Jet1<S> tmp;
  for (int m = top - 1; m >= 0; --m) {
    mul_into(tmp, r, gz);
    tmp[0] += f[m];
    r = tmp;
  }
  return r;
}

template <class S> Jet1<S> exp(const Jet1<S> &a) {
  using std::exp;
  int n = a.order();
  Jet1<S> e(n);
  e[0] = exp(a[0]);
  for (int m = 1; m <= n; ++m) {
    S acc{};
    for (int j = 1; j <= m; ++j) acc += a[j] * e[m - j] * double(j);
    e[m] = acc * (1.0 / double(m));
  }
  return e;
}

template <class S> Jet1<S> log(const Jet1<S> &a) {
  using std::log;
  int n = a.order();
  Jet1<S> l(n);
  l[0] = log(a[0]);
  for (int m = 1; m <= n; ++m) {
    S acc = a[m] * double(m);
    for (int j = 1; j < m; ++j) acc -= l[j] * a[m - j] * double(j);
    l[m] = acc * (1.0 / double(m)) / a[0];
  }
  return l;
}

template <class S> void sincos_jets(const Jet1<S> &a, Jet1<S> &s, Jet1<S> &c) {
  using std::sin;
  using std::cos;
  int n = a.order();
  s = Jet1<S>(n);
  c = Jet1<S>(n);
  s[0] = sin(a[0]);
  c[0] = cos(a[0]);
  for (int m = 1; m <= n; ++m) {
    S as{}, ac{};
    for (int j = 1; j <= m; ++j) {
      as += a[j] * c[m - j] * double(j);
      ac += a[j] * s[m - j] * double(j);
    }
    s[m] = as * (1.0 / double(m));
    c[m] = -ac * (1.0 / double(m));
  }
}

template <class S> Jet1<S> atan_jet(const Jet1<S> &a) {
  using std::atan;
  int n = a.order();
  if (n == 0) {
    Jet1<S> r(0);
    r[0] = atan(a[0]);
    return r;
  }
  Jet1<S> d = (a * a).resized(n - 1);
  d[0] += S(1.0);
  Jet1<S> num = derivative(a);
  Jet1<S> q = num / d;
  return antiderivative(q, S(atan(a[0]))).resized(n);
}

// a^alpha, real exponent, a[0] != 0
template <class S> Jet1<S> pow_jet(const Jet1<S> &a, double alpha) {
  using std::pow;
  int n = a.order();
  Jet1<S> p(n);
  p[0] = pow(a[0], alpha);
  for (int m = 1; m <= n; ++m) {
    S acc{};
    for (int j = 1; j <= m; ++j) acc += a[j] * p[m - j] * (alpha * double(j) - double(m - j));
    p[m] = acc * (1.0 / double(m)) / a[0];
  }
  return p;
}

template <class R> Jet1<Cx<R>> complexify(const Jet1<R> &a) {
  Jet1<Cx<R>> r(a.order());
  for (int i = 0; i <= a.order(); ++i) r[i] = Cx<R>{a[i]};
  return r;
}

// real positive constant-term jet raised to a complex power
template <class R> Jet1<Cx<R>> pow_jet_c(const Jet1<R> &a, Cx<R> alpha) {
  Jet1<R> l = log(a);
  Jet1<Cx<R>> z(a.order());
  for (int i = 0; i <= a.order(); ++i) z[i] = alpha * l[i];
  return exp(z);
}

// ---------------------------------------------------------------------------

// Rectangular bivariate jet: coefficient of t^i y^j at [i*(ny+1) + j].
template <class S>
struct RectJet2 {
  int nt = 0, ny = 0;
  std::vector<S> c;

  RectJet2() = default;
  RectJet2(int nt_, int ny_) : nt(nt_), ny(ny_), c(size_t(nt_ + 1) * size_t(ny_ + 1)) {}

  S &at(int i, int j) { return c[size_t(i) * size_t(ny + 1) + size_t(j)]; }
  const S &at(int i, int j) const { return c[size_t(i) * size_t(ny + 1) + size_t(j)]; }

  void clear() { c.assign(c.size(), S{}); }

  // += scale * tj(t) * yj(y); tj, yj may be shorter than the rectangle
  void add_outer(S scale, const Jet1<S> &tj, const Jet1<S> &yj) {
    int it = std::min(nt, tj.order());
    int jy = std::min(ny, yj.order());
    for (int i = 0; i <= it; ++i) {
      S f = scale * tj[i];
      S *row = &c[size_t(i) * size_t(ny + 1)];
      for (int j = 0; j <= jy; ++j) row[j] += f * yj[j];
    }
  }

  // multiply in place by a jet in y alone (every row convolved)
  void mul_yjet(const Jet1<S> &yj) {
    std::vector<S> tmp(size_t(ny) + 1);
    for (int i = 0; i <= nt; ++i) {
      S *row = &c[size_t(i) * size_t(ny + 1)];
      for (int j = 0; j <= ny; ++j) {
        S acc{};
        for (int q = 0; q <= j && q <= yj.order(); ++q) acc += yj[q] * row[j - q];
        tmp[size_t(j)] = acc;
      }
      for (int j = 0; j <= ny; ++j) row[j] = tmp[size_t(j)];
    }
  }

  // t-jet of d^(b1)_t d^(b2)_y F along y = 0, as Taylor coefficients:
  // out[m] = C(b1+m, m) * (b1+m)! / (b1+m choose..)  -- concretely
  // out[m] = coeff(t^{b1+m}, y^{b2}) * (b1+m)!/m! * b2!
  Jet1<S> shifted_tjet(int b1, int b2, int out_order) const {
    Jet1<S> r(out_order);
    for (int m = 0; m <= out_order; ++m) {
      int p = b1 + m;
      if (p > nt || b2 > ny) break;
      double f = 1.0;
      for (int q = 1; q <= b1; ++q) f *= double(m + q);
      for (int q = 2; q <= b2; ++q) f *= double(q);
      r[m] = at(p, b2) * f;
    }
    return r;
  }

  // F(tj(u), yj(u)) as a jet in u; tj[0] and yj[0] must be 0.
  // Horner in t of rows evaluated by Horner in y.
  Jet1<S> compose2(const Jet1<S> &tj, const Jet1<S> &yj) const {
    int n = tj.order();
    assert(yj.order() == n);
    // row polynomials in y composed with yj, then Horner accumulate in t
    Jet1<S> acc(n);
    Jet1<S> rowv(n), tmp;
    for (int i = nt; i >= 0; --i) {
      // rowv = row_i(yj)
      rowv.c.assign(size_t(n) + 1, S{});
      rowv[0] = at(i, ny);
      for (int j = ny - 1; j >= 0; --j) {
        mul_into(tmp, rowv, yj);
        tmp[0] += at(i, j);
        rowv = tmp;
      }
      if (i == nt) {
        acc = rowv;
      } else {
        mul_into(tmp, acc, tj);
        acc = tmp + rowv;
      }
    }
    return acc;
  }
};

// ---------------------------------------------------------------------------

// Simplex trivariate jet to total order n; coefficient of a^b1 b^b2 c^b3.
template <class S>
struct Jet3 {
  int n = 0;
  std::vector<S> c;

  Jet3() = default;
  explicit Jet3(int order)
      : n(order), c(size_t(order + 1) * size_t(order + 2) * size_t(order + 3) / 6) {}

  // entries with first index < b1 form simplices of sizes C(n-i+2, 2)
  size_t index3(int b1, int b2, int b3) const {
    assert(b1 + b2 + b3 <= n);
    size_t off = 0;
    for (int i = 0; i < b1; ++i) {
      int m = n - i;
      off += size_t(m + 1) * size_t(m + 2) / 2;
    }
    int m2 = n - b1;
    for (int j = 0; j < b2; ++j) off += size_t(m2 - j + 1);
    return off + size_t(b3);
  }

  S &at(int b1, int b2, int b3) { return c[index3(b1, b2, b3)]; }
  const S &at(int b1, int b2, int b3) const { return c[index3(b1, b2, b3)]; }

  template <class X> S eval(X a, X b, X cc) const {
    S acc{};
    // low-to-high accumulation; fine for the test-only sizes this is used at
    std::vector<X> pa(size_t(n) + 1), pb(size_t(n) + 1), pc(size_t(n) + 1);
    pa[0] = X(1.0);
    pb[0] = X(1.0);
    pc[0] = X(1.0);
    for (int i = 1; i <= n; ++i) {
      pa[size_t(i)] = pa[size_t(i - 1)] * a;
      pb[size_t(i)] = pb[size_t(i - 1)] * b;
      pc[size_t(i)] = pc[size_t(i - 1)] * cc;
    }
    for (int b1 = 0; b1 <= n; ++b1)
      for (int b2 = 0; b1 + b2 <= n; ++b2)
        for (int b3 = 0; b1 + b2 + b3 <= n; ++b3)
          acc += at(b1, b2, b3) * (pa[size_t(b1)] * pb[size_t(b2)] * pc[size_t(b3)]);
    return acc;
  }
};

} // namespace lfun
