// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include "nsadf/quantreg.hpp"

#include "nsadf/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace nsadf {

namespace {

struct Breakpoint
{
  double eps;
  double weight;
  int index;
};

bool breakpoint_less(const Breakpoint& a, const Breakpoint& b)
{
  return a.eps < b.eps || (a.eps == b.eps && a.index < b.index);
}

// Position of the breakpoint at which the cumulative weight (in eps order)
// first reaches target. On return every breakpoint before that position has a
// smaller-or-equal eps. Returns size() if the total weight falls short.
std::size_t weighted_select(std::vector<Breakpoint>& bp, double target)
{
  std::size_t lo = 0, hi = bp.size();
  double acc = 0.0;
  while (hi - lo > 32) {
    const std::size_t mid = lo + (hi - lo) / 2;
    std::nth_element(bp.begin() + static_cast<std::ptrdiff_t>(lo),
                     bp.begin() + static_cast<std::ptrdiff_t>(mid),
                     bp.begin() + static_cast<std::ptrdiff_t>(hi),
                     breakpoint_less);
    double w = 0.0;
    for (std::size_t i = lo; i <= mid; ++i)
      w += bp[i].weight;
    if (acc + w >= target) {
      hi = mid + 1;
    } else {
      acc += w;
      lo = mid + 1;
    }
  }
  std::sort(bp.begin() + static_cast<std::ptrdiff_t>(lo),
            bp.begin() + static_cast<std::ptrdiff_t>(hi),
            breakpoint_less);
  for (std::size_t i = lo; i < hi; ++i) {
    acc += bp[i].weight;
    if (acc >= target)
      return i;
  }
  return bp.size();
}

bool invert_basis(const double* x, std::size_t p, const std::vector<int>& basis, Eigen::MatrixXd& binv)
{
  const auto pp = static_cast<Eigen::Index>(p);
  Eigen::MatrixXd xb(pp, pp);
  for (Eigen::Index k = 0; k < pp; ++k)
    for (Eigen::Index j = 0; j < pp; ++j)
      xb(k, j) = x[static_cast<std::size_t>(basis[static_cast<std::size_t>(k)]) * p + static_cast<std::size_t>(j)];
  Eigen::FullPivLU<Eigen::MatrixXd> lu(xb);
  lu.setThreshold(1e-12);
  if (!lu.isInvertible())
    return false;
  binv = lu.inverse();
  return true;
}

struct SimplexState
{
  std::vector<int>& basis;
  Eigen::MatrixXd& binv;
  int pivots;
  bool optimal;
};

// Edge-following simplex for the check-loss LP on column-scaled data (x is
// row-major, xc the column-major copy). Pivots only scan a working set of
// points with small residuals. A point outside the set has |r| >= delta, and
// |x_i'd| <= sqrt(max_leverage * d'Gd) for any shift d of the coefficients, so
// it keeps its sign while that bound stays below delta.
template <int P>
void run_simplex(const double* x,
                 const double* xc,
                 const double* y,
                 std::size_t n,
                 std::size_t p_runtime,
                 const Eigen::MatrixXd& gram,
                 double max_leverage,
                 double q,
                 int max_pivots,
                 SimplexState& st)
{
  const std::size_t p = P > 0 ? static_cast<std::size_t>(P) : p_runtime;
  const auto pe = static_cast<Eigen::Index>(p);
  std::vector<int>& basis = st.basis;
  Eigen::MatrixXd& binv = st.binv;

  const double ztol = 1e-13;
  const double stol = 1e-11 * std::max(1.0, std::sqrt(static_cast<double>(n)));
  const std::size_t working_size = std::min(n, std::max<std::size_t>(64 * p, n / 16));
  constexpr double inf = std::numeric_limits<double>::infinity();

  std::vector<char> in_basis(n, 0);
  for (int b : basis)
    in_basis[static_cast<std::size_t>(b)] = 1;

  // Working-set arrays, indexed by position in `act`.
  std::vector<int> act;
  std::vector<double> xa, ra, ca;
  std::vector<signed char> sa;
  std::vector<int> degenerate; // positions in act
  std::vector<double> rfull(n), absr;
  Eigen::VectorXd v(pe), pi(pe), pi0(pe), g(pe), a(pe), col(pe);
  double delta = inf;

  auto psi = [q](signed char s) { return s > 0 ? q : (s < 0 ? q - 1.0 : 0.0); };
  auto classify = [ztol](double ri) -> signed char { return std::abs(ri) <= ztol ? 0 : (ri > 0.0 ? 1 : -1); };
  auto add_row = [&](const double* xi, double w) {
    for (std::size_t j = 0; j < p; ++j)
      v[static_cast<Eigen::Index>(j)] += w * xi[j];
  };
  auto current_pi = [&]() {
    Eigen::VectorXd yh(pe);
    for (Eigen::Index k = 0; k < pe; ++k)
      yh[k] = y[basis[static_cast<std::size_t>(k)]];
    return Eigen::VectorXd(binv * yh);
  };

  auto refresh = [&](bool everything) {
    pi = current_pi();
    pi0 = pi;
    std::fill(rfull.begin(), rfull.end(), 0.0);
    for (std::size_t j = 0; j < p; ++j) {
      const double w = pi[static_cast<Eigen::Index>(j)];
      const double* xj = xc + j * n;
      for (std::size_t i = 0; i < n; ++i)
        rfull[i] += w * xj[i];
    }
    for (std::size_t i = 0; i < n; ++i)
      rfull[i] = in_basis[i] ? 0.0 : y[i] - rfull[i];

    delta = inf;
    if (!everything && working_size < n) {
      absr.resize(n);
      for (std::size_t i = 0; i < n; ++i)
        absr[i] = std::abs(rfull[i]);
      std::nth_element(absr.begin(), absr.begin() + static_cast<std::ptrdiff_t>(working_size), absr.end());
      delta = absr[working_size];
    }

    v.setZero();
    act.clear();
    xa.clear();
    ra.clear();
    sa.clear();
    degenerate.clear();
    for (std::size_t i = 0; i < n; ++i) {
      const double* xi = x + i * p;
      if (in_basis[i] || std::abs(rfull[i]) < delta) {
        const signed char s = in_basis[i] ? 0 : classify(rfull[i]);
        if (s == 0 && !in_basis[i])
          degenerate.push_back(static_cast<int>(act.size()));
        act.push_back(static_cast<int>(i));
        xa.insert(xa.end(), xi, xi + p);
        ra.push_back(rfull[i]);
        sa.push_back(s);
        if (s != 0)
          add_row(xi, psi(s));
      } else {
        add_row(xi, psi(rfull[i] > 0.0 ? 1 : -1));
      }
    }
    ca.resize(act.size());
  };

  std::vector<Breakpoint> bps;
  bool exact = true;       // residuals were just recomputed from scratch
  bool widened = false;    // working set currently covers every point
  refresh(false);

  for (;;) {
    g = binv.transpose() * v;
    Eigen::VectorXd plus = Eigen::VectorXd::Constant(pe, q) + g;
    Eigen::VectorXd minus = Eigen::VectorXd::Constant(pe, 1.0 - q) - g;
    for (int d : degenerate) {
      a = binv.transpose() * Eigen::Map<const Eigen::VectorXd>(&xa[static_cast<std::size_t>(d) * p], pe);
      for (Eigen::Index k = 0; k < pe; ++k) {
        plus[k] += a[k] > 0.0 ? q * a[k] : (q - 1.0) * a[k];
        minus[k] += -a[k] > 0.0 ? -q * a[k] : -(q - 1.0) * a[k];
      }
    }

    Eigen::Index kbest = 0;
    double sbest = 0.0;
    int sign = 0;
    for (Eigen::Index k = 0; k < pe; ++k) {
      if (plus[k] < sbest) {
        sbest = plus[k];
        kbest = k;
        sign = 1;
      }
      if (minus[k] < sbest) {
        sbest = minus[k];
        kbest = k;
        sign = -1;
      }
    }
    if (sign == 0 || sbest >= -stol) {
      if (exact) {
        st.optimal = true;
        return;
      }
      // Confirm optimality on freshly computed residuals before stopping.
      refresh(false);
      exact = true;
      widened = false;
      continue;
    }
    if (st.pivots >= max_pivots)
      return;

    // Moving the vertex by eps along the chosen edge changes r_i by eps * c_i
    // and the coefficients by -eps * col.
    col = binv.col(kbest) * static_cast<double>(sign);
    const std::size_t m = act.size();
    bps.clear();
    for (std::size_t k = 0; k < m; ++k) {
      const double* xk = &xa[k * p];
      double ck = 0.0;
      if constexpr (P > 0) {
        for (int j = 0; j < P; ++j)
          ck += xk[j] * col[j];
      } else {
        for (std::size_t j = 0; j < p; ++j)
          ck += xk[j] * col[static_cast<Eigen::Index>(j)];
      }
      ca[k] = ck;
      if (sa[k] != 0 && ra[k] * ck < 0.0)
        bps.push_back({-ra[k] / ck, std::abs(ck), static_cast<int>(k)});
    }
    const double target = -sbest;
    const std::size_t pos = weighted_select(bps, target);
    const double step = pos < bps.size() ? bps[pos].eps : inf;

    bool safe = std::isinf(delta);
    if (!safe && pos < bps.size()) {
      const Eigen::VectorXd shift = pi - step * col - pi0;
      safe = max_leverage * shift.dot(gram * shift) < delta * delta;
    }
    if (!safe) {
      if (widened) {
        if (pos >= bps.size())
          return; // unbounded direction; only reachable through round-off
      } else {
        refresh(exact);
        widened = exact;
        exact = true;
        continue;
      }
    }

    const auto k_enter = static_cast<std::size_t>(bps[pos].index);
    const auto enter = static_cast<std::size_t>(act[k_enter]);
    const auto leave = static_cast<std::size_t>(basis[static_cast<std::size_t>(kbest)]);
    in_basis[leave] = 0;
    basis[static_cast<std::size_t>(kbest)] = static_cast<int>(enter);
    in_basis[enter] = 1;
    if (!invert_basis(x, p, basis, binv))
      throw NumericalError("quantile_regression", "pivot produced a singular vertex");
    ++st.pivots;
    pi -= step * col;

    degenerate.clear();
    for (std::size_t k = 0; k < m; ++k) {
      const bool basic = in_basis[static_cast<std::size_t>(act[k])];
      const double rk = basic ? 0.0 : ra[k] + step * ca[k];
      ra[k] = rk;
      const signed char s = basic ? 0 : classify(rk);
      if (s != sa[k]) {
        add_row(&xa[k * p], psi(s) - psi(sa[k]));
        sa[k] = s;
      }
      if (s == 0 && !basic)
        degenerate.push_back(static_cast<int>(k));
    }
    exact = false;
  }
}

} // namespace

double total_check_loss(const Eigen::MatrixXd& design,
                        std::span<const double> response,
                        const Eigen::VectorXd& coeffs,
                        double q)
{
  if (static_cast<std::size_t>(design.rows()) != response.size() || design.cols() != coeffs.size())
    throw InvalidArgument("total_check_loss: dimension mismatch");
  double loss = 0.0;
  for (Eigen::Index i = 0; i < design.rows(); ++i)
    loss += check_loss(response[static_cast<std::size_t>(i)] - design.row(i).dot(coeffs), q);
  return loss;
}

QuantileRegressor::QuantileRegressor(const Eigen::MatrixXd& design, QrOptions options)
  : n_(static_cast<std::size_t>(design.rows()))
  , p_(static_cast<std::size_t>(design.cols()))
  , design_(design)
  , options_(options)
{
  if (p_ == 0)
    throw InvalidArgument("quantile regression: design has no columns");
  if (n_ < p_)
    throw InvalidArgument("quantile regression: fewer rows than columns");
  if (!design.allFinite())
    throw InvalidArgument("quantile regression: design contains non-finite values");

  col_scale_.resize(static_cast<Eigen::Index>(p_));
  for (std::size_t j = 0; j < p_; ++j) {
    const double s = design.col(static_cast<Eigen::Index>(j)).cwiseAbs().maxCoeff();
    col_scale_[static_cast<Eigen::Index>(j)] = s > 0.0 ? s : 1.0;
  }
  x_.resize(n_ * p_);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = 0; j < p_; ++j)
      x_[i * p_ + j] = design(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) /
                       col_scale_[static_cast<Eigen::Index>(j)];

  xc_.resize(n_ * p_);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = 0; j < p_; ++j)
      xc_[j * n_ + i] = x_[i * p_ + j];

  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> xs(
    x_.data(), static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(p_));
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xs);
  qr.setThreshold(1e-10);
  if (static_cast<std::size_t>(qr.rank()) < p_)
    throw NumericalError("quantile_regression", "design matrix is rank deficient");

  gram_ = xs.transpose() * xs;
  const Eigen::LLT<Eigen::MatrixXd> llt(gram_);
  for (std::size_t i = 0; i < n_; ++i) {
    const Eigen::VectorXd xi = xs.row(static_cast<Eigen::Index>(i)).transpose();
    max_leverage_ = std::max(max_leverage_, xi.dot(llt.solve(xi)));
  }
  // Slack for round-off in the leverage and quadratic-form evaluation.
  max_leverage_ *= 1.0 + 1e-8;
}

bool QuantileRegressor::pick_independent(const std::vector<int>& order, std::vector<int>& basis) const
{
  basis.clear();
  std::vector<Eigen::VectorXd> ortho;
  Eigen::VectorXd v(static_cast<Eigen::Index>(p_));
  for (int i : order) {
    for (std::size_t j = 0; j < p_; ++j)
      v[static_cast<Eigen::Index>(j)] = x_[static_cast<std::size_t>(i) * p_ + j];
    const double norm0 = v.norm();
    if (norm0 == 0.0)
      continue;
    for (const auto& u : ortho)
      v -= u.dot(v) * u;
    const double nv = v.norm();
    if (nv > 1e-6 * norm0) {
      ortho.push_back(v / nv);
      basis.push_back(i);
      if (basis.size() == p_)
        return true;
    }
  }
  return false;
}

std::vector<int> QuantileRegressor::irls_start(std::span<const double> y, double q) const
{
  const auto n = static_cast<Eigen::Index>(n_);
  const auto p = static_cast<Eigen::Index>(p_);
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> xs(x_.data(), n, p);
  Eigen::Map<const Eigen::VectorXd> yv(y.data(), n);

  Eigen::VectorXd pi = (xs.transpose() * xs).ldlt().solve(xs.transpose() * yv);
  Eigen::VectorXd r = yv - xs * pi;

  double eps = 1e-2;
  double last = r.unaryExpr([q](double e) { return check_loss(e, q); }).sum();
  Eigen::VectorXd w(n);
  for (int it = 0; it < options_.irls_iterations && eps >= 1e-8; ++it) {
    for (Eigen::Index i = 0; i < n; ++i)
      w[i] = (r[i] >= 0.0 ? q : 1.0 - q) / std::max(std::abs(r[i]), eps);
    const Eigen::MatrixXd xtwx = xs.transpose() * w.asDiagonal() * xs;
    const Eigen::VectorXd xtwy = xs.transpose() * w.cwiseProduct(yv);
    Eigen::VectorXd next = xtwx.ldlt().solve(xtwy);
    if (!next.allFinite())
      break;
    pi = next;
    r = yv - xs * pi;
    const double loss = r.unaryExpr([q](double e) { return check_loss(e, q); }).sum();
    if (last - loss <= 1e-4 * std::abs(last))
      eps *= 0.5;
    last = loss;
  }

  std::vector<int> order(n_);
  std::iota(order.begin(), order.end(), 0);
  const std::size_t head = std::min<std::size_t>(n_, 8 * p_);
  auto by_abs = [&r](int a, int b) {
    const double ra = std::abs(r[a]), rb = std::abs(r[b]);
    return ra < rb || (ra == rb && a < b);
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(head), order.end(), by_abs);
  std::vector<int> basis;
  std::vector<int> first(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(head));
  if (pick_independent(first, basis))
    return basis;
  std::sort(order.begin(), order.end(), by_abs);
  if (pick_independent(order, basis))
    return basis;
  throw NumericalError("quantile_regression", "could not find a nonsingular starting vertex");
}

QuantileFit QuantileRegressor::fit(std::span<const double> response, double q, std::span<const int> warm_basis) const
{
  if (!(q > 0.0 && q < 1.0))
    throw InvalidArgument("quantile regression: q must lie in (0,1)");
  if (response.size() != n_)
    throw InvalidArgument("quantile regression: response length does not match design");

  double yscale = 0.0;
  for (double v : response) {
    if (!std::isfinite(v))
      throw InvalidArgument("quantile regression: response contains non-finite values");
    yscale = std::max(yscale, std::abs(v));
  }
  if (yscale == 0.0)
    yscale = 1.0;
  std::vector<double> y(n_);
  for (std::size_t i = 0; i < n_; ++i)
    y[i] = response[i] / yscale;

  const auto p = static_cast<Eigen::Index>(p_);
  Eigen::MatrixXd binv(p, p);
  auto factor = [&](const std::vector<int>& b) { return invert_basis(x_.data(), p_, b, binv); };

  std::vector<int> basis;
  if (warm_basis.size() == p_) {
    basis.assign(warm_basis.begin(), warm_basis.end());
    std::vector<int> sorted = basis;
    std::sort(sorted.begin(), sorted.end());
    const bool valid = sorted.front() >= 0 && static_cast<std::size_t>(sorted.back()) < n_ &&
                       std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end();
    if (!valid || !factor(basis))
      basis.clear();
  }
  if (basis.empty()) {
    basis = irls_start(y, q);
    if (!factor(basis))
      throw NumericalError("quantile_regression", "singular starting vertex");
  }

  SimplexState st{basis, binv, 0, false};
  const int max_pivots = options_.max_pivots > 0 ? options_.max_pivots : static_cast<int>(20 * n_);
  switch (p_) {
  case 1: run_simplex<1>(x_.data(), xc_.data(), y.data(), n_, p_, gram_, max_leverage_, q, max_pivots, st); break;
  case 2: run_simplex<2>(x_.data(), xc_.data(), y.data(), n_, p_, gram_, max_leverage_, q, max_pivots, st); break;
  case 3: run_simplex<3>(x_.data(), xc_.data(), y.data(), n_, p_, gram_, max_leverage_, q, max_pivots, st); break;
  case 4: run_simplex<4>(x_.data(), xc_.data(), y.data(), n_, p_, gram_, max_leverage_, q, max_pivots, st); break;
  case 5: run_simplex<5>(x_.data(), xc_.data(), y.data(), n_, p_, gram_, max_leverage_, q, max_pivots, st); break;
  case 6: run_simplex<6>(x_.data(), xc_.data(), y.data(), n_, p_, gram_, max_leverage_, q, max_pivots, st); break;
  default: run_simplex<0>(x_.data(), xc_.data(), y.data(), n_, p_, gram_, max_leverage_, q, max_pivots, st); break;
  }

  // Coefficients always come from the final vertex, not the running updates.
  Eigen::VectorXd yh(p);
  for (Eigen::Index k = 0; k < p; ++k)
    yh[k] = y[static_cast<std::size_t>(basis[static_cast<std::size_t>(k)])];
  const Eigen::VectorXd pi = binv * yh;

  QuantileFit out;
  out.q = q;
  out.pivots = st.pivots;
  out.converged = st.optimal;
  out.coeffs.resize(p);
  for (Eigen::Index j = 0; j < p; ++j)
    out.coeffs[j] = pi[j] * yscale / col_scale_[j];
  out.basis = basis;
  const Eigen::VectorXd resid =
    Eigen::Map<const Eigen::VectorXd>(response.data(), static_cast<Eigen::Index>(n_)) - design_ * out.coeffs;
  out.achieved_loss = resid.unaryExpr([q](double e) { return check_loss(e, q); }).sum();
  return out;
}

std::vector<QuantileFit> QuantileRegressor::fit_path(std::span<const double> response, std::span<const double> qs) const
{
  std::vector<std::size_t> order(qs.size());
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return qs[a] < qs[b]; });
  std::vector<QuantileFit> fits(qs.size());
  std::vector<int> warm;
  for (std::size_t idx : order) {
    fits[idx] = fit(response, qs[idx], warm);
    warm = fits[idx].basis;
  }
  return fits;
}

QuantileFit fit_quantile(const Eigen::MatrixXd& design, std::span<const double> response, double q, QrOptions options)
{
  return QuantileRegressor(design, options).fit(response, q);
}

double predict_quantile(const QuantileFit& fit, std::span<const double> z)
{
  if (z.size() != static_cast<std::size_t>(fit.coeffs.size()))
    throw InvalidArgument("predict_quantile: covariate row has the wrong length");
  double s = 0.0;
  for (std::size_t j = 0; j < z.size(); ++j)
    s += z[j] * fit.coeffs[static_cast<Eigen::Index>(j)];
  return s;
}

} // namespace nsadf
