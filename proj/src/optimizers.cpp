#include "compforge/optimizers.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <optional>
#include <numeric>

namespace compforge::optim {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double max_abs(std::span<const double> a) {
    double m = 0.0;
    for (double v : a) m = std::max(m, std::abs(v));
    return m;
}

bool all_finite(std::span<const double> a) {
    return std::all_of(a.begin(), a.end(), [](double v) { return std::isfinite(v); });
}

struct CurvaturePair {
    std::vector<double> s;
    std::vector<double> y;
    double rho;
};

// H * (-g) via the two-loop recursion, scaled by gamma = s'y / y'y of the newest pair.
std::vector<double> lbfgs_direction(const std::deque<CurvaturePair>& history, std::span<const double> g) {
    std::vector<double> q(g.begin(), g.end());
    for (double& v : q) v = -v;
    std::vector<double> alpha(history.size());
    for (std::size_t k = history.size(); k-- > 0;) {
        const auto& p = history[k];
        alpha[k] = p.rho * dot(p.s, q);
        for (std::size_t i = 0; i < q.size(); ++i) q[i] -= alpha[k] * p.y[i];
    }
    if (!history.empty()) {
        const auto& last = history.back();
        const double gamma = dot(last.s, last.y) / dot(last.y, last.y);
        for (double& v : q) v *= gamma;
    }
    for (std::size_t k = 0; k < history.size(); ++k) {
        const auto& p = history[k];
        const double beta = p.rho * dot(p.y, q);
        for (std::size_t i = 0; i < q.size(); ++i) q[i] += (alpha[k] - beta) * p.s[i];
    }
    return q;
}

struct LinePoint {
    double t = 0.0;
    double f = 0.0;
    double dphi = 0.0;  // directional derivative at t
};

// Minimizer of the cubic through (a, fa, da) and (b, fb, db), kept inside
// the middle 80% of the interval; bisection when the cubic is useless.
double cubic_step(const LinePoint& a, const LinePoint& b) {
    const double lo = std::min(a.t, b.t), hi = std::max(a.t, b.t);
    const double margin = 0.1 * (hi - lo);
    const double d1 = a.dphi + b.dphi - 3.0 * (a.f - b.f) / (a.t - b.t);
    const double disc = d1 * d1 - a.dphi * b.dphi;
    double t = 0.5 * (lo + hi);
    if (disc >= 0.0 && std::isfinite(b.f)) {
        const double d2 = std::copysign(std::sqrt(disc), b.t - a.t);
        const double c = b.t - (b.t - a.t) * (b.dphi + d2 - d1) / (b.dphi - a.dphi + 2.0 * d2);
        if (std::isfinite(c)) t = c;
    }
    return std::clamp(t, lo + margin, hi - margin);
}

// Strong Wolfe search along d from x (value f0, slope dphi0 < 0). On success
// x_new/g_new/f_new hold the accepted point. A non-finite trial is treated as
// a step that overshot. Falls back to the best Armijo point seen.
bool wolfe_search(const Objective& fn, std::span<const double> x, double f0, std::span<const double> d,
                  double dphi0, double t0, const LbfgsSettings& cfg, std::vector<double>& x_new,
                  std::vector<double>& g_new, double& f_new) {
    const std::size_t n = x.size();
    int evals = 0;
    std::optional<LinePoint> best;  // lowest point meeting sufficient decrease
    std::vector<double> best_x, best_g;

    auto eval = [&](double t) {
        for (std::size_t i = 0; i < n; ++i) x_new[i] = x[i] + t * d[i];
        LinePoint p{t, fn(x_new, g_new), 0.0};
        ++evals;
        if (!std::isfinite(p.f) || !all_finite(g_new)) {
            p.f = std::numeric_limits<double>::infinity();
            p.dphi = std::numeric_limits<double>::infinity();
            return p;
        }
        p.dphi = dot(g_new, d);
        if (p.f <= f0 + cfg.armijo_c1 * t * dphi0 && (!best || p.f < best->f)) {
            best = p;
            best_x = x_new;
            best_g = g_new;
        }
        return p;
    };
    auto armijo = [&](const LinePoint& p) { return p.f <= f0 + cfg.armijo_c1 * p.t * dphi0; };
    auto curvature = [&](const LinePoint& p) { return std::abs(p.dphi) <= -cfg.wolfe_c2 * dphi0; };
    auto accept = [&](const LinePoint& p) {
        f_new = p.f;
        return true;
    };

    LinePoint prev{0.0, f0, dphi0};
    LinePoint lo, hi;
    bool bracketed = false;
    double t = t0;
    while (evals < cfg.max_line_evals) {
        const LinePoint cur = eval(t);
        if (!armijo(cur) || (evals > 1 && cur.f >= prev.f)) {
            lo = prev;
            hi = cur;
            bracketed = true;
            break;
        }
        if (curvature(cur)) return accept(cur);
        if (cur.dphi >= 0.0) {
            lo = cur;
            hi = prev;
            bracketed = true;
            break;
        }
        prev = cur;
        t *= 2.0;
    }

    while (bracketed && evals < cfg.max_line_evals) {
        // Cubic needs finite values at both ends; halve toward lo otherwise.
        const double trial = std::isfinite(hi.f) ? cubic_step(lo, hi) : lo.t + 0.5 * (hi.t - lo.t);
        const LinePoint cur = eval(trial);
        if (!armijo(cur) || cur.f >= lo.f) {
            hi = cur;
        } else {
            if (curvature(cur)) return accept(cur);
            if (cur.dphi * (hi.t - lo.t) >= 0.0) hi = lo;
            lo = cur;
        }
        if (std::abs(hi.t - lo.t) <= 1e-16 * std::max(1.0, lo.t)) break;
    }

    if (!best) return false;
    x_new = std::move(best_x);
    g_new = std::move(best_g);
    f_new = best->f;
    return true;
}

}  // namespace

RunResult lbfgs_minimize(const Objective& fn, std::vector<double> x0, const LbfgsSettings& cfg) {
    const std::size_t n = x0.size();
    RunResult out;
    out.x = x0;

    std::vector<double> x = std::move(x0);
    std::vector<double> g(n);
    double f = fn(x, g);
    if (!std::isfinite(f) || !all_finite(g)) {
        out.f = f;
        out.failed = true;
        return out;
    }
    if (max_abs(g) <= cfg.tolerance_grad) {
        out.x = x;
        out.f = f;
        out.converged = true;
        return out;
    }

    std::deque<CurvaturePair> history;
    std::vector<double> x_new(n), g_new(n);
    int total_iter = 0;
    bool done = false;

    for (int epoch = 0; epoch < cfg.max_epochs && !done; ++epoch) {
        for (int it = 0; it < cfg.max_iter; ++it) {
            std::vector<double> d = lbfgs_direction(history, g);
            double gd = dot(g, d);
            if (!(gd < 0.0)) {
                // Stale curvature produced an ascent direction; restart from steepest descent.
                history.clear();
                d.assign(g.begin(), g.end());
                for (double& v : d) v = -v;
                gd = dot(g, d);
            }

            double t = cfg.lr;
            if (total_iter == 0) {
                double l1 = 0.0;
                for (double v : g) l1 += std::abs(v);
                t = std::min(1.0, 1.0 / l1) * cfg.lr;
            }

            double f_new = f;
            const bool accepted = wolfe_search(fn, x, f, d, gd, t, cfg, x_new, g_new, f_new);
            ++total_iter;
            if (!accepted) {
                // No acceptable step. Retry once from steepest descent, then give up.
                if (history.empty()) done = true;
                history.clear();
                break;
            }

            CurvaturePair pair{std::vector<double>(n), std::vector<double>(n), 0.0};
            for (std::size_t i = 0; i < n; ++i) {
                pair.s[i] = x_new[i] - x[i];
                pair.y[i] = g_new[i] - g[i];
            }
            const double sy = dot(pair.s, pair.y);
            const double step = max_abs(pair.s);
            const double df = std::abs(f_new - f);
            if (sy > 1e-10) {
                pair.rho = 1.0 / sy;
                history.push_back(std::move(pair));
                if (static_cast<int>(history.size()) > cfg.history_size) history.pop_front();
            }

            x.swap(x_new);
            g.swap(g_new);
            f = f_new;

            if (max_abs(g) <= cfg.tolerance_grad) {
                out.converged = true;
                done = true;
                break;
            }
            // Progress stalled away from a stationary point: end this epoch and
            // start the next from steepest descent, since the stall usually
            // comes from curvature pairs collected in a different region.
            if (step <= cfg.tolerance_change || df < cfg.tolerance_change) {
                out.converged = true;
                history.clear();
                break;
            }
        }
    }

    out.x = std::move(x);
    out.f = f;
    out.iterations = total_iter;
    return out;
}

RunResult adam_minimize(const Objective& fn, std::vector<double> x0, const AdamSettings& cfg) {
    const std::size_t n = x0.size();
    RunResult out;
    out.x = x0;

    std::vector<double> x = std::move(x0);
    std::vector<double> g(n), m(n, 0.0), v(n, 0.0);
    double best_f = INFINITY;
    std::vector<double> best_x = x;

    for (int t = 1; t <= cfg.max_epochs; ++t) {
        const double f = fn(x, g);
        if (!std::isfinite(f) || !all_finite(g)) {
            out.f = fn(out.x, g);
            out.failed = true;
            out.iterations = t - 1;
            return out;
        }
        if (f < best_f) {
            best_f = f;
            best_x = x;
        }
        const double bc1 = 1.0 - std::pow(cfg.beta1, t);
        const double bc2 = 1.0 - std::pow(cfg.beta2, t);
        for (std::size_t i = 0; i < n; ++i) {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            const double m_hat = m[i] / bc1;
            const double v_hat = v[i] / bc2;
            x[i] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
        }
        out.iterations = t;
    }

    const double f_last = fn(x, g);
    if (std::isfinite(f_last) && f_last < best_f) {
        best_f = f_last;
        best_x = x;
    }
    out.x = std::move(best_x);
    out.f = best_f;
    out.converged = true;
    return out;
}

}  // namespace compforge::optim
