#pragma once

// Reference implementations used to check the library. They are written
// straight from the definitions and favour obviousness over speed.

#include <cmath>
#include <cstdint>
#include <tuple>
#include <vector>

#include "compforge/manifest.hpp"

namespace oracle {

/// P(item i among three draws without replacement), summed over all ordered
/// triples of distinct items.
inline std::vector<double> enumerate_top3(const std::vector<double>& p) {
    const std::size_t n = p.size();
    std::vector<double> out(n, 0.0);
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) {
            if (b == a) continue;
            for (std::size_t c = 0; c < n; ++c) {
                if (c == a || c == b) continue;
                const double prob = p[a] * (p[b] / (1.0 - p[a])) * (p[c] / (1.0 - p[a] - p[b]));
                out[a] += prob;
                out[b] += prob;
                out[c] += prob;
            }
        }
    return out;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline std::vector<double> softmax(const std::vector<double>& s, double alpha) {
    double z = 0.0;
    std::vector<double> e(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) z += e[i] = std::exp(alpha * s[i]);
    for (auto& v : e) v /= z;
    return e;
}

inline std::vector<double> with_replacement_top3(const std::vector<double>& p) {
    std::vector<double> out;
    for (double v : p) out.push_back(1.0 - (1.0 - v) * (1.0 - v) * (1.0 - v));
    return out;
}

/// Targets generated by the forward model at s, so that s attains zero loss.
inline std::pair<std::vector<double>, std::vector<double>> forward_targets(const std::vector<double>& s,
                                                                           double alpha = 2.0) {
    std::vector<double> good;
    for (double v : s) good.push_back(sigmoid(v));
    return {good, with_replacement_top3(softmax(s, alpha))};
}

/// Exhaustive search over every aspect-matched size and every placement.
/// Aspect match: the height is floor(cw*h/w) or the width is floor(ch*w/h),
/// checked by cross-multiplication.
inline compforge::CropRect brute_containing_crop(int W, int H, const compforge::CropRect& g) {
    auto floor_match = [](std::int64_t a, std::int64_t b, std::int64_t num, std::int64_t den) {
        // b == floor(a * num / den)
        return b * den <= a * num && a * num < (b + 1) * den;
    };
    bool found = false;
    compforge::CropRect best;
    // key: larger area, then smaller squared center distance (doubled coords), then y, x, w
    std::tuple<std::int64_t, std::int64_t, int, int, int> best_key;
    for (int cw = 1; cw <= W; ++cw)
        for (int ch = 1; ch <= H; ++ch) {
            if (!floor_match(cw, ch, g.h, g.w) && !floor_match(ch, cw, g.w, g.h)) continue;
            if (cw < g.w || ch < g.h) continue;
            for (int y = 0; y + ch <= H; ++y) {
                if (y > g.y || y + ch < g.y + g.h) continue;
                for (int x = 0; x + cw <= W; ++x) {
                    if (x > g.x || x + cw < g.x + g.w) continue;
                    const std::int64_t dx = 2 * x + cw - W, dy = 2 * y + ch - H;
                    auto key = std::make_tuple(-static_cast<std::int64_t>(cw) * ch, dx * dx + dy * dy, y, x, cw);
                    if (!found || key < best_key) {
                        found = true;
                        best_key = key;
                        best = {x, y, cw, ch};
                    }
                }
            }
        }
    return best;
}

}  // namespace oracle
