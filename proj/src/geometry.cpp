#include "compforge/geometry.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <tuple>

#include "compforge/error.hpp"

namespace compforge::geometry {

namespace {

// Offset in [lo, hi] minimizing |2*off + size - extent|, smaller offset on ties.
int centered_offset(int lo, int hi, int size, int extent) {
    const int slack = extent - size;
    int best = lo;
    std::int64_t best_dist = std::llabs(2LL * lo - slack);
    for (int cand : {slack / 2, (slack + 1) / 2, hi}) {
        const int c = std::clamp(cand, lo, hi);
        const std::int64_t d = std::llabs(2LL * c - slack);
        if (d < best_dist || (d == best_dist && c < best)) {
            best = c;
            best_dist = d;
        }
    }
    return best;
}

}  // namespace

bool aspect_matches(int cw, int ch, int w, int h) {
    return static_cast<std::int64_t>(ch) == static_cast<std::int64_t>(cw) * h / w ||
           static_cast<std::int64_t>(cw) == static_cast<std::int64_t>(ch) * w / h;
}

CropRect containing_crop(int parent_w, int parent_h, const CropRect& good) {
    if (parent_w <= 0 || parent_h <= 0) throw DomainError("containing_crop: nonpositive parent size");
    if (!good.fits_in(parent_w, parent_h)) throw DomainError("containing_crop: good crop exceeds parent bounds");

    struct Candidate {
        std::int64_t area;
        std::int64_t dist2;
        CropRect r;
    };
    bool have = false;
    Candidate best{};

    auto consider = [&](int cw, int ch) {
        if (cw < good.w || ch < good.h || cw > parent_w || ch > parent_h) return;
        const std::int64_t area = static_cast<std::int64_t>(cw) * ch;
        if (have && area < best.area) return;
        const int x = centered_offset(std::max(0, good.x + good.w - cw), std::min(good.x, parent_w - cw), cw,
                                      parent_w);
        const int y = centered_offset(std::max(0, good.y + good.h - ch), std::min(good.y, parent_h - ch), ch,
                                      parent_h);
        const std::int64_t dx = 2LL * x + cw - parent_w;
        const std::int64_t dy = 2LL * y + ch - parent_h;
        Candidate c{area, dx * dx + dy * dy, CropRect{x, y, cw, ch}};
        const auto key = [](const Candidate& k) { return std::tuple(-k.area, k.dist2, k.r.y, k.r.x, k.r.w); };
        if (!have || key(c) < key(best)) {
            best = c;
            have = true;
        }
    };

    for (int cw = good.w; cw <= parent_w; ++cw)
        consider(cw, static_cast<int>(static_cast<std::int64_t>(cw) * good.h / good.w));
    for (int ch = good.h; ch <= parent_h; ++ch)
        consider(static_cast<int>(static_cast<std::int64_t>(ch) * good.w / good.h), ch);

    // The good rect itself always qualifies, so a candidate exists.
    return best.r;
}

}  // namespace compforge::geometry
