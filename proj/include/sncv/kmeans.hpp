#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "sncv/rng.hpp"

namespace sncv {

struct ClusterReport {
    std::size_t k = 0;
    std::vector<std::array<double, 3>> centres;
    std::vector<std::size_t> assignment;  // per input point
    std::vector<std::size_t> sizes;
    double inertia = 0.0;
    std::uint64_t seed = 0;
};

namespace detail {

inline double sqdist3(const std::array<double, 3>& a, const std::array<double, 3>& b) {
    double acc = 0.0;
    for (int d = 0; d < 3; ++d) {
        const double diff = a[d] - b[d];
        acc += diff * diff;
    }
    return acc;
}

}  // namespace detail

// Lloyd iterations on raw (unstandardised) coordinates with a k-means++ style
// seeded start. All tie-breaking and accumulation runs over a canonical
// (lexicographically sorted) point order, so the clustering is invariant to
// the order points arrive in, up to label renumbering; labels are normalised
// to descending cluster size. inertia_trace, when given, receives the
// assignment-phase inertia of every iteration.
inline ClusterReport kmeans(const std::vector<std::array<double, 3>>& points, std::size_t k,
                            std::uint64_t seed, std::size_t max_iter = 100,
                            std::vector<double>* inertia_trace = nullptr) {
    const std::size_t n = points.size();
    if (k == 0 || k > n) throw std::invalid_argument("kmeans: need 1 <= k <= number of points");

    std::vector<std::size_t> canon(n);
    std::iota(canon.begin(), canon.end(), std::size_t{0});
    std::sort(canon.begin(), canon.end(), [&](std::size_t a, std::size_t b) {
        return points[a] < points[b];
    });

    Rng rng(seed);
    std::vector<std::array<double, 3>> centres;
    centres.reserve(k);
    centres.push_back(points[canon[rng.below(n)]]);
    std::vector<double> d2(n, 0.0);
    while (centres.size() < k) {
        double total = 0.0;
        for (std::size_t ci = 0; ci < n; ++ci) {
            const std::size_t i = canon[ci];
            double best = std::numeric_limits<double>::infinity();
            for (const auto& c : centres) best = std::min(best, detail::sqdist3(points[i], c));
            d2[ci] = best;
            total += best;
        }
        if (total <= 0.0) {
            // all remaining mass sits on existing centres; fall back to uniform
            centres.push_back(points[canon[rng.below(n)]]);
            continue;
        }
        double target = rng.uniform() * total;
        std::size_t pick = n - 1;
        for (std::size_t ci = 0; ci < n; ++ci) {
            target -= d2[ci];
            if (target <= 0.0) {
                pick = ci;
                break;
            }
        }
        centres.push_back(points[canon[pick]]);
    }

    if (inertia_trace) inertia_trace->clear();
    std::vector<std::size_t> assignment(n, 0);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        bool changed = (iter == 0);
        double iter_inertia = 0.0;
        for (std::size_t ci = 0; ci < n; ++ci) {
            const std::size_t i = canon[ci];
            std::size_t best = 0;
            double bestd = detail::sqdist3(points[i], centres[0]);
            for (std::size_t c = 1; c < k; ++c) {
                const double d = detail::sqdist3(points[i], centres[c]);
                if (d < bestd) {
                    bestd = d;
                    best = c;
                }
            }
            iter_inertia += bestd;
            if (assignment[i] != best) changed = true;
            assignment[i] = best;
        }
        if (inertia_trace) inertia_trace->push_back(iter_inertia);
        std::vector<std::array<double, 3>> sums(k, {0.0, 0.0, 0.0});
        counts.assign(k, 0);
        for (std::size_t ci = 0; ci < n; ++ci) {
            const std::size_t i = canon[ci];
            for (int d = 0; d < 3; ++d) sums[assignment[i]][d] += points[i][d];
            ++counts[assignment[i]];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) {
                // dead centre: reseed from the point farthest from its centre
                std::size_t far = canon[0];
                double fard = -1.0;
                for (std::size_t ci = 0; ci < n; ++ci) {
                    const std::size_t i = canon[ci];
                    const double d = detail::sqdist3(points[i], centres[assignment[i]]);
                    if (d > fard) {
                        fard = d;
                        far = i;
                    }
                }
                centres[c] = points[far];
                changed = true;
            } else {
                for (int d = 0; d < 3; ++d)
                    centres[c][d] = sums[c][d] / static_cast<double>(counts[c]);
            }
        }
        if (!changed) break;
    }

    // final assignment against the settled centres
    counts.assign(k, 0);
    double inertia = 0.0;
    for (std::size_t ci = 0; ci < n; ++ci) {
        const std::size_t i = canon[ci];
        std::size_t best = 0;
        double bestd = detail::sqdist3(points[i], centres[0]);
        for (std::size_t c = 1; c < k; ++c) {
            const double d = detail::sqdist3(points[i], centres[c]);
            if (d < bestd) {
                bestd = d;
                best = c;
            }
        }
        assignment[i] = best;
        ++counts[best];
        inertia += bestd;
    }

    // relabel clusters by descending size (centre order breaks ties)
    std::vector<std::size_t> label(k);
    std::iota(label.begin(), label.end(), std::size_t{0});
    std::sort(label.begin(), label.end(), [&](std::size_t a, std::size_t b) {
        if (counts[a] != counts[b]) return counts[a] > counts[b];
        return centres[a] < centres[b];
    });
    std::vector<std::size_t> remap(k);
    for (std::size_t r = 0; r < k; ++r) remap[label[r]] = r;

    ClusterReport rep;
    rep.k = k;
    rep.seed = seed;
    rep.centres.resize(k);
    rep.sizes.resize(k);
    for (std::size_t c = 0; c < k; ++c) {
        rep.centres[remap[c]] = centres[c];
        rep.sizes[remap[c]] = counts[c];
    }
    rep.assignment.resize(n);
    for (std::size_t i = 0; i < n; ++i) rep.assignment[i] = remap[assignment[i]];
    rep.inertia = inertia;
    return rep;
}

}  // namespace sncv
