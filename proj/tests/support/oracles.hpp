#pragma once

// Straight-line reference implementations shared by the unit tests and the
// acceptance binary.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "analytics/district.hpp"
#include "core/rng.hpp"
#include "core/types.hpp"
#include "query/query.hpp"
#include "test_support.hpp"

namespace testing {

// P(s+ > s-) + P(equal)/2 by counting every positive/negative pair.
inline double roc_auc_pairs(std::span<const double> s, std::span<const int> y) {
    double wins = 0.0;
    double pairs = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (y[i] != 1) continue;
        for (std::size_t j = 0; j < s.size(); ++j) {
            if (y[j] != 0) continue;
            pairs += 1.0;
            if (s[i] > s[j]) wins += 1.0;
            else if (s[i] == s[j]) wins += 0.5;
        }
    }
    return wins / pairs;
}

// Rank of x_i = 1 + #{x_j < x_i} + (#{x_j == x_i} - 1) / 2.
inline std::vector<double> ranks_quadratic(std::span<const double> x) {
    std::vector<double> r(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        double less = 0, equal = 0;
        for (double v : x) {
            if (v < x[i]) ++less;
            else if (v == x[i]) ++equal;
        }
        r[i] = 1.0 + less + (equal - 1.0) / 2.0;
    }
    return r;
}

inline double pearson_reference(std::span<const double> a, std::span<const double> b) {
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

inline double spearman_reference(std::span<const double> a, std::span<const double> b) {
    const auto ra = ranks_quadratic(a), rb = ranks_quadratic(b);
    return pearson_reference(ra, rb);
}

// Accuracy of "score >= t" for every score, plus both infinities.
inline double max_accuracy_scan(std::span<const double> s, std::span<const int> y) {
    std::vector<double> thresholds(s.begin(), s.end());
    thresholds.push_back(std::numeric_limits<double>::infinity());
    thresholds.push_back(-std::numeric_limits<double>::infinity());
    double best = 0.0;
    for (double t : thresholds) {
        std::size_t correct = 0;
        for (std::size_t i = 0; i < s.size(); ++i) correct += ((s[i] >= t) == (y[i] == 1));
        best = std::max(best, static_cast<double>(correct) / static_cast<double>(s.size()));
    }
    return best;
}

// Indices of the k nearest rows by squared distance; ties to the lower index.
inline std::vector<std::size_t> knn_reference(std::span<const float> rows, std::size_t dim,
                                              std::span<const float> q, std::size_t k) {
    const std::size_t n = rows.size() / dim;
    std::vector<std::pair<double, std::size_t>> d(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0;
        for (std::size_t j = 0; j < dim; ++j) {
            const double diff = static_cast<double>(rows[i * dim + j]) - q[j];
            s += diff * diff;
        }
        d[i] = {s, i};
    }
    std::sort(d.begin(), d.end());
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < std::min(k, n); ++i) out.push_back(d[i].second);
    return out;
}

// Type-7 quantile edges at i/k and right-inclusive binning, written out by hand.
inline std::vector<std::size_t> quantile_bins_reference(std::span<const double> x, std::size_t k) {
    std::vector<double> sorted(x.begin(), x.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> edges;
    for (std::size_t i = 0; i <= k; ++i) {
        const double h = (sorted.size() - 1) * (static_cast<double>(i) / k);
        const auto lo = static_cast<std::size_t>(std::floor(h));
        const auto hi = std::min(lo + 1, sorted.size() - 1);
        edges.push_back(sorted[lo] + (h - lo) * (sorted[hi] - sorted[lo]));
    }
    std::vector<std::size_t> bins(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        std::size_t b = k - 1;
        for (std::size_t j = 0; j < k; ++j) {
            if (x[i] <= edges[j + 1]) {
                b = j;
                break;
            }
        }
        bins[i] = b;
    }
    return bins;
}

// Mean absolute deviation of each value from the mean of its quantile bin.
inline double within_bin_deviation(std::span<const double> x, std::size_t k) {
    const auto bins = quantile_bins_reference(x, k);
    std::vector<double> sum(k, 0.0), count(k, 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
        sum[bins[i]] += x[i];
        count[bins[i]] += 1.0;
    }
    double dev = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) dev += std::abs(x[i] - sum[bins[i]] / count[bins[i]]);
    return dev / static_cast<double>(x.size());
}

// Monte-Carlo estimate of each district's share of the Gaussian event mass.
inline std::vector<double> crime_monte_carlo(std::span<const analytics::CrimeEvent> events,
                                             const analytics::DistrictSet& districts, double sigma,
                                             std::size_t samples_per_event, SeededRng& rng) {
    std::vector<double> mass(districts.size(), 0.0);
    for (const auto& e : events) {
        const double w = e.weight / static_cast<double>(samples_per_event);
        for (std::size_t s = 0; s < samples_per_event; ++s) {
            const Vec2 p{e.position.x + sigma * rng.normal(), e.position.y + sigma * rng.normal()};
            for (std::size_t d = 0; d < districts.size(); ++d) {
                if (districts.districts[d].contains(p)) {
                    mass[d] += w;
                    break;
                }
            }
        }
    }
    return mass;
}

// Winding number of a closed ring around p (non-zero means inside).
inline int winding_number(const Vec2& p, std::span<const Vec2> ring) {
    int wn = 0;
    for (std::size_t i = 0; i < ring.size(); ++i) {
        const Vec2& a = ring[i];
        const Vec2& b = ring[(i + 1) % ring.size()];
        const double cross = (b.x - a.x) * (p.y - a.y) - (p.x - a.x) * (b.y - a.y);
        if (a.y <= p.y) {
            if (b.y > p.y && cross > 0) ++wn;
        } else if (b.y <= p.y && cross < 0) {
            --wn;
        }
    }
    return wn;
}

inline double distance_to_ring(const Vec2& p, std::span<const Vec2> ring) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < ring.size(); ++i) {
        const Vec2& a = ring[i];
        const Vec2& b = ring[(i + 1) % ring.size()];
        const double dx = b.x - a.x, dy = b.y - a.y;
        const double len2 = dx * dx + dy * dy;
        const double t = len2 > 0 ? std::clamp(((p.x - a.x) * dx + (p.y - a.y) * dy) / len2, 0.0, 1.0) : 0.0;
        best = std::min(best, std::hypot(p.x - a.x - t * dx, p.y - a.y - t * dy));
    }
    return best;
}

// Star-shaped ring around `center`: sorted random angles, random radii.
inline std::vector<Vec2> random_star_polygon(SeededRng& rng, const Vec2& center, double r_min, double r_max,
                                             std::size_t vertices) {
    std::vector<double> angles(vertices);
    for (auto& a : angles) a = rng.uniform(0, 2 * M_PI);
    std::sort(angles.begin(), angles.end());
    std::vector<Vec2> ring;
    for (double a : angles) {
        const double r = rng.uniform(r_min, r_max);
        ring.push_back({center.x + r * std::cos(a), center.y + r * std::sin(a)});
    }
    return ring;
}

// n x n partition of [x0, x0 + n*side]^2 into quadrilaterals whose interior
// corners are jittered by up to `jitter` * side.
inline analytics::DistrictSet jittered_partition(SeededRng& rng, double x0, double y0, double side, int n,
                                                 double jitter) {
    std::vector<Vec2> corners(static_cast<std::size_t>(n + 1) * (n + 1));
    for (int j = 0; j <= n; ++j) {
        for (int i = 0; i <= n; ++i) {
            const bool interior = i > 0 && j > 0 && i < n && j < n;
            const double dx = interior ? rng.uniform(-jitter, jitter) * side : 0.0;
            const double dy = interior ? rng.uniform(-jitter, jitter) * side : 0.0;
            corners[static_cast<std::size_t>(j) * (n + 1) + i] = {x0 + i * side + dx, y0 + j * side + dy};
        }
    }
    analytics::DistrictSet set;
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            auto at = [&](int a, int b) { return corners[static_cast<std::size_t>(b) * (n + 1) + a]; };
            analytics::District d;
            d.id = "d" + std::to_string(j * n + i);
            d.rings.push_back({at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)});
            set.districts.push_back(std::move(d));
        }
    }
    return set;
}

// Checks the query score properties on one random store; returns a description of
// the first violation, or an empty string.
inline std::string check_query_properties(SeededRng& rng) {
    const std::size_t n = 1 + rng.uniform_index(40);
    const std::size_t levels = 1 + rng.uniform_index(4);
    const std::size_t d = 2 + rng.uniform_index(15);
    const auto store = random_store(rng, n, levels, d, rng.uniform(0.0, 0.6));
    query::QueryEmbeddings emb;
    emb.positive = random_unit(rng, d);
    const std::size_t neg = rng.uniform_index(4);
    for (std::size_t i = 0; i < neg; ++i) emb.negatives.push_back(random_unit(rng, d));
    const auto mode = rng.uniform() < 0.5 ? query::LevelMode::max_over_levels()
                                          : query::LevelMode::only(rng.uniform_index(levels));

    const auto base = query::score_field(store, emb, mode);
    for (std::size_t p = 0; p < n; ++p) {
        const double s = base.values[p];
        if (!(s > 0.0 && s <= 1.0)) return "score outside (0, 1]: " + std::to_string(s);
        if (emb.negatives.empty() && s != 1.0) return "no negatives but score != 1";
    }

    // Single negative equal to the positive: both similarities coincide.
    query::QueryEmbeddings same{emb.positive, {emb.positive}};
    const auto half = query::score_field(store, same, mode);
    for (double s : half.values) {
        if (s != 0.5) return "equal similarity gave " + std::to_string(s);
    }

    if (!emb.negatives.empty()) {
        auto permuted = emb;
        for (std::size_t i = permuted.negatives.size(); i > 1; --i) {
            std::swap(permuted.negatives[i - 1], permuted.negatives[rng.uniform_index(i)]);
        }
        std::reverse(permuted.negatives.begin(), permuted.negatives.end());
        const auto p2 = query::score_field(store, permuted, mode);
        if (p2.values != base.values || p2.observed != base.observed) return "negative permutation changed scores";

        auto dup = emb;
        dup.negatives.push_back(emb.negatives[rng.uniform_index(emb.negatives.size())]);
        const auto lower = query::score_field(store, dup, mode);
        for (std::size_t p = 0; p < n; ++p) {
            if (!(lower.values[p] < base.values[p])) return "duplicate negative did not decrease the score";
        }
    }
    return {};
}

}  // namespace testing
