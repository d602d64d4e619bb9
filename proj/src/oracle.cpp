#include "ktsp/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ktsp/errors.hpp"

namespace ktsp {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

void check_k(int n, int k) {
    if (k < 1 || k > n)
        throw InvalidArgument("k must satisfy 1 <= k <= n (k=" + std::to_string(k) +
                              ", n=" + std::to_string(n) + ")");
}
}  // namespace

double cycle_cost(const std::vector<RealPoint>& points, const std::vector<int>& order) {
    if (order.size() < 2) return 0;
    double c = 0;
    for (std::size_t i = 0; i < order.size(); ++i)
        c += dist(points[order[i]], points[order[(i + 1) % order.size()]]);
    return c;
}

int count_in_cube(const std::vector<RealPoint>& points, const RealPoint& corner, double side,
                  double tol) {
    int c = 0;
    double slack = tol * std::max(1.0, side);
    for (const auto& p : points) {
        bool in = true;
        for (std::size_t i = 0; i < p.size() && in; ++i)
            in = p[i] >= corner[i] - slack && p[i] <= corner[i] + side + slack;
        c += in;
    }
    return c;
}

int count_in_ball(const std::vector<RealPoint>& points, const RealPoint& center, double radius,
                  double tol) {
    int c = 0;
    double slack = tol * std::max(1.0, radius);
    for (const auto& p : points) c += dist(p, center) <= radius + slack;
    return c;
}

OracleResult exact_k_tsp(const std::vector<RealPoint>& points, int k) {
    const int n = static_cast<int>(points.size());
    if (n > kExactTspCap)
        throw CapExceeded("exact_k_tsp: n=" + std::to_string(n) + " exceeds cap " +
                          std::to_string(kExactTspCap));
    check_k(n, k);
    OracleResult res;
    if (k <= 1) {
        res.tour = {0};
        return res;
    }
    std::vector<std::vector<double>> w(n, std::vector<double>(n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) w[i][j] = dist(points[i], points[j]);

    // dp[mask][last]: shortest path from the lowest index of mask through all
    // of mask, ending at last.
    const std::size_t full = std::size_t{1} << n;
    std::vector<double> dp(full * n, kInf);
    std::vector<signed char> parent(full * n, -1);
    for (int s = 0; s < n; ++s) dp[(std::size_t{1} << s) * n + s] = 0;
    for (std::size_t mask = 1; mask < full; ++mask) {
        int start = __builtin_ctzll(mask);
        for (int last = 0; last < n; ++last) {
            double cur = dp[mask * n + last];
            if (cur == kInf) continue;
            for (int nx = start + 1; nx < n; ++nx) {
                if (mask >> nx & 1) continue;
                std::size_t m2 = mask | (std::size_t{1} << nx);
                double c = cur + w[last][nx];
                if (c < dp[m2 * n + nx]) {
                    dp[m2 * n + nx] = c;
                    parent[m2 * n + nx] = static_cast<signed char>(last);
                }
            }
        }
    }
    double best = kInf;
    std::size_t best_mask = 0;
    int best_last = -1;
    for (std::size_t mask = 1; mask < full; ++mask) {
        if (__builtin_popcountll(mask) < k) continue;
        int start = __builtin_ctzll(mask);
        for (int last = 0; last < n; ++last) {
            if (last == start || !(mask >> last & 1)) continue;
            double c = dp[mask * n + last] + w[last][start];
            if (c < best) {
                best = c;
                best_mask = mask;
                best_last = last;
            }
        }
    }
    std::vector<int> tour;
    std::size_t mask = best_mask;
    int cur = best_last;
    while (cur >= 0) {
        tour.push_back(cur);
        int p = parent[mask * n + cur];
        mask &= ~(std::size_t{1} << cur);
        cur = p;
    }
    std::reverse(tour.begin(), tour.end());
    res.value = best;
    res.tour = tour;
    return res;
}

OracleResult exact_k_cube(const std::vector<RealPoint>& points, int k) {
    const int n = static_cast<int>(points.size());
    if (n > kExactCubeCap)
        throw CapExceeded("exact_k_cube: n=" + std::to_string(n) + " exceeds cap " +
                          std::to_string(kExactCubeCap));
    check_k(n, k);
    const int d = static_cast<int>(points[0].size());
    OracleResult res;
    res.value = kInf;
    // Sliding an optimal cube down on every axis until a contained point
    // touches its lower facet: the lower corner takes point coordinates.
    std::vector<std::vector<double>> coords(d);
    for (int i = 0; i < d; ++i) {
        for (const auto& p : points) coords[i].push_back(p[i]);
        std::sort(coords[i].begin(), coords[i].end());
        coords[i].erase(std::unique(coords[i].begin(), coords[i].end()), coords[i].end());
    }
    std::vector<std::size_t> idx(d, 0);
    RealPoint corner(d);
    std::vector<double> need;
    need.reserve(n);
    while (true) {
        for (int i = 0; i < d; ++i) corner[i] = coords[i][idx[i]];
        need.clear();
        for (const auto& p : points) {
            double s = 0;
            bool ok = true;
            for (int i = 0; i < d && ok; ++i) {
                if (p[i] < corner[i]) ok = false;
                else s = std::max(s, p[i] - corner[i]);
            }
            if (ok) need.push_back(s);
        }
        if (static_cast<int>(need.size()) >= k) {
            std::nth_element(need.begin(), need.begin() + (k - 1), need.end());
            if (need[k - 1] < res.value) {
                res.value = need[k - 1];
                res.anchor = corner;
            }
        }
        int ax = 0;
        while (ax < d && ++idx[ax] == coords[ax].size()) idx[ax++] = 0;
        if (ax == d) break;
    }
    return res;
}

OracleResult exact_k_ball_2d(const std::vector<RealPoint>& points, int k) {
    const int n = static_cast<int>(points.size());
    if (n > 0 && points[0].size() != 2)
        throw InvalidArgument("exact_k_ball_2d: unsupported dimension " +
                              std::to_string(points[0].size()));
    if (n > kExactBallCap)
        throw CapExceeded("exact_k_ball_2d: n=" + std::to_string(n) + " exceeds cap " +
                          std::to_string(kExactBallCap));
    check_k(n, k);
    OracleResult res;
    res.value = kInf;
    auto consider = [&](const RealPoint& c, double r) {
        if (r >= res.value) return;
        if (count_in_ball(points, c, r, 1e-12) >= k) {
            res.value = r;
            res.anchor = c;
        }
    };
    for (int i = 0; i < n; ++i) consider(points[i], 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            RealPoint c = {(points[i][0] + points[j][0]) / 2, (points[i][1] + points[j][1]) / 2};
            consider(c, dist(points[i], points[j]) / 2);
        }
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            for (int l = j + 1; l < n; ++l) {
                const auto& a = points[i];
                const auto& b = points[j];
                const auto& c = points[l];
                double bx = b[0] - a[0], by = b[1] - a[1];
                double cx = c[0] - a[0], cy = c[1] - a[1];
                double den = 2 * (bx * cy - by * cx);
                if (std::abs(den) < 1e-12) continue;
                double b2 = bx * bx + by * by, c2 = cx * cx + cy * cy;
                double ux = (cy * b2 - by * c2) / den;
                double uy = (bx * c2 - cx * b2) / den;
                RealPoint ctr = {a[0] + ux, a[1] + uy};
                double r = std::max({dist(ctr, a), dist(ctr, b), dist(ctr, c)});
                consider(ctr, r);
            }
    return res;
}

}  // namespace ktsp
