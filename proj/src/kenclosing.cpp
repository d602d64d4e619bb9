#include "ktsp/kenclosing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ktsp/errors.hpp"

namespace ktsp {

std::vector<int> derandomized_sparsify_loop(std::vector<int> w, const SparsifyStep& step,
                                            std::size_t floor, SparsifyStats* stats) {
    SparsifyStats local;
    SparsifyStats& st = stats ? *stats : local;
    st = SparsifyStats{};
    // Pivots are scanned in ascending index order, so the first minimum has
    // the smallest index.
    std::sort(w.begin(), w.end());
    st.sizes.push_back(w.size());
    const std::int64_t w0 = static_cast<std::int64_t>(w.size());
    while (w.size() > floor) {
        std::vector<int> best;
        bool have = false;
        for (int p : w) {
            std::vector<int> wp = step(p, w);
            st.work += static_cast<std::int64_t>(w.size());
            if (!have || wp.size() < best.size()) {
                best = std::move(wp);
                have = true;
            }
        }
        double shrink = static_cast<double>(best.size()) / static_cast<double>(w.size());
        if (16 * best.size() > 15 * w.size())
            throw ContractViolation("sparsify step did not shrink W below 15/16 (|W|=" +
                                    std::to_string(w.size()) + ", best=" +
                                    std::to_string(best.size()) + ")");
        st.max_shrink = std::max(st.max_shrink, shrink);
        ++st.iterations;
        w = std::move(best);
        std::sort(w.begin(), w.end());
        st.sizes.push_back(w.size());
    }
    if (st.work > 16 * w0 * w0)
        throw InternalError("sparsify loop exceeded 16|W0|^2 work");
    return w;
}

namespace {

void check_k(int n, int k) {
    if (k < 1 || k > n)
        throw InvalidArgument("k must satisfy 1 <= k <= n (k=" + std::to_string(k) +
                              ", n=" + std::to_string(n) + ")");
}

// Distance from c to its k-th nearest input point (counting c if it is one).
double kth_radius(const std::vector<RealPoint>& points, const RealPoint& c, int k,
                  std::vector<double>& buf) {
    buf.clear();
    for (const auto& p : points) buf.push_back(dist(c, p));
    std::nth_element(buf.begin(), buf.begin() + (k - 1), buf.end());
    return buf[k - 1];
}

BallEstimate refine(const std::vector<RealPoint>& points, int k, double lambda,
                    BallEstimate est) {
    if (lambda >= 1 || est.radius == 0) return est;
    const int d = static_cast<int>(points[0].size());
    const double r0 = est.radius;
    const double h = lambda * r0 / (2 * std::sqrt(static_cast<double>(d)));
    const int reach = static_cast<int>(std::ceil(r0 / h));
    std::vector<double> buf;
    std::vector<int> z(d, -reach);
    for (const auto& p : points) {
        std::fill(z.begin(), z.end(), -reach);
        while (true) {
            RealPoint c(d);
            double off = 0;
            for (int i = 0; i < d; ++i) {
                c[i] = p[i] + h * z[i];
                off += (h * z[i]) * (h * z[i]);
            }
            if (std::sqrt(off) <= r0 + h) {
                double r = kth_radius(points, c, k, buf);
                if (r < est.radius) {
                    est.radius = r;
                    est.witness_center = c;
                }
            }
            int ax = 0;
            while (ax < d && ++z[ax] > reach) z[ax++] = -reach;
            if (ax == d) break;
        }
    }
    return est;
}

std::vector<double> point_radii(const std::vector<RealPoint>& points, int k) {
    std::vector<double> r(points.size()), buf;
    for (std::size_t i = 0; i < points.size(); ++i) r[i] = kth_radius(points, points[i], k, buf);
    return r;
}

}  // namespace

BallEstimate approx_k_ball(const std::vector<RealPoint>& points, int k, double lambda) {
    check_k(static_cast<int>(points.size()), k);
    if (!(lambda > 0)) throw InvalidArgument("lambda must be positive");
    auto r = point_radii(points, k);
    std::size_t best = std::min_element(r.begin(), r.end()) - r.begin();
    BallEstimate est{r[best], points[best]};
    return refine(points, k, lambda, est);
}

BallEstimate approx_k_ball_derandomized(const std::vector<RealPoint>& points, int k,
                                        double lambda, SparsifyStats* stats) {
    check_k(static_cast<int>(points.size()), k);
    if (!(lambda > 0)) throw InvalidArgument("lambda must be positive");
    auto r = point_radii(points, k);
    auto before = [&](int q, int p) { return r[q] < r[p] || (r[q] == r[p] && q <= p); };
    SparsifyStep step = [&](int p, const std::vector<int>& w) {
        std::vector<int> out;
        for (int q : w)
            if (before(q, p)) out.push_back(q);
        return out;
    };
    std::vector<int> w0(points.size());
    for (std::size_t i = 0; i < w0.size(); ++i) w0[i] = static_cast<int>(i);
    auto w = derandomized_sparsify_loop(w0, step, 1, stats);
    int best = w.front();
    BallEstimate est{r[best], points[best]};
    return refine(points, k, lambda, est);
}

CubeEstimate approx_k_cube(const std::vector<RealPoint>& points, int k) {
    auto ball = approx_k_ball(points, k, 1.0);
    return CubeEstimate{2 * ball.radius};
}

CostEstimate opt_upper_estimate(const std::vector<RealPoint>& points, int k) {
    check_k(static_cast<int>(points.size()), k);
    const int d = static_cast<int>(points[0].size());
    auto cube = approx_k_cube(points, k);
    double factor = d * std::pow(static_cast<double>(k), 1.0 - 1.0 / d);
    return CostEstimate{factor * cube.side};
}

}  // namespace ktsp
