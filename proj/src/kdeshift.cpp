#include "shiftlab/kdeshift.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

namespace shiftlab {

namespace {

constexpr double kInvSqrt2Pi = 0.39894228040143268;

// Type-7 (linear interpolation) quantile of already sorted data.
double sorted_quantile(const std::vector<double>& sorted, double p) {
    const std::size_t n = sorted.size();
    if (n == 1) return sorted[0];
    double h = p * static_cast<double>(n - 1);
    std::size_t lo = static_cast<std::size_t>(h);
    if (lo >= n - 1) return sorted[n - 1];
    double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

struct AxisStats {
    double sd = 0.0;
    double iqr = 0.0;
    double min = 0.0;
    double max = 0.0;
};

AxisStats axis_stats(const std::vector<Point2>& points, bool use_x) {
    std::vector<double> v;
    v.reserve(points.size());
    for (const auto& p : points) v.push_back(use_x ? p.x : p.y);
    double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (double a : v) ss += (a - mean) * (a - mean);
    AxisStats out;
    out.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
    std::sort(v.begin(), v.end());
    out.iqr = sorted_quantile(v, 0.75) - sorted_quantile(v, 0.25);
    out.min = v.front();
    out.max = v.back();
    return out;
}

// Kernel row over the grid nodes of one axis for one sample point.
void kernel_row(double center, double h, double origin, double step, int count, double* out) {
    const double norm = kInvSqrt2Pi / h;
    const double inv2h2 = 1.0 / (2.0 * h * h);
    for (int i = 0; i < count; ++i) {
        double u = origin + step * i - center;
        out[i] = norm * std::exp(-u * u * inv2h2);
    }
}

void check_positive_bandwidth(const Bandwidth2D& bw) {
    if (!(bw.hx > 0.0) || !(bw.hy > 0.0) || !std::isfinite(bw.hx) || !std::isfinite(bw.hy)) {
        fail(Errc::InvalidArgument, "bandwidths must be positive and finite");
    }
}

// Trapezoid-weighted sum of fn(node) over the grid.
template <typename F>
double trapezoid_sum(const Grid2D& g, F&& fn) {
    double total = 0.0;
    for (int iy = 0; iy < g.ny; ++iy) {
        double wy = (iy == 0 || iy == g.ny - 1) ? 0.5 : 1.0;
        double row = 0.0;
        for (int ix = 0; ix < g.nx; ++ix) {
            double wx = (ix == 0 || ix == g.nx - 1) ? 0.5 : 1.0;
            row += wx * fn(ix, iy);
        }
        total += wy * row;
    }
    return total * g.dx * g.dy;
}

std::vector<Point2> locations_in_window(const std::vector<EventRecord>& events,
                                        const Date& from, const Date& to_exclusive,
                                        const char* side) {
    std::vector<Point2> out;
    for (const auto& e : events) {
        if (e.date >= from && e.date < to_exclusive) {
            if (!e.location) {
                fail(Errc::InvalidArgument,
                     "event on " + e.date.to_string() + " has no location");
            }
            out.push_back({e.location->first, e.location->second});
        }
    }
    if (out.empty()) {
        fail(Errc::EmptyWindow, std::string(side) + " window [" + from.to_string() + ", " +
                                    to_exclusive.to_string() + ") holds no events");
    }
    return out;
}

int resolve_threads(int max_threads, int jobs) {
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw < 1) hw = 1;
    int t = max_threads > 0 ? std::min(max_threads, hw) : hw;
    return std::max(1, std::min(t, jobs));
}

}  // namespace

bool Grid2D::same_geometry(const Grid2D& other) const {
    return nx == other.nx && ny == other.ny && x0 == other.x0 && y0 == other.y0 &&
           dx == other.dx && dy == other.dy;
}

Density2D::Density2D(Grid2D grid, std::vector<double> values, int n_points,
                     Bandwidth2D bandwidth)
    : grid_(grid), values_(std::move(values)), n_points_(n_points), bandwidth_(bandwidth) {
    if (grid_.nx < 2 || grid_.ny < 2 || !(grid_.dx > 0.0) || !(grid_.dy > 0.0)) {
        fail(Errc::InvalidArgument, "grid needs at least 2x2 nodes and positive spacing");
    }
    if (values_.size() != static_cast<std::size_t>(grid_.nx) * static_cast<std::size_t>(grid_.ny)) {
        fail(Errc::InvalidArgument, "value count does not match grid size");
    }
    for (double v : values_) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            fail(Errc::InvalidArgument, "density values must be finite and non-negative");
        }
    }
    double m = mass();
    if (m < 0.97 || m > 1.0 + 1e-6) {
        fail(Errc::GridTooCoarse,
             "grid mass " + std::to_string(m) +
                 " outside [0.97, 1]; enlarge the grid or raise its resolution");
    }
}

double Density2D::mass() const {
    return trapezoid_sum(grid_, [&](int ix, int iy) { return value(ix, iy); });
}

std::pair<double, double> Density2D::argmax_node() const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < values_.size(); ++i) {
        if (values_[i] > values_[best]) best = i;
    }
    int iy = static_cast<int>(best) / grid_.nx;
    int ix = static_cast<int>(best) % grid_.nx;
    return {grid_.node_x(ix), grid_.node_y(iy)};
}

Bandwidth2D bandwidth_rule(const std::vector<Point2>& points) {
    if (points.size() < 2) {
        fail(Errc::InvalidArgument, "bandwidth rule needs at least 2 points");
    }
    const double n_factor = std::pow(static_cast<double>(points.size()), -1.0 / 6.0);
    Bandwidth2D bw;
    for (bool use_x : {true, false}) {
        AxisStats st = axis_stats(points, use_x);
        if (!(st.sd > 0.0)) {
            fail(Errc::DegenerateSpread, std::string("axis ") + (use_x ? "x" : "y") +
                                             " has no spread");
        }
        // IQR guard: a zero IQR with positive sd (heavy point mass) must not
        // collapse the bandwidth to zero.
        double sigma = st.iqr > 0.0 ? std::min(st.sd, st.iqr / 1.349) : st.sd;
        (use_x ? bw.hx : bw.hy) = sigma * n_factor;
    }
    return bw;
}

Grid2D make_grid(const std::vector<Point2>& points, const Bandwidth2D& bandwidth,
                 const GridSpec& spec) {
    if (spec.nx < 2 || spec.ny < 2) {
        fail(Errc::InvalidArgument, "grid resolution must be at least 2 per axis");
    }
    check_positive_bandwidth(bandwidth);
    Rect r;
    if (spec.domain) {
        r = *spec.domain;
    } else {
        if (points.empty()) {
            fail(Errc::EmptySample, "cannot derive a grid from an empty sample");
        }
        if (!(spec.pad_bandwidths >= 0.0)) {
            fail(Errc::InvalidArgument, "grid padding must be non-negative");
        }
        double pad = spec.pad_bandwidths * std::max(bandwidth.hx, bandwidth.hy);
        auto [minx, maxx] = std::minmax_element(points.begin(), points.end(),
                                                [](auto& a, auto& b) { return a.x < b.x; });
        auto [miny, maxy] = std::minmax_element(points.begin(), points.end(),
                                                [](auto& a, auto& b) { return a.y < b.y; });
        r = {minx->x - pad, maxx->x + pad, miny->y - pad, maxy->y + pad};
    }
    if (!(r.x1 > r.x0) || !(r.y1 > r.y0)) {
        fail(Errc::InvalidArgument, "grid domain must have positive extent");
    }
    Grid2D g;
    g.x0 = r.x0;
    g.y0 = r.y0;
    g.nx = spec.nx;
    g.ny = spec.ny;
    g.dx = (r.x1 - r.x0) / static_cast<double>(spec.nx - 1);
    g.dy = (r.y1 - r.y0) / static_cast<double>(spec.ny - 1);
    return g;
}

Density2D estimate_density(const std::vector<Point2>& points, const Bandwidth2D& bandwidth,
                           const Grid2D& grid) {
    if (points.empty()) {
        fail(Errc::EmptySample, "density estimation needs at least one point");
    }
    check_positive_bandwidth(bandwidth);

    double minx = points[0].x, maxx = points[0].x, miny = points[0].y, maxy = points[0].y;
    for (const auto& p : points) {
        minx = std::min(minx, p.x);
        maxx = std::max(maxx, p.x);
        miny = std::min(miny, p.y);
        maxy = std::max(maxy, p.y);
    }
    const double margin = 3.0 * std::max(bandwidth.hx, bandwidth.hy);
    const double tol = 1e-9 * (1.0 + margin + std::max(std::abs(minx), std::abs(maxy)));
    if (grid.x0 > minx - margin + tol || grid.x_max() < maxx + margin - tol ||
        grid.y0 > miny - margin + tol || grid.y_max() < maxy + margin - tol) {
        fail(Errc::GridTooSmall,
             "grid must cover the sample bounding box padded by 3 bandwidths");
    }

    std::vector<double> values(static_cast<std::size_t>(grid.nx) * grid.ny, 0.0);
    std::vector<double> kx(static_cast<std::size_t>(grid.nx));
    std::vector<double> ky(static_cast<std::size_t>(grid.ny));
    for (const auto& p : points) {
        kernel_row(p.x, bandwidth.hx, grid.x0, grid.dx, grid.nx, kx.data());
        kernel_row(p.y, bandwidth.hy, grid.y0, grid.dy, grid.ny, ky.data());
        for (int iy = 0; iy < grid.ny; ++iy) {
            double wy = ky[static_cast<std::size_t>(iy)];
            double* row = values.data() + static_cast<std::size_t>(iy) * grid.nx;
            for (int ix = 0; ix < grid.nx; ++ix) {
                row[ix] += wy * kx[static_cast<std::size_t>(ix)];
            }
        }
    }
    const double inv_n = 1.0 / static_cast<double>(points.size());
    for (double& v : values) v *= inv_n;

    return Density2D(grid, std::move(values), static_cast<int>(points.size()), bandwidth);
}

double ise(const Density2D& f1, const Density2D& f2) {
    if (!f1.grid().same_geometry(f2.grid())) {
        fail(Errc::GridMismatch, "densities live on different grids");
    }
    return trapezoid_sum(f1.grid(), [&](int ix, int iy) {
        double d = f1.value(ix, iy) - f2.value(ix, iy);
        return d * d;
    });
}

ShiftTestResult permutation_test(const std::vector<Point2>& points_a,
                                 const std::vector<Point2>& points_b, const GridSpec& spec,
                                 int n_perm, RngSeed seed, int max_threads) {
    if (points_a.empty() || points_b.empty()) {
        fail(Errc::EmptySample, points_a.empty() ? "sample A is empty" : "sample B is empty");
    }
    if (n_perm < 99) {
        fail(Errc::InvalidArgument, "need at least 99 permutations");
    }

    std::vector<Point2> pooled;
    pooled.reserve(points_a.size() + points_b.size());
    pooled.insert(pooled.end(), points_a.begin(), points_a.end());
    pooled.insert(pooled.end(), points_b.begin(), points_b.end());

    // Bandwidths and grid are frozen from the pooled sample so the statistic
    // is computed the same way on every relabeling.
    const Bandwidth2D bw = bandwidth_rule(pooled);
    const Grid2D grid = make_grid(pooled, bw, spec);

    const double observed = ise(estimate_density(points_a, bw, grid),
                                estimate_density(points_b, bw, grid));

    // Per-point kernel rows, shared by all permutations.
    const int n = static_cast<int>(pooled.size());
    const int na = static_cast<int>(points_a.size());
    std::vector<double> kx(static_cast<std::size_t>(n) * grid.nx);
    std::vector<double> ky(static_cast<std::size_t>(n) * grid.ny);
    for (int i = 0; i < n; ++i) {
        kernel_row(pooled[static_cast<std::size_t>(i)].x, bw.hx, grid.x0, grid.dx, grid.nx,
                   kx.data() + static_cast<std::size_t>(i) * grid.nx);
        kernel_row(pooled[static_cast<std::size_t>(i)].y, bw.hy, grid.y0, grid.dy, grid.ny,
                   ky.data() + static_cast<std::size_t>(i) * grid.ny);
    }

    // One relabeled ISE: accumulate (f_A - f_B) on the grid in a single pass
    // over the pooled points, then apply the same trapezoid sum as ise().
    auto relabeled_ise = [&](std::mt19937_64& gen, std::vector<int>& idx,
                             std::vector<double>& diff) {
        std::iota(idx.begin(), idx.end(), 0);
        rng::shuffle(idx, gen);
        std::fill(diff.begin(), diff.end(), 0.0);
        const double ca = 1.0 / static_cast<double>(na);
        const double cb = -1.0 / static_cast<double>(n - na);
        for (int pos = 0; pos < n; ++pos) {
            int i = idx[static_cast<std::size_t>(pos)];
            double c = pos < na ? ca : cb;
            const double* krx = kx.data() + static_cast<std::size_t>(i) * grid.nx;
            const double* kry = ky.data() + static_cast<std::size_t>(i) * grid.ny;
            for (int iy = 0; iy < grid.ny; ++iy) {
                double wy = c * kry[iy];
                double* row = diff.data() + static_cast<std::size_t>(iy) * grid.nx;
                for (int ix = 0; ix < grid.nx; ++ix) {
                    row[ix] += wy * krx[ix];
                }
            }
        }
        return trapezoid_sum(grid, [&](int ix, int iy) {
            double d = diff[static_cast<std::size_t>(iy) * grid.nx + ix];
            return d * d;
        });
    };

    std::vector<double> null_ise(static_cast<std::size_t>(n_perm));
    const int threads = resolve_threads(max_threads, n_perm);
    auto worker = [&](int first, int last) {
        std::vector<int> idx(static_cast<std::size_t>(n));
        std::vector<double> diff(static_cast<std::size_t>(grid.nx) * grid.ny);
        for (int r = first; r < last; ++r) {
            auto gen = rng::make_engine(rng::substream_seed(seed, static_cast<std::uint64_t>(r)));
            null_ise[static_cast<std::size_t>(r)] = relabeled_ise(gen, idx, diff);
        }
    };
    if (threads == 1) {
        worker(0, n_perm);
    } else {
        std::vector<std::thread> pool;
        int chunk = (n_perm + threads - 1) / threads;
        for (int t = 0; t < threads; ++t) {
            int first = t * chunk;
            int last = std::min(n_perm, first + chunk);
            if (first < last) pool.emplace_back(worker, first, last);
        }
        for (auto& th : pool) th.join();
    }

    int exceed = 0;
    for (double v : null_ise) {
        if (v >= observed) ++exceed;
    }

    ShiftTestResult result;
    result.ise = observed;
    result.p_value = (1.0 + exceed) / (1.0 + static_cast<double>(n_perm));
    result.n_permutations = n_perm;
    result.seed = seed;
    std::sort(null_ise.begin(), null_ise.end());
    for (double prob : {0.50, 0.90, 0.95, 0.99}) {
        result.null_quantiles.push_back({prob, sorted_quantile(null_ise, prob)});
    }
    return result;
}

std::pair<Density2D, Density2D> windowed_densities(const std::vector<EventRecord>& events,
                                                   const Date& anchor, int window_days,
                                                   const GridSpec& spec) {
    if (window_days < 1) {
        fail(Errc::InvalidArgument, "window length must be at least one day");
    }
    std::vector<Point2> before =
        locations_in_window(events, anchor.plus_days(-window_days), anchor, "before");
    std::vector<Point2> after =
        locations_in_window(events, anchor, anchor.plus_days(window_days), "after");

    std::vector<Point2> pooled;
    pooled.reserve(before.size() + after.size());
    pooled.insert(pooled.end(), before.begin(), before.end());
    pooled.insert(pooled.end(), after.begin(), after.end());

    const Bandwidth2D bw = bandwidth_rule(pooled);
    const Grid2D grid = make_grid(pooled, bw, spec);
    return {estimate_density(before, bw, grid), estimate_density(after, bw, grid)};
}

}  // namespace shiftlab
