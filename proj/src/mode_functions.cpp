#include "cwopo/mode_functions.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cwopo/errors.hpp"
#include "segment_integrals.hpp"

namespace cwopo {

namespace {

// A linear piece between consecutive breakpoints, with one-sided limits of
// the integrated function at both ends.
struct Seg {
    double h;
    double gl;
    double gr;
};

// Cached moments for runs of equal-length pieces (the uniform-grid case).
class MomentCache {
public:
    explicit MomentCache(double rate) : rate_(rate) {}

    const detail::SegmentMoments& at(double h) {
        if (h != h_) {
            h_ = h;
            m_ = detail::segment_moments(rate_, h);
        }
        return m_;
    }

private:
    double rate_;
    double h_ = -1.0;
    detail::SegmentMoments m_;
};

// For each piece k, the pair c_p = int phi_p(t) (k_a * g)(t) dt over the piece,
// where k_a(tau) = exp(-a |tau|). Also returns the convolution at every
// breakpoint when `nodes` is non-null.
std::vector<std::array<double, 2>> piece_fields(std::span<const Seg> segs, double rate,
                                                std::vector<double>* nodes = nullptr) {
    const std::size_t n = segs.size();
    std::vector<double> left(n + 1, 0.0), right(n + 1, 0.0);
    MomentCache cache(rate);
    for (std::size_t k = 0; k < n; ++k) {
        const auto& m = cache.at(segs[k].h);
        left[k + 1] = m.decay * left[k] + segs[k].gl * m.e[1] + segs[k].gr * m.e[0];
    }
    for (std::size_t k = n; k-- > 0;) {
        const auto& m = cache.at(segs[k].h);
        right[k] = m.decay * right[k + 1] + segs[k].gl * m.e[0] + segs[k].gr * m.e[1];
    }
    std::vector<std::array<double, 2>> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        const auto& m = cache.at(segs[k].h);
        const std::array<double, 2> g{segs[k].gl, segs[k].gr};
        for (int p = 0; p < 2; ++p) {
            double c = left[k] * m.e[p] + right[k + 1] * m.e[1 - p];
            for (int q = 0; q < 2; ++q) c += g[q] * (m.d[p][q] + m.d[q][p]);
            out[k][p] = c;
        }
    }
    if (nodes) {
        nodes->resize(n + 1);
        for (std::size_t k = 0; k <= n; ++k) (*nodes)[k] = left[k] + right[k];
    }
    return out;
}

std::vector<Seg> grid_segments(const GridSpec& grid, const Eigen::VectorXd& f) {
    std::vector<Seg> segs(grid.size - 1);
    for (std::size_t k = 0; k + 1 < grid.size; ++k)
        segs[k] = {grid.dt, f[static_cast<Eigen::Index>(k)], f[static_cast<Eigen::Index>(k + 1)]};
    return segs;
}

double clamped_value(const ModeGrid& f, double t) {
    const double x = std::clamp((t - f.t_start()) / f.dt(), 0.0, static_cast<double>(f.size() - 1));
    const auto i = std::min(static_cast<std::size_t>(x), f.size() - 2);
    const double w = x - static_cast<double>(i);
    return (1.0 - w) * f[i] + w * f[i + 1];
}

// One-sided limits of f on the piece [a, b]; the piece lies either inside the
// support or entirely outside it because support ends are breakpoints.
std::array<double, 2> piece_limits(const ModeGrid& f, double a, double b) {
    const double mid = 0.5 * (a + b);
    if (mid < f.t_start() || mid > f.t_end()) return {0.0, 0.0};
    return {clamped_value(f, a), clamped_value(f, b)};
}

std::vector<double> merged_breaks(const ModeGrid& f, const ModeGrid& g) {
    std::vector<double> t;
    t.reserve(f.size() + g.size());
    for (std::size_t i = 0; i < f.size(); ++i) t.push_back(f.time(i));
    for (std::size_t i = 0; i < g.size(); ++i) t.push_back(g.time(i));
    std::sort(t.begin(), t.end());
    const double scale = std::max({1.0, std::abs(t.front()), std::abs(t.back())});
    std::vector<double> out;
    out.reserve(t.size());
    for (double x : t) {
        if (out.empty() || x - out.back() > 1e-12 * scale) out.push_back(x);
    }
    return out;
}

struct MergedPieces {
    std::vector<Seg> g;
    std::vector<std::array<double, 2>> f;
};

MergedPieces merge(const ModeGrid& f, const ModeGrid& g) {
    const auto breaks = merged_breaks(f, g);
    MergedPieces out;
    out.g.reserve(breaks.size());
    out.f.reserve(breaks.size());
    for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
        const double a = breaks[k], b = breaks[k + 1];
        const auto gv = piece_limits(g, a, b);
        out.g.push_back({b - a, gv[0], gv[1]});
        out.f.push_back(piece_limits(f, a, b));
    }
    return out;
}

}  // namespace

ModeGrid::ModeGrid(double t_start, double dt, std::vector<double> values)
    : t_start_(t_start), dt_(dt), values_(std::move(values)) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("ModeGrid: dt must be positive");
    if (values_.size() < 3) throw std::invalid_argument("ModeGrid: at least three samples are required");
    if (!std::isfinite(t_start)) throw std::invalid_argument("ModeGrid: non-finite start time");
    for (double v : values_) {
        if (!std::isfinite(v)) throw std::invalid_argument("ModeGrid: non-finite sample");
    }
}

ModeGrid::ModeGrid(const GridSpec& grid, const Eigen::VectorXd& values)
    : ModeGrid(grid.t_start, grid.dt, std::vector<double>(values.data(), values.data() + values.size())) {
    if (static_cast<std::size_t>(values.size()) != grid.size)
        throw std::invalid_argument("ModeGrid: value count does not match grid");
}

double ModeGrid::operator()(double t) const {
    if (t < t_start_ || t > t_end()) return 0.0;
    return clamped_value(*this, t);
}

ModeGrid ModeGrid::scaled(double factor) const {
    auto v = values_;
    for (auto& x : v) x *= factor;
    return ModeGrid(t_start_, dt_, std::move(v));
}

ModeGrid ModeGrid::shifted(double delta) const {
    return ModeGrid(t_start_ + delta, dt_, values_);
}

double norm_squared(const ModeGrid& f) {
    double sum = 0.0;
    for (std::size_t k = 0; k + 1 < f.size(); ++k) {
        const double a = f[k], b = f[k + 1];
        sum += a * a + a * b + b * b;
    }
    return sum * f.dt() / 3.0;
}

double inner_product(const ModeGrid& f, const ModeGrid& g) {
    const auto pieces = merge(f, g);
    double sum = 0.0;
    for (std::size_t k = 0; k < pieces.g.size(); ++k) {
        const auto& s = pieces.g[k];
        const auto& fv = pieces.f[k];
        sum += s.h * (2.0 * fv[0] * s.gl + fv[0] * s.gr + fv[1] * s.gl + 2.0 * fv[1] * s.gr) / 6.0;
    }
    return sum;
}

ModeGrid normalize(const ModeGrid& f) {
    const double n2 = norm_squared(f);
    if (!(n2 > 0.0)) throw DegenerateModeError();
    return f.scaled(1.0 / std::sqrt(n2));
}

ModeGrid exp_mode(double t_c, double half_width, std::size_t n) {
    if (!(half_width > 0.0)) throw std::invalid_argument("exp_mode: half_width must be positive");
    if (n < 3 || n % 2 == 0) throw std::invalid_argument("exp_mode: sample count must be odd and >= 3");
    const double g = OpoParams::gamma();
    const double dt = 2.0 * half_width / static_cast<double>(n - 1);
    const std::size_t centre = n / 2;
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double s = dt * (static_cast<double>(i) - static_cast<double>(centre));
        v[i] = std::sqrt(0.5 * g) * std::exp(-0.5 * g * std::abs(s));
    }
    return normalize(ModeGrid(t_c - half_width, dt, std::move(v)));
}

ModeGrid box_mode(double t_c, double width) {
    if (!(width > 0.0)) throw std::invalid_argument("box_mode: width must be positive");
    const double height = 1.0 / std::sqrt(width);
    return ModeGrid(t_c - 0.5 * width, 0.5 * width, {height, height, height});
}

double kernel_quadratic_form(const ModeGrid& f, const ModeGrid& g, const ExpKernel& kernel) {
    const auto pieces = merge(f, g);
    double total = 0.0;
    for (const auto& term : kernel.terms()) {
        const auto fields = piece_fields(pieces.g, term.rate);
        double sum = 0.0;
        for (std::size_t k = 0; k < fields.size(); ++k)
            sum += pieces.f[k][0] * fields[k][0] + pieces.f[k][1] * fields[k][1];
        total += term.coeff * sum;
    }
    return total;
}

Eigen::VectorXd convolution_weights(const GridSpec& grid, const ExpKernel& kernel, double t) {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.size));
    const double h = grid.dt;
    for (const auto& term : kernel.terms()) {
        const double a = term.rate;
        const auto full = detail::segment_moments(a, h);
        for (std::size_t j = 0; j + 1 < grid.size; ++j) {
            const auto i0 = static_cast<Eigen::Index>(j);
            const double s0 = grid.time(j);
            const double s1 = s0 + h;
            if (s1 <= t) {
                const double damp = term.coeff * std::exp(-a * (t - s1));
                w[i0] += damp * full.e[1];
                w[i0 + 1] += damp * full.e[0];
            } else if (s0 >= t) {
                const double damp = term.coeff * std::exp(-a * (s0 - t));
                w[i0] += damp * full.e[0];
                w[i0 + 1] += damp * full.e[1];
            } else {
                // t splits the segment; the value at t is (1 - r) g_j + r g_{j+1}.
                const double u = t - s0;
                const double r = u / h;
                const auto lm = detail::segment_moments(a, u);
                const auto rm = detail::segment_moments(a, h - u);
                const double at_t = lm.e[0] + rm.e[0];
                w[i0] += term.coeff * (lm.e[1] + (1.0 - r) * at_t);
                w[i0 + 1] += term.coeff * (rm.e[1] + r * at_t);
            }
        }
    }
    return w;
}

double kernel_convolution(const ModeGrid& f, const ExpKernel& kernel, double t) {
    return convolution_weights(f.grid(), kernel, t).dot(f.vector());
}

Eigen::VectorXd kernel_apply(const GridSpec& grid, const Eigen::VectorXd& f, const ExpKernel& kernel) {
    const auto segs = grid_segments(grid, f);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(f.size());
    for (const auto& term : kernel.terms()) {
        const auto fields = piece_fields(segs, term.rate);
        for (std::size_t k = 0; k < fields.size(); ++k) {
            out[static_cast<Eigen::Index>(k)] += term.coeff * fields[k][0];
            out[static_cast<Eigen::Index>(k + 1)] += term.coeff * fields[k][1];
        }
    }
    return out;
}

Eigen::VectorXd convolution_on_grid(const GridSpec& grid, const Eigen::VectorXd& f,
                                    const ExpKernel& kernel) {
    const auto segs = grid_segments(grid, f);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(f.size());
    std::vector<double> nodes;
    for (const auto& term : kernel.terms()) {
        piece_fields(segs, term.rate, &nodes);
        for (std::size_t k = 0; k < nodes.size(); ++k) out[static_cast<Eigen::Index>(k)] += term.coeff * nodes[k];
    }
    return out;
}

Eigen::VectorXd mass_apply(const GridSpec& grid, const Eigen::VectorXd& f) {
    const auto n = f.size();
    const double h = grid.dt;
    Eigen::VectorXd out(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const bool edge = (i == 0 || i == n - 1);
        double v = (edge ? h / 3.0 : 2.0 * h / 3.0) * f[i];
        if (i > 0) v += h / 6.0 * f[i - 1];
        if (i + 1 < n) v += h / 6.0 * f[i + 1];
        out[i] = v;
    }
    return out;
}

Eigen::VectorXd mass_solve(const GridSpec& grid, const Eigen::VectorXd& rhs) {
    // Thomas algorithm; the mass matrix is strictly diagonally dominant.
    const auto n = rhs.size();
    const double h = grid.dt;
    const double off = h / 6.0;
    Eigen::VectorXd c(n), d(n);
    auto diag = [&](Eigen::Index i) { return (i == 0 || i == n - 1) ? h / 3.0 : 2.0 * h / 3.0; };
    c[0] = off / diag(0);
    d[0] = rhs[0] / diag(0);
    for (Eigen::Index i = 1; i < n; ++i) {
        const double denom = diag(i) - off * c[i - 1];
        c[i] = off / denom;
        d[i] = (rhs[i] - off * d[i - 1]) / denom;
    }
    Eigen::VectorXd x(n);
    x[n - 1] = d[n - 1];
    for (Eigen::Index i = n - 1; i-- > 0;) x[i] = d[i] - c[i] * x[i + 1];
    return x;
}

double full_width_half_max(const ModeGrid& f) {
    const auto v = f.values();
    std::size_t peak = 0;
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (std::abs(v[i]) > std::abs(v[peak])) peak = i;
    }
    const double half = 0.5 * std::abs(v[peak]);
    double left = f.t_start();
    for (std::size_t i = peak; i-- > 0;) {
        if (std::abs(v[i]) < half) {
            const double a = std::abs(v[i]), b = std::abs(v[i + 1]);
            left = f.time(i) + f.dt() * (half - a) / (b - a);
            break;
        }
    }
    double right = f.t_end();
    for (std::size_t i = peak + 1; i < v.size(); ++i) {
        if (std::abs(v[i]) < half) {
            const double a = std::abs(v[i - 1]), b = std::abs(v[i]);
            right = f.time(i - 1) + f.dt() * (a - half) / (a - b);
            break;
        }
    }
    return right - left;
}

double l2_distance(const ModeGrid& f, const ModeGrid& g) {
    const double base = norm_squared(f) + norm_squared(g);
    const double cross = 2.0 * std::abs(inner_product(f, g));
    return std::sqrt(std::max(0.0, base - cross));
}

}  // namespace cwopo
