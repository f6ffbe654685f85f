#include "wmsim/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <queue>
#include <stdexcept>
#include <string>

namespace wmsim {

namespace {

using complex = std::complex<double>;

// Kronrod 15-point abscissae (positive half, descending) and weights; the
// odd-indexed abscissae are the 7-point Gauss nodes.
constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851, 0.864864423359769072789712788640926,
    0.741531185599394439863864773280788, 0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204, 0.104790010322250183839876322541518,
    0.140653259715525918745189590510238, 0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                                       0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

enum class Map { Identity, LeftTail, RightTail };

// A segment of the real line expressed in its own parameter t.
struct Segment {
    Map map;
    double anchor; // breakpoint the tail hangs off; unused for Identity
};

struct Panel {
    std::size_t segment;
    double lo;
    double hi;
    complex value;
    double error;
};

struct WorseFirst {
    bool operator()(const Panel &a, const Panel &b) const { return a.error < b.error; }
};

class Engine {
public:
    Engine(const BatchIntegrand &f, std::vector<Segment> segments) : f_(f), segments_(std::move(segments)) {}

    Panel evaluate(std::size_t seg, double lo, double hi) {
        const Segment &s = segments_[seg];
        const double center = 0.5 * (lo + hi);
        const double half = 0.5 * (hi - lo);
        std::array<double, 15> t{};
        t[7] = center;
        for (int k = 0; k < 7; ++k) {
            t[k] = center - half * kXgk[k];
            t[14 - k] = center + half * kXgk[k];
        }
        std::array<double, 15> x{};
        std::array<double, 15> jac{};
        for (int k = 0; k < 15; ++k) {
            switch (s.map) {
            case Map::Identity:
                x[k] = t[k];
                jac[k] = 1.0;
                break;
            case Map::LeftTail:
            case Map::RightTail: {
                const double tt = t[k];
                const double den = 1.0 - tt * tt;
                x[k] = s.anchor + tt / den;
                jac[k] = (1.0 + tt * tt) / (den * den);
                break;
            }
            }
        }
        f_(x, fx_);
        evaluations_ += 15;
        for (int k = 0; k < 15; ++k) {
            if (!std::isfinite(fx_[k].real()) || !std::isfinite(fx_[k].imag())) {
                throw std::domain_error("integrate_real_line: non-finite integrand at x = " + std::to_string(x[k]));
            }
            fx_[k] *= jac[k];
        }
        complex kronrod = fx_[7] * kWgk[7];
        complex gauss = fx_[7] * kWg[3];
        for (int k = 0; k < 7; ++k) {
            const complex pair = fx_[k] + fx_[14 - k];
            kronrod += kWgk[k] * pair;
            if (k % 2 == 1) {
                gauss += kWg[k / 2] * pair;
            }
        }
        return {seg, lo, hi, kronrod * half, std::abs((kronrod - gauss) * half)};
    }

    long evaluations() const { return evaluations_; }

private:
    const BatchIntegrand &f_;
    std::vector<Segment> segments_;
    std::array<complex, 15> fx_{};
    long evaluations_ = 0;
};

QuadratureOutcome run(const BatchIntegrand &f, std::vector<Segment> segments,
                      const std::vector<std::pair<double, double>> &ranges, double tol, long max_evals) {
    if (!(tol > 0.0)) {
        throw std::invalid_argument("quadrature: tol must be positive");
    }
    if (max_evals < 15) {
        throw std::invalid_argument("quadrature: max_evals must allow at least one panel");
    }
    if (!f) {
        throw std::invalid_argument("quadrature: empty integrand");
    }
    Engine engine(f, std::move(segments));
    std::priority_queue<Panel, std::vector<Panel>, WorseFirst> open;
    std::vector<Panel> done;
    double total_error = 0.0;
    for (std::size_t s = 0; s < ranges.size(); ++s) {
        Panel p = engine.evaluate(s, ranges[s].first, ranges[s].second);
        total_error += p.error;
        open.push(p);
    }

    while (total_error > tol && !open.empty() && engine.evaluations() + 30 <= max_evals) {
        Panel worst = open.top();
        open.pop();
        const double mid = 0.5 * (worst.lo + worst.hi);
        if (!(mid > worst.lo && mid < worst.hi)) {
            // Cannot bisect further in double precision.
            done.push_back(worst);
            continue;
        }
        Panel left = engine.evaluate(worst.segment, worst.lo, mid);
        Panel right = engine.evaluate(worst.segment, mid, worst.hi);
        total_error += left.error + right.error - worst.error;
        open.push(left);
        open.push(right);
    }

    while (!open.empty()) {
        done.push_back(open.top());
        open.pop();
    }
    // Sum in a fixed geometric order so the result does not depend on the
    // refinement history.
    std::sort(done.begin(), done.end(), [](const Panel &a, const Panel &b) {
        return a.segment != b.segment ? a.segment < b.segment : a.lo < b.lo;
    });
    QuadratureOutcome out;
    for (const Panel &p : done) {
        out.value += p.value;
        out.abs_error_estimate += p.error;
    }
    out.evaluations = engine.evaluations();
    out.converged = out.abs_error_estimate <= tol;
    return out;
}

} // namespace

BatchIntegrand pointwise(std::function<complex(double)> f) {
    return [f = std::move(f)](std::span<const double> x, std::span<complex> out) {
        for (std::size_t i = 0; i < x.size(); ++i) {
            out[i] = f(x[i]);
        }
    };
}

QuadratureOutcome integrate_real_line(const QuadratureRequest &req) {
    std::vector<double> bp = req.breakpoints;
    for (double b : bp) {
        if (!std::isfinite(b)) {
            throw std::invalid_argument("integrate_real_line: breakpoints must be finite");
        }
    }
    std::sort(bp.begin(), bp.end());
    bp.erase(std::unique(bp.begin(), bp.end()), bp.end());
    if (bp.empty()) {
        bp.push_back(0.0);
    }

    std::vector<Segment> segments;
    std::vector<std::pair<double, double>> ranges;
    segments.push_back({Map::LeftTail, bp.front()});
    ranges.emplace_back(-1.0, 0.0);
    for (std::size_t i = 0; i + 1 < bp.size(); ++i) {
        segments.push_back({Map::Identity, 0.0});
        ranges.emplace_back(bp[i], bp[i + 1]);
    }
    segments.push_back({Map::RightTail, bp.back()});
    ranges.emplace_back(0.0, 1.0);
    return run(req.integrand, std::move(segments), ranges, req.tol, req.max_evals);
}

QuadratureOutcome integrate_interval(const BatchIntegrand &f, double a, double b, double tol, long max_evals) {
    if (!std::isfinite(a) || !std::isfinite(b) || !(a < b)) {
        throw std::invalid_argument("integrate_interval: need finite a < b");
    }
    return run(f, {Segment{Map::Identity, 0.0}}, {{a, b}}, tol, max_evals);
}

} // namespace wmsim
