#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string_view>
#include <vector>

#include "relmove/core.hpp"

namespace relmove {

enum class CurveMode { CubicBasis, NaturalCubic, Bundle, Cardinal, CatmullRom, None };

inline std::string_view to_string(CurveMode m) {
    switch (m) {
    case CurveMode::CubicBasis: return "basis";
    case CurveMode::NaturalCubic: return "natural";
    case CurveMode::Bundle: return "bundle";
    case CurveMode::Cardinal: return "cardinal";
    case CurveMode::CatmullRom: return "catmull-rom";
    case CurveMode::None: return "none";
    }
    return "none";
}

inline CurveMode curve_mode_from_string(std::string_view s) {
    if (s == "basis") return CurveMode::CubicBasis;
    if (s == "natural") return CurveMode::NaturalCubic;
    if (s == "bundle") return CurveMode::Bundle;
    if (s == "cardinal") return CurveMode::Cardinal;
    if (s == "catmull-rom" || s == "catmullrom") return CurveMode::CatmullRom;
    if (s == "none") return CurveMode::None;
    throw Error("invalid_mode", "unknown curve mode '" + std::string(s) + "'");
}

struct SmoothingConfig {
    CurveMode mode = CurveMode::None;
    double alpha = 0.5;
    int samples_per_segment = 8;

    double clamped_alpha() const { return std::isfinite(alpha) ? std::clamp(alpha, 0.0, 1.0) : 0.0; }
};

namespace curves {

/// Polyline evaluated at global parameter u in [0, n-1].
inline PlanarPoint polyline_at(std::span<const PlanarPoint> p, double u) {
    const std::size_t n = p.size();
    const std::size_t seg = std::min(static_cast<std::size_t>(u), n - 2);
    return lerp(p[seg], p[seg + 1], u - static_cast<double>(seg));
}

inline PlanarPoint hermite(PlanarPoint p0, PlanarPoint p1, PlanarPoint m0, PlanarPoint m1, double s) {
    const double s2 = s * s, s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1;
    const double h10 = s3 - 2 * s2 + s;
    const double h01 = -2 * s3 + 3 * s2;
    const double h11 = s3 - s2;
    return {h00 * p0.x + h10 * m0.x + h01 * p1.x + h11 * m1.x,
            h00 * p0.y + h10 * m0.y + h01 * p1.y + h11 * m1.y};
}

/// Uniform cubic B-spline with tripled end control points, so the curve
/// starts at p.front() and ends at p.back(). `v` runs over [0, n+1].
inline PlanarPoint bspline_at(std::span<const PlanarPoint> p, double v) {
    const std::size_t n = p.size();
    const std::size_t segments = n + 1;
    auto ctrl = [&](std::ptrdiff_t k) {
        // padded sequence: p0 p0 p0 p1 ... p(n-1) p(n-1) p(n-1)
        const std::ptrdiff_t idx = std::clamp<std::ptrdiff_t>(k - 2, 0, static_cast<std::ptrdiff_t>(n) - 1);
        return p[static_cast<std::size_t>(idx)];
    };
    const std::size_t seg = std::min(static_cast<std::size_t>(v), segments - 1);
    const double s = v - static_cast<double>(seg);
    const double s2 = s * s, s3 = s2 * s;
    const double b0 = (1 - 3 * s + 3 * s2 - s3) / 6.0;
    const double b1 = (4 - 6 * s2 + 3 * s3) / 6.0;
    const double b2 = (1 + 3 * s + 3 * s2 - 3 * s3) / 6.0;
    const double b3 = s3 / 6.0;
    const auto k = static_cast<std::ptrdiff_t>(seg);
    const PlanarPoint c0 = ctrl(k), c1 = ctrl(k + 1), c2 = ctrl(k + 2), c3 = ctrl(k + 3);
    return {b0 * c0.x + b1 * c1.x + b2 * c2.x + b3 * c3.x, b0 * c0.y + b1 * c1.y + b2 * c2.y + b3 * c3.y};
}

/// Second derivatives of the natural cubic interpolant through one
/// coordinate, parameterized by index (Thomas algorithm).
inline std::vector<double> natural_second_derivatives(const std::vector<double>& y) {
    const std::size_t n = y.size();
    std::vector<double> m(n, 0.0);
    if (n < 3) return m;
    const std::size_t k = n - 2;  // unknowns m[1..n-2]
    std::vector<double> c(k, 0.0), d(k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        const double rhs = 6.0 * (y[i + 2] - 2.0 * y[i + 1] + y[i]);
        const double denom = 4.0 - (i > 0 ? c[i - 1] : 0.0);
        c[i] = 1.0 / denom;
        d[i] = (rhs - (i > 0 ? d[i - 1] : 0.0)) / denom;
    }
    m[k] = d[k - 1];
    for (std::size_t i = k - 1; i-- > 0;) m[i + 1] = d[i] - c[i] * m[i + 2];
    return m;
}

class NaturalCubic {
public:
    explicit NaturalCubic(std::span<const PlanarPoint> p) : p_(p.begin(), p.end()) {
        std::vector<double> xs, ys;
        for (const auto& q : p) {
            xs.push_back(q.x);
            ys.push_back(q.y);
        }
        mx_ = natural_second_derivatives(xs);
        my_ = natural_second_derivatives(ys);
    }

    PlanarPoint at(double u) const {
        const std::size_t seg = std::min(static_cast<std::size_t>(u), p_.size() - 2);
        const double s = u - static_cast<double>(seg);
        const double a = 1.0 - s;
        auto eval = [&](double y0, double y1, double m0, double m1) {
            return a * y0 + s * y1 + ((a * a * a - a) * m0 + (s * s * s - s) * m1) / 6.0;
        };
        return {eval(p_[seg].x, p_[seg + 1].x, mx_[seg], mx_[seg + 1]),
                eval(p_[seg].y, p_[seg + 1].y, my_[seg], my_[seg + 1])};
    }

private:
    std::vector<PlanarPoint> p_;
    std::vector<double> mx_, my_;
};

/// Catmull-Rom segment p1 -> p2 with knot spacing |dp|^exponent
/// (0 uniform, 0.5 centripetal, 1 chordal), in Hermite form.
inline PlanarPoint catmull_rom_segment(PlanarPoint p0, PlanarPoint p1, PlanarPoint p2, PlanarPoint p3,
                                       double exponent, double s) {
    constexpr double eps = 1e-9;
    double dt0 = std::pow(distance(p0, p1), exponent);
    double dt1 = std::pow(distance(p1, p2), exponent);
    double dt2 = std::pow(distance(p2, p3), exponent);
    if (dt1 < eps) dt1 = 1.0;
    if (dt0 < eps) dt0 = dt1;
    if (dt2 < eps) dt2 = dt1;
    PlanarPoint m1 = (1.0 / dt0) * (p1 - p0) - (1.0 / (dt0 + dt1)) * (p2 - p0) + (1.0 / dt1) * (p2 - p1);
    PlanarPoint m2 = (1.0 / dt1) * (p2 - p1) - (1.0 / (dt1 + dt2)) * (p3 - p1) + (1.0 / dt2) * (p3 - p2);
    return hermite(p1, p2, dt1 * m1, dt1 * m2, s);
}

}  // namespace curves

/// Evaluates one smoothing family over a run of control points.
///
/// Output has samples_per_segment vertices per input segment with the end
/// vertices included once; the first and last vertices are always exactly the
/// first and last inputs. Modes that reduce to the bare polyline (None, or
/// alpha = 0 for the interpolating families and CubicBasis) return the input
/// unchanged, and Bundle at alpha = 1 returns the two-vertex chord.
///
/// alpha mappings:
///   CatmullRom   knot exponent = alpha
///   Cardinal     tension = 1 - alpha
///   NaturalCubic alpha * spline + (1 - alpha) * polyline
///   CubicBasis   alpha * bspline + (1 - alpha) * polyline
///   Bundle       (1 - alpha) * bspline + alpha * chord
inline std::vector<PlanarPoint> evaluate_curve(std::span<const PlanarPoint> points, const SmoothingConfig& config) {
    const std::size_t n = points.size();
    if (n == 0) return {};
    if (n == 1) return {points.front()};
    const double alpha = config.clamped_alpha();
    const CurveMode mode = config.mode;

    if (mode == CurveMode::None) return {points.begin(), points.end()};
    if (alpha == 0.0 && mode != CurveMode::Bundle) return {points.begin(), points.end()};
    if (mode == CurveMode::Bundle && alpha == 1.0) return {points.front(), points.back()};

    const std::size_t per = static_cast<std::size_t>(std::max(1, config.samples_per_segment));
    const std::size_t total = (n - 1) * per + 1;
    std::vector<PlanarPoint> out;
    out.reserve(total);

    if (n == 2) {
        for (std::size_t k = 0; k < total; ++k) {
            out.push_back(lerp(points[0], points[1], static_cast<double>(k) / static_cast<double>(per)));
        }
    } else {
        switch (mode) {
        case CurveMode::CatmullRom:
        case CurveMode::Cardinal: {
            auto at = [&](std::ptrdiff_t k) -> PlanarPoint {
                // reflected phantom points keep the end tangent on the end segment
                if (k < 0) return 2.0 * points[0] - points[1];
                if (k >= static_cast<std::ptrdiff_t>(n)) return 2.0 * points[n - 1] - points[n - 2];
                return points[static_cast<std::size_t>(k)];
            };
            for (std::size_t seg = 0; seg + 1 < n; ++seg) {
                const auto k = static_cast<std::ptrdiff_t>(seg);
                const PlanarPoint p0 = at(k - 1), p1 = at(k), p2 = at(k + 1), p3 = at(k + 2);
                for (std::size_t j = 0; j < per; ++j) {
                    const double s = static_cast<double>(j) / static_cast<double>(per);
                    if (mode == CurveMode::CatmullRom) {
                        out.push_back(curves::catmull_rom_segment(p0, p1, p2, p3, alpha, s));
                    } else {
                        const double scale = 0.5 * alpha;  // (1 - tension) / 2
                        out.push_back(curves::hermite(p1, p2, scale * (p2 - p0), scale * (p3 - p1), s));
                    }
                }
            }
            out.push_back(points[n - 1]);
            break;
        }
        case CurveMode::NaturalCubic: {
            const curves::NaturalCubic spline(points);
            for (std::size_t k = 0; k < total; ++k) {
                const double u = static_cast<double>(k) / static_cast<double>(per);
                const auto seg = k / per;
                const PlanarPoint lin = k % per == 0 ? points[seg] : curves::polyline_at(points, u);
                const PlanarPoint cur = k % per == 0 ? points[seg] : spline.at(u);
                out.push_back(lerp(lin, cur, alpha));
            }
            break;
        }
        case CurveMode::CubicBasis:
        case CurveMode::Bundle: {
            const double scale = static_cast<double>(n + 1) / static_cast<double>(n - 1);
            const double last = static_cast<double>(n - 1);
            for (std::size_t k = 0; k < total; ++k) {
                const double u = static_cast<double>(k) / static_cast<double>(per);
                const PlanarPoint b = curves::bspline_at(points, u * scale);
                if (mode == CurveMode::CubicBasis) {
                    out.push_back(lerp(curves::polyline_at(points, u), b, alpha));
                } else {
                    out.push_back(lerp(b, lerp(points.front(), points.back(), u / last), alpha));
                }
            }
            break;
        }
        case CurveMode::None: break;
        }
    }
    out.front() = points.front();
    out.back() = points.back();
    return out;
}

// ---------------------------------------------------------------------------
// Trace lines

struct ControlRun {
    std::vector<std::size_t> slots;
    std::vector<PlanarPoint> points;
    std::vector<SlotTag> flags;
};

/// Positioned slots in the window, split into runs at Unavailable slots.
inline std::vector<ControlRun> control_points(const Dataset& data, const AnimalId& animal, TimeWindow window) {
    const auto& track = data.track(animal);
    TimeWindow::checked(static_cast<std::int64_t>(window.start_slot),
                        static_cast<std::int64_t>(window.end_slot), data.grid);
    std::vector<ControlRun> runs;
    bool open = false;
    for (std::size_t t = window.start_slot; t <= window.end_slot; ++t) {
        const auto& s = track.slots[t];
        if (!s.positioned()) {
            open = false;
            continue;
        }
        if (!open) runs.emplace_back();
        open = true;
        runs.back().slots.push_back(t);
        runs.back().points.push_back(*s.position);
        runs.back().flags.push_back(s.tag);
    }
    return runs;
}

struct TraceLine {
    AnimalId animal;
    TimeWindow window;
    std::vector<PlanarPoint> vertices;
    std::vector<std::size_t> breaks;  // vertex index where each run after the first begins
    std::vector<std::size_t> source_slots;
    std::vector<SlotTag> source_flags;
};

inline TraceLine trace_line(const Dataset& data, const AnimalId& animal, TimeWindow window,
                            const SmoothingConfig& config) {
    TraceLine out{animal, window, {}, {}, {}, {}};
    for (const auto& run : control_points(data, animal, window)) {
        if (!out.vertices.empty()) out.breaks.push_back(out.vertices.size());
        const auto curve = evaluate_curve(run.points, config);
        out.vertices.insert(out.vertices.end(), curve.begin(), curve.end());
        out.source_slots.insert(out.source_slots.end(), run.slots.begin(), run.slots.end());
        out.source_flags.insert(out.source_flags.end(), run.flags.begin(), run.flags.end());
    }
    return out;
}

}  // namespace relmove
