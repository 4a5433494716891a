#pragma once

// Computational domains, typed boundary segments and collocation samplers.

#include "deepls/errors.hpp"
#include "deepls/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

namespace deepls {

/// mt19937_64 with a platform-independent mapping to [0, 1).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    std::uint64_t next() { return engine_(); }
    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

// ---------------------------------------------------------------------------
// Domains

struct Annulus {
    double r_inner = 0.3;
    double r_outer = 1.0;
};

struct Rectangle {
    double length = 1.0;
    double height = 1.0;
};

/// Rectangle split into horizontal layers; layer_breaks are interface heights.
struct LayeredRectangle {
    double length = 1.0;
    double height = 1.0;
    std::vector<double> layer_breaks;
    std::vector<double> layer_k0;
};

/// Upper half (z >= 0) of a spherical shell.
struct HalfShell {
    double r_inner = 0.3;
    double r_outer = 1.0;
};

class Domain {
public:
    using Kind = std::variant<Annulus, Rectangle, LayeredRectangle, HalfShell>;

    Domain() : kind_(Annulus{}) {}
    Domain(Kind k) : kind_(std::move(k)) {}  // NOLINT(google-explicit-constructor)

    const Kind& kind() const { return kind_; }
    template <class T> const T* as() const { return std::get_if<T>(&kind_); }

    int dim() const { return std::holds_alternative<HalfShell>(kind_) ? 3 : 2; }

    std::string name() const {
        return std::visit(
            [](const auto& d) -> std::string {
                using T = std::decay_t<decltype(d)>;
                if constexpr (std::is_same_v<T, Annulus>) return "annulus";
                else if constexpr (std::is_same_v<T, Rectangle>) return "rectangle";
                else if constexpr (std::is_same_v<T, LayeredRectangle>) return "layered_rectangle";
                else return "half_shell";
            },
            kind_);
    }

    /// Length (2-D) or width/height of the rectangular extent.
    double extent_x() const {
        if (auto r = as<Rectangle>()) return r->length;
        if (auto r = as<LayeredRectangle>()) return r->length;
        return 0.0;
    }
    double extent_y() const {
        if (auto r = as<Rectangle>()) return r->height;
        if (auto r = as<LayeredRectangle>()) return r->height;
        return 0.0;
    }

    void validate() const {
        std::visit(
            [](const auto& d) {
                using T = std::decay_t<decltype(d)>;
                if constexpr (std::is_same_v<T, Annulus> || std::is_same_v<T, HalfShell>) {
                    if (!(d.r_inner > 0.0 && d.r_inner < d.r_outer))
                        throw ConfigError("radial domain requires 0 < r_inner < r_outer");
                } else {
                    if (!(d.length > 0.0 && d.height > 0.0))
                        throw ConfigError("rectangle requires positive length and height");
                    if constexpr (std::is_same_v<T, LayeredRectangle>) {
                        double prev = 0.0;
                        for (double b : d.layer_breaks) {
                            if (!(b > prev && b < d.height))
                                throw ConfigError("layer breaks must increase strictly within (0, H)");
                            prev = b;
                        }
                        if (d.layer_k0.size() != d.layer_breaks.size() + 1)
                            throw ConfigError("layered rectangle needs one k0 per layer");
                        for (double k : d.layer_k0)
                            if (!(k > 0.0)) throw ConfigError("layer k0 values must be positive");
                    }
                }
            },
            kind_);
    }

    /// Area (2-D) or volume (3-D).
    double measure() const {
        using std::numbers::pi;
        return std::visit(
            [](const auto& d) -> double {
                using T = std::decay_t<decltype(d)>;
                if constexpr (std::is_same_v<T, Annulus>)
                    return pi * (d.r_outer * d.r_outer - d.r_inner * d.r_inner);
                else if constexpr (std::is_same_v<T, HalfShell>)
                    return 2.0 / 3.0 * pi * (std::pow(d.r_outer, 3) - std::pow(d.r_inner, 3));
                else
                    return d.length * d.height;
            },
            kind_);
    }

    /// Perimeter (2-D) or surface area (3-D) of the whole boundary.
    double boundary_measure() const {
        using std::numbers::pi;
        return std::visit(
            [](const auto& d) -> double {
                using T = std::decay_t<decltype(d)>;
                if constexpr (std::is_same_v<T, Annulus>)
                    return 2.0 * pi * (d.r_inner + d.r_outer);
                else if constexpr (std::is_same_v<T, HalfShell>)
                    return 2.0 * pi * (d.r_inner * d.r_inner + d.r_outer * d.r_outer) +
                           pi * (d.r_outer * d.r_outer - d.r_inner * d.r_inner);
                else
                    return 2.0 * (d.length + d.height);
            },
            kind_);
    }

    /// Diagonal of the axis-aligned bounding box.
    double bounding_diagonal() const {
        return std::visit(
            [](const auto& d) -> double {
                using T = std::decay_t<decltype(d)>;
                if constexpr (std::is_same_v<T, Annulus>)
                    return 2.0 * std::sqrt(2.0) * d.r_outer;
                else if constexpr (std::is_same_v<T, HalfShell>)
                    return 3.0 * d.r_outer;  // box [-r,r]^2 x [0,r]
                else
                    return std::hypot(d.length, d.height);
            },
            kind_);
    }

    /// Axis-aligned bounding box as (lower, upper) corners.
    std::pair<Point, Point> bounding_box() const {
        return std::visit(
            [](const auto& d) -> std::pair<Point, Point> {
                using T = std::decay_t<decltype(d)>;
                if constexpr (std::is_same_v<T, Annulus>) {
                    return {Eigen::Vector2d(-d.r_outer, -d.r_outer), Eigen::Vector2d(d.r_outer, d.r_outer)};
                } else if constexpr (std::is_same_v<T, HalfShell>) {
                    return {Eigen::Vector3d(-d.r_outer, -d.r_outer, 0.0),
                            Eigen::Vector3d(d.r_outer, d.r_outer, d.r_outer)};
                } else {
                    return {Eigen::Vector2d(0.0, 0.0), Eigen::Vector2d(d.length, d.height)};
                }
            },
            kind_);
    }

private:
    Kind kind_;
};

/// True iff x lies in the open domain.
inline bool contains(const Domain& domain, const Point& x) {
    if (x.size() != domain.dim()) return false;
    return std::visit(
        [&](const auto& d) -> bool {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, Annulus>) {
                const double r = x.norm();
                return r > d.r_inner && r < d.r_outer;
            } else if constexpr (std::is_same_v<T, HalfShell>) {
                const double r = x.norm();
                return r > d.r_inner && r < d.r_outer && x(2) > 0.0;
            } else {
                return x(0) > 0.0 && x(0) < d.length && x(1) > 0.0 && x(1) < d.height;
            }
        },
        domain.kind());
}

/// n i.i.d. uniform points in the domain, one per column.
inline Matrix sample_interior(const Domain& domain, std::size_t n, std::uint64_t seed) {
    domain.validate();
    if (n < 1) throw ConfigError("sample_interior: need at least one point");
    Rng rng(seed);
    Matrix pts(domain.dim(), static_cast<Eigen::Index>(n));
    std::visit(
        [&](const auto& d) {
            using T = std::decay_t<decltype(d)>;
            for (Eigen::Index j = 0; j < pts.cols(); ++j) {
                if constexpr (std::is_same_v<T, Annulus>) {
                    // area-uniform inverse CDF in r
                    const double theta = 2.0 * std::numbers::pi * rng.uniform();
                    const double ri2 = d.r_inner * d.r_inner;
                    const double r = std::sqrt(ri2 + rng.uniform() * (d.r_outer * d.r_outer - ri2));
                    pts(0, j) = r * std::cos(theta);
                    pts(1, j) = r * std::sin(theta);
                } else if constexpr (std::is_same_v<T, HalfShell>) {
                    Eigen::Vector3d x;
                    do {
                        x << rng.uniform(-d.r_outer, d.r_outer), rng.uniform(-d.r_outer, d.r_outer),
                            rng.uniform(0.0, d.r_outer);
                    } while (!(x.norm() > d.r_inner && x.norm() < d.r_outer && x(2) > 0.0));
                    pts.col(j) = x;
                } else {
                    pts(0, j) = d.length * rng.uniform();
                    pts(1, j) = d.height * rng.uniform();
                    // keep the open-domain contract if the generator returns 0
                    if (pts(0, j) == 0.0) pts(0, j) = 0.5 * d.length;
                    if (pts(1, j) == 0.0) pts(1, j) = 0.5 * d.height;
                }
            }
        },
        domain.kind());
    return pts;
}

// ---------------------------------------------------------------------------
// Boundary pieces

/// Full circle of a 2-D annulus.
struct CircleBoundary {
    double radius = 1.0;
    bool inner = false;  // inner circles have normals pointing to the centre
};

enum class Edge { left, right, bottom, top };

/// Sub-interval [from, to] of one rectangle edge. The edge parameter is x for
/// bottom/top and y for left/right.
struct EdgeInterval {
    Edge edge = Edge::top;
    double from = 0.0;
    double to = 1.0;
    double length = 1.0;  // rectangle extents, needed to place the edge
    double height = 1.0;
};

/// Upper hemisphere (z >= 0) of radius r.
struct HemisphereBoundary {
    double radius = 1.0;
    bool inner = false;
};

/// The flat annular base z = 0 of a half shell; normal (0, 0, -1).
struct BaseAnnulus {
    double r_inner = 0.3;
    double r_outer = 1.0;
};

using SegmentGeometry = std::variant<CircleBoundary, EdgeInterval, HemisphereBoundary, BaseAnnulus>;

inline std::string edge_name(Edge e) {
    switch (e) {
        case Edge::left: return "left";
        case Edge::right: return "right";
        case Edge::bottom: return "bottom";
        case Edge::top: return "top";
    }
    return "?";
}

inline int geometry_dim(const SegmentGeometry& g) {
    return std::holds_alternative<HemisphereBoundary>(g) || std::holds_alternative<BaseAnnulus>(g) ? 3 : 2;
}

/// Length (2-D) or area (3-D) of a boundary piece.
inline double measure(const SegmentGeometry& g) {
    using std::numbers::pi;
    return std::visit(
        [](const auto& s) -> double {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, CircleBoundary>) return 2.0 * pi * s.radius;
            else if constexpr (std::is_same_v<T, EdgeInterval>) return s.to - s.from;
            else if constexpr (std::is_same_v<T, HemisphereBoundary>) return 2.0 * pi * s.radius * s.radius;
            else return pi * (s.r_outer * s.r_outer - s.r_inner * s.r_inner);
        },
        g);
}

namespace detail {

inline Point edge_point(const EdgeInterval& e, double t) {
    switch (e.edge) {
        case Edge::left: return Eigen::Vector2d(0.0, t);
        case Edge::right: return Eigen::Vector2d(e.length, t);
        case Edge::bottom: return Eigen::Vector2d(t, 0.0);
        case Edge::top: return Eigen::Vector2d(t, e.height);
    }
    return Eigen::Vector2d::Zero();
}

inline Point edge_normal(Edge e) {
    switch (e) {
        case Edge::left: return Eigen::Vector2d(-1.0, 0.0);
        case Edge::right: return Eigen::Vector2d(1.0, 0.0);
        case Edge::bottom: return Eigen::Vector2d(0.0, -1.0);
        case Edge::top: return Eigen::Vector2d(0.0, 1.0);
    }
    return Eigen::Vector2d::Zero();
}

inline double edge_coordinate(const EdgeInterval& e, const Point& x) {
    return (e.edge == Edge::left || e.edge == Edge::right) ? x(1) : x(0);
}

}  // namespace detail

/// Outward unit normal of the piece at a point on it.
inline Point outward_normal(const SegmentGeometry& g, const Point& x) {
    return std::visit(
        [&](const auto& s) -> Point {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, CircleBoundary> || std::is_same_v<T, HemisphereBoundary>) {
                const Point n = x / x.norm();
                return s.inner ? Point(-n) : n;
            } else if constexpr (std::is_same_v<T, EdgeInterval>) {
                return detail::edge_normal(s.edge);
            } else {
                return Eigen::Vector3d(0.0, 0.0, -1.0);
            }
        },
        g);
}

/// Distance from x to the (closed) piece.
inline double distance_to(const SegmentGeometry& g, const Point& x) {
    return std::visit(
        [&](const auto& s) -> double {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, CircleBoundary>) {
                return std::abs(x.norm() - s.radius);
            } else if constexpr (std::is_same_v<T, HemisphereBoundary>) {
                const double radial = std::abs(x.norm() - s.radius);
                return x(2) >= 0.0 ? radial : std::hypot(radial, x(2));
            } else if constexpr (std::is_same_v<T, EdgeInterval>) {
                const double t = std::clamp(detail::edge_coordinate(s, x), s.from, s.to);
                return (x - detail::edge_point(s, t)).norm();
            } else {
                const double rho = std::hypot(x(0), x(1));
                const double dr = rho < s.r_inner ? s.r_inner - rho : (rho > s.r_outer ? rho - s.r_outer : 0.0);
                return std::hypot(dr, x(2));
            }
        },
        g);
}

/// Points with attached outward unit normals (one per column).
struct BoundaryPoints {
    Matrix points;
    Matrix normals;
};

/// Points, normals and weights of a deterministic rule on the piece.
/// Weights sum to the piece measure.
struct BoundaryQuadrature {
    Matrix points;
    Matrix normals;
    Vector weights;
};

inline BoundaryPoints sample_boundary(const SegmentGeometry& g, std::size_t n, std::uint64_t seed) {
    if (n < 1) throw ConfigError("sample_boundary: need at least one point");
    if (!(measure(g) > 0.0)) throw ConfigError("sample_boundary: boundary piece has zero measure");
    Rng rng(seed);
    const int dim = geometry_dim(g);
    BoundaryPoints out{Matrix(dim, static_cast<Eigen::Index>(n)), Matrix(dim, static_cast<Eigen::Index>(n))};
    for (Eigen::Index j = 0; j < out.points.cols(); ++j) {
        Point x = std::visit(
            [&](const auto& s) -> Point {
                using T = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<T, CircleBoundary>) {
                    const double th = 2.0 * std::numbers::pi * rng.uniform();
                    return Eigen::Vector2d(s.radius * std::cos(th), s.radius * std::sin(th));
                } else if constexpr (std::is_same_v<T, EdgeInterval>) {
                    return detail::edge_point(s, rng.uniform(s.from, s.to));
                } else if constexpr (std::is_same_v<T, HemisphereBoundary>) {
                    // z uniform gives area-uniform points on a spherical zone
                    const double z = rng.uniform();
                    const double ph = 2.0 * std::numbers::pi * rng.uniform();
                    const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
                    return Eigen::Vector3d(s.radius * rho * std::cos(ph), s.radius * rho * std::sin(ph),
                                           s.radius * z);
                } else {
                    const double ri2 = s.r_inner * s.r_inner;
                    const double r = std::sqrt(ri2 + rng.uniform() * (s.r_outer * s.r_outer - ri2));
                    const double ph = 2.0 * std::numbers::pi * rng.uniform();
                    return Eigen::Vector3d(r * std::cos(ph), r * std::sin(ph), 0.0);
                }
            },
            g);
        out.normals.col(j) = outward_normal(g, x);
        out.points.col(j) = x;
    }
    return out;
}

/// Equal-weight midpoint rule with about n points (exactly n in 2-D).
inline BoundaryQuadrature boundary_quadrature(const SegmentGeometry& g, std::size_t n) {
    if (n < 1) throw ConfigError("boundary_quadrature: need at least one point");
    const int dim = geometry_dim(g);
    std::vector<Point> pts;
    std::visit(
        [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            using std::numbers::pi;
            if constexpr (std::is_same_v<T, CircleBoundary>) {
                for (std::size_t i = 0; i < n; ++i) {
                    const double th = 2.0 * pi * (static_cast<double>(i) + 0.5) / static_cast<double>(n);
                    pts.push_back(Eigen::Vector2d(s.radius * std::cos(th), s.radius * std::sin(th)));
                }
            } else if constexpr (std::is_same_v<T, EdgeInterval>) {
                for (std::size_t i = 0; i < n; ++i) {
                    const double t = s.from + (s.to - s.from) * (static_cast<double>(i) + 0.5) / static_cast<double>(n);
                    pts.push_back(detail::edge_point(s, t));
                }
            } else {
                // equal-area cells: (z, phi) on the hemisphere, (r^2, phi) on the base
                const auto nr = static_cast<std::size_t>(std::max(1.0, std::round(std::sqrt(static_cast<double>(n) / (2.0 * pi)))));
                const std::size_t nphi = (n + nr - 1) / nr;
                for (std::size_t a = 0; a < nr; ++a) {
                    const double u = (static_cast<double>(a) + 0.5) / static_cast<double>(nr);
                    for (std::size_t b = 0; b < nphi; ++b) {
                        const double ph = 2.0 * pi * (static_cast<double>(b) + 0.5) / static_cast<double>(nphi);
                        if constexpr (std::is_same_v<T, HemisphereBoundary>) {
                            const double rho = std::sqrt(1.0 - u * u);
                            pts.push_back(Eigen::Vector3d(s.radius * rho * std::cos(ph),
                                                          s.radius * rho * std::sin(ph), s.radius * u));
                        } else {
                            const double ri2 = s.r_inner * s.r_inner;
                            const double r = std::sqrt(ri2 + u * (s.r_outer * s.r_outer - ri2));
                            pts.push_back(Eigen::Vector3d(r * std::cos(ph), r * std::sin(ph), 0.0));
                        }
                    }
                }
            }
        },
        g);
    BoundaryQuadrature q{Matrix(dim, static_cast<Eigen::Index>(pts.size())),
                         Matrix(dim, static_cast<Eigen::Index>(pts.size())),
                         Vector::Constant(static_cast<Eigen::Index>(pts.size()), measure(g) / static_cast<double>(pts.size()))};
    for (std::size_t j = 0; j < pts.size(); ++j) {
        q.points.col(static_cast<Eigen::Index>(j)) = pts[j];
        q.normals.col(static_cast<Eigen::Index>(j)) = outward_normal(g, pts[j]);
    }
    return q;
}

// ---------------------------------------------------------------------------
// Boundary segments

enum class BoundaryKind { pressure, flux };

using ScalarField = std::function<double(const Point&)>;

/// One boundary piece with its condition: prescribed absolute pressure p_p
/// (Gamma_p) or prescribed outward normal flux u_n (Gamma_u).
struct BoundarySegment {
    std::string id;
    BoundaryKind kind = BoundaryKind::pressure;
    ScalarField value;
    SegmentGeometry geometry;

    double measure() const { return deepls::measure(geometry); }
    bool is_pressure() const { return kind == BoundaryKind::pressure; }

    static BoundarySegment pressure(std::string id, SegmentGeometry g, double p) {
        return {std::move(id), BoundaryKind::pressure, [p](const Point&) { return p; }, std::move(g)};
    }
    static BoundarySegment flux(std::string id, SegmentGeometry g, double un) {
        return {std::move(id), BoundaryKind::flux, [un](const Point&) { return un; }, std::move(g)};
    }
};

/// The natural boundary pieces of a domain, each covering one whole piece.
inline std::vector<SegmentGeometry> natural_pieces(const Domain& domain) {
    return std::visit(
        [](const auto& d) -> std::vector<SegmentGeometry> {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, Annulus>) {
                return {CircleBoundary{d.r_inner, true}, CircleBoundary{d.r_outer, false}};
            } else if constexpr (std::is_same_v<T, HalfShell>) {
                return {HemisphereBoundary{d.r_inner, true}, HemisphereBoundary{d.r_outer, false},
                        BaseAnnulus{d.r_inner, d.r_outer}};
            } else {
                return {EdgeInterval{Edge::left, 0.0, d.height, d.length, d.height},
                        EdgeInterval{Edge::right, 0.0, d.height, d.length, d.height},
                        EdgeInterval{Edge::bottom, 0.0, d.length, d.length, d.height},
                        EdgeInterval{Edge::top, 0.0, d.length, d.length, d.height}};
            }
        },
        domain.kind());
}

namespace detail {

// Key identifying a natural piece; intervals along it must tile [0, span].
inline std::pair<std::string, std::pair<double, double>> piece_key(const SegmentGeometry& g) {
    return std::visit(
        [](const auto& s) -> std::pair<std::string, std::pair<double, double>> {
            using T = std::decay_t<decltype(s)>;
            std::ostringstream os;
            os.precision(17);
            if constexpr (std::is_same_v<T, CircleBoundary>) {
                os << "circle:" << s.radius << ":" << s.inner;
                return {os.str(), {0.0, 1.0}};
            } else if constexpr (std::is_same_v<T, HemisphereBoundary>) {
                os << "hemisphere:" << s.radius << ":" << s.inner;
                return {os.str(), {0.0, 1.0}};
            } else if constexpr (std::is_same_v<T, BaseAnnulus>) {
                os << "base:" << s.r_inner << ":" << s.r_outer;
                return {os.str(), {0.0, 1.0}};
            } else {
                os << "edge:" << edge_name(s.edge) << ":" << s.length << ":" << s.height;
                return {os.str(), {s.from, s.to}};
            }
        },
        g);
}

inline double piece_span(const SegmentGeometry& g) {
    if (auto e = std::get_if<EdgeInterval>(&g))
        return (e->edge == Edge::left || e->edge == Edge::right) ? e->height : e->length;
    return 1.0;
}

}  // namespace detail

/// Checks that the segments tile the domain boundary without overlap.
inline void validate_cover(const Domain& domain, const std::vector<BoundarySegment>& segments) {
    domain.validate();
    std::map<std::string, std::vector<std::pair<double, double>>> pieces;
    std::map<std::string, double> spans;
    for (const auto& g : natural_pieces(domain)) {
        pieces[detail::piece_key(g).first];
        spans[detail::piece_key(g).first] = detail::piece_span(g);
    }
    for (const auto& seg : segments) {
        if (geometry_dim(seg.geometry) != domain.dim())
            throw ConfigError("segment '" + seg.id + "' has the wrong dimension for the domain");
        auto [key, range] = detail::piece_key(seg.geometry);
        auto it = pieces.find(key);
        if (it == pieces.end())
            throw ConfigError("segment '" + seg.id + "' does not lie on the boundary of the " + domain.name());
        if (!(range.second > range.first))
            throw ConfigError("segment '" + seg.id + "' has zero measure");
        it->second.push_back(range);
    }
    for (auto& [key, ranges] : pieces) {
        if (ranges.empty()) throw ConfigError("boundary piece " + key + " is not covered by any segment");
        std::sort(ranges.begin(), ranges.end());
        const double span = spans[key];
        const double tol = 1e-12 * std::max(1.0, span);
        double at = 0.0;
        for (const auto& [lo, hi] : ranges) {
            if (lo > at + tol) throw ConfigError("gap in boundary cover along " + key);
            if (lo < at - tol) throw ConfigError("overlapping boundary segments along " + key);
            at = hi;
        }
        if (std::abs(at - span) > tol) throw ConfigError("boundary cover of " + key + " stops short");
    }
}

/// Index of the segment owning x. Junctions between intervals on one edge
/// belong to the left interval: intervals are (from, to], except that an
/// interval starting at the edge origin is closed.
inline std::optional<std::size_t> locate_segment(const std::vector<BoundarySegment>& segments, const Point& x,
                                                 double tol = 1e-12) {
    for (std::size_t i = 0; i < segments.size(); ++i) {
        const auto& g = segments[i].geometry;
        if (distance_to(g, x) > tol) continue;
        if (auto e = std::get_if<EdgeInterval>(&g)) {
            const double t = detail::edge_coordinate(*e, x);
            const bool closed_low = e->from == 0.0;
            if (t < e->from - tol || t > e->to + tol) continue;
            if (!closed_low && std::abs(t - e->from) <= tol) continue;
        }
        return i;
    }
    return std::nullopt;
}

/// Validates the boundary split. Without any prescribed-pressure segment the
/// flux data must integrate to zero over the boundary.
inline void validate_boundary_data(const Domain& domain, const std::vector<BoundarySegment>& segments) {
    validate_cover(domain, segments);
    const bool has_pressure = std::any_of(segments.begin(), segments.end(),
                                          [](const BoundarySegment& s) { return s.is_pressure(); });
    if (has_pressure) return;
    double net = 0.0, total = 0.0;
    for (const auto& seg : segments) {
        const auto q = boundary_quadrature(seg.geometry, 10000);
        for (Eigen::Index j = 0; j < q.points.cols(); ++j) net += q.weights(j) * seg.value(q.points.col(j));
        total += seg.measure();
    }
    if (std::abs(net) > 1e-8 * total) {
        std::ostringstream os;
        os << "incompatible flux data: net boundary flux " << net << " must vanish when no pressure is prescribed";
        throw IncompatibleDataError(os.str(), net);
    }
}

// ---------------------------------------------------------------------------
// Collocation

struct SegmentSamples {
    std::size_t segment = 0;
    Matrix points;
    Matrix normals;
};

/// The interior, Gamma_u and Gamma_p point clouds of one Monte Carlo design.
struct CollocationBatch {
    Matrix interior;
    std::vector<SegmentSamples> boundary;
    std::uint64_t seed = 0;

    std::size_t boundary_count() const {
        std::size_t n = 0;
        for (const auto& s : boundary) n += static_cast<std::size_t>(s.points.cols());
        return n;
    }
};

struct SamplingPlan {
    std::size_t n_interior = 2000;
    /// Total boundary points, split across segments in proportion to measure.
    std::size_t n_boundary = 400;
    /// When set, every segment receives exactly this many points instead.
    std::optional<std::size_t> n_per_segment;
};

/// Points per segment: proportional to measure with at least one each.
inline std::vector<std::size_t> allocate_boundary_points(const std::vector<BoundarySegment>& segments,
                                                         const SamplingPlan& plan) {
    std::vector<std::size_t> counts(segments.size(), 1);
    if (plan.n_per_segment) {
        std::fill(counts.begin(), counts.end(), std::max<std::size_t>(1, *plan.n_per_segment));
        return counts;
    }
    double total = 0.0;
    for (const auto& s : segments) total += s.measure();
    for (std::size_t i = 0; i < segments.size(); ++i)
        counts[i] = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::llround(static_cast<double>(plan.n_boundary) * segments[i].measure() / total)));
    return counts;
}

inline CollocationBatch sample_collocation(const Domain& domain, const std::vector<BoundarySegment>& segments,
                                           const SamplingPlan& plan, std::uint64_t seed) {
    CollocationBatch batch;
    batch.seed = seed;
    batch.interior = sample_interior(domain, plan.n_interior, mix_seed(seed, 0));
    const auto counts = allocate_boundary_points(segments, plan);
    for (std::size_t i = 0; i < segments.size(); ++i) {
        auto bp = sample_boundary(segments[i].geometry, counts[i], mix_seed(seed, 1 + i));
        batch.boundary.push_back({i, std::move(bp.points), std::move(bp.normals)});
    }
    return batch;
}

}  // namespace deepls
