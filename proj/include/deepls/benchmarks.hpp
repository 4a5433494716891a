#pragma once

// Boundary value problems for the built-in benchmarks.

#include "deepls/analytic.hpp"
#include "deepls/problem.hpp"

namespace deepls {

inline Problem cylinder_problem(const RadialParams& prm = {}) {
    Problem pb;
    pb.domain = Domain(Annulus{prm.r_inner, prm.r_outer});
    pb.material = prm.material(2);
    pb.segments = {BoundarySegment::pressure("inner", CircleBoundary{prm.r_inner, true}, prm.p_inner),
                   BoundarySegment::pressure("outer", CircleBoundary{prm.r_outer, false}, prm.p_outer)};
    return pb;
}

/// Upper half shell z >= 0; the symmetry plane z = 0 is no-flux.
inline Problem sphere_problem(const RadialParams& prm = {}) {
    Problem pb;
    pb.domain = Domain(HalfShell{prm.r_inner, prm.r_outer});
    pb.material = prm.material(3);
    pb.segments = {BoundarySegment::pressure("inner", HemisphereBoundary{prm.r_inner, true}, prm.p_inner),
                   BoundarySegment::pressure("outer", HemisphereBoundary{prm.r_outer, false}, prm.p_outer),
                   BoundarySegment::flux("base", BaseAnnulus{prm.r_inner, prm.r_outer}, 0.0)};
    return pb;
}

inline Problem layered_problem(const LayeredParams& prm = {}) {
    const double L = prm.length, H = prm.height;
    Problem pb;
    pb.domain = Domain(LayeredRectangle{L, H, prm.layer_breaks, prm.layer_k0});
    pb.material = prm.material();
    pb.segments = {BoundarySegment::pressure("left", EdgeInterval{Edge::left, 0.0, H, L, H}, prm.p_left),
                   BoundarySegment::pressure("right", EdgeInterval{Edge::right, 0.0, H, L, H}, prm.p_right),
                   BoundarySegment::flux("bottom", EdgeInterval{Edge::bottom, 0.0, L, L, H}, 0.0),
                   BoundarySegment::flux("top", EdgeInterval{Edge::top, 0.0, L, L, H}, 0.0)};
    return pb;
}

struct FootingParams {
    double length = 10.0;
    double height = 5.0;
    double t1_end = 2.5;    // T1 = [0, t1_end]
    double t3_start = 7.5;  // T3 = (t3_start, L]
    double p_loaded = 10.0;
    double p_vented = 1.0;
    double k0 = 1.0;
    double mu = 1.0;
    double beta = 1.0;
    double p_atm = 1.0;
    /// Second load pattern: the loaded and vented strips swap sides.
    bool mirrored = false;
};

/// Rectangle with impermeable sides and base; the top carries a pressurised
/// strip T1, a sealed strip T2 and a vented strip T3.
inline Problem footing_problem(const FootingParams& prm = {}) {
    const double L = prm.length, H = prm.height;
    Problem pb;
    pb.domain = Domain(Rectangle{L, H});
    pb.material.k0 = Permeability::scalar(2, prm.k0);
    pb.material.beta = prm.beta;
    pb.material.p_atm = prm.p_atm;
    pb.material.mu = prm.mu;
    pb.material.k_min = pb.material.k_max = prm.k0;
    const double p1 = prm.mirrored ? prm.p_vented : prm.p_loaded;
    const double p3 = prm.mirrored ? prm.p_loaded : prm.p_vented;
    pb.segments = {BoundarySegment::pressure("T1", EdgeInterval{Edge::top, 0.0, prm.t1_end, L, H}, p1),
                   BoundarySegment::flux("T2", EdgeInterval{Edge::top, prm.t1_end, prm.t3_start, L, H}, 0.0),
                   BoundarySegment::pressure("T3", EdgeInterval{Edge::top, prm.t3_start, L, L, H}, p3),
                   BoundarySegment::flux("left", EdgeInterval{Edge::left, 0.0, H, L, H}, 0.0),
                   BoundarySegment::flux("right", EdgeInterval{Edge::right, 0.0, H, L, H}, 0.0),
                   BoundarySegment::flux("bottom", EdgeInterval{Edge::bottom, 0.0, L, L, H}, 0.0)};
    return pb;
}

}  // namespace deepls
