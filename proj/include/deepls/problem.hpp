#pragma once

#include "deepls/geometry.hpp"
#include "deepls/transform.hpp"

#include <vector>

namespace deepls {

/// A boundary value problem: domain, material and boundary split.
struct Problem {
    Domain domain;
    MaterialModel material;
    std::vector<BoundarySegment> segments;

    int dim() const { return domain.dim(); }

    bool has_pressure_segment() const {
        for (const auto& s : segments)
            if (s.is_pressure()) return true;
        return false;
    }

    void validate() const {
        domain.validate();
        material.validate();
        if (material.k0.dim() != domain.dim()) throw ConfigError("permeability dimension does not match the domain");
        validate_boundary_data(domain, segments);
    }
};

}  // namespace deepls
