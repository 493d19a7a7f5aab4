#pragma once

#include <vector>

namespace erma {

// Nodes and weights for E[f(z)], z ~ N(0,1); weights sum to 1.
struct GaussHermite {
    std::vector<double> nodes;
    std::vector<double> weights;
    std::size_t size() const { return nodes.size(); }
};

GaussHermite gauss_hermite(int order);

}  // namespace erma
