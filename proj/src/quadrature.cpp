#include "erma/quadrature.hpp"
#include "erma/types.hpp"

#include <cmath>

namespace erma {

GaussHermite gauss_hermite(int order) {
    if (order < 1 || order > 400) throw ConfigError("quadrature order must be in [1, 400]");
    Mat J = Mat::Zero(order, order);
    for (int k = 1; k < order; ++k) J(k, k - 1) = J(k - 1, k) = std::sqrt(static_cast<double>(k));
    Eigen::SelfAdjointEigenSolver<Mat> es(J);
    GaussHermite gh;
    gh.nodes.resize(order);
    gh.weights.resize(order);
    for (int i = 0; i < order; ++i) {
        gh.nodes[i] = es.eigenvalues()(i);
        double v = es.eigenvectors()(0, i);
        gh.weights[i] = v * v;
    }
    // Exact reflection symmetry.
    for (int i = 0; i < order / 2; ++i) {
        int j = order - 1 - i;
        double x = 0.5 * (gh.nodes[j] - gh.nodes[i]);
        double w = 0.5 * (gh.weights[i] + gh.weights[j]);
        gh.nodes[i] = -x;
        gh.nodes[j] = x;
        gh.weights[i] = gh.weights[j] = w;
    }
    if (order % 2 == 1) gh.nodes[order / 2] = 0.0;
    double total = 0.0;
    for (double w : gh.weights) total += w;
    for (double& w : gh.weights) w /= total;
    return gh;
}

}  // namespace erma
