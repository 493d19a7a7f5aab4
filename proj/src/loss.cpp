#include "erma/loss.hpp"
#include "erma/types.hpp"

#include <cmath>

namespace erma {

namespace {

double softplus(double t) { return std::max(t, 0.0) + std::log1p(std::exp(-std::fabs(t))); }

void check_kappa(double kappa) {
    if (!(kappa > 0.0)) throw DomainError("kappa must be positive");
}

}  // namespace

LossFamily loss_from_name(const std::string& name) {
    if (name == "squared") return squared_loss();
    if (name == "logistic") return logistic_loss();
    throw ConfigError("unknown loss '" + name + "' (expected squared or logistic)");
}

void check_label(const LossFamily& loss, double y) {
    if (!std::isfinite(y)) throw DomainError("label must be finite");
    if (loss.kind == LossKind::Logistic && y != 1.0 && y != -1.0)
        throw DomainError("logistic loss needs labels in {-1, +1}, got " + std::to_string(y));
}

double loss_value(const LossFamily& loss, double y, double v) {
    check_label(loss, y);
    if (loss.kind == LossKind::Squared) return 0.5 * (v - y) * (v - y);
    return softplus(-y * v);
}

double loss_d1(const LossFamily& loss, double y, double v) {
    check_label(loss, y);
    if (loss.kind == LossKind::Squared) return v - y;
    double t = y * v;
    double e = std::exp(-std::fabs(t));
    double s = t >= 0 ? e / (1 + e) : 1 / (1 + e);
    return -y * s;
}

double loss_d2(const LossFamily& loss, double y, double v) {
    check_label(loss, y);
    if (loss.kind == LossKind::Squared) return 1.0;
    double e = std::exp(-std::fabs(v));
    return e / ((1 + e) * (1 + e));
}

double prox(const LossFamily& loss, double y, double u, double kappa) {
    check_label(loss, y);
    check_kappa(kappa);
    if (loss.kind == LossKind::Squared) return (u + kappa * y) / (1.0 + kappa);
    return kernels::logistic_prox(y, u, kappa, u);
}

double xi(const LossFamily& loss, double y, double u, double kappa) {
    if (loss.kind == LossKind::Squared) return kappa * (u - y) / (1.0 + kappa);
    return u - prox(loss, y, u, kappa);
}

double xi_du(const LossFamily& loss, double y, double u, double kappa) {
    double c = kappa * loss_d2(loss, y, prox(loss, y, u, kappa));
    return c / (1.0 + c);
}

double moreau(const LossFamily& loss, double y, double u, double kappa) {
    double p = prox(loss, y, u, kappa);
    return (u - p) * (u - p) / (2.0 * kappa) + loss_value(loss, y, p);
}

double moreau_du(const LossFamily& loss, double y, double u, double kappa) {
    return xi(loss, y, u, kappa) / kappa;
}

double moreau_dkappa(const LossFamily& loss, double y, double u, double kappa) {
    double r = xi(loss, y, u, kappa);
    return -r * r / (2.0 * kappa * kappa);
}

}  // namespace erma
