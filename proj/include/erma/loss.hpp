#pragma once

#include "erma/kernels.hpp"
#include "erma/types.hpp"

#include <string>

namespace erma {

enum class LabelSpace { Real, BinaryPM1 };

struct LossFamily {
    LossKind kind = LossKind::Squared;

    LabelSpace label_space() const {
        return kind == LossKind::Squared ? LabelSpace::Real : LabelSpace::BinaryPM1;
    }
    // Bound on L_y''.
    double curvature_bound() const { return kind == LossKind::Squared ? 1.0 : 0.25; }
    std::string name() const { return kind == LossKind::Squared ? "squared" : "logistic"; }
};

inline LossFamily squared_loss() { return {LossKind::Squared}; }
inline LossFamily logistic_loss() { return {LossKind::Logistic}; }
LossFamily loss_from_name(const std::string& name);

void check_label(const LossFamily& loss, double y);

double loss_value(const LossFamily& loss, double y, double v);
double loss_d1(const LossFamily& loss, double y, double v);
double loss_d2(const LossFamily& loss, double y, double v);

double prox(const LossFamily& loss, double y, double u, double kappa);
double xi(const LossFamily& loss, double y, double u, double kappa);
// d xi / du = kappa L''(p) / (1 + kappa L''(p)), p the prox point.
double xi_du(const LossFamily& loss, double y, double u, double kappa);

double moreau(const LossFamily& loss, double y, double u, double kappa);
double moreau_du(const LossFamily& loss, double y, double u, double kappa);
double moreau_dkappa(const LossFamily& loss, double y, double u, double kappa);

}  // namespace erma
