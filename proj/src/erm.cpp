#include "erma/erm.hpp"
#include "erma/parallel.hpp"

#include <cmath>

namespace erma {

namespace {

void check_inputs(const Mat& X, const Vec& Y, const LossFamily& loss, const Regularizer& reg) {
    require_dim(X.cols() == Y.size(), "one label per column of X");
    require_dim(reg.dim() == X.rows(), "regularizer dimension vs rows of X");
    if (X.cols() == 0) throw ConfigError("empty training set");
    for (int i = 0; i < Y.size(); ++i) check_label(loss, Y(i));
}

double data_term(const Vec& v, const Vec& Y, const LossFamily& loss) {
    double s = 0.0;
    if (loss.kind == LossKind::Squared) return 0.5 * (v - Y).squaredNorm();
    for (int i = 0; i < v.size(); ++i) {
        double t = -Y(i) * v(i);
        s += std::max(t, 0.0) + std::log1p(std::exp(-std::fabs(t)));
    }
    return s;
}

void derivatives(const Vec& v, const Vec& Y, const LossFamily& loss, Vec& d1, Vec& d2) {
    d1.resize(v.size());
    d2.resize(v.size());
    if (loss.kind == LossKind::Squared) {
        d1 = v - Y;
        d2.setOnes();
        return;
    }
    for (int i = 0; i < v.size(); ++i) {
        double t = Y(i) * v(i);
        double e = std::exp(-std::fabs(t));
        double s = t >= 0 ? e / (1 + e) : 1 / (1 + e);
        d1(i) = -Y(i) * s;
        d2(i) = e / ((1 + e) * (1 + e));
    }
}

}  // namespace

double erm_objective(const Mat& X, const Vec& Y, const LossFamily& loss, const Regularizer& reg,
                     const Vec& theta) {
    check_inputs(X, Y, loss, reg);
    Vec v = X.transpose() * theta;
    return data_term(v, Y, loss) / X.cols() + reg.value(theta);
}

Vec erm_gradient(const Mat& X, const Vec& Y, const LossFamily& loss, const Regularizer& reg,
                 const Vec& theta) {
    check_inputs(X, Y, loss, reg);
    Vec v = X.transpose() * theta, d1, d2;
    derivatives(v, Y, loss, d1, d2);
    return X * d1 / static_cast<double>(X.cols()) + reg.grad(theta);
}

ErmFit fit(const Mat& X, const Vec& Y, const LossFamily& loss, const Regularizer& reg,
           const FitOptions& opts) {
    check_inputs(X, Y, loss, reg);
    const int p = static_cast<int>(X.rows());
    const double n = static_cast<double>(X.cols());
    ErmFit out;
    Vec theta = Vec::Zero(p);
    Vec d1, d2;
    Vec v = Vec::Zero(X.cols());
    Mat gram;
    if (loss.kind == LossKind::Squared) {
        gram = Mat::Zero(p, p);
        gram.selfadjointView<Eigen::Lower>().rankUpdate(X, 1.0 / n);
    }
    auto objective = [&](const Vec& th, const Vec& vv) { return data_term(vv, Y, loss) / n + reg.value(th); };
    double f = objective(theta, v);
    double target = 0.0;
    for (int it = 0;; ++it) {
        derivatives(v, Y, loss, d1, d2);
        Vec g = X * d1 / n + reg.grad(theta);
        double gn = g.norm();
        if (it == 0) target = opts.grad_tol * std::max(1.0, gn);
        out.gradient_norm = gn;
        out.newton_iters = it;
        if (gn <= target) {
            out.converged = true;
            break;
        }
        if (it >= opts.max_iters) break;
        Mat hess;
        if (loss.kind == LossKind::Squared) {
            hess = gram;
        } else {
            Mat Xs = X * d2.cwiseSqrt().asDiagonal();
            hess = Mat::Zero(p, p);
            hess.selfadjointView<Eigen::Lower>().rankUpdate(Xs, 1.0 / n);
        }
        hess.triangularView<Eigen::Lower>() += reg.hess(theta);
        Eigen::LLT<Mat> llt(hess.selfadjointView<Eigen::Lower>());
        if (llt.info() != Eigen::Success) throw DomainError("ERM Hessian is not positive definite");
        Vec dir = -llt.solve(g);
        Vec dv = X.transpose() * dir;
        double slope = g.dot(dir);
        double t = 1.0;
        Vec th_new, v_new;
        double f_new = f;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            th_new = theta + t * dir;
            v_new = v + t * dv;
            f_new = objective(th_new, v_new);
            if (f_new <= f + 1e-4 * t * slope) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) {
            // Objective is flat to rounding; accept the full Newton step if it lowers |grad|.
            th_new = theta + dir;
            v_new = v + dv;
            f_new = objective(th_new, v_new);
        }
        theta = std::move(th_new);
        v = std::move(v_new);
        f = f_new;
        // Refresh v to avoid drift from incremental updates.
        if (it % 8 == 7) v = X.transpose() * theta;
    }
    out.theta_hat = theta;
    out.objective_value = objective(theta, X.transpose() * theta);
    return out;
}

Dataset replication_data(const DataModel& model, std::size_t n, std::uint64_t master_seed, int r) {
    return model.sample(n, derive_seed(master_seed, static_cast<std::uint64_t>(r), 1));
}

ReplicationSummary replicate(const DataModel& model, const LossFamily& loss, const Regularizer& reg,
                             std::size_t n, int R, std::uint64_t master_seed,
                             const FitOptions& opts) {
    if (R < 2) throw ConfigError("replication count must be at least 2");
    int p = model.dim();
    ReplicationSummary s;
    s.R = R;
    s.thetas.resize(p, R);
    for_chunks(R, 1, [&](std::size_t r, std::size_t, std::size_t) {
        try {
            Dataset ds = replication_data(model, n, master_seed, static_cast<int>(r));
            ErmFit f = fit(ds.X, ds.y, loss, reg, opts);
            s.thetas.col(r) = f.theta_hat;
        } catch (const Error& e) {
            throw Error("replication " + std::to_string(r) + ": " + e.what());
        }
    });
    s.mu_hat = s.thetas.rowwise().mean();
    Mat D = s.thetas.colwise() - s.mu_hat;
    s.mu_stderr = (D.array().square().rowwise().sum() / (R - 1.0)).sqrt() / std::sqrt(double(R));
    Mat C = model.moments().C;
    Vec q = (D.transpose() * C * D).diagonal();
    s.trace_cov = q.sum() / (R - 1.0);
    double qmean = q.mean();
    s.trace_cov_stderr =
        std::sqrt((q.array() - qmean).square().sum() / (R - 1.0) / R) * R / (R - 1.0);

    Vec u = s.mu_hat;
    if (u.norm() == 0.0) u = Vec::Unit(std::max(p, 1), 0).head(p);
    if (u.norm() > 0.0) u.normalize();
    Vec t = s.thetas.transpose() * u;
    double m = t.mean();
    double m2 = (t.array() - m).square().mean();
    if (m2 > 0.0) {
        s.projection_skewness = (t.array() - m).cube().mean() / std::pow(m2, 1.5);
        s.projection_excess_kurtosis = (t.array() - m).square().square().mean() / (m2 * m2) - 3.0;
    }
    return s;
}

double operator_norm(const Mat& A) {
    if (A.size() == 0) return 0.0;
    Vec v = Vec::Ones(A.cols()) / std::sqrt(double(A.cols()));
    double est = 0.0;
    for (int it = 0; it < 200; ++it) {
        Vec w = A.transpose() * (A * v);
        double nw = w.norm();
        if (nw == 0.0) return 0.0;
        v = w / nw;
        double next = std::sqrt(nw);
        if (std::fabs(next - est) <= 1e-10 * next) return next;
        est = next;
    }
    return est;
}

double lipschitz_probe(const DataModel& model, const LossFamily& loss, const Regularizer& reg,
                       std::size_t n, std::uint64_t seed, int m_perturbations,
                       PerturbTarget target, double relative_size) {
    if (m_perturbations < 1) throw ConfigError("need at least one perturbation");
    if (target == PerturbTarget::Y && model.classification())
        throw ConfigError("label perturbations need a regression model");
    Dataset ds = model.sample(n, seed);
    Vec base = fit(ds.X, ds.y, loss, reg).theta_hat;
    Rng rng = make_rng(seed, 0, 3);
    std::normal_distribution<double> normal;
    double worst = 0.0;
    for (int i = 0; i < m_perturbations; ++i) {
        Mat X = ds.X;
        Vec Y = ds.y;
        double size = 0.0;
        if (target == PerturbTarget::X) {
            Mat G(X.rows(), X.cols());
            for (int c = 0; c < G.cols(); ++c)
                for (int r = 0; r < G.rows(); ++r) G(r, c) = normal(rng);
            double gn = G.norm();
            if (gn > 0) G *= relative_size * X.norm() / gn;
            X += G;
            size = operator_norm(G);
        } else {
            Vec G(Y.size());
            for (int j = 0; j < G.size(); ++j) G(j) = normal(rng);
            double gn = G.norm();
            if (gn > 0) G *= relative_size * Y.norm() / gn;
            Y += G;
            size = G.norm();
        }
        if (size == 0.0) continue;
        Vec th = fit(X, Y, loss, reg).theta_hat;
        worst = std::max(worst, (th - base).norm() * std::sqrt(double(n)) / size);
    }
    return worst;
}

}  // namespace erma
