#include "erma/score_law.hpp"
#include "erma/kernels.hpp"
#include "erma/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace erma {

namespace {
constexpr double kWindow = 9.0;
}

ScoreLaw::ScoreLaw(std::vector<double> centers, double scale)
    : centers_(std::move(centers)), scale_(scale) {
    if (centers_.empty()) throw DomainError("score law needs at least one center");
    if (!(scale_ >= 0.0) || !std::isfinite(scale_)) throw DomainError("score law scale must be >= 0");
    std::sort(centers_.begin(), centers_.end());
    double m = mean();
    double v = 0.0;
    for (double c : centers_) v += (c - m) * (c - m);
    center_sd_ = std::sqrt(v / centers_.size());
}

double ScoreLaw::cdf(double t) const {
    std::size_t m = centers_.size();
    if (scale_ == 0.0) {
        auto it = std::upper_bound(centers_.begin(), centers_.end(), t);
        return static_cast<double>(it - centers_.begin()) / m;
    }
    // Centers far below t contribute 1, far above contribute 0.
    auto lo = std::lower_bound(centers_.begin(), centers_.end(), t - kWindow * scale_);
    auto hi = std::upper_bound(centers_.begin(), centers_.end(), t + kWindow * scale_);
    double below = static_cast<double>(lo - centers_.begin());
    double mid = kernels::normal_cdf_sum(centers_.data() + (lo - centers_.begin()),
                                         static_cast<std::size_t>(hi - lo), t, 1.0 / scale_);
    return std::clamp((below + mid) / m, 0.0, 1.0);
}

double ScoreLaw::pdf(double t) const {
    if (scale_ == 0.0) throw DomainError("pdf of a score law with zero scale");
    auto lo = std::lower_bound(centers_.begin(), centers_.end(), t - kWindow * scale_);
    auto hi = std::upper_bound(centers_.begin(), centers_.end(), t + kWindow * scale_);
    double s = kernels::normal_pdf_sum(centers_.data() + (lo - centers_.begin()),
                                       static_cast<std::size_t>(hi - lo), t, 1.0 / scale_);
    return s / (scale_ * centers_.size());
}

std::vector<double> ScoreLaw::pdf_grid(const std::vector<double>& grid) const {
    std::vector<double> out(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) out[i] = pdf(grid[i]);
    return out;
}

double ScoreLaw::mean() const {
    return std::accumulate(centers_.begin(), centers_.end(), 0.0) / centers_.size();
}

double ScoreLaw::variance() const { return center_sd_ * center_sd_ + scale_ * scale_; }

std::vector<double> ScoreLaw::sample(std::size_t m, std::uint64_t seed) const {
    Rng rng = make_rng(seed, 0, 9);
    std::uniform_int_distribution<std::size_t> pick(0, centers_.size() - 1);
    std::normal_distribution<double> normal;
    std::vector<double> out(m);
    for (auto& v : out) v = centers_[pick(rng)] + scale_ * normal(rng);
    return out;
}

ClassScoreLaws predict(const DataModel& model, const Vec& mu_star, double alpha_star, std::size_t m,
                       std::uint64_t seed) {
    if (m < 1) throw ConfigError("score law needs m >= 1");
    Projections pr = model.projection_samples(mu_star, m, seed);
    int k = model.class_count();
    std::vector<std::vector<double>> per(k);
    for (std::size_t i = 0; i < m; ++i) per[pr.cls[i]].push_back(pr.value(i));
    ClassScoreLaws out;
    std::vector<double> all(pr.value.data(), pr.value.data() + m);
    out.pooled = ScoreLaw(std::move(all), alpha_star);
    for (int l = 0; l < k; ++l) {
        ClassMoments cm = model.class_moments(l);
        out.labels.push_back(cm.label);
        out.priors.push_back(cm.prior);
        if (per[l].empty()) per[l].push_back(cm.mean.dot(mu_star));
        out.laws.emplace_back(std::move(per[l]), alpha_star);
    }
    return out;
}

ScoreLaw gaussian_baseline(const Moments& moments, const Vec& mu_star, double alpha_star) {
    require_dim(moments.mu.size() == mu_star.size(), "mu length vs moments");
    double var = mu_star.dot(moments.C * mu_star) + alpha_star * alpha_star;
    return ScoreLaw::gaussian(mu_star.dot(moments.mu), std::sqrt(std::max(0.0, var)));
}

ClassScoreLaws gaussian_baseline_per_class(const DataModel& model, const Vec& mu_star,
                                           double alpha_star) {
    ClassScoreLaws out;
    int k = model.class_count();
    for (int l = 0; l < k; ++l) {
        ClassMoments cm = model.class_moments(l);
        out.labels.push_back(cm.label);
        out.priors.push_back(cm.prior);
        out.laws.push_back(gaussian_baseline({cm.mean, cm.cov}, mu_star, alpha_star));
    }
    out.pooled = gaussian_baseline(model.moments(), mu_star, alpha_star);
    return out;
}

double classification_error(const ScoreLaw& class0, const ScoreLaw& class1, double gamma0,
                            double gamma1, double threshold) {
    double e = gamma0 * (1.0 - class0.cdf(threshold)) + gamma1 * class1.cdf(threshold);
    return std::clamp(e, 0.0, 1.0);
}

double ks_distance(const ScoreLaw& law, std::vector<double> samples) {
    if (samples.empty()) throw DomainError("ks_distance needs samples");
    std::sort(samples.begin(), samples.end());
    std::size_t m = samples.size();
    std::vector<double> F(m), Fleft(m);
    if (law.scale() == 0.0 || m <= 4096) {
        for_chunks(m, 512, [&](std::size_t, std::size_t b, std::size_t e) {
            for (std::size_t i = b; i < e; ++i) {
                F[i] = law.cdf(samples[i]);
                Fleft[i] = law.scale() == 0.0 ? law.cdf(std::nextafter(samples[i], -INFINITY)) : F[i];
            }
        });
    } else {
        // Smooth law: tabulate on a uniform grid and interpolate linearly.
        double lo = samples.front(), hi = samples.back();
        // spacing scale/32 keeps the interpolation error near 3e-5
        double cells = std::ceil((hi - lo) / (law.scale() / 32.0));
        const std::size_t G = static_cast<std::size_t>(std::clamp(cells, 2048.0, 16384.0)) + 1;
        std::vector<double> tab(G);
        double h = hi > lo ? (hi - lo) / (G - 1) : 0.0;
        for_chunks(G, 256, [&](std::size_t, std::size_t b, std::size_t e) {
            for (std::size_t i = b; i < e; ++i) tab[i] = law.cdf(lo + h * i);
        });
        for (std::size_t i = 0; i < m; ++i) {
            if (h == 0.0) {
                F[i] = tab[0];
            } else {
                double pos = (samples[i] - lo) / h;
                std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(pos), G - 2);
                double f = pos - k;
                F[i] = tab[k] + f * (tab[k + 1] - tab[k]);
            }
            Fleft[i] = F[i];
        }
    }
    double d = 0.0;
    for (std::size_t i = 0; i < m;) {
        std::size_t j = i;
        while (j + 1 < m && samples[j + 1] == samples[i]) ++j;
        double below = static_cast<double>(i) / m, above = static_cast<double>(j + 1) / m;
        d = std::max({d, std::fabs(Fleft[i] - below), std::fabs(above - F[i])});
        i = j + 1;
    }
    return d;
}

double ks_between(const ScoreLaw& a, const ScoreLaw& b, std::size_t grid) {
    double lo = std::min(a.centers().front() - 8 * a.scale(), b.centers().front() - 8 * b.scale());
    double hi = std::max(a.centers().back() + 8 * a.scale(), b.centers().back() + 8 * b.scale());
    if (!(hi > lo)) return std::fabs(a.cdf(lo) - b.cdf(lo));
    std::vector<double> d(grid);
    for_chunks(grid, 256, [&](std::size_t, std::size_t s, std::size_t e) {
        for (std::size_t i = s; i < e; ++i) {
            double t = lo + (hi - lo) * i / (grid - 1.0);
            d[i] = std::fabs(a.cdf(t) - b.cdf(t));
        }
    });
    return *std::max_element(d.begin(), d.end());
}

double confinement_residual(const Vec& mu_star, const std::vector<Vec>& basis, const Vec& a) {
    double norm = mu_star.norm();
    if (norm == 0.0) return 0.0;
    int p = static_cast<int>(mu_star.size());
    std::vector<Vec> cols;
    for (const Vec& v : basis) {
        require_dim(v.size() == p, "basis vector length");
        cols.push_back(v);
    }
    if (a.size() == p && a.norm() > 0.0) cols.push_back(a);
    else require_dim(a.size() == p || a.size() == 0, "shift vector length");
    if (cols.empty()) return 1.0;
    Mat S(p, cols.size());
    for (std::size_t j = 0; j < cols.size(); ++j) S.col(j) = cols[j] / cols[j].norm();
    Eigen::ColPivHouseholderQR<Mat> qr(S);
    qr.setThreshold(1e-12);
    int rank = static_cast<int>(qr.rank());
    Mat Q = Mat(qr.householderQ()).leftCols(rank);
    Vec perp = mu_star - Q * (Q.transpose() * mu_star);
    return perp.norm() / norm;
}

}  // namespace erma
