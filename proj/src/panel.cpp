#include "erma/fixed_point.hpp"
#include "erma/parallel.hpp"

#include <cmath>

namespace erma {

namespace {

constexpr std::size_t kPanelChunk = 8192;

void whiten_rows(Mat& W) {
    double m = static_cast<double>(W.cols());
    Mat S = W * W.transpose() / m;
    Eigen::LLT<Mat> llt(S);
    if (llt.info() != Eigen::Success) return;
    llt.matrixL().solveInPlace(W);
}

}  // namespace

ExpectationPanel build_panel(const DataModel& model, const PanelOptions& opts) {
    ExpectationPanel panel;
    panel.gh = gauss_hermite(opts.quadrature_order);
    int p = model.dim();

    if (!model.generative()) {
        int k = model.class_count();
        std::vector<std::vector<int>> groups(k);
        const Vec& y = model.row_labels();
        for (int i = 0; i < y.size(); ++i)
            groups[k == 2 ? (y(i) > 0 ? 1 : 0) : 0].push_back(i);
        std::size_t N = y.size();
        panel.X.resize(p, N);
        panel.y.resize(N);
        panel.weight = Vec::Constant(N, 1.0 / N);
        std::size_t at = 0;
        for (int l = 0; l < k; ++l) {
            panel.block_begin.push_back(at);
            panel.class_weight.push_back(static_cast<double>(groups[l].size()) / N);
            for (int i : groups[l]) {
                panel.X.col(at) = model.rows().col(i);
                panel.y(at) = y(i);
                ++at;
            }
        }
        panel.block_begin.push_back(at);
        return panel;
    }

    const auto& classes = model.latent();
    int k = static_cast<int>(classes.size());
    int d = classes[0].latent_dim();
    std::vector<std::size_t> counts(k);
    std::size_t total = 0;
    for (int l = 0; l < k; ++l) {
        std::size_t m = static_cast<std::size_t>(std::llround(classes[l].prior * opts.size));
        if (opts.moment_match) m = std::max<std::size_t>(m, d + 2);
        m = std::max<std::size_t>(m, 2);
        if (opts.antithetic && m % 2) ++m;
        counts[l] = m;
        total += m;
    }
    panel.X.resize(p, total);
    panel.y.resize(total);
    panel.weight.resize(total);
    std::size_t at = 0;
    for (int l = 0; l < k; ++l) {
        const LatentClass& lc = classes[l];
        std::size_t m = counts[l];
        std::size_t half = opts.antithetic ? m / 2 : m;
        Rng rng = make_rng(opts.seed, 0, 11);
        std::normal_distribution<double> normal;
        std::uniform_real_distribution<double> unif;
        Mat W(d, m);
        Vec g(m);
        for (std::size_t i = 0; i < half; ++i)
            for (int j = 0; j < d; ++j) W(j, i) = draw_latent(lc.laws[j], rng, normal, unif);
        for (std::size_t i = 0; i < half; ++i) g(i) = normal(rng);
        if (opts.antithetic) {
            W.rightCols(half) = -W.leftCols(half);
            g.tail(half) = -g.head(half);
        }
        if (opts.moment_match && static_cast<int>(m) > d) {
            if (!opts.antithetic) {
                Vec mean = W.rowwise().mean();
                W.colwise() -= mean;
                g.array() -= g.mean();
            }
            whiten_rows(W);
            if (!model.classification()) {
                g -= W.transpose() * (W * g) / static_cast<double>(m);
                double norm = g.norm();
                if (norm > 0) g *= std::sqrt(static_cast<double>(m)) / norm;
            }
        }
        Mat Xl = lc.identity_B ? W : Mat(lc.B * W);
        Xl.colwise() += lc.mean;
        panel.X.middleCols(at, m) = Xl;
        if (model.classification())
            panel.y.segment(at, m).setConstant(lc.label);
        else
            panel.y.segment(at, m) = Xl.transpose() * model.theta_star() + model.sigma_eps() * g;
        panel.weight.segment(at, m).setConstant(lc.prior / m);
        panel.block_begin.push_back(at);
        panel.class_weight.push_back(lc.prior);
        at += m;
    }
    panel.block_begin.push_back(at);
    return panel;
}

std::vector<BlockExpectation> panel_expectations(const ExpectationPanel& panel,
                                                 const LossFamily& loss, const Vec& mu,
                                                 const std::vector<double>& alpha,
                                                 const std::vector<double>& kappa,
                                                 bool with_vector) {
    int k = panel.classes();
    require_dim(static_cast<int>(alpha.size()) == k && static_cast<int>(kappa.size()) == k,
                "one alpha and kappa per panel class");
    require_dim(mu.size() == panel.X.rows(), "mu length vs panel dimension");
    const auto& gh = panel.gh;
    std::vector<BlockExpectation> out(k);
    for (int l = 0; l < k; ++l) {
        std::size_t b0 = panel.block_begin[l], b1 = panel.block_begin[l + 1];
        std::size_t len = b1 - b0;
        std::size_t nch = chunk_count(len, kPanelChunk);
        std::vector<std::array<double, 5>> part(nch);
        std::vector<Vec> vpart(with_vector ? nch : 0);
        for_chunks(len, kPanelChunk, [&](std::size_t c, std::size_t b, std::size_t e) {
            std::size_t cnt = e - b;
            auto Xc = panel.X.middleCols(b0 + b, cnt);
            Vec u = Xc.transpose() * mu;
            Vec m0(cnt), m1(cnt), m2(cnt), m3(cnt);
            kernels::xi_moments(loss.kind, u.data(), panel.y.data() + b0 + b, cnt, gh.nodes.data(),
                                gh.weights.data(), gh.size(), alpha[l], kappa[l], m0.data(),
                                m1.data(), m2.data(), m3.data());
            auto w = panel.weight.segment(b0 + b, cnt);
            Vec wm0 = w.cwiseProduct(m0);
            part[c] = {wm0.sum(), w.dot(m1), w.dot(m2), w.dot(m3), w.sum()};
            if (with_vector) vpart[c] = Xc * wm0;
        });
        std::array<double, 5> s{};
        Vec v = Vec::Zero(mu.size());
        for (std::size_t c = 0; c < nch; ++c) {
            for (int i = 0; i < 5; ++i) s[i] += part[c][i];
            if (with_vector) v += vpart[c];
        }
        double wt = s[4] > 0 ? s[4] : 1.0;
        out[l].xi = s[0] / wt;
        out[l].zxi = s[1] / wt;
        out[l].xi2 = s[2] / wt;
        out[l].dxi = s[3] / wt;
        out[l].x_xi = v / wt;
    }
    return out;
}

}  // namespace erma
