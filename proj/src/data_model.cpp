#include "erma/data_model.hpp"
#include "erma/parallel.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

namespace erma {

LatentLaw LatentLaw::bimodal(double c, double s) {
    if (!(c >= 0.0) || !(s >= 0.0) || c * c + s * s <= 0.0)
        throw ConfigError("bimodal law needs c >= 0, s >= 0, not both zero");
    LatentLaw l;
    l.kind = Kind::Bimodal;
    l.c = c;
    l.s = s;
    return l;
}

bool LatentClass::all_gaussian() const {
    return std::all_of(laws.begin(), laws.end(),
                       [](const LatentLaw& l) { return l.kind == LatentLaw::Kind::Gaussian; });
}

double draw_latent(const LatentLaw& law, Rng& rng, std::normal_distribution<double>& normal,
                   std::uniform_real_distribution<double>& unif) {
    if (law.kind == LatentLaw::Kind::Gaussian) return normal(rng);
    double sign = unif(rng) < 0.5 ? -1.0 : 1.0;
    return (sign * law.c + law.s * normal(rng)) / law.scale();
}

Mat sqrtm_psd(const Mat& C) {
    if (C.size() == 0) return C;
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (C + C.transpose()));
    Vec d = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

namespace {

bool is_identity(const Mat& M) {
    return M.rows() == M.cols() && (M - Mat::Identity(M.rows(), M.cols())).cwiseAbs().maxCoeff() == 0.0;
}

void check_covariance(const Mat& C, int p, const std::string& what) {
    require_dim(C.rows() == p && C.cols() == p, what + " must be " + std::to_string(p) + "x" +
                                                     std::to_string(p));
    if (p == 0) return;
    if ((C - C.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, C.cwiseAbs().maxCoeff()))
        throw DomainError(what + " must be symmetric");
    double lo = Eigen::SelfAdjointEigenSolver<Mat>(C, Eigen::EigenvaluesOnly).eigenvalues()(0);
    if (lo < -1e-10 * std::max(1.0, C.cwiseAbs().maxCoeff()))
        throw DomainError(what + " must be positive semidefinite");
}

LatentClass make_class(double prior, double label, Vec mean, const Mat& C,
                       std::vector<LatentLaw> laws) {
    LatentClass lc;
    lc.prior = prior;
    lc.label = label;
    lc.mean = std::move(mean);
    lc.identity_B = is_identity(C);
    lc.cov = C;
    lc.B = lc.identity_B ? Mat::Identity(C.rows(), C.cols()) : sqrtm_psd(C);
    if (laws.empty()) laws.assign(C.rows(), LatentLaw::gaussian());
    require_dim(static_cast<int>(laws.size()) == C.rows(), "one latent law per coordinate");
    lc.laws = std::move(laws);
    return lc;
}

}  // namespace

DataModel DataModel::gaussian_linear(Vec mu_x, Mat C_x, Vec theta_star, double sigma_eps) {
    int p = static_cast<int>(mu_x.size());
    check_covariance(C_x, p, "C_x");
    require_dim(theta_star.size() == p, "theta_star length");
    if (!(sigma_eps >= 0.0)) throw ConfigError("sigma_eps must be nonnegative");
    DataModel m;
    m.kind_ = Kind::GaussianLinear;
    m.p_ = p;
    m.theta_star_ = std::move(theta_star);
    m.sigma_eps_ = sigma_eps;
    m.classes_.push_back(make_class(1.0, 0.0, std::move(mu_x), C_x, {}));
    return m;
}

DataModel DataModel::bimodal_linear(Vec mu_x, Mat C_x, Vec theta_star, double sigma_eps, int k,
                                    double c, double s) {
    int p = static_cast<int>(mu_x.size());
    require_dim(C_x.rows() == p && C_x.cols() == p, "C_x shape");
    if (k < 0 || k >= p) throw ConfigError("bimodal coordinate out of range");
    LatentLaw law = LatentLaw::bimodal(c, s);
    Mat C = C_x;
    C.row(k).setZero();
    C.col(k).setZero();
    C(k, k) = c * c + s * s;
    DataModel m = gaussian_linear(std::move(mu_x), C, std::move(theta_star), sigma_eps);
    m.kind_ = Kind::BimodalLinear;
    m.classes_[0].laws[k] = law;
    return m;
}

DataModel DataModel::mixture_classes(std::vector<double> priors, std::vector<Vec> means,
                                     std::vector<Mat> covs,
                                     std::vector<std::vector<LatentLaw>> laws,
                                     std::vector<double> labels) {
    std::size_t k = priors.size();
    if (k == 0) throw ConfigError("mixture needs at least one class");
    require_dim(means.size() == k && covs.size() == k, "one mean and covariance per class");
    if (laws.empty()) laws.resize(k);
    require_dim(laws.size() == k, "one law list per class");
    if (labels.empty()) {
        if (k == 2) labels = {-1.0, 1.0};
        else if (k == 1) labels = {1.0};
        else throw ConfigError("labels must be given for more than two classes");
    }
    require_dim(labels.size() == k, "one label per class");
    double total = std::accumulate(priors.begin(), priors.end(), 0.0);
    for (double g : priors)
        if (!(g > 0.0)) throw ConfigError("class priors must be positive");
    if (std::fabs(total - 1.0) > 1e-9) throw ConfigError("class priors must sum to 1");
    int p = static_cast<int>(means[0].size());
    DataModel m;
    m.kind_ = Kind::MixtureClasses;
    m.p_ = p;
    m.classification_ = true;
    for (std::size_t l = 0; l < k; ++l) {
        require_dim(means[l].size() == p, "class mean length");
        check_covariance(covs[l], p, "class covariance");
        m.classes_.push_back(make_class(priors[l], labels[l], std::move(means[l]), covs[l],
                                        std::move(laws[l])));
    }
    return m;
}

DataModel DataModel::lfmm(Mat V, Vec s, std::vector<LatentLaw> noise, double prior_positive) {
    int p = static_cast<int>(V.rows());
    require_dim(V.cols() == p, "LFMM basis must be square");
    require_dim(s.size() <= p, "LFMM signal length exceeds p");
    if ((V.transpose() * V - Mat::Identity(p, p)).cwiseAbs().maxCoeff() > 1e-8)
        throw DomainError("LFMM basis must be orthonormal");
    if (!(prior_positive > 0.0 && prior_positive < 1.0))
        throw ConfigError("LFMM class prior must be in (0, 1)");
    if (noise.empty()) noise.assign(p, LatentLaw::gaussian());
    require_dim(static_cast<int>(noise.size()) == p, "one noise law per factor");
    Vec full = Vec::Zero(p);
    full.head(s.size()) = s;
    Vec signal = V * full;
    DataModel m;
    m.kind_ = Kind::LFMM;
    m.p_ = p;
    m.classification_ = true;
    m.q_ = static_cast<int>(s.size());
    for (double label : {-1.0, 1.0}) {
        LatentClass lc;
        lc.prior = label > 0 ? prior_positive : 1.0 - prior_positive;
        lc.label = label;
        lc.mean = label * signal;
        lc.identity_B = is_identity(V);
        lc.B = V;
        lc.laws = noise;
        m.classes_.push_back(std::move(lc));
    }
    return m;
}

DataModel DataModel::empirical(Mat X, Vec y, std::map<double, double> label_map) {
    require_dim(X.cols() == y.size(), "one label per row");
    if (X.cols() == 0) throw ConfigError("empirical data set is empty");
    DataModel m;
    m.kind_ = Kind::Empirical;
    m.p_ = static_cast<int>(X.rows());
    m.classification_ = (y.array().abs() == 1.0).all();
    m.rows_X_ = std::move(X);
    m.rows_y_ = std::move(y);
    m.label_map_ = std::move(label_map);
    if (m.classification_) {
        m.empirical_groups_.resize(2);
        for (int i = 0; i < m.rows_y_.size(); ++i)
            m.empirical_groups_[m.rows_y_(i) > 0 ? 1 : 0].push_back(i);
        if (m.empirical_groups_[0].empty() || m.empirical_groups_[1].empty())
            m.empirical_groups_.erase(std::remove_if(m.empirical_groups_.begin(),
                                                     m.empirical_groups_.end(),
                                                     [](const auto& g) { return g.empty(); }),
                                      m.empirical_groups_.end());
    } else {
        m.empirical_groups_.assign(1, std::vector<int>(m.rows_y_.size()));
        std::iota(m.empirical_groups_[0].begin(), m.empirical_groups_[0].end(), 0);
    }
    return m;
}

std::string DataModel::kind_name() const {
    switch (kind_) {
        case Kind::GaussianLinear: return "gaussian_linear";
        case Kind::BimodalLinear: return "bimodal_linear";
        case Kind::MixtureClasses: return "mixture_classes";
        case Kind::LFMM: return "lfmm";
        case Kind::Empirical: return "empirical";
    }
    return "?";
}

void DataModel::sample_chunk(std::size_t chunk, std::size_t count, std::uint64_t seed, Mat& X,
                             Vec& y, std::vector<int>& cls) const {
    Rng rng = make_rng(seed, chunk);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> unif;
    int d = classes_[0].latent_dim();
    Mat W(d, count);
    Vec g(count);
    cls.assign(count, 0);
    for (std::size_t i = 0; i < count; ++i) {
        if (classes_.size() > 1) {
            double r = unif(rng), acc = 0.0;
            int l = 0;
            for (; l + 1 < static_cast<int>(classes_.size()); ++l) {
                acc += classes_[l].prior;
                if (r < acc) break;
            }
            cls[i] = l;
        }
        const LatentClass& lc = classes_[cls[i]];
        for (int j = 0; j < d; ++j) W(j, i) = draw_latent(lc.laws[j], rng, normal, unif);
        g(i) = normal(rng);
    }
    X.resize(p_, count);
    for (std::size_t l = 0; l < classes_.size(); ++l) {
        const LatentClass& lc = classes_[l];
        std::vector<int> idx;
        for (std::size_t i = 0; i < count; ++i)
            if (cls[i] == static_cast<int>(l)) idx.push_back(static_cast<int>(i));
        if (idx.empty()) continue;
        Mat Wl = W(Eigen::all, idx);
        Mat Xl = lc.identity_B ? Wl : Mat(lc.B * Wl);
        Xl.colwise() += lc.mean;
        X(Eigen::all, idx) = Xl;
    }
    if (classification_) {
        y.resize(count);
        for (std::size_t i = 0; i < count; ++i) y(i) = classes_[cls[i]].label;
    } else {
        y = X.transpose() * theta_star_ + sigma_eps_ * g;
    }
}

std::vector<std::size_t> DataModel::empirical_subset(std::size_t n, std::uint64_t seed) const {
    std::size_t N = rows_y_.size();
    if (n > N)
        throw ConfigError("requested " + std::to_string(n) + " samples but the data set has " +
                          std::to_string(N) + " rows");
    std::vector<std::size_t> idx(N);
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng = make_rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, N - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(n);
    return idx;
}

Dataset DataModel::sample(std::size_t n, std::uint64_t seed) const {
    if (n < 1) throw ConfigError("sample size must be at least 1");
    Dataset ds;
    if (kind_ == Kind::Empirical) {
        auto idx = empirical_subset(n, seed);
        ds.X.resize(p_, n);
        ds.y.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            ds.X.col(i) = rows_X_.col(idx[i]);
            ds.y(i) = rows_y_(idx[i]);
        }
        return ds;
    }
    ds.X.resize(p_, n);
    ds.y.resize(n);
    for_chunks(n, kSampleChunk, [&](std::size_t c, std::size_t b, std::size_t e) {
        Mat X;
        Vec y;
        std::vector<int> cls;
        sample_chunk(c, e - b, seed, X, y, cls);
        ds.X.middleCols(b, e - b) = X;
        ds.y.segment(b, e - b) = y;
    });
    return ds;
}

MultiProjections DataModel::project(const Mat& U, std::size_t m, std::uint64_t seed) const {
    require_dim(U.rows() == p_, "projection directions must have p rows");
    MultiProjections out;
    out.value.resize(m, U.cols());
    out.y.resize(m);
    out.cls.assign(m, 0);
    if (kind_ == Kind::Empirical) {
        auto idx = empirical_subset(m, seed);
        for (std::size_t i = 0; i < m; ++i) {
            out.value.row(i) = rows_X_.col(idx[i]).transpose() * U;
            out.y(i) = rows_y_(idx[i]);
            if (classification_ && empirical_groups_.size() == 2) out.cls[i] = out.y(i) > 0 ? 1 : 0;
        }
        return out;
    }
    for_chunks(m, kSampleChunk, [&](std::size_t c, std::size_t b, std::size_t e) {
        Mat X;
        Vec y;
        std::vector<int> cls;
        sample_chunk(c, e - b, seed, X, y, cls);
        out.value.middleRows(b, e - b) = X.transpose() * U;
        out.y.segment(b, e - b) = y;
        std::copy(cls.begin(), cls.end(), out.cls.begin() + b);
    });
    return out;
}

Projections DataModel::projection_samples(const Vec& u, std::size_t m, std::uint64_t seed) const {
    require_dim(u.size() == p_, "projection direction length");
    MultiProjections mp = project(u, m, seed);
    return {mp.value.col(0), std::move(mp.y), std::move(mp.cls)};
}

int DataModel::class_count() const {
    return kind_ == Kind::Empirical ? static_cast<int>(empirical_groups_.size())
                                    : static_cast<int>(classes_.size());
}

ClassMoments DataModel::class_moments(int cls) const {
    if (cls < 0 || cls >= class_count()) throw DimensionError("class index out of range");
    ClassMoments cm;
    if (kind_ == Kind::Empirical) {
        const auto& g = empirical_groups_[cls];
        Mat Xg = rows_X_(Eigen::all, g);
        cm.prior = static_cast<double>(g.size()) / rows_y_.size();
        cm.label = classification_ ? rows_y_(g[0]) : 0.0;
        cm.mean = Xg.rowwise().mean();
        Mat D = Xg.colwise() - cm.mean;
        cm.cov = g.size() > 1 ? Mat(D * D.transpose() / (g.size() - 1.0)) : Mat::Zero(p_, p_);
        return cm;
    }
    const LatentClass& lc = classes_[cls];
    cm.prior = lc.prior;
    cm.label = lc.label;
    cm.mean = lc.mean;
    if (lc.cov.size() > 0) cm.cov = lc.cov;
    else cm.cov = lc.identity_B ? Mat::Identity(p_, p_) : Mat(lc.B * lc.B.transpose());
    return cm;
}

Moments DataModel::moments() const {
    Moments mo;
    if (kind_ == Kind::Empirical) {
        mo.mu = rows_X_.rowwise().mean();
        Mat D = rows_X_.colwise() - mo.mu;
        std::size_t N = rows_X_.cols();
        mo.C = N > 1 ? Mat(D * D.transpose() / (N - 1.0)) : Mat::Zero(p_, p_);
        return mo;
    }
    mo.mu = Vec::Zero(p_);
    Mat second = Mat::Zero(p_, p_);
    for (int l = 0; l < class_count(); ++l) {
        ClassMoments cm = class_moments(l);
        mo.mu += cm.prior * cm.mean;
        second += cm.prior * (cm.cov + cm.mean * cm.mean.transpose());
    }
    mo.C = second - mo.mu * mo.mu.transpose();
    if (classes_.size() == 1) mo.C = class_moments(0).cov;
    return mo;
}

std::vector<Vec> DataModel::signal_directions() const {
    std::vector<Vec> out;
    if (kind_ != Kind::LFMM) return out;
    Vec s = (classes_[1].mean - classes_[0].mean) / 2.0;
    Vec coeff = classes_[1].B.transpose() * s;
    for (int i = 0; i < q_; ++i)
        if (coeff(i) != 0.0) out.push_back(classes_[1].B.col(i));
    return out;
}

DataModel DataModel::gaussianized() const {
    if (kind_ == Kind::Empirical) {
        if (!classification_)
            throw ConfigError("Gaussian-data baseline for regression needs a generative model");
        std::vector<double> priors, labels;
        std::vector<Vec> means;
        std::vector<Mat> covs;
        for (int l = 0; l < class_count(); ++l) {
            ClassMoments cm = class_moments(l);
            priors.push_back(cm.prior);
            labels.push_back(cm.label);
            means.push_back(cm.mean);
            covs.push_back(cm.cov);
        }
        return mixture_classes(priors, means, covs, {}, labels);
    }
    DataModel m = *this;
    for (auto& lc : m.classes_)
        for (auto& law : lc.laws) law = LatentLaw::gaussian();
    if (m.kind_ == Kind::BimodalLinear) m.kind_ = Kind::GaussianLinear;
    return m;
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::string trim(std::string s) {
    auto issp = [](unsigned char ch) { return std::isspace(ch); };
    while (!s.empty() && issp(s.back())) s.pop_back();
    std::size_t b = 0;
    while (b < s.size() && issp(s[b])) ++b;
    return s.substr(b);
}

}  // namespace

DataModel load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open data file '" + path + "'");
    std::string line;
    if (!std::getline(in, line) || trim(line).empty())
        throw ConfigError(path + ": empty file");
    auto header = split_csv(trim(line));
    if (header.size() < 2 || trim(header.back()) != "y")
        throw ConfigError(path + ": line 1: header must be x1,...,xp,y");
    std::size_t p = header.size() - 1;
    for (std::size_t j = 0; j < p; ++j)
        if (trim(header[j]) != "x" + std::to_string(j + 1))
            throw ConfigError(path + ": line 1: expected column 'x" + std::to_string(j + 1) +
                              "', found '" + trim(header[j]) + "'");
    std::vector<double> values;
    std::vector<double> labels;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty()) continue;
        auto cells = split_csv(line);
        if (cells.size() != p + 1)
            throw ConfigError(path + ": line " + std::to_string(lineno) + ": expected " +
                              std::to_string(p + 1) + " fields, found " +
                              std::to_string(cells.size()));
        for (std::size_t j = 0; j <= p; ++j) {
            std::string cell = trim(cells[j]);
            char* end = nullptr;
            double v = std::strtod(cell.c_str(), &end);
            if (cell.empty() || end != cell.c_str() + cell.size() || !std::isfinite(v))
                throw ConfigError(path + ": line " + std::to_string(lineno) + ": non-numeric cell '" +
                                  cell + "' in column " + std::to_string(j + 1));
            if (j < p) values.push_back(v);
            else labels.push_back(v);
        }
    }
    if (labels.empty()) throw ConfigError(path + ": no data rows");
    std::size_t n = labels.size();
    Mat X = Eigen::Map<Mat>(values.data(), p, n);
    Vec y = Eigen::Map<Vec>(labels.data(), n);
    std::map<double, double> mapping;
    bool zero_one = (y.array() == 0.0 || y.array() == 1.0).all();
    bool has_zero = (y.array() == 0.0).any();
    if (zero_one && has_zero) {
        mapping = {{0.0, -1.0}, {1.0, 1.0}};
        y = (2.0 * y.array() - 1.0).matrix();
    }
    return DataModel::empirical(std::move(X), std::move(y), std::move(mapping));
}

}  // namespace erma
