#pragma once

#include "erma/rng.hpp"
#include "erma/types.hpp"

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace erma {

// Law of one latent coordinate, always standardized to mean 0, variance 1.
// Bimodal(c, s) is (1/2 N(-c, s^2) + 1/2 N(c, s^2)) / sqrt(c^2 + s^2).
struct LatentLaw {
    enum class Kind { Gaussian, Bimodal };
    Kind kind = Kind::Gaussian;
    double c = 3.0;
    double s = 0.5;

    static LatentLaw gaussian() { return {}; }
    static LatentLaw bimodal(double c, double s);
    double scale() const { return kind == Kind::Bimodal ? std::sqrt(c * c + s * s) : 1.0; }
};

// x = mean + B w, w with independent coordinates of the given laws.
struct LatentClass {
    double prior = 1.0;
    double label = 1.0;
    Vec mean;
    Mat B;
    Mat cov;  // exact B B^T when known, empty otherwise
    bool identity_B = false;
    std::vector<LatentLaw> laws;

    int latent_dim() const { return static_cast<int>(laws.size()); }
    bool all_gaussian() const;
};

struct Moments {
    Vec mu;
    Mat C;
};

struct ClassMoments {
    double prior = 1.0;
    double label = 1.0;
    Vec mean;
    Mat cov;
};

struct Dataset {
    Mat X;  // p x n, one sample per column
    Vec y;
};

struct Projections {
    Vec value;
    Vec y;
    std::vector<int> cls;
};

struct MultiProjections {
    Mat value;  // m x r, column j holds U.col(j)^T x_i
    Vec y;
    std::vector<int> cls;
};

class DataModel {
public:
    enum class Kind { GaussianLinear, BimodalLinear, MixtureClasses, LFMM, Empirical };

    static DataModel gaussian_linear(Vec mu_x, Mat C_x, Vec theta_star, double sigma_eps);
    // Coordinate k (0-based) of x is replaced by an independent bimodal variable
    // 1/2 N(mu_k - c, s^2) + 1/2 N(mu_k + c, s^2); row and column k of C_x are ignored.
    static DataModel bimodal_linear(Vec mu_x, Mat C_x, Vec theta_star, double sigma_eps, int k,
                                    double c, double s);
    // Per-coordinate laws apply to the latent coordinates of C^{1/2}, which are
    // the coordinates of x itself when C is diagonal.
    static DataModel mixture_classes(std::vector<double> priors, std::vector<Vec> means,
                                     std::vector<Mat> covs,
                                     std::vector<std::vector<LatentLaw>> laws,
                                     std::vector<double> labels = {});
    // x = V (y s + e), s zero past its length, e_i independent with the given laws.
    static DataModel lfmm(Mat V, Vec s, std::vector<LatentLaw> noise, double prior_positive);
    static DataModel empirical(Mat X, Vec y, std::map<double, double> label_map = {});

    Kind kind() const { return kind_; }
    std::string kind_name() const;
    int dim() const { return p_; }
    bool classification() const { return classification_; }
    bool has_theta_star() const { return kind_ == Kind::GaussianLinear || kind_ == Kind::BimodalLinear; }
    const Vec& theta_star() const { return theta_star_; }
    double sigma_eps() const { return sigma_eps_; }

    Dataset sample(std::size_t n, std::uint64_t seed) const;
    Moments moments() const;
    int class_count() const;
    ClassMoments class_moments(int cls) const;
    // u^T x for m draws; identical to u^T sample(m, seed).X without storing X.
    Projections projection_samples(const Vec& u, std::size_t m, std::uint64_t seed) const;
    MultiProjections project(const Mat& U, std::size_t m, std::uint64_t seed) const;

    const std::vector<LatentClass>& latent() const { return classes_; }
    bool generative() const { return kind_ != Kind::Empirical; }
    // Signal directions of an LFMM (columns of V with nonzero s).
    std::vector<Vec> signal_directions() const;
    // Same class structure and moments, every latent coordinate Gaussian.
    DataModel gaussianized() const;

    const Mat& rows() const { return rows_X_; }
    const Vec& row_labels() const { return rows_y_; }
    const std::map<double, double>& label_map() const { return label_map_; }

    static constexpr std::size_t kSampleChunk = 2048;

private:
    Kind kind_ = Kind::GaussianLinear;
    int p_ = 0;
    bool classification_ = false;
    std::vector<LatentClass> classes_;
    Vec theta_star_;
    double sigma_eps_ = 0.0;
    int q_ = 0;
    Mat rows_X_;
    Vec rows_y_;
    std::map<double, double> label_map_;
    std::vector<std::vector<int>> empirical_groups_;

    void sample_chunk(std::size_t chunk, std::size_t count, std::uint64_t seed, Mat& X, Vec& y,
                      std::vector<int>& cls) const;
    std::vector<std::size_t> empirical_subset(std::size_t n, std::uint64_t seed) const;
};

DataModel load_csv(const std::string& path);

// Symmetric PSD square root.
Mat sqrtm_psd(const Mat& C);
// Standardized draw from a latent law.
double draw_latent(const LatentLaw& law, Rng& rng, std::normal_distribution<double>& normal,
                   std::uniform_real_distribution<double>& unif);

}  // namespace erma
