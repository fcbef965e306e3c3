#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

namespace fcgb {

/// Feature matrix (one sample per row) with labels in {-1, +1}.
struct Dataset {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    std::map<std::string, std::string> meta;

    Eigen::Index size() const { return X.rows(); }
    Eigen::Index dim() const { return X.cols(); }

    /// Throws DataError unless rows match, m >= 1, no NaN and labels are +-1.
    void validate() const;
    Dataset subset(const std::vector<Eigen::Index>& rows) const;
};

struct NoNoise {};
struct UniformNoise {
    double level = 0.0;
};
/// Labels of points farther than `tol` from the Bayes boundary flip with probability `ratio`.
struct OutlierNoise {
    double tol = 0.3;
    double ratio = 0.4;
};
using NoiseSpec = std::variant<NoNoise, UniformNoise, OutlierNoise>;

/// "none", "uniform:0.3", "outlier:0.3,0.4".
NoiseSpec parse_noise(const std::string& text);
std::string to_string(const NoiseSpec& noise);

struct SyntheticConfig {
    Eigen::Index m = 1000;
    NoiseSpec noise = NoNoise{};
    std::uint64_t seed = 0;

    void validate() const;
};

/// Bayes boundary on [0,1]: ((1-2t)_+^5 (32t^2 + 10t + 1) + 1) / 2.
double zeta(double t);

/// Uniform points on [0,1]^2, y = +1 iff x2 >= zeta(x1), then noise.
Dataset gen_synthetic(const SyntheticConfig& cfg);

struct CsvSchema {
    /// Zero-based column index; negative counts from the end (-1 = last column).
    int label_column = -1;
    std::set<double> positive_labels = {1.0};
    /// Empty means every column except the label.
    std::vector<int> feature_columns;
};

/// Parses a comma-separated numeric file (header auto-detected), drops
/// incomplete rows, binarizes labels and min-max scales features to [0,1].
/// meta records rows_read, dropped_rows, unparseable_rows and warnings.
Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema);

/// Writes x1..xd,y with a header row; meta goes to `<path>.meta` as key=value lines.
void export_csv(const Dataset& data, const std::filesystem::path& path);
void write_meta(const std::map<std::string, std::string>& meta, const std::filesystem::path& path);
std::map<std::string, std::string> read_meta(const std::filesystem::path& path);

struct Split {
    Dataset train;
    Dataset valid;
    Dataset test;
};

/// Shuffled partition; part sizes are floor(fraction * m) with the remainder added to train.
Split split(const Dataset& data, const std::array<double, 3>& fractions, std::uint64_t seed);

double test_error(const Eigen::Ref<const Eigen::VectorXd>& predicted,
                  const Eigen::Ref<const Eigen::VectorXd>& truth);
inline double accuracy(const Eigen::Ref<const Eigen::VectorXd>& predicted,
                       const Eigen::Ref<const Eigen::VectorXd>& truth) {
    return 1.0 - test_error(predicted, truth);
}

}  // namespace fcgb
