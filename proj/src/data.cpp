#include "fcgboost/data.hpp"

#include "fcgboost/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace fcgb {

namespace {

std::string format_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

bool is_missing(std::string_view f) {
    return f.empty() || f == "?" || f == "NA" || f == "na" || f == "NaN" || f == "nan";
}

bool parse_number(std::string_view f, double& out) {
    if (!f.empty() && f.front() == '+') f.remove_prefix(1);
    const auto* end = f.data() + f.size();
    auto [ptr, ec] = std::from_chars(f.data(), end, out);
    return ec == std::errc() && ptr == end && std::isfinite(out);
}

}  // namespace

void Dataset::validate() const {
    if (X.rows() < 1) throw DataError("dataset is empty");
    if (X.rows() != y.size()) throw DataError("dataset rows and labels differ in length");
    if (!X.allFinite()) throw DataError("dataset contains non-finite features");
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (y[i] != 1.0 && y[i] != -1.0) throw DataError("labels must be -1 or +1");
    }
}

Dataset Dataset::subset(const std::vector<Eigen::Index>& rows) const {
    Dataset out;
    out.X.resize(static_cast<Eigen::Index>(rows.size()), X.cols());
    out.y.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        out.X.row(static_cast<Eigen::Index>(r)) = X.row(rows[r]);
        out.y[static_cast<Eigen::Index>(r)] = y[rows[r]];
    }
    out.meta = meta;
    return out;
}

NoiseSpec parse_noise(const std::string& text) {
    if (text.empty() || text == "none") return NoNoise{};
    const auto colon = text.find(':');
    const std::string kind = text.substr(0, colon);
    const std::string args = colon == std::string::npos ? "" : text.substr(colon + 1);
    auto number = [&](std::string_view f) {
        double v = 0.0;
        if (!parse_number(trim(f), v)) throw DomainError("bad noise parameter in '" + text + "'");
        return v;
    };
    if (kind == "uniform") {
        return UniformNoise{number(args)};
    }
    if (kind == "outlier") {
        const auto parts = split_fields(args);
        if (parts.size() != 2) throw DomainError("outlier noise needs 'outlier:tol,ratio'");
        return OutlierNoise{number(parts[0]), number(parts[1])};
    }
    throw DomainError("unknown noise kind '" + kind + "'");
}

std::string to_string(const NoiseSpec& noise) {
    if (const auto* u = std::get_if<UniformNoise>(&noise)) return "uniform:" + format_double(u->level);
    if (const auto* o = std::get_if<OutlierNoise>(&noise)) {
        return "outlier:" + format_double(o->tol) + "," + format_double(o->ratio);
    }
    return "none";
}

void SyntheticConfig::validate() const {
    if (m < 1) throw DomainError("synthetic sample count must be >= 1");
    if (const auto* u = std::get_if<UniformNoise>(&noise)) {
        if (!(u->level >= 0.0 && u->level < 1.0)) throw DomainError("uniform noise level must lie in [0,1)");
    } else if (const auto* o = std::get_if<OutlierNoise>(&noise)) {
        if (!(o->tol > 0.0)) throw DomainError("outlier tol must be positive");
        if (!(o->ratio >= 0.0 && o->ratio < 1.0)) throw DomainError("outlier ratio must lie in [0,1)");
    }
}

double zeta(double t) {
    if (!(t >= 0.0 && t <= 1.0)) throw DomainError("zeta: argument outside [0,1]");
    const double s = std::max(0.0, 1.0 - 2.0 * t);
    const double s5 = s * s * s * s * s;
    return (s5 * (32.0 * t * t + 10.0 * t + 1.0) + 1.0) / 2.0;
}

Dataset gen_synthetic(const SyntheticConfig& cfg) {
    cfg.validate();
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    Dataset data;
    data.X.resize(cfg.m, 2);
    data.y.resize(cfg.m);
    Eigen::Index flipped = 0;
    for (Eigen::Index i = 0; i < cfg.m; ++i) {
        const double x1 = unit(rng);
        const double x2 = unit(rng);
        // Always consumed so that the inputs do not depend on the noise model.
        const double draw = unit(rng);
        const double boundary = zeta(x1);
        double label = x2 >= boundary ? 1.0 : -1.0;

        bool flip = false;
        if (const auto* u = std::get_if<UniformNoise>(&cfg.noise)) {
            flip = draw < u->level;
        } else if (const auto* o = std::get_if<OutlierNoise>(&cfg.noise)) {
            flip = std::abs(x2 - boundary) > o->tol && draw < o->ratio;
        }
        if (flip) {
            label = -label;
            ++flipped;
        }
        data.X(i, 0) = x1;
        data.X(i, 1) = x2;
        data.y[i] = label;
    }
    data.meta["source"] = "synthetic";
    data.meta["m"] = std::to_string(cfg.m);
    data.meta["seed"] = std::to_string(cfg.seed);
    data.meta["noise"] = to_string(cfg.noise);
    data.meta["flipped"] = std::to_string(flipped);
    data.meta["noise_fraction"] = format_double(static_cast<double>(flipped) / static_cast<double>(cfg.m));
    return data;
}

Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "'");

    std::vector<std::vector<double>> rows;
    std::size_t width = 0;
    std::size_t rows_read = 0;
    std::size_t dropped = 0;
    std::size_t unparseable = 0;
    bool first = true;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const auto fields = split_fields(line);
        if (first) {
            first = false;
            width = fields.size();
            const bool header = std::any_of(fields.begin(), fields.end(), [](std::string_view f) {
                double v;
                return !is_missing(f) && !parse_number(f, v);
            });
            if (header) continue;
        }
        ++rows_read;
        if (fields.size() != width) {
            ++dropped;
            continue;
        }
        std::vector<double> values(width);
        bool missing = false;
        bool bad = false;
        for (std::size_t c = 0; c < width; ++c) {
            if (is_missing(fields[c])) {
                missing = true;
            } else if (!parse_number(fields[c], values[c])) {
                bad = true;
            }
        }
        if (bad) {
            ++unparseable;
        } else if (missing) {
            ++dropped;
        } else {
            rows.push_back(std::move(values));
        }
    }
    if (rows.empty()) throw DataError("no usable rows in '" + path.string() + "'");

    const int ncols = static_cast<int>(width);
    const int label_col = schema.label_column < 0 ? ncols + schema.label_column : schema.label_column;
    if (label_col < 0 || label_col >= ncols) throw DataError("label column out of range");
    std::vector<int> features = schema.feature_columns;
    if (features.empty()) {
        for (int c = 0; c < ncols; ++c) {
            if (c != label_col) features.push_back(c);
        }
    }
    for (int c : features) {
        if (c < 0 || c >= ncols || c == label_col) throw DataError("feature column out of range");
    }

    Dataset data;
    const auto m = static_cast<Eigen::Index>(rows.size());
    const auto d = static_cast<Eigen::Index>(features.size());
    data.X.resize(m, d);
    data.y.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const auto& r = rows[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < d; ++j) data.X(i, j) = r[static_cast<std::size_t>(features[static_cast<std::size_t>(j)])];
        data.y[i] = schema.positive_labels.count(r[static_cast<std::size_t>(label_col)]) ? 1.0 : -1.0;
    }

    std::vector<std::string> warnings;
    for (Eigen::Index j = 0; j < d; ++j) {
        const double lo = data.X.col(j).minCoeff();
        const double hi = data.X.col(j).maxCoeff();
        if (hi > lo) {
            data.X.col(j) = (data.X.col(j).array() - lo) / (hi - lo);
        } else {
            data.X.col(j).setZero();
            warnings.push_back("constant feature column " + std::to_string(features[static_cast<std::size_t>(j)]));
        }
    }
    if (dropped > 0) warnings.push_back(std::to_string(dropped) + " incomplete rows dropped");
    if (unparseable > 0) warnings.push_back(std::to_string(unparseable) + " unparseable rows dropped");

    data.meta["source"] = path.string();
    data.meta["rows_read"] = std::to_string(rows_read);
    data.meta["dropped_rows"] = std::to_string(dropped);
    data.meta["unparseable_rows"] = std::to_string(unparseable);
    std::string joined;
    for (const auto& w : warnings) joined += (joined.empty() ? "" : "; ") + w;
    data.meta["warnings"] = joined;
    return data;
}

void export_csv(const Dataset& data, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out.precision(17);
    for (Eigen::Index j = 0; j < data.dim(); ++j) out << 'x' << (j + 1) << ',';
    out << "y\n";
    for (Eigen::Index i = 0; i < data.size(); ++i) {
        for (Eigen::Index j = 0; j < data.dim(); ++j) out << data.X(i, j) << ',';
        out << static_cast<int>(data.y[i]) << '\n';
    }
    if (!data.meta.empty()) write_meta(data.meta, path.string() + ".meta");
}

void write_meta(const std::map<std::string, std::string>& meta, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    for (const auto& [k, v] : meta) out << k << '=' << v << '\n';
}

std::map<std::string, std::string> read_meta(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    std::map<std::string, std::string> meta;
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        meta[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return meta;
}

Split split(const Dataset& data, const std::array<double, 3>& fractions, std::uint64_t seed) {
    const double total = fractions[0] + fractions[1] + fractions[2];
    if (std::abs(total - 1.0) > 1e-9) throw DomainError("split fractions must sum to 1");
    for (double f : fractions) {
        if (f < 0.0) throw DomainError("split fractions must be nonnegative");
    }
    const auto m = data.size();
    const auto n_valid = static_cast<Eigen::Index>(std::floor(fractions[1] * static_cast<double>(m)));
    const auto n_test = static_cast<Eigen::Index>(std::floor(fractions[2] * static_cast<double>(m)));
    const auto n_train = m - n_valid - n_test;
    if (n_train < 1 || n_valid < 1 || n_test < 1) throw DomainError("split would leave an empty part");

    std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);

    const auto begin = order.begin();
    Split out;
    out.train = data.subset({begin, begin + n_train});
    out.valid = data.subset({begin + n_train, begin + n_train + n_valid});
    out.test = data.subset({begin + n_train + n_valid, order.end()});
    return out;
}

double test_error(const Eigen::Ref<const Eigen::VectorXd>& predicted,
                  const Eigen::Ref<const Eigen::VectorXd>& truth) {
    if (predicted.size() != truth.size()) throw DomainError("test_error: length mismatch");
    if (truth.size() == 0) throw DomainError("test_error: empty input");
    Eigen::Index wrong = 0;
    for (Eigen::Index i = 0; i < truth.size(); ++i) {
        if (predicted[i] != truth[i]) ++wrong;
    }
    return static_cast<double>(wrong) / static_cast<double>(truth.size());
}

}  // namespace fcgb
