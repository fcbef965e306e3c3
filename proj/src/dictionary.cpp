#include "fcgboost/dictionary.hpp"

#include "fcgboost/digest.hpp"
#include "fcgboost/errors.hpp"

#include <cmath>
#include <random>

namespace fcgb {

namespace {

constexpr int kMaxResample = 100;
constexpr double kDegenerateNorm = 1e-12;

double activate(const KernelKind& kind, double z) {
    switch (kind.family) {
        case KernelKind::Family::Polynomial: return std::pow(z + 1.0, kind.degree);
        case KernelKind::Family::Sigmoid: return std::tanh(z);
        case KernelKind::Family::Relu: return z > 0.0 ? z : 0.0;
        case KernelKind::Family::Gauss: break;
    }
    return z;
}

/// Unnormalized values of one atom on all rows of X.
Eigen::VectorXd raw_column(const KernelKind& kind, const Eigen::Ref<const Eigen::MatrixXd>& X,
                           const Eigen::Ref<const Eigen::RowVectorXd>& param, double bias) {
    if (kind.family == KernelKind::Family::Gauss) {
        const double scale = 1.0 / (2.0 * kind.width * kind.width);
        return (-(X.rowwise() - param).rowwise().squaredNorm() * scale).array().exp();
    }
    Eigen::VectorXd z = X * param.transpose();
    if (kind.family != KernelKind::Family::Polynomial) z.array() += bias;
    return z.unaryExpr([&](double v) { return activate(kind, v); });
}

}  // namespace

KernelKind KernelKind::gauss(double width) { return {Family::Gauss, width, 2}; }
KernelKind KernelKind::polynomial(int degree) { return {Family::Polynomial, 0.1, degree}; }
KernelKind KernelKind::sigmoid() { return {Family::Sigmoid, 0.1, 2}; }
KernelKind KernelKind::relu() { return {Family::Relu, 0.1, 2}; }

void KernelKind::validate() const {
    if (family == Family::Gauss && !(width > 0.0 && std::isfinite(width))) {
        throw DomainError("Gaussian width must be positive");
    }
    if (family == Family::Polynomial && degree < 1) {
        throw DomainError("polynomial degree must be a positive integer");
    }
}

std::string to_string(KernelKind::Family family) {
    switch (family) {
        case KernelKind::Family::Gauss: return "gauss";
        case KernelKind::Family::Polynomial: return "polynomial";
        case KernelKind::Family::Sigmoid: return "sigmoid";
        case KernelKind::Family::Relu: return "relu";
    }
    return "unknown";
}

KernelKind::Family parse_family(std::string_view name) {
    if (name == "gauss" || name == "gaussian") return KernelKind::Family::Gauss;
    if (name == "polynomial" || name == "poly") return KernelKind::Family::Polynomial;
    if (name == "sigmoid") return KernelKind::Family::Sigmoid;
    if (name == "relu") return KernelKind::Family::Relu;
    throw DomainError("unknown dictionary family '" + std::string(name) + "'");
}

std::string to_string(const KernelKind& kind) {
    switch (kind.family) {
        case KernelKind::Family::Gauss: {
            char buf[64];
            std::snprintf(buf, sizeof buf, "gauss(%g)", kind.width);
            return buf;
        }
        case KernelKind::Family::Polynomial: return "polynomial(" + std::to_string(kind.degree) + ")";
        default: return to_string(kind.family);
    }
}

Dictionary::Dictionary(KernelKind kind, Eigen::MatrixXd params, Eigen::VectorXd biases,
                       Eigen::VectorXd normalizers, std::uint64_t seed)
    : kind_(kind), params_(std::move(params)), biases_(std::move(biases)),
      normalizers_(std::move(normalizers)), seed_(seed) {
    kind_.validate();
    if (params_.rows() < 1) throw DomainError("dictionary needs at least one atom");
    if (biases_.size() != params_.rows() || normalizers_.size() != params_.rows()) {
        throw DomainError("dictionary parameter arrays differ in length");
    }
    if ((normalizers_.array() <= 0.0).any()) throw DomainError("normalizers must be positive");
}

DesignMatrix Dictionary::evaluate(const Eigen::Ref<const Eigen::MatrixXd>& X) const {
    if (X.cols() != input_dim()) {
        throw DomainError("evaluate: input dimension " + std::to_string(X.cols()) +
                          " does not match dictionary dimension " + std::to_string(input_dim()));
    }
    DesignMatrix A(X.rows(), size());
    for (Eigen::Index j = 0; j < size(); ++j) {
        A.col(j) = raw_column(kind_, X, params_.row(j), biases_[j]) / normalizers_[j];
    }
    return A;
}

DesignMatrix Dictionary::evaluate(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                  const std::vector<Eigen::Index>& atoms) const {
    if (X.cols() != input_dim()) throw DomainError("evaluate: input dimension mismatch");
    DesignMatrix A(X.rows(), static_cast<Eigen::Index>(atoms.size()));
    for (std::size_t c = 0; c < atoms.size(); ++c) {
        const auto j = atoms[c];
        if (j < 0 || j >= size()) throw DomainError("evaluate: atom index out of range");
        A.col(static_cast<Eigen::Index>(c)) = raw_column(kind_, X, params_.row(j), biases_[j]) / normalizers_[j];
    }
    return A;
}

nlohmann::json Dictionary::to_json() const {
    nlohmann::json atoms = nlohmann::json::array();
    for (Eigen::Index j = 0; j < size(); ++j) {
        std::vector<double> p(params_.row(j).begin(), params_.row(j).end());
        atoms.push_back({{"param", p}, {"bias", biases_[j]}, {"normalizer", normalizers_[j]}});
    }
    return {{"format", "fcgboost.dictionary"},
            {"version", kDictionaryFormatVersion},
            {"family", to_string(kind_.family)},
            {"width", kind_.width},
            {"degree", kind_.degree},
            {"seed", seed_},
            {"input_dim", input_dim()},
            {"atoms", std::move(atoms)}};
}

Dictionary Dictionary::from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "fcgboost.dictionary") throw DataError("not a dictionary record");
    if (j.value("version", 0) != kDictionaryFormatVersion) throw DataError("unsupported dictionary version");
    KernelKind kind{parse_family(j.at("family").get<std::string>()), j.at("width").get<double>(),
                    j.at("degree").get<int>()};
    const auto d = j.at("input_dim").get<Eigen::Index>();
    const auto& atoms = j.at("atoms");
    const auto n = static_cast<Eigen::Index>(atoms.size());
    Eigen::MatrixXd params(n, d);
    Eigen::VectorXd biases(n), norms(n);
    for (Eigen::Index a = 0; a < n; ++a) {
        const auto& rec = atoms.at(static_cast<std::size_t>(a));
        const auto p = rec.at("param").get<std::vector<double>>();
        if (static_cast<Eigen::Index>(p.size()) != d) throw DataError("atom parameter length mismatch");
        for (Eigen::Index c = 0; c < d; ++c) params(a, c) = p[static_cast<std::size_t>(c)];
        biases[a] = rec.at("bias").get<double>();
        norms[a] = rec.at("normalizer").get<double>();
    }
    return Dictionary(kind, std::move(params), std::move(biases), std::move(norms),
                      j.at("seed").get<std::uint64_t>());
}

std::string Dictionary::digest() const { return fnv1a_hex(to_json().dump()); }

Dictionary build_dictionary(const Eigen::Ref<const Eigen::MatrixXd>& X, const KernelKind& kind,
                            Eigen::Index n, std::uint64_t seed) {
    kind.validate();
    if (n < 1) throw DomainError("build_dictionary: n must be >= 1");
    if (X.rows() < 1 || X.cols() < 1) throw DomainError("build_dictionary: empty training inputs");

    const auto d = X.cols();
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<Eigen::Index> pick_row(0, X.rows() - 1);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform_bias(-1.0, 1.0);
    const bool centered = kind.family == KernelKind::Family::Gauss ||
                          kind.family == KernelKind::Family::Polynomial;

    Eigen::MatrixXd params(n, d);
    Eigen::VectorXd biases = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd norms(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        bool accepted = false;
        for (int attempt = 0; attempt < kMaxResample && !accepted; ++attempt) {
            Eigen::RowVectorXd p(d);
            double b = 0.0;
            if (centered) {
                p = X.row(pick_row(rng));
            } else {
                for (Eigen::Index c = 0; c < d; ++c) p[c] = normal(rng);
                const double len = p.norm();
                if (len == 0.0) continue;
                p /= len;
                b = uniform_bias(rng);
            }
            const double sup = raw_column(kind, X, p, b).cwiseAbs().maxCoeff();
            if (!(sup >= kDegenerateNorm) || !std::isfinite(sup)) continue;
            params.row(j) = p;
            biases[j] = b;
            norms[j] = std::max(1.0, sup);
            accepted = true;
        }
        if (!accepted) {
            throw DomainError("build_dictionary: atom " + std::to_string(j) + " degenerate after " +
                              std::to_string(kMaxResample) + " attempts");
        }
    }
    return Dictionary(kind, std::move(params), std::move(biases), std::move(norms), seed);
}

Eigen::VectorXd atom_correlations(const DesignMatrix& A, const Eigen::Ref<const Eigen::VectorXd>& grad) {
    if (A.rows() != grad.size()) throw DomainError("atom_correlations: gradient length mismatch");
    return -(A.transpose() * grad);
}

}  // namespace fcgb
