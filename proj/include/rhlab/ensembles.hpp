#pragma once

#include <complex>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include <json.hpp>

namespace rhlab {

struct MultiIndex {
    std::vector<int> exponents;
    int total() const;
    bool operator==(const MultiIndex&) const = default;
};

// All multi-indices of nvars entries summing to degree, in lex order with the
// first exponent descending: X0^d, X0^{d-1}X1, X0^{d-1}X2, ..., Xn^d.
// For nvars = 2 the position of X0^{d-k} X1^k is k.
class MonomialBasis {
public:
    MonomialBasis(int nvars, int degree);
    int nvars() const { return nvars_; }
    int degree() const { return degree_; }
    std::size_t size() const { return size_; }
    std::span<const int> exponents(std::size_t i) const {
        return {exps_.data() + i * nvars_, static_cast<std::size_t>(nvars_)};
    }
    std::size_t rank(std::span<const int> alpha) const;

private:
    int nvars_, degree_;
    std::size_t size_;
    std::vector<int> exps_;
};

// Shared, cached basis object.
std::shared_ptr<const MonomialBasis> monomial_basis(int nvars, int degree);
std::size_t count_monomials(int nvars, int degree);

class HomogeneousPolynomial {
public:
    HomogeneousPolynomial() : HomogeneousPolynomial(2, 0) {}
    HomogeneousPolynomial(int nvars, int degree);
    HomogeneousPolynomial(int nvars, int degree, std::vector<double> coeffs);

    int nvars() const { return basis_->nvars(); }
    int degree() const { return basis_->degree(); }
    const MonomialBasis& basis() const { return *basis_; }
    std::span<const double> coeffs() const { return coeffs_; }
    double coeff(std::size_t i) const { return coeffs_[i]; }
    bool is_zero() const;

private:
    std::shared_ptr<const MonomialBasis> basis_;
    std::vector<double> coeffs_;
};

// Polynomial of degree <= k in n affine variables x1..xn. Coefficients are
// indexed by the homogeneous basis in n+1 variables of degree k, the first
// exponent standing for the missing degree k - |beta|.
class AffinePolynomial {
public:
    AffinePolynomial(int nvars, int degree, std::vector<double> coeffs);
    // Terms given as (coefficient, exponents of x1..xn).
    static AffinePolynomial from_terms(int nvars,
                                       const std::vector<std::pair<double, std::vector<int>>>& terms);

    int nvars() const { return n_; }
    int degree() const { return k_; }
    std::span<const double> coeffs() const { return coeffs_; }
    std::span<const int> exponents(std::size_t i) const;  // x1..xn exponents
    std::size_t size() const { return coeffs_.size(); }
    int actual_degree() const;  // highest total degree with a nonzero coefficient

    double evaluate(std::span<const double> x) const;
    std::vector<double> gradient(std::span<const double> x) const;

private:
    int n_, k_;
    std::shared_ptr<const MonomialBasis> basis_;
    std::vector<double> coeffs_;
};

enum class EnsembleKind { kac, kostlan };

struct EnsembleSpec {
    EnsembleKind kind = EnsembleKind::kostlan;
    int nvars = 2;
    int degree = 1;
    std::uint64_t seed = 0;
    static constexpr double variance = 0.5;

    void validate() const;
};

const char* to_string(EnsembleKind k);
EnsembleKind parse_ensemble_kind(const std::string& s);

double log_kostlan_weight(std::span<const int> alpha, int d, int n);
double kostlan_weight(const MultiIndex& alpha, int d, int n);
// Standard deviation of every monomial coefficient, in basis order.
std::vector<double> coefficient_scales(const EnsembleSpec& spec);

HomogeneousPolynomial sample(const EnsembleSpec& spec, std::uint64_t stream_index);
// Same, filling a preallocated coefficient buffer.
void sample_into(const EnsembleSpec& spec, std::span<const double> scales, std::uint64_t stream_index,
                 std::span<double> out);

template <class T>
T evaluate(const HomogeneousPolynomial& q, std::span<const T> v);
double evaluate(const HomogeneousPolynomial& q, std::initializer_list<double> v);
std::vector<double> gradient(const HomogeneousPolynomial& q, std::span<const double> v);

HomogeneousPolynomial homogenize(const AffinePolynomial& p, int target_degree);
AffinePolynomial dehomogenize(const HomogeneousPolynomial& q);

// (Q o L)(v) = Q(L v) for an nvars x nvars matrix L stored row-major.
HomogeneousPolynomial compose_linear(const HomogeneousPolynomial& q, std::span<const double> L);
// Same for orthogonal R, computed in the Kostlan-scaled basis where the action is
// orthogonal; stays accurate at large degree where compose_linear cancels badly.
HomogeneousPolynomial rotate_orthogonal(const HomogeneousPolynomial& q, std::span<const double> R);

HomogeneousPolynomial scaled(const HomogeneousPolynomial& q, double s);
HomogeneousPolynomial axpy(double a, const HomogeneousPolynomial& x, const HomogeneousPolynomial& y);

nlohmann::json to_json(const HomogeneousPolynomial& q);
HomogeneousPolynomial polynomial_from_json(const nlohmann::json& j);

}  // namespace rhlab
