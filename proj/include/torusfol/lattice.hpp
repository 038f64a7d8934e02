#ifndef TORUSFOL_LATTICE_HPP
#define TORUSFOL_LATTICE_HPP

#include <string>
#include <utility>
#include <vector>

#include "torusfol/core.hpp"

namespace torusfol {

/// Lattice of the torus C^n / Λ with codimension d of the normal directions.
/// Column j of `gens` is e_{j+1}; the first n columns are the standard basis.
struct LatticeSpec {
    int n = 0;
    int d = 0;
    Eigen::MatrixXcd gens;

    /// Builds the lattice from the n non-standard periods e_{n+1..2n} (columns).
    static LatticeSpec from_periods(int d, const Eigen::MatrixXcd& periods);

    void validate() const;

    /// Columns v_i = -2π Im e_{n+i}, the log-modulus shift of T_i.
    RMat log_generators() const;
};

/// A translate word: (generator index, exponent) pairs, generator 0-based.
using Word = std::vector<std::pair<int, int>>;

RVec word_shift(const LatticeSpec& lat, const Word& word);
std::string word_label(const Word& word);

/// Parallelotope {offset + Σ t_i v_i : t ∈ [-ε, 1+ε]^n} in log-modulus coordinates.
struct LogPolytope {
    RMat generators;
    double eps = 0.0;
    RVec offset;
    RMat vertices; // 2^n rows; bit i of the row index selects t_i = 1+ε

    /// Rebuilds vertices from generators, eps and offset.
    void rebuild();
    bool contains(const RVec& x, double tol = 1e-12) const;
};

LogPolytope log_indicatrix(const LatticeSpec& lat, double eps, const Word& word = {});

/// Convex hull in halfspace form {x : normals.row(f)·x <= offsets(f)} with its vertex list.
struct Hull {
    RMat vertices;
    RMat normals;
    RVec offsets;

    bool contains(const RVec& x, double tol = 1e-12) const;
};

struct UnionHull {
    std::vector<LogPolytope> pieces; // untranslated piece first, then (i, k) for k = -2,-1,1,2
    std::vector<Word> words;
    Hull hull;
};

inline constexpr int default_hull_limit = 4;

UnionHull union_and_hull(const LatticeSpec& lat, double eps, int hull_limit = default_hull_limit);

/// Largest η with every ±1 translate of the (ε+η)-parallelotope inside the hull at ε.
double max_margin_eta(const LatticeSpec& lat, double eps, double tol = 1e-9);

double log_sup_abs_monomial(const LatticeSpec& lat, double eps, const IVec& P, const Word& word = {});

/// sup |h^P| over the closure of the (translated) domain Ω_ε.
double sup_abs_monomial(const LatticeSpec& lat, double eps, const IVec& P, const Word& word = {});

/// κ with sup_{ε}|h^P| >= e^{κ(ε-ε')|P|_1} sup_{ε'}|h^P| for ε' < ε.
double decay_constant_kappa(const LatticeSpec& lat);

/// One vertex per line, coordinates separated by spaces.
std::string format_vertices(const RMat& vertices);

} // namespace torusfol

#endif // TORUSFOL_LATTICE_HPP
