#pragma once
// Graphs of curves with extra data (E, x), their adjacency operators for the
// weighted inner product <F, G> = sum F(x) G(x) / #Aut(x), the Deg
// decomposition L^2 = L^2_deg + L^2_0 and sampling estimates of mixing.

#include <Eigen/Dense>
#include <complex>
#include <map>
#include <optional>
#include <vector>

#include "isolab/engine.hpp"
#include "isolab/reduction.hpp"

namespace isolab {

// trivial: no data. cyc: cyclic subgroups of order N. endmod: End(E)/N with
// phi acting as A -> M A M^ (M^ = deg M^-1). endmod1: the same set with
// A -> M A M^-1, a ring map for every phi.
enum class FunctorKind { trivial, cyc, endmod, endmod1 };
FunctorKind parse_kind(const std::string& s);
std::string kind_name(FunctorKind k);

// all data as 2x2 matrices over Z/N; cyc keeps a generator in the first column
Mat2 step_matrix(const TorsionCache& tc, int v, StepRef s, u64 N);
Mat2 aut_matrix(const TorsionCache& tc, int v, int e, u64 N);

struct GraphVertex {
    int curve = 0;
    Mat2 datum;
    int aut = 2;  // #Aut(E, x)
};

struct ExtraDataGraph {
    u64 p = 0, N = 1;
    FunctorKind kind = FunctorKind::trivial;
    std::vector<int> ells;
    std::vector<GraphVertex> verts;
    // out[ell][x]: the ell + 1 targets, one per kernel
    std::map<int, std::vector<std::vector<int>>> out;
    int raw_data = 0;  // sum over curves of #F(E) before identification

    int size() const { return (int)verts.size(); }
    mpq_class weight(int x) const { return mpq_class(1, verts[x].aut); }
    int find(int curve, const Mat2& datum) const;  // -1 when absent
    std::map<std::pair<int, u64>, int> index;      // (curve, canonical key)
};

struct GraphOptions {
    long max_vertices = 20000;
};

// T is needed for endmod/endmod1 only (End(E)/N = M_2(Z/N) is checked on it)
ExtraDataGraph build_graph(const EndoLab& L, const CurveTable* T, u64 N, FunctorKind kind,
                           const std::vector<int>& ells, const GraphOptions& opt = {});

Eigen::MatrixXd adjacency_op(const ExtraDataGraph& G, int ell);  // A(x, y) = #edges x -> y
Eigen::VectorXd weights(const ExtraDataGraph& G);
// adjoint for the weighted product: M^-1 A^T M
Eigen::MatrixXd weighted_adjoint(const ExtraDataGraph& G, const Eigen::MatrixXd& A);
Eigen::MatrixXd incoming_op(const ExtraDataGraph& G, int ell);  // B(x, y) = #edges y -> x

struct OperatorChecks {
    double constant_defect = 0;   // |A 1 - (ell + 1) 1|
    double normality_defect = 0;  // |A A* - A* A|
    double incoming_defect = 0;   // |B - M A* M^-1|
    double self_adjoint_defect = 0;
};
OperatorChecks check_operator(const ExtraDataGraph& G, int ell);
double commutator_norm(const ExtraDataGraph& G, int l1, int l2);

// Exact check of the stationary law 24 / ((p - 1) #Aut(E)) for the trivial functor.
bool stationary_exact(const ExtraDataGraph& G, int ell);

struct OrbitInfo {
    long size = 0;                  // data in the orbit at the base curve
    std::vector<u64> deg_subgroup;  // deg(H) inside (Z/N)^x
    std::string label;
};
// G = GL_2(Z/N) acting on F(E_0) by brute force, N small
std::vector<OrbitInfo> predicted_orbits(u64 N, FunctorKind kind);
// the same count from the class list of M_2(F_N) (homothety, split, nonsplit,
// nonsemisimple with its SL_2 refinement), N an odd prime
long classified_component_count(u64 N, FunctorKind kind);

struct SpectralReport {
    int ell = 0;
    int vertices = 0;
    int components = 0;     // of G_F
    int components1 = 0;    // of G_F^1 = dim L^2_deg
    long predicted_components = 0;
    long predicted_dim_deg = 0;
    std::vector<int> component_of, deg_label;  // per vertex
    std::vector<std::complex<double>> eig_deg, eig_deg_predicted, eig_zero;
    double max_abs_zero = 0;  // on L^2_0
    double bound = 0;         // 2 sqrt(ell)
    double max_imag = 0;
    double deg_match_error = 0;  // measured vs predicted on L^2_deg, inf if sizes differ
    double projector_idempotence = 0, projector_self_adjoint = 0;
    bool ramanujan_ok() const { return max_abs_zero <= bound + 1e-9; }
    bool deg_ok() const { return deg_match_error <= 1e-9; }
    nlohmann::json to_json() const;
};

// connected components of the graph on all edges of G
std::vector<int> components(const ExtraDataGraph& G, int* count = nullptr);
// components of G_F^1 through the cover (x, d) -> (y, d ell)
std::vector<int> components1(const ExtraDataGraph& G, int* count = nullptr);
// P F(x) = sum_{y ~ x} F(y) mu(y) / W(x)
Eigen::MatrixXd deg_projector(const ExtraDataGraph& G, const std::vector<int>& comp1);

SpectralReport deg_decomposition(const ExtraDataGraph& G, int ell);

struct DeltaReport {
    int X = 0;
    std::vector<int> primes;
    std::vector<std::complex<double>> eig;
    double second = 0;                    // second largest |lambda| on the component
    std::map<int, double> second_single;  // same for A_ell / (ell + 1)
    double constant_defect = 0;
    nlohmann::json to_json() const;
};
// Delta = mean of A_ell / (ell + 1) over primes ell < X prime to pN,
// restricted to the vertices with the given component label (-1: all)
DeltaReport delta_operator(const ExtraDataGraph& G, int X, const std::vector<int>& comp = {}, int label = -1);

struct StatEstimate {
    double estimate = 0, sigma = 0, bound = 0;
    long samples = 0, support = 0;
    double conditional = -1;  // walk estimate: fixed endpoint, -1 when unused
    nlohmann::json to_json() const;
};

// plug-in TV between alpha mod N and g^-1 (alpha mod N) g for alpha = Rich_k(E)
StatEstimate stat_distance_rich(const CurveTable& T, int v, u64 N, int k, long samples, const OneEnd& O,
                                const Mat2& g, u64 seed, int boot = 200);
// an element of End(E) with the given matrix mod N, found on the table basis
std::optional<EndoRep> lift_matrix(const CurveTable& T, int v, const Mat2& g, u64 N);

// (E_phi, phi mod N) after a uniform k-step ell-walk from v0 against the law nu
StatEstimate stat_distance_walk(const EndoLab& L, int v0, u64 N, int ell, int k, long samples, u64 seed,
                                int boot = 200);

}  // namespace isolab
