// Dense complex operator algebra: tensor products, site embeddings, Hermitian
// matrix functions and partial traces. Fixed ordering system (x) bath.
#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>

namespace qtmap {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;

inline constexpr double kHermTol = 1e-12;
inline constexpr double kUnitaryTol = 1e-10;

enum class Structure { general, hermitian, unitary };

inline double max_abs(const Mat& m) {
  return m.size() ? m.cwiseAbs().maxCoeff() : 0.0;
}

inline double herm_residual(const Mat& m) {
  return max_abs(m - m.adjoint().eval());
}

inline double unitary_residual(const Mat& m) {
  return max_abs(m * m.adjoint() - Mat::Identity(m.rows(), m.cols()));
}

struct Operator {
  Mat mat;
  Structure structure = Structure::general;

  Operator() = default;
  Operator(Mat m, Structure s = Structure::general);

  Eigen::Index dim() const { return mat.rows(); }
};

struct DimensionLayout {
  Eigen::Index d_s = 1;
  Eigen::Index d_b = 1;
  Eigen::Index total() const { return d_s * d_b; }
};

enum class Keep { system, bath };

// Elementary 2x2 blocks used by the spin builders.
Mat pauli_x();
Mat pauli_y();
Mat pauli_z();
Mat ident(Eigen::Index n);

Mat kron(const Mat& a, const Mat& b);
Operator kron(const Operator& a, const Operator& b);

Operator embed_site(const Operator& op, int site, int n_sites, int local_dim);

// exp(scale*h) for Hermitian h via full eigendecomposition; input is
// symmetrized before solving. Purely imaginary scale -> unitary result,
// real scale -> Hermitian result.
Operator herm_exp(const Operator& h, cplx scale);

// u * a * u^dagger; preserves the Hermitian/unitary structure of a.
Operator conjugate(const Operator& u, const Operator& a);

Operator partial_trace(const Operator& rho, const DimensionLayout& layout,
                       Keep keep);

}  // namespace qtmap
