#include "qtmap/operators.hpp"

namespace qtmap {

Operator::Operator(Mat m, Structure s) : mat(std::move(m)), structure(s) {
  if (mat.rows() != mat.cols()) throw std::invalid_argument("operator not square");
  if (structure == Structure::hermitian && herm_residual(mat) > kHermTol)
    throw std::invalid_argument("hermiticity violated");
  if (structure == Structure::unitary && unitary_residual(mat) > kUnitaryTol)
    throw std::invalid_argument("unitarity violated");
}

Mat pauli_x() {
  Mat m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}

Mat pauli_y() {
  Mat m(2, 2);
  m << 0, cplx(0, -1), cplx(0, 1), 0;
  return m;
}

Mat pauli_z() {
  Mat m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}

Mat ident(Eigen::Index n) { return Mat::Identity(n, n); }

Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Operator kron(const Operator& a, const Operator& b) {
  Structure s = Structure::general;
  if (a.structure == b.structure) s = a.structure;
  return Operator(kron(a.mat, b.mat), s);
}

Operator embed_site(const Operator& op, int site, int n_sites, int local_dim) {
  if (site < 0 || site >= n_sites) throw std::invalid_argument("site index");
  if (op.dim() != local_dim)
    throw std::invalid_argument("embedded operator dimension mismatch");
  Mat out = Mat::Identity(1, 1);
  const Mat id = ident(local_dim);
  for (int k = 0; k < n_sites; ++k)
    out = kron(out, k == site ? op.mat : id).eval();
  return Operator(std::move(out), op.structure);
}

Operator herm_exp(const Operator& h, cplx scale) {
  if (herm_residual(h.mat) > kHermTol)
    throw std::invalid_argument("hermiticity violated");
  const Mat sym = 0.5 * (h.mat + h.mat.adjoint().eval());
  Eigen::SelfAdjointEigenSolver<Mat> es(sym);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("eigendecomposition failed");
  Eigen::VectorXcd phases =
      (scale * es.eigenvalues().cast<cplx>().array()).exp();
  Mat out = es.eigenvectors() * phases.asDiagonal() *
            es.eigenvectors().adjoint();
  Structure s = Structure::general;
  if (std::abs(scale.real()) == 0.0)
    s = Structure::unitary;
  else if (std::abs(scale.imag()) == 0.0)
    s = Structure::hermitian;
  if (s == Structure::hermitian) out = 0.5 * (out + out.adjoint().eval());
  return Operator(std::move(out), s);
}

Operator conjugate(const Operator& u, const Operator& a) {
  if (u.dim() != a.dim()) throw std::invalid_argument("dimension mismatch");
  if (unitary_residual(u.mat) > kUnitaryTol)
    throw std::invalid_argument("conjugation by non-unitary operator");
  Mat out = u.mat * a.mat * u.mat.adjoint();
  if (a.structure == Structure::hermitian)
    out = 0.5 * (out + out.adjoint().eval());
  return Operator(std::move(out), a.structure);
}

Operator partial_trace(const Operator& rho, const DimensionLayout& layout,
                       Keep keep) {
  if (rho.dim() != layout.total())
    throw std::invalid_argument("dimension not factorizable per layout");
  const Eigen::Index ds = layout.d_s, db = layout.d_b;
  if (keep == Keep::system) {
    Mat out = Mat::Zero(ds, ds);
    for (Eigen::Index a = 0; a < ds; ++a)
      for (Eigen::Index b = 0; b < ds; ++b)
        for (Eigen::Index i = 0; i < db; ++i)
          out(a, b) += rho.mat(a * db + i, b * db + i);
    return Operator(std::move(out), rho.structure == Structure::hermitian
                                        ? Structure::hermitian
                                        : Structure::general);
  }
  Mat out = Mat::Zero(db, db);
  for (Eigen::Index i = 0; i < db; ++i)
    for (Eigen::Index j = 0; j < db; ++j)
      for (Eigen::Index a = 0; a < ds; ++a)
        out(i, j) += rho.mat(a * db + i, a * db + j);
  return Operator(std::move(out), rho.structure == Structure::hermitian
                                      ? Structure::hermitian
                                      : Structure::general);
}

}  // namespace qtmap
