#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <complex>
#include <random>
#include <vector>

#include "qtmap/operators.hpp"

using namespace qtmap;

namespace {

Mat random_hermitian(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Mat a(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = cplx(dist(rng), dist(rng));
  return 0.5 * (a + a.adjoint()).eval();
}

// Matrix exponential by scaled Taylor series, independent of the
// eigendecomposition route used by herm_exp.
Mat series_exp(const Mat& a) {
  int squarings = 0;
  Mat x = a;
  while (x.cwiseAbs().maxCoeff() > 0.25) {
    x *= 0.5;
    ++squarings;
  }
  Mat term = Mat::Identity(x.rows(), x.cols());
  Mat sum = term;
  for (int k = 1; k <= 40; ++k) {
    term = (term * x / static_cast<double>(k)).eval();
    sum += term;
  }
  for (int s = 0; s < squarings; ++s) sum = (sum * sum).eval();
  return sum;
}

// Index-level partial trace used as a brute-force oracle.
Mat brute_partial_trace(const Mat& rho, Eigen::Index ds, Eigen::Index db,
                        bool keep_system) {
  Mat out = keep_system ? Mat::Zero(ds, ds) : Mat::Zero(db, db);
  for (Eigen::Index a = 0; a < ds; ++a)
    for (Eigen::Index b = 0; b < ds; ++b)
      for (Eigen::Index i = 0; i < db; ++i)
        for (Eigen::Index j = 0; j < db; ++j) {
          const cplx v = rho(a * db + i, b * db + j);
          if (keep_system && i == j) out(a, b) += v;
          if (!keep_system && a == b) out(i, j) += v;
        }
  return out;
}

}  // namespace

TEST_CASE("kron places blocks with left factor major") {
  Mat a(2, 2);
  a << 1, 2, 3, 4;
  Mat b(2, 2);
  b << 0, 5, 6, 7;
  const Mat k = kron(a, b);
  REQUIRE(k.rows() == 4);
  CHECK(k(0, 1) == cplx(5));    // a(0,0)*b(0,1)
  CHECK(k(3, 0) == cplx(18));   // a(1,0)*b(1,0)
  CHECK(k(3, 3) == cplx(28));   // a(1,1)*b(1,1)
}

TEST_CASE("kron is associative and multiplicative") {
  std::mt19937_64 rng(7);
  const Mat a = random_hermitian(rng, 2);
  const Mat b = random_hermitian(rng, 3);
  const Mat c = random_hermitian(rng, 2);
  CHECK(max_abs(Mat(kron(kron(a, b), c) - kron(a, kron(b, c)))) < 1e-12);
  // (A (x) B)(C (x) D) = AC (x) BD
  const Mat d = random_hermitian(rng, 3);
  CHECK(max_abs(Mat(kron(a, b) * kron(c, d) - kron(Mat(a * c), Mat(b * d)))) <
        1e-12);
}

TEST_CASE("pauli algebra") {
  const Mat x = pauli_x(), y = pauli_y(), z = pauli_z();
  CHECK(max_abs(Mat(x * y - cplx(0, 1) * z)) < 1e-15);
  CHECK(max_abs(Mat(x * x - ident(2))) < 1e-15);
  CHECK(std::abs((x * z + z * x).trace()) < 1e-15);
}

TEST_CASE("herm_exp matches series expansion on random input") {
  std::mt19937_64 rng(11);
  const Mat h = random_hermitian(rng, 6);
  for (cplx s : {cplx(0.0, -0.8), cplx(-0.6, 0.0), cplx(0.3, 0.9)}) {
    const Mat viaeig = herm_exp(Operator(h, Structure::hermitian), s).mat;
    const Mat viaseries = series_exp(Mat(s * h));
    CHECK(max_abs(Mat(viaeig - viaseries)) < 1e-12);
  }
}

TEST_CASE("herm_exp closed form on pauli_x") {
  // exp(-i (pi/2) sx) = -i sx
  const Operator u =
      herm_exp(Operator(pauli_x(), Structure::hermitian), cplx(0, -M_PI_2));
  CHECK(max_abs(Mat(u.mat - cplx(0, -1) * pauli_x())) < 1e-14);
  CHECK(u.structure == Structure::unitary);
}

TEST_CASE("herm_exp inverse pairs multiply to identity") {
  std::mt19937_64 rng(13);
  const Mat h = random_hermitian(rng, 8);
  const Mat up = herm_exp(Operator(h, Structure::hermitian), cplx(0, 0.9)).mat;
  const Mat dn = herm_exp(Operator(h, Structure::hermitian), cplx(0, -0.9)).mat;
  CHECK(max_abs(Mat(up * dn - ident(8))) < 1e-13);
}

TEST_CASE("herm_exp rejects non-hermitian input") {
  Mat a(2, 2);
  a << 0, 1, 0, 0;
  CHECK_THROWS(herm_exp(Operator(a, Structure::general), cplx(0, -1)));
}

TEST_CASE("conjugate preserves the eigenvalue multiset") {
  std::mt19937_64 rng(17);
  const Mat h = random_hermitian(rng, 6);
  const Operator u =
      herm_exp(Operator(random_hermitian(rng, 6), Structure::hermitian),
               cplx(0, -1.3));
  const Operator rotated = conjugate(u, Operator(h, Structure::hermitian));
  Eigen::SelfAdjointEigenSolver<Mat> e1(h), e2(rotated.mat);
  CHECK((e1.eigenvalues() - e2.eigenvalues()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(rotated.structure == Structure::hermitian);
}

TEST_CASE("partial_trace against brute-force contraction") {
  std::mt19937_64 rng(19);
  const DimensionLayout layout{3, 4};
  Mat rho = random_hermitian(rng, 12);
  const Operator full(rho, Structure::hermitian);
  CHECK(max_abs(Mat(partial_trace(full, layout, Keep::system).mat -
                    brute_partial_trace(rho, 3, 4, true))) < 1e-13);
  CHECK(max_abs(Mat(partial_trace(full, layout, Keep::bath).mat -
                    brute_partial_trace(rho, 3, 4, false))) < 1e-13);
}

TEST_CASE("partial_trace of a product state factorizes") {
  std::mt19937_64 rng(23);
  const Mat a = random_hermitian(rng, 2);
  const Mat b = random_hermitian(rng, 5);
  const Operator full(kron(a, b), Structure::hermitian);
  const DimensionLayout layout{2, 5};
  CHECK(max_abs(Mat(partial_trace(full, layout, Keep::system).mat -
                    b.trace() * a)) < 1e-12);
  CHECK(max_abs(Mat(partial_trace(full, layout, Keep::bath).mat -
                    a.trace() * b)) < 1e-12);
}

TEST_CASE("partial_trace duality: trace of either reduction is the trace") {
  std::mt19937_64 rng(29);
  const Mat rho = random_hermitian(rng, 12);
  const Operator full(rho, Structure::hermitian);
  const DimensionLayout layout{4, 3};
  const cplx t0 = rho.trace();
  CHECK(std::abs(partial_trace(full, layout, Keep::system).mat.trace() - t0) <
        1e-13);
  CHECK(std::abs(partial_trace(full, layout, Keep::bath).mat.trace() - t0) <
        1e-13);
}

TEST_CASE("embed_site acts on the requested site only") {
  const Operator sz(pauli_z(), Structure::hermitian);
  const Operator e1 = embed_site(sz, 1, 3, 2);
  CHECK(e1.dim() == 8);
  const Mat expected = kron(ident(2), kron(pauli_z(), ident(2)));
  CHECK(max_abs(Mat(e1.mat - expected)) < 1e-15);
}
