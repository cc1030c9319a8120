#include "qtmap/models.hpp"

#include <cmath>
#include <tuple>

namespace qtmap {

namespace {

Mat spin_bath_field_sum(int n_bath) {  // sum_k sigma_k^x on the bath space
  const int db = 1 << n_bath;
  Mat sum = Mat::Zero(db, db);
  const Operator sx(pauli_x(), Structure::hermitian);
  for (int k = 0; k < n_bath; ++k)
    sum += embed_site(sx, k, n_bath, 2).mat;
  return sum;
}

Mat spin_bath_hamiltonian(const SpinModelParams& p) {
  const int N = p.n_bath;
  const int db = 1 << N;
  const Operator sx(pauli_x(), Structure::hermitian);
  const Operator sz(pauli_z(), Structure::hermitian);
  Mat hb = Mat::Zero(db, db);
  for (int k = 0; k < N; ++k) hb -= p.omega_b * embed_site(sz, k, N, 2).mat;
  for (int k = 0; k + 1 < N; ++k)
    hb -= p.h * (embed_site(sx, k, N, 2).mat * embed_site(sx, k + 1, N, 2).mat);
  if (p.boundary == SpinModelParams::Boundary::periodic && N >= 3)
    hb -= p.h * (embed_site(sx, N - 1, N, 2).mat * embed_site(sx, 0, N, 2).mat);
  return hb;
}

Mat spin_system_hamiltonian(const SpinModelParams& p, double t) {
  return p.lambda_x(t) * pauli_x() + p.lambda_z(t) * pauli_z();
}

// cos/sin of a Hermitian argument via one shared eigendecomposition.
struct TrigPair {
  Mat cos_m, sin_m;
};

TrigPair herm_trig(const Mat& h) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (h + h.adjoint().eval()));
  const Eigen::VectorXd e = es.eigenvalues();
  TrigPair out;
  out.cos_m = es.eigenvectors() *
              e.array().cos().matrix().cast<cplx>().asDiagonal() *
              es.eigenvectors().adjoint();
  out.sin_m = es.eigenvectors() *
              e.array().sin().matrix().cast<cplx>().asDiagonal() *
              es.eigenvectors().adjoint();
  return out;
}

Mat fock_lowering(int n_levels) {  // b with b|n> = sqrt(n)|n-1>
  Mat b = Mat::Zero(n_levels, n_levels);
  for (int n = 1; n < n_levels; ++n) b(n - 1, n) = std::sqrt(double(n));
  return b;
}

struct OscOps {
  Mat x_s, p_s;  // system quadratures at the reference frequency
  Mat q, pi;     // bath quadratures
  Mat num_b;     // bath number operator
};

OscOps oscillator_ops(const OscillatorModelParams& p) {
  OscOps o;
  const int ds = p.n_max_sys + 1, db = p.n_max_bath + 1;
  const Mat b = fock_lowering(ds), bd = b.adjoint();
  const double mw = p.mass_m * p.omega_s0;
  o.x_s = (b + bd) / std::sqrt(2.0 * mw);
  o.p_s = cplx(0, 1) * std::sqrt(mw / 2.0) * (bd - b);
  const Mat a = fock_lowering(db), ad = a.adjoint();
  o.q = a + ad;
  o.pi = cplx(0, 1) * (ad - a);
  o.num_b = ad * a;
  return o;
}

// exp(+i s L x R) and exp(-i s L x R) from the factor eigendecompositions;
// avoids a full-space eigendecomposition of the product generator.
std::pair<Operator, Operator> kron_coupling_exponentials(const Mat& left,
                                                         const Mat& right,
                                                         double s) {
  Eigen::SelfAdjointEigenSolver<Mat> el(0.5 * (left + left.adjoint().eval()));
  Eigen::SelfAdjointEigenSolver<Mat> er(0.5 * (right + right.adjoint().eval()));
  const Mat v = kron(el.eigenvectors(), er.eigenvectors());
  const Eigen::Index dl = left.rows(), dr = right.rows();
  Eigen::VectorXcd ph(dl * dr);
  for (Eigen::Index a = 0; a < dl; ++a)
    for (Eigen::Index b = 0; b < dr; ++b)
      ph(a * dr + b) =
          std::exp(cplx(0, s * el.eigenvalues()(a) * er.eigenvalues()(b)));
  Mat up = v * ph.asDiagonal() * v.adjoint();
  Mat um = v * ph.conjugate().asDiagonal() * v.adjoint();
  return {Operator(std::move(up), Structure::unitary),
          Operator(std::move(um), Structure::unitary)};
}

}  // namespace

ModelArtifacts build_spin_uncoupled(const SpinModelParams& p, double t) {
  ModelArtifacts m;
  const int db = 1 << p.n_bath;
  m.layout = DimensionLayout{2, db};
  m.H_s = Operator(spin_system_hamiltonian(p, t), Structure::hermitian);
  m.H_b = Operator(spin_bath_hamiltonian(p), Structure::hermitian);
  m.G = Operator(0.5 * kron(pauli_x(), spin_bath_field_sum(p.n_bath)),
                 Structure::hermitian);
  m.H_uc = Operator(kron(m.H_s.mat, ident(db)) + kron(ident(2), m.H_b.mat),
                    Structure::hermitian);
  return m;
}

MappedFamily build_spin_total_analytic(const SpinModelParams& p, double t) {
  const int N = p.n_bath;
  const int db = 1 << N;
  const Mat Sx = spin_bath_field_sum(N);
  const TrigPair trig = herm_trig(p.g * Sx);
  const Operator sx(pauli_x(), Structure::hermitian);
  const Operator sy(pauli_y(), Structure::hermitian);
  const Operator sz(pauli_z(), Structure::hermitian);

  MappedFamily f;
  f.H_sys = Operator(kron(spin_system_hamiltonian(p, t), ident(db)),
                     Structure::hermitian);

  Mat hb = Mat::Zero(db, db);
  for (int k = 0; k < N; ++k)
    hb -= std::cos(p.g) * p.omega_b * embed_site(sz, k, N, 2).mat;
  for (int k = 0; k + 1 < N; ++k)
    hb -= p.h * (embed_site(sx, k, N, 2).mat * embed_site(sx, k + 1, N, 2).mat);
  if (p.boundary == SpinModelParams::Boundary::periodic && N >= 3)
    hb -= p.h * (embed_site(sx, N - 1, N, 2).mat * embed_site(sx, 0, N, 2).mat);
  f.H_bath = Operator(kron(ident(2), hb), Structure::hermitian);

  Mat Sy = Mat::Zero(db, db);
  for (int k = 0; k < N; ++k) Sy += embed_site(sy, k, N, 2).mat;
  const double lz = p.lambda_z(t);
  Mat hi = -p.omega_b * std::sin(p.g) * kron(pauli_x(), Sy) +
           lz * kron(pauli_z(), trig.cos_m - ident(db)) +
           lz * kron(pauli_y(), trig.sin_m);
  f.H_int = Operator(0.5 * (hi + hi.adjoint().eval()), Structure::hermitian);
  return f;
}

ModelArtifacts build_spin_full(const SpinModelParams& p, double t) {
  ModelArtifacts m = build_spin_uncoupled(p, t);
  MappedFamily f = build_spin_total_analytic(p, t);
  m.H_sys_dressed = f.H_sys;
  m.H_bath_dressed = f.H_bath;
  m.H_int = f.H_int;
  m.H_total = Operator(f.H_sys.mat + f.H_bath.mat + f.H_int.mat,
                       Structure::hermitian);
  m.has_mapped = true;
  return m;
}

double rotation_identity_residual(double g, int n_bath) {
  const int db = 1 << n_bath;
  const Mat Sx = spin_bath_field_sum(n_bath);
  const Mat Jx = 0.5 * kron(pauli_x(), ident(db));
  const Mat Jy = 0.5 * kron(pauli_y(), ident(db));
  const Mat Jz = 0.5 * kron(pauli_z(), ident(db));
  const Mat SxJx = kron(0.5 * pauli_x(), Sx);
  const Operator rot = herm_exp(Operator(SxJx, Structure::hermitian),
                                cplx(0, g));
  const Mat lhs = rot.mat * Jz * rot.mat.adjoint();
  const TrigPair trig = herm_trig(g * Sx);
  const Mat rhs = Jz * kron(ident(2), trig.cos_m) +
                  Jy * kron(ident(2), trig.sin_m);
  return max_abs(lhs - rhs);
}

ModelArtifacts build_oscillator_uncoupled(const OscillatorModelParams& p,
                                          double t) {
  if (p.omega_s(t) <= 0.0)
    throw std::invalid_argument("protocol drives frequency nonpositive");
  ModelArtifacts m;
  const int ds = p.n_max_sys + 1, db = p.n_max_bath + 1;
  m.layout = DimensionLayout{ds, db};
  const OscOps o = oscillator_ops(p);
  Mat hs = o.p_s * o.p_s / (2.0 * p.mass_m) +
           0.5 * p.lambda_t(t) * (o.x_s * o.x_s);
  m.H_s = Operator(0.5 * (hs + hs.adjoint().eval()), Structure::hermitian);
  m.H_b = Operator(p.omega_bath * o.num_b, Structure::hermitian);
  Mat g_mat = p.g_1 * kron(o.p_s, o.q);
  m.G = Operator(0.5 * (g_mat + g_mat.adjoint().eval()), Structure::hermitian);
  m.H_uc = Operator(kron(m.H_s.mat, ident(db)) + kron(ident(ds), m.H_b.mat),
                    Structure::hermitian);
  return m;
}

OscillatorMappedReport oscillator_mapped_check(const OscillatorModelParams& p,
                                               double t) {
  ModelArtifacts m = build_oscillator_uncoupled(p, t);
  const int ds = p.n_max_sys + 1, db = p.n_max_bath + 1;
  const OscOps o = oscillator_ops(p);
  const Operator ep =
      kron_coupling_exponentials(o.p_s, o.q, p.g * p.g_1).first;
  const Mat total = conjugate(ep, m.H_uc).mat;

  const double lam = p.lambda_t(t);
  const double mass_renorm =
      p.mass_m / (1.0 + 2.0 * p.mass_m * p.omega_bath * p.g * p.g * p.g_1 * p.g_1);
  Mat analytic =
      kron(o.p_s * o.p_s / (2.0 * mass_renorm) + 0.5 * lam * (o.x_s * o.x_s),
           ident(db)) +
      kron(ident(ds), p.omega_bath * o.num_b +
                          0.5 * lam * p.g * p.g * p.g_1 * p.g_1 * (o.q * o.q)) +
      p.g * lam * p.g_1 * kron(o.x_s, o.q) -
      p.g * p.omega_bath * p.g_1 * kron(o.p_s, o.pi);

  OscillatorMappedReport rep;
  rep.window = std::min(16, std::min(p.n_max_sys, p.n_max_bath) - 4);
  rep.kinetic_expected = 1.0 / (2.0 * mass_renorm);
  const Mat diff = total - analytic;
  for (int a = 0; a <= rep.window; ++a)
    for (int i = 0; i <= rep.window; ++i)
      for (int b = 0; b <= rep.window; ++b)
        for (int j = 0; j <= rep.window; ++j)
          rep.max_deviation = std::max(
              rep.max_deviation, std::abs(diff(a * db + i, b * db + j)));

  // Kinetic-coefficient fit on the bath-vacuum projection of the coupled
  // Hamiltonian: elements (0,0),(1,1),(0,2) of c_p p^2 + c_x x^2 + const
  // determine c_p uniquely.
  auto heff = [&](int a, int b) { return total(a * db, b * db); };
  const double d1 = (heff(1, 1) - heff(0, 0)).real();
  const double d2 = (heff(0, 2) / std::sqrt(2.0)).real();
  rep.kinetic_coeff = (d1 - 2.0 * d2) / (2.0 * p.mass_m * p.omega_s0);
  return rep;
}

ProtocolModel spin_protocol_model(const SpinModelParams& p) {
  ProtocolModel m;
  m.name = "spin";
  ModelArtifacts art = build_spin_uncoupled(p, 0.0);
  m.layout = art.layout;
  m.g = p.g;
  m.G = art.G;
  m.exp_plus = herm_exp(m.G, cplx(0, p.g));
  m.exp_minus = herm_exp(m.G, cplx(0, -p.g));
  m.H_b = art.H_b;
  m.coupling_ops = {Operator(pauli_x(), Structure::hermitian),
                    Operator(pauli_z(), Structure::hermitian)};
  m.coeffs = [p](double t) {
    return std::vector<double>{p.lambda_x(t), p.lambda_z(t)};
  };
  m.h_s = [p](double t) {
    return Operator(spin_system_hamiltonian(p, t), Structure::hermitian);
  };
  const Mat hb = art.H_b.mat;
  const int db = 1 << p.n_bath;
  m.h_uc = [p, hb, db](double t) {
    return Operator(kron(spin_system_hamiltonian(p, t), ident(db)) +
                        kron(ident(2), hb),
                    Structure::hermitian);
  };
  m.h_total = [p](double t) {
    MappedFamily f = build_spin_total_analytic(p, t);
    return Operator(f.H_sys.mat + f.H_bath.mat + f.H_int.mat,
                    Structure::hermitian);
  };
  return m;
}

ProtocolModel oscillator_protocol_model(const OscillatorModelParams& p) {
  ProtocolModel m;
  m.name = "oscillator";
  ModelArtifacts art = build_oscillator_uncoupled(p, 0.0);
  m.layout = art.layout;
  m.g = p.g;
  m.G = art.G;
  m.H_b = art.H_b;
  const OscOps o = oscillator_ops(p);
  std::tie(m.exp_plus, m.exp_minus) =
      kron_coupling_exponentials(o.p_s, o.q, p.g * p.g_1);
  const Mat p2 = (o.p_s * o.p_s + (o.p_s * o.p_s).adjoint().eval()) * 0.5;
  const Mat x2 = (o.x_s * o.x_s + (o.x_s * o.x_s).adjoint().eval()) * 0.5;
  m.coupling_ops = {Operator(p2, Structure::hermitian),
                    Operator(x2, Structure::hermitian)};
  m.coeffs = [p](double t) {
    if (p.omega_s(t) <= 0.0)
      throw std::invalid_argument("protocol drives frequency nonpositive");
    return std::vector<double>{1.0 / (2.0 * p.mass_m), 0.5 * p.lambda_t(t)};
  };
  m.h_s = [p, p2, x2](double t) {
    if (p.omega_s(t) <= 0.0)
      throw std::invalid_argument("protocol drives frequency nonpositive");
    return Operator(p2 / (2.0 * p.mass_m) + 0.5 * p.lambda_t(t) * x2,
                    Structure::hermitian);
  };
  const Mat hb = art.H_b.mat;
  const int ds = p.n_max_sys + 1, db = p.n_max_bath + 1;
  auto h_s_fn = m.h_s;
  m.h_uc = [h_s_fn, hb, ds, db](double t) {
    return Operator(kron(h_s_fn(t).mat, ident(db)) + kron(ident(ds), hb),
                    Structure::hermitian);
  };
  auto h_uc_fn = m.h_uc;
  const Mat ep = m.exp_plus.mat;
  m.h_total = [h_uc_fn, ep](double t) {
    Mat out = ep * h_uc_fn(t).mat * ep.adjoint();
    return Operator(0.5 * (out + out.adjoint().eval()), Structure::hermitian);
  };
  return m;
}

}  // namespace qtmap
