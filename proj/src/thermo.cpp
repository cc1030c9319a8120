#include "qtmap/thermo.hpp"

#include <cmath>
#include <stdexcept>

namespace qtmap {

namespace {

using Vec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;

constexpr double kEigFloor = 1e-14;
constexpr double kNegTol = -1e-10;
constexpr double kTraceTol = 1e-8;

// Row-major stacking so that index (a,b) -> a*d + b matches the kernel
// superoperator layout.
Vec vec_rm(const Mat& s) {
  const Eigen::Index d = s.rows();
  Vec v(d * d);
  for (Eigen::Index a = 0; a < d; ++a)
    for (Eigen::Index b = 0; b < d; ++b) v(a * d + b) = s(a, b);
  return v;
}

Mat unvec_rm(const Vec& v, Eigen::Index d) {
  Mat s(d, d);
  for (Eigen::Index a = 0; a < d; ++a)
    for (Eigen::Index b = 0; b < d; ++b) s(a, b) = v(a * d + b);
  return s;
}

// -sum mu ln mu with the small-eigenvalue floor; rejects genuinely negative
// spectra.
double entropy_floor(const RVec& mu) {
  double s = 0;
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    if (mu(i) < kNegTol) throw std::runtime_error("positivity violated");
    if (mu(i) >= kEigFloor) s -= mu(i) * std::log(mu(i));
  }
  return s;
}

RVec density_spectrum(const Mat& rho) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (rho + rho.adjoint()));
  if (es.info() != Eigen::Success)
    throw std::runtime_error("eigendecomposition failed");
  return es.eigenvalues();
}

// Shared per-node bookkeeping: accumulators, entropy columns, delta_max.
struct Accumulator {
  double W = 0, W_w = 0, Q = 0, Q_w = 0;
  double E0 = 0, S_sum0 = 0;
  double delta_max_W = 0, delta_max_Q = 0;
  bool first = true;
  std::vector<ThermoPoint> rows;

  void push(double t, double E, double S_v, double D_rel, double F) {
    if (first) {
      E0 = E;
      S_sum0 = S_v + D_rel;
      first = false;
    }
    ThermoPoint p;
    p.t = t;
    p.W = W;
    p.W_w = W_w;
    p.Q = Q;
    p.Q_w = Q_w;
    p.E = E;
    p.S_v = S_v;
    p.D_rel = D_rel;
    p.Delta_S = (S_v + D_rel) - S_sum0;
    p.F = F;
    p.delta_W = std::abs(W - W_w);
    p.delta_Q = std::abs(Q - Q_w);
    p.first_law_residual = std::abs((E - E0) - (W + Q));
    delta_max_W = std::max(delta_max_W, p.delta_W);
    delta_max_Q = std::max(delta_max_Q, p.delta_Q);
    rows.push_back(p);
  }
};

// Product-state engine: with a composite Gibbs start the full state stays of
// the form exp_plus (sigma(t) x pi_b) exp_minus with sigma evolving under the
// bare system propagator, so every observable reduces to system-sized
// algebra after a one-time kernel build.
struct KernelEngine {
  const ProtocolModel& m;
  double beta;
  Eigen::Index ds, db;
  Mat pi_b;
  std::vector<Mat> T;  // dressed coupling kernels, system-sized
  Mat K;               // reduced-state superoperator, ds^2 x ds^2

  KernelEngine(const ProtocolModel& mm, double beta_in)
      : m(mm), beta(beta_in), ds(mm.layout.d_s), db(mm.layout.d_b) {
    pi_b = gibbs(m.H_b, beta).first.mat;
    const Operator ib(Mat::Identity(db, db), Structure::general);
    for (const Operator& a : m.coupling_ops) {
      Mat at = m.exp_minus.mat * kron(a, ib).mat * m.exp_plus.mat;
      Mat t(ds, ds);
      for (Eigen::Index aa = 0; aa < ds; ++aa)
        for (Eigen::Index bb = 0; bb < ds; ++bb) {
          cplx acc = 0;
          for (Eigen::Index i = 0; i < db; ++i)
            for (Eigen::Index l = 0; l < db; ++l)
              acc += at(aa * db + i, bb * db + l) * pi_b(l, i);
          t(aa, bb) = acc;
        }
      T.push_back(std::move(t));
    }
    build_reduction_superop();
  }

  void build_reduction_superop() {
    const Mat& ep = m.exp_plus.mat;
    Mat p = ep * kron(Operator(Mat::Identity(ds, ds), Structure::general),
                      Operator(pi_b, Structure::general))
                     .mat;
    // Pp[(a,c),(i,l)] = P[(a,i),(c,l)]; Ee[(i,l),(b,d)] = conj(Ep[(b,i),(d,l)])
    Mat pp(ds * ds, db * db), ee(db * db, ds * ds);
    for (Eigen::Index a = 0; a < ds; ++a)
      for (Eigen::Index c = 0; c < ds; ++c)
        for (Eigen::Index i = 0; i < db; ++i)
          for (Eigen::Index l = 0; l < db; ++l)
            pp(a * ds + c, i * db + l) = p(a * db + i, c * db + l);
    for (Eigen::Index b = 0; b < ds; ++b)
      for (Eigen::Index d = 0; d < ds; ++d)
        for (Eigen::Index i = 0; i < db; ++i)
          for (Eigen::Index l = 0; l < db; ++l)
            ee(i * db + l, b * ds + d) = std::conj(ep(b * db + i, d * db + l));
    Mat kp = pp * ee;  // Kp[(a,c),(b,d)]
    K.resize(ds * ds, ds * ds);
    for (Eigen::Index a = 0; a < ds; ++a)
      for (Eigen::Index b = 0; b < ds; ++b)
        for (Eigen::Index c = 0; c < ds; ++c)
          for (Eigen::Index d = 0; d < ds; ++d)
            K(a * ds + b, c * ds + d) = kp(a * ds + c, b * ds + d);
  }

  Mat reduce(const Mat& sigma) const { return unvec_rm(K * vec_rm(sigma), ds); }

  std::vector<double> dressed_traces(const Mat& sigma) const {
    std::vector<double> out;
    out.reserve(T.size());
    for (const Mat& t : T) out.push_back((t * sigma).trace().real());
    return out;
  }

  std::vector<double> bare_traces(const Mat& sigma) const {
    std::vector<double> out;
    out.reserve(m.coupling_ops.size());
    for (const Operator& a : m.coupling_ops)
      out.push_back((a.mat * sigma).trace().real());
    return out;
  }
};

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (size_t j = 0; j < a.size(); ++j) s += a[j] * b[j];
  return s;
}

struct NodeEntropy {
  double S_v = 0, D_rel = 0, F = 0;
};

NodeEntropy node_entropy(const KernelEngine& eng, const Mat& sigma,
                         const Operator& hs_t, double beta, bool quasi) {
  NodeEntropy out;
  const double ln_zs = log_partition(hs_t, beta);
  out.F = -ln_zs / beta;
  Mat pi_s = gibbs(hs_t, beta).first.mat;
  Mat omega_s = eng.reduce(pi_s);
  const double om_lnom = -entropy_floor(density_spectrum(omega_s));
  out.D_rel = om_lnom + beta * (omega_s * hs_t.mat).trace().real() + ln_zs;
  if (quasi) {
    out.S_v = -om_lnom;
  } else {
    Mat rho_s = eng.reduce(sigma);
    out.S_v = entropy_floor(density_spectrum(rho_s));
  }
  return out;
}

ThermoSeries run_kernel_path(const ProtocolModel& m, const ThermoConfig& cfg) {
  KernelEngine eng(m, cfg.beta);
  const double dt = cfg.tau_prime / cfg.n_steps;
  auto pinned = [&](double t) { return gibbs(m.h_s(t), cfg.beta).first.mat; };

  Mat sigma = pinned(0.0);
  Accumulator acc;

  std::vector<double> c_prev = m.coeffs(0.0);
  std::vector<double> tau_prev = eng.dressed_traces(sigma);
  std::vector<double> bare_prev = eng.bare_traces(sigma);

  {
    NodeEntropy ne =
        node_entropy(eng, sigma, m.h_s(0.0), cfg.beta, cfg.quasi_static);
    acc.push(0.0, dot(c_prev, tau_prev), ne.S_v, ne.D_rel, ne.F);
  }

  for (int i = 0; i < cfg.n_steps; ++i) {
    const double t1 = (i + 1) * dt;
    if (cfg.quasi_static) {
      sigma = pinned(t1);
    } else {
      Operator us = herm_exp(m.h_s((i + 0.5) * dt), cplx(0.0, -dt));
      sigma = us.mat * sigma * us.mat.adjoint();
    }
    if (std::abs(sigma.trace() - cplx(1.0, 0.0)) > kTraceTol)
      throw std::runtime_error("propagation unstable");

    std::vector<double> c = m.coeffs(t1);
    std::vector<double> tau = eng.dressed_traces(sigma);
    std::vector<double> bare = eng.bare_traces(sigma);

    double dW = 0, dWw = 0, dQw = 0;
    for (size_t j = 0; j < c.size(); ++j) {
      const double dc = c[j] - c_prev[j];
      const double cb = 0.5 * (c[j] + c_prev[j]);
      dW += dc * 0.5 * (bare[j] + bare_prev[j]);
      dWw += dc * 0.5 * (tau[j] + tau_prev[j]);
      dQw += cb * (tau[j] - tau_prev[j]);
    }
    acc.W += dW;
    acc.W_w += dWw;
    acc.Q_w += dQw;
    acc.Q += dQw + dWw - dW;

    NodeEntropy ne =
        node_entropy(eng, sigma, m.h_s(t1), cfg.beta, cfg.quasi_static);
    acc.push(t1, dot(c, tau), ne.S_v, ne.D_rel, ne.F);
    c_prev = std::move(c);
    tau_prev = std::move(tau);
    bare_prev = std::move(bare);
  }

  ThermoSeries out;
  out.rows = std::move(acc.rows);
  out.delta_max_W = acc.delta_max_W;
  out.delta_max_Q = acc.delta_max_Q;
  return out;
}

// Literal full-space path for custom initial states.
ThermoSeries run_dense_path(const ProtocolModel& m, const ThermoConfig& cfg) {
  const Eigen::Index d = m.layout.total();
  Mat rho = cfg.initial_state->mat;
  if (rho.rows() != d || rho.cols() != d)
    throw std::invalid_argument("initial state dimension mismatch");
  if (herm_residual(rho) > kHermTol)
    throw std::invalid_argument("hermiticity violated");
  if (std::abs(rho.trace() - cplx(1.0, 0.0)) > kTraceTol)
    throw std::invalid_argument("initial state trace must be one");
  // Negativity can hide in sectors the reduced-state checks never see.
  entropy_floor(density_spectrum(rho));

  const double dt = cfg.tau_prime / cfg.n_steps;
  const Operator ib(Mat::Identity(m.layout.d_b, m.layout.d_b),
                    Structure::general);
  auto embed_sys = [&](const Mat& hs) {
    return kron(Operator(hs, Structure::general), ib).mat;
  };
  auto reduce_sys = [&](const Mat& full) {
    return partial_trace(Operator(full, Structure::general), m.layout,
                         Keep::system)
        .mat;
  };

  Accumulator acc;

  auto node_push = [&](double t, const Mat& rho_now) {
    Operator hs_t = m.h_s(t);
    Mat rho_s = reduce_sys(rho_now);
    const double energy = (hs_t.mat * rho_s).trace().real();
    const double ln_zs = log_partition(hs_t, cfg.beta);
    Mat omega_s = reduce_sys(gibbs(m.h_total(t), cfg.beta).first.mat);
    const double om_lnom = -entropy_floor(density_spectrum(omega_s));
    const double d_rel =
        om_lnom + cfg.beta * (omega_s * hs_t.mat).trace().real() + ln_zs;
    const double s_v = entropy_floor(density_spectrum(rho_s));
    acc.push(t, energy, s_v, d_rel, -ln_zs / cfg.beta);
  };

  node_push(0.0, rho);
  Mat h_prev = m.h_total(0.0).mat;
  Mat hs_prev = m.h_s(0.0).mat;
  Mat rhos_prev = reduce_sys(rho);

  for (int i = 0; i < cfg.n_steps; ++i) {
    const double t1 = (i + 1) * dt;
    Mat rho_old = rho;
    Operator u = herm_exp(m.h_total((i + 0.5) * dt), cplx(0.0, -dt));
    rho = u.mat * rho * u.mat.adjoint();
    if (std::abs(rho.trace() - cplx(1.0, 0.0)) > kTraceTol)
      throw std::runtime_error("propagation unstable");

    Mat h_now = m.h_total(t1).mat;
    Mat hs_now = m.h_s(t1).mat;
    Mat rhos_now = reduce_sys(rho);

    Mat rho_avg = 0.5 * (rho + rho_old);
    Mat d_h = h_now - h_prev;
    Mat d_hs_emb = embed_sys(hs_now) - embed_sys(hs_prev);
    Mat hs_bar = 0.5 * (hs_now + hs_prev);

    const double dW = (rho_avg * d_h).trace().real();
    const double dWw =
        (0.5 * (rhos_now + rhos_prev) * (hs_now - hs_prev)).trace().real();
    const double dQw = (hs_bar * (rhos_now - rhos_prev)).trace().real();
    const double dQ = dQw + (rho_avg * (d_hs_emb - d_h)).trace().real();

    acc.W += dW;
    acc.W_w += dWw;
    acc.Q_w += dQw;
    acc.Q += dQ;

    node_push(t1, rho);
    h_prev = std::move(h_now);
    hs_prev = std::move(hs_now);
    rhos_prev = std::move(rhos_now);
  }

  ThermoSeries out;
  out.rows = std::move(acc.rows);
  out.delta_max_W = acc.delta_max_W;
  out.delta_max_Q = acc.delta_max_Q;
  return out;
}

}  // namespace

std::pair<Operator, double> gibbs(const Operator& h, double beta) {
  if (herm_residual(h.mat) > kHermTol)
    throw std::invalid_argument("hermiticity violated");
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (h.mat + h.mat.adjoint()));
  if (es.info() != Eigen::Success)
    throw std::runtime_error("eigendecomposition failed");
  const Eigen::VectorXd e = es.eigenvalues();
  const double e_min = e.minCoeff();
  Eigen::VectorXd w = (-beta * (e.array() - e_min)).exp();
  const double norm = w.sum();
  Mat rho = es.eigenvectors() * (w / norm).asDiagonal() *
            es.eigenvectors().adjoint();
  rho = 0.5 * (rho + rho.adjoint());
  const double z = norm * std::exp(-beta * e_min);
  return {Operator(std::move(rho), Structure::hermitian), z};
}

double log_partition(const Operator& h, double beta) {
  Eigen::SelfAdjointEigenSolver<Mat> es;
  es.compute(0.5 * (h.mat + h.mat.adjoint()), Eigen::EigenvaluesOnly);
  const Eigen::VectorXd e = es.eigenvalues();
  const double m = (-beta * e.array()).maxCoeff();
  return m + std::log(((-beta * e.array() - m).exp()).sum());
}

ThermoSeries run_protocol(const ProtocolModel& m, const ThermoConfig& cfg) {
  if (cfg.beta <= 0) throw std::invalid_argument("beta must be positive");
  if (cfg.n_steps < 2) throw std::invalid_argument("n_steps must be >= 2");
  if (cfg.tau_prime <= 0)
    throw std::invalid_argument("protocol horizon must be positive");
  if (cfg.initial_state.has_value() && !cfg.quasi_static)
    return run_dense_path(m, cfg);
  return run_kernel_path(m, cfg);
}

EntropyTerms entropy_terms(const ProtocolModel& m, const ThermoConfig& cfg,
                           double t) {
  EntropyTerms out;
  if (t <= 0) {
    KernelEngine eng(m, cfg.beta);
    Mat sigma = gibbs(m.h_s(0.0), cfg.beta).first.mat;
    NodeEntropy ne =
        node_entropy(eng, sigma, m.h_s(0.0), cfg.beta, cfg.quasi_static);
    out.S_v = ne.S_v;
    out.D_rel = ne.D_rel;
    out.Delta_S = 0.0;
    return out;
  }
  ThermoConfig sub = cfg;
  sub.tau_prime = t;
  ThermoSeries series = run_protocol(m, sub);
  const ThermoPoint& last = series.rows.back();
  out.S_v = last.S_v;
  out.D_rel = last.D_rel;
  out.Delta_S = last.Delta_S;
  return out;
}

double free_energy(const ProtocolModel& m, double beta, double t) {
  return -log_partition(m.h_s(t), beta) / beta;
}

double delta_f_identity_check(const ProtocolModel& m, ThermoConfig cfg) {
  cfg.quasi_static = true;
  cfg.initial_state.reset();
  ThermoSeries series = run_protocol(m, cfg);
  const ThermoPoint& a = series.rows.front();
  const ThermoPoint& b = series.rows.back();
  const double d_f = b.F - a.F;
  const double d_e = b.E - a.E;
  // Quasi-static entropy change from the path heat: dS = beta dQ.
  const double t_ds = b.Q;
  return std::abs(d_f - (d_e - t_ds));
}

}  // namespace qtmap
