#include "qtmap/fluctuation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace qtmap {

namespace {

constexpr double kProbClip = -1e-12;
constexpr double kNormTol = 1e-10;
constexpr double kBinFloor = 1e-12;   // bins below this are skipped in ratios
constexpr double kSupportFloor = 1e-10;  // unmatched mass above this flags

WorkDistribution trivial_distribution() {
  WorkDistribution out;
  out.entries = {{0.0, 1.0}};
  out.merge_tol = 0.0;
  return out;
}

// Gibbs weights of a spectrum, shifted exponent.
Eigen::VectorXd gibbs_weights(const Eigen::VectorXd& e, double beta) {
  const double e_min = e.minCoeff();
  Eigen::VectorXd w = (-beta * (e.array() - e_min)).exp();
  return w / w.sum();
}

struct EigPair {
  Eigen::VectorXd e;
  Mat v;
};

EigPair eigh_of(const Mat& h) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (h + h.adjoint()));
  if (es.info() != Eigen::Success)
    throw std::runtime_error("eigendecomposition failed");
  return {es.eigenvalues(), es.eigenvectors()};
}

}  // namespace

double WorkDistribution::total() const {
  double s = 0;
  for (const auto& [w, p] : entries) s += p;
  return s;
}

double WorkDistribution::mean() const {
  double s = 0;
  for (const auto& [w, p] : entries) s += w * p;
  return s;
}

WorkDistribution finalize_distribution(
    std::vector<std::pair<double, double>> raw) {
  if (raw.empty()) throw std::invalid_argument("empty work distribution");
  double lo = raw.front().first, hi = raw.front().first, sum = 0;
  for (auto& [w, p] : raw) {
    if (p < kProbClip) throw std::runtime_error("negative probability");
    if (p < 0) p = 0;
    lo = std::min(lo, w);
    hi = std::max(hi, w);
    sum += p;
  }
  if (std::abs(sum - 1.0) > kNormTol)
    throw std::runtime_error("distribution not normalized");

  WorkDistribution out;
  out.merge_tol = 1e-9 * (hi - lo);
  std::sort(raw.begin(), raw.end());

  double bin_anchor = 0, bin_wp = 0, bin_p = 0;
  bool open = false;
  auto flush = [&]() {
    if (!open) return;
    const double w = bin_p > 0 ? bin_wp / bin_p : bin_anchor;
    if (bin_p > 0) out.entries.emplace_back(w, bin_p);
    open = false;
  };
  for (const auto& [w, p] : raw) {
    if (!open || w - bin_anchor > out.merge_tol) {
      flush();
      open = true;
      bin_anchor = w;
      bin_wp = 0;
      bin_p = 0;
    }
    bin_wp += w * p;
    bin_p += p;
  }
  flush();
  return out;
}

WorkDistribution tpm_distribution(const Operator& h_initial,
                                  const Operator& h_final,
                                  const Operator& u_prop, double beta) {
  if (herm_residual(h_initial.mat) > kHermTol ||
      herm_residual(h_final.mat) > kHermTol)
    throw std::invalid_argument("hermiticity violated");
  if (unitary_residual(u_prop.mat) > kUnitaryTol)
    throw std::invalid_argument("unitarity violated");

  EigPair ini = eigh_of(h_initial.mat);
  EigPair fin = eigh_of(h_final.mat);
  Eigen::VectorXd q = gibbs_weights(ini.e, beta);
  Mat m = fin.v.adjoint() * (u_prop.mat * ini.v);

  std::vector<std::pair<double, double>> raw;
  raw.reserve(static_cast<size_t>(m.size()));
  for (Eigen::Index n = 0; n < m.cols(); ++n)
    for (Eigen::Index mm = 0; mm < m.rows(); ++mm)
      raw.emplace_back(fin.e(mm) - ini.e(n), q(n) * std::norm(m(mm, n)));
  return finalize_distribution(std::move(raw));
}

WorkDistribution strong_coupling_distribution(const ProtocolModel& m,
                                              double tau_prime, int n_steps,
                                              double beta, Direction dir) {
  if (tau_prime == 0) return trivial_distribution();
  if (m.name == "oscillator") {
    // In the mapped frame the propagator factorizes exactly and the bath
    // factor is diagonal in the measurement basis, so the distribution
    // reduces to the bare-system TPM.
    PropagatorResult us = propagate(m.h_s, TimeGrid{0.0, tau_prime, n_steps});
    Operator h0 = m.h_s(0.0);
    Operator ht = m.h_s(tau_prime);
    if (dir == Direction::forward)
      return tpm_distribution(h0, ht, us.U, beta);
    Operator u_rev(us.U.mat.adjoint(), Structure::unitary);
    return tpm_distribution(ht, h0, u_rev, beta);
  }
  PropagatorResult full = propagate(m.h_total, TimeGrid{0.0, tau_prime, n_steps});
  Operator h0 = m.h_total(0.0);
  Operator ht = m.h_total(tau_prime);
  if (dir == Direction::forward)
    return tpm_distribution(h0, ht, full.U, beta);
  Operator u_rev(full.U.mat.adjoint(), Structure::unitary);
  return tpm_distribution(ht, h0, u_rev, beta);
}

WorkDistribution uncoupled_tpm(const ProtocolModel& m, double tau_prime,
                               int n_steps, double beta, Direction dir) {
  if (tau_prime == 0) return trivial_distribution();
  PropagatorResult uc = propagate(m.h_uc, TimeGrid{0.0, tau_prime, n_steps});
  Operator h0 = m.h_uc(0.0);
  Operator ht = m.h_uc(tau_prime);
  if (dir == Direction::forward) return tpm_distribution(h0, ht, uc.U, beta);
  Operator u_rev(uc.U.mat.adjoint(), Structure::unitary);
  return tpm_distribution(ht, h0, u_rev, beta);
}

double total_variation(const WorkDistribution& a, const WorkDistribution& b) {
  const double tol = std::max({a.merge_tol, b.merge_tol, 1e-12});
  size_t i = 0, j = 0;
  double tv = 0;
  while (i < a.entries.size() && j < b.entries.size()) {
    const auto& [wa, pa] = a.entries[i];
    const auto& [wb, pb] = b.entries[j];
    if (std::abs(wa - wb) <= tol) {
      tv += std::abs(pa - pb);
      ++i;
      ++j;
    } else if (wa < wb) {
      tv += pa;
      ++i;
    } else {
      tv += pb;
      ++j;
    }
  }
  for (; i < a.entries.size(); ++i) tv += a.entries[i].second;
  for (; j < b.entries.size(); ++j) tv += b.entries[j].second;
  return 0.5 * tv;
}

CharacteristicSample characteristic_function(const WorkDistribution& dist,
                                             cplx u) {
  cplx theta = 0;
  for (const auto& [w, p] : dist.entries) {
    if (p <= 0) continue;
    const double mag = std::log(p) - u.imag() * w;
    const double phase = u.real() * w;
    theta += std::exp(mag) * cplx(std::cos(phase), std::sin(phase));
  }
  return {u, theta};
}

CharacteristicSample direct_theta(const ProtocolModel& m, double tau_prime,
                                  int n_steps, double beta, cplx u) {
  PropagatorResult full = propagate(m.h_total, TimeGrid{0.0, tau_prime, n_steps});
  EigPair ini = eigh_of(m.h_total(0.0).mat);
  EigPair fin = eigh_of(m.h_total(tau_prime).mat);
  const double e0_min = ini.e.minCoeff();

  const cplx iu(0.0, 1.0);
  Eigen::VectorXcd phase_f(fin.e.size());
  for (Eigen::Index k = 0; k < fin.e.size(); ++k)
    phase_f(k) = std::exp(iu * u * fin.e(k));
  Eigen::VectorXcd boltz_i(ini.e.size());
  for (Eigen::Index k = 0; k < ini.e.size(); ++k)
    boltz_i(k) = std::exp(-(beta + iu * u) * (ini.e(k) - e0_min));

  Mat a = fin.v * phase_f.asDiagonal() * fin.v.adjoint();
  Mat b = ini.v * boltz_i.asDiagonal() * ini.v.adjoint();
  const double z0 = (-beta * (ini.e.array() - e0_min)).exp().sum();
  const cplx theta = (full.U.mat.adjoint() * a * full.U.mat * b).trace() *
                     std::exp(-iu * u * e0_min) / z0;
  return {u, theta};
}

CrooksReport crooks_report(const WorkDistribution& fwd,
                           const WorkDistribution& rev, double zs_ratio,
                           double beta) {
  std::vector<std::pair<double, double>> refl;
  refl.reserve(rev.entries.size());
  for (const auto& [w, p] : rev.entries) refl.emplace_back(-w, p);
  std::sort(refl.begin(), refl.end());

  const double tol = std::max({fwd.merge_tol, rev.merge_tol, 1e-12});
  const double ln_ratio = std::log(zs_ratio);

  CrooksReport out;
  size_t i = 0, j = 0;
  auto note_unmatched = [&](double p) {
    if (p > kSupportFloor) out.support_mismatch = true;
  };
  while (i < fwd.entries.size() && j < refl.size()) {
    const auto& [wf, pf] = fwd.entries[i];
    const auto& [wr, pr] = refl[j];
    if (std::abs(wf - wr) <= tol) {
      if (pf > kBinFloor && pr > kBinFloor) {
        CrooksBin bin;
        bin.w = wf;
        bin.lhs = pf / pr;
        bin.rhs = zs_ratio * std::exp(beta * wf);
        bin.rel_err = std::abs(
            std::expm1(std::log(pf) - std::log(pr) - ln_ratio - beta * wf));
        out.max_rel_err = std::max(out.max_rel_err, bin.rel_err);
        out.bins.push_back(bin);
      }
      // Matched bins with one side below the ratio floor carry no usable
      // ratio; only w values absent from one side count as mismatch.
      ++i;
      ++j;
    } else if (wf < wr) {
      note_unmatched(pf);
      ++i;
    } else {
      note_unmatched(pr);
      ++j;
    }
  }
  for (; i < fwd.entries.size(); ++i) note_unmatched(fwd.entries[i].second);
  for (; j < refl.size(); ++j) note_unmatched(refl[j].second);
  return out;
}

double jarzynski(const WorkDistribution& dist, double beta) {
  double s = 0;
  for (const auto& [w, p] : dist.entries) {
    if (p <= 0) continue;
    s += std::exp(std::log(p) - beta * w);
  }
  return s;
}

NaiveWeakStats naive_weak_statistics(const ProtocolModel& m, double tau_prime,
                                     int n_steps, double beta) {
  const Eigen::Index ds = m.layout.d_s;
  const Eigen::Index db = m.layout.d_b;
  const Eigen::Index d = ds * db;

  EigPair bath = eigh_of(m.H_b.mat);
  EigPair sys0 = eigh_of(m.h_s(0.0).mat);
  const Mat p0 = kron(Operator(sys0.v, Structure::general),
                      Operator(bath.v, Structure::general))
                     .mat;

  // Bare composite energies by Kronecker sum, matching p0 column order.
  Eigen::VectorXd e0(d);
  for (Eigen::Index a = 0; a < ds; ++a)
    for (Eigen::Index b = 0; b < db; ++b) e0(a * db + b) = sys0.e(a) + bath.e(b);

  auto logsumexp = [](const Eigen::VectorXd& x) {
    const double mx = x.maxCoeff();
    if (!std::isfinite(mx)) return mx;
    return mx + std::log((x.array() - mx).exp().sum());
  };

  // Dephased log-weights of the coupled Gibbs state in the bare basis:
  // q_n = sum_k |<n|e^{igG}|k>|^2 e^{-beta e0_k} / Z_uc, kept in log form so
  // deep Boltzmann tails survive (the oscillator runs at beta ~ 4).
  const Mat amp = p0.adjoint() * (m.exp_plus.mat * p0);
  const double ln_zuc0 = logsumexp(-beta * e0);
  Eigen::VectorXd lnq(d);
  for (Eigen::Index n = 0; n < d; ++n) {
    Eigen::VectorXd terms(d);
    for (Eigen::Index k = 0; k < d; ++k) {
      const double a2 = std::norm(amp(n, k));
      terms(k) = a2 > 0 ? std::log(a2) - beta * e0(k)
                        : -std::numeric_limits<double>::infinity();
    }
    lnq(n) = logsumexp(terms) - ln_zuc0;
  }

  const double ln_zs0 = log_partition(m.h_s(0.0), beta);

  // Coarse evaluation grid: both routes need full-dimension matmuls.
  std::vector<int> eval_idx;
  for (int k = 1; k <= 8; ++k) {
    int idx = static_cast<int>(
        std::llround(static_cast<double>(k) * n_steps / 8.0));
    idx = std::max(1, std::min(n_steps, idx));
    if (eval_idx.empty() || eval_idx.back() != idx) eval_idx.push_back(idx);
  }

  NaiveWeakStats stats;
  stats.scalar_deviation.emplace_back(0.0, 0.0);
  stats.tpm_deviation.emplace_back(0.0, 0.0);

  Mat us_total = Mat::Identity(ds, ds);
  const double dt = tau_prime / n_steps;
  size_t next_eval = 0;

  for (int i = 0; i < n_steps; ++i) {
    const double t1 = (i + 1) * dt;
    Operator us = herm_exp(m.h_s((i + 0.5) * dt), cplx(0.0, -dt));
    us_total = us.mat * us_total;
    if (next_eval >= eval_idx.size() || eval_idx[next_eval] != i + 1) continue;
    ++next_eval;

    const double ln_zrat = log_partition(m.h_s(t1), beta) - ln_zs0;
    EigPair sys_t = eigh_of(m.h_s(t1).mat);
    Eigen::VectorXcd bath_phase(bath.e.size());
    for (Eigen::Index k = 0; k < bath.e.size(); ++k)
      bath_phase(k) = std::exp(cplx(0.0, -bath.e(k) * t1));
    Mat ub = bath.v * bath_phase.asDiagonal() * bath.v.adjoint();
    Mat u_full = m.exp_plus.mat *
                 kron(Operator(us_total, Structure::general),
                      Operator(ub, Structure::general))
                     .mat *
                 m.exp_minus.mat;
    Mat pt = kron(Operator(sys_t.v, Structure::general),
                  Operator(bath.v, Structure::general))
                 .mat;
    Eigen::VectorXd et(d);
    for (Eigen::Index a = 0; a < ds; ++a)
      for (Eigen::Index b = 0; b < db; ++b)
        et(a * db + b) = sys_t.e(a) + bath.e(b);

    // Scalar route: <e^{-beta w_w}> = sum_n q_n e^{beta e0_n}
    // <n|U^dag e^{-beta H_uc(t)} U|n> with the exponential assembled in
    // position space, no distribution in between.
    const Mat y = u_full * p0;
    const Mat a_exp = pt * (-beta * et.array()).exp().matrix().asDiagonal() *
                      pt.adjoint();
    const Mat b = a_exp * y;
    double val_scalar = 0;
    for (Eigen::Index n = 0; n < d; ++n) {
      const double diag = (y.col(n).dot(b.col(n))).real();
      if (diag <= 0 || !std::isfinite(lnq(n))) continue;
      val_scalar += std::exp(lnq(n) + beta * e0(n) + std::log(diag));
    }
    const double dev_scalar = std::abs(val_scalar - std::exp(ln_zrat));
    stats.scalar_deviation.emplace_back(t1, dev_scalar);
    stats.delta_max_scalar = std::max(stats.delta_max_scalar, dev_scalar);

    // TPM route: explicit transition probabilities, log-safe pairing.
    const Mat mm = pt.adjoint() * y;
    double val_tpm = 0;
    for (Eigen::Index n = 0; n < d; ++n) {
      if (!std::isfinite(lnq(n))) continue;
      for (Eigen::Index mrow = 0; mrow < d; ++mrow) {
        const double pr = std::norm(mm(mrow, n));
        if (pr == 0) continue;
        val_tpm += std::exp(lnq(n) + beta * (e0(n) - et(mrow))) * pr;
      }
    }
    const double dev_tpm = std::abs(val_tpm - std::exp(ln_zrat));
    stats.tpm_deviation.emplace_back(t1, dev_tpm);
    stats.delta_max_tpm = std::max(stats.delta_max_tpm, dev_tpm);
  }
  return stats;
}

}  // namespace qtmap
