// Acceptance gate: one PASS/FAIL line per library-level guarantee, pinned
// tolerances, nonzero exit on any failure. Failures print enough numbers to
// see what the measured behavior actually is.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "qtmap/evolution.hpp"
#include "qtmap/fluctuation.hpp"
#include "qtmap/models.hpp"
#include "qtmap/operators.hpp"
#include "qtmap/thermo.hpp"

using namespace qtmap;

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

ProtocolModel spin_model(int n_bath, double g) {
  SpinModelParams p;
  p.n_bath = n_bath;
  p.g = g;
  return spin_protocol_model(p);
}

double zs_ratio(const ProtocolModel& m, double tau_prime, double beta) {
  return std::exp(log_partition(m.h_s(tau_prime), beta) -
                  log_partition(m.h_s(0.0), beta));
}

// --- criteria ---------------------------------------------------------------

bool mapping_identity(std::string& detail) {
  double worst = 0;
  for (int n_bath = 1; n_bath <= 6; ++n_bath)
    for (double g : {0.1, 0.5, 1.0}) {
      SpinModelParams p;
      p.n_bath = n_bath;
      p.g = g;
      const Operator rot =
          herm_exp(build_spin_uncoupled(p, 0.0).G, cplx(0.0, g));
      for (double t : {0.0, 1.0, 2.0}) {
        const ModelArtifacts art = build_spin_full(p, t);
        const double r =
            max_abs(art.H_total.mat - conjugate(rot, art.H_uc).mat);
        if (r > worst) worst = r;
      }
    }
  detail = "max residual " + num(worst) + " (tol 1e-12)";
  return worst <= 1e-12;
}

bool rotation_identity(std::string& detail) {
  double worst = 0;
  for (double g : {0.3, 0.7, M_PI / 2})
    for (int n_bath : {1, 2, 3})
      worst = std::max(worst, rotation_identity_residual(g, n_bath));
  detail = "max residual " + num(worst) + " (tol 1e-11)";
  return worst <= 1e-11;
}

bool three_stage(std::string& detail) {
  const ProtocolModel m = spin_model(4, 0.5);
  const double r1 = three_stage_decompose(m, 2.0, 4096).residual;
  const double r2 = three_stage_decompose(m, 2.0, 8192).residual;
  const double ratio = r1 / r2;
  detail = "residual " + num(r1) + " at n=4096 (tol 1e-6), " + num(r2) +
           " at n=8192, halving ratio " + num(ratio) + " (required [3.5,4.5])";
  if (r1 <= 1e-6 && !(ratio >= 3.5 && ratio <= 4.5))
    detail +=
        "; the decomposition holds exactly per step, so the residual sits at "
        "the rounding floor at any stepping and no dt^2 term exists to halve";
  return r1 <= 1e-6 && ratio >= 3.5 && ratio <= 4.5;
}

bool partition_factorization(std::string& detail) {
  double worst = 0;
  for (double g : {0.0, 0.5, 1.0}) {
    const ProtocolModel m = spin_model(6, g);
    const double ln_zb = log_partition(m.H_b, 1.0);
    for (int i = 0; i <= 8; ++i) {
      const double t = 2.0 * i / 8;
      const double r = std::abs(std::expm1(log_partition(m.h_total(t), 1.0) -
                                           log_partition(m.h_s(t), 1.0) -
                                           ln_zb));
      if (r > worst) worst = r;
    }
  }
  detail = "max |Z(t)/(Z_s Z_b) - 1| = " + num(worst) + " (tol 1e-10)";
  return worst <= 1e-10;
}

bool first_law(std::string& detail) {
  const ProtocolModel m = spin_model(6, 0.5);
  ThermoConfig tc;
  tc.n_steps = 4096;
  const ThermoSeries s1 = run_protocol(m, tc);
  double worst = 0;
  for (const ThermoPoint& r : s1.rows)
    worst = std::max(worst, std::abs(r.first_law_residual));
  tc.n_steps = 8192;
  const double w2 = run_protocol(m, tc).rows.back().W;
  tc.n_steps = 32768;
  const double w_ref = run_protocol(m, tc).rows.back().W;
  const double ratio = (s1.rows.back().W - w_ref) / (w2 - w_ref);
  detail = "max |dE - W - Q| = " + num(worst) +
           " (tol 1e-6); step-halving ratio on W " + num(ratio) +
           " (required [3.5,4.5])";
  return worst <= 1e-6 && ratio >= 3.5 && ratio <= 4.5;
}

bool work_identity(std::string& detail) {
  std::vector<double> vals;
  double worst = 0, ratio = 0;
  for (double g : {0.1, 0.5, 1.0}) {
    const ProtocolModel m = spin_model(6, g);
    const auto d =
        strong_coupling_distribution(m, 2.0, 512, 1.0, Direction::forward);
    ratio = zs_ratio(m, 2.0, 1.0);
    vals.push_back(jarzynski(d, 1.0));
    worst = std::max(worst, std::abs(vals.back() - ratio) / ratio);
  }
  double spread = 0;
  for (double v : vals)
    for (double u : vals) spread = std::max(spread, std::abs(v - u) / ratio);
  detail = "max rel residual " + num(worst) + ", spread across couplings " +
           num(spread) + " (tol 1e-5 each)";
  return worst <= 1e-5 && spread <= 1e-5;
}

bool detailed_ratio(std::string& detail) {
  const ProtocolModel m = spin_model(4, 0.5);
  const auto fwd =
      strong_coupling_distribution(m, 2.0, 512, 1.0, Direction::forward);
  const auto rev =
      strong_coupling_distribution(m, 2.0, 512, 1.0, Direction::reverse);
  const CrooksReport rep = crooks_report(fwd, rev, zs_ratio(m, 2.0, 1.0), 1.0);
  detail = "max matched-bin rel err " + num(rep.max_rel_err) +
           " (tol 1e-5), support mismatch " +
           (rep.support_mismatch ? "yes" : "no");
  return rep.max_rel_err <= 1e-5 && !rep.support_mismatch;
}

bool weak_reduction(std::string& detail) {
  const ProtocolModel m6 = spin_model(6, 0.0);
  ThermoConfig tc;
  tc.n_steps = 1024;
  const ThermoSeries s = run_protocol(m6, tc);
  double worst = 0;
  for (const ThermoPoint& r : s.rows) {
    worst = std::max(worst, std::abs(r.delta_W));
    worst = std::max(worst, std::abs(r.delta_Q));
    worst = std::max(worst, std::abs(r.D_rel));
  }
  const ProtocolModel m4 = spin_model(4, 0.0);
  const double tv = total_variation(
      strong_coupling_distribution(m4, 2.0, 256, 1.0, Direction::forward),
      uncoupled_tpm(m4, 2.0, 256, 1.0, Direction::forward));
  detail = "max accumulator gap " + num(worst) + ", distribution distance " +
           num(tv) + " (tol 1e-10 each)";
  return worst <= 1e-10 && tv <= 1e-10;
}

bool coupling_monotonicity(std::string& detail) {
  const std::vector<double> gs = {0.0, 0.25, 0.5, 0.75, 1.0};
  std::vector<double> dw, dq;
  for (double g : gs) {
    ThermoConfig tc;
    tc.n_steps = 1024;
    const ThermoSeries s = run_protocol(spin_model(6, g), tc);
    dw.push_back(s.delta_max_W);
    dq.push_back(s.delta_max_Q);
  }
  bool ok = dw.front() <= 1e-12 && dq.front() <= 1e-12;
  for (size_t i = 1; i < gs.size(); ++i)
    ok = ok && dw[i] > dw[i - 1] && dq[i] > dq[i - 1];
  detail = "delta_max_W over g in {0,0.25,0.5,0.75,1}: ";
  for (size_t i = 0; i < dw.size(); ++i)
    detail += (i ? ", " : "") + num(dw[i]);
  if (!ok)
    detail += "; not strictly increasing: the deviation peaks near g=0.75 "
              "and falls toward g=1";
  return ok;
}

bool curvature_localization(std::string& detail) {
  const int pts = 31;
  std::vector<double> wb(pts), dq(pts);
  for (int i = 0; i < pts; ++i) {
    wb[i] = 0.2 + (2.0 - 0.2) * i / (pts - 1);
    SpinModelParams p;
    p.g = 0.1;
    p.omega_b = wb[i];
    ThermoConfig tc;
    tc.n_steps = 512;
    dq[i] = run_protocol(spin_protocol_model(p), tc).delta_max_Q;
  }
  double best = -1, best_w = 0;
  for (int i = 1; i + 1 < pts; ++i) {
    const double c = std::abs(dq[i + 1] - 2.0 * dq[i] + dq[i - 1]);
    if (c > best) {
      best = c;
      best_w = wb[i];
    }
  }
  const bool ok = best_w >= 0.8 && best_w <= 1.2;
  detail = "max curvature of delta_max_Q at omega_b = " + num(best_w) +
           " (required within [0.8,1.2])";
  if (!ok)
    detail += "; the curve is smooth and decreasing with its inflection near "
              "omega_b = 0.9, so the largest second difference sits at the "
              "sweep edge";
  return ok;
}

bool naive_growth(std::string& detail) {
  SpinModelParams sp;  // matched-frequency driving at moderate coupling
  sp.lambda_z0 = 1.0;
  sp.g = 0.3;
  const ProtocolModel ms = spin_protocol_model(sp);
  const double s_short =
      naive_weak_statistics(ms, 0.2, 512, 1.0).scalar_deviation.back().second;
  const double s_long =
      naive_weak_statistics(ms, 2.0, 512, 1.0).scalar_deviation.back().second;
  const double js =
      std::abs(jarzynski(strong_coupling_distribution(ms, 2.0, 512, 1.0,
                                                      Direction::forward),
                         1.0) -
               zs_ratio(ms, 2.0, 1.0)) /
      zs_ratio(ms, 2.0, 1.0);

  OscillatorModelParams op;  // low-temperature oscillator pair
  const double beta = 4.08;
  const ProtocolModel mo = oscillator_protocol_model(op);
  const double o_short =
      naive_weak_statistics(mo, 0.2, 128, beta).scalar_deviation.back().second;
  const double o_long =
      naive_weak_statistics(mo, 2.0, 128, beta).scalar_deviation.back().second;
  const double jo =
      std::abs(jarzynski(strong_coupling_distribution(mo, 2.0, 512, beta,
                                                      Direction::forward),
                         beta) -
               zs_ratio(mo, 2.0, beta)) /
      zs_ratio(mo, 2.0, beta);

  detail = "spin deviation " + num(s_short) + " -> " + num(s_long) +
           ", oscillator " + num(o_short) + " -> " + num(o_long) +
           "; corrected identity rel err " + num(js) + " / " + num(jo) +
           " (tol 1e-5)";
  return s_long > s_short && s_short > 0 && o_long > o_short && o_short > 0 &&
         js <= 1e-5 && jo <= 1e-5;
}

bool quasi_static_identity(std::string& detail) {
  const ProtocolModel m = spin_model(4, 0.3);
  ThermoConfig tc;
  tc.n_steps = 1024;
  const double coarse = delta_f_identity_check(m, tc);
  tc.n_steps = 4096;
  const double fine = delta_f_identity_check(m, tc);
  detail = "|dF - (dE - T dS)| = " + num(fine) + " at n=4096 (tol 1e-4), " +
           num(coarse) + " at n=1024";
  return fine <= 1e-4 && fine < coarse;
}

bool truncation_robustness(std::string& detail) {
  const double beta = 4.08;
  double j[2];
  int idx = 0;
  for (int n_max : {30, 40}) {
    OscillatorModelParams p;
    p.n_max_sys = n_max;
    p.n_max_bath = n_max;
    const ProtocolModel m = oscillator_protocol_model(p);
    j[idx++] = jarzynski(
        strong_coupling_distribution(m, 2.0, 512, beta, Direction::forward),
        beta);
  }
  const double change = std::abs(j[1] - j[0]);
  detail = "exponential work average " + num(j[0]) + " vs " + num(j[1]) +
           " as the Fock cutoff grows 30 -> 40, change " + num(change) +
           " (tol 1e-4)";
  return change <= 1e-4;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    bool (*run)(std::string&);
  };
  const std::vector<Criterion> criteria = {
      {"coupled-family mapping identity", mapping_identity},
      {"bath-rotation identity", rotation_identity},
      {"three-stage propagator decomposition", three_stage},
      {"partition function factorization", partition_factorization},
      {"first law with order-2 convergence", first_law},
      {"exponential work identity, coupling-independent", work_identity},
      {"forward-reverse detailed ratio", detailed_ratio},
      {"weak-coupling reduction at g=0", weak_reduction},
      {"deviation growth across coupling strengths", coupling_monotonicity},
      {"bath-frequency curvature localization", curvature_localization},
      {"naive weak-work average grows with duration", naive_growth},
      {"quasi-static free-energy identity", quasi_static_identity},
      {"harmonic truncation robustness", truncation_robustness},
  };

  int failures = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    std::string detail;
    const bool ok = criteria[i].run(detail);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    if (!ok) ++failures;
    std::printf("[%2zu/13] %-48s %s  %s  [%.1fs]\n", i + 1, criteria[i].name,
                ok ? "PASS" : "FAIL", detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("acceptance: %zu/13 passed\n", criteria.size() - failures);
  return failures == 0 ? 0 : 1;
}
