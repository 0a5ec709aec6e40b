#include "weakcontact/micro.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <queue>

#include <Eigen/Dense>

namespace wc {

namespace {

// Counter-based 64-bit generator (splitmix64): the whole trajectory is a pure
// function of the seed, which gives the bitwise determinism guarantee.
struct SplitMix64 {
  std::uint64_t s;
  explicit SplitMix64(std::uint64_t seed) : s(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (s += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
  double u01() { // strictly inside (0,1)
    return (double(next() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
  }
};

// Binary-indexed tree over per-event rates: O(log n) update and inverse-cdf
// sampling. Rates are kept alongside so the tree can be rebuilt periodically
// to flush floating-point drift from incremental updates.
class RateTree {
public:
  explicit RateTree(int n) : n_(n), rate_(n, 0.0), tree_(n + 1, 0.0) {
    hibit_ = 1;
    while (hibit_ * 2 <= n_) hibit_ *= 2;
  }

  void set(int i, double r) {
    const double delta = r - rate_[i];
    if (delta == 0.0) return;
    rate_[i] = r;
    for (int k = i + 1; k <= n_; k += k & -k) tree_[k] += delta;
  }

  double rate(int i) const { return rate_[i]; }

  double total() const {
    double s = 0.0;
    for (int k = n_; k > 0; k -= k & -k) s += tree_[k];
    return s;
  }

  int pick(double target) const {
    int pos = 0;
    for (int k = hibit_; k > 0; k >>= 1) {
      const int nxt = pos + k;
      if (nxt <= n_ && tree_[nxt] < target) {
        pos = nxt;
        target -= tree_[nxt];
      }
    }
    if (pos >= n_) pos = n_ - 1;
    while (rate_[pos] == 0.0 && pos + 1 < n_) ++pos; // zero-rate tie landing
    while (rate_[pos] == 0.0 && pos > 0) --pos;
    return pos;
  }

  void rebuild() {
    std::fill(tree_.begin(), tree_.end(), 0.0);
    std::vector<double> r = rate_;
    std::fill(rate_.begin(), rate_.end(), 0.0);
    for (int i = 0; i < n_; ++i) set(i, r[i]);
  }

private:
  int n_, hibit_;
  std::vector<double> rate_;
  std::vector<double> tree_;
};

// Shared precomputed boundary constants for the exclusion-type generators so
// the simulator and the dense-generator oracle use identical rates.
struct ExclusionRates {
  int N = 0;
  double bond = 0.0; // N^2 per active bond
  bool nonrev = false;
  int window = 1;
  // SEP: create/annihilate rates kappa*N*e^l/(1+e^l), kappa*N/(1+e^l)
  double createL = 0.0, killL = 0.0, createR = 0.0, killR = 0.0;
  double kNL = 0.0, kNR = 0.0; // nonrev flip prefactors kappa*N
  const NonRevTable *tab = nullptr;

  static ExclusionRates make(const MicroConfig &cfg) {
    ExclusionRates r;
    r.N = cfg.N;
    r.bond = double(cfg.N) * double(cfg.N);
    const Drive &d = cfg.drive;
    if (cfg.model.kind == ModelKind::SEP) {
      const double eL = std::exp(d.lambda_left), eR = std::exp(d.lambda_right);
      r.createL = d.kappa_left * cfg.N * eL / (1.0 + eL);
      r.killL = d.kappa_left * cfg.N / (1.0 + eL);
      r.createR = d.kappa_right * cfg.N * eR / (1.0 + eR);
      r.killR = d.kappa_right * cfg.N / (1.0 + eR);
    } else {
      r.nonrev = true;
      r.tab = &cfg.model.nonrev;
      r.window = r.tab->window;
      if (2 * r.window > cfg.N)
        throw ConfigError("micro: boundary windows overlap");
      r.kNL = d.kappa_left * cfg.N;
      r.kNR = d.kappa_right * cfg.N;
    }
    return r;
  }

  int boundary_events() const { return nonrev ? 2 * window : 2; }

  // j indexes the boundary event list: left window first, then right.
  int boundary_site(int j) const {
    if (!nonrev) return j == 0 ? 0 : N - 1;
    return j < window ? j : N - 1 - (j - window);
  }

  template <class Occ> double boundary_rate(int j, const Occ &eta) const {
    if (!nonrev) {
      if (j == 0) return eta(0) ? killL : createL;
      return eta(N - 1) ? killR : createR;
    }
    if (j < window) {
      int mask = 0;
      for (int i = 0; i < window; ++i) mask |= int(eta(i)) << i;
      return kNL * tab->left[j][mask];
    }
    const int jr = j - window;
    int mask = 0;
    for (int i = 0; i < window; ++i) mask |= int(eta(N - 1 - i)) << i;
    return kNR * tab->right[jr][mask];
  }
};

struct Accumulator {
  Accumulator(int N, int batches, int states, int hist)
      : sums(Eigen::ArrayXd::Zero(N)), batch(Eigen::ArrayXXd::Zero(N, batches)),
        durations(batches, 0.0), occupancy(states, 0.0), hist(hist, 0.0) {}
  Eigen::ArrayXd sums;
  Eigen::ArrayXXd batch;
  std::vector<double> durations;
  std::vector<double> occupancy;
  std::vector<double> hist;
  double T = 0.0;
  long long events = 0;

  EmpiricalProfile finish() const {
    EmpiricalProfile out;
    if (T <= 0.0) throw ConvergenceError("micro: empty measurement window");
    out.mean = sums / T;
    const int B = int(durations.size());
    Eigen::ArrayXd var = Eigen::ArrayXd::Zero(sums.size());
    int used = 0;
    for (int b = 0; b < B; ++b) {
      if (durations[b] <= 0.0) continue;
      Eigen::ArrayXd m = batch.col(b) / durations[b];
      var += (m - out.mean).square();
      ++used;
    }
    if (used < 2) throw ConvergenceError("micro: too few batches");
    out.sem = (var / (double(used) * (used - 1))).sqrt();
    out.state_occupancy = occupancy;
    for (double &p : out.state_occupancy) p /= T;
    out.zr_histogram = hist;
    for (double &p : out.zr_histogram) p /= T;
    out.events = events;
    out.horizon = T;
    return out;
  }
};

// One Gillespie loop shared by all models. Sys supplies the event table and
// the state; measurement is time-weighted with truncation at the window end.
template <class Sys>
EmpiricalProfile run_kmc(Sys &sys, RateTree &tree, const MicroConfig &cfg) {
  SplitMix64 rng(cfg.seed);
  const int B = cfg.batches;
  const bool by_events = cfg.max_events > 0;
  const long long burn_ev = by_events ? cfg.max_events / 10 : 0;
  const long long stop_ev = by_events ? burn_ev + cfg.max_events : 0;
  const double t_end = cfg.t_burn + cfg.t_measure;

  std::ofstream log;
  if (!cfg.event_log.empty()) {
    log.open(cfg.event_log, std::ios::binary);
    if (!log) throw ConfigError("micro: cannot open event log " + cfg.event_log);
  }

  Accumulator acc(cfg.N, B, sys.tracked_states(), cfg.histogram_max > 0
                                                      ? cfg.histogram_max + 1
                                                      : 0);
  double t = 0.0;
  long long ev = 0;
  long long since_rebuild = 0;
  while (true) {
    const double total = tree.total();
    if (!(total > 0.0)) throw StructureError("micro: no enabled events");
    double dt = -std::log(rng.u01()) / total;
    bool done = false;

    if (by_events) {
      if (ev >= burn_ev) {
        const int b = std::min<long long>((ev - burn_ev) * B / cfg.max_events, B - 1);
        sys.accrue(acc, dt, int(b));
        acc.T += dt;
        acc.durations[b] += dt;
        ++acc.events;
      }
      done = (ev + 1 >= stop_ev);
    } else {
      if (t + dt >= t_end) {
        dt = t_end - t;
        done = true;
      }
      const double a = std::max(t, cfg.t_burn), b = t + dt;
      if (b > a) {
        // split the holding interval across batch boundaries
        const double blen = cfg.t_measure / B;
        double lo = a;
        while (lo < b - 1e-300) {
          int bi = std::min(int((lo - cfg.t_burn) / blen), B - 1);
          const double hi = std::min(b, cfg.t_burn + (bi + 1) * blen);
          const double w = hi - lo;
          if (w > 0.0) {
            sys.accrue(acc, w, bi);
            acc.T += w;
            acc.durations[bi] += w;
          }
          if (hi <= lo) break;
          lo = hi;
        }
        ++acc.events;
      }
    }
    t += dt;
    if (done) break;

    const int e = tree.pick(rng.u01() * total);
    if (log.is_open()) {
      std::uint64_t tb;
      std::memcpy(&tb, &t, sizeof tb);
      std::uint32_t id = std::uint32_t(e);
      log.write(reinterpret_cast<const char *>(&tb), sizeof tb);
      log.write(reinterpret_cast<const char *>(&id), sizeof id);
    }
    sys.apply(e, rng, tree);
    ++ev;
    if (++since_rebuild >= (1ll << 21)) {
      tree.rebuild();
      since_rebuild = 0;
    }
  }
  return acc.finish();
}

// --- exclusion-type system (SEP and the non-reversible boundary model) -----

struct ExclusionSys {
  ExclusionRates R;
  std::vector<std::uint8_t> eta;
  int nb; // bond event count

  explicit ExclusionSys(const MicroConfig &cfg, double rho0)
      : R(ExclusionRates::make(cfg)), eta(cfg.N, 0), nb(cfg.N - 1) {
    SplitMix64 init(cfg.seed ^ 0xabcdef1234567890ull);
    for (int i = 0; i < cfg.N; ++i) eta[i] = init.u01() < rho0 ? 1 : 0;
  }

  int num_events() const { return nb + R.boundary_events(); }
  int tracked_states() const { return R.N <= 12 ? 1 << R.N : 0; }

  double rate(int e) const {
    if (e < nb) return eta[e] != eta[e + 1] ? R.bond : 0.0;
    auto occ = [&](int i) { return int(eta[i]); };
    return R.boundary_rate(e - nb, occ);
  }

  void refresh_near(int site, RateTree &tree) const {
    if (site > 0) tree.set(site - 1, rate(site - 1));
    if (site < nb) tree.set(site, rate(site));
  }

  void refresh_boundary(RateTree &tree) const {
    for (int j = 0; j < R.boundary_events(); ++j) tree.set(nb + j, rate(nb + j));
  }

  bool touches_wall(int site) const {
    const int w = R.nonrev ? R.window : 1;
    return site < w || site >= R.N - w;
  }

  void apply(int e, SplitMix64 &, RateTree &tree) {
    bool wall = false;
    if (e < nb) {
      std::swap(eta[e], eta[e + 1]);
      refresh_near(e, tree);
      refresh_near(e + 1, tree);
      wall = touches_wall(e) || touches_wall(e + 1);
    } else {
      const int s = R.boundary_site(e - nb);
      eta[s] ^= 1;
      refresh_near(s, tree);
      wall = true;
    }
    if (wall) refresh_boundary(tree);
  }

  void accrue(Accumulator &acc, double w, int b) const {
    for (int i = 0; i < R.N; ++i)
      if (eta[i]) {
        acc.sums[i] += w;
        acc.batch(i, b) += w;
      }
    if (!acc.occupancy.empty()) {
      int mask = 0;
      for (int i = 0; i < R.N; ++i) mask |= int(eta[i]) << i;
      acc.occupancy[mask] += w;
    }
  }
};

// --- zero-range system ------------------------------------------------------

struct ZeroRangeSys {
  const MicroConfig &cfg;
  int N;
  double bond, exitL, exitR, injL, injR, cap;
  std::vector<long long> eta;
  // events: hop right from i (0..N-2), hop left from i (1..N-1), exit left,
  // exit right, inject left, inject right
  int hopL0;

  explicit ZeroRangeSys(const MicroConfig &c) : cfg(c), N(c.N) {
    bond = double(N) * double(N);
    const Drive &d = c.drive;
    exitL = d.kappa_left * N;
    exitR = d.kappa_right * N;
    injL = d.kappa_left * N * std::exp(d.lambda_left);
    injR = d.kappa_right * N * std::exp(d.lambda_right);
    cap = c.zr_cap;
    hopL0 = N - 1;
    const double m0 = 0.5 * (mean_R(c.model, d.lambda_left) +
                             mean_R(c.model, d.lambda_right));
    eta.assign(N, llround(std::floor(m0)));
  }

  double g(long long k) const {
    if (k <= 0) return 0.0;
    switch (cfg.model.zr_rate) {
    case ZrRateKind::Linear:
      return double(k);
    case ZrRateKind::Constant:
      return 1.0;
    case ZrRateKind::Tabulated: {
      const auto &tab = cfg.model.zr_g;
      const size_t idx = std::min<size_t>(size_t(k), tab.size());
      return tab[idx - 1];
    }
    }
    return 0.0;
  }

  int num_events() const { return 2 * (N - 1) + 4; }
  int tracked_states() const { return 0; }

  double rate(int e) const {
    if (e < N - 1) return bond * g(eta[e]);
    if (e < 2 * (N - 1)) return bond * g(eta[e - hopL0 + 1]);
    const int k = e - 2 * (N - 1);
    if (k == 0) return exitL * g(eta[0]);
    if (k == 1) return exitR * g(eta[N - 1]);
    return k == 2 ? injL : injR;
  }

  void refresh_site(int i, RateTree &tree) const {
    if (i < N - 1) tree.set(i, rate(i));
    if (i > 0) tree.set(hopL0 + i - 1, rate(hopL0 + i - 1));
    if (i == 0) tree.set(2 * (N - 1), rate(2 * (N - 1)));
    if (i == N - 1) tree.set(2 * (N - 1) + 1, rate(2 * (N - 1) + 1));
  }

  void bump(int i, long long d, RateTree &tree) {
    eta[i] += d;
    if (double(eta[i]) > cap)
      throw ResourceError("micro: zero-range occupation exceeded the cap");
    refresh_site(i, tree);
  }

  void apply(int e, SplitMix64 &, RateTree &tree) {
    if (e < N - 1) {
      bump(e, -1, tree);
      bump(e + 1, +1, tree);
    } else if (e < 2 * (N - 1)) {
      const int i = e - hopL0 + 1;
      bump(i, -1, tree);
      bump(i - 1, +1, tree);
    } else {
      const int k = e - 2 * (N - 1);
      if (k == 0) bump(0, -1, tree);
      else if (k == 1) bump(N - 1, -1, tree);
      else if (k == 2) bump(0, +1, tree);
      else bump(N - 1, +1, tree);
    }
  }

  void accrue(Accumulator &acc, double w, int b) const {
    for (int i = 0; i < N; ++i) {
      acc.sums[i] += w * eta[i];
      acc.batch(i, b) += w * eta[i];
    }
    if (!acc.hist.empty()) {
      const long long top = (long long)acc.hist.size() - 1;
      for (int i = 0; i < N; ++i)
        acc.hist[size_t(std::min(eta[i], top))] += w / N;
    }
  }
};

// --- KMP energy exchange system ---------------------------------------------

struct KmpSys {
  int N;
  double bond, rateL, rateR, tauL, tauR;
  std::vector<double> eta;

  explicit KmpSys(const MicroConfig &c) : N(c.N) {
    // uniform redistribution relaxes each bond mean at half the event rate, so
    // the bond clock is doubled to realize unit diffusivity on the lattice
    bond = 2.0 * double(N) * double(N);
    rateL = c.drive.kappa_left * N;
    rateR = c.drive.kappa_right * N;
    tauL = mean_R(c.model, c.drive.lambda_left);
    tauR = mean_R(c.model, c.drive.lambda_right);
    eta.assign(N, 0.5 * (tauL + tauR));
  }

  int num_events() const { return N - 1 + 2; }
  int tracked_states() const { return 0; }

  double rate(int e) const {
    if (e < N - 1) return bond;
    return e == N - 1 ? rateL : rateR;
  }

  void apply(int e, SplitMix64 &rng, RateTree &) {
    if (e < N - 1) {
      const double s = eta[e] + eta[e + 1];
      const double u = rng.u01();
      eta[e] = u * s;
      eta[e + 1] = (1.0 - u) * s;
    } else if (e == N - 1) {
      eta[0] = -std::log(rng.u01()) * tauL;
    } else {
      eta[N - 1] = -std::log(rng.u01()) * tauR;
    }
  }

  void accrue(Accumulator &acc, double w, int b) const {
    for (int i = 0; i < N; ++i) {
      acc.sums[i] += w * eta[i];
      acc.batch(i, b) += w * eta[i];
    }
  }
};

void validate(const MicroConfig &cfg) {
  validate_model(cfg.model);
  if (cfg.N < 3) throw ConfigError("micro: N must be at least 3");
  if (cfg.batches < 16) throw ConfigError("micro: at least 16 batches required");
  if (cfg.drive.has_E()) throw ConfigError("micro: bond bias not supported");
  if (cfg.drive.kappa_left < 0.0 || cfg.drive.kappa_right < 0.0)
    throw ConfigError("micro: negative boundary multiplier");
  if (cfg.max_events <= 0 && !(cfg.t_measure > 0.0))
    throw ConfigError("micro: empty measurement window");
  // admissibility of the reservoir parameters (KMP: lambda < 0, ...)
  mean_R(cfg.model, cfg.drive.lambda_left);
  mean_R(cfg.model, cfg.drive.lambda_right);
}

template <class Sys> EmpiricalProfile seed_and_run(Sys &sys, const MicroConfig &cfg) {
  RateTree tree(sys.num_events());
  for (int e = 0; e < sys.num_events(); ++e) tree.set(e, sys.rate(e));
  return run_kmc(sys, tree, cfg);
}

} // namespace

EmpiricalProfile simulate(const MicroConfig &cfg) {
  validate(cfg);
  switch (cfg.model.kind) {
  case ModelKind::SEP:
  case ModelKind::NonRevExclusion: {
    double rho0 = 0.5;
    if (cfg.model.kind == ModelKind::SEP)
      rho0 = 0.5 * (mean_R(cfg.model, cfg.drive.lambda_left) +
                    mean_R(cfg.model, cfg.drive.lambda_right));
    ExclusionSys sys(cfg, rho0);
    return seed_and_run(sys, cfg);
  }
  case ModelKind::ZeroRange: {
    ZeroRangeSys sys(cfg);
    return seed_and_run(sys, cfg);
  }
  case ModelKind::KMP: {
    KmpSys sys(cfg);
    return seed_and_run(sys, cfg);
  }
  }
  throw ConfigError("micro: unknown model");
}

GeneratorOracle exact_generator_oracle(const MicroConfig &cfg) {
  validate(cfg);
  if (cfg.model.kind != ModelKind::SEP && cfg.model.kind != ModelKind::NonRevExclusion)
    throw ConfigError("generator oracle: exclusion-type models only");
  if (cfg.N > 12) throw ConfigError("generator oracle: state space too large");
  const ExclusionRates R = ExclusionRates::make(cfg);
  const int S = 1 << cfg.N;
  const int nb = cfg.N - 1;

  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(S, S);
  for (int m = 0; m < S; ++m) {
    auto occ = [&](int i) { return (m >> i) & 1; };
    for (int i = 0; i < nb; ++i)
      if (occ(i) != occ(i + 1)) {
        const int to = m ^ (1 << i) ^ (1 << (i + 1));
        Q(m, to) += R.bond;
      }
    for (int j = 0; j < R.boundary_events(); ++j) {
      const double r = R.boundary_rate(j, occ);
      if (r <= 0.0) continue;
      Q(m, m ^ (1 << R.boundary_site(j))) += r;
    }
    Q(m, m) -= Q.row(m).sum();
  }

  // irreducibility: strong connectivity over positive-rate edges
  auto reach = [&](bool forward) {
    std::vector<char> seen(S, 0);
    std::queue<int> q;
    q.push(0);
    seen[0] = 1;
    int count = 1;
    while (!q.empty()) {
      const int m = q.front();
      q.pop();
      for (int to = 0; to < S; ++to) {
        const double r = forward ? Q(m, to) : Q(to, m);
        if (to != m && r > 0.0 && !seen[to]) {
          seen[to] = 1;
          ++count;
          q.push(to);
        }
      }
    }
    return count;
  };
  if (reach(true) != S || reach(false) != S)
    throw StructureError("generator oracle: chain is reducible");

  Eigen::MatrixXd A = Q.transpose();
  A.row(S - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(S);
  rhs[S - 1] = 1.0;
  GeneratorOracle out;
  out.pi = A.partialPivLu().solve(rhs);
  out.residual = (out.pi.transpose() * Q).cwiseAbs().maxCoeff();

  out.marginal = Eigen::ArrayXd::Zero(cfg.N);
  for (int m = 0; m < S; ++m)
    for (int i = 0; i < cfg.N; ++i)
      if ((m >> i) & 1) out.marginal[i] += out.pi[m];

  for (int m = 0; m < S; ++m) {
    auto occ = [&](int i) { return (m >> i) & 1; };
    for (int j = 0; j < R.boundary_events(); ++j) {
      const int s = R.boundary_site(j);
      const double flux = (occ(s) ? -1.0 : 1.0) * R.boundary_rate(j, occ) * out.pi[m];
      if ((!R.nonrev && j == 0) || (R.nonrev && j < R.window))
        out.current_left += flux;
      else
        out.current_right += flux;
    }
  }
  return out;
}

ZrDiscreteSolution zr_discrete_phi(const ModelSpec &model, int N, double lambda_left,
                                   double lambda_right, double kappa) {
  if (model.kind != ModelKind::ZeroRange)
    throw ConfigError("zr_discrete_phi: zero-range model required");
  if (N < 3) throw ConfigError("zr_discrete_phi: N must be at least 3");
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(N, N);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(N);
  for (int i = 1; i < N - 1; ++i) {
    A(i, i - 1) = 1.0;
    A(i, i) = -2.0;
    A(i, i + 1) = 1.0;
  }
  A(0, 0) = -double(N) - kappa;
  A(0, 1) = double(N);
  b[0] = -kappa * std::exp(lambda_left);
  A(N - 1, N - 1) = -double(N) - kappa;
  A(N - 1, N - 2) = double(N);
  b[N - 1] = -kappa * std::exp(lambda_right);

  Eigen::VectorXd phi = A.partialPivLu().solve(b);
  if (!phi.allFinite() || (A * phi - b).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + b.cwiseAbs().maxCoeff()))
    throw StructureError("zr_discrete_phi: singular system");

  ZrDiscreteSolution out;
  out.phi = phi.array();
  if ((out.phi <= 0.0).any())
    throw StructureError("zr_discrete_phi: nonpositive activity");
  out.lambda = out.phi.log();
  out.mean = Eigen::ArrayXd(N);
  for (int i = 0; i < N; ++i) out.mean[i] = mean_R(model, out.lambda[i]);
  return out;
}

} // namespace wc
