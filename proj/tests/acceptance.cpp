// Runs every acceptance criterion and prints one PASS/FAIL line per criterion.
// Exit status is nonzero if any criterion fails.

#include <Eigen/Eigenvalues>
#include <boost/rational.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "bateman/app.hpp"
#include "bateman/bateman.hpp"

using namespace bateman;
using Rational = boost::rational<long long>;

namespace {

constexpr double kPi = std::numbers::pi;

ModelParams unit(double s = 1.0) {
  ModelParams p;
  p.s = s;
  return p;
}

ModelParams random_underdamped(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> pos(0.3, 3.0), frac(-0.9, 0.9), hb(0.5, 2.0);
  ModelParams p;
  p.m = pos(rng);
  p.omega0 = pos(rng);
  p.hbar = hb(rng);
  p.s = 2.0 * p.m * frac(rng) / p.omega0;
  return p;
}

// Independent closed-form references.
double na_reference(const ModelParams& p, double na0, double nb0, double t) {
  const double G = p.omega0 * p.omega0 * p.s / (2.0 * p.m);
  const double W = std::sqrt(p.omega0 * p.omega0 - G * G);
  const double sn = std::sin(W * t);
  return na0 + (na0 + nb0 + 1.0) * (G / W) * (G / W) * sn * sn;
}

double rate_reference(const ModelParams& p, double na0, double nb0, double t) {
  const double G = p.omega0 * p.omega0 * p.s / (2.0 * p.m);
  const double W = std::sqrt(p.omega0 * p.omega0 - G * G);
  return G * G / W * (na0 + nb0 + 1.0) * std::sin(2.0 * W * t);
}

double thermal_entropy(double n) {
  return n <= 0.0 ? 0.0 : (n + 1.0) * std::log(n + 1.0) - n * std::log(n);
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

fock::DensityMatrix vacuum_a(const fock::FockSpace& sp) {
  fock::Matrix m = fock::Matrix::Zero(sp.dim_a(), sp.dim_a());
  m(0, 0) = 1.0;
  return fock::DensityMatrix::single_mode(m);
}

// 1
Outcome canonicality() {
  std::mt19937_64 rng(101);
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const auto p = random_underdamped(rng);
    std::uniform_real_distribution<double> t(0.0, 10.0 * derive_params(p).T);
    for (int i = 0; i < 1000; ++i) {
      const auto uv = closedform::bogoliubov(p, t(rng));
      worst = std::max(worst, std::abs(std::norm(uv.u) - std::norm(uv.v) - 1.0));
    }
  }
  return {worst <= 1e-12, "max | |u|^2-|v|^2-1 | = " + fmt(worst)};
}

// 2
Outcome fock_oracle() {
  const auto p = unit();
  const double T = derive_params(p).T;
  std::vector<double> errs;
  for (int cutoff : {10, 20, 40}) {
    const auto sp = fock::FockSpace::symmetric(cutoff);
    const fock::Propagator prop(fock::build_hamiltonian(sp, p).H, p.hbar);
    const auto Na = fock::number_a(sp);
    const auto vac = fock::State::vacuum(sp);
    double e = 0.0;
    for (int i = 0; i <= 400; ++i) {
      const double t = 2.0 * T * i / 400.0;
      const double na = fock::expectation(Na, prop.apply(vac, t)).real();
      e = std::max(e, std::abs(na - na_reference(p, 0, 0, t)));
    }
    errs.push_back(e);
  }
  const bool monotone = errs[0] >= errs[1] && errs[1] >= errs[2];
  return {errs[2] <= 1e-6 && monotone,
          "err(10,20,40) = " + fmt(errs[0]) + ", " + fmt(errs[1]) + ", " + fmt(errs[2])};
}

// 3
Outcome conservation() {
  const auto p = unit();
  const double T = derive_params(p).T;
  const auto sp = fock::FockSpace::symmetric(40);
  const auto ham = fock::build_hamiltonian(sp, p);
  const fock::Propagator prop(ham.H, p.hbar);
  const auto diff = fock::number_a(sp) - fock::number_b(sp);
  double dh = 0.0, dn = 0.0;
  for (const auto& psi0 : {fock::State::vacuum(sp), fock::State::number(sp, 2, 1)}) {
    const double h0 = fock::expectation(ham.H, psi0).real();
    const double n0 = fock::expectation(diff, psi0).real();
    for (int i = 0; i <= 200; ++i) {
      const auto psi = prop.apply(psi0, 100.0 * T * i / 200.0);
      dh = std::max(dh, std::abs(fock::expectation(ham.H, psi).real() - h0));
      dn = std::max(dn, std::abs(fock::expectation(diff, psi).real() - n0));
    }
  }
  return {dh <= 1e-9 && dn <= 1e-10, "H drift " + fmt(dh) + ", Na-Nb drift " + fmt(dn)};
}

// 4
Outcome periodicity() {
  const auto p = unit();
  const double tau = kPi / derive_params(p).Omega;
  const auto sp = fock::FockSpace::symmetric(40);
  const fock::Propagator prop(fock::build_hamiltonian(sp, p).H, p.hbar);
  const auto Na = fock::number_a(sp);
  const auto vac = fock::State::vacuum(sp);
  std::mt19937_64 rng(104);
  std::uniform_real_distribution<double> u(0.0, 20.0);
  double ecf = 0.0, efk = 0.0;
  for (int i = 0; i < 200; ++i) {
    const double t = u(rng);
    ecf = std::max(ecf, std::abs(closedform::occupation_a(p, 0, 0, t + tau) - closedform::occupation_a(p, 0, 0, t)));
    efk = std::max(efk, std::abs(fock::expectation(Na, prop.apply(vac, t + tau)).real() -
                                 fock::expectation(Na, prop.apply(vac, t)).real()));
  }
  return {ecf <= 1e-8 && efk <= 1e-8, "closed form " + fmt(ecf) + ", Fock " + fmt(efk)};
}

// 5
Outcome kernel_fidelity() {
  const auto p = unit();
  const double T = derive_params(p).T;
  const auto sp = fock::FockSpace::symmetric(30);
  std::mt19937_64 rng(105);
  std::normal_distribution<double> g;
  double first = 0.0;
  for (int i = 0; i < 10; ++i) {
    fock::Matrix x(sp.dim_a(), sp.dim_a());
    for (fock::Index r = 0; r < x.rows(); ++r) {
      for (fock::Index c = 0; c < x.cols(); ++c) x(r, c) = Complex(g(rng), g(rng));
    }
    fock::Matrix rho = x * x.adjoint();
    rho /= rho.trace();
    rho = 0.5 * (rho + rho.adjoint()).eval();
    first = std::max(first, reduced::first_order_term(sp, p, fock::DensityMatrix::single_mode(rho)));
  }
  // Richardson study on the common grid t = k T/100.
  std::vector<std::vector<double>> na;
  double oracle_err = 0.0;
  for (int n : {100, 200, 400}) {
    const auto tr = reduced::evolve_reduced(sp, p, vacuum_a(sp), T, T / n);
    const auto& v = tr.series.real("Na_kernel");
    std::vector<double> coarse;
    for (int k = 0; k <= 100; ++k) coarse.push_back(v[static_cast<std::size_t>(k * n / 100)]);
    na.push_back(coarse);
    if (n == 400) {
      for (double e : tr.series.real("abs_err")) oracle_err = std::max(oracle_err, e);
    }
  }
  double d1 = 0.0, d2 = 0.0;
  for (std::size_t k = 0; k < na[0].size(); ++k) {
    d1 = std::max(d1, std::abs(na[0][k] - na[1][k]));
    d2 = std::max(d2, std::abs(na[1][k] - na[2][k]));
  }
  const double order = std::log2(d1 / d2);
  return {first <= 1e-13 && order >= 1.7 && order <= 2.3 && oracle_err <= 5e-4,
          "first-order " + fmt(first) + ", order " + fmt(order) + ", oracle err " + fmt(oracle_err)};
}

// 6
Outcome rate_identity() {
  const auto p = unit();
  const double T = derive_params(p).T;
  const auto sp = fock::FockSpace::symmetric(30);
  const double ds = T / 800;
  const auto h = reduced::exact_history(sp, p, vacuum_a(sp), ds, 800);
  double worst = 0.0;
  for (int k = 0; k <= 800; k += 25) {
    const double t = ds * k;
    worst = std::max(worst, std::abs(reduced::na_rate(sp, p, h, t) - rate_reference(p, 0, 0, t)));
  }
  return {worst <= 1e-4, "max rate error " + fmt(worst)};
}

// 7
Outcome fig3() {
  // Plotted points and the unit of their last printed digit.
  const double plotted[] = {1.000, 0.286, 0.082, 0.023, 0.0067, 0.0019, 0.00055, 0.00016, 0.000045, 0.000013};
  const double unit_digit[] = {1e-3, 1e-3, 1e-3, 1e-3, 1e-4, 1e-4, 1e-5, 1e-5, 1e-6, 1e-6};
  app::RunConfig c;
  c.command = "fig3";
  c.gamma_t = 1.25;
  c.n = 9;
  const auto ds = app::cmd_fig3(c);
  const auto& r = ds.table->columns[1];
  double worst = 0.0;
  for (int n = 0; n <= 9; ++n) worst = std::max(worst, std::abs(r[n] - plotted[n]) / unit_digit[n]);
  return {r.size() == 10 && worst <= 2.0, "max deviation " + fmt(worst) + " last-digit units"};
}

// 8
Outcome fig4() {
  app::RunConfig c;
  c.command = "fig4";
  const auto ds = app::cmd_fig4(c);
  const auto& s = ds.table->columns[0];
  const auto& ratio = ds.table->columns[1];
  double worst = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) worst = std::max(worst, std::abs(ratio[i] - std::exp(-2.0 * kPi * s[i])));
  const bool covers = s.front() == 0.0 && std::abs(s.back() - 2.0) < 1e-12;
  return {covers && worst <= 1e-12, "max error " + fmt(worst) + " over " + std::to_string(s.size()) + " points"};
}

// 9
Outcome dirac_table() {
  std::mt19937_64 rng(109);
  std::uniform_int_distribution<long long> num(1, 64), snum(-64, 64), den(1, 16);
  bool ok = true;
  std::size_t checked = 0;
  for (int i = 0; i < 5; ++i) {
    const Rational m(num(rng), den(rng)), s(snum(rng), den(rng));
    for (const auto& e : dirac::verify_bracket_table<Rational>(m, s)) {
      ok = ok && e.pass && e.computed == e.expected;
      ++checked;
    }
  }
  return {ok && checked == 80, std::to_string(checked) + " exact brackets"};
}

// 10
Outcome classical_oracle() {
  const auto p = unit(0.4);
  const double G = p.omega0 * p.omega0 * p.s / (2.0 * p.m);
  const double W = std::sqrt(p.omega0 * p.omega0 - G * G);
  auto max_err = [&](double dt) {
    const auto ts = classical::integrate_bateman(p, {1.0, 0.0, 1.0, 0.0}, 10.0, dt);
    double e = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      const double t = ts.time(i);
      const double y1 = std::exp(G * t) * (std::cos(W * t) - G / W * std::sin(W * t));
      const double y2 = std::exp(-G * t) * (std::cos(W * t) + G / W * std::sin(W * t));
      e = std::max({e, std::abs(ts.real("y1")[i] - y1), std::abs(ts.real("y2")[i] - y2)});
    }
    return e;
  };
  const double fine = max_err(1e-3);
  const double factor = max_err(0.1) / max_err(0.05);
  return {fine <= 1e-6 && factor >= 12.0 && factor <= 20.0,
          "error at dt=1e-3 " + fmt(fine) + ", halving factor " + fmt(factor)};
}

// 11
Outcome fractal_suite() {
  double len = 0.0, law = 0.0;
  for (int n = 0; n <= 6; ++n) {
    const auto k = geometry::koch_generate(n);
    len = std::max(len, std::abs(k.length() / std::pow(4.0 / 3.0, n) - 1.0));
    law = std::max(law, std::abs(geometry::koch_scaling(n, 4.0, 1.0 / 3.0) / k.length() - 1.0));
  }
  std::mt19937_64 rng(111);
  for (int i = 0; i < 50; ++i) {
    const auto p = random_underdamped(rng);
    const double ratio = geometry::scaling_ratio(derive_params(p).d, -1);
    const auto r = geometry::lattice_samples(p, 1.0, 8);
    for (std::size_t n = 0; n + 1 < r.size(); ++n) law = std::max(law, std::abs(r[n + 1] / r[n] / ratio - 1.0));
  }
  const double dim = geometry::koch_dimension_estimate(geometry::koch_generate(6));
  return {len <= 1e-10 && law <= 1e-12 && dim >= 1.24 && dim <= 1.28,
          "length " + fmt(len) + ", scaling " + fmt(law) + ", box dimension " + fmt(dim)};
}

// 12
Outcome thermality() {
  const auto p = unit();
  const double T = derive_params(p).T;
  const auto sp = fock::FockSpace::symmetric(40);
  const fock::Propagator prop(fock::build_hamiltonian(sp, p).H, p.hbar);
  const auto vac = fock::State::vacuum(sp);
  double offdiag = 0.0, dS = 0.0;
  for (int i = 1; i <= 40; ++i) {
    const fock::Matrix rho = fock::reduce_pure(prop.apply(vac, 2.0 * T * i / 41.0));
    double nbar = 0.0;
    for (fock::Index n = 0; n < rho.rows(); ++n) {
      nbar += n * rho(n, n).real();
      for (fock::Index m = 0; m < rho.cols(); ++m) {
        if (m != n) offdiag = std::max(offdiag, std::abs(rho(n, m)));
      }
    }
    const Eigen::SelfAdjointEigenSolver<fock::Matrix> es(rho);
    double S = 0.0;
    for (double l : es.eigenvalues()) {
      if (l > 1e-300) S -= l * std::log(l);
    }
    dS = std::max(dS, std::abs(S - thermal_entropy(nbar)));
  }
  return {offdiag <= 1e-12 && dS <= 1e-6, "off-diagonal " + fmt(offdiag) + ", entropy error " + fmt(dS)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"canonicality", canonicality},
      {"Fock occupation vs closed form", fock_oracle},
      {"conservation over 100T", conservation},
      {"periodicity pi/Omega", periodicity},
      {"reduced kernel fidelity", kernel_fidelity},
      {"na rate identity", rate_identity},
      {"fig3 lattice points", fig3},
      {"fig4 scaling ratio", fig4},
      {"Dirac bracket table", dirac_table},
      {"classical RK4 oracle", classical_oracle},
      {"fractal suite", fractal_suite},
      {"reduced state thermality", thermality},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << (i + 1) << " " << criteria[i].first << ": " << o.detail
              << " (" << fmt(secs) << " s)" << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
