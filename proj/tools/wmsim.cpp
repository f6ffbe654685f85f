// wmsim: command-line front end for the weak-measurement simulations.
//
// Exit codes: 0 success, 2 invalid flags or parameters, 3 numerical failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "wmsim/classical.hpp"
#include "wmsim/models.hpp"
#include "wmsim/parallel.hpp"
#include "wmsim/quantum.hpp"

#ifndef WMSIM_VERSION
#define WMSIM_VERSION "0"
#endif

namespace {

using namespace wmsim;
using json = nlohmann::ordered_json;

constexpr int kExitInvalid = 2;
constexpr int kExitNumerical = 3;

// ---------------------------------------------------------------------------
// Output tables

using Cell = std::variant<std::monostate, double, long long, std::string>;

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
    json meta = json::object();
};

std::string number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string csv_cell(const Cell &c) {
    struct Visitor {
        std::string operator()(std::monostate) const { return ""; }
        std::string operator()(double v) const { return number(v); }
        std::string operator()(long long v) const { return std::to_string(v); }
        std::string operator()(const std::string &s) const {
            if (s.find_first_of(",\"\n") == std::string::npos) {
                return s;
            }
            std::string q = "\"";
            for (char ch : s) {
                q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
            }
            return q + "\"";
        }
    };
    return std::visit(Visitor{}, c);
}

json json_cell(const Cell &c) {
    struct Visitor {
        json operator()(std::monostate) const { return nullptr; }
        json operator()(double v) const {
            // Keep 17 significant digits, matching the CSV output.
            return std::isfinite(v) ? json::parse(number(v)) : json(number(v));
        }
        json operator()(long long v) const { return v; }
        json operator()(const std::string &s) const { return s; }
    };
    return std::visit(Visitor{}, c);
}

std::string render(const Table &t, const std::string &format) {
    std::ostringstream out;
    if (format == "json") {
        json rows = json::array();
        for (const auto &r : t.rows) {
            json row = json::object();
            for (std::size_t k = 0; k < t.columns.size(); ++k) {
                row[t.columns[k]] = json_cell(r[k]);
            }
            rows.push_back(std::move(row));
        }
        json doc = json::object();
        doc["meta"] = t.meta;
        doc["columns"] = t.columns;
        doc["rows"] = std::move(rows);
        out << doc.dump(2) << '\n';
        return out.str();
    }
    for (std::size_t k = 0; k < t.columns.size(); ++k) {
        out << (k ? "," : "") << t.columns[k];
    }
    out << '\n';
    for (const auto &r : t.rows) {
        for (std::size_t k = 0; k < r.size(); ++k) {
            out << (k ? "," : "") << csv_cell(r[k]);
        }
        out << '\n';
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Self tests

struct SelfTest {
    int failed = 0;

    void expect(bool ok, const std::string &name) {
        std::cout << (ok ? "PASS " : "FAIL ") << name << '\n';
        failed += ok ? 0 : 1;
    }
    template <class F>
    void expect_throw(F &&f, const std::string &name) {
        bool threw = false;
        try {
            f();
        } catch (const std::exception &) {
            threw = true;
        }
        expect(threw, name);
    }
    int exit_code() const { return failed == 0 ? 0 : 1; }
};

// ---------------------------------------------------------------------------
// Shared options

struct Common {
    std::string format = "csv";
    std::string out;
    std::uint64_t seed = 1;
    unsigned threads = 0;
    bool selftest = false;
};

void add_common(CLI::App *sub, Common &c) {
    sub->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--out", c.out, "Output file (default: standard output)");
    sub->add_option("--seed", c.seed, "Random seed");
    sub->add_option("--threads", c.threads, "Worker threads (0: all cores)");
    sub->add_flag("--selftest", c.selftest, "Run the built-in checks and exit");
}

struct DoubleWellOpts {
    double eps = 1.0, tau = 1.0, kt = 0.1;
    double t1 = 0.0, t2 = 1.0, t3 = 3.0;
};

void add_double_well(CLI::App *sub, DoubleWellOpts &o) {
    sub->add_option("--eps", o.eps, "Half the energy splitting between wells");
    sub->add_option("--tau", o.tau, "Tunnelling amplitude");
    sub->add_option("--kt", o.kt, "Temperature")->check(CLI::PositiveNumber);
    sub->add_option("--t1", o.t1, "First measurement time");
    sub->add_option("--t2", o.t2, "Second measurement time");
    sub->add_option("--t3", o.t3, "Third measurement time");
}

void require_ordered(const DoubleWellOpts &o) {
    if (!(o.t1 <= o.t2 && o.t2 <= o.t3)) {
        throw std::invalid_argument("times must satisfy t1 <= t2 <= t3");
    }
}

// ---------------------------------------------------------------------------
// dwell-corr

struct DwellCorr {
    DoubleWellOpts dw;
    std::string method = "analytic";
    double g = 0.3;
    std::size_t samples = 1'000'000;
};

Table run_dwell_corr(const DwellCorr &o, const Common &c) {
    require_ordered(o.dw);
    const models::DoubleWellParams p{o.dw.eps, o.dw.tau, o.dw.kt};
    const models::DoubleWellModel m = models::dwell_model(p);
    Table t;
    t.columns = {"eps", "tau", "kt", "t1", "t2", "t3", "method", "g", "samples", "value", "stderr"};
    Cell g = 0.0, samples = 0LL, value, stderr_;
    if (o.method == "analytic") {
        value = models::dwell_corr_analytic(p, o.dw.t1, o.dw.t2, o.dw.t3);
    } else if (o.method == "superop") {
        const auto rho = quantum::thermal_state(m.hamiltonian, p.kT);
        value = quantum::quasiprob(models::dwell_plan(m, o.dw.t1, o.dw.t2, o.dw.t3), rho, m.hamiltonian).mean_product();
    } else {
        if (!(o.g > 0.0)) {
            throw std::invalid_argument("--g must be positive for --method mc");
        }
        const auto rho = quantum::thermal_state(m.hamiltonian, p.kT);
        const MomentTable mt = quantum::sample_moments(models::dwell_plan(m, o.dw.t1, o.dw.t2, o.dw.t3, o.g), rho,
                                                       m.hamiltonian, o.samples, c.seed, c.threads);
        g = o.g;
        samples = static_cast<long long>(o.samples);
        value = mt.value({0, 1, 2});
        stderr_ = mt.stderr_of({0, 1, 2});
    }
    t.rows.push_back({p.eps, p.tau, p.kT, o.dw.t1, o.dw.t2, o.dw.t3, o.method, g, samples, value, stderr_});
    return t;
}

int selftest_dwell_corr() {
    SelfTest s;
    s.expect(models::dwell_corr_analytic({0.0, 1.0, 0.5}, 0.0, 1.0, 2.0) == 0.0, "eps = 0 gives zero correlator");
    s.expect(std::abs(models::dwell_corr_analytic({0.8, 0.0, 0.3}, 0.0, 1.0, 2.0) + std::tanh(0.8 / 0.3)) < 1e-14,
             "tau = 0 gives -tanh(eps/kT)");
    const auto m = models::dwell_model({1.0, 0.0, 1.0});
    s.expect(max_abs_diff(m.hamiltonian.matrix(), ComplexMatrix{{1.0, 0.0}, {0.0, -1.0}}) == 0.0,
             "eps = 1, tau = 0 gives H = diag(1, -1)");
    const auto ev = hermitian_eigen(models::dwell_model({0.6, 0.8, 1.0}).hamiltonian.matrix()).eigenvalues;
    s.expect(std::abs(ev.front() + 1.0) < 1e-12 && std::abs(ev.back() - 1.0) < 1e-12, "eigenvalues are +-Delta");
    s.expect_throw([] { models::dwell_model({0.0, 0.0, 1.0}); }, "eps = tau = 0 rejected");
    return s.exit_code();
}

// ---------------------------------------------------------------------------
// dwell-asym

struct DwellAsym {
    DoubleWellOpts dw;
    double g = 0.0;
};

std::vector<double> union_axis(const std::vector<double> &a, const std::vector<double> &b) {
    std::vector<double> all = a;
    all.insert(all.end(), b.begin(), b.end());
    std::sort(all.begin(), all.end());
    std::vector<double> out;
    for (double v : all) {
        if (out.empty() || v - out.back() > 1e-9) {
            out.push_back(v);
        }
    }
    return out;
}

double weight_at(const quantum::Quasiprobability &q, const std::array<double, 3> &values) {
    std::array<std::size_t, 3> idx{};
    for (std::size_t k = 0; k < 3; ++k) {
        const auto &axis = q.axes()[k];
        const auto it = std::find_if(axis.begin(), axis.end(), [&](double a) { return std::abs(a - values[k]) <= 1e-9; });
        if (it == axis.end()) {
            return 0.0;
        }
        idx[k] = static_cast<std::size_t>(it - axis.begin());
    }
    return q.at(idx);
}

Table run_dwell_asym(const DwellAsym &o, const Common &) {
    require_ordered(o.dw);
    const models::DoubleWellParams p{o.dw.eps, o.dw.tau, o.dw.kt};
    const models::DoubleWellModel m = models::dwell_model(p);
    const auto rho = quantum::thermal_state(m.hamiltonian, p.kT);
    const auto plan = models::dwell_plan(m, o.dw.t1, o.dw.t2, o.dw.t3, o.g);
    const auto fwd = quantum::quasiprob(plan, rho, m.hamiltonian);
    const auto rev = quantum::time_reversed_quasiprob(plan, rho, m.hamiltonian);
    Table t;
    t.columns = {"label", "a1", "a2", "a3", "q_forward", "q_reversed", "delta"};
    std::array<std::vector<double>, 3> axes;
    for (std::size_t k = 0; k < 3; ++k) {
        axes[k] = union_axis(fwd.axes()[k], rev.axes()[k]);
    }
    for (double a1 : axes[0])
        for (double a2 : axes[1])
            for (double a3 : axes[2]) {
                const double qf = weight_at(fwd, {a1, a2, a3});
                const double qr = weight_at(rev, {a1, a2, a3});
                t.rows.push_back({std::string("bin"), a1, a2, a3, qf, qr, qf - qr});
            }
    t.rows.push_back({std::string("moment_a1a2a3"), Cell{}, Cell{}, Cell{}, fwd.mean_product(), rev.mean_product(),
                      fwd.mean_product() - rev.mean_product()});
    t.rows.push_back({std::string("delta_T"), Cell{}, Cell{}, Cell{}, Cell{}, Cell{},
                      quantum::time_asymmetry(plan, rho, m.hamiltonian)});
    return t;
}

int selftest_dwell_asym() {
    SelfTest s;
    const auto m = models::dwell_model({1.0, 1.0, 0.1});
    const auto rho = quantum::thermal_state(m.hamiltonian, 0.1);
    const quantum::MeasurementPlan two({{0.0, m.z, 0.0}, {1.3, quantum::Observable(pauli::x()), 0.0}});
    s.expect(quantum::time_asymmetry(two, rho, m.hamiltonian) < 1e-10, "two-measurement plan is symmetric");
    const quantum::Hamiltonian hz(pauli::z());
    const quantum::MeasurementPlan same({{0.0, m.z, 0.0}, {1.0, m.z, 0.0}, {3.0, m.z, 0.0}});
    s.expect(quantum::compatibility_check(same, hz), "Z at three times under H = Z is compatible");
    s.expect(quantum::time_asymmetry(same, quantum::thermal_state(hz, 0.5), hz) < 1e-10, "compatible plan is symmetric");
    s.expect(quantum::time_asymmetry(models::dwell_plan(m, 0.0, 1.0, 3.0), rho, m.hamiltonian) > 0.01,
             "unequal gaps are asymmetric");
    return s.exit_code();
}

// ---------------------------------------------------------------------------
// dot-s3

struct DotS3 {
    double eps = 0.5, gamma = 1.0, kt = 0.0;
    double tol = 1e-8;
    std::optional<double> omega, omega_p;
    int grid = 0;
    double wmax = 3.0;
    long max_evals = kDefaultMaxEvals;
};

Table run_dot_s3(const DotS3 &o, const Common &c) {
    const models::DotParams p{o.eps, o.gamma, o.kt};
    p.validate();
    Table t;
    t.columns = {"omega", "omega_p", "s3_re", "s3_im", "err_est", "evals"};
    t.meta["tol"] = o.tol;
    auto row = [](const models::S3Result &r) -> std::vector<Cell> {
        return {r.omega, r.omega_p, r.value.real(), r.value.imag(), r.abs_error_estimate,
                static_cast<long long>(r.evaluations)};
    };
    if (o.grid > 0) {
        if (o.omega || o.omega_p) {
            throw std::invalid_argument("--grid excludes --omega/--omega-p");
        }
        if (o.grid < 2 || !(o.wmax > 0.0)) {
            throw std::invalid_argument("--grid must be >= 2 and --wmax positive");
        }
        const auto n = static_cast<std::size_t>(o.grid);
        auto freq = [&](std::size_t i) { return -o.wmax + 2.0 * o.wmax * static_cast<double>(i) / static_cast<double>(n - 1); };
        std::vector<models::S3Result> results(n * n);
        parallel_chunks(n * n, 16, c.threads, [&](std::size_t, std::size_t begin, std::size_t end) {
            for (std::size_t k = begin; k < end; ++k) {
                results[k] = models::s3n(freq(k / n), freq(k % n), p, o.tol, o.max_evals);
            }
        });
        for (const auto &r : results) {
            t.rows.push_back(row(r));
        }
        return t;
    }
    if (!o.omega || !o.omega_p) {
        throw std::invalid_argument("give --omega and --omega-p, or --grid");
    }
    t.rows.push_back(row(models::s3n(*o.omega, *o.omega_p, p, o.tol, o.max_evals)));
    return t;
}

int selftest_dot_s3() {
    SelfTest s;
    const models::DotParams p{0.5, 1.0, 0.0};
    const auto res = models::green_functions(0.5, p);
    s.expect(std::abs(res.gr - std::complex<double>(2.0, 0.0)) < 1e-15, "G^R on resonance is 2/Gamma");
    bool conj_ok = true;
    for (double w : {-1.7, 0.0, 0.3, 4.0}) {
        const auto b = models::green_functions(w, {0.5, 1.0, 0.4});
        conj_ok = conj_ok && std::abs(b.ga + std::conj(b.gr)) < 1e-12;
    }
    s.expect(conj_ok, "G^A = -conj(G^R)");
    s.expect(models::occupation_factor(0.0, 0.0) == 0.0, "sign factor vanishes at 0");
    bool zero_line = true;
    for (double w : {0.5, 1.0, 2.0}) {
        zero_line = zero_line && std::abs(models::s3n(w, 0.0, p, 1e-8).value.imag()) <= 1e-8;
    }
    s.expect(zero_line, "Im S3(w, 0) = 0");
    s.expect_throw([&] { models::s3n(1.0, 1.0, p, 0.0); }, "tol = 0 rejected");
    return s.exit_code();
}

// ---------------------------------------------------------------------------
// junction

struct Junction {
    double gammap = 10.0, epsp = 10.0, V = 0.1, C = 1.0;
    double eps = 0.0, gamma = 1e-3, kt = 0.0;
    double factor = 10.0;
    std::optional<double> omega, omega_p;
    double tol = 1e-10;
};

Table run_junction(const Junction &o, const Common &) {
    const models::JunctionParams j{o.gammap, o.epsp, o.V, o.C};
    const models::DotParams d{o.eps, o.gamma, o.kt};
    const auto q = models::junction_quantities(j);
    const auto report = models::regime_check(j, d, o.factor);
    Table t;
    t.columns = {"quantity", "value", "pass"};
    t.meta["factor"] = o.factor;
    t.rows.push_back({std::string("transmission"), q.transmission, Cell{}});
    t.rows.push_back({std::string("chi"), q.chi, Cell{}});
    t.rows.push_back({std::string("s3_i0"), q.s3_i0, Cell{}});
    for (const auto &item : report.items) {
        t.rows.push_back({item.name, item.ratio, static_cast<long long>(item.pass)});
    }
    t.rows.push_back({std::string("regime_all_pass"), Cell{}, static_cast<long long>(report.all_pass())});
    if (!report.all_pass()) {
        std::cerr << "warning: scale separation not satisfied at factor " << o.factor << '\n';
    }
    if (o.omega || o.omega_p) {
        if (!o.omega || !o.omega_p) {
            throw std::invalid_argument("give both --omega and --omega-p");
        }
        const auto total = models::s3_total(j, d, *o.omega, *o.omega_p, o.tol);
        t.meta["tol"] = o.tol;
        t.rows.push_back({std::string("s3_total_re"), total.real(), Cell{}});
        t.rows.push_back({std::string("s3_total_im"), total.imag(), Cell{}});
    }
    return t;
}

int selftest_junction() {
    SelfTest s;
    const auto half = models::junction_quantities({2.0, 2.0, 0.5, 1.0});
    s.expect(half.transmission == 0.5 && half.s3_i0 == 0.0, "transmission 1/2 gives s3_i0 = 0");
    s.expect(models::junction_quantities({2.0, 0.0, 0.5, 1.0}).chi == 0.0, "eps' = 0 gives chi = 0");
    s.expect(!models::regime_check({10.0, 10.0, 0.1, 1.0}, {0.0, 0.1, 0.0}).items[0].pass, "eV = Gamma fails");
    const models::JunctionParams open{10.0, 0.0, 0.1, 1.0};
    s.expect(models::s3_total(open, {0.5, 1.0, 0.0}, 1.0, 1.0, 1e-8) ==
                 std::complex<double>(models::junction_quantities(open).s3_i0, 0.0),
             "chi = 0 gives s3_i0");
    s.expect_throw([] { models::junction_quantities({0.0, 1.0, 1.0, 1.0}); }, "Gamma' = 0 rejected");
    return s.exit_code();
}

// ---------------------------------------------------------------------------
// classical-sym

classical::ClassicalSystem system_from_name(const std::string &name) {
    using classical::Builtin;
    static const std::map<std::string, Builtin> tags{{"harmonic", Builtin::Harmonic},
                                                     {"quartic-double-well", Builtin::QuarticDoubleWell},
                                                     {"cubic-anharmonic", Builtin::CubicAnharmonic}};
    return classical::ClassicalSystem::builtin(tags.at(name));
}

struct ClassicalSym {
    std::string system = "quartic-double-well";
    double kt = 0.5;
    std::size_t n = 100'000;
    double g = 0.3, sigma_q = 0.5, sigma_p = 0.0, dt = 1e-3;
    std::vector<double> times{-0.4, 0.0, 0.6};
    std::vector<std::string> observables{"q", "p", "q"};
};

classical::ClassicalProtocol protocol_from(const std::vector<double> &times, const std::vector<std::string> &obs, double g,
                                           double sigma_q, double sigma_p, double dt) {
    if (times.size() != obs.size() || times.empty()) {
        throw std::invalid_argument("--times and --observables must have the same nonzero length");
    }
    classical::ClassicalProtocol proto;
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (obs[k] != "q" && obs[k] != "p") {
            throw std::invalid_argument("observables must be q or p");
        }
        proto.steps.push_back({times[k],
                               obs[k] == "q" ? classical::ClassicalObservable::position()
                                             : classical::ClassicalObservable::momentum(),
                               std::nullopt});
    }
    proto.g = g;
    proto.detector = {sigma_q, sigma_p};
    proto.dt = dt;
    proto.validate();
    return proto;
}

Table run_classical_sym(const ClassicalSym &o, const Common &c) {
    const auto sys = system_from_name(o.system);
    const auto proto = protocol_from(o.times, o.observables, o.g, o.sigma_q, o.sigma_p, o.dt);
    const auto ens = classical::PhaseEnsemble::boltzmann(sys, o.kt, o.n, c.seed, {}, c.threads);
    const auto fwd = classical::estimate_moments(classical::run_experiment(ens, sys, proto, c.seed, c.threads), o.g,
                                                 o.sigma_q, c.threads);
    const auto rev = classical::estimate_moments(classical::reverse_experiment(ens, sys, proto, c.seed, c.threads), o.g,
                                                 o.sigma_q, c.threads);
    Table t;
    t.columns = {"moment", "forward", "forward_stderr", "reversed", "reversed_stderr", "z"};
    t.meta["system"] = o.system;
    for (std::size_t k = 0; k < fwd.entries().size(); ++k) {
        const auto &a = fwd.entries()[k];
        const auto &b = rev.entries()[k];
        const double se = std::hypot(a.stderr_, b.stderr_);
        t.rows.push_back({MomentTable::label(a.steps), a.value, a.stderr_, b.value, b.stderr_,
                          se > 0.0 ? Cell{(a.value - b.value) / se} : Cell{}});
    }
    return t;
}

int selftest_classical_sym() {
    SelfTest s;
    const auto sys = classical::ClassicalSystem::builtin(classical::Builtin::Harmonic);
    const long steps = std::lround(2.0 * std::acos(-1.0) / 1e-3);
    const auto x = classical::leapfrog_evolve({{1.0}, {0.0}}, sys, 1e-3, steps);
    s.expect(std::abs(x.q[0] - 1.0) < 1e-5, "harmonic oscillator returns after one period");
    const auto kick = classical::measurement_kick({{0.5}, {1.0}}, classical::ClassicalObservable::position(), 0.2, 0.0);
    s.expect(kick.point.p[0] == 1.0 && kick.point.q[0] == 0.5, "zero detector momentum leaves the point unchanged");
    const auto ens = classical::PhaseEnsemble::boltzmann(sys, 1.0, 2000, 3);
    const auto proto = protocol_from({-0.2, 0.0, 0.5}, {"q", "p", "q"}, 0.5, 1.0, 0.0, 1e-3);
    const auto f = classical::run_experiment(ens, sys, proto, 1);
    const auto r = classical::reverse_experiment(ens, sys, proto, 1);
    double diff = 0.0;
    for (std::size_t k = 0; k < f.outcomes.size(); ++k) {
        diff = std::max(diff, std::abs(f.outcomes[k] - r.outcomes[k]));
    }
    s.expect(diff <= 1e-12, "forward and reverse readings agree without back-action");
    s.expect_throw([] { protocol_from({0.0}, {"q"}, 0.0, 0.0, 1.0, 1e-3); }, "g = 0 with sigma_p > 0 rejected");
    return s.exit_code();
}

// ---------------------------------------------------------------------------
// disturbance-scan

struct DisturbanceScan {
    std::string kind = "quantum";
    std::vector<double> g{0.4, 0.2, 0.1, 0.05};
    DoubleWellOpts dw;
    std::size_t n = 100'000;
    double kt = 1.0;
};

Table run_disturbance_scan(const DisturbanceScan &o, const Common &c) {
    require_ordered(o.dw);
    std::vector<double> d;
    if (o.kind == "quantum") {
        const models::DoubleWellParams p{o.dw.eps, o.dw.tau, o.dw.kt};
        const auto m = models::dwell_model(p);
        const auto rho = quantum::thermal_state(m.hamiltonian, p.kT);
        const quantum::MeasurementPlan plan(
            {{o.dw.t1, m.z, 0.0}, {o.dw.t2, quantum::Observable(pauli::x()), 0.0}, {o.dw.t3, m.z, 0.0}});
        for (double g : o.g) {
            d.push_back(quantum::measurement_disturbance(plan.with_strength(g), rho, m.hamiltonian, 1));
        }
    } else {
        const auto sys = classical::ClassicalSystem::builtin(classical::Builtin::Harmonic);
        const auto ens = classical::PhaseEnsemble::boltzmann(sys, o.kt, o.n, c.seed, {}, c.threads);
        for (double g : o.g) {
            const auto proto = protocol_from({o.dw.t1, o.dw.t2, o.dw.t3}, {"q", "q", "q"}, g, 0.0, 1.0, 1e-3);
            d.push_back(classical::measurement_disturbance(ens, sys, proto, 1, c.seed, c.threads));
        }
    }
    const double slope = models::loglog_slope(o.g, d);
    Table t;
    t.columns = {"kind", "g", "disturbance", "slope"};
    for (std::size_t k = 0; k < d.size(); ++k) {
        t.rows.push_back({o.kind, o.g[k], d[k], slope});
    }
    return t;
}

int selftest_disturbance_scan() {
    SelfTest s;
    const auto m = models::dwell_model({1.0, 1.0, 0.1});
    const auto rho = quantum::thermal_state(m.hamiltonian, 0.1);
    const quantum::MeasurementPlan plan({{0.0, m.z, 0.0}, {1.0, quantum::Observable(pauli::x()), 0.0}, {3.0, m.z, 0.0}});
    s.expect(quantum::measurement_disturbance(plan, rho, m.hamiltonian, 1) < 1e-12, "weak limit is noninvasive");
    const auto sys = classical::ClassicalSystem::builtin(classical::Builtin::Harmonic);
    const auto ens = classical::PhaseEnsemble::boltzmann(sys, 1.0, 1000, 2);
    const auto proto = protocol_from({0.0, 0.5, 1.0}, {"q", "q", "q"}, 0.3, 1.0, 0.0, 1e-3);
    s.expect(classical::measurement_disturbance(ens, sys, proto, 1, 4) < 1e-12,
             "classical readings without back-action are noninvasive");
    const std::array<double, 3> x{1.0, 2.0, 4.0}, y{3.0, 12.0, 48.0};
    s.expect(std::abs(models::loglog_slope(x, y) - 2.0) < 1e-12, "slope fit recovers a square law");
    return s.exit_code();
}

// ---------------------------------------------------------------------------
// smoothing-scan

struct SmoothingScan {
    DoubleWellOpts dw;
    std::vector<double> widths{0.0, 0.5, 1.0, 2.0, 5.0, 10.0}; // in units of 1/Delta
};

Table run_smoothing_scan(const SmoothingScan &o, const Common &) {
    const models::DoubleWellParams p{o.dw.eps, o.dw.tau, o.dw.kt};
    p.validate();
    const double delta = p.delta();
    std::vector<double> widths;
    for (double w : o.widths) {
        widths.push_back(w / delta);
    }
    const auto scan = models::dwell_smoothing_scan(p, o.dw.t1, o.dw.t2, o.dw.t3, widths);
    Table t;
    t.columns = {"width_delta", "width", "delta_t", "ratio"};
    for (std::size_t k = 0; k < scan.size(); ++k) {
        t.rows.push_back({o.widths[k], scan[k].width, scan[k].asymmetry,
                          scan.front().asymmetry > 0.0 ? Cell{scan[k].asymmetry / scan.front().asymmetry} : Cell{}});
    }
    return t;
}

int selftest_smoothing_scan() {
    SelfTest s;
    const quantum::Hamiltonian h(pauli::z() + pauli::x());
    const std::array<quantum::WindowPoint, 1> point{{{0.7, 1.0}}};
    const auto single = quantum::smoothed_observable(quantum::Observable(pauli::x()), h, point);
    s.expect(max_abs_diff(single.matrix(), quantum::heisenberg_evolve(quantum::Observable(pauli::x()), h, 0.7).matrix()) <
                 1e-14,
             "single-point window is the Heisenberg observable");
    const std::array<quantum::WindowPoint, 2> bad{{{0.0, 0.5}, {1.0, 0.6}}};
    s.expect_throw([&] { quantum::smoothed_observable(quantum::Observable(pauli::x()), h, bad); },
                   "unnormalised window rejected");
    s.expect(quantum::gaussian_window(1.0, 0.0).size() == 1, "zero width gives a single node");
    return s.exit_code();
}

// ---------------------------------------------------------------------------

void write_output(const std::string &text, const std::string &path) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) {
        throw std::invalid_argument("cannot open output file " + path);
    }
    f << text;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Sequential weak-measurement simulations"};
    app.require_subcommand(1);
    app.set_version_flag("--version", WMSIM_VERSION);

    Common common;
    using Runner = std::function<Table()>;
    std::vector<std::tuple<CLI::App *, Runner, std::function<int()>>> commands;

    DwellCorr dwell_corr;
    {
        auto *sub = app.add_subcommand("dwell-corr", "Three-point Z correlator of the double well");
        add_common(sub, common);
        add_double_well(sub, dwell_corr.dw);
        sub->add_option("--method", dwell_corr.method)->check(CLI::IsMember({"analytic", "superop", "mc"}));
        sub->add_option("--g", dwell_corr.g, "Measurement strength for mc")->check(CLI::NonNegativeNumber);
        sub->add_option("--samples", dwell_corr.samples, "Monte Carlo samples")->check(CLI::Range(2ul, 1ul << 40));
        commands.emplace_back(sub, [&] { return run_dwell_corr(dwell_corr, common); }, selftest_dwell_corr);
    }
    DwellAsym dwell_asym;
    {
        auto *sub = app.add_subcommand("dwell-asym", "Forward and time-reversed quasiprobabilities");
        add_common(sub, common);
        add_double_well(sub, dwell_asym.dw);
        sub->add_option("--g", dwell_asym.g, "Measurement strength")->check(CLI::NonNegativeNumber);
        commands.emplace_back(sub, [&] { return run_dwell_asym(dwell_asym, common); }, selftest_dwell_asym);
    }
    DotS3 dot;
    {
        auto *sub = app.add_subcommand("dot-s3", "Third cumulant of the dot occupation");
        add_common(sub, common);
        sub->add_option("--eps", dot.eps, "Dot level");
        sub->add_option("--gamma", dot.gamma, "Tunnelling rate")->check(CLI::PositiveNumber);
        sub->add_option("--kt", dot.kt, "Temperature")->check(CLI::NonNegativeNumber);
        sub->add_option("--tol", dot.tol, "Absolute tolerance")->check(CLI::PositiveNumber);
        sub->add_option("--omega", dot.omega, "First frequency");
        sub->add_option("--omega-p", dot.omega_p, "Second frequency");
        sub->add_option("--grid", dot.grid, "Points per axis of a square grid over [-wmax, wmax]");
        sub->add_option("--wmax", dot.wmax, "Grid half-width")->check(CLI::PositiveNumber);
        sub->add_option("--max-evals", dot.max_evals, "Integrand evaluation budget")->check(CLI::PositiveNumber);
        commands.emplace_back(sub, [&] { return run_dot_s3(dot, common); }, selftest_dot_s3);
    }
    Junction junction;
    {
        auto *sub = app.add_subcommand("junction", "Tunnel-junction detector quantities and regime report");
        add_common(sub, common);
        sub->add_option("--gammap", junction.gammap, "Junction level width")->check(CLI::PositiveNumber);
        sub->add_option("--epsp", junction.epsp, "Junction level position");
        sub->add_option("--V", junction.V, "Bias");
        sub->add_option("--C", junction.C, "Capacitance")->check(CLI::PositiveNumber);
        sub->add_option("--eps", junction.eps, "Dot level");
        sub->add_option("--gamma", junction.gamma, "Dot tunnelling rate")->check(CLI::PositiveNumber);
        sub->add_option("--kt", junction.kt, "Temperature")->check(CLI::NonNegativeNumber);
        sub->add_option("--factor", junction.factor, "Required ratio for each inequality")->check(CLI::PositiveNumber);
        sub->add_option("--omega", junction.omega, "First frequency for the total third cumulant");
        sub->add_option("--omega-p", junction.omega_p, "Second frequency");
        sub->add_option("--tol", junction.tol, "Absolute tolerance on the total")->check(CLI::PositiveNumber);
        commands.emplace_back(sub, [&] { return run_junction(junction, common); }, selftest_junction);
    }
    ClassicalSym csym;
    {
        auto *sub = app.add_subcommand("classical-sym", "Forward and reversed classical moments");
        add_common(sub, common);
        sub->add_option("--system", csym.system)
            ->check(CLI::IsMember({"harmonic", "quartic-double-well", "cubic-anharmonic"}));
        sub->add_option("--kt", csym.kt, "Temperature of the initial ensemble")->check(CLI::PositiveNumber);
        sub->add_option("--n", csym.n, "Trajectories")->check(CLI::Range(2ul, 1ul << 32));
        sub->add_option("--g", csym.g, "Coupling")->check(CLI::NonNegativeNumber);
        sub->add_option("--sigma-q", csym.sigma_q, "Detector position variance")->check(CLI::NonNegativeNumber);
        sub->add_option("--sigma-p", csym.sigma_p, "Detector momentum variance")->check(CLI::NonNegativeNumber);
        sub->add_option("--dt", csym.dt, "Integrator step")->check(CLI::PositiveNumber);
        sub->add_option("--times", csym.times, "Measurement times")->delimiter(',');
        sub->add_option("--observables", csym.observables, "q or p per step")->delimiter(',');
        commands.emplace_back(sub, [&] { return run_classical_sym(csym, common); }, selftest_classical_sym);
    }
    DisturbanceScan dscan;
    {
        auto *sub = app.add_subcommand("disturbance-scan", "Disturbance of the middle step against strength");
        add_common(sub, common);
        sub->add_option("--kind", dscan.kind)->check(CLI::IsMember({"quantum", "classical"}));
        sub->add_option("--g", dscan.g, "Strengths")->delimiter(',')->check(CLI::PositiveNumber);
        add_double_well(sub, dscan.dw);
        sub->add_option("--n", dscan.n, "Classical trajectories")->check(CLI::Range(2ul, 1ul << 32));
        sub->add_option("--ensemble-kt", dscan.kt, "Classical ensemble temperature")->check(CLI::PositiveNumber);
        commands.emplace_back(sub, [&] { return run_disturbance_scan(dscan, common); }, selftest_disturbance_scan);
    }
    SmoothingScan sscan;
    {
        auto *sub = app.add_subcommand("smoothing-scan", "Time asymmetry against smoothing-window width");
        add_common(sub, common);
        add_double_well(sub, sscan.dw);
        sub->add_option("--widths", sscan.widths, "Window widths in units of 1/Delta")
            ->delimiter(',')
            ->check(CLI::NonNegativeNumber);
        commands.emplace_back(sub, [&] { return run_smoothing_scan(sscan, common); }, selftest_smoothing_scan);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        app.exit(e, std::cerr, std::cerr);
        std::cerr << app.help();
        return kExitInvalid;
    }

    for (auto &[sub, run, selftest] : commands) {
        if (!sub->parsed()) {
            continue;
        }
        if (common.selftest) {
            return selftest();
        }
        try {
            const auto start = std::chrono::steady_clock::now();
            Table t = run();
            json meta = json::object();
            meta["subcommand"] = sub->get_name();
            meta["version"] = WMSIM_VERSION;
            meta["seed"] = common.seed;
            for (auto &[k, v] : t.meta.items()) {
                meta[k] = v;
            }
            meta["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            t.meta = std::move(meta);
            write_output(render(t, common.format), common.out);
            return 0;
        } catch (const models::ConvergenceError &e) {
            std::cerr << "error: " << e.what() << " (partial estimate " << number(e.partial().value.real()) << " "
                      << number(e.partial().value.imag()) << "i, error " << number(e.partial().abs_error_estimate)
                      << ")\n";
            return kExitNumerical;
        } catch (const std::domain_error &e) {
            std::cerr << "error: " << e.what() << '\n';
            return kExitNumerical;
        } catch (const std::exception &e) {
            std::cerr << "error: " << e.what() << '\n';
            std::cerr << sub->help();
            return kExitInvalid;
        }
    }
    return kExitInvalid;
}
