#include "wildflow/harness.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

#include "wildflow/fft.hpp"
#include "wildflow/noise.hpp"
#include "wildflow/snapshot.hpp"
#include "wildflow/spectral.hpp"
#include "wildflow/step.hpp"

namespace wf {

namespace {

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// key -> setter; one shared table so file parsing and CLI overrides
// accept exactly the same names
using Setter = std::function<void(RunConfig&, const std::string&)>;

double to_double(const std::string& v) {
    std::size_t pos = 0;
    try {
        double x = std::stod(v, &pos);
        if (pos == v.size()) return x;
    } catch (const std::exception&) {
    }
    throw std::runtime_error("bad number: " + v);
}

long long to_int(const std::string& v) {
    std::size_t pos = 0;
    try {
        long long x = std::stoll(v, &pos);
        if (pos == v.size()) return x;
    } catch (const std::exception&) {
    }
    throw std::runtime_error("bad integer: " + v);
}

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> m = {
        {"a", [](RunConfig& c, const std::string& v) { c.a = to_double(v); }},
        {"b", [](RunConfig& c, const std::string& v) { c.b = to_double(v); }},
        {"alpha",
         [](RunConfig& c, const std::string& v) { c.alpha = to_double(v); }},
        {"delta_h",
         [](RunConfig& c, const std::string& v) { c.delta_h = to_double(v); }},
        {"L", [](RunConfig& c, const std::string& v) { c.L = to_double(v); }},
        {"T", [](RunConfig& c, const std::string& v) { c.T = to_double(v); }},
        {"kappa",
         [](RunConfig& c, const std::string& v) { c.kappa = to_double(v); }},
        {"q_max",
         [](RunConfig& c, const std::string& v) { c.q_max = int(to_int(v)); }},
        {"grid",
         [](RunConfig& c, const std::string& v) { c.grid_n = int(to_int(v)); }},
        {"dt", [](RunConfig& c, const std::string& v) { c.dt = to_double(v); }},
        {"window",
         [](RunConfig& c, const std::string& v) { c.window = int(to_int(v)); }},
        {"t_start",
         [](RunConfig& c, const std::string& v) { c.t_start = to_double(v); }},
        {"s_Q",
         [](RunConfig& c, const std::string& v) { c.s_Q = to_double(v); }},
        {"k_max",
         [](RunConfig& c, const std::string& v) { c.k_max = int(to_int(v)); }},
        {"seed",
         [](RunConfig& c, const std::string& v) {
             c.seed = std::uint64_t(to_int(v));
         }},
        {"noise_dt",
         [](RunConfig& c, const std::string& v) { c.noise_dt = to_double(v); }},
        {"noise_grid",
         [](RunConfig& c, const std::string& v) {
             c.noise_grid = int(to_int(v));
         }},
        {"energy_form",
         [](RunConfig& c, const std::string& v) { c.energy_form = v; }},
        {"energy_e0",
         [](RunConfig& c, const std::string& v) {
             c.energy_e0 = to_double(v);
         }},
        {"energy_e1",
         [](RunConfig& c, const std::string& v) {
             c.energy_e1 = to_double(v);
         }},
        {"energy_table",
         [](RunConfig& c, const std::string& v) { c.energy_table = v; }},
        {"out", [](RunConfig& c, const std::string& v) { c.out_dir = v; }},
        {"resume",
         [](RunConfig& c, const std::string& v) {
             c.resume = (v == "1" || v == "true");
         }},
        {"series_samples",
         [](RunConfig& c, const std::string& v) {
             c.series_samples = int(to_int(v));
         }},
    };
    return m;
}

std::string serialize(const RunConfig& c) {
    std::ostringstream o;
    o << "a " << fmt(c.a) << "\nb " << fmt(c.b) << "\nalpha " << fmt(c.alpha)
      << "\ndelta_h " << fmt(c.delta_h) << "\nL " << fmt(c.L) << "\nT "
      << fmt(c.T) << "\nkappa " << fmt(c.kappa) << "\nq_max " << c.q_max
      << "\ngrid " << c.grid_n << "\ndt " << fmt(c.dt) << "\nwindow "
      << c.window << "\nt_start " << fmt(c.t_start) << "\ns_Q " << fmt(c.s_Q)
      << "\nk_max " << c.k_max << "\nseed " << c.seed << "\nnoise_dt "
      << fmt(c.noise_dt) << "\nnoise_grid " << c.noise_grid
      << "\nenergy_form " << c.energy_form << "\nenergy_e0 "
      << fmt(c.energy_e0) << "\nenergy_e1 " << fmt(c.energy_e1);
    if (!c.energy_table.empty()) o << "\nenergy_table " << c.energy_table;
    o << "\nout " << c.out_dir << "\nresume " << (c.resume ? 1 : 0)
      << "\nseries_samples " << c.series_samples << "\n";
    return o.str();
}

std::vector<std::pair<double, double>> parse_table(const std::string& s) {
    std::vector<std::pair<double, double>> tab;
    std::istringstream in(s);
    std::string item;
    while (std::getline(in, item, ',')) {
        auto colon = item.find(':');
        if (colon == std::string::npos)
            throw std::runtime_error("energy_table entry needs t:E, got " +
                                     item);
        tab.emplace_back(to_double(item.substr(0, colon)),
                         to_double(item.substr(colon + 1)));
    }
    return tab;
}

double norm1(const Field& f) {
    double s = 0.0;
    for (int ax = 0; ax < 3; ++ax) s = std::max(s, sup_abs(derivative(f, ax)));
    return s;
}

std::string out_root(const std::string& dir) {
    namespace fs = std::filesystem;
    const char* env = std::getenv("WILDFLOW_OUT");
    fs::path p(dir);
    if (env && *env && p.is_relative()) p = fs::path(env) / p;
    return p.string();
}

struct IndexRow {
    int q = 0, j = 0;
    double t = 0.0;
    std::string name, rel;
};

const char* const kFieldNames[5] = {"v", "p", "R", "phi", "z"};

ErState rebuild_state(const std::string& root,
                      const std::vector<IndexRow>& rows, int q,
                      const EnergyProfile& E) {
    namespace fs = std::filesystem;
    std::map<int, std::map<std::string, const IndexRow*>> byj;
    for (const auto& r : rows)
        if (r.q == q) byj[r.j][r.name] = &r;
    if (byj.empty())
        throw std::runtime_error("no snapshots for level " +
                                 std::to_string(q));
    ErState st;
    st.q = q;
    st.E = E;
    for (const auto& [j, fields] : byj) {
        (void)j;
        for (const char* name : kFieldNames) {
            auto it = fields.find(name);
            if (it == fields.end())
                throw std::runtime_error(std::string("missing snapshot ") +
                                         name);
            double t = 0.0;
            Field f = read_snapshot((fs::path(root) / it->second->rel).string(),
                                    &t);
            if (std::string(name) == "v") {
                st.times.push_back(t);
                st.grid = f.grid;
                st.v.push_back(std::move(f));
            } else if (std::string(name) == "p")
                st.p.push_back(std::move(f));
            else if (std::string(name) == "R")
                st.R.push_back(std::move(f));
            else if (std::string(name) == "phi")
                st.phi.push_back(std::move(f));
            else
                st.z.push_back(std::move(f));
        }
    }
    return st;
}

std::vector<IndexRow> read_index(const std::string& root) {
    std::ifstream in(std::filesystem::path(root) / "index.txt");
    if (!in) throw std::runtime_error("cannot open index.txt in " + root);
    std::vector<IndexRow> rows;
    IndexRow r;
    while (in >> r.q >> r.j >> r.t >> r.name >> r.rel) rows.push_back(r);
    return rows;
}

}  // namespace

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file " + path);
    RunConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::istringstream ls(line);
        std::string key, value;
        if (!(ls >> key)) continue;
        std::getline(ls, value);
        auto b = value.find_first_not_of(" \t");
        value = b == std::string::npos ? std::string() : value.substr(b);
        auto e = value.find_last_not_of(" \t");
        if (e != std::string::npos) value = value.substr(0, e + 1);
        try {
            apply_override(cfg, key, value);
        } catch (const std::exception& ex) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": " + ex.what());
        }
    }
    return cfg;
}

void apply_override(RunConfig& cfg, const std::string& key,
                    const std::string& value) {
    auto it = setters().find(key);
    if (it == setters().end())
        throw std::runtime_error("unknown config key: " + key);
    it->second(cfg, value);
}

EnergyProfile energy_profile(const RunConfig& cfg) {
    if (cfg.energy_form == "constant")
        return EnergyProfile::constant(cfg.energy_e0);
    if (cfg.energy_form == "linear")
        return EnergyProfile::linear(cfg.energy_e0, cfg.energy_e1);
    if (cfg.energy_form == "table") {
        EnergyProfile E;
        E.form = EnergyProfile::Form::table;
        for (auto& [t, e] : parse_table(cfg.energy_table)) {
            E.tab_t.push_back(t);
            E.tab_e.push_back(e);
        }
        return E;
    }
    throw std::runtime_error("energy_form must be constant|linear|table");
}

std::vector<std::string> validate(const RunConfig& cfg) {
    std::vector<std::string> bad;
    auto req = [&](bool ok, const std::string& msg) {
        if (!ok) bad.push_back(msg);
    };
    req(cfg.a > 1.0, "a must be > 1");
    req(cfg.b > 1.0, "b must be > 1");
    req(cfg.alpha > 0.0 && cfg.alpha < 1.0 / 7.0, "alpha must be in (0, 1/7)");
    req(cfg.delta_h > 0.0 && cfg.delta_h < 0.5, "delta_h must be in (0, 1/2)");
    req(cfg.L > 0.0, "L must be > 0");
    req(cfg.T > 0.0, "T must be > 0");
    req(cfg.kappa > 0.0 && cfg.kappa < 1.0, "kappa must be in (0, 1)");
    req(cfg.q_max >= 0, "q_max must be >= 0");
    req(cfg.grid_n >= 8 && cfg.grid_n % 2 == 0, "grid must be even and >= 8");
    req(cfg.dt > 0.0, "dt must be > 0");
    req(cfg.window >= 5, "window must be >= 5 (time stencils)");
    req(cfg.t_start >= 0.0, "t_start must be >= 0");
    req(cfg.t_start + (cfg.window - 1) * cfg.dt <= 2.0 * cfg.T,
        "window must end before the horizon 2T");
    req(cfg.s_Q > 0.0, "s_Q must be > 0");
    req(cfg.k_max >= 0, "k_max must be >= 0");
    req(cfg.noise_grid >= 8 && cfg.noise_grid % 2 == 0,
        "noise_grid must be even and >= 8");
    if (cfg.k_max > 0) {
        req(cfg.noise_grid >= 4 * cfg.k_max,
            "noise_grid must be >= 4 k_max (alias-free noise sampling)");
        req(12 * cfg.k_max <= cfg.grid_n,
            "grid must be >= 12 k_max (band budget for exact identities)");
        req(cfg.noise_dt > 0.0, "noise_dt must be > 0");
    }
    req(cfg.series_samples >= 3, "series_samples must be >= 3");
    if (cfg.energy_form != "constant" && cfg.energy_form != "linear" &&
        cfg.energy_form != "table")
        bad.push_back("energy_form must be constant|linear|table");
    else if (cfg.energy_form == "table") {
        try {
            auto tab = parse_table(cfg.energy_table);
            if (tab.size() < 2)
                bad.push_back("energy_table needs >= 2 nodes");
            for (std::size_t i = 1; i < tab.size(); ++i)
                if (tab[i].first <= tab[i - 1].first) {
                    bad.push_back("energy_table times must increase");
                    break;
                }
        } catch (const std::exception& ex) {
            bad.push_back(ex.what());
        }
    }
    // the step window must fit inside one transport slab
    if (bad.empty() && cfg.q_max > 0) {
        Cascade c = build_cascade(cfg.a, cfg.b, cfg.alpha, cfg.delta_h, cfg.L,
                                  cfg.T, cfg.kappa, cfg.q_max);
        if ((cfg.window - 1) * cfg.dt > c.eps[0])
            bad.push_back("window span exceeds the transport slab length " +
                          fmt(c.eps[0]));
        if (3.0 * c.lambda[1] > cfg.grid_n)
            bad.push_back("grid cannot resolve lambda_1 = " +
                          fmt(c.lambda[1]) + " within the 2/3 band");
    }
    return bad;
}

EstimateRatios estimate_ratios(const ErState& cur, const ErState* prev,
                               const Cascade& c) {
    EstimateRatios r;
    r.q = cur.q;
    const int q = cur.q;
    const std::size_t jm = cur.times.size() / 2;
    const double lam = c.lambda[q], del = c.delta[q];
    const double del1 = c.delta[q + 1];
    r.v_n1 = holder_norm(cur.v[jm], 1, 0.0) / (lam * std::sqrt(del));
    r.p_n1 = holder_norm(cur.p[jm], 1, 0.0) / (lam * del);
    r.r_n0 = sup_abs(cur.R[jm]) / (std::pow(lam, -c.gamma) * del1);
    r.phi_n0 = sup_abs(cur.phi[jm]) /
               (std::pow(lam, -1.5 * c.gamma) * std::pow(del1, 1.5));
    if (prev && q >= 1) {
        const Field dv = cur.v[jm] - prev->v[jm];
        const Field dp = cur.p[jm] - prev->p[jm];
        const double lamq = c.lambda[q - 1], lam1 = c.lambda[q];
        r.dist_v = (sup_abs(dv) + norm1(dv) / lam1) /
                   (std::sqrt(c.delta[q]) * std::pow(lamq, -c.gamma / 2.0));
        r.dist_p = (sup_abs(dp) + norm1(dp) / lam1) / c.delta[q];
    }
    return r;
}

LeiSummary lei_check(const ErState& st) {
    LeiSummary s;
    const std::size_t J = st.times.size();
    if (J < 3) throw std::runtime_error("lei_check needs >= 3 snapshots");
    std::vector<Field> trR(J);
    for (std::size_t j = 0; j < J; ++j) trR[j] = trace_of(st.R[j]);
    double l1 = 0.0;
    for (std::size_t j = 0; j < J; ++j) {
        Field res = energy_residual(st, j);
        s.res_sup = std::max(s.res_sup, sup_abs(res));
        double m = 0.0;
        for (double x : res.a) m += std::abs(x);
        l1 += m / double(res.a.size());

        const Field u = st.v[j] + st.z[j];
        Field d = time_derivative_sample(trR, st.times, j);
        d += advect_raw(u, trR[j]);
        d *= 0.5;
        d += div_vector(tensor_apply(st.R[j], st.v[j]));
        d += contract_sym_gradT(st.R[j], st.z[j]);
        d += div_vector(st.phi[j]);
        double dm = 0.0;
        for (double x : d.a) dm += x;
        dm /= double(d.a.size());
        s.t.push_back(st.times[j]);
        s.diss.push_back(dm);
        const double ep = st.E.deriv(st.times[j]);
        s.diss_dev = std::max(s.diss_dev, std::abs(dm - ep));
        if (ep > 1e-12 && dm <= 0.0) s.sign_ok = false;
    }
    s.res_l1 = l1 / double(J);
    return s;
}

std::vector<double> shell_spectrum(const Field& f) {
    Spectrum sp = to_spectrum(f);
    const int n = f.grid.n, nz = sp.nz();
    const int smax = int(std::lround(std::sqrt(3.0) * (n / 2))) + 1;
    std::vector<double> shells(smax + 1, 0.0);
    for (int c = 0; c < components(f.rank); ++c) {
        const auto* cc = sp.comp(c);
        for (int jx = 0; jx < n; ++jx)
            for (int jy = 0; jy < n; ++jy)
                for (int jz = 0; jz < nz; ++jz) {
                    const int kx = sp.wave(jx), ky = sp.wave(jy), kz = jz;
                    // interior kz rows stand for the +/-kz pair
                    const double w = (jz == 0 || jz == n / 2) ? 1.0 : 2.0;
                    const double e =
                        0.5 * w * std::norm(cc[sp.mode_index(jx, jy, jz)]);
                    const int sh = int(std::lround(
                        std::sqrt(double(kx) * kx + ky * ky + kz * kz)));
                    shells[sh] += e;
                }
    }
    while (shells.size() > 1 && shells.back() == 0.0) shells.pop_back();
    return shells;
}

void export_series(const ErState& st, std::string& series_csv,
                   std::string& spectra_csv) {
    auto rr = residual_report(st);
    for (std::size_t j = 0; j < st.times.size(); ++j) {
        const Field u = st.v[j] + st.z[j];
        const double en = 0.5 * l2_norm(u) * l2_norm(u);
        series_csv += std::to_string(st.q) + "," + fmt(st.times[j]) + "," +
                      fmt(en) + "," + fmt(rr[j].mom_l2) + "," +
                      fmt(rr[j].mom_sup) + "," + fmt(rr[j].energy_l2) + "," +
                      fmt(rr[j].energy_sup) + "," + fmt(rr[j].div_v_l2) + "\n";
        auto shells = shell_spectrum(u);
        for (std::size_t s = 0; s < shells.size(); ++s)
            spectra_csv += std::to_string(st.q) + "," + fmt(st.times[j]) +
                           "," + std::to_string(s) + "," + fmt(shells[s]) +
                           "\n";
    }
}

void write_file_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    fs::path tmp = p;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out.write(content.data(), std::streamsize(content.size()));
        if (!out) throw std::runtime_error("short write to " + tmp.string());
    }
    fs::rename(tmp, p);
}

int run(const RunConfig& cfg) {
    namespace fs = std::filesystem;
    auto bad = validate(cfg);
    if (!bad.empty()) {
        std::string rep = "validation failed:\n";
        for (const auto& m : bad) rep += "  - " + m + "\n";
        std::fputs(rep.c_str(), stderr);
        return 2;
    }
    const std::string root = out_root(cfg.out_dir);
    if (cfg.resume && fs::exists(fs::path(root) / "manifest.txt")) return 0;

    const int kmax3d = std::max(1, cfg.grid_n / 16);
    StepGeometry geo = build_step_geometry(36, kmax3d);
    Cascade c = build_cascade(cfg.a, cfg.b, cfg.alpha, cfg.delta_h, cfg.L,
                              cfg.T, cfg.kappa, std::max(cfg.q_max, 1),
                              geo.inf_n0, 1.0, geo.Mbar, 1.0);
    NoiseSpec ns;
    ns.s_Q = cfg.s_Q;
    ns.k_max = cfg.k_max;
    ns.seed = cfg.seed;
    ns.dt = cfg.noise_dt;
    ns.two_T = 2.0 * cfg.T;
    ns.grid_n = cfg.noise_grid;
    NoisePath path = sample_path(ns);
    const double frak_t =
        stopping_time(path, cfg.L, cfg.delta_h, c.N1, cfg.T);

    auto level0_at = [&](const std::vector<double>& times) {
        std::vector<Field> z0;
        for (double t : times) {
            Field zm = mollify_at(path, c.i_moll[0], t);
            z0.push_back(zm.grid.n == cfg.grid_n ? std::move(zm)
                                                 : resample(zm, cfg.grid_n));
        }
        return init_state(times, z0, energy_profile(cfg));
    };

    // iteration window, clamped inside [0, frak_t]
    const double span = (cfg.window - 1) * cfg.dt;
    double t0 = std::min(cfg.t_start, std::max(0.0, frak_t - span));
    std::vector<double> wtimes(cfg.window);
    for (int j = 0; j < cfg.window; ++j) wtimes[j] = t0 + j * cfg.dt;

    std::vector<ErState> levels;
    levels.push_back(level0_at(wtimes));
    std::string step_manifests;
    for (int q = 0; q < cfg.q_max; ++q) {
        StepReport rep;
        try {
            levels.push_back(iterate_step(levels.back(), path, c, geo, &rep));
        } catch (const std::exception& ex) {
            std::string fail = "guard failure at level " + std::to_string(q) +
                               " -> " + std::to_string(q + 1) + ":\n  " +
                               ex.what() + "\nstopping_time " + fmt(frak_t) +
                               "\n";
            write_file_atomic((fs::path(root) / "failure.txt").string(), fail);
            std::fputs(fail.c_str(), stderr);
            return 1;
        }
        step_manifests += rep.manifest() + "\n";
    }

    // artifacts
    std::string series, spectra, index, lei, ratios;
    ratios = "q,v_n1,p_n1,r_n0,phi_n0,dist_v,dist_p\n";
    for (std::size_t q = 0; q < levels.size(); ++q) {
        export_series(levels[q], series, spectra);
        auto ls = lei_check(levels[q]);
        lei += "level " + std::to_string(q) + ": res_sup " + fmt(ls.res_sup) +
               " res_l1 " + fmt(ls.res_l1) + " diss_dev " + fmt(ls.diss_dev) +
               " sign_ok " + (ls.sign_ok ? "1" : "0") + "\n";
        auto er =
            estimate_ratios(levels[q], q ? &levels[q - 1] : nullptr, c);
        ratios += std::to_string(q) + "," + fmt(er.v_n1) + "," +
                  fmt(er.p_n1) + "," + fmt(er.r_n0) + "," + fmt(er.phi_n0) +
                  "," + fmt(er.dist_v) + "," + fmt(er.dist_p) + "\n";
        for (std::size_t j = 0; j < levels[q].times.size(); ++j) {
            const Field* fields[5] = {&levels[q].v[j], &levels[q].p[j],
                                      &levels[q].R[j], &levels[q].phi[j],
                                      &levels[q].z[j]};
            for (int f = 0; f < 5; ++f) {
                std::string rel = "snapshots/q" + std::to_string(q) + "/j" +
                                  std::to_string(j) + "_" + kFieldNames[f] +
                                  ".wef";
                fs::create_directories((fs::path(root) / rel).parent_path());
                write_snapshot((fs::path(root) / rel).string(), *fields[f],
                               levels[q].times[j]);
                index += std::to_string(q) + " " + std::to_string(j) + " " +
                         fmt(levels[q].times[j]) + " " + kFieldNames[f] + " " +
                         rel + "\n";
            }
        }
    }

    // horizon-spanning level-0 diagnostics
    std::string horizon, hspec;
    {
        std::vector<double> ht(cfg.series_samples);
        for (int k = 0; k < cfg.series_samples; ++k)
            ht[k] = frak_t * k / double(cfg.series_samples - 1);
        ErState h0 = level0_at(ht);
        export_series(h0, horizon, hspec);
        auto ls = lei_check(h0);
        lei += "horizon level 0: res_sup " + fmt(ls.res_sup) + " res_l1 " +
               fmt(ls.res_l1) + " diss_dev " + fmt(ls.diss_dev) +
               " sign_ok " + (ls.sign_ok ? "1" : "0") + "\n";
    }

    const std::string header =
        "q,t,energy,mom_l2,mom_sup,energy_l2,energy_sup,div_v_l2\n";
    write_file_atomic((fs::path(root) / "config.txt").string(),
                      serialize(cfg));
    write_file_atomic((fs::path(root) / "series.csv").string(),
                      header + series);
    write_file_atomic((fs::path(root) / "horizon.csv").string(),
                      header + horizon);
    write_file_atomic((fs::path(root) / "spectra.csv").string(),
                      "q,t,shell,value\n" + spectra);
    write_file_atomic((fs::path(root) / "ratios.csv").string(), ratios);
    write_file_atomic((fs::path(root) / "lei.txt").string(), lei);
    write_file_atomic((fs::path(root) / "index.txt").string(), index);
    write_file_atomic(
        (fs::path(root) / "manifest.txt").string(),
        "stopping_time " + fmt(frak_t) +
            (wtimes.back() > frak_t
                 ? "\nwindow_past_stopping_time 1  # system meaningful only "
                   "up to the stopping time; window kept for diagnostics"
                 : "") +
            "\nmax_pipe_mode " +
            std::to_string(geo.max_pipe_mode) + "\ninf_n0 " +
            fmt(geo.inf_n0) + "\nMbar " + fmt(geo.Mbar) + "\n" +
            c.manifest_block() + step_manifests);
    return 0;
}

int check_artifacts(const std::string& out_dir, std::string* report) {
    namespace fs = std::filesystem;
    const std::string root = out_root(out_dir);
    RunConfig cfg = load_config((fs::path(root) / "config.txt").string());
    auto rows = read_index(root);
    int qmax = 0;
    for (const auto& r : rows) qmax = std::max(qmax, r.q);

    // stored series rows keyed by (q, t)
    std::ifstream sin(fs::path(root) / "series.csv");
    if (!sin) throw std::runtime_error("cannot open series.csv");
    std::map<std::pair<int, std::string>, std::vector<double>> stored;
    std::string line;
    std::getline(sin, line);  // header
    while (std::getline(sin, line)) {
        std::istringstream ls(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (cells.size() != 8) throw std::runtime_error("bad series row");
        std::vector<double> vals;
        for (std::size_t i = 2; i < cells.size(); ++i)
            vals.push_back(to_double(cells[i]));
        stored[{int(to_int(cells[0])), cells[1]}] = vals;
    }

    std::string rep;
    bool ok = true;
    for (int q = 0; q <= qmax; ++q) {
        ErState st = rebuild_state(root, rows, q, energy_profile(cfg));
        std::string series, spectra;
        export_series(st, series, spectra);
        std::istringstream rs(series);
        while (std::getline(rs, line)) {
            std::istringstream ls(line);
            std::string cell;
            std::vector<std::string> cells;
            while (std::getline(ls, cell, ',')) cells.push_back(cell);
            auto it = stored.find({int(to_int(cells[0])), cells[1]});
            if (it == stored.end()) {
                rep += "missing stored row q=" + cells[0] + " t=" + cells[1] +
                       "\n";
                ok = false;
                continue;
            }
            for (std::size_t i = 2; i < cells.size(); ++i) {
                const double a = to_double(cells[i]), b = it->second[i - 2];
                const double tol = 1e-9 * std::max(1.0, std::abs(b));
                if (std::abs(a - b) > tol) {
                    rep += "mismatch q=" + cells[0] + " t=" + cells[1] +
                           " col=" + std::to_string(i) + ": recomputed " +
                           fmt(a) + " stored " + fmt(b) + "\n";
                    ok = false;
                }
            }
        }
        rep += "level " + std::to_string(q) + ": " +
               std::to_string(st.times.size()) + " snapshots re-verified\n";
    }
    if (report) *report = rep;
    return ok ? 0 : 1;
}

std::string audit_table(const RunConfig& cfg) {
    Cascade c = build_cascade(cfg.a, cfg.b, cfg.alpha, cfg.delta_h, cfg.L,
                              cfg.T, cfg.kappa, std::max(cfg.q_max, 1));
    std::string out = "q,name,lhs_log,rhs_log,ok\n";
    for (int q = 0; q <= cfg.q_max; ++q)
        for (const auto& row : audit_scale_inequalities(c, q))
            out += std::to_string(q) + "," + row.name + "," +
                   fmt(row.lhs_log) + "," + fmt(row.rhs_log) + "," +
                   (row.ok ? "1" : "0") + "\n";
    return out;
}

std::string spectra_from_artifacts(const std::string& out_dir) {
    const std::string root = out_root(out_dir);
    RunConfig cfg = load_config(
        (std::filesystem::path(root) / "config.txt").string());
    auto rows = read_index(root);
    int qmax = 0;
    for (const auto& r : rows) qmax = std::max(qmax, r.q);
    std::string series, spectra;
    for (int q = 0; q <= qmax; ++q) {
        ErState st = rebuild_state(root, rows, q, energy_profile(cfg));
        export_series(st, series, spectra);
    }
    return "q,t,shell,value\n" + spectra;
}

}  // namespace wf
