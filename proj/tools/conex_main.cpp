// conex: singular exponents, homogeneous profiles, exponent bounds, barrier
// verification, and wide-stencil Dirichlet experiments on cone sections.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "conex/bounds_barriers.hpp"
#include "conex/cone_exponents.hpp"
#include "conex/fd_viscosity.hpp"
#include "conex/json_io.hpp"
#include "conex/operators.hpp"

using namespace conex;

namespace {

constexpr double kPi = 3.14159265358979323846;

struct CommonOpts {
    std::string op = "laplacian";
    std::string op_json_file;
    double lambda = 1.0, Lambda = 1.0, mu = 0.0;
    int dim = 2;
    double theta0 = kPi / 4;
    bool degrees = false;
    double tol = 1e-9;
    double ode_step = 0.0;
    std::string out;
    std::uint64_t seed = 20240707;
    std::string format = "json";
    std::string config_file;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--op", o.op,
                    "operator: laplacian|pucci-plus|pucci-minus|extremal-plus|extremal-minus");
    cmd->add_option("--op-json", o.op_json_file, "operator spec as a JSON file (isaacs, wrappers)");
    cmd->add_option("--lambda", o.lambda, "ellipticity lower constant");
    cmd->add_option("--Lambda", o.Lambda, "ellipticity upper constant");
    cmd->add_option("--mu", o.mu, "gradient drift constant");
    cmd->add_option("--dim", o.dim, "space dimension (2..8)");
    cmd->add_option("--theta0", o.theta0, "cone half-aperture (radians unless --degrees)");
    cmd->add_flag("--degrees", o.degrees, "interpret --theta0 in degrees");
    cmd->add_option("--tol", o.tol, "shooting tolerance on alpha");
    cmd->add_option("--ode-step", o.ode_step, "profile ODE step (0 = theta0/4096)");
    cmd->add_option("--out", o.out, "output path prefix");
    cmd->add_option("--seed", o.seed, "deterministic seed echoed into run.json");
    cmd->add_option("--format", o.format, "json|csv preference for scalar reports");
    cmd->add_option("--config", o.config_file, "run.json from a previous run; flags override");
}

// --config run.json: adopt stored options for flags the user did not pass
void merge_config(CLI::App* cmd, CommonOpts& o) {
    if (o.config_file.empty()) return;
    std::ifstream in(o.config_file);
    if (!in) throw CLI::ValidationError("--config", "cannot open " + o.config_file);
    nlohmann::json j;
    in >> j;
    const auto& opts = j.contains("options") ? j["options"] : j;
    auto take = [&](const char* flag, auto& slot) {
        using T = std::decay_t<decltype(slot)>;
        if (cmd->count(flag) == 0 && opts.contains(flag + 2)) slot = opts[flag + 2].get<T>();
    };
    take("--op", o.op);
    take("--op-json", o.op_json_file);
    take("--lambda", o.lambda);
    take("--Lambda", o.Lambda);
    take("--mu", o.mu);
    take("--dim", o.dim);
    take("--theta0", o.theta0);
    take("--tol", o.tol);
    take("--ode-step", o.ode_step);
    take("--out", o.out);
    take("--seed", o.seed);
    take("--format", o.format);
}

OperatorSpec make_operator(const CommonOpts& o) {
    if (!o.op_json_file.empty()) {
        std::ifstream in(o.op_json_file);
        if (!in) throw CLI::ValidationError("--op-json", "cannot open " + o.op_json_file);
        std::stringstream ss;
        ss << in.rdbuf();
        return operator_from_json_text(ss.str());
    }
    if (o.op == "laplacian") return OperatorSpec::laplacian();
    if (o.op == "pucci-plus") return OperatorSpec::pucci_plus_op(o.lambda, o.Lambda);
    if (o.op == "pucci-minus") return OperatorSpec::pucci_minus_op(o.lambda, o.Lambda);
    if (o.op == "extremal-plus") return OperatorSpec::extremal_plus(o.lambda, o.Lambda, o.mu);
    if (o.op == "extremal-minus") return OperatorSpec::extremal_minus(o.lambda, o.Lambda, o.mu);
    throw CLI::ValidationError("--op", "unknown operator '" + o.op + "'");
}

double resolved_theta0(const CommonOpts& o) {
    return o.degrees ? o.theta0 * kPi / 180.0 : o.theta0;
}

ShootingConfig shooting_config(const CommonOpts& o) {
    ShootingConfig cfg;
    cfg.tol_alpha = o.tol;
    cfg.ode_step = o.ode_step;
    return cfg;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
}

std::string run_json(const std::string& command, const CommonOpts& o,
                     const std::vector<std::pair<std::string, std::string>>& extra) {
    JsonWriter w;
    w.begin().field("command", command);
    w.key("options").begin();
    w.field("op", o.op);
    if (!o.op_json_file.empty()) w.field("op-json", o.op_json_file);
    w.field("lambda", o.lambda)
        .field("Lambda", o.Lambda)
        .field("mu", o.mu)
        .field("dim", o.dim)
        .field("theta0", resolved_theta0(o))
        .field("tol", o.tol)
        .field("ode-step", o.ode_step)
        .field("seed", static_cast<long long>(o.seed))
        .field("format", o.format);
    for (const auto& [k, v] : extra) w.key(k).raw(v);
    w.end();
    w.key("operator").raw(operator_to_json(make_operator(o)));
    w.end();
    return w.str();
}

std::string prefix_or(const CommonOpts& o, const std::string& fallback) {
    return o.out.empty() ? fallback : o.out;
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(std::stod(item));
    }
    return out;
}

std::string csv_line(std::initializer_list<double> vals) {
    std::string line;
    bool first = true;
    for (double v : vals) {
        if (!first) line += ",";
        line += format_double(v);
        first = false;
    }
    return line + "\n";
}

// ---- solve/ratios helpers ----

struct FieldCsv {
    PolarGrid grid;
    std::vector<double> values;
};

std::string field_to_csv(const PolarField& f) {
    std::string s = "r,theta,value\n";
    for (int i = 0; i < f.grid.Nr; ++i)
        for (int j = 0; j < f.grid.Ntheta; ++j)
            s += csv_line({f.grid.r(i), f.grid.theta(j), f.at(i, j)});
    return s;
}

FieldCsv field_from_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open field file " + path);
    std::string line;
    std::getline(in, line);  // header
    std::vector<double> r, th, val;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        double row[3];
        for (int k = 0; k < 3; ++k) {
            if (!std::getline(ss, cell, ',')) throw std::runtime_error("malformed field row");
            row[k] = std::stod(cell);
        }
        r.push_back(row[0]);
        th.push_back(row[1]);
        val.push_back(row[2]);
    }
    if (r.size() < 64) throw std::runtime_error("field file too small");
    int ntheta = 1;
    while (ntheta < static_cast<int>(r.size()) && std::abs(r[ntheta] - r[0]) < 1e-12 * r[0])
        ++ntheta;
    if (r.size() % ntheta != 0) throw std::runtime_error("field file is not a full grid");
    const int nr = static_cast<int>(r.size()) / ntheta;
    FieldCsv out{build_grid(r[0], r[r.size() - 1], nr, ntheta, std::abs(th[0])), std::move(val)};
    return out;
}

int guarded(const std::function<int()>& body) {
    try {
        return body();
    } catch (const ShootError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        std::cerr << "scanned (alpha, theta*) table:\n";
        for (const auto& row : e.scanned)
            std::cerr << "  " << format_double(row.alpha) << " " << format_double(row.theta_star)
                      << "\n";
        return 2;
    } catch (const CLI::Error&) {
        throw;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::runtime_error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {  // malformed json and friends
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"singular exponents and homogeneous solutions of fully nonlinear "
                 "elliptic equations in cones"};
    app.require_subcommand(1);

    // ---- exponents ----
    auto* cmd_exp = app.add_subcommand("exponents", "alpha+ and alpha- for an operator and cone");
    CommonOpts oe;
    add_common(cmd_exp, oe);
    std::string sweep_list;
    cmd_exp->add_option("--sweep", sweep_list, "comma list of theta0 values for a sweep CSV");
    cmd_exp->callback([&]() {
        merge_config(cmd_exp, oe);
        std::exit(guarded([&]() {
            const OperatorSpec spec = make_operator(oe);
            const ConeSpec cone{oe.dim, resolved_theta0(oe)};
            const ShootingConfig cfg = shooting_config(oe);
            const std::string prefix = prefix_or(oe, "exponents");

            const ShootResult plus = shoot(spec, cone, Branch::Plus, cfg);
            const ShootResult minus = shoot(spec, cone, Branch::Minus, cfg);
            const double via_inv = alpha_minus_via_inversion(spec, cone, cfg);
            const BoundsReport b = compute_bounds(spec.ellipticity(cone.dim), cone);

            JsonWriter w;
            w.begin()
                .field("alpha_plus", plus.alpha)
                .field("alpha_minus", minus.alpha)
                .field("alpha_minus_via_inversion", via_inv)
                .field("iterations_plus", plus.iterations)
                .field("iterations_minus", minus.iterations)
                .field("theta_star_residual_plus", plus.theta_star_residual)
                .field("theta_star_residual_minus", minus.theta_star_residual);
            w.key("bounds")
                .begin()
                .field("C1", b.C1)
                .field("C2", b.C2)
                .field("kappa", b.kappa)
                .field("alpha_lb", b.alpha_lb)
                .field("alpha_ub", b.alpha_ub)
                .field("sigma_lb", b.sigma_lb)
                .field("sigma_ub", b.sigma_ub)
                .end();
            w.end();
            write_file(prefix + ".json", w.str() + "\n");

            if (!sweep_list.empty()) {
                std::string csv = "theta0,alpha_plus,alpha_minus,alpha_lb,alpha_ub\n";
                for (double t0 : parse_list(sweep_list)) {
                    const ConeSpec c{oe.dim, oe.degrees ? t0 * kPi / 180 : t0};
                    const ShootResult p = shoot(spec, c, Branch::Plus, cfg);
                    const ShootResult m = shoot(spec, c, Branch::Minus, cfg);
                    const BoundsReport bb = compute_bounds(spec.ellipticity(c.dim), c);
                    csv += csv_line({c.theta0, p.alpha, m.alpha, bb.alpha_lb, bb.alpha_ub});
                }
                write_file(prefix + ".csv", csv);
            }
            write_file(prefix + ".run.json",
                       run_json("exponents", oe,
                                {{"sweep", "\"" + sweep_list + "\""}}) +
                           "\n");
            std::cout << w.str() << "\n";
            return 0;
        }));
    });

    // ---- profile ----
    auto* cmd_prof = app.add_subcommand("profile", "angular profile phi(theta) of Psi+/Psi-");
    CommonOpts op_;
    std::string branch_name = "plus";
    add_common(cmd_prof, op_);
    cmd_prof->add_option("--branch", branch_name, "plus|minus");
    cmd_prof->callback([&]() {
        merge_config(cmd_prof, op_);
        std::exit(guarded([&]() {
            if (branch_name != "plus" && branch_name != "minus")
                throw std::invalid_argument("--branch must be plus or minus");
            const OperatorSpec spec = make_operator(op_);
            const ConeSpec cone{op_.dim, resolved_theta0(op_)};
            const ShootResult res =
                shoot(spec, cone, branch_name == "plus" ? Branch::Plus : Branch::Minus,
                      shooting_config(op_));
            const std::string prefix = prefix_or(op_, "profile");

            std::string csv = "theta,phi,dphi\n";
            const ProfileSolution& p = res.profile;
            for (size_t k = 0; k < p.theta.size(); ++k)
                csv += csv_line({p.theta[k], p.phi[k], p.dphi[k]});
            write_file(prefix + ".csv", csv);

            JsonWriter w;
            w.begin()
                .field("alpha", res.alpha)
                .field("branch", branch_name)
                .field("theta0", cone.theta0)
                .field("iterations", res.iterations)
                .field("theta_star_residual", res.theta_star_residual)
                .end();
            write_file(prefix + ".json", w.str() + "\n");
            write_file(prefix + ".run.json",
                       run_json("profile", op_, {{"branch", "\"" + branch_name + "\""}}) + "\n");
            std::cout << w.str() << "\n";
            return 0;
        }));
    });

    // ---- bounds ----
    auto* cmd_bounds = app.add_subcommand("bounds", "closed-form exponent bounds");
    CommonOpts ob;
    add_common(cmd_bounds, ob);
    cmd_bounds->callback([&]() {
        merge_config(cmd_bounds, ob);
        std::exit(guarded([&]() {
            const OperatorSpec spec = make_operator(ob);
            const ConeSpec cone{ob.dim, resolved_theta0(ob)};
            const BoundsReport b = compute_bounds(spec.ellipticity(cone.dim), cone);
            JsonWriter w;
            w.begin()
                .field("C1", b.C1)
                .field("C2", b.C2)
                .field("kappa", b.kappa)
                .field("alpha_lb", b.alpha_lb)
                .field("alpha_ub", b.alpha_ub)
                .field("sigma_lb", b.sigma_lb)
                .field("sigma_ub", b.sigma_ub)
                .end();
            const std::string prefix = prefix_or(ob, "bounds");
            write_file(prefix + ".json", w.str() + "\n");
            write_file(prefix + ".run.json", run_json("bounds", ob, {}) + "\n");
            std::cout << w.str() << "\n";
            return 0;
        }));
    });

    // ---- verify-barrier ----
    auto* cmd_vb = app.add_subcommand("verify-barrier", "sample the barrier differential inequalities");
    CommonOpts ov;
    std::string which = "super";
    int samples = 10000;
    double alpha_override = 0.0, sigma_override = 0.0;
    add_common(cmd_vb, ov);
    cmd_vb->add_option("--which", which, "super|sub");
    cmd_vb->add_option("--samples", samples, "number of stratified samples");
    cmd_vb->add_option("--alpha", alpha_override, "override the exponent (0 = formula value)");
    cmd_vb->add_option("--sigma", sigma_override, "override sigma for the subsolution (0 = auto)");
    cmd_vb->callback([&]() {
        merge_config(cmd_vb, ov);
        std::exit(guarded([&]() {
            const EllipticityParams prm{ov.lambda, ov.Lambda, ov.mu};
            const ConeSpec cone{ov.dim, resolved_theta0(ov)};
            const std::string prefix = prefix_or(ov, "verify_barrier");
            JsonWriter w;
            int rc = 0;
            if (which == "super") {
                const BoundsReport b = lower_bound(prm, cone);
                const double alpha = alpha_override > 0 ? alpha_override : b.alpha_lb;
                const BarrierCheck chk = verify_supersolution(prm, alpha, b.kappa, cone, samples);
                w.begin()
                    .field("which", "super")
                    .field("alpha", alpha)
                    .field("kappa", b.kappa)
                    .field("min_residual", chk.residual)
                    .field("num_samples", chk.num_samples)
                    .key("witness")
                    .array(chk.witness)
                    .end();
                rc = chk.residual >= -1e-12 ? 0 : 2;
            } else if (which == "sub") {
                const double sigma = sigma_override > 0
                                         ? sigma_override
                                         : std::max(0.05, cone.theta0 < kPi / 2
                                                              ? std::cos(cone.theta0)
                                                              : 0.5);
                const double alpha =
                    alpha_override > 0
                        ? alpha_override
                        : subsolution_alpha_threshold(prm, cone.dim, sigma) + 0.5;
                const BarrierCheck chk = verify_subsolution(prm, alpha, sigma, cone, samples);
                w.begin()
                    .field("which", "sub")
                    .field("alpha", alpha)
                    .field("sigma", sigma)
                    .field("max_residual", chk.residual)
                    .field("num_samples", chk.num_samples)
                    .key("witness")
                    .array(chk.witness)
                    .end();
                rc = chk.residual < 0 ? 0 : 2;
            } else {
                throw std::invalid_argument("--which must be super or sub");
            }
            write_file(prefix + ".json", w.str() + "\n");
            write_file(prefix + ".run.json",
                       run_json("verify-barrier", ov,
                                {{"which", "\"" + which + "\""},
                                 {"samples", std::to_string(samples)}}) +
                           "\n");
            std::cout << w.str() << "\n";
            return rc;
        }));
    });

    // ---- solve ----
    auto* cmd_solve = app.add_subcommand("solve", "wide-stencil Dirichlet solve on E(omega, r0, r1)");
    CommonOpts os_;
    double r0 = 1.0, r1 = 4.0;
    int nr = 64, ntheta = 64;
    std::string boundary_file, boundary_kind = "psi-plus";
    double boundary_constant = 1.0;
    std::string method = "damped";
    double fd_tol = 1e-8;
    int max_iter = 200000;
    int stencil_k = 16;
    double stencil_factor = 2.0;
    add_common(cmd_solve, os_);
    cmd_solve->add_option("--r0", r0, "inner radius");
    cmd_solve->add_option("--r1", r1, "outer radius");
    cmd_solve->add_option("--nr", nr, "radial nodes");
    cmd_solve->add_option("--ntheta", ntheta, "angular nodes");
    cmd_solve->add_option("--boundary", boundary_file, "CSV r,theta,value with boundary data");
    cmd_solve->add_option("--boundary-kind", boundary_kind,
                          "psi-plus|psi-minus|constant|zero (ignored when --boundary given)");
    cmd_solve->add_option("--constant", boundary_constant, "value for --boundary-kind constant");
    cmd_solve->add_option("--method", method, "damped|policy");
    cmd_solve->add_option("--fd-tol", fd_tol, "residual tolerance");
    cmd_solve->add_option("--max-iter", max_iter, "iteration cap");
    cmd_solve->add_option("--stencil-k", stencil_k, "number of stencil directions (even)");
    cmd_solve->add_option("--stencil-factor", stencil_factor, "stencil step / local spacing");
    cmd_solve->callback([&]() {
        merge_config(cmd_solve, os_);
        std::exit(guarded([&]() {
            const OperatorSpec spec = make_operator(os_);
            const ConeSpec cone{2, resolved_theta0(os_)};
            const PolarGrid grid = build_grid(r0, r1, nr, ntheta, cone.theta0);
            const std::string prefix = prefix_or(os_, "solve");

            std::function<double(double, double)> boundary;
            std::optional<ShootResult> shot;
            if (!boundary_file.empty()) {
                std::ifstream probe(boundary_file);
                if (!probe) throw std::invalid_argument("boundary file not found: " + boundary_file);
                const FieldCsv data = field_from_csv(boundary_file);
                boundary = [data](double r, double theta) {
                    PolarField f(data.grid);
                    f.values = data.values;
                    return f.sample(r, theta);
                };
            } else if (boundary_kind == "psi-plus" || boundary_kind == "psi-minus") {
                shot = shoot(spec, cone,
                             boundary_kind == "psi-plus" ? Branch::Plus : Branch::Minus,
                             shooting_config(os_));
                const ProfileSolution prof = shot->profile;
                boundary = [prof](double r, double theta) {
                    return prof.value_polar(r, std::abs(theta));
                };
            } else if (boundary_kind == "constant") {
                boundary = [boundary_constant](double, double) { return boundary_constant; };
            } else if (boundary_kind == "zero") {
                boundary = [](double, double) { return 0.0; };
            } else {
                throw std::invalid_argument("unknown --boundary-kind " + boundary_kind);
            }

            SolveConfig cfg;
            cfg.tol = fd_tol;
            cfg.max_iter = max_iter;
            if (method == "damped")
                cfg.method = SolveMethod::Damped;
            else if (method == "policy")
                cfg.method = SolveMethod::Policy;
            else
                throw std::invalid_argument("--method must be damped or policy");
            StencilSet stencil{stencil_k, stencil_factor};

            auto [field, rep] = solve_dirichlet(spec, grid, boundary, cfg, stencil);
            write_file(prefix + ".csv", field_to_csv(field));
            JsonWriter w;
            w.begin()
                .field("iterations", rep.iterations)
                .field("final_residual", rep.final_residual)
                .field("converged", rep.converged);
            if (shot) w.field("alpha", shot->alpha);
            w.end();
            write_file(prefix + ".json", w.str() + "\n");
            write_file(prefix + ".run.json",
                       run_json("solve", os_,
                                {{"r0", format_double(r0)},
                                 {"r1", format_double(r1)},
                                 {"nr", std::to_string(nr)},
                                 {"ntheta", std::to_string(ntheta)},
                                 {"boundary-kind", "\"" + boundary_kind + "\""},
                                 {"method", "\"" + method + "\""},
                                 {"fd-tol", format_double(fd_tol)},
                                 {"stencil-k", std::to_string(stencil_k)},
                                 {"stencil-factor", format_double(stencil_factor)}}) +
                           "\n");
            std::cout << w.str() << "\n";
            return rep.converged ? 0 : 2;
        }));
    });

    // ---- ratios ----
    auto* cmd_ratios = app.add_subcommand("ratios", "q(r), Q(r) of a stored field against Psi");
    CommonOpts orat;
    std::string field_file, rlist_text = "";
    std::string ratio_branch = "plus";
    add_common(cmd_ratios, orat);
    cmd_ratios->add_option("--field", field_file, "field CSV from `solve`")->required();
    cmd_ratios->add_option("--r-list", rlist_text, "comma list of annulus inner radii");
    cmd_ratios->add_option("--branch", ratio_branch, "compare against psi-plus or psi-minus");
    cmd_ratios->callback([&]() {
        merge_config(cmd_ratios, orat);
        std::exit(guarded([&]() {
            const FieldCsv data = field_from_csv(field_file);
            PolarField field(data.grid);
            field.values = data.values;
            const OperatorSpec spec = make_operator(orat);
            const ConeSpec cone{2, data.grid.theta0};
            const ShootResult res =
                shoot(spec, cone, ratio_branch == "minus" ? Branch::Minus : Branch::Plus,
                      shooting_config(orat));
            std::vector<double> rl = parse_list(rlist_text);
            if (rl.empty()) {
                for (double r = data.grid.r0 * 1.3; 2 * r < data.grid.r1; r *= 1.6)
                    rl.push_back(r);
            }
            const RatioTrace trace = ratio_diagnostics(field, res.profile, rl);
            std::string csv = "r,q,Q\n";
            for (size_t k = 0; k < trace.r.size(); ++k)
                csv += csv_line({trace.r[k], trace.q[k], trace.Q[k]});
            const std::string prefix = prefix_or(orat, "ratios");
            write_file(prefix + ".csv", csv);
            write_file(prefix + ".run.json",
                       run_json("ratios", orat,
                                {{"field", "\"" + field_file + "\""},
                                 {"branch", "\"" + ratio_branch + "\""}}) +
                           "\n");
            std::cout << csv;
            return 0;
        }));
    });

    // ---- experiment ----
    auto* cmd_expm = app.add_subcommand("experiment", "boundary singularity experiment");
    CommonOpts oxp;
    std::string mode = "singular";
    double xr0 = 0.01;
    int xnr = 0, xntheta = 96;
    std::string xrlist = "";
    std::string xmethod = "policy";
    add_common(cmd_expm, oxp);
    cmd_expm->add_option("--mode", mode, "bounded|singular");
    cmd_expm->add_option("--r0", xr0, "inner truncation radius (outer arc at 1)");
    cmd_expm->add_option("--nr", xnr, "radial nodes (0 = isotropic in (log r, theta))");
    cmd_expm->add_option("--ntheta", xntheta, "angular nodes");
    cmd_expm->add_option("--r-list", xrlist, "comma list of annulus radii for the traces");
    cmd_expm->add_option("--method", xmethod, "damped|policy");
    cmd_expm->callback([&]() {
        merge_config(cmd_expm, oxp);
        std::exit(guarded([&]() {
            const OperatorSpec spec = make_operator(oxp);
            const ConeSpec cone{2, resolved_theta0(oxp)};
            if (xnr <= 0)
                xnr = 1 + static_cast<int>(
                              std::lround(std::log(1.0 / xr0) * (xntheta - 1) / (2 * cone.theta0)));
            std::vector<double> rl = parse_list(xrlist);
            if (rl.empty()) {
                for (double r = xr0 * 1.25; 2 * r < 0.5; r *= 1.4142135623730951) rl.push_back(r);
            }
            SolveConfig cfg;
            cfg.method = xmethod == "damped" ? SolveMethod::Damped : SolveMethod::Policy;
            cfg.tol = 1e-8;
            const SingularityExperiment ex = experiment_singularity(
                spec, cone, mode == "bounded" ? SingularityMode::Bounded : SingularityMode::Singular,
                xr0, xnr, xntheta, rl, shooting_config(oxp), cfg);
            std::string csv = "r,q_plus,Q_plus,q_minus,Q_minus\n";
            for (size_t k = 0; k < ex.vs_plus.r.size(); ++k)
                csv += csv_line({ex.vs_plus.r[k], ex.vs_plus.q[k], ex.vs_plus.Q[k],
                                 ex.vs_minus.q[k], ex.vs_minus.Q[k]});
            const std::string prefix = prefix_or(oxp, "experiment");
            write_file(prefix + ".csv", csv);
            JsonWriter w;
            w.begin()
                .field("mode", mode)
                .field("alpha_plus", ex.plus.alpha)
                .field("alpha_minus", ex.minus.alpha)
                .field("iterations", ex.report.iterations)
                .field("final_residual", ex.report.final_residual)
                .field("converged", ex.report.converged)
                .end();
            write_file(prefix + ".json", w.str() + "\n");
            write_file(prefix + ".run.json",
                       run_json("experiment", oxp,
                                {{"mode", "\"" + mode + "\""},
                                 {"r0", format_double(xr0)},
                                 {"nr", std::to_string(xnr)},
                                 {"ntheta", std::to_string(xntheta)},
                                 {"method", "\"" + xmethod + "\""}}) +
                           "\n");
            std::cout << w.str() << "\n";
            return ex.report.converged ? 0 : 2;
        }));
    });

    CLI11_PARSE(app, argc, argv);
    return 0;
}
