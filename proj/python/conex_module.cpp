#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "conex/bounds_barriers.hpp"
#include "conex/cone_exponents.hpp"
#include "conex/fd_viscosity.hpp"
#include "conex/json_io.hpp"
#include "conex/operators.hpp"

namespace py = pybind11;
using namespace conex;

namespace {

SymMatrix matrix_from_rows(const std::vector<std::vector<double>>& rows) {
    const int n = static_cast<int>(rows.size());
    SymMatrix m(n);
    for (int i = 0; i < n; ++i) {
        if (static_cast<int>(rows[i].size()) != n)
            throw std::invalid_argument("matrix rows must form a square array");
        for (int j = i; j < n; ++j) m.set(i, j, 0.5 * (rows[i][j] + rows[j][i]));
    }
    return m;
}

std::vector<std::vector<double>> matrix_to_rows(const SymMatrix& m) {
    std::vector<std::vector<double>> rows(m.dim(), std::vector<double>(m.dim()));
    for (int i = 0; i < m.dim(); ++i)
        for (int j = 0; j < m.dim(); ++j) rows[i][j] = m(i, j);
    return rows;
}

}  // namespace

PYBIND11_MODULE(conex, m) {
    m.doc() = "singular exponents and homogeneous solutions of fully nonlinear elliptic "
              "equations in cones";

    py::class_<SymMatrix>(m, "SymMatrix")
        .def(py::init(&matrix_from_rows), py::arg("rows"))
        .def_property_readonly("dim", &SymMatrix::dim)
        .def("__getitem__",
             [](const SymMatrix& s, std::pair<int, int> ij) { return s(ij.first, ij.second); })
        .def("rows", &matrix_to_rows)
        .def("trace", &SymMatrix::trace);

    m.def("eig_sym", [](const SymMatrix& s) { return eig_sym(s); },
          "eigenvalues in nondecreasing order");

    py::class_<EllipticityParams>(m, "EllipticityParams")
        .def(py::init([](double lam, double Lam, double mu) {
                 EllipticityParams p{lam, Lam, mu};
                 p.validate();
                 return p;
             }),
             py::arg("lam"), py::arg("Lam"), py::arg("mu") = 0.0)
        .def_readonly("lam", &EllipticityParams::lambda)
        .def_readonly("Lam", &EllipticityParams::Lambda)
        .def_readonly("mu", &EllipticityParams::mu);

    m.def("pucci_plus", &pucci_plus, py::arg("M"), py::arg("params"));
    m.def("pucci_minus", &pucci_minus, py::arg("M"), py::arg("params"));
    m.def("pucci_oracle", &pucci_oracle, py::arg("M"), py::arg("params"), py::arg("num_samples"),
          py::arg("seed") = 1234, py::arg("include_aligned") = true);

    py::class_<OperatorSpec>(m, "OperatorSpec")
        .def_static("laplacian", &OperatorSpec::laplacian)
        .def_static("pucci_plus", &OperatorSpec::pucci_plus_op)
        .def_static("pucci_minus", &OperatorSpec::pucci_minus_op)
        .def_static("extremal_plus", &OperatorSpec::extremal_plus)
        .def_static("extremal_minus", &OperatorSpec::extremal_minus)
        .def_static("isaacs", &OperatorSpec::isaacs)
        .def_static("from_json", &operator_from_json_text)
        .def("to_json", [](const OperatorSpec& s) { return operator_to_json(s); })
        .def("eval",
             [](const OperatorSpec& s, const SymMatrix& M, const std::vector<double>& p,
                const std::vector<double>& x) { return s.eval(M, p, x); })
        .def("dual", &OperatorSpec::dual)
        .def("inverted", &OperatorSpec::inverted)
        .def("ellipticity", &OperatorSpec::ellipticity, py::arg("dim"))
        .def("name", &OperatorSpec::name);

    py::class_<ConeSpec>(m, "ConeSpec")
        .def(py::init([](int dim, double theta0) {
                 ConeSpec c{dim, theta0};
                 c.validate();
                 return c;
             }),
             py::arg("dim"), py::arg("theta0"))
        .def_readonly("dim", &ConeSpec::dim)
        .def_readonly("theta0", &ConeSpec::theta0);

    py::enum_<Branch>(m, "Branch").value("plus", Branch::Plus).value("minus", Branch::Minus);

    py::class_<ShootingConfig>(m, "ShootingConfig")
        .def(py::init<>())
        .def_readwrite("tol_alpha", &ShootingConfig::tol_alpha)
        .def_readwrite("ode_step", &ShootingConfig::ode_step)
        .def_readwrite("tol_root", &ShootingConfig::tol_root)
        .def_readwrite("max_bisections", &ShootingConfig::max_bisections);

    py::class_<ProfileSolution>(m, "ProfileSolution")
        .def_readonly("alpha", &ProfileSolution::alpha)
        .def_readonly("theta", &ProfileSolution::theta)
        .def_readonly("phi", &ProfileSolution::phi)
        .def_readonly("dphi", &ProfileSolution::dphi)
        .def_readonly("theta_star", &ProfileSolution::theta_star)
        .def("angular_value", &ProfileSolution::angular_value)
        .def("value_polar", &ProfileSolution::value_polar)
        .def("reconstruct",
             [](const ProfileSolution& p, const std::vector<double>& x) { return p.reconstruct(x); });

    py::class_<ShootResult>(m, "ShootResult")
        .def_readonly("alpha", &ShootResult::alpha)
        .def_readonly("profile", &ShootResult::profile)
        .def_readonly("iterations", &ShootResult::iterations)
        .def_readonly("theta_star_residual", &ShootResult::theta_star_residual);

    m.def("ansatz_hessian", &ansatz_hessian, py::arg("n"), py::arg("alpha"), py::arg("theta"),
          py::arg("phi"), py::arg("dphi"), py::arg("s"));
    m.def("implicit_second_derivative", &implicit_second_derivative, py::arg("spec"), py::arg("n"),
          py::arg("alpha"), py::arg("theta"), py::arg("phi"), py::arg("dphi"),
          py::arg("tol_root") = 1e-13);
    m.def("integrate_profile", &integrate_profile, py::arg("spec"), py::arg("cone"),
          py::arg("alpha"), py::arg("config") = ShootingConfig{});
    m.def("shoot", &shoot, py::arg("spec"), py::arg("cone"), py::arg("branch"),
          py::arg("config") = ShootingConfig{});
    m.def("alpha_minus_via_inversion", &alpha_minus_via_inversion, py::arg("spec"),
          py::arg("cone"), py::arg("config") = ShootingConfig{});

    py::class_<BoundsReport>(m, "BoundsReport")
        .def_readonly("C1", &BoundsReport::C1)
        .def_readonly("C2", &BoundsReport::C2)
        .def_readonly("kappa", &BoundsReport::kappa)
        .def_readonly("alpha_lb", &BoundsReport::alpha_lb)
        .def_readonly("alpha_ub", &BoundsReport::alpha_ub)
        .def_readonly("sigma_lb", &BoundsReport::sigma_lb)
        .def_readonly("sigma_ub", &BoundsReport::sigma_ub);

    m.def("lower_bound", &lower_bound);
    m.def("upper_bound_at_sigma", &upper_bound_at_sigma);
    m.def("compute_bounds", &compute_bounds);

    py::class_<BarrierSample>(m, "BarrierSample")
        .def_readonly("value", &BarrierSample::value)
        .def_readonly("gradient", &BarrierSample::gradient)
        .def_property_readonly("hessian",
                               [](const BarrierSample& s) { return matrix_to_rows(s.hessian); });
    m.def("supersolution_eval",
          [](const std::vector<double>& x, double a, double k) {
              return supersolution_eval(x, a, k);
          });
    m.def("subsolution_eval", [](const std::vector<double>& x, double a, double s) {
        return subsolution_eval(x, a, s);
    });

    py::class_<BarrierCheck>(m, "BarrierCheck")
        .def_readonly("residual", &BarrierCheck::residual)
        .def_readonly("witness", &BarrierCheck::witness)
        .def_readonly("num_samples", &BarrierCheck::num_samples);
    m.def("verify_supersolution", &verify_supersolution);
    m.def("verify_subsolution", &verify_subsolution);
    m.def("subsolution_alpha_threshold", &subsolution_alpha_threshold);

    py::class_<PolarGrid>(m, "PolarGrid")
        .def_readonly("r0", &PolarGrid::r0)
        .def_readonly("r1", &PolarGrid::r1)
        .def_readonly("Nr", &PolarGrid::Nr)
        .def_readonly("Ntheta", &PolarGrid::Ntheta)
        .def_readonly("theta0", &PolarGrid::theta0)
        .def("r", &PolarGrid::r)
        .def("theta", &PolarGrid::theta);
    m.def("build_grid", &build_grid, py::arg("r0"), py::arg("r1"), py::arg("Nr"),
          py::arg("Ntheta"), py::arg("theta0"));

    py::class_<PolarField>(m, "PolarField")
        .def_readonly("grid", &PolarField::grid)
        .def_readonly("values", &PolarField::values)
        .def("at", [](const PolarField& f, int i, int j) { return f.at(i, j); })
        .def("sample", &PolarField::sample);

    py::enum_<SolveMethod>(m, "SolveMethod")
        .value("damped", SolveMethod::Damped)
        .value("policy", SolveMethod::Policy);
    py::class_<SolveConfig>(m, "SolveConfig")
        .def(py::init<>())
        .def_readwrite("tol", &SolveConfig::tol)
        .def_readwrite("max_iter", &SolveConfig::max_iter)
        .def_readwrite("method", &SolveConfig::method);
    py::class_<StencilSet>(m, "StencilSet")
        .def(py::init<>())
        .def_readwrite("num_directions", &StencilSet::num_directions)
        .def_readwrite("step_factor", &StencilSet::step_factor);
    py::class_<SolveReport>(m, "SolveReport")
        .def_readonly("iterations", &SolveReport::iterations)
        .def_readonly("final_residual", &SolveReport::final_residual)
        .def_readonly("converged", &SolveReport::converged);

    m.def("directional_second_difference", &directional_second_difference);
    m.def("apply_operator_fd", &apply_operator_fd);
    m.def(
        "solve_dirichlet",
        [](const OperatorSpec& spec, const PolarGrid& grid,
           const std::function<double(double, double)>& boundary, const SolveConfig& cfg,
           const StencilSet& st) { return solve_dirichlet(spec, grid, boundary, cfg, st); },
        py::arg("spec"), py::arg("grid"), py::arg("boundary"), py::arg("config") = SolveConfig{},
        py::arg("stencil") = StencilSet{});

    py::class_<RatioTrace>(m, "RatioTrace")
        .def_readonly("r", &RatioTrace::r)
        .def_readonly("q", &RatioTrace::q)
        .def_readonly("Q", &RatioTrace::Q);
    m.def("ratio_diagnostics",
          [](const PolarField& f, const ProfileSolution& p, const std::vector<double>& rl) {
              return ratio_diagnostics(f, p, rl);
          });
    m.def("hopf_exponent", [](const PolarField& f, const std::vector<double>& ts) {
        return hopf_exponent(f, ts);
    });
    m.def("harnack_ratio", &harnack_ratio);

    py::enum_<SingularityMode>(m, "SingularityMode")
        .value("bounded", SingularityMode::Bounded)
        .value("singular", SingularityMode::Singular);
    py::class_<SingularityExperiment>(m, "SingularityExperiment")
        .def_readonly("plus", &SingularityExperiment::plus)
        .def_readonly("minus", &SingularityExperiment::minus)
        .def_readonly("field", &SingularityExperiment::field)
        .def_readonly("report", &SingularityExperiment::report)
        .def_readonly("vs_plus", &SingularityExperiment::vs_plus)
        .def_readonly("vs_minus", &SingularityExperiment::vs_minus);
    m.def(
        "experiment_singularity",
        [](const OperatorSpec& spec, const ConeSpec& cone, SingularityMode mode, double r0, int Nr,
           int Ntheta, const std::vector<double>& rl, const ShootingConfig& sc,
           const SolveConfig& vc, const StencilSet& st) {
            return experiment_singularity(spec, cone, mode, r0, Nr, Ntheta, rl, sc, vc, st);
        },
        py::arg("spec"), py::arg("cone"), py::arg("mode"), py::arg("r0"), py::arg("Nr"),
        py::arg("Ntheta"), py::arg("r_list"), py::arg("shoot_config") = ShootingConfig{},
        py::arg("solve_config") = SolveConfig{}, py::arg("stencil") = StencilSet{});
}
