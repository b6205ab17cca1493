#include <optional>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cwopo/degenerate.hpp"
#include "cwopo/errors.hpp"
#include "cwopo/gaussian_conditioning.hpp"
#include "cwopo/heralding_rates.hpp"
#include "cwopo/mode_optimizer.hpp"
#include "cwopo/opo_model.hpp"

namespace py = pybind11;
using namespace cwopo;

namespace {

WindowSpec window_for(double T, std::optional<double> box_width) {
    return T > 0.0 ? WindowSpec::symmetric(T, box_width) : WindowSpec{};
}

ObjectiveMode method_for(const std::string& name, double T) {
    if (name == "fixed-point") return ObjectiveMode::fixed_point;
    if (name == "gradient") return ObjectiveMode::gradient_ascent;
    if (name == "auto") return T > 0.0 ? ObjectiveMode::gradient_ascent : ObjectiveMode::fixed_point;
    throw std::invalid_argument("method must be auto, fixed-point or gradient");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Heralded single photons from a cw OPO";

    static py::exception<NoClickInformation> no_click(m, "NoClickInformation", PyExc_ValueError);
    static py::exception<ConvergenceError> not_converged(m, "ConvergenceError", PyExc_RuntimeError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const NoClickInformation& e) {
            PyErr_SetString(no_click.ptr(), e.what());
        } catch (const ConvergenceError& e) {
            PyErr_SetString(not_converged.ptr(), e.what());
        } catch (const DegenerateModeError& e) {
            PyErr_SetString(PyExc_ValueError, e.what());
        } catch (const UnphysicalCovariance& e) {
            PyErr_SetString(PyExc_ValueError, e.what());
        }
    });

    py::class_<OpoParams>(m, "OpoParams")
        .def(py::init<double, double, double, double>(), py::arg("epsilon"), py::arg("eta_t") = 1.0,
             py::arg("eta_s") = 1.0, py::arg("dt_c") = 0.02)
        .def_property_readonly("epsilon", &OpoParams::epsilon)
        .def_property_readonly("eta_t", &OpoParams::eta_t)
        .def_property_readonly("eta_s", &OpoParams::eta_s)
        .def_property_readonly("dt_c", &OpoParams::dt_c)
        .def("__repr__", [](const OpoParams& p) {
            return "OpoParams(epsilon=" + std::to_string(p.epsilon()) + ", eta_t=" + std::to_string(p.eta_t()) +
                   ", eta_s=" + std::to_string(p.eta_s()) + ", dt_c=" + std::to_string(p.dt_c()) + ")";
        });

    py::class_<ModeGrid>(m, "ModeGrid")
        .def(py::init<double, double, std::vector<double>>(), py::arg("t_start"), py::arg("dt"), py::arg("values"))
        .def_property_readonly("t_start", &ModeGrid::t_start)
        .def_property_readonly("dt", &ModeGrid::dt)
        .def_property_readonly("values", [](const ModeGrid& f) { return Eigen::VectorXd(f.vector()); })
        .def_property_readonly("times", [](const ModeGrid& f) {
            Eigen::VectorXd t(static_cast<Eigen::Index>(f.size()));
            for (std::size_t i = 0; i < f.size(); ++i) t[static_cast<Eigen::Index>(i)] = f.time(i);
            return t;
        })
        .def("__len__", &ModeGrid::size)
        .def("__call__", &ModeGrid::operator());

    py::class_<RadialWigner>(m, "RadialWigner")
        .def_readonly("a1", &RadialWigner::a1)
        .def_readonly("a2", &RadialWigner::a2)
        .def_readonly("a3", &RadialWigner::a3)
        .def("normalization", &RadialWigner::normalization)
        .def("__call__", [](const RadialWigner& w, py::object x, py::object p) {
            return py::vectorize([w](double a, double b) { return w(a, b); })(x, p);
        });

    py::class_<OptimizationResult>(m, "OptimizationResult")
        .def_readonly("mode", &OptimizationResult::mode)
        .def_readonly("fidelity", &OptimizationResult::fidelity)
        .def_readonly("iterations", &OptimizationResult::iterations)
        .def_readonly("residual", &OptimizationResult::residual);

    m.def("lambda_mu", [](const OpoParams& p) {
        auto r = lambda_mu(p);
        return py::make_tuple(r.lambda, r.mu);
    });
    m.def("kernel_normal", [](const OpoParams& p, py::object tau) {
        return py::vectorize([p](double t) { return kernel_normal(p, t); })(tau);
    });
    m.def("kernel_anomalous", [](const OpoParams& p, py::object tau) {
        return py::vectorize([p](double t) { return kernel_anomalous(p, t); })(tau);
    });
    m.def("mean_intensity", &mean_intensity);
    m.def("exp_mode", &exp_mode, py::arg("t_c") = 0.0, py::arg("half_width") = 10.0, py::arg("n") = 801);
    m.def("normalize", &normalize);

    m.def(
        "conditioned_covariance",
        [](const OpoParams& p, const ModeGrid& f, double T, std::optional<double> box_width) {
            return conditioned_covariance(p, f, {0.0, p.dt_c()}, window_for(T, box_width)).matrix();
        },
        py::arg("params"), py::arg("mode"), py::arg("T") = 0.0, py::arg("box_width") = py::none());
    m.def(
        "click_wigner",
        [](const OpoParams& p, const ModeGrid& f, double T) {
            return click_condition(conditioned_covariance(p, f, {0.0, p.dt_c()}, window_for(T, std::nullopt)));
        },
        py::arg("params"), py::arg("mode"), py::arg("T") = 0.0);
    m.def(
        "fidelity",
        [](const OpoParams& p, const ModeGrid& f, double T, std::optional<double> box_width) {
            return conditioned_fidelity(p, f, {0.0, p.dt_c()}, window_for(T, box_width));
        },
        py::arg("params"), py::arg("mode"), py::arg("T") = 0.0, py::arg("box_width") = py::none());
    m.def(
        "fidelity_degenerate",
        [](const OpoParams& p, double R, const ModeGrid& f) {
            return fidelity_degenerate(build_cov_degenerate({p, R}, f, {0.0, p.dt_c()}));
        },
        py::arg("params"), py::arg("R"), py::arg("mode"));

    m.def("click_rate", &click_rate);
    m.def(
        "production_rate",
        [](const OpoParams& p, double T, std::optional<double> box_width) {
            return production_rate_windowed(p, window_for(T, box_width), {0.0, p.dt_c()});
        },
        py::arg("params"), py::arg("T") = 0.0, py::arg("box_width") = py::none());

    m.def(
        "optimize",
        [](const OpoParams& p, double T, const std::string& method, double half_width, std::size_t samples,
           double tol, int max_iter) {
            OptimizerConfig cfg;
            cfg.mode = method_for(method, T);
            cfg.half_width = half_width;
            cfg.samples = samples;
            cfg.tol = tol;
            cfg.max_iter = max_iter;
            py::gil_scoped_release release;
            return optimize(p, {0.0, p.dt_c()}, window_for(T, std::nullopt), cfg);
        },
        py::arg("params"), py::arg("T") = 0.0, py::arg("method") = "auto", py::arg("half_width") = 10.0,
        py::arg("samples") = 801, py::arg("tol") = 1e-9, py::arg("max_iter") = 10000);
}
