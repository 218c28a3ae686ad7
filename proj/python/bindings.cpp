#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <string>
#include <tuple>
#include <vector>

#include "convnorm/decay.hpp"
#include "convnorm/error.hpp"
#include "convnorm/geometry.hpp"
#include "convnorm/io.hpp"
#include "convnorm/kernel.hpp"
#include "convnorm/norms.hpp"
#include "convnorm/oracle.hpp"

namespace py = pybind11;
using namespace convnorm;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Kernel4D make_kernel(const ConvGeometry& g, const Array& values) {
  if (values.ndim() != 4) throw Error(ErrorCode::ShapeMismatch, "kernel must be 4-D (d_out, d_in, k1, k2)");
  const std::vector<std::size_t> want{g.d_out, g.d_in, g.k1, g.k2};
  for (py::ssize_t a = 0; a < 4; ++a) {
    if (static_cast<std::size_t>(values.shape(a)) != want[a]) {
      throw Error(ErrorCode::ShapeMismatch, "kernel shape does not match the geometry");
    }
  }
  return Kernel4D(g, std::vector<double>(values.data(), values.data() + values.size()));
}

Array kernel_array(const Kernel4D& k) {
  const ConvGeometry& g = k.geometry();
  Array out({g.d_out, g.d_in, g.k1, g.k2});
  std::memcpy(out.mutable_data(), k.values().data(), k.size() * sizeof(double));
  return out;
}

}  // namespace

PYBIND11_MODULE(_convnorm, m) {
  m.doc() = "Closed-form operator norms of 2D convolutional layers";

  // Messages start with the error code name, e.g. "TruncatedPayload: ...".
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);

  py::class_<ConvGeometry>(m, "Geometry")
      .def(py::init(&ConvGeometry::make), py::arg("d_in"), py::arg("d_out"), py::arg("h_in"),
           py::arg("w_in"), py::arg("k1"), py::arg("k2"), py::arg("s1") = 1, py::arg("s2") = 1,
           py::arg("p1") = 0, py::arg("p2") = 0)
      .def_readonly("d_in", &ConvGeometry::d_in)
      .def_readonly("d_out", &ConvGeometry::d_out)
      .def_readonly("h_in", &ConvGeometry::h_in)
      .def_readonly("w_in", &ConvGeometry::w_in)
      .def_readonly("k1", &ConvGeometry::k1)
      .def_readonly("k2", &ConvGeometry::k2)
      .def_readonly("s1", &ConvGeometry::s1)
      .def_readonly("s2", &ConvGeometry::s2)
      .def_readonly("p1", &ConvGeometry::p1)
      .def_readonly("p2", &ConvGeometry::p2)
      .def_property_readonly("h_out", &ConvGeometry::h_out)
      .def_property_readonly("w_out", &ConvGeometry::w_out)
      .def("satisfies_assumption", [](const ConvGeometry& g) { return check_assumption1(g); })
      .def("__eq__", &ConvGeometry::operator==)
      .def("__repr__", [](const ConvGeometry& g) { return "Geometry(" + g.describe() + ")"; });

  py::class_<Kernel4D>(m, "Kernel")
      .def(py::init(&make_kernel), py::arg("geometry"), py::arg("values"))
      .def_property_readonly("geometry", &Kernel4D::geometry)
      .def("numpy", &kernel_array);

  m.def("l1_norm", &l1_norm, py::arg("kernel"));
  m.def("linf_norm", &linf_norm, py::arg("kernel"));
  m.def("l2_upper_bound", &l2_upper_bound, py::arg("kernel"));
  m.def("frobenius_exact", &frobenius_exact, py::arg("kernel"));
  m.def("materialize", [](const Kernel4D& k) { return materialize(k); }, py::arg("kernel"));

  py::class_<PowerIterationResult>(m, "PowerIterationResult")
      .def_readonly("sigma", &PowerIterationResult::sigma)
      .def_readonly("iterations", &PowerIterationResult::iterations)
      .def_readonly("converged", &PowerIterationResult::converged);
  m.def(
      "power_iteration_l2",
      [](const Kernel4D& k, std::size_t max_iters, double tol, std::uint64_t seed) {
        return power_iteration_l2(k, {max_iters, tol, seed});
      },
      py::arg("kernel"), py::arg("max_iters") = 10'000, py::arg("tol") = 1e-10,
      py::arg("seed") = 42);

  m.def(
      "norm_subgradient",
      [](const Kernel4D& k, const std::string& kind) {
        Kernel4D g(k.geometry(), norm_subgradient(k, parse_norm_kind(kind)));
        return kernel_array(g);
      },
      py::arg("kernel"), py::arg("kind") = "l1");

  m.def(
      "index_classes",
      [](const ConvGeometry& g) {
        std::vector<std::tuple<std::pair<std::size_t, std::size_t>, std::vector<std::size_t>,
                               std::vector<std::size_t>>>
            out;
        for (const auto& c : index_classes(g).classes) {
          out.emplace_back(std::make_pair(c.anchor.k, c.anchor.t), c.rows, c.cols);
        }
        return out;
      },
      py::arg("geometry"), "List of (anchor, rows, cols) with 1-based positions.");

  m.def(
      "dense_norms",
      [](const Matrix& w) {
        const auto n = dense_norms(w);
        return std::make_pair(n.l1, n.linf);
      },
      py::arg("weight"));
  m.def(
      "bn_norm",
      [](const std::vector<double>& gamma, const std::vector<double>& sigma) {
        return bn_norm(gamma, sigma);
      },
      py::arg("gamma"), py::arg("sigma"));

  m.def(
      "encode_blob",
      [](const Array& values, const std::string& dtype) {
        Tensor t;
        if (dtype == "float32") t.dtype = DType::Float32;
        else if (dtype != "float64") throw Error(ErrorCode::UnsupportedDtype, dtype);
        for (py::ssize_t a = 0; a < values.ndim(); ++a) t.dims.push_back(static_cast<std::uint32_t>(values.shape(a)));
        t.values.assign(values.data(), values.data() + values.size());
        const auto bytes = encode_blob(t);
        return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
      },
      py::arg("values"), py::arg("dtype") = "float64");
  m.def(
      "decode_blob",
      [](const py::bytes& data) {
        const std::string raw = data;
        const Tensor t = decode_blob(
            std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(raw.data()), raw.size()));
        std::vector<py::ssize_t> shape(t.dims.begin(), t.dims.end());
        Array out(shape);
        std::memcpy(out.mutable_data(), t.values.data(), t.values.size() * sizeof(double));
        return py::make_tuple(out, t.dtype == DType::Float32 ? "float32" : "float64");
      },
      py::arg("data"));
}
