#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "caos/codes.hpp"
#include "caos/decode.hpp"
#include "caos/errors.hpp"
#include "caos/experiment.hpp"
#include "caos/metrics.hpp"
#include "caos/plan.hpp"
#include "caos/scene.hpp"
#include "caos/sensor.hpp"

namespace py = pybind11;
using namespace caos;

namespace {

py::array_t<double> to_array(const std::vector<double>& v) {
    return py::array_t<double>(static_cast<py::ssize_t>(v.size()), v.data());
}

std::vector<double> from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    return {a.data(), a.data() + a.size()};
}

// rows×cols image from per-pixel values; inactive pixels stay 0
py::array_t<double> to_image(const PixelGrid& grid, const std::vector<double>& values) {
    py::array_t<double> out({grid.rows(), grid.cols()});
    auto m = out.mutable_unchecked<2>();
    for (int n = 0; n < grid.rows(); ++n) {
        for (int c = 0; c < grid.cols(); ++c) m(n, c) = 0;
    }
    for (int i = 0; i < grid.size() && i < static_cast<int>(values.size()); ++i) {
        const auto& p = grid.position(i);
        m(p.n - 1, p.m - 1) = values[static_cast<std::size_t>(i)];
    }
    return out;
}

SampleStream make_stream(const CodingPlan& plan, const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    SampleStream s;
    s.rate = plan.sample_rate();
    s.bits = plan.frame_bits();
    s.samples_per_bit = plan.samples_per_bit();
    s.samples = from_array(a);
    return s;
}

py::dict result_dict(const ExperimentResult& r) {
    py::dict d;
    d["name"] = r.config.name;
    d["passed"] = r.passed();
    py::list checks;
    for (const auto& c : r.checks) checks.append(py::make_tuple(c.name, c.passed, c.detail));
    d["checks"] = checks;
    py::list images;
    for (const auto& img : r.images) {
        py::list per;
        for (const auto& v : img.raw) per.append(to_image(img.grid, v));
        images.append(per);
    }
    d["images"] = images;
    py::list truth;
    for (const auto& t : r.truth) truth.append(to_image(r.plan.grid(), t));
    d["truth"] = truth;
    if (r.patches) {
        py::list patches;
        for (const auto& p : r.patches->patches) {
            py::dict e;
            e["name"] = p.name;
            e["mean"] = p.mean;
            e["std"] = p.std;
            e["dr_db"] = p.dr_db;
            e["snr"] = p.snr;
            patches.append(e);
        }
        d["patches"] = patches;
    } else {
        d["patches"] = py::none();
    }
    d["frame_time"] = r.plan.frame_time();
    return d;
}

}  // namespace

PYBIND11_MODULE(_caos, m) {
    m.doc() = "Coded access optical sensor simulation";

    auto base = py::register_exception<Error>(m, "Error");
    py::register_exception<UnsupportedOrder>(m, "UnsupportedOrder", base.ptr());
    py::register_exception<TimingError>(m, "TimingError", base.ptr());
    py::register_exception<NyquistError>(m, "NyquistError", base.ptr());
    py::register_exception<DimensionMismatch>(m, "DimensionMismatch", base.ptr());
    py::register_exception<LengthMismatch>(m, "LengthMismatch", base.ptr());
    py::register_exception<PlanMismatch>(m, "PlanMismatch", base.ptr());
    py::register_exception<LayoutError>(m, "LayoutError", base.ptr());
    py::register_exception<EmptyRegion>(m, "EmptyRegion", base.ptr());
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());

    m.def("is_supported_order", &is_supported_order);
    m.def("smallest_supported_order", &smallest_supported_order);
    m.def("hadamard", [](int order) {
        const auto h = hadamard(order);
        py::array_t<std::int8_t> out({order, order});
        auto v = out.mutable_unchecked<2>();
        for (int r = 0; r < order; ++r) {
            for (int c = 0; c < order; ++c) v(r, c) = h.at(r, c);
        }
        return out;
    }, py::arg("order"));
    m.def("codebook", [](int num_codes, std::optional<int> min_length) {
        const auto b = codebook(num_codes, min_length);
        py::array_t<std::uint8_t> out({b.size(), b.length});
        auto v = out.mutable_unchecked<2>();
        for (int j = 0; j < b.size(); ++j) {
            for (int w = 0; w < b.length; ++w) v(j, w) = b.codes[static_cast<std::size_t>(j)][static_cast<std::size_t>(w)];
        }
        return out;
    }, py::arg("num_codes"), py::arg("min_length") = py::none(), "J×W array of 0/1 codes");
    m.def("dsp_gain_db", &dsp_gain_db, py::arg("samples_per_bit"));

    py::enum_<Mode>(m, "Mode")
        .value("PASSIVE_FDMA_CDMA", Mode::PassiveFdmaCdma)
        .value("FM_CDMA", Mode::FmCdma)
        .value("PLAIN_CDMA", Mode::PlainCdma)
        .value("FM_TDMA", Mode::FmTdma)
        .value("ACTIVE", Mode::ActiveOverlapped);
    py::enum_<Waveform>(m, "Waveform")
        .value("SQUARE", Waveform::Square)
        .value("SINE", Waveform::Sine)
        .value("CONSTANT", Waveform::Constant);

    py::class_<PixelGrid>(m, "PixelGrid")
        .def(py::init<int, int, int>(), py::arg("cols"), py::arg("rows"), py::arg("pixel_size") = 1)
        .def_property_readonly("cols", &PixelGrid::cols)
        .def_property_readonly("rows", &PixelGrid::rows)
        .def_property_readonly("size", &PixelGrid::size)
        .def("__repr__", [](const PixelGrid& g) {
            return "PixelGrid(" + std::to_string(g.cols()) + ", " + std::to_string(g.rows()) + ")";
        });

    py::class_<PlanRequest>(m, "PlanRequest")
        .def(py::init<>())
        .def_readwrite("grid", &PlanRequest::grid)
        .def_readwrite("mode", &PlanRequest::mode)
        .def_readwrite("channels", &PlanRequest::channels)
        .def_readwrite("f1", &PlanRequest::f1)
        .def_readwrite("explicit_freqs", &PlanRequest::explicit_freqs)
        .def_readwrite("bit_rate", &PlanRequest::bit_rate)
        .def_readwrite("sample_rate", &PlanRequest::sample_rate)
        .def_readwrite("key_seed", &PlanRequest::key_seed)
        .def_readwrite("shuffle", &PlanRequest::shuffle)
        .def_readwrite("hopping", &PlanRequest::hopping)
        .def_readwrite("code_reallocation", &PlanRequest::code_reallocation)
        .def_readwrite("frame_index", &PlanRequest::frame_index)
        .def_readwrite("min_code_length", &PlanRequest::min_code_length)
        .def_readwrite("square_harmonics", &PlanRequest::square_harmonics)
        .def_readwrite("waveform", &PlanRequest::waveform);

    py::class_<CodingPlan>(m, "CodingPlan")
        .def_property_readonly("grid", &CodingPlan::grid)
        .def_property_readonly("mode", &CodingPlan::mode)
        .def_property_readonly("pixel_count", &CodingPlan::pixel_count)
        .def_property_readonly("channel_count", &CodingPlan::channel_count)
        .def_property_readonly("set_count", &CodingPlan::set_count)
        .def_property_readonly("frame_bits", &CodingPlan::frame_bits)
        .def_property_readonly("samples_per_bit", &CodingPlan::samples_per_bit)
        .def_property_readonly("sample_rate", &CodingPlan::sample_rate)
        .def_property_readonly("bit_time", &CodingPlan::bit_time)
        .def_property_readonly("frame_time", &CodingPlan::frame_time)
        .def_property_readonly("freqs", [](const CodingPlan& p) { return p.frequencies().freqs; })
        .def("bin", &CodingPlan::bin)
        .def("set_of", &CodingPlan::set_of)
        .def("member_of", &CodingPlan::member_of)
        .def("code_bit", &CodingPlan::code_bit)
        .def("channel", [](const CodingPlan& p, int pixel, int bit) { return p.coding_element(pixel, bit).channel; })
        .def("validate", [](const CodingPlan& p) {
            const auto r = validate(p);
            py::list out;
            for (const auto& c : r.checks) out.append(py::make_tuple(c.name, c.passed, c.detail));
            return out;
        })
        .def("speedup", [](const CodingPlan& p) { return validate(p).speedup_vs_single_channel; })
        .def("to_json", &plan_to_json)
        .def("assignment_csv", [](const CodingPlan& p) {
            std::ostringstream ss;
            write_assignment_csv(ss, p);
            return ss.str();
        })
        .def("identity", &plan_identity);

    m.def("build_plan", &build_plan, py::arg("request"), py::arg("strict") = true);
    m.def("plan_from_json", &plan_from_json, py::arg("text"));
    m.def("with_key", &with_key, py::arg("request"), py::arg("key_seed"));

    py::class_<PinkNoise>(m, "PinkNoise")
        .def(py::init<double, double>(), py::arg("amplitude") = 0.0, py::arg("exponent") = 1.0)
        .def_readwrite("amplitude", &PinkNoise::amplitude)
        .def_readwrite("exponent", &PinkNoise::exponent);

    py::class_<DetectorModel>(m, "DetectorModel")
        .def(py::init<>())
        .def_readwrite("gain", &DetectorModel::gain)
        .def_readwrite("noise_sigma", &DetectorModel::noise_sigma)
        .def_readwrite("shot_noise", &DetectorModel::shot_noise)
        .def_readwrite("shot_scale", &DetectorModel::shot_scale)
        .def_readwrite("pink", &DetectorModel::pink)
        .def_readwrite("source_flicker", &DetectorModel::source_flicker)
        .def_readwrite("adc_bits", &DetectorModel::adc_bits)
        .def_readwrite("adc_fullscale", &DetectorModel::adc_fullscale);

    m.def("synthesize", [](const CodingPlan& plan, const py::array_t<double, py::array::c_style | py::array::forcecast>& irradiance,
                           const DetectorModel& detector, bool pd2) {
        Scene scene;
        scene.grid = plan.grid();
        if (plan.is_active()) {
            if (irradiance.ndim() != 2) throw DimensionMismatch("active plans take a P×Q array of per-source maps");
            const auto* d = irradiance.data();
            const auto q = static_cast<std::size_t>(irradiance.shape(1));
            for (py::ssize_t p = 0; p < irradiance.shape(0); ++p) {
                scene.per_source.emplace_back(d + static_cast<std::size_t>(p) * q, d + static_cast<std::size_t>(p + 1) * q);
            }
        } else {
            scene.irradiance = from_array(irradiance);
        }
        return to_array(synthesize(plan, scene, detector, pd2 ? DetectorSide::Pd2 : DetectorSide::Pd1).samples);
    }, py::arg("plan"), py::arg("irradiance"), py::arg("detector") = DetectorModel{}, py::arg("pd2") = false,
       "Noiseless detector samples for per-pixel irradiance (indexed like the active pixels).");

    m.def("add_noise", [](const CodingPlan& plan, const py::array_t<double, py::array::c_style | py::array::forcecast>& samples,
                          const DetectorModel& detector, std::uint64_t seed, int detector_index) {
        auto s = add_noise(make_stream(plan, samples), detector, seed, detector_index);
        return to_array(adc(s, detector).samples);
    }, py::arg("plan"), py::arg("samples"), py::arg("detector"), py::arg("seed"), py::arg("detector_index") = 0);

    m.def("decode", [](const CodingPlan& plan, const py::array_t<double, py::array::c_style | py::array::forcecast>& samples,
                       bool pd2, bool clamp) {
        const auto img = decode_frame(make_stream(plan, samples), plan, pd2 ? DetectorSide::Pd2 : DetectorSide::Pd1);
        py::list out;
        for (const auto& v : clamp ? img.values : img.raw) out.append(to_array(v));
        return out;
    }, py::arg("plan"), py::arg("samples"), py::arg("pd2") = false, py::arg("clamp") = false,
       "Per-pixel values in units of G·I, one array per decoded image.");

    m.def("to_image", [](const PixelGrid& grid, const py::array_t<double, py::array::c_style | py::array::forcecast>& values) {
        return to_image(grid, from_array(values));
    }, py::arg("grid"), py::arg("values"));

    m.def("crosstalk", &crosstalk, py::arg("plan"), py::arg("probe_channel"));
    m.def("pearson", [](const std::vector<double>& a, const std::vector<double>& b) { return pearson(a, b); });
    m.def("rmse", [](const std::vector<double>& a, const std::vector<double>& b) { return rmse(a, b); });
    m.def("speedup", &speedup, py::arg("a"), py::arg("b"));
    m.def("wrong_key_correlation", [](const CodingPlan& plan, const py::array_t<double, py::array::c_style | py::array::forcecast>& samples,
                                      std::uint64_t wrong_seed, const std::vector<double>& truth) {
        return wrong_key_correlation(make_stream(plan, samples), plan, wrong_seed, truth);
    }, py::arg("plan"), py::arg("samples"), py::arg("wrong_seed"), py::arg("truth"));

    m.def("preset_names", &preset_names);
    m.def("preset_json", [](const std::string& name, bool full_scale) { return config_to_json(preset(name, full_scale)); },
          py::arg("name"), py::arg("full_scale") = false);
    m.def("run_experiment", [](const std::string& config_json, std::optional<std::string> out_dir) {
        const auto r = run_experiment(config_from_json(config_json));
        if (out_dir) write_outputs(r, *out_dir);
        return result_dict(r);
    }, py::arg("config_json"), py::arg("out_dir") = py::none(),
       "Runs a JSON experiment config; returns images, truth, patch statistics and checks.");
    m.attr("HDR_FLICKER") = kHdrFlicker;
}
