// Python bindings. Signals are 1-D float64 arrays, spectrograms are complex128
// arrays of shape (frames, bins), CLC coefficients (frames, taps, bands).

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <memory>
#include <string>
#include <vector>

#include "clcnet/clc.h"
#include "clcnet/data.h"
#include "clcnet/filterbank.h"
#include "clcnet/lpc.h"
#include "clcnet/metrics.h"
#include "clcnet/model.h"
#include "clcnet/train.h"
#include "clcnet/wav.h"

namespace py = pybind11;

namespace clcnet {
namespace {

using RealArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using ComplexArray = py::array_t<Complex, py::array::c_style | py::array::forcecast>;

std::vector<double> ToVector(const RealArray& a) {
  if (a.ndim() != 1) throw py::value_error("expected a 1-D array");
  return std::vector<double>(a.data(), a.data() + a.size());
}

std::vector<Complex> ToComplexVector(const ComplexArray& a) {
  if (a.ndim() != 1) throw py::value_error("expected a 1-D array");
  return std::vector<Complex>(a.data(), a.data() + a.size());
}

RealArray FromVector(const std::vector<double>& v) {
  RealArray out(std::vector<py::ssize_t>{static_cast<py::ssize_t>(v.size())});
  std::memcpy(out.mutable_data(), v.data(), v.size() * sizeof(double));
  return out;
}

ComplexArray FromComplexVector(const std::vector<Complex>& v) {
  ComplexArray out(std::vector<py::ssize_t>{static_cast<py::ssize_t>(v.size())});
  std::memcpy(out.mutable_data(), v.data(), v.size() * sizeof(Complex));
  return out;
}

ComplexArray FromSpectrogram(const Spectrogram& s) {
  ComplexArray out({s.num_frames(), s.num_bins()});
  std::memcpy(out.mutable_data(), s.data().data(), s.data().size() * sizeof(Complex));
  return out;
}

Spectrogram ToSpectrogram(const ComplexArray& a, const FilterBank& bank) {
  if (a.ndim() != 2 || static_cast<size_t>(a.shape(1)) != bank.num_bins()) {
    throw py::value_error("expected shape (frames, " + std::to_string(bank.num_bins()) + ")");
  }
  Spectrogram s(a.shape(0), bank.num_bins(), bank.hop(), bank.frame_len(),
                bank.sample_rate());
  std::memcpy(s.data().data(), a.data(), s.data().size() * sizeof(Complex));
  return s;
}

ComplexArray FromCoeffs(const CoeffTensor& c) {
  ComplexArray out({c.num_frames(), c.taps(), c.num_bins()});
  Complex* p = out.mutable_data();
  for (size_t k = 0; k < c.num_frames(); ++k) {
    for (size_t i = 0; i < c.taps(); ++i) {
      for (size_t f = 0; f < c.num_bins(); ++f) *p++ = c.at(k, i, f);
    }
  }
  return out;
}

CoeffTensor ToCoeffs(const ComplexArray& a, int offset) {
  if (a.ndim() != 3 || a.shape(1) < 1) {
    throw py::value_error("expected shape (frames, taps, bands)");
  }
  CoeffTensor c(a.shape(0), a.shape(2), a.shape(1) - 1, offset);
  const Complex* p = a.data();
  for (size_t k = 0; k < c.num_frames(); ++k) {
    for (size_t i = 0; i < c.taps(); ++i) {
      for (size_t f = 0; f < c.num_bins(); ++f) c.at(k, i, f) = *p++;
    }
  }
  return c;
}

RealArray FromMask(const RealMask& m) {
  RealArray out({m.num_frames, m.num_bins});
  std::memcpy(out.mutable_data(), m.values.data(), m.values.size() * sizeof(double));
  return out;
}

// A trained model loaded from a checkpoint file.
struct LoadedModel {
  Checkpoint checkpoint;
  std::unique_ptr<Model> model;

  explicit LoadedModel(const std::string& path)
      : checkpoint(Checkpoint::Load(path)),
        model(std::make_unique<Model>(checkpoint.MakeModel())) {}
};

}  // namespace
}  // namespace clcnet

PYBIND11_MODULE(_clcnet, m) {
  using namespace clcnet;
  m.doc() = "Complex linear coding speech enhancement";

  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", error);
  py::register_exception<DataError>(m, "DataError", error);
  py::register_exception<NumericError>(m, "NumericError", error);

  m.attr("SAMPLE_RATE") = kDefaultSampleRate;
  m.attr("FRAME_LEN") = kDefaultFrameLen;
  m.attr("HOP") = kDefaultHop;

  m.def(
      "analyze",
      [](const RealArray& x, size_t frame_len, double sample_rate) {
        return FromSpectrogram(FilterBank(frame_len, sample_rate).Analyze(ToVector(x)));
      },
      py::arg("x"), py::arg("frame_len") = kDefaultFrameLen,
      py::arg("sample_rate") = kDefaultSampleRate);
  m.def(
      "synthesize",
      [](const ComplexArray& spec, size_t num_samples, size_t frame_len, double sample_rate) {
        const FilterBank bank(frame_len, sample_rate);
        return FromVector(bank.Synthesize(ToSpectrogram(spec, bank), num_samples).samples);
      },
      py::arg("spec"), py::arg("num_samples") = 0, py::arg("frame_len") = kDefaultFrameLen,
      py::arg("sample_rate") = kDefaultSampleRate);
  m.def(
      "algorithmic_latency_ms",
      [](int offset, size_t frame_len, double sample_rate) {
        return AlgorithmicLatencyMs(offset, FilterBank(frame_len, sample_rate));
      },
      py::arg("offset") = kDefaultOffset, py::arg("frame_len") = kDefaultFrameLen,
      py::arg("sample_rate") = kDefaultSampleRate);

  m.def(
      "apply_clc",
      [](const ComplexArray& spec, const ComplexArray& coeffs, int offset, size_t frame_len,
         double sample_rate) {
        const FilterBank bank(frame_len, sample_rate);
        return FromSpectrogram(ApplyClc(ToSpectrogram(spec, bank), ToCoeffs(coeffs, offset)));
      },
      py::arg("spec"), py::arg("coeffs"), py::arg("offset") = kDefaultOffset,
      py::arg("frame_len") = kDefaultFrameLen, py::arg("sample_rate") = kDefaultSampleRate);
  m.def(
      "oracle_clc_coeffs",
      [](const ComplexArray& noisy, const ComplexArray& target, size_t order, int offset,
         size_t window, double ridge, size_t frame_len, double sample_rate) {
        const FilterBank bank(frame_len, sample_rate);
        OracleClcOptions opt;
        opt.order = order;
        opt.offset = offset;
        opt.window = window;
        opt.ridge = ridge;
        return FromCoeffs(
            OracleClcCoeffs(ToSpectrogram(noisy, bank), ToSpectrogram(target, bank), opt));
      },
      py::arg("noisy"), py::arg("target"), py::arg("order") = kDefaultOrder,
      py::arg("offset") = kDefaultOffset, py::arg("window") = 9, py::arg("ridge") = 1e-6,
      py::arg("frame_len") = kDefaultFrameLen, py::arg("sample_rate") = kDefaultSampleRate);
  m.def(
      "oracle_wiener_gain",
      [](const ComplexArray& speech, const ComplexArray& noise, size_t frame_len,
         double sample_rate) {
        const FilterBank bank(frame_len, sample_rate);
        return FromMask(OracleWienerGain(ToSpectrogram(speech, bank), ToSpectrogram(noise, bank)));
      },
      py::arg("speech"), py::arg("noise"), py::arg("frame_len") = kDefaultFrameLen,
      py::arg("sample_rate") = kDefaultSampleRate);

  m.def(
      "autocorrelation",
      [](const ComplexArray& x, size_t max_lag) {
        return FromComplexVector(lpc::Autocorrelation<Complex>(ToComplexVector(x), max_lag));
      },
      py::arg("x"), py::arg("max_lag"));
  m.def(
      "levinson_durbin",
      [](const ComplexArray& r, size_t order) {
        const auto res = lpc::LevinsonDurbin<Complex>(ToComplexVector(r), order);
        return py::make_tuple(FromComplexVector(res.coeffs.a), res.error_power,
                              FromComplexVector(res.reflection));
      },
      py::arg("r"), py::arg("order"),
      "Returns (coefficients, final error power, reflection coefficients).");
  m.def(
      "lpc_covariance",
      [](const ComplexArray& x, size_t order) {
        return FromComplexVector(lpc::CovarianceMethod<Complex>(ToComplexVector(x), order).a);
      },
      py::arg("x"), py::arg("order"));
  m.def(
      "lpc_predict",
      [](const ComplexArray& x, const ComplexArray& a) {
        return FromComplexVector(lpc::Predict<Complex>(
            ToComplexVector(x), lpc::LpcCoeffs<Complex>{ToComplexVector(a)}));
      },
      py::arg("x"), py::arg("a"));

  m.def(
      "rmse",
      [](const RealArray& ref, const RealArray& est) { return Rmse(ToVector(ref), ToVector(est)); },
      py::arg("ref"), py::arg("est"));
  m.def(
      "si_sdr",
      [](const RealArray& ref, const RealArray& est, double cap_db) {
        return SiSdr(ToVector(ref), ToVector(est), cap_db);
      },
      py::arg("ref"), py::arg("est"), py::arg("cap_db") = kSiSdrCapDb);
  m.def(
      "stoi",
      [](const RealArray& ref, const RealArray& est, double sample_rate) {
        return Stoi(ToVector(ref), ToVector(est), sample_rate);
      },
      py::arg("ref"), py::arg("est"), py::arg("sample_rate") = kDefaultSampleRate);

  m.def(
      "synth_speech",
      [](uint64_t seed, double seconds) { return FromVector(SynthSpeech(seed, seconds).samples); },
      py::arg("seed"), py::arg("seconds"));
  m.def(
      "synth_noise",
      [](uint64_t seed, double seconds, const std::string& kind) {
        return FromVector(SynthNoise(seed, seconds, ParseNoiseKind(kind)).samples);
      },
      py::arg("seed"), py::arg("seconds"), py::arg("kind") = "white");
  m.def(
      "active_snr_db",
      [](const RealArray& speech, const RealArray& noise, double sample_rate) {
        return ActiveSpeechSnrDb(ToVector(speech), ToVector(noise), sample_rate);
      },
      py::arg("speech"), py::arg("noise"), py::arg("sample_rate") = kDefaultSampleRate);

  m.def(
      "read_wav",
      [](const std::string& path) {
        const Waveform w = ReadWav(path);
        return py::make_tuple(FromVector(w.samples), w.sample_rate);
      },
      py::arg("path"), "Returns (samples, sample_rate).");

  py::class_<LoadedModel>(m, "Model")
      .def(py::init<const std::string&>(), py::arg("checkpoint"))
      .def_property_readonly("sample_rate",
                             [](const LoadedModel& s) { return s.checkpoint.model.sample_rate; })
      .def_property_readonly("offset",
                             [](const LoadedModel& s) { return s.checkpoint.model.offset; })
      .def_property_readonly("order",
                             [](const LoadedModel& s) { return s.checkpoint.model.order; })
      .def_property_readonly("num_parameters",
                             [](const LoadedModel& s) { return s.model->params().size(); })
      .def_property_readonly(
          "streaming_delay",
          [](const LoadedModel& s) { return s.checkpoint.model.StreamingDelaySamples(); })
      .def(
          "enhance",
          [](const LoadedModel& s, const RealArray& x) {
            const std::vector<double> in = ToVector(x);
            std::vector<double> out;
            {
              py::gil_scoped_release release;
              out = Enhance(*s.model, in);
            }
            return FromVector(out);
          },
          py::arg("x"), "Offline enhancement; output aligned with and as long as the input.")
      .def(
          "enhance_streaming",
          [](const LoadedModel& s, const RealArray& x) {
            const std::vector<double> in = ToVector(x);
            std::vector<double> out;
            {
              py::gil_scoped_release release;
              StreamingEnhancer enhancer(*s.model);
              enhancer.Process(in, out);
            }
            return FromVector(out);
          },
          py::arg("x"), "Sample-by-sample enhancement; output delayed by streaming_delay.");
}
