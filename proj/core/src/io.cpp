#include "chi/io.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "chi/pauli.hpp"

namespace chi {
namespace {

using nlohmann::json;

json parse_text(const std::string& text) {
  json j = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) throw ValidationError("malformed JSON document");
  return j;
}

const json& field(const json& j, const char* key) {
  if (!j.is_object()) throw ValidationError("expected a JSON object");
  auto it = j.find(key);
  if (it == j.end())
    throw ValidationError(std::string("missing field '") + key + "'");
  return *it;
}

double number_from(const json& j, const char* what) {
  if (!j.is_number())
    throw ValidationError(std::string(what) + " must be a number");
  return j.get<double>();
}

std::size_t index_from(const json& j, const char* what) {
  if (!j.is_number_unsigned())
    throw ValidationError(std::string(what) +
                          " must be a non-negative integer");
  return j.get<std::size_t>();
}

json complex_to(const Complex& z) { return json::array({z.real(), z.imag()}); }

Complex complex_from(const json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ValidationError("complex entries must be [re, im] pairs");
  return {j[0].get<double>(), j[1].get<double>()};
}

json matrix_to(const Matrix& m) {
  if (!m.allFinite())
    throw ValidationError("refusing to serialize a non-finite matrix");
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(complex_to(m(r, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from(const json& j) {
  if (!j.is_array() || j.empty())
    throw ValidationError("matrix must be a non-empty array of rows");
  const std::size_t n_rows = j.size();
  const json& first = j[0];
  if (!first.is_array() || first.empty())
    throw ValidationError("matrix rows must be non-empty arrays");
  const std::size_t n_cols = first.size();
  Matrix m(static_cast<Eigen::Index>(n_rows), static_cast<Eigen::Index>(n_cols));
  for (std::size_t r = 0; r < n_rows; ++r) {
    const json& row = j[r];
    if (!row.is_array() || row.size() != n_cols)
      throw ValidationError("matrix rows have inconsistent lengths");
    for (std::size_t c = 0; c < n_cols; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          complex_from(row[c]);
  }
  return m;
}

int n_qubits_from(const json& j) {
  const json& n = field(j, "n_qubits");
  if (!n.is_number_unsigned() || n.get<std::size_t>() < 1)
    throw ValidationError("n_qubits must be a positive integer");
  return n.get<int>();
}

// Shared body of the process/error documents.
json process_to(const ProcessMatrix& chi_mat) {
  json j;
  j["n_qubits"] = chi_mat.n_qubits;
  j["convention"] = "chi";
  j["entries"] = matrix_to(chi_mat.m);
  return j;
}

ProcessMatrix process_from(const json& j) {
  ProcessMatrix chi_mat;
  chi_mat.n_qubits = n_qubits_from(j);
  chi_mat.m = matrix_from(field(j, "entries"));
  const auto d2 =
      static_cast<Eigen::Index>(pauli_count(chi_mat.n_qubits));
  if (chi_mat.m.rows() != d2 || chi_mat.m.cols() != d2)
    throw ValidationError("entries dimension does not match n_qubits");
  return chi_mat;
}

const char* convention_name(ErrorConvention convention) {
  return convention == ErrorConvention::ErrorAfter ? "error_after"
                                                   : "error_before";
}

ErrorConvention convention_from(const json& j) {
  if (!j.is_string())
    throw ValidationError("convention must be a string");
  const std::string s = j.get<std::string>();
  if (s == "error_after") return ErrorConvention::ErrorAfter;
  if (s == "error_before") return ErrorConvention::ErrorBefore;
  throw ValidationError("unknown error convention '" + s + "'");
}

json error_to(const ErrorMatrix& err) {
  json j = process_to(err.chi);
  j["convention"] = convention_name(err.convention);
  j["reference_unitary"] = matrix_to(err.reference_unitary);
  return j;
}

ErrorMatrix error_from(const json& j) {
  ErrorMatrix err;
  err.chi = process_from(j);
  err.convention = convention_from(field(j, "convention"));
  err.reference_unitary = matrix_from(field(j, "reference_unitary"));
  const auto d = static_cast<Eigen::Index>(1) << err.chi.n_qubits;
  if (err.reference_unitary.rows() != d || err.reference_unitary.cols() != d)
    throw ValidationError("reference_unitary dimension does not match n_qubits");
  return err;
}

json setup_to(const TomographySetup& setup) {
  json j;
  j["n_qubits"] = setup.n_qubits;
  j["shots"] = setup.shots;
  json inputs = json::array();
  for (const Matrix& rho : setup.input_states) inputs.push_back(matrix_to(rho));
  j["input_states"] = std::move(inputs);
  json settings = json::array();
  for (const auto& word : setup.settings) {
    json axes = json::array();
    for (int axis : word) axes.push_back(axis);
    settings.push_back(std::move(axes));
  }
  j["settings"] = std::move(settings);
  return j;
}

TomographySetup setup_from(const json& j) {
  TomographySetup setup;
  setup.n_qubits = n_qubits_from(j);
  setup.shots = index_from(field(j, "shots"), "shots");
  const json& inputs = field(j, "input_states");
  if (!inputs.is_array() || inputs.empty())
    throw ValidationError("input_states must be a non-empty array");
  for (const json& rho : inputs) setup.input_states.push_back(matrix_from(rho));
  const json& settings = field(j, "settings");
  if (!settings.is_array() || settings.empty())
    throw ValidationError("settings must be a non-empty array");
  for (const json& word : settings) {
    if (!word.is_array())
      throw ValidationError("each setting must be an array of axis codes");
    std::vector<int> axes;
    for (const json& axis : word)
      axes.push_back(static_cast<int>(index_from(axis, "axis code")));
    setup.settings.push_back(std::move(axes));
  }
  return setup;
}

json gate_to(const GateWithError& gate) {
  json j;
  j["desired"] = matrix_to(gate.desired);
  j["error"] = error_to(gate.error);
  return j;
}

GateWithError gate_from(const json& j) {
  GateWithError gate;
  gate.desired = matrix_from(field(j, "desired"));
  gate.error = error_from(field(j, "error"));
  if (gate.error.convention != ErrorConvention::ErrorAfter)
    throw ValidationError("sequence gates must use the error_after convention");
  if (gate.desired.rows() != gate.error.reference_unitary.rows() ||
      (gate.desired - gate.error.reference_unitary).cwiseAbs().maxCoeff() >
          1e-9)
    throw ValidationError(
        "sequence gate error must reference its own desired unitary");
  return gate;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

void append_csv_number(std::string& out, double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  out += buf;
}

std::string csv_from_matrix(const Matrix& m, int n_qubits) {
  std::string out = "row,column,real,imag,magnitude\n";
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const std::string row_label =
        pauli_label(static_cast<std::size_t>(r), n_qubits);
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      out += row_label;
      out += ',';
      out += pauli_label(static_cast<std::size_t>(c), n_qubits);
      out += ',';
      append_csv_number(out, m(r, c).real());
      out += ',';
      append_csv_number(out, m(r, c).imag());
      out += ',';
      append_csv_number(out, std::abs(m(r, c)));
      out += '\n';
    }
  }
  return out;
}

}  // namespace

std::string matrix_json(const Matrix& m) { return dump(matrix_to(m)); }

Matrix parse_matrix_json(const std::string& text) {
  return matrix_from(parse_text(text));
}

std::string process_json(const ProcessMatrix& chi_mat) {
  return dump(process_to(chi_mat));
}

ProcessMatrix parse_process_json(const std::string& text) {
  const json j = parse_text(text);
  const json& convention = field(j, "convention");
  if (!convention.is_string() || convention.get<std::string>() != "chi")
    throw ValidationError("process matrix documents must declare convention 'chi'");
  return process_from(j);
}

std::string error_json(const ErrorMatrix& err) { return dump(error_to(err)); }

ErrorMatrix parse_error_json(const std::string& text) {
  return error_from(parse_text(text));
}

std::string schedule_json(const GateSchedule& schedule) {
  json segments = json::array();
  for (const ScheduleSegment& seg : schedule.segments) {
    json s;
    s["duration"] = seg.duration;
    s["hamiltonian"] = matrix_to(seg.hamiltonian);
    json channels = json::array();
    for (const LindbladChannel& ch : seg.channels) {
      json c;
      c["rate"] = ch.rate;
      c["operator"] = matrix_to(ch.jump_operator);
      c["normalized"] = ch.normalized;
      channels.push_back(std::move(c));
    }
    s["channels"] = std::move(channels);
    segments.push_back(std::move(s));
  }
  json j;
  j["segments"] = std::move(segments);
  return dump(j);
}

GateSchedule parse_schedule_json(const std::string& text) {
  const json j = parse_text(text);
  const json& segments = field(j, "segments");
  if (!segments.is_array() || segments.empty())
    throw ValidationError("schedule must contain at least one segment");
  GateSchedule schedule;
  for (const json& s : segments) {
    ScheduleSegment seg;
    seg.duration = number_from(field(s, "duration"), "duration");
    seg.hamiltonian = matrix_from(field(s, "hamiltonian"));
    if (s.contains("channels")) {
      const json& channels = s.at("channels");
      if (!channels.is_array())
        throw ValidationError("channels must be an array");
      for (const json& c : channels) {
        LindbladChannel ch;
        ch.rate = number_from(field(c, "rate"), "rate");
        ch.jump_operator = matrix_from(field(c, "operator"));
        if (c.contains("normalized")) {
          if (!c.at("normalized").is_boolean())
            throw ValidationError("normalized must be a boolean");
          ch.normalized = c.at("normalized").get<bool>();
        }
        seg.channels.push_back(std::move(ch));
      }
    }
    schedule.segments.push_back(std::move(seg));
  }
  return schedule;
}

std::string spam_json(const SpamModel& spam) {
  json j;
  j["chi_prep"] = process_to(spam.chi_prep);
  j["chi_meas"] = process_to(spam.chi_meas);
  return dump(j);
}

SpamModel parse_spam_json(const std::string& text) {
  const json j = parse_text(text);
  SpamModel spam;
  spam.chi_prep = process_from(field(j, "chi_prep"));
  spam.chi_meas = process_from(field(j, "chi_meas"));
  if (spam.chi_prep.n_qubits != spam.chi_meas.n_qubits)
    throw ValidationError("chi_prep and chi_meas disagree on n_qubits");
  return spam;
}

std::string calibration_json(const CalibrationSet& cal) {
  json gates = json::array();
  for (const CalibrationGate& gate : cal.gates) {
    const Matrix rebuilt = calibration_unitary(gate.label);
    if (rebuilt.rows() != gate.unitary.rows() ||
        (rebuilt - gate.unitary).cwiseAbs().maxCoeff() > 1e-9)
      throw ValidationError("calibration gate unitary does not match label '" +
                            gate.label + "'");
    json g;
    g["label"] = gate.label;
    g["err_exp"] = error_to(gate.measured);
    gates.push_back(std::move(g));
  }
  json j;
  j["gates"] = std::move(gates);
  return dump(j);
}

CalibrationSet parse_calibration_json(const std::string& text) {
  const json j = parse_text(text);
  const json& gates = field(j, "gates");
  if (!gates.is_array() || gates.empty())
    throw ValidationError("calibration set must contain at least one gate");
  CalibrationSet cal;
  for (const json& g : gates) {
    CalibrationGate gate;
    const json& label = field(g, "label");
    if (!label.is_string())
      throw ValidationError("calibration labels must be strings");
    gate.label = label.get<std::string>();
    gate.unitary = calibration_unitary(gate.label);
    gate.measured = error_from(field(g, "err_exp"));
    if (gate.measured.reference_unitary.rows() != gate.unitary.rows())
      throw ValidationError("calibration error dimension does not match label '" +
                            gate.label + "'");
    cal.gates.push_back(std::move(gate));
  }
  return cal;
}

std::string setup_json(const TomographySetup& setup) {
  return dump(setup_to(setup));
}

TomographySetup parse_setup_json(const std::string& text) {
  return setup_from(parse_text(text));
}

std::string dataset_json(const TomographyDataset& dataset,
                         const TomographySetup& setup) {
  json records = json::array();
  for (const TomographyRecord& rec : dataset.records) {
    json counts = json::array();
    if (dataset.shots == kExactShots) {
      for (double f : rec.frequencies) counts.push_back(f);
    } else {
      for (double f : rec.frequencies) {
        const double scaled = f * static_cast<double>(dataset.shots);
        const auto count = std::llround(scaled);
        if (std::abs(scaled - static_cast<double>(count)) > 1e-6)
          throw ValidationError(
              "record frequencies are not integer counts for the declared "
              "shots");
        counts.push_back(count);
      }
    }
    json r;
    r["input"] = rec.input;
    r["setting"] = rec.setting;
    r["counts"] = std::move(counts);
    records.push_back(std::move(r));
  }
  json j;
  j["setup"] = setup_to(setup);
  j["records"] = std::move(records);
  j["shots"] = dataset.shots;
  j["seed"] = dataset.seed;
  return dump(j);
}

StoredDataset parse_dataset_json(const std::string& text) {
  const json j = parse_text(text);
  StoredDataset stored;
  stored.setup = setup_from(field(j, "setup"));
  stored.dataset.n_qubits = stored.setup.n_qubits;
  stored.dataset.shots = index_from(field(j, "shots"), "shots");
  stored.dataset.seed = index_from(field(j, "seed"), "seed");
  const json& records = field(j, "records");
  if (!records.is_array())
    throw ValidationError("records must be an array");
  for (const json& r : records) {
    TomographyRecord rec;
    rec.input = index_from(field(r, "input"), "input");
    rec.setting = index_from(field(r, "setting"), "setting");
    const json& counts = field(r, "counts");
    if (!counts.is_array() || counts.empty())
      throw ValidationError("counts must be a non-empty array");
    for (const json& c : counts) {
      if (stored.dataset.shots == kExactShots) {
        rec.frequencies.push_back(number_from(c, "exact counts"));
      } else {
        rec.frequencies.push_back(
            static_cast<double>(index_from(c, "counts")) /
            static_cast<double>(stored.dataset.shots));
      }
    }
    stored.dataset.records.push_back(std::move(rec));
  }
  return stored;
}

std::string gate_sequence_json(const std::vector<GateWithError>& gates) {
  json j = json::array();
  for (const GateWithError& gate : gates) j.push_back(gate_to(gate));
  return dump(j);
}

std::vector<GateWithError> parse_gate_sequence_json(const std::string& text) {
  const json j = parse_text(text);
  if (!j.is_array() || j.empty())
    throw ValidationError("gate sequence must be a non-empty array");
  std::vector<GateWithError> gates;
  for (const json& g : j) gates.push_back(gate_from(g));
  return gates;
}

std::string plot_data_csv(const ProcessMatrix& chi_mat) {
  return csv_from_matrix(chi_mat.m, chi_mat.n_qubits);
}

std::string plot_data_csv(const ErrorMatrix& err) {
  return csv_from_matrix(err.chi.m, err.chi.n_qubits);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "' for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw ValidationError("failed while reading '" + path + "'");
  return buffer.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot open '" + path + "' for writing");
  out << text;
  out.flush();
  if (!out) throw ValidationError("failed while writing '" + path + "'");
}

}  // namespace chi
