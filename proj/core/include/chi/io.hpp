#pragma once

// JSON and CSV (de)serialization for every on-disk artifact. Parsers check
// shape, types and finiteness; physical validation stays with the consuming
// operation so slightly unphysical experimental data can still be loaded.
// All emitters are deterministic (sorted keys, round-trip number printing),
// so identical inputs give byte-identical files.

#include <string>
#include <vector>

#include "chi/compose.hpp"
#include "chi/error_matrix.hpp"
#include "chi/lindblad.hpp"
#include "chi/process.hpp"
#include "chi/spam.hpp"
#include "chi/tomo.hpp"
#include "chi/types.hpp"

namespace chi {

// Bare matrix document: nested row-major arrays of [re, im] pairs.
std::string matrix_json(const Matrix& m);
Matrix parse_matrix_json(const std::string& text);

std::string process_json(const ProcessMatrix& chi_mat);
ProcessMatrix parse_process_json(const std::string& text);

std::string error_json(const ErrorMatrix& err);
ErrorMatrix parse_error_json(const std::string& text);

std::string schedule_json(const GateSchedule& schedule);
GateSchedule parse_schedule_json(const std::string& text);

std::string spam_json(const SpamModel& spam);
SpamModel parse_spam_json(const std::string& text);

// Calibration gates are stored as label plus measured error matrix; the
// unitary is rebuilt from the label, so only calibration-family gates are
// representable in this format.
std::string calibration_json(const CalibrationSet& cal);
CalibrationSet parse_calibration_json(const std::string& text);

std::string setup_json(const TomographySetup& setup);
TomographySetup parse_setup_json(const std::string& text);

struct StoredDataset {
  TomographySetup setup;
  TomographyDataset dataset;
};

// Finite-shot records store integer counts; exact (shots = 0) records store
// Born probabilities in the same field.
std::string dataset_json(const TomographyDataset& dataset,
                         const TomographySetup& setup);
StoredDataset parse_dataset_json(const std::string& text);

// Ordered gate sequence for the composition pipeline.
std::string gate_sequence_json(const std::vector<GateWithError>& gates);
std::vector<GateWithError> parse_gate_sequence_json(const std::string& text);

// CSV bar-chart data: one line per chi entry in canonical Pauli order with
// columns row,column,real,imag,magnitude and a header line.
std::string plot_data_csv(const ProcessMatrix& chi_mat);
std::string plot_data_csv(const ErrorMatrix& err);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace chi
