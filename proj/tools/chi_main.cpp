// chi: command-line front end over the process-matrix library. Every
// subcommand reads/writes the JSON formats from chi/io.hpp; file-producing
// invocations also write a <output>.manifest.json with the command line,
// input digests, seed and tool version. Exit codes: 0 success, 1 validation
// error, 2 numerical failure, 64 usage.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <iostream>
#include <map>
#include <string>
#include <functional>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "chi/compose.hpp"
#include "chi/correction.hpp"
#include "chi/error_matrix.hpp"
#include "chi/gates.hpp"
#include "chi/io.hpp"
#include "chi/lindblad.hpp"
#include "chi/pauli.hpp"
#include "chi/process.hpp"
#include "chi/spam.hpp"
#include "chi/tomo.hpp"
#include "chi/trajectory.hpp"
#include "chi/types.hpp"

#ifndef CHI_VERSION
#define CHI_VERSION "0.0.0"
#endif

namespace {

using nlohmann::json;

struct Ctx {
  std::uint64_t seed = 0;
  int threads = 1;
  std::string command_line;
  std::map<std::string, std::string> input_digests;
};

std::string fnv1a64_hex(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string load_input(Ctx& ctx, const std::string& path) {
  std::string text = chi::read_text_file(path);
  ctx.input_digests[path] = "fnv1a64:" + fnv1a64_hex(text);
  return text;
}

std::string utc_now() {
  const std::time_t t =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_manifest(const Ctx& ctx, const std::string& out_path) {
  json inputs = json::object();
  for (const auto& [path, digest] : ctx.input_digests) inputs[path] = digest;
  json m;
  m["command"] = ctx.command_line;
  m["inputs"] = std::move(inputs);
  m["seed"] = ctx.seed;
  m["tool_version"] = CHI_VERSION;
  m["wall_clock_utc"] = utc_now();
  chi::write_text_file(out_path + ".manifest.json", m.dump(2) + "\n");
}

// Artifact delivery: to the file (plus manifest) when -o was given, to
// stdout otherwise. echo_stdout additionally mirrors file output to stdout
// for the commands whose contract is "prints ... JSON".
void deliver(Ctx& ctx, const std::string& out_path, const std::string& text,
             bool echo_stdout = false) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  chi::write_text_file(out_path, text);
  write_manifest(ctx, out_path);
  if (echo_stdout) std::cout << text;
}

json complex_json(const chi::Complex& z) {
  return json::array({z.real(), z.imag()});
}

chi::ErrorConvention convention_from_name(const std::string& name) {
  return name == "before" ? chi::ErrorConvention::ErrorBefore
                          : chi::ErrorConvention::ErrorAfter;
}

// Reusable "--gate NAME [--angle A] | --input FILE" unitary source.
struct UnitarySource {
  std::string gate;
  double angle = 0.0;
  std::string file;

  bool given() const { return !gate.empty() || !file.empty(); }
};

void add_unitary_options(CLI::App* sub, UnitarySource& src, const char* file_flag,
                         const char* what) {
  auto* g = sub->add_option("--gate", src.gate,
                            std::string("built-in gate name for ") + what);
  sub->add_option("--angle", src.angle,
                  "angle argument for zrot/cphase (radians)");
  auto* f = sub->add_option(file_flag, src.file,
                            std::string("matrix JSON file for ") + what);
  g->excludes(f);
}

chi::Matrix resolve_unitary(Ctx& ctx, const UnitarySource& src,
                            const char* what) {
  if (!src.gate.empty()) return chi::named_gate(src.gate, src.angle);
  if (!src.file.empty())
    return chi::parse_matrix_json(load_input(ctx, src.file));
  throw CLI::RequiredError(std::string(what) +
                           " (pass --gate or a matrix file)");
}

std::vector<std::size_t> parse_pauli_set(const std::string& csv) {
  std::vector<std::size_t> set;
  std::size_t start = 0;
  while (start <= csv.size()) {
    const std::size_t end = csv.find(',', start);
    const std::string label =
        csv.substr(start, end == std::string::npos ? end : end - start);
    if (!label.empty()) set.push_back(chi::pauli_index(label));
    if (end == std::string::npos) break;
    start = end + 1;
  }
  if (set.empty())
    throw chi::ValidationError("correctable set is empty: '" + csv + "'");
  return set;
}

std::uint64_t seed_from_env() {
  const char* env = std::getenv("CHI_SEED");
  if (env == nullptr || *env == '\0') return 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (end == nullptr || *end != '\0')
    throw chi::ValidationError(std::string("CHI_SEED is not an unsigned "
                                           "integer: '") +
                               env + "'");
  return static_cast<std::uint64_t>(v);
}

json report_json(const chi::ErrorMatrix& err) {
  const int n = err.chi.n_qubits;
  const double f = err.fidelity();
  const chi::CoherentSplit split = chi::coherent_split(err);

  struct Peak {
    Eigen::Index row, col;
    double magnitude;
  };
  std::vector<Peak> peaks;
  for (Eigen::Index r = 0; r < err.chi.dim(); ++r)
    for (Eigen::Index c = 0; c < err.chi.dim(); ++c)
      if (r != 0 || c != 0) peaks.push_back({r, c, std::abs(err.chi.m(r, c))});
  std::sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) {
    if (a.magnitude != b.magnitude) return a.magnitude > b.magnitude;
    if (a.row != b.row) return a.row < b.row;
    return a.col < b.col;
  });
  if (peaks.size() > 10) peaks.resize(10);
  json peak_list = json::array();
  for (const Peak& p : peaks) {
    json entry;
    entry["row"] = chi::pauli_label(static_cast<std::size_t>(p.row), n);
    entry["column"] = chi::pauli_label(static_cast<std::size_t>(p.col), n);
    entry["value"] = complex_json(err.chi.m(p.row, p.col));
    entry["magnitude"] = p.magnitude;
    peak_list.push_back(std::move(entry));
  }

  std::vector<std::size_t> full_set;
  for (std::size_t i = 1; i < static_cast<std::size_t>(err.chi.dim()); ++i)
    full_set.push_back(i);
  const chi::CorrectionPlan plan = chi::suggest_correction(err, full_set);
  json terms = json::array();
  for (std::size_t i = 1; i < static_cast<std::size_t>(err.chi.dim()); ++i) {
    if (std::abs(plan.u_corr(static_cast<Eigen::Index>(i))) <= 1e-12) continue;
    json term;
    term["pauli"] = chi::pauli_label(i, n);
    term["coefficient"] =
        complex_json(plan.u_corr(static_cast<Eigen::Index>(i)));
    terms.push_back(std::move(term));
  }
  json corrections;
  corrections["predicted_gain"] = plan.predicted_gain;
  corrections["placement"] =
      plan.placement == chi::CorrectionPlacement::kAfterGate ? "after"
                                                             : "before";
  corrections["terms"] = std::move(terms);

  json r;
  r["n_qubits"] = n;
  r["convention"] = err.convention == chi::ErrorConvention::ErrorAfter
                        ? "error_after"
                        : "error_before";
  r["process_fidelity"] = f;
  r["average_fidelity"] = chi::average_fidelity_from_process(f, n);
  r["unitary_error"] = split.unitary_error;
  r["decoherence_error"] = split.decoherence_error;
  r["low_fidelity_warning"] = split.low_fidelity_warning;
  r["peaks"] = std::move(peak_list);
  r["suggested_corrections"] = std::move(corrections);
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  Ctx ctx;
  std::string joined;
  for (int i = 0; i < argc; ++i) {
    if (i > 0) joined += ' ';
    joined += argv[i];
  }
  ctx.command_line = joined;

  CLI::App app{"process/error-matrix toolbox: closed-form chi tables, "
               "Lindblad solutions, composition, correction planning, SPAM "
               "handling and tomography pipelines with reproducible JSON/CSV "
               "artifacts"};
  app.set_version_flag("--version", CHI_VERSION);
  app.require_subcommand(1);

  double tol = -1.0;
  app.add_option("--tol", tol,
                 "override the global validation tolerance (default 1e-10)");
  bool seed_given = false;
  std::uint64_t seed_flag = 0;
  app.add_option("--seed", seed_flag, "RNG seed (default: CHI_SEED env or 0)")
      ->each([&seed_given](const std::string&) { seed_given = true; });
  app.add_option("--threads", ctx.threads,
                 "worker threads for sampling-heavy commands")
      ->check(CLI::PositiveNumber);

  // Subcommand callbacks fire inside app.parse(), so global knobs must be
  // applied at the top of each callback, not after parse() returns.
  const auto apply_globals = [&] {
    if (tol > 0.0) chi::validation_tolerance() = tol;
    ctx.seed = seed_given ? seed_flag : seed_from_env();
  };

  // from-unitary: chi table of a perfect unitary.
  auto* sub_from_u = app.add_subcommand(
      "from-unitary", "write the process matrix of a unitary gate");
  UnitarySource from_u_src;
  std::string from_u_out;
  add_unitary_options(sub_from_u, from_u_src, "--input", "the gate unitary");
  sub_from_u->add_option("-o,--out", from_u_out, "output file (default stdout)");
  sub_from_u->callback([&] {
    apply_globals();
    const chi::Matrix u = resolve_unitary(ctx, from_u_src, "the gate unitary");
    deliver(ctx, from_u_out, chi::process_json(chi::chi_from_unitary(u)));
  });

  // to-err: factor a desired unitary out of a channel.
  auto* sub_to_err = app.add_subcommand(
      "to-err", "convert a process matrix to an error matrix");
  std::string to_err_chi, to_err_out, to_err_conv = "after";
  UnitarySource to_err_src;
  sub_to_err->add_option("--chi", to_err_chi, "process matrix JSON file")
      ->required();
  add_unitary_options(sub_to_err, to_err_src, "--desired",
                      "the desired unitary");
  sub_to_err->add_option("--convention", to_err_conv, "after|before")
      ->check(CLI::IsMember({"after", "before"}));
  sub_to_err->add_option("-o,--out", to_err_out, "output file (default stdout)");
  sub_to_err->callback([&] {
    apply_globals();
    const chi::ProcessMatrix chan =
        chi::parse_process_json(load_input(ctx, to_err_chi));
    const chi::Matrix u = resolve_unitary(ctx, to_err_src, "the desired unitary");
    deliver(ctx, to_err_out,
            chi::error_json(chi::to_error_matrix(
                chan, u, convention_from_name(to_err_conv))));
  });

  // to-chi: recover the raw channel from an error matrix.
  auto* sub_to_chi = app.add_subcommand(
      "to-chi", "convert an error matrix back to the raw process matrix");
  std::string to_chi_err, to_chi_out;
  sub_to_chi->add_option("--err", to_chi_err, "error matrix JSON file")
      ->required();
  sub_to_chi->add_option("-o,--out", to_chi_out, "output file (default stdout)");
  sub_to_chi->callback([&] {
    apply_globals();
    const chi::ErrorMatrix err =
        chi::parse_error_json(load_input(ctx, to_chi_err));
    deliver(ctx, to_chi_out, chi::process_json(chi::from_error_matrix(err)));
  });

  // convert-err: toggle the factorization convention.
  auto* sub_conv = app.add_subcommand(
      "convert-err", "toggle an error matrix between after/before conventions");
  std::string conv_err, conv_out;
  sub_conv->add_option("--err", conv_err, "error matrix JSON file")->required();
  sub_conv->add_option("-o,--out", conv_out, "output file (default stdout)");
  sub_conv->callback([&] {
    apply_globals();
    const chi::ErrorMatrix err =
        chi::parse_error_json(load_input(ctx, conv_err));
    deliver(ctx, conv_out, chi::error_json(chi::convert_convention(err)));
  });

  // compose: fold a gate sequence file into one gate.
  auto* sub_compose = app.add_subcommand(
      "compose", "compose an ordered gate sequence into a single error matrix");
  std::string compose_seq, compose_out, compose_mode = "exact";
  sub_compose->add_option("sequence", compose_seq,
                          "gate sequence JSON file (ordered array)")
      ->required();
  sub_compose
      ->add_option("--mode", compose_mode, "exact|first-order|additive")
      ->check(CLI::IsMember({"exact", "first-order", "additive"}));
  sub_compose->add_option("-o,--out", compose_out,
                          "output file (default stdout)");
  sub_compose->callback([&] {
    apply_globals();
    const std::vector<chi::GateWithError> gates =
        chi::parse_gate_sequence_json(load_input(ctx, compose_seq));
    const chi::ComposeMode mode =
        compose_mode == "exact"
            ? chi::ComposeMode::kExact
            : (compose_mode == "first-order"
                   ? chi::ComposeMode::kFirstOrder
                   : chi::ComposeMode::kFirstOrderAdditive);
    chi::GateWithError folded = gates.front();
    for (std::size_t g = 1; g < gates.size(); ++g)
      folded = chi::compose_gates(folded, gates[g], mode);
    deliver(ctx, compose_out, chi::error_json(folded.error));
  });

  // correct: plan a small unitary correction.
  auto* sub_correct = app.add_subcommand(
      "correct", "suggest unitary corrections for a measured error matrix");
  std::string correct_err, correct_set, correct_out;
  bool correct_cz = false, correct_fixed_cz = false;
  sub_correct->add_option("--err", correct_err, "error matrix JSON file")
      ->required();
  sub_correct->add_option(
      "--set", correct_set,
      "comma-separated Pauli labels of the correctable axes, e.g. IZ,ZI,ZZ");
  sub_correct->add_flag("--cz", correct_cz,
                        "use the CZ-style three-phase correction instead");
  sub_correct->add_flag("--fixed-cz", correct_fixed_cz,
                        "with --cz: keep the CZ angle fixed (phi_cz = 0)");
  bool correct_iterate = false;
  int correct_max_iters = 50;
  double correct_iter_tol = 1e-12;
  sub_correct->add_flag(
      "--iterate", correct_iterate,
      "refine the plan by exact fixed-point iteration (with --set)");
  sub_correct->add_option("--max-iters", correct_max_iters,
                          "iteration cap for --iterate");
  sub_correct->add_option("--iter-tol", correct_iter_tol,
                          "residual target for --iterate");
  sub_correct->add_option("-o,--out", correct_out,
                          "also write the plan JSON to this file");
  sub_correct->callback([&] {
    apply_globals();
    const chi::ErrorMatrix err =
        chi::parse_error_json(load_input(ctx, correct_err));
    json plan_doc;
    if (correct_cz) {
      const chi::CzPhaseCorrection c =
          chi::cz_corrections(err, !correct_fixed_cz);
      plan_doc["type"] = "cz_phases";
      plan_doc["cz_angle_included"] = !correct_fixed_cz;
      plan_doc["phi1"] = c.phi1;
      plan_doc["phi2"] = c.phi2;
      plan_doc["phi_cz"] = c.phi_cz;
      plan_doc["predicted_gain"] = c.predicted_gain;
      plan_doc["large_angle_warning"] = c.large_angle_warning;
    } else {
      if (correct_set.empty())
        throw CLI::RequiredError("--set (or --cz)");
      const std::vector<std::size_t> set = parse_pauli_set(correct_set);
      const chi::CorrectionPlan plan =
          correct_iterate
              ? chi::iterate_correction(chi::from_error_matrix(err),
                                        err.reference_unitary, set,
                                        correct_max_iters, correct_iter_tol)
              : chi::suggest_correction(err, set);
      plan_doc["type"] = "pauli_plan";
      json labels = json::array();
      json coeffs = json::object();
      for (const std::size_t idx : set) {
        const std::string label = chi::pauli_label(idx, err.chi.n_qubits);
        labels.push_back(label);
        coeffs[label] =
            complex_json(plan.u_corr(static_cast<Eigen::Index>(idx)));
      }
      plan_doc["correctable_set"] = std::move(labels);
      plan_doc["u_corr"] = std::move(coeffs);
      plan_doc["placement"] =
          plan.placement == chi::CorrectionPlacement::kAfterGate ? "after"
                                                                 : "before";
      plan_doc["predicted_gain"] = plan.predicted_gain;
    }
    deliver(ctx, correct_out, plan_doc.dump(2) + "\n", /*echo_stdout=*/true);
  });

  // lindblad: solve a schedule three ways.
  auto* sub_lindblad = app.add_subcommand(
      "lindblad", "solve a gate schedule (exact, first order, or trajectories)");
  std::string lind_schedule, lind_out, lind_mode = "exact",
              lind_conv = "after";
  std::size_t lind_ntraj = 10000;
  bool lind_raw = false;
  sub_lindblad->add_option("--schedule", lind_schedule, "schedule JSON file")
      ->required();
  sub_lindblad
      ->add_option("--mode", lind_mode, "exact|first-order|trajectories")
      ->check(CLI::IsMember({"exact", "first-order", "trajectories"}));
  sub_lindblad->add_option("--convention", lind_conv, "after|before")
      ->check(CLI::IsMember({"after", "before"}));
  sub_lindblad->add_option("--ntraj", lind_ntraj,
                           "trajectory count for --mode trajectories");
  sub_lindblad->add_flag(
      "--raw", lind_raw,
      "emit the bare channel chi instead of an error matrix (trajectory "
      "estimates are noisy; error output may need a relaxed --tol)");
  sub_lindblad->add_option("-o,--out", lind_out, "output file (default stdout)");
  sub_lindblad->callback([&] {
    apply_globals();
    const chi::GateSchedule schedule =
        chi::parse_schedule_json(load_input(ctx, lind_schedule));
    chi::validate_schedule(schedule);
    const chi::ErrorConvention conv = convention_from_name(lind_conv);
    std::string text;
    if (lind_mode == "first-order") {
      const chi::ErrorMatrix err = chi::first_order_error(schedule, conv);
      text = lind_raw ? chi::process_json(chi::from_error_matrix(err))
                      : chi::error_json(err);
    } else {
      const chi::ProcessMatrix chan =
          lind_mode == "exact"
              ? chi::exact_channel_chi(schedule)
              : chi::trajectory_channel_estimate(schedule, lind_ntraj,
                                                 ctx.seed, ctx.threads);
      if (lind_raw) {
        text = chi::process_json(chan);
      } else {
        const chi::Matrix u_ref =
            chi::schedule_unitary(chi::normalize_channels(schedule));
        text = chi::error_json(chi::to_error_matrix(chan, u_ref, conv));
      }
    }
    deliver(ctx, lind_out, text);
  });

  // spam: identification, subtraction, forward model.
  auto* sub_spam = app.add_subcommand("spam", "SPAM model operations");
  sub_spam->require_subcommand(1);

  auto* spam_identify = sub_spam->add_subcommand(
      "identify", "fit a SPAM model to calibration data");
  std::string spam_id_cal, spam_id_out;
  std::size_t spam_id_subset = 0;
  bool spam_id_subset_seed_given = false;
  std::uint64_t spam_id_subset_seed = 0;
  spam_identify->add_option("--cal", spam_id_cal, "calibration set JSON file")
      ->required();
  spam_identify->add_option("--subset-size", spam_id_subset,
                            "identify from a random gate subset of this size");
  spam_identify
      ->add_option("--subset-seed", spam_id_subset_seed,
                   "seed for the subset draw (default: global --seed)")
      ->each([&spam_id_subset_seed_given](const std::string&) {
        spam_id_subset_seed_given = true;
      });
  spam_identify->add_option("-o,--out", spam_id_out,
                            "output file (default stdout)");
  spam_identify->callback([&] {
    apply_globals();
    const chi::CalibrationSet cal =
        chi::parse_calibration_json(load_input(ctx, spam_id_cal));
    double residual = 0.0;
    const chi::SpamModel model =
        spam_id_subset > 0
            ? chi::identify_spam_subset(
                  cal,
                  spam_id_subset_seed_given ? spam_id_subset_seed : ctx.seed,
                  spam_id_subset, &residual)
            : chi::identify_spam(cal, &residual);
    deliver(ctx, spam_id_out, chi::spam_json(model));
    if (!spam_id_out.empty()) {
      const chi::SpamValidity validity = chi::spam_validity(model);
      json summary;
      summary["residual"] = residual;
      summary["prep_min_eigenvalue"] = validity.prep_min_eigenvalue;
      summary["meas_min_eigenvalue"] = validity.meas_min_eigenvalue;
      summary["positive"] = validity.positive();
      std::cout << summary.dump(2) << "\n";
    }
  });

  auto* spam_synth = sub_spam->add_subcommand(
      "synthesize", "generate perfect-gate calibration data for a SPAM model");
  std::string spam_syn_spam, spam_syn_out, spam_syn_mode = "first-order";
  int spam_syn_qubits = 1;
  bool spam_syn_trivial = false;
  auto* spam_syn_spam_opt =
      spam_synth->add_option("--spam", spam_syn_spam, "SPAM model JSON file");
  spam_synth
      ->add_flag("--trivial", spam_syn_trivial,
                 "use the ideal (identity) SPAM model")
      ->excludes(spam_syn_spam_opt);
  spam_synth->add_option("--qubits", spam_syn_qubits, "qubit count")
      ->check(CLI::PositiveNumber);
  spam_synth->add_option("--mode", spam_syn_mode, "first-order|exact")
      ->check(CLI::IsMember({"first-order", "exact"}));
  spam_synth->add_option("-o,--out", spam_syn_out,
                         "output file (default stdout)");
  spam_synth->callback([&] {
    apply_globals();
    if (!spam_syn_trivial && spam_syn_spam.empty())
      throw CLI::RequiredError("--spam or --trivial");
    const chi::SpamModel spam =
        spam_syn_trivial
            ? chi::trivial_spam(spam_syn_qubits)
            : chi::parse_spam_json(load_input(ctx, spam_syn_spam));
    const chi::SpamForwardMode mode = spam_syn_mode == "exact"
                                          ? chi::SpamForwardMode::kExact
                                          : chi::SpamForwardMode::kFirstOrder;
    const int n = spam_syn_trivial ? spam_syn_qubits : spam.chi_prep.n_qubits;
    deliver(ctx, spam_syn_out,
            chi::calibration_json(chi::synthetic_calibration(spam, n, mode)));
  });

  auto* spam_subtract = sub_spam->add_subcommand(
      "subtract", "remove the SPAM contribution from a measured error matrix");
  std::string spam_sub_err, spam_sub_spam, spam_sub_out,
      spam_sub_mode = "full";
  spam_subtract->add_option("--err", spam_sub_err, "error matrix JSON file")
      ->required();
  spam_subtract->add_option("--spam", spam_sub_spam, "SPAM model JSON file")
      ->required();
  spam_subtract
      ->add_option("--mode", spam_sub_mode, "full|measurement|preparation")
      ->check(CLI::IsMember({"full", "measurement", "preparation"}));
  spam_subtract->add_option("-o,--out", spam_sub_out,
                            "output file (default stdout)");
  spam_subtract->callback([&] {
    apply_globals();
    const chi::ErrorMatrix err =
        chi::parse_error_json(load_input(ctx, spam_sub_err));
    const chi::SpamModel spam =
        chi::parse_spam_json(load_input(ctx, spam_sub_spam));
    const chi::SpamSubtraction mode =
        spam_sub_mode == "full"
            ? chi::SpamSubtraction::kFull
            : (spam_sub_mode == "measurement"
                   ? chi::SpamSubtraction::kMeasurementOnly
                   : chi::SpamSubtraction::kPreparationOnly);
    bool clamped = false;
    const chi::ErrorMatrix corrected =
        chi::subtract_spam(err, spam, mode, &clamped);
    if (clamped)
      std::cerr << json{{"warning",
                         "subtraction clamped slightly negative diagonal "
                         "entries to zero"}}
                       .dump()
                << "\n";
    deliver(ctx, spam_sub_out, chi::error_json(corrected));
  });

  auto* spam_forward = sub_spam->add_subcommand(
      "forward", "predict the measured error matrix under a SPAM model");
  std::string spam_fwd_err, spam_fwd_spam, spam_fwd_out,
      spam_fwd_mode = "first-order";
  spam_forward->add_option("--err", spam_fwd_err, "true gate error JSON file")
      ->required();
  spam_forward->add_option("--spam", spam_fwd_spam, "SPAM model JSON file")
      ->required();
  spam_forward->add_option("--mode", spam_fwd_mode, "first-order|exact")
      ->check(CLI::IsMember({"first-order", "exact"}));
  spam_forward->add_option("-o,--out", spam_fwd_out,
                           "output file (default stdout)");
  spam_forward->callback([&] {
    apply_globals();
    const chi::ErrorMatrix err =
        chi::parse_error_json(load_input(ctx, spam_fwd_err));
    const chi::SpamModel spam =
        chi::parse_spam_json(load_input(ctx, spam_fwd_spam));
    const chi::SpamForwardMode mode = spam_fwd_mode == "exact"
                                          ? chi::SpamForwardMode::kExact
                                          : chi::SpamForwardMode::kFirstOrder;
    deliver(ctx, spam_fwd_out,
            chi::error_json(chi::spam_forward(err, spam, mode)));
  });

  // tomo: dataset simulation, reconstruction, end-to-end experiment.
  auto* sub_tomo = app.add_subcommand("tomo", "process tomography pipelines");
  sub_tomo->require_subcommand(1);

  auto* tomo_sim = sub_tomo->add_subcommand(
      "simulate", "simulate a tomography dataset for a channel");
  std::string tsim_chi, tsim_schedule, tsim_spam, tsim_out;
  std::size_t tsim_shots = 0;
  auto* tsim_chi_opt =
      tomo_sim->add_option("--chi", tsim_chi, "channel process matrix JSON");
  tomo_sim->add_option("--schedule", tsim_schedule, "gate schedule JSON")
      ->excludes(tsim_chi_opt);
  tomo_sim->add_option("--spam", tsim_spam, "SPAM model JSON (default ideal)");
  tomo_sim->add_option("--shots", tsim_shots,
                       "shots per record (0 = exact probabilities)");
  tomo_sim->add_option("-o,--out", tsim_out, "output file (default stdout)");
  tomo_sim->callback([&] {
    apply_globals();
    chi::ProcessMatrix chan;
    if (!tsim_chi.empty()) {
      chan = chi::parse_process_json(load_input(ctx, tsim_chi));
    } else if (!tsim_schedule.empty()) {
      chan = chi::exact_channel_chi(
          chi::parse_schedule_json(load_input(ctx, tsim_schedule)));
    } else {
      throw CLI::RequiredError("--chi or --schedule");
    }
    const chi::SpamModel spam =
        tsim_spam.empty() ? chi::trivial_spam(chan.n_qubits)
                          : chi::parse_spam_json(load_input(ctx, tsim_spam));
    const chi::TomographySetup setup =
        chi::default_tomography_setup(chan.n_qubits, tsim_shots);
    const chi::TomographyDataset data =
        chi::simulate_dataset(chan, spam, setup, ctx.seed, ctx.threads);
    deliver(ctx, tsim_out, chi::dataset_json(data, setup));
  });

  auto* tomo_rec = sub_tomo->add_subcommand(
      "reconstruct", "reconstruct chi from a tomography dataset");
  std::string trec_data, trec_out, trec_mode = "linear";
  tomo_rec->add_option("--data", trec_data, "dataset JSON file")->required();
  tomo_rec->add_option("--mode", trec_mode, "linear|projected")
      ->check(CLI::IsMember({"linear", "projected"}));
  tomo_rec->add_option("-o,--out", trec_out, "output file (default stdout)");
  tomo_rec->callback([&] {
    apply_globals();
    const chi::StoredDataset stored =
        chi::parse_dataset_json(load_input(ctx, trec_data));
    const chi::ReconstructionMode mode =
        trec_mode == "projected" ? chi::ReconstructionMode::kProjected
                                 : chi::ReconstructionMode::kLinearInversion;
    deliver(ctx, trec_out,
            chi::process_json(
                chi::reconstruct_chi(stored.dataset, stored.setup, mode)));
  });

  auto* tomo_run = sub_tomo->add_subcommand(
      "run", "simulate + reconstruct + extract an error matrix");
  std::string trun_chi, trun_schedule, trun_spam, trun_out;
  UnitarySource trun_u, trun_desired;
  std::string trun_route = "chi", trun_conv = "after", trun_mode = "linear";
  std::size_t trun_shots = 0;
  auto* trun_chi_opt =
      tomo_run->add_option("--chi", trun_chi, "channel process matrix JSON");
  auto* trun_sched_opt =
      tomo_run->add_option("--schedule", trun_schedule, "gate schedule JSON")
          ->excludes(trun_chi_opt);
  add_unitary_options(tomo_run, trun_u, "--u", "a perfect gate channel");
  tomo_run->get_option("--gate")->excludes(trun_chi_opt)->excludes(
      trun_sched_opt);
  tomo_run->get_option("--u")->excludes(trun_chi_opt)->excludes(
      trun_sched_opt);
  std::string trun_desired_gate, trun_desired_file;
  double trun_desired_angle = 0.0;
  auto* trun_des_gate = tomo_run->add_option(
      "--desired-gate", trun_desired_gate, "desired unitary by gate name");
  tomo_run->add_option("--desired-angle", trun_desired_angle,
                       "angle for --desired-gate zrot/cphase");
  tomo_run
      ->add_option("--desired", trun_desired_file,
                   "desired unitary matrix JSON file")
      ->excludes(trun_des_gate);
  tomo_run->add_option("--spam", trun_spam, "SPAM model JSON (default ideal)");
  tomo_run->add_option("--shots", trun_shots,
                       "shots per record (0 = exact probabilities)");
  tomo_run->add_option("--route", trun_route, "chi|rho extraction route")
      ->check(CLI::IsMember({"chi", "rho"}));
  tomo_run->add_option("--convention", trun_conv, "after|before")
      ->check(CLI::IsMember({"after", "before"}));
  tomo_run->add_option("--mode", trun_mode, "linear|projected reconstruction")
      ->check(CLI::IsMember({"linear", "projected"}));
  tomo_run->add_option("-o,--out", trun_out, "output file (default stdout)");
  tomo_run->callback([&] {
    apply_globals();
    trun_desired.gate = trun_desired_gate;
    trun_desired.angle = trun_desired_angle;
    trun_desired.file = trun_desired_file;

    chi::ProcessMatrix chan;
    chi::Matrix desired;
    if (!trun_chi.empty()) {
      chan = chi::parse_process_json(load_input(ctx, trun_chi));
      if (!trun_desired.given())
        throw CLI::RequiredError("--desired or --desired-gate (with --chi)");
      desired = resolve_unitary(ctx, trun_desired, "the desired unitary");
    } else if (!trun_schedule.empty()) {
      const chi::GateSchedule schedule =
          chi::parse_schedule_json(load_input(ctx, trun_schedule));
      chan = chi::exact_channel_chi(schedule);
      desired = trun_desired.given()
                    ? resolve_unitary(ctx, trun_desired, "the desired unitary")
                    : chi::schedule_unitary(chi::normalize_channels(schedule));
    } else if (trun_u.given()) {
      desired = resolve_unitary(ctx, trun_u, "the gate unitary");
      chan = chi::chi_from_unitary(desired);
      if (trun_desired.given())
        desired = resolve_unitary(ctx, trun_desired, "the desired unitary");
    } else {
      throw CLI::RequiredError("--chi, --schedule, --gate or --u");
    }
    const chi::SpamModel spam =
        trun_spam.empty() ? chi::trivial_spam(chan.n_qubits)
                          : chi::parse_spam_json(load_input(ctx, trun_spam));
    const chi::TomographySetup setup =
        chi::default_tomography_setup(chan.n_qubits, trun_shots);
    const chi::ErrorMatrix err = chi::run_qpt_experiment(
        chan, desired, spam, setup, trun_shots, ctx.seed,
        trun_route == "rho" ? chi::ExtractionRoute::kTransformRho
                            : chi::ExtractionRoute::kTransformChi,
        convention_from_name(trun_conv),
        trun_mode == "projected" ? chi::ReconstructionMode::kProjected
                                 : chi::ReconstructionMode::kLinearInversion);
    deliver(ctx, trun_out, chi::error_json(err));
  });

  // report: human-oriented summary of an error matrix.
  auto* sub_report = app.add_subcommand(
      "report", "summarize an error matrix (fidelity, split, peaks, plans)");
  std::string report_err, report_out;
  sub_report->add_option("--err", report_err, "error matrix JSON file")
      ->required();
  sub_report->add_option("-o,--out", report_out,
                         "also write the report JSON to this file");
  sub_report->callback([&] {
    apply_globals();
    const chi::ErrorMatrix err =
        chi::parse_error_json(load_input(ctx, report_err));
    deliver(ctx, report_out, report_json(err).dump(2) + "\n",
            /*echo_stdout=*/true);
  });

  // export-csv: plot data for bar charts.
  auto* sub_csv = app.add_subcommand(
      "export-csv", "emit per-entry CSV plot data for a chi or error matrix");
  std::string csv_in, csv_out;
  sub_csv->add_option("--input", csv_in,
                      "process or error matrix JSON file")
      ->required();
  sub_csv->add_option("-o,--out", csv_out, "output file (default stdout)");
  sub_csv->callback([&] {
    apply_globals();
    const std::string text = load_input(ctx, csv_in);
    const json doc = json::parse(text, nullptr, false);
    if (doc.is_discarded())
      throw chi::ValidationError("malformed JSON document");
    const std::string csv =
        doc.contains("reference_unitary")
            ? chi::plot_data_csv(chi::parse_error_json(text))
            : chi::plot_data_csv(chi::parse_process_json(text));
    deliver(ctx, csv_out, csv);
  });

  // Let --seed/--tol/--threads appear after the subcommand name too.
  const std::function<void(CLI::App*)> enable_fallthrough =
      [&enable_fallthrough](CLI::App* cmd) {
        for (CLI::App* sub :
             cmd->get_subcommands([](const CLI::App*) { return true; })) {
          sub->fallthrough();
          enable_fallthrough(sub);
        }
      };
  enable_fallthrough(&app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help() << std::flush;
    return 64;
  } catch (const chi::ValidationError& e) {
    std::cerr << json{{"error", "validation"}, {"message", e.what()}}.dump()
              << "\n";
    return 1;
  } catch (const chi::NumericalError& e) {
    std::cerr << json{{"error", "numerical"}, {"message", e.what()}}.dump()
              << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", "internal"}, {"message", e.what()}}.dump()
              << "\n";
    return 70;
  }
  return 0;
}
