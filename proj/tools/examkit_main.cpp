#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include <openssl/evp.h>

#include "examkit/analysis.hpp"
#include "examkit/diagnostics.hpp"
#include "examkit/errors.hpp"
#include "examkit/ingest.hpp"
#include "examkit/itemgen/pipeline.hpp"
#include "examkit/report.hpp"
#include "examkit/sampler.hpp"
#include "examkit/simulator.hpp"
#include "examkit/storage.hpp"

namespace {

using examkit::Error;
using examkit::ErrorCode;
using nlohmann::json;
namespace fs = std::filesystem;
namespace itemgen = examkit::itemgen;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::Parse:
    case ErrorCode::DataIntegrity:
    case ErrorCode::EmptyDataset:
      return 2;
    case ErrorCode::SamplerInit:
      return 3;
    case ErrorCode::Backend:
      return 4;
    case ErrorCode::GenerationFailure:
    case ErrorCode::JudgingFailure:
    case ErrorCode::LoopExhaustion:
    case ErrorCode::AssemblyFailure:
      return 5;
    case ErrorCode::Io:
      return 6;
    case ErrorCode::Internal:
      return 1;
  }
  return 1;
}

std::string sha256_file(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  examkit::require(bool(is), ErrorCode::Io, "cannot open " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(
      EVP_MD_CTX_new(), EVP_MD_CTX_free);
  examkit::require(ctx && EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr),
                   ErrorCode::Internal, "digest init failed");
  char buf[1 << 16];
  while (is.read(buf, sizeof buf) || is.gcount() > 0) {
    EVP_DigestUpdate(ctx.get(), buf, static_cast<std::size_t>(is.gcount()));
    if (!is) break;
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

// Reproducibility record: configuration plus digests of every file read
// and written. No timestamps, so identical runs give identical manifests.
struct Manifest {
  std::string command;
  json config = json::object();
  json inputs = json::object();
  json outputs = json::object();

  void add_input(const fs::path& p) { inputs[p.string()] = sha256_file(p); }
  void add_output(const fs::path& p) { outputs[p.string()] = sha256_file(p); }

  void write(const fs::path& out_dir) const {
    json j;
    j["command"] = command;
    j["config"] = config;
    j["inputs"] = inputs;
    j["outputs"] = outputs;
    std::ofstream os(out_dir / "manifest.json");
    examkit::require(bool(os), ErrorCode::Io,
                     "cannot open " + (out_dir / "manifest.json").string());
    os << j.dump(2) << '\n';
    os.flush();
    examkit::require(bool(os), ErrorCode::Io, "manifest write failed");
  }
};

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  examkit::require(!ec, ErrorCode::Io, "cannot create " + dir.string());
}

std::string read_text_file(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  examkit::require(bool(is), ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

json load_json_file(const fs::path& path) {
  std::ifstream is(path);
  examkit::require(bool(is), ErrorCode::Io, "cannot open " + path.string());
  try {
    json j;
    is >> j;
    return j;
  } catch (const json::exception& e) {
    examkit::throw_error(ErrorCode::Parse,
                         "bad JSON in " + path.string() + ": " + e.what());
  }
}

std::vector<itemgen::Question> load_question_list(const fs::path& path) {
  json j = load_json_file(path);
  examkit::require(j.is_array(), ErrorCode::Parse,
                   path.string() + " must hold a JSON array of questions");
  std::vector<itemgen::Question> out;
  for (const auto& e : j) out.push_back(itemgen::question_from_json(e));
  return out;
}

examkit::ResponseMatrix load_matrix(const fs::path& responses,
                                    const examkit::IngestPolicy& policy,
                                    examkit::AttemptFile* file_out = nullptr,
                                    examkit::BuildReport* report_out = nullptr) {
  auto file = examkit::read_attempts_csv(responses);
  auto records = examkit::superscore(file.attempts);
  auto built = examkit::build_matrix(records, policy);
  if (file_out) *file_out = std::move(file);
  if (report_out) *report_out = built.report;
  return std::move(built.matrix);
}

// ---- subcommand state ----

struct SimulateArgs {
  int students = 200;
  int pretest = 10;
  int classes = 4;
  int items_per_class = 10;
  std::uint64_t seed = 1;
  std::string out;
};

struct IngestArgs {
  std::string responses;
  std::string out;
  bool absent_is_incorrect = false;
  bool keep_all = false;
};

struct FitArgs {
  std::string responses;
  std::string out;
  int chains = 4;
  int warmup = 1000;
  int samples = 1000;
  std::uint64_t seed = 1;
  double target_accept = 0.8;
  int max_leapfrog = 1024;
  std::string algorithm = "nuts";
  std::string parameterization = "noncentered";
  bool absent_is_incorrect = false;
};

struct DiagnoseArgs {
  std::string draws;
  double fail_rhat = 0.0;
  double fail_ess = 0.0;
};

struct ReportArgs {
  std::string draws;
  std::string responses;
  std::string out;
  double grid_lo = -4.0, grid_hi = 4.0, grid_step = 0.05;
  double ci = 0.95;
  std::uint64_t ppc_seed = 0;
  int ppc_max_draws = 0;
  bool full_posterior_curves = false;
  bool absent_is_incorrect = false;
};

struct GenerateArgs {
  std::string courses;
  std::string calibration;
  std::string backend = "mock";
  std::string replay_cache;
  std::string record;
  std::string base_url;
  std::string model;
  std::string token_env = "EXAMKIT_API_TOKEN";
  std::string templates_dir;
  std::string out;
  int target_good = 20;
  int exam_size = 10;
  int max_iterations = 200;
};

struct SelectArgs {
  std::string bank;
  std::string concepts;
  std::string course_name;
  int n = 10;
  std::string out;
};

examkit::PosteriorDraws load_draws_any(const fs::path& path) {
  if (fs::is_directory(path)) return examkit::load_draws_csv(path);
  return examkit::load_draws_binary(path);
}

int run_simulate(const SimulateArgs& a) {
  ensure_dir(a.out);
  examkit::PriorDrawConfig cfg;
  cfg.n_pretest = a.pretest;
  cfg.n_classes = a.classes;
  cfg.items_per_class = a.items_per_class;
  cfg.n_students = a.students;
  cfg.seed = a.seed;
  auto spec = examkit::draw_spec_from_priors(cfg);
  auto sim = examkit::simulate_responses(spec);

  fs::path responses = fs::path(a.out) / "responses.csv";
  examkit::write_attempts_csv(responses, sim.attempts);

  fs::path items_path = fs::path(a.out) / "truth_items.csv";
  {
    std::ofstream os(items_path);
    examkit::require(bool(os), ErrorCode::Io,
                     "cannot open " + items_path.string());
    os << "item_id,alpha,beta,exam_kind,class_id\n";
    for (std::size_t j = 0; j < spec.items.size(); ++j)
      os << spec.items[j].item_id << ','
         << examkit::format_double(spec.items[j].alpha) << ','
         << examkit::format_double(spec.items[j].beta) << ','
         << to_string(spec.items[j].kind) << ',' << spec.items[j].class_id
         << '\n';
  }
  fs::path students_path = fs::path(a.out) / "truth_students.csv";
  {
    std::ofstream os(students_path);
    examkit::require(bool(os), ErrorCode::Io,
                     "cannot open " + students_path.string());
    os << "student_id,theta,class_id\n";
    char sid[16];
    for (int i = 0; i < a.students; ++i) {
      std::snprintf(sid, sizeof sid, "s%05d", i + 1);
      os << sid << ',' << examkit::format_double(sim.truth.theta[i]) << ','
         << sim.student_class[i] << '\n';
    }
  }

  Manifest m;
  m.command = "simulate";
  m.config = {{"students", a.students},   {"pretest", a.pretest},
              {"classes", a.classes},     {"items_per_class", a.items_per_class},
              {"seed", a.seed}};
  m.add_output(responses);
  m.add_output(items_path);
  m.add_output(students_path);
  m.write(a.out);

  std::cout << "simulated " << sim.attempts.size() << " responses from "
            << a.students << " students x " << spec.items.size()
            << " items -> " << responses.string() << "\n";
  return 0;
}

int run_ingest(const IngestArgs& a) {
  ensure_dir(a.out);
  examkit::IngestPolicy policy;
  policy.absent_is_incorrect = a.absent_is_incorrect;
  policy.require_pretest_and_exam = !a.keep_all;

  examkit::AttemptFile file;
  examkit::BuildReport report;
  auto matrix = load_matrix(a.responses, policy, &file, &report);

  fs::path report_path = fs::path(a.out) / "validation_report.txt";
  examkit::write_validation_report(report_path, file, report);

  Manifest m;
  m.command = "ingest";
  m.config = {{"absent_is_incorrect", a.absent_is_incorrect},
              {"keep_all", a.keep_all}};
  m.add_input(a.responses);
  m.add_output(report_path);
  m.write(a.out);

  std::cout << "accepted " << file.attempts.size() << " of " << file.total_rows
            << " rows; kept " << report.students_kept << " of "
            << report.students_in << " students; matrix "
            << matrix.n_students() << " x " << matrix.n_items() << "\n";
  for (const auto& [reason, n] : report.dropped_by_reason)
    std::cout << "  dropped " << n << " students: " << reason << "\n";
  return 0;
}

int run_fit(const FitArgs& a) {
  ensure_dir(a.out);
  examkit::IngestPolicy policy;
  policy.absent_is_incorrect = a.absent_is_incorrect;
  auto matrix = load_matrix(a.responses, policy);

  examkit::SamplerConfig cfg;
  cfg.n_chains = a.chains;
  cfg.n_warmup = a.warmup;
  cfg.n_samples = a.samples;
  cfg.seed = a.seed;
  cfg.target_accept = a.target_accept;
  cfg.max_leapfrog_steps = a.max_leapfrog;
  if (a.algorithm == "nuts")
    cfg.algorithm = examkit::SamplerConfig::Algorithm::Nuts;
  else if (a.algorithm == "rw")
    cfg.algorithm = examkit::SamplerConfig::Algorithm::RandomWalk;
  else
    examkit::throw_error(ErrorCode::InvalidArgument,
                         "unknown algorithm '" + a.algorithm + "'");
  if (a.parameterization == "noncentered")
    cfg.parameterization = examkit::SamplerConfig::Parameterization::NonCentered;
  else if (a.parameterization == "centered")
    cfg.parameterization = examkit::SamplerConfig::Parameterization::Centered;
  else
    examkit::throw_error(ErrorCode::InvalidArgument,
                         "unknown parameterization '" + a.parameterization + "'");

  auto draws = examkit::sample(matrix, cfg);
  examkit::save_draws_csv(draws, a.out);
  fs::path bin_path = fs::path(a.out) / "draws.bin";
  examkit::save_draws_binary(draws, bin_path);

  Manifest m;
  m.command = "fit";
  m.config = {{"chains", a.chains},
              {"warmup", a.warmup},
              {"samples", a.samples},
              {"seed", a.seed},
              {"target_accept", a.target_accept},
              {"max_leapfrog", a.max_leapfrog},
              {"algorithm", a.algorithm},
              {"parameterization", a.parameterization},
              {"absent_is_incorrect", a.absent_is_incorrect}};
  m.add_input(a.responses);
  for (std::size_t c = 0; c < draws.n_chains(); ++c) {
    char name[32];
    std::snprintf(name, sizeof name, "chain_%02zu.csv", c + 1);
    m.add_output(fs::path(a.out) / name);
  }
  m.add_output(bin_path);
  m.write(a.out);

  for (std::size_t c = 0; c < draws.n_chains(); ++c) {
    const auto& s = draws.chain_stats[c];
    std::printf("chain %zu: accept %.3f, step %.4g, divergences %d\n", c + 1,
                s.mean_accept, s.step_size, s.divergences);
  }
  for (const auto& w : draws.warnings) std::cout << "warning: " << w << "\n";
  std::cout << "wrote " << draws.n_chains() << " chains x "
            << draws.n_iterations() << " draws to " << a.out << "\n";
  return 0;
}

int run_diagnose(const DiagnoseArgs& a) {
  auto draws = load_draws_any(a.draws);
  auto summary = examkit::diagnose(draws);
  std::printf("%-24s %12s %12s %8s %10s %10s\n", "parameter", "mean", "sd",
              "rhat", "ess_bulk", "ess_tail");
  for (const auto& p : summary.parameters)
    std::printf("%-24s %12.5g %12.5g %8.4f %10.1f %10.1f%s\n", p.name.c_str(),
                p.mean, p.sd, p.rhat, p.ess_bulk, p.ess_tail,
                p.degenerate ? " (constant)" : "");
  std::printf("max rhat %.4f, min ess_bulk %.1f, min ess_tail %.1f, "
              "divergences %d\n",
              summary.max_rhat, summary.min_ess_bulk, summary.min_ess_tail,
              summary.total_divergences);
  for (const auto& w : summary.warnings) std::cout << "warning: " << w << "\n";
  if (a.fail_rhat > 0.0 && summary.max_rhat > a.fail_rhat) {
    std::cerr << "error: max rhat " << summary.max_rhat << " exceeds "
              << a.fail_rhat << "\n";
    return 3;
  }
  if (a.fail_ess > 0.0 && summary.min_ess_bulk < a.fail_ess) {
    std::cerr << "error: min ess " << summary.min_ess_bulk << " below "
              << a.fail_ess << "\n";
    return 3;
  }
  return 0;
}

int run_report(const ReportArgs& a) {
  ensure_dir(a.out);
  auto draws = load_draws_any(a.draws);
  examkit::IngestPolicy policy;
  policy.absent_is_incorrect = a.absent_is_incorrect;
  auto matrix = load_matrix(a.responses, policy);

  examkit::ReportOptions options;
  options.grid = {a.grid_lo, a.grid_hi, a.grid_step};
  options.ci_level = a.ci;
  options.ppc_seed = a.ppc_seed;
  options.ppc_max_draws = a.ppc_max_draws;
  options.full_posterior_curves = a.full_posterior_curves;
  examkit::write_report(draws, matrix, options, a.out);

  Manifest m;
  m.command = "report";
  m.config = {{"grid_lo", a.grid_lo},
              {"grid_hi", a.grid_hi},
              {"grid_step", a.grid_step},
              {"ci", a.ci},
              {"ppc_seed", a.ppc_seed},
              {"ppc_max_draws", a.ppc_max_draws},
              {"full_posterior_curves", a.full_posterior_curves},
              {"absent_is_incorrect", a.absent_is_incorrect}};
  m.add_input(a.responses);
  if (!fs::is_directory(a.draws)) m.add_input(a.draws);
  for (const char* name :
       {"item_summary.csv", "contrasts.csv", "discrimination_bins.csv",
        "ppc_summary.csv", "ppc_replicates.csv", "information_curves.csv",
        "information_peaks.csv", "report.txt"})
    m.add_output(fs::path(a.out) / name);
  m.write(a.out);

  std::cout << read_text_file(fs::path(a.out) / "report.txt");
  return 0;
}

std::string sanitize_name(const std::string& name) {
  std::string out;
  for (char c : name)
    out.push_back(std::isalnum(static_cast<unsigned char>(c))
                      ? static_cast<char>(std::tolower(c))
                      : '_');
  return out;
}

int run_generate(const GenerateArgs& a) {
  ensure_dir(a.out);
  json courses = load_json_file(a.courses);
  examkit::require(courses.is_array() && !courses.empty(), ErrorCode::Parse,
                   "course manifest must be a non-empty array");

  itemgen::PipelineConfig cfg;
  cfg.target_good = a.target_good;
  cfg.exam_size = a.exam_size;
  cfg.max_iterations = a.max_iterations;
  cfg.calibration = load_question_list(a.calibration);
  if (!a.templates_dir.empty())
    cfg.templates = itemgen::PromptTemplates::load_dir(a.templates_dir);

  Manifest m;
  m.command = "generate-exam";
  m.config = {{"backend", a.backend},
              {"target_good", a.target_good},
              {"exam_size", a.exam_size},
              {"max_iterations", a.max_iterations},
              {"model", a.model}};
  m.add_input(a.courses);
  m.add_input(a.calibration);

  fs::path manifest_dir = fs::path(a.courses).parent_path();
  for (const auto& entry : courses) {
    itemgen::CourseContext ctx;
    ctx.course_name = entry.value("name", "");
    auto read_member = [&](const char* key) {
      if (!entry.contains(key) || entry[key].get<std::string>().empty())
        return std::string();
      fs::path p = entry[key].get<std::string>();
      if (p.is_relative()) p = manifest_dir / p;
      m.add_input(p);
      return read_text_file(p);
    };
    ctx.description = read_member("description");
    ctx.syllabus_content = read_member("syllabus");
    ctx.exam_content = read_member("exam_content");
    ctx.validate();

    std::unique_ptr<itemgen::LlmBackend> backend;
    if (a.backend == "mock") {
      backend = std::make_unique<itemgen::MockBackend>(itemgen::MockBackend::Script{});
    } else if (a.backend == "replay") {
      examkit::require(!a.replay_cache.empty(), ErrorCode::InvalidArgument,
                       "--replay-cache is required with --backend replay");
      backend = std::make_unique<itemgen::ReplayBackend>(a.replay_cache);
    } else if (a.backend == "live") {
      itemgen::HttpBackendConfig http;
      examkit::require(!a.base_url.empty() && !a.model.empty(),
                       ErrorCode::InvalidArgument,
                       "--base-url and --model are required with --backend live");
      http.base_url = a.base_url;
      http.model = a.model;
      http.token_env = a.token_env;
      backend = std::make_unique<itemgen::HttpBackend>(http);
    } else {
      examkit::throw_error(ErrorCode::InvalidArgument,
                           "unknown backend '" + a.backend + "'");
    }
    if (!a.record.empty())
      backend = std::make_unique<itemgen::RecordingBackend>(std::move(backend),
                                                            a.record);

    auto exam = itemgen::assemble_exam(*backend, ctx, cfg);
    fs::path exam_path =
        fs::path(a.out) / ("exam_" + sanitize_name(ctx.course_name) + ".json");
    std::ofstream os(exam_path);
    examkit::require(bool(os), ErrorCode::Io,
                     "cannot open " + exam_path.string());
    os << itemgen::to_canonical_json(itemgen::exam_to_json(exam));
    os.flush();
    examkit::require(bool(os), ErrorCode::Io, "exam write failed");
    m.add_output(exam_path);
    std::cout << "course '" << ctx.course_name << "': exam with "
              << exam.questions.size() << " questions -> "
              << exam_path.string() << "\n";
  }
  if (!a.record.empty()) m.add_output(a.record);
  m.write(a.out);
  return 0;
}

int run_select(const SelectArgs& a) {
  ensure_dir(a.out);
  auto bank = load_question_list(a.bank);
  std::vector<std::string> concepts;
  {
    std::ifstream is(a.concepts);
    examkit::require(bool(is), ErrorCode::Io, "cannot open " + a.concepts);
    std::string line;
    while (std::getline(is, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) concepts.push_back(line);
    }
  }
  auto exam = itemgen::select_benchmark(bank, concepts, a.course_name, a.n);
  fs::path exam_path = fs::path(a.out) / "benchmark_exam.json";
  std::ofstream os(exam_path);
  examkit::require(bool(os), ErrorCode::Io, "cannot open " + exam_path.string());
  os << itemgen::to_canonical_json(itemgen::exam_to_json(exam));
  os.flush();
  examkit::require(bool(os), ErrorCode::Io, "exam write failed");

  Manifest m;
  m.command = "select-benchmark";
  m.config = {{"course_name", a.course_name}, {"n", a.n}};
  m.add_input(a.bank);
  m.add_input(a.concepts);
  m.add_output(exam_path);
  m.write(a.out);

  std::cout << "selected " << exam.questions.size() << " questions -> "
            << exam_path.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical 2PL exam analysis and generation toolkit"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "Draw a synthetic response set");
  c_sim->add_option("--students", sim.students, "Number of students");
  c_sim->add_option("--pretest", sim.pretest, "Shared pre-test items");
  c_sim->add_option("--classes", sim.classes, "Number of classes");
  c_sim->add_option("--items-per-class", sim.items_per_class,
                    "Semester-end items per class");
  c_sim->add_option("--seed", sim.seed, "RNG seed");
  c_sim->add_option("--out", sim.out, "Output directory")->required();

  IngestArgs ing;
  auto* c_ing = app.add_subcommand("ingest", "Validate a response export");
  c_ing->add_option("--responses", ing.responses, "Input CSV")->required();
  c_ing->add_option("--out", ing.out, "Output directory")->required();
  c_ing->add_flag("--absent-is-incorrect", ing.absent_is_incorrect,
                  "Treat missing cohort cells as incorrect");
  c_ing->add_flag("--keep-all", ing.keep_all,
                  "Keep students lacking pre-test or semester-end rows");

  FitArgs fit;
  auto* c_fit = app.add_subcommand("fit", "Sample the posterior");
  c_fit->add_option("--responses", fit.responses, "Input CSV")->required();
  c_fit->add_option("--out", fit.out, "Output directory")->required();
  c_fit->add_option("--chains", fit.chains, "Chains");
  c_fit->add_option("--warmup", fit.warmup, "Warmup iterations");
  c_fit->add_option("--samples", fit.samples, "Retained iterations");
  c_fit->add_option("--seed", fit.seed, "RNG seed");
  c_fit->add_option("--target-accept", fit.target_accept, "Adaptation target");
  c_fit->add_option("--max-leapfrog", fit.max_leapfrog,
                    "Leapfrog budget per iteration");
  c_fit->add_option("--algorithm", fit.algorithm, "nuts or rw");
  c_fit->add_option("--parameterization", fit.parameterization,
                    "noncentered or centered");
  c_fit->add_flag("--absent-is-incorrect", fit.absent_is_incorrect,
                  "Treat missing cohort cells as incorrect");

  DiagnoseArgs diag;
  auto* c_diag = app.add_subcommand("diagnose", "Convergence diagnostics");
  c_diag->add_option("--draws", diag.draws, "draws.bin file or chain CSV dir")
      ->required();
  c_diag->add_option("--fail-rhat", diag.fail_rhat,
                     "Exit nonzero when max rhat exceeds this");
  c_diag->add_option("--fail-ess", diag.fail_ess,
                     "Exit nonzero when min bulk ESS falls below this");

  ReportArgs rep;
  auto* c_rep = app.add_subcommand("report", "Analysis artifacts from draws");
  c_rep->add_option("--draws", rep.draws, "draws.bin file or chain CSV dir")
      ->required();
  c_rep->add_option("--responses", rep.responses, "Input CSV")->required();
  c_rep->add_option("--out", rep.out, "Output directory")->required();
  c_rep->add_option("--grid-lo", rep.grid_lo, "Ability grid lower bound");
  c_rep->add_option("--grid-hi", rep.grid_hi, "Ability grid upper bound");
  c_rep->add_option("--grid-step", rep.grid_step, "Ability grid step");
  c_rep->add_option("--ci", rep.ci, "Credible interval mass");
  c_rep->add_option("--ppc-seed", rep.ppc_seed, "Replication RNG seed");
  c_rep->add_option("--ppc-max-draws", rep.ppc_max_draws,
                    "Cap on replication draws (0 = all)");
  c_rep->add_flag("--full-posterior-curves", rep.full_posterior_curves,
                  "Average information curves over draws");
  c_rep->add_flag("--absent-is-incorrect", rep.absent_is_incorrect,
                  "Treat missing cohort cells as incorrect");

  GenerateArgs gen;
  auto* c_gen = app.add_subcommand("generate-exam", "Run the generation loop");
  c_gen->add_option("--courses", gen.courses, "Course manifest JSON")
      ->required();
  c_gen->add_option("--calibration", gen.calibration,
                    "Calibration questions JSON (exactly 5)")
      ->required();
  c_gen->add_option("--backend", gen.backend, "mock, replay, or live");
  c_gen->add_option("--replay-cache", gen.replay_cache, "Replay cache JSON");
  c_gen->add_option("--record", gen.record, "Record exchanges to this file");
  c_gen->add_option("--base-url", gen.base_url, "Live backend base URL");
  c_gen->add_option("--model", gen.model, "Live backend model name");
  c_gen->add_option("--token-env", gen.token_env,
                    "Environment variable holding the API token");
  c_gen->add_option("--templates", gen.templates_dir,
                    "Prompt template directory override");
  c_gen->add_option("--out", gen.out, "Output directory")->required();
  c_gen->add_option("--target-good", gen.target_good, "Refine loop target");
  c_gen->add_option("--exam-size", gen.exam_size, "Questions per exam");
  c_gen->add_option("--max-iterations", gen.max_iterations,
                    "Generation budget");

  SelectArgs sel;
  auto* c_sel = app.add_subcommand("select-benchmark",
                                   "Pick benchmark questions from a bank");
  c_sel->add_option("--bank", sel.bank, "Assessed question bank JSON")
      ->required();
  c_sel->add_option("--concepts", sel.concepts,
                    "Course concepts, one per line")
      ->required();
  c_sel->add_option("--course-name", sel.course_name, "Course name")
      ->required();
  c_sel->add_option("--n", sel.n, "Questions to select");
  c_sel->add_option("--out", sel.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (c_sim->parsed()) return run_simulate(sim);
    if (c_ing->parsed()) return run_ingest(ing);
    if (c_fit->parsed()) return run_fit(fit);
    if (c_diag->parsed()) return run_diagnose(diag);
    if (c_rep->parsed()) return run_report(rep);
    if (c_gen->parsed()) return run_generate(gen);
    if (c_sel->parsed()) return run_select(sel);
  } catch (const Error& e) {
    std::cerr << "error (" << examkit::error_code_name(e.code())
              << "): " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
