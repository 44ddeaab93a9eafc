#include "vql/harness.hpp"

#include <omp.h>

#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <thread>

#include "vql/rng.hpp"

namespace vql::harness {

namespace fs = std::filesystem;

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string config_digest(const json& config) {
  json stripped = config;
  stripped.erase("threads");
  stripped.erase("output_dir");
  const std::string canonical = stripped.dump();
  const std::uint64_t h = fnv1a64(canonical);
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

int hardware_threads() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

json default_config(const std::string& experiment) {
  json cfg;
  cfg["experiment"] = experiment;
  cfg["base_seed"] = 0;
  cfg["n_runs"] = 1;
  cfg["threads"] = hardware_threads();
  cfg["output_dir"] = "";
  if (experiment == "teacher-student-qcnn") {
    cfg["teacher_student"] = {{"kind", "qcnn"},   {"n_qubits", 4},   {"dataset_size", 512},
                              {"batch_size", 128}, {"steps", 5000},   {"lr", 0.001},
                              {"log_every", 50},   {"teacher_layers", 4}, {"student_layers", 4},
                              {"early_stop_loss", 0.001}};
  } else if (experiment == "teacher-student-checkerboard") {
    cfg["teacher_student"] = {{"kind", "checkerboard"}, {"n_qubits", 8},  {"dataset_size", 512},
                              {"batch_size", 128},      {"steps", 5000},  {"lr", 0.001},
                              {"log_every", 50},        {"teacher_layers", 4}, {"student_layers", 4},
                              {"early_stop_loss", 0.001}};
  } else if (experiment == "vqe") {
    cfg["vqe"] = {{"n_qubits", 4}, {"target_rows", 4}, {"ansatz_rows", 4}, {"optimizer", "gd"},
                  {"steps", 30000}, {"lr", 0.01},       {"log_every", 10}};
  } else if (experiment == "vqe-layerwise") {
    cfg["vqe"] = {{"n_qubits", 11}, {"target_rows", 4}, {"ansatz_rows", 1}, {"optimizer", "adam"},
                  {"steps", 60000}, {"lr", 0.002},      {"log_every", 1},
                  {"layerwise", {{"steps_per_layer", 5000}, {"lr_decay", 0.95}, {"max_layers", 12}}}};
  } else if (experiment == "landscape-slice") {
    cfg["landscape"] = {{"n_qubits", 14},   {"dataset_size", 128}, {"grid_half_width", 1.0},
                        {"grid_points", 41}, {"center", "teacher"}};
  } else if (experiment == "whrf-minima") {
    cfg["whrf"] = {{"l", 10},       {"m", 50},     {"n_fields", 200}, {"starts_per_field", 5},
                   {"lr", 0.4},     {"max_iters", 100000}, {"tol", 1e-6},
                   {"bins", 60},    {"e_max", 1.5}};
  } else if (experiment == "whrf-density") {
    cfg["whrf_density"] = {{"m", 50.0}, {"l", 10}, {"points", 200}, {"verify", true}};
  } else if (experiment == "sq-certify") {
    cfg["sq"] = {{"class", "prop-c2"}, {"n", 3}, {"dist", "haar2"}, {"taus", {0.1, 0.25, 0.5, 1.0}}};
  } else if (experiment == "sq-adversary") {
    cfg["sq"] = {{"class", "prop-c2"}, {"n", 3}, {"dist", "haar2"}, {"tau", 0.5}, {"queries", 40}};
  } else if (experiment == "selftest") {
    // no block
  } else {
    throw std::domain_error("unknown experiment: " + experiment);
  }
  return cfg;
}

namespace {

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << content;
}

TeacherStudentConfig parse_ts(const json& block, TeacherStudentConfig::Kind kind) {
  TeacherStudentConfig cfg;
  cfg.kind = kind;
  cfg.n_qubits = block.at("n_qubits").get<int>();
  cfg.dataset_size = block.value("dataset_size", 512);
  cfg.batch_size = block.value("batch_size", 128);
  cfg.steps = block.value("steps", 5000);
  cfg.lr = block.value("lr", 0.001);
  cfg.log_every = block.value("log_every", 50);
  cfg.teacher_layers = block.value("teacher_layers", 4);
  cfg.student_layers = block.value("student_layers", 4);
  cfg.early_stop_loss = block.value("early_stop_loss", 0.001);
  return cfg;
}

VqeConfig parse_vqe(const json& block) {
  VqeConfig cfg;
  cfg.n_qubits = block.at("n_qubits").get<int>();
  cfg.target_rows = block.value("target_rows", 4);
  cfg.ansatz_rows = block.value("ansatz_rows", 4);
  cfg.optimizer = block.value("optimizer", "gd") == std::string("adam") ? VqeConfig::Optimizer::adam
                                                                        : VqeConfig::Optimizer::gd;
  cfg.steps = block.value("steps", 30000);
  cfg.lr = block.value("lr", 0.01);
  cfg.log_every = block.value("log_every", 10);
  if (block.contains("layerwise")) {
    const auto& lw = block.at("layerwise");
    cfg.layerwise = LayerwiseSettings{lw.value("steps_per_layer", 5000), lw.value("lr_decay", 0.95),
                                      lw.value("max_layers", 12)};
  }
  return cfg;
}

std::string run_id_for(std::size_t index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "r%04zu", index);
  return buf;
}

// Worker pool over run indices; records land in index order so emission does
// not depend on completion order or the pool size.
template <typename F>
std::vector<RunRecord> pooled_runs(int n_runs, int threads, F&& one_run) {
  std::vector<RunRecord> records(static_cast<std::size_t>(n_runs));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n_runs));
  const int pool = std::max(1, std::min(threads, n_runs));
  const int omp_per_worker = std::max(1, hardware_threads() / pool);
  std::atomic<int> next{0};
  std::vector<std::thread> workers;
  workers.reserve(static_cast<std::size_t>(pool));
  for (int w = 0; w < pool; ++w) {
    workers.emplace_back([&] {
      omp_set_num_threads(omp_per_worker);
      while (true) {
        const int i = next.fetch_add(1);
        if (i >= n_runs) break;
        try {
          records[static_cast<std::size_t>(i)] = one_run(i);
          records[static_cast<std::size_t>(i)].run_id = run_id_for(static_cast<std::size_t>(i));
        } catch (...) {
          errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return records;
}

std::string training_log_csv(const std::vector<RunRecord>& records) {
  std::string out = "run_id,step,loss,metric\n";
  for (const auto& rec : records)
    for (const auto& row : rec.log) {
      out += rec.run_id;
      out += ',';
      out += std::to_string(row.step);
      out += ',';
      out += format_double(row.loss);
      out += ',';
      out += format_double(row.metric);
      out += '\n';
    }
  return out;
}

std::string final_scatter_csv(const std::vector<RunRecord>& records, int n_qubits,
                              const std::vector<int>& layers) {
  std::string out = "run_id,n_qubits,layers,seed,final_loss,final_metric\n";
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& rec = records[i];
    out += rec.run_id;
    out += ',';
    out += std::to_string(n_qubits);
    out += ',';
    out += std::to_string(layers[i]);
    out += ',';
    out += std::to_string(rec.seed);
    out += ',';
    out += format_double(rec.final.loss);
    out += ',';
    out += format_double(rec.final.metric);
    out += '\n';
  }
  return out;
}

json runs_manifest(const std::vector<RunRecord>& records) {
  json runs = json::array();
  for (const auto& rec : records)
    runs.push_back({{"run_id", rec.run_id},
                    {"seed", rec.seed},
                    {"wall_time_s", rec.wall_time_s}});
  return runs;
}

std::string smoothed_log_csv(const std::vector<RunRecord>& records, int window) {
  // Moving average over the trailing `window` rows, plot-emission path only.
  std::string out = "run_id,step,loss,metric\n";
  for (const auto& rec : records) {
    std::vector<double> loss_buf, metric_buf;
    for (std::size_t i = 0; i < rec.log.size(); ++i) {
      loss_buf.push_back(rec.log[i].loss);
      metric_buf.push_back(rec.log[i].metric);
      const std::size_t lo = loss_buf.size() > static_cast<std::size_t>(window)
                                 ? loss_buf.size() - static_cast<std::size_t>(window)
                                 : 0;
      double ls = 0.0, ms = 0.0;
      for (std::size_t k = lo; k < loss_buf.size(); ++k) {
        ls += loss_buf[k];
        ms += metric_buf[k];
      }
      const double count = static_cast<double>(loss_buf.size() - lo);
      out += rec.run_id;
      out += ',';
      out += std::to_string(rec.log[i].step);
      out += ',';
      out += format_double(ls / count);
      out += ',';
      out += format_double(ms / count);
      out += '\n';
    }
  }
  return out;
}

SqClass build_class_from_config(const json& sq) {
  const std::string cls_name = sq.at("class").get<std::string>();
  const int n = sq.at("n").get<int>();
  SqClass cls;
  if (cls_name == "prop-c2") {
    cls = build_class_single_layer_global(n);
  } else if (cls_name == "prop-c3") {
    cls = build_class_logdepth(n);
  } else if (cls_name == "prop-c7") {
    cls = build_class_unitary_single_layer(n);
  } else {
    throw std::domain_error("unknown sq class: " + cls_name);
  }
  if (sq.value("dist", "haar2") == std::string("uniform-z")) {
    if (cls.kind != SqKind::qcsq_haar2)
      throw std::domain_error("uniform-z distribution applies to observable classes only");
    cls.kind = SqKind::qcsq_uniform_z;
    // c_max under the uniform basis distribution.
    double c_max = 0.0;
    for (std::size_t i = 0; i < cls.observables.size(); ++i)
      c_max = std::max(c_max, qcsq_inner_uniform_z(cls.observables[i].pauli, cls.observables[i].pauli));
    cls.c_max = c_max;
  }
  return cls;
}

}  // namespace

void apply_override(json& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw std::domain_error("override must look like key.path=value");
  const std::string path = assignment.substr(0, eq);
  const std::string value = assignment.substr(eq + 1);
  json* node = &config;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? dot : dot - start);
    if (dot == std::string::npos) {
      json parsed = json::parse(value, nullptr, false);
      (*node)[key] = parsed.is_discarded() ? json(value) : parsed;
      return;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

std::vector<std::string> compare_output_dirs(const fs::path& a, const fs::path& b) {
  std::vector<std::string> mismatches;
  auto read = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  };
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(a)) {
    const std::string name = entry.path().filename().string();
    if (name == "manifest.json") continue;  // carries wall times
    names.push_back(name);
  }
  std::sort(names.begin(), names.end());
  for (const auto& name : names) {
    if (!fs::exists(b / name)) {
      mismatches.push_back(name + " (missing)");
      continue;
    }
    if (read(a / name) != read(b / name)) mismatches.push_back(name);
  }
  return mismatches;
}

RunSummary run_suite(const std::string& experiment, json config, const fs::path& output_dir) {
  fs::create_directories(output_dir);
  RunSummary summary;
  summary.experiment = experiment;
  const std::uint64_t base_seed = config.value("base_seed", 0ull);
  const int n_runs = config.value("n_runs", 1);
  const int threads = config.value("threads", hardware_threads());
  const std::string digest = config_digest(config);

  json manifest;
  manifest["experiment"] = experiment;
  manifest["config"] = config;
  manifest["config_digest"] = digest;
  manifest["base_seed"] = base_seed;
  manifest["n_runs"] = n_runs;
  manifest["threads"] = threads;

  auto emit = [&](const std::string& name, const std::string& content) {
    write_file(output_dir / name, content);
    summary.files.push_back(output_dir / name);
  };

  if (experiment == "teacher-student-qcnn" || experiment == "teacher-student-checkerboard") {
    const auto kind = experiment == "teacher-student-qcnn"
                          ? TeacherStudentConfig::Kind::qcnn
                          : TeacherStudentConfig::Kind::checkerboard;
    const TeacherStudentConfig proto = parse_ts(config.at("teacher_student"), kind);
    summary.records = pooled_runs(n_runs, threads, [&](int i) {
      TeacherStudentConfig cfg = proto;
      cfg.seed = derive_seed(base_seed, static_cast<std::uint64_t>(i), "run");
      RunRecord rec = cfg.kind == TeacherStudentConfig::Kind::qcnn
                          ? run_teacher_student_qcnn(cfg)
                          : run_teacher_student_checkerboard(cfg);
      rec.config_digest = digest;
      return rec;
    });
    const int layers = kind == TeacherStudentConfig::Kind::qcnn
                           ? build_qcnn(proto.n_qubits).layer_count()
                           : proto.student_layers;
    emit("training_log.csv", training_log_csv(summary.records));
    emit("final_scatter.csv",
         final_scatter_csv(summary.records, proto.n_qubits,
                           std::vector<int>(summary.records.size(), layers)));
  } else if (experiment == "vqe" || experiment == "vqe-layerwise") {
    const VqeConfig proto = parse_vqe(config.at("vqe"));
    const bool layerwise = experiment == "vqe-layerwise";
    if (layerwise && !proto.layerwise)
      throw std::domain_error("vqe-layerwise requires a layerwise block");
    summary.records = pooled_runs(n_runs, threads, [&](int i) {
      VqeConfig cfg = proto;
      cfg.seed = derive_seed(base_seed, static_cast<std::uint64_t>(i), "run");
      RunRecord rec = layerwise ? run_vqe_layerwise(cfg) : run_vqe(cfg);
      rec.config_digest = digest;
      return rec;
    });
    std::vector<int> layers(summary.records.size(), proto.ansatz_rows);
    if (layerwise)
      for (std::size_t i = 0; i < summary.records.size(); ++i)
        layers[i] = summary.records[i].growth_events.empty()
                        ? 1
                        : summary.records[i].growth_events.back().rows_after;
    emit("training_log.csv", training_log_csv(summary.records));
    emit("final_scatter.csv", final_scatter_csv(summary.records, proto.n_qubits, layers));
    if (layerwise) {
      emit("smoothed_log.csv", smoothed_log_csv(summary.records, 10));
      json events = json::array();
      for (const auto& rec : summary.records) {
        for (const auto& ev : rec.growth_events)
          events.push_back({{"run_id", rec.run_id},
                            {"step", ev.step},
                            {"loss_before", ev.loss_before},
                            {"loss_after", ev.loss_after},
                            {"rows_after", ev.rows_after}});
      }
      manifest["growth_events"] = events;
    }
  } else if (experiment == "landscape-slice") {
    const auto& block = config.at("landscape");
    TeacherStudentConfig ts;
    ts.kind = TeacherStudentConfig::Kind::qcnn;
    ts.n_qubits = block.at("n_qubits").get<int>();
    ts.dataset_size = block.value("dataset_size", 128);
    ts.batch_size = ts.dataset_size;
    ts.seed = derive_seed(base_seed, 0, "landscape-task");
    const TeacherStudentTask task = make_teacher_student_task(ts);
    std::vector<double> params0 = task.teacher_params;
    if (block.value("center", "teacher") == std::string("random")) {
      Rng rng(derive_seed(base_seed, 0, "landscape-center"));
      for (auto& v : params0) v = rng.normal();
    }
    const auto loss = [&](std::span<const double> p) {
      return qcnn_batch_mse(task, p, 0, task.dataset.size());
    };
    Rng dir_rng(derive_seed(base_seed, 0, "landscape-directions"));
    const auto slice =
        landscape_slice(task.layout, params0, loss, dir_rng, block.value("grid_half_width", 1.0),
                        block.value("grid_points", 41));
    std::string csv = "x,y,loss\n";
    const int points = block.value("grid_points", 41);
    for (int i = 0; i < points; ++i)
      for (int j = 0; j < points; ++j) {
        csv += format_double(slice.xs[static_cast<std::size_t>(i)]);
        csv += ',';
        csv += format_double(slice.ys[static_cast<std::size_t>(j)]);
        csv += ',';
        csv += format_double(
            slice.losses[static_cast<std::size_t>(i) * static_cast<std::size_t>(points) +
                         static_cast<std::size_t>(j)]);
        csv += '\n';
      }
    emit("landscape.csv", csv);
    manifest["skipped_rescale_slots"] = slice.skipped_slots;
  } else if (experiment == "whrf-minima") {
    const auto& block = config.at("whrf");
    GdSettings gd;
    gd.lr = block.value("lr", 0.1);
    gd.max_iters = block.value("max_iters", 100000);
    gd.tol = block.value("tol", 1e-6);
    const auto energies =
        minima_histogram(block.at("l").get<int>(), block.at("m").get<int>(),
                         block.value("n_fields", 200), block.value("starts_per_field", 5),
                         base_seed, gd);
    const int bins = block.value("bins", 60);
    const double e_max = block.value("e_max", 1.5);
    std::vector<long long> counts(static_cast<std::size_t>(bins), 0);
    for (const double e : energies) {
      int idx = static_cast<int>(e / e_max * bins);
      idx = std::clamp(idx, 0, bins - 1);
      ++counts[static_cast<std::size_t>(idx)];
    }
    std::string csv = "bin_low,bin_high,count\n";
    for (int k = 0; k < bins; ++k) {
      csv += format_double(e_max * k / bins);
      csv += ',';
      csv += format_double(e_max * (k + 1) / bins);
      csv += ',';
      csv += std::to_string(counts[static_cast<std::size_t>(k)]);
      csv += '\n';
    }
    emit("histogram.csv", csv);
    manifest["converged_count"] = energies.size();
  } else if (experiment == "whrf-density") {
    const auto& block = config.at("whrf_density");
    const double m = block.at("m").get<double>();
    const int l = block.at("l").get<int>();
    const AsymptoticMinimaDensity density(m, l);
    const int points = block.value("points", 200);
    std::string csv = "energy,log_density\n";
    for (int k = 0; k < points; ++k) {
      const double e = 0.5 * (k + 0.5) / points;
      csv += format_double(e);
      csv += ',';
      csv += format_double(density.log_density(e));
      csv += '\n';
    }
    emit("density.csv", csv);
    if (block.value("verify", true)) {
      // Trapezoid check that the emitted density integrates to about 1; the
      // quadrature-based normalizer is tested to 1e-6 in the test suite.
      double sum = 0.0;
      for (int k = 0; k < points; ++k)
        sum += std::exp(density.log_density(0.5 * (k + 0.5) / points)) * (0.5 / points);
      manifest["density_integral_grid"] = sum;
    }
  } else if (experiment == "sq-certify") {
    const auto& block = config.at("sq");
    const SqClass cls = build_class_from_config(block);
    const SqCertificate cert = certify_sq_dimension(cls);
    json doc;
    doc["class"] = block.at("class");
    doc["n"] = block.at("n");
    doc["dist"] = block.value("dist", "haar2");
    doc["d"] = cert.d;
    doc["ok"] = cert.ok;
    doc["c_max"] = cert.c_max;
    doc["max_offdiag"] = cert.max_offdiag;
    if (cert.violating_pair)
      doc["violating_pair"] = {cert.violating_pair->first, cert.violating_pair->second};
    json bounds;
    for (const auto& tau : block.value("taus", std::vector<double>{0.1, 0.25, 0.5, 1.0})) {
      bounds[format_double(tau)] = query_lower_bound(cert.d, tau);
    }
    doc["bound_at_tau"] = bounds;
    emit("certificate.json", doc.dump(2) + "\n");
    manifest["certified_d"] = cert.d;
  } else if (experiment == "sq-adversary") {
    const auto& block = config.at("sq");
    const SqClass cls = build_class_from_config(block);
    const double tau = block.value("tau", 0.5);
    const int n_queries = block.value("queries", 40);
    const int n = block.at("n").get<int>();
    Rng rng(derive_seed(base_seed, 0, "sq-queries"));
    OracleTranscript transcript;
    if (cls.kind == SqKind::qusq_1design) {
      std::vector<UnitaryConcept> queries;
      for (int k = 0; k < n_queries; ++k) {
        const std::size_t pick = rng.uniform_index(cls.unitaries.size());
        queries.push_back(cls.unitaries[pick]);
      }
      transcript = simulate_adversarial_oracle(cls, queries, tau);
    } else {
      std::vector<PauliString> queries;
      for (int k = 0; k < n_queries; ++k) {
        PauliString p = PauliString::identity(n);
        bool nontrivial = false;
        for (int q = 0; q < n; ++q) {
          const auto letter = static_cast<PauliLetter>(rng.uniform_index(4));
          p.set_letter(q, letter);
          nontrivial |= letter != PauliLetter::I;
        }
        if (!nontrivial) p.set_letter(0, PauliLetter::Z);
        queries.push_back(p);
      }
      transcript = simulate_adversarial_oracle(cls, queries, tau);
    }
    json doc;
    doc["class"] = block.at("class");
    doc["n"] = n;
    doc["tau"] = tau;
    doc["c_max"] = transcript.c_max;
    doc["initial_concepts"] = transcript.initial_concepts;
    doc["elimination_bound"] = transcript.elimination_bound;
    doc["elimination_bound_paper_form"] =
        std::isfinite(transcript.elimination_bound_paper_form)
            ? json(transcript.elimination_bound_paper_form)
            : json("inf");
    json queries_doc = json::array();
    for (const auto& rec : transcript.records)
      queries_doc.push_back({{"response", rec.response},
                             {"eliminated", rec.eliminated},
                             {"eliminated_indices", rec.eliminated_indices}});
    doc["queries"] = queries_doc;
    doc["surviving"] = transcript.alive.size();
    emit("transcript.json", doc.dump(2) + "\n");
    manifest["surviving"] = transcript.alive.size();
  } else {
    throw std::domain_error("run_suite: unknown experiment " + experiment);
  }

  manifest["runs"] = runs_manifest(summary.records);
  write_file(output_dir / "manifest.json", manifest.dump(2) + "\n");
  summary.manifest = std::move(manifest);
  return summary;
}

}  // namespace vql::harness
