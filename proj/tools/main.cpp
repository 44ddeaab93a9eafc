#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include "vql/harness.hpp"
#include "vql/ref_kernels.hpp"

namespace {

using vql::harness::json;

constexpr int kExitBadConfig = 2;
constexpr int kExitDomain = 3;
constexpr int kExitResource = 4;
constexpr int kExitNumeric = 5;

void print_error(const std::string& kind, const std::string& message) {
  json err;
  err["error"] = kind;
  err["message"] = message;
  std::cerr << err.dump() << "\n";
}

int run_selftest() {
  using namespace vql;
  int failures = 0;
  auto check = [&](const std::string& name, bool ok) {
    std::cout << (ok ? "[PASS] " : "[FAIL] ") << name << "\n";
    if (!ok) ++failures;
  };

  {  // gate kernels vs the serial reference
    Rng rng(1);
    bool ok = true;
    for (int trial = 0; trial < 5; ++trial) {
      const int n = 6;
      std::vector<cplx> amps(std::size_t{1} << n);
      double norm = 0.0;
      for (auto& a : amps) {
        a = cplx(rng.normal(), rng.normal());
        norm += std::norm(a);
      }
      for (auto& a : amps) a /= std::sqrt(norm);
      const StateVector s(n, amps);
      const auto g = build_unitary32(random_params32(rng));
      const auto fast = apply_gate2q(s, g, 1, 4);
      const auto serial = ref::apply_gate2q(s, g, 1, 4);
      for (std::size_t i = 0; i < fast.dim(); ++i)
        ok &= std::abs(fast.amplitude(i) - serial.amplitude(i)) < 1e-13;
    }
    check("gate kernel matches serial reference", ok);
  }
  {  // pauli algebra involution
    Rng rng(2);
    bool ok = true;
    for (int trial = 0; trial < 20; ++trial) {
      PauliString p = PauliString::identity(5);
      for (int q = 0; q < 5; ++q) p.set_letter(q, static_cast<PauliLetter>(rng.uniform_index(4)));
      const auto sq = pauli_mul(p, p);
      ok &= sq.is_identity_word() && sq.phase_power() == 0;
    }
    check("pauli involution", ok);
  }
  {  // adjoint gradient vs finite differences
    Rng rng(3);
    const auto layout = build_qcnn(4);
    std::vector<double> params(static_cast<std::size_t>(layout.param_count()));
    for (auto& v : params) v = rng.normal();
    const auto res = grad_marginal(layout, params, basis_state(4, 5));
    bool ok = true;
    const double h = 1e-5;
    for (std::size_t k = 0; k < params.size(); k += 7) {
      auto up = params, down = params;
      up[k] += h;
      down[k] -= h;
      const double fd = (grad_marginal(layout, up, basis_state(4, 5)).value -
                         grad_marginal(layout, down, basis_state(4, 5)).value) /
                        (2 * h);
      ok &= std::abs(res.grad[k] - fd) / std::max(1.0, std::abs(fd)) < 1e-5;
    }
    check("adjoint gradient matches finite differences", ok);
  }
  {  // deterministic repeat of a tiny vqe run
    VqeConfig cfg;
    cfg.n_qubits = 4;
    cfg.target_rows = 1;
    cfg.ansatz_rows = 1;
    cfg.steps = 10;
    cfg.log_every = 1;
    cfg.seed = 99;
    const auto a = run_vqe(cfg);
    const auto b = run_vqe(cfg);
    bool ok = a.log.size() == b.log.size();
    for (std::size_t i = 0; ok && i < a.log.size(); ++i)
      ok &= a.log[i].loss == b.log[i].loss && a.log[i].metric == b.log[i].metric;
    check("run determinism", ok);
  }
  {  // wishart sampling mean
    Rng rng(4);
    double acc = 0.0;
    for (int k = 0; k < 200; ++k) acc += sample_wishart(2, 6, rng).j.diagonal().real().mean();
    check("wishart diagonal mean near 1", std::abs(acc / 200 - 1.0) < 0.1);
  }
  std::cout << (failures == 0 ? "selftest OK" : "selftest FAILED") << "\n";
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vqlab: trainability laboratory for shallow variational quantum circuits"};
  app.require_subcommand(1);

  const std::vector<std::string> experiments = {
      "teacher-student-qcnn", "teacher-student-checkerboard",
      "vqe",                  "vqe-layerwise",
      "landscape-slice",      "whrf-minima",
      "whrf-density",         "sq-certify",
      "sq-adversary",         "selftest"};

  struct Options {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string output_dir;
    std::int64_t seed = -1;
    int n_runs = -1;
    int threads = -1;
  };
  std::map<std::string, Options> opts;
  for (const auto& name : experiments) {
    auto* sub = app.add_subcommand(name);
    auto& o = opts[name];
    sub->add_option("--config", o.config_path, "JSON config file");
    sub->add_option("--set", o.overrides, "override a config leaf: key.path=value")->take_all();
    sub->add_option("--out", o.output_dir, "output directory (default $VQLAB_OUT or ./out)");
    sub->add_option("--seed", o.seed, "base seed override");
    sub->add_option("--runs", o.n_runs, "number of runs override");
    sub->add_option("--threads", o.threads, "worker pool size");
  }

  CLI11_PARSE(app, argc, argv);
  const std::string name = app.get_subcommands().front()->get_name();
  const Options& o = opts[name];

  if (name == "selftest") return run_selftest();

  try {
    json config = vql::harness::default_config(name);
    if (!o.config_path.empty()) {
      std::ifstream in(o.config_path);
      if (!in) {
        print_error("config", "cannot read config file: " + o.config_path);
        return kExitBadConfig;
      }
      json file_cfg = json::parse(in, nullptr, false);
      if (file_cfg.is_discarded()) {
        print_error("config", "config file is not valid JSON");
        return kExitBadConfig;
      }
      config.merge_patch(file_cfg);
    }
    for (const auto& ov : o.overrides) vql::harness::apply_override(config, ov);
    if (o.seed >= 0) config["base_seed"] = static_cast<std::uint64_t>(o.seed);
    if (o.n_runs > 0) config["n_runs"] = o.n_runs;
    if (o.threads > 0) config["threads"] = o.threads;

    std::string out_dir = o.output_dir;
    if (out_dir.empty()) {
      if (!config.value("output_dir", std::string{}).empty()) {
        out_dir = config["output_dir"].get<std::string>();
      } else {
        if (const char* env = std::getenv("VQLAB_OUT")) out_dir = env;
        if (out_dir.empty()) out_dir = "out";
        out_dir += "/" + name;
      }
    }
    config["output_dir"] = out_dir;

    const auto summary = vql::harness::run_suite(name, config, out_dir);
    std::cout << "wrote " << summary.files.size() + 1 << " files to " << out_dir << " (digest "
              << summary.manifest["config_digest"].get<std::string>() << ")\n";
    return 0;
  } catch (const vql::resource_error& e) {
    print_error("resource", e.what());
    return kExitResource;
  } catch (const vql::numeric_error& e) {
    print_error("numeric", e.what());
    return kExitNumeric;
  } catch (const std::domain_error& e) {
    print_error("domain", e.what());
    return kExitDomain;
  } catch (const std::exception& e) {
    print_error("config", e.what());
    return kExitBadConfig;
  }
}
