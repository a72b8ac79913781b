// Command-line front end; talks to the library only through the C interface.
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <fbci/fbci.h>

namespace {

struct Options {
  std::string config;
  std::optional<uint64_t> seed;
  std::optional<int> steps, nx, nt;
  std::optional<std::string> out;
};

int report_error(fbci_status s) {
  std::fprintf(stderr, "error [%s] %s\n", fbci_status_name(s), fbci_last_error());
  return static_cast<int>(s) == 0 ? 0 : (s == FBCI_ERR_VERIFY ? 3 : 2);
}

struct Run {
  fbci_run* h = nullptr;
  ~Run() { fbci_run_destroy(h); }
};

fbci_status open_run(const Options& o, Run& r) {
  fbci_status s = o.config.empty() ? fbci_run_create_default(&r.h) : fbci_run_create_from_file(o.config.c_str(), &r.h);
  if (s != FBCI_OK) return s;
  if (o.seed && (s = fbci_run_set_seed(r.h, *o.seed)) != FBCI_OK) return s;
  if (o.steps && (s = fbci_run_set_steps(r.h, *o.steps)) != FBCI_OK) return s;
  if ((o.nx || o.nt) && (s = fbci_run_set_grid(r.h, o.nx.value_or(o.nt.value_or(0)), o.nt.value_or(o.nx.value_or(0)))) != FBCI_OK)
    return s;
  if (o.out && (s = fbci_run_set_output_dir(r.h, o.out->c_str())) != FBCI_OK) return s;
  return FBCI_OK;
}

std::string out_dir(const Run& r) {
  size_t n = 0;
  fbci_run_output_dir(r.h, nullptr, 0, &n);
  std::string s(n, '\0');
  fbci_run_output_dir(r.h, s.data(), n, &n);
  s.resize(n ? n - 1 : 0);
  return s;
}

void print_ledger(const Run& r) {
  size_t n = 0;
  if (fbci_check_count(r.h, &n) != FBCI_OK) return;
  for (size_t i = 0; i < n; ++i) {
    size_t need = 0;
    int pass = 0;
    fbci_check_line(r.h, i, nullptr, 0, &need, &pass);
    std::string line(need, '\0');
    fbci_check_line(r.h, i, line.data(), need, &need, &pass);
    line.resize(need ? need - 1 : 0);
    std::printf("  [%s] %s\n", pass ? "PASS" : "FAIL", line.c_str());
  }
}

int cmd_validate(const Options& o) {
  Run r;
  fbci_status s = open_run(o, r);
  if (s == FBCI_OK) s = fbci_validate(r.h);
  if (s != FBCI_OK) return report_error(s);
  double a = 0, b = 0, w[4] = {0, 0, 0, 0};
  fbci_reference_points(r.h, &a, &b);
  fbci_window(r.h, &w[0], &w[1], &w[2], &w[3]);
  std::printf("flux and problem valid\n");
  std::printf("s1*=%.12g s2*=%.12g\n", a, b);
  std::printf("window s-_r1=%.12g s-_r2=%.12g s+_r1=%.12g s+_r2=%.12g\n", w[0], w[1], w[2], w[3]);
  return 0;
}

int cmd_solve_base(const Options& o) {
  Run r;
  fbci_status s = open_run(o, r);
  if (s == FBCI_OK) s = fbci_solve_base(r.h);
  const std::string dir = out_dir(r);
  if (s == FBCI_OK) s = fbci_write_base(r.h, dir.c_str());
  if (s != FBCI_OK) return report_error(s);
  std::printf("base state written to %s/base.json\n", dir.c_str());
  return 0;
}

int cmd_densify(const Options& o) {
  Run r;
  fbci_status s = open_run(o, r);
  if (s == FBCI_OK) s = fbci_densify(r.h);
  if (s != FBCI_OK) return report_error(s);
  const std::string dir = out_dir(r);
  int pass = 0;
  const fbci_status v = fbci_verify(r.h, &pass);
  if (v != FBCI_OK && v != FBCI_ERR_VERIFY) return report_error(v);
  if ((s = fbci_write_outputs(r.h, dir.c_str())) != FBCI_OK) return report_error(s);

  size_t n = 0;
  fbci_stop_reason(r.h, nullptr, 0, &n);
  std::string why(n, '\0');
  fbci_stop_reason(r.h, why.data(), n, &n);
  why.resize(n ? n - 1 : 0);
  size_t cnt = 0;
  fbci_dist_trajectory(r.h, nullptr, 0, &cnt);
  std::vector<double> d(cnt);
  fbci_dist_trajectory(r.h, d.data(), cnt, &cnt);
  std::printf("stop: %s\n", why.c_str());
  std::printf("dist:");
  for (double x : d) std::printf(" %.6g", x);
  std::printf("\ncertification: %s\n", pass ? "PASS" : "FAIL");
  print_ledger(r);
  std::printf("outputs in %s\n", dir.c_str());
  return 0;
}

int cmd_verify(const Options& o) {
  Run r;
  fbci_status s = open_run(o, r);
  if (s != FBCI_OK) return report_error(s);
  const std::string dir = out_dir(r);
  int pass = 0;
  s = fbci_verify_dir(r.h, dir.c_str(), &pass);
  if (s != FBCI_OK && s != FBCI_ERR_VERIFY) return report_error(s);
  print_ledger(r);
  std::printf("certification: %s\n", pass ? "PASS" : "FAIL");
  if (s == FBCI_ERR_VERIFY) return report_error(s);
  return 0;
}

int cmd_export(const Options& o) {
  Run r;
  fbci_status s = open_run(o, r);
  const std::string dir = s == FBCI_OK ? out_dir(r) : std::string();
  if (s == FBCI_OK) s = fbci_export_csv(r.h, dir.c_str());
  if (s != FBCI_OK) return report_error(s);
  std::printf("wrote %s/base_u.csv and %s/base_v.csv\n", dir.c_str(), dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"two-phase forward solutions by convex integration"};
  app.require_subcommand(1);
  Options o;
  uint64_t seed = 0;
  int steps = 0, nx = 0, nt = 0;
  std::string out;
  app.add_option("--config", o.config, "JSON run configuration (built-in default when omitted)")->check(CLI::ExistingFile);
  auto* so = app.add_option("--seed", seed, "RNG seed for tooth phases");
  auto* st = app.add_option("--steps", steps, "number of density steps")->check(CLI::NonNegativeNumber);
  auto* sx = app.add_option("--nx", nx, "x cells")->check(CLI::Range(16, 1 << 16));
  auto* sn = app.add_option("--nt", nt, "t cells")->check(CLI::Range(16, 1 << 16));
  auto* sd = app.add_option("--out", out, "output directory");
  app.fallthrough();

  auto* v = app.add_subcommand("validate", "check flux and problem data");
  auto* b = app.add_subcommand("solve-base", "solve the modified problem and write base.json");
  auto* d = app.add_subcommand("densify", "run the density schedule and write all outputs");
  auto* c = app.add_subcommand("verify", "certify saved fields in the output directory");
  auto* e = app.add_subcommand("export", "write base fields as CSV");

  CLI11_PARSE(app, argc, argv);
  if (*so) o.seed = seed;
  if (*st) o.steps = steps;
  if (*sx) o.nx = nx;
  if (*sn) o.nt = nt;
  if (*sd) o.out = out;

  if (*v) return cmd_validate(o);
  if (*b) return cmd_solve_base(o);
  if (*d) return cmd_densify(o);
  if (*c) return cmd_verify(o);
  if (*e) return cmd_export(o);
  return 1;
}
