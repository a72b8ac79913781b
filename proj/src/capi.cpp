#include <cstring>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include <fbci/fbci.h>

#include "errors.hpp"
#include "io.hpp"
#include "pipeline.hpp"

using namespace fbci;

struct fbci_run {
  RunConfig cfg;
  std::unique_ptr<Pipeline> p;
  std::optional<Certification> cert;

  Pipeline& pipe() {
    if (!p) p = std::make_unique<Pipeline>(cfg);
    return *p;
  }
  void reset() {
    p.reset();
    cert.reset();
  }
};

namespace {

thread_local std::string g_last;

fbci_status fail(fbci_status s, std::string msg) {
  g_last = std::move(msg);
  return s;
}

fbci_status map(const Error& e) {
  const std::string mod = errc_module(e.code());
  fbci_status s = FBCI_ERR_INTERNAL;
  if (e.code() == Errc::ConfigError) s = FBCI_ERR_CONFIG;
  else if (e.code() == Errc::IoError) s = FBCI_ERR_IO;
  else if (e.code() == Errc::InvalidArgument) s = FBCI_ERR_ARGUMENT;
  else if (mod == "flux") s = FBCI_ERR_FLUX;
  else if (mod == "problem") s = FBCI_ERR_PROBLEM;
  else if (mod == "parabolic") s = FBCI_ERR_PARABOLIC;
  else if (mod == "inclusion") s = FBCI_ERR_INCLUSION;
  else if (mod == "oscillate") s = FBCI_ERR_OSCILLATE;
  else if (mod == "densify") s = FBCI_ERR_DENSIFY;
  return fail(s, e.qualified());
}

template <class F>
fbci_status guard(F&& f) {
  try {
    g_last.clear();
    return f();
  } catch (const Error& e) {
    return map(e);
  } catch (const std::bad_alloc&) {
    return fail(FBCI_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(FBCI_ERR_INTERNAL, std::string("internal: ") + e.what());
  } catch (...) {
    return fail(FBCI_ERR_INTERNAL, "internal: unknown exception");
  }
}

fbci_status copy_out(const std::string& s, char* buf, size_t cap, size_t* needed) {
  if (needed) *needed = s.size() + 1;
  if (!buf && cap == 0) return FBCI_OK;
  if (!buf || cap < s.size() + 1) return fail(FBCI_ERR_ARGUMENT, "buffer too small");
  std::memcpy(buf, s.c_str(), s.size() + 1);
  return FBCI_OK;
}

Pipeline& ready(fbci_run* r) {
  Pipeline& p = r->pipe();
  if (!p.validated()) p.validate();
  return p;
}

fbci_status certify(fbci_run* r, int* all_pass) {
  Pipeline& p = ready(r);
  r->cert = p.certify();
  const bool ok = r->cert->mandatory_pass();
  if (all_pass) *all_pass = ok ? 1 : 0;
  if (ok) return FBCI_OK;
  std::string bad;
  for (const CheckLine& l : r->cert->lines())
    if (!l.pass && l.name != "two_phase") bad += (bad.empty() ? "" : ", ") + l.name;
  return fail(FBCI_ERR_VERIFY, "verify.CheckFailed: " + bad);
}

const Field* field_of(const fbci_run* r, fbci_field which) {
  if (!r->p) return nullptr;
  const Pipeline& p = *r->p;
  switch (which) {
    case FBCI_FIELD_BASE_U:
      return p.has_base() ? &p.base().u_star : nullptr;
    case FBCI_FIELD_BASE_V:
      return p.has_base() ? &p.base().v_star : nullptr;
    case FBCI_FIELD_FINAL_U:
      return p.has_final() ? &p.final_u() : nullptr;
    case FBCI_FIELD_FINAL_V:
      return p.has_final() ? &p.final_v() : nullptr;
  }
  return nullptr;
}

}  // namespace

extern "C" {

const char* fbci_last_error(void) { return g_last.c_str(); }

const char* fbci_status_name(fbci_status s) {
  switch (s) {
    case FBCI_OK: return "OK";
    case FBCI_ERR_ARGUMENT: return "ERR_ARGUMENT";
    case FBCI_ERR_CONFIG: return "ERR_CONFIG";
    case FBCI_ERR_IO: return "ERR_IO";
    case FBCI_ERR_FLUX: return "ERR_FLUX";
    case FBCI_ERR_PROBLEM: return "ERR_PROBLEM";
    case FBCI_ERR_PARABOLIC: return "ERR_PARABOLIC";
    case FBCI_ERR_INCLUSION: return "ERR_INCLUSION";
    case FBCI_ERR_OSCILLATE: return "ERR_OSCILLATE";
    case FBCI_ERR_DENSIFY: return "ERR_DENSIFY";
    case FBCI_ERR_VERIFY: return "ERR_VERIFY";
    case FBCI_ERR_STATE: return "ERR_STATE";
    case FBCI_ERR_INTERNAL: return "ERR_INTERNAL";
  }
  return "UNKNOWN";
}

const char* fbci_version(void) { return "0.1.0"; }

fbci_status fbci_run_create_default(fbci_run** out) {
  if (!out) return fail(FBCI_ERR_ARGUMENT, "null output handle");
  return guard([&] {
    *out = new fbci_run{default_config(), nullptr, std::nullopt};
    return FBCI_OK;
  });
}

fbci_status fbci_run_create_from_file(const char* path, fbci_run** out) {
  if (!path || !out) return fail(FBCI_ERR_ARGUMENT, "null argument");
  return guard([&] {
    *out = new fbci_run{load_config(path), nullptr, std::nullopt};
    return FBCI_OK;
  });
}

fbci_status fbci_run_create_from_json(const char* json_text, fbci_run** out) {
  if (!json_text || !out) return fail(FBCI_ERR_ARGUMENT, "null argument");
  return guard([&] {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(json_text, nullptr, true, true);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(Errc::ConfigError, e.what());
    }
    *out = new fbci_run{parse_config(j), nullptr, std::nullopt};
    return FBCI_OK;
  });
}

void fbci_run_destroy(fbci_run* run) { delete run; }

fbci_status fbci_run_set_seed(fbci_run* run, uint64_t seed) {
  if (!run) return fail(FBCI_ERR_ARGUMENT, "null run");
  run->cfg.densify.seed = seed;
  run->reset();
  return FBCI_OK;
}

fbci_status fbci_run_set_steps(fbci_run* run, int steps) {
  if (!run || steps < 0) return fail(FBCI_ERR_ARGUMENT, "steps must be >= 0");
  run->cfg.densify.steps = steps;
  run->reset();
  return FBCI_OK;
}

fbci_status fbci_run_set_grid(fbci_run* run, int nx, int nt) {
  if (!run || nx < 16 || nt < 16) return fail(FBCI_ERR_ARGUMENT, "grid needs nx, nt >= 16");
  run->cfg.nx = nx;
  run->cfg.nt = nt;
  run->reset();
  return FBCI_OK;
}

fbci_status fbci_run_set_output_dir(fbci_run* run, const char* dir) {
  if (!run || !dir) return fail(FBCI_ERR_ARGUMENT, "null argument");
  // output location does not touch computed state
  run->cfg.out_dir = dir;
  return FBCI_OK;
}

fbci_status fbci_run_output_dir(const fbci_run* run, char* buf, size_t cap, size_t* needed) {
  if (!run) return fail(FBCI_ERR_ARGUMENT, "null run");
  return copy_out(run->cfg.out_dir, buf, cap, needed);
}

fbci_status fbci_validate(fbci_run* run) {
  if (!run) return fail(FBCI_ERR_ARGUMENT, "null run");
  return guard([&] {
    run->pipe().validate();
    return FBCI_OK;
  });
}

fbci_status fbci_reference_points(fbci_run* run, double* s1_star, double* s2_star) {
  if (!run || !s1_star || !s2_star) return fail(FBCI_ERR_ARGUMENT, "null argument");
  return guard([&] {
    const FluxModel& m = ready(run).model();
    *s1_star = m.s1_star;
    *s2_star = m.s2_star;
    return FBCI_OK;
  });
}

fbci_status fbci_window(fbci_run* run, double* a, double* b, double* c, double* d) {
  if (!run || !a || !b || !c || !d) return fail(FBCI_ERR_ARGUMENT, "null argument");
  return guard([&] {
    const PhaseWindow& w = ready(run).window();
    *a = w.s_minus_r1;
    *b = w.s_minus_r2;
    *c = w.s_plus_r1;
    *d = w.s_plus_r2;
    return FBCI_OK;
  });
}

fbci_status fbci_solve_base(fbci_run* run) {
  if (!run) return fail(FBCI_ERR_ARGUMENT, "null run");
  return guard([&] {
    run->cert.reset();
    ready(run).solve_base();
    return FBCI_OK;
  });
}

fbci_status fbci_densify(fbci_run* run) {
  if (!run) return fail(FBCI_ERR_ARGUMENT, "null run");
  return guard([&] {
    run->cert.reset();
    ready(run).densify();
    return FBCI_OK;
  });
}

fbci_status fbci_stop_reason(const fbci_run* run, char* buf, size_t cap, size_t* needed) {
  if (!run) return fail(FBCI_ERR_ARGUMENT, "null run");
  if (!run->p || !run->p->has_iteration()) return fail(FBCI_ERR_STATE, "no densify run");
  return copy_out(run->p->iteration().report.stop_reason, buf, cap, needed);
}

fbci_status fbci_dist_trajectory(const fbci_run* run, double* buf, size_t cap, size_t* count) {
  if (!run || !count) return fail(FBCI_ERR_ARGUMENT, "null argument");
  if (!run->p || !run->p->has_iteration()) return fail(FBCI_ERR_STATE, "no densify run");
  const auto& d = run->p->iteration().report.dist_trajectory;
  *count = d.size();
  if (!buf && cap == 0) return FBCI_OK;
  if (!buf || cap < d.size()) return fail(FBCI_ERR_ARGUMENT, "buffer too small");
  std::copy(d.begin(), d.end(), buf);
  return FBCI_OK;
}

fbci_status fbci_verify(fbci_run* run, int* all_pass) {
  if (!run) return fail(FBCI_ERR_ARGUMENT, "null run");
  if (!run->p || !run->p->has_final()) return fail(FBCI_ERR_STATE, "no final state; run densify first");
  return guard([&] { return certify(run, all_pass); });
}

fbci_status fbci_verify_dir(fbci_run* run, const char* dir, int* all_pass) {
  if (!run || !dir) return fail(FBCI_ERR_ARGUMENT, "null argument");
  return guard([&] {
    namespace fs = std::filesystem;
    Pipeline& p = ready(run);
    p.set_base(base_from_json(read_json((fs::path(dir) / "base.json").string())));
    Field u = read_field_csv((fs::path(dir) / "final_u.csv").string(), "u");
    Field v = read_field_csv((fs::path(dir) / "final_v.csv").string(), "v");
    p.set_final(std::move(u), std::move(v));
    return certify(run, all_pass);
  });
}

fbci_status fbci_check_count(const fbci_run* run, size_t* count) {
  if (!run || !count) return fail(FBCI_ERR_ARGUMENT, "null argument");
  if (!run->cert) return fail(FBCI_ERR_STATE, "no certification yet");
  *count = run->cert->lines().size();
  return FBCI_OK;
}

fbci_status fbci_check_line(const fbci_run* run, size_t i, char* buf, size_t cap, size_t* needed, int* pass) {
  if (!run) return fail(FBCI_ERR_ARGUMENT, "null run");
  if (!run->cert) return fail(FBCI_ERR_STATE, "no certification yet");
  const auto lines = run->cert->lines();
  if (i >= lines.size()) return fail(FBCI_ERR_ARGUMENT, "check index out of range");
  if (pass) *pass = lines[i].pass ? 1 : 0;
  return copy_out(lines[i].name + ": " + lines[i].detail, buf, cap, needed);
}

fbci_status fbci_write_base(fbci_run* run, const char* dir) {
  if (!run || !dir) return fail(FBCI_ERR_ARGUMENT, "null argument");
  if (!run->p || !run->p->has_base()) return fail(FBCI_ERR_STATE, "no base state");
  return guard([&] {
    run->p->write_base(dir);
    write_json((std::filesystem::path(dir) / "report.json").string(), run->p->report(run->cert));
    return FBCI_OK;
  });
}

fbci_status fbci_load_base(fbci_run* run, const char* dir) {
  if (!run || !dir) return fail(FBCI_ERR_ARGUMENT, "null argument");
  return guard([&] {
    ready(run).set_base(base_from_json(read_json((std::filesystem::path(dir) / "base.json").string())));
    run->cert.reset();
    return FBCI_OK;
  });
}

fbci_status fbci_write_outputs(fbci_run* run, const char* dir) {
  if (!run || !dir) return fail(FBCI_ERR_ARGUMENT, "null argument");
  if (!run->p || !run->p->has_final()) return fail(FBCI_ERR_STATE, "no final state");
  return guard([&] {
    if (!run->cert) run->cert = run->p->certify();
    run->p->write_all(dir, *run->cert);
    return FBCI_OK;
  });
}

fbci_status fbci_export_csv(fbci_run* run, const char* dir) {
  if (!run || !dir) return fail(FBCI_ERR_ARGUMENT, "null argument");
  return guard([&] {
    namespace fs = std::filesystem;
    const BaseSubsolution b = base_from_json(read_json((fs::path(dir) / "base.json").string()));
    write_field_csv((fs::path(dir) / "base_u.csv").string(), b.u_star);
    write_field_csv((fs::path(dir) / "base_v.csv").string(), b.v_star);
    return FBCI_OK;
  });
}

fbci_status fbci_report_json(const fbci_run* run, char* buf, size_t cap, size_t* needed) {
  if (!run) return fail(FBCI_ERR_ARGUMENT, "null run");
  return guard([&] {
    const std::string s = run->p ? run->p->report(run->cert).dump(1) : to_json(run->cfg).dump(1);
    return copy_out(s, buf, cap, needed);
  });
}

fbci_status fbci_field_dims(const fbci_run* run, fbci_field which, int* nx, int* nt) {
  if (!run || !nx || !nt) return fail(FBCI_ERR_ARGUMENT, "null argument");
  const Field* f = field_of(run, which);
  if (!f) return fail(FBCI_ERR_STATE, "field not available");
  *nx = f->grid.nx;
  *nt = f->grid.nt;
  return FBCI_OK;
}

fbci_status fbci_copy_field(const fbci_run* run, fbci_field which, double* buf, size_t len) {
  if (!run || !buf) return fail(FBCI_ERR_ARGUMENT, "null argument");
  const Field* f = field_of(run, which);
  if (!f) return fail(FBCI_ERR_STATE, "field not available");
  if (len < f->v.size()) return fail(FBCI_ERR_ARGUMENT, "buffer too small");
  std::copy(f->v.begin(), f->v.end(), buf);
  return FBCI_OK;
}

}  // extern "C"
