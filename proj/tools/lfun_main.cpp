// Command-line driver: form ingestion, the two pipelines in both modes, the
// scaling benchmark, coefficient-file generation, and the self-test runner.
//
// Exit codes: 0 ok, 1 selftest failure, 2 invalid input, 3 numerical failure.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "lfun/engine.hpp"
#include "lfun/errors.hpp"
#include "lfun/forms.hpp"
#include "lfun/selftest.hpp"

namespace {

using namespace lfun;

// %.17g round-trips IEEE-754 binary64 exactly; non-finite values have no
// JSON spelling, so they are pinned to the representable edge (the value
// fields are checked before writing, this can only soften an estimate)
std::string num(double v) {
  if (!std::isfinite(v)) v = v < 0 ? -1.7976931348623157e308 : 1.7976931348623157e308;
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string json_escape(const std::string &s) {
  std::string r;
  for (char c : s) {
    if (c == '"' || c == '\\') r += '\\';
    r += c;
  }
  return r;
}

struct RunConfig {
  std::string form_path;
  double T = 0.0;
  double gamma = 4.0;
  double epsilon = 1.0 / 16.0;
  double eta = 1.0 / 8.0;
  std::string mode = "fast";
  std::string precision = "double";
  std::string output;
  int threads = 0;
  int d = -1;
};

PipelineParams params_of(const RunConfig &rc) {
  PipelineParams pp;
  pp.gamma = rc.gamma;
  pp.eps = rc.epsilon;
  pp.eta = rc.eta;
  pp.d = rc.d;
  pp.extended = rc.precision == "extended";
  pp.threads = rc.threads;
  // environment wins over the flag
  if (const char *env = std::getenv("LFUN_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) pp.threads = n;
  }
  return pp;
}

void write_result(const RunConfig &rc, const std::string &subcommand,
                  const PipelineResult &res) {
  if (!std::isfinite(res.value.re) || !std::isfinite(res.value.im))
    throw numerical_error("computed value is not finite");
  std::ostringstream os;
  os << "{\n";
  os << "  \"value_re\": " << num(res.value.re) << ",\n";
  os << "  \"value_im\": " << num(res.value.im) << ",\n";
  os << "  \"abs_error_estimate\": " << num(res.err_est) << ",\n";
  os << "  \"wall_seconds\": " << num(res.wall_seconds) << ",\n";
  os << "  \"jet_evals\": " << res.jet_evals << ",\n";
  os << "  \"groups\": " << res.groups << ",\n";
  os << "  \"params\": {\n";
  os << "    \"subcommand\": \"" << subcommand << "\",\n";
  os << "    \"form\": \"" << json_escape(rc.form_path) << "\",\n";
  os << "    \"T\": " << num(rc.T) << ",\n";
  os << "    \"gamma\": " << num(rc.gamma) << ",\n";
  os << "    \"epsilon\": " << num(rc.epsilon) << ",\n";
  os << "    \"eta\": " << num(rc.eta) << ",\n";
  os << "    \"mode\": \"" << rc.mode << "\",\n";
  os << "    \"precision\": \"" << rc.precision << "\",\n";
  os << "    \"threads\": " << rc.threads << "\n";
  os << "  }\n";
  os << "}\n";
  if (rc.output.empty()) {
    std::cout << os.str();
  } else {
    std::ofstream f(rc.output);
    if (!f) throw input_error("cannot write " + rc.output);
    f << os.str();
  }
}

int run_pipeline(const RunConfig &rc, const std::string &subcommand) {
  if (rc.mode != "fast" && rc.mode != "direct")
    throw input_error("mode must be fast or direct");
  if (rc.precision != "double" && rc.precision != "extended")
    throw input_error("precision must be double or extended");
  check_exponents(rc.eta, rc.epsilon);
  Form f = load_form(rc.form_path);
  PipelineParams pp = params_of(rc);
  PipelineResult res;
  if (subcommand == "fourier")
    res = rc.mode == "fast" ? fourier_fast(f, rc.T, pp) : fourier_direct(f, rc.T, pp);
  else
    res = rc.mode == "fast" ? lvalue_fast(f, rc.T, pp) : lvalue_direct(f, rc.T, pp);
  write_result(rc, subcommand, res);
  return 0;
}

double fit_slope(const std::vector<double> &lx, const std::vector<double> &ly) {
  double n = double(lx.size()), sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < lx.size(); ++i) {
    sx += lx[i];
    sy += ly[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * ly[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

int run_bench(RunConfig rc, std::vector<double> t_list, double t_min, double t_max,
              double t_step, const std::string &modes_csv, bool allow_short) {
  if (t_list.empty())
    for (double t = t_min; t <= t_max * (1.0 + 1e-9); t *= t_step) t_list.push_back(t);
  std::vector<std::string> modes;
  {
    std::stringstream ss(modes_csv);
    std::string item;
    while (std::getline(ss, item, ','))
      if (!item.empty()) modes.push_back(item);
  }
  if (modes.empty()) throw input_error("no modes given");
  for (const auto &m : modes)
    if (m != "fast" && m != "direct") throw input_error("unknown mode " + m);
  if (!allow_short) {
    if (t_list.size() < 4) throw input_error("bench needs at least 4 T values");
    double lo = t_list.front(), hi = t_list.front();
    for (double t : t_list) {
      lo = std::min(lo, t);
      hi = std::max(hi, t);
    }
    if (hi < 100.0 * lo) throw input_error("bench T values must span two decades");
  }
  check_exponents(rc.eta, rc.epsilon);
  Form f = load_form(rc.form_path);
  PipelineParams pp = params_of(rc);

  std::ostream *csv = &std::cout;
  std::ofstream file;
  bool csv_on_stdout = rc.output.empty();
  if (!csv_on_stdout) {
    file.open(rc.output);
    if (!file) throw input_error("cannot write " + rc.output);
    csv = &file;
  }
  std::ostream &log = csv_on_stdout ? std::cerr : std::cout;

  *csv << "T,mode,wall_seconds,jet_evals,groups,value_re,value_im\n";
  for (const std::string &mode : modes) {
    std::vector<double> lx, ly;
    for (double t : t_list) {
      PipelineResult r = mode == "fast" ? fourier_fast(f, t, pp) : fourier_direct(f, t, pp);
      *csv << num(t) << "," << mode << "," << num(r.wall_seconds) << ","
           << r.jet_evals << "," << r.groups << "," << num(r.value.re) << ","
           << num(r.value.im) << "\n";
      csv->flush();
      lx.push_back(std::log(t));
      ly.push_back(std::log(double(std::max(r.jet_evals, 1LL))));
      log << "bench: T=" << num(t) << " mode=" << mode << " evals=" << r.jet_evals
          << " groups=" << r.groups << " wall=" << num(r.wall_seconds) << "s\n";
    }
    log << "slope " << mode << " = " << num(fit_slope(lx, ly)) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"modular-form coefficient and central L-value evaluator"};
  app.require_subcommand(1);

  RunConfig rc;

  auto add_common = [&](CLI::App *c, bool needs_T) {
    c->add_option("--form", rc.form_path, "form description file (JSON)")->required();
    auto *t = c->add_option("--T", rc.T, "evaluation point");
    if (needs_T) t->required();
    c->add_option("--gamma", rc.gamma, "accuracy exponent, error ~ T^-gamma");
    c->add_option("--epsilon", rc.epsilon, "frame-match exponent");
    c->add_option("--eta", rc.eta, "segment-length exponent");
    c->add_option("--mode", rc.mode, "fast | direct");
    c->add_option("--precision", rc.precision, "double | extended");
    c->add_option("--output", rc.output, "write result here instead of stdout");
    c->add_option("--threads", rc.threads, "worker threads (0 = all)");
    c->add_option("--d", rc.d, "fixed expansion order (default adaptive)");
  };

  CLI::App *fourier = app.add_subcommand("fourier", "T-th Fourier coefficient");
  add_common(fourier, true);
  CLI::App *lvalue = app.add_subcommand("lvalue", "L(f, 1/2 + iT)");
  add_common(lvalue, true);

  CLI::App *bench = app.add_subcommand("bench", "scaling benchmark (CSV + slopes)");
  std::vector<double> t_list;
  double t_min = 4096.0, t_max = 4194304.0, t_step = 4.0;
  std::string modes_csv = "fast,direct";
  bool allow_short = false;
  add_common(bench, false);
  bench->add_option("--T-list", t_list, "explicit T values (overrides the ladder)");
  bench->add_option("--t-min", t_min, "ladder start");
  bench->add_option("--t-max", t_max, "ladder end");
  bench->add_option("--t-step", t_step, "ladder ratio");
  bench->add_option("--modes", modes_csv, "comma-separated: fast,direct");
  bench->add_flag("--allow-short", allow_short, "skip the 4-points/2-decades check");

  CLI::App *gen = app.add_subcommand("gen-delta", "write the discriminant form file");
  int gen_n = 1000;
  std::string gen_out = "delta.json";
  gen->add_option("--n", gen_n, "number of coefficients");
  gen->add_option("--output", gen_out, "output path");

  CLI::App *self = app.add_subcommand("selftest", "module invariant suites");
  std::string self_form;
  self->add_option("--form", self_form, "validate this form file in the forms suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    return app.exit(e) ? 2 : 0;
  }

  try {
    if (fourier->parsed()) return run_pipeline(rc, "fourier");
    if (lvalue->parsed()) return run_pipeline(rc, "lvalue");
    if (bench->parsed())
      return run_bench(rc, t_list, t_min, t_max, t_step, modes_csv, allow_short);
    if (gen->parsed()) {
      if (gen_n < 1) throw input_error("--n must be positive");
      write_delta_form(gen_out, gen_n);
      std::cout << "wrote " << gen_out << " (" << gen_n << " coefficients)\n";
      return 0;
    }
    if (self->parsed())
      return run_selftest(std::cout, self_form) ? 0 : int(errc::selftest_failed);
  } catch (const input_error &e) {
    std::cerr << "error: " << e.what() << "\n";
    return int(errc::invalid_input);
  } catch (const lfun_error &e) {
    std::cerr << "error: " << e.what() << "\n";
    return int(e.code);
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return int(errc::numerical_failure);
  }
  return int(errc::invalid_input);
}
