#include "pointlab/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <thread>

#include <unistd.h>

#include <nlohmann/json.hpp>

#include "pointlab/dichotomy.hpp"
#include "pointlab/errors.hpp"
#include "pointlab/lyapunov.hpp"
#include "pointlab/model_io.hpp"
#include "pointlab/spectra.hpp"

namespace pointlab::cli {

using nlohmann::json;

namespace {

struct Output {
  std::string csv_header;
  std::vector<std::vector<double>> rows;
  json document;
  bool is_json = false;
  std::string summary;
};

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(12) << v;
  return s.str();
}

void validate(const ExperimentConfig& c) {
  if (c.output.empty()) throw ConfigError("out", "output path is required");
  const bool grid = c.experiment == Experiment::lyapunov || c.experiment == Experiment::bands;
  const bool box = c.experiment == Experiment::spectrum || c.experiment == Experiment::decay ||
                   c.experiment == Experiment::dynamics;
  if (c.experiment != Experiment::dichotomy) {
    if (!std::isfinite(c.emin) || !std::isfinite(c.emax) || !(c.emin < c.emax)) {
      throw ConfigError("emin", "need finite emin < emax");
    }
  }
  if (grid && c.points < 2) throw ConfigError("points", "grid needs at least 2 points");
  if (box && c.cells < 2) throw ConfigError("cells", "box needs at least 2 cells");
  if (c.experiment == Experiment::lyapunov) {
    if (c.steps < 1000) throw ConfigError("steps", "need at least 1000 steps");
    if (c.replicas < 1) throw ConfigError("replicas", "need at least 1 replica");
  }
  if (c.threads < 0) throw ConfigError("threads", "must be non-negative");
  if (!(c.tol > 0.0)) throw ConfigError("tol", "must be positive");
  if (c.experiment == Experiment::dynamics) {
    if (!(c.p > 0.0)) throw ConfigError("p", "must be positive");
    if (!(c.kmin < c.kmax)) throw ConfigError("kmin", "need kmin < kmax");
    if (c.times.empty()) throw ConfigError("times", "need at least one time");
  }
}

DisorderMeasure load(const ExperimentConfig& c) {
  if (c.model) return *c.model;
  if (c.model_path.empty()) throw ConfigError("model", "model file is required");
  try {
    return load_measure(c.model_path);
  } catch (const DomainError& e) {
    throw ConfigError("model", e.what());
  }
}

int thread_budget(const ExperimentConfig& c) {
  return c.threads > 0 ? c.threads
                       : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

Output run_lyapunov(const ExperimentConfig& c, const DisorderMeasure& m) {
  if (m.has_separating()) throw ConfigError("model", "lyapunov needs a model without separating atoms");
  const auto grid = linspace(c.emin, c.emax, static_cast<std::size_t>(c.points));
  const LyapunovCurve curve =
      lyapunov_curve(m, grid, c.steps, c.replicas, c.seed, thread_budget(c));
  Output o;
  o.csv_header = "E,L,stderr,Lbar,n,replicas";
  json rows = json::array();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto& e = curve.estimates[i];
    o.rows.push_back({e.E, e.value, e.std_error, curve.continuum(i), static_cast<double>(e.steps),
                      static_cast<double>(e.replicas)});
    rows.push_back({{"E", e.E},
                    {"L", e.value},
                    {"stderr", e.std_error},
                    {"Lbar", curve.continuum(i)},
                    {"n", e.steps},
                    {"replicas", e.replicas}});
  }
  o.document["estimates"] = rows;
  o.summary = std::to_string(grid.size()) + " energies";
  return o;
}

Output run_dichotomy(const DisorderMeasure& m) {
  Output o;
  const DichotomyVerdict v = classify(m);
  o.document = to_json(v);
  o.is_json = true;
  o.summary = to_string(v.verdict);
  return o;
}

FiniteBox sample_box(const ExperimentConfig& c, const DisorderMeasure& m, bool centered) {
  const std::int64_t lo = centered ? -(c.cells / 2) : 0;
  const std::int64_t hi = lo + c.cells;
  const Realization real(m, c.seed, lo + 1, hi);
  return FiniteBox::from_realization(real, lo, hi);
}

json pair_json(const Eigenpair& p) {
  json traces = json::array();
  for (const Vec2& v : p.traces) traces.push_back({v.x, v.y});
  return {{"E", p.E}, {"traces", traces}, {"norm", p.norm}};
}

std::vector<Eigenpair> eigenpairs(const FiniteBox& box, const std::vector<double>& values) {
  std::vector<Eigenpair> pairs;
  for (std::size_t i = 0; i < values.size(); ++i) {
    int mult = 0;
    for (std::size_t j = i; j-- > 0 && values[i] - values[j] < 1e-8;) ++mult;
    pairs.push_back(eigenfunction(box, values[i], mult));
  }
  return pairs;
}

Output run_spectrum(const ExperimentConfig& c, const DisorderMeasure& m) {
  const FiniteBox box = sample_box(c, m, false);
  const auto values = eigenvalues(box, c.emin, c.emax, c.tol);
  Output o;
  o.csv_header = "index,E";
  for (std::size_t i = 0; i < values.size(); ++i) {
    o.rows.push_back({static_cast<double>(i), values[i]});
  }
  if (c.format == Format::json) {
    json pairs = json::array();
    for (const auto& p : eigenpairs(box, values)) pairs.push_back(pair_json(p));
    o.document["eigenvalues"] = values;
    o.document["eigenpairs"] = pairs;
  }
  o.summary = std::to_string(values.size()) + " eigenvalues";
  return o;
}

Output run_decay(const ExperimentConfig& c, const DisorderMeasure& m) {
  const FiniteBox box = sample_box(c, m, false);
  const auto values = eigenvalues(box, c.emin, c.emax, c.tol);
  const double ellbar = mean_length(m);
  Output o;
  o.csv_header = "E,zeta,rate,r2";
  json rows = json::array();
  for (const auto& p : eigenpairs(box, values)) {
    double zeta = NAN, rate = NAN, r2 = NAN;
    try {
      const DecayFit f = decay_fit(p, ellbar);
      zeta = static_cast<double>(f.center);
      rate = f.rate;
      r2 = f.r_squared;
    } catch (const FitError&) {
    }
    o.rows.push_back({p.E, zeta, rate, r2});
    rows.push_back({{"E", p.E},
                    {"zeta", std::isnan(zeta) ? json(nullptr) : json(zeta)},
                    {"rate", std::isfinite(rate) ? json(rate) : json(nullptr)},
                    {"r2", std::isnan(r2) ? json(nullptr) : json(r2)}});
  }
  o.document["fits"] = rows;
  o.summary = std::to_string(values.size()) + " eigenpairs";
  return o;
}

Output run_dynamics(const ExperimentConfig& c, const DisorderMeasure& m) {
  const FiniteBox box = sample_box(c, m, true);
  const auto samples = dynamical_moments(box, c.emin, c.emax, c.p, c.kmin, c.kmax, c.times);
  Output o;
  o.csv_header = "t,moment";
  json rows = json::array();
  double best = 0.0;
  for (const auto& s : samples) {
    o.rows.push_back({s.t, s.moment});
    rows.push_back({{"t", s.t}, {"moment", s.moment}});
    best = std::max(best, s.moment);
  }
  o.document["moments"] = rows;
  o.document["max"] = best;
  o.summary = "max moment " + fmt(best);
  return o;
}

Output run_bands(const ExperimentConfig& c, const DisorderMeasure& m) {
  if (m.size() != 1) throw ConfigError("model", "bands needs a single-atom model");
  const SupportAtom& a = m.atom(0);
  if (a.condition.is_separating()) throw ConfigError("model", "bands needs a connecting atom");
  const Mat2 B = a.condition.matrix();
  Output o;
  o.csv_header = "E,trace,inBand";
  json rows = json::array();
  std::size_t inside = 0;
  for (double E : linspace(c.emin, c.emax, static_cast<std::size_t>(c.points))) {
    const double tr = transfer(E, a.ell, B).trace();
    const bool in = std::abs(tr) <= 2.0;
    inside += in;
    o.rows.push_back({E, tr, in ? 1.0 : 0.0});
    rows.push_back({{"E", E}, {"trace", tr}, {"inBand", in}});
  }
  o.document["bands"] = rows;
  o.summary = std::to_string(inside) + " of " + std::to_string(c.points) + " in band";
  return o;
}

void write_atomic(const std::filesystem::path& target, const std::string& content) {
  std::filesystem::path tmp = target;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw ConfigError("out", "cannot write " + tmp.string());
    f << content;
    f.flush();
    if (!f) throw ConfigError("out", "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, target, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw ConfigError("out", "cannot rename onto " + target.string() + ": " + ec.message());
  }
}

std::string render(const ExperimentConfig& c, const Output& o, const std::string& hash) {
  if (c.format == Format::json || o.is_json) {
    json doc = o.document;
    if (doc.empty()) doc["rows"] = o.rows;
    doc["_meta"] = {{"tool", "pointlab"},
                    {"version", kVersion},
                    {"experiment", to_string(c.experiment)},
                    {"config_hash", hash},
                    {"seed", c.seed}};
    return doc.dump(2) + "\n";
  }
  std::ostringstream s;
  s << "# pointlab " << kVersion << " config_hash=" << hash << " seed=" << c.seed << '\n';
  s << o.csv_header << '\n';
  for (const auto& row : o.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) s << (i ? "," : "") << fmt(row[i]);
    s << '\n';
  }
  return s.str();
}

}  // namespace

Experiment parse_experiment(const std::string& name) {
  static const std::pair<const char*, Experiment> table[] = {
      {"lyapunov", Experiment::lyapunov}, {"dichotomy", Experiment::dichotomy},
      {"spectrum", Experiment::spectrum}, {"decay", Experiment::decay},
      {"dynamics", Experiment::dynamics}, {"bands", Experiment::bands}};
  for (const auto& [key, e] : table) {
    if (name == key) return e;
  }
  throw ConfigError("experiment", "unknown experiment '" + name + "'");
}

std::string to_string(Experiment e) {
  switch (e) {
    case Experiment::lyapunov:
      return "lyapunov";
    case Experiment::dichotomy:
      return "dichotomy";
    case Experiment::spectrum:
      return "spectrum";
    case Experiment::decay:
      return "decay";
    case Experiment::dynamics:
      return "dynamics";
    case Experiment::bands:
      return "bands";
  }
  return "unknown";
}

void apply_environment(ExperimentConfig& config) {
  const char* env = std::getenv("LAB_SEED");
  if (env == nullptr || *env == '\0') return;
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(env, &used, 0);
    if (used != std::string(env).size()) throw std::invalid_argument("trailing characters");
    config.seed = v;
  } catch (const std::exception&) {
    throw ConfigError("LAB_SEED", std::string("not an unsigned integer: '") + env + "'");
  }
}

std::string config_hash(const ExperimentConfig& c, const DisorderMeasure& measure) {
  json key = {{"experiment", to_string(c.experiment)},
              {"model", to_json(measure)},
              {"format", c.format == Format::json ? "json" : "csv"},
              {"emin", c.emin},
              {"emax", c.emax},
              {"points", c.points},
              {"cells", c.cells},
              {"steps", c.steps},
              {"replicas", c.replicas},
              {"seed", c.seed},
              {"p", c.p},
              {"kmin", c.kmin},
              {"kmax", c.kmax},
              {"times", c.times},
              {"tol", c.tol}};
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : key.dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << h;
  return s.str();
}

int run(const ExperimentConfig& config, std::ostream& out, std::ostream& err) {
  const auto start = std::chrono::steady_clock::now();
  std::string hash;
  try {
    validate(config);
    const DisorderMeasure measure = load(config);
    hash = config_hash(config, measure);
    Output o;
    switch (config.experiment) {
      case Experiment::lyapunov:
        o = run_lyapunov(config, measure);
        break;
      case Experiment::dichotomy:
        o = run_dichotomy(measure);
        break;
      case Experiment::spectrum:
        o = run_spectrum(config, measure);
        break;
      case Experiment::decay:
        o = run_decay(config, measure);
        break;
      case Experiment::dynamics:
        o = run_dynamics(config, measure);
        break;
      case Experiment::bands:
        o = run_bands(config, measure);
        break;
    }
    write_atomic(config.output, render(config, o, hash));
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out << to_string(config.experiment) << " model=" << (measure.name().empty() ? "-" : measure.name())
        << " time=" << std::fixed << std::setprecision(3) << secs << "s out=" << config.output.string()
        << " (" << o.summary << ")\n";
    return 0;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const DomainError& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const ConsistencyError& e) {
    err << "consistency error: " << e.what() << '\n';
    try {
      std::filesystem::path diag = config.output;
      diag += ".diagnostic.json";
      const json payload = {{"error", "consistency"},
                            {"message", e.what()},
                            {"experiment", to_string(config.experiment)},
                            {"config_hash", hash},
                            {"seed", config.seed}};
      write_atomic(diag, payload.dump(2) + "\n");
    } catch (const std::exception& inner) {
      err << "could not write diagnostic: " << inner.what() << '\n';
    }
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace pointlab::cli
