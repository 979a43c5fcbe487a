#include "fountain/pipeline.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "fountain/errors.hpp"

namespace fountain {
namespace fs = std::filesystem;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::optional<double> to_double(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

double setting_double(const std::string& key, const std::string& value) {
  const auto v = to_double(value);
  if (!v) throw ConfigError("setting '" + key + "' expects a number, got '" + value + "'");
  return *v;
}

std::uint64_t setting_uint(const std::string& key, const std::string& value) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size() || value.empty())
    throw ConfigError("setting '" + key + "' expects a non-negative integer, got '" +
                      value + "'");
  return v;
}

bool setting_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw ConfigError("setting '" + key + "' expects a boolean, got '" + value + "'");
}

std::string shortest(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

const char* name_of(Weighting w) { return w == Weighting::uniform ? "uniform" : "individual"; }
const char* name_of(CovarianceScaling c) {
  return c == CovarianceScaling::residual ? "residual" : "nominal";
}
const char* name_of(EpochOrigin o) { return o == EpochOrigin::mean ? "mean" : "first"; }
const char* name_of(IntervalKind k) {
  return k == IntervalKind::central ? "central" : "hdi";
}

}  // namespace

void AnalysisConfig::validate() const {
  if (!(epoch_step > 0.0)) throw ConfigError("epoch_step must be positive");
  if (!(interval_prob > 0.0 && interval_prob < 1.0))
    throw ConfigError("interval_prob must lie in (0,1)");
  if (with_drift && !(drift_prior_sigma > 0.0))
    throw ConfigError("drift_prior_sigma must be positive");
  if (!(quadrature.rel_tol > 0.0) || quadrature.max_depth < 1)
    throw ConfigError("quadrature settings out of range");
  if (!(sigma_nu > 0.0)) throw ConfigError("sigma_nu must be positive");
}

void apply_setting(AnalysisConfig& c, const std::string& key, const std::string& value) {
  if (key == "input") c.input = value;
  else if (key == "output_dir") c.output_dir = value;
  else if (key == "with_drift") c.with_drift = setting_bool(key, value);
  else if (key == "drift_prior_mean") c.drift_prior_mean = setting_double(key, value);
  else if (key == "drift_prior_sigma") c.drift_prior_sigma = setting_double(key, value);
  else if (key == "epoch_step") c.epoch_step = setting_double(key, value);
  else if (key == "epoch_origin") {
    if (value == "mean") c.epoch_origin = EpochOrigin::mean;
    else if (value == "first") c.epoch_origin = EpochOrigin::first;
    else throw ConfigError("epoch_origin must be 'mean' or 'first'");
  } else if (key == "interval_prob") c.interval_prob = setting_double(key, value);
  else if (key == "interval_kind") {
    if (value == "central") c.interval_kind = IntervalKind::central;
    else if (value == "hdi") c.interval_kind = IntervalKind::highest_density;
    else throw ConfigError("interval_kind must be 'central' or 'hdi'");
  } else if (key == "classical_weighting") {
    if (value == "uniform") c.classical_weighting = Weighting::uniform;
    else if (value == "individual") c.classical_weighting = Weighting::individual;
    else throw ConfigError("classical_weighting must be 'uniform' or 'individual'");
  } else if (key == "classical_covariance") {
    if (value == "residual") c.classical_covariance = CovarianceScaling::residual;
    else if (value == "nominal") c.classical_covariance = CovarianceScaling::nominal;
    else throw ConfigError("classical_covariance must be 'residual' or 'nominal'");
  } else if (key == "quad_rel_tol") c.quadrature.rel_tol = setting_double(key, value);
  else if (key == "quad_max_depth")
    c.quadrature.max_depth = static_cast<int>(setting_uint(key, value));
  else if (key == "sigma_nu") c.sigma_nu = setting_double(key, value);
  else if (key == "run_mc") c.run_mc = setting_bool(key, value);
  else if (key == "mc_runs") c.mc.n_runs = setting_uint(key, value);
  else if (key == "mc_seed") c.mc.seed = setting_uint(key, value);
  else if (key == "mc_init_a") c.mc.init_a = setting_double(key, value);
  else if (key == "mc_init_b") c.mc.init_b = setting_double(key, value);
  else if (key == "mc_x1") c.mc.x1 = setting_double(key, value);
  else if (key == "mc_x2") c.mc.x2 = setting_double(key, value);
  else if (key == "mc_y1") c.mc.y1_target = setting_double(key, value);
  else if (key == "mc_y2") c.mc.y2_target = setting_double(key, value);
  else if (key == "mc_chunk_size") c.mc.chunk_size = setting_uint(key, value);
  else if (key == "mc_threads") c.mc.threads = static_cast<unsigned>(setting_uint(key, value));
  else if (key == "mc_bins") {
    if (value == "auto") c.mc.bins.reset();
    else c.mc.bins = setting_uint(key, value);
  } else throw ConfigError("unknown setting '" + key + "'");
}

AnalysisConfig parse_config(std::istream& in, const AnalysisConfig& defaults,
                            const fs::path& base_dir) {
  AnalysisConfig c = defaults;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    const std::string body = trim(std::string_view(line).substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    apply_setting(c, key, value);
    if ((key == "input" || key == "output_dir") && !base_dir.empty()) {
      fs::path& p = key == "input" ? c.input : c.output_dir;
      if (p.is_relative()) p = base_dir / p;
    }
  }
  return c;
}

AnalysisConfig load_config(const fs::path& path, const AnalysisConfig& defaults) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  return parse_config(in, defaults, path.parent_path());
}

std::string config_text(const AnalysisConfig& c) {
  std::ostringstream os;
  os << "input = " << c.input.generic_string() << '\n'
     << "with_drift = " << (c.with_drift ? "true" : "false") << '\n'
     << "drift_prior_mean = " << shortest(c.drift_prior_mean) << '\n'
     << "drift_prior_sigma = " << shortest(c.drift_prior_sigma) << '\n'
     << "epoch_step = " << shortest(c.epoch_step) << '\n'
     << "epoch_origin = " << name_of(c.epoch_origin) << '\n'
     << "interval_prob = " << shortest(c.interval_prob) << '\n'
     << "interval_kind = " << name_of(c.interval_kind) << '\n'
     << "classical_weighting = " << name_of(c.classical_weighting) << '\n'
     << "classical_covariance = " << name_of(c.classical_covariance) << '\n'
     << "quad_rel_tol = " << shortest(c.quadrature.rel_tol) << '\n'
     << "quad_max_depth = " << c.quadrature.max_depth << '\n'
     << "sigma_nu = " << shortest(c.sigma_nu) << '\n'
     << "run_mc = " << (c.run_mc ? "true" : "false") << '\n'
     << "mc_runs = " << c.mc.n_runs << '\n'
     << "mc_seed = " << c.mc.seed << '\n'
     << "mc_init_a = " << shortest(c.mc.init_a) << '\n'
     << "mc_init_b = " << shortest(c.mc.init_b) << '\n'
     << "mc_x1 = " << shortest(c.mc.x1) << '\n'
     << "mc_x2 = " << shortest(c.mc.x2) << '\n'
     << "mc_y1 = " << shortest(c.mc.y1_target) << '\n'
     << "mc_y2 = " << shortest(c.mc.y2_target) << '\n'
     << "mc_chunk_size = " << c.mc.chunk_size << '\n'
     << "mc_bins = " << (c.mc.bins ? std::to_string(*c.mc.bins) : "auto") << '\n';
  return os.str();
}

CampaignDataset parse_dataset(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  CampaignDataset ds;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!have_header) {
      if (trim(line).empty()) continue;
      if (line != kCsvHeader)
        throw SchemaError("line " + std::to_string(line_no) + ": header must be '" +
                          kCsvHeader + "'");
      have_header = true;
      continue;
    }
    if (trim(line).empty()) continue;

    std::vector<std::pair<std::string_view, std::size_t>> fields;  // text, column
    std::size_t start = 0;
    const std::string_view view(line);
    while (true) {
      const auto comma = view.find(',', start);
      fields.emplace_back(view.substr(start, comma == std::string_view::npos
                                                  ? std::string_view::npos
                                                  : comma - start),
                          start + 1);
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (fields.size() < 5)
      throw ParseError(line_no, line.size() + 1, "expected 5 fields, found " +
                                                     std::to_string(fields.size()));
    if (fields.size() > 5)
      throw ParseError(line_no, fields[5].second, "expected 5 fields, found " +
                                                      std::to_string(fields.size()));

    double values[4];
    for (int i = 0; i < 4; ++i) {
      const auto& [text, col] = fields[static_cast<std::size_t>(i)];
      const auto v = to_double(text);
      if (!v || !std::isfinite(*v))
        throw ParseError(line_no, col, "not a number: '" + std::string(text) + "'");
      values[i] = *v;
    }
    MeasurementRecord r;
    r.density = values[0];
    r.density_sigma = values[1];
    r.frequency = values[2];
    r.sigma = values[3];
    const std::string_view role = fields[4].first;
    if (role == "low") r.role = DensityRole::low;
    else if (role == "high") r.role = DensityRole::high;
    else
      throw ParseError(line_no, fields[4].second,
                       "role must be 'low' or 'high', got '" + std::string(role) + "'");
    try {
      validate(r);
    } catch (const InvalidRecord& e) {
      throw SchemaError("line " + std::to_string(line_no) + ": " + e.what());
    }
    ds.records.push_back(r);
  }
  if (!have_header) throw SchemaError("input is empty");
  if (ds.records.empty()) throw SchemaError("input has a header but no records");

  double low_density = 0.0, low_frequency = 0.0;
  std::size_t n_low = 0;
  for (const auto& r : ds.records)
    if (r.role == DensityRole::low) {
      low_density += r.density;
      low_frequency += r.frequency;
      ++n_low;
    }
  if (n_low == 0) throw SchemaError("no low-density records to normalize against");
  ds.rho_low = low_density / static_cast<double>(n_low);
  ds.nu_low = low_frequency / static_cast<double>(n_low);
  if (std::abs(ds.rho_low - 1.0) > 1e-12) {
    for (auto& r : ds.records) {
      r.density /= ds.rho_low;
      r.density_sigma /= ds.rho_low;
    }
  } else {
    ds.rho_low = 1.0;
  }
  return ds;
}

void write_dataset(const CampaignDataset& dataset, std::ostream& out) {
  out << kCsvHeader << '\n';
  for (const auto& r : dataset.records)
    out << shortest(r.density) << ',' << shortest(r.density_sigma) << ','
        << shortest(r.frequency) << ',' << shortest(r.sigma) << ','
        << to_string(r.role) << '\n';
}

CampaignDataset reconstruct_epochs(CampaignDataset dataset, double record_step) {
  if (!(record_step > 0.0) || !std::isfinite(record_step))
    throw NonMonotoneEpoch("record step must be positive");
  for (std::size_t k = 0; k < dataset.records.size(); ++k)
    dataset.records[k].epoch = static_cast<double>(k) * record_step;
  dataset.epoch_step = record_step;
  return dataset;
}

CampaignDataset ingest(const fs::path& path, double epoch_step) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset " + path.string());
  CampaignDataset ds = reconstruct_epochs(parse_dataset(in), 0.5 * epoch_step);
  validate(ds);
  return ds;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  std::ostringstream os;
  os << "fnv1a64:" << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

double epoch_origin_of(const CampaignDataset& dataset, EpochOrigin origin) {
  if (dataset.records.empty()) throw EmptyDataset("dataset has no records");
  if (origin == EpochOrigin::first) return dataset.records.front().epoch;
  double sum = 0.0;
  for (const auto& r : dataset.records) sum += r.epoch;
  return sum / static_cast<double>(dataset.records.size());
}

LinearFit classical_fit(const CampaignDataset& dataset, const AnalysisConfig& config,
                        double epoch_origin) {
  const Eigen::MatrixXd design =
      build_design(dataset.records, config.with_drift, epoch_origin);
  Eigen::VectorXd s = sigmas(dataset.records);
  if (config.classical_weighting == Weighting::uniform) s.setOnes();
  LinearFit fit = weighted_least_squares(design, frequencies(dataset.records), s);
  if (config.classical_covariance == CovarianceScaling::residual) fit = scale_by_residuals(fit);
  return fit;
}

AnalysisOutcome analyze(const AnalysisConfig& config, const CampaignDataset& dataset) {
  config.validate();
  validate(dataset);

  AnalysisOutcome out;
  out.dataset = dataset;
  AnalysisReport& rep = out.report;
  rep.records = dataset.records.size();
  rep.rho_low = dataset.rho_low;
  rep.nu_low = dataset.nu_low;
  rep.sigma_nu = config.sigma_nu;
  rep.epoch_origin = epoch_origin_of(dataset, config.epoch_origin);
  rep.names = config.with_drift ? std::vector<std::string>{"a", "b", "c"}
                                : std::vector<std::string>{"a", "b"};

  std::ostringstream canonical;
  write_dataset(dataset, canonical);
  rep.dataset_hash = hash_hex(fnv1a64(canonical.str()));
  rep.config_hash = hash_hex(fnv1a64(config_text(config)));

  rep.classical = classical_fit(dataset, config, rep.epoch_origin);
  for (std::size_t i = 0; i < rep.names.size(); ++i) {
    const auto idx = static_cast<Eigen::Index>(i);
    rep.classical_params[rep.names[i]] = {rep.classical.params(idx),
                                          rep.classical.std_error(idx)};
  }

  JointModelOptions opts;
  opts.with_drift = config.with_drift;
  opts.epoch_origin = rep.epoch_origin;
  if (config.with_drift)
    opts.drift_prior = DriftPrior(config.drift_prior_mean, config.drift_prior_sigma);
  out.joint = joint_posterior_npairs(dataset.records, opts);
  for (const auto& name : rep.names) {
    out.marginals.push_back(marginalize(*out.joint, name, config.quadrature));
    rep.bayesian[name] =
        summarize(out.marginals.back(), config.interval_prob, config.interval_kind);
  }

  rep.uncertainty_reduction =
      1.0 - rep.bayesian.at("b").std / rep.classical_params.at("b").std;

  const double hz = config.sigma_nu * kCaesiumHz;
  for (const auto& name : rep.names) {
    const auto& c = rep.classical_params.at(name);
    const auto& b = rep.bayesian.at(name);
    rep.absolute[name + "/classical"] = {c.estimate * config.sigma_nu,
                                         c.std * config.sigma_nu, c.estimate * hz,
                                         c.std * hz};
    rep.absolute[name + "/bayesian"] = {b.mean * config.sigma_nu, b.std * config.sigma_nu,
                                        b.mean * hz, b.std * hz};
  }

  if (config.run_mc) {
    out.mc = inverse_mc(config.mc);
    MeasurementRecord low, high;
    low.density = config.mc.x1;
    low.frequency = config.mc.y1_target;
    high.density = config.mc.x2;
    high.frequency = config.mc.y2_target;
    high.role = DensityRole::high;
    out.mc_density = two_point_marginal(MeasurementPair(low, high), 1.0, config.quadrature);
    out.mc_comparison = compare_to_analytic(*out.mc, *out.mc_density);
    rep.mc = out.mc_comparison;
    rep.mc_acceptance_rate = out.mc->acceptance_rate;
  }
  return out;
}

namespace {

nlohmann::ordered_json value_json(double v) {
  // Non-finite values (e.g. a zero classical uncertainty) are reported as null.
  return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
}

}  // namespace

nlohmann::ordered_json report_to_json(const AnalysisReport& rep,
                                      const AnalysisConfig& config) {
  using json = nlohmann::ordered_json;
  json j;
  j["schema_version"] = kReportSchemaVersion;
  j["tool"] = {{"name", "fountain"}, {"version", kToolVersion}};
  j["provenance"] = {{"config_hash", rep.config_hash}, {"dataset_hash", rep.dataset_hash}};
  j["dataset"] = {{"records", rep.records},
                  {"rho_low", rep.rho_low},
                  {"nu_low_offset", rep.nu_low},
                  {"epoch_step_days", config.epoch_step},
                  {"record_step_days", 0.5 * config.epoch_step},
                  {"epoch_origin_days", rep.epoch_origin}};
  json model = {{"with_drift", config.with_drift},
                {"classical_weighting", name_of(config.classical_weighting)},
                {"classical_covariance", name_of(config.classical_covariance)},
                {"epoch_origin", name_of(config.epoch_origin)}};
  if (config.with_drift)
    model["drift_prior"] = {{"mean", config.drift_prior_mean},
                            {"sigma", config.drift_prior_sigma}};
  j["model"] = model;

  json classical;
  json params = json::object();
  for (const auto& name : rep.names) {
    const auto& p = rep.classical_params.at(name);
    params[name] = {{"estimate", value_json(p.estimate)}, {"std", value_json(p.std)}};
  }
  classical["parameters"] = params;
  json cov = json::array();
  for (Eigen::Index r = 0; r < rep.classical.covariance.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < rep.classical.covariance.cols(); ++c)
      row.push_back(value_json(rep.classical.covariance(r, c)));
    cov.push_back(row);
  }
  classical["covariance"] = cov;
  classical["chi2"] = value_json(rep.classical.chi2);
  classical["dof"] = rep.classical.dof;
  j["classical"] = classical;

  json bayes = json::object();
  for (const auto& name : rep.names) {
    const auto& s = rep.bayesian.at(name);
    bayes[name] = {{"mean", value_json(s.mean)},
                   {"std", value_json(s.std)},
                   {"mode", value_json(s.mode)},
                   {"interval",
                    {{"lo", value_json(s.interval.lo)},
                     {"hi", value_json(s.interval.hi)},
                     {"probability", s.interval.probability},
                     {"kind", name_of(config.interval_kind)}}}};
  }
  j["bayesian"] = bayes;
  j["uncertainty_reduction"] = value_json(rep.uncertainty_reduction);

  json abs;
  abs["sigma_nu"] = rep.sigma_nu;
  abs["nu_cs_hz"] = kCaesiumHz;
  for (const auto& [key, v] : rep.absolute)
    abs[key] = {{"mean_relative", value_json(v.mean_relative)},
                {"std_relative", value_json(v.std_relative)},
                {"mean_hz", value_json(v.mean_hz)},
                {"std_hz", value_json(v.std_hz)}};
  j["absolute"] = abs;

  if (rep.mc) {
    j["mc"] = {{"runs", config.mc.n_runs},
               {"seed", config.mc.seed},
               {"acceptance_rate", rep.mc_acceptance_rate},
               {"samples", rep.mc->samples},
               {"ks_distance", rep.mc->ks_distance},
               {"chi2", rep.mc->chi2},
               {"chi2_bins", rep.mc->chi2_bins},
               {"chi2_p_value", rep.mc->chi2_p_value}};
  }
  return j;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

namespace {

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

}  // namespace

fs::path write_mc_histogram(const McResult& result, const PosteriorDensity& density,
                            const fs::path& dir) {
  ensure_dir(dir);
  std::ostringstream os;
  os << "bin_lo,bin_hi,count,empirical_density,analytic_density\n";
  const Histogram& h = result.histogram;
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    const double lo = h.edges[i], hi = h.edges[i + 1];
    const double analytic = (density.cdf(hi) - density.cdf(lo)) / (hi - lo);
    os << shortest(lo) << ',' << shortest(hi) << ',' << h.counts[i] << ','
       << shortest(h.density(i)) << ',' << shortest(analytic) << '\n';
  }
  const fs::path path = dir / "mc_histogram.csv";
  write_text(path, os.str());
  return path;
}

std::vector<fs::path> emit_plot_data(const AnalysisOutcome& outcome, const fs::path& dir) {
  ensure_dir(dir);
  std::vector<fs::path> written;
  for (const auto& m : outcome.marginals) {
    std::ostringstream os;
    os << m.name() << ",density\n";
    for (double x : m.grid()) os << shortest(x) << ',' << shortest(m.pdf(x)) << '\n';
    written.push_back(dir / ("posterior_" + m.name() + ".csv"));
    write_text(written.back(), os.str());
  }

  const auto& rep = outcome.report;
  const double drift =
      rep.classical_params.count("c") ? rep.classical_params.at("c").estimate : 0.0;
  std::ostringstream os;
  os << "epoch,density,frequency,sigma,role\n";
  for (const auto& r : outcome.dataset.records) {
    const double t = r.epoch - rep.epoch_origin;
    os << shortest(t) << ',' << shortest(r.density) << ','
       << shortest(r.frequency - drift * t) << ',' << shortest(r.sigma) << ','
       << to_string(r.role) << '\n';
  }
  written.push_back(dir / "scatter_driftfree.csv");
  write_text(written.back(), os.str());

  if (outcome.mc && outcome.mc_density)
    written.push_back(write_mc_histogram(*outcome.mc, *outcome.mc_density, dir));
  return written;
}

AnalysisReport run_analysis(const AnalysisConfig& config) {
  config.validate();
  const CampaignDataset dataset = ingest(config.input, config.epoch_step);
  AnalysisOutcome outcome = analyze(config, dataset);
  emit_plot_data(outcome, config.output_dir);
  write_text(config.output_dir / "report.json",
             report_to_json(outcome.report, config).dump(2) + "\n");
  return outcome.report;
}

}  // namespace fountain
