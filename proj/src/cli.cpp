#include "certfair/cli.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "certfair/checkpoint.hpp"
#include "certfair/dataset.hpp"
#include "certfair/evaluation.hpp"
#include "certfair/fair_init.hpp"
#include "certfair/trainer.hpp"
#include "certfair/verifier.hpp"

#ifndef CERTFAIR_VERSION
#define CERTFAIR_VERSION "dev"
#endif

namespace certfair::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::uint64_t fnv1a_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataIoError("cannot read " + path);
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  char buffer[1 << 16];
  while (in) {
    in.read(buffer, sizeof buffer);
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      hash ^= static_cast<unsigned char>(buffer[i]);
      hash *= 0x100000001b3ULL;
    }
  }
  return hash;
}

namespace {

struct Options {
  std::string data;
  std::string schema;
  std::string out = "certfair-out";
  std::string checkpoint;
  std::string domain;
  std::uint64_t seed = 0;
  std::size_t epochs = 100;
  double lr = 0.01;
  std::size_t batch = 64;
  std::string mode = "stochastic";
  std::size_t delta = 8;
  std::string gamma_schedule = "epoch";
  bool no_projection = false;
  double tol_fair = 1e-9;
  std::size_t budget_partitions = 10000;
  double budget_seconds = 60.0;
  std::size_t workers = 1;
  bool no_certificate = false;
  std::string init = "bernoulli";
  double phi = -10.0;
  double p_init = 0.5;
  double bias = 0.0;
  std::string init_scale = "fixed";
  std::size_t max_attempts = 10;
  double test_fraction = 0.2;
  std::vector<std::size_t> hidden = {64, 32, 16, 8, 4};
  std::size_t labels = 2;
  bool single_logit = false;
  std::string encoding;
  std::string format = "text";
  std::string method;
  std::vector<std::string> runs;
};

// Error classes mapped onto exit codes.
struct Failure : std::runtime_error {
  Failure(ExitCode c, const std::string& what) : std::runtime_error(what), code(c) {}
  ExitCode code;
};

std::string fixed(double v, int digits = 2) {
  if (std::isnan(v)) return "nan";
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

class Run {
 public:
  Run(const std::string& command, const Options& opt, const std::vector<std::string>& args,
      std::ostream& out, std::ostream& err)
      : command_(command), opt_(opt), args_(args), out_(out), err_(err) {}

  int execute();

 private:
  struct Data {
    DatasetSchema schema;
    Dataset all;
    Dataset train;
    Dataset test;
  };

  int cmd_init();
  int cmd_verify();
  int cmd_train(bool fair);
  int cmd_eval();
  int cmd_compare();
  int cmd_report();

  // Held-out split, or everything when the split is empty.
  static const Dataset& probe_set(const Data& d) { return d.test.size() > 0 ? d.test : d.all; }
  fs::path out_path(const std::string& name) const { return fs::path(opt_.out) / name; }
  void input(const std::string& role, const std::string& path);
  void output(const fs::path& path) { outputs_.push_back(path.string()); }
  Data load_data();
  TrainConfig train_config() const;
  InitConfig init_config() const;
  VerifyBudget budget() const;
  Parameters draw_verified(const NetworkSpec& spec, const InputDomain& domain,
                           const std::string& dataset);
  void save(const fs::path& path, const NetworkSpec& spec, const Parameters& params);
  void write_domain_file(const InputDomain& domain);
  void write_gamma_log(const TrainResult& result);
  EvalReport evaluate(const std::string& method, const Data& data, const NetworkSpec& spec,
                      const Parameters& params, const std::vector<EpochStats>& epochs) const;
  void print_report(const EvalReport& r);
  void write_manifest(int code, const std::string& message);
  json config_json() const;

  std::string command_;
  Options opt_;
  std::vector<std::string> args_;
  std::ostream& out_;
  std::ostream& err_;
  json inputs_ = json::array();
  std::vector<std::string> outputs_;
  std::vector<VerificationRow> verification_;
};

void Run::input(const std::string& role, const std::string& path) {
  if (!fs::exists(path)) throw DataIoError("no such file: " + path);
  std::ostringstream hash;
  hash << std::hex << std::setw(16) << std::setfill('0') << fnv1a_file(path);
  inputs_.push_back({{"role", role},
                     {"path", fs::absolute(path).lexically_normal().string()},
                     {"bytes", fs::file_size(path)},
                     {"fnv1a64", hash.str()}});
}

Run::Data Run::load_data() {
  if (opt_.data.empty() || opt_.schema.empty()) {
    throw Failure(kUsage, command_ + " needs --data and --schema");
  }
  input("schema", opt_.schema);
  input("data", opt_.data);
  Data d;
  d.schema = load_schema(opt_.schema);
  if (!opt_.encoding.empty()) d.schema.encoding = parse_encoding(opt_.encoding);
  const RawTable raw = load_csv(opt_.data, d.schema);
  d.all = preprocess(raw, d.schema);
  for (const auto& w : d.all.warnings) err_ << "warning: " << w << '\n';
  if (!(opt_.test_fraction >= 0.0 && opt_.test_fraction <= 1.0)) {
    throw Failure(kUsage, "--test-fraction must lie in [0, 1]");
  }
  auto [train, test] = split(d.all, opt_.test_fraction, opt_.seed);
  d.train = std::move(train);
  d.test = std::move(test);
  return d;
}

TrainConfig Run::train_config() const {
  TrainConfig c;
  c.lr = opt_.lr;
  c.batch = opt_.batch;
  c.epochs = opt_.epochs;
  c.seed = opt_.seed;
  c.mode = parse_train_mode(opt_.mode);
  c.delta = opt_.delta;
  c.schedule = parse_gamma_schedule(opt_.gamma_schedule);
  c.projection = !opt_.no_projection;
  c.tol_fair = opt_.tol_fair;
  c.validate();
  return c;
}

InitConfig Run::init_config() const {
  InitConfig c;
  c.scheme = parse_init_scheme(opt_.init);
  c.c = opt_.bias;
  c.p_init = opt_.p_init;
  c.phi = opt_.phi;
  if (opt_.init_scale != "fixed" && opt_.init_scale != "fan-in") {
    throw Failure(kUsage, "--init-scale must be fixed or fan-in");
  }
  c.fan_in_scaling = opt_.init_scale == "fan-in";
  c.seed = opt_.seed;
  c.validate();
  return c;
}

VerifyBudget Run::budget() const {
  VerifyBudget b;
  b.max_partitions = opt_.budget_partitions;
  b.max_seconds = opt_.budget_seconds;
  b.use_certificate = !opt_.no_certificate;
  b.workers = std::max<std::size_t>(1, opt_.workers);
  return b;
}

Parameters Run::draw_verified(const NetworkSpec& spec, const InputDomain& domain,
                              const std::string& dataset) {
  try {
    InitResult r = init_until_verified(spec, init_config(), domain, budget(), opt_.max_attempts);
    const auto& st = r.verdict.stats();
    verification_.push_back({dataset, "Provably fair", st.partitions, st.seconds, std::nan("")});
    out_ << "init: verified after " << r.attempts << " attempt(s), " << st.partitions
         << " partition(s), " << fixed(st.seconds, 3) << " s"
         << (st.by_certificate ? " (structural certificate)" : "") << '\n';
    return std::move(r.params);
  } catch (const InitExhausted& e) {
    throw Failure(kVerificationExhausted, e.what());
  }
}

void Run::save(const fs::path& path, const NetworkSpec& spec, const Parameters& params) {
  if (opt_.format != "text" && opt_.format != "binary") {
    throw Failure(kUsage, "--format must be text or binary");
  }
  save_checkpoint(path, Checkpoint{spec, params},
                  opt_.format == "binary" ? CheckpointFormat::kBinary : CheckpointFormat::kText);
  output(path);
}

void Run::write_domain_file(const InputDomain& domain) {
  const auto path = out_path("domain.txt");
  std::ofstream f(path);
  if (!f) throw DataIoError("cannot write " + path.string());
  write_domain(f, domain);
  output(path);
}

void Run::write_gamma_log(const TrainResult& result) {
  const auto path = out_path("gamma.csv");
  std::ofstream f(path);
  if (!f) throw DataIoError("cannot write " + path.string());
  f.precision(17);
  f << "epoch,step,frontier_neurons,equations,gamma,keep_probability,residual,feasible\n";
  for (const auto& g : result.gamma_reports) {
    f << g.epoch << ',' << g.step << ',' << g.frontier_neurons << ',' << g.equations << ','
      << g.solution.gamma << ',' << g.solution.keep_probability << ',' << g.solution.residual
      << ',' << (g.solution.feasible ? 1 : 0) << '\n';
  }
  output(path);
}

EvalReport Run::evaluate(const std::string& method, const Data& data, const NetworkSpec& spec,
                         const Parameters& params, const std::vector<EpochStats>& epochs) const {
  const Dataset& probe = probe_set(data);
  const auto fair = empirical_fairness(spec, params, probe);
  EvalReport r;
  r.dataset = data.schema.name;
  r.attribute = data.all.attribute;
  r.method = method;
  r.fairness_pct = fair.fairness_pct;
  r.discriminatory_count = fair.discriminatory;
  r.accuracy_pct = accuracy(spec, params, probe);
  if (!epochs.empty()) {
    r.total_seconds = epochs.back().seconds;
    r.steps_per_sec =
        r.total_seconds > 0.0 ? static_cast<double>(epochs.back().epoch) / r.total_seconds : 0.0;
  }
  return r;
}

void Run::print_report(const EvalReport& r) {
  out_ << r.dataset << " (" << r.attribute << ") " << r.method << ": fairness "
       << fixed(r.fairness_pct) << "% (" << r.discriminatory_count << " discriminatory), accuracy "
       << fixed(r.accuracy_pct) << "%, " << fixed(r.total_seconds) << " s\n";
}

int Run::cmd_init() {
  NetworkSpec spec;
  InputDomain domain;
  if (!opt_.domain.empty()) {
    input("domain", opt_.domain);
    domain = load_domain(opt_.domain);
    spec = network_for(domain, opt_.labels, opt_.hidden, opt_.single_logit);
  } else {
    const Data d = load_data();
    domain = extract_domain(d.all);
    spec = network_for(d.all, opt_.hidden, opt_.single_logit);
  }
  const Parameters params = initialize(spec, init_config());
  const auto cert = structural_certificate(spec, params);
  const auto path = opt_.checkpoint.empty() ? out_path("init.ckpt") : fs::path(opt_.checkpoint);
  save(path, spec, params);
  write_domain_file(domain);
  out_ << "init: " << opt_.init << " scheme, " << params.count() << " parameters, certificate "
       << (cert.pass ? "holds" : "fails") << " (spread " << cert.spread << ") -> " << path.string()
       << '\n';
  return kOk;
}

int Run::cmd_verify() {
  if (opt_.checkpoint.empty()) throw Failure(kUsage, "verify needs --checkpoint");
  input("checkpoint", opt_.checkpoint);
  const Checkpoint ckpt = load_checkpoint(opt_.checkpoint);
  InputDomain domain;
  std::optional<Data> data;
  if (!opt_.data.empty()) data = load_data();
  if (!opt_.domain.empty()) {
    input("domain", opt_.domain);
    domain = load_domain(opt_.domain);
  } else if (data) {
    domain = extract_domain(data->all);
  } else if (!opt_.schema.empty()) {
    input("schema", opt_.schema);
    domain = domain_from_schema(load_schema(opt_.schema));
  } else {
    throw Failure(kUsage, "verify needs --domain, --schema or --data");
  }
  const Verdict verdict = verify(ckpt.spec, ckpt.params, domain, budget());
  const auto& st = verdict.stats();
  VerificationRow row;
  row.dataset = data ? data->schema.name : fs::path(opt_.checkpoint).stem().string();
  row.verdict = verdict.tag() == VerdictTag::kVerified ? "Provably fair" : to_string(verdict.tag());
  row.partitions = st.partitions;
  row.seconds = st.seconds;
  row.accuracy_pct = std::nan("");
  if (data) {
    row.accuracy_pct = accuracy(ckpt.spec, ckpt.params, probe_set(*data));
  }
  out_ << "dataset,verdict,partitions,seconds,accuracy_pct\n"
       << row.dataset << ',' << row.verdict << ',' << row.partitions << ',' << fixed(row.seconds, 3)
       << ',' << fixed(row.accuracy_pct) << '\n';
  if (const auto& cex = verdict.counterexample()) {
    out_ << "counterexample: s=" << cex->s1 << " -> " << cex->label1 << ", s=" << cex->s2 << " -> "
         << cex->label2 << '\n';
  }
  for (const auto& p : emit_report(opt_.out, {}, {row})) output(p);
  switch (verdict.tag()) {
    case VerdictTag::kVerified:
      return kOk;
    case VerdictTag::kFalsified:
      return kFalsified;
    case VerdictTag::kUndecided:
      return kUndecided;
  }
  return kUndecided;
}

int Run::cmd_train(bool fair) {
  const TrainConfig config = train_config();
  Data d = load_data();
  const NetworkSpec spec = network_for(d.all, opt_.hidden, opt_.single_logit);
  const InputDomain domain = extract_domain(d.all);
  write_domain_file(domain);
  const Parameters p0 = fair ? draw_verified(spec, domain, d.schema.name)
                             : initialize(spec, init_config());
  if (fair) verification_.back().accuracy_pct = accuracy(spec, p0, probe_set(d));
  save(out_path("init.ckpt"), spec, p0);

  TrainResult result;
  try {
    result = fair ? train_fair(spec, p0, d.train, config, &d.test)
                  : train_erm(spec, p0, d.train, config, &d.test);
  } catch (const TrainingHalted& e) {
    throw Failure(kGammaInfeasible, e.what());
  }
  const std::string method = opt_.method.empty() ? (fair ? "Ours" : "ERM") : opt_.method;
  const auto path = opt_.checkpoint.empty() ? out_path("model.ckpt") : fs::path(opt_.checkpoint);
  save(path, spec, result.params);
  if (fair) write_gamma_log(result);
  const EvalReport report = evaluate(method, d, spec, result.params, result.epochs);
  for (const auto& p : emit_report(opt_.out, {report}, verification_, {{method, result.epochs}})) {
    output(p);
  }
  print_report(report);
  if (fair) {
    const auto cert = structural_certificate(spec, result.params);
    out_ << "certificate spread " << cert.spread << ", " << result.rollbacks << " rollback(s), "
         << result.projections << " projection(s)\n";
  }
  return kOk;
}

int Run::cmd_eval() {
  if (opt_.checkpoint.empty()) throw Failure(kUsage, "eval needs --checkpoint");
  input("checkpoint", opt_.checkpoint);
  const Checkpoint ckpt = load_checkpoint(opt_.checkpoint);
  const Data d = load_data();
  if (ckpt.spec.feature_width() != d.all.feature_width()) {
    throw Failure(kSchemaError, "checkpoint expects " + std::to_string(ckpt.spec.feature_width()) +
                                    " features, data provides " +
                                    std::to_string(d.all.feature_width()));
  }
  const std::string method =
      opt_.method.empty() ? fs::path(opt_.checkpoint).stem().string() : opt_.method;
  const EvalReport report = evaluate(method, d, ckpt.spec, ckpt.params, {});
  for (const auto& p : emit_report(opt_.out, {report})) output(p);
  print_report(report);
  return kOk;
}

int Run::cmd_compare() {
  const TrainConfig config = train_config();
  Data d = load_data();
  const NetworkSpec spec = network_for(d.all, opt_.hidden, opt_.single_logit);
  const InputDomain domain = extract_domain(d.all);
  write_domain_file(domain);
  const Parameters p0 = draw_verified(spec, domain, d.schema.name);
  verification_.back().accuracy_pct = accuracy(spec, p0, probe_set(d));

  TrainResult fair;
  try {
    fair = train_fair(spec, p0, d.train, config, &d.test);
  } catch (const TrainingHalted& e) {
    throw Failure(kGammaInfeasible, e.what());
  }
  const TrainResult erm = train_erm(spec, p0, d.train, config, &d.test);
  save(out_path("fair.ckpt"), spec, fair.params);
  save(out_path("erm.ckpt"), spec, erm.params);
  write_gamma_log(fair);

  const std::vector<EvalReport> reports = {evaluate("Ours", d, spec, fair.params, fair.epochs),
                                           evaluate("ERM", d, spec, erm.params, erm.epochs)};
  for (const auto& p : emit_report(opt_.out, reports, verification_,
                                   {{"Ours", fair.epochs}, {"ERM", erm.epochs}})) {
    output(p);
  }
  for (const auto& r : reports) print_report(r);

  const TimingRatio t = timing_ratio(fair.epochs, erm.epochs);
  const json timing = {{"fair_seconds", t.fair_seconds},
                       {"erm_seconds", t.erm_seconds},
                       {"ratio", t.ratio},
                       {"per_epoch_ratio", t.per_epoch_ratio},
                       {"fair_steps_per_sec", t.fair_steps_per_sec},
                       {"erm_steps_per_sec", t.erm_steps_per_sec},
                       {"fair_epoch_spread", epoch_time_spread(fair.epochs)},
                       {"erm_epoch_spread", epoch_time_spread(erm.epochs)}};
  const auto path = out_path("timing.json");
  std::ofstream f(path);
  if (!f) throw DataIoError("cannot write " + path.string());
  f << timing.dump(2) << '\n';
  output(path);
  out_ << "timing: fair " << fixed(t.fair_seconds) << " s, ERM " << fixed(t.erm_seconds)
       << " s, ratio " << fixed(t.ratio, 4) << ", max/median epoch time "
       << fixed(epoch_time_spread(fair.epochs), 3) << '\n';
  return kOk;
}

int Run::cmd_report() {
  if (opt_.runs.empty()) throw Failure(kUsage, "report needs at least one run directory");
  std::vector<EvalReport> reports;
  std::vector<VerificationRow> rows;
  std::vector<std::pair<std::string, std::vector<EpochStats>>> curves;
  for (const auto& dir : opt_.runs) {
    const std::string tag = fs::path(dir).lexically_normal().filename().string();
    auto open = [&](const std::string& name) -> std::optional<std::ifstream> {
      const auto path = fs::path(dir) / name;
      if (!fs::exists(path)) return std::nullopt;
      input(name, path.string());
      return std::ifstream(path);
    };
    bool found = false;
    if (auto f = open("table2.csv")) {
      for (auto& r : read_reports(*f)) reports.push_back(std::move(r));
      found = true;
    }
    if (auto f = open("table1.csv")) {
      for (auto& r : read_verification_rows(*f)) rows.push_back(std::move(r));
      found = true;
    }
    if (auto f = open("curves.csv")) {
      for (auto& [method, st] : read_curves(*f)) {
        const std::string key = opt_.runs.size() > 1 ? tag + "/" + method : method;
        if (curves.empty() || curves.back().first != key) curves.push_back({key, {}});
        curves.back().second.push_back(st);
      }
      found = true;
    }
    if (!found) throw DataIoError("no run logs in " + dir);
  }
  for (const auto& p : emit_report(opt_.out, reports, rows, curves)) output(p);
  out_ << "report: " << reports.size() << " result row(s), " << rows.size()
       << " verification row(s), " << curves.size() << " curve(s) -> " << opt_.out << '\n';
  return kOk;
}

json Run::config_json() const {
  return {{"data", opt_.data},
          {"schema", opt_.schema},
          {"out", opt_.out},
          {"checkpoint", opt_.checkpoint},
          {"domain", opt_.domain},
          {"seed", opt_.seed},
          {"epochs", opt_.epochs},
          {"lr", opt_.lr},
          {"batch", opt_.batch},
          {"mode", opt_.mode},
          {"delta", opt_.delta},
          {"gamma_schedule", opt_.gamma_schedule},
          {"projection", !opt_.no_projection},
          {"tol_fair", opt_.tol_fair},
          {"budget_partitions", opt_.budget_partitions},
          {"budget_seconds", opt_.budget_seconds},
          {"workers", opt_.workers},
          {"use_certificate", !opt_.no_certificate},
          {"init", opt_.init},
          {"phi", opt_.phi},
          {"p_init", opt_.p_init},
          {"bias", opt_.bias},
          {"init_scale", opt_.init_scale},
          {"max_attempts", opt_.max_attempts},
          {"test_fraction", opt_.test_fraction},
          {"hidden", opt_.hidden},
          {"labels", opt_.labels},
          {"single_logit", opt_.single_logit},
          {"encoding", opt_.encoding},
          {"format", opt_.format},
          {"method", opt_.method},
          {"runs", opt_.runs}};
}

void Run::write_manifest(int code, const std::string& message) {
  std::error_code ec;
  fs::create_directories(opt_.out, ec);
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::ostringstream stamp;
  stamp << std::put_time(std::gmtime(&now), "%Y-%m-%dT%H:%M:%SZ");
  const json manifest = {{"tool", "fairtrain"},
                         {"version", CERTFAIR_VERSION},
                         {"command", command_},
                         {"argv", args_},
                         {"config", config_json()},
                         {"inputs", inputs_},
                         {"outputs", outputs_},
                         {"deterministic", opt_.workers <= 1},
                         {"exit_code", code},
                         {"message", message},
                         {"finished_utc", stamp.str()}};
  std::ofstream f(fs::path(opt_.out) / "manifest.json");
  if (!f) {
    err_ << "warning: cannot write manifest in " << opt_.out << '\n';
    return;
  }
  f << manifest.dump(2) << '\n';
}

int Run::execute() {
  int code = kOk;
  std::string message = "ok";
  try {
    std::error_code ec;
    fs::create_directories(opt_.out, ec);
    if (ec) throw DataIoError("cannot create " + opt_.out + ": " + ec.message());
    if (command_ == "init") code = cmd_init();
    else if (command_ == "verify") code = cmd_verify();
    else if (command_ == "train") code = cmd_train(true);
    else if (command_ == "erm") code = cmd_train(false);
    else if (command_ == "eval") code = cmd_eval();
    else if (command_ == "compare") code = cmd_compare();
    else if (command_ == "report") code = cmd_report();
    if (code == kFalsified) message = "falsified";
    if (code == kUndecided) message = "undecided";
  } catch (const Failure& e) {
    code = e.code;
    message = e.what();
  } catch (const DataIoError& e) {
    code = kIoError;
    message = e.what();
  } catch (const CheckpointError& e) {
    code = kIoError;
    message = e.what();
  } catch (const fs::filesystem_error& e) {
    code = kIoError;
    message = e.what();
  } catch (const SchemaError& e) {
    code = kSchemaError;
    message = e.what();
  } catch (const DomainError& e) {
    code = kSchemaError;
    message = e.what();
  } catch (const ShapeError& e) {
    code = kSchemaError;
    message = e.what();
  } catch (const std::invalid_argument& e) {
    code = kUsage;
    message = e.what();
  } catch (const std::exception& e) {
    code = kUsage;
    message = e.what();
  }
  if (code != kOk && code != kFalsified && code != kUndecided) {
    const char* kind = code == kIoError            ? "I/O error"
                       : code == kSchemaError      ? "schema error"
                       : code == kGammaInfeasible  ? "infeasible gamma"
                       : code == kVerificationExhausted ? "verification exhausted"
                                                   : "error";
    err_ << "fairtrain " << command_ << ": " << kind << ": " << message << '\n';
  }
  write_manifest(code, message);
  return code;
}

void add_data(CLI::App* sub, Options& o) {
  sub->add_option("--data", o.data, "CSV file");
  sub->add_option("--schema", o.schema, "Dataset schema file");
  sub->add_option("--test-fraction", o.test_fraction, "Held-out share")->capture_default_str();
  sub->add_option("--encoding", o.encoding, "Override the schema's sensitive encoding")
      ->check(CLI::IsMember({"onehot", "signed"}));
}

void add_network(CLI::App* sub, Options& o) {
  sub->add_option("--hidden", o.hidden, "Hidden layer widths")->delimiter(',')->capture_default_str();
  sub->add_flag("--single-logit", o.single_logit, "One output logit for binary labels");
  sub->add_option("--format", o.format, "Checkpoint format")
      ->check(CLI::IsMember({"text", "binary"}))
      ->capture_default_str();
}

void add_init(CLI::App* sub, Options& o) {
  sub->add_option("--init", o.init, "Initialization scheme")
      ->check(CLI::IsMember({"zero", "bernoulli"}))
      ->capture_default_str();
  sub->add_option("--phi", o.phi, "Weight magnitude exponent");
  sub->add_option("--p-init", o.p_init, "Probability of a positive weight")->capture_default_str();
  sub->add_option("--bias", o.bias, "Bias constant of the zero scheme")->capture_default_str();
  sub->add_option("--init-scale", o.init_scale, "fixed: e^phi; fan-in: e^phi / sqrt(fan-in)")
      ->check(CLI::IsMember({"fixed", "fan-in"}));
}

void add_budget(CLI::App* sub, Options& o) {
  sub->add_option("--budget-partitions", o.budget_partitions)->capture_default_str();
  sub->add_option("--budget-seconds", o.budget_seconds)->capture_default_str();
  sub->add_option("--workers", o.workers, "Verifier threads")->capture_default_str();
  sub->add_flag("--no-certificate", o.no_certificate, "Skip the structural certificate");
  sub->add_option("--max-attempts", o.max_attempts, "Initializations tried before giving up")
      ->capture_default_str();
}

void add_training(CLI::App* sub, Options& o) {
  sub->add_option("--epochs", o.epochs)->capture_default_str();
  sub->add_option("--lr", o.lr)->capture_default_str();
  sub->add_option("--batch", o.batch)->capture_default_str();
  sub->add_option("--mode", o.mode)
      ->check(CLI::IsMember({"stochastic", "expectation"}))
      ->capture_default_str();
  sub->add_option("--delta", o.delta, "Resampling passes per batch")->capture_default_str();
  sub->add_option("--gamma-schedule", o.gamma_schedule)
      ->check(CLI::IsMember({"epoch", "step"}))
      ->capture_default_str();
  sub->add_flag("--no-projection", o.no_projection, "Reject breaking steps instead of projecting");
  sub->add_option("--tol-fair", o.tol_fair)->capture_default_str();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Certified individually fair training", "fairtrain"};
  app.require_subcommand(1);
  app.set_version_flag("--version", CERTFAIR_VERSION);
  app.add_option("--out", o.out, "Output directory")->capture_default_str();
  app.add_option("--seed", o.seed)->capture_default_str();

  auto* init = app.add_subcommand("init", "Draw and save an initialization");
  add_data(init, o);
  add_network(init, o);
  add_init(init, o);
  init->add_option("--domain", o.domain, "Domain file instead of --data/--schema");
  init->add_option("--labels", o.labels, "Number of labels with --domain")->capture_default_str();
  init->add_option("--checkpoint", o.checkpoint, "Output checkpoint path");

  auto* verify = app.add_subcommand("verify", "Verify a checkpoint over an input domain");
  add_data(verify, o);
  add_budget(verify, o);
  verify->add_option("--checkpoint", o.checkpoint)->required();
  verify->add_option("--domain", o.domain, "Domain file");

  std::vector<CLI::App*> trainers;
  trainers.push_back(app.add_subcommand("train", "Verified init, then fairness-preserving training"));
  trainers.push_back(app.add_subcommand("erm", "Baseline training"));
  trainers.push_back(app.add_subcommand("compare", "Train both and report the timing ratio"));
  for (auto* sub : trainers) {
    add_data(sub, o);
    add_network(sub, o);
    add_init(sub, o);
    add_budget(sub, o);
    add_training(sub, o);
    sub->add_option("--method", o.method, "Method label in the result table");
    if (sub->get_name() != "compare") sub->add_option("--checkpoint", o.checkpoint, "Output checkpoint");
  }

  auto* eval = app.add_subcommand("eval", "Fairness and accuracy of a checkpoint");
  add_data(eval, o);
  eval->add_option("--checkpoint", o.checkpoint)->required();
  eval->add_option("--method", o.method, "Method label in the result table");

  auto* report = app.add_subcommand("report", "Merge run logs into result CSVs");
  report->add_option("runs", o.runs, "Run directories")->required();

  // Option values may also follow the subcommand.
  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kUsage;
  }

  CLI::App* chosen = app.get_subcommands().front();
  const std::string command = chosen->get_name();
  // Training starts from a zero-mean, small-variance draw; init alone
  // reproduces the fixed e^phi scale.
  const bool training = command == "train" || command == "erm" || command == "compare";
  auto given = [&](const std::string& name) {
    const auto* opt = chosen->get_option_no_throw(name);
    return opt != nullptr && opt->count() > 0;
  };
  if (!given("--init-scale")) o.init_scale = training ? "fan-in" : "fixed";
  if (!given("--phi")) o.phi = o.init_scale == "fan-in" ? 0.0 : -10.0;

  Run runner(command, o, args, out, err);
  return runner.execute();
}

}  // namespace certfair::cli
