#include "ppk/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "ppk/errors.hpp"
#include "ppk/io.hpp"

namespace ppk {

std::string_view name(Subcommand subcommand) noexcept {
  switch (subcommand) {
    case Subcommand::Simulate: return "simulate";
    case Subcommand::Estimate: return "estimate";
    case Subcommand::Krige: return "krige";
    case Subcommand::OptimalMesh: return "optimal-mesh";
    case Subcommand::Validate: return "validate";
  }
  return "?";
}

Subcommand parse_subcommand(std::string_view text) {
  for (Subcommand s : {Subcommand::Simulate, Subcommand::Estimate, Subcommand::Krige,
                       Subcommand::OptimalMesh, Subcommand::Validate}) {
    if (name(s) == text) return s;
  }
  fail(ErrorKind::Config, "unknown subcommand '" + std::string(text) +
                              "' (expected simulate, estimate, krige, optimal-mesh or validate)");
}

namespace {

struct Entry {
  std::string value;
  int line = 0;
};

using Sections = std::map<std::string, std::map<std::string, std::vector<Entry>>>;

const std::map<std::string, std::set<std::string>>& allowed_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"run",
       {"subcommand", "seed", "replicates", "cell_side", "approx", "sub_m", "out_dir", "threads",
        "clamp_negative", "dump_matrices", "max_expected_points"}},
      {"window", {"outer", "hole"}},
      {"process",
       {"type", "lambda", "kappa", "mu", "sigma", "margin_sigmas", "lambda_basic", "radius", "sigma_y",
        "range", "raster_side"}},
      {"input", {"pattern"}},
      {"model", {"source"}},
      {"validate", {"criteria"}},
  };
  return keys;
}

const std::map<std::string, std::set<std::string>>& process_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"poisson", {"lambda"}},
      {"thomas", {"kappa", "mu", "sigma", "margin_sigmas"}},
      {"matern2", {"lambda_basic", "radius"}},
      {"cox", {"lambda", "sigma_y", "range", "raster_side"}},
  };
  return keys;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

class Parser {
 public:
  Parser(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void error(int line, const std::string& msg) const {
    fail(ErrorKind::Config, source_ + ":" + std::to_string(line) + ": " + msg);
  }
  [[noreturn]] void error(const std::string& msg) const { fail(ErrorKind::Config, source_ + ": " + msg); }

  Sections parse(const std::string& text) const {
    Sections sections;
    std::istringstream in(text);
    std::string raw;
    std::string current;
    int line = 0;
    while (std::getline(in, raw)) {
      ++line;
      const auto hash = raw.find_first_of("#;");
      const std::string s = trim(std::string_view(raw).substr(0, hash));
      if (s.empty()) continue;
      if (s.front() == '[') {
        if (s.back() != ']') error(line, "malformed section header '" + s + "'");
        current = trim(std::string_view(s).substr(1, s.size() - 2));
        if (!allowed_keys().contains(current)) error(line, "unknown section [" + current + "]");
        sections[current];
        continue;
      }
      const auto eq = s.find('=');
      if (eq == std::string::npos) error(line, "expected 'key = value', got '" + s + "'");
      const std::string key = trim(std::string_view(s).substr(0, eq));
      const std::string value = trim(std::string_view(s).substr(eq + 1));
      if (current.empty()) error(line, "key '" + key + "' appears before any [section]");
      if (!allowed_keys().at(current).contains(key)) {
        error(line, "unknown key '" + key + "' in [" + current + "]");
      }
      if (value.empty()) error(line, "empty value for " + current + "." + key);
      auto& entries = sections[current][key];
      if (!entries.empty() && !(current == "window" && key == "hole")) {
        error(line, "duplicate key " + current + "." + key + " (first given on line " +
                        std::to_string(entries.front().line) + ")");
      }
      entries.push_back({value, line});
    }
    return sections;
  }

  double number(const Entry& e, const std::string& key) const {
    double v = 0.0;
    const char* first = e.value.data();
    const char* last = first + e.value.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || !std::isfinite(v)) {
      error(e.line, key + ": expected a number, got '" + e.value + "'");
    }
    return v;
  }

  std::uint64_t unsigned_integer(const Entry& e, const std::string& key) const {
    std::uint64_t v = 0;
    const char* first = e.value.data();
    const char* last = first + e.value.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) {
      error(e.line, key + ": expected a nonnegative integer, got '" + e.value + "'");
    }
    return v;
  }

  bool boolean(const Entry& e, const std::string& key) const {
    if (e.value == "true" || e.value == "yes" || e.value == "1") return true;
    if (e.value == "false" || e.value == "no" || e.value == "0") return false;
    error(e.line, key + ": expected true or false, got '" + e.value + "'");
  }

  Rect rect(const Entry& e, const std::string& key) const {
    std::istringstream in(e.value);
    std::vector<double> v;
    std::string tok;
    while (in >> tok) v.push_back(number({tok, e.line}, key));
    if (v.size() != 4) error(e.line, key + ": expected 'x0 y0 x1 y1'");
    if (!(v[2] > v[0] && v[3] > v[1])) error(e.line, key + ": needs x1 > x0 and y1 > y0");
    return {v[0], v[1], v[2], v[3]};
  }

 private:
  std::string source_;
};

const Entry* find(const Sections& s, const std::string& section, const std::string& key) {
  const auto sec = s.find(section);
  if (sec == s.end()) return nullptr;
  const auto it = sec->second.find(key);
  return it == sec->second.end() ? nullptr : &it->second.front();
}

void set_cell_side(RunConfig& cfg, const std::string& text, const std::function<double()>& as_number) {
  if (text == "auto") {
    cfg.cell_side_auto = true;
    cfg.cell_side.reset();
  } else {
    cfg.cell_side_auto = false;
    cfg.cell_side = as_number();
    if (!(*cfg.cell_side > 0.0)) fail(ErrorKind::Config, "cell_side must be positive or 'auto'");
  }
}

ProcessSpec parse_process(const Parser& p, const Sections& s, const Entry& type_entry) {
  const std::string& type = type_entry.value;
  const auto kt = process_keys().find(type);
  if (kt == process_keys().end()) {
    p.error(type_entry.line, "process.type: unknown process '" + type +
                                 "' (expected poisson, thomas, matern2 or cox)");
  }
  for (const auto& [key, entries] : s.at("process")) {
    if (key != "type" && !kt->second.contains(key)) {
      p.error(entries.front().line, "process." + key + " does not apply to a " + type + " process");
    }
  }
  auto get = [&](const std::string& key, double fallback) {
    const Entry* e = find(s, "process", key);
    return e ? p.number(*e, "process." + key) : fallback;
  };
  if (type == "poisson") return {PoissonSpec{get("lambda", PoissonSpec{}.lambda)}};
  if (type == "thomas") {
    const ThomasSpec d;
    return {ThomasSpec{get("kappa", d.kappa), get("mu", d.mu), get("sigma", d.sigma)}};
  }
  if (type == "matern2") {
    const MaternIISpec d;
    return {MaternIISpec{get("lambda_basic", d.lambda_basic), get("radius", d.radius)}};
  }
  const CoxSpec d;
  return {CoxSpec{get("lambda", d.lambda), get("sigma_y", d.sigma_y), get("range", d.range),
                  get("raster_side", d.raster_side)}};
}

std::string describe_window(const Window& w) {
  auto r = [](const Rect& x) {
    return format_double(x.x0) + " " + format_double(x.y0) + " " + format_double(x.x1) + " " +
           format_double(x.y1);
  };
  std::string out = r(w.outer());
  for (const Rect& h : w.holes()) out += " | hole " + r(h);
  return out;
}

}  // namespace

RunConfig parse_config_text(const std::string& text, const std::string& source,
                            const std::filesystem::path& base_dir, const FlagOverrides& flags) {
  const Parser p(source);
  const Sections s = p.parse(text);
  RunConfig cfg;

  if (const Entry* e = find(s, "run", "subcommand")) {
    try {
      cfg.subcommand = parse_subcommand(e->value);
    } catch (const Error& err) {
      p.error(e->line, err.what());
    }
  }
  if (const Entry* e = find(s, "run", "seed")) {
    cfg.seed = p.unsigned_integer(*e, "run.seed");
    cfg.seed_given = true;
  }
  if (const Entry* e = find(s, "run", "replicates")) {
    cfg.replicates = p.unsigned_integer(*e, "run.replicates");
    if (cfg.replicates < 1) p.error(e->line, "run.replicates must be at least 1");
  }
  if (const Entry* e = find(s, "run", "cell_side")) {
    try {
      set_cell_side(cfg, e->value, [&] { return p.number(*e, "run.cell_side"); });
    } catch (const Error& err) {
      p.error(e->line, err.what());
    }
  }
  if (const Entry* e = find(s, "run", "approx")) {
    try {
      cfg.approx = parse_approx(e->value);
    } catch (const Error& err) {
      p.error(e->line, err.what());
    }
  }
  if (const Entry* e = find(s, "run", "sub_m")) {
    const auto m = p.unsigned_integer(*e, "run.sub_m");
    if (m < 1 || m > 64) p.error(e->line, "run.sub_m must be between 1 and 64");
    cfg.sub_m = static_cast<int>(m);
  }
  if (const Entry* e = find(s, "run", "out_dir")) cfg.out_dir = base_dir / e->value;
  if (const Entry* e = find(s, "run", "threads")) {
    cfg.threads = static_cast<int>(p.unsigned_integer(*e, "run.threads"));
  }
  if (const Entry* e = find(s, "run", "clamp_negative")) cfg.clamp_negative = p.boolean(*e, "run.clamp_negative");
  if (const Entry* e = find(s, "run", "dump_matrices")) cfg.dump_matrices = p.boolean(*e, "run.dump_matrices");
  if (const Entry* e = find(s, "run", "max_expected_points")) {
    cfg.sim.max_expected_points = p.number(*e, "run.max_expected_points");
    if (!(cfg.sim.max_expected_points > 0.0)) p.error(e->line, "run.max_expected_points must be positive");
  }

  if (s.contains("window")) {
    const Entry* outer = find(s, "window", "outer");
    if (!outer) p.error("[window] needs an 'outer' rectangle");
    std::vector<Rect> holes;
    if (const auto it = s.at("window").find("hole"); it != s.at("window").end()) {
      for (const Entry& h : it->second) holes.push_back(p.rect(h, "window.hole"));
    }
    try {
      cfg.window = Window(p.rect(*outer, "window.outer"), std::move(holes));
    } catch (const Error& err) {
      p.error(outer->line, err.what());
    }
  }

  const Entry* type = find(s, "process", "type");
  const Entry* pattern = find(s, "input", "pattern");
  if (s.contains("process") && !type) p.error("[process] needs a 'type'");
  if (type && pattern) {
    p.error("both process.type (line " + std::to_string(type->line) + ") and input.pattern (line " +
            std::to_string(pattern->line) + ") are given; exactly one is allowed");
  }
  if (type) {
    cfg.process = parse_process(p, s, *type);
    if (const Entry* e = find(s, "process", "margin_sigmas")) {
      cfg.sim.thomas_margin_sigmas = p.number(*e, "process.margin_sigmas");
      if (!(cfg.sim.thomas_margin_sigmas >= 0.0)) p.error(e->line, "process.margin_sigmas must be >= 0");
    }
  }
  if (pattern) {
    cfg.input = base_dir / pattern->value;
    if (!std::filesystem::is_regular_file(*cfg.input)) {
      p.error(pattern->line, "input.pattern: file '" + cfg.input->string() + "' not found");
    }
  }
  if (const Entry* e = find(s, "model", "source")) {
    if (e->value == "plugin") cfg.model = ModelChoice::PlugIn;
    else if (e->value == "process") cfg.model = ModelChoice::Process;
    else if (e->value == "poisson") cfg.model = ModelChoice::Poisson;
    else p.error(e->line, "model.source: expected plugin, process or poisson, got '" + e->value + "'");
    if (cfg.model == ModelChoice::Process && !cfg.process) {
      p.error(e->line, "model.source = process needs a [process] section");
    }
  }
  if (const Entry* e = find(s, "validate", "criteria")) {
    std::string list = e->value;
    std::replace(list.begin(), list.end(), ',', ' ');
    std::istringstream in(list);
    std::string tok;
    while (in >> tok) {
      const auto id = p.unsigned_integer({tok, e->line}, "validate.criteria");
      if (id < 1 || id > 9) p.error(e->line, "validate.criteria: criteria are numbered 1 to 9");
      cfg.criteria.push_back(static_cast<int>(id));
    }
  }

  // Flags override the file.
  if (flags.subcommand) cfg.subcommand = parse_subcommand(*flags.subcommand);
  if (flags.seed) {
    cfg.seed = *flags.seed;
    cfg.seed_given = true;
  }
  if (flags.cell_side) {
    set_cell_side(cfg, *flags.cell_side, [&] { return p.number({*flags.cell_side, 0}, "--cell-side"); });
  }
  if (flags.approx) cfg.approx = parse_approx(*flags.approx);
  if (flags.threads) {
    if (*flags.threads < 0) fail(ErrorKind::Config, "--threads must be >= 0");
    cfg.threads = *flags.threads;
  }
  if (flags.clamp_negative) cfg.clamp_negative = true;
  if (flags.dump_matrices) cfg.dump_matrices = true;
  if (flags.out_dir) cfg.out_dir = *flags.out_dir;

  // Requirements of the chosen subcommand.
  const std::string sub(name(cfg.subcommand));
  if (cfg.subcommand != Subcommand::Validate) {
    if (!cfg.window) p.error(sub + ": a [window] section is required");
    if (!cfg.process && !cfg.input) p.error(sub + ": one of process.type or input.pattern is required");
    if (cfg.process) {
      try {
        cfg.process->validate(*cfg.window);
      } catch (const Error& err) {
        p.error(type->line, err.what());
      }
    }
  }
  if (cfg.subcommand == Subcommand::Simulate && !cfg.process) p.error("simulate: needs a [process] section");
  if (cfg.subcommand == Subcommand::Krige && !cfg.cell_side && !cfg.cell_side_auto) {
    p.error("krige: run.cell_side (a number or 'auto') is required");
  }
  if (cfg.model == ModelChoice::Process && cfg.process &&
      std::holds_alternative<MaternIISpec>(cfg.process->kind)) {
    p.error("model.source = process: the Matern II process has no closed-form pair correlation");
  }

  auto echo = [&cfg](std::string k, std::string v) { cfg.echo.emplace_back(std::move(k), std::move(v)); };
  echo("subcommand", sub);
  echo("seed", std::to_string(cfg.seed));
  echo("replicates", std::to_string(cfg.replicates));
  if (cfg.window) echo("window", describe_window(*cfg.window));
  if (cfg.process) echo("process", cfg.process->describe());
  if (cfg.input) echo("input", cfg.input->string());
  echo("cell_side", cfg.cell_side_auto ? "auto" : cfg.cell_side ? format_double(*cfg.cell_side) : "unset");
  echo("approx", std::string(name(cfg.approx)));
  echo("sub_m", std::to_string(cfg.sub_m));
  echo("model", cfg.model == ModelChoice::PlugIn ? "plugin"
                : cfg.model == ModelChoice::Process ? "process"
                                                    : "poisson");
  echo("threads", std::to_string(cfg.threads));
  echo("clamp_negative", cfg.clamp_negative ? "true" : "false");
  echo("dump_matrices", cfg.dump_matrices ? "true" : "false");
  echo("out_dir", cfg.out_dir.string());
  return cfg;
}

RunConfig parse_config(const std::optional<std::filesystem::path>& file, const FlagOverrides& flags) {
  if (!file) return parse_config_text("", "<flags>", std::filesystem::current_path(), flags);
  std::ifstream in(*file);
  if (!in) fail(ErrorKind::Config, "config file '" + file->string() + "' cannot be read");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config_text(text.str(), file->string(), file->parent_path(), flags);
}

}  // namespace ppk
