#include "whardy/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <variant>

namespace whardy {

namespace {

using Slot = std::variant<double*, int*, long*, bool*, std::string*, std::vector<double>*, std::optional<double>*,
                          std::optional<WeightKind>*, Task*>;

struct Field {
  std::string_view section;
  std::string_view key;
  Slot slot;
};

std::vector<Field> fields(RunConfig& c) {
  auto& p = c.profile;
  auto& h = c.hypotheses;
  auto& s = c.spectrum;
  auto& w = c.sweep;
  auto& sh = c.sharpness;
  auto& e = c.evolve.config;
  return {
      {"run", "task", &c.task},
      {"run", "out", &c.out},
      {"family", "kind", &c.family.kind},
      {"family", "dimension", &c.family.dimension},
      {"family", "b", &c.family.b},
      {"family", "m", &c.family.m},
      {"family", "beta", &c.family.beta},
      {"family", "alpha", &c.family.alpha},
      {"profile", "ladder_k_min", &p.ladder_k_min},
      {"profile", "ladder_k_max", &p.ladder_k_max},
      {"profile", "tail_window", &p.tail_window},
      {"profile", "oscillation_tol", &p.oscillation_tol},
      {"profile", "tail_dense_samples", &p.tail_dense_samples},
      {"profile", "n0_bisect_tol", &p.n0_bisect_tol},
      {"profile", "n0_delta_lo", &p.n0_delta_lo},
      {"profile", "n0_delta_hi", &p.n0_delta_hi},
      {"profile", "n0_agreement", &p.n0_agreement},
      {"hypotheses", "iii_radii", &h.iii_radii},
      {"hypotheses", "iii_outer", &h.iii_outer},
      {"hypotheses", "iii_mesh", &h.iii_mesh},
      {"hypotheses", "iv_k_max", &h.iv_k_max},
      {"hypotheses", "iv_min_tail", &h.iv_min_tail},
      {"hypotheses", "h3p_j_max", &h.h3p_j_max},
      {"hypotheses", "h3p_threshold", &h.h3p_threshold},
      {"hypotheses", "cond1_k_min", &h.cond1_k_min},
      {"hypotheses", "cond1_k_max", &h.cond1_k_max},
      {"hypotheses", "cond1_p", &h.cond1_p},
      {"hypotheses", "cond1_exponent_tol", &h.cond1_exponent_tol},
      {"spectrum", "c", &s.c},
      {"spectrum", "r_min", &s.r_min},
      {"spectrum", "r_max", &s.r_max},
      {"spectrum", "n_points", &s.n_points},
      {"spectrum", "rungs", &s.ladder.rungs},
      {"spectrum", "r_min_factor", &s.ladder.r_min_factor},
      {"spectrum", "n_factor", &s.ladder.n_factor},
      {"spectrum", "divergence_ratio", &s.ladder.divergence_ratio},
      {"spectrum", "max_inverse_iterations", &s.ladder.eigen.max_inverse_iterations},
      {"spectrum", "residual_tol", &s.ladder.eigen.residual_tol},
      {"sweep", "c_lo", &w.c_lo},
      {"sweep", "c_hi", &w.c_hi},
      {"sweep", "tol", &w.tol},
      {"sweep", "r_min", &w.grid.r_min},
      {"sweep", "r_max", &w.grid.r_max},
      {"sweep", "n_points", &w.grid.n_points},
      {"sharpness", "c_offset", &sh.c_offset},
      {"sharpness", "gamma_fraction", &sh.gamma_fraction},
      {"sharpness", "n_values", &sh.n_values},
      {"sharpness", "phi_gamma_c", &sh.phi_gamma_c},
      {"sharpness", "phi_gamma_j_max", &sh.phi_gamma.j_max},
      {"sharpness", "phi_gamma_threshold", &sh.phi_gamma.divergence_threshold},
      {"sharpness", "phi_gamma_tail", &sh.phi_gamma.tail},
      {"evolve", "c", &c.evolve.c},
      {"evolve", "auto_below", &c.evolve.auto_below},
      {"evolve", "auto_above", &c.evolve.auto_above},
      {"evolve", "caps", &e.caps},
      {"evolve", "T", &e.T},
      {"evolve", "dt", &e.dt},
      {"evolve", "r_min", &e.r_min},
      {"evolve", "r_max", &e.r_max},
      {"evolve", "n_points", &e.n_points},
      {"evolve", "u0_lo", &e.u0_lo},
      {"evolve", "u0_hi", &e.u0_hi},
      {"evolve", "blowup_ratio", &e.blowup_ratio},
      {"evolve", "envelope_rtol", &e.envelope_rtol},
      {"evolve", "contraction_ratio", &e.contraction_ratio},
      {"evolve", "max_steps", &e.max_steps},
      {"evolve", "control_run", &e.control_run},
      {"evolve", "spectral_check", &e.spectral_check},
  };
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <class T>
bool parse_number(std::string_view s, T& out) {
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

std::string show(const Slot& slot) {
  return std::visit(
      [](auto* p) -> std::string {
        using T = std::remove_pointer_t<decltype(p)>;
        if constexpr (std::is_same_v<T, double>) {
          return fmt_double(*p);
        } else if constexpr (std::is_same_v<T, int> || std::is_same_v<T, long>) {
          return std::to_string(*p);
        } else if constexpr (std::is_same_v<T, bool>) {
          return *p ? "true" : "false";
        } else if constexpr (std::is_same_v<T, std::string>) {
          return *p;
        } else if constexpr (std::is_same_v<T, std::vector<double>>) {
          if (p->empty()) return "auto";
          std::string s;
          for (std::size_t i = 0; i < p->size(); ++i) s += (i ? ", " : "") + fmt_double((*p)[i]);
          return s;
        } else if constexpr (std::is_same_v<T, std::optional<double>>) {
          return *p ? fmt_double(**p) : "auto";
        } else if constexpr (std::is_same_v<T, std::optional<WeightKind>>) {
          return *p ? std::string(to_string(**p)) : "";
        } else {
          return std::string(to_string(*p));
        }
      },
      slot);
}

// returns an error message, empty on success
std::string assign(const Slot& slot, std::string_view v) {
  return std::visit(
      [v](auto* p) -> std::string {
        using T = std::remove_pointer_t<decltype(p)>;
        if constexpr (std::is_same_v<T, double> || std::is_same_v<T, int> || std::is_same_v<T, long>) {
          T x{};
          if (!parse_number(v, x)) return "expected a number";
          *p = x;
        } else if constexpr (std::is_same_v<T, bool>) {
          if (v == "true" || v == "1")
            *p = true;
          else if (v == "false" || v == "0")
            *p = false;
          else
            return "expected true or false";
        } else if constexpr (std::is_same_v<T, std::string>) {
          *p = std::string(v);
        } else if constexpr (std::is_same_v<T, std::vector<double>>) {
          std::vector<double> out;
          if (v == "auto") {
            p->clear();
            return {};
          }
          std::size_t pos = 0;
          while (pos <= v.size()) {
            const auto comma = v.find(',', pos);
            const auto item = trim(v.substr(pos, comma == std::string_view::npos ? v.npos : comma - pos));
            double x = 0.0;
            if (!parse_number(item, x)) return "expected a comma-separated list of numbers";
            out.push_back(x);
            if (comma == std::string_view::npos) break;
            pos = comma + 1;
          }
          *p = std::move(out);
        } else if constexpr (std::is_same_v<T, std::optional<double>>) {
          double x = 0.0;
          if (v == "auto")
            p->reset();
          else if (parse_number(v, x))
            *p = x;
          else
            return "expected a number or auto";
        } else if constexpr (std::is_same_v<T, std::optional<WeightKind>>) {
          if (v.empty()) {
            p->reset();
          } else {
            try {
              *p = parse_weight_kind(v);
            } catch (const Error&) {
              return "unknown weight kind '" + std::string(v) + "'";
            }
          }
        } else {
          try {
            *p = parse_task(v);
          } catch (const Error&) {
            return "unknown task '" + std::string(v) + "'";
          }
        }
        return {};
      },
      slot);
}

[[noreturn]] void config_error(std::string_view origin, int line, std::string_view what) {
  std::string msg(origin);
  if (line > 0) msg += ":" + std::to_string(line);
  throw Error(ErrorCode::ConfigError, msg + ": " + std::string(what));
}

void set_field(RunConfig& cfg, std::string_view section, std::string_view key, std::string_view value,
               std::string_view origin, int line) {
  for (auto& f : fields(cfg)) {
    if (f.section != section || f.key != key) continue;
    const auto err = assign(f.slot, value);
    if (!err.empty()) config_error(origin, line, std::string(section) + "." + std::string(key) + ": " + err);
    return;
  }
  config_error(origin, line, "unknown field " + std::string(section) + "." + std::string(key));
}

bool known_section(RunConfig& cfg, std::string_view section) {
  for (auto& f : fields(cfg))
    if (f.section == section) return true;
  return false;
}

}  // namespace

std::string_view to_string(Task t) {
  switch (t) {
    case Task::Analyze: return "analyze";
    case Task::Spectrum: return "spectrum";
    case Task::Sweep: return "sweep";
    case Task::Sharpness: return "sharpness";
    case Task::Evolve: return "evolve";
    case Task::ReportAll: return "report-all";
  }
  return "report-all";
}

Task parse_task(std::string_view name) {
  for (auto t : {Task::Analyze, Task::Spectrum, Task::Sweep, Task::Sharpness, Task::Evolve, Task::ReportAll})
    if (to_string(t) == name) return t;
  throw Error(ErrorCode::ConfigError, "unknown task '" + std::string(name) + "'");
}

RunConfig parse_config(std::string_view text, std::string_view origin) {
  RunConfig cfg;
  std::string section;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') config_error(origin, line_no, "unterminated section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (!known_section(cfg, section)) config_error(origin, line_no, "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) config_error(origin, line_no, "expected key = value");
    if (section.empty()) config_error(origin, line_no, "key outside of a section");
    set_field(cfg, section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)), origin, line_no);
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

std::string serialize_config(const RunConfig& config) {
  RunConfig copy = config;
  std::string out;
  std::string_view section;
  for (const auto& f : fields(copy)) {
    if (f.section != section) {
      if (!section.empty()) out += "\n";
      section = f.section;
      out += "[" + std::string(section) + "]\n";
    }
    out += std::string(f.key) + " = " + show(f.slot) + "\n";
  }
  return out;
}

void apply_override(RunConfig& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  const auto path = trim(assignment.substr(0, eq));
  const auto dot = path.find('.');
  if (eq == std::string_view::npos || dot == std::string_view::npos)
    config_error("--override", 0, "expected section.key=value, got '" + std::string(assignment) + "'");
  set_field(config, path.substr(0, dot), path.substr(dot + 1), trim(assignment.substr(eq + 1)), "--override", 0);
}

WeightFamily make_family(const RunConfig& config) {
  const auto& f = config.family;
  if (!f.kind) throw Error(ErrorCode::ConfigError, "family block is empty: set family.kind");
  try {
    switch (*f.kind) {
      case WeightKind::Lebesgue: return WeightFamily::lebesgue(f.dimension);
      case WeightKind::ExpPower: return WeightFamily::exp_power(f.dimension, f.b, f.m);
      case WeightKind::PowerExpPower: return WeightFamily::power_exp_power(f.dimension, f.b, f.m, f.beta);
      case WeightKind::LogWeight: return WeightFamily::log_weight(f.dimension, f.alpha);
      case WeightKind::Oscillating: return WeightFamily::oscillating(f.dimension);
      case WeightKind::Custom: break;
    }
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, std::string("family: ") + e.what());
  }
  throw Error(ErrorCode::ConfigError, "family.kind = Custom cannot be described in a config file");
}

HypothesisOptions hypothesis_options(const RunConfig& config) {
  HypothesisOptions h = config.hypotheses;
  h.profile = config.profile;
  return h;
}

}  // namespace whardy
