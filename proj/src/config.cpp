#include "wavelocate/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include "wavelocate/errors.hpp"

namespace wavelocate::config {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

// raw key/value pairs grouped by section, tracking which were consumed
class IniView {
 public:
  explicit IniView(const std::string& text) {
    std::istringstream in(text);
    std::string line, section;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const auto comment = line.find_first_of("#;");
      if (comment != std::string::npos) line = line.substr(0, comment);
      line = trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']') {
          throw ConfigError("unterminated section header at line " +
                            std::to_string(line_no));
        }
        section = trim(line.substr(1, line.size() - 2));
        sections_.insert(section);
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        throw ConfigError("expected key = value at line " +
                          std::to_string(line_no));
      }
      const std::string key = trim(line.substr(0, eq));
      if (key.empty()) {
        throw ConfigError("empty key at line " + std::to_string(line_no));
      }
      values_[section + "/" + key] = trim(line.substr(eq + 1));
    }
  }

  const std::string* find(const std::string& section, const std::string& key) {
    const auto it = values_.find(section + "/" + key);
    if (it == values_.end()) return nullptr;
    consumed_.insert(it->first);
    return &it->second;
  }

  void check_known_sections(const std::vector<std::string>& known) const {
    for (const auto& s : sections_) {
      if (std::find(known.begin(), known.end(), s) == known.end()) {
        throw ConfigError("unknown config section [" + s + "]");
      }
    }
  }

  void check_all_consumed() const {
    for (const auto& [path, value] : values_) {
      if (!consumed_.count(path)) {
        const auto slash = path.find('/');
        const std::string section = path.substr(0, slash);
        const std::string key = path.substr(slash + 1);
        throw ConfigError("unknown config key '" + key + "' in [" +
                          (section.empty() ? "top level" : section) + "]");
      }
    }
  }

 private:
  std::map<std::string, std::string> values_;
  std::set<std::string> consumed_;
  std::set<std::string> sections_;
};

[[noreturn]] void bad_value(const std::string& section, const std::string& key,
                            const std::string& value, const std::string& want) {
  throw ConfigError("config key '" + key + "' in [" + section + "] has value '" +
                    value + "', expected " + want);
}

double parse_double(const std::string& section, const std::string& key,
                    const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) bad_value(section, key, value, "a number");
    return v;
  } catch (const std::logic_error&) {
    bad_value(section, key, value, "a number");
  }
}

long long parse_int(const std::string& section, const std::string& key,
                    const std::string& value) {
  long long v = 0;
  const auto [ptr, ec] =
      std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    bad_value(section, key, value, "an integer");
  }
  return v;
}

std::uint64_t parse_u64(const std::string& section, const std::string& key,
                        const std::string& value) {
  std::uint64_t v = 0;
  const auto [ptr, ec] =
      std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    bad_value(section, key, value, "an unsigned integer");
  }
  return v;
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(value);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// field readers: apply when the key is present, leave the default otherwise
template <typename Fn>
void with(IniView& ini, const std::string& section, const std::string& key,
          Fn&& fn) {
  if (const std::string* v = ini.find(section, key)) fn(*v);
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
  IniView ini(text);
  ini.check_known_sections({"", "plate", "sensors", "frequencies",
                            "uncertainty", "network", "training", "mfp",
                            "sweep", "io"});
  RunConfig cfg;

  with(ini, "", "seed",
       [&](const std::string& v) { cfg.seed = parse_u64("top level", "seed", v); });

  const std::string pl = "plate";
  with(ini, pl, "length", [&](const std::string& v) {
    cfg.scenario.plate_length = parse_double(pl, "length", v);
  });
  with(ini, pl, "width", [&](const std::string& v) {
    cfg.scenario.plate_width = parse_double(pl, "width", v);
  });
  with(ini, pl, "youngs_modulus", [&](const std::string& v) {
    cfg.scenario.material.youngs_modulus = parse_double(pl, "youngs_modulus", v);
  });
  with(ini, pl, "poisson_ratio", [&](const std::string& v) {
    cfg.scenario.material.poisson_ratio = parse_double(pl, "poisson_ratio", v);
  });
  with(ini, pl, "density", [&](const std::string& v) {
    cfg.scenario.material.density = parse_double(pl, "density", v);
  });
  with(ini, pl, "thickness", [&](const std::string& v) {
    cfg.scenario.material.thickness = parse_double(pl, "thickness", v);
  });

  with(ini, "sensors", "count", [&](const std::string& v) {
    cfg.scenario.sensor_count =
        static_cast<int>(parse_int("sensors", "count", v));
  });

  const std::string fr = "frequencies";
  with(ini, fr, "num_points", [&](const std::string& v) {
    cfg.scenario.grid.num_points =
        static_cast<int>(parse_int(fr, "num_points", v));
  });
  with(ini, fr, "f_min_hz", [&](const std::string& v) {
    cfg.scenario.grid.f_min_hz = parse_double(fr, "f_min_hz", v);
  });
  with(ini, fr, "f_max_hz", [&](const std::string& v) {
    cfg.scenario.grid.f_max_hz = parse_double(fr, "f_max_hz", v);
  });
  with(ini, fr, "window", [&](const std::string& v) {
    if (v == "none") {
      cfg.scenario.window.kind = wavefield::ExcitationWindow::Kind::None;
    } else if (v == "gaussian") {
      cfg.scenario.window.kind = wavefield::ExcitationWindow::Kind::Gaussian;
    } else {
      bad_value(fr, "window", v, "none or gaussian");
    }
  });
  with(ini, fr, "window_center_hz", [&](const std::string& v) {
    cfg.scenario.window.center_hz = parse_double(fr, "window_center_hz", v);
  });
  with(ini, fr, "window_sigma_hz", [&](const std::string& v) {
    cfg.scenario.window.sigma_hz = parse_double(fr, "window_sigma_hz", v);
  });

  const std::string un = "uncertainty";
  with(ini, un, "snr_db", [&](const std::string& v) {
    if (v == "infinite" || v == "inf") {
      cfg.scenario.uncertainty.snr_db = std::numeric_limits<double>::infinity();
    } else {
      cfg.scenario.uncertainty.snr_db = parse_double(un, "snr_db", v);
    }
  });
  with(ini, un, "w_distort", [&](const std::string& v) {
    cfg.scenario.uncertainty.w_distort = parse_double(un, "w_distort", v);
  });
  with(ini, un, "noise_seed", [&](const std::string& v) {
    cfg.scenario.uncertainty.noise_seed = parse_u64(un, "noise_seed", v);
  });
  with(ini, un, "distortion_seed", [&](const std::string& v) {
    cfg.scenario.uncertainty.distortion_seed = parse_u64(un, "distortion_seed", v);
  });
  with(ini, un, "num_damages", [&](const std::string& v) {
    cfg.scenario.damages.count =
        static_cast<int>(parse_int(un, "num_damages", v));
  });
  with(ini, un, "damage_policy", [&](const std::string& v) {
    if (v == "fixed") {
      cfg.scenario.damages.policy = wavefield::DamagePolicy::Fixed;
    } else if (v == "up_to") {
      cfg.scenario.damages.policy = wavefield::DamagePolicy::UpTo;
    } else {
      bad_value(un, "damage_policy", v, "fixed or up_to");
    }
  });

  const std::string ne = "network";
  with(ini, ne, "hidden", [&](const std::string& v) {
    const auto items = split_list(v);
    if (items.size() != 3) bad_value(ne, "hidden", v, "three widths");
    for (int l = 0; l < 3; ++l) {
      cfg.network.hidden[l] = static_cast<int>(parse_int(ne, "hidden", items[l]));
    }
  });
  with(ini, ne, "num_components", [&](const std::string& v) {
    cfg.network.num_components =
        static_cast<int>(parse_int(ne, "num_components", v));
  });
  with(ini, ne, "dropout_prob", [&](const std::string& v) {
    cfg.network.dropout_prob = parse_double(ne, "dropout_prob", v);
    cfg.training.dropout_prob = cfg.network.dropout_prob;
  });
  with(ini, ne, "variance_floor", [&](const std::string& v) {
    cfg.network.variance_floor = parse_double(ne, "variance_floor", v);
    cfg.training.variance_floor = cfg.network.variance_floor;
  });

  const std::string tr = "training";
  with(ini, tr, "learning_rate", [&](const std::string& v) {
    cfg.training.learning_rate = parse_double(tr, "learning_rate", v);
  });
  with(ini, tr, "beta1", [&](const std::string& v) {
    cfg.training.beta1 = parse_double(tr, "beta1", v);
  });
  with(ini, tr, "beta2", [&](const std::string& v) {
    cfg.training.beta2 = parse_double(tr, "beta2", v);
  });
  with(ini, tr, "epsilon", [&](const std::string& v) {
    cfg.training.epsilon = parse_double(tr, "epsilon", v);
  });
  with(ini, tr, "batch_size", [&](const std::string& v) {
    cfg.training.batch_size = static_cast<int>(parse_int(tr, "batch_size", v));
  });
  with(ini, tr, "epochs", [&](const std::string& v) {
    cfg.training.epochs = static_cast<int>(parse_int(tr, "epochs", v));
  });
  with(ini, tr, "clip_norm", [&](const std::string& v) {
    cfg.training.clip_norm = parse_double(tr, "clip_norm", v);
  });
  with(ini, tr, "multi_damage_target", [&](const std::string& v) {
    if (v == "average") {
      cfg.training.multi_target = mdn::MultiTarget::Average;
    } else if (v == "each") {
      cfg.training.multi_target = mdn::MultiTarget::Each;
    } else {
      bad_value(tr, "multi_damage_target", v, "average or each");
    }
  });

  const std::string mf = "mfp";
  with(ini, mf, "nx", [&](const std::string& v) {
    cfg.grid.nx = static_cast<int>(parse_int(mf, "nx", v));
  });
  with(ini, mf, "ny", [&](const std::string& v) {
    cfg.grid.ny = static_cast<int>(parse_int(mf, "ny", v));
  });
  with(ini, mf, "cache_budget_mb", [&](const std::string& v) {
    const long long mb = parse_int(mf, "cache_budget_mb", v);
    if (mb < 0) bad_value(mf, "cache_budget_mb", v, "a nonnegative integer");
    cfg.cache_budget_bytes = static_cast<std::size_t>(mb) << 20;
  });

  const std::string sw = "sweep";
  with(ini, sw, "snr_db", [&](const std::string& v) {
    for (const auto& item : split_list(v)) {
      if (item == "infinite" || item == "inf") {
        cfg.sweep.snr_db.push_back(std::numeric_limits<double>::infinity());
      } else {
        cfg.sweep.snr_db.push_back(parse_double(sw, "snr_db", item));
      }
    }
  });
  with(ini, sw, "w_distort", [&](const std::string& v) {
    for (const auto& item : split_list(v)) {
      cfg.sweep.w_distort.push_back(parse_double(sw, "w_distort", item));
    }
  });
  with(ini, sw, "num_damages", [&](const std::string& v) {
    for (const auto& item : split_list(v)) {
      cfg.sweep.num_damages.push_back(
          static_cast<int>(parse_int(sw, "num_damages", item)));
    }
  });
  with(ini, sw, "methods", [&](const std::string& v) {
    for (const auto& item : split_list(v)) {
      if (item == "mdn") {
        cfg.sweep.methods.push_back(eval::Method::Mdn);
      } else if (item == "mfp") {
        cfg.sweep.methods.push_back(eval::Method::Mfp);
      } else {
        bad_value(sw, "methods", v, "a list of mdn/mfp");
      }
    }
  });

  const std::string io = "io";
  with(ini, io, "num_train", [&](const std::string& v) {
    cfg.counts.train = static_cast<int>(parse_int(io, "num_train", v));
  });
  with(ini, io, "num_val", [&](const std::string& v) {
    cfg.counts.val = static_cast<int>(parse_int(io, "num_val", v));
  });
  with(ini, io, "num_test", [&](const std::string& v) {
    cfg.counts.test = static_cast<int>(parse_int(io, "num_test", v));
  });
  with(ini, io, "keep_spectra", [&](const std::string& v) {
    if (v == "none") {
      cfg.scenario.keep_spectra = wavefield::SpectraRetention::None;
    } else if (v == "test") {
      cfg.scenario.keep_spectra = wavefield::SpectraRetention::TestOnly;
    } else if (v == "all") {
      cfg.scenario.keep_spectra = wavefield::SpectraRetention::All;
    } else {
      bad_value(io, "keep_spectra", v, "none, test or all");
    }
  });

  ini.check_all_consumed();
  cfg.scenario.master_seed = cfg.seed;
  cfg.training.seed = derive_seed(cfg.seed, {streams::kInit});

  // defaults for empty sweep axes: the scenario's own settings, mdn only
  if (cfg.sweep.snr_db.empty()) {
    cfg.sweep.snr_db.push_back(cfg.scenario.uncertainty.snr_db);
  }
  if (cfg.sweep.w_distort.empty()) {
    cfg.sweep.w_distort.push_back(cfg.scenario.uncertainty.w_distort);
  }
  if (cfg.sweep.num_damages.empty()) {
    cfg.sweep.num_damages.push_back(cfg.scenario.damages.count);
  }
  if (cfg.sweep.methods.empty()) {
    cfg.sweep.methods = {eval::Method::Mdn, eval::Method::Mfp};
  }
  return cfg;
}

RunConfig parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

void RunConfig::validate() const {
  scenario.validate();
  if (counts.train < 0 || counts.val < 0 || counts.test < 0) {
    throw ConfigError("split counts must be nonnegative");
  }
  if (network.num_components < 0) {
    throw ConfigError("num_components must be >= 0 (0 = damages + 1)");
  }
  for (int h : network.hidden) {
    if (h < 1) throw ConfigError("hidden layer widths must be >= 1");
  }
  if (!(network.dropout_prob >= 0.0) || network.dropout_prob >= 1.0) {
    throw ConfigError("dropout_prob must lie in [0, 1)");
  }
  if (!(network.variance_floor > 0.0)) {
    throw ConfigError("variance_floor must be positive");
  }
  training.validate();
  grid.validate();
  for (double w : sweep.w_distort) {
    if (!(w >= 0.0) || w >= 1.0) {
      throw ConfigError("sweep w_distort values must lie in [0, 1)");
    }
  }
  for (int k : sweep.num_damages) {
    if (k < 1 || k > 4) {
      throw ConfigError("sweep num_damages values must lie in [1, 4]");
    }
  }
}

nlohmann::ordered_json resolved_json(const RunConfig& cfg) {
  using nlohmann::ordered_json;
  auto snr = [](double v) -> ordered_json {
    if (std::isinf(v) && v > 0.0) return "infinite";
    return v;
  };
  ordered_json j;
  j["seed"] = cfg.seed;
  j["plate"] = {{"length", cfg.scenario.plate_length},
                {"width", cfg.scenario.plate_width},
                {"youngs_modulus", cfg.scenario.material.youngs_modulus},
                {"poisson_ratio", cfg.scenario.material.poisson_ratio},
                {"density", cfg.scenario.material.density},
                {"thickness", cfg.scenario.material.thickness}};
  j["sensors"] = {{"count", cfg.scenario.sensor_count}};
  j["frequencies"] = {
      {"num_points", cfg.scenario.grid.num_points},
      {"f_min_hz", cfg.scenario.grid.f_min_hz},
      {"f_max_hz", cfg.scenario.grid.f_max_hz},
      {"window", cfg.scenario.window.kind ==
                         wavefield::ExcitationWindow::Kind::Gaussian
                     ? "gaussian"
                     : "none"},
      {"window_center_hz", cfg.scenario.window.center_hz},
      {"window_sigma_hz", cfg.scenario.window.sigma_hz}};
  ordered_json unc = {{"snr_db", snr(cfg.scenario.uncertainty.snr_db)},
                      {"w_distort", cfg.scenario.uncertainty.w_distort},
                      {"num_damages", cfg.scenario.damages.count},
                      {"damage_policy",
                       cfg.scenario.damages.policy == wavefield::DamagePolicy::UpTo
                           ? "up_to"
                           : "fixed"}};
  if (cfg.scenario.uncertainty.noise_seed) {
    unc["noise_seed"] = *cfg.scenario.uncertainty.noise_seed;
  }
  if (cfg.scenario.uncertainty.distortion_seed) {
    unc["distortion_seed"] = *cfg.scenario.uncertainty.distortion_seed;
  }
  j["uncertainty"] = unc;
  j["network"] = {{"hidden", cfg.network.hidden},
                  {"num_components", cfg.network.num_components},
                  {"dropout_prob", cfg.network.dropout_prob},
                  {"variance_floor", cfg.network.variance_floor}};
  j["training"] = {{"learning_rate", cfg.training.learning_rate},
                   {"beta1", cfg.training.beta1},
                   {"beta2", cfg.training.beta2},
                   {"epsilon", cfg.training.epsilon},
                   {"batch_size", cfg.training.batch_size},
                   {"epochs", cfg.training.epochs},
                   {"clip_norm", cfg.training.clip_norm},
                   {"multi_damage_target",
                    cfg.training.multi_target == mdn::MultiTarget::Each
                        ? "each"
                        : "average"}};
  j["mfp"] = {{"nx", cfg.grid.nx},
              {"ny", cfg.grid.ny},
              {"cache_budget_mb", cfg.cache_budget_bytes >> 20}};
  ordered_json snr_axis = ordered_json::array();
  for (double v : cfg.sweep.snr_db) snr_axis.push_back(snr(v));
  ordered_json methods = ordered_json::array();
  for (const auto m : cfg.sweep.methods) methods.push_back(eval::method_name(m));
  j["sweep"] = {{"snr_db", snr_axis},
                {"w_distort", cfg.sweep.w_distort},
                {"num_damages", cfg.sweep.num_damages},
                {"methods", methods}};
  const char* retention =
      cfg.scenario.keep_spectra == wavefield::SpectraRetention::All
          ? "all"
          : cfg.scenario.keep_spectra == wavefield::SpectraRetention::TestOnly
                ? "test"
                : "none";
  j["io"] = {{"num_train", cfg.counts.train},
             {"num_val", cfg.counts.val},
             {"num_test", cfg.counts.test},
             {"keep_spectra", retention}};
  return j;
}

eval::SweepContext sweep_context(const RunConfig& cfg) {
  eval::SweepContext ctx;
  ctx.scenario = cfg.scenario;
  ctx.counts = cfg.counts;
  ctx.network = cfg.network;
  ctx.training = cfg.training;
  ctx.grid = cfg.grid;
  ctx.grid.length = cfg.scenario.plate_length;
  ctx.grid.width = cfg.scenario.plate_width;
  ctx.cache_budget_bytes = cfg.cache_budget_bytes;
  return ctx;
}

}  // namespace wavelocate::config
