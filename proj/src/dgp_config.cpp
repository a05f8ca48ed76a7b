#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "cibench/dgp.hpp"
#include "cibench/text_format.hpp"

namespace cibench {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

using Setter = std::function<void(DgpConfig&, std::string_view)>;

std::size_t parse_count(std::string_view v) {
  std::size_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw Error("expected a non-negative integer, found '" + std::string(v) +
                "'");
  }
  return out;
}

std::uint64_t parse_seed(std::string_view v) {
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw Error("expected an unsigned integer seed, found '" + std::string(v) +
                "'");
  }
  return out;
}

double parse_real(std::string_view v) {
  auto out = parse_number(v);
  if (!out) throw Error("expected a number, found '" + std::string(v) + "'");
  return *out;
}

bool parse_bool(std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error("expected true/false, found '" + std::string(v) + "'");
}

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      {"n_outcome_parents",
       [](DgpConfig& c, std::string_view v) { c.n_outcome_parents = parse_count(v); }},
      {"n_treatment_parents",
       [](DgpConfig& c, std::string_view v) { c.n_treatment_parents = parse_count(v); }},
      {"n_censoring_parents",
       [](DgpConfig& c, std::string_view v) { c.n_censoring_parents = parse_count(v); }},
      {"n_confounders",
       [](DgpConfig& c, std::string_view v) { c.n_confounders = parse_count(v); }},
      {"treatment_prevalence",
       [](DgpConfig& c, std::string_view v) { c.treatment_prevalence = parse_real(v); }},
      {"censoring_rate",
       [](DgpConfig& c, std::string_view v) { c.censoring_rate = parse_real(v); }},
      {"censoring_depends_on_treatment",
       [](DgpConfig& c, std::string_view v) {
         c.censoring_depends_on_treatment = parse_bool(v);
       }},
      {"poly_degree",
       [](DgpConfig& c, std::string_view v) {
         c.poly_degree = static_cast<int>(parse_count(v));
       }},
      {"use_exp_transform",
       [](DgpConfig& c, std::string_view v) { c.use_exp_transform = parse_bool(v); }},
      {"noise_sd", [](DgpConfig& c, std::string_view v) { c.noise_sd = parse_real(v); }},
      {"effect_heterogeneity",
       [](DgpConfig& c, std::string_view v) { c.effect_heterogeneity = parse_real(v); }},
      {"effect_constant",
       [](DgpConfig& c, std::string_view v) { c.effect_constant = parse_real(v); }},
      {"instances_per_size",
       [](DgpConfig& c, std::string_view v) { c.instances_per_size = parse_count(v); }},
      {"seed", [](DgpConfig& c, std::string_view v) { c.seed = parse_seed(v); }},
  };
  return table;
}

}  // namespace

std::vector<DgpConfig> parse_dgp_configs(std::string_view text,
                                         std::string_view source) {
  DgpConfig defaults;
  std::vector<DgpConfig> sections;
  DgpConfig* current = &defaults;

  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    auto where = [&](const std::string& m) {
      return std::string(source) + ":" + std::to_string(line_no) + ": " + m;
    };
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(where("unterminated section"));
      const auto name = trim(line.substr(1, line.size() - 2));
      if (name != "dgp" && !name.starts_with("dgp ")) {
        throw ParseError(where("unknown section '" + std::string(name) +
                               "' (expected [dgp])"));
      }
      sections.push_back(defaults);
      current = &sections.back();
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError(where("expected 'key = value'"));
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    auto it = setters().find(key);
    if (it == setters().end()) {
      throw ParseError(where("unknown key '" + std::string(key) + "'"));
    }
    try {
      it->second(*current, value);
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(where(std::string(key) + ": " + e.what()));
    }
  }
  if (sections.empty()) sections.push_back(defaults);
  return sections;
}

std::vector<DgpConfig> read_dgp_configs(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open config file '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_dgp_configs(buffer.str(), path.string());
}

std::string format_dgp_config(const DgpConfig& c) {
  std::ostringstream out;
  auto flag = [](bool b) { return b ? "true" : "false"; };
  out << "[dgp]\n"
      << "n_outcome_parents = " << c.n_outcome_parents << '\n'
      << "n_treatment_parents = " << c.n_treatment_parents << '\n'
      << "n_censoring_parents = " << c.n_censoring_parents << '\n'
      << "n_confounders = " << c.n_confounders << '\n'
      << "treatment_prevalence = " << format_number(c.treatment_prevalence, 17)
      << '\n'
      << "censoring_rate = " << format_number(c.censoring_rate, 17) << '\n'
      << "censoring_depends_on_treatment = "
      << flag(c.censoring_depends_on_treatment) << '\n'
      << "poly_degree = " << c.poly_degree << '\n'
      << "use_exp_transform = " << flag(c.use_exp_transform) << '\n'
      << "noise_sd = " << format_number(c.noise_sd, 17) << '\n'
      << "effect_heterogeneity = " << format_number(c.effect_heterogeneity, 17)
      << '\n'
      << "effect_constant = " << format_number(c.effect_constant, 17) << '\n'
      << "instances_per_size = " << c.instances_per_size << '\n'
      << "seed = " << c.seed << '\n';
  return out.str();
}

}  // namespace cibench
