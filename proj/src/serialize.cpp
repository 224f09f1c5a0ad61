#include "coulomb/serialize.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace coulomb {

namespace {

Json number(double x) {
  if (std::isfinite(x)) return x;
  return nullptr;
}

}  // namespace

Json to_json(const PartitionValue& v) {
  return Json{{"log_z", number(v.log_z)},
              {"n", v.n},
              {"beta", v.beta},
              {"convention", to_string(v.convention)},
              {"method", to_string(v.method)},
              {"error_bar", number(v.error_bar)}};
}

Json to_json(const ErrorSequenceReport& r) {
  return Json{{"n", r.n},
              {"beta", r.beta},
              {"specific", number(r.specific)},
              {"universal", number(r.universal)},
              {"total", number(r.total)}};
}

Json to_json(const ErrorBound& b) {
  return Json{{"sup_curvature_ratio", number(b.sup_curvature_ratio)},
              {"inf_phi_minus_psi0", number(b.inf_phi_minus_psi0)},
              {"c_universal", number(b.c_universal)},
              {"c_phi", number(b.c_phi)}};
}

Json to_json(const MGFReport& r) {
  Json j{{"t_grid", r.t_grid},        {"log_mgf", Json::array()}, {"ci_half_width", Json::array()},
         {"ess", Json::array()},      {"trusted", r.trusted},    {"heavy_tail", r.heavy_tail},
         {"n_samples", r.n_samples},  {"speed", r.speed}};
  for (double v : r.log_mgf) j["log_mgf"].push_back(number(v));
  for (double v : r.ci_half_width) j["ci_half_width"].push_back(number(v));
  for (double v : r.ess) j["ess"].push_back(number(v));
  return j;
}

Json to_json(const SubGaussianVerdict& v) {
  return Json{{"lhs", number(v.lhs)},   {"rhs", number(v.rhs)}, {"margin", number(v.margin)},
              {"epsilon_term", number(v.epsilon_term)}, {"t", v.t}, {"ci", number(v.ci)},
              {"trusted", v.trusted},   {"passed", v.passed}};
}

Json to_json(const WceReport& r) {
  return Json{{"n", r.n}, {"s", r.s}, {"l_max", r.l_max}, {"wce", number(r.wce)}, {"tail_bound", number(r.tail_bound)}};
}

Json to_json(const VarianceReport& r) {
  return Json{{"variance", number(r.variance)}, {"std_error", number(r.std_error)}, {"target", number(r.target)},
              {"relative_error", number(r.relative_error)}, {"n_samples", r.n_samples}};
}

Json to_json(const Residuals& r) {
  return Json{{"complementarity", number(r.complementarity)},
              {"mass", number(r.mass)},
              {"orthogonality", number(r.orthogonality)}};
}

Json equilibrium_report(const EquilibriumResult& res) {
  const auto [r_in, r_out] = res.droplet_radii();
  const Lattice& g = res.lattice();
  return Json{{"free_energy", number(res.free_energy)},
              {"residuals", to_json(res.residuals)},
              {"robin_constant", number(res.robin_constant)},
              {"tail_mass", number(res.tail_mass)},
              {"droplet_inner_radius", number(r_in)},
              {"droplet_outer_radius", number(r_out)},
              {"h", g.h},
              {"R", g.radius},
              {"n", g.n},
              {"tol", res.tol},
              {"sweeps", res.sweeps}};
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_grid_csv(const std::string& path, const GridFunction& f) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  const Lattice& g = *f.grid;
  out << "h=" << format_double(g.h) << ",R=" << format_double(g.radius) << ",n=" << g.n << '\n';
  for (int j = 0; j < g.n; ++j) {
    for (int i = 0; i < g.n; ++i) {
      if (i) out << ',';
      out << format_double(f.at(i, j));
    }
    out << '\n';
  }
}

std::vector<std::string> write_equilibrium(const std::string& dir, const EquilibriumResult& res) {
  std::filesystem::create_directories(dir);
  const std::string base = (std::filesystem::path(dir) / "").string();
  write_grid_csv(base + "pphi.csv", res.p_phi);
  write_grid_csv(base + "density.csv", res.density);
  GridFunction mask(res.p_phi.grid, 0.0);
  for (std::size_t k = 0; k < mask.values.size(); ++k) mask[k] = res.support_mask[k];
  write_grid_csv(base + "mask.csv", mask);
  write_json_atomic(base + "report.json", equilibrium_report(res));
  return {base + "pphi.csv", base + "density.csv", base + "mask.csv", base + "report.json"};
}

void write_text_atomic(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    out << text;
    if (!out) throw std::runtime_error("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

void write_json_atomic(const std::string& path, const Json& j) { write_text_atomic(path, j.dump(2) + "\n"); }

}  // namespace coulomb
