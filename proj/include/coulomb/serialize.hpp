#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "coulomb/deviations.hpp"
#include "coulomb/determinantal.hpp"
#include "coulomb/envelope.hpp"
#include "coulomb/sampling.hpp"

namespace coulomb {

using Json = nlohmann::ordered_json;

Json to_json(const PartitionValue& v);
Json to_json(const ErrorSequenceReport& r);
Json to_json(const ErrorBound& b);
Json to_json(const MGFReport& r);
Json to_json(const SubGaussianVerdict& v);
Json to_json(const WceReport& r);
Json to_json(const VarianceReport& r);
Json to_json(const Residuals& r);
Json equilibrium_report(const EquilibriumResult& res);

/// Decimal text with 17 significant digits.
std::string format_double(double x);

/// Lattice function as CSV: a header line "h=<h>,R=<R>,n=<n>" then n rows of n values.
void write_grid_csv(const std::string& path, const GridFunction& f);
/// pphi.csv, density.csv, mask.csv and report.json under dir (created if needed).
std::vector<std::string> write_equilibrium(const std::string& dir, const EquilibriumResult& res);

/// Writes to a temporary sibling and renames it into place.
void write_text_atomic(const std::string& path, const std::string& text);
void write_json_atomic(const std::string& path, const Json& j);

}  // namespace coulomb
