#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "cpbart/matrix.hpp"
#include "cpbart/sampler.hpp"

namespace cpbart {

inline constexpr int kModelFormatVersion = 1;

/// Numeric CSV: header row, comma separated, '.' decimals.
struct CsvTable {
  std::vector<std::string> header;
  Matrix values;
  int column(const std::string& name) const;  // -1 if absent
};

/// Throws DataError for unreadable files, ragged rows or non-numeric cells.
CsvTable read_csv(const std::string& path);
CsvTable parse_csv(std::istream& in, const std::string& source = "<stream>");
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const Matrix& values);
void write_csv(std::ostream& out, const std::vector<std::string>& header, const Matrix& values);

/// Splits off the response column; every other column is a covariate.
RawData to_raw_data(const CsvTable& table, const std::string& response);

/// Standardized covariates of a prediction table. The response column is ignored if
/// present; unknown or missing covariates raise DataError naming them.
Matrix prepare_covariates(const FitResult& fit, const CsvTable& table);

nlohmann::json model_to_json(const FitResult& fit);
FitResult model_from_json(const nlohmann::json& j);
void save_model(const FitResult& fit, const std::string& path);
/// Throws DataError for unreadable or malformed files.
FitResult load_model(const std::string& path);

}  // namespace cpbart
