#pragma once

#include <json.hpp>

#include "vulab/types.hpp"

namespace vulab {

using Json = nlohmann::ordered_json;

Json to_json(const Vec& v);
/// Columns as a list of vectors.
Json columns_to_json(const Mat& m);
/// Rows as a list of vectors.
Json rows_to_json(const Mat& m);
Vec vec_from_json(const Json& j);
/// Inverse of columns_to_json; `rows` fixes the shape when the list is empty.
Mat columns_from_json(const Json& j, int rows);

/// Doubles that are not finite are written as the strings "inf", "-inf", "nan".
Json number(double x);

}  // namespace vulab
