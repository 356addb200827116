#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "workcost/linalg.hpp"

namespace workcost {

// Matrix payload: {"dims": [{"label": "X", "d": 2}, ...],
//                  "re": [[...]], "im": [[...]]}
// The product of dims must equal the matrix dimension and the payload must be
// Hermitian within 1e-9 (rejected otherwise).
struct MatrixJson {
    Mat mat;
    SystemDims dims;
};

MatrixJson read_matrix_json(const nlohmann::json& j);
MatrixJson read_matrix_file(const std::string& path);
nlohmann::json matrix_to_json(const Mat& m, const SystemDims& dims);

// Channel payload: matrix fields plus {"dims_in": [...], "dims_out": [...],
// "tp_class": "trace_preserving"|"trace_nonincreasing"}; the matrix is the
// Choi matrix on X' (x) R_X.
struct ChannelJson {
    Mat choi;
    SystemDims dims_out; // X'
    SystemDims dims_in;  // X (mirrored into R_X)
    std::string tp_class;
};

ChannelJson read_channel_json(const nlohmann::json& j);
ChannelJson read_channel_file(const std::string& path);
nlohmann::json channel_to_json(const ChannelJson& c);

// Shortest round-trip decimal representation (for deterministic CSV output).
std::string format_double(double v);

// Writes rows of preformatted cells; caller supplies the header line cells.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

} // namespace workcost
