#include "workcost/json_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "workcost/errors.hpp"

namespace workcost {

namespace {

SystemDims parse_dims(const nlohmann::json& arr, const char* field) {
    if (!arr.is_array() || arr.empty())
        throw ParseError(std::string("matrix JSON: '") + field + "' must be a nonempty array");
    SystemDims dims;
    for (const auto& s : arr) {
        if (!s.is_object() || !s.contains("label") || !s.contains("d"))
            throw ParseError(std::string("matrix JSON: each entry of '") + field +
                             "' needs 'label' and 'd'");
        SystemDims::System sys;
        sys.label = s.at("label").get<std::string>();
        sys.d = s.at("d").get<int>();
        if (sys.d < 1) throw ParseError("matrix JSON: dimension must be >= 1");
        dims.systems.push_back(sys);
    }
    return dims;
}

Mat parse_square(const nlohmann::json& j, int n) {
    if (!j.contains("re")) throw ParseError("matrix JSON: missing 're'");
    const auto& re = j.at("re");
    const bool has_im = j.contains("im");
    if (!re.is_array() || static_cast<int>(re.size()) != n)
        throw ParseError("matrix JSON: 're' must be an n x n array matching the dims product");
    Mat m(n, n);
    for (int i = 0; i < n; ++i) {
        const auto& row = re.at(i);
        if (!row.is_array() || static_cast<int>(row.size()) != n)
            throw ParseError("matrix JSON: 're' rows must have length n");
        for (int k = 0; k < n; ++k) m(i, k) = cplx(row.at(k).get<double>(), 0.0);
    }
    if (has_im) {
        const auto& im = j.at("im");
        if (!im.is_array() || static_cast<int>(im.size()) != n)
            throw ParseError("matrix JSON: 'im' must be an n x n array matching the dims product");
        for (int i = 0; i < n; ++i) {
            const auto& row = im.at(i);
            if (!row.is_array() || static_cast<int>(row.size()) != n)
                throw ParseError("matrix JSON: 'im' rows must have length n");
            for (int k = 0; k < n; ++k) m(i, k) += cplx(0.0, row.at(k).get<double>());
        }
    }
    return m;
}

nlohmann::json dims_to_json(const SystemDims& dims) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& s : dims.systems) arr.push_back({{"label", s.label}, {"d", s.d}});
    return arr;
}

nlohmann::json load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("malformed JSON in " + path + ": " + e.what());
    }
    return j;
}

} // namespace

MatrixJson read_matrix_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("dims")) throw ParseError("matrix JSON: missing 'dims'");
    MatrixJson out;
    try {
        out.dims = parse_dims(j.at("dims"), "dims");
        out.mat = parse_square(j, out.dims.total_dim());
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("matrix JSON: ") + e.what());
    }
    if (!is_hermitian(out.mat, 1e-9))
        throw ParseError("matrix JSON: payload is not Hermitian within 1e-9");
    return out;
}

MatrixJson read_matrix_file(const std::string& path) { return read_matrix_json(load_file(path)); }

nlohmann::json matrix_to_json(const Mat& m, const SystemDims& dims) {
    const int n = static_cast<int>(m.rows());
    nlohmann::json re = nlohmann::json::array(), im = nlohmann::json::array();
    for (int i = 0; i < n; ++i) {
        nlohmann::json rrow = nlohmann::json::array(), irow = nlohmann::json::array();
        for (int k = 0; k < n; ++k) {
            rrow.push_back(m(i, k).real());
            irow.push_back(m(i, k).imag());
        }
        re.push_back(rrow);
        im.push_back(irow);
    }
    return {{"dims", dims_to_json(dims)}, {"re", re}, {"im", im}};
}

ChannelJson read_channel_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("dims_in") || !j.contains("dims_out") ||
        !j.contains("tp_class"))
        throw ParseError("channel JSON: needs 'dims_in', 'dims_out', 'tp_class'");
    ChannelJson out;
    try {
        out.dims_in = parse_dims(j.at("dims_in"), "dims_in");
        out.dims_out = parse_dims(j.at("dims_out"), "dims_out");
        out.tp_class = j.at("tp_class").get<std::string>();
        out.choi = parse_square(j, out.dims_in.total_dim() * out.dims_out.total_dim());
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("channel JSON: ") + e.what());
    }
    if (out.tp_class != "trace_preserving" && out.tp_class != "trace_nonincreasing")
        throw ParseError("channel JSON: tp_class must be trace_preserving or trace_nonincreasing");
    if (!is_hermitian(out.choi, 1e-9))
        throw ParseError("channel JSON: Choi payload is not Hermitian within 1e-9");
    return out;
}

ChannelJson read_channel_file(const std::string& path) { return read_channel_json(load_file(path)); }

nlohmann::json channel_to_json(const ChannelJson& c) {
    nlohmann::json j;
    const int n = static_cast<int>(c.choi.rows());
    nlohmann::json re = nlohmann::json::array(), im = nlohmann::json::array();
    for (int i = 0; i < n; ++i) {
        nlohmann::json rrow = nlohmann::json::array(), irow = nlohmann::json::array();
        for (int k = 0; k < n; ++k) {
            rrow.push_back(c.choi(i, k).real());
            irow.push_back(c.choi(i, k).imag());
        }
        re.push_back(rrow);
        im.push_back(irow);
    }
    j["re"] = re;
    j["im"] = im;
    j["dims_in"] = dims_to_json(c.dims_in);
    j["dims_out"] = dims_to_json(c.dims_out);
    j["tp_class"] = c.tp_class;
    return j;
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw PreconditionError("cannot open output file: " + path);
    std::ostringstream line;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) line << ',';
        line << header[i];
    }
    out << line.str() << '\n';
    for (const auto& row : rows) {
        std::ostringstream r;
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) r << ',';
            r << row[i];
        }
        out << r.str() << '\n';
    }
}

} // namespace workcost
