#include "conex/json_io.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include <json.hpp>

namespace conex {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void JsonWriter::comma() {
    if (!first_.empty()) {
        if (!first_.back()) out_ += ",";
        first_.back() = false;
    }
}

JsonWriter& JsonWriter::begin() {
    if (!pending_key_) comma();
    pending_key_ = false;
    out_ += "{";
    first_.push_back(true);
    return *this;
}

JsonWriter& JsonWriter::end() {
    out_ += "}";
    first_.pop_back();
    return *this;
}

JsonWriter& JsonWriter::key(const std::string& k) {
    comma();
    out_ += "\"" + k + "\":";
    pending_key_ = true;
    return *this;
}

JsonWriter& JsonWriter::value(double v) {
    if (!pending_key_) comma();
    pending_key_ = false;
    out_ += format_double(v);
    return *this;
}

JsonWriter& JsonWriter::value(int v) {
    if (!pending_key_) comma();
    pending_key_ = false;
    out_ += std::to_string(v);
    return *this;
}

JsonWriter& JsonWriter::value(long long v) {
    if (!pending_key_) comma();
    pending_key_ = false;
    out_ += std::to_string(v);
    return *this;
}

JsonWriter& JsonWriter::value(bool v) {
    if (!pending_key_) comma();
    pending_key_ = false;
    out_ += v ? "true" : "false";
    return *this;
}

JsonWriter& JsonWriter::value(const std::string& v) {
    if (!pending_key_) comma();
    pending_key_ = false;
    out_ += "\"";
    for (char c : v) {
        if (c == '"' || c == '\\') out_ += '\\';
        out_ += c;
    }
    out_ += "\"";
    return *this;
}

JsonWriter& JsonWriter::raw(const std::string& fragment) {
    if (!pending_key_) comma();
    pending_key_ = false;
    out_ += fragment;
    return *this;
}

JsonWriter& JsonWriter::array(const std::vector<double>& v) {
    if (!pending_key_) comma();
    pending_key_ = false;
    out_ += "[";
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) out_ += ",";
        out_ += format_double(v[i]);
    }
    out_ += "]";
    return *this;
}

namespace {

std::string matrix_json(const SymMatrix& m) {
    std::string s = "[";
    for (int i = 0; i < m.dim(); ++i) {
        if (i) s += ",";
        s += "[";
        for (int j = 0; j < m.dim(); ++j) {
            if (j) s += ",";
            s += format_double(m(i, j));
        }
        s += "]";
    }
    return s + "]";
}

SymMatrix matrix_from_json(const nlohmann::json& j) {
    const int n = static_cast<int>(j.size());
    SymMatrix m(n);
    for (int r = 0; r < n; ++r) {
        if (static_cast<int>(j[r].size()) != n)
            throw std::invalid_argument("operator json: matrix is not square");
        for (int c = r; c < n; ++c) {
            const double a = j[r][c].get<double>();
            const double b = j[c][r].get<double>();
            if (std::abs(a - b) > 1e-12 * (1 + std::abs(a)))
                throw std::invalid_argument("operator json: matrix is not symmetric");
            m.set(r, c, 0.5 * (a + b));
        }
    }
    return m;
}

}  // namespace

std::string operator_to_json(const OperatorSpec& spec) {
    const EllipticityParams p = spec.ellipticity(2);
    switch (spec.variant()) {
        case OperatorVariant::Laplacian:
            return "{\"variant\":\"laplacian\"}";
        case OperatorVariant::PucciPlus:
        case OperatorVariant::PucciMinus:
        case OperatorVariant::ExtremalPlus:
        case OperatorVariant::ExtremalMinus: {
            JsonWriter w;
            w.begin()
                .field("variant", spec.name())
                .field("lambda", p.lambda)
                .field("Lambda", p.Lambda)
                .field("mu", p.mu)
                .end();
            return w.str();
        }
        case OperatorVariant::Isaacs: {
            std::string s = "{\"variant\":\"isaacs\",\"A\":[";
            const auto& A = spec.isaacs_A();
            const auto& b = spec.isaacs_b();
            for (size_t i = 0; i < A.size(); ++i) {
                if (i) s += ",";
                s += "[";
                for (size_t j = 0; j < A[i].size(); ++j) {
                    if (j) s += ",";
                    s += matrix_json(A[i][j]);
                }
                s += "]";
            }
            s += "],\"b\":[";
            for (size_t i = 0; i < b.size(); ++i) {
                if (i) s += ",";
                s += "[";
                for (size_t j = 0; j < b[i].size(); ++j) {
                    if (j) s += ",";
                    s += format_double(b[i][j]);
                }
                s += "]";
            }
            return s + "]}";
        }
        case OperatorVariant::Dual:
            return "{\"variant\":\"dual\",\"inner\":" + operator_to_json(spec.inner()) + "}";
        case OperatorVariant::Inverted:
            return "{\"variant\":\"inverted\",\"inner\":" + operator_to_json(spec.inner()) + "}";
    }
    throw std::logic_error("operator_to_json: unreachable");
}

namespace {

OperatorSpec operator_from_json(const nlohmann::json& j) {
    const std::string variant = j.at("variant").get<std::string>();
    auto lam = [&] { return j.value("lambda", 1.0); };
    auto Lam = [&] { return j.value("Lambda", 1.0); };
    auto mu = [&] { return j.value("mu", 0.0); };
    if (variant == "laplacian") return OperatorSpec::laplacian();
    if (variant == "pucci-plus") return OperatorSpec::pucci_plus_op(lam(), Lam());
    if (variant == "pucci-minus") return OperatorSpec::pucci_minus_op(lam(), Lam());
    if (variant == "extremal-plus") return OperatorSpec::extremal_plus(lam(), Lam(), mu());
    if (variant == "extremal-minus") return OperatorSpec::extremal_minus(lam(), Lam(), mu());
    if (variant == "isaacs") {
        std::vector<std::vector<SymMatrix>> A;
        std::vector<std::vector<double>> b;
        for (const auto& row : j.at("A")) {
            std::vector<SymMatrix> arow;
            for (const auto& m : row) arow.push_back(matrix_from_json(m));
            A.push_back(std::move(arow));
        }
        for (const auto& row : j.at("b")) b.push_back(row.get<std::vector<double>>());
        return OperatorSpec::isaacs(std::move(A), std::move(b));
    }
    if (variant == "dual") return operator_from_json(j.at("inner")).dual();
    if (variant == "inverted") return operator_from_json(j.at("inner")).inverted();
    throw std::invalid_argument("operator json: unknown variant '" + variant + "'");
}

}  // namespace

OperatorSpec operator_from_json_text(const std::string& text) {
    return operator_from_json(nlohmann::json::parse(text));
}

}  // namespace conex
