#pragma once

#include <string>
#include <vector>

#include "conex/operators.hpp"

namespace conex {

/// Minimal ordered JSON writer with %.17g doubles, so identical runs produce
/// byte-identical reports (the shortest-roundtrip formatting of general-purpose
/// JSON libraries is not pinned by anything).
class JsonWriter {
public:
    JsonWriter& begin();  // {
    JsonWriter& end();    // }
    JsonWriter& key(const std::string& k);
    JsonWriter& value(double v);
    JsonWriter& value(int v);
    JsonWriter& value(long long v);
    JsonWriter& value(bool v);
    JsonWriter& value(const std::string& v);
    JsonWriter& raw(const std::string& fragment);  // pre-rendered JSON
    JsonWriter& array(const std::vector<double>& v);

    JsonWriter& field(const std::string& k, double v) { return key(k).value(v); }
    JsonWriter& field(const std::string& k, int v) { return key(k).value(v); }
    JsonWriter& field(const std::string& k, long long v) { return key(k).value(v); }
    JsonWriter& field(const std::string& k, bool v) { return key(k).value(v); }
    JsonWriter& field(const std::string& k, const std::string& v) { return key(k).value(v); }
    JsonWriter& field(const std::string& k, const char* v) { return key(k).value(std::string(v)); }

    const std::string& str() const { return out_; }

private:
    void comma();
    std::string out_;
    std::vector<bool> first_;
    bool pending_key_ = false;
};

std::string format_double(double v);  // %.17g

/// Operator spec <-> JSON, e.g. {"variant":"pucci-minus","lambda":1.0,"Lambda":2.0,"mu":0.0},
/// {"variant":"isaacs","A":[[[[...]]]],"b":[[...]]}, wrappers via {"variant":"dual","inner":{...}}.
std::string operator_to_json(const OperatorSpec& spec);
OperatorSpec operator_from_json_text(const std::string& text);

}  // namespace conex
