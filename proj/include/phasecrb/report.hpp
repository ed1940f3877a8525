#pragma once

#include <Eigen/Dense>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "phasecrb/errors.hpp"

namespace phasecrb {

// Reports keep their key order so that reruns are byte-identical.
using Json = nlohmann::ordered_json;

// Shortest round-trip decimal form of a double (what the JSON writer uses),
// shared with the CSV writer so both formats print identically.
std::string format_double(double v);

Json to_json(const Eigen::VectorXd& v);
Json to_json(const Eigen::MatrixXd& m);

void write_text_file(const std::string& path, const std::string& content);

// RFC 4180: fields containing separators, quotes or newlines get quoted,
// embedded quotes doubled.
class CsvWriter {
public:
    explicit CsvWriter(const std::string& path);

    void row(const std::vector<std::string>& fields);
    void row_values(const std::vector<double>& values);

private:
    std::ofstream out_;
};

}  // namespace phasecrb
