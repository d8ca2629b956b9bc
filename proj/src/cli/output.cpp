#include <charconv>
#include <cmath>

#include "fpg/cli.hpp"
#include "fpg/errors.hpp"

namespace fpg::cli {

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(std::vector<std::string> header) : columns_(header.size()) {
    for (std::size_t k = 0; k < header.size(); ++k) {
        if (k) text_ += ',';
        text_ += header[k];
    }
    text_ += '\n';
    in_row_ = columns_;
}

CsvWriter& CsvWriter::row() {
    if (in_row_ != columns_) throw Error("csv row has the wrong number of cells");
    in_row_ = 0;
    return *this;
}

CsvWriter& CsvWriter::cell(const std::string& v) {
    if (in_row_ >= columns_) throw Error("csv row has too many cells");
    if (in_row_) text_ += ',';
    if (v.find_first_of(",\"\n") == std::string::npos) {
        text_ += v;
    } else {
        text_ += '"';
        for (char ch : v) {
            if (ch == '"') text_ += '"';
            text_ += ch;
        }
        text_ += '"';
    }
    if (++in_row_ == columns_) text_ += '\n';
    return *this;
}

CsvWriter& CsvWriter::cell(double v) { return cell(format_number(v)); }

CsvWriter& CsvWriter::cell(std::size_t v) { return cell(std::to_string(v)); }

std::string CsvWriter::str() const { return text_; }

}  // namespace fpg::cli
