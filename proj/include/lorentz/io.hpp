// lorentz — inelastic Lorentz gas simulation and kinetic series toolkit
// SPDX-License-Identifier: MIT
#pragma once

#include <cstdio>
#include <string>
#include <vector>

namespace lorentz {

/// Canonical float formatting for all CSV output: %.17g round-trips doubles
/// exactly and, unlike locale-dependent streams, produces identical bytes on
/// every run — results.csv must not depend on thread count or environment.
inline std::string fmt_g17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

/// Shorter fixed formatting for human-facing fields that do not participate
/// in reproducibility checks.
inline std::string fmt_g6(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

/// Minimal CSV assembly: a versioned comment line, a header, then rows of
/// preformatted cells.
class CsvBuilder {
  public:
    CsvBuilder(const std::string& version_tag, const std::vector<std::string>& header) {
        out_ += "# " + version_tag + "\n";
        append_row(header);
    }

    void append_row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ += ',';
            out_ += cells[i];
        }
        out_ += '\n';
    }

    const std::string& str() const { return out_; }

  private:
    std::string out_;
};

/// Writes content to path, throwing on failure.
void write_file(const std::string& path, const std::string& content);

}  // namespace lorentz
