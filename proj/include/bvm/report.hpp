#pragma once

#include "bvm/harness.hpp"

#include <json.hpp>

#include <string>

namespace bvm {

nlohmann::json to_json(const ExperimentResult& r);
nlohmann::json to_json(const AuditReport& r);
nlohmann::json to_json(const SweepResult& r);
nlohmann::json to_json(const PriorSweepResult& r);

/// Plain-text list of every inequality checked with measured value, bound and verdict.
std::string summary_text(const ExperimentResult& r);
std::string summary_text(const AuditReport& r);
std::string summary_text(const SweepResult& r);
std::string summary_text(const PriorSweepResult& r);

/// Writes report.json, tables/*.csv and summary.txt under `dir` (created if
/// missing). Unwritable paths raise an Error naming the path.
void emit_report(const ExperimentResult& r, const std::string& dir);
void emit_report(const AuditReport& r, const std::string& dir);
void emit_report(const SweepResult& r, const std::string& dir);
void emit_report(const PriorSweepResult& r, const std::string& dir);

/// Little-endian float64 draws, one draw after another (p values each), with a
/// JSON sidecar `<path>.json` describing the layout.
void write_draw_dump(const PosteriorSample& s, const std::string& path);

/// JSON text with a trailing newline, as written to report.json.
std::string dump_json(const nlohmann::json& j);

}  // namespace bvm
