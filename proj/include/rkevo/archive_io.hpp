#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "rkevo/variety_solver.hpp"

namespace rkevo {

// Archive files hold one JSON object per line:
//   {"order": q, "x": [...], "metrics": {"1": m1, ...}, "fitness": f, "gen": g, "seed": n,
//    "stages": s, "explicit": true}
// Doubles are written in shortest round-trip form, so reading back is bit exact.

std::string archive_record_to_json(const ArchiveRecord& record, int stages, bool explicit_flag);

/// Every archive in ascending order, each best-first.
void write_archive_jsonl(std::ostream& out, const std::map<int, Archive>& archives);
void write_archive_jsonl(const std::filesystem::path& path, const std::map<int, Archive>& archives);

/// Records of one order read back into an Archive. Throws FormatError on
/// malformed lines or when no record of that order exists.
Archive read_archive_jsonl(const std::filesystem::path& path, int order);

/// Orders present in an archive file.
std::vector<int> archive_orders(const std::filesystem::path& path);

/// Column names of the flattened tableau: a21, a31, ... (or a11.. for implicit) then w1..ws.
std::vector<std::string> tableau_column_names(int stages, bool explicit_flag);

/// Header: tableau columns, then fitness, then one e[<tree>] column per tree of order q+1.
void write_pareto_csv(std::ostream& out, const ParetoSet& set, int stages, bool explicit_flag);

/// printf("%.17g").
std::string format_double(double v);

}  // namespace rkevo
