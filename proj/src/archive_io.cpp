#include "rkevo/archive_io.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <set>

#include <json.hpp>

#include "rkevo/errors.hpp"

namespace rkevo {

using nlohmann::json;

namespace {

json record_json(const ArchiveRecord& record, int stages, bool explicit_flag) {
  json metrics = json::object();
  for (std::size_t p = 0; p < record.metrics.size(); ++p) metrics[std::to_string(p + 1)] = record.metrics[p];
  json j = json::object();
  j["order"] = record.order;
  j["x"] = record.x;
  j["metrics"] = std::move(metrics);
  j["fitness"] = record.fitness;
  j["gen"] = record.generation;
  j["seed"] = record.seed;
  j["stages"] = stages;
  j["explicit"] = explicit_flag;
  return j;
}

int infer_explicit_stages(std::size_t n) {
  for (int s = 1; s <= 64; ++s) {
    if (ButcherTableau::parameter_count(s, true) == n) return s;
  }
  return 0;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string archive_record_to_json(const ArchiveRecord& record, int stages, bool explicit_flag) {
  return record_json(record, stages, explicit_flag).dump();
}

void write_archive_jsonl(std::ostream& out, const std::map<int, Archive>& archives) {
  for (const auto& [order, archive] : archives) {
    for (const auto& rec : archive.sorted()) {
      out << archive_record_to_json(rec, archive.stages(), archive.is_explicit()) << '\n';
    }
  }
}

void write_archive_jsonl(const std::filesystem::path& path, const std::map<int, Archive>& archives) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open archive for writing: " + path.string());
  write_archive_jsonl(out, archives);
  if (!out) throw FormatError("failed writing archive: " + path.string());
}

std::vector<int> archive_orders(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open archive: " + path.string());
  std::set<int> orders;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      orders.insert(json::parse(line).at("order").get<int>());
    } catch (const json::exception& e) {
      throw FormatError("archive line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return {orders.begin(), orders.end()};
}

Archive read_archive_jsonl(const std::filesystem::path& path, int order) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open archive: " + path.string());
  std::vector<ArchiveRecord> records;
  int stages = 0;
  bool explicit_flag = true;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      if (j.at("order").get<int>() != order) continue;
      ArchiveRecord rec;
      rec.order = order;
      rec.x = j.at("x").get<std::vector<double>>();
      const json& metrics = j.at("metrics");
      for (std::size_t p = 1; p <= metrics.size(); ++p) rec.metrics.push_back(metrics.at(std::to_string(p)).get<double>());
      rec.fitness = j.at("fitness").get<double>();
      rec.generation = j.at("gen").get<std::size_t>();
      rec.seed = j.at("seed").get<std::uint64_t>();
      const bool ex = j.value("explicit", true);
      const int s = j.contains("stages") ? j.at("stages").get<int>() : infer_explicit_stages(rec.x.size());
      if (s < 1 || ButcherTableau::parameter_count(s, ex) != rec.x.size()) {
        throw FormatError("archive line " + std::to_string(lineno) + ": x length does not match the stage count");
      }
      if (!records.empty() && (s != stages || ex != explicit_flag)) {
        throw FormatError("archive line " + std::to_string(lineno) + ": mixed stage counts within one order");
      }
      stages = s;
      explicit_flag = ex;
      records.push_back(std::move(rec));
    } catch (const json::exception& e) {
      throw FormatError("archive line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (records.empty()) throw FormatError("archive has no records of order " + std::to_string(order));
  Archive archive(order, stages, explicit_flag, std::max<std::size_t>(records.size(), 1));
  for (auto& rec : records) archive.insert(std::move(rec));
  return archive;
}

std::vector<std::string> tableau_column_names(int stages, bool explicit_flag) {
  std::vector<std::string> names;
  for (int i = 1; i <= stages; ++i) {
    const int last = explicit_flag ? i - 1 : stages;
    for (int j = 1; j <= last; ++j) {
      names.push_back("a" + std::to_string(i) + (stages > 9 ? "_" : "") + std::to_string(j));
    }
  }
  for (int i = 1; i <= stages; ++i) names.push_back("w" + std::to_string(i));
  return names;
}

void write_pareto_csv(std::ostream& out, const ParetoSet& set, int stages, bool explicit_flag) {
  std::vector<std::string> header = tableau_column_names(stages, explicit_flag);
  header.emplace_back("fitness");
  for (const auto& enc : set.tree_encodings) header.push_back("e" + enc);
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  for (const auto& member : set.members) {
    bool first = true;
    auto cell = [&](double v) {
      out << (first ? "" : ",") << format_double(v);
      first = false;
    };
    for (double v : member.record.x) cell(v);
    cell(member.record.fitness);
    for (double v : member.errors) cell(v);
    out << '\n';
  }
}

}  // namespace rkevo
