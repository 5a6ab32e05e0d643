#include "examkit/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "examkit/errors.hpp"

namespace examkit {
namespace {

const char* kHeader = "student_id,item_id,correct,attempt,exam_kind,class_id";

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  fields.push_back(cur);
  return fields;
}

bool parse_int(const std::string& s, int* out) {
  if (s.empty()) return false;
  char* end = nullptr;
  long v = std::strtol(s.c_str(), &end, 10);
  if (!end || *end != '\0' || end == s.c_str()) return false;
  *out = static_cast<int>(v);
  return true;
}

bool is_semester_end(ExamKind k) { return k != ExamKind::PreTest; }

}  // namespace

AttemptFile read_attempts_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  require(bool(is), ErrorCode::Io, "cannot open " + path.string());
  std::string line;
  require(bool(std::getline(is, line)), ErrorCode::Parse,
          "empty file: " + path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  require(line == kHeader, ErrorCode::Parse,
          "unexpected header in " + path.string() + ": '" + line + "'");

  AttemptFile out;
  int line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    ++out.total_rows;
    auto fields = split_fields(line);
    auto reject = [&](const std::string& reason) {
      out.rejected.push_back({line_no, reason, line});
    };
    if (fields.size() != 6) {
      reject("expected 6 fields, got " + std::to_string(fields.size()));
      continue;
    }
    RawAttempt row;
    row.student_id = fields[0];
    row.item_id = fields[1];
    row.class_id = fields[5];
    if (row.student_id.empty() || row.item_id.empty()) {
      reject("empty student_id or item_id");
      continue;
    }
    int correct = 0, attempt = 0;
    if (!parse_int(fields[2], &correct) || (correct != 0 && correct != 1)) {
      reject("correct must be 0 or 1, got '" + fields[2] + "'");
      continue;
    }
    if (!parse_int(fields[3], &attempt) || attempt < 0) {
      reject("attempt must be a non-negative integer, got '" + fields[3] + "'");
      continue;
    }
    auto kind = parse_exam_kind(fields[4]);
    if (!kind) {
      reject("unknown exam_kind '" + fields[4] + "'");
      continue;
    }
    row.correct = correct;
    row.attempt_index = attempt;
    row.exam_kind = *kind;
    out.attempts.push_back(std::move(row));
  }
  return out;
}

void write_attempts_csv(const std::filesystem::path& path,
                        const std::vector<RawAttempt>& rows) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream os(path);
  require(bool(os), ErrorCode::Io, "cannot open " + path.string());
  os << kHeader << '\n';
  for (const auto& r : rows) {
    os << r.student_id << ',' << r.item_id << ',' << r.correct << ','
       << r.attempt_index << ',' << to_string(r.exam_kind) << ',' << r.class_id
       << '\n';
  }
  os.flush();
  require(bool(os), ErrorCode::Io, "write failed for " + path.string());
}

std::vector<ResponseRecord> superscore(const std::vector<RawAttempt>& attempts) {
  // Per-item exam kind must be unambiguous across the whole file.
  std::map<std::string, ExamKind> item_kind;
  for (const auto& a : attempts) {
    auto [it, inserted] = item_kind.emplace(a.item_id, a.exam_kind);
    require(inserted || it->second == a.exam_kind, ErrorCode::DataIntegrity,
            "item '" + a.item_id + "' appears under exam kinds '" +
                to_string(it->second) + "' and '" + to_string(a.exam_kind) + "'");
  }

  std::vector<RawAttempt> sorted = attempts;
  std::sort(sorted.begin(), sorted.end(),
            [](const RawAttempt& a, const RawAttempt& b) {
              if (a.student_id != b.student_id) return a.student_id < b.student_id;
              if (a.item_id != b.item_id) return a.item_id < b.item_id;
              if (a.attempt_index != b.attempt_index)
                return a.attempt_index < b.attempt_index;
              if (a.correct != b.correct) return a.correct < b.correct;
              return a.class_id < b.class_id;
            });

  std::vector<ResponseRecord> out;
  for (const auto& a : sorted) {
    if (!out.empty() && out.back().student_id == a.student_id &&
        out.back().item_id == a.item_id) {
      out.back().correct = std::max(out.back().correct, a.correct);
      continue;
    }
    ResponseRecord r;
    r.student_id = a.student_id;
    r.item_id = a.item_id;
    r.correct = a.correct;
    r.exam_kind = a.exam_kind;
    r.class_id = a.class_id;
    out.push_back(std::move(r));
  }
  return out;
}

BuildResult build_matrix(const std::vector<ResponseRecord>& records,
                         const IngestPolicy& policy) {
  BuildResult result;
  BuildReport& report = result.report;

  std::map<std::string, std::vector<const ResponseRecord*>> by_student;
  for (const auto& r : records) by_student[r.student_id].push_back(&r);
  report.students_in = static_cast<int>(by_student.size());

  std::vector<ResponseRecord> kept;
  for (const auto& [sid, rows] : by_student) {
    bool has_pre = false, has_exam = false;
    for (const auto* r : rows) {
      if (r->exam_kind == ExamKind::PreTest)
        has_pre = true;
      else
        has_exam = true;
    }
    if (policy.require_pretest_and_exam && !(has_pre && has_exam)) {
      std::string reason = !has_pre ? "missing_pretest" : "missing_semester_end";
      ++report.dropped_by_reason[reason];
      report.dropped_students[sid] = reason;
      continue;
    }
    for (const auto* r : rows) kept.push_back(*r);
  }
  report.students_kept = report.students_in -
                         static_cast<int>(report.dropped_students.size());
  require(!kept.empty(), ErrorCode::EmptyDataset,
          "no usable responses after filtering");

  if (policy.absent_is_incorrect) {
    // Cohort item sets: every pre-test item forms one shared group; each
    // class's semester-end items form a per-class group.
    std::set<std::string> pretest_items;
    std::map<std::string, std::set<std::string>> class_exam_items;
    std::map<std::string, ExamKind> kind_of_item;
    std::map<std::string, std::string> class_of_item;
    for (const auto& r : kept) {
      kind_of_item[r.item_id] = r.exam_kind;
      if (r.exam_kind == ExamKind::PreTest) {
        pretest_items.insert(r.item_id);
      } else {
        class_exam_items[r.class_id].insert(r.item_id);
        class_of_item[r.item_id] = r.class_id;
      }
    }
    std::map<std::string, std::set<std::string>> seen;
    std::map<std::string, std::set<std::string>> classes_of_student;
    std::map<std::string, std::string> pretest_class_of_student;
    for (const auto& r : kept) {
      seen[r.student_id].insert(r.item_id);
      if (is_semester_end(r.exam_kind))
        classes_of_student[r.student_id].insert(r.class_id);
      else if (!pretest_class_of_student.count(r.student_id))
        pretest_class_of_student[r.student_id] = r.class_id;
    }
    std::vector<ResponseRecord> fills;
    for (const auto& [sid, seen_items] : seen) {
      auto add_fill = [&](const std::string& item, const std::string& cls) {
        if (seen_items.count(item)) return;
        ResponseRecord r;
        r.student_id = sid;
        r.item_id = item;
        r.correct = 0;
        r.exam_kind = kind_of_item[item];
        r.class_id = cls;
        fills.push_back(std::move(r));
        ++report.filled_absent_cells;
      };
      for (const auto& item : pretest_items)
        add_fill(item, pretest_class_of_student.count(sid)
                           ? pretest_class_of_student[sid]
                           : std::string());
      auto cit = classes_of_student.find(sid);
      if (cit != classes_of_student.end())
        for (const auto& cls : cit->second)
          for (const auto& item : class_exam_items[cls]) add_fill(item, cls);
    }
    kept.insert(kept.end(), fills.begin(), fills.end());
  }

  // Dense indices in lexicographic id order.
  std::set<std::string> sids, iids;
  for (const auto& r : kept) {
    sids.insert(r.student_id);
    iids.insert(r.item_id);
  }
  ResponseMatrix& m = result.matrix;
  m.student_ids.assign(sids.begin(), sids.end());
  m.item_ids.assign(iids.begin(), iids.end());
  std::map<std::string, std::int32_t> sidx, iidx;
  for (std::size_t i = 0; i < m.student_ids.size(); ++i)
    sidx[m.student_ids[i]] = static_cast<std::int32_t>(i);
  for (std::size_t i = 0; i < m.item_ids.size(); ++i)
    iidx[m.item_ids[i]] = static_cast<std::int32_t>(i);

  m.item_kind.assign(m.item_ids.size(), ExamKind::PreTest);
  for (const auto& r : kept) m.item_kind[iidx[r.item_id]] = r.exam_kind;

  std::sort(kept.begin(), kept.end(),
            [](const ResponseRecord& a, const ResponseRecord& b) {
              if (a.student_id != b.student_id) return a.student_id < b.student_id;
              return a.item_id < b.item_id;
            });
  m.responses.reserve(kept.size());
  for (const auto& r : kept) {
    Response cell;
    cell.student = sidx[r.student_id];
    cell.item = iidx[r.item_id];
    cell.correct = static_cast<std::uint8_t>(r.correct);
    m.responses.push_back(cell);
  }

  // Semester-end item sets per class, with a majority kind label.
  std::map<std::string, std::set<std::int32_t>> class_item_sets;
  std::map<std::string, std::map<ExamKind, int>> class_kind_votes;
  for (const auto& r : kept) {
    if (!is_semester_end(r.exam_kind)) continue;
    class_item_sets[r.class_id].insert(iidx[r.item_id]);
  }
  for (const auto& [cls, items] : class_item_sets) {
    m.class_items[cls].assign(items.begin(), items.end());
    std::map<ExamKind, int> votes;
    for (auto idx : items) ++votes[m.item_kind[idx]];
    ExamKind best = ExamKind::AiGenerated;
    int best_n = -1;
    for (const auto& [kind, n] : votes)
      if (n > best_n) {
        best = kind;
        best_n = n;
      }
    m.class_kind[cls] = best;
  }

  m.validate();
  return result;
}

void write_validation_report(const std::filesystem::path& path,
                             const AttemptFile& file, const BuildReport& report) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream os(path);
  require(bool(os), ErrorCode::Io, "cannot open " + path.string());
  os << "rows_seen: " << file.total_rows << '\n';
  os << "rows_accepted: " << file.attempts.size() << '\n';
  os << "rows_rejected: " << file.rejected.size() << '\n';
  for (const auto& r : file.rejected)
    os << "  line " << r.line_number << ": " << r.reason << '\n';
  os << "students_in: " << report.students_in << '\n';
  os << "students_kept: " << report.students_kept << '\n';
  for (const auto& [reason, n] : report.dropped_by_reason)
    os << "dropped_" << reason << ": " << n << '\n';
  for (const auto& [sid, reason] : report.dropped_students)
    os << "  dropped " << sid << ": " << reason << '\n';
  if (report.filled_absent_cells)
    os << "filled_absent_cells: " << report.filled_absent_cells << '\n';
  os.flush();
  require(bool(os), ErrorCode::Io, "write failed for " + path.string());
}

}  // namespace examkit
