#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "dqadapt/sim.hpp"

namespace dqadapt {

AccuracyStats accuracy(const std::vector<double>& t, const std::vector<Vec3>& nominal,
                       const std::vector<Vec3>& traced) {
  if (t.empty() || t.size() != nominal.size() || t.size() != traced.size()) {
    throw std::invalid_argument("accuracy needs equally long, non-empty traces");
  }
  std::vector<double> e(t.size());
  for (size_t i = 0; i < t.size(); ++i) e[i] = (nominal[i] - traced[i]).norm();

  AccuracyStats out;
  out.samples = e.size();
  out.duration = t.back() - t.front();
  if (e.size() == 1 || out.duration <= 0.0) {
    out.mean = e[0];
  } else {
    double integral = 0.0;
    for (size_t i = 1; i < e.size(); ++i) integral += 0.5 * (e[i] + e[i - 1]) * (t[i] - t[i - 1]);
    out.mean = integral / out.duration;
  }
  if (e.size() > 1) {
    double m = 0.0;
    for (double v : e) m += v;
    m /= static_cast<double>(e.size());
    double ss = 0.0;
    for (double v : e) ss += (v - m) * (v - m);
    out.sd = std::sqrt(ss / static_cast<double>(e.size() - 1));
  }
  return out;
}

AccuracyStats accuracy(const RunRecord& record) {
  std::vector<double> t;
  std::vector<Vec3> nom, tr;
  for (const LogRow* r : record.tracking()) {
    t.push_back(r->t);
    nom.push_back(r->nominal);
    tr.push_back(r->traced);
  }
  return accuracy(t, nom, tr);
}

RunSummary summarize(const RunRecord& record) {
  RunSummary s;
  s.min_true_distance = std::numeric_limits<double>::infinity();
  s.max_error_decrease = -std::numeric_limits<double>::infinity();
  s.min_smallest_sv = std::numeric_limits<double>::infinity();
  bool first_warmup = true;
  for (const auto& r : record.rows) {
    s.min_true_distance = std::min(s.min_true_distance, r.true_min_distance);
    s.max_abs_qdot = std::max(s.max_abs_qdot, r.out.u_q.cwiseAbs().maxCoeff());
    s.max_error_decrease = std::max(s.max_error_decrease, r.out.error_decrease);
    s.flags |= r.out.flags;
    if (r.phase == Phase::Warmup) {
      if (first_warmup) s.warmup_initial_error = r.true_estimation_error;
      first_warmup = false;
      s.warmup_final_error = r.true_estimation_error;
    }
    if (r.phase == Phase::Tracking) {
      s.min_smallest_sv = std::min(s.min_smallest_sv, r.out.smallest_sv);
      s.peak_task_error = std::max(s.peak_task_error, r.out.task_error_norm);
    }
  }
  if (!record.tracking().empty()) s.accuracy = accuracy(record);
  if (std::isinf(s.min_smallest_sv)) s.min_smallest_sv = 0.0;  // no tracking phase
  return s;
}

// ---- per-cycle log ----------------------------------------------------------

namespace {

std::string header_line() {
  std::string h = "t,phase";
  for (int i = 0; i < kJointCount; ++i) h += ",q" + std::to_string(i);
  for (int i = 0; i < kJointCount; ++i) h += ",u" + std::to_string(i);
  for (int i = 0; i < kParamCount; ++i) h += ",a" + std::to_string(i);
  h += ",task_error,estimation_error,true_estimation_error,min_distance,true_min_distance,smallest_sv,"
       "active_constraints,error_decrease,flags";
  for (int i = 0; i < 8; ++i) h += ",x_true" + std::to_string(i);
  for (int i = 0; i < 8; ++i) h += ",y" + std::to_string(i);
  h += ",nominal_x,nominal_y,nominal_z,traced_x,traced_y,traced_z,traced_valid";
  return h;
}

class NumberWriter {
 public:
  explicit NumberWriter(std::string& line) : line_(line) {}
  void operator()(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, ",%.17g", v);
    line_ += buf;
  }
  template <typename Derived>
  void all(const Eigen::MatrixBase<Derived>& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) (*this)(v(i));
  }

 private:
  std::string& line_;
};

}  // namespace

void write_log_csv(std::ostream& os, const RunRecord& record) {
  os << "# dqadapt run log v1\n";
  os << "# scenario=" << record.scenario << '\n';
  os << "# path=" << record.path << '\n';
  os << "# mode=" << to_string(record.mode) << '\n';
  os << "# seed=" << record.seed << '\n';
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", record.rate);
  os << "# rate=" << buf << '\n';
  os << "# aborted=" << (record.aborted ? 1 : 0) << '\n';
  os << "# abort_reason=" << record.abort_reason << '\n';
  os << header_line() << '\n';
  std::string line;
  for (const auto& r : record.rows) {
    std::snprintf(buf, sizeof buf, "%.17g", r.t);
    line = buf;
    line += ',';
    line += to_string(r.phase);
    NumberWriter w(line);
    w.all(r.q);
    w.all(r.out.u_q);
    w.all(r.a_hat);
    w(r.out.task_error_norm);
    w(r.out.estimation_error_norm);
    w(r.true_estimation_error);
    w(r.out.min_distance);
    w(r.true_min_distance);
    w(r.out.smallest_sv);
    line += ',' + std::to_string(r.out.active_constraints);
    w(r.out.error_decrease);
    line += ',' + std::to_string(r.out.flags);
    w.all(r.x_true);
    w.all(r.y);
    w.all(r.nominal);
    w.all(r.traced);
    line += r.traced_valid ? ",1" : ",0";
    os << line << '\n';
  }
}

namespace {

Phase phase_from_string(const std::string& s) {
  if (s == "warmup") return Phase::Warmup;
  if (s == "approach") return Phase::Approach;
  if (s == "tracking") return Phase::Tracking;
  throw std::runtime_error("log: unknown phase '" + s + "'");
}

class CellReader {
 public:
  explicit CellReader(const std::string& line) : ss_(line) {}
  std::string text() {
    std::string cell;
    if (!std::getline(ss_, cell, ',')) throw std::runtime_error("log: short row");
    return cell;
  }
  double number() { return std::stod(text()); }
  template <typename Derived>
  void all(Eigen::MatrixBase<Derived>& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = number();
  }

 private:
  std::stringstream ss_;
};

}  // namespace

RunRecord read_log_csv(std::istream& is) {
  RunRecord rec;
  std::string line;
  bool have_header = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = line.substr(2, eq - 2);
      const std::string value = line.substr(eq + 1);
      if (key == "scenario") rec.scenario = value;
      if (key == "path") rec.path = value;
      if (key == "mode") rec.mode = task_mode_from_string(value);
      if (key == "seed") rec.seed = std::stoull(value);
      if (key == "rate") rec.rate = std::stod(value);
      if (key == "aborted") rec.aborted = value == "1";
      if (key == "abort_reason") rec.abort_reason = value;
      continue;
    }
    if (!have_header) {
      if (line != header_line()) throw std::runtime_error("log: unexpected column header");
      have_header = true;
      continue;
    }
    LogRow r;
    try {
      CellReader c(line);
      r.t = c.number();
      r.phase = phase_from_string(c.text());
      c.all(r.q);
      c.all(r.out.u_q);
      c.all(r.a_hat);
      r.out.task_error_norm = c.number();
      r.out.estimation_error_norm = c.number();
      r.true_estimation_error = c.number();
      r.out.min_distance = c.number();
      r.true_min_distance = c.number();
      r.out.smallest_sv = c.number();
      r.out.active_constraints = std::stoi(c.text());
      r.out.error_decrease = c.number();
      r.out.flags = static_cast<std::uint32_t>(std::stoul(c.text()));
      c.all(r.x_true);
      c.all(r.y);
      c.all(r.nominal);
      c.all(r.traced);
      r.traced_valid = c.text() == "1";
    } catch (const std::exception& e) {
      throw std::runtime_error(std::string("log: bad row: ") + e.what());
    }
    rec.rows.push_back(std::move(r));
  }
  if (!have_header) throw std::runtime_error("log: missing column header");
  return rec;
}

// ---- report -----------------------------------------------------------------

namespace {

struct Accumulator {
  double weighted_mean{0.0};  // sum of duration * mean
  double duration{0.0};
  std::vector<double> distances;
  int runs{0};

  void add(const RunRecord& r, const AccuracyStats& a) {
    weighted_mean += a.duration * a.mean;
    duration += a.duration;
    for (const LogRow* row : r.tracking()) distances.push_back((row->nominal - row->traced).norm());
    ++runs;
  }
  void merge(const Accumulator& o) {
    weighted_mean += o.weighted_mean;
    duration += o.duration;
    distances.insert(distances.end(), o.distances.begin(), o.distances.end());
    runs += o.runs;
  }
  ReportCell cell() const {
    ReportCell c;
    c.runs = runs;
    c.duration = duration;
    c.mean = duration > 0.0 ? weighted_mean / duration : 0.0;
    if (distances.size() > 1) {
      double m = 0.0;
      for (double v : distances) m += v;
      m /= static_cast<double>(distances.size());
      double ss = 0.0;
      for (double v : distances) ss += (v - m) * (v - m);
      c.sd = std::sqrt(ss / static_cast<double>(distances.size() - 1));
    }
    return c;
  }
};

}  // namespace

Report make_report(const std::vector<RunRecord>& records) {
  if (records.empty()) throw std::invalid_argument("report needs at least one record");
  std::map<std::string, std::map<std::string, Accumulator>> acc;
  for (const auto& r : records) {
    if (r.tracking().empty()) continue;
    acc[to_string(r.mode)][r.path].add(r, accuracy(r));
  }
  Report rep;
  for (const char* p : {"line", "square", "triangle", "diamond"}) rep.paths.emplace_back(p);
  for (const auto& [mode, by_path] : acc) {
    for (const auto& [path, a] : by_path) {
      if (std::find(rep.paths.begin(), rep.paths.end(), path) == rep.paths.end()) rep.paths.push_back(path);
    }
  }
  for (const auto& [mode, by_path] : acc) {
    Accumulator overall;
    for (const auto& [path, a] : by_path) {
      rep.cells[mode][path] = a.cell();
      overall.merge(a);
    }
    rep.cells[mode]["overall"] = overall.cell();
  }
  return rep;
}

void write_report_table(std::ostream& os, const Report& report) {
  os << "mode";
  for (const auto& p : report.paths) os << ',' << p;
  os << ",overall\n";
  char buf[64];
  for (const char* mode : {"acpo", "aclo"}) {
    const auto it = report.cells.find(mode);
    if (it == report.cells.end()) continue;
    os << (std::string(mode) == "acpo" ? "ACPO" : "ACLO");
    std::vector<std::string> columns = report.paths;
    columns.emplace_back("overall");
    for (const auto& p : columns) {
      const auto c = it->second.find(p);
      if (c == it->second.end()) {
        os << ",-";
      } else {
        std::snprintf(buf, sizeof buf, ",%.2f (%.2f)", 1e3 * c->second.mean, 1e3 * c->second.sd);
        os << buf;
      }
    }
    os << '\n';
  }
}

void write_report_summary(std::ostream& os, const Report& report) {
  os << "mode,path,runs,duration_s,mean_mm,sd_mm\n";
  char buf[128];
  for (const auto& [mode, by_path] : report.cells) {
    for (const auto& [path, c] : by_path) {
      std::snprintf(buf, sizeof buf, "%s,%s,%d,%.17g,%.17g,%.17g\n", mode.c_str(), path.c_str(), c.runs,
                    c.duration, 1e3 * c.mean, 1e3 * c.sd);
      os << buf;
    }
  }
}

void write_report_series(std::ostream& os, const std::vector<RunRecord>& records) {
  os << "run,mode,path,seed,t,phase,task_error,estimation_error,smallest_sv\n";
  char buf[160];
  for (size_t i = 0; i < records.size(); ++i) {
    const RunRecord& r = records[i];
    for (const auto& row : r.rows) {
      std::snprintf(buf, sizeof buf, "%zu,%s,%s,%llu,%.17g,%s,%.17g,%.17g,%.17g\n", i, to_string(r.mode),
                    r.path.c_str(), static_cast<unsigned long long>(r.seed), row.t, to_string(row.phase),
                    row.out.task_error_norm, row.out.estimation_error_norm, row.out.smallest_sv);
      os << buf;
    }
  }
}

}  // namespace dqadapt
