#include "slicesim/costmodel.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "slicesim/errors.hpp"

namespace slicesim {
namespace {

constexpr double kSecondsPerDay = 86400.0;

double pow2(int e) { return std::ldexp(1.0, e); }

const char* kind_token(PhaseKind kind) {
  switch (kind) {
    case PhaseKind::gates: return "gates";
    case PhaseKind::contraction: return "contraction";
    case PhaseKind::disk_write: return "write";
    case PhaseKind::disk_read: return "read";
  }
  return "gates";
}

PhaseKind parse_kind(const std::string& token, const std::string& where) {
  if (token == "gates") return PhaseKind::gates;
  if (token == "contraction") return PhaseKind::contraction;
  if (token == "write") return PhaseKind::disk_write;
  if (token == "read") return PhaseKind::disk_read;
  fail(ErrorKind::io, where + ": unknown phase kind: " + token);
}

std::string trim_number(std::string s) {
  if (s.find('.') == std::string::npos) return s;
  while (!s.empty() && s.back() == '0') s.pop_back();
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

}  // namespace

std::string format_exact(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.25f", value);
  return trim_number(buf);
}

MachineProfile load_profile(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open profile: " + path);
  MachineProfile p;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ss(line);
    std::string key;
    double value;
    if (!(ss >> key)) continue;
    if (!(ss >> value) || value <= 0.0)
      fail(ErrorKind::io, path + ":" + std::to_string(line_no) +
                              ": expected a positive value after " + key);
    if (key == "sockets")
      p.sockets = value;
    else if (key == "t_gate_45q")
      p.t_gate_45q = value;
    else if (key == "t_gate_30q")
      p.t_gate_30q = value;
    else if (key == "contraction_rate")
      p.contraction_rate = value;
    else if (key == "injection_rate_per_socket")
      p.injection_rate_per_socket = value;
    else if (key == "disk_rate")
      p.disk_rate = value;
    else if (key == "disk_bytes_per_amp")
      p.disk_bytes_per_amp = value;
    else if (key == "mem_bytes_per_amp")
      p.mem_bytes_per_amp = value;
    else if (key == "hpl_tflops")
      p.hpl_tflops = value;
    else
      fail(ErrorKind::io, path + ":" + std::to_string(line_no) +
                              ": unknown profile key: " + key);
  }
  return p;
}

void save_profile(const MachineProfile& p, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::io, "cannot write profile: " + path);
  char buf[64];
  auto put = [&](const char* key, double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << key << " " << trim_number(buf) << "\n";
  };
  put("sockets", p.sockets);
  put("t_gate_45q", p.t_gate_45q);
  put("t_gate_30q", p.t_gate_30q);
  put("contraction_rate", p.contraction_rate);
  put("injection_rate_per_socket", p.injection_rate_per_socket);
  put("disk_rate", p.disk_rate);
  put("disk_bytes_per_amp", p.disk_bytes_per_amp);
  put("mem_bytes_per_amp", p.mem_bytes_per_amp);
  put("hpl_tflops", p.hpl_tflops);
  if (!out) fail(ErrorKind::io, "failed writing profile: " + path);
}

double scale_gate_time(double t_source, double hpl_source, double hpl_target) {
  if (t_source <= 0.0 || hpl_source <= 0.0 || hpl_target <= 0.0)
    fail(ErrorKind::validation, "gate-time scaling needs positive inputs");
  return t_source * hpl_source / hpl_target;
}

double contraction_flops(int n_qubits, int entanglement_bits) {
  if (n_qubits < 0 || entanglement_bits < 0)
    fail(ErrorKind::validation, "contraction work needs nonnegative sizes");
  return pow2(n_qubits + entanglement_bits + 3);
}

double disk_footprint(int n_qubits, const MachineProfile& profile) {
  return profile.disk_bytes_per_amp * pow2(n_qubits);
}

double all2all_unit_seconds(int n_qubits, const MachineProfile& profile) {
  return profile.mem_bytes_per_amp * pow2(n_qubits) /
         (profile.sockets * profile.injection_rate_per_socket);
}

double disk_transfer_unit_seconds(int n_qubits,
                                  const MachineProfile& profile) {
  return profile.disk_bytes_per_amp * pow2(n_qubits) / profile.disk_rate;
}

CostReport estimate_cost(const std::vector<PhaseSummary>& phases,
                         int n_qubits, int disk_slice_bits,
                         const MachineProfile& profile) {
  if (n_qubits < 1 || n_qubits > 63)
    fail(ErrorKind::validation, "qubit count out of range");
  CostReport r;
  r.n_qubits = n_qubits;
  r.disk_slice_bits = disk_slice_bits;
  const double unit_a2a = all2all_unit_seconds(n_qubits, profile);
  const double unit_disk = disk_transfer_unit_seconds(n_qubits, profile);
  const double slices = pow2(disk_slice_bits);
  double unagg_total = 0.0;
  bool past_contraction = false;
  double pre_rank_sum = 0.0;
  double contraction_rank = 0.0;
  int max_post_rank = -1;
  for (const PhaseSummary& p : phases) {
    CostRow row;
    row.label = p.label;
    row.kind = p.kind;
    row.kernels = p.kernels;
    row.num_gates = p.num_gates;
    row.rank_per_socket = p.rank_per_socket;
    row.gate_class =
        p.kind == PhaseKind::gates ? (p.slow_class ? "45q" : "30q") : "-";
    double compute_s = 0.0;
    if (p.kernels > 0)
      compute_s += p.kernels * slices *
                   (p.slow_class ? profile.t_gate_45q : profile.t_gate_30q);
    double cflops = 0.0;
    if (p.contraction_flops_log2 >= 0) {
      cflops = pow2(p.contraction_flops_log2);
      compute_s += cflops / profile.contraction_rate;
    }
    double a2a_s = p.all2alls * unit_a2a;
    double disk_s = p.disk_transfers * unit_disk;
    // A row reports its own primary component; attached exchanges appear
    // only in the exchange subtotal so subtotals stay column sums.
    row.seconds = p.kind == PhaseKind::disk_write || p.kind == PhaseKind::disk_read
                      ? disk_s
                      : compute_s;
    row.days = row.seconds / kSecondsPerDay;
    double unagg = p.num_gates * 30.0 * pow2(p.unagg_amp_bits) * slices;
    unagg_total += unagg + cflops;
    if (compute_s > 0.0)
      row.achieved_pflops = (unagg + cflops) / compute_s / 1e15;
    r.compute_seconds += compute_s;
    r.all2all_seconds += a2a_s;
    r.disk_seconds += disk_s;
    r.rows.push_back(row);
    // Memory accounting: the tensors feeding the contraction coexist, the
    // merged state afterwards is one tensor touched phase by phase.
    if (p.kind == PhaseKind::contraction) {
      past_contraction = true;
      contraction_rank = pow2(p.rank_per_socket);
    } else if (p.kind == PhaseKind::gates) {
      if (past_contraction)
        max_post_rank = std::max(max_post_rank, p.rank_per_socket);
      else
        pre_rank_sum += pow2(p.rank_per_socket);
    }
  }
  r.total_seconds = r.compute_seconds + r.all2all_seconds + r.disk_seconds;
  r.compute_days = r.compute_seconds / kSecondsPerDay;
  r.all2all_days = r.all2all_seconds / kSecondsPerDay;
  r.disk_days = r.disk_seconds / kSecondsPerDay;
  r.total_days = r.total_seconds / kSecondsPerDay;
  for (CostRow& row : r.rows)
    row.percent = r.total_seconds > 0.0
                      ? 100.0 * row.seconds / r.total_seconds
                      : 0.0;
  r.disk_footprint_bytes = pow2(n_qubits) * profile.disk_bytes_per_amp;
  double rank_sum = pre_rank_sum + contraction_rank +
                    (max_post_rank >= 0 ? pow2(max_post_rank) : 0.0);
  r.total_rank = rank_sum > 0.0 ? std::log2(rank_sum) : 0.0;
  if (r.compute_seconds > 0.0)
    r.compute_achieved_pflops = unagg_total / r.compute_seconds / 1e15;
  return r;
}

PhaseTable load_phase_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open phase table: " + path);
  PhaseTable table;
  bool have_header = false;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ss(line);
    std::string key;
    if (!(ss >> key)) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    if (key == "phases") {
      if (!(ss >> table.n_qubits >> table.disk_slice_bits))
        fail(ErrorKind::io, where + ": expected qubits and slice bits");
      have_header = true;
    } else if (key == "phase") {
      if (!have_header)
        fail(ErrorKind::io, where + ": phase before phases header");
      PhaseSummary p;
      std::string kind, cls, cflops;
      if (!(ss >> p.label >> kind >> p.kernels >> cls >> p.num_gates >>
            p.rank_per_socket >> p.all2alls >> p.disk_transfers >> cflops >>
            p.unagg_amp_bits))
        fail(ErrorKind::io, where + ": truncated phase row");
      p.kind = parse_kind(kind, where);
      if (cls == "45q")
        p.slow_class = true;
      else if (cls != "30q" && cls != "-")
        fail(ErrorKind::io, where + ": unknown gate class: " + cls);
      p.contraction_flops_log2 = cflops == "-" ? -1 : std::stoi(cflops);
      table.phases.push_back(std::move(p));
    } else {
      fail(ErrorKind::io, where + ": unknown directive: " + key);
    }
  }
  if (!have_header) fail(ErrorKind::io, "missing phases header: " + path);
  return table;
}

void save_phase_table(const PhaseTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::io, "cannot write phase table: " + path);
  out << "phases " << table.n_qubits << " " << table.disk_slice_bits << "\n";
  for (const PhaseSummary& p : table.phases) {
    out << "phase " << p.label << " " << kind_token(p.kind) << " "
        << p.kernels << " "
        << (p.kind == PhaseKind::gates ? (p.slow_class ? "45q" : "30q") : "-")
        << " " << p.num_gates << " " << p.rank_per_socket << " "
        << format_exact(p.all2alls) << " " << p.disk_transfers << " ";
    if (p.contraction_flops_log2 >= 0)
      out << p.contraction_flops_log2;
    else
      out << "-";
    out << " " << p.unagg_amp_bits << "\n";
  }
  if (!out) fail(ErrorKind::io, "failed writing phase table: " + path);
}

SweepTable load_sweep_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open sweep table: " + path);
  SweepTable table;
  bool have_header = false;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ss(line);
    std::string key;
    if (!(ss >> key)) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    if (key == "sweep") {
      if (!(ss >> table.n_qubits >> table.disk_slice_bits >>
            table.contraction_flops_log2))
        fail(ErrorKind::io,
             where + ": expected qubits, slice bits, contraction log2");
      have_header = true;
    } else if (key == "row") {
      if (!have_header)
        fail(ErrorKind::io, where + ": row before sweep header");
      SweepRow r;
      if (!(ss >> r.cycles >> r.disk_transfers >> r.all2alls >> r.kernels))
        fail(ErrorKind::io, where + ": truncated sweep row");
      table.rows.push_back(r);
    } else {
      fail(ErrorKind::io, where + ": unknown directive: " + key);
    }
  }
  if (!have_header) fail(ErrorKind::io, "missing sweep header: " + path);
  return table;
}

void save_sweep_table(const SweepTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::io, "cannot write sweep table: " + path);
  out << "sweep " << table.n_qubits << " " << table.disk_slice_bits << " "
      << table.contraction_flops_log2 << "\n";
  for (const SweepRow& r : table.rows)
    out << "row " << r.cycles << " " << r.disk_transfers << " "
        << format_exact(r.all2alls) << " " << r.kernels << "\n";
  if (!out) fail(ErrorKind::io, "failed writing sweep table: " + path);
}

std::vector<SweepResult> estimate_sweep(const SweepTable& table,
                                        const MachineProfile& profile) {
  const double unit_a2a = all2all_unit_seconds(table.n_qubits, profile);
  const double unit_disk = disk_transfer_unit_seconds(table.n_qubits, profile);
  const double slices = pow2(table.disk_slice_bits);
  // The narrow-class kernel budget stays one per qubit at every depth;
  // added cycles only grow the full-width phases.
  const int narrow_kernels = table.n_qubits;
  std::vector<SweepResult> results;
  for (const SweepRow& row : table.rows) {
    if (row.kernels < narrow_kernels)
      fail(ErrorKind::validation, "sweep row has too few kernels");
    SweepResult res;
    res.row = row;
    double compute_s =
        (row.kernels - narrow_kernels) * slices * profile.t_gate_45q +
        narrow_kernels * slices * profile.t_gate_30q +
        pow2(table.contraction_flops_log2) / profile.contraction_rate;
    res.compute_days = compute_s / kSecondsPerDay;
    res.all2all_days = row.all2alls * unit_a2a / kSecondsPerDay;
    res.disk_days = row.disk_transfers * unit_disk / kSecondsPerDay;
    res.total_days = res.compute_days + res.all2all_days + res.disk_days;
    results.push_back(res);
  }
  return results;
}

namespace {

std::string footprint_text(double bytes) {
  char buf[64];
  const double pib = 1125899906842624.0;  // 2^50
  if (bytes >= pib) {
    std::snprintf(buf, sizeof buf, "%.0f PiB", bytes / pib);
  } else if (bytes >= pib / 1024.0) {
    std::snprintf(buf, sizeof buf, "%.0f TiB", bytes * 1024.0 / pib);
  } else {
    std::snprintf(buf, sizeof buf, "%.3g GiB",
                  bytes * 1024.0 * 1024.0 / pib);
  }
  return buf;
}

}  // namespace

std::string render_cost_table(const CostReport& r) {
  std::ostringstream out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-14s %-6s %8s %6s %5s %14s %10s %7s %10s\n",
                "phase", "class", "kernels", "gates", "rank", "seconds",
                "days", "%", "PFLOP/s");
  out << buf;
  auto line = [&](const std::string& label, const std::string& cls,
                  int kernels, int gates, int rank, double seconds,
                  double days, double pct, double pf, bool show_pf) {
    char pf_text[32] = "-";
    if (show_pf) std::snprintf(pf_text, sizeof pf_text, "%.4f", pf);
    char kern_text[16] = "-", gate_text[16] = "-", rank_text[16] = "-";
    if (kernels > 0) std::snprintf(kern_text, sizeof kern_text, "%d", kernels);
    if (gates > 0) std::snprintf(gate_text, sizeof gate_text, "%d", gates);
    if (rank > 0) std::snprintf(rank_text, sizeof rank_text, "%d", rank);
    std::snprintf(buf, sizeof buf,
                  "%-14s %-6s %8s %6s %5s %14.3f %10.6f %7.2f %10s\n",
                  label.c_str(), cls.c_str(), kern_text, gate_text, rank_text,
                  seconds, days, pct, pf_text);
    out << buf;
  };
  for (const CostRow& row : r.rows) {
    std::string label = row.label;
    switch (row.kind) {
      case PhaseKind::gates: label = "gates " + row.label; break;
      case PhaseKind::contraction: label = "contraction"; break;
      case PhaseKind::disk_write: label = "write " + row.label; break;
      case PhaseKind::disk_read: label = "read " + row.label; break;
    }
    line(label, row.gate_class, row.kernels, row.num_gates,
         row.rank_per_socket, row.seconds, row.days, row.percent,
         row.achieved_pflops, row.achieved_pflops > 0.0);
  }
  double pct = r.total_seconds > 0.0 ? 100.0 / r.total_seconds : 0.0;
  line("compute", "-", 0, 0, 0, r.compute_seconds, r.compute_days,
       r.compute_seconds * pct, r.compute_achieved_pflops, true);
  line("all2alls", "-", 0, 0, 0, r.all2all_seconds, r.all2all_days,
       r.all2all_seconds * pct, 0.0, false);
  line("disk", "-", 0, 0, 0, r.disk_seconds, r.disk_days, r.disk_seconds * pct,
       0.0, false);
  line("total", "-", 0, 0, 0, r.total_seconds, r.total_days,
       r.total_seconds > 0.0 ? 100.0 : 0.0, 0.0, false);
  std::snprintf(buf, sizeof buf,
                "state: %d qubits, %.0f disk slices, footprint %s, "
                "log2 peak socket amps %.4f\n",
                r.n_qubits, std::ldexp(1.0, r.disk_slice_bits),
                footprint_text(r.disk_footprint_bytes).c_str(), r.total_rank);
  out << buf;
  return out.str();
}

std::string render_cost_csv(const CostReport& r) {
  std::ostringstream out;
  out << "label,kind,class,kernels,gates,rank,seconds,days,percent,"
         "achieved_pflops\n";
  char buf[256];
  for (const CostRow& row : r.rows) {
    std::snprintf(buf, sizeof buf, "%s,%s,%s,%d,%d,%d,%.6f,%.6f,%.2f,%.4f\n",
                  row.label.c_str(), kind_token(row.kind),
                  row.gate_class.c_str(), row.kernels, row.num_gates,
                  row.rank_per_socket, row.seconds, row.days, row.percent,
                  row.achieved_pflops);
    out << buf;
  }
  double pct = r.total_seconds > 0.0 ? 100.0 / r.total_seconds : 0.0;
  std::snprintf(buf, sizeof buf,
                "compute,subtotal,-,0,0,0,%.6f,%.6f,%.2f,%.4f\n",
                r.compute_seconds, r.compute_days, r.compute_seconds * pct,
                r.compute_achieved_pflops);
  out << buf;
  std::snprintf(buf, sizeof buf, "all2alls,subtotal,-,0,0,0,%.6f,%.6f,%.2f,\n",
                r.all2all_seconds, r.all2all_days, r.all2all_seconds * pct);
  out << buf;
  std::snprintf(buf, sizeof buf, "disk,subtotal,-,0,0,0,%.6f,%.6f,%.2f,\n",
                r.disk_seconds, r.disk_days, r.disk_seconds * pct);
  out << buf;
  std::snprintf(buf, sizeof buf, "total,total,-,0,0,0,%.6f,%.6f,100.00,\n",
                r.total_seconds, r.total_days);
  out << buf;
  return out.str();
}

std::string render_sweep_table(const std::vector<SweepResult>& results,
                               int n_qubits) {
  std::ostringstream out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "depth sweep, %d qubits (days)\n", n_qubits);
  out << buf;
  std::snprintf(buf, sizeof buf, "%6s %9s %9s %8s %9s %9s %9s %9s\n", "cycles",
                "transfers", "all2alls", "kernels", "compute", "exchange",
                "disk", "total");
  out << buf;
  for (const SweepResult& r : results) {
    std::snprintf(buf, sizeof buf,
                  "%6d %9d %9.3f %8d %9.4f %9.4f %9.4f %9.4f\n", r.row.cycles,
                  r.row.disk_transfers, r.row.all2alls, r.row.kernels,
                  r.compute_days, r.all2all_days, r.disk_days, r.total_days);
    out << buf;
  }
  return out.str();
}

std::string render_sweep_csv(const std::vector<SweepResult>& results,
                             int n_qubits) {
  std::ostringstream out;
  out << "qubits,cycles,transfers,all2alls,kernels,compute_days,"
         "all2all_days,disk_days,total_days\n";
  char buf[256];
  for (const SweepResult& r : results) {
    std::snprintf(buf, sizeof buf, "%d,%d,%d,%.6f,%d,%.6f,%.6f,%.6f,%.6f\n",
                  n_qubits, r.row.cycles, r.row.disk_transfers, r.row.all2alls,
                  r.row.kernels, r.compute_days, r.all2all_days, r.disk_days,
                  r.total_days);
    out << buf;
  }
  return out.str();
}

}  // namespace slicesim
