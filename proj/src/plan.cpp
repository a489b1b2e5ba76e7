#include "slicesim/plan.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <deque>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "slicesim/errors.hpp"

namespace slicesim {

namespace {

// Per-socket ranks at least this wide run at the full-width gate rate.
constexpr int kWideRankThreshold = 31;

struct KindSpec {
  PlanKind kind;
  const char* mode;
  const char* sub;
};

constexpr KindSpec kKindSpecs[] = {
    {PlanKind::define, "define", "-"},
    {PlanKind::new_tensor, "new", "tensor"},
    {PlanKind::new_cache, "new", "cache"},
    {PlanKind::gate, "gate", "2Q"},
    {PlanKind::entgl_ei, "entgl", "EI"},
    {PlanKind::entgl_e2q, "entgl", "E2Q"},
    {PlanKind::entgl_assert, "entgl", "tensor"},
    {PlanKind::slice, "slice", "-"},
    {PlanKind::all2all, "all2all", "-"},
    {PlanKind::disk_write, "write", "-"},
    {PlanKind::disk_read, "read", "-"},
};

const KindSpec& spec_for(PlanKind kind) {
  for (const auto& s : kKindSpecs)
    if (s.kind == kind) return s;
  fail(ErrorKind::validation, "unknown plan line kind");
}

bool parse_int_token(const std::string& tok, int* out) {
  char* end = nullptr;
  long v = std::strtol(tok.c_str(), &end, 10);
  if (end == tok.c_str() || *end != '\0') return false;
  if (v < -(1 << 30) || v > (1 << 30)) return false;
  *out = static_cast<int>(v);
  return true;
}

void check_line_shape(const PlanLine& line, const std::string& where) {
  const auto& a = line.args;
  auto need = [&](bool ok, const char* what) {
    if (!ok) fail(ErrorKind::validation, where + ": " + what);
  };
  switch (line.kind) {
    case PlanKind::define:
      need(!a.empty(), "define needs at least one value");
      break;
    case PlanKind::new_tensor: {
      need(a.size() >= 2, "new tensor needs local and global counts");
      need(a[0] >= 0 && a[1] >= 0, "negative tensor extent");
      need(a.size() == size_t(2) + size_t(a[0]) + size_t(a[1]),
           "tensor qubit list does not match its extents");
      need(a[0] + a[1] >= 1, "empty tensor");
      break;
    }
    case PlanKind::new_cache: {
      need(!a.empty(), "cache needs a width");
      need(a[0] >= 1 && a[0] <= 5, "cache width must be 1..5");
      need(a.size() == size_t(1) + size_t(a[0]),
           "cache qubit list does not match its width");
      break;
    }
    case PlanKind::gate:
      need(a.size() == 2, "gate takes two qubits");
      break;
    case PlanKind::entgl_ei:
      need(a.size() == 3, "EI takes a qubit and two labels");
      need(a[1] < 0 && a[2] < 0 && a[1] != a[2], "EI labels must be negative");
      break;
    case PlanKind::entgl_e2q:
      need(a.size() == 4, "E2Q takes two qubits and two labels");
      need(a[2] < 0 && a[3] < 0 && a[2] != a[3],
           "E2Q labels must be negative");
      break;
    case PlanKind::entgl_assert: {
      need(a.size() >= 2, "tensor assertion needs extents");
      need(a[0] >= 0 && a[1] >= 0, "negative assertion extent");
      need(a.size() == size_t(2) + size_t(a[0]) + size_t(a[1]),
           "assertion list does not match its extents");
      break;
    }
    case PlanKind::slice:
      break;  // empty slice clears every socket set
    case PlanKind::all2all:
      need(!a.empty(), "exchange needs a target set");
      break;
    case PlanKind::disk_write:
    case PlanKind::disk_read:
      need(!a.empty(), "disk pass needs its fixed bits");
      break;
  }
}

std::string row_label(int pass, int minor) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%d.%d", pass, minor);
  return buf;
}

std::set<int> to_set(const std::vector<int>& v) {
  return std::set<int>(v.begin(), v.end());
}

std::vector<int> sorted(std::vector<int> v) {
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

Plan parse_plan_text(const std::string& text, const std::string& name) {
  Plan plan;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    std::istringstream toks(raw);
    std::string mode, sub;
    if (!(toks >> mode)) continue;
    std::string where = name + ":" + std::to_string(lineno);
    if (!(toks >> sub))
      fail(ErrorKind::validation, where + ": missing second column");
    const KindSpec* found = nullptr;
    for (const auto& s : kKindSpecs)
      if (mode == s.mode && sub == s.sub) found = &s;
    if (!found)
      fail(ErrorKind::validation,
           where + ": unknown directive '" + mode + " " + sub + "'");
    PlanLine line;
    line.kind = found->kind;
    std::string tok;
    while (toks >> tok) {
      int v = 0;
      if (!parse_int_token(tok, &v))
        fail(ErrorKind::validation, where + ": bad argument '" + tok + "'");
      line.args.push_back(v);
    }
    check_line_shape(line, where);
    plan.lines.push_back(std::move(line));
  }
  if (plan.lines.empty()) fail(ErrorKind::validation, name + ": empty plan");
  return plan;
}

Plan load_plan(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open plan file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_plan_text(buf.str(), path);
}

std::string plan_text(const Plan& plan) {
  std::ostringstream out;
  for (const auto& line : plan.lines) {
    const KindSpec& s = spec_for(line.kind);
    char head[24];
    std::snprintf(head, sizeof head, "%-7s %-7s", s.mode, s.sub);
    std::string row = head;
    for (int a : line.args) row += " " + std::to_string(a);
    while (!row.empty() && row.back() == ' ') row.pop_back();
    out << row << "\n";
  }
  return out.str();
}

void save_plan(const Plan& plan, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::io, "cannot write plan file " + path);
  out << plan_text(plan);
  if (!out) fail(ErrorKind::io, "failed writing plan file " + path);
}

namespace {

struct SymFamily {
  int ordinal = 0;
  std::set<int> qubits;
  std::set<int> labels;
  std::set<int> socket;
  std::set<int> disk;
  int row_kernels = 0;
  int row_gates = 0;
  double row_a2a = 0.0;
};

}  // namespace

PhaseTable summarize(const Plan& plan) {
  // Pre-scan: the socket width is fixed by the first slice line and the
  // disk slice width by the first write, wherever they appear.
  int socket_bits = 0;
  int disk_bits = 0;
  bool saw_slice = false, saw_write = false;
  for (const auto& line : plan.lines) {
    if (line.kind == PlanKind::slice && !saw_slice) {
      saw_slice = true;
      socket_bits = static_cast<int>(line.args.size());
    }
    if (line.kind == PlanKind::disk_write && !saw_write) {
      saw_write = true;
      disk_bits = static_cast<int>(line.args.size());
    }
  }

  int n = -1;
  std::set<int> disk_union;
  bool have_union = false;
  int defines_seen = 0;

  std::vector<SymFamily> fams;
  int next_ordinal = 1;
  std::vector<PhaseSummary> rows;

  bool cache_open = false;
  std::set<int> cache_qubits;
  int cache_fam = -1;

  struct PendingDefer {
    int phi_ordinal = 0;
    int phi_qubit = 0;
  };
  std::map<std::pair<int, int>, PendingDefer> pending;
  std::set<int> used_labels;

  bool merged = false;
  bool after_write = false;
  int pass = 0, minor = 0;
  double pending_a2a = 0.0;
  int write_count = 0, read_count = 0;

  auto close_cache = [&]() {
    cache_open = false;
    cache_qubits.clear();
    cache_fam = -1;
  };

  auto family_rank = [](const SymFamily& f) {
    return static_cast<int>(f.qubits.size() + f.labels.size());
  };

  auto find_owner = [&](int q) -> int {
    for (size_t i = 0; i < fams.size(); ++i)
      if (fams[i].qubits.count(q)) return static_cast<int>(i);
    return -1;
  };

  auto emit_gate_row = [&](SymFamily& f, const std::string& label) {
    PhaseSummary row;
    row.label = label;
    row.kind = PhaseKind::gates;
    row.kernels = f.row_kernels;
    row.num_gates = f.row_gates;
    row.rank_per_socket =
        family_rank(f) - static_cast<int>(f.disk.size()) - socket_bits;
    row.slow_class = row.rank_per_socket >= kWideRankThreshold;
    row.all2alls = f.row_a2a;
    row.unagg_amp_bits = family_rank(f) - disk_bits;
    rows.push_back(row);
    f.row_kernels = 0;
    f.row_gates = 0;
    f.row_a2a = 0.0;
  };

  // Post-merge gate rows close at the next exchange or disk line and carry
  // the exchanges that ran ahead of their gates.
  auto close_post_row = [&](SymFamily& f) {
    if (f.row_kernels == 0 && f.row_gates == 0) return;
    f.row_a2a = pending_a2a;
    pending_a2a = 0.0;
    emit_gate_row(f, row_label(pass, minor));
  };

  auto check_after_write = [&](const char* what) {
    if (after_write)
      fail(ErrorKind::validation,
           std::string(what) +
               " after a write would desync the disk copy; read first");
  };

  for (size_t li = 0; li < plan.lines.size(); ++li) {
    const PlanLine& line = plan.lines[li];
    const auto& a = line.args;
    std::string where = "plan line " + std::to_string(li + 1);
    check_line_shape(line, where);

    if (line.kind == PlanKind::define) {
      if (static_cast<int>(li) != defines_seen)
        fail(ErrorKind::validation, where + ": define lines must lead");
      if (defines_seen == 0) {
        if (a.size() != 1 || a[0] < 1 || a[0] > 63)
          fail(ErrorKind::validation, where + ": qubit count must be 1..63");
        n = a[0];
      } else if (defines_seen == 1) {
        for (int q : a) {
          if (q < 0 || q >= n)
            fail(ErrorKind::validation, where + ": disk qubit out of range");
          if (!disk_union.insert(q).second)
            fail(ErrorKind::validation, where + ": duplicate disk qubit");
        }
        have_union = true;
      } else {
        fail(ErrorKind::validation, where + ": too many define lines");
      }
      ++defines_seen;
      continue;
    }
    if (n < 0)
      fail(ErrorKind::validation, where + ": plan must define its qubits");

    switch (line.kind) {
      case PlanKind::define:
        break;  // handled above

      case PlanKind::new_tensor: {
        close_cache();
        check_after_write("a tensor line");
        int nl = a[0], ng = a[1];
        std::vector<int> locals(a.begin() + 2, a.begin() + 2 + nl);
        std::vector<int> globals(a.begin() + 2 + nl, a.end());
        std::set<int> all_qs;
        for (int q : locals) {
          if (q < 0 || q >= n)
            fail(ErrorKind::validation, where + ": qubit out of range");
          if (!all_qs.insert(q).second)
            fail(ErrorKind::validation, where + ": duplicate qubit");
        }
        for (int q : globals) {
          if (q < 0 || q >= n)
            fail(ErrorKind::validation, where + ": qubit out of range");
          if (!all_qs.insert(q).second)
            fail(ErrorKind::validation, where + ": duplicate qubit");
        }
        std::vector<int> overlap;
        for (size_t i = 0; i < fams.size(); ++i)
          for (int q : fams[i].qubits)
            if (all_qs.count(q)) {
              overlap.push_back(static_cast<int>(i));
              break;
            }
        if (overlap.empty()) {
          if (ng != 0)
            fail(ErrorKind::validation,
                 where + ": fresh tensors are born undistributed");
          SymFamily f;
          f.ordinal = next_ordinal++;
          f.qubits = all_qs;
          fams.push_back(std::move(f));
          break;
        }
        // Merge: exactly two live tensors fold over their shared labels.
        if (overlap.size() != 2)
          fail(ErrorKind::validation,
               where + ": a merge folds exactly two tensors");
        if (merged)
          fail(ErrorKind::validation, where + ": only one merge per plan");
        if (!pending.empty())
          fail(ErrorKind::validation,
               where + ": unresolved deferred couplers at merge");
        SymFamily& fa = fams[overlap[0]];
        SymFamily& fb = fams[overlap[1]];
        std::set<int> joint;
        joint.insert(fa.qubits.begin(), fa.qubits.end());
        joint.insert(fb.qubits.begin(), fb.qubits.end());
        if (joint != all_qs)
          fail(ErrorKind::validation,
               where + ": merge must cover exactly the two tensors");
        if (fa.labels != fb.labels)
          fail(ErrorKind::validation,
               where + ": merge inputs must share their labels");
        if (!fa.disk.empty() || !fb.disk.empty())
          fail(ErrorKind::validation,
               where + ": merge inputs cannot hold disk bits");
        for (int q : globals)
          if (have_union && !disk_union.count(q))
            fail(ErrorKind::validation,
                 where + ": merge globals outside the disk union");
        SymFamily* first = fa.ordinal < fb.ordinal ? &fa : &fb;
        SymFamily* second = fa.ordinal < fb.ordinal ? &fb : &fa;
        emit_gate_row(*first, std::to_string(first->ordinal));
        emit_gate_row(*second, std::to_string(second->ordinal));
        int rank_a = family_rank(*first) - socket_bits;
        int rank_b = family_rank(*second) - socket_bits;
        PhaseSummary crow;
        crow.label = "contraction";
        crow.kind = PhaseKind::contraction;
        crow.rank_per_socket = std::max(rank_a, rank_b) + 3;
        crow.contraction_flops_log2 =
            static_cast<int>(first->qubits.size() + second->qubits.size() +
                             first->labels.size()) +
            3;
        rows.push_back(crow);
        SymFamily out;
        out.ordinal = next_ordinal++;
        out.qubits = joint;
        out.socket.insert(first->socket.begin(), first->socket.end());
        out.socket.insert(second->socket.begin(), second->socket.end());
        out.disk = to_set(globals);
        for (int q : out.disk) out.socket.erase(q);
        std::vector<SymFamily> rest;
        for (size_t i = 0; i < fams.size(); ++i)
          if (static_cast<int>(i) != overlap[0] &&
              static_cast<int>(i) != overlap[1])
            rest.push_back(std::move(fams[i]));
        rest.push_back(std::move(out));
        fams = std::move(rest);
        merged = true;
        pass = fams.back().ordinal;
        minor = pass;
        pending_a2a = 0.0;
        break;
      }

      case PlanKind::new_cache: {
        close_cache();
        check_after_write("a kernel");
        std::set<int> qs;
        int owner = -1;
        for (size_t i = 1; i < a.size(); ++i) {
          int q = a[i];
          if (q < 0 || q >= n)
            fail(ErrorKind::validation, where + ": cache qubit out of range");
          if (!qs.insert(q).second)
            fail(ErrorKind::validation, where + ": duplicate cache qubit");
          int f = find_owner(q);
          if (f < 0)
            fail(ErrorKind::validation, where + ": cache qubit not live");
          if (owner < 0) owner = f;
          if (owner != f)
            fail(ErrorKind::validation,
                 where + ": cache spans more than one tensor");
          if (fams[f].socket.count(q) || fams[f].disk.count(q))
            fail(ErrorKind::validation,
                 where + ": cache qubit is not local");
        }
        cache_open = true;
        cache_qubits = std::move(qs);
        cache_fam = owner;
        fams[owner].row_kernels += 1;
        break;
      }

      case PlanKind::gate: {
        if (!cache_open)
          fail(ErrorKind::validation, where + ": gate outside a kernel");
        if (a[0] == a[1])
          fail(ErrorKind::validation, where + ": coupler on one qubit");
        if (!cache_qubits.count(a[0]) || !cache_qubits.count(a[1]))
          fail(ErrorKind::validation, where + ": gate outside its kernel");
        fams[cache_fam].row_gates += 1;
        break;
      }

      case PlanKind::entgl_ei: {
        close_cache();
        check_after_write("a deferral");
        int q = a[0], l1 = a[1], l2 = a[2];
        int f = find_owner(q);
        if (f < 0) fail(ErrorKind::validation, where + ": qubit not live");
        if (fams[f].socket.count(q) || fams[f].disk.count(q))
          fail(ErrorKind::validation, where + ": deferral qubit not local");
        if (used_labels.count(l1) || used_labels.count(l2))
          fail(ErrorKind::validation, where + ": label already used");
        used_labels.insert(l1);
        used_labels.insert(l2);
        fams[f].labels.insert(l1);
        fams[f].labels.insert(l2);
        pending[{l1, l2}] = {fams[f].ordinal, q};
        break;
      }

      case PlanKind::entgl_e2q: {
        close_cache();
        check_after_write("a deferral");
        int q = a[0], far = a[1], l1 = a[2], l2 = a[3];
        auto it = pending.find({l1, l2});
        if (it == pending.end())
          fail(ErrorKind::validation, where + ": labels were never opened");
        if (it->second.phi_qubit != far)
          fail(ErrorKind::validation,
               where + ": far operand does not match the deferral");
        int f = find_owner(q);
        if (f < 0) fail(ErrorKind::validation, where + ": qubit not live");
        if (fams[f].ordinal == it->second.phi_ordinal)
          fail(ErrorKind::validation,
               where + ": both ends of a deferral in one tensor");
        if (fams[f].socket.count(q) || fams[f].disk.count(q))
          fail(ErrorKind::validation, where + ": deferral qubit not local");
        fams[f].labels.insert(l1);
        fams[f].labels.insert(l2);
        pending.erase(it);
        break;
      }

      case PlanKind::entgl_assert: {
        close_cache();
        int nq = a[0], ne = a[1];
        std::set<int> qs(a.begin() + 2, a.begin() + 2 + nq);
        std::set<int> ls(a.begin() + 2 + nq, a.end());
        if (static_cast<int>(qs.size()) != nq ||
            static_cast<int>(ls.size()) != ne)
          fail(ErrorKind::validation, where + ": duplicate assertion entry");
        bool found = false;
        for (const auto& f : fams)
          if (f.qubits == qs && f.labels == ls) found = true;
        if (!found)
          fail(ErrorKind::validation,
               where + ": no live tensor matches the assertion");
        break;
      }

      case PlanKind::slice: {
        close_cache();
        check_after_write("a re-bucket");
        std::set<int> args = to_set(a);
        if (args.size() != a.size())
          fail(ErrorKind::validation, where + ": duplicate slice qubit");
        for (int q : args) {
          int f = find_owner(q);
          if (f < 0) fail(ErrorKind::validation, where + ": qubit not live");
          if (fams[f].disk.count(q))
            fail(ErrorKind::validation, where + ": slice bit is on disk");
        }
        if (merged && (fams.back().row_kernels || fams.back().row_gates))
          fail(ErrorKind::validation,
               where + ": free re-bucket only at a pass boundary");
        for (auto& f : fams) {
          std::set<int> mine;
          for (int q : args)
            if (f.qubits.count(q)) mine.insert(q);
          f.socket = std::move(mine);
        }
        break;
      }

      case PlanKind::all2all: {
        close_cache();
        check_after_write("an exchange");
        std::set<int> args = to_set(a);
        if (args.size() != a.size())
          fail(ErrorKind::validation, where + ": duplicate exchange qubit");
        int f = find_owner(*args.begin());
        if (f < 0) fail(ErrorKind::validation, where + ": qubit not live");
        for (int q : args) {
          if (!fams[f].qubits.count(q))
            fail(ErrorKind::validation,
                 where + ": exchange spans more than one tensor");
          if (fams[f].disk.count(q))
            fail(ErrorKind::validation, where + ": exchange bit is on disk");
        }
        if (args == fams[f].socket)
          fail(ErrorKind::validation,
               where + ": exchange must change the socket set");
        int max_rank = 0;
        for (const auto& g : fams) max_rank = std::max(max_rank, family_rank(g));
        double weight = std::min(1.0, std::exp2(max_rank + 2 - n));
        if (!merged) {
          fams[f].row_a2a += weight;
        } else {
          close_post_row(fams[f]);
          ++minor;
          pending_a2a += weight;
        }
        fams[f].socket = std::move(args);
        break;
      }

      case PlanKind::disk_write: {
        close_cache();
        if (!have_union)
          fail(ErrorKind::validation,
               where + ": disk pass without a disk union");
        if (!merged)
          fail(ErrorKind::validation,
               where + ": disk passes run on the merged state");
        if (static_cast<int>(a.size()) != disk_bits)
          fail(ErrorKind::validation, where + ": disk sets must share a size");
        std::set<int> args = to_set(a);
        if (args.size() != a.size())
          fail(ErrorKind::validation, where + ": duplicate disk qubit");
        for (int q : args)
          if (!disk_union.count(q))
            fail(ErrorKind::validation, where + ": bit outside the disk union");
        SymFamily& f = fams.back();
        if (fams.size() != 1 || static_cast<int>(f.qubits.size()) != n ||
            !f.labels.empty())
          fail(ErrorKind::validation,
               where + ": writes need the full merged state");
        if (!f.disk.empty() && f.disk != args)
          fail(ErrorKind::validation,
               where + ": write set must match the pass's fixed bits");
        close_post_row(f);
        ++write_count;
        PhaseSummary row;
        row.label = "w" + std::to_string(write_count);
        row.kind = PhaseKind::disk_write;
        row.disk_transfers = 1;
        row.all2alls = 1.0 + pending_a2a;
        pending_a2a = 0.0;
        rows.push_back(row);
        after_write = true;
        break;
      }

      case PlanKind::disk_read: {
        close_cache();
        if (!merged)
          fail(ErrorKind::validation,
               where + ": disk passes run on the merged state");
        if (write_count <= read_count)
          fail(ErrorKind::validation, where + ": nothing on disk to read");
        if (static_cast<int>(a.size()) != disk_bits)
          fail(ErrorKind::validation, where + ": disk sets must share a size");
        std::set<int> args = to_set(a);
        if (args.size() != a.size())
          fail(ErrorKind::validation, where + ": duplicate disk qubit");
        for (int q : args)
          if (!disk_union.count(q))
            fail(ErrorKind::validation, where + ": bit outside the disk union");
        SymFamily& f = fams.back();
        close_post_row(f);
        ++read_count;
        PhaseSummary row;
        row.label = "r" + std::to_string(read_count);
        row.kind = PhaseKind::disk_read;
        row.disk_transfers = 1;
        row.all2alls = 1.0 + pending_a2a;
        pending_a2a = 0.0;
        rows.push_back(row);
        f.disk = std::move(args);
        for (int q : f.disk) f.socket.erase(q);
        ++pass;
        minor = pass;
        after_write = false;
        break;
      }
    }
  }

  if (n < 0) fail(ErrorKind::validation, "plan must define its qubits");
  if (!pending.empty())
    fail(ErrorKind::validation, "plan ends with unresolved deferrals");
  close_cache();
  if (merged) {
    close_post_row(fams.back());
    if (pending_a2a > 0.0) {
      PhaseSummary row;
      row.label = row_label(pass, minor);
      row.kind = PhaseKind::gates;
      row.all2alls = pending_a2a;
      row.rank_per_socket = 0;
      rows.push_back(row);
    }
  } else {
    std::sort(fams.begin(), fams.end(),
              [](const SymFamily& x, const SymFamily& y) {
                return x.ordinal < y.ordinal;
              });
    for (auto& f : fams)
      if (f.row_kernels || f.row_gates || f.row_a2a != 0.0)
        emit_gate_row(f, std::to_string(f.ordinal));
  }

  PhaseTable table;
  table.n_qubits = n;
  table.disk_slice_bits = disk_bits;
  table.phases = std::move(rows);
  return table;
}

namespace {

struct FlatGate {
  int a = 0;
  int b = 0;
  int layer = 0;
};

void flush_group(Plan& plan, std::vector<int>& grp_qubits,
                 std::vector<std::pair<int, int>>& grp_gates) {
  if (grp_gates.empty()) {
    grp_qubits.clear();
    return;
  }
  PlanLine cache;
  cache.kind = PlanKind::new_cache;
  cache.args.push_back(static_cast<int>(grp_qubits.size()));
  for (int q : grp_qubits) cache.args.push_back(q);
  plan.lines.push_back(std::move(cache));
  for (const auto& g : grp_gates)
    plan.lines.push_back({PlanKind::gate, {g.first, g.second}});
  grp_qubits.clear();
  grp_gates.clear();
}

void group_add(Plan& plan, std::vector<int>& grp_qubits,
               std::vector<std::pair<int, int>>& grp_gates, int a, int b,
               int max_qubits) {
  std::vector<int> widened = grp_qubits;
  for (int q : {a, b})
    if (std::find(widened.begin(), widened.end(), q) == widened.end())
      widened.push_back(q);
  if (static_cast<int>(widened.size()) > max_qubits) {
    flush_group(plan, grp_qubits, grp_gates);
    widened = {a, b};
    if (a == b) widened = {a};
  }
  grp_qubits = std::move(widened);
  grp_gates.emplace_back(a, b);
}

}  // namespace

Plan expand_partition(const Circuit& merged, const PartitionSpec& spec) {
  int n = merged.n_qubits;
  if (n < 2) fail(ErrorKind::validation, "partition needs at least 2 qubits");
  if (spec.max_kernel_qubits < 2 || spec.max_kernel_qubits > 5)
    fail(ErrorKind::validation, "kernel width must be 2..5");
  std::set<int> phi = to_set(spec.phi_qubits);
  if (phi.size() != spec.phi_qubits.size())
    fail(ErrorKind::validation, "duplicate qubit in the split");
  if (phi.empty() || static_cast<int>(phi.size()) >= n)
    fail(ErrorKind::validation, "split must be a proper nonempty subset");
  for (int q : phi)
    if (q < 0 || q >= n)
      fail(ErrorKind::validation, "split qubit out of range");
  if (spec.defer_layers < 0 ||
      spec.defer_layers > static_cast<int>(merged.layers.size()))
    fail(ErrorKind::validation, "split prefix outside the circuit");
  bool use_disk = !spec.disk_first.empty() || !spec.disk_second.empty();
  std::set<int> disk_a = to_set(spec.disk_first);
  std::set<int> disk_b = to_set(spec.disk_second);
  if (use_disk) {
    if (disk_a.empty() || disk_b.empty() ||
        disk_a.size() != spec.disk_first.size() ||
        disk_b.size() != spec.disk_second.size() ||
        disk_a.size() != disk_b.size())
      fail(ErrorKind::validation, "disk sets must be two same-size sets");
    for (int q : disk_a)
      if (disk_b.count(q))
        fail(ErrorKind::validation, "disk sets must be disjoint");
    for (int q : spec.disk_first)
      if (q < 0 || q >= n)
        fail(ErrorKind::validation, "disk qubit out of range");
    for (int q : spec.disk_second)
      if (q < 0 || q >= n)
        fail(ErrorKind::validation, "disk qubit out of range");
  }

  std::vector<FlatGate> flat;
  for (size_t l = 0; l < merged.layers.size(); ++l)
    for (const auto& g : merged.layers[l]) {
      if (!g.is_two_qubit())
        fail(ErrorKind::validation,
             "partition expects a merged two-qubit circuit");
      flat.push_back({g.q0, g.q1, static_cast<int>(l)});
    }

  auto in_phi = [&](int q) { return phi.count(q) != 0; };
  int prefix_end = 0;
  while (prefix_end < static_cast<int>(flat.size()) &&
         flat[prefix_end].layer < spec.defer_layers)
    ++prefix_end;

  // Labels for deferred crossing couplers, in encounter order.
  std::map<int, std::pair<int, int>> defer_labels;
  int defer_count = 0;
  for (int i = 0; i < prefix_end; ++i)
    if (in_phi(flat[i].a) != in_phi(flat[i].b)) {
      ++defer_count;
      defer_labels[i] = {-(2 * defer_count - 1), -(2 * defer_count)};
    }

  Plan plan;
  plan.lines.push_back({PlanKind::define, {n}});
  std::vector<int> union_bits;
  if (use_disk) {
    for (int q : disk_a) union_bits.push_back(q);
    for (int q : disk_b) union_bits.push_back(q);
    union_bits = sorted(union_bits);
    plan.lines.push_back({PlanKind::define, union_bits});
  }

  std::vector<int> phi_sorted(phi.begin(), phi.end());
  std::vector<int> chi_sorted;
  for (int q = 0; q < n; ++q)
    if (!phi.count(q)) chi_sorted.push_back(q);

  auto emit_half = [&](const std::vector<int>& half, bool phi_side) {
    PlanLine born;
    born.kind = PlanKind::new_tensor;
    born.args.push_back(static_cast<int>(half.size()));
    born.args.push_back(0);
    for (int q : half) born.args.push_back(q);
    plan.lines.push_back(std::move(born));
    std::set<int> mine(half.begin(), half.end());
    std::vector<int> grp_qubits;
    std::vector<std::pair<int, int>> grp_gates;
    for (int i = 0; i < prefix_end; ++i) {
      const FlatGate& g = flat[i];
      bool a_in = mine.count(g.a), b_in = mine.count(g.b);
      if (a_in && b_in) {
        group_add(plan, grp_qubits, grp_gates, g.a, g.b,
                  spec.max_kernel_qubits);
      } else if (a_in || b_in) {
        flush_group(plan, grp_qubits, grp_gates);
        auto [l1, l2] = defer_labels.at(i);
        int near = a_in ? g.a : g.b;
        int far = a_in ? g.b : g.a;
        if (phi_side)
          plan.lines.push_back({PlanKind::entgl_ei, {near, l1, l2}});
        else
          plan.lines.push_back({PlanKind::entgl_e2q, {near, far, l1, l2}});
      }
    }
    flush_group(plan, grp_qubits, grp_gates);
  };

  emit_half(phi_sorted, true);
  emit_half(chi_sorted, false);

  std::vector<int> all_labels;
  for (int g = 1; g <= defer_count; ++g) {
    all_labels.push_back(-(2 * g - 1));
    all_labels.push_back(-(2 * g));
  }
  for (const auto& half : {phi_sorted, chi_sorted}) {
    PlanLine check;
    check.kind = PlanKind::entgl_assert;
    check.args.push_back(static_cast<int>(half.size()));
    check.args.push_back(static_cast<int>(all_labels.size()));
    for (int q : half) check.args.push_back(q);
    for (int l : all_labels) check.args.push_back(l);
    plan.lines.push_back(std::move(check));
  }

  if (spec.socket_bits_per_half > 0) {
    auto tail = [&](const std::vector<int>& half) {
      int k = std::min<int>(spec.socket_bits_per_half,
                            static_cast<int>(half.size()));
      return std::vector<int>(half.end() - k, half.end());
    };
    std::vector<int> sp = tail(phi_sorted);
    std::vector<int> sc = tail(chi_sorted);
    plan.lines.push_back({PlanKind::all2all, sp});
    plan.lines.push_back({PlanKind::all2all, sc});
    std::vector<int> both = sp;
    both.insert(both.end(), sc.begin(), sc.end());
    plan.lines.push_back({PlanKind::slice, sorted(both)});
  }

  std::set<int> frozen = use_disk ? disk_a : std::set<int>{};
  std::set<int> other = use_disk ? disk_b : std::set<int>{};
  {
    PlanLine join;
    join.kind = PlanKind::new_tensor;
    std::vector<int> locals;
    for (int q = 0; q < n; ++q)
      if (!frozen.count(q)) locals.push_back(q);
    join.args.push_back(static_cast<int>(locals.size()));
    join.args.push_back(static_cast<int>(frozen.size()));
    for (int q : locals) join.args.push_back(q);
    for (int q : frozen) join.args.push_back(q);
    plan.lines.push_back(std::move(join));
  }
  if (spec.socket_bits_per_half > 0)
    plan.lines.push_back({PlanKind::slice, {}});

  // Post-merge scheduling: run every coupler that is next in both of its
  // qubits' sequences and clear of the fixed bits; hop the store when stuck.
  std::vector<std::deque<int>> queues(n);
  for (int i = prefix_end; i < static_cast<int>(flat.size()); ++i) {
    queues[flat[i].a].push_back(i);
    queues[flat[i].b].push_back(i);
  }
  std::set<int> remaining;
  for (int i = prefix_end; i < static_cast<int>(flat.size()); ++i)
    remaining.insert(i);

  std::vector<int> cur_socket;
  int empty_passes = 0;
  while (true) {
    std::vector<int> pass_gates;
    bool progress = true;
    while (progress) {
      progress = false;
      for (int id : remaining) {
        const FlatGate& g = flat[id];
        if (queues[g.a].empty() || queues[g.b].empty()) continue;
        if (queues[g.a].front() != id || queues[g.b].front() != id) continue;
        if (frozen.count(g.a) || frozen.count(g.b)) continue;
        queues[g.a].pop_front();
        queues[g.b].pop_front();
        pass_gates.push_back(id);
        remaining.erase(id);
        progress = true;
        break;
      }
    }

    // Group the pass into kernels, optionally exchanging socket bits at a
    // fixed cadence onto qubits the next stretch leaves untouched.
    struct Group {
      std::vector<int> qubits;
      std::vector<std::pair<int, int>> gates;
    };
    std::vector<Group> groups;
    for (int id : pass_gates) {
      const FlatGate& g = flat[id];
      bool added = false;
      if (!groups.empty()) {
        std::vector<int> widened = groups.back().qubits;
        for (int q : {g.a, g.b})
          if (std::find(widened.begin(), widened.end(), q) == widened.end())
            widened.push_back(q);
        if (static_cast<int>(widened.size()) <= spec.max_kernel_qubits) {
          groups.back().qubits = std::move(widened);
          groups.back().gates.emplace_back(g.a, g.b);
          added = true;
        }
      }
      if (!added) groups.push_back({{g.a, g.b}, {{g.a, g.b}}});
    }
    for (size_t k = 0; k < groups.size(); ++k) {
      bool cadence = spec.exchange_every > 0 && k > 0 &&
                     k % static_cast<size_t>(spec.exchange_every) == 0;
      bool blocked = false;
      for (int q : groups[k].qubits)
        if (std::find(cur_socket.begin(), cur_socket.end(), q) !=
            cur_socket.end())
          blocked = true;
      if (cadence || blocked) {
        size_t horizon = spec.exchange_every > 0
                             ? static_cast<size_t>(spec.exchange_every)
                             : 4;
        std::set<int> busy(frozen);
        for (size_t j = k; j < groups.size() && j < k + horizon; ++j)
          for (int q : groups[j].qubits) busy.insert(q);
        std::vector<int> pick;
        for (int q = 0; q < n && static_cast<int>(pick.size()) < 2; ++q)
          if (!busy.count(q)) pick.push_back(q);
        if (pick.empty() && blocked) {
          busy = frozen;
          for (int q : groups[k].qubits) busy.insert(q);
          for (int q = 0; q < n && static_cast<int>(pick.size()) < 2; ++q)
            if (!busy.count(q)) pick.push_back(q);
          if (pick.empty())
            fail(ErrorKind::validation,
                 "no qubit left to hold the socket bits");
        }
        if (!pick.empty() && pick != cur_socket) {
          plan.lines.push_back({PlanKind::all2all, pick});
          cur_socket = pick;
        }
      }
      PlanLine cache;
      cache.kind = PlanKind::new_cache;
      cache.args.push_back(static_cast<int>(groups[k].qubits.size()));
      for (int q : groups[k].qubits) cache.args.push_back(q);
      plan.lines.push_back(std::move(cache));
      for (const auto& g : groups[k].gates)
        plan.lines.push_back({PlanKind::gate, {g.first, g.second}});
    }

    if (remaining.empty()) {
      if (use_disk && spec.final_write)
        plan.lines.push_back(
            {PlanKind::disk_write, std::vector<int>(frozen.begin(), frozen.end())});
      break;
    }
    if (!use_disk)
      fail(ErrorKind::validation,
           "gate order stuck without a store to hop through");
    empty_passes = pass_gates.empty() ? empty_passes + 1 : 0;
    if (empty_passes >= 2)
      fail(ErrorKind::validation,
           "disk sets deadlock the gate order");
    plan.lines.push_back(
        {PlanKind::disk_write, std::vector<int>(frozen.begin(), frozen.end())});
    plan.lines.push_back(
        {PlanKind::disk_read, std::vector<int>(other.begin(), other.end())});
    plan.lines.push_back({PlanKind::slice, {}});
    std::swap(frozen, other);
    cur_socket.clear();
  }

  return plan;
}

namespace {

// Sliding windows over maximal chains of consecutive, coupled qubit ids
// inside a zone. Windows are reused round robin when a row needs more
// kernels than the zone has windows.
std::vector<std::vector<int>> zone_windows(const QubitLayout& layout,
                                           const std::set<int>& zone,
                                           int window) {
  std::set<std::pair<int, int>> edges;
  for (const auto& pattern : layout.patterns)
    for (const auto& e : pattern)
      edges.insert({std::min(e.first, e.second), std::max(e.first, e.second)});
  auto coupled = [&](int x, int y) {
    return edges.count({std::min(x, y), std::max(x, y)}) != 0;
  };
  std::vector<std::vector<int>> chains;
  for (int q : zone) {
    if (!chains.empty() && chains.back().back() == q - 1 &&
        zone.count(q - 1) && coupled(q - 1, q))
      chains.back().push_back(q);
    else
      chains.push_back({q});
  }
  std::vector<std::vector<int>> windows;
  for (const auto& chain : chains) {
    int len = static_cast<int>(chain.size());
    if (len < 2) continue;
    if (len <= window) {
      windows.push_back(chain);
      continue;
    }
    for (int s = 0; s + window <= len; ++s)
      windows.emplace_back(chain.begin() + s, chain.begin() + s + window);
  }
  return windows;
}

void emit_shaped_row(Plan& plan, const QubitLayout& layout,
                     const std::set<int>& zone, int kernels, int gates) {
  if (kernels < 1 || gates < kernels)
    fail(ErrorKind::validation, "row shape needs at least one gate per kernel");
  int base = gates / kernels;
  int rem = gates % kernels;
  int window = (base + (rem ? 1 : 0) <= 3) ? 4 : 5;
  auto windows = zone_windows(layout, zone, window);
  if (windows.empty())
    fail(ErrorKind::validation, "no coupled qubits left in a row's zone");
  for (int k = 0; k < kernels; ++k) {
    const auto& w = windows[k % windows.size()];
    PlanLine cache;
    cache.kind = PlanKind::new_cache;
    cache.args.push_back(static_cast<int>(w.size()));
    for (int q : w) cache.args.push_back(q);
    plan.lines.push_back(std::move(cache));
    int quota = base + (k < rem ? 1 : 0);
    int n_edges = static_cast<int>(w.size()) - 1;
    for (int g = 0; g < quota; ++g) {
      int e = g % n_edges;
      plan.lines.push_back({PlanKind::gate, {w[e], w[e + 1]}});
    }
  }
}

}  // namespace

Plan shape_run_plan(const QubitLayout& layout, const RunShape& shape) {
  validate_layout(layout);
  int n = layout.n_qubits;
  std::set<int> phi = to_set(shape.phi_qubits);
  if (phi.empty() || static_cast<int>(phi.size()) >= n ||
      phi.size() != shape.phi_qubits.size())
    fail(ErrorKind::validation, "split must be a proper nonempty subset");
  std::set<int> chi;
  for (int q = 0; q < n; ++q)
    if (!phi.count(q)) chi.insert(q);
  if (shape.passes.empty())
    fail(ErrorKind::validation, "run shape needs at least one pass");

  std::set<std::pair<int, int>> edges;
  for (const auto& pattern : layout.patterns)
    for (const auto& e : pattern)
      edges.insert({std::min(e.first, e.second), std::max(e.first, e.second)});

  Plan plan;
  plan.lines.push_back({PlanKind::define, {n}});
  if (!shape.disk_union.empty())
    plan.lines.push_back({PlanKind::define, sorted(shape.disk_union)});

  auto emit_premerge = [&](const std::set<int>& half, const RowShape& row,
                           bool phi_side) {
    PlanLine born;
    born.kind = PlanKind::new_tensor;
    born.args.push_back(static_cast<int>(half.size()));
    born.args.push_back(0);
    for (int q : half) born.args.push_back(q);
    plan.lines.push_back(std::move(born));
    emit_shaped_row(plan, layout, half, row.kernels, row.gates);
    int g = 0;
    for (const auto& d : shape.deferred) {
      ++g;
      int l1 = -(2 * g - 1), l2 = -(2 * g);
      if (!phi.count(d.first) || !chi.count(d.second))
        fail(ErrorKind::validation, "deferred coupler must cross the split");
      if (!edges.count({std::min(d.first, d.second),
                        std::max(d.first, d.second)}))
        fail(ErrorKind::validation, "deferred pair is not a coupling");
      if (phi_side)
        plan.lines.push_back({PlanKind::entgl_ei, {d.first, l1, l2}});
      else
        plan.lines.push_back({PlanKind::entgl_e2q, {d.second, d.first, l1, l2}});
    }
  };

  emit_premerge(phi, shape.t1, true);
  emit_premerge(chi, shape.t2, false);

  std::vector<int> all_labels;
  for (int g = 1; g <= static_cast<int>(shape.deferred.size()); ++g) {
    all_labels.push_back(-(2 * g - 1));
    all_labels.push_back(-(2 * g));
  }
  for (const auto& half : {phi, chi}) {
    PlanLine check;
    check.kind = PlanKind::entgl_assert;
    check.args.push_back(static_cast<int>(half.size()));
    check.args.push_back(static_cast<int>(all_labels.size()));
    for (int q : half) check.args.push_back(q);
    for (int l : all_labels) check.args.push_back(l);
    plan.lines.push_back(std::move(check));
  }

  if (!shape.t1.socket.empty())
    plan.lines.push_back({PlanKind::all2all, sorted(shape.t1.socket)});
  if (!shape.t2.socket.empty())
    plan.lines.push_back({PlanKind::all2all, sorted(shape.t2.socket)});
  if (!shape.premerge_slice.empty())
    plan.lines.push_back({PlanKind::slice, sorted(shape.premerge_slice)});

  std::set<int> cur_disk = to_set(shape.passes[0].disk);
  std::set<int> cur_socket = to_set(shape.premerge_slice);
  {
    PlanLine join;
    join.kind = PlanKind::new_tensor;
    std::vector<int> locals;
    for (int q = 0; q < n; ++q)
      if (!cur_disk.count(q)) locals.push_back(q);
    join.args.push_back(static_cast<int>(locals.size()));
    join.args.push_back(static_cast<int>(cur_disk.size()));
    for (int q : locals) join.args.push_back(q);
    for (int q : cur_disk) join.args.push_back(q);
    plan.lines.push_back(std::move(join));
  }

  for (size_t p = 0; p < shape.passes.size(); ++p) {
    const PassShape& pass = shape.passes[p];
    if (p > 0) {
      plan.lines.push_back({PlanKind::disk_read, sorted(pass.disk)});
      cur_disk = to_set(pass.disk);
      for (int q : pass.disk) cur_socket.erase(q);
      if (!pass.first_socket.empty()) {
        plan.lines.push_back({PlanKind::slice, sorted(pass.first_socket)});
        cur_socket = to_set(pass.first_socket);
      }
    }
    for (size_t r = 0; r < pass.rows.size(); ++r) {
      const RowShape& row = pass.rows[r];
      if (!row.socket.empty()) {
        plan.lines.push_back({PlanKind::all2all, sorted(row.socket)});
        cur_socket = to_set(row.socket);
      }
      std::set<int> zone;
      for (int q = 0; q < n; ++q)
        if (!cur_disk.count(q) && !cur_socket.count(q)) zone.insert(q);
      emit_shaped_row(plan, layout, zone, row.kernels, row.gates);
    }
    bool last = p + 1 == shape.passes.size();
    if (!last || shape.final_write)
      plan.lines.push_back(
          {PlanKind::disk_write, std::vector<int>(cur_disk.begin(), cur_disk.end())});
  }

  return plan;
}

namespace {

std::vector<int> range(int lo, int hi) {
  std::vector<int> v;
  for (int q = lo; q <= hi; ++q) v.push_back(q);
  return v;
}

std::vector<int> cat(std::vector<int> a, const std::vector<int>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

RunShape run_shape_53() {
  RunShape s;
  s.phi_qubits = range(0, 26);
  for (int c = 2; c <= 8; ++c) s.deferred.emplace_back(18 + c, 27 + c);
  s.t1 = {28, 84, range(4, 10)};
  s.t2 = {25, 84, range(43, 48)};
  s.premerge_slice = cat(range(4, 10), range(43, 48));
  s.disk_union = cat(cat(range(0, 3), range(23, 30)), range(49, 52));
  PassShape p0;
  p0.disk = cat(range(0, 3), range(49, 52));
  p0.rows = {{16, 63, {}},
             {6, 23, cat(range(11, 17), range(37, 42))},
             {8, 26, cat(range(18, 24), range(30, 35))}};
  PassShape p1;
  p1.disk = range(23, 30);
  p1.first_socket = cat(range(0, 3), range(40, 48));
  p1.rows = {{11, 49, {}}, {10, 45, cat(range(4, 10), range(31, 36))}};
  PassShape p2;
  p2.disk = cat(range(0, 3), range(49, 52));
  p2.first_socket = cat(range(23, 30), range(35, 39));
  p2.rows = {{9, 35, {}}, {7, 21, cat(range(11, 16), range(42, 48))}};
  s.passes = {p0, p1, p2};
  s.final_write = true;
  return s;
}

RunShape run_shape_54() {
  RunShape s;
  s.phi_qubits = range(0, 26);
  for (int c = 1; c <= 8; ++c) s.deferred.emplace_back(18 + c, 27 + c);
  s.t1 = {28, 84, range(4, 10)};
  s.t2 = {26, 87, range(43, 48)};
  s.premerge_slice = cat(range(4, 10), range(43, 48));
  s.disk_union = cat(cat(range(0, 3), range(22, 30)), range(49, 53));
  PassShape p0;
  p0.disk = cat(range(0, 3), range(49, 53));
  p0.rows = {{15, 59, {}},
             {8, 31, cat(range(11, 17), range(37, 42))},
             {8, 27, cat(range(18, 24), range(30, 35))}};
  PassShape p1;
  p1.disk = range(22, 30);
  p1.first_socket = cat(range(0, 3), range(40, 48));
  p1.rows = {{11, 49, {}}, {10, 45, cat(range(4, 10), range(31, 36))}};
  PassShape p2;
  p2.disk = cat(range(0, 3), range(49, 53));
  p2.first_socket = cat(range(23, 30), range(35, 39));
  p2.rows = {{9, 37, {}}, {7, 21, cat(range(11, 16), range(42, 48))}};
  s.passes = {p0, p1, p2};
  s.final_write = true;
  return s;
}

}  // namespace slicesim
