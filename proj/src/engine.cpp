#include "slicesim/engine.hpp"

#include <algorithm>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <set>
#include <vector>

#include "slicesim/errors.hpp"
#include "slicesim/types.hpp"

namespace slicesim {

namespace {

// One live tensor. axes[j] supplies flat-index bit j; qubit ids are >= 0,
// deferred labels < 0. Socket and disk bits are kept as the topmost axes
// (locals, then socket, then disk), restored after every reshaping step.
struct EngineFamily {
  int ordinal = 0;
  std::vector<int> axes;
  std::set<int> socket;
  std::set<int> disk;
  std::vector<amp> data;

  int rank() const { return static_cast<int>(axes.size()); }
  int axis_pos(int id) const {
    for (int j = 0; j < rank(); ++j)
      if (axes[j] == id) return j;
    fail(ErrorKind::validation,
         "axis " + std::to_string(id) + " is not on this tensor");
  }
  bool has_axis(int id) const {
    return std::find(axes.begin(), axes.end(), id) != axes.end();
  }
};

void reorder_axes(EngineFamily& fam, const std::vector<int>& new_axes) {
  if (new_axes == fam.axes) return;
  if (new_axes.size() != fam.axes.size())
    fail(ErrorKind::validation, "axis reorder changes the rank");
  int r = fam.rank();
  std::vector<int> src(r);
  for (int j = 0; j < r; ++j) src[j] = fam.axis_pos(new_axes[j]);
  std::vector<amp> out(fam.data.size());
  for (std::uint64_t ni = 0; ni < out.size(); ++ni) {
    std::uint64_t oi = 0;
    for (int j = 0; j < r; ++j) oi |= std::uint64_t(bit(ni, j)) << src[j];
    out[ni] = fam.data[oi];
  }
  fam.data = std::move(out);
  fam.axes = new_axes;
}

// Restores the [locals, socket, disk] axis order, locals keeping their
// current relative order and the global groups sorted ascending.
void restore_order(EngineFamily& fam) {
  std::vector<int> order;
  for (int id : fam.axes)
    if (!fam.socket.count(id) && !fam.disk.count(id)) order.push_back(id);
  for (int id : fam.socket) order.push_back(id);
  for (int id : fam.disk) order.push_back(id);
  reorder_axes(fam, order);
}

void check_capacity(int rank_bits, const EngineOptions& opt,
                    const char* what) {
  if (rank_bits > opt.capacity_bits)
    fail(ErrorKind::capacity,
         std::string(what) + " needs 2^" + std::to_string(rank_bits) +
             " amplitudes; this build is sized for 2^" +
             std::to_string(opt.capacity_bits));
}

// Applies a dim-2^k unitary over the axes at positions pos (pos[j] supplies
// matrix bit j) by gather/multiply/scatter over every aligned group.
void apply_kernel_at(EngineFamily& fam, const std::vector<int>& pos,
                     const CMatrix& u) {
  int k = static_cast<int>(pos.size());
  int dim = 1 << k;
  if (u.dim != dim)
    fail(ErrorKind::validation, "kernel matrix does not match its width");
  std::vector<int> sorted_pos = pos;
  std::sort(sorted_pos.begin(), sorted_pos.end());
  std::uint64_t groups = fam.data.size() >> k;
  std::vector<amp> in(dim), out(dim);
  for (std::uint64_t m = 0; m < groups; ++m) {
    std::uint64_t base = m;
    for (int p : sorted_pos) base = insert_bit(base, p, 0);
    for (int c = 0; c < dim; ++c) {
      std::uint64_t idx = base;
      for (int j = 0; j < k; ++j) idx |= std::uint64_t(bit(c, j)) << pos[j];
      in[c] = fam.data[idx];
    }
    for (int rw = 0; rw < dim; ++rw) {
      amp acc = 0.0;
      for (int c = 0; c < dim; ++c) acc += u.at(rw, c) * in[c];
      out[rw] = acc;
    }
    for (int rw = 0; rw < dim; ++rw) {
      std::uint64_t idx = base;
      for (int j = 0; j < k; ++j) idx |= std::uint64_t(bit(rw, j)) << pos[j];
      fam.data[idx] = out[rw];
    }
  }
}

// The deferral splits a coupler: on the side holding the split line, the
// pre-gate value stays open under l1 and the line forwards the output
// arriving through l2; the other side absorbs the full gate tensor with the
// far operand's value pair routed through (l1, l2).
void ei_defer(EngineFamily& fam, int q, int l1, int l2,
              const EngineOptions& opt) {
  check_capacity(fam.rank() + 2, opt, "a deferral");
  int pos = fam.axis_pos(q);
  int r = fam.rank();
  std::vector<amp> out(fam.data.size() << 2, amp(0.0));
  for (std::uint64_t idx = 0; idx < fam.data.size(); ++idx) {
    amp v = fam.data[idx];
    if (v == amp(0.0)) continue;
    out[idx | (std::uint64_t(0) << r) | (std::uint64_t(0) << (r + 1))] = v;
    out[idx | (std::uint64_t(1) << r) | (std::uint64_t(1) << (r + 1))] = v;
  }
  fam.data = std::move(out);
  fam.axes[pos] = l1;       // old line value stays open as l1
  fam.axes.push_back(q);    // fresh line wire, tied to l2
  fam.axes.push_back(l2);
  restore_order(fam);
}

void e2q_defer(EngineFamily& fam, int q, const CMatrix& u, bool phi_is_q0,
               int l1, int l2, const EngineOptions& opt) {
  check_capacity(fam.rank() + 2, opt, "a deferral");
  int pb = fam.axis_pos(q);
  int r = fam.rank();
  std::vector<amp> out(fam.data.size() << 2);
  for (std::uint64_t ni = 0; ni < out.size(); ++ni) {
    int b_new = bit(ni, pb);
    int i = bit(ni, r);      // l1: far operand input value
    int j = bit(ni, r + 1);  // l2: far operand output value
    std::uint64_t low = ni & (fam.data.size() - 1);
    amp acc = 0.0;
    for (int b_old = 0; b_old < 2; ++b_old) {
      int rw = phi_is_q0 ? (j << 1) | b_new : (b_new << 1) | j;
      int cl = phi_is_q0 ? (i << 1) | b_old : (b_old << 1) | i;
      acc += u.at(rw, cl) * fam.data[set_bit(low, pb, b_old)];
    }
    out[ni] = acc;
  }
  fam.data = std::move(out);
  fam.axes.push_back(l1);
  fam.axes.push_back(l2);
  restore_order(fam);
}

// Gate sequence cursors: every coupler of the circuit, in layer order, with
// one queue per qubit. A plan line may only consume a gate that is next in
// the sequence of both of its operands.
struct GateCursor {
  std::vector<const Gate*> flat;
  std::vector<std::deque<int>> queues;

  explicit GateCursor(const Circuit& circuit) {
    queues.resize(circuit.n_qubits);
    for (const auto& layer : circuit.layers)
      for (const auto& g : layer) {
        if (!g.is_two_qubit())
          fail(ErrorKind::validation,
               "plans execute merged circuits with two-qubit gates only");
        int id = static_cast<int>(flat.size());
        flat.push_back(&g);
        queues[g.q0].push_back(id);
        queues[g.q1].push_back(id);
      }
  }

  const Gate& pop_pair(int a, int b) {
    if (queues[a].empty() || queues[b].empty())
      fail(ErrorKind::validation,
           "no coupler left for qubit pair " + std::to_string(a) + "," +
               std::to_string(b));
    int id = queues[a].front();
    if (queues[b].front() != id)
      fail(ErrorKind::validation,
           "coupler on " + std::to_string(a) + "," + std::to_string(b) +
               " is out of sequence");
    const Gate& g = *flat[id];
    if (!((g.q0 == a && g.q1 == b) || (g.q0 == b && g.q1 == a)))
      fail(ErrorKind::validation,
           "next coupler on qubit " + std::to_string(a) +
               " pairs it elsewhere");
    queues[a].pop_front();
    queues[b].pop_front();
    return g;
  }

  // Pops the next gate of one operand only; the other side is consumed by
  // the matching counterpart line.
  int pop_one(int q) {
    if (queues[q].empty())
      fail(ErrorKind::validation,
           "no coupler left for qubit " + std::to_string(q));
    int id = queues[q].front();
    queues[q].pop_front();
    return id;
  }

  int leftovers() const {
    int count = 0;
    for (const auto& dq : queues) count += static_cast<int>(dq.size());
    return count / 2;
  }
};

struct OpenKernel {
  std::vector<int> qubits;  // position j supplies matrix bit j
  CMatrix u;
  int n_gates = 0;
};

CMatrix embed_pair_gate(const CMatrix& g2, int k, int pos_hi, int pos_lo) {
  int dim = 1 << k;
  CMatrix m(dim);
  for (int rw = 0; rw < dim; ++rw) {
    int gr = (bit(rw, pos_hi) << 1) | bit(rw, pos_lo);
    std::uint64_t rest = remove_bit(remove_bit(rw, std::max(pos_hi, pos_lo)),
                                    std::min(pos_hi, pos_lo));
    for (int gc = 0; gc < 4; ++gc) {
      std::uint64_t cl = rest;
      cl = insert_bit(cl, std::min(pos_hi, pos_lo), 0);
      cl = insert_bit(cl, std::max(pos_hi, pos_lo), 0);
      cl = set_bit(cl, pos_hi, bit(gc, 1));
      cl = set_bit(cl, pos_lo, bit(gc, 0));
      m.at(rw, static_cast<int>(cl)) = g2.at(gr, gc);
    }
  }
  return m;
}

}  // namespace

ExecutionResult execute_plan(const Plan& plan, const Circuit& merged,
                             const EngineOptions& options) {
  // Full static validation first; execution then trusts the line grammar.
  PhaseTable table = summarize(plan);
  if (table.n_qubits != merged.n_qubits)
    fail(ErrorKind::validation, "plan and circuit disagree on qubit count");
  int n = merged.n_qubits;

  GateCursor cursor(merged);
  EngineStats stats;
  std::vector<EngineFamily> fams;
  int next_ordinal = 1;

  struct PendingDefer {
    int gate_id = 0;
    int phi_qubit = 0;
    int chi_qubit = 0;
  };
  std::map<std::pair<int, int>, PendingDefer> pending;

  std::set<int> disk_union;
  bool have_union = false;
  SliceStore store;
  bool store_ready = false;

  OpenKernel kernel;
  bool kernel_open = false;
  int kernel_fam = -1;

  auto find_owner = [&](int q) -> int {
    for (size_t i = 0; i < fams.size(); ++i)
      if (fams[i].has_axis(q)) return static_cast<int>(i);
    fail(ErrorKind::validation,
         "qubit " + std::to_string(q) + " is not on any live tensor");
  };

  auto close_kernel = [&]() {
    if (!kernel_open) return;
    kernel_open = false;
    if (kernel.n_gates == 0) {
      ++stats.kernels;
      return;
    }
    double defect = unitarity_defect(kernel.u);
    stats.max_kernel_defect = std::max(stats.max_kernel_defect, defect);
    if (defect > options.unitarity_tolerance)
      fail(ErrorKind::verification,
           "kernel unitary drifted: defect " + std::to_string(defect));
    EngineFamily& fam = fams[kernel_fam];
    std::vector<int> pos(kernel.qubits.size());
    for (size_t j = 0; j < kernel.qubits.size(); ++j)
      pos[j] = fam.axis_pos(kernel.qubits[j]);
    apply_kernel_at(fam, pos, kernel.u);
    ++stats.kernels;
    stats.gates += kernel.n_gates;
  };

  auto ensure_store = [&](const std::set<int>& fixed) {
    if (store_ready) return;
    if (options.storage_root.empty())
      fail(ErrorKind::io, "plan hops the store but no storage root is set");
    FileIndexScheme scheme;
    for (int q : disk_union) scheme.index_qubits.push_back(q);
    for (int q = 0; q < n; ++q)
      if (!disk_union.count(q)) scheme.local_qubits.push_back(q);
    (void)fixed;
    namespace fs = std::filesystem;
    if (fs::exists(fs::path(options.storage_root) / "manifest.json")) {
      store = SliceStore::open(options.storage_root);
      if (store.n_qubits() != n ||
          store.scheme().index_qubits != scheme.index_qubits ||
          store.scheme().local_qubits != scheme.local_qubits ||
          store.precision() != options.store_precision)
        fail(ErrorKind::io,
             "existing store under " + options.storage_root +
                 " does not match this plan");
    } else {
      store = SliceStore::create(options.storage_root, n, scheme,
                                 options.store_precision);
    }
    store_ready = true;
  };

  // Canonical slice layout: offset bit j inside a file is the j-th
  // non-union qubit in ascending id order, so file bytes do not depend on
  // the tensor's current axis order.
  auto cycle_maps = [&](const EngineFamily& fam) {
    std::vector<int> file_pos, local_pos;
    for (int q : store.scheme().index_qubits) file_pos.push_back(fam.axis_pos(q));
    for (int q : store.scheme().local_qubits)
      local_pos.push_back(fam.axis_pos(q));
    return std::make_pair(file_pos, local_pos);
  };

  for (size_t li = 0; li < plan.lines.size(); ++li) {
    const PlanLine& line = plan.lines[li];
    const auto& a = line.args;
    switch (line.kind) {
      case PlanKind::define: {
        if (li == 1) {
          disk_union = std::set<int>(a.begin(), a.end());
          have_union = true;
        }
        break;
      }

      case PlanKind::new_tensor: {
        close_kernel();
        int nl = a[0];
        std::vector<int> qs(a.begin() + 2, a.end());
        std::set<int> qset(qs.begin(), qs.end());
        std::vector<int> inputs;
        for (size_t i = 0; i < fams.size(); ++i)
          for (int q : fams[i].axes)
            if (qset.count(q)) {
              inputs.push_back(static_cast<int>(i));
              break;
            }
        if (inputs.empty()) {
          check_capacity(nl, options, "a fresh tensor");
          EngineFamily f;
          f.ordinal = next_ordinal++;
          f.axes = qs;
          f.data.assign(std::uint64_t(1) << nl, amp(0.0));
          f.data[0] = 1.0;
          fams.push_back(std::move(f));
          break;
        }
        EngineFamily& fa = fams[inputs[0]];
        EngineFamily& fb = fams[inputs[1]];
        std::set<int> socket_union;
        socket_union.insert(fa.socket.begin(), fa.socket.end());
        socket_union.insert(fb.socket.begin(), fb.socket.end());
        // Align both inputs as [own qubits, shared labels ascending], then
        // fold the labels with one inner product per output pair.
        auto split_axes = [](EngineFamily& f) {
          std::vector<int> qubits, labels;
          for (int id : f.axes)
            (id >= 0 ? qubits : labels).push_back(id);
          std::sort(labels.begin(), labels.end());
          std::vector<int> order = qubits;
          order.insert(order.end(), labels.begin(), labels.end());
          reorder_axes(f, order);
          return std::make_pair(qubits, labels);
        };
        auto [qa, labels_a] = split_axes(fa);
        auto [qb, labels_b] = split_axes(fb);
        int la = static_cast<int>(labels_a.size());
        int ra = static_cast<int>(qa.size());
        int rb = static_cast<int>(qb.size());
        check_capacity(ra + rb, options, "the merge");
        if (ra + rb + la > options.capacity_bits + 8)
          fail(ErrorKind::capacity,
               "merge fold needs 2^" + std::to_string(ra + rb + la) +
                   " products; this build is sized for 2^" +
                   std::to_string(options.capacity_bits + 8));
        EngineFamily out;
        out.ordinal = next_ordinal++;
        out.axes = qa;
        out.axes.insert(out.axes.end(), qb.begin(), qb.end());
        out.data.assign(std::uint64_t(1) << (ra + rb), amp(0.0));
        std::uint64_t na = std::uint64_t(1) << ra;
        std::uint64_t nb = std::uint64_t(1) << rb;
        std::uint64_t nL = std::uint64_t(1) << la;
        for (std::uint64_t xa = 0; xa < na; ++xa)
          for (std::uint64_t xb = 0; xb < nb; ++xb) {
            amp acc = 0.0;
            for (std::uint64_t L = 0; L < nL; ++L)
              acc += fa.data[xa | (L << ra)] * fb.data[xb | (L << rb)];
            out.data[xa | (xb << ra)] = acc;
          }
        out.socket = std::move(socket_union);
        out.disk = std::set<int>(a.begin() + 2 + nl, a.end());
        for (int q : out.disk) out.socket.erase(q);
        restore_order(out);
        std::vector<EngineFamily> rest;
        for (size_t i = 0; i < fams.size(); ++i)
          if (static_cast<int>(i) != inputs[0] &&
              static_cast<int>(i) != inputs[1])
            rest.push_back(std::move(fams[i]));
        rest.push_back(std::move(out));
        fams = std::move(rest);
        break;
      }

      case PlanKind::new_cache: {
        close_kernel();
        kernel_open = true;
        kernel.qubits.assign(a.begin() + 1, a.end());
        kernel.u = CMatrix::identity(1 << a[0]);
        kernel.n_gates = 0;
        kernel_fam = find_owner(a[1]);
        break;
      }

      case PlanKind::gate: {
        const Gate& g = cursor.pop_pair(a[0], a[1]);
        int k = static_cast<int>(kernel.qubits.size());
        auto pos_of = [&](int q) {
          for (int j = 0; j < k; ++j)
            if (kernel.qubits[j] == q) return j;
          fail(ErrorKind::validation, "gate qubit missing from its kernel");
        };
        kernel.u = mat_mul(embed_pair_gate(g.u, k, pos_of(g.q0), pos_of(g.q1)),
                           kernel.u);
        ++kernel.n_gates;
        break;
      }

      case PlanKind::entgl_ei: {
        close_kernel();
        int q = a[0], l1 = a[1], l2 = a[2];
        int gid = cursor.pop_one(q);
        const Gate& g = *cursor.flat[gid];
        int far = g.q0 == q ? g.q1 : g.q0;
        if (g.q0 != q && g.q1 != q)
          fail(ErrorKind::validation,
               "deferred coupler does not touch qubit " + std::to_string(q));
        pending[{l1, l2}] = {gid, q, far};
        ei_defer(fams[find_owner(q)], q, l1, l2, options);
        ++stats.deferrals;
        break;
      }

      case PlanKind::entgl_e2q: {
        close_kernel();
        int q = a[0], far = a[1], l1 = a[2], l2 = a[3];
        auto it = pending.find({l1, l2});
        if (it == pending.end())
          fail(ErrorKind::validation, "deferral labels were never opened");
        if (it->second.chi_qubit != q || it->second.phi_qubit != far)
          fail(ErrorKind::validation,
               "deferral operands do not match their labels");
        int gid = cursor.pop_one(q);
        if (gid != it->second.gate_id)
          fail(ErrorKind::validation,
               "deferred coupler is out of sequence on qubit " +
                   std::to_string(q));
        const Gate& g = *cursor.flat[gid];
        e2q_defer(fams[find_owner(q)], q, g.u, g.q0 == far, l1, l2, options);
        pending.erase(it);
        break;
      }

      case PlanKind::entgl_assert: {
        close_kernel();
        std::set<int> qs(a.begin() + 2, a.begin() + 2 + a[0]);
        std::set<int> ls(a.begin() + 2 + a[0], a.end());
        bool found = false;
        for (const auto& f : fams) {
          std::set<int> fq, fl;
          for (int id : f.axes) (id >= 0 ? fq : fl).insert(id);
          if (fq == qs && fl == ls) found = true;
        }
        if (!found)
          fail(ErrorKind::validation, "no live tensor matches the assertion");
        break;
      }

      case PlanKind::slice: {
        close_kernel();
        std::set<int> args(a.begin(), a.end());
        for (auto& f : fams) {
          std::set<int> mine;
          for (int id : f.axes)
            if (id >= 0 && args.count(id)) mine.insert(id);
          f.socket = std::move(mine);
          restore_order(f);
        }
        break;
      }

      case PlanKind::all2all: {
        close_kernel();
        EngineFamily& f = fams[find_owner(a[0])];
        f.socket = std::set<int>(a.begin(), a.end());
        restore_order(f);
        ++stats.exchanges;
        break;
      }

      case PlanKind::disk_write: {
        close_kernel();
        if (!have_union)
          fail(ErrorKind::validation, "disk pass without a disk union");
        EngineFamily& f = fams.back();
        ensure_store(f.disk);
        auto [file_pos, local_pos] = cycle_maps(f);
        std::vector<amp> buf(store.scheme().amps_per_file());
        store.begin_write_cycle();
        for (std::uint64_t fid = 0; fid < store.scheme().file_count();
             ++fid) {
          std::uint64_t base = 0;
          for (size_t k = 0; k < file_pos.size(); ++k)
            base |= std::uint64_t(bit(fid, static_cast<int>(k)))
                    << file_pos[k];
          for (std::uint64_t off = 0; off < buf.size(); ++off) {
            std::uint64_t idx = base;
            for (size_t j = 0; j < local_pos.size(); ++j)
              idx |= std::uint64_t(bit(off, static_cast<int>(j)))
                     << local_pos[j];
            buf[off] = f.data[idx];
          }
          store.write_slice(fid, buf);
        }
        store.end_write_cycle();
        ++stats.disk_writes;
        break;
      }

      case PlanKind::disk_read: {
        close_kernel();
        EngineFamily& f = fams.back();
        auto [file_pos, local_pos] = cycle_maps(f);
        store.begin_read_cycle();
        for (std::uint64_t fid = 0; fid < store.scheme().file_count();
             ++fid) {
          std::vector<amp> buf = store.read_slice(fid);
          std::uint64_t base = 0;
          for (size_t k = 0; k < file_pos.size(); ++k)
            base |= std::uint64_t(bit(fid, static_cast<int>(k)))
                    << file_pos[k];
          for (std::uint64_t off = 0; off < buf.size(); ++off) {
            std::uint64_t idx = base;
            for (size_t j = 0; j < local_pos.size(); ++j)
              idx |= std::uint64_t(bit(off, static_cast<int>(j)))
                     << local_pos[j];
            f.data[idx] = buf[off];
          }
        }
        store.end_read_cycle();
        ++stats.disk_reads;
        f.disk = std::set<int>(a.begin(), a.end());
        for (int q : f.disk) f.socket.erase(q);
        restore_order(f);
        break;
      }
    }
  }

  close_kernel();
  if (!pending.empty())
    fail(ErrorKind::validation, "plan ends with unresolved deferrals");
  if (int left = cursor.leftovers(); left > 0)
    fail(ErrorKind::validation,
         "plan leaves " + std::to_string(left) + " couplers unapplied");
  if (fams.size() != 1)
    fail(ErrorKind::validation,
         "plan ends with " + std::to_string(fams.size()) +
             " live tensors; expected one");
  EngineFamily& f = fams.back();
  for (int id : f.axes)
    if (id < 0)
      fail(ErrorKind::validation, "final tensor still has open labels");
  if (f.rank() != n)
    fail(ErrorKind::validation, "final tensor does not span every qubit");
  std::vector<int> natural(n);
  for (int q = 0; q < n; ++q) natural[q] = q;
  reorder_axes(f, natural);

  ExecutionResult result;
  result.state.n_qubits = n;
  result.state.amps = std::move(f.data);
  result.stats = stats;
  return result;
}

std::vector<std::string> validate_plan(const Plan& plan,
                                       const Circuit& merged) {
  std::vector<std::string> out;
  PhaseTable table;
  try {
    table = summarize(plan);
  } catch (const Error& e) {
    // The symbolic walk is desynchronized past its first complaint, so the
    // gate-sequence audit below would only echo noise.
    out.emplace_back(e.what());
    return out;
  }
  if (table.n_qubits != merged.n_qubits) {
    out.emplace_back("plan and circuit disagree on qubit count");
    return out;
  }

  struct Opened {
    int gate_id = 0;
    int phi_qubit = 0;
    int chi_qubit = 0;
  };
  std::map<std::pair<int, int>, Opened> open;
  try {
    GateCursor cursor(merged);
    for (size_t li = 0; li < plan.lines.size(); ++li) {
      const std::vector<int>& a = plan.lines[li].args;
      std::string where = "plan line " + std::to_string(li + 1);
      try {
        switch (plan.lines[li].kind) {
          case PlanKind::gate:
            cursor.pop_pair(a[0], a[1]);
            break;
          case PlanKind::entgl_ei: {
            int gid = cursor.pop_one(a[0]);
            const Gate& g = *cursor.flat[gid];
            if (!g.touches(a[0]))
              fail(ErrorKind::validation,
                   "deferred coupler does not touch qubit " +
                       std::to_string(a[0]));
            open[{a[1], a[2]}] = {gid, a[0],
                                  g.q0 == a[0] ? g.q1 : g.q0};
            break;
          }
          case PlanKind::entgl_e2q: {
            auto it = open.find({a[2], a[3]});
            if (it == open.end())
              fail(ErrorKind::validation, "deferral labels were never opened");
            if (it->second.chi_qubit != a[0] || it->second.phi_qubit != a[1])
              fail(ErrorKind::validation,
                   "deferral operands do not match their labels");
            if (cursor.pop_one(a[0]) != it->second.gate_id)
              fail(ErrorKind::validation,
                   "deferred coupler is out of sequence on qubit " +
                       std::to_string(a[0]));
            open.erase(it);
            break;
          }
          default:
            break;
        }
      } catch (const Error& e) {
        out.emplace_back(where + ": " + e.what());
        return out;  // the cursor no longer tracks the plan
      }
    }
    if (!open.empty())
      out.emplace_back("plan ends with unresolved deferrals");
    if (int left = cursor.leftovers(); left > 0)
      out.emplace_back("plan leaves " + std::to_string(left) +
                       " couplers unapplied");
  } catch (const Error& e) {
    out.emplace_back(e.what());
  }
  return out;
}

}  // namespace slicesim
