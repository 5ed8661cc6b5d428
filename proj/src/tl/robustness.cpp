#include "ilcl/tl/robustness.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ilcl::tl {

Trace::Trace(std::size_t dims, std::vector<double> values) : dims_(dims), values_(std::move(values)) {
  if (dims_ == 0 || values_.empty() || values_.size() % dims_ != 0)
    throw std::invalid_argument("trace must hold at least one state of positive dimension");
  for (double v : values_)
    if (!std::isfinite(v)) throw std::invalid_argument("trace values must be finite");
}

namespace {

std::vector<double> flatten(const std::vector<std::vector<double>>& rows, std::size_t& dims) {
  if (rows.empty()) throw std::invalid_argument("trace must hold at least one state");
  dims = rows.front().size();
  std::vector<double> flat;
  flat.reserve(rows.size() * dims);
  for (const auto& r : rows) {
    if (r.size() != dims) throw std::invalid_argument("trace states differ in dimension");
    flat.insert(flat.end(), r.begin(), r.end());
  }
  return flat;
}

}  // namespace

Trace::Trace(const std::vector<std::vector<double>>& rows) {
  std::size_t dims = 0;
  auto flat = flatten(rows, dims);
  *this = Trace(dims, std::move(flat));
}

double ap_robustness(const Ap& ap, double state_value, double threshold) {
  const double r = ap.sign * (threshold - state_value);
  return std::clamp(r, -kBottom, kTop);
}

namespace {

void check_dims(const Trace& trace, const Ap& ap) {
  if (ap.dim >= trace.dims())
    throw FormulaError("predicate dimension " + std::to_string(ap.dim) +
                       " exceeds trace dimensionality " + std::to_string(trace.dims()));
}

// Shared temporal recursions over complete child signals. Both the reference
// evaluator and the compiled program use these so that their results agree
// bit for bit.
void apply_op(Op op, const double* a, const double* b, double* out, std::size_t n) {
  const std::size_t last = n - 1;
  switch (op) {
    case Op::And:
      for (std::size_t t = 0; t < n; ++t) out[t] = std::min(a[t], b[t]);
      return;
    case Op::Or:
      for (std::size_t t = 0; t < n; ++t) out[t] = std::max(a[t], b[t]);
      return;
    case Op::Next:
      for (std::size_t t = 0; t < last; ++t) out[t] = a[t + 1];
      out[last] = -kBottom;
      return;
    case Op::Eventually:
      out[last] = a[last];
      for (std::size_t t = last; t-- > 0;) out[t] = std::max(a[t], out[t + 1]);
      return;
    case Op::Always:
      out[last] = a[last];
      for (std::size_t t = last; t-- > 0;) out[t] = std::min(a[t], out[t + 1]);
      return;
    case Op::Until:
      // max over t' of min(ρ2(t'), min_{t''<t'} ρ1(t'')), empty inner min = kTop.
      out[last] = std::min(b[last], kTop);
      for (std::size_t t = last; t-- > 0;)
        out[t] = std::max(std::min(b[t], kTop), std::min(a[t], out[t + 1]));
      return;
    case Op::Release:
      // min over t' of max(ρ2(t'), max_{t''<t'} ρ1(t'')), empty inner max = -kBottom.
      out[last] = std::max(b[last], -kBottom);
      for (std::size_t t = last; t-- > 0;)
        out[t] = std::min(std::max(b[t], -kBottom), std::max(a[t], out[t + 1]));
      return;
    default:
      throw std::logic_error("apply_op called on a leaf");
  }
}

}  // namespace

std::vector<double> robustness_signal(const Trace& trace, const Formula& f) {
  const std::size_t n = trace.length();
  if (n == 0) throw std::invalid_argument("empty trace");
  std::vector<double> out(n);
  switch (f.op()) {
    case Op::True:
      std::fill(out.begin(), out.end(), kTop);
      return out;
    case Op::False:
      std::fill(out.begin(), out.end(), -kBottom);
      return out;
    case Op::Ap:
    case Op::NotAp: {
      const Ap& a = f.ap();
      check_dims(trace, a);
      const double th = a.value();
      for (std::size_t t = 0; t < n; ++t) {
        const double r = ap_robustness(a, trace.at(t, a.dim), th);
        out[t] = f.op() == Op::Ap ? r : -r;
      }
      return out;
    }
    default:
      break;
  }
  const auto lhs = robustness_signal(trace, f.lhs());
  if (is_binary(f.op())) {
    const auto rhs = robustness_signal(trace, f.rhs());
    apply_op(f.op(), lhs.data(), rhs.data(), out.data(), n);
  } else {
    apply_op(f.op(), lhs.data(), nullptr, out.data(), n);
  }
  return out;
}

double robustness(const Trace& trace, const Formula& f, std::size_t t) {
  if (trace.length() == 0 || t > trace.last())
    throw std::out_of_range("time index " + std::to_string(t) + " outside trace");
  if (!is_concrete(f)) throw FormulaError("robustness requires a concrete formula");
  return robustness_signal(trace, f)[t];
}

bool satisfies(const Trace& trace, const Formula& f) { return robustness(trace, f, 0) > 0.0; }

namespace {

bool holds(const Trace& tr, const Formula& f, std::size_t t) {
  const std::size_t last = tr.last();
  switch (f.op()) {
    case Op::True:
      return true;
    case Op::False:
      return false;
    case Op::Ap:
    case Op::NotAp: {
      const Ap& a = f.ap();
      check_dims(tr, a);
      const double s = tr.at(t, a.dim);
      const double th = a.value();
      const bool below = a.sign > 0;
      if (f.op() == Op::Ap) return below ? s < th : s > th;
      return below ? s > th : s < th;
    }
    case Op::And:
      return holds(tr, f.lhs(), t) && holds(tr, f.rhs(), t);
    case Op::Or:
      return holds(tr, f.lhs(), t) || holds(tr, f.rhs(), t);
    case Op::Next:
      return t < last && holds(tr, f.child(), t + 1);
    case Op::Eventually:
      for (std::size_t k = t; k <= last; ++k)
        if (holds(tr, f.child(), k)) return true;
      return false;
    case Op::Always:
      for (std::size_t k = t; k <= last; ++k)
        if (!holds(tr, f.child(), k)) return false;
      return true;
    case Op::Until:
      // exists k >= t: rhs at k and lhs at every j in [t, k)
      for (std::size_t k = t; k <= last; ++k) {
        if (!holds(tr, f.rhs(), k)) continue;
        bool guard = true;
        for (std::size_t j = t; j < k && guard; ++j) guard = holds(tr, f.lhs(), j);
        if (guard) return true;
      }
      return false;
    case Op::Release:
      // for all k >= t: rhs at k or lhs at some j in [t, k)
      for (std::size_t k = t; k <= last; ++k) {
        if (holds(tr, f.rhs(), k)) continue;
        bool released = false;
        for (std::size_t j = t; j < k && !released; ++j) released = holds(tr, f.lhs(), j);
        if (!released) return false;
      }
      return true;
  }
  return false;
}

}  // namespace

bool boolean_eval(const Trace& trace, const Formula& f, std::size_t t) {
  if (trace.length() == 0 || t > trace.last())
    throw std::out_of_range("time index " + std::to_string(t) + " outside trace");
  if (!is_concrete(f)) throw FormulaError("boolean_eval requires a concrete formula");
  return holds(trace, f, t);
}

RobustnessProgram::RobustnessProgram(const Formula& f) {
  std::vector<ParamId> order = collect_params(f);
  param_count_ = order.size();
  emit(f, order);
}

int RobustnessProgram::emit(const Formula& f, std::vector<ParamId>& order) {
  Instr ins{f.op()};
  switch (f.op()) {
    case Op::True:
    case Op::False:
      break;
    case Op::Ap:
    case Op::NotAp: {
      const Ap& a = f.ap();
      ins.dim = a.dim;
      ins.sign = a.sign;
      max_dim_ = std::max(max_dim_, a.dim + 1);
      if (const auto* id = std::get_if<ParamId>(&a.threshold)) {
        const auto it = std::find(order.begin(), order.end(), *id);
        ins.param_slot = static_cast<int>(it - order.begin());
      } else {
        ins.threshold = std::get<double>(a.threshold);
      }
      break;
    }
    default:
      ins.lhs = emit(f.lhs(), order);
      if (is_binary(f.op())) ins.rhs = emit(f.rhs(), order);
      break;
  }
  code_.push_back(ins);
  return static_cast<int>(code_.size()) - 1;
}

double RobustnessProgram::evaluate(const Trace& trace, std::span<const double> params) const {
  if (params.size() != param_count_) throw FormulaError("parameter count mismatch");
  if (trace.dims() < max_dim_) throw FormulaError("trace dimensionality too small for formula");
  const std::size_t n = trace.length();
  thread_local std::vector<double> scratch;
  scratch.resize(code_.size() * n);
  for (std::size_t i = 0; i < code_.size(); ++i) {
    const Instr& ins = code_[i];
    double* out = scratch.data() + i * n;
    switch (ins.op) {
      case Op::True:
        std::fill(out, out + n, kTop);
        break;
      case Op::False:
        std::fill(out, out + n, -kBottom);
        break;
      case Op::Ap:
      case Op::NotAp: {
        const double th = ins.param_slot >= 0 ? params[ins.param_slot] : ins.threshold;
        const Ap a{ins.dim, ins.sign, th};
        const double flip = ins.op == Op::Ap ? 1.0 : -1.0;
        for (std::size_t t = 0; t < n; ++t) out[t] = flip * ap_robustness(a, trace.at(t, ins.dim), th);
        break;
      }
      default: {
        const double* a = scratch.data() + static_cast<std::size_t>(ins.lhs) * n;
        const double* b = ins.rhs >= 0 ? scratch.data() + static_cast<std::size_t>(ins.rhs) * n : nullptr;
        apply_op(ins.op, a, b, out, n);
      }
    }
  }
  return scratch[(code_.size() - 1) * n];
}

}  // namespace ilcl::tl
