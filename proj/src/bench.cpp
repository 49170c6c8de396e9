// SPDX-License-Identifier: Apache-2.0

#include "pasa/bench.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <json.hpp>

#include "pasa/parallel.hpp"
#include "pasa/rng.hpp"

namespace pasa {

namespace {

// Compensated summation keeps the metric independent of tensor size.
struct Kahan {
  double sum = 0.0, carry = 0.0;
  void add(double x) {
    const double y = x - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
};

double gen_element(const DistributionSpec& spec, uint64_t tensor_id,
                   uint64_t idx) {
  if (spec.kind == DistKind::Uniform) {
    const double u = rng::u01(spec.seed, tensor_id, idx);
    return spec.x0 - spec.am + 2.0 * spec.am * u;
  }
  // Hybrid: normal around the mean plus a Bernoulli-gated wide outlier.
  const uint64_t base = tensor_id * 4;
  const double core = spec.x0 + rng::gaussian(spec.seed, base, idx);
  const bool gate = rng::bernoulli(spec.seed, base + 2, idx, spec.p);
  if (!gate) return core;
  return core + spec.am * rng::gaussian(spec.seed, base + 1, idx);
}

Tensor4D gen_tensor(const DistributionSpec& spec, uint64_t tensor_id) {
  Tensor4D t(spec.batch, spec.heads, spec.seq, spec.dim, Prec::FP16);
  for (size_t i = 0; i < t.size(); ++i) {
    t.data[i] = f16_round(gen_element(spec, tensor_id, i));
  }
  return t;
}

std::string fmt_double(double v, const char* spec = "%.10g") {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

}  // namespace

std::string_view to_string(DistKind k) {
  return k == DistKind::Uniform ? "uniform" : "hybrid";
}

GeneratedInputs generate(const DistributionSpec& spec) {
  if (spec.kind == DistKind::Hybrid && !(spec.p > 0.0 && spec.p < 1.0)) {
    throw std::invalid_argument("generate: p must lie in (0, 1)");
  }
  GeneratedInputs g;
  g.q = gen_tensor(spec, 0);
  g.k = gen_tensor(spec, 1);
  g.v = gen_tensor(spec, 2);
  return g;
}

double rmse(const Tensor4D& computed, const Tensor4D& golden) {
  if (computed.size() != golden.size()) {
    throw std::invalid_argument("rmse: shapes disagree");
  }
  for (double v : computed.data) {
    if (!std::isfinite(v)) return std::numeric_limits<double>::quiet_NaN();
  }
  Kahan diff2, gold2;
  for (size_t i = 0; i < golden.size(); ++i) {
    const double d = computed.data[i] - golden.data[i];
    diff2.add(d * d);
    gold2.add(golden.data[i] * golden.data[i]);
  }
  if (gold2.sum == 0.0) {
    throw ZeroNormError("rmse: golden norm is zero, metric undefined");
  }
  return std::sqrt(diff2.sum) / std::sqrt(gold2.sum);
}

double nan_stats(const Tensor4D& t) {
  if (t.size() == 0) return 0.0;
  uint64_t bad = 0;
  for (double v : t.data) {
    if (!std::isfinite(v)) ++bad;
  }
  return 100.0 * static_cast<double>(bad) / static_cast<double>(t.size());
}

bool RangeReport::overflow_predicted(double alpha) const {
  const double peak =
      std::max(std::fabs(total.s_before_min), std::fabs(total.s_before_max));
  return peak * alpha > kF16Max;
}

RangeReport range_report(const AttentionProblem& problem,
                         const PasaParams& params, int threads) {
  const PrecisionPolicy fp64 = policy_for(PolicyId::GoldenFp64);
  const Tensor4D& q = problem.q;
  const size_t s2 = problem.s2;
  const size_t nkv = problem.kv_blocks();
  RangeReport rep;
  rep.per_head.resize(q.batch * q.heads);

  parallel_for(q.batch * q.heads, threads, [&](size_t bh) {
    const size_t b = bh / q.heads;
    const size_t h = bh % q.heads;
    RangeEntry e;
    e.batch = b;
    e.head = h;
    e.k_before_min = e.k_after_min = e.s_before_min = e.s_after_min =
        std::numeric_limits<double>::infinity();
    e.k_before_max = e.k_after_max = e.s_before_max = e.s_after_max =
        -std::numeric_limits<double>::infinity();

    const Matrix2D qm = q.slice(b, h, 0, q.seq);
    const Matrix2D km = problem.k.slice(b, h, 0, problem.k.seq);
    detail::track_fp64_range(km, e.k_before_min, e.k_before_max);

    // Per-block preprocessed keys, concatenated to d x S2.
    Matrix2D kp(q.dim, problem.k.seq, Prec::FP64);
    for (size_t j = 0; j < nkv; ++j) {
      const Matrix2D kpj =
          preprocess_keys(problem.k.slice(b, h, j * s2, s2), params.m, fp64);
      for (size_t r = 0; r < kpj.rows; ++r)
        for (size_t c = 0; c < kpj.cols; ++c)
          kp.at(r, j * s2 + c) = kpj.at(r, c);
    }
    detail::track_fp64_range(kp, e.k_after_min, e.k_after_max);

    Matrix2D s = gemm(qm, km, true, fp64);
    for (double& x : s.data) x /= problem.alpha;
    detail::track_fp64_range(s, e.s_before_min, e.s_before_max);

    const Matrix2D ss = gemm(qm, kp, false, fp64);
    detail::track_fp64_range(ss, e.s_after_min, e.s_after_max);
    rep.per_head[bh] = e;
  });

  RangeEntry& t = rep.total;
  t.k_before_min = t.k_after_min = t.s_before_min = t.s_after_min =
      std::numeric_limits<double>::infinity();
  t.k_before_max = t.k_after_max = t.s_before_max = t.s_after_max =
      -std::numeric_limits<double>::infinity();
  for (const RangeEntry& e : rep.per_head) {
    t.k_before_min = std::min(t.k_before_min, e.k_before_min);
    t.k_before_max = std::max(t.k_before_max, e.k_before_max);
    t.k_after_min = std::min(t.k_after_min, e.k_after_min);
    t.k_after_max = std::max(t.k_after_max, e.k_after_max);
    t.s_before_min = std::min(t.s_before_min, e.s_before_min);
    t.s_before_max = std::max(t.s_before_max, e.s_before_max);
    t.s_after_min = std::min(t.s_after_min, e.s_after_min);
    t.s_after_max = std::max(t.s_after_max, e.s_after_max);
  }
  return rep;
}

std::vector<RunReport> sweep(const std::vector<DistributionSpec>& specs,
                             const SweepOptions& opts) {
  std::vector<RunReport> rows;
  for (const DistributionSpec& spec : specs) {
    RunReport base;
    base.kind = std::string(to_string(spec.kind));
    base.x0 = spec.x0;
    base.am = spec.am;
    base.p = spec.p;
    base.seed = spec.seed;
    base.batch = spec.batch;
    base.heads = spec.heads;
    base.seq = spec.seq;
    base.dim = spec.dim;
    base.beta = opts.beta;

    AttentionProblem problem;
    Tensor4D golden;
    PasaParams params;
    RangeReport ranges;
    bool cell_ok = true;
    std::string cell_error;
    try {
      GeneratedInputs gi = generate(spec);
      problem = make_problem(std::move(gi.q), std::move(gi.k),
                             std::move(gi.v), opts.s1, opts.s2);
      params = PasaParams::make(opts.s2, opts.beta, problem.alpha, Prec::FP16);
      golden = golden_attention(problem, opts.threads);
      if (opts.diagnose) {
        ranges = range_report(problem, params, opts.threads);
      }
    } catch (const std::exception& ex) {
      cell_ok = false;
      cell_error = ex.what();
    }

    for (PolicyId pid : opts.policies) {
      RunReport row = base;
      row.policy = std::string(to_string(pid));
      if (!cell_ok) {
        row.error = cell_error;
        row.rmse = std::numeric_limits<double>::quiet_NaN();
        row.nan_pct = std::numeric_limits<double>::quiet_NaN();
        rows.push_back(std::move(row));
        continue;
      }
      try {
        const PrecisionPolicy policy = policy_for(pid);
        AttnOptions aopts;
        aopts.m0 = opts.m0;
        aopts.threads = opts.threads;
        const auto t0 = std::chrono::steady_clock::now();
        Tensor4D out;
        if (pid == PolicyId::PasaFp16) {
          out = pasa_attention(problem, params, policy, aopts);
        } else {
          out = flash_attention(problem, policy, aopts);
        }
        const auto t1 = std::chrono::steady_clock::now();
        row.wall_s = std::chrono::duration<double>(t1 - t0).count();
        row.nan_pct = nan_stats(out);
        row.rmse = rmse(out, golden);
        if (opts.diagnose) {
          row.has_ranges = true;
          row.s_min_before = ranges.total.s_before_min;
          row.s_max_before = ranges.total.s_before_max;
          row.s_min_after = ranges.total.s_after_min;
          row.s_max_after = ranges.total.s_after_max;
        }
      } catch (const std::exception& ex) {
        row.error = ex.what();
        row.rmse = std::numeric_limits<double>::quiet_NaN();
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::string report_csv(const std::vector<RunReport>& rows) {
  std::string out = kReportCsvHeader;
  out += '\n';
  for (const RunReport& r : rows) {
    out += r.policy;
    out += ',' + r.kind;
    out += ',' + fmt_double(r.x0);
    out += ',' + fmt_double(r.am);
    out += ',';
    if (r.kind == "hybrid") out += fmt_double(r.p);
    out += ',' + std::to_string(r.seed);
    out += ',' + std::to_string(r.batch);
    out += ',' + std::to_string(r.heads);
    out += ',' + std::to_string(r.seq);
    out += ',' + std::to_string(r.dim);
    out += ',' + fmt_double(r.beta);
    out += ',' + fmt_double(r.rmse);
    out += ',' + fmt_double(r.nan_pct);
    for (double v : {r.s_min_before, r.s_max_before, r.s_min_after,
                     r.s_max_after}) {
      out += ',';
      if (r.has_ranges) out += fmt_double(v);
    }
    out += ',' + fmt_double(r.wall_s, "%.4g");
    out += '\n';
  }
  return out;
}

std::string report_json_rows(const std::vector<RunReport>& rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const RunReport& r : rows) {
    nlohmann::json o;
    o["policy"] = r.policy;
    o["kind"] = r.kind;
    o["x0"] = r.x0;
    o["Am"] = r.am;
    if (r.kind == "hybrid") {
      o["p"] = r.p;
    } else {
      o["p"] = nullptr;
    }
    o["seed"] = r.seed;
    o["B"] = r.batch;
    o["N"] = r.heads;
    o["S"] = r.seq;
    o["d"] = r.dim;
    o["beta"] = r.beta;
    o["rmse"] = r.rmse;  // NaN serializes as null
    o["nan_pct"] = r.nan_pct;
    if (r.has_ranges) {
      o["s_min_before"] = r.s_min_before;
      o["s_max_before"] = r.s_max_before;
      o["s_min_after"] = r.s_min_after;
      o["s_max_after"] = r.s_after_helper();
    } else {
      o["s_min_before"] = nullptr;
      o["s_max_before"] = nullptr;
      o["s_min_after"] = nullptr;
      o["s_max_after"] = nullptr;
    }
    o["wall_s"] = r.wall_s;
    if (!r.error.empty()) o["error"] = r.error;
    arr.push_back(std::move(o));
  }
  return arr.dump(2);
}

std::string range_csv(const RangeReport& report) {
  std::string out =
      "batch,head,k_min_before,k_max_before,k_min_after,k_max_after,"
      "s_min_before,s_max_before,s_min_after,s_max_after\n";
  for (const RangeEntry& e : report.per_head) {
    out += std::to_string(e.batch) + ',' + std::to_string(e.head);
    for (double v : {e.k_before_min, e.k_before_max, e.k_after_min,
                     e.k_after_max, e.s_before_min, e.s_before_max,
                     e.s_after_min, e.s_after_max}) {
      out += ',' + fmt_double(v, "%.7g");
    }
    out += '\n';
  }
  return out;
}

}  // namespace pasa
