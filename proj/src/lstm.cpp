#include "rnnlab/lstm.hpp"

#include <cmath>
#include <stdexcept>

namespace rnnlab {

namespace {

constexpr double kOverflowLimit = 1e100;

double apply_act(Activation a, double x) {
  return a == Activation::Tanh ? tanh_act(x) : identity_act(x);
}
double act_prime(Activation a, double xbar) {
  return a == Activation::Tanh ? tanh_prime_from_pre(xbar) : 1.0;
}

void add_inplace(Vector& acc, const Vector& v) {
  for (size_t k = 0; k < acc.size(); ++k) acc[k] += v[k];
}

void add_pointwise(Vector& acc, const Vector& a, const Vector& b) {
  for (size_t k = 0; k < acc.size(); ++k) acc[k] += a[k] * b[k];
}

}  // namespace

void VariantSpec::validate() const {
  if (couple_input_forget && !input_gate)
    throw std::invalid_argument("couple_input_forget requires an input gate");
  if (couple_input_forget && forget_gate)
    throw std::invalid_argument(
        "couple_input_forget derives the forget gate; it must not be independent");
}

VariantSpec VariantSpec::preset(std::string_view name) {
  VariantSpec s;
  if (name == "V") {
  } else if (name == "NIG") {
    s.input_gate = false;
  } else if (name == "NFG") {
    s.forget_gate = false;
  } else if (name == "NOG") {
    s.output_gate = false;
  } else if (name == "NIAF") {
    s.input_activation = Activation::Identity;
  } else if (name == "NOAF") {
    s.output_activation = Activation::Identity;
  } else if (name == "NP") {
    s.peepholes = false;
  } else if (name == "CIFG") {
    s.forget_gate = false;
    s.couple_input_forget = true;
  } else if (name == "FGR") {
    s.full_gate_recurrence = true;
  } else {
    throw std::invalid_argument("unknown variant preset: " + std::string(name));
  }
  s.validate();
  return s;
}

const std::vector<std::string>& VariantSpec::preset_names() {
  static const std::vector<std::string> names = {"V",    "NIG",  "NFG", "NOG", "NIAF",
                                                 "NOAF", "NP",   "CIFG", "FGR"};
  return names;
}

LstmWeights make_weights(const VariantSpec& spec, int n_blocks, int n_inputs) {
  spec.validate();
  if (n_blocks < 1 || n_inputs < 1)
    throw std::invalid_argument("make_weights: sizes must be >= 1");
  LstmWeights w;
  w.n_blocks = n_blocks;
  w.n_inputs = n_inputs;
  w.spec = spec;
  const int N = n_blocks, M = n_inputs;

  w.W_z = Matrix(N, M);
  w.R_z = Matrix(N, N);
  w.b_z = Vector(N, 0.0);
  if (spec.has_input_gate_params()) {
    w.W_i = Matrix(N, M);
    w.R_i = Matrix(N, N);
    w.b_i = Vector(N, 0.0);
    if (spec.has_p_i()) w.p_i = Vector(N, 0.0);
  }
  if (spec.has_forget_gate_params()) {
    w.W_f = Matrix(N, M);
    w.R_f = Matrix(N, N);
    w.b_f = Vector(N, 0.0);
    if (spec.has_p_f()) w.p_f = Vector(N, 0.0);
  }
  if (spec.has_output_gate_params()) {
    w.W_o = Matrix(N, M);
    w.R_o = Matrix(N, N);
    w.b_o = Vector(N, 0.0);
    if (spec.has_p_o()) w.p_o = Vector(N, 0.0);
  }
  const bool gi = spec.has_input_gate_params();
  const bool gf = spec.has_forget_gate_params();
  const bool go = spec.has_output_gate_params();
  if (spec.has_fgr(gi, gi)) w.R_ii = Matrix(N, N);
  if (spec.has_fgr(gf, gi)) w.R_fi = Matrix(N, N);
  if (spec.has_fgr(go, gi)) w.R_oi = Matrix(N, N);
  if (spec.has_fgr(gi, gf)) w.R_if = Matrix(N, N);
  if (spec.has_fgr(gf, gf)) w.R_ff = Matrix(N, N);
  if (spec.has_fgr(go, gf)) w.R_of = Matrix(N, N);
  if (spec.has_fgr(gi, go)) w.R_io = Matrix(N, N);
  if (spec.has_fgr(gf, go)) w.R_fo = Matrix(N, N);
  if (spec.has_fgr(go, go)) w.R_oo = Matrix(N, N);
  return w;
}

LstmWeights init_weights(const VariantSpec& spec, int n_blocks, int n_inputs, Rng& rng,
                         double init_std) {
  LstmWeights w = make_weights(spec, n_blocks, n_inputs);
  for (auto& block : named_blocks(w))
    for (double& v : block.values) v = rng.normal(0.0, init_std);
  return w;
}

long num_params(const VariantSpec& spec, int n_blocks, int n_inputs) {
  LstmWeights w = make_weights(spec, n_blocks, n_inputs);
  long count = 0;
  for (auto& block : named_blocks(w)) count += static_cast<long>(block.values.size());
  return count;
}

std::vector<NamedBlock> named_blocks(LstmWeights& w) {
  std::vector<NamedBlock> out;
  auto mat = [&](const char* name, Matrix& m) {
    if (!m.empty()) out.push_back({name, std::span<double>(m.data), m.rows, m.cols});
  };
  auto vec = [&](const char* name, Vector& v) {
    if (!v.empty()) out.push_back({name, std::span<double>(v), 0, 0});
  };
  mat("W_z", w.W_z);
  mat("W_i", w.W_i);
  mat("W_f", w.W_f);
  mat("W_o", w.W_o);
  mat("R_z", w.R_z);
  mat("R_i", w.R_i);
  mat("R_f", w.R_f);
  mat("R_o", w.R_o);
  vec("p_i", w.p_i);
  vec("p_f", w.p_f);
  vec("p_o", w.p_o);
  vec("b_z", w.b_z);
  vec("b_i", w.b_i);
  vec("b_f", w.b_f);
  vec("b_o", w.b_o);
  mat("R_ii", w.R_ii);
  mat("R_fi", w.R_fi);
  mat("R_oi", w.R_oi);
  mat("R_if", w.R_if);
  mat("R_ff", w.R_ff);
  mat("R_of", w.R_of);
  mat("R_io", w.R_io);
  mat("R_fo", w.R_fo);
  mat("R_oo", w.R_oo);
  return out;
}

ForwardResult forward_sequence(const LstmWeights& w, std::span<const Vector> inputs) {
  const VariantSpec& spec = w.spec;
  const int N = w.n_blocks;
  ForwardResult res;
  ForwardCache& cache = res.cache;

  Vector c_prev(N, 0.0), y_prev(N, 0.0);
  Vector i_prev(N, 0.0), f_prev(N, 0.0), o_prev(N, 0.0);  // for full gate recurrence
  const Vector ones(N, 1.0);

  for (const Vector& x : inputs) {
    if (static_cast<int>(x.size()) != w.n_inputs)
      throw std::invalid_argument("forward_sequence: input width mismatch");

    // block input
    Vector zbar = matvec(w.W_z, x);
    add_inplace(zbar, matvec(w.R_z, y_prev));
    add_inplace(zbar, w.b_z);
    Vector z(N);
    for (int k = 0; k < N; ++k) z[k] = apply_act(spec.input_activation, zbar[k]);

    // input gate
    Vector ibar, i;
    if (spec.has_input_gate_params()) {
      ibar = matvec(w.W_i, x);
      add_inplace(ibar, matvec(w.R_i, y_prev));
      if (!w.p_i.empty()) add_pointwise(ibar, w.p_i, c_prev);
      add_inplace(ibar, w.b_i);
      if (!w.R_ii.empty()) add_inplace(ibar, matvec(w.R_ii, i_prev));
      if (!w.R_fi.empty()) add_inplace(ibar, matvec(w.R_fi, f_prev));
      if (!w.R_oi.empty()) add_inplace(ibar, matvec(w.R_oi, o_prev));
      i.resize(N);
      for (int k = 0; k < N; ++k) i[k] = logistic(ibar[k]);
    } else {
      i = ones;
    }

    // forget gate
    Vector fbar, f;
    if (spec.couple_input_forget) {
      f.resize(N);
      for (int k = 0; k < N; ++k) f[k] = 1.0 - i[k];
    } else if (spec.has_forget_gate_params()) {
      fbar = matvec(w.W_f, x);
      add_inplace(fbar, matvec(w.R_f, y_prev));
      if (!w.p_f.empty()) add_pointwise(fbar, w.p_f, c_prev);
      add_inplace(fbar, w.b_f);
      if (!w.R_if.empty()) add_inplace(fbar, matvec(w.R_if, i_prev));
      if (!w.R_ff.empty()) add_inplace(fbar, matvec(w.R_ff, f_prev));
      if (!w.R_of.empty()) add_inplace(fbar, matvec(w.R_of, o_prev));
      f.resize(N);
      for (int k = 0; k < N; ++k) f[k] = logistic(fbar[k]);
    } else {
      f = ones;
    }

    // cell state
    Vector c(N);
    bool overflow = false;
    for (int k = 0; k < N; ++k) {
      c[k] = z[k] * i[k] + c_prev[k] * f[k];
      if (!std::isfinite(c[k]) || std::abs(c[k]) > kOverflowLimit) overflow = true;
    }
    if (overflow) {
      cache.diverged = true;
      res.diverged = true;
      break;
    }

    // output gate; its peephole reads the current cell state
    Vector obar, o;
    if (spec.has_output_gate_params()) {
      obar = matvec(w.W_o, x);
      add_inplace(obar, matvec(w.R_o, y_prev));
      if (!w.p_o.empty()) add_pointwise(obar, w.p_o, c);
      add_inplace(obar, w.b_o);
      if (!w.R_io.empty()) add_inplace(obar, matvec(w.R_io, i_prev));
      if (!w.R_fo.empty()) add_inplace(obar, matvec(w.R_fo, f_prev));
      if (!w.R_oo.empty()) add_inplace(obar, matvec(w.R_oo, o_prev));
      o.resize(N);
      for (int k = 0; k < N; ++k) o[k] = logistic(obar[k]);
    } else {
      o = ones;
    }

    Vector y(N);
    for (int k = 0; k < N; ++k) y[k] = o[k] * apply_act(spec.output_activation, c[k]);

    cache.x.push_back(x);
    cache.zbar.push_back(std::move(zbar));
    cache.z.push_back(std::move(z));
    cache.ibar.push_back(std::move(ibar));
    cache.i.push_back(i);
    cache.fbar.push_back(std::move(fbar));
    cache.f.push_back(f);
    cache.c.push_back(c);
    cache.obar.push_back(std::move(obar));
    cache.o.push_back(o);
    cache.y.push_back(y);
    res.outputs.push_back(std::move(y));

    c_prev = std::move(c);
    y_prev = res.outputs.back();
    i_prev = std::move(i);
    f_prev = std::move(f);
    o_prev = std::move(o);
  }
  return res;
}

BackwardResult backward_sequence(const LstmWeights& w, const ForwardCache& cache,
                                 std::span<const Vector> top_deltas) {
  const VariantSpec& spec = w.spec;
  const int N = w.n_blocks;
  const int T = static_cast<int>(cache.steps());
  if (static_cast<int>(top_deltas.size()) != T)
    throw std::invalid_argument("backward_sequence: cache/deltas length mismatch");
  for (int t = 0; t < T; ++t)
    if (static_cast<int>(cache.y[t].size()) != N)
      throw std::invalid_argument("backward_sequence: cache/spec mismatch");

  BackwardResult res;
  res.grads = make_weights(spec, w.n_blocks, w.n_inputs);
  res.input_deltas.assign(T, Vector(w.n_inputs, 0.0));
  LstmGradients& g = res.grads;

  const bool gi = spec.has_input_gate_params();
  const bool gf = spec.has_forget_gate_params();
  const bool go = spec.has_output_gate_params();

  const Vector zero(N, 0.0);
  // Pre-activation deltas from step t+1.
  Vector dz_next = zero, di_next = zero, df_next = zero, do_next = zero;
  Vector dc_next = zero;

  for (int t = T - 1; t >= 0; --t) {
    const Vector& c_prev = t > 0 ? cache.c[t - 1] : zero;
    const Vector& y_prev = t > 0 ? cache.y[t - 1] : zero;
    const Vector& i_prev = t > 0 ? cache.i[t - 1] : zero;
    const Vector& f_prev = t > 0 ? cache.f[t - 1] : zero;
    const Vector& o_prev = t > 0 ? cache.o[t - 1] : zero;

    // dE/dy^t including recurrent paths through t+1
    Vector dy = top_deltas[t];
    if (t + 1 < T) {
      add_inplace(dy, matvec_transposed(w.R_z, dz_next));
      if (gi) add_inplace(dy, matvec_transposed(w.R_i, di_next));
      if (gf) add_inplace(dy, matvec_transposed(w.R_f, df_next));
      if (go) add_inplace(dy, matvec_transposed(w.R_o, do_next));
    }

    // output gate
    Vector d_o = zero;
    if (go) {
      Vector do_post(N);
      for (int k = 0; k < N; ++k)
        do_post[k] = dy[k] * apply_act(spec.output_activation, cache.c[t][k]);
      if (t + 1 < T) {
        if (!w.R_oi.empty()) add_inplace(do_post, matvec_transposed(w.R_oi, di_next));
        if (!w.R_of.empty()) add_inplace(do_post, matvec_transposed(w.R_of, df_next));
        if (!w.R_oo.empty()) add_inplace(do_post, matvec_transposed(w.R_oo, do_next));
      }
      d_o.resize(N);
      for (int k = 0; k < N; ++k)
        d_o[k] = do_post[k] * logistic_prime_from_pre(cache.obar[t][k]);
    }

    // cell state
    Vector dc(N);
    for (int k = 0; k < N; ++k)
      dc[k] = dy[k] * cache.o[t][k] * act_prime(spec.output_activation, cache.c[t][k]);
    if (!w.p_o.empty()) add_pointwise(dc, w.p_o, d_o);
    if (t + 1 < T) {
      if (!w.p_i.empty()) add_pointwise(dc, w.p_i, di_next);
      if (!w.p_f.empty()) add_pointwise(dc, w.p_f, df_next);
      add_pointwise(dc, dc_next, cache.f[t + 1]);
    }

    // forget gate
    Vector df = zero;
    if (gf) {
      Vector df_post(N);
      for (int k = 0; k < N; ++k) df_post[k] = dc[k] * c_prev[k];
      if (t + 1 < T) {
        if (!w.R_fi.empty()) add_inplace(df_post, matvec_transposed(w.R_fi, di_next));
        if (!w.R_ff.empty()) add_inplace(df_post, matvec_transposed(w.R_ff, df_next));
        if (!w.R_fo.empty()) add_inplace(df_post, matvec_transposed(w.R_fo, do_next));
      }
      df.resize(N);
      for (int k = 0; k < N; ++k)
        df[k] = df_post[k] * logistic_prime_from_pre(cache.fbar[t][k]);
    }

    // input gate; under coupling it also carries the (negated) forget branch
    Vector di = zero;
    if (gi) {
      Vector di_post(N);
      for (int k = 0; k < N; ++k) {
        di_post[k] = dc[k] * cache.z[t][k];
        if (spec.couple_input_forget) di_post[k] -= dc[k] * c_prev[k];
      }
      if (t + 1 < T) {
        if (!w.R_ii.empty()) add_inplace(di_post, matvec_transposed(w.R_ii, di_next));
        if (!w.R_if.empty()) add_inplace(di_post, matvec_transposed(w.R_if, df_next));
        if (!w.R_io.empty()) add_inplace(di_post, matvec_transposed(w.R_io, do_next));
      }
      di.resize(N);
      for (int k = 0; k < N; ++k)
        di[k] = di_post[k] * logistic_prime_from_pre(cache.ibar[t][k]);
    }

    // block input
    Vector dz(N);
    for (int k = 0; k < N; ++k)
      dz[k] = dc[k] * cache.i[t][k] * act_prime(spec.input_activation, cache.zbar[t][k]);

    // input deltas for a layer below
    Vector& dx = res.input_deltas[t];
    add_inplace(dx, matvec_transposed(w.W_z, dz));
    if (gi) add_inplace(dx, matvec_transposed(w.W_i, di));
    if (gf) add_inplace(dx, matvec_transposed(w.W_f, df));
    if (go) add_inplace(dx, matvec_transposed(w.W_o, d_o));

    // weight gradients
    outer_accumulate(g.W_z, dz, cache.x[t]);
    add_inplace(g.b_z, dz);
    if (t > 0) outer_accumulate(g.R_z, dz, y_prev);
    if (gi) {
      outer_accumulate(g.W_i, di, cache.x[t]);
      add_inplace(g.b_i, di);
      if (t > 0) {
        outer_accumulate(g.R_i, di, y_prev);
        if (!g.p_i.empty()) add_pointwise(g.p_i, c_prev, di);
        if (!g.R_ii.empty()) outer_accumulate(g.R_ii, di, i_prev);
        if (!g.R_fi.empty()) outer_accumulate(g.R_fi, di, f_prev);
        if (!g.R_oi.empty()) outer_accumulate(g.R_oi, di, o_prev);
      }
    }
    if (gf) {
      outer_accumulate(g.W_f, df, cache.x[t]);
      add_inplace(g.b_f, df);
      if (t > 0) {
        outer_accumulate(g.R_f, df, y_prev);
        if (!g.p_f.empty()) add_pointwise(g.p_f, c_prev, df);
        if (!g.R_if.empty()) outer_accumulate(g.R_if, df, i_prev);
        if (!g.R_ff.empty()) outer_accumulate(g.R_ff, df, f_prev);
        if (!g.R_of.empty()) outer_accumulate(g.R_of, df, o_prev);
      }
    }
    if (go) {
      outer_accumulate(g.W_o, d_o, cache.x[t]);
      add_inplace(g.b_o, d_o);
      if (!g.p_o.empty()) add_pointwise(g.p_o, cache.c[t], d_o);
      if (t > 0) {
        outer_accumulate(g.R_o, d_o, y_prev);
        if (!g.R_io.empty()) outer_accumulate(g.R_io, d_o, i_prev);
        if (!g.R_fo.empty()) outer_accumulate(g.R_fo, d_o, f_prev);
        if (!g.R_oo.empty()) outer_accumulate(g.R_oo, d_o, o_prev);
      }
    }

    dz_next = std::move(dz);
    di_next = std::move(di);
    df_next = std::move(df);
    do_next = std::move(d_o);
    dc_next = std::move(dc);
  }
  return res;
}

}  // namespace rnnlab
