#include "hotdeck/estimators.hpp"

#include <algorithm>
#include <cmath>

#include "hotdeck/errors.hpp"

namespace hotdeck {

const char* to_string(Fallback f) noexcept {
  switch (f) {
    case Fallback::none:
      return "none";
    case Fallback::class_marginal:
      return "class_marginal";
    case Fallback::pooled:
      return "pooled";
    case Fallback::uniform:
      return "uniform";
  }
  return "?";
}

Fallback ClassCellEstimates::worst_level() const noexcept {
  Fallback worst = std::max({joint_cc_level, x_cc_level, y_cc_level, x_ac_level, y_ac_level});
  for (auto f : x_given_y_level) worst = std::max(worst, f);
  for (auto f : y_given_x_level) worst = std::max(worst, f);
  return worst;
}

bool CellEstimates::any_fallback() const noexcept {
  return std::any_of(classes.begin(), classes.end(),
                     [](const ClassCellEstimates& c) { return c.worst_level() != Fallback::none; });
}

namespace {

using Vec = std::vector<double>;

// Normalizes `num` by `den`; returns false when the ratio is undefined.
bool normalize(const Vec& num, double den, Vec& out) {
  if (den == 0.0) return false;
  out.resize(num.size());
  for (std::size_t i = 0; i < num.size(); ++i) out[i] = num[i] / den;
  return true;
}

double sum(const Vec& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

struct Pooled {
  Vec rr_joint;  // K*L
  Vec x_resp;    // K, over s_{r.}
  Vec y_resp;    // L, over s_{.r}
};

// Class -> pooled -> uniform for an unconditional distribution.
Fallback ladder(const Vec& class_num, double class_den, const Vec& pooled_num, Vec& out) {
  if (normalize(class_num, class_den, out)) return Fallback::none;
  if (normalize(pooled_num, sum(pooled_num), out)) return Fallback::pooled;
  out.assign(class_num.size(), 1.0 / static_cast<double>(class_num.size()));
  return Fallback::uniform;
}

}  // namespace

CellEstimates cell_estimates(const SurveyDataset& data, std::span<const double> weights,
                             const CellEstimateOptions& options) {
  if (weights.size() != data.size()) throw std::invalid_argument("cell_estimates: weight vector size mismatch");
  const int K = data.K();
  const int L = data.L();
  const auto Ku = static_cast<std::size_t>(K);
  const auto Lu = static_cast<std::size_t>(L);
  CellEstimates out;
  out.K = K;
  out.L = L;
  out.classes.resize(static_cast<std::size_t>(data.num_classes()));
  for (std::size_t g = 0; g < out.classes.size(); ++g) {
    auto& c = out.classes[g];
    c.cls = static_cast<int>(g + 1);
    c.rr_joint.assign(Ku * Lu, 0.0);
    c.rm_x.assign(Ku, 0.0);
    c.mr_y.assign(Lu, 0.0);
  }

  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& u = data[i];
    const double w = weights[i];
    auto& c = out.classes[static_cast<std::size_t>(u.cls - 1)];
    c.totals.all += w;
    if (u.x && u.y) {
      c.totals.rr += w;
      c.rr_joint[static_cast<std::size_t>(*u.x * L + *u.y)] += w;
    } else if (u.x) {
      c.totals.rm += w;
      c.rm_x[static_cast<std::size_t>(*u.x)] += w;
    } else if (u.y) {
      c.totals.mr += w;
      c.mr_y[static_cast<std::size_t>(*u.y)] += w;
    } else {
      c.totals.mm += w;
    }
  }

  Pooled pooled{Vec(Ku * Lu, 0.0), Vec(Ku, 0.0), Vec(Lu, 0.0)};
  for (const auto& c : out.classes) {
    for (std::size_t q = 0; q < Ku * Lu; ++q) pooled.rr_joint[q] += c.rr_joint[q];
    for (std::size_t k = 0; k < Ku; ++k) {
      pooled.x_resp[k] += c.rm_x[k];
      for (std::size_t l = 0; l < Lu; ++l) pooled.x_resp[k] += c.rr_joint[k * Lu + l];
    }
    for (std::size_t l = 0; l < Lu; ++l) {
      pooled.y_resp[l] += c.mr_y[l];
      for (std::size_t k = 0; k < Ku; ++k) pooled.y_resp[l] += c.rr_joint[k * Lu + l];
    }
  }
  Vec pooled_x_rr(Ku, 0.0), pooled_y_rr(Lu, 0.0);
  for (std::size_t k = 0; k < Ku; ++k) {
    for (std::size_t l = 0; l < Lu; ++l) {
      pooled_x_rr[k] += pooled.rr_joint[k * Lu + l];
      pooled_y_rr[l] += pooled.rr_joint[k * Lu + l];
    }
  }

  Vec num, tmp;
  for (auto& c : out.classes) {
    Vec x_rr(Ku, 0.0), y_rr(Lu, 0.0);
    for (std::size_t k = 0; k < Ku; ++k) {
      for (std::size_t l = 0; l < Lu; ++l) {
        x_rr[k] += c.rr_joint[k * Lu + l];
        y_rr[l] += c.rr_joint[k * Lu + l];
      }
    }
    c.joint_cc_level = ladder(c.rr_joint, c.totals.rr, pooled.rr_joint, c.joint_cc);
    c.x_cc_level = ladder(x_rr, c.totals.rr, pooled_x_rr, c.x_cc);
    c.y_cc_level = ladder(y_rr, c.totals.rr, pooled_y_rr, c.y_cc);

    Vec x_resp(Ku), y_resp(Lu);
    for (std::size_t k = 0; k < Ku; ++k) x_resp[k] = x_rr[k] + c.rm_x[k];
    for (std::size_t l = 0; l < Lu; ++l) y_resp[l] = y_rr[l] + c.mr_y[l];
    c.x_ac_level = ladder(x_resp, c.totals.x_respondents(), pooled.x_resp, c.x_ac);
    c.y_ac_level = ladder(y_resp, c.totals.y_respondents(), pooled.y_resp, c.y_ac);

    // p(k | l): class conditional -> class cc marginal -> pooled conditional
    // -> pooled marginal -> uniform.
    c.x_given_y.assign(Lu * Ku, 0.0);
    c.x_given_y_level.assign(Lu, Fallback::none);
    for (std::size_t l = 0; l < Lu; ++l) {
      num.assign(Ku, 0.0);
      for (std::size_t k = 0; k < Ku; ++k) num[k] = c.rr_joint[k * Lu + l];
      Fallback level = Fallback::none;
      if (!normalize(num, y_rr[l], tmp)) {
        if (c.x_cc_level == Fallback::none) {
          tmp = c.x_cc;
          level = Fallback::class_marginal;
        } else {
          for (std::size_t k = 0; k < Ku; ++k) num[k] = pooled.rr_joint[k * Lu + l];
          if (normalize(num, pooled_y_rr[l], tmp) || normalize(pooled_x_rr, sum(pooled_x_rr), tmp)) {
            level = Fallback::pooled;
          } else {
            tmp.assign(Ku, 1.0 / static_cast<double>(K));
            level = Fallback::uniform;
          }
        }
      }
      std::copy(tmp.begin(), tmp.end(), c.x_given_y.begin() + static_cast<std::ptrdiff_t>(l * Ku));
      c.x_given_y_level[l] = level;
    }

    c.y_given_x.assign(Ku * Lu, 0.0);
    c.y_given_x_level.assign(Ku, Fallback::none);
    for (std::size_t k = 0; k < Ku; ++k) {
      num.assign(c.rr_joint.begin() + static_cast<std::ptrdiff_t>(k * Lu),
                 c.rr_joint.begin() + static_cast<std::ptrdiff_t>((k + 1) * Lu));
      Fallback level = Fallback::none;
      if (!normalize(num, x_rr[k], tmp)) {
        if (c.y_cc_level == Fallback::none) {
          tmp = c.y_cc;
          level = Fallback::class_marginal;
        } else {
          num.assign(pooled.rr_joint.begin() + static_cast<std::ptrdiff_t>(k * Lu),
                     pooled.rr_joint.begin() + static_cast<std::ptrdiff_t>((k + 1) * Lu));
          if (normalize(num, pooled_x_rr[k], tmp) || normalize(pooled_y_rr, sum(pooled_y_rr), tmp)) {
            level = Fallback::pooled;
          } else {
            tmp.assign(Lu, 1.0 / static_cast<double>(L));
            level = Fallback::uniform;
          }
        }
      }
      std::copy(tmp.begin(), tmp.end(), c.y_given_x.begin() + static_cast<std::ptrdiff_t>(k * Lu));
      c.y_given_x_level[k] = level;
    }

    const bool has_nonrespondents = c.totals.rm != 0.0 || c.totals.mr != 0.0 || c.totals.mm != 0.0;
    if (!options.allow_uniform && has_nonrespondents && c.worst_level() == Fallback::uniform) {
      throw NoDonorError(c.cls);
    }
  }
  return out;
}

CellEstimates cell_estimates(const SurveyDataset& data, const CellEstimateOptions& options) {
  const auto w = data.weights();
  return cell_estimates(data, w, options);
}

// ---- point estimators ----

ProportionTable ht_proportions(const SurveyDataset& data, std::int64_t N) {
  const int L = data.L();
  std::vector<double> joint(static_cast<std::size_t>(data.K() * L), 0.0);
  for (const auto& u : data.units()) {
    if (!u.x || !u.y) throw DataError("missing value present in unit '" + u.id + "'");
    joint[static_cast<std::size_t>(*u.x * L + *u.y)] += u.weight;
  }
  const double invN = 1.0 / static_cast<double>(N);
  for (double& v : joint) v *= invN;
  return ProportionTable::from_joint(data.K(), L, std::move(joint));
}

ProportionTable imputed_proportions(const SurveyDataset& completed, std::int64_t N) {
  for (const auto& u : completed.units()) {
    if (!u.x || !u.y) throw DataError("residual missing value in unit '" + u.id + "'");
  }
  return ht_proportions(completed, N);
}

namespace {

std::vector<double> pooled_rr_joint(const CellEstimates& cells, double& total) {
  std::vector<double> joint(static_cast<std::size_t>(cells.K * cells.L), 0.0);
  total = 0.0;
  for (const auto& c : cells.classes) {
    total += c.totals.rr;
    for (std::size_t q = 0; q < joint.size(); ++q) joint[q] += c.rr_joint[q];
  }
  return joint;
}

std::vector<double> acc_joint(const CellEstimates& cells, std::int64_t N) {
  std::vector<double> joint(static_cast<std::size_t>(cells.K * cells.L), 0.0);
  for (const auto& c : cells.classes) {
    for (std::size_t q = 0; q < joint.size(); ++q) joint[q] += c.totals.all * c.joint_cc[q];
  }
  const double invN = 1.0 / static_cast<double>(N);
  for (double& v : joint) v *= invN;
  return joint;
}

}  // namespace

ProportionTable cc_estimators(const SurveyDataset& data) {
  const auto cells = cell_estimates(data, {.allow_uniform = true});
  double n_rr = 0.0;
  auto joint = pooled_rr_joint(cells, n_rr);
  if (n_rr == 0.0) throw DataError("complete-case estimators need at least one complete respondent");
  for (double& v : joint) v /= n_rr;
  return ProportionTable::from_joint(cells.K, cells.L, std::move(joint), ProportionTable::Scale::of_Nhat);
}

ProportionTable acc_estimators(const SurveyDataset& data, std::int64_t N) {
  const auto cells = cell_estimates(data, {.allow_uniform = true});
  double n_rr = 0.0;
  pooled_rr_joint(cells, n_rr);
  if (n_rr == 0.0) throw DataError("complete-case estimators need at least one complete respondent");
  return ProportionTable::from_joint(cells.K, cells.L, acc_joint(cells, N));
}

ProportionTable ac_estimators(const SurveyDataset& data) {
  const auto cells = cell_estimates(data, {.allow_uniform = true});
  const auto Ku = static_cast<std::size_t>(cells.K);
  const auto Lu = static_cast<std::size_t>(cells.L);
  double n_rr = 0.0;
  auto joint = pooled_rr_joint(cells, n_rr);
  if (n_rr == 0.0) throw DataError("complete-case estimators need at least one complete respondent");
  for (double& v : joint) v /= n_rr;
  std::vector<double> mx(Ku, 0.0), my(Lu, 0.0);
  double nx = 0.0, ny = 0.0;
  for (const auto& c : cells.classes) {
    nx += c.totals.x_respondents();
    ny += c.totals.y_respondents();
    for (std::size_t k = 0; k < Ku; ++k) {
      mx[k] += c.rm_x[k];
      for (std::size_t l = 0; l < Lu; ++l) mx[k] += c.rr_joint[k * Lu + l];
    }
    for (std::size_t l = 0; l < Lu; ++l) {
      my[l] += c.mr_y[l];
      for (std::size_t k = 0; k < Ku; ++k) my[l] += c.rr_joint[k * Lu + l];
    }
  }
  if (nx == 0.0 || ny == 0.0) throw DataError("available-case estimators need respondents to both items");
  for (double& v : mx) v /= nx;
  for (double& v : my) v /= ny;
  return ProportionTable::with_marginals(cells.K, cells.L, std::move(joint), std::move(mx), std::move(my),
                                         ProportionTable::Scale::of_Nhat);
}

ProportionTable aac_estimators(const SurveyDataset& data, std::int64_t N) {
  const auto cells = cell_estimates(data, {.allow_uniform = true});
  double n_rr = 0.0;
  pooled_rr_joint(cells, n_rr);
  if (n_rr == 0.0) throw DataError("complete-case estimators need at least one complete respondent");
  const auto Ku = static_cast<std::size_t>(cells.K);
  const auto Lu = static_cast<std::size_t>(cells.L);
  std::vector<double> mx(Ku, 0.0), my(Lu, 0.0);
  for (const auto& c : cells.classes) {
    for (std::size_t k = 0; k < Ku; ++k) mx[k] += c.totals.all * c.x_ac[k];
    for (std::size_t l = 0; l < Lu; ++l) my[l] += c.totals.all * c.y_ac[l];
  }
  const double invN = 1.0 / static_cast<double>(N);
  for (double& v : mx) v *= invN;
  for (double& v : my) v *= invN;
  return ProportionTable::with_marginals(cells.K, cells.L, acc_joint(cells, N), std::move(mx), std::move(my));
}

ProportionTable tilde_estimators(const CellEstimates& cells, std::int64_t N) {
  const int K = cells.K;
  const int L = cells.L;
  const auto Ku = static_cast<std::size_t>(K);
  const auto Lu = static_cast<std::size_t>(L);
  std::vector<double> joint(Ku * Lu, 0.0), mx(Ku, 0.0), my(Lu, 0.0);
  for (const auto& c : cells.classes) {
    const auto& t = c.totals;
    for (std::size_t k = 0; k < Ku; ++k) {
      // N_{r.} p_{k.,ac} + N_mr p_{k.,mr} + N_mm p_{k.,cc}
      double x_resp = c.rm_x[k];
      for (std::size_t l = 0; l < Lu; ++l) x_resp += c.rr_joint[k * Lu + l];
      double mr_part = 0.0;
      for (std::size_t l = 0; l < Lu; ++l) mr_part += c.mr_y[l] * c.x_given_y[l * Ku + k];
      mx[k] += x_resp + mr_part + t.mm * c.x_cc[k];
    }
    for (std::size_t l = 0; l < Lu; ++l) {
      double y_resp = c.mr_y[l];
      for (std::size_t k = 0; k < Ku; ++k) y_resp += c.rr_joint[k * Lu + l];
      double rm_part = 0.0;
      for (std::size_t k = 0; k < Ku; ++k) rm_part += c.rm_x[k] * c.y_given_x[k * Lu + l];
      my[l] += y_resp + rm_part + t.mm * c.y_cc[l];
    }
    for (std::size_t k = 0; k < Ku; ++k) {
      for (std::size_t l = 0; l < Lu; ++l) {
        // (N_rr + N_mm) p_{kl,cc} + N_mr p_{kl,mr} + N_rm p_{kl,rm}
        const double cc_part = c.rr_joint[k * Lu + l] + t.mm * c.joint_cc[k * Lu + l];
        joint[k * Lu + l] += cc_part + c.mr_y[l] * c.x_given_y[l * Ku + k] + c.rm_x[k] * c.y_given_x[k * Lu + l];
      }
    }
  }
  const double invN = 1.0 / static_cast<double>(N);
  for (double& v : joint) v *= invN;
  for (double& v : mx) v *= invN;
  for (double& v : my) v *= invN;
  return ProportionTable::with_marginals(K, L, std::move(joint), std::move(mx), std::move(my));
}

ProportionTable tilde_estimators(const SurveyDataset& data, std::span<const double> weights, std::int64_t N,
                                 const CellEstimateOptions& options) {
  return tilde_estimators(cell_estimates(data, weights, options), N);
}

ProportionTable tilde_estimators(const SurveyDataset& data, std::int64_t N) {
  const auto w = data.weights();
  return tilde_estimators(data, w, N);
}

double or_plugin(const ProportionTable& table) {
  if (table.K() != 2 || table.L() != 2) throw DataError("odds ratio needs a 2 x 2 table");
  return odds_ratio(CellProbabilities{table.joint(0, 0), table.joint(0, 1), table.joint(1, 0), table.joint(1, 1)});
}

// ---- bias approximations ----

namespace {

struct ClassQuantities {
  double size;
  double x1, y1;   // p_{1.}^g, p_{.1}^g
  CellProbabilities cells;
};

std::vector<ClassQuantities> quantities(const PopulationSpec& spec) {
  spec.validate();
  std::vector<ClassQuantities> q;
  for (const auto& c : spec.classes) {
    q.push_back({static_cast<double>(c.size), c.p1dot, c.pdot1, cell_probabilities(c.p1dot, c.pdot1, c.p11)});
  }
  return q;
}

// sum_g N_g (phi^g - phibar)(theta^g - theta) / sum_g N_g phi^g
template <class Phi, class Theta>
double covariance_bias(const PopulationSpec& spec, const std::vector<ClassQuantities>& q, Phi phi, Theta theta) {
  double N = 0.0, phi_tot = 0.0, theta_tot = 0.0;
  for (std::size_t g = 0; g < q.size(); ++g) {
    N += q[g].size;
    phi_tot += q[g].size * phi(spec.classes[g]);
    theta_tot += q[g].size * theta(q[g]);
  }
  const double phibar = phi_tot / N;
  const double thetabar = theta_tot / N;
  double num = 0.0;
  for (std::size_t g = 0; g < q.size(); ++g) {
    num += q[g].size * (phi(spec.classes[g]) - phibar) * (theta(q[g]) - thetabar);
  }
  return num / phi_tot;
}

ProportionTable response_bias(const PopulationSpec& spec, bool available_case) {
  const auto q = quantities(spec);
  auto phi_rr = [](const ClassSpec& c) { return c.phi.rr; };
  auto phi_x = [&](const ClassSpec& c) { return available_case ? c.phi.x_respond() : c.phi.rr; };
  auto phi_y = [&](const ClassSpec& c) { return available_case ? c.phi.y_respond() : c.phi.rr; };
  std::vector<double> joint(4), mx(2), my(2);
  for (int k = 0; k < 2; ++k) {
    for (int l = 0; l < 2; ++l) {
      joint[static_cast<std::size_t>(k * 2 + l)] =
          covariance_bias(spec, q, phi_rr, [&](const ClassQuantities& c) { return c.cells.at(k, l); });
    }
    mx[static_cast<std::size_t>(k)] =
        covariance_bias(spec, q, phi_x, [&](const ClassQuantities& c) { return k == 1 ? c.x1 : 1.0 - c.x1; });
    my[static_cast<std::size_t>(k)] =
        covariance_bias(spec, q, phi_y, [&](const ClassQuantities& c) { return k == 1 ? c.y1 : 1.0 - c.y1; });
  }
  return ProportionTable::with_marginals(2, 2, std::move(joint), std::move(mx), std::move(my));
}

}  // namespace

ProportionTable bias_cc(const PopulationSpec& spec) { return response_bias(spec, false); }

ProportionTable bias_ac(const PopulationSpec& spec) { return response_bias(spec, true); }

ProportionTable bias_rhdi(const PopulationSpec& spec) {
  const auto q = quantities(spec);
  double N = 0.0;
  for (const auto& c : q) N += c.size;
  std::vector<double> joint(4, 0.0);
  for (std::size_t g = 0; g < q.size(); ++g) {
    const auto& phi = spec.classes[g].phi;
    for (int k = 0; k < 2; ++k) {
      const double px = k == 1 ? q[g].x1 : 1.0 - q[g].x1;
      for (int l = 0; l < 2; ++l) {
        const double py = l == 1 ? q[g].y1 : 1.0 - q[g].y1;
        joint[static_cast<std::size_t>(k * 2 + l)] -= q[g].size * (phi.rm + phi.mr) * (q[g].cells.at(k, l) - px * py);
      }
    }
  }
  for (double& v : joint) v /= N;
  return ProportionTable::with_marginals(2, 2, std::move(joint), {0.0, 0.0}, {0.0, 0.0});
}

}  // namespace hotdeck
