#include "pgff/bench.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "pgff/error.hpp"
#include "text_format.hpp"

namespace pgff {

double mse(std::span<const double> predictions, std::span<const double> targets) {
  if (predictions.size() != targets.size()) throw InvalidArgument("mse: length mismatch");
  if (predictions.empty()) throw InvalidArgument("mse: empty series");
  double s = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double d = predictions[i] - targets[i];
    s += d * d;
  }
  return s / static_cast<double>(predictions.size());
}

double mae(std::span<const double> errors) {
  if (errors.empty()) throw InvalidArgument("mae: empty series");
  double s = 0.0;
  for (double e : errors) s += std::abs(e);
  return s / static_cast<double>(errors.size());
}

ExperimentResult try_tracking(FeedforwardController& controller, const SetpointProfile& profile,
                              const PlantParams& plant, const FeedbackDesign& feedback,
                              const std::string& controller_id, const std::string& trajectory_id) {
  plant.validate();
  const double ts = profile.sample_time();
  if (std::abs(ts - plant.sample_time) > 1e-15) {
    throw InvalidArgument("run_tracking: profile and plant sample times differ");
  }
  const std::size_t n = profile.size();
  if (n == 0) throw InvalidArgument("run_tracking: empty profile");
  LtiFilter fb = discretize_cfb(ts, feedback);
  controller.reset();
  double stroke = 0.0;
  for (double r : profile.positions) stroke = std::max(stroke, std::abs(r));
  const double limit = 10.0 * std::max(stroke, 1e-3);

  ExperimentResult res;
  res.controller = controller_id.empty() ? controller.kind() : controller_id;
  res.trajectory = trajectory_id;
  auto& tr = res.trace;
  for (auto* v : {&tr.t, &tr.r, &tr.y, &tr.e, &tr.u_ff, &tr.u_fb}) v->resize(n);

  PlantState x;
  for (std::size_t k = 0; k < n; ++k) {
    const double r = profile.positions[k];
    const double e = r - x.position;
    const double u_fb = fb_step(fb, e);
    const double u_ff = controller.step(ReferenceWindow::at(profile.positions, k, ts));
    tr.t[k] = static_cast<double>(k) * ts;
    tr.r[k] = r;
    tr.y[k] = x.position;
    tr.e[k] = e;
    tr.u_ff[k] = u_ff;
    tr.u_fb[k] = u_fb;
    x = step(x, u_fb + u_ff, plant);
    if (!std::isfinite(x.position) || std::abs(x.position) > limit) {
      res.diverged_at = k + 1;
      for (auto* v : {&tr.t, &tr.r, &tr.y, &tr.e, &tr.u_ff, &tr.u_fb}) v->resize(k + 1);
      res.mae = std::numeric_limits<double>::infinity();
      return res;
    }
  }
  res.mae = mae(tr.e);
  return res;
}

ExperimentResult run_tracking(FeedforwardController& controller, const SetpointProfile& profile,
                              const PlantParams& plant, const FeedbackDesign& feedback,
                              const std::string& controller_id, const std::string& trajectory_id) {
  ExperimentResult res = try_tracking(controller, profile, plant, feedback, controller_id, trajectory_id);
  if (res.diverged_at) {
    throw NumericalError("run_tracking: closed loop unstable with controller '" + res.controller +
                         "' at sample " + std::to_string(res.diverged_at));
  }
  return res;
}

void write_trace_csv(std::ostream& os, const ExperimentResult& res) {
  const auto& tr = res.trace;
  os << "k,t,r,y,e,u_ff,u_fb\n";
  for (std::size_t k = 0; k < tr.t.size(); ++k) {
    os << k << ',' << detail::fmt17(tr.t[k]) << ',' << detail::fmt17(tr.r[k]) << ','
       << detail::fmt17(tr.y[k]) << ',' << detail::fmt17(tr.e[k]) << ','
       << detail::fmt17(tr.u_ff[k]) << ',' << detail::fmt17(tr.u_fb[k]) << '\n';
  }
  if (!os) throw IoError("failed writing trace CSV");
}

std::vector<double> replay_on_measured(const FeedforwardController& controller, const Dataset& d) {
  auto c = controller.clone();
  return c->run(d.y, d.sample_time());
}

std::vector<double> one_step_on_measured(const FeedforwardController& controller,
                                         const Dataset& d) {
  std::vector<double> out(d.size());
  for (std::size_t k = 0; k < d.size(); ++k) {
    out[k] = controller.predict(ReferenceWindow::at(d.y, k, d.sample_time()),
                                k > 0 ? d.u[k - 1] : 0.0);
  }
  return out;
}

double partition_mse(const std::vector<double>& prediction, const Dataset& d, Partition part) {
  if (prediction.size() != d.size()) throw InvalidArgument("partition_mse: length mismatch");
  const auto rows = d.split.rows(part);
  if (rows.empty()) throw InvalidArgument("partition_mse: empty partition");
  double s = 0.0;
  for (std::size_t k : rows) {
    const double e = prediction[k] - d.u[k];
    s += e * e;
  }
  return s / static_cast<double>(rows.size());
}

std::string MseRow::label() const {
  if (neurons == 0) return controller;
  return controller + "-n" + std::to_string(neurons) + "-" + activation;
}

namespace {

int controller_rank(const std::string& label) {
  static const char* order[] = {"none", "mass_acc", "friction_comp", "nnarx", "pgnn1", "pgnn2", "ideal"};
  for (int i = 0; i < 7; ++i) {
    const std::string p = order[i];
    if (label == p || label.rfind(p + "-", 0) == 0) return i;
  }
  return 7;
}

bool label_less(const std::string& a, const std::string& b) {
  const int ra = controller_rank(a), rb = controller_rank(b);
  return ra != rb ? ra < rb : a < b;
}

int trajectory_rank(const std::string& t) {
  if (t == "nominal") return 0;
  if (t == "fast") return 1;
  if (t == "slow") return 2;
  return 3;
}

// 1 for the lowest finite value of the column, 2 for the second lowest.
std::vector<int> column_flags(const std::vector<double>& col) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < col.size(); ++i)
    if (std::isfinite(col[i])) idx.push_back(i);
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return col[a] < col[b]; });
  std::vector<int> flags(col.size(), 0);
  if (!idx.empty()) flags[idx[0]] = 1;
  if (idx.size() > 1) flags[idx[1]] = 2;
  return flags;
}

std::string mark(const std::string& s, int flag) {
  if (flag == 1) return "**" + s + "**";
  if (flag == 2) return "*" + s + "*";
  return s;
}

std::string pad(const std::string& s, std::size_t w) {
  return s.size() >= w ? s : s + std::string(w - s.size(), ' ');
}

std::string markdown_table(const std::vector<std::string>& header,
                           const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> w(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) {
    w[c] = std::max<std::size_t>(3, header[c].size());
    for (const auto& r : rows) w[c] = std::max(w[c], r[c].size());
  }
  std::ostringstream os;
  auto line = [&](const std::vector<std::string>& cells) {
    os << '|';
    for (std::size_t c = 0; c < cells.size(); ++c) os << ' ' << pad(cells[c], w[c]) << " |";
    os << '\n';
  };
  line(header);
  os << '|';
  for (std::size_t c = 0; c < header.size(); ++c) os << std::string(w[c] + 2, '-') << '|';
  os << '\n';
  for (const auto& r : rows) line(r);
  return os.str();
}

std::string flag_list(const std::vector<std::string>& names, const std::vector<std::vector<int>>& flags,
                      std::size_t row) {
  std::string out;
  for (std::size_t c = 0; c < names.size(); ++c) {
    const int f = flags[c][row];
    if (f == 0) continue;
    if (!out.empty()) out += ';';
    out += names[c] + (f == 1 ? ":best" : ":second");
  }
  return out;
}

}  // namespace

ReportTables make_report(std::vector<MseRow> mse_rows, const std::vector<ExperimentResult>& results) {
  ReportTables out;

  std::sort(mse_rows.begin(), mse_rows.end(),
            [](const MseRow& a, const MseRow& b) { return label_less(a.label(), b.label()); });
  {
    const std::vector<std::string> names = {"train", "validation", "test", "replay_test"};
    std::vector<std::vector<double>> cols(4);
    for (const auto& r : mse_rows) {
      cols[0].push_back(r.train);
      cols[1].push_back(r.validation);
      cols[2].push_back(r.test);
      cols[3].push_back(r.replay_test);
    }
    std::vector<std::vector<int>> flags;
    for (const auto& c : cols) flags.push_back(column_flags(c));

    std::ostringstream csv;
    csv << "controller,neurons,activation,train_mse,validation_mse,test_mse,replay_test_mse,flags\n";
    std::vector<std::vector<std::string>> md_rows;
    for (std::size_t i = 0; i < mse_rows.size(); ++i) {
      const auto& r = mse_rows[i];
      csv << r.controller << ',' << r.neurons << ',' << r.activation;
      for (const auto& c : cols) csv << ',' << detail::fmt_short(c[i], 6);
      csv << ',' << flag_list(names, flags, i) << '\n';
      std::vector<std::string> md = {r.controller, r.neurons ? std::to_string(r.neurons) : "-",
                                     r.activation.empty() ? "-" : r.activation};
      for (std::size_t c = 0; c < cols.size(); ++c) {
        md.push_back(mark(detail::fmt_short(cols[c][i], 4), flags[c][i]));
      }
      md_rows.push_back(std::move(md));
    }
    out.mse_csv = csv.str();
    out.mse_markdown = markdown_table(
        {"controller", "n", "activation", "train MSE [N^2]", "validation MSE [N^2]",
         "test MSE [N^2]", "replay test MSE [N^2]"},
        md_rows);
  }

  {
    std::vector<std::string> controllers, trajectories;
    std::map<std::pair<std::string, std::string>, double> cell;
    for (const auto& r : results) {
      if (std::find(controllers.begin(), controllers.end(), r.controller) == controllers.end())
        controllers.push_back(r.controller);
      if (std::find(trajectories.begin(), trajectories.end(), r.trajectory) == trajectories.end())
        trajectories.push_back(r.trajectory);
      cell[{r.controller, r.trajectory}] = r.mae;
    }
    std::sort(controllers.begin(), controllers.end(), label_less);
    std::sort(trajectories.begin(), trajectories.end(), [](const auto& a, const auto& b) {
      const int ra = trajectory_rank(a), rb = trajectory_rank(b);
      return ra != rb ? ra < rb : a < b;
    });
    std::vector<std::vector<double>> cols(trajectories.size());
    for (std::size_t c = 0; c < trajectories.size(); ++c) {
      for (const auto& ctl : controllers) {
        auto it = cell.find({ctl, trajectories[c]});
        cols[c].push_back(it == cell.end() ? std::nan("") : it->second);
      }
    }
    std::vector<std::vector<int>> flags;
    for (const auto& c : cols) flags.push_back(column_flags(c));

    std::ostringstream csv;
    csv << "controller";
    for (const auto& t : trajectories) csv << ",mae_" << t << "_m";
    csv << ",flags\n";
    std::vector<std::vector<std::string>> md_rows;
    for (std::size_t i = 0; i < controllers.size(); ++i) {
      csv << controllers[i];
      std::vector<std::string> md = {controllers[i]};
      for (std::size_t c = 0; c < trajectories.size(); ++c) {
        const double v = cols[c][i];
        if (std::isfinite(v)) {
          csv << ',' << detail::fmt_short(v, 6);
          md.push_back(mark(detail::fmt_short(v * 1e6, 4), flags[c][i]));
        } else if (std::isinf(v)) {
          csv << ",inf";
          md.push_back("diverged");
        } else {
          csv << ',';
          md.push_back("-");
        }
      }
      csv << ',' << flag_list(trajectories, flags, i) << '\n';
      md_rows.push_back(std::move(md));
    }
    std::vector<std::string> header = {"controller"};
    for (const auto& t : trajectories) header.push_back(t + " MAE [um]");
    out.mae_csv = csv.str();
    out.mae_markdown = markdown_table(header, md_rows);
  }
  return out;
}

}  // namespace pgff
